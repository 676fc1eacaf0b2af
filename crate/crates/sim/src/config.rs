//! Flat TOML configuration layered as: experiment preset, config file,
//! command-line `key=value` overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cfota_core::scenario::ScenarioConfig;
use toml::{Table, Value};

/// Keys consumed by the harness itself; everything else is a scenario field.
const HARNESS_KEYS: [&str; 3] = ["workers", "grid", "target_errors"];

/// Symbol errors collected before an SER grid point stops refining.
pub const DEFAULT_TARGET_ERRORS: u64 = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct HarnessOptions {
    /// Worker threads; `None` lets rayon decide.
    pub workers: Option<usize>,
    /// Replaces the experiment's sweep grid.
    pub grid: Option<Vec<f64>>,
    pub target_errors: u64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            workers: None,
            grid: None,
            target_errors: DEFAULT_TARGET_ERRORS,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub harness: HarnessOptions,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<Table>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// Parses `key=value`; the value is read as a TOML literal and falls back to
/// a bare string (`ewhw_mode=analytic`).
pub fn parse_override(spec: &str) -> Result<(String, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{spec}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        bail!("override `{spec}` has an empty key");
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

/// Merges the layers, splits off harness keys and validates the result.
pub fn resolve(preset: &Table, file: Option<&Table>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = preset.clone();
    if let Some(f) = file {
        for (k, v) in f {
            table.insert(k.clone(), v.clone());
        }
    }
    for spec in overrides {
        let (k, v) = parse_override(spec)?;
        table.insert(k, v);
    }
    let mut harness = HarnessOptions::default();
    for key in HARNESS_KEYS {
        let Some(v) = table.remove(key) else { continue };
        match key {
            "workers" => {
                let w = v
                    .as_integer()
                    .filter(|&w| w > 0)
                    .ok_or_else(|| anyhow!("workers must be a positive integer"))?;
                harness.workers = Some(w as usize);
            }
            "target_errors" => {
                let e = v
                    .as_integer()
                    .filter(|&e| e > 0)
                    .ok_or_else(|| anyhow!("target_errors must be a positive integer"))?;
                harness.target_errors = e as u64;
            }
            "grid" => harness.grid = Some(parse_grid(&v)?),
            _ => unreachable!(),
        }
    }
    let scenario: ScenarioConfig = table.try_into().context("invalid scenario configuration")?;
    scenario.validate()?;
    Ok(RunConfig { scenario, harness })
}

fn parse_grid(v: &Value) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| anyhow!("grid must be an array"))?;
    let grid = arr
        .iter()
        .map(|x| {
            x.as_float()
                .or_else(|| x.as_integer().map(|i| i as f64))
                .ok_or_else(|| anyhow!("grid entries must be numbers"))
        })
        .collect::<Result<Vec<f64>>>()?;
    check_grid(&grid)?;
    Ok(grid)
}

/// Grids must be nonempty, finite and strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        bail!("grid must not be empty");
    }
    if grid.iter().any(|x| !x.is_finite()) {
        bail!("grid entries must be finite");
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        bail!("grid must be strictly increasing");
    }
    Ok(())
}
