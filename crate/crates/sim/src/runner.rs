//! Deterministic parallel trial execution.
//!
//! Trials are pure functions of their index; results come back in index
//! order and are reduced sequentially, so output bytes do not depend on the
//! number of workers.

use std::ops::Range;

use anyhow::{anyhow, Result};
use rayon::prelude::*;

use crate::table::Table;

/// Runs `f` inside a pool of `workers` threads (`None` for the default).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| anyhow!("thread pool: {e}"))?;
    Ok(pool.install(f))
}

/// Evaluates `f` on every index of `range`, in order.
pub fn par_map<T: Send>(range: Range<u64>, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    range.into_par_iter().map(f).collect()
}

/// Trials per scheduling batch in SER sweeps; early stopping is decided only
/// at batch boundaries, which keeps it independent of scheduling.
pub const SER_BATCH: u64 = 64;

/// Error and symbol counts of one SER series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SerCount {
    pub errors: u64,
    pub symbols: u64,
}

impl SerCount {
    pub fn ser(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.errors as f64 / self.symbols as f64
        }
    }

    /// Binomial standard error.
    pub fn sem(&self) -> f64 {
        if self.symbols == 0 {
            return 0.0;
        }
        let p = self.ser();
        (p * (1.0 - p) / self.symbols as f64).sqrt()
    }
}

/// Runs SER series at one grid point. `trial(index, active)` returns the
/// symbol errors of every series; inactive series may report zero. A series
/// stops once it has `target` errors; the point stops when all have, or
/// after `max_trials`.
pub fn ser_point(
    series: usize,
    symbols_per_trial: u64,
    max_trials: u64,
    target: u64,
    trial: impl Fn(u64, &[bool]) -> Result<Vec<u64>> + Sync + Send,
) -> Result<Vec<SerCount>> {
    let mut counts = vec![SerCount::default(); series];
    let mut active = vec![true; series];
    let mut next = 0;
    while next < max_trials && active.iter().any(|&a| a) {
        let end = (next + SER_BATCH).min(max_trials);
        let flags = active.clone();
        let results = par_map(next..end, |i| trial(i, &flags))?;
        for errs in results {
            for (j, c) in counts.iter_mut().enumerate() {
                if flags[j] {
                    c.errors += errs[j];
                    c.symbols += symbols_per_trial;
                }
            }
        }
        for (a, c) in active.iter_mut().zip(&counts) {
            *a = c.errors < target;
        }
        next = end;
    }
    Ok(counts)
}

/// SER table header: axis, then `<name>_ser, <name>_sem, <name>_symbols`.
pub fn ser_header(axis: &str, names: &[String]) -> Vec<String> {
    let mut h = vec![axis.to_string()];
    for n in names {
        h.push(format!("{n}_ser"));
        h.push(format!("{n}_sem"));
        h.push(format!("{n}_symbols"));
    }
    h
}

pub fn ser_row(axis: f64, counts: &[SerCount]) -> Vec<f64> {
    let mut row = vec![axis];
    for c in counts {
        row.extend([c.ser(), c.sem(), c.symbols as f64]);
    }
    row
}

/// Collects per-point SER counts into a table.
pub fn ser_table(axis: &str, names: &[String], grid: &[f64], counts: &[Vec<SerCount>]) -> Result<Table> {
    let mut t = Table::new(ser_header(axis, names));
    for (&x, c) in grid.iter().zip(counts) {
        t.push(ser_row(x, c))?;
    }
    t.sort_by_axis();
    Ok(t)
}
