//! Deployment geometry, large-scale fading and experiment configuration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{checked_psd_sqrt, cr, trace_product_re, trace_re, CMat};
use crate::rng::{domain, stream};
use crate::scalar::Real;

/// How access points are placed in the square.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApLayout {
    #[default]
    Uniform,
    Grid,
}

/// Pilot assignment used when estimating the access channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PilotReuse {
    /// Mutually orthogonal pilots, one per UE (needs `tau_p >= K`).
    #[default]
    Orthogonal,
    /// All UEs share one pilot sequence.
    Shared,
}

/// How `E[W_l^H W_l]` is obtained for moment-based power planning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EwhwMode {
    #[default]
    Mc,
    /// Inverse-Wishart mean `I / (G_beta (N - M))`; exact for i.i.d. fronthaul.
    Analytic,
}

/// Every dimensional, power and geometry parameter of one experiment.
///
/// Powers are linear (W), lengths in metres, pathloss constants in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub p_ul: f64,
    #[serde(rename = "P_max")]
    pub p_max: f64,
    pub sigma2: f64,
    pub tau_p: usize,
    pub tau_u: usize,
    pub tau_c: usize,
    pub area_side: f64,
    pub cpu_height: f64,
    pub ap_height: f64,
    pub ue_height: f64,
    pub min_distance: f64,
    pub pathloss_a: f64,
    pub pathloss_b: f64,
    pub ap_layout: ApLayout,
    pub pilot_reuse: PilotReuse,
    /// Access pilot power; `None` reuses `p_ul`.
    pub p_pilot: Option<f64>,
    /// Fronthaul pilot length and power (imperfect fronthaul CSI only).
    pub tau_g: usize,
    pub p_pilot_fronthaul: Option<f64>,
    pub ewhw_mode: EwhwMode,
    pub ewhw_trials: usize,
    pub seed: u64,
    pub trials: usize,
    /// Number of independent geometry drops averaged over.
    pub drops: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            l: 16,
            k: 8,
            n: 5,
            m: 4,
            p_ul: 1e-6,
            p_max: 5.0,
            sigma2: 1e-16,
            tau_p: 8,
            tau_u: 10,
            tau_c: 200,
            area_side: 200.0,
            cpu_height: 5.0,
            ap_height: 10.0,
            ue_height: 1.5,
            min_distance: 1.0,
            pathloss_a: -30.5,
            pathloss_b: -36.7,
            ap_layout: ApLayout::Uniform,
            pilot_reuse: PilotReuse::Orthogonal,
            p_pilot: None,
            tau_g: 4,
            p_pilot_fronthaul: None,
            ewhw_mode: EwhwMode::Mc,
            ewhw_trials: 10_000,
            seed: 1,
            trials: 10_000,
            drops: 1,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("L", self.l), ("K", self.k), ("N", self.n), ("M", self.m)] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.n < self.m {
            return Err(Error::Config(format!(
                "N >= M is required for zero-forcing, got N={} M={}",
                self.n, self.m
            )));
        }
        positive("p_ul", self.p_ul)?;
        positive("P_max", self.p_max)?;
        positive("sigma2", self.sigma2)?;
        positive("area_side", self.area_side)?;
        positive("min_distance", self.min_distance)?;
        if let Some(p) = self.p_pilot {
            positive("p_pilot", p)?;
        }
        if let Some(p) = self.p_pilot_fronthaul {
            positive("p_pilot_fronthaul", p)?;
        }
        for (name, v) in [
            ("cpu_height", self.cpu_height),
            ("ap_height", self.ap_height),
            ("ue_height", self.ue_height),
            ("pathloss_a", self.pathloss_a),
            ("pathloss_b", self.pathloss_b),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if self.tau_u == 0 || self.tau_c == 0 {
            return Err(Error::Config("tau_u and tau_c must be positive".into()));
        }
        if self.tau_p > self.tau_c {
            return Err(Error::Config(format!(
                "tau_p ({}) exceeds tau_c ({})",
                self.tau_p, self.tau_c
            )));
        }
        if self.tau_u > self.tau_c - self.tau_p {
            return Err(Error::Config(format!(
                "tau_u ({}) exceeds tau_c - tau_p ({})",
                self.tau_u,
                self.tau_c - self.tau_p
            )));
        }
        if self.trials == 0 || self.drops == 0 {
            return Err(Error::Config("trials and drops must be positive".into()));
        }
        if self.ewhw_mode == EwhwMode::Mc && self.ewhw_trials < 1000 {
            return Err(Error::Config("ewhw_trials must be at least 1000".into()));
        }
        Ok(())
    }

    pub fn pilot_power(&self) -> f64 {
        self.p_pilot.unwrap_or(self.p_ul)
    }

    pub fn fronthaul_pilot_power(&self) -> f64 {
        self.p_pilot_fronthaul.unwrap_or(self.p_max)
    }

    /// Uplink SNR `p_ul / sigma2`.
    pub fn rho_ul(&self) -> f64 {
        self.p_ul / self.sigma2
    }

    /// Phase-1 payload length `K(K+1)/2`.
    pub fn n_s1(&self) -> usize {
        self.k * (self.k + 1) / 2
    }

    /// Phase-2 payload length `tau_u K`.
    pub fn n_s2(&self) -> usize {
        self.tau_u * self.k
    }
}

/// Large-scale gain in dB at distance `d` metres: `a + b log10(d)`.
pub fn pathloss_db(d: f64, a: f64, b: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok(a + b * d.log10())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Node positions of one drop, `[x, y, z]` in metres.
#[derive(Clone, Debug, PartialEq)]
pub struct Deployment {
    pub ue: Vec<[f64; 3]>,
    pub ap: Vec<[f64; 3]>,
    pub cpu: [f64; 3],
}

/// Draws UE and AP positions for geometry drop `drop`.
pub fn deploy(cfg: &ScenarioConfig, drop: u64) -> Deployment {
    let mut rng = stream(cfg.seed, domain::GEOMETRY, drop);
    let side = cfg.area_side;
    let ue = (0..cfg.k)
        .map(|_| {
            [
                rng.random::<f64>() * side,
                rng.random::<f64>() * side,
                cfg.ue_height,
            ]
        })
        .collect();
    let ap = match cfg.ap_layout {
        ApLayout::Uniform => (0..cfg.l)
            .map(|_| {
                [
                    rng.random::<f64>() * side,
                    rng.random::<f64>() * side,
                    cfg.ap_height,
                ]
            })
            .collect(),
        ApLayout::Grid => {
            let cols = (cfg.l as f64).sqrt().ceil() as usize;
            let rows = cfg.l.div_ceil(cols);
            (0..cfg.l)
                .map(|i| {
                    let (r, c) = (i / cols, i % cols);
                    [
                        (c as f64 + 0.5) * side / cols as f64,
                        (r as f64 + 0.5) * side / rows as f64,
                        cfg.ap_height,
                    ]
                })
                .collect()
        }
    };
    Deployment {
        ue,
        ap,
        cpu: [side / 2.0, side / 2.0, cfg.cpu_height],
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Per-(UE, AP) spatial covariances plus AP-to-CPU large-scale gains.
#[derive(Clone, Debug)]
pub struct CovarianceSet<T: Real> {
    n: usize,
    r: Vec<Vec<CMat<T>>>,
    r_sqrt: Vec<Vec<CMat<T>>>,
    beta: Vec<Vec<T>>,
    g_beta: Vec<T>,
    scaled_identity: bool,
}

impl<T: Real> CovarianceSet<T> {
    /// Uncorrelated fading, `R_kl = beta[k][l] I_N`.
    pub fn from_gains(n: usize, beta: Vec<Vec<T>>, g_beta: Vec<T>) -> Result<Self> {
        let l = g_beta.len();
        check_gains(&beta, &g_beta)?;
        if n == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        let r = beta
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&b| CMat::from_diagonal_element(n, n, cr(b)))
                    .collect()
            })
            .collect();
        let r_sqrt = beta
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&b| CMat::from_diagonal_element(n, n, cr(b.sqrt())))
                    .collect()
            })
            .collect::<Vec<Vec<_>>>();
        debug_assert!(beta.iter().all(|row| row.len() == l));
        Ok(Self {
            n,
            r,
            r_sqrt,
            beta,
            g_beta,
            scaled_identity: true,
        })
    }

    /// Loader hook for arbitrary Hermitian PSD covariances, indexed `[k][l]`.
    pub fn from_matrices(r: Vec<Vec<CMat<T>>>, g_beta: Vec<T>) -> Result<Self> {
        let n = r
            .first()
            .and_then(|row| row.first())
            .map(|m| m.nrows())
            .ok_or_else(|| Error::Config("empty covariance set".into()))?;
        let mut beta = Vec::with_capacity(r.len());
        let mut r_sqrt = Vec::with_capacity(r.len());
        for row in &r {
            if row.len() != g_beta.len() {
                return Err(Error::Dimension(format!(
                    "covariance row has {} APs, G_beta has {}",
                    row.len(),
                    g_beta.len()
                )));
            }
            let mut brow = Vec::with_capacity(row.len());
            let mut srow = Vec::with_capacity(row.len());
            for m in row {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::Dimension(format!(
                        "covariance must be {n}x{n}, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                srow.push(checked_psd_sqrt(m)?);
                brow.push(trace_re(m) / T::of_usize(n));
            }
            beta.push(brow);
            r_sqrt.push(srow);
        }
        check_gains(&beta, &g_beta)?;
        Ok(Self {
            n,
            r,
            r_sqrt,
            beta,
            g_beta,
            scaled_identity: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn l(&self) -> usize {
        self.g_beta.len()
    }

    pub fn r(&self, k: usize, l: usize) -> &CMat<T> {
        &self.r[k][l]
    }

    pub fn r_sqrt(&self, k: usize, l: usize) -> &CMat<T> {
        &self.r_sqrt[k][l]
    }

    pub fn beta(&self, k: usize, l: usize) -> T {
        self.beta[k][l]
    }

    pub fn g_beta(&self, l: usize) -> T {
        self.g_beta[l]
    }

    pub fn g_betas(&self) -> &[T] {
        &self.g_beta
    }

    /// True when every `R_kl` is a multiple of the identity.
    pub fn is_scaled_identity(&self) -> bool {
        self.scaled_identity
    }

    /// `tr(R_kl)`.
    pub fn trace(&self, k: usize, l: usize) -> T {
        if self.scaled_identity {
            T::of_usize(self.n) * self.beta[k][l]
        } else {
            trace_re(&self.r[k][l])
        }
    }

    /// `tr(R_jl R_j'l)`.
    pub fn trace_product(&self, j: usize, j2: usize, l: usize) -> T {
        if self.scaled_identity {
            T::of_usize(self.n) * self.beta[j][l] * self.beta[j2][l]
        } else {
            trace_product_re(&self.r[j][l], &self.r[j2][l])
        }
    }

    /// Same set with every access and fronthaul gain multiplied by `c`.
    pub fn scaled(&self, c: T) -> Self {
        let scale = |m: &CMat<T>, s: T| m.map(|z| z * s);
        Self {
            n: self.n,
            r: self
                .r
                .iter()
                .map(|row| row.iter().map(|m| scale(m, c)).collect())
                .collect(),
            r_sqrt: self
                .r_sqrt
                .iter()
                .map(|row| row.iter().map(|m| scale(m, c.sqrt())).collect())
                .collect(),
            beta: self
                .beta
                .iter()
                .map(|row| row.iter().map(|&b| b * c).collect())
                .collect(),
            g_beta: self.g_beta.iter().map(|&g| g * c).collect(),
            scaled_identity: self.scaled_identity,
        }
    }

    /// Keeps the first `l` APs.
    pub fn truncated(&self, l: usize) -> Self {
        let l = l.min(self.l());
        Self {
            n: self.n,
            r: self.r.iter().map(|row| row[..l].to_vec()).collect(),
            r_sqrt: self.r_sqrt.iter().map(|row| row[..l].to_vec()).collect(),
            beta: self.beta.iter().map(|row| row[..l].to_vec()).collect(),
            g_beta: self.g_beta[..l].to_vec(),
            scaled_identity: self.scaled_identity,
        }
    }
}

fn check_gains<T: Real>(beta: &[Vec<T>], g_beta: &[T]) -> Result<()> {
    if beta.is_empty() || g_beta.is_empty() {
        return Err(Error::Config("need at least one UE and one AP".into()));
    }
    for row in beta {
        if row.len() != g_beta.len() {
            return Err(Error::Dimension(format!(
                "beta row has {} APs, G_beta has {}",
                row.len(),
                g_beta.len()
            )));
        }
        if row.iter().any(|&b| !(b >= T::zero()) || !b.is_finite()) {
            return Err(Error::Config("large-scale gains must be finite and >= 0".into()));
        }
    }
    if g_beta.iter().any(|&g| !(g >= T::zero()) || !g.is_finite()) {
        return Err(Error::Config("fronthaul gains must be finite and >= 0".into()));
    }
    Ok(())
}

/// Covariances for fixed node positions.
pub fn covariances_for<T: Real>(cfg: &ScenarioConfig, dep: &Deployment) -> Result<CovarianceSet<T>> {
    let gain = |d: f64| -> Result<T> {
        let d = d.max(cfg.min_distance);
        Ok(T::of(db_to_linear(pathloss_db(d, cfg.pathloss_a, cfg.pathloss_b)?)))
    };
    let beta = dep
        .ue
        .iter()
        .map(|u| dep.ap.iter().map(|a| gain(distance(u, a))).collect())
        .collect::<Result<Vec<Vec<T>>>>()?;
    let g_beta = dep
        .ap
        .iter()
        .map(|a| gain(distance(a, &dep.cpu)))
        .collect::<Result<Vec<T>>>()?;
    CovarianceSet::from_gains(cfg.n, beta, g_beta)
}

/// Covariances for geometry drop `drop` of `cfg`.
pub fn generate_scenario_drop<T: Real>(cfg: &ScenarioConfig, drop: u64) -> Result<CovarianceSet<T>> {
    cfg.validate()?;
    covariances_for(cfg, &deploy(cfg, drop))
}

/// Covariances for the first geometry drop.
pub fn generate_scenario<T: Real>(cfg: &ScenarioConfig) -> Result<CovarianceSet<T>> {
    generate_scenario_drop(cfg, 0)
}
