//! Closed-form and empirical performance metrics: estimation MSE of the
//! summed statistics, data-estimate MSE, and use-and-then-forget rates.

use serde::Serialize;

use crate::ap_local::diagonal_indices;
use crate::error::{Error, Result};
use crate::linalg::{frob2, hpd_inverse, identity, trace_re, CMat};
use crate::moments::MomentModel;
use crate::scalar::Real;
use num_complex::Complex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ls,
    Lmmse,
}

impl Estimator {
    pub const BOTH: [Estimator; 2] = [Estimator::Ls, Estimator::Lmmse];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::Lmmse => "lmmse",
        }
    }
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Per-entry LMMSE error `(1/c + eta/sigma2)^{-1}`, zero for a degenerate prior.
pub fn lmmse_entry_mse<T: Real>(c: T, eta: T, sigma2: T) -> T {
    let den = eta * c + sigma2;
    if c <= T::zero() || den <= T::zero() {
        T::zero()
    } else {
        c * sigma2 / den
    }
}

fn ls_entry_mse<T: Real>(eta: T, sigma2: T) -> T {
    if eta > T::zero() {
        sigma2 / eta
    } else {
        T::max_value().unwrap_or_else(T::one)
    }
}

/// MSE of the reconstructed Gramian given per-entry prior variances `c1` of
/// the upper-triangle payload. Off-diagonal errors count twice.
pub fn gramian_mse<T: Real>(est: Estimator, k: usize, c1: &[T], eta: T, sigma2: T) -> T {
    match est {
        Estimator::Ls => ls_entry_mse(eta, sigma2) * T::of_usize(k * k),
        Estimator::Lmmse => {
            let e: Vec<T> = c1.iter().map(|&c| lmmse_entry_mse(c, eta, sigma2)).collect();
            let all = e.iter().fold(T::zero(), |s, &v| s + v);
            let diag = diagonal_indices(k).into_iter().fold(T::zero(), |s, q| s + e[q]);
            all + all - diag
        }
    }
}

/// MSE of one slot's matched-filter sum given per-UE variances `c2`.
pub fn mf_mse<T: Real>(est: Estimator, c2: &[T], eta: T, sigma2: T) -> T {
    match est {
        Estimator::Ls => ls_entry_mse(eta, sigma2) * T::of_usize(c2.len()),
        Estimator::Lmmse => c2
            .iter()
            .fold(T::zero(), |s, &c| s + lmmse_entry_mse(c, eta, sigma2)),
    }
}

pub fn mse_gramian_theory<T: Real>(est: Estimator, model: &MomentModel<T>, eta1: T, sigma2: T) -> T {
    gramian_mse(est, model.k, &model.phase1.c1, eta1, sigma2)
}

pub fn mse_mf_theory<T: Real>(est: Estimator, model: &MomentModel<T>, eta2: T, sigma2: T) -> T {
    mf_mse(est, &model.c2, eta2, sigma2)
}

/// Theory against simulation for one estimator and statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MseReport {
    pub theory: f64,
    pub empirical: f64,
    pub sem: f64,
    pub energy: f64,
    pub trials: usize,
    pub nmse_theory_db: f64,
    pub nmse_empirical_db: f64,
}

/// Running mean and variance of per-trial squared errors.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub fn report(&self, theory: f64, energy: f64) -> Result<MseReport> {
        if self.n < 100 {
            return Err(Error::Config(format!("empirical MSE needs >= 100 trials, got {}", self.n)));
        }
        let empirical = self.mean();
        Ok(MseReport {
            theory,
            empirical,
            sem: self.sem(),
            energy,
            trials: self.n,
            nmse_theory_db: to_db(theory / energy),
            nmse_empirical_db: to_db(empirical / energy),
        })
    }
}

/// Sample mean, SEM and NMSE in dB of per-trial squared errors.
pub fn mse_empirical(sq_errors: &[f64], theory: f64, energy: f64) -> Result<MseReport> {
    let mut acc = MeanAccumulator::default();
    sq_errors.iter().for_each(|&e| acc.push(e));
    acc.report(theory, energy)
}

/// Zero-forcing combiner `(eta p)^{-1/2} A^{-1}` applied to the raw phase-2
/// observation.
pub fn zf_combiner<T: Real>(a: &CMat<T>, eta: T, p_ul: T) -> Result<CMat<T>> {
    let inv = hpd_inverse(a)?;
    Ok(inv * Complex::new(T::one() / (eta * p_ul).sqrt(), T::zero()))
}

/// `||I - sqrt(eta p) V A||^2 + sigma2 (eta tr(V A V^H) + ||V||^2)` for one
/// realization.
pub fn data_mse<T: Real>(v: &CMat<T>, a: &CMat<T>, eta: T, p_ul: T, sigma2: T) -> T {
    let k = a.nrows();
    let va = v * a;
    let resid = identity::<T>(k) - &va * Complex::new((eta * p_ul).sqrt(), T::zero());
    let vav = trace_re(&(&va * v.adjoint()));
    frob2(&resid) + sigma2 * (eta * vav + frob2(v))
}

/// ZF data MSE `sigma2/p tr A^{-1} + sigma2/(eta p) tr A^{-2}` from the two traces.
pub fn data_mse_zf<T: Real>(tr_inv: T, tr_inv2: T, eta: T, p_ul: T, sigma2: T) -> T {
    sigma2 / p_ul * tr_inv + sigma2 / (eta * p_ul) * tr_inv2
}

/// ZF data MSE with `eta` expanded through the phase-2 closed form.
pub fn data_mse_zf_power<T: Real>(tr_inv: T, tr_inv2: T, p_ul: T, sigma2: T, a_r: T, b_r: T, p_max: T) -> T {
    sigma2 / p_ul * tr_inv + (a_r * sigma2 / p_max + b_r * sigma2 / (p_max * p_ul)) * tr_inv2
}

/// Large-power limit `sigma2 a_r / P_max tr E[A^{-2}]`.
pub fn data_mse_floor<T: Real>(tr_inv2: T, sigma2: T, a_r: T, p_max: T) -> T {
    sigma2 * a_r / p_max * tr_inv2
}

/// `(tr A^{-1}, tr A^{-2})`.
pub fn inverse_traces<T: Real>(a: &CMat<T>) -> Result<(T, T)> {
    let inv = hpd_inverse(a)?;
    Ok((trace_re(&inv), frob2(&inv)))
}

/// Mergeable sums behind the use-and-then-forget SINR.
///
/// Per realization the combiner rows `v_k^H` (rows of `V`) meet the true
/// Gramian `A`; `noise_scale` multiplies `||v_k||^2` and is `1/eta` for the
/// over-the-air fronthaul or zero for a lossless one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UatfAccumulator {
    pub n: usize,
    gain: Vec<Complex<f64>>,
    power: Vec<f64>,
    noise: Vec<f64>,
    fronthaul: Vec<f64>,
}

impl UatfAccumulator {
    pub fn new(k: usize) -> Self {
        Self {
            n: 0,
            gain: vec![Complex::default(); k],
            power: vec![0.0; k],
            noise: vec![0.0; k],
            fronthaul: vec![0.0; k],
        }
    }

    pub fn push<T: Real>(&mut self, v: &CMat<T>, a: &CMat<T>, noise_scale: T) {
        let va = v * a;
        let vav = &va * v.adjoint();
        let ns = noise_scale.to_f();
        for k in 0..self.gain.len() {
            let g = va[(k, k)];
            self.gain[k] += Complex::new(g.re.to_f(), g.im.to_f());
            self.power[k] += va.row(k).iter().map(|z| z.norm_sqr().to_f()).sum::<f64>();
            self.noise[k] += vav[(k, k)].re.to_f();
            if ns > 0.0 {
                self.fronthaul[k] += ns * v.row(k).iter().map(|z| z.norm_sqr().to_f()).sum::<f64>();
            }
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        for k in 0..self.gain.len() {
            self.gain[k] += other.gain[k];
            self.power[k] += other.power[k];
            self.noise[k] += other.noise[k];
            self.fronthaul[k] += other.fronthaul[k];
        }
    }

    /// Per-UE SINR at `rho = p_ul / sigma2`.
    pub fn sinr(&self, rho: f64) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        (0..self.gain.len())
            .map(|k| {
                let g2 = (self.gain[k] / n).norm_sqr();
                let den = rho * (self.power[k] / n - g2) + self.noise[k] / n + self.fronthaul[k] / n;
                if den > 0.0 {
                    rho * g2 / den
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    pub fn rates(&self, rho: f64, prefactor: f64) -> Vec<f64> {
        self.sinr(rho)
            .into_iter()
            .map(|s| prefactor * (1.0 + s).log2())
            .collect()
    }
}

/// Ergodic average of the per-realization rate with perfect statistics at
/// the CPU; interference excludes the user's own term.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiAccumulator {
    pub n: usize,
    sum: Vec<f64>,
}

impl SiAccumulator {
    pub fn new(k: usize) -> Self {
        Self { n: 0, sum: vec![0.0; k] }
    }

    pub fn push<T: Real>(&mut self, v: &CMat<T>, a: &CMat<T>, rho: f64) {
        let va = v * a;
        let vav = &va * v.adjoint();
        for k in 0..self.sum.len() {
            let sig = va[(k, k)].norm_sqr().to_f();
            let intf: f64 = va
                .row(k)
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, z)| z.norm_sqr().to_f())
                .sum();
            let den = rho * intf + vav[(k, k)].re.to_f();
            self.sum[k] += (1.0 + rho * sig / den).log2();
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
    }

    pub fn rates(&self, prefactor: f64) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.sum.iter().map(|s| prefactor * s / n).collect()
    }
}

/// Pre-log factor `1 - tau_p / tau_c`.
pub fn prelog(tau_p: usize, tau_c: usize) -> f64 {
    (1.0 - tau_p as f64 / tau_c as f64).max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub prefactor: f64,
    pub trials: usize,
    pub uatf: Vec<f64>,
    pub wired_uatf: Vec<f64>,
    pub wired_si: Vec<f64>,
}

impl RateReport {
    pub fn from_accumulators(
        ota: &UatfAccumulator,
        wired: &UatfAccumulator,
        si: &SiAccumulator,
        rho: f64,
        prefactor: f64,
    ) -> Self {
        Self {
            prefactor,
            trials: ota.n,
            uatf: ota.rates(rho, prefactor),
            wired_uatf: wired.rates(rho, prefactor),
            wired_si: si.rates(prefactor),
        }
    }
}
