//! Power reports, the common scaling factor fed back by the CPU, and the
//! fronthaul SNRs it yields.

use crate::ap_local::Phase;
use crate::error::{Error, Result};
use crate::linalg::{frob2, CMat};
use crate::moments::MomentModel;
use crate::scalar::Real;

/// Per-phase power reports, violators and scaling factors.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerPlan<T: Real> {
    /// `reports[phase][l]`, average per-channel-use power at unit scaling.
    pub reports: [Vec<T>; 2],
    /// APs whose report exceeds `P_max` at unit scaling.
    pub violators: [Vec<usize>; 2],
    pub eta: [T; 2],
}

impl<T: Real> PowerPlan<T> {
    /// Moment-based plan: every AP reports its average power and the CPU
    /// scales all of them by the same factor.
    pub fn from_model(model: &MomentModel<T>, p_max: T) -> Result<Self> {
        let reports = Phase::BOTH.map(|ph| power_report(model, ph));
        let eta = [compute_eta(&reports[0], p_max)?, compute_eta(&reports[1], p_max)?];
        let violators = [violators(&reports[0], p_max), violators(&reports[1], p_max)];
        Ok(Self {
            reports,
            violators,
            eta,
        })
    }

    pub fn eta(&self, phase: Phase) -> T {
        self.eta[phase.index()]
    }

    /// Largest scaled report; never exceeds `P_max`.
    pub fn peak_power(&self, phase: Phase) -> T {
        let i = phase.index();
        self.reports[i].iter().fold(T::zero(), |m, &p| m.max(p)) * self.eta[i]
    }
}

/// Average per-channel-use transmit power of every AP at unit scaling.
pub fn power_report<T: Real>(model: &MomentModel<T>, phase: Phase) -> Vec<T> {
    (0..model.l()).map(|l| model.unit_power(phase, l)).collect()
}

pub fn violators<T: Real>(reports: &[T], p_max: T) -> Vec<usize> {
    reports
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > p_max)
        .map(|(l, _)| l)
        .collect()
}

/// `P_max / max_l P_l`.
///
/// The maximum is taken over all APs, not only violators, so the budget is
/// met with equality by the worst AP whether it is a violator or not.
pub fn compute_eta<T: Real>(reports: &[T], p_max: T) -> Result<T> {
    if !(p_max > T::zero()) {
        return Err(Error::Config("P_max must be positive".into()));
    }
    if reports.iter().any(|&p| !(p >= T::zero()) || !p.is_finite()) {
        return Err(Error::Domain("power reports must be finite and >= 0".into()));
    }
    let top = reports.iter().fold(T::zero(), |m, &p| m.max(p));
    if top <= T::zero() {
        return Err(Error::ZeroPower);
    }
    Ok(p_max / top)
}

/// Phase-2 scaling `P_max / (p_ul a_r + b_r)` with `r` the worst AP.
pub fn eta2_closed_form<T: Real>(a: &[T], b: &[T], p_ul: T, p_max: T) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Dimension("a and b must have equal length".into()));
    }
    if a.iter().chain(b).any(|&v| !(v >= T::zero())) {
        return Err(Error::Domain("power coefficients must be >= 0".into()));
    }
    let worst = a
        .iter()
        .zip(b)
        .map(|(&a, &b)| p_ul * a + b)
        .fold(T::zero(), |m, v| m.max(v));
    if worst <= T::zero() {
        return Err(Error::ZeroPower);
    }
    Ok(p_max / worst)
}

/// Receive SNRs `eta1 E||A||^2 / (K^2 sigma2)` and `eta2 E||t||^2 / (K sigma2)`.
pub fn fronthaul_snrs<T: Real>(model: &MomentModel<T>, eta1: T, eta2: T, sigma2: T) -> (T, T) {
    let k = T::of_usize(model.k);
    (
        eta1 * model.gramian_energy() / (k * k * sigma2),
        eta2 * model.mf_energy() / (k * sigma2),
    )
}

/// Scaling from the instantaneous power of this realization's precoded
/// payloads; used when `E[W^H W]` does not exist (`N == M`).
pub fn instantaneous_eta<T: Real>(precoded: &[CMat<T>], p_max: T) -> Result<T> {
    let reports: Vec<T> = precoded
        .iter()
        .map(|wx| frob2(wx) / T::of_usize(wx.ncols().max(1)))
        .collect();
    compute_eta(&reports, p_max)
}
