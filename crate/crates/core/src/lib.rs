//! Over-the-air aggregation of uplink sufficient statistics in cell-free
//! massive MIMO.
//!
//! Access points compute their local Gramian `A_l = H_l^H H_l` and
//! matched-filter output `t_l = H_l^H y_l`, zero-force the fronthaul channel
//! and transmit simultaneously so the CPU receives the network-wide sums in a
//! single superposition. The crate covers the full chain: geometry and
//! covariances, channel sampling and estimation, payload layout, moment-based
//! power control, CPU-side estimation, detection, closed-form and Monte Carlo
//! performance metrics, and an orthogonal digital fronthaul baseline.
//!
//! Numerical routines are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix the scalar for everyday use.

// `!(x > 0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ap_local;
pub mod channel;
pub mod detect;
pub mod error;
pub mod fronthaul;
pub mod linalg;
pub mod moments;
pub mod ods;
pub mod perf;
pub mod power;
pub mod rng;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;

pub type CMat64 = linalg::CMat<f64>;
pub type CVec64 = linalg::CVec<f64>;
pub type CMat32 = linalg::CMat<f32>;
pub type CVec32 = linalg::CVec<f32>;

pub type CovarianceSet64 = scenario::CovarianceSet<f64>;
pub type CovarianceSet32 = scenario::CovarianceSet<f32>;
pub type LocalStats64 = ap_local::LocalStats<f64>;
pub type GlobalStats64 = fronthaul::GlobalStats<f64>;
pub type MomentModel64 = moments::MomentModel<f64>;
pub type MomentModel32 = moments::MomentModel<f32>;
pub type PowerPlan64 = power::PowerPlan<f64>;
pub type CpuObservation64 = fronthaul::CpuObservation<f64>;
