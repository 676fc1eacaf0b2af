//! Over-the-air superposition at the CPU, estimation of the summed payloads
//! and reconstruction of the global statistics.

use rand::Rng;

use crate::ap_local::{chunk_count, dechunk, devectorize_upper, unstack_mf, upper_len, zf_precoder, LocalStats, ZfPrecoder};
use crate::error::{Error, Result};
use crate::linalg::{cn_matrix, cr, frob2, CMat, CVec};
use crate::moments::PayloadPrior;
use crate::scalar::Real;

/// What the CPU receives in one phase: `Z = sqrt(eta) sum_l G_l^H W_l Xbar_l + E`.
#[derive(Clone, Debug)]
pub struct CpuObservation<T: Real> {
    pub z: CMat<T>,
    pub eta: T,
    pub sigma2: T,
}

/// Summed Gramian and per-slot matched-filter outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalStats<T: Real> {
    pub a: CMat<T>,
    pub t: Vec<CVec<T>>,
}

impl<T: Real> GlobalStats<T> {
    /// Error-free sums of the local statistics.
    pub fn exact(locals: &[LocalStats<T>]) -> Result<Self> {
        let first = locals
            .first()
            .ok_or_else(|| Error::Dimension("no local statistics".into()))?;
        let mut a = first.a.clone();
        let mut t = first.t.clone();
        for s in &locals[1..] {
            if s.a.shape() != a.shape() || s.t.len() != t.len() {
                return Err(Error::Dimension("local statistics disagree in shape".into()));
            }
            a += &s.a;
            for (acc, v) in t.iter_mut().zip(&s.t) {
                *acc += v;
            }
        }
        Ok(Self { a, t })
    }
}

fn check_shapes<T: Real>(xbars: &[CMat<T>], g: &[CMat<T>]) -> Result<(usize, usize)> {
    let x0 = xbars
        .first()
        .ok_or_else(|| Error::Dimension("no payloads".into()))?;
    if xbars.len() != g.len() {
        return Err(Error::Dimension(format!("{} payloads for {} channels", xbars.len(), g.len())));
    }
    let shape = x0.shape();
    if xbars.iter().any(|x| x.shape() != shape) || g.iter().any(|g| g.ncols() != shape.0) {
        return Err(Error::Dimension("payload and channel shapes disagree".into()));
    }
    Ok(shape)
}

/// Superposes the precoded payloads through the true channels.
///
/// The full `G^H W` product is formed, so any deviation from `W` being a
/// left inverse of `G` shows up in `z`.
pub fn ota_transmit<T: Real, R: Rng + ?Sized>(
    xbars: &[CMat<T>],
    precoders: &[ZfPrecoder<T>],
    g: &[CMat<T>],
    eta: T,
    sigma2: T,
    rng: &mut R,
) -> Result<CpuObservation<T>> {
    let (m, cols) = check_shapes(xbars, g)?;
    if precoders.len() != g.len() {
        return Err(Error::Dimension("one precoder per AP required".into()));
    }
    if !(eta >= T::zero()) || !(sigma2 >= T::zero()) {
        return Err(Error::Domain("eta and sigma2 must be >= 0".into()));
    }
    let amp = cr(eta.sqrt());
    let mut z = cn_matrix::<T, R>(rng, m, cols, sigma2);
    for ((x, w), g) in xbars.iter().zip(precoders).zip(g) {
        let eff = g.adjoint() * &w.w;
        z += (eff * x) * amp;
    }
    Ok(CpuObservation { z, eta, sigma2 })
}

/// Same as [`ota_transmit`] with precoders built from the estimates `g_hat`
/// and the signal passing through the true `g`.
pub fn ota_transmit_imperfect_csi<T: Real, R: Rng + ?Sized>(
    xbars: &[CMat<T>],
    g_hat: &[CMat<T>],
    g: &[CMat<T>],
    eta: T,
    sigma2: T,
    rng: &mut R,
) -> Result<CpuObservation<T>> {
    let precoders = g_hat.iter().map(zf_precoder).collect::<Result<Vec<_>>>()?;
    ota_transmit(xbars, &precoders, g, eta, sigma2, rng)
}

/// Per-entry variance of the precoder-mismatch term averaged over columns:
/// `eta sum_l eps_l P_l`, where `eps_l` is the per-entry fronthaul CSI error
/// variance and `P_l` the unit-scaling power report of AP `l`.
pub fn residual_noise_variance<T: Real>(err_var: &[T], unit_power: &[T], eta: T) -> T {
    err_var
        .iter()
        .zip(unit_power)
        .fold(T::zero(), |s, (&e, &p)| s + e * p)
        * eta
}

/// Column-wise residual variance for known precoders and payloads.
pub fn residual_noise_conditional<T: Real>(
    err_var: &[T],
    precoders: &[ZfPrecoder<T>],
    xbars: &[CMat<T>],
    eta: T,
) -> Vec<T> {
    let cols = xbars.first().map(|x| x.ncols()).unwrap_or(0);
    let mut out = vec![T::zero(); cols];
    for ((&e, w), x) in err_var.iter().zip(precoders).zip(xbars) {
        let wx = &w.w * x;
        for (c, o) in out.iter_mut().enumerate() {
            *o += e * wx.column(c).norm_squared() * eta;
        }
    }
    out
}

/// Column-wise scaling `z / sqrt(eta)`.
pub fn ls_estimate<T: Real>(obs: &CpuObservation<T>) -> Result<CMat<T>> {
    if !(obs.eta > T::zero()) {
        return Err(Error::Domain("LS estimate needs eta > 0".into()));
    }
    Ok(&obs.z * cr(T::one() / obs.eta.sqrt()))
}

/// Per-entry Wiener filter with the observation's own noise variance.
pub fn lmmse_estimate<T: Real>(obs: &CpuObservation<T>, prior: &PayloadPrior<T>) -> Result<CMat<T>> {
    lmmse_estimate_with_noise(obs, prior, obs.sigma2)
}

/// Per-entry Wiener filter
/// `mu + sqrt(eta) c / (eta c + s) (z - sqrt(eta) mu)` with noise variance `s`.
///
/// Entries past the prior's length are zero padding and estimate to zero.
pub fn lmmse_estimate_with_noise<T: Real>(
    obs: &CpuObservation<T>,
    prior: &PayloadPrior<T>,
    noise_var: T,
) -> Result<CMat<T>> {
    let (m, cols) = obs.z.shape();
    if chunk_count(prior.len(), m) != cols {
        return Err(Error::Dimension(format!(
            "prior of length {} does not fit a {m}x{cols} observation",
            prior.len()
        )));
    }
    if prior.var.iter().any(|&v| !(v >= T::zero())) {
        return Err(Error::Domain("prior variances must be >= 0".into()));
    }
    if !(noise_var >= T::zero()) || !(obs.eta >= T::zero()) {
        return Err(Error::Domain("noise variance and eta must be >= 0".into()));
    }
    let se = obs.eta.sqrt();
    Ok(CMat::from_fn(m, cols, |r, col| {
        let q = col * m + r;
        if q >= prior.len() {
            return Default::default();
        }
        let (mu, c) = (cr(prior.mean[q]), prior.var[q]);
        let den = obs.eta * c + noise_var;
        if den <= T::zero() {
            return mu;
        }
        mu + (obs.z[(r, col)] - mu * se) * (se * c / den)
    }))
}

/// Rebuilds `(A, t)` from the two chunked payload estimates.
pub fn reconstruct<T: Real>(x1_hat: &CMat<T>, x2_hat: &CMat<T>, k: usize, tau_u: usize) -> Result<GlobalStats<T>> {
    let v1 = dechunk(x1_hat, upper_len(k))?;
    let v2 = dechunk(x2_hat, k * tau_u)?;
    Ok(GlobalStats {
        a: devectorize_upper(&v1, k)?,
        t: unstack_mf(&v2, k, tau_u)?,
    })
}

/// Squared Frobenius error of a payload estimate over its first `len` entries.
pub fn payload_error<T: Real>(est: &CMat<T>, truth: &CMat<T>, len: usize) -> T {
    est.iter()
        .zip(truth.iter())
        .take(len)
        .fold(T::zero(), |s, (a, b)| s + (a - b).norm_sqr())
}

/// Sum of the chunked payloads, the noiseless target of both estimators.
pub fn summed_payload<T: Real>(xbars: &[CMat<T>]) -> CMat<T> {
    let mut out = xbars[0].clone();
    for x in &xbars[1..] {
        out += x;
    }
    out
}

/// Relative Frobenius distance, `0` when both are zero.
pub fn relative_error<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    let den = frob2(b);
    let num = frob2(&(a - b));
    if den > T::zero() {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
