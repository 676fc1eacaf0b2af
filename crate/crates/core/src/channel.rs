//! Channel realizations and pilot-based LMMSE estimation for both hops.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cn_matrix, cn_vector, cr, hermitian_eigen, hpd_inverse, identity, CMat};
use crate::scalar::Real;
use crate::scenario::{CovarianceSet, PilotReuse};

/// Access channels `H_l` (N x K) per AP.
#[derive(Clone, Debug)]
pub struct AccessChannels<T: Real> {
    pub h: Vec<CMat<T>>,
}

/// Fronthaul channels `G_l` (N x M) per AP.
#[derive(Clone, Debug)]
pub struct FronthaulChannels<T: Real> {
    pub g: Vec<CMat<T>>,
}

/// Column `k` of `H_l` is `R_kl^{1/2} w` with `w ~ CN(0, I_N)`.
pub fn sample_access<T: Real, R: Rng + ?Sized>(cov: &CovarianceSet<T>, rng: &mut R) -> AccessChannels<T> {
    let (n, k) = (cov.n(), cov.k());
    let h = (0..cov.l())
        .map(|l| {
            let mut h = CMat::zeros(n, k);
            for kk in 0..k {
                let w = cn_vector::<T, R>(rng, n, T::one());
                let col = if cov.is_scaled_identity() {
                    w * cr(cov.beta(kk, l).sqrt())
                } else {
                    cov.r_sqrt(kk, l) * w
                };
                h.set_column(kk, &col);
            }
            h
        })
        .collect();
    AccessChannels { h }
}

/// `G_l` with i.i.d. `CN(0, G_beta[l])` entries.
pub fn sample_fronthaul<T: Real, R: Rng + ?Sized>(
    cov: &CovarianceSet<T>,
    m: usize,
    rng: &mut R,
) -> FronthaulChannels<T> {
    let g = cov
        .g_betas()
        .iter()
        .map(|&gb| cn_matrix(rng, cov.n(), m, gb))
        .collect();
    FronthaulChannels { g }
}

/// Ratio of smallest to largest singular value of `g`.
pub fn singular_value_ratio<T: Real>(g: &CMat<T>) -> f64 {
    let (vals, _) = hermitian_eigen(&(g.adjoint() * g));
    let lo = vals.first().copied().unwrap_or(T::zero()).max(T::zero()).to_f();
    let hi = vals.last().copied().unwrap_or(T::zero()).to_f();
    if hi <= 0.0 {
        0.0
    } else {
        (lo / hi).sqrt()
    }
}

/// Full column rank with the `1e-9` singular-value margin.
pub fn has_full_column_rank<T: Real>(g: &CMat<T>) -> bool {
    singular_value_ratio(g) > 1e-9
}

/// Access-channel estimate and per-(k, l) error covariance.
#[derive(Clone, Debug)]
pub struct AccessCsiEstimate<T: Real> {
    pub h_hat: Vec<CMat<T>>,
    /// Error covariances indexed `[k][l]`.
    pub rtilde: Vec<Vec<CMat<T>>>,
}

/// Pilot-observation covariance seen when estimating `h_kl`.
fn pilot_covariance<T: Real>(
    cov: &CovarianceSet<T>,
    k: usize,
    l: usize,
    gain: T,
    sigma2: T,
    reuse: PilotReuse,
) -> CMat<T> {
    let n = cov.n();
    let mut psi = identity::<T>(n) * cr(sigma2);
    match reuse {
        PilotReuse::Orthogonal => psi += cov.r(k, l) * cr(gain),
        PilotReuse::Shared => {
            for i in 0..cov.k() {
                psi += cov.r(i, l) * cr(gain);
            }
        }
    }
    psi
}

fn check_pilots<T: Real>(cov: &CovarianceSet<T>, p_pilot: T, tau_p: usize, reuse: PilotReuse) -> Result<()> {
    if !(p_pilot > T::zero()) {
        return Err(Error::Config("pilot power must be positive".into()));
    }
    if tau_p == 0 {
        return Err(Error::PilotLength { tau_p, needed: 1 });
    }
    if reuse == PilotReuse::Orthogonal && tau_p < cov.k() {
        return Err(Error::PilotLength {
            tau_p,
            needed: cov.k(),
        });
    }
    Ok(())
}

/// `R - p tau R Psi^{-1} R` for every `(k, l)`.
pub fn access_error_covariances<T: Real>(
    cov: &CovarianceSet<T>,
    p_pilot: T,
    tau_p: usize,
    sigma2: T,
    reuse: PilotReuse,
) -> Result<Vec<Vec<CMat<T>>>> {
    check_pilots(cov, p_pilot, tau_p, reuse)?;
    let gain = p_pilot * T::of_usize(tau_p);
    let gc = cr(gain);
    (0..cov.k())
        .map(|k| {
            (0..cov.l())
                .map(|l| {
                    let r = cov.r(k, l);
                    let psi_inv = hpd_inverse(&pilot_covariance(cov, k, l, gain, sigma2, reuse))?;
                    Ok(r - r * psi_inv * r * gc)
                })
                .collect()
        })
        .collect()
}

/// LMMSE estimate from one noisy pilot observation per AP.
///
/// With orthogonal pilots UE `k` sees `sqrt(p tau) h_kl + n` after despreading;
/// with a shared pilot every UE sees `sqrt(p tau) sum_i h_il + n`.
pub fn lmmse_access_estimate<T: Real, R: Rng + ?Sized>(
    ch: &AccessChannels<T>,
    cov: &CovarianceSet<T>,
    p_pilot: T,
    tau_p: usize,
    sigma2: T,
    reuse: PilotReuse,
    rng: &mut R,
) -> Result<AccessCsiEstimate<T>> {
    check_pilots(cov, p_pilot, tau_p, reuse)?;
    let (n, k_count) = (cov.n(), cov.k());
    let gain = p_pilot * T::of_usize(tau_p);
    let amp = cr(gain.sqrt());
    let mut h_hat = Vec::with_capacity(cov.l());
    let mut rtilde: Vec<Vec<CMat<T>>> = vec![Vec::with_capacity(cov.l()); k_count];
    for (l, h) in ch.h.iter().enumerate() {
        let mut est = CMat::zeros(n, k_count);
        let shared_obs = match reuse {
            PilotReuse::Shared => {
                let mut y = cn_vector::<T, R>(rng, n, sigma2);
                for k in 0..k_count {
                    y += h.column(k) * amp;
                }
                Some(y)
            }
            PilotReuse::Orthogonal => None,
        };
        for k in 0..k_count {
            let r = cov.r(k, l);
            let psi_inv = hpd_inverse(&pilot_covariance(cov, k, l, gain, sigma2, reuse))?;
            let y = match &shared_obs {
                Some(y) => y.clone(),
                None => h.column(k) * amp + cn_vector::<T, R>(rng, n, sigma2),
            };
            let filt = r * &psi_inv;
            est.set_column(k, &(&filt * y * amp));
            rtilde[k].push(r - filt * r * cr(gain));
        }
        h_hat.push(est);
    }
    Ok(AccessCsiEstimate { h_hat, rtilde })
}

/// Fronthaul estimate and per-entry error variance.
#[derive(Clone, Debug)]
pub struct FronthaulCsiEstimate<T: Real> {
    pub g_hat: Vec<CMat<T>>,
    pub err_var: Vec<T>,
}

/// Per-entry LMMSE error variance `G_beta sigma2 / (p tau G_beta + sigma2)`.
pub fn fronthaul_error_variance<T: Real>(g_beta: T, p_pilot: T, tau_g: usize, sigma2: T) -> T {
    let gain = p_pilot * T::of_usize(tau_g);
    let den = gain * g_beta + sigma2;
    if den > T::zero() {
        g_beta * sigma2 / den
    } else {
        g_beta
    }
}

/// Entry-wise LMMSE estimate of every `G_l` from `tau_g >= M` orthogonal pilots.
pub fn lmmse_fronthaul_estimate<T: Real, R: Rng + ?Sized>(
    fh: &FronthaulChannels<T>,
    cov: &CovarianceSet<T>,
    p_pilot: T,
    tau_g: usize,
    sigma2: T,
    rng: &mut R,
) -> Result<FronthaulCsiEstimate<T>> {
    let m = fh.g.first().map(|g| g.ncols()).unwrap_or(0);
    if tau_g < m {
        return Err(Error::PilotLength { tau_p: tau_g, needed: m });
    }
    if !(p_pilot > T::zero()) {
        return Err(Error::Config("fronthaul pilot power must be positive".into()));
    }
    let gain = p_pilot * T::of_usize(tau_g);
    let mut g_hat = Vec::with_capacity(fh.g.len());
    let mut err_var = Vec::with_capacity(fh.g.len());
    for (l, g) in fh.g.iter().enumerate() {
        let gb = cov.g_beta(l);
        let amp = gain.sqrt();
        let noise = cn_matrix::<T, R>(rng, g.nrows(), g.ncols(), sigma2);
        let y = g.map(|z| z * amp) + noise;
        let w = amp * gb / (gain * gb + sigma2);
        g_hat.push(y.map(|z| z * w));
        err_var.push(fronthaul_error_variance(gb, p_pilot, tau_g, sigma2));
    }
    Ok(FronthaulCsiEstimate { g_hat, err_var })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr, frob2, trace_re};
    use crate::rng::{domain, stream};

    fn diag_cov(n: usize, beta: Vec<Vec<f64>>, gb: Vec<f64>) -> CovarianceSet<f64> {
        CovarianceSet::from_gains(n, beta, gb).unwrap()
    }

    #[test]
    fn zero_covariance_gives_zero_channel() {
        let cov = diag_cov(3, vec![vec![0.0]], vec![0.0]);
        let mut rng = stream(1, domain::ORACLE, 0);
        let h = sample_access(&cov, &mut rng);
        assert_eq!(frob2(&h.h[0]), 0.0);
        let g = sample_fronthaul(&cov, 2, &mut rng);
        assert_eq!(frob2(&g.g[0]), 0.0);
    }

    #[test]
    fn entry_variance_matches_gain() {
        let beta = 0.37;
        let cov = diag_cov(4, vec![vec![beta]], vec![1.0]);
        let mut rng = stream(2, domain::ORACLE, 0);
        let draws = 100_000;
        let (mut acc_h, mut acc_g) = (0.0, 0.0);
        for _ in 0..draws {
            acc_h += sample_access(&cov, &mut rng).h[0][(1, 0)].norm_sqr();
            acc_g += sample_fronthaul(&cov, 3, &mut rng).g[0][(2, 1)].norm_sqr();
        }
        assert!((acc_h / draws as f64 / beta - 1.0).abs() < 0.03);
        assert!((acc_g / draws as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn rank_one_covariance_gives_parallel_draws() {
        let u = crate::linalg::CVec::<f64>::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let r = &u * u.adjoint();
        let cov = CovarianceSet::from_matrices(vec![vec![r]], vec![1.0]).unwrap();
        let mut rng = stream(3, domain::ORACLE, 0);
        for _ in 0..100 {
            let h = sample_access(&cov, &mut rng).h[0].column(0).into_owned();
            let proj = u.adjoint() * &h;
            let resid = &h - &u * proj[(0, 0)];
            assert!(resid.norm() < 1e-10 * (1.0 + h.norm()));
        }
    }

    #[test]
    fn square_fronthaul_is_full_rank() {
        let cov = diag_cov(4, vec![vec![1.0]], vec![1.0]);
        let mut rng = stream(4, domain::ORACLE, 0);
        let g = sample_fronthaul(&cov, 4, &mut rng);
        assert!(has_full_column_rank(&g.g[0]));
    }

    #[test]
    fn error_covariance_limits_and_scalar_case() {
        let (beta, p, tau, s2) = (0.8, 2.0, 3, 0.5);
        let cov = diag_cov(3, vec![vec![beta]], vec![1.0]);
        for reuse in [PilotReuse::Orthogonal, PilotReuse::Shared] {
            let rt = access_error_covariances(&cov, p, tau, s2, reuse).unwrap();
            let g = p * tau as f64 * beta;
            let expect = beta * (1.0 - g / (g + s2));
            assert!((rt[0][0][(0, 0)].re - expect).abs() < 1e-14);
            assert!(rt[0][0][(0, 1)].norm() < 1e-15);

            let tiny = access_error_covariances(&cov, p, tau, 1e-20, reuse).unwrap();
            assert!(frob2(&tiny[0][0]).sqrt() < 1e-6 * trace_re(cov.r(0, 0)));
            let blind = access_error_covariances(&cov, 1e-20, tau, s2, reuse).unwrap();
            assert!(frob2(&(&blind[0][0] - cov.r(0, 0))).sqrt() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_pilots_need_enough_length() {
        let cov = diag_cov(2, vec![vec![1.0], vec![1.0]], vec![1.0]);
        let err = access_error_covariances(&cov, 1.0, 1, 1.0, PilotReuse::Orthogonal);
        assert!(matches!(err, Err(Error::PilotLength { tau_p: 1, needed: 2 })));
        assert!(access_error_covariances(&cov, 1.0, 1, 1.0, PilotReuse::Shared).is_ok());
    }

    #[test]
    fn estimate_and_error_are_uncorrelated() {
        let cov = diag_cov(2, vec![vec![1.0, 0.5], vec![0.3, 2.0]], vec![1.0, 1.0]);
        for reuse in [PilotReuse::Orthogonal, PilotReuse::Shared] {
            let mut rng = stream(5, domain::ORACLE, reuse as u64);
            let trials = 10_000;
            let mut cross = CMat::<f64>::zeros(2, 2);
            let mut err_cov = CMat::<f64>::zeros(2, 2);
            let mut rt = None;
            for _ in 0..trials {
                let ch = sample_access(&cov, &mut rng);
                let est = lmmse_access_estimate(&ch, &cov, 1.0, 2, 0.7, reuse, &mut rng).unwrap();
                let e = ch.h[1].column(0) - est.h_hat[1].column(0);
                cross += est.h_hat[1].column(0) * e.adjoint();
                err_cov += &e * e.adjoint();
                rt = Some(est.rtilde[0][1].clone());
            }
            let rt = rt.unwrap();
            let cross = cross / cr(trials as f64);
            let err_cov = err_cov / cr(trials as f64);
            assert!(frob2(&cross).sqrt() < 0.05 * frob2(&rt).sqrt(), "{reuse:?}");
            assert!(frob2(&(err_cov - &rt)).sqrt() < 0.05 * frob2(&rt).sqrt(), "{reuse:?}");
        }
    }

    #[test]
    fn fronthaul_error_variance_matches_samples() {
        let cov = diag_cov(3, vec![vec![1.0]], vec![2.0]);
        let mut rng = stream(6, domain::ORACLE, 0);
        let trials = 20_000;
        let mut acc = 0.0;
        let mut ev = 0.0;
        for _ in 0..trials {
            let fh = sample_fronthaul(&cov, 2, &mut rng);
            let est = lmmse_fronthaul_estimate(&fh, &cov, 0.5, 2, 1.0, &mut rng).unwrap();
            acc += frob2(&(&fh.g[0] - &est.g_hat[0])) / 6.0;
            ev = est.err_var[0];
        }
        assert!((acc / trials as f64 / ev - 1.0).abs() < 0.03);
        assert!((ev - 2.0 / (0.5 * 2.0 * 2.0 + 1.0)).abs() < 1e-15);
    }
}
