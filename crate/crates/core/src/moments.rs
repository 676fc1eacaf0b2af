//! First and second moments of the sufficient statistics, conditioned on the
//! large-scale gains, and the per-AP transmit-power coefficients they imply.

use rand::Rng;

use crate::ap_local::{chunk_count, diagonal_indices, upper_len, upper_pairs, zf_precoder, Phase};
use crate::error::{Error, Result};
use crate::linalg::{cn_matrix, cr, CMat};
use crate::scalar::Real;
use crate::scenario::CovarianceSet;

/// Mean and (diagonal) covariance of a vectorized Gramian.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOneMoments<T: Real> {
    /// Nonzero only at diagonal positions.
    pub mu: Vec<T>,
    pub c1: Vec<T>,
}

/// Phase-1 moments of a single AP.
pub fn phase1_moments_ap<T: Real>(cov: &CovarianceSet<T>, l: usize) -> PhaseOneMoments<T> {
    let k = cov.k();
    let mut mu = vec![T::zero(); upper_len(k)];
    let mut c1 = vec![T::zero(); upper_len(k)];
    for (q, (j, j2)) in upper_pairs(k).into_iter().enumerate() {
        if j == j2 {
            mu[q] = cov.trace(j, l);
        }
        c1[q] = cov.trace_product(j, j2, l);
    }
    PhaseOneMoments { mu, c1 }
}

/// Network-wide phase-1 moments (sum over APs).
pub fn phase1_moments<T: Real>(cov: &CovarianceSet<T>) -> PhaseOneMoments<T> {
    let k = cov.k();
    let mut acc = PhaseOneMoments {
        mu: vec![T::zero(); upper_len(k)],
        c1: vec![T::zero(); upper_len(k)],
    };
    for l in 0..cov.l() {
        let m = phase1_moments_ap(cov, l);
        for q in 0..acc.mu.len() {
            acc.mu[q] += m.mu[q];
            acc.c1[q] += m.c1[q];
        }
    }
    acc
}

/// Diagonals of `E[A_l]` and `E[A_l^2]`, indexed `[l][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramianExpectations<T: Real> {
    pub ea: Vec<Vec<T>>,
    pub ea2: Vec<Vec<T>>,
}

pub fn gramian_expectations<T: Real>(cov: &CovarianceSet<T>) -> GramianExpectations<T> {
    let k = cov.k();
    let mut ea = Vec::with_capacity(cov.l());
    let mut ea2 = Vec::with_capacity(cov.l());
    for l in 0..cov.l() {
        let tr: Vec<T> = (0..k).map(|kk| cov.trace(kk, l)).collect();
        ea2.push(
            (0..k)
                .map(|kk| {
                    let cross = (0..k).fold(T::zero(), |s, k2| s + cov.trace_product(kk, k2, l));
                    tr[kk] * tr[kk] + cross
                })
                .collect(),
        );
        ea.push(tr);
    }
    GramianExpectations { ea, ea2 }
}

/// Diagonal of the matched-filter covariance for unit-energy symbols.
pub fn phase2_covariance_from<T: Real>(ge: &GramianExpectations<T>, p_ul: T, sigma2: T) -> Vec<T> {
    let k = ge.ea.first().map_or(0, |v| v.len());
    (0..k)
        .map(|kk| {
            let own = ge
                .ea
                .iter()
                .zip(&ge.ea2)
                .fold(T::zero(), |s, (ea, ea2)| s + p_ul * ea2[kk] + sigma2 * ea[kk]);
            let total: T = ge.ea.iter().fold(T::zero(), |s, ea| s + ea[kk]);
            let squares: T = ge.ea.iter().fold(T::zero(), |s, ea| s + ea[kk] * ea[kk]);
            own + p_ul * (total * total - squares)
        })
        .collect()
}

pub fn phase2_covariance<T: Real>(cov: &CovarianceSet<T>, p_ul: T, sigma2: T) -> Vec<T> {
    phase2_covariance_from(&gramian_expectations(cov), p_ul, sigma2)
}

/// Sample estimate of `E[(G^H G)^{-1}]`.
#[derive(Clone, Debug)]
pub struct EwhwEstimate<T: Real> {
    pub mean: CMat<T>,
    /// Standard error of each diagonal entry.
    pub sem_diag: Vec<T>,
    /// Draws rejected as numerically singular.
    pub skipped: usize,
    /// `N == M`: the inverse-Wishart mean has infinite variance there.
    pub heavy_tailed: bool,
}

/// Averages `(G^H G)^{-1}` over the supplied fronthaul draws.
pub fn ewhw_sample_mean<T: Real>(draws: impl IntoIterator<Item = CMat<T>>) -> Result<EwhwEstimate<T>> {
    let mut sum: Option<CMat<T>> = None;
    let mut sq: Vec<f64> = Vec::new();
    let (mut count, mut skipped, mut heavy) = (0usize, 0usize, false);
    for g in draws {
        heavy |= g.nrows() == g.ncols();
        let w = match zf_precoder(&g) {
            Ok(p) => p.w,
            Err(Error::SingularChannel(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let whw = w.adjoint() * w;
        if sq.is_empty() {
            sq = vec![0.0; whw.nrows()];
        }
        for (i, s) in sq.iter_mut().enumerate() {
            *s += whw[(i, i)].re.to_f().powi(2);
        }
        sum = Some(match sum {
            Some(acc) => acc + whw,
            None => whw,
        });
        count += 1;
    }
    let sum = sum.ok_or_else(|| Error::Domain("no usable fronthaul draws".into()))?;
    let n = count as f64;
    let mean = sum / cr(T::of(n));
    let sem_diag = sq
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let m = mean[(i, i)].re.to_f();
            let var = if count > 1 { (s / n - m * m).max(0.0) * n / (n - 1.0) } else { 0.0 };
            T::of((var / n).sqrt())
        })
        .collect();
    Ok(EwhwEstimate {
        mean,
        sem_diag,
        skipped,
        heavy_tailed: heavy,
    })
}

/// Monte Carlo `E[W_l^H W_l]` for i.i.d. `CN(0, g_beta)` fronthaul entries.
pub fn ewhw_mc<T: Real, R: Rng + ?Sized>(
    g_beta: T,
    n: usize,
    m: usize,
    trials: usize,
    rng: &mut R,
) -> Result<EwhwEstimate<T>> {
    if n < m {
        return Err(Error::Dimension(format!("need N >= M, got N={n} M={m}")));
    }
    if trials < 1000 {
        return Err(Error::Config(format!("ewhw_mc needs at least 1000 trials, got {trials}")));
    }
    if !(g_beta > T::zero()) {
        return Err(Error::Domain("fronthaul gain must be positive".into()));
    }
    ewhw_sample_mean((0..trials).map(|_| cn_matrix(rng, n, m, g_beta)))
}

/// Complex inverse-Wishart mean `I / (g_beta (N - M))`.
pub fn ewhw_analytic<T: Real>(g_beta: T, n: usize, m: usize) -> Result<CMat<T>> {
    if n <= m {
        return Err(Error::Domain(format!(
            "E[(G^H G)^-1] is infinite unless N > M (N={n}, M={m})"
        )));
    }
    let d = T::one() / (g_beta * T::of_usize(n - m));
    Ok(CMat::from_diagonal_element(m, m, cr(d)))
}

/// Phase-2 power coefficients `(a_l, b_l)`: the per-channel-use transmit
/// power of AP `l` at unit scaling is `p_ul a_l + b_l`.
///
/// Payload entry `q` of the stacked matched-filter vector belongs to UE
/// `q mod K` and is sent on precoder input `q mod M`; the covariance of the
/// payload is diagonal, so the trace splits into one term per entry.
pub fn power_coefficients<T: Real>(
    ge: &GramianExpectations<T>,
    ewhw: &[CMat<T>],
    m: usize,
    tau_u: usize,
    sigma2: T,
) -> Result<(Vec<T>, Vec<T>)> {
    if ewhw.len() != ge.ea.len() {
        return Err(Error::Dimension(format!(
            "{} precoder moments for {} APs",
            ewhw.len(),
            ge.ea.len()
        )));
    }
    let k = ge.ea.first().map_or(0, |v| v.len());
    let len = k * tau_u;
    let m2 = T::of_usize(chunk_count(len, m).max(1));
    let mut a = Vec::with_capacity(ewhw.len());
    let mut b = Vec::with_capacity(ewhw.len());
    for (l, e) in ewhw.iter().enumerate() {
        let (mut sa, mut sb) = (T::zero(), T::zero());
        for q in 0..len {
            let w = e[(q % m, q % m)].re;
            sa += w * ge.ea2[l][q % k];
            sb += w * ge.ea[l][q % k];
        }
        a.push(sa / m2);
        b.push(sigma2 * sb / m2);
    }
    Ok((a, b))
}

/// Phase-1 per-channel-use transmit power of one AP at unit scaling.
pub fn phase1_power<T: Real>(mom: &PhaseOneMoments<T>, ewhw: &CMat<T>, m: usize) -> T {
    let len = mom.mu.len();
    let cols = chunk_count(len, m);
    let mut total = T::zero();
    for c in 0..cols {
        for r in 0..m {
            let q = c * m + r;
            if q >= len {
                break;
            }
            total += ewhw[(r, r)].re * mom.c1[q];
            for r2 in 0..m {
                let q2 = c * m + r2;
                if q2 < len {
                    total += ewhw[(r, r2)].re * mom.mu[q] * mom.mu[q2];
                }
            }
        }
    }
    total / T::of_usize(cols.max(1))
}

/// Prior of a summed payload vector (unpadded): per-entry mean and variance.
#[derive(Clone, Debug, PartialEq)]
pub struct PayloadPrior<T: Real> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Real> PayloadPrior<T> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// `sum_q (var_q + mean_q^2)`.
    pub fn energy(&self) -> T {
        self.mean
            .iter()
            .zip(&self.var)
            .fold(T::zero(), |s, (&m, &v)| s + v + m * m)
    }
}

/// Everything the CPU and APs know statistically about the payloads of one
/// geometry drop.
#[derive(Clone, Debug)]
pub struct MomentModel<T: Real> {
    pub k: usize,
    pub m: usize,
    pub tau_u: usize,
    pub p_ul: T,
    /// Noise power at the AP receivers.
    pub sigma2: T,
    pub phase1: PhaseOneMoments<T>,
    pub phase1_ap: Vec<PhaseOneMoments<T>>,
    pub ge: GramianExpectations<T>,
    pub c2: Vec<T>,
    pub ewhw: Vec<CMat<T>>,
    pub a: Vec<T>,
    pub b: Vec<T>,
    /// Phase-1 power report of each AP at unit scaling.
    pub p1: Vec<T>,
}

impl<T: Real> MomentModel<T> {
    pub fn new(
        cov: &CovarianceSet<T>,
        m: usize,
        tau_u: usize,
        p_ul: T,
        sigma2: T,
        ewhw: Vec<CMat<T>>,
    ) -> Result<Self> {
        if ewhw.iter().any(|e| e.nrows() != m || e.ncols() != m) {
            return Err(Error::Dimension(format!("E[W^H W] must be {m}x{m}")));
        }
        let phase1_ap: Vec<_> = (0..cov.l()).map(|l| phase1_moments_ap(cov, l)).collect();
        let phase1 = phase1_moments(cov);
        let ge = gramian_expectations(cov);
        let c2 = phase2_covariance_from(&ge, p_ul, sigma2);
        let (a, b) = power_coefficients(&ge, &ewhw, m, tau_u, sigma2)?;
        let p1 = phase1_ap
            .iter()
            .zip(&ewhw)
            .map(|(mom, e)| phase1_power(mom, e, m))
            .collect();
        Ok(Self {
            k: cov.k(),
            m,
            tau_u,
            p_ul,
            sigma2,
            phase1,
            phase1_ap,
            ge,
            c2,
            ewhw,
            a,
            b,
            p1,
        })
    }

    /// Builds the model with Monte Carlo precoder moments, one stream per AP.
    pub fn with_ewhw_mc<R: Rng + ?Sized>(
        cov: &CovarianceSet<T>,
        m: usize,
        tau_u: usize,
        p_ul: T,
        sigma2: T,
        trials: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let ewhw = cov
            .g_betas()
            .iter()
            .map(|&gb| ewhw_mc(gb, cov.n(), m, trials, rng).map(|e| e.mean))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cov, m, tau_u, p_ul, sigma2, ewhw)
    }

    pub fn with_ewhw_analytic(cov: &CovarianceSet<T>, m: usize, tau_u: usize, p_ul: T, sigma2: T) -> Result<Self> {
        let ewhw = cov
            .g_betas()
            .iter()
            .map(|&gb| ewhw_analytic(gb, cov.n(), m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cov, m, tau_u, p_ul, sigma2, ewhw)
    }

    pub fn l(&self) -> usize {
        self.ewhw.len()
    }

    /// Same model at a different uplink power.
    pub fn with_p_ul(&self, p_ul: T) -> Self {
        let mut out = self.clone();
        out.p_ul = p_ul;
        out.c2 = phase2_covariance_from(&self.ge, p_ul, self.sigma2);
        out
    }

    pub fn prior(&self, phase: Phase) -> PayloadPrior<T> {
        match phase {
            Phase::Gramian => PayloadPrior {
                mean: self.phase1.mu.clone(),
                var: self.phase1.c1.clone(),
            },
            Phase::MatchedFilter => {
                let len = self.k * self.tau_u;
                PayloadPrior {
                    mean: vec![T::zero(); len],
                    var: (0..len).map(|q| self.c2[q % self.k]).collect(),
                }
            }
        }
    }

    /// `E ||A||_F^2` of the summed Gramian.
    pub fn gramian_energy(&self) -> T {
        let second: Vec<T> = self
            .phase1
            .mu
            .iter()
            .zip(&self.phase1.c1)
            .map(|(&m, &c)| c + m * m)
            .collect();
        let all = second.iter().fold(T::zero(), |s, &v| s + v);
        let diag = diagonal_indices(self.k)
            .into_iter()
            .fold(T::zero(), |s, q| s + second[q]);
        all + all - diag
    }

    /// `E ||t||^2` of one slot's summed matched-filter output.
    pub fn mf_energy(&self) -> T {
        self.c2.iter().fold(T::zero(), |s, &v| s + v)
    }

    /// RMS magnitude of one AP's payload entries.
    pub fn entry_rms(&self, phase: Phase, l: usize) -> T {
        match phase {
            Phase::Gramian => {
                let mom = &self.phase1_ap[l];
                let e = mom
                    .mu
                    .iter()
                    .zip(&mom.c1)
                    .fold(T::zero(), |s, (&m, &c)| s + c + m * m);
                (e / T::of_usize(mom.mu.len())).sqrt()
            }
            Phase::MatchedFilter => {
                let e = (0..self.k).fold(T::zero(), |s, kk| {
                    s + self.p_ul * self.ge.ea2[l][kk] + self.sigma2 * self.ge.ea[l][kk]
                });
                (e / T::of_usize(self.k)).sqrt()
            }
        }
    }

    /// Power report of AP `l` at unit scaling.
    pub fn unit_power(&self, phase: Phase, l: usize) -> T {
        match phase {
            Phase::Gramian => self.p1[l],
            Phase::MatchedFilter => self.p_ul * self.a[l] + self.b[l],
        }
    }
}
