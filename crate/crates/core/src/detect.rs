//! Constellations and data detection from the estimated global statistics.
//!
//! Every detector works on the Hermitian part of `A_hat`, since a noisy
//! estimate need not be exactly Hermitian.

use crate::error::{Error, Result};
use crate::linalg::{c, condition_number, cr, hermitian_eigen, hermitian_part, CMat, CVec};
use crate::scalar::Real;
use num_complex::Complex;

/// Largest candidate set the exhaustive detectors will enumerate.
pub const MAX_CANDIDATES: u128 = 1 << 20;

/// Condition number of `A_hat` past which LS refuses without the fallback.
pub const LS_CONDITION_LIMIT: f64 = 1e12;

/// Unit-average-energy constellation with a bit label per point.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation<T: Real> {
    points: Vec<Complex<T>>,
    bits: usize,
    /// `labels[i]` holds the bits of point `i`, most significant first.
    labels: Vec<Vec<u8>>,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl<T: Real> Constellation<T> {
    /// Normalizes `points` to unit average energy. `labels[i]` is the integer
    /// label of point `i`; all `2^bits` labels must appear once.
    pub fn new(points: Vec<Complex<T>>, labels: Vec<usize>) -> Result<Self> {
        let n = points.len();
        if n < 2 || !n.is_power_of_two() || labels.len() != n {
            return Err(Error::Config("constellation size must be a power of two >= 2".into()));
        }
        let mut seen = vec![false; n];
        for &l in &labels {
            if l >= n || std::mem::replace(&mut seen[l], true) {
                return Err(Error::Config("constellation labels must be a permutation".into()));
            }
        }
        let energy = points.iter().fold(T::zero(), |s, p| s + p.norm_sqr()) / T::of_usize(n);
        if !(energy > T::zero()) {
            return Err(Error::Config("constellation has zero energy".into()));
        }
        let scale = T::one() / energy.sqrt();
        let bits = n.trailing_zeros() as usize;
        Ok(Self {
            points: points.into_iter().map(|p| p * scale).collect(),
            bits,
            labels: labels
                .into_iter()
                .map(|l| (0..bits).rev().map(|b| ((l >> b) & 1) as u8).collect())
                .collect(),
        })
    }

    pub fn bpsk() -> Self {
        Self::new(vec![cr(T::one()), cr(-T::one())], vec![0, 1]).expect("valid BPSK")
    }

    /// Square Gray-labelled QAM of the given order (4, 16, 64, ...).
    ///
    /// The leading half of each label selects the real level and the trailing
    /// half the imaginary level; bit value 0 maps to the positive side. For
    /// 4-QAM this gives label `(b0, b1)` at `((-1)^b0 + j (-1)^b1) / sqrt(2)`.
    pub fn qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if order < 4 || side * side != order || !side.is_power_of_two() {
            return Err(Error::Config(format!("{order}-QAM is not a square power-of-two constellation")));
        }
        let half = side.trailing_zeros();
        // level index i (0 = most positive) carries Gray label gray(i)
        let level = |i: usize| T::of((side - 1) as f64 - 2.0 * i as f64);
        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for i in 0..side {
            for q in 0..side {
                points.push(c(level(i), level(q)));
                labels.push((gray(i) << half) | gray(q));
            }
        }
        Self::new(points, labels)
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn label(&self, i: usize) -> &[u8] {
        &self.labels[i]
    }

    pub fn nearest(&self, z: Complex<T>) -> usize {
        let mut best = (0, T::max_value().unwrap_or_else(T::one));
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    pub fn hard_decisions(&self, s: &CVec<T>) -> Vec<usize> {
        s.iter().map(|&z| self.nearest(z)).collect()
    }

    pub fn symbols(&self, idx: &[usize]) -> CVec<T> {
        CVec::from_iterator(idx.len(), idx.iter().map(|&i| self.points[i]))
    }

    /// Bit errors between two index vectors.
    pub fn bit_errors(&self, a: &[usize], b: &[usize]) -> usize {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                self.labels[x]
                    .iter()
                    .zip(&self.labels[y])
                    .filter(|(p, q)| p != q)
                    .count()
            })
            .sum()
    }
}

pub fn symbol_errors(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Clone, Debug, Default)]
pub struct DetectionResult<T: Real> {
    pub s_soft: Option<CVec<T>>,
    pub s_hard: Vec<usize>,
    /// `llr[k][b]`, positive favouring bit value 1.
    pub llr: Option<Vec<Vec<T>>>,
    /// Set when negative eigenvalues of `A_hat` were clamped.
    pub clamped: bool,
}

fn check_dims<T: Real>(a: &CMat<T>, t: &CVec<T>) -> Result<()> {
    if !a.is_square() || a.nrows() != t.len() {
        return Err(Error::Dimension(format!(
            "A_hat is {}x{}, t_hat has {} entries",
            a.nrows(),
            a.ncols(),
            t.len()
        )));
    }
    Ok(())
}

/// `(p A_hat + sigma2 I)^{-1} t_hat`.
pub fn detect_lmmse<T: Real>(a_hat: &CMat<T>, t_hat: &CVec<T>, p_ul: T, sigma2: T) -> Result<CVec<T>> {
    check_dims(a_hat, t_hat)?;
    let k = t_hat.len();
    let m = hermitian_part(a_hat) * cr(p_ul) + CMat::<T>::identity(k, k) * cr(sigma2);
    m.lu().solve(t_hat).ok_or(Error::NotPositiveDefinite)
}

/// `p^{-1/2} A_hat^{-1} t_hat`; with `pinv_fallback` an ill-conditioned
/// `A_hat` is pseudo-inverted instead of rejected.
pub fn detect_ls<T: Real>(a_hat: &CMat<T>, t_hat: &CVec<T>, p_ul: T, pinv_fallback: bool) -> Result<CVec<T>> {
    check_dims(a_hat, t_hat)?;
    let a = hermitian_part(a_hat);
    let scale = cr(T::one() / p_ul.sqrt());
    let cond = condition_number(&a);
    if cond <= LS_CONDITION_LIMIT {
        if let Some(x) = a.clone().lu().solve(t_hat) {
            return Ok(x * scale);
        }
    }
    if !pinv_fallback {
        return Err(Error::IllConditioned(cond));
    }
    let (vals, vecs) = hermitian_eigen(&a);
    let top = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let floor = top / T::of(LS_CONDITION_LIMIT);
    let proj = vecs.adjoint() * t_hat;
    let inv = CVec::from_iterator(
        vals.len(),
        vals.iter().zip(proj.iter()).map(|(&v, &z)| {
            if v.abs() > floor && v.abs() > T::zero() {
                z / v
            } else {
                Complex::default()
            }
        }),
    );
    Ok(vecs * inv * scale)
}

/// Quadratic ML metric `p s^H A s - 2 sqrt(p) Re(s^H b)` over `S^K`.
///
/// `A` is the PSD projection of `A_hat` and `b = A^{1/2} A^{+1/2} t_hat`,
/// which makes the metric equal to `||A^{+1/2} t - sqrt(p) A^{1/2} s||^2` up to
/// a constant.
struct MapProblem<T: Real> {
    a: CMat<T>,
    b: CVec<T>,
    p: T,
    sp: T,
    clamped: bool,
}

impl<T: Real> MapProblem<T> {
    fn new(a_hat: &CMat<T>, t_hat: &CVec<T>, p_ul: T) -> Self {
        let (vals, vecs) = hermitian_eigen(a_hat);
        let top = vals.last().copied().unwrap_or(T::zero()).max(T::zero());
        let floor = top * T::eps() * T::of_usize(4 * vals.len().max(1));
        let clamped = vals.first().is_some_and(|&v| v < -floor);
        let k = vals.len();
        let mut scaled = vecs.clone();
        let mut kept = vecs.clone();
        for (j, &v) in vals.iter().enumerate() {
            let keep = v > floor;
            let lam = if keep { v } else { T::zero() };
            for i in 0..k {
                scaled[(i, j)] *= lam;
                if !keep {
                    kept[(i, j)] = Complex::default();
                }
            }
        }
        let a = &scaled * vecs.adjoint();
        let b = &kept * (vecs.adjoint() * t_hat);
        Self {
            a,
            b,
            p: p_ul,
            sp: p_ul.sqrt(),
            clamped,
        }
    }

    fn metric(&self, s: &CVec<T>) -> T {
        let as_ = &self.a * s;
        s.dotc(&as_).re * self.p - s.dotc(&self.b).re * (self.sp + self.sp)
    }

    /// Visits every candidate in odometer order with its metric.
    fn enumerate(&self, points: &[Complex<T>], mut visit: impl FnMut(&[usize], T)) -> Result<()> {
        let k = self.b.len();
        let q = points.len();
        let total = (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if total > MAX_CANDIDATES {
            return Err(Error::SearchTooLarge(total));
        }
        let mut idx = vec![0usize; k];
        let mut s = CVec::from_element(k, points[0]);
        let mut u = &self.a * &s;
        let mut f = self.metric(&s);
        let two = T::of(2.0);
        loop {
            visit(&idx, f);
            // advance the odometer, updating u = A s and the metric per changed digit
            let mut j = 0;
            loop {
                if j == k {
                    return Ok(());
                }
                let old = idx[j];
                let new = if old + 1 == q { 0 } else { old + 1 };
                idx[j] = new;
                let d = points[new] - points[old];
                let dq = (d.conj() * u[j]).re * two + d.norm_sqr() * self.a[(j, j)].re;
                f += dq * self.p - (d.conj() * self.b[j]).re * (self.sp + self.sp);
                for i in 0..k {
                    u[i] += self.a[(i, j)] * d;
                }
                s[j] = points[new];
                if new != 0 {
                    break;
                }
                j += 1;
            }
        }
    }
}

/// Exhaustive ML detection.
pub fn detect_map<T: Real>(
    a_hat: &CMat<T>,
    t_hat: &CVec<T>,
    p_ul: T,
    constellation: &Constellation<T>,
) -> Result<DetectionResult<T>> {
    check_dims(a_hat, t_hat)?;
    let prob = MapProblem::new(a_hat, t_hat, p_ul);
    let mut best = (vec![0; t_hat.len()], T::max_value().unwrap_or_else(T::one));
    prob.enumerate(constellation.points(), |idx, f| {
        if f < best.1 {
            best.0.copy_from_slice(idx);
            best.1 = f;
        }
    })?;
    Ok(DetectionResult {
        s_soft: None,
        s_hard: best.0,
        llr: None,
        clamped: prob.clamped,
    })
}

/// Max-log LLRs `(min_{b=0} d - min_{b=1} d) / sigma2` together with the ML
/// decision.
pub fn llr_maxlog<T: Real>(
    a_hat: &CMat<T>,
    t_hat: &CVec<T>,
    p_ul: T,
    sigma2: T,
    constellation: &Constellation<T>,
) -> Result<DetectionResult<T>> {
    check_dims(a_hat, t_hat)?;
    if !(sigma2 > T::zero()) {
        return Err(Error::Domain("LLRs need sigma2 > 0".into()));
    }
    let k = t_hat.len();
    let nb = constellation.bits_per_symbol();
    let inf = T::max_value().unwrap_or_else(T::one);
    let prob = MapProblem::new(a_hat, t_hat, p_ul);
    let mut mins = vec![vec![[inf, inf]; nb]; k];
    let mut best = (vec![0; k], inf);
    prob.enumerate(constellation.points(), |idx, f| {
        if f < best.1 {
            best.0.copy_from_slice(idx);
            best.1 = f;
        }
        for (kk, &i) in idx.iter().enumerate() {
            for (b, &bit) in constellation.label(i).iter().enumerate() {
                let slot = &mut mins[kk][b][bit as usize];
                if f < *slot {
                    *slot = f;
                }
            }
        }
    })?;
    let llr = mins
        .into_iter()
        .map(|row| row.into_iter().map(|[m0, m1]| (m0 - m1) / sigma2).collect())
        .collect();
    Ok(DetectionResult {
        s_soft: None,
        s_hard: best.0,
        llr: Some(llr),
        clamped: prob.clamped,
    })
}

/// Bits implied by LLR signs (positive means 1).
pub fn llr_hard_bits<T: Real>(llr: &[Vec<T>]) -> Vec<Vec<u8>> {
    llr.iter()
        .map(|row| row.iter().map(|&v| u8::from(v > T::zero())).collect())
        .collect()
}
