//! Per-AP statistics, payload layout for the two transmission phases and
//! zero-forcing fronthaul precoding.

use crate::error::{Error, Result};
use crate::linalg::{condition_number, cr, ensure_hermitian, hpd_cholesky, hpd_inverse, inverse, CMat, CVec};
use crate::scalar::Real;

/// Fronthaul transmission phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Upper triangle of the Gramian.
    Gramian,
    /// Matched-filter outputs of all data slots.
    MatchedFilter,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Gramian, Phase::MatchedFilter];

    pub fn index(self) -> usize {
        match self {
            Phase::Gramian => 0,
            Phase::MatchedFilter => 1,
        }
    }

    /// Payload length for `k` UEs and `tau_u` data slots.
    pub fn payload_len(self, k: usize, tau_u: usize) -> usize {
        match self {
            Phase::Gramian => upper_len(k),
            Phase::MatchedFilter => k * tau_u,
        }
    }
}

/// Local sufficient statistics of one AP.
#[derive(Clone, Debug)]
pub struct LocalStats<T: Real> {
    /// Gramian `H_l^H H_l`.
    pub a: CMat<T>,
    /// Matched-filter output `H_l^H y_l[t]` per data slot.
    pub t: Vec<CVec<T>>,
}

pub fn local_stats<T: Real>(h: &CMat<T>, y: &[CVec<T>]) -> Result<LocalStats<T>> {
    for ys in y {
        if ys.len() != h.nrows() {
            return Err(Error::Dimension(format!(
                "received vector has length {}, channel has {} rows",
                ys.len(),
                h.nrows()
            )));
        }
    }
    let hh = h.adjoint();
    Ok(LocalStats {
        a: &hh * h,
        t: y.iter().map(|ys| &hh * ys).collect(),
    })
}

/// `K(K+1)/2`.
pub fn upper_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// 0-based position of entry `(j, j2)`, `j <= j2`, in the row-wise upper
/// triangle of a `k x k` matrix.
pub fn upper_index(j: usize, j2: usize, k: usize) -> usize {
    debug_assert!(j <= j2 && j2 < k);
    j * (2 * k - j + 1) / 2 + (j2 - j)
}

/// 1-based position of diagonal entry `j` (1-based): `(K - j/2)(j - 1) + j`.
pub fn diagonal_position(j: usize, k: usize) -> usize {
    (2 * k - j) * (j - 1) / 2 + j
}

/// 0-based positions of all diagonal entries.
pub fn diagonal_indices(k: usize) -> Vec<usize> {
    (0..k).map(|j| upper_index(j, j, k)).collect()
}

/// `(row, col)` of every 0-based position in the upper-triangle layout.
pub fn upper_pairs(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(upper_len(k));
    for j in 0..k {
        for j2 in j..k {
            out.push((j, j2));
        }
    }
    out
}

/// Row-wise traversal of the upper triangle.
pub fn vectorize_upper<T: Real>(a: &CMat<T>) -> Result<CVec<T>> {
    ensure_hermitian(a, T::of(1e-9))?;
    let k = a.nrows();
    Ok(CVec::from_iterator(
        upper_len(k),
        upper_pairs(k).into_iter().map(|(i, j)| a[(i, j)]),
    ))
}

/// Inverse of [`vectorize_upper`]; the lower triangle is the conjugate of the
/// upper one. Diagonal entries are copied verbatim, so a noisy payload keeps
/// its imaginary diagonal noise.
pub fn devectorize_upper<T: Real>(x: &CVec<T>, k: usize) -> Result<CMat<T>> {
    if x.len() != upper_len(k) {
        return Err(Error::Dimension(format!(
            "upper-triangle payload for K={k} needs {} entries, got {}",
            upper_len(k),
            x.len()
        )));
    }
    let mut a = CMat::zeros(k, k);
    for (q, (i, j)) in upper_pairs(k).into_iter().enumerate() {
        a[(i, j)] = x[q];
        if i != j {
            a[(j, i)] = x[q].conj();
        }
    }
    Ok(a)
}

/// Number of `M`-entry columns needed for `len` entries.
pub fn chunk_count(len: usize, m: usize) -> usize {
    len.div_ceil(m)
}

/// Splits `x` into `M`-entry columns, zero-padding the last one.
pub fn chunk<T: Real>(x: &CVec<T>, m: usize) -> CMat<T> {
    assert!(m >= 1, "M must be positive");
    let cols = chunk_count(x.len(), m);
    CMat::from_fn(m, cols, |r, c| {
        x.get(c * m + r).copied().unwrap_or_else(num_complex::Complex::default)
    })
}

/// First `len` entries of the column-major stacking of `xbar`.
pub fn dechunk<T: Real>(xbar: &CMat<T>, len: usize) -> Result<CVec<T>> {
    if xbar.len() < len {
        return Err(Error::Dimension(format!(
            "chunk matrix holds {} entries, {len} requested",
            xbar.len()
        )));
    }
    Ok(CVec::from_iterator(len, xbar.iter().copied().take(len)))
}

/// Concatenates per-slot matched-filter outputs.
pub fn stack_mf<T: Real>(t: &[CVec<T>]) -> CVec<T> {
    CVec::from_iterator(
        t.iter().map(|v| v.len()).sum(),
        t.iter().flat_map(|v| v.iter().copied()),
    )
}

pub fn unstack_mf<T: Real>(x: &CVec<T>, k: usize, tau_u: usize) -> Result<Vec<CVec<T>>> {
    if x.len() != k * tau_u {
        return Err(Error::Dimension(format!(
            "matched-filter payload needs {} entries, got {}",
            k * tau_u,
            x.len()
        )));
    }
    Ok((0..tau_u)
        .map(|s| x.rows(s * k, k).into_owned())
        .collect())
}

/// Payload vector and its chunked transmit matrix for one phase.
#[derive(Clone, Debug)]
pub struct PhasePayload<T: Real> {
    pub x: CVec<T>,
    pub xbar: CMat<T>,
}

impl<T: Real> PhasePayload<T> {
    pub fn from_vector(x: CVec<T>, m: usize) -> Self {
        let xbar = chunk(&x, m);
        Self { x, xbar }
    }

    pub fn build(stats: &LocalStats<T>, phase: Phase, m: usize) -> Result<Self> {
        let x = match phase {
            Phase::Gramian => vectorize_upper(&stats.a)?,
            Phase::MatchedFilter => stack_mf(&stats.t),
        };
        Ok(Self::from_vector(x, m))
    }
}

/// Zero-forcing precoder `W_l = G_l (G_l^H G_l)^{-1}`.
#[derive(Clone, Debug)]
pub struct ZfPrecoder<T: Real> {
    pub w: CMat<T>,
}

/// Condition-number limit of `G^H G` beyond which the channel is singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub fn zf_precoder<T: Real>(g: &CMat<T>) -> Result<ZfPrecoder<T>> {
    if g.nrows() < g.ncols() {
        return Err(Error::Dimension(format!(
            "zero-forcing needs N >= M, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let gram = g.adjoint() * g;
    let cond = condition_number(&gram);
    if !(cond <= SINGULAR_CONDITION) {
        return Err(Error::SingularChannel(cond));
    }
    let inv = hpd_inverse(&gram).or_else(|_| inverse(&gram))?;
    Ok(ZfPrecoder { w: g * inv })
}

/// Local statistics whitened by the imperfect-CSI interference covariance
/// `Sigma_l = p sum_k Rtilde_kl + sigma2 I`.
pub fn whitened_local_stats<T: Real>(
    h_hat: &CMat<T>,
    y: &[CVec<T>],
    rtilde_l: &[&CMat<T>],
    p_ul: T,
    sigma2: T,
) -> Result<LocalStats<T>> {
    let n = h_hat.nrows();
    let mut sigma = CMat::<T>::identity(n, n) * cr(sigma2);
    for r in rtilde_l {
        sigma += *r * cr(p_ul);
    }
    let chol = hpd_cholesky(&sigma)?;
    let w = chol.solve(h_hat);
    let wh = w.adjoint();
    Ok(LocalStats {
        a: &wh * h_hat,
        t: y.iter().map(|ys| &wh * ys).collect(),
    })
}
