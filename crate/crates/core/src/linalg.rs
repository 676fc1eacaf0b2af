//! Complex dense linear algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// One draw of CN(0, 1).
#[inline]
pub fn cn_unit<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(T::of(re * s), T::of(im * s))
}

/// Matrix with i.i.d. CN(0, `var`) entries.
pub fn cn_matrix<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: T,
) -> CMat<T> {
    let sd = var.sqrt();
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = cn_unit::<T, R>(rng) * sd;
        }
    }
    m
}

pub fn cn_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, len: usize, var: T) -> CVec<T> {
    let sd = var.sqrt();
    CVec::from_iterator(len, (0..len).map(|_| cn_unit::<T, R>(rng) * sd))
}

pub fn frob2<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

pub fn norm2<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

pub fn max_abs<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc.max(z.norm_sqr().sqrt()))
}

/// Largest `|a_ij - conj(a_ji)|`.
pub fn hermitian_asymmetry<T: Real>(a: &CMat<T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm_sqr().sqrt());
        }
    }
    worst
}

/// Relative Hermitian check used at API boundaries.
pub fn ensure_hermitian<T: Real>(a: &CMat<T>, rel_tol: T) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = hermitian_asymmetry(a);
    let scale = max_abs(a);
    if asym > rel_tol * scale {
        return Err(Error::NotHermitian(asym.to_f()));
    }
    Ok(())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part<T: Real>(a: &CMat<T>) -> CMat<T> {
    let half = T::of(0.5);
    (a + a.adjoint()).map(|z| z * half)
}

/// Eigen-decomposition of the Hermitian part of `a`; eigenvalues ascending.
pub fn hermitian_eigen<T: Real>(a: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

/// `V f(Λ) V^H` for a Hermitian matrix.
pub fn hermitian_fn<T: Real>(a: &CMat<T>, f: impl Fn(T) -> T) -> CMat<T> {
    let (vals, vecs) = hermitian_eigen(a);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vecs.adjoint()
}

/// Principal square root with negative and round-off-sized eigenvalues
/// clamped to zero.
pub fn psd_sqrt<T: Real>(a: &CMat<T>) -> CMat<T> {
    let (vals, _) = hermitian_eigen(a);
    let top = vals.last().copied().unwrap_or(T::zero()).max(T::zero());
    let floor = top * T::eps() * T::of_usize(4 * a.nrows().max(1));
    hermitian_fn(a, move |v| if v > floor { v.sqrt() } else { T::zero() })
}

/// Pseudo-inverse square root; eigenvalues below `rel_floor * max` are dropped.
pub fn psd_inv_sqrt<T: Real>(a: &CMat<T>, rel_floor: T) -> CMat<T> {
    let (vals, _) = hermitian_eigen(a);
    let top = vals.last().copied().unwrap_or(T::zero()).max(T::zero());
    let floor = top * rel_floor;
    hermitian_fn(a, move |v| {
        if v > floor && v > T::zero() {
            T::one() / v.sqrt()
        } else {
            T::zero()
        }
    })
}

/// Validates PSD within `-tol * trace` and returns the clamped square root.
pub fn checked_psd_sqrt<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    ensure_hermitian(a, T::of(1e-9))?;
    let (vals, _) = hermitian_eigen(a);
    let trace = a.diagonal().iter().fold(T::zero(), |s, z| s + z.re);
    let min = vals.first().copied().unwrap_or(T::zero());
    if min < -(T::of(1e-10) * trace.abs()) {
        return Err(Error::NotPsd(min.to_f()));
    }
    Ok(psd_sqrt(a))
}

/// `λ_max / λ_min` of a Hermitian PSD matrix; infinite when singular.
pub fn condition_number<T: Real>(a: &CMat<T>) -> f64 {
    let (vals, _) = hermitian_eigen(a);
    let lo = vals.first().copied().unwrap_or(T::zero()).to_f();
    let hi = vals.last().copied().unwrap_or(T::zero()).to_f();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Cholesky factorization that rejects matrices which are not positive
/// definite. nalgebra's complex square root never fails, so the factor's
/// diagonal is checked explicitly.
pub fn hpd_cholesky<T: Real>(a: &CMat<T>) -> Result<Cholesky<Complex<T>, Dyn>> {
    let ch = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let ok = ch
        .l_dirty()
        .diagonal()
        .iter()
        .all(|d| d.re > T::zero() && d.re.is_finite() && d.im.abs() <= d.re * T::of(1e-6));
    if ok {
        Ok(ch)
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hpd_inverse<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    hpd_cholesky(a).map(|ch| ch.inverse())
}

/// General inverse via LU.
pub fn inverse<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    a.clone().try_inverse().ok_or(Error::NotPositiveDefinite)
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::identity(n, n)
}

pub fn trace_re<T: Real>(a: &CMat<T>) -> T {
    a.diagonal().iter().fold(T::zero(), |s, z| s + z.re)
}

/// `Re tr(A B)` without forming the product.
pub fn trace_product_re<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    let n = a.nrows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}
