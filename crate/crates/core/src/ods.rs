//! Orthogonal digital fronthaul baseline: low-precision floating-point
//! quantization, waterfilling link rates, resource split and channel-use
//! accounting.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::channel::has_full_column_rank;
use crate::error::{Error, Result};
use crate::linalg::{c, cn_matrix, hermitian_eigen, CMat, CVec};
use crate::scalar::Real;

/// Sign bit, `exp_bits` exponent bits and `man_bits` mantissa bits with an
/// IEEE-style bias, subnormals, and the all-ones exponent reserved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FloatFormat {
    pub exp_bits: u32,
    pub man_bits: u32,
}

impl FloatFormat {
    pub fn new(exp_bits: u32, man_bits: u32) -> Result<Self> {
        // the f64 working precision bounds both fields
        if !(2..=11).contains(&exp_bits) || !(1..=52).contains(&man_bits) {
            return Err(Error::Config(format!(
                "float format needs 2 <= N_E <= 11 and 1 <= N_F <= 52, got ({exp_bits}, {man_bits})"
            )));
        }
        Ok(Self { exp_bits, man_bits })
    }

    pub fn total_bits(self) -> u32 {
        1 + self.exp_bits + self.man_bits
    }

    pub fn bias(self) -> i32 {
        (1 << (self.exp_bits - 1)) - 1
    }

    pub fn min_normal_exp(self) -> i32 {
        1 - self.bias()
    }

    pub fn max_exp(self) -> i32 {
        (1 << self.exp_bits) - 2 - self.bias()
    }

    pub fn max_finite(self) -> f64 {
        (2.0 - (-(self.man_bits as f64)).exp2()) * (self.max_exp() as f64).exp2()
    }

    pub fn min_subnormal(self) -> f64 {
        ((self.min_normal_exp() - self.man_bits as i32) as f64).exp2()
    }

    /// Every finite representable value, ascending. Limited to 16-bit formats.
    pub fn enumerate(self) -> Result<Vec<f64>> {
        if self.total_bits() > 16 {
            return Err(Error::Config("enumeration limited to N_b <= 16".into()));
        }
        let mut pos = Vec::new();
        let frac = 1u64 << self.man_bits;
        for m in 0..frac {
            pos.push(m as f64 * self.min_subnormal());
        }
        for e in self.min_normal_exp()..=self.max_exp() {
            let step = ((e - self.man_bits as i32) as f64).exp2();
            for m in 0..frac {
                pos.push((frac + m) as f64 * step);
            }
        }
        let mut all: Vec<f64> = pos.iter().skip(1).rev().map(|v| -v).collect();
        all.extend(pos);
        Ok(all)
    }

    /// Nearest representable value, ties to even mantissa, clamped to the
    /// largest finite magnitude.
    pub fn quantize(self, x: f64) -> f64 {
        if x == 0.0 || !x.is_finite() {
            return if x.is_nan() { 0.0 } else { x.signum() * self.max_finite() * f64::from(x != 0.0) };
        }
        let a = x.abs();
        let emin = self.min_normal_exp();
        let e = if a < (emin as f64).exp2() {
            emin
        } else {
            let mut e = a.log2().floor() as i32;
            while (e as f64).exp2() > a {
                e -= 1;
            }
            while ((e + 1) as f64).exp2() <= a {
                e += 1;
            }
            e
        };
        // power-of-two scaling is exact, so the rounding below is the only error
        let step = ((e - self.man_bits as i32) as f64).exp2();
        let q = (a / step).round_ties_even() * step;
        x.signum() * q.min(self.max_finite())
    }
}

/// Quantizes `z / scale` component-wise and scales back.
pub fn quantize_complex<T: Real>(z: num_complex::Complex<T>, fmt: FloatFormat, scale: T) -> num_complex::Complex<T> {
    let s = scale.to_f();
    if s <= 0.0 {
        return z;
    }
    c(
        T::of(fmt.quantize(z.re.to_f() / s) * s),
        T::of(fmt.quantize(z.im.to_f() / s) * s),
    )
}

pub fn quantize_payload<T: Real>(x: &CVec<T>, fmt: FloatFormat, scale: T) -> CVec<T> {
    x.map(|z| quantize_complex(z, fmt, scale))
}

/// Digital aggregation at the CPU: the sum of every AP's quantized payload.
pub fn digital_sum<T: Real>(xs: &[CVec<T>], scales: &[T], fmt: FloatFormat) -> Result<CVec<T>> {
    let first = xs.first().ok_or_else(|| Error::Dimension("no payloads".into()))?;
    if scales.len() != xs.len() || xs.iter().any(|x| x.len() != first.len()) {
        return Err(Error::Dimension("payload and scale counts disagree".into()));
    }
    let mut out = CVec::zeros(first.len());
    for (x, &s) in xs.iter().zip(scales) {
        out += quantize_payload(x, fmt, s);
    }
    Ok(out)
}

/// Real samples of `N(0, 1/2)`, the per-component law of a unit-variance
/// circular entry.
pub fn calibration_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * s).collect()
}

/// Quantization NMSE of `fmt` on `sample`.
pub fn quantization_nmse(fmt: FloatFormat, sample: &[f64]) -> f64 {
    let (mut err, mut energy) = (0.0, 0.0);
    for &x in sample {
        let d = fmt.quantize(x) - x;
        err += d * d;
        energy += x * x;
    }
    err / energy
}

/// Mean squared relative error of `fmt` over the nonzero entries of
/// `sample`. Scale free, so small entries count as much as large ones.
pub fn quantization_relative_mse(fmt: FloatFormat, sample: &[f64]) -> f64 {
    let (mut err, mut n) = (0.0, 0usize);
    for &x in sample.iter().filter(|&&x| x != 0.0) {
        let d = (fmt.quantize(x) - x) / x;
        err += d * d;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        err / n as f64
    }
}

/// Figure of merit minimized when choosing a format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatCriterion {
    /// Error energy over signal energy; dominated by the largest entries.
    Nmse,
    /// Per-entry relative error; rewards dynamic range.
    Relative,
}

/// Exponent/mantissa split of `n_b` bits with the lowest NMSE on `sample`.
pub fn select_format(n_b: u32, sample: &[f64]) -> Result<FloatFormat> {
    select_format_by(n_b, sample, FormatCriterion::Nmse)
}

/// Exponent/mantissa split of `n_b` bits minimizing `criterion` on `sample`.
pub fn select_format_by(n_b: u32, sample: &[f64], criterion: FormatCriterion) -> Result<FloatFormat> {
    if n_b < 4 {
        return Err(Error::Config(format!("N_b = {n_b} leaves no room for N_E >= 2 and N_F >= 1")));
    }
    let mut best: Option<(FloatFormat, f64)> = None;
    for e in 2..=11.min(n_b - 2) {
        let fmt = FloatFormat::new(e, n_b - 1 - e)?;
        let v = match criterion {
            FormatCriterion::Nmse => quantization_nmse(fmt, sample),
            FormatCriterion::Relative => quantization_relative_mse(fmt, sample),
        };
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((fmt, v));
        }
    }
    best.map(|(f, _)| f)
        .ok_or_else(|| Error::Config(format!("no format for N_b = {n_b}")))
}

/// Waterfilling over parallel modes with gains `g_i` (SNR per unit power):
/// `p_i = max(0, mu - 1/g_i)` with `sum p_i = p_max`.
pub fn waterfill(gains: &[f64], p_max: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut out = vec![0.0; gains.len()];
    if order.is_empty() || p_max <= 0.0 {
        return out;
    }
    // largest active set whose weakest mode still sits below the water level
    let mut active = order.len();
    let mut mu = 0.0;
    while active > 0 {
        let inv_sum: f64 = order[..active].iter().map(|&i| 1.0 / gains[i]).sum();
        mu = (p_max + inv_sum) / active as f64;
        if mu > 1.0 / gains[order[active - 1]] {
            break;
        }
        active -= 1;
    }
    for &i in &order[..active] {
        out[i] = mu - 1.0 / gains[i];
    }
    out
}

/// `sum log2(1 + p_i g_i)`.
pub fn mode_rate(gains: &[f64], powers: &[f64]) -> f64 {
    gains.iter().zip(powers).map(|(g, p)| (1.0 + g * p).log2()).sum()
}

/// Waterfilling capacity of one link: modes are the eigenvalues of
/// `G^H G / sigma2`. Fails for a rank-deficient `G`.
pub fn waterfill_rate<T: Real>(g: &CMat<T>, p_max: f64, sigma2: f64) -> Result<f64> {
    if !has_full_column_rank(g) {
        return Err(Error::SingularChannel(f64::INFINITY));
    }
    let (vals, _) = hermitian_eigen(&(g.adjoint() * g));
    let gains: Vec<f64> = vals.iter().map(|v| v.to_f().max(0.0) / sigma2).collect();
    Ok(mode_rate(&gains, &waterfill(&gains, p_max)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErgodicRate {
    pub mean: f64,
    pub draws: usize,
    pub skipped: usize,
}

/// Ergodic waterfilling rate over `draws` Rayleigh draws of an `N x M` link
/// with per-entry variance `g_beta`; rank-deficient draws are skipped.
pub fn ergodic_rate<R: Rng + ?Sized>(
    g_beta: f64,
    n: usize,
    m: usize,
    p_max: f64,
    sigma2: f64,
    draws: usize,
    rng: &mut R,
) -> Result<ErgodicRate> {
    let (mut sum, mut used, mut skipped) = (0.0, 0, 0);
    for _ in 0..draws {
        let g = cn_matrix::<f64, R>(rng, n, m, g_beta);
        match waterfill_rate(&g, p_max, sigma2) {
            Ok(r) => {
                sum += r;
                used += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    if used == 0 {
        return Err(Error::Domain("every fronthaul draw was rank deficient".into()));
    }
    Ok(ErgodicRate {
        mean: sum / used as f64,
        draws: used,
        skipped,
    })
}

/// Orthogonal resource split and channel-use counts for one phase.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdsPlan {
    pub rbar: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Common rate `1 / sum_l 1/Rbar_l` when all APs share the band.
    pub rate: f64,
    pub bits: u64,
    /// `ceil(B / Rbar_l)`, the uses AP `l` needs on the full band.
    pub per_ap_uses: Vec<u64>,
    pub upsilon_ods: u64,
    pub upsilon_ota: u64,
}

/// Bits per AP for `n_s` complex source symbols at `n_b` bits per real part.
pub fn payload_bits(n_s: usize, n_b: u32) -> u64 {
    2 * n_s as u64 * n_b as u64
}

pub fn channel_uses_ota(n_s: usize, m: usize) -> u64 {
    n_s.div_ceil(m) as u64
}

/// Splits the band so every AP delivers the same rate and counts channel
/// uses. Each AP needs `ceil(B / Rbar_l)` full-band uses; their sum is the
/// ODS cost, which grows linearly in `L`.
pub fn allocate_resources(rbar: &[f64], bits: u64, n_s: usize, m: usize) -> Result<OdsPlan> {
    if rbar.is_empty() || rbar.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Domain("every AP needs a positive finite rate".into()));
    }
    let rate = 1.0 / rbar.iter().map(|r| 1.0 / r).sum::<f64>();
    let alpha = rbar.iter().map(|r| rate / r).collect();
    let per_ap_uses: Vec<u64> = rbar.iter().map(|r| (bits as f64 / r).ceil() as u64).collect();
    Ok(OdsPlan {
        rbar: rbar.to_vec(),
        alpha,
        rate,
        bits,
        upsilon_ods: per_ap_uses.iter().sum(),
        per_ap_uses,
        upsilon_ota: channel_uses_ota(n_s, m),
    })
}

/// `Upsilon_ODS / Upsilon_OTA`, the power boost that equalizes the channel
/// uses spent by the two fronthauls.
pub fn ota_extra_snr_factor(plan: &OdsPlan) -> Result<f64> {
    if plan.upsilon_ods == 0 || plan.upsilon_ota == 0 {
        return Err(Error::Domain("channel-use counts must be >= 1".into()));
    }
    Ok(plan.upsilon_ods as f64 / plan.upsilon_ota as f64)
}
