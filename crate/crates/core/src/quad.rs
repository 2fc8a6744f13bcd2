//! Adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use crate::error::{Error, Result};
use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const MAX_DEPTH: usize = 30;
const MAX_PARTS: usize = 4000;

struct Rule {
    kronrod: Complex64,
    abs: f64,
    err: f64,
}

// QUADPACK's rescaling of the raw |K15 - G7| difference.
fn scaled_error(raw: f64, asc: f64) -> f64 {
    if asc > 0.0 && raw > 0.0 {
        asc * (200.0 * raw / asc).powf(1.5).min(1.0)
    } else {
        raw
    }
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Rule {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut vals = [(fc, fc); 7];
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        vals[j] = (f1, f2);
        k += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = k * 0.5;
    let mut asc = (fc - mean).norm() * WGK[7];
    for j in 0..7 {
        asc += ((vals[j].0 - mean).norm() + (vals[j].1 - mean).norm()) * WGK[j];
    }
    let hh = h.abs();
    Rule {
        kronrod: k * h,
        abs: abs * hh,
        err: scaled_error(((k - g) * h).norm(), asc * hh),
    }
}

/// `∫_a^b f` to `max(abs_tol, rel_tol * ∫|f|)`.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let whole = gk15(&mut f, a, b);
    let tol = abs_tol.max(rel_tol * whole.abs);
    if whole.err <= tol || !tol.is_finite() {
        return check(whole.kronrod, a, b);
    }
    // Globally adaptive: always bisect the interval with the largest error.
    let mut parts = vec![(a, b, 0usize, whole)];
    let mut err_sum = parts[0].3.err;
    while err_sum > tol {
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| {
                x.1 .3
                    .err
                    .partial_cmp(&y.1 .3.err)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let (lo, hi, depth, r) = parts.swap_remove(i);
        if depth >= MAX_DEPTH || parts.len() > MAX_PARTS || !r.err.is_finite() {
            return Err(Error::QuadratureFailure { a: lo, b: hi });
        }
        let mid = 0.5 * (lo + hi);
        let left = gk15(&mut f, lo, mid);
        let right = gk15(&mut f, mid, hi);
        err_sum += left.err + right.err - r.err;
        parts.push((lo, mid, depth + 1, left));
        parts.push((mid, hi, depth + 1, right));
        if err_sum <= tol {
            break;
        }
        // Resum occasionally to avoid drift from cancellation.
        if parts.len() % 64 == 0 {
            err_sum = parts.iter().map(|p| p.3.err).sum();
        }
    }
    let mut total = Complex64::new(0.0, 0.0);
    parts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    for p in &parts {
        total += p.3.kronrod;
    }
    check(total, a, b)
}

fn check(v: Complex64, a: f64, b: f64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure { a, b })
    }
}

pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, rel_tol, abs_tol).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate_real(|x| x.powi(6) - 2.0 * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((v - (128.0 / 7.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn semicircle() {
        let v = integrate_real(|x| (1.0 - x * x).max(0.0).sqrt(), -1.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_complex() {
        let v = integrate(
            |x| Complex64::new(0.0, 20.0 * x).exp(),
            0.0,
            1.0,
            1e-13,
            0.0,
        )
        .unwrap();
        let want = (Complex64::new(0.0, 20.0).exp() - 1.0) / Complex64::new(0.0, 20.0);
        assert!((v - want).norm() < 1e-13);
    }

    #[test]
    fn non_integrable_fails() {
        let r = integrate_real(|x| 1.0 / x, 0.0, 1.0, 1e-12, 0.0);
        assert!(r.is_err());
    }
}
