//! Leading-order transition-matrix algebra for quartic double wells.
//!
//! All subleading factors `α_{j,k}(λ) = 1 + O(1/λ)` are frozen at 1, so every
//! quantity here is a leading-order approximation.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Mul;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Mat2 {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Mat2 {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Mat2::new(o, z, z, o)
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        let m = self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

fn phase(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

/// Transition along a finite Stokes line of action `α`.
pub fn omega_finite(lambda: f64, alpha: f64, phi: f64) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    Mat2::new(z, phase(-lambda * alpha), phase(lambda * alpha), z).scale(phase(phi))
}

/// Transition along an anti-Stokes line of action `a`.
pub fn omega_anti(lambda: f64, a: f64, phi: f64) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    Mat2::new(
        C64::new((-lambda * a).exp(), 0.0),
        z,
        z,
        C64::new((lambda * a).exp(), 0.0),
    )
    .scale(phase(phi))
}

/// Real prefactor of the rotation matrix, as printed.
pub const ROTATION_PREFACTOR: f64 = -PI / 6.0;

/// Rotation about a turning point, with the `α` factors set to 1.
pub fn omega_rotation() -> Mat2 {
    let s = C64::new(ROTATION_PREFACTOR.exp(), 0.0);
    Mat2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
    )
    .scale(s)
}

/// Actions of a real quartic double well: the two well actions and the
/// barrier action between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWell {
    pub alpha1: f64,
    pub alpha2: f64,
    pub xi: f64,
}

impl DoubleWell {
    pub fn new(alpha1: f64, alpha2: f64, xi: f64) -> Result<DoubleWell> {
        if !(alpha1 > 0.0 && alpha2 > 0.0 && xi > 0.0)
            || ![alpha1, alpha2, xi].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "double-well actions must be positive: α1={alpha1}, α2={alpha2}, ξ={xi}"
            )));
        }
        Ok(DoubleWell { alpha1, alpha2, xi })
    }

    pub fn is_symmetric(&self) -> bool {
        (self.alpha1 - self.alpha2).abs() <= 1e-12 * self.alpha1.max(self.alpha2)
    }

    pub fn ratio(&self) -> f64 {
        self.alpha1 / self.alpha2
    }
}

/// `Γ_ℓ(λ) = 2cos(α_ℓ λ)`.
pub fn gamma(alpha: f64, lambda: f64) -> f64 {
    2.0 * (alpha * lambda).cos()
}

/// `b(λ) = e^{iλ(α₂−α₁)} e^{−λξ} − Γ₁Γ₂ e^{λξ}`.
pub fn double_well_b(lambda: f64, d: &DoubleWell) -> C64 {
    phase(lambda * (d.alpha2 - d.alpha1)) * (-lambda * d.xi).exp()
        - C64::new(
            gamma(d.alpha1, lambda) * gamma(d.alpha2, lambda) * (lambda * d.xi).exp(),
            0.0,
        )
}

/// The seven elementary factors, left to right.
pub fn seven_factors(lambda: f64, d: &DoubleWell) -> [Mat2; 7] {
    let r = omega_rotation();
    [
        r,
        omega_finite(lambda, d.alpha1, 0.0),
        r,
        omega_anti(lambda, d.xi, 0.0),
        r,
        omega_finite(lambda, d.alpha2, 0.0),
        r,
    ]
}

/// `(a, b)ᵀ = Ω (0, 1)ᵀ` with the four rotation prefactors divided out.
pub fn double_well_product(lambda: f64, d: &DoubleWell) -> [C64; 2] {
    let f = seven_factors(lambda, d);
    let m = f.iter().fold(Mat2::identity(), |acc, &x| acc * x);
    let v = m.apply([C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    let undo = (-4.0 * ROTATION_PREFACTOR).exp();
    [v[0] * undo, v[1] * undo]
}

/// Which quantization family a leading-order root belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootFamily {
    /// A simple zero of `cos(α₁λ)`.
    First,
    /// A simple zero of `cos(α₂λ)`.
    Second,
    /// One member of a pair split off a common zero of both cosines.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingRoot {
    pub lambda: f64,
    pub family: RootFamily,
    /// Offset from the unperturbed cosine zero (0 for simple roots).
    pub shift: f64,
}

fn coincident(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Outer roots of `4|sin(α₁δ) sin(α₂(δ−s))| = e^{−2(λ₀+δ)ξ}` around the
/// common zero `λ₀`; `s` is the offset of the second cosine's zero.
fn split_pair(l0: f64, s: f64, d: &DoubleWell) -> Option<(f64, f64)> {
    let g = |t: f64| {
        4.0 * ((d.alpha1 * t).sin() * (d.alpha2 * (t - s)).sin()).abs()
            - (-2.0 * (l0 + t) * d.xi).exp()
    };
    let reach = PI / (4.0 * d.alpha1.max(d.alpha2));
    let solve = |inner: f64, outer: f64| -> Option<f64> {
        if g(outer) <= 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (inner, outer);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    };
    let left = solve(s.min(0.0), s.min(0.0) - reach)?;
    let right = solve(s.max(0.0), s.max(0.0) + reach)?;
    Some((left, right))
}

/// Leading-order eigenvalues in `(lo, hi]`.
///
/// Simple zeros of `Γ₁Γ₂` are returned as they are; common zeros of both
/// cosines become the two outer roots of `|Γ₁Γ₂| = e^{−2λξ}`.
pub fn leading_roots(d: &DoubleWell, lo: f64, hi: f64) -> Result<Vec<LeadingRoot>> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("bad λ range ({lo}, {hi}]")));
    }
    let zeros = |alpha: f64| -> Vec<f64> {
        let first = ((lo * alpha / PI - 0.5).floor() - 1.0).max(0.0) as u64;
        (first..)
            .map(|k| (2 * k + 1) as f64 * PI / (2.0 * alpha))
            .take_while(|&l| l <= hi + PI / alpha)
            .collect()
    };
    let z1 = zeros(d.alpha1);
    let z2 = zeros(d.alpha2);
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < z1.len() || j < z2.len() {
        let a = z1.get(i).copied().unwrap_or(f64::INFINITY);
        let b = z2.get(j).copied().unwrap_or(f64::INFINITY);
        if coincident(a, b) {
            match split_pair(a, b - a, d) {
                Some((l, r)) => {
                    out.push(LeadingRoot {
                        lambda: a + l,
                        family: RootFamily::Split,
                        shift: l,
                    });
                    out.push(LeadingRoot {
                        lambda: a + r,
                        family: RootFamily::Split,
                        shift: r,
                    });
                }
                None => {
                    out.push(LeadingRoot {
                        lambda: a,
                        family: RootFamily::Split,
                        shift: 0.0,
                    });
                    out.push(LeadingRoot {
                        lambda: b,
                        family: RootFamily::Split,
                        shift: 0.0,
                    });
                }
            }
            i += 1;
            j += 1;
        } else if a < b {
            out.push(LeadingRoot {
                lambda: a,
                family: RootFamily::First,
                shift: 0.0,
            });
            i += 1;
        } else {
            out.push(LeadingRoot {
                lambda: b,
                family: RootFamily::Second,
                shift: 0.0,
            });
            j += 1;
        }
    }
    out.retain(|r| r.lambda > lo && r.lambda <= hi);
    Ok(out)
}

/// The first `count` leading-order eigenvalues.
pub fn leading_roots_count(d: &DoubleWell, count: usize) -> Result<Vec<LeadingRoot>> {
    let step = PI / d.alpha1.min(d.alpha2);
    let mut hi = step * (count as f64 + 1.0);
    loop {
        let r = leading_roots(d, 0.0, hi)?;
        if r.len() >= count {
            return Ok(r.into_iter().take(count).collect());
        }
        hi *= 2.0;
    }
}

/// Predicted splittings of the first `pairs` doublets of a symmetric well.
pub fn symmetric_splittings(d: &DoubleWell, pairs: usize) -> Result<Vec<f64>> {
    if !d.is_symmetric() {
        return Err(Error::InvalidInput("splittings need α1 = α2".into()));
    }
    (0..pairs)
        .map(|k| {
            let l0 = (2 * k + 1) as f64 * PI / (2.0 * d.alpha1);
            let (l, r) = split_pair(l0, 0.0, d)
                .ok_or_else(|| Error::NoBracket(format!("pair {k} not split at leading order")))?;
            Ok(r - l)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_matrices() {
        let m = omega_finite(1.0, PI / 2.0, 0.0);
        assert!((m.0[0][1] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((m.0[1][0] - C64::new(0.0, 1.0)).norm() < 1e-15);
        let m = omega_finite(2.0, 0.7, 0.3);
        assert!((m.det() + phase(0.6)).norm() < 1e-15);
        let m = omega_anti(1.0, 1.0, 0.0);
        assert!((m.0[0][0].re - (-1.0f64).exp()).abs() < 1e-15);
        assert!((omega_anti(3.0, 0.4, 0.2).det() - phase(0.4)).norm() < 1e-13);
        assert!(omega_rotation().det().norm() > 0.0);
    }

    #[test]
    fn product_matches_closed_form_by_hand() {
        // Independent expansion: R F₁ R A R F₂ R (0,1)ᵀ.
        let d = DoubleWell::new(1.3, 0.9, 0.4).unwrap();
        let l = 2.7;
        let i = C64::new(0.0, 1.0);
        let c2 = (d.alpha2 * l).cos();
        let e = (l * d.xi).exp();
        let a_hand = 2.0 * i * phase(l * d.alpha1) * c2 * e;
        let [a, b] = double_well_product(l, &d);
        assert!((a - a_hand).norm() < 1e-12 * a.norm());
        assert!((b - double_well_b(l, &d)).norm() < 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn symmetric_pairs() {
        let d = DoubleWell::new(1.0, 1.0, 1.0).unwrap();
        let r = leading_roots(&d, 0.0, 10.0).unwrap();
        assert!(r.iter().all(|x| x.family == RootFamily::Split));
        for pair in r.chunks(2) {
            let mid = 0.5 * (pair[0].lambda + pair[1].lambda);
            let l0 = (mid / PI - 0.5).round() * PI + PI / 2.0;
            assert!((mid - l0).abs() < (-mid).exp());
            for x in pair {
                let lhs = 2.0 * (x.lambda).cos().abs();
                assert!((lhs - (-x.lambda).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn large_barrier_gives_cosine_zeros() {
        let d = DoubleWell::new(1.0, 2.0f64.sqrt(), 50.0).unwrap();
        let r = leading_roots(&d, 0.0, 20.0).unwrap();
        for x in &r {
            let c = (x.lambda * d.alpha1).cos() * (x.lambda * d.alpha2).cos();
            assert!(c.abs() < 1e-12);
        }
        assert!(r.windows(2).all(|w| w[0].lambda < w[1].lambda));
    }
}
