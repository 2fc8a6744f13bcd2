//! Taylor-series integration of `y'' = λ² q(z) y` along straight segments.
//!
//! The same stepper runs in `f64`, double-double ([`TwoFloat`]) and complex
//! arithmetic.  States are renormalised by powers of two after every step and
//! the exponent is accumulated in `exp2`, so `y·2^{exp2}` is the true value.

use crate::error::{Error, Result};
use crate::poly::Poly;
use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use twofloat::TwoFloat;

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_f64(x: f64) -> Self;
    /// Full-precision quotient.
    fn quot(self, rhs: Self) -> Self;
    fn div_f64(self, rhs: f64) -> Self;
    fn from_c64(z: Complex64) -> Self;
    fn mag(self) -> f64;
    fn to_c64(self) -> Complex64;
    const COMPLEX: bool;
    const UNIT_ROUNDOFF: f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
    fn div_f64(self, rhs: f64) -> Self {
        self / rhs
    }
    fn from_c64(z: Complex64) -> Self {
        z.re
    }
    fn mag(self) -> f64 {
        self.abs()
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    const COMPLEX: bool = false;
    const UNIT_ROUNDOFF: f64 = 1.1e-16;
}

impl Scalar for TwoFloat {
    fn from_f64(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn quot(self, rhs: Self) -> Self {
        dd_quot(self, rhs)
    }
    fn div_f64(self, rhs: f64) -> Self {
        self / rhs
    }
    fn from_c64(z: Complex64) -> Self {
        TwoFloat::from(z.re)
    }
    fn mag(self) -> f64 {
        self.hi().abs()
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.hi() + self.lo(), 0.0)
    }
    const COMPLEX: bool = false;
    const UNIT_ROUNDOFF: f64 = 1e-32;
}

impl Scalar for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
    fn div_f64(self, rhs: f64) -> Self {
        self / rhs
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn mag(self) -> f64 {
        self.norm()
    }
    fn to_c64(self) -> Complex64 {
        self
    }
    const COMPLEX: bool = true;
    const UNIT_ROUNDOFF: f64 = 1.1e-16;
}

/// Double-double quotient with one Newton correction.
///
/// `TwoFloat`'s own `TwoFloat / TwoFloat` forms `1 - b·(1/b)` without a fused
/// multiply-add and returns only about 17 significant digits.
pub fn dd_quot(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q0 = a.hi() / b.hi();
    let q0 = TwoFloat::from(q0);
    let r = a - b * q0;
    q0 + r / b.hi()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<S> {
    pub y: S,
    pub dy: S,
    pub exp2: i64,
}

impl<S: Scalar> State<S> {
    pub fn new(y: S, dy: S) -> Self {
        let mut s = State { y, dy, exp2: 0 };
        s.normalize();
        s
    }

    pub fn normalize(&mut self) {
        let m = self.y.mag().max(self.dy.mag());
        if m == 0.0 || !m.is_finite() {
            return;
        }
        let e = m.log2().floor() as i32;
        if e != 0 {
            let f = S::from_f64(2f64.powi(-e));
            self.y = self.y * f;
            self.dy = self.dy * f;
            self.exp2 += e as i64;
        }
    }

    pub fn log_scale(&self) -> f64 {
        self.exp2 as f64 * std::f64::consts::LN_2
    }

    pub fn scaled(&self, factor: S) -> Self {
        State {
            y: self.y * factor,
            dy: self.dy * factor,
            exp2: self.exp2,
        }
    }

    pub fn to_c64(&self) -> State<Complex64> {
        State {
            y: self.y.to_c64(),
            dy: self.dy.to_c64(),
            exp2: self.exp2,
        }
    }
}

/// What happened along one propagated segment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Trace {
    /// Sign changes of `Re y` at step endpoints.
    pub sign_changes: usize,
    /// Continuous change of `arg y` (complex mode only).
    pub phase: f64,
    /// Smallest `|y| / hypot(|y|, |y'|/λ)` seen at step endpoints.
    pub min_rel: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Taylor<S> {
    coeffs: Vec<S>,
    abs_coeffs: Vec<f64>,
    lambda: f64,
    lambda2: S,
    tol: f64,
    /// Bound on `λ sqrt(max|q|) |h|` per step.
    pub rho: f64,
    /// Bound on the change of `arg y` per step (complex mode).
    pub phase_limit: f64,
    max_order: usize,
}

impl<S: Scalar> Taylor<S> {
    pub fn new(p: &Poly, lambda: f64) -> Self {
        let coeffs: Vec<S> = p.coeffs().iter().map(|&c| S::from_c64(c)).collect();
        let abs_coeffs = p.coeffs().iter().map(|c| c.norm()).collect();
        let l = S::from_f64(lambda);
        Taylor {
            coeffs,
            abs_coeffs,
            lambda,
            lambda2: l * l,
            tol: 4.0 * S::UNIT_ROUNDOFF,
            rho: 2.0,
            phase_limit: std::f64::consts::FRAC_PI_4,
            max_order: 120,
        }
    }

    /// Same stepper with `λ` given in extended precision.
    pub fn with_lambda(p: &Poly, lambda: S) -> Self {
        let mut t = Self::new(p, lambda.to_c64().re);
        t.lambda2 = lambda * lambda;
        t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn shift(&self, z0: S) -> Vec<S> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                let t = c[k + 1] * z0;
                c[k] += t;
            }
        }
        c
    }

    fn max_abs_q(&self, z0: Complex64, r: f64) -> f64 {
        // sum |c_k| (|z0| + r)^k bounds |q| on the disc.
        let rr = z0.norm() + r;
        self.abs_coeffs.iter().rev().fold(0.0, |a, c| a * rr + c)
    }

    /// One Taylor step of length `h` from `z0`; `None` if the series does
    /// not converge within `max_order` terms.
    pub fn step(&self, z0: S, h: S, st: &State<S>) -> Option<State<S>> {
        let q = self.shift(z0);
        let h2l2 = self.lambda2 * h * h;
        let mut hp = S::from_f64(1.0);
        let pj: Vec<S> = q
            .iter()
            .map(|&qj| {
                let v = h2l2 * qj * hp;
                hp = hp * h;
                v
            })
            .collect();
        let mut a: Vec<S> = Vec::with_capacity(64);
        a.push(st.y);
        a.push(st.dy * h);
        let mut y = a[0] + a[1];
        let mut dyh = a[1];
        let mut big = a[0].mag().max(a[1].mag());
        let mut k = 0;
        loop {
            if k + 2 > self.max_order {
                return None;
            }
            let mut acc = S::from_f64(0.0);
            for (j, &p) in pj.iter().enumerate() {
                if j > k {
                    break;
                }
                acc += p * a[k - j];
            }
            let den = ((k + 1) * (k + 2)) as f64;
            let next = acc.div_f64(den);
            let m = (k + 2) as f64;
            y += next;
            dyh += next * S::from_f64(m);
            big = big.max(next.mag() * m);
            a.push(next);
            k += 1;
            let t1 = a[k + 1].mag() * (k + 2) as f64;
            let t0 = a[k].mag() * (k + 1) as f64;
            if k >= 4 && t1 + t0 <= self.tol * big {
                break;
            }
            if !big.is_finite() {
                return None;
            }
        }
        let mut out = State {
            y,
            dy: dyh.quot(h),
            exp2: st.exp2,
        };
        out.normalize();
        Some(out)
    }

    /// Integrates from `a` to `b` along the straight segment.
    pub fn propagate(&self, a: S, b: S, st: &mut State<S>) -> Result<Trace> {
        let dir = b - a;
        let len = dir.mag();
        let mut tr = Trace {
            min_rel: f64::INFINITY,
            ..Default::default()
        };
        if len == 0.0 {
            return Ok(tr);
        }
        let mut u = 0.0f64;
        let q0 = self.max_abs_q(a.to_c64(), 0.0);
        let mut du = (self.rho / (self.lambda * q0.sqrt() + 1.0 / len) / len).min(1.0);
        while u < 1.0 {
            let z0 = if u == 0.0 {
                a
            } else {
                a + dir * S::from_f64(u)
            };
            let zc = z0.to_c64();
            du = du.min(1.0 - u);
            loop {
                let hm = du * len;
                if self.lambda * self.max_abs_q(zc, hm).sqrt() * hm <= self.rho {
                    break;
                }
                du *= 0.7;
            }
            let planned = du;
            let next = loop {
                if du < planned && du * len < 1e-15 * (1.0 + zc.norm()) {
                    return Err(Error::StepUnderflow(zc));
                }
                // Endpoints are formed the same way each step so steps chain exactly.
                let u1 = if u + du >= 1.0 - 1e-15 { 1.0 } else { u + du };
                let z1 = if u1 == 1.0 {
                    b
                } else {
                    a + dir * S::from_f64(u1)
                };
                let h = z1 - z0;
                match self.step(z0, h, st) {
                    Some(n) => {
                        if S::COMPLEX {
                            let r = (n.y.to_c64() / st.y.to_c64()).arg();
                            if r.abs() > self.phase_limit {
                                du *= 0.5;
                                continue;
                            }
                        }
                        break n;
                    }
                    None => du *= 0.5,
                }
            };
            if S::COMPLEX {
                let r = (next.y.to_c64() / st.y.to_c64()).arg();
                if r.is_finite() {
                    tr.phase += r;
                }
            }
            let (s0, s1) = (st.y.to_c64().re, next.y.to_c64().re);
            if (s0 < 0.0 && s1 > 0.0) || (s0 > 0.0 && s1 < 0.0) {
                tr.sign_changes += 1;
            }
            let ym = next.y.mag();
            let rel = ym / ym.hypot(next.dy.mag() / self.lambda);
            tr.min_rel = tr.min_rel.min(rel);
            tr.steps += 1;
            *st = next;
            u = if u + du >= 1.0 - 1e-15 { 1.0 } else { u + du };
            du *= 1.4;
        }
        Ok(tr)
    }
}
