//! Polynomials with complex coefficients, root finding and turning points.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C64 = Complex64;

/// Polynomial `c0 + c1 z + ... + cn z^n` with nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub z: C64,
    pub multiplicity: usize,
    pub is_real: bool,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Result<Self> {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty()
            || coeffs
                .iter()
                .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidInput(
                "polynomial coefficients must be finite".into(),
            ));
        }
        if coeffs.last().unwrap().norm() == 0.0 {
            return Err(Error::InvalidInput("zero polynomial".into()));
        }
        Ok(Poly { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// `leading * prod (z - r)`.
    pub fn from_roots(roots: &[C64], leading: C64) -> Result<Self> {
        let mut c = vec![leading];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn from_real_roots(roots: &[f64], leading: f64) -> Result<Self> {
        let r: Vec<C64> = roots.iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut p = Self::from_roots(&r, C64::new(leading, 0.0))?;
        for c in &mut p.coeffs {
            c.im = 0.0;
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.re)
    }

    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        if self.degree() == 0 {
            return Poly {
                coeffs: vec![C64::new(0.0, 0.0)],
            };
        }
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        }
    }

    /// `sum |c_k| |z|^k`, the natural rounding scale of `eval(z)`.
    pub fn scale(&self, z: C64) -> f64 {
        let r = z.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// Coefficients of `q(z0 + t)` in powers of `t`.
    pub fn taylor_shift(&self, z0: C64) -> Vec<C64> {
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

    /// Roots by Aberth iteration followed by Newton polishing.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let n = self.degree();
        if n == 0 {
            return Ok(vec![]);
        }
        let lead = self.leading();
        let bound = 1.0
            + self.coeffs[..n]
                .iter()
                .map(|c| (c / lead).norm())
                .fold(0.0, f64::max);
        let mut z: Vec<C64> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                C64::from_polar(0.5 * bound, t)
            })
            .collect();
        let dp = self.derivative();
        for _ in 0..1000 {
            let mut max_step: f64 = 0.0;
            for k in 0..n {
                let pk = self.eval(z[k]);
                if pk.norm() == 0.0 {
                    continue;
                }
                let w = pk / dp.eval(z[k]);
                let s: C64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| 1.0 / (z[k] - z[j]))
                    .sum();
                let step = w / (1.0 - w * s);
                if step.re.is_finite() && step.im.is_finite() {
                    z[k] -= step;
                    max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
                }
            }
            if max_step < 1e-15 {
                break;
            }
        }
        for zk in z.iter_mut() {
            for _ in 0..8 {
                let (p, d) = self.eval_with_derivative(*zk);
                if d.norm() == 0.0 {
                    break;
                }
                let trial = *zk - p / d;
                if self.eval(trial).norm() < p.norm() {
                    *zk = trial;
                } else {
                    break;
                }
            }
            let residual = self.eval(*zk).norm() / self.scale(*zk).max(f64::MIN_POSITIVE);
            if !(residual <= 1e-12) {
                return Err(Error::NonConvergence { residual });
            }
        }
        Ok(z)
    }

    /// Zeros of `q` clustered by multiplicity, sorted by `(Re, Im)`.
    pub fn turning_points(&self, tol_cluster: f64) -> Result<Vec<TurningPoint>> {
        if self.degree() == 0 {
            return Ok(vec![]);
        }
        let raw = self.roots()?;
        let n = raw.len();
        let dp = self.derivative();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            parent[i] = r;
            r
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = (raw[i] - raw[j]).norm();
                let mid = 0.5 * (raw[i] + raw[j]);
                // Aberth only separates a double root to about sqrt(eps).
                let degenerate = d < 1e-6 * (1.0 + mid.norm())
                    && dp.eval(mid).norm() <= 1e-6 * dp.scale(mid).max(f64::MIN_POSITIVE);
                if d < tol_cluster || degenerate {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: Vec<Vec<C64>> = Vec::new();
        let mut label = vec![usize::MAX; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[label[r]].push(raw[i]);
        }
        let mut tps: Vec<TurningPoint> = groups
            .iter()
            .map(|g| TurningPoint {
                z: g.iter().sum::<C64>() / g.len() as f64,
                multiplicity: g.len(),
                is_real: false,
            })
            .collect();
        if self.is_real() {
            symmetrize_conjugates(&mut tps);
        }
        tps.sort_by(|a, b| {
            a.z.re
                .partial_cmp(&b.z.re)
                .unwrap()
                .then(a.z.im.partial_cmp(&b.z.im).unwrap())
        });
        Ok(tps)
    }

    /// Simple turning points, or `MultipleTurningPoint`.
    pub fn simple_turning_points(&self) -> Result<Vec<TurningPoint>> {
        let tps = self.turning_points(1e-9)?;
        assert_simple(&tps)?;
        Ok(tps)
    }

    /// `x_c` such that `q(x_c + t)` is even in `t`, if any.
    pub fn symmetry_center(&self) -> Option<f64> {
        if !self.is_real() || self.degree() == 0 {
            return None;
        }
        let n = self.degree();
        let c = self.coeffs();
        let xc = -c[n - 1].re / (n as f64 * c[n].re);
        let shifted = self.taylor_shift(C64::new(xc, 0.0));
        let scale = self.scale(C64::new(xc, 0.0)) + shifted.iter().map(|c| c.norm()).sum::<f64>();
        let odd = shifted
            .iter()
            .skip(1)
            .step_by(2)
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        (odd <= 1e-12 * scale).then_some(xc)
    }

    /// Real turning points in increasing order.
    pub fn real_turning_points(&self) -> Result<Vec<f64>> {
        Ok(self
            .simple_turning_points()?
            .iter()
            .filter(|t| t.is_real)
            .map(|t| t.z.re)
            .collect())
    }
}

fn real_tol(z: C64) -> f64 {
    1e-10 * (1.0 + z.norm())
}

fn symmetrize_conjugates(tps: &mut [TurningPoint]) {
    let n = tps.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if tps[i].z.im.abs() <= real_tol(tps[i].z) {
            tps[i].z.im = 0.0;
            tps[i].is_real = true;
            used[i] = true;
        }
    }
    for i in 0..n {
        if used[i] || tps[i].z.im < 0.0 {
            continue;
        }
        let partner = (0..n)
            .filter(|&j| !used[j] && j != i && tps[j].z.im < 0.0)
            .min_by(|&a, &b| {
                let da = (tps[a].z - tps[i].z.conj()).norm();
                let db = (tps[b].z - tps[i].z.conj()).norm();
                da.partial_cmp(&db).unwrap()
            });
        if let Some(j) = partner {
            let z = 0.5 * (tps[i].z + tps[j].z.conj());
            tps[i].z = z;
            tps[j].z = z.conj();
            used[i] = true;
            used[j] = true;
        }
    }
}

pub fn assert_simple(tps: &[TurningPoint]) -> Result<()> {
    match tps.iter().find(|t| t.multiplicity > 1) {
        Some(t) => Err(Error::MultipleTurningPoint(t.z)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quartic_with_imaginary_pair() {
        let p = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let (zs, _) = (p.turning_points(1e-9).unwrap(), ());
        let want = [c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(1.0, 0.0)];
        assert_eq!(zs.len(), 4);
        for (t, w) in zs.iter().zip(want) {
            assert!((t.z - w).norm() < 1e-12, "{} vs {}", t.z, w);
            assert_eq!(t.multiplicity, 1);
        }
        assert!(zs[0].is_real && !zs[1].is_real && zs[3].is_real);
    }

    #[test]
    fn double_root_is_clustered() {
        let p = Poly::from_real_roots(&[1.0, 1.0, -1.0], 1.0).unwrap();
        let tps = p.turning_points(1e-9).unwrap();
        assert_eq!(tps.len(), 2);
        assert_eq!(tps[1].multiplicity, 2);
        assert!((tps[1].z - c(1.0, 0.0)).norm() < 1e-7);
        assert!(matches!(
            assert_simple(&tps),
            Err(Error::MultipleTurningPoint(_))
        ));
    }

    #[test]
    fn linear_potential() {
        let p = Poly::from_real(&[0.0, 1.0]).unwrap();
        let tps = p.turning_points(1e-9).unwrap();
        assert_eq!(tps.len(), 1);
        assert!(tps[0].z.norm() < 1e-15 && tps[0].is_real);
    }

    #[test]
    fn constant_has_none() {
        let p = Poly::from_real(&[3.0]).unwrap();
        assert!(p.turning_points(1e-9).unwrap().is_empty());
    }

    #[test]
    fn eval_and_shift_agree() {
        let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.5], 1.0).unwrap();
        let z0 = c(0.3, -0.7);
        let s = p.taylor_shift(z0);
        let t = c(0.11, 0.05);
        let direct = p.eval(z0 + t);
        let shifted = s.iter().rev().fold(c(0.0, 0.0), |a, &k| a * t + k);
        assert!((direct - shifted).norm() < 1e-13);
        let (v, d) = p.eval_with_derivative(z0);
        assert!((v - s[0]).norm() < 1e-13 && (d - s[1]).norm() < 1e-13);
    }

    #[test]
    fn symmetry_center_detection() {
        let p = Poly::from_real_roots(&[-1.0, 0.0, 2.0, 3.0], 1.0).unwrap();
        assert!((p.symmetry_center().unwrap() - 1.0).abs() < 1e-12);
        let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 3.0], 1.0).unwrap();
        assert!(p.symmetry_center().is_none());
    }
}
