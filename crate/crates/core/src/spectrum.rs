//! Real eigenvalues of `-y'' + λ² q y = 0` on the line by shooting.
//!
//! Solutions decaying at `-∞` and `+∞` are integrated from cutoffs `X_L`,
//! `X_R` to a matching point `x_m`.  Their zero counts plus the Prüfer angle
//! mismatch at `x_m` give a continuous increasing function `g(λ)` that equals
//! `k` exactly at the `k`-th eigenvalue, so every eigenvalue is isolated by
//! counting and then refined by a safeguarded secant method.

use crate::action::{barrier_action, well_action};
use crate::error::{Error, Result};
use crate::ode::{Scalar, State, Taylor};
use crate::poly::Poly;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use twofloat::TwoFloat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Double,
    DoubleDouble,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootConfig {
    pub precision: Precision,
    /// Fixed symmetric cutoff `X`; otherwise chosen from the decay target.
    pub cutoff: Option<f64>,
    pub match_point: Option<f64>,
    /// Required `λ·S(outer turning point, X)`; defaults to 36 or 80.
    pub cutoff_decay: Option<f64>,
    /// Spacing of the initial λ scan; defaults to `π / (4 Σ α_i)`.
    pub grid_step: Option<f64>,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            precision: Precision::Double,
            cutoff: None,
            match_point: None,
            cutoff_decay: None,
            grid_step: None,
        }
    }
}

impl ShootConfig {
    pub fn double_double() -> Self {
        ShootConfig {
            precision: Precision::DoubleDouble,
            ..Default::default()
        }
    }

    fn decay(&self) -> f64 {
        self.cutoff_decay.unwrap_or(match self.precision {
            Precision::Double => 36.0,
            Precision::DoubleDouble => 80.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub n: usize,
    pub lambda: f64,
    /// Low word of the double-double eigenvalue (0 in double precision).
    pub lambda_tail: f64,
    /// Normalised Wronskian mismatch at the returned value.
    pub residual: f64,
    pub bracket: (f64, f64),
    /// 1-based index of the well whose WKB sequence is nearest.
    pub well_tag: usize,
    pub tie: bool,
    /// False when this value could not be separated from a neighbour.
    pub resolved: bool,
}

impl EigenRecord {
    pub fn lambda_dd(&self) -> TwoFloat {
        TwoFloat::new_add(self.lambda, self.lambda_tail)
    }
}

/// Classically allowed intervals `[a, b]` with `q < 0`, left to right.
pub fn wells(p: &Poly) -> Result<Vec<(f64, f64)>> {
    let tps = p.real_turning_points()?;
    Ok(tps
        .windows(2)
        .filter(|w| p.eval_real(0.5 * (w[0] + w[1])) < 0.0)
        .map(|w| (w[0], w[1]))
        .collect())
}

/// Well actions `α_i = ∫ sqrt(-q)` over each well.
pub fn well_actions(p: &Poly) -> Result<Vec<f64>> {
    wells(p)?
        .iter()
        .map(|&(a, b)| well_action(p, a, b))
        .collect()
}

/// `(2n+1)π / (2α)` for `n` in the range.
pub fn wkb_sequence(alpha: f64, n: std::ops::Range<usize>) -> Vec<f64> {
    n.map(|k| (2 * k + 1) as f64 * PI / (2.0 * alpha)).collect()
}

/// Number of WKB levels `(2m+1)π/(2α_i) <= λ` summed over wells.
pub fn wkb_count(alphas: &[f64], lambda: f64) -> usize {
    alphas
        .iter()
        .map(|&a| {
            let t = lambda * 2.0 * a / PI;
            if t < 1.0 {
                0
            } else {
                ((t - 1.0) / 2.0).floor() as usize + 1
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Setup {
    pub real_tps: Vec<f64>,
    pub x_left: f64,
    pub x_right: f64,
    pub x_match: f64,
}

fn check_confining(p: &Poly) -> Result<()> {
    if !p.is_real() {
        return Err(Error::InvalidInput(
            "spectrum needs a real polynomial".into(),
        ));
    }
    if p.degree() % 2 != 0 || p.leading().re <= 0.0 {
        return Err(Error::InvalidInput(
            "q must have even degree and positive leading coefficient".into(),
        ));
    }
    Ok(())
}

/// Smallest `X > a` with `λ ∫_a^X sqrt(q) >= target`, searching in `dir`.
fn decay_cutoff(p: &Poly, a: f64, dir: f64, lambda: f64, target: f64) -> Result<f64> {
    let need = target / lambda;
    let act = |x: f64| -> Result<f64> {
        if dir > 0.0 {
            barrier_action(p, a, x)
        } else {
            barrier_action(p, x, a)
        }
    };
    let mut len = 0.5;
    while act(a + dir * len)? < need {
        len *= 2.0;
        if len > 1e6 {
            return Err(Error::NoBracket("cutoff search diverged".into()));
        }
    }
    let (mut lo, mut hi) = (0.0, len);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if act(a + dir * mid)? < need {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 * hi {
            break;
        }
    }
    Ok(a + dir * hi)
}

impl Setup {
    pub fn new(p: &Poly, lambda: f64, cfg: &ShootConfig, extent: f64) -> Result<Setup> {
        check_confining(p)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "λ = {lambda} must be positive"
            )));
        }
        let real_tps = p.real_turning_points()?;
        if real_tps.len() < 2 {
            return Err(Error::InvalidInput(
                "q has no classically allowed region".into(),
            ));
        }
        let (lo, hi) = (real_tps[0], *real_tps.last().unwrap());
        let (x_left, x_right) = match cfg.cutoff {
            Some(x) => {
                for s in [-x, x] {
                    if !(p.eval_real(s) > 0.0) || x <= lo.abs().max(hi.abs()) {
                        return Err(Error::CutoffTooSmall(x));
                    }
                }
                (-x, x)
            }
            None => {
                let margin = 5.0 * lambda.powf(-2.0 / 3.0);
                let span = 0.5 * (hi - lo);
                let xr = decay_cutoff(p, hi, 1.0, lambda, cfg.decay())?
                    .max(hi + margin.min(2.0 * span + 1.0))
                    .max(extent + 0.5);
                let xl = decay_cutoff(p, lo, -1.0, lambda, cfg.decay())?
                    .min(lo - margin.min(2.0 * span + 1.0))
                    .min(-extent - 0.5);
                (xl, xr)
            }
        };
        let x_match = match cfg.match_point {
            Some(x) => x,
            None if real_tps.len() >= 4 => {
                let m = real_tps.len() / 2;
                0.5 * (real_tps[m - 1] + real_tps[m])
            }
            None => 0.5 * (real_tps[0] + real_tps[1]),
        };
        if !(x_left < x_match && x_match < x_right) {
            return Err(Error::InvalidInput(
                "matching point outside the cutoffs".into(),
            ));
        }
        Ok(Setup {
            real_tps,
            x_left,
            x_right,
            x_match,
        })
    }
}

/// Decaying WKB data at a cutoff: `y = 1`, `y'/y = ∓λ sqrt(q) - q'/(4q)`.
pub(crate) fn boundary_state<S: Scalar>(p: &Poly, x: f64, lambda: f64, right: bool) -> State<S> {
    let (q, dq) = p.eval_with_derivative(Complex64::new(x, 0.0));
    let (q, dq) = (q.re, dq.re);
    let sign = if right { -1.0 } else { 1.0 };
    let ld = sign * lambda * q.sqrt() - dq / (4.0 * q);
    State::new(S::from_f64(1.0), S::from_f64(ld))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    /// Continuous node function `nodes + frac`; equals `k` at the `k`-th
    /// eigenvalue.
    pub g: f64,
    pub nodes: usize,
    /// Prüfer angle mismatch over π, in `(-1, 1)`.
    pub frac: f64,
    /// `sin` of the Prüfer angle mismatch (normalised Wronskian).
    pub w: f64,
}

fn reduce(phi: f64, closed_top: bool) -> f64 {
    let mut r = phi.rem_euclid(PI);
    if closed_top && r == 0.0 {
        r = PI;
    }
    r
}

fn mismatch_at<S: Scalar>(p: &Poly, base: f64, offset: f64, setup: &Setup) -> Result<Mismatch> {
    let lam_s = S::from_f64(base) + S::from_f64(offset);
    let lam = base + offset;
    let t = Taylor::<S>::with_lambda(p, lam_s);
    let mut left = boundary_state::<S>(p, setup.x_left, lam, false);
    let mut right = boundary_state::<S>(p, setup.x_right, lam, true);
    let xm = S::from_f64(setup.x_match);
    let tl = t.propagate(S::from_f64(setup.x_left), xm, &mut left)?;
    let tr = t.propagate(S::from_f64(setup.x_right), xm, &mut right)?;
    let f = |s: S| s.to_c64().re;
    let phi_l = reduce(f(left.y).atan2(f(left.dy) / lam), false);
    let phi_r = reduce(f(right.y).atan2(f(right.dy) / lam), true);
    let cross = f((left.y * right.dy - left.dy * right.y).div_f64(lam));
    let dot = f(left.y * right.y + (left.dy * right.dy).div_f64(lam * lam));
    let mut fine = cross.atan2(dot);
    if fine > 0.5 * PI {
        fine -= PI;
    } else if fine <= -0.5 * PI {
        fine += PI;
    }
    let coarse = phi_l - phi_r;
    let d = fine + ((coarse - fine) / PI).round() * PI;
    let nl = f(left.y).hypot(f(left.dy) / lam);
    let nr = f(right.y).hypot(f(right.dy) / lam);
    let nodes = tl.sign_changes + tr.sign_changes;
    Ok(Mismatch {
        g: nodes as f64 + d / PI,
        nodes,
        frac: d / PI,
        w: cross / (nl * nr),
    })
}

impl Mismatch {
    /// `g - k` without cancellation.
    pub fn level(&self, k: f64) -> f64 {
        (self.nodes as f64 - k) + self.frac
    }
}

pub(crate) fn mismatch(
    p: &Poly,
    base: f64,
    offset: f64,
    setup: &Setup,
    precision: Precision,
) -> Result<Mismatch> {
    match precision {
        Precision::Double => mismatch_at::<f64>(p, base, offset, setup),
        Precision::DoubleDouble => mismatch_at::<TwoFloat>(p, base, offset, setup),
    }
}

/// Normalised Wronskian `w(λ)` of the two decaying solutions at `x_m`.
pub fn shoot_miss(p: &Poly, lambda: f64, cfg: &ShootConfig) -> Result<Mismatch> {
    let setup = Setup::new(p, lambda, cfg, 0.0)?;
    mismatch(p, lambda, 0.0, &setup, cfg.precision)
}

/// Number of eigenvalues below `λ`.
pub fn eigen_count(p: &Poly, lambda: f64, cfg: &ShootConfig) -> Result<usize> {
    let m = shoot_miss(p, lambda, cfg)?;
    Ok((m.g.floor() + 1.0).max(0.0) as usize)
}

struct Root {
    base: f64,
    offset: f64,
    lo: f64,
    hi: f64,
    w: f64,
}

/// Solves `g(base + t) = k` for `t` in `[lo, hi]` with `h(lo) < 0 <= h(hi)`.
fn solve_level(
    p: &Poly,
    cfg: &ShootConfig,
    base: f64,
    k: f64,
    mut lo: f64,
    mut hi: f64,
    width_tol: f64,
) -> Result<Root> {
    // One cutoff for the whole bracket keeps g exactly continuous in λ.
    let setup = Setup::new(p, base + lo, cfg, 0.0)?;
    let eval = |t: f64| mismatch(p, base, t, &setup, cfg.precision);
    let mut mlo = eval(lo)?;
    let mut mhi = eval(hi)?;
    let (mut flo, mut fhi) = (mlo.level(k), mhi.level(k));
    let mut side = 0i32;
    for it in 0..300 {
        if hi - lo <= width_tol {
            break;
        }
        let secant = hi - fhi * (hi - lo) / (fhi - flo);
        // Every third step bisects, so near-discontinuities cannot stall it.
        let t = if it % 3 == 2 || !(secant > lo && secant < hi) {
            0.5 * (lo + hi)
        } else {
            secant
        };
        if t <= lo || t >= hi {
            break;
        }
        let m = eval(t)?;
        let f = m.level(k);
        if f < 0.0 {
            lo = t;
            flo = f;
            mlo = m;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            fhi = f;
            mhi = m;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if f == 0.0 {
            break;
        }
    }
    let (offset, w) = if mlo.level(k).abs() < mhi.level(k).abs() {
        (lo, mlo.w)
    } else {
        (hi, mhi.w)
    };
    Ok(Root {
        base,
        offset,
        lo: base + lo,
        hi: base + hi,
        w,
    })
}

const UNRESOLVED_RESIDUAL: f64 = 1e-2;

/// All eigenvalues `λ <= lambda_max`, ascending.
pub fn eigenvalues(p: &Poly, lambda_max: f64, cfg: &ShootConfig) -> Result<Vec<EigenRecord>> {
    check_confining(p)?;
    let alphas = well_actions(p)?;
    if alphas.is_empty() {
        return Err(Error::InvalidInput("q has no well".into()));
    }
    let total: f64 = alphas.iter().sum();
    let step = cfg.grid_step.unwrap_or(PI / (4.0 * total));
    let g_at = |lam: f64| -> Result<f64> {
        let setup = Setup::new(p, lam, cfg, 0.0)?;
        Ok(mismatch(p, lam, 0.0, &setup, cfg.precision)?.g)
    };
    let mut lam_lo = 0.25 * PI / (2.0 * total);
    let mut g_lo = g_at(lam_lo)?;
    while g_lo >= 0.0 {
        lam_lo *= 0.5;
        if lam_lo < 1e-8 {
            return Err(Error::NoBracket("no λ below the ground state found".into()));
        }
        g_lo = g_at(lam_lo)?;
    }
    let mut grid = vec![(lam_lo, g_lo)];
    let mut lam = lam_lo;
    while lam < lambda_max {
        lam = (lam + step).min(lambda_max);
        grid.push((lam, g_at(lam)?));
    }
    let g_max = grid.last().unwrap().1;
    let count = (g_max.floor() + 1.0).max(0.0) as usize;
    let expected = wkb_count(&alphas, lambda_max);
    if count.abs_diff(expected) >= 2 {
        return Err(Error::MissedEigenvalue {
            found: count,
            expected,
        });
    }
    let mut out: Vec<EigenRecord> = Vec::with_capacity(count);
    for k in 0..count {
        let kf = k as f64;
        let cell = grid
            .windows(2)
            .find(|w| w[0].1 < kf && w[1].1 >= kf)
            .ok_or_else(|| Error::NoBracket(format!("level {k}")))?;
        let (a, b) = (cell[0].0, cell[1].0);
        let mut root = solve_level(p, cfg, 0.0, kf, a, b, 4.0 * f64::EPSILON * b)?;
        let mut tail = 0.0;
        if cfg.precision == Precision::DoubleDouble {
            let base = root.base + root.offset;
            root = solve_level(
                p,
                cfg,
                base,
                kf,
                root.lo - base,
                root.hi - base,
                1e-31 * base,
            )?;
            let v = TwoFloat::new_add(root.base, root.offset);
            tail = v.lo();
        }
        let lambda = root.base + root.offset;
        let (well_tag, tie) = tag_well(&alphas, lambda);
        out.push(EigenRecord {
            n: k,
            lambda,
            lambda_tail: tail,
            residual: root.w.abs(),
            bracket: (root.lo, root.hi),
            well_tag,
            tie,
            resolved: true,
        });
    }
    // A large residual means the value sits below the working precision.
    for e in out.iter_mut() {
        e.resolved = e.residual <= UNRESOLVED_RESIDUAL;
    }
    for i in 1..out.len() {
        if out[i].lambda_dd() <= out[i - 1].lambda_dd() {
            out[i].resolved = false;
            out[i - 1].resolved = false;
        }
    }
    Ok(out)
}

/// Nearest WKB sequence (1-based well index) and whether two are equally near.
pub fn tag_well(alphas: &[f64], lambda: f64) -> (usize, bool) {
    let dist: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let t = (lambda * 2.0 * a / PI - 1.0) / 2.0;
            let m = t.round().max(0.0);
            ((2.0 * m + 1.0) * PI / (2.0 * a) - lambda).abs()
        })
        .collect();
    let best = (0..dist.len())
        .min_by(|&i, &j| dist[i].partial_cmp(&dist[j]).unwrap())
        .unwrap();
    let tie = (0..dist.len())
        .any(|j| j != best && (dist[j] - dist[best]).abs() <= 1e-9 * lambda.max(1.0));
    (best + 1, tie)
}

/// `λ·2α/π - (2m+1)` for the nearest level `m` of the given well.
pub fn quantization_defect(alpha: f64, lambda: f64) -> f64 {
    let t = lambda * 2.0 * alpha / PI;
    let m = ((t - 1.0) / 2.0).round().max(0.0);
    t - (2.0 * m + 1.0)
}

/// Splittings `λ_{2k+1} - λ_{2k}` of the lowest `pairs` doublets, computed
/// from double-double eigenvalues.
pub fn pair_splittings(p: &Poly, pairs: usize, cfg: &ShootConfig) -> Result<Vec<f64>> {
    let alphas = well_actions(p)?;
    let alpha = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let lam_max = (2 * pairs) as f64 * PI / (2.0 * alpha);
    let cfg = ShootConfig {
        precision: Precision::DoubleDouble,
        ..cfg.clone()
    };
    let ev = eigenvalues(p, lam_max, &cfg)?;
    if ev.len() < 2 * pairs {
        return Err(Error::MissedEigenvalue {
            found: ev.len(),
            expected: 2 * pairs,
        });
    }
    Ok((0..pairs)
        .map(|k| (ev[2 * k + 1].lambda_dd() - ev[2 * k].lambda_dd()).hi())
        .collect())
}

/// Moves root `free` of a real quartic until `α_1/α_2 = target`.
pub fn calibrate_ratio(roots: [f64; 4], free: usize, target: f64) -> Result<[f64; 4]> {
    if free > 3 || !(target > 0.0) {
        return Err(Error::InvalidInput(
            "free index must be 0..=3 and target positive".into(),
        ));
    }
    if roots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "roots must be strictly increasing".into(),
        ));
    }
    let ratio = |x: f64| -> Result<f64> {
        let mut r = roots;
        r[free] = x;
        let p = Poly::from_real_roots(&r, 1.0)?;
        Ok(well_action(&p, r[0], r[1])? / well_action(&p, r[2], r[3])?)
    };
    let x0 = roots[free];
    let f0 = ratio(x0)? - target;
    if f0.abs() <= 1e-13 * target {
        return Ok(roots);
    }
    let lower = if free == 0 {
        f64::NEG_INFINITY
    } else {
        roots[free - 1]
    };
    let upper = if free == 3 {
        f64::INFINITY
    } else {
        roots[free + 1]
    };
    let span = roots[3] - roots[0];
    // Find a sign change walking out from x0 in either direction.
    let mut bracket = None;
    'dirs: for dir in [1.0, -1.0] {
        let limit = if dir > 0.0 { upper } else { lower };
        let mut prev = x0;
        let mut step = 1e-3 * span;
        for _ in 0..80 {
            let mut x = prev + dir * step;
            if limit.is_finite() && (x - limit) * dir >= 0.0 {
                x = prev + 0.5 * (limit - prev);
            }
            if x == prev {
                break;
            }
            let f = ratio(x)? - target;
            if f.signum() != f0.signum() {
                bracket = Some(if dir > 0.0 { (prev, x) } else { (x, prev) });
                break 'dirs;
            }
            prev = x;
            step *= 2.0;
        }
    }
    let (mut a, mut b) = bracket.ok_or_else(|| {
        Error::NoBracket(format!(
            "ratio {target} not reachable by moving root {free}"
        ))
    })?;
    let mut fa = ratio(a)? - target;
    let mut fb = ratio(b)? - target;
    for it in 0..200 {
        let s = b - fb * (b - a) / (fb - fa);
        let x = if it % 3 == 2 || !(s > a.min(b) && s < a.max(b)) {
            0.5 * (a + b)
        } else {
            s
        };
        let fx = ratio(x)? - target;
        if fx.abs() <= 1e-13 * target || (b - a).abs() < 1e-15 * (1.0 + x.abs()) {
            let mut r = roots;
            r[free] = x;
            return Ok(r);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Err(Error::NonConvergence {
        residual: fa.abs().min(fb.abs()),
    })
}
