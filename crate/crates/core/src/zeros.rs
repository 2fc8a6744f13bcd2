//! Complex zeros of eigenfunctions by the argument principle.
//!
//! The eigenfunction is fixed on the real axis by shooting (the anchor) and
//! continued into the plane along lattice columns.  Every lattice edge carries
//! a continuously tracked phase increment, snapped to the phase difference of
//! its end nodes, so cell windings add up exactly.  Cells with winding one are
//! solved by Newton's method; larger windings are split into quadrants.

use crate::error::{Error, Result};
use crate::ode::{State, Taylor, Trace};
use crate::poly::Poly;
use crate::spectrum::{boundary_state, tag_well, well_actions, wells, Setup, ShootConfig};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C64 = Complex64;
type CState = State<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Rect> {
        if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "degenerate region [{x0},{x1}]x[{y0},{y1}]"
            )));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    fn inflated(&self, d: f64) -> Rect {
        // Asymmetric so no lattice line lands back on a symmetric zero.
        Rect {
            x0: self.x0 - d,
            x1: self.x1 + 0.731 * d,
            y0: self.y0 - 0.613 * d,
            y1: self.y1 + d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroConfig {
    /// Lattice pitch is `pitch_factor / (λ sqrt(max|q|))`, capped by the region.
    pub pitch_factor: f64,
    /// Newton stops when `|y| / hypot(|y|, |y'|/λ)` falls below this.
    pub newton_tol: f64,
    pub max_depth: usize,
    pub max_retries: usize,
    pub shoot: ShootConfig,
}

impl Default for ZeroConfig {
    fn default() -> Self {
        ZeroConfig {
            pitch_factor: 8.0,
            newton_tol: 1e-10,
            max_depth: 40,
            max_retries: 6,
            shoot: ShootConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub z: C64,
    pub residual: f64,
    /// A small box around the zero has winding exactly one.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub lambda: f64,
    pub n: usize,
    /// Region actually searched (may be slightly inflated).
    pub region: Rect,
    pub winding: i64,
    pub zeros: Vec<Zero>,
}

impl ZeroSet {
    pub fn points(&self) -> Vec<C64> {
        self.zeros.iter().map(|z| z.z).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCount {
    pub region: Rect,
    pub winding: i64,
}

#[derive(Debug, Clone, PartialEq)]
enum AnchorMode {
    Matched,
    Parity { center: f64, odd: bool },
}

/// The `n`-th eigenfunction on the real axis.
#[derive(Debug, Clone)]
pub struct EigenAnchor {
    p: Poly,
    lambda: f64,
    n: usize,
    setup: Setup,
    mode: AnchorMode,
}

fn project(from: &CState, onto: &CState, lambda: f64) -> CState {
    // Scale `from` to best match `onto` in the (y, y'/λ) norm.
    let num = from.y.conj() * onto.y + from.dy.conj() * onto.dy / (lambda * lambda);
    let den = from.y.norm_sqr() + from.dy.norm_sqr() / (lambda * lambda);
    let c = num / den;
    State {
        y: from.y * c,
        dy: from.dy * c,
        exp2: onto.exp2,
    }
}

impl EigenAnchor {
    /// `extent` is the largest `|x|` at which states will be requested.
    pub fn new(p: &Poly, lambda: f64, n: usize, cfg: &ShootConfig, extent: f64) -> Result<Self> {
        let mut setup = Setup::new(p, lambda, cfg, extent)?;
        let mode = match p.symmetry_center() {
            Some(center) => AnchorMode::Parity {
                center,
                odd: n % 2 == 1,
            },
            None => AnchorMode::Matched,
        };
        if mode == AnchorMode::Matched && cfg.match_point.is_none() {
            // Across a barrier the two sides agree only to the resolution of
            // λ, so match inside the well that carries the state.
            let wells = wells(p)?;
            if wells.len() > 1 {
                let (tag, _) = tag_well(&well_actions(p)?, lambda);
                let (a, b) = wells[tag - 1];
                setup.x_match = 0.5 * (a + b);
            }
        }
        Ok(EigenAnchor {
            p: p.clone(),
            lambda,
            n,
            setup,
            mode,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn taylor(&self) -> Taylor<C64> {
        Taylor::new(&self.p, self.lambda)
    }

    /// Integrates from `start` (state `st`) through the points `xs` (in
    /// travel order), recording the state at each.
    fn sweep(
        &self,
        t: &Taylor<C64>,
        start: f64,
        st: CState,
        xs: &[f64],
    ) -> Result<(Vec<CState>, CState)> {
        let mut st = st;
        let mut cur = start;
        let mut out = Vec::with_capacity(xs.len());
        for &x in xs {
            propagate_real(t, cur, x, &mut st)?;
            out.push(st);
            cur = x;
        }
        Ok((out, st))
    }

    /// States on one side: integrate inward from the cutoff to `join`,
    /// recording at `xs` (all strictly between cutoff and join).
    fn outer(
        &self,
        t: &Taylor<C64>,
        right: bool,
        xs: &[f64],
        join: f64,
    ) -> Result<(Vec<CState>, CState)> {
        let cut = if right {
            self.setup.x_right
        } else {
            self.setup.x_left
        };
        let st = boundary_state::<f64>(&self.p, cut, self.lambda, right).to_c64();
        let (rec, st) = self.sweep(t, cut, st, xs)?;
        let mut st = st;
        let last = xs.last().copied().unwrap_or(cut);
        propagate_real(t, last, join, &mut st)?;
        Ok((rec, st))
    }

    /// Eigenfunction states at the real points `xs`.
    pub fn states_at(&self, xs: &[f64]) -> Result<Vec<CState>> {
        for &x in xs {
            if !(x > self.setup.x_left && x < self.setup.x_right) {
                return Err(Error::InvalidInput(format!(
                    "anchor point {x} outside the cutoffs"
                )));
            }
        }
        let t = self.taylor();
        match self.mode {
            AnchorMode::Matched => self.states_matched(&t, xs),
            AnchorMode::Parity { center, odd } => self.states_parity(&t, xs, center, odd),
        }
    }

    fn states_matched(&self, t: &Taylor<C64>, xs: &[f64]) -> Result<Vec<CState>> {
        let xm = self.setup.x_match;
        let mut right: Vec<(usize, f64)> = xs
            .iter()
            .cloned()
            .enumerate()
            .filter(|p| p.1 >= xm)
            .collect();
        right.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let mut left: Vec<(usize, f64)> = xs
            .iter()
            .cloned()
            .enumerate()
            .filter(|p| p.1 < xm)
            .collect();
        left.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let rx: Vec<f64> = right.iter().map(|p| p.1).collect();
        let lx: Vec<f64> = left.iter().map(|p| p.1).collect();
        let (rrec, rm) = self.outer(t, true, &rx, xm)?;
        let (lrec, lm) = self.outer(t, false, &lx, xm)?;
        let scaled = project(&lm, &rm, self.lambda);
        let ratio = scaled.y / lm.y;
        let ratio = if ratio.norm().is_finite() {
            ratio
        } else {
            scaled.dy / lm.dy
        };
        let mut out = vec![State::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); xs.len()];
        for ((i, _), s) in right.iter().zip(rrec) {
            out[*i] = s;
        }
        for ((i, _), s) in left.iter().zip(lrec) {
            let mut v = State {
                y: s.y * ratio,
                dy: s.dy * ratio,
                exp2: s.exp2 + rm.exp2 - lm.exp2,
            };
            v.normalize();
            out[*i] = v;
        }
        Ok(out)
    }

    fn states_parity(
        &self,
        t: &Taylor<C64>,
        xs: &[f64],
        center: f64,
        odd: bool,
    ) -> Result<Vec<CState>> {
        let tps = &self.setup.real_tps;
        let n = tps.len();
        let join = (0.5 * (tps[n - 2] + tps[n - 1])).max(center);
        // Distances from the centre, evaluated on the right half only.
        let mut ds: Vec<(usize, f64)> =
            xs.iter().map(|&x| (x - center).abs()).enumerate().collect();
        ds.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let inner: Vec<(usize, f64)> = ds
            .iter()
            .cloned()
            .filter(|p| center + p.1 <= join)
            .collect();
        let mut outer: Vec<(usize, f64)> =
            ds.iter().cloned().filter(|p| center + p.1 > join).collect();
        outer.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let start = if odd {
            State::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
        } else {
            State::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        };
        let ix: Vec<f64> = inner.iter().map(|p| center + p.1).collect();
        let (irec, ist) = self.sweep(t, center, start, &ix)?;
        let mut ist = ist;
        propagate_real(t, ix.last().copied().unwrap_or(center), join, &mut ist)?;
        let ox: Vec<f64> = outer.iter().map(|p| center + p.1).collect();
        let (orec, om) = self.outer(t, true, &ox, join)?;
        let m = project(&om, &ist, self.lambda);
        let ratio = if om.y.norm() > om.dy.norm() / self.lambda {
            m.y / om.y
        } else {
            m.dy / om.dy
        };
        let mut right = vec![State::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); xs.len()];
        for ((i, _), s) in inner.iter().zip(irec) {
            right[*i] = s;
        }
        for ((i, _), s) in outer.iter().zip(orec) {
            let mut v = State {
                y: s.y * ratio,
                dy: s.dy * ratio,
                exp2: s.exp2 + ist.exp2 - om.exp2,
            };
            v.normalize();
            right[*i] = v;
        }
        let sign = if odd { -1.0 } else { 1.0 };
        Ok(xs
            .iter()
            .zip(right)
            .map(|(&x, s)| {
                if x < center {
                    State {
                        y: s.y * sign,
                        dy: -s.dy * sign,
                        exp2: s.exp2,
                    }
                } else {
                    s
                }
            })
            .collect())
    }
}

fn propagate_real(t: &Taylor<C64>, a: f64, b: f64, st: &mut CState) -> Result<Trace> {
    if a == b {
        return Ok(Trace::default());
    }
    // Real-axis sweeps pass through real zeros, so no phase limit here.
    let mut free = t.clone();
    free.phase_limit = f64::INFINITY;
    free.propagate(C64::new(a, 0.0), C64::new(b, 0.0), st)
}

fn rel_size(st: &CState, lambda: f64) -> f64 {
    let y = st.y.norm();
    y / y.hypot(st.dy.norm() / lambda)
}

/// Phase increment along an edge, snapped to the node phase difference.
fn snap(integrated: f64, from: &CState, to: &CState) -> Result<f64> {
    let node = (to.y / from.y).arg();
    let k = ((integrated - node) / (2.0 * PI)).round();
    let snapped = node + 2.0 * PI * k;
    if (snapped - integrated).abs() > 0.5 || !snapped.is_finite() {
        return Err(Error::PhaseAliasing(format!(
            "edge phase {integrated:.6} inconsistent with node difference {node:.6}"
        )));
    }
    Ok(snapped)
}

const NEAR_ZERO: f64 = 1e-9;

#[derive(Debug)]
enum Attempt<T> {
    Done(T),
    Retry,
}

struct Edge {
    to: CState,
    phase: f64,
}

struct Solver<'a> {
    t: Taylor<C64>,
    lambda: f64,
    cfg: &'a ZeroConfig,
}

impl Solver<'_> {
    fn edge(&self, a: C64, b: C64, st: &CState) -> Result<Attempt<Edge>> {
        let mut s = *st;
        let tr = match self.t.propagate(a, b, &mut s) {
            Ok(tr) => tr,
            Err(Error::StepUnderflow(_)) => return Ok(Attempt::Retry),
            Err(e) => return Err(e),
        };
        if tr.min_rel < NEAR_ZERO || rel_size(st, self.lambda) < NEAR_ZERO {
            return Ok(Attempt::Retry);
        }
        Ok(Attempt::Done(Edge {
            to: s,
            phase: tr.phase,
        }))
    }

    fn edge_to(&self, a: C64, b: C64, st: &CState, known: &CState) -> Result<Attempt<f64>> {
        match self.edge(a, b, st)? {
            Attempt::Done(e) => Ok(Attempt::Done(snap(e.phase, st, known)?)),
            Attempt::Retry => Ok(Attempt::Retry),
        }
    }
}

/// One lattice cell with corner states and oriented edge phases
/// (bottom: ll→lr, right: lr→ur, top: ul→ur, left: ll→ul).
#[derive(Clone)]
struct Cell {
    z: [C64; 4],
    s: [CState; 4],
    ph: [f64; 4],
}

impl Cell {
    fn winding(&self) -> Result<i64> {
        let w = (self.ph[0] + self.ph[1] - self.ph[2] - self.ph[3]) / (2.0 * PI);
        let r = w.round();
        if (w - r).abs() > 1e-6 || r < 0.0 {
            return Err(Error::PhaseAliasing(format!("cell winding {w}")));
        }
        Ok(r as i64)
    }

    fn min_side(&self) -> f64 {
        (self.z[1] - self.z[0])
            .norm()
            .min((self.z[2] - self.z[0]).norm())
    }
}

struct Lattice {
    xs: Vec<f64>,
    ys: Vec<f64>,
    states: Vec<CState>,
    /// Vertical edge (j, k) → (j, k+1).
    vph: Vec<f64>,
    /// Horizontal edge (j, k) → (j+1, k).
    hph: Vec<f64>,
}

impl Lattice {
    fn idx(&self, j: usize, k: usize) -> usize {
        j * self.ys.len() + k
    }

    fn cell(&self, j: usize, k: usize) -> Cell {
        let ny = self.ys.len();
        let (a, b, c, d) = (
            self.idx(j, k),
            self.idx(j + 1, k),
            self.idx(j, k + 1),
            self.idx(j + 1, k + 1),
        );
        let vidx = |j: usize, k: usize| j * (ny - 1) + k;
        Cell {
            z: [
                C64::new(self.xs[j], self.ys[k]),
                C64::new(self.xs[j + 1], self.ys[k]),
                C64::new(self.xs[j], self.ys[k + 1]),
                C64::new(self.xs[j + 1], self.ys[k + 1]),
            ],
            s: [
                self.states[a],
                self.states[b],
                self.states[c],
                self.states[d],
            ],
            ph: [
                self.hph[a],
                self.vph[vidx(j + 1, k)],
                self.hph[c],
                self.vph[vidx(j, k)],
            ],
        }
    }
}

/// Odd number of lattice lines centred on the region, so none falls on the
/// centre line of a symmetric region.
fn centered_grid(lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
    let mut n = ((hi - lo) / pitch).ceil().max(1.0) as usize;
    if n % 2 == 0 {
        n += 1;
    }
    let c = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..=n)
        .map(|j| c + half * (2.0 * j as f64 - n as f64) / n as f64)
        .collect()
}

fn max_abs_q(p: &Poly, r: &Rect) -> f64 {
    let b = Rect {
        x0: r.x0,
        x1: r.x1,
        y0: r.y0.min(0.0),
        y1: r.y1.max(0.0),
    };
    let mut m: f64 = 0.0;
    let n = 200;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let x = b.x0 + t * b.width();
        let y = b.y0 + t * b.height();
        for z in [
            C64::new(x, b.y0),
            C64::new(x, b.y1),
            C64::new(b.x0, y),
            C64::new(b.x1, y),
        ] {
            m = m.max(p.eval(z).norm());
        }
    }
    m.max(1e-300)
}

fn build_lattice(
    p: &Poly,
    anchor: &EigenAnchor,
    solver: &Solver,
    region: &Rect,
) -> Result<Attempt<Lattice>> {
    let lambda = anchor.lambda;
    let m = max_abs_q(p, region);
    let pitch = (solver.cfg.pitch_factor / (lambda * m.sqrt()))
        .min(region.width() / 8.0)
        .min(region.height() / 8.0);
    let xs = centered_grid(region.x0, region.x1, pitch);
    let ys = centered_grid(region.y0, region.y1, pitch);
    let base = anchor.states_at(&xs)?;
    if base.iter().any(|s| rel_size(s, lambda) < NEAR_ZERO) {
        return Ok(Attempt::Retry);
    }
    // Start row: the real axis if it lies in the region's y range, else the
    // nearest edge.
    let ny = ys.len();
    let columns: Vec<Result<Option<(Vec<CState>, Vec<f64>)>>> = xs
        .par_iter()
        .zip(base.par_iter())
        .map(|(&x, &s0)| column(solver, x, s0, &ys))
        .collect();
    let mut states = Vec::with_capacity(xs.len() * ny);
    let mut vph = Vec::with_capacity(xs.len() * (ny - 1));
    for c in columns {
        match c? {
            Some((s, v)) => {
                states.extend(s);
                vph.extend(v);
            }
            None => return Ok(Attempt::Retry),
        }
    }
    let mut lat = Lattice {
        xs,
        ys,
        states,
        vph,
        hph: vec![],
    };
    let nx = lat.xs.len();
    let hph: Vec<Result<Option<f64>>> = (0..nx * ny)
        .into_par_iter()
        .map(|i| {
            let (j, k) = (i / ny, i % ny);
            if j + 1 == nx {
                return Ok(Some(0.0));
            }
            let a = C64::new(lat.xs[j], lat.ys[k]);
            let b = C64::new(lat.xs[j + 1], lat.ys[k]);
            match solver.edge_to(a, b, &lat.states[i], &lat.states[i + ny])? {
                Attempt::Done(ph) => Ok(Some(ph)),
                Attempt::Retry => Ok(None),
            }
        })
        .collect();
    let mut out = Vec::with_capacity(nx * ny);
    for h in hph {
        match h? {
            Some(v) => out.push(v),
            None => return Ok(Attempt::Retry),
        }
    }
    lat.hph = out;
    Ok(Attempt::Done(lat))
}

/// States at `(x, y_k)` for all rows and phase increments between rows,
/// integrating vertically from the real axis.
fn column(
    solver: &Solver,
    x: f64,
    s0: CState,
    ys: &[f64],
) -> Result<Option<(Vec<CState>, Vec<f64>)>> {
    let ny = ys.len();
    let mut states = vec![s0; ny];
    let mut up = vec![0.0; ny - 1];
    let z = |y: f64| C64::new(x, y);
    let first_up = ys.iter().position(|&y| y >= 0.0).unwrap_or(ny);
    // Upward from the real axis.
    let mut st = s0;
    let mut cur = 0.0;
    for k in first_up..ny {
        let tr = match solver.t.propagate(z(cur), z(ys[k]), &mut st) {
            Ok(tr) if tr.min_rel >= NEAR_ZERO => tr,
            Ok(_) | Err(Error::StepUnderflow(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if k > first_up {
            up[k - 1] = tr.phase;
        }
        states[k] = st;
        cur = ys[k];
    }
    // Downward from the real axis.
    let mut st = s0;
    let mut cur = 0.0;
    for k in (0..first_up).rev() {
        let tr = match solver.t.propagate(z(cur), z(ys[k]), &mut st) {
            Ok(tr) if tr.min_rel >= NEAR_ZERO => tr,
            Ok(_) | Err(Error::StepUnderflow(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if k + 1 < first_up {
            up[k] = -tr.phase;
        }
        states[k] = st;
        cur = ys[k];
    }
    // The edge straddling the real axis.
    if first_up > 0 && first_up < ny {
        let k = first_up - 1;
        match solver.edge(z(ys[k]), z(ys[k + 1]), &states[k])? {
            Attempt::Done(e) => up[k] = e.phase,
            Attempt::Retry => return Ok(None),
        }
    }
    for k in 0..ny - 1 {
        up[k] = snap(up[k], &states[k], &states[k + 1])?;
    }
    Ok(Some((states, up)))
}

impl Solver<'_> {
    fn newton(&self, start: C64, st: CState, cell: &Cell) -> Result<Option<Zero>> {
        let mut z = start;
        let mut st = st;
        let size = cell.min_side();
        for _ in 0..60 {
            let step = st.y / st.dy;
            if !step.norm().is_finite() || step.norm() > 2.0 * size {
                return Ok(None);
            }
            let next = z - step;
            self.t.clone_free().propagate(z, next, &mut st)?;
            z = next;
            let rel = rel_size(&st, self.lambda);
            if rel < self.cfg.newton_tol || step.norm() < 1e-15 * (1.0 + z.norm()) {
                // One more step to polish.
                let step = st.y / st.dy;
                if step.norm().is_finite() && step.norm() > 0.0 {
                    let next = z - step;
                    let mut s2 = st;
                    self.t.clone_free().propagate(z, next, &mut s2)?;
                    if rel_size(&s2, self.lambda) <= rel {
                        z = next;
                        st = s2;
                    }
                }
                let margin = 1e-9 * size;
                let inside = z.re >= cell.z[0].re - margin
                    && z.re <= cell.z[1].re + margin
                    && z.im >= cell.z[0].im - margin
                    && z.im <= cell.z[2].im + margin;
                if !inside {
                    return Ok(None);
                }
                let r = rel_size(&st, self.lambda);
                let verified = self.verify(z, &st, cell)?;
                return Ok(Some(Zero {
                    z,
                    residual: r,
                    verified,
                }));
            }
        }
        Ok(None)
    }

    /// Winding of a small box around `z` that stays inside the cell.
    fn verify(&self, z: C64, st: &CState, cell: &Cell) -> Result<bool> {
        let d = [
            z.re - cell.z[0].re,
            cell.z[1].re - z.re,
            z.im - cell.z[0].im,
            cell.z[2].im - z.im,
        ]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
        let r = 0.5 * d.max(0.0);
        if r <= 1e-12 * (1.0 + z.norm()) {
            return Ok(false);
        }
        let corners = [
            z + C64::new(-r, -r),
            z + C64::new(r, -r),
            z + C64::new(r, r),
            z + C64::new(-r, r),
            z + C64::new(-r, -r),
        ];
        let t = self.t.clone_free();
        let mut s = *st;
        t.propagate(z, corners[0], &mut s)?;
        let mut total = 0.0;
        for w in corners.windows(2) {
            total += self.t.propagate(w[0], w[1], &mut s)?.phase;
        }
        Ok(((total / (2.0 * PI)) - 1.0).abs() < 1e-3)
    }

    fn split(&self, cell: &Cell, frac: f64) -> Result<Attempt<[Cell; 4]>> {
        let [ll, lr, ul, ur] = cell.z;
        let bm = ll + (lr - ll) * frac;
        let tm = ul + (ur - ul) * frac;
        let lm = ll + (ul - ll) * frac;
        let rm = lr + (ur - lr) * frac;
        let c = C64::new(bm.re, lm.im);
        macro_rules! go {
            ($e:expr) => {
                match $e? {
                    Attempt::Done(v) => v,
                    Attempt::Retry => return Ok(Attempt::Retry),
                }
            };
        }
        let b1 = go!(self.edge(ll, bm, &cell.s[0]));
        let t1 = go!(self.edge(ul, tm, &cell.s[2]));
        let l1 = go!(self.edge(ll, lm, &cell.s[0]));
        let r1 = go!(self.edge(lr, rm, &cell.s[1]));
        let lc = go!(self.edge(lm, c, &l1.to));
        let s_bm = b1.to;
        let s_tm = t1.to;
        let s_lm = l1.to;
        let s_rm = r1.to;
        let s_c = lc.to;
        let ph_b1 = snap(b1.phase, &cell.s[0], &s_bm)?;
        let ph_t1 = snap(t1.phase, &cell.s[2], &s_tm)?;
        let ph_l1 = snap(l1.phase, &cell.s[0], &s_lm)?;
        let ph_r1 = snap(r1.phase, &cell.s[1], &s_rm)?;
        let ph_lc = snap(lc.phase, &s_lm, &s_c)?;
        let ph_b2 = go!(self.edge_to(bm, lr, &s_bm, &cell.s[1]));
        let ph_t2 = go!(self.edge_to(tm, ur, &s_tm, &cell.s[3]));
        let ph_l2 = go!(self.edge_to(lm, ul, &s_lm, &cell.s[2]));
        let ph_r2 = go!(self.edge_to(rm, ur, &s_rm, &cell.s[3]));
        let ph_cr = go!(self.edge_to(c, rm, &s_c, &s_rm));
        let ph_bc = go!(self.edge_to(bm, c, &s_bm, &s_c));
        let ph_ct = go!(self.edge_to(c, tm, &s_c, &s_tm));
        for (sum, whole) in [
            (ph_b1 + ph_b2, cell.ph[0]),
            (ph_r1 + ph_r2, cell.ph[1]),
            (ph_t1 + ph_t2, cell.ph[2]),
            (ph_l1 + ph_l2, cell.ph[3]),
        ] {
            if (sum - whole).abs() > 1e-6 {
                return Err(Error::LostZero(format!(
                    "split edge phase {sum} vs {whole}"
                )));
            }
        }
        Ok(Attempt::Done([
            Cell {
                z: [ll, bm, lm, c],
                s: [cell.s[0], s_bm, s_lm, s_c],
                ph: [ph_b1, ph_bc, ph_lc, ph_l1],
            },
            Cell {
                z: [bm, lr, c, rm],
                s: [s_bm, cell.s[1], s_c, s_rm],
                ph: [ph_b2, ph_r1, ph_cr, ph_bc],
            },
            Cell {
                z: [lm, c, ul, tm],
                s: [s_lm, s_c, cell.s[2], s_tm],
                ph: [ph_lc, ph_ct, ph_t1, ph_l2],
            },
            Cell {
                z: [c, rm, tm, ur],
                s: [s_c, s_rm, s_tm, cell.s[3]],
                ph: [ph_cr, ph_r2, ph_t2, ph_ct],
            },
        ]))
    }

    fn resolve(&self, cell: &Cell, depth: usize, out: &mut Vec<Zero>) -> Result<()> {
        let w = cell.winding()?;
        if w == 0 {
            return Ok(());
        }
        if w == 1 {
            let center = 0.5 * (cell.z[0] + cell.z[3]);
            let mut st = cell.s[0];
            self.t.clone_free().propagate(cell.z[0], center, &mut st)?;
            if let Some(z) = self.newton(center, st, cell)? {
                out.push(z);
                return Ok(());
            }
        }
        if depth >= self.cfg.max_depth {
            return Err(Error::LostZero(format!("depth limit near {}", cell.z[0])));
        }
        for attempt in 0..4 {
            let frac = 0.5137 - 0.0291 * attempt as f64;
            if let Attempt::Done(children) = self.split(cell, frac)? {
                let ws: i64 = children.iter().map(|c| c.winding()).sum::<Result<i64>>()?;
                if ws != w {
                    return Err(Error::LostZero(format!("children wind {ws}, parent {w}")));
                }
                for c in &children {
                    self.resolve(c, depth + 1, out)?;
                }
                return Ok(());
            }
        }
        Err(Error::LostZero(format!(
            "could not split cell at {}",
            cell.z[0]
        )))
    }
}

impl Taylor<C64> {
    fn clone_free(&self) -> Taylor<C64> {
        let mut t = self.clone();
        t.phase_limit = f64::INFINITY;
        t
    }
}

fn lattice_with_retries(
    p: &Poly,
    anchor: &EigenAnchor,
    solver: &Solver,
    region: &Rect,
) -> Result<(Lattice, Rect)> {
    let mut r = *region;
    for attempt in 0..=solver.cfg.max_retries {
        if let Attempt::Done(l) = build_lattice(p, anchor, solver, &r)? {
            return Ok((l, r));
        }
        r = region.inflated(1e-4 * region.diameter() * (attempt + 1) as f64);
    }
    Err(Error::PhaseAliasing(
        "lattice keeps passing through zeros".into(),
    ))
}

/// Total winding of `y` around the boundary of `region`.
pub fn count_zeros_box(
    p: &Poly,
    anchor: &EigenAnchor,
    region: &Rect,
    cfg: &ZeroConfig,
) -> Result<BoxCount> {
    let solver = Solver {
        t: Taylor::new(p, anchor.lambda),
        lambda: anchor.lambda,
        cfg,
    };
    let (lat, used) = lattice_with_retries(p, anchor, &solver, region)?;
    let (nx, ny) = (lat.xs.len(), lat.ys.len());
    let mut w = 0.0;
    for j in 0..nx - 1 {
        w += lat.hph[lat.idx(j, 0)] - lat.hph[lat.idx(j, ny - 1)];
    }
    for k in 0..ny - 1 {
        w += lat.vph[(nx - 1) * (ny - 1) + k] - lat.vph[k];
    }
    Ok(BoxCount {
        region: used,
        winding: (w / (2.0 * PI)).round() as i64,
    })
}

/// All zeros of the `n`-th eigenfunction (eigenvalue `lambda`) in `region`.
pub fn locate_zeros(
    p: &Poly,
    lambda: f64,
    n: usize,
    region: &Rect,
    cfg: &ZeroConfig,
) -> Result<ZeroSet> {
    let extent = region.x0.abs().max(region.x1.abs()) * 1.01 + 0.1;
    let anchor = EigenAnchor::new(p, lambda, n, &cfg.shoot, extent)?;
    locate_zeros_with(p, &anchor, region, cfg)
}

pub fn locate_zeros_with(
    p: &Poly,
    anchor: &EigenAnchor,
    region: &Rect,
    cfg: &ZeroConfig,
) -> Result<ZeroSet> {
    let solver = Solver {
        t: Taylor::new(p, anchor.lambda),
        lambda: anchor.lambda,
        cfg,
    };
    let (lat, used) = lattice_with_retries(p, anchor, &solver, region)?;
    let (nx, ny) = (lat.xs.len(), lat.ys.len());
    let cells: Vec<Cell> = (0..nx - 1)
        .flat_map(|j| (0..ny - 1).map(move |k| (j, k)))
        .map(|(j, k)| lat.cell(j, k))
        .collect();
    let windings: Vec<i64> = cells.iter().map(|c| c.winding()).collect::<Result<_>>()?;
    let total: i64 = windings.iter().sum();
    let found: Vec<Result<Vec<Zero>>> = cells
        .par_iter()
        .zip(windings.par_iter())
        .filter(|(_, &w)| w > 0)
        .map(|(c, _)| {
            let mut v = Vec::new();
            solver.resolve(c, 0, &mut v)?;
            Ok(v)
        })
        .collect();
    let mut zeros: Vec<Zero> = Vec::new();
    for f in found {
        zeros.extend(f?);
    }
    if zeros.len() as i64 != total {
        return Err(Error::LostZero(format!(
            "found {} zeros, winding {total}",
            zeros.len()
        )));
    }
    // Real parts are compared on a 1e-9 grid so that zeros on a vertical line sort by height.
    let key = |z: &Zero| ((z.z.re * 1e9).round(), z.z.im);
    zeros.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    Ok(ZeroSet {
        lambda: anchor.lambda,
        n: anchor.n,
        region: used,
        winding: total,
        zeros,
    })
}

/// Smallest pairwise distance between zeros.
pub fn min_separation(zs: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..zs.len() {
        for j in i + 1..zs.len() {
            best = best.min((zs[i] - zs[j]).norm());
        }
    }
    best
}

/// `max |q|` over a closed rectangle (attained on its boundary).
pub fn max_modulus(p: &Poly, r: &Rect) -> f64 {
    let mut m: f64 = 0.0;
    let n = 2000;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let x = r.x0 + t * r.width();
        let y = r.y0 + t * r.height();
        for z in [
            C64::new(x, r.y0),
            C64::new(x, r.y1),
            C64::new(r.x0, y),
            C64::new(r.x1, y),
        ] {
            m = m.max(p.eval(z).norm());
        }
    }
    m
}
