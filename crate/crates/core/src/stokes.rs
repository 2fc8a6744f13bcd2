//! Stokes (`Re S = 0`) and anti-Stokes (`Im S = 0`) lines from simple turning
//! points, and the Stokes graph they form.

use crate::action::{action, aligned_sqrt, PathC};
use crate::error::{Error, Result};
use crate::poly::{Poly, TurningPoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Stokes,
    AntiStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Termination {
    TurningPoint { z: C64 },
    Unbounded { escape_angle: f64 },
    MaxLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelLine {
    pub kind: LineKind,
    pub origin: C64,
    pub launch_angle: f64,
    pub termination: Termination,
    /// `S(origin, last node)` along the line.
    pub action: C64,
    pub nodes: Vec<C64>,
}

impl LevelLine {
    pub fn is_finite(&self) -> bool {
        matches!(self.termination, Termination::TurningPoint { .. })
    }

    pub fn length(&self) -> f64 {
        self.nodes.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    /// Escape radius; defaults to `4 (1 + max |turning point|)`.
    pub radius: Option<f64>,
    /// Arc-length cap; defaults to `50 R`.
    pub max_length: Option<f64>,
    /// Local error tolerance of the integrator relative to the local scale.
    pub tol: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            radius: None,
            max_length: None,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealSegment {
    /// `None` for `-∞`.
    pub lo: Option<f64>,
    /// `None` for `+∞`.
    pub hi: Option<f64>,
    pub kind: LineKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesGraph {
    pub turning_points: Vec<TurningPoint>,
    pub radius: f64,
    pub lines: Vec<LevelLine>,
    pub real_segments: Vec<RealSegment>,
}

impl StokesGraph {
    pub fn finite_count(&self) -> usize {
        self.lines.iter().filter(|l| l.is_finite()).count()
    }

    pub fn unbounded_count(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| matches!(l.termination, Termination::Unbounded { .. }))
            .count()
    }
}

fn wrap(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * PI)
}

/// The three launch directions of a line family at a simple turning point.
pub fn launch_angles(p: &Poly, tp: C64, kind: LineKind) -> [f64; 3] {
    let a = p.derivative().eval(tp).arg();
    let base = match kind {
        LineKind::Stokes => PI - a,
        LineKind::AntiStokes => -a,
    };
    let mut t = [0.0; 3];
    for (k, v) in t.iter_mut().enumerate() {
        *v = wrap((base + 2.0 * PI * k as f64) / 3.0);
    }
    t.sort_by(|x, y| x.partial_cmp(y).unwrap());
    t
}

pub fn default_radius(tps: &[TurningPoint]) -> f64 {
    4.0 * (1.0 + tps.iter().map(|t| t.z.norm()).fold(0.0, f64::max))
}

fn capture_radius(p: &Poly, tps: &[TurningPoint], i: usize) -> f64 {
    let r = p.derivative().eval(tps[i].z).norm().powf(-1.0 / 3.0);
    let sep = tps
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, t)| (t.z - tps[i].z).norm())
        .fold(f64::INFINITY, f64::min);
    r.min(0.25 * sep)
}

/// The level-set residual: `Re S` for Stokes, `Im S` for anti-Stokes.
fn residual(kind: LineKind, s: C64) -> f64 {
    match kind {
        LineKind::Stokes => s.re,
        LineKind::AntiStokes => s.im,
    }
}

/// Unit tangent of the flow `dz ∝ i/sqrt(q)` (Stokes) or `1/sqrt(q)`.
fn tangent(kind: LineKind, v: C64) -> C64 {
    let u = match kind {
        LineKind::Stokes => C64::new(0.0, 1.0) / v,
        LineKind::AntiStokes => 1.0 / v,
    };
    u / u.norm()
}

struct Walker<'a> {
    p: &'a Poly,
    kind: LineKind,
    z: C64,
    v: C64,
    s: C64,
}

impl Walker<'_> {
    fn advance_to(&mut self, z1: C64) -> Result<()> {
        let a = action(self.p, &PathC::segment(self.z, z1, self.v))?;
        self.s += a.s;
        self.v = a.branch_end;
        self.z = z1;
        Ok(())
    }

    /// Newton projection back onto the level set.
    fn project(&mut self) -> Result<()> {
        for _ in 0..4 {
            let r = residual(self.kind, self.s);
            if r.abs() <= 1e-13 * (1.0 + self.s.norm()) {
                break;
            }
            let target = match self.kind {
                LineKind::Stokes => C64::new(-r, 0.0),
                LineKind::AntiStokes => C64::new(0.0, -r),
            };
            let dz = target / self.v;
            self.advance_to(self.z + dz)?;
        }
        Ok(())
    }

    fn field(&self, z: C64) -> C64 {
        tangent(self.kind, aligned_sqrt(self.p, z, self.v))
    }

    /// One Dormand–Prince 5(4) step of arc length `h`; returns the new point
    /// and an error estimate.
    fn rk_step(&self, h: f64) -> (C64, f64) {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let mut k = [C64::new(0.0, 0.0); 7];
        k[0] = self.field(self.z);
        for i in 0..6 {
            let mut acc = self.z;
            for j in 0..=i {
                acc += k[j] * (h * A[i][j]);
            }
            k[i + 1] = self.field(acc);
        }
        let mut z5 = self.z;
        for j in 0..6 {
            z5 += k[j] * (h * A[5][j]);
        }
        let err: C64 = k.iter().zip(E).map(|(kk, e)| kk * (h * e)).sum();
        (z5, err.norm())
    }
}

fn trace_upper(
    p: &Poly,
    tps: &[TurningPoint],
    origin: usize,
    angle: f64,
    kind: LineKind,
    cfg: &TraceConfig,
) -> Result<LevelLine> {
    let o = tps[origin].z;
    let radius = cfg.radius.unwrap_or_else(|| default_radius(tps));
    let max_len = cfg.max_length.unwrap_or(50.0 * radius);
    let captures: Vec<f64> = (0..tps.len()).map(|i| capture_radius(p, tps, i)).collect();
    let rho0 = 0.05 * captures[origin];
    let dir = C64::from_polar(1.0, angle);
    let z0 = o + dir * rho0;
    let mut v0 = p.eval(z0).sqrt();
    if (tangent(kind, v0) * dir.conj()).re < 0.0 {
        v0 = -v0;
    }
    let start = action(p, &PathC::segment(o, z0, v0))?;
    let mut w = Walker {
        p,
        kind,
        z: z0,
        v: start.branch_end,
        s: start.s,
    };
    w.project()?;
    let mut nodes = vec![o, w.z];
    let mut arc = rho0;
    let mut h = 0.25 * rho0;
    let mut checked = vec![false; tps.len()];
    loop {
        let near = tps
            .iter()
            .map(|t| (t.z - w.z).norm())
            .fold(f64::INFINITY, f64::min);
        let hmax = (0.2 * near).min(0.02 * radius).max(1e-12);
        h = h.min(hmax);
        let (z1, err) = w.rk_step(h);
        let tol = cfg.tol * (near.min(1.0) + 1e-3);
        if err > tol && h > 1e-13 * (1.0 + w.z.norm()) {
            h *= (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.5);
            continue;
        }
        w.advance_to(z1)?;
        w.project()?;
        arc += (w.z - *nodes.last().unwrap()).norm();
        nodes.push(w.z);
        h *= if err > 0.0 {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 3.0)
        } else {
            3.0
        };

        for (i, t) in tps.iter().enumerate() {
            if i == origin || checked[i] || (t.z - w.z).norm() >= captures[i] {
                continue;
            }
            checked[i] = true;
            let end = action(p, &PathC::segment(w.z, t.z, w.v))?;
            let s_end = w.s + end.s;
            if residual(kind, s_end).abs() <= 1e-6 * (1.0 + s_end.norm()) {
                nodes.push(t.z);
                return Ok(LevelLine {
                    kind,
                    origin: o,
                    launch_angle: angle,
                    termination: Termination::TurningPoint { z: t.z },
                    action: s_end,
                    nodes,
                });
            }
        }
        let termination = if w.z.norm() > radius {
            Termination::Unbounded {
                escape_angle: w.z.arg(),
            }
        } else if arc > max_len {
            Termination::MaxLength
        } else {
            continue;
        };
        return Ok(LevelLine {
            kind,
            origin: o,
            launch_angle: angle,
            termination,
            action: w.s,
            nodes,
        });
    }
}

/// Traces the line of `kind` leaving turning point `tp` at `angle`.
///
/// For real `q`, lines leaving into the lower half plane are traced as the
/// mirror image of their upper partner, so the graph is exactly symmetric.
pub fn trace_line(
    p: &Poly,
    tp: C64,
    angle: f64,
    kind: LineKind,
    cfg: &TraceConfig,
) -> Result<LevelLine> {
    let tps = p.simple_turning_points()?;
    trace_with(p, &tps, tp, angle, kind, cfg)
}

fn trace_with(
    p: &Poly,
    tps: &[TurningPoint],
    tp: C64,
    angle: f64,
    kind: LineKind,
    cfg: &TraceConfig,
) -> Result<LevelLine> {
    let find = |z: C64| {
        tps.iter()
            .position(|t| (t.z - z).norm() <= 1e-8 * (1.0 + z.norm()))
            .ok_or_else(|| Error::InvalidInput(format!("{z} is not a turning point")))
    };
    let angle = wrap(angle);
    let mirror = p.is_real() && (tp.im < 0.0 || (tp.im == 0.0 && angle.sin() < -1e-12));
    if !mirror {
        return trace_upper(p, tps, find(tp)?, angle, kind, cfg);
    }
    let up = trace_upper(p, tps, find(tp.conj())?, wrap(-angle), kind, cfg)?;
    Ok(LevelLine {
        kind,
        origin: up.origin.conj(),
        launch_angle: angle,
        termination: match up.termination {
            Termination::TurningPoint { z } => Termination::TurningPoint { z: z.conj() },
            Termination::Unbounded { escape_angle } => Termination::Unbounded {
                escape_angle: -escape_angle,
            },
            Termination::MaxLength => Termination::MaxLength,
        },
        action: up.action.conj(),
        nodes: up.nodes.iter().map(|z| z.conj()).collect(),
    })
}

fn point_segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Distance from `z` to a polyline.
pub fn polyline_distance(z: C64, nodes: &[C64]) -> f64 {
    if nodes.len() == 1 {
        return (z - nodes[0]).norm();
    }
    nodes
        .windows(2)
        .map(|w| point_segment_distance(z, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

fn same_finite_line(a: &LevelLine, b: &LevelLine) -> bool {
    let (Termination::TurningPoint { z: ea }, Termination::TurningPoint { z: eb }) =
        (a.termination, b.termination)
    else {
        return false;
    };
    let close = |x: C64, y: C64| (x - y).norm() <= 1e-8 * (1.0 + x.norm());
    let ends = (close(a.origin, b.origin) && close(ea, eb))
        || (close(a.origin, eb) && close(ea, b.origin));
    if !ends {
        return false;
    }
    let mid = a.nodes[a.nodes.len() / 2];
    polyline_distance(mid, &b.nodes) <= 1e-4 * (1.0 + a.length())
}

/// Real-axis intervals between consecutive real turning points, classified
/// by the sign of `q`.
pub fn real_segments(p: &Poly, tps: &[TurningPoint]) -> Vec<RealSegment> {
    if !p.is_real() {
        return vec![];
    }
    let xs: Vec<f64> = tps.iter().filter(|t| t.is_real).map(|t| t.z.re).collect();
    let mut bounds: Vec<Option<f64>> = vec![None];
    bounds.extend(xs.iter().map(|&x| Some(x)));
    bounds.push(None);
    bounds
        .windows(2)
        .map(|w| {
            let x = match (w[0], w[1]) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) => a + 1.0,
                (None, Some(b)) => b - 1.0,
                (None, None) => 0.0,
            };
            let kind = if p.eval_real(x) < 0.0 {
                LineKind::Stokes
            } else {
                LineKind::AntiStokes
            };
            RealSegment {
                lo: w[0],
                hi: w[1],
                kind,
            }
        })
        .collect()
}

/// All Stokes lines from all turning points, finite lines deduplicated.
pub fn build_graph(p: &Poly, cfg: &TraceConfig) -> Result<StokesGraph> {
    let tps = p.simple_turning_points()?;
    let radius = cfg.radius.unwrap_or_else(|| default_radius(&tps));
    let cfg = TraceConfig {
        radius: Some(radius),
        ..cfg.clone()
    };
    let mut lines: Vec<LevelLine> = Vec::new();
    for t in &tps {
        for angle in launch_angles(p, t.z, LineKind::Stokes) {
            let line = trace_with(p, &tps, t.z, angle, LineKind::Stokes, &cfg)?;
            if !lines.iter().any(|l| same_finite_line(l, &line)) {
                lines.push(line);
            }
        }
    }
    let real_segments = real_segments(p, &tps);
    Ok(StokesGraph {
        turning_points: tps,
        radius,
        lines,
        real_segments,
    })
}
