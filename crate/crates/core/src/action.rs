//! WKB actions `S(z0, z) = ∫ sqrt(q)` along polygonal paths.
//!
//! The branch of `sqrt(q)` is continued along the path; each segment is cut
//! into pieces on which its phase moves by less than π/8.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::quad;
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

const MAX_PIECE_TURN: f64 = PI / 8.0;
const MIN_STEP: f64 = 1e-14;

/// Polyline with a branch seed for `sqrt(q)` at its first node.
///
/// When the first node is a turning point the seed selects the branch at the
/// first interior point instead.
#[derive(Debug, Clone, PartialEq)]
pub struct PathC {
    pub points: Vec<C64>,
    pub branch_seed: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub s: C64,
    /// `sqrt(q)` at the last node; the limiting branch value on approach
    /// if the last node is a turning point.
    pub branch_end: C64,
    /// `∫ |sqrt(q)| |dz|`.
    pub abs_mass: f64,
}

impl PathC {
    pub fn new(points: Vec<C64>, branch_seed: C64) -> Self {
        PathC {
            points,
            branch_seed,
        }
    }

    pub fn segment(a: C64, b: C64, branch_seed: C64) -> Self {
        PathC {
            points: vec![a, b],
            branch_seed,
        }
    }
}

/// The square root of `q(z)` closest to `reference`.
pub fn aligned_sqrt(p: &Poly, z: C64, reference: C64) -> C64 {
    let r = p.eval(z).sqrt();
    if (r * reference.conj()).re >= 0.0 {
        r
    } else {
        -r
    }
}

fn is_turning_point(p: &Poly, z: C64) -> bool {
    p.eval(z).norm() <= 1e-12 * p.scale(z).max(f64::MIN_POSITIVE)
}

fn turn(a: C64, b: C64) -> f64 {
    (b / a).arg().abs()
}

struct Piece {
    u0: f64,
    u1: f64,
    reference: C64,
}

/// Splits segment `a -> b` into pieces with slowly varying branch.
/// `start` is the branch at `a`, or `None` if `a` is a turning point (then
/// `seed` picks the branch).  Returns pieces and the branch at `b`.
fn segment_pieces(
    p: &Poly,
    a: C64,
    b: C64,
    start: Option<C64>,
    seed: C64,
    end_is_tp: bool,
) -> Result<(Vec<Piece>, C64)> {
    let z = |u: f64| a + (b - a) * u;
    let mut pieces = Vec::new();
    let mut u = 0.0;
    let mut h: f64 = 0.125;
    let mut v = match start {
        Some(v) => v,
        None => loop {
            if h < MIN_STEP {
                return Err(Error::BranchJump(a));
            }
            let hh = h.min(1.0);
            if hh >= 1.0 && end_is_tp {
                // Segment joins two turning points.
                let w = aligned_sqrt(p, z(0.5), seed);
                let w1 = aligned_sqrt(p, z(0.25), w);
                let w3 = aligned_sqrt(p, z(0.75), w);
                if turn(w, w1) <= MAX_PIECE_TURN && turn(w, w3) <= MAX_PIECE_TURN {
                    pieces.push(Piece {
                        u0: 0.0,
                        u1: 1.0,
                        reference: w,
                    });
                    return Ok((pieces, w));
                }
                h = 0.5;
                continue;
            }
            let w = aligned_sqrt(p, z(hh), seed);
            let m = aligned_sqrt(p, z(0.5 * hh), w);
            if p.eval(z(hh)).norm() > 0.0 && turn(w, m) <= MAX_PIECE_TURN {
                pieces.push(Piece {
                    u0: 0.0,
                    u1: hh,
                    reference: w,
                });
                u = hh;
                break w;
            }
            h *= 0.5;
        },
    };
    while u < 1.0 {
        if h < MIN_STEP {
            return Err(Error::BranchJump(z(u)));
        }
        let u1 = (u + h).min(1.0);
        if u1 >= 1.0 && end_is_tp {
            let m = aligned_sqrt(p, z(0.5 * (u + 1.0)), v);
            let q3 = aligned_sqrt(p, z(u + 0.9 * (1.0 - u)), v);
            if turn(v, m) <= MAX_PIECE_TURN && turn(v, q3) <= MAX_PIECE_TURN {
                pieces.push(Piece {
                    u0: u,
                    u1: 1.0,
                    reference: v,
                });
                return Ok((pieces, m));
            }
            h = 0.5 * (1.0 - u);
            continue;
        }
        let raw = p.eval(z(u1));
        if raw.norm() == 0.0 {
            return Err(Error::BranchJump(z(u1)));
        }
        let m = aligned_sqrt(p, z(0.5 * (u + u1)), v);
        let w = aligned_sqrt(p, z(u1), m);
        if turn(v, m) <= MAX_PIECE_TURN && turn(m, w) <= MAX_PIECE_TURN {
            pieces.push(Piece {
                u0: u,
                u1,
                reference: v,
            });
            v = w;
            u = u1;
            h *= 1.5;
        } else {
            h *= 0.5;
        }
    }
    Ok((pieces, v))
}

fn integrate_piece(p: &Poly, a: C64, b: C64, piece: &Piece) -> Result<(C64, f64)> {
    let d = b - a;
    let span = piece.u1 - piece.u0;
    // u = u0 + span (1 - cos πs)/2 removes square-root endpoint singularities.
    let map = |s: f64| {
        let u = piece.u0 + span * 0.5 * (1.0 - (PI * s).cos());
        let du = span * 0.5 * PI * (PI * s).sin();
        (a + d * u, du)
    };
    let reference = piece.reference;
    let s = quad::integrate(
        |s| {
            let (z, du) = map(s);
            aligned_sqrt(p, z, reference) * d * du
        },
        0.0,
        1.0,
        1e-13,
        1e-300,
    )?;
    let m = quad::integrate_real(
        |s| {
            let (z, du) = map(s);
            p.eval(z).norm().sqrt() * d.norm() * du
        },
        0.0,
        1.0,
        1e-13,
        1e-300,
    )?;
    Ok((s, m))
}

pub fn action(p: &Poly, path: &PathC) -> Result<ActionValue> {
    let pts = &path.points;
    if pts.len() < 2 {
        return Err(Error::InvalidInput("path needs at least two nodes".into()));
    }
    if pts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput(
            "consecutive path nodes coincide".into(),
        ));
    }
    let mut branch = if is_turning_point(p, pts[0]) {
        None
    } else {
        Some(aligned_sqrt(p, pts[0], path.branch_seed))
    };
    let mut s = C64::new(0.0, 0.0);
    let mut mass = 0.0;
    let last = pts.len() - 2;
    for (i, w) in pts.windows(2).enumerate() {
        let end_tp = is_turning_point(p, w[1]);
        if end_tp && i != last {
            return Err(Error::BranchJump(w[1]));
        }
        let (pieces, end) = segment_pieces(p, w[0], w[1], branch, path.branch_seed, end_tp)?;
        for piece in &pieces {
            let (ds, dm) = integrate_piece(p, w[0], w[1], piece)?;
            s += ds;
            mass += dm;
        }
        branch = Some(end);
    }
    Ok(ActionValue {
        s,
        branch_end: branch.unwrap(),
        abs_mass: mass,
    })
}

fn check_sign(p: &Poly, a: f64, b: f64, sign: f64) -> Result<()> {
    for k in 1..=101 {
        let x = a + (b - a) * k as f64 / 102.0;
        let q = p.eval_real(x);
        if sign * q < -1e-10 * p.scale(C64::new(x, 0.0)) {
            return Err(Error::SignError(x));
        }
    }
    Ok(())
}

fn real_interval_integral(p: &Poly, a: f64, b: f64, sign: f64) -> Result<f64> {
    if !p.is_real() {
        return Err(Error::InvalidInput(
            "real interval action needs a real polynomial".into(),
        ));
    }
    if !(a < b) {
        return Err(Error::InvalidInput(format!("interval [{a}, {b}] is empty")));
    }
    check_sign(p, a, b, sign)?;
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    quad::integrate_real(
        |t| {
            let x = m + h * t.sin();
            (sign * p.eval_real(x)).max(0.0).sqrt() * h * t.cos()
        },
        -0.5 * PI,
        0.5 * PI,
        1e-14,
        1e-300,
    )
}

/// `∫_a^b sqrt(-q)` over a real well.
pub fn well_action(p: &Poly, a: f64, b: f64) -> Result<f64> {
    real_interval_integral(p, a, b, -1.0)
}

/// `∫_a^b sqrt(q)` over a real barrier.
pub fn barrier_action(p: &Poly, a: f64, b: f64) -> Result<f64> {
    real_interval_integral(p, a, b, 1.0)
}

/// `(1/π) ∫ |sqrt(q)| |dz|` along a polyline.
pub fn agmon_mass(p: &Poly, curve: &[C64]) -> Result<f64> {
    let mut total = 0.0;
    for w in curve.windows(2) {
        let (a, d) = (w[0], w[1] - w[0]);
        if d.norm() == 0.0 {
            continue;
        }
        total += quad::integrate_real(
            |s| {
                let u = 0.5 * (1.0 - (PI * s).cos());
                let du = 0.5 * PI * (PI * s).sin();
                p.eval(a + d * u).norm().sqrt() * d.norm() * du
            },
            0.0,
            1.0,
            1e-13,
            1e-300,
        )?;
    }
    Ok(total / PI)
}

/// Cumulative Agmon mass at each node of a polyline.
pub fn agmon_mass_profile(p: &Poly, curve: &[C64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(curve.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in curve.windows(2) {
        acc += agmon_mass(p, w)?;
        out.push(acc);
    }
    Ok(out)
}

/// Radius `|q'(t)|^{-1/3} λ^{-7/12}` of the disc excluded around a turning point.
pub fn exclusion_radius(p: &Poly, tp: C64, lambda: f64) -> f64 {
    p.derivative().eval(tp).norm().powf(-1.0 / 3.0) * lambda.powf(-7.0 / 12.0)
}
