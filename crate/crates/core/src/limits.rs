//! Limits of zero distributions: the empirical measure, predicted zero lines
//! with their Agmon density, arc-by-arc comparison, level-curve fits and
//! subsequence densities for non-symmetric double wells.

use crate::action::{action, agmon_mass, exclusion_radius, PathC};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::spectrum::tag_well;
use crate::stokes::{launch_angles, polyline_distance, trace_line, LineKind, TraceConfig};
use crate::wkbmat::{LeadingRoot, RootFamily};
use crate::zeros::{Rect, ZeroSet};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C64 = Complex64;

/// Zeros with equal weights `1/λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub points: Vec<C64>,
    pub weight: f64,
    pub total_mass: f64,
}

pub fn empirical_measure(zs: &ZeroSet) -> EmpiricalMeasure {
    let weight = 1.0 / zs.lambda;
    EmpiricalMeasure {
        points: zs.points(),
        weight,
        total_mass: zs.zeros.len() as f64 * weight,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `c(x² − a²)`; all zeros are real.
    Harmonic,
    /// `(x² − a²)(x² + b²)`.
    OneWellQuartic,
    /// `(x² − a²)(x² − b²)`, `0 < a < b`.
    SymmetricDoubleWell,
    /// Four distinct real roots without symmetry.
    NonsymmetricDoubleWell,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Harmonic => "harmonic",
            Family::OneWellQuartic => "one_well_quartic",
            Family::SymmetricDoubleWell => "symmetric_double_well",
            Family::NonsymmetricDoubleWell => "nonsymmetric_double_well",
        }
    }

    pub fn from_name(name: &str) -> Result<Family> {
        match name {
            "harmonic" => Ok(Family::Harmonic),
            "one_well_quartic" | "one_well" => Ok(Family::OneWellQuartic),
            "symmetric_double_well" => Ok(Family::SymmetricDoubleWell),
            "nonsymmetric_double_well" => Ok(Family::NonsymmetricDoubleWell),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }

    /// The family whose normal form `p` has, if any.
    pub fn infer(p: &Poly) -> Option<Family> {
        if !p.is_real() || p.leading().re <= 0.0 {
            return None;
        }
        let real = p.real_turning_points().ok()?;
        let tps = p.simple_turning_points().ok()?;
        let even = p.symmetry_center().map_or(false, |c| c.abs() <= 1e-12);
        match (p.degree(), real.len()) {
            (2, 2) => Some(Family::Harmonic),
            (4, 2)
                if even
                    && tps
                        .iter()
                        .all(|t| t.is_real || t.z.re.abs() <= 1e-10 * (1.0 + t.z.norm())) =>
            {
                Some(Family::OneWellQuartic)
            }
            (4, 4) if even => Some(Family::SymmetricDoubleWell),
            (4, 4) => Some(Family::NonsymmetricDoubleWell),
            _ => None,
        }
    }
}

/// A curve on which zeros are predicted to accumulate, lying on the level set
/// `Re S(anchor_tp, z) = offset_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedZeroLine {
    pub label: String,
    /// Which of the two alternative line sets this belongs to (non-symmetric
    /// wells only).
    pub ell: Option<u8>,
    pub curve: Vec<C64>,
    pub anchor_tp: C64,
    pub offset_c: f64,
    /// Branch of `sqrt(q)` leaving `anchor_tp` along the reference path.
    pub branch_seed: C64,
}

impl PredictedZeroLine {
    /// `|sqrt(q(z))| / π`.
    pub fn mass_density(p: &Poly, z: C64) -> f64 {
        p.eval(z).norm().sqrt() / PI
    }
}

fn line(
    label: &str,
    ell: Option<u8>,
    curve: Vec<C64>,
    anchor: C64,
    offset: f64,
    seed: C64,
) -> PredictedZeroLine {
    PredictedZeroLine {
        label: label.into(),
        ell,
        curve,
        anchor_tp: anchor,
        offset_c: offset,
        branch_seed: seed,
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn im(y: f64) -> C64 {
    C64::new(0.0, y)
}

fn check_family(p: &Poly, family: Family) -> Result<()> {
    match Family::infer(p) {
        Some(f) if f == family => Ok(()),
        _ => Err(Error::UnsupportedFamily(format!(
            "{} does not match the potential",
            family.name()
        ))),
    }
}

/// Predicted zero lines of `p`, cut off at `|z| = radius`.
pub fn predicted_zero_lines(
    family: Family,
    p: &Poly,
    radius: f64,
) -> Result<Vec<PredictedZeroLine>> {
    check_family(p, family)?;
    let real = p.real_turning_points()?;
    let one = re(1.0);
    match family {
        Family::Harmonic => {
            let (a0, a1) = (real[0], real[1]);
            Ok(vec![line(
                "real_well",
                None,
                vec![re(a0), re(a1)],
                re(a0),
                0.0,
                im(1.0),
            )])
        }
        Family::OneWellQuartic => {
            let a = real[1];
            let b = p
                .simple_turning_points()?
                .iter()
                .filter(|t| !t.is_real)
                .map(|t| t.z.im.abs())
                .fold(0.0, f64::max);
            let mut out = vec![line(
                "real_well",
                None,
                vec![re(-a), re(a)],
                re(-a),
                0.0,
                im(1.0),
            )];
            if radius > b {
                out.push(line(
                    "upper_axis",
                    None,
                    vec![im(b), im(radius)],
                    im(b),
                    0.0,
                    one,
                ));
                out.push(line(
                    "lower_axis",
                    None,
                    vec![im(-b), im(-radius)],
                    im(-b),
                    0.0,
                    one,
                ));
            }
            Ok(out)
        }
        Family::SymmetricDoubleWell => {
            let (a, b) = (real[2], real[3]);
            let xi = crate::action::barrier_action(p, -a, a)?;
            Ok(vec![
                line(
                    "left_well",
                    None,
                    vec![re(-b), re(-a)],
                    re(-b),
                    0.0,
                    im(1.0),
                ),
                line("right_well", None, vec![re(a), re(b)], re(a), 0.0, im(1.0)),
                // Re S(a, ·) = −ξ/2 along the whole imaginary axis, reached
                // from `a` through the barrier with sqrt(q) > 0.
                line(
                    "imaginary_axis",
                    None,
                    vec![im(-radius), im(radius)],
                    re(a),
                    -0.5 * xi,
                    one,
                ),
            ])
        }
        Family::NonsymmetricDoubleWell => {
            let cfg = TraceConfig {
                radius: Some(radius),
                ..TraceConfig::default()
            };
            let mut out = Vec::new();
            for (ell, tp) in [(1u8, real[2]), (2u8, real[1])] {
                out.push(line(
                    "left_well",
                    Some(ell),
                    vec![re(real[0]), re(real[1])],
                    re(real[0]),
                    0.0,
                    im(1.0),
                ));
                out.push(line(
                    "right_well",
                    Some(ell),
                    vec![re(real[2]), re(real[3])],
                    re(real[2]),
                    0.0,
                    im(1.0),
                ));
                let angles = launch_angles(p, re(tp), LineKind::Stokes);
                let up = angles
                    .iter()
                    .copied()
                    .max_by(|x, y| x.sin().partial_cmp(&y.sin()).unwrap())
                    .unwrap();
                let upper = trace_line(p, re(tp), up, LineKind::Stokes, &cfg)?;
                let lower: Vec<C64> = upper.nodes.iter().map(|z| z.conj()).collect();
                out.push(line(
                    "upper_branch",
                    Some(ell),
                    upper.nodes,
                    re(tp),
                    0.0,
                    one,
                ));
                out.push(line("lower_branch", Some(ell), lower, re(tp), 0.0, one));
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    /// Tube radius is `kappa / λ`.
    pub kappa: f64,
    /// Target predicted mass per arc.
    pub arc_mass: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            kappa: 10.0,
            arc_mass: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcRow {
    pub curve: String,
    pub ell: Option<u8>,
    pub arc: usize,
    pub start: C64,
    pub end: C64,
    pub predicted_mass: f64,
    pub zero_count: usize,
    pub count_over_lambda: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedZero {
    pub z: C64,
    pub distance: f64,
    /// Inside a turning-point exclusion disc.
    pub in_disc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub lambda: f64,
    pub kappa: f64,
    pub arc_mass: f64,
    pub arcs: Vec<ArcRow>,
    pub matched: usize,
    pub max_distance: f64,
    pub unmatched: Vec<UnmatchedZero>,
    /// Matched zeros whose nearest curve point lies in an exclusion disc.
    pub excluded: usize,
}

impl MeasureReport {
    pub fn max_relative_error(&self) -> f64 {
        self.arcs
            .iter()
            .map(|a| a.relative_error)
            .fold(0.0, f64::max)
    }

    pub fn unmatched_outside_discs(&self) -> usize {
        self.unmatched.iter().filter(|u| !u.in_disc).count()
    }
}

/// Fine segment of a predicted curve and the arc it belongs to.
struct Piece {
    a: C64,
    b: C64,
    mass: f64,
    arc: Option<usize>,
}

fn resample(curve: &[C64], h: f64) -> Vec<C64> {
    let mut out = vec![curve[0]];
    for w in curve.windows(2) {
        let n = ((w[1] - w[0]).norm() / h).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
        }
    }
    out
}

/// Compares zeros with the predicted lines arc by arc.
pub fn compare_measure(
    p: &Poly,
    zs: &ZeroSet,
    lines: &[PredictedZeroLine],
    cfg: &CompareConfig,
) -> Result<MeasureReport> {
    let lambda = zs.lambda;
    let tube = cfg.kappa / lambda;
    let discs: Vec<(C64, f64)> = p
        .turning_points(1e-9)?
        .iter()
        .map(|t| {
            (
                t.z,
                if t.multiplicity == 1 {
                    exclusion_radius(p, t.z, lambda)
                } else {
                    0.0
                },
            )
        })
        .collect();
    let in_disc = |z: C64| discs.iter().any(|(c, r)| (z - c).norm() < *r);
    let region = zs.region;
    let h = (region.diameter() / 4000.0).min(0.1 / lambda);
    let mut arcs: Vec<ArcRow> = Vec::new();
    let mut curves: Vec<(usize, Vec<Piece>)> = Vec::new();
    for (li, l) in lines.iter().enumerate() {
        let nodes = resample(&l.curve, h);
        let mut pieces = Vec::with_capacity(nodes.len());
        // Contiguous runs of kept segments form the pieces to be cut into arcs.
        let mut runs: Vec<Vec<usize>> = Vec::new();
        let mut open = false;
        for w in nodes.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let keep = region.contains(mid) && !in_disc(mid);
            let mass = if keep { agmon_mass(p, w)? } else { 0.0 };
            if keep {
                if !open {
                    runs.push(Vec::new());
                }
                runs.last_mut().unwrap().push(pieces.len());
            }
            open = keep;
            pieces.push(Piece {
                a: w[0],
                b: w[1],
                mass,
                arc: None,
            });
        }
        for run in runs {
            let total: f64 = run.iter().map(|&i| pieces[i].mass).sum();
            if total <= 0.0 {
                continue;
            }
            let n = ((total / cfg.arc_mass).round() as usize).max(1);
            let first = arcs.len();
            let mut acc = 0.0;
            for k in 0..n {
                arcs.push(ArcRow {
                    curve: l.label.clone(),
                    ell: l.ell,
                    arc: k,
                    start: C64::new(f64::NAN, f64::NAN),
                    end: C64::new(f64::NAN, f64::NAN),
                    predicted_mass: 0.0,
                    zero_count: 0,
                    count_over_lambda: 0.0,
                    relative_error: 0.0,
                });
            }
            for &i in &run {
                let m = pieces[i].mass;
                let k = (((acc + 0.5 * m) / total * n as f64).floor() as usize).min(n - 1);
                acc += m;
                let row = &mut arcs[first + k];
                if row.start.re.is_nan() {
                    row.start = pieces[i].a;
                }
                row.end = pieces[i].b;
                row.predicted_mass += m;
                pieces[i].arc = Some(first + k);
            }
        }
        curves.push((li, pieces));
    }
    let mut matched = 0;
    let mut excluded = 0;
    let mut max_distance: f64 = 0.0;
    let mut unmatched = Vec::new();
    for z in zs.points() {
        let mut best = (f64::INFINITY, None, C64::new(0.0, 0.0));
        for (_, pieces) in &curves {
            for pc in pieces {
                let d = polyline_distance(z, &[pc.a, pc.b]);
                if d < best.0 {
                    best = (d, Some(pc.arc), 0.5 * (pc.a + pc.b));
                }
            }
        }
        let (d, arc, near) = best;
        if d <= tube {
            matched += 1;
            max_distance = max_distance.max(d);
            match arc.flatten() {
                Some(k) => arcs[k].zero_count += 1,
                None if in_disc(near) => excluded += 1,
                None => {}
            }
        } else {
            unmatched.push(UnmatchedZero {
                z,
                distance: d,
                in_disc: in_disc(z),
            });
        }
    }
    for a in &mut arcs {
        a.count_over_lambda = a.zero_count as f64 / lambda;
        a.relative_error = (a.count_over_lambda - a.predicted_mass).abs() / a.predicted_mass;
    }
    Ok(MeasureReport {
        lambda,
        kappa: cfg.kappa,
        arc_mass: cfg.arc_mass,
        arcs,
        matched,
        max_distance,
        unmatched,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroLineFit {
    pub anchor_tp: C64,
    pub count: usize,
    pub c_fit: f64,
    pub residual_rms: f64,
    /// Median of consecutive `Im S` gaps times `λ/π`.
    pub median_gap: f64,
}

/// Fits `Re S(anchor, z_k) = c` over the zeros in `subset`.
///
/// The action is taken along `anchor → via → z_k` (or straight from the
/// anchor when `via` is `None`) starting on the branch `seed`.
pub fn fit_zero_line(
    p: &Poly,
    zs: &ZeroSet,
    anchor: C64,
    via: Option<C64>,
    seed: C64,
    subset: &Rect,
) -> Result<ZeroLineFit> {
    let pts: Vec<C64> = zs
        .points()
        .into_iter()
        .filter(|z| subset.contains(*z))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewZeros(pts.len()));
    }
    let mut s = Vec::with_capacity(pts.len());
    for &z in &pts {
        let mut nodes = vec![anchor];
        nodes.extend(via.filter(|&v| v != z));
        nodes.push(z);
        s.push(action(p, &PathC::new(nodes, seed))?.s);
    }
    let n = s.len() as f64;
    let c_fit = s.iter().map(|v| v.re).sum::<f64>() / n;
    let residual_rms = (s.iter().map(|v| (v.re - c_fit).powi(2)).sum::<f64>() / n).sqrt();
    let mut ims: Vec<f64> = s.iter().map(|v| v.im).collect();
    ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gaps: Vec<f64> = ims
        .windows(2)
        .map(|w| (w[1] - w[0]) * zs.lambda / PI)
        .collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = gaps.len();
    let median_gap = if m % 2 == 1 {
        gaps[m / 2]
    } else {
        0.5 * (gaps[m / 2 - 1] + gaps[m / 2])
    };
    Ok(ZeroLineFit {
        anchor_tp: anchor,
        count: pts.len(),
        c_fit,
        residual_rms,
        median_gap,
    })
}

/// Rational structure of `ρ = α₁/α₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum RatioClass {
    Irrational,
    /// `2r₁/(2r₂+1)` or `(2r₁+1)/2r₂`.
    EvenOdd {
        num: u64,
        den: u64,
    },
    /// `(2r₁+1)/(2r₂+1)`.
    OddOdd {
        num: u64,
        den: u64,
        r1: u64,
        r2: u64,
    },
}

pub const DENOMINATOR_CAP: u64 = 50;
pub const RATIONAL_TOL: f64 = 1e-9;

/// Continued-fraction classification with denominators up to `cap`.
pub fn classify_ratio(rho: f64, cap: u64, tol: f64) -> RatioClass {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = rho;
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > cap {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (rho - h1 as f64 / k1 as f64).abs() <= tol * rho.abs().max(1.0) {
            let (num, den) = (h1, k1);
            return if num % 2 == 1 && den % 2 == 1 {
                RatioClass::OddOdd {
                    num,
                    den,
                    r1: (num - 1) / 2,
                    r2: (den - 1) / 2,
                }
            } else {
                RatioClass::EvenOdd { num, den }
            };
        }
        let frac = x - x.floor();
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    RatioClass::Irrational
}

/// An eigenvalue with the quantization sequence it belongs to (1 or 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedLevel {
    pub lambda: f64,
    pub seq: u8,
}

/// Tags leading-order roots; the two members of a split pair go one to
/// each sequence.
pub fn tag_leading(roots: &[LeadingRoot]) -> Vec<TaggedLevel> {
    let mut next_split = 1u8;
    roots
        .iter()
        .map(|r| {
            let seq = match r.family {
                RootFamily::First => 1,
                RootFamily::Second => 2,
                RootFamily::Split => {
                    let s = next_split;
                    next_split = 3 - next_split;
                    s
                }
            };
            TaggedLevel {
                lambda: r.lambda,
                seq,
            }
        })
        .collect()
}

/// Tags computed eigenvalues by their nearest quantization sequence; ties
/// alternate between the sequences.
pub fn tag_computed(lambdas: &[f64], alpha1: f64, alpha2: f64) -> Vec<TaggedLevel> {
    let mut next_tie = 1u8;
    lambdas
        .iter()
        .map(|&l| {
            let (w, tie) = tag_well(&[alpha1, alpha2], l);
            let seq = if tie {
                let s = next_tie;
                next_tie = 3 - next_tie;
                s
            } else {
                w as u8
            };
            TaggedLevel { lambda: l, seq }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDensity {
    /// `A_δ^(ℓ) = { λ : |cos(α_ℓ λ)| > δ }`.
    pub ell: u8,
    /// The sequence containing `A_δ^(ℓ)` (the other one).
    pub parent: u8,
    pub parent_size: usize,
    pub flagged: usize,
    pub density: f64,
    pub prediction: f64,
}

/// Fraction of a sequence whose index avoids a residue class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRule {
    /// `own_sequence`: `{λ_n^(ℓ) : 2n+1 ≢ 0 mod 2r_ℓ+1}`;
    /// `parent_sequence`: `{n ∈ A_δ^(ℓ) : 2n+1 ≢ 0 mod 2r_k+1}` inside the parent sequence `k`.
    pub convention: String,
    pub ell: u8,
    pub sequence: u8,
    pub modulus: u64,
    pub density: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub xi: f64,
    pub ratio: f64,
    pub delta: f64,
    pub tau: f64,
    pub count: usize,
    pub classification: RatioClass,
    pub sequences: Vec<SequenceDensity>,
    pub index_rules: Vec<IndexRule>,
}

impl DensityReport {
    pub fn sequence(&self, ell: u8) -> &SequenceDensity {
        &self.sequences[(ell - 1) as usize]
    }
}

fn seq_index(lambda: f64, alpha: f64) -> u64 {
    ((lambda * 2.0 * alpha / PI - 1.0) / 2.0).round().max(0.0) as u64
}

/// Densities of `A_δ^(ℓ)` over the first `count` levels.
pub fn subsequence_density(
    alpha1: f64,
    alpha2: f64,
    xi: f64,
    delta: f64,
    count: usize,
    levels: &[TaggedLevel],
) -> Result<DensityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "δ must lie in (0,1), got {delta}"
        )));
    }
    if count < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 levels, got {count}"
        )));
    }
    if levels.len() < count {
        return Err(Error::InvalidInput(format!(
            "{} levels supplied, {count} requested",
            levels.len()
        )));
    }
    let levels = &levels[..count];
    let alphas = [alpha1, alpha2];
    let ratio = alpha1 / alpha2;
    let tau = delta.asin();
    let class = classify_ratio(ratio, DENOMINATOR_CAP, RATIONAL_TOL);
    let mut sequences = Vec::new();
    let mut rules = Vec::new();
    for ell in [1u8, 2u8] {
        let parent = 3 - ell;
        let a_ell = alphas[(ell - 1) as usize];
        let a_par = alphas[(parent - 1) as usize];
        let members: Vec<f64> = levels
            .iter()
            .filter(|l| l.seq == parent)
            .map(|l| l.lambda)
            .collect();
        let flagged = members
            .iter()
            .filter(|&&l| (a_ell * l).cos().abs() > delta)
            .count();
        let prediction = match class {
            RatioClass::Irrational => 1.0 - 2.0 * a_par / a_ell * tau,
            RatioClass::EvenOdd { .. } => 1.0,
            RatioClass::OddOdd { r1, r2, .. } => {
                let r = if parent == 2 { r2 } else { r1 } as f64;
                2.0 * r / (2.0 * r + 1.0)
            }
        };
        let size = members.len();
        let frac = |n: usize| {
            if size == 0 {
                0.0
            } else {
                n as f64 / size as f64
            }
        };
        sequences.push(SequenceDensity {
            ell,
            parent,
            parent_size: size,
            flagged,
            density: frac(flagged),
            prediction,
        });
        if let RatioClass::OddOdd { r1, r2, .. } = class {
            let r_of = |s: u8| if s == 1 { r1 } else { r2 };
            // Sequence ℓ itself, modulus 2r_ℓ+1.
            let own: Vec<f64> = levels
                .iter()
                .filter(|l| l.seq == ell)
                .map(|l| l.lambda)
                .collect();
            let m = 2 * r_of(ell) + 1;
            let kept = own
                .iter()
                .filter(|&&l| (2 * seq_index(l, a_ell) + 1) % m != 0)
                .count();
            rules.push(IndexRule {
                convention: "own_sequence".into(),
                ell,
                sequence: ell,
                modulus: m,
                density: if own.is_empty() {
                    0.0
                } else {
                    kept as f64 / own.len() as f64
                },
                prediction: 2.0 * r_of(ell) as f64 / m as f64,
            });
            // A_δ^(ℓ) inside the parent, modulus 2r_parent+1.
            let m = 2 * r_of(parent) + 1;
            let kept = members
                .iter()
                .filter(|&&l| {
                    (a_ell * l).cos().abs() > delta && (2 * seq_index(l, a_par) + 1) % m != 0
                })
                .count();
            rules.push(IndexRule {
                convention: "parent_sequence".into(),
                ell,
                sequence: parent,
                modulus: m,
                density: frac(kept),
                prediction: 2.0 * r_of(parent) as f64 / m as f64,
            });
        }
    }
    Ok(DensityReport {
        alpha1,
        alpha2,
        xi,
        ratio,
        delta,
        tau,
        count,
        classification: class,
        sequences,
        index_rules: rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wkbmat::{leading_roots_count, DoubleWell};

    #[test]
    fn classify() {
        assert_eq!(
            classify_ratio(1.0 / 3.0, 50, 1e-9),
            RatioClass::OddOdd {
                num: 1,
                den: 3,
                r1: 0,
                r2: 1
            }
        );
        assert_eq!(
            classify_ratio(0.5, 50, 1e-9),
            RatioClass::EvenOdd { num: 1, den: 2 }
        );
        assert_eq!(
            classify_ratio(2.0 / 3.0, 50, 1e-9),
            RatioClass::EvenOdd { num: 2, den: 3 }
        );
        assert_eq!(
            classify_ratio(0.5f64.sqrt(), 50, 1e-9),
            RatioClass::Irrational
        );
        assert_eq!(
            classify_ratio(1.0, 50, 1e-9),
            RatioClass::OddOdd {
                num: 1,
                den: 1,
                r1: 0,
                r2: 0
            }
        );
    }

    #[test]
    fn families() {
        let p = |c: &[f64]| Poly::from_real(c).unwrap();
        assert_eq!(Family::infer(&p(&[-1.0, 0.0, 1.0])), Some(Family::Harmonic));
        assert_eq!(
            Family::infer(&p(&[-1.0, 0.0, 0.0, 0.0, 1.0])),
            Some(Family::OneWellQuartic)
        );
        assert_eq!(
            Family::infer(&p(&[4.0, 0.0, -5.0, 0.0, 1.0])),
            Some(Family::SymmetricDoubleWell)
        );
        let ns = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 3.0], 1.0).unwrap();
        assert_eq!(Family::infer(&ns), Some(Family::NonsymmetricDoubleWell));
        assert!(Family::from_name("cubic").is_err());
    }

    #[test]
    fn symmetric_lines_carry_half_barrier_offset() {
        let p = Poly::from_real(&[4.0, 0.0, -5.0, 0.0, 1.0]).unwrap();
        let lines = predicted_zero_lines(Family::SymmetricDoubleWell, &p, 3.0).unwrap();
        let axis = lines.iter().find(|l| l.label == "imaginary_axis").unwrap();
        for y in [-2.0, -0.1, 0.5, 2.5] {
            let s = action(
                &p,
                &PathC::new(vec![axis.anchor_tp, re(0.0), im(y)], axis.branch_seed),
            )
            .unwrap()
            .s;
            assert!((s.re - axis.offset_c).abs() < 1e-10);
        }
    }

    #[test]
    fn nonsymmetric_third_branches_differ() {
        let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 3.0], 1.0).unwrap();
        let lines = predicted_zero_lines(Family::NonsymmetricDoubleWell, &p, 6.0).unwrap();
        let b1 = lines
            .iter()
            .find(|l| l.ell == Some(1) && l.label == "upper_branch")
            .unwrap();
        let b2 = lines
            .iter()
            .find(|l| l.ell == Some(2) && l.label == "upper_branch")
            .unwrap();
        assert_eq!(b1.anchor_tp, re(1.0));
        assert_eq!(b2.anchor_tp, re(-1.0));
        for l in [b1, b2] {
            let end = *l.curve.last().unwrap();
            let s = action(&p, &PathC::new(vec![l.anchor_tp, end], im(1.0)))
                .unwrap()
                .s;
            assert!(s.re.abs() < 1e-6 * (1.0 + s.norm()));
        }
    }

    #[test]
    fn densities_for_rational_ratios() {
        let roots = leading_roots_count(&DoubleWell::new(1.0, 3.0, 1.0).unwrap(), 500).unwrap();
        let r = subsequence_density(1.0, 3.0, 1.0, 0.1, 500, &tag_leading(&roots)).unwrap();
        assert!((r.sequence(1).density - 2.0 / 3.0).abs() < 0.01);
        assert!((r.sequence(1).prediction - 2.0 / 3.0).abs() < 1e-15);
        let roots = leading_roots_count(&DoubleWell::new(1.0, 2.0, 1.0).unwrap(), 500).unwrap();
        let r = subsequence_density(1.0, 2.0, 1.0, 0.1, 500, &tag_leading(&roots)).unwrap();
        assert!(r.sequence(1).density >= 0.99 && r.sequence(2).density >= 0.99);
        assert!(subsequence_density(1.0, 2.0, 1.0, 1.0, 500, &tag_leading(&roots)).is_err());
    }
}
