//! Deterministic JSON and CSV exports.
//!
//! Every artifact starts with the tool version and a digest of the run
//! configuration.  Floats are written in shortest round-trip form, and no
//! wall-clock or random data enters an export.

use crate::error::{Error, Result};
use crate::limits::{DensityReport, MeasureReport, ZeroLineFit};
use crate::spectrum::{quantization_defect, EigenRecord};
use crate::stokes::StokesGraph;
use crate::wkbmat::LeadingRoot;
use crate::zeros::{Rect, ZeroSet};
use serde::Serialize;

pub const TOOL: &str = "wkblab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// Hex sha256 of the canonical run configuration.
    pub config_digest: String,
}

impl Provenance {
    pub fn new(config_digest: impl Into<String>) -> Self {
        Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_digest: config_digest.into(),
        }
    }

    fn csv_comment(&self) -> String {
        format!(
            "# {} {} config_sha256={}\n",
            self.tool, self.version, self.config_digest
        )
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("export failed: {e}"))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    prov: &'a Provenance,
    kind: &'a str,
    data: &'a T,
}

/// Pretty JSON document `{tool, version, config_digest, kind, data}`.
pub fn json_document<T: Serialize>(prov: &Provenance, kind: &str, data: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { prov, kind, data }).map_err(io)?;
    s.push('\n');
    Ok(s)
}

/// CSV with a leading `#` provenance line.
pub fn csv_document<R: Serialize>(prov: &Provenance, rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(io)?).map_err(io)?;
    Ok(prov.csv_comment() + &body)
}

#[derive(Serialize)]
struct GraphHeader<'a> {
    #[serde(flatten)]
    prov: &'a Provenance,
    kind: &'static str,
    radius: f64,
    turning_points: &'a [crate::poly::TurningPoint],
    real_segments: &'a [crate::stokes::RealSegment],
}

/// Graph as JSON lines: a header, then one record per level line.
pub fn graph_jsonl(prov: &Provenance, g: &StokesGraph) -> Result<String> {
    let header = GraphHeader {
        prov,
        kind: "stokes_graph",
        radius: g.radius,
        turning_points: &g.turning_points,
        real_segments: &g.real_segments,
    };
    let mut out = serde_json::to_string(&header).map_err(io)?;
    out.push('\n');
    for l in &g.lines {
        out += &serde_json::to_string(l).map_err(io)?;
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub turning_points: usize,
    pub finite: usize,
    pub unbounded: usize,
    pub real_stokes_segments: usize,
    pub real_anti_stokes_segments: usize,
}

pub fn graph_summary(g: &StokesGraph) -> GraphSummary {
    use crate::stokes::LineKind;
    let count = |k: LineKind| g.real_segments.iter().filter(|s| s.kind == k).count();
    GraphSummary {
        turning_points: g.turning_points.len(),
        finite: g.finite_count(),
        unbounded: g.unbounded_count(),
        real_stokes_segments: count(LineKind::Stokes),
        real_anti_stokes_segments: count(LineKind::AntiStokes),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRow {
    pub n: usize,
    pub lambda: f64,
    pub lambda_tail: f64,
    pub residual: f64,
    pub well_tag: usize,
    pub tie: bool,
    pub resolved: bool,
    /// Nearest WKB value `(2m+1)π/(2α)` of the tagged well.
    pub wkb_lambda: f64,
    /// `λ·2α/π − (2m+1)` for the tagged well.
    pub wkb_defect: f64,
}

pub fn eigen_rows(records: &[EigenRecord], alphas: &[f64]) -> Vec<EigenRow> {
    records
        .iter()
        .map(|r| {
            let a = alphas[r.well_tag - 1];
            let defect = quantization_defect(a, r.lambda);
            let m = ((r.lambda * 2.0 * a / std::f64::consts::PI - defect - 1.0) / 2.0).round();
            EigenRow {
                n: r.n,
                lambda: r.lambda,
                lambda_tail: r.lambda_tail,
                residual: r.residual,
                well_tag: r.well_tag,
                tie: r.tie,
                resolved: r.resolved,
                wkb_lambda: (2.0 * m + 1.0) * std::f64::consts::PI / (2.0 * a),
                wkb_defect: defect,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct ZeroRecord {
    re: f64,
    im: f64,
    residual: f64,
    verified: bool,
}

#[derive(Serialize)]
struct ZeroExport<'a> {
    lambda: f64,
    n: usize,
    region: &'a Rect,
    winding: i64,
    zeros: Vec<ZeroRecord>,
}

pub fn zeros_json(prov: &Provenance, zs: &ZeroSet) -> Result<String> {
    let data = ZeroExport {
        lambda: zs.lambda,
        n: zs.n,
        region: &zs.region,
        winding: zs.winding,
        zeros: zs
            .zeros
            .iter()
            .map(|z| ZeroRecord {
                re: z.z.re,
                im: z.z.im,
                residual: z.residual,
                verified: z.verified,
            })
            .collect(),
    };
    json_document(prov, "zero_set", &data)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcCsvRow {
    pub curve: String,
    pub ell: Option<u8>,
    pub arc: usize,
    pub start_re: f64,
    pub start_im: f64,
    pub end_re: f64,
    pub end_im: f64,
    pub predicted_mass: f64,
    pub zero_count: usize,
    pub count_over_lambda: f64,
    pub relative_error: f64,
}

pub fn arc_rows(m: &MeasureReport) -> Vec<ArcCsvRow> {
    m.arcs
        .iter()
        .map(|a| ArcCsvRow {
            curve: a.curve.clone(),
            ell: a.ell,
            arc: a.arc,
            start_re: a.start.re,
            start_im: a.start.im,
            end_re: a.end.re,
            end_im: a.end.im,
            predicted_mass: a.predicted_mass,
            zero_count: a.zero_count,
            count_over_lambda: a.count_over_lambda,
            relative_error: a.relative_error,
        })
        .collect()
}

/// Comparison summary without the arc table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSummary {
    pub lambda: f64,
    pub kappa: f64,
    pub arc_mass: f64,
    pub arcs: usize,
    pub matched: usize,
    pub max_distance: f64,
    pub max_relative_error: f64,
    pub unmatched: usize,
    pub unmatched_outside_discs: usize,
    pub excluded: usize,
    pub fits: Vec<ZeroLineFit>,
}

pub fn measure_summary(m: &MeasureReport, fits: Vec<ZeroLineFit>) -> MeasureSummary {
    MeasureSummary {
        lambda: m.lambda,
        kappa: m.kappa,
        arc_mass: m.arc_mass,
        arcs: m.arcs.len(),
        matched: m.matched,
        max_distance: m.max_distance,
        max_relative_error: m.max_relative_error(),
        unmatched: m.unmatched.len(),
        unmatched_outside_discs: m.unmatched_outside_discs(),
        excluded: m.excluded,
        fits,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCsvRow {
    pub set: String,
    pub ell: u8,
    pub sequence: u8,
    pub modulus: Option<u64>,
    pub size: Option<usize>,
    pub flagged: Option<usize>,
    pub density: f64,
    pub prediction: f64,
}

pub fn density_rows(d: &DensityReport) -> Vec<DensityCsvRow> {
    let mut rows: Vec<DensityCsvRow> = d
        .sequences
        .iter()
        .map(|s| DensityCsvRow {
            set: "a_delta".into(),
            ell: s.ell,
            sequence: s.parent,
            modulus: None,
            size: Some(s.parent_size),
            flagged: Some(s.flagged),
            density: s.density,
            prediction: s.prediction,
        })
        .collect();
    rows.extend(d.index_rules.iter().map(|r| DensityCsvRow {
        set: format!("index_{}", r.convention),
        ell: r.ell,
        sequence: r.sequence,
        modulus: Some(r.modulus),
        size: None,
        flagged: None,
        density: r.density,
        prediction: r.prediction,
    }));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeadingRootRow {
    pub index: usize,
    pub lambda: f64,
    pub family: String,
    pub shift: f64,
}

pub fn leading_root_rows(roots: &[LeadingRoot]) -> Vec<LeadingRootRow> {
    roots
        .iter()
        .enumerate()
        .map(|(i, r)| LeadingRootRow {
            index: i,
            lambda: r.lambda,
            family: serde_json::to_value(r.family)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            shift: r.shift,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::stokes::{build_graph, TraceConfig};

    #[test]
    fn graph_export_is_repeatable() {
        let p = Poly::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        let prov = Provenance::new("00");
        let a = graph_jsonl(&prov, &build_graph(&p, &TraceConfig::default()).unwrap()).unwrap();
        let b = graph_jsonl(&prov, &build_graph(&p, &TraceConfig::default()).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 5);
        assert!(a
            .lines()
            .next()
            .unwrap()
            .contains("\"config_digest\":\"00\""));
    }

    #[test]
    fn csv_has_provenance_line() {
        let rows = vec![LeadingRootRow {
            index: 0,
            lambda: 1.5,
            family: "first".into(),
            shift: 0.0,
        }];
        let s = csv_document(&Provenance::new("ab"), &rows).unwrap();
        let mut lines = s.lines();
        assert!(lines.next().unwrap().starts_with("# wkblab "));
        assert_eq!(lines.next().unwrap(), "index,lambda,family,shift");
        assert_eq!(lines.next().unwrap(), "0,1.5,first,0.0");
    }
}
