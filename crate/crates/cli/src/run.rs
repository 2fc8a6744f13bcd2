//! Subcommand bodies: compute, then write exports into the output directory.

use crate::config::{c, ConfigError, RunConfig};
use crate::Failure;
use std::path::PathBuf;
use wkblab::action::{barrier_action, well_action};
use wkblab::export::{self, Provenance};
use wkblab::limits::{self, CompareConfig, Family};
use wkblab::spectrum::{self, calibrate_ratio, eigenvalues, well_actions, wells};
use wkblab::stokes::build_graph;
use wkblab::wkbmat::{leading_roots_count, DoubleWell};
use wkblab::zeros::{locate_zeros, Rect, ZeroConfig};
use wkblab::{Poly, Precision, ShootConfig, TraceConfig};

type Out = Result<Vec<String>, Failure>;

const DEFAULT_LAMBDA_MAX: f64 = 20.0;

struct Writer {
    dir: PathBuf,
    prov: Provenance,
}

impl Writer {
    fn new(cfg: &RunConfig) -> Result<Writer, Failure> {
        let dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "out".into()));
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::Config(format!("out {}: {e}", dir.display())))?;
        Ok(Writer {
            dir,
            prov: Provenance::new(cfg.digest()),
        })
    }

    fn put(&self, name: &str, body: String) -> Result<String, Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Ok(format!("wrote {name}"))
    }
}

fn shoot_config(cfg: &RunConfig) -> ShootConfig {
    let s = &cfg.spectrum;
    ShootConfig {
        precision: match s.precision.as_deref() {
            Some("double_double") => Precision::DoubleDouble,
            _ => Precision::Double,
        },
        cutoff: s.cutoff,
        match_point: s.match_point,
        ..ShootConfig::default()
    }
}

pub fn graph(cfg: &RunConfig) -> Out {
    let p = cfg.poly()?;
    let mut tc = TraceConfig {
        radius: cfg.graph.radius,
        max_length: cfg.graph.max_length,
        ..TraceConfig::default()
    };
    if let Some(t) = cfg.tolerances.trace_tol {
        tc.tol = t;
    }
    let g = build_graph(&p, &tc)?;
    let w = Writer::new(cfg)?;
    let summary = export::graph_summary(&g);
    let mut lines = vec![
        w.put("graph.jsonl", export::graph_jsonl(&w.prov, &g)?)?,
        w.put(
            "graph_summary.json",
            export::json_document(&w.prov, "graph_summary", &summary)?,
        )?,
    ];
    lines.push(format!(
        "turning points {}, finite {}, unbounded {}, real anti-stokes segments {}",
        summary.turning_points,
        summary.finite,
        summary.unbounded,
        summary.real_anti_stokes_segments
    ));
    Ok(lines)
}

pub fn spectrum(cfg: &RunConfig) -> Out {
    let p = cfg.poly()?;
    let lmax = cfg.spectrum.lambda_max.unwrap_or(DEFAULT_LAMBDA_MAX);
    let ev = eigenvalues(&p, lmax, &shoot_config(cfg))?;
    let alphas = well_actions(&p)?;
    let w = Writer::new(cfg)?;
    let rows = export::eigen_rows(&ev, &alphas);
    Ok(vec![
        w.put("eigenvalues.csv", export::csv_document(&w.prov, &rows)?)?,
        format!("{} eigenvalues below {lmax}", ev.len()),
    ])
}

fn default_region(p: &Poly) -> Result<Rect, Failure> {
    let r = p.roots()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let r = 1.5 * (1.0 + r);
    Ok(Rect::new(-r, r, -r, r)?)
}

fn pick_level(p: &Poly, cfg: &RunConfig) -> Result<spectrum::EigenRecord, Failure> {
    let sc = shoot_config(cfg);
    let mut lmax = cfg.spectrum.lambda_max.unwrap_or(DEFAULT_LAMBDA_MAX);
    for _ in 0..8 {
        let ev = eigenvalues(p, lmax, &sc)?;
        match cfg.zeros.n {
            Some(n) => {
                if let Some(r) = ev.iter().find(|r| r.n == n) {
                    return Ok(r.clone());
                }
            }
            None => {
                return ev
                    .last()
                    .cloned()
                    .ok_or_else(|| Failure::Config(format!("no eigenvalue below λ = {lmax}")));
            }
        }
        lmax *= 2.0;
    }
    Err(Failure::Numerical(
        "requested eigenvalue index not reached".into(),
    ))
}

/// Fits on the non-real predicted lines of the families where they are
/// straight rays.
fn fits(
    p: &Poly,
    family: Family,
    zs: &wkblab::ZeroSet,
    tube: f64,
) -> Result<Vec<limits::ZeroLineFit>, Failure> {
    let region = zs.region;
    let upper = |x0: f64, x1: f64, y0: f64| Rect::new(x0, x1, y0.max(region.y0), region.y1).ok();
    let mut out = Vec::new();
    let real = p.real_turning_points()?;
    let try_fit =
        |anchor, via, seed, sub: Option<Rect>| -> Result<Option<limits::ZeroLineFit>, Failure> {
            let Some(sub) = sub else { return Ok(None) };
            match limits::fit_zero_line(p, zs, anchor, via, seed, &sub) {
                Ok(f) => Ok(Some(f)),
                Err(wkblab::Error::TooFewZeros(_)) => Ok(None),
                Err(e) => Err(e.into()),
            }
        };
    match family {
        Family::SymmetricDoubleWell => {
            let a = real[2];
            out.extend(try_fit(
                c(a, 0.0),
                Some(c(0.0, 0.0)),
                c(1.0, 0.0),
                upper(-tube, tube, tube),
            )?);
        }
        Family::OneWellQuartic => {
            let b = p
                .simple_turning_points()?
                .iter()
                .map(|t| t.z.im)
                .fold(0.0, f64::max);
            out.extend(try_fit(
                c(0.0, b),
                None,
                c(1.0, 0.0),
                upper(-tube, tube, b + tube),
            )?);
        }
        _ => {}
    }
    Ok(out)
}

pub fn zeros(cfg: &RunConfig) -> Out {
    let p = cfg.poly()?;
    let region = match cfg.region()? {
        Some(r) => r,
        None => default_region(&p)?,
    };
    let rec = pick_level(&p, cfg)?;
    let mut zc = ZeroConfig {
        shoot: shoot_config(cfg),
        ..ZeroConfig::default()
    };
    if let Some(t) = cfg.tolerances.newton_tol {
        zc.newton_tol = t;
    }
    if let Some(f) = cfg.tolerances.pitch_factor {
        zc.pitch_factor = f;
    }
    let zs = locate_zeros(&p, rec.lambda, rec.n, &region, &zc)?;
    let w = Writer::new(cfg)?;
    let mut lines = vec![
        w.put("zeros.json", export::zeros_json(&w.prov, &zs)?)?,
        format!(
            "n = {}, λ = {}, {} zeros in region",
            zs.n,
            zs.lambda,
            zs.zeros.len()
        ),
    ];
    let family = match &cfg.zeros.family {
        Some(_) => cfg.family()?,
        None => Family::infer(&p),
    };
    let lines_for = family.and_then(|f| {
        let radius = region
            .x0
            .abs()
            .max(region.x1.abs())
            .hypot(region.y0.abs().max(region.y1.abs()))
            + 1.0;
        limits::predicted_zero_lines(f, &p, radius)
            .ok()
            .map(|l| (f, l))
    });
    match lines_for {
        Some((f, predicted)) => {
            let cc = CompareConfig {
                kappa: cfg.zeros.kappa.unwrap_or(10.0),
                arc_mass: cfg.zeros.arc_mass.unwrap_or(0.05),
            };
            let report = limits::compare_measure(&p, &zs, &predicted, &cc)?;
            let fitted = fits(&p, f, &zs, cc.kappa / zs.lambda)?;
            let summary = export::measure_summary(&report, fitted);
            lines.push(w.put(
                "arcs.csv",
                export::csv_document(&w.prov, &export::arc_rows(&report))?,
            )?);
            lines.push(w.put(
                "measure.json",
                export::json_document(
                    &w.prov,
                    "measure_report",
                    &serde_json::json!({
                        "family": f.name(),
                        "status": "compared",
                        "summary": summary,
                        "unmatched": report.unmatched,
                    }),
                )?,
            )?);
            lines.push(format!(
                "family {}: matched {}, unmatched {}, max distance·λ {:.4}",
                f.name(),
                summary.matched,
                summary.unmatched,
                summary.max_distance * zs.lambda
            ));
            for fit in &summary.fits {
                lines.push(format!(
                    "c_fit {:.6} (rms {:.3e}, median gap {:.3})",
                    fit.c_fit, fit.residual_rms, fit.median_gap
                ));
            }
        }
        None => {
            lines.push(w.put(
                "measure.json",
                export::json_document(
                    &w.prov,
                    "measure_report",
                    &serde_json::json!({
                        "family": cfg.zeros.family,
                        "status": "skipped",
                    }),
                )?,
            )?);
            lines.push("comparison skipped: family not recognised".into());
        }
    }
    Ok(lines)
}

fn quartic_roots(p: &Poly) -> Result<[f64; 4], Failure> {
    let real = p.real_turning_points()?;
    if p.degree() != 4 || real.len() != 4 {
        return Err(ConfigError("potential must be a quartic with four real roots".into()).into());
    }
    Ok([real[0], real[1], real[2], real[3]])
}

fn double_well(p: &Poly) -> Result<DoubleWell, Failure> {
    let r = quartic_roots(p)?;
    let a1 = well_action(p, r[0], r[1])?;
    let a2 = well_action(p, r[2], r[3])?;
    let xi = barrier_action(p, r[1], r[2])?;
    Ok(DoubleWell::new(a1, a2, xi)?)
}

pub fn density(cfg: &RunConfig) -> Out {
    let mut p = cfg.poly()?;
    let mut lines = Vec::new();
    if let Some(target) = cfg.density.ratio {
        let roots = calibrate_ratio(
            quartic_roots(&p)?,
            cfg.density.free_root.unwrap_or(1),
            target,
        )?;
        p = Poly::from_real_roots(&roots, p.leading().re)?;
        lines.push(format!("calibrated roots {roots:?}"));
    }
    let d = double_well(&p)?;
    let count = cfg.density.count.unwrap_or(500);
    let delta = cfg.density.delta.unwrap_or(0.1);
    let roots = leading_roots_count(&d, count)?;
    let levels = match cfg.density.source.as_deref() {
        Some("computed") => {
            let top = roots.last().map(|r| r.lambda).unwrap_or(1.0) * 1.02 + 1.0;
            let ev = eigenvalues(&p, top, &shoot_config(cfg))?;
            let l: Vec<f64> = ev.iter().map(|r| r.lambda).collect();
            limits::tag_computed(&l, d.alpha1, d.alpha2)
        }
        _ => limits::tag_leading(&roots),
    };
    let report = limits::subsequence_density(d.alpha1, d.alpha2, d.xi, delta, count, &levels)?;
    let w = Writer::new(cfg)?;
    lines.push(w.put(
        "density.csv",
        export::csv_document(&w.prov, &export::density_rows(&report))?,
    )?);
    lines.push(w.put(
        "density.json",
        export::json_document(&w.prov, "density_report", &report)?,
    )?);
    lines.push(w.put(
        "leading_roots.csv",
        export::csv_document(&w.prov, &export::leading_root_rows(&roots))?,
    )?);
    for s in &report.sequences {
        lines.push(format!(
            "A_delta({}) in sequence {}: density {:.4}, prediction {:.4}",
            s.ell, s.parent, s.density, s.prediction
        ));
    }
    Ok(lines)
}

pub fn calibrate(cfg: &RunConfig) -> Out {
    let p = cfg.poly()?;
    let target = cfg
        .calibrate
        .target
        .ok_or_else(|| ConfigError("calibrate.target (or --ratio) is required".into()))?;
    let roots = calibrate_ratio(
        quartic_roots(&p)?,
        cfg.calibrate.free_root.unwrap_or(1),
        target,
    )?;
    let q = Poly::from_real_roots(&roots, p.leading().re)?;
    let d = double_well(&q)?;
    let w = Writer::new(cfg)?;
    let data = serde_json::json!({
        "roots": roots,
        "alpha1": d.alpha1,
        "alpha2": d.alpha2,
        "xi": d.xi,
        "ratio": d.ratio(),
        "wells": wells(&q)?,
    });
    Ok(vec![
        w.put(
            "calibration.json",
            export::json_document(&w.prov, "calibration", &data)?,
        )?,
        format!("roots {roots:?}, ratio {}", d.ratio()),
    ])
}
