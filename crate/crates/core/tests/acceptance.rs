//! Acceptance run: one line per criterion, exit status 1 if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use wkblab::action::{action, agmon_mass, barrier_action, well_action};
use wkblab::limits::{
    compare_measure, empirical_measure, fit_zero_line, predicted_zero_lines, subsequence_density,
    tag_leading, CompareConfig, Family,
};
use wkblab::spectrum::{calibrate_ratio, eigenvalues, pair_splittings};
use wkblab::stokes::{build_graph, polyline_distance};
use wkblab::wkbmat::{
    double_well_b, double_well_product, leading_roots_count, symmetric_splittings, DoubleWell,
};
use wkblab::zeros::{count_zeros_box, locate_zeros, EigenAnchor};
use wkblab::{Complex64 as C64, PathC, Poly, Rect, ShootConfig, TraceConfig, ZeroConfig, ZeroSet};

type Verdict = Result<String, String>;

/// Every zero set located along the way, for the spacing check.
static SETS: Mutex<Vec<(Poly, ZeroSet)>> = Mutex::new(Vec::new());

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn poly(coeffs: &[f64]) -> Poly {
    Poly::from_real(coeffs).unwrap()
}

fn zeros(p: &Poly, lambda: f64, n: usize, region: Rect) -> ZeroSet {
    let zs = locate_zeros(p, lambda, n, &region, &ZeroConfig::default()).unwrap();
    SETS.lock().unwrap().push((p.clone(), zs.clone()));
    zs
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Roots of the physicists' Hermite polynomial of degree 5, in closed form.
fn hermite5_roots() -> [f64; 5] {
    let a = ((5.0 - 10f64.sqrt()) / 2.0).sqrt();
    let b = ((5.0 + 10f64.sqrt()) / 2.0).sqrt();
    [-b, -a, 0.0, a, b]
}

fn harmonic_oracle() -> Verdict {
    let p = poly(&[-1.0, 0.0, 1.0]);
    let ev = eigenvalues(&p, 22.0, &ShootConfig::default()).unwrap();
    let spec_err = ev
        .iter()
        .enumerate()
        .map(|(k, r)| (r.lambda - (2 * k + 1) as f64).abs())
        .fold(0.0, f64::max);
    let zs = zeros(
        &p,
        ev[5].lambda,
        5,
        Rect::new(-2.0, 2.0, -2.0, 2.0).unwrap(),
    );
    let scale = ev[5].lambda.sqrt();
    let max_im = zs.zeros.iter().map(|z| z.z.im.abs()).fold(0.0, f64::max);
    let root_err = if zs.zeros.len() == 5 {
        zs.zeros
            .iter()
            .zip(hermite5_roots())
            .map(|(z, t)| (z.z.re - t / scale).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    check(
        ev.len() == 11 && spec_err < 1e-8 && zs.zeros.len() == 5 && max_im < 1e-8 && root_err < 1e-8,
        format!(
            "{} eigenvalues, max error {spec_err:.1e}; {} zeros, max |Im| {max_im:.1e}, Hermite error {root_err:.1e}",
            ev.len(),
            zs.zeros.len()
        ),
    )
}

fn closed_form_actions() -> Verdict {
    let p = poly(&[-1.0, 0.0, 1.0]);
    let wa = well_action(&p, -1.0, 1.0).unwrap();
    let mass = agmon_mass(&p, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
    let ev = eigenvalues(&p, 21.5, &ShootConfig::default()).unwrap();
    let zs = zeros(
        &p,
        ev[10].lambda,
        10,
        Rect::new(-2.0, 2.0, -2.0, 2.0).unwrap(),
    );
    let total = empirical_measure(&zs).total_mass;
    let rel = (total - 0.5).abs() / 0.5;
    check(
        (wa - PI / 2.0).abs() < 1e-10 && (mass - 0.5).abs() < 1e-10 && rel <= 0.02,
        format!(
            "well action error {:.1e}, mass error {:.1e}, n/λ_n = {}/{} = {total:.5} ({:.2}% from 1/2)",
            (wa - PI / 2.0).abs(),
            (mass - 0.5).abs(),
            zs.zeros.len(),
            zs.lambda,
            100.0 * rel
        ),
    )
}

fn quartic_quantization() -> Verdict {
    let p = poly(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
    let alpha = well_action(&p, -1.0, 1.0).unwrap();
    let ev = eigenvalues(&p, 29.0, &ShootConfig::default()).unwrap();
    let defect: Vec<f64> = (5..=15)
        .map(|n| (ev[n].lambda * 2.0 * alpha / PI - (2 * n + 1) as f64).abs())
        .collect();
    let decreasing = defect.windows(2).all(|w| w[1] < w[0]);
    let c_bound = (5..=15)
        .zip(&defect)
        .map(|(n, d)| n as f64 * d)
        .fold(0.0, f64::max);
    let last = *defect.last().unwrap();
    check(
        decreasing && last < 0.05,
        format!("defect n=5: {:.4}, n=15: {last:.4}, decreasing {decreasing}, max n·defect {c_bound:.3}", defect[0]),
    )
}

fn one_well_limit() -> Verdict {
    let p = poly(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
    let ev = eigenvalues(&p, 52.0, &ShootConfig::default()).unwrap();
    let top = ev.last().unwrap();
    if top.lambda < 50.0 {
        return Err(format!("largest eigenvalue {} below 50", top.lambda));
    }
    let zs = zeros(
        &p,
        top.lambda,
        top.n,
        Rect::new(-3.0, 3.0, 0.05, 3.0).unwrap(),
    );
    let lines = predicted_zero_lines(Family::OneWellQuartic, &p, 6.0).unwrap();
    let cfg = CompareConfig {
        kappa: 10.0,
        arc_mass: 0.25,
    };
    let m = compare_measure(&p, &zs, &lines, &cfg).unwrap();
    let tube = 10.0 / zs.lambda;
    let err = m.max_relative_error();
    check(
        m.unmatched.is_empty() && m.max_distance <= tube && err <= 0.10 && !m.arcs.is_empty(),
        format!(
            "n = {}, λ = {:.4}: {} zeros, max distance {:.1e} (tube {tube:.3}), {} arcs, max arc error {:.1}%",
            zs.n,
            zs.lambda,
            zs.zeros.len(),
            m.max_distance,
            m.arcs.len(),
            100.0 * err
        ),
    )
}

fn two_well_offset() -> Verdict {
    let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap();
    let xi = barrier_action(&p, -1.0, 1.0).unwrap();
    let ev = eigenvalues(&p, 40.0, &ShootConfig::default()).unwrap();
    let top = ev.last().unwrap();
    let zs = zeros(
        &p,
        top.lambda,
        top.n,
        Rect::new(-0.5, 0.5, 0.05, 3.0).unwrap(),
    );
    let tube = 10.0 / zs.lambda;
    let subset = Rect::new(-tube, tube, 0.05, 3.0).unwrap();
    let fit = fit_zero_line(
        &p,
        &zs,
        c(1.0, 0.0),
        Some(c(0.0, 0.0)),
        c(1.0, 0.0),
        &subset,
    )
    .unwrap();
    let off = (fit.c_fit + xi / 2.0).abs();
    check(
        off <= 0.02 * xi && fit.residual_rms < 0.5 / zs.lambda && (0.9..=1.1).contains(&fit.median_gap),
        format!(
            "n = {}, λ = {:.4}: {} axis zeros, c_fit {:.6} vs -ξ/2 = {:.6}, rms·λ {:.1e}, median gap {:.4}",
            zs.n,
            zs.lambda,
            fit.count,
            fit.c_fit,
            -xi / 2.0,
            fit.residual_rms * zs.lambda,
            fit.median_gap
        ),
    )
}

fn transition_matrices() -> Verdict {
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let f = |m: f64| ((k as f64 + 1.0) * m).fract();
        let d = DoubleWell::new(
            0.2 + 2.8 * f(0.7548776662),
            0.2 + 2.8 * f(0.5698402910),
            0.1 + 1.9 * f(0.4301597090),
        )
        .unwrap();
        let lambda = 0.5 + 14.5 * f(0.6180339887);
        let [_, b] = double_well_product(lambda, &d);
        let exact = double_well_b(lambda, &d);
        worst = worst.max((b - exact).norm() / exact.norm().max(1.0));
    }
    let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap();
    let alpha = well_action(&p, 1.0, 2.0).unwrap();
    let xi = barrier_action(&p, -1.0, 1.0).unwrap();
    let predicted = symmetric_splittings(&DoubleWell::new(alpha, alpha, xi).unwrap(), 5).unwrap();
    let shot = pair_splittings(&p, 5, &ShootConfig::default()).unwrap();
    let ratios: Vec<f64> = predicted.iter().zip(&shot).map(|(a, b)| a / b).collect();
    let in_band = ratios.iter().all(|r| (1.0 / 3.0..=3.0).contains(r));
    check(
        worst <= 1e-12 && in_band,
        format!(
            "product vs closed form {worst:.1e} over 100 samples; predicted/shot splitting ratios {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn density_for(rho: f64, delta: f64) -> Result<(f64, f64), String> {
    let roots = calibrate_ratio([-2.0, -1.0, 1.0, 2.0], 1, rho).map_err(|e| e.to_string())?;
    let p = Poly::from_real_roots(&roots, 1.0).unwrap();
    let a1 = well_action(&p, roots[0], roots[1]).unwrap();
    let a2 = well_action(&p, roots[2], roots[3]).unwrap();
    let xi = barrier_action(&p, roots[1], roots[2]).unwrap();
    let lead = leading_roots_count(&DoubleWell::new(a1, a2, xi).unwrap(), 500).unwrap();
    let r = subsequence_density(a1, a2, xi, delta, 500, &tag_leading(&lead))
        .map_err(|e| e.to_string())?;
    Ok((r.sequence(1).density, a2 / a1))
}

fn density_odd_odd() -> Verdict {
    let (d, _) = density_for(1.0 / 3.0, 0.1)?;
    check(
        (d - 2.0 / 3.0).abs() <= 0.05,
        format!("ρ = 1/3: density {d:.4}, target 2/3"),
    )
}

fn density_even_odd() -> Verdict {
    let (d, _) = density_for(0.5, 0.1)?;
    check(d >= 0.99, format!("ρ = 1/2: density {d:.4}, target ≥ 0.99"))
}

fn density_irrational() -> Verdict {
    let (d, inv) = density_for(2f64.sqrt() / 2.0, 0.1)?;
    let target = 1.0 - 2.0 * inv * 0.1f64.asin();
    check(
        (d - target).abs() <= 0.05,
        format!(
            "ρ = √2/2, δ = 0.1: density {d:.4}, target {target:.4} (equidistribution gives {:.4})",
            1.0 - 2.0 * 0.1f64.asin() / PI
        ),
    )
}

/// Largest `|q|` on the disc with diameter `[a, b]`, sampled on its boundary.
fn disc_max(p: &Poly, a: C64, b: C64) -> f64 {
    let (m, r) = ((a + b) * 0.5, (b - a).norm() * 0.5);
    (0..512)
        .map(|k| {
            p.eval(m + C64::from_polar(r, 2.0 * PI * k as f64 / 512.0))
                .norm()
        })
        .fold(0.0, f64::max)
}

fn hille_spacing() -> Verdict {
    let sets = SETS.lock().unwrap();
    let mut worst = f64::INFINITY;
    let mut pairs = 0usize;
    for (p, zs) in sets.iter() {
        let pts = zs.points();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = (pts[i] - pts[j]).norm();
                let bound = 0.999 * PI / (disc_max(p, pts[i], pts[j]).sqrt() * zs.lambda);
                worst = worst.min(d / bound);
                pairs += 1;
            }
        }
    }
    check(
        sets.len() >= 4 && worst >= 1.0,
        format!(
            "{} zero sets, {pairs} pairs, min distance / bound {worst:.4}",
            sets.len()
        ),
    )
}

fn graph_conjugation(p: &Poly) -> f64 {
    let g = build_graph(p, &TraceConfig::default()).unwrap();
    g.lines
        .iter()
        .map(|l| {
            g.lines
                .iter()
                .map(|m| {
                    l.nodes
                        .iter()
                        .map(|z| polyline_distance(z.conj(), &m.nodes))
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn properties() -> Verdict {
    let quartic = poly(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
    let two_well = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap();
    let skew = Poly::from_real_roots(&[-2.0, -1.2, 1.0, 2.0], 1.0).unwrap();
    let graph_err = [&quartic, &two_well, &skew]
        .iter()
        .map(|p| graph_conjugation(p))
        .fold(0.0, f64::max);

    let ev = eigenvalues(&quartic, 20.0, &ShootConfig::default()).unwrap();
    let zs = zeros(
        &quartic,
        ev[10].lambda,
        10,
        Rect::new(-3.0, 3.0, -3.0, 3.0).unwrap(),
    );
    let pts = zs.points();
    let zero_err = pts
        .iter()
        .map(|z| {
            pts.iter()
                .map(|w| (z.conj() - w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);

    let anchor =
        EigenAnchor::new(&quartic, ev[10].lambda, 10, &ShootConfig::default(), 3.2).unwrap();
    let cfg = ZeroConfig::default();
    let count = |r: Rect| {
        count_zeros_box(&quartic, &anchor, &r, &cfg)
            .unwrap()
            .winding
    };
    let mut additive = true;
    for (sx, sy) in [(0.3137, 0.4213), (-0.871, 1.093), (1.2345, -0.5432)] {
        let whole = count(Rect::new(-2.5, 2.5, -2.5, 2.5).unwrap());
        let left = count(Rect::new(-2.5, sx, -2.5, 2.5).unwrap());
        let right_lo = count(Rect::new(sx, 2.5, -2.5, sy).unwrap());
        let right_hi = count(Rect::new(sx, 2.5, sy, 2.5).unwrap());
        additive &= whole == left + right_lo + right_hi
            && whole
                == pts
                    .iter()
                    .filter(|z| z.norm_sqr() < 1e9 && z.re.abs() < 2.5 && z.im.abs() < 2.5)
                    .count() as i64;
    }

    let mut path_err: f64 = 0.0;
    for (p, a, z, via) in [
        (&two_well, c(1.0, 0.0), c(0.3, 1.2), c(1.5, 0.5)),
        (&two_well, c(2.0, 0.0), c(2.7, 0.9), c(2.1, 1.6)),
        (&quartic, c(0.0, 1.0), c(0.2, 2.5), c(-0.6, 1.9)),
        (&skew, c(1.0, 0.0), c(0.1, 0.8), c(0.9, 1.1)),
    ] {
        let direct = action(p, &PathC::segment(a, z, c(1.0, 0.0))).unwrap().s;
        let bent = action(p, &PathC::new(vec![a, via, z], c(1.0, 0.0)))
            .unwrap()
            .s;
        path_err = path_err.max((direct - bent).norm() / (1.0 + direct.norm()));
    }

    let base = eigenvalues(&quartic, 20.0, &ShootConfig::default()).unwrap();
    let mut spec_err: f64 = 0.0;
    for cfg in [
        ShootConfig {
            cutoff: Some(4.0),
            ..Default::default()
        },
        ShootConfig {
            cutoff: Some(5.5),
            ..Default::default()
        },
        ShootConfig {
            grid_step: Some(0.05),
            ..Default::default()
        },
        ShootConfig {
            cutoff_decay: Some(48.0),
            grid_step: Some(0.2),
            ..Default::default()
        },
    ] {
        let other = eigenvalues(&quartic, 20.0, &cfg).unwrap();
        if other.len() != base.len() {
            return Err(format!(
                "{cfg:?} found {} eigenvalues, default {}",
                other.len(),
                base.len()
            ));
        }
        for (a, b) in base.iter().zip(&other) {
            spec_err = spec_err.max((a.lambda - b.lambda).abs() / a.lambda);
        }
    }
    check(
        graph_err <= 1e-8 && zero_err <= 1e-8 && additive && path_err <= 1e-8 && spec_err <= 1e-8,
        format!(
            "graph conjugation {graph_err:.1e}, zero conjugation {zero_err:.1e}, winding additive {additive}, path independence {path_err:.1e}, spectrum robustness {spec_err:.1e}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("1 harmonic oracle", harmonic_oracle),
        ("2 closed-form actions", closed_form_actions),
        ("3 quartic quantization", quartic_quantization),
        ("4 one-well zero limit", one_well_limit),
        ("5 two-well offset", two_well_offset),
        ("6 transition matrices", transition_matrices),
        ("7a density rho=1/3", density_odd_odd),
        ("7b density rho=1/2", density_even_odd),
        ("7c density rho=sqrt2/2", density_irrational),
        ("9 properties", properties),
        ("8 Hille spacing", hille_spacing),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let verdict = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(v) => v,
            Err(e) => Err(format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            )),
        };
        match verdict {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
