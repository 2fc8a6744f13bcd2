use proptest::prelude::*;
use wkblab::action::{action, well_action};
use wkblab::spectrum::eigenvalues;
use wkblab::stokes::build_graph;
use wkblab::wkbmat::{double_well_b, double_well_product, DoubleWell};
use wkblab::zeros::{count_zeros_box, locate_zeros, EigenAnchor};
use wkblab::{Complex64 as C64, PathC, Poly, Rect, ShootConfig, TraceConfig, ZeroConfig};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn quartic() -> Poly {
    Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn product_matches_closed_form(a1 in 0.2f64..3.0, a2 in 0.2f64..3.0, xi in 0.1f64..2.0, l in 0.5f64..15.0) {
        let d = DoubleWell::new(a1, a2, xi).unwrap();
        let [_, b] = double_well_product(l, &d);
        let exact = double_well_b(l, &d);
        prop_assert!((b - exact).norm() <= 1e-12 * exact.norm().max(1.0));
    }

    #[test]
    fn action_is_path_independent(x in -0.8f64..0.8, y in 0.3f64..2.0, vx in -1.5f64..1.5, vy in 0.2f64..2.5) {
        // The triangle anchor, via, z stays in the upper half plane, clear of the real turning points.
        let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap();
        let a = c(0.0, 3.0);
        let (z, via) = (c(x, y), c(vx, vy + 0.5));
        let direct = action(&p, &PathC::segment(a, z, c(1.0, 0.0))).unwrap().s;
        let bent = action(&p, &PathC::new(vec![a, via, z], c(1.0, 0.0))).unwrap().s;
        prop_assert!((direct - bent).norm() <= 1e-8 * (1.0 + direct.norm()));
    }

    #[test]
    fn well_action_scales(s in 0.3f64..3.0) {
        // q(x) = s²x² − 1 has well [−1/s, 1/s] and action π/(2s).
        let p = Poly::from_real(&[-1.0, 0.0, s * s]).unwrap();
        let v = well_action(&p, -1.0 / s, 1.0 / s).unwrap();
        prop_assert!((v - std::f64::consts::PI / (2.0 * s)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn winding_is_additive(sx in -1.9f64..1.9, sy in -1.9f64..1.9) {
        let p = quartic();
        let ev = eigenvalues(&p, 12.0, &ShootConfig::default()).unwrap();
        let r = ev.last().unwrap();
        let anchor = EigenAnchor::new(&p, r.lambda, r.n, &ShootConfig::default(), 3.2).unwrap();
        let cfg = ZeroConfig::default();
        let count = |b: Rect| count_zeros_box(&p, &anchor, &b, &cfg);
        // Skip split lines that hit a zero; the box counter then inflates the box.
        let whole = count(Rect::new(-2.0, 2.0, -2.0, 2.0).unwrap()).unwrap();
        let parts = [
            Rect::new(-2.0, sx, -2.0, sy).unwrap(),
            Rect::new(sx, 2.0, -2.0, sy).unwrap(),
            Rect::new(-2.0, sx, sy, 2.0).unwrap(),
            Rect::new(sx, 2.0, sy, 2.0).unwrap(),
        ];
        let mut sum = 0;
        for b in parts {
            let bc = count(b).unwrap();
            prop_assume!(bc.region == b);
            sum += bc.winding;
        }
        prop_assert_eq!(whole.winding, sum);
    }
}

#[test]
fn graphs_are_conjugation_symmetric() {
    for roots in [[-2.0, -1.0, 1.0, 2.0], [-2.0, -1.3, 0.7, 2.0]] {
        let p = Poly::from_real_roots(&roots, 1.0).unwrap();
        let g = build_graph(&p, &TraceConfig::default()).unwrap();
        for l in &g.lines {
            let best = g
                .lines
                .iter()
                .map(|m| {
                    l.nodes
                        .iter()
                        .map(|z| wkblab::stokes::polyline_distance(z.conj(), &m.nodes))
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-8, "{roots:?}: {best}");
        }
    }
}

#[test]
fn zeros_are_conjugation_symmetric() {
    let p = quartic();
    let ev = eigenvalues(&p, 15.0, &ShootConfig::default()).unwrap();
    let r = ev.last().unwrap();
    let zs = locate_zeros(
        &p,
        r.lambda,
        r.n,
        &Rect::new(-2.5, 2.5, -2.5, 2.5).unwrap(),
        &ZeroConfig::default(),
    )
    .unwrap();
    let pts = zs.points();
    assert!(pts.len() > r.n);
    for z in &pts {
        let d = pts
            .iter()
            .map(|w| (z.conj() - w).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-8, "{z}: {d}");
    }
}

#[test]
fn spectrum_is_cutoff_and_grid_robust() {
    let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap();
    let base = eigenvalues(&p, 12.0, &ShootConfig::default()).unwrap();
    for cfg in [
        ShootConfig {
            cutoff: Some(5.0),
            ..Default::default()
        },
        ShootConfig {
            grid_step: Some(0.03),
            ..Default::default()
        },
    ] {
        let other = eigenvalues(&p, 12.0, &cfg).unwrap();
        assert_eq!(base.len(), other.len());
        for (a, b) in base.iter().zip(&other) {
            assert!(
                (a.lambda - b.lambda).abs() <= 1e-8 * a.lambda,
                "{} vs {}",
                a.lambda,
                b.lambda
            );
        }
    }
}
