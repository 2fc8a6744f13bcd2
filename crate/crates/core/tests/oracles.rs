use std::f64::consts::PI;
use wkblab::action::{agmon_mass, barrier_action, well_action};
use wkblab::spectrum::{eigenvalues, pair_splittings};
use wkblab::stokes::build_graph;
use wkblab::{Complex64 as C64, Poly, ShootConfig, TraceConfig};

/// `∫_a^b f` after `x = m + h sin θ`, which removes square-root endpoint behaviour.
fn simpson_sine(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let n = 20_000;
    let g = |t: f64| f(m + h * t.sin()) * h * t.cos();
    let step = PI / n as f64;
    let mut s = g(-PI / 2.0) + g(PI / 2.0);
    for k in 1..n {
        s += g(-PI / 2.0 + k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * step / 3.0
}

#[test]
fn quartic_well_action_matches_beta_function() {
    // ∫_{-1}^{1} sqrt(1 - x⁴) dx = Γ(1/4) Γ(3/2) / (2 Γ(7/4)).
    let gamma_quarter = 3.625_609_908_221_908_3;
    let gamma_seven_quarters = 0.919_062_526_848_883_2;
    let exact = gamma_quarter * (PI.sqrt() / 2.0) / (2.0 * gamma_seven_quarters);
    let p = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    assert!((well_action(&p, -1.0, 1.0).unwrap() - exact).abs() < 1e-12);
}

#[test]
fn double_well_actions_match_quadrature() {
    let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap();
    let q = |x: f64| (x * x - 1.0) * (x * x - 4.0);
    let alpha = simpson_sine(|x| (-q(x)).max(0.0).sqrt(), 1.0, 2.0);
    let xi = simpson_sine(|x| q(x).max(0.0).sqrt(), -1.0, 1.0);
    assert!((well_action(&p, 1.0, 2.0).unwrap() - alpha).abs() < 1e-9);
    assert!((well_action(&p, -2.0, -1.0).unwrap() - alpha).abs() < 1e-9);
    assert!((barrier_action(&p, -1.0, 1.0).unwrap() - xi).abs() < 1e-9);
}

#[test]
fn agmon_mass_of_harmonic_well() {
    let p = Poly::from_real(&[-1.0, 0.0, 1.0]).unwrap();
    let pts: Vec<C64> = (0..=7)
        .map(|k| C64::new(-1.0 + 2.0 * k as f64 / 7.0, 0.0))
        .collect();
    assert!((agmon_mass(&p, &pts).unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn scaled_harmonic_spectrum() {
    // With t² = 2λx², y'' = λ²(4x² − 1)y becomes y_tt = (t² − λ/2)y, so λ/2 runs over the odd integers.
    let p = Poly::from_real(&[-1.0, 0.0, 4.0]).unwrap();
    let ev = eigenvalues(&p, 24.0, &ShootConfig::default()).unwrap();
    assert_eq!(ev.len(), 6);
    for (k, r) in ev.iter().enumerate() {
        assert!((r.lambda - 2.0 * (2 * k + 1) as f64).abs() < 1e-8 * r.lambda);
    }
}

#[test]
fn double_well_splittings_shrink_geometrically() {
    let p = Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap();
    let s = pair_splittings(&p, 4, &ShootConfig::default()).unwrap();
    let xi = barrier_action(&p, -1.0, 1.0).unwrap();
    for w in s.windows(2) {
        assert!(w[1] > 0.0 && w[1] < w[0]);
    }
    // Consecutive pairs differ by about Δλ = π/α, so the ratio is about e^{-ξπ/α}.
    let alpha = well_action(&p, 1.0, 2.0).unwrap();
    let r = s[3] / s[2];
    let predicted = (-xi * PI / alpha).exp();
    assert!(
        r / predicted > 0.5 && r / predicted < 2.0,
        "{r} vs {predicted}"
    );
}

#[test]
fn graph_counts() {
    let cases: [(&[f64], usize, usize); 3] = [
        (&[-1.0, 0.0, 1.0], 1, 4),
        (&[4.0, 0.0, -5.0, 0.0, 1.0], 2, 8),
        (&[-1.0, 0.0, 0.0, 0.0, 1.0], 1, 10),
    ];
    for (coeffs, finite, unbounded) in cases {
        let g = build_graph(&Poly::from_real(coeffs).unwrap(), &TraceConfig::default()).unwrap();
        assert_eq!(
            (g.finite_count(), g.unbounded_count()),
            (finite, unbounded),
            "{coeffs:?}"
        );
    }
}
