//! Cross-checks against closed forms and independently written numerics.

use std::f64::consts::PI;

use threshold_core::potential::{Harmonic, PiecewisePotential, PotentialPiece, PowerLaw, ScalingFamily};
use threshold_core::quasimode::build_quasimode;
use threshold_core::resonance::detect_resonance;
use threshold_core::spectrum::find_negative_eigenvalues;
use threshold_core::threshold::{eps_of, predict_order2, predict_t2, predict_t3, predict_t4, Case};

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bound states of a square well of depth `v0` and width `w` from the
/// even/odd matching equations in `z = k w / 2`, `z0 = sqrt(v0) w / 2`.
fn square_well_levels(v0: f64, w: f64) -> Vec<f64> {
    let z0 = v0.sqrt() * w / 2.0;
    let kappa = |z: f64| (z0 * z0 - z * z).max(0.0).sqrt();
    let mut out = Vec::new();
    let mut n = 0;
    loop {
        let lo = n as f64 * PI / 2.0;
        if lo >= z0 {
            break;
        }
        let hi = ((n + 1) as f64 * PI / 2.0).min(z0);
        let (a, b) = (lo + 1e-15, hi - 1e-15);
        let z = if n % 2 == 0 {
            bisect(|z| z * z.sin() - kappa(z) * z.cos(), a, b)
        } else {
            bisect(|z| -z * z.cos() - kappa(z) * z.sin(), a, b)
        };
        let k = 2.0 * z / w;
        out.push(k * k - v0);
        n += 1;
    }
    out.sort_by(f64::total_cmp);
    out
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn resonant_well() -> PiecewisePotential {
    PiecewisePotential::square_well(0.0, 1.0, -PI * PI, 1.0).unwrap()
}

fn shifted_well() -> PiecewisePotential {
    PiecewisePotential::square_well(-0.25, 0.75, -PI * PI, 1.0).unwrap()
}

fn sine_bump() -> PiecewisePotential {
    PiecewisePotential::new(
        1.0,
        vec![PotentialPiece::new(0.0, 1.0, vec![0.5], vec![Harmonic::cos(-1.0, 2.0 * PI, 0.0), Harmonic::cos(0.5, 4.0 * PI, 0.0)])],
    )
    .unwrap()
}

#[test]
fn square_wells_match_matching_equations() {
    for (v0, w) in [(1.0, 1.0), (50.0, 1.3), (200.0, 0.4), (0.05, 1.0)] {
        let q = PiecewisePotential::square_well(-w / 2.0, w / 2.0, -v0, 1.0).unwrap();
        let got = find_negative_eigenvalues(&q, None).unwrap().eigenvalues;
        let want = square_well_levels(v0, w);
        assert_eq!(got.len(), want.len(), "depth {v0}, width {w}");
        for (g, e) in got.iter().zip(&want) {
            assert!((g - e).abs() <= 1e-9 * e.abs(), "{g} vs {e}");
        }
    }
}

#[test]
fn order_two_constant_matches_simpson() {
    let u = resonant_well();
    let v = PiecewisePotential::square_well(-0.5, 0.5, -1.0, 1.0).unwrap();
    let h = detect_resonance(&u, 1e-9).unwrap();
    let p = predict_order2(&u, &v, &ScalingFamily::constant(1.0).unwrap(), &h).unwrap();
    // u = cos(pi x) on (0, 1), u = 1 to the left
    let int_v_u2 = -0.5 - simpson(|x| (PI * x).cos().powi(2), 0.0, 0.5, 2000);
    assert!((int_v_u2 + 0.75).abs() < 1e-12);
    assert!((p.k.abs() - int_v_u2.abs() / 2.0).abs() < 1e-10, "{}", p.k);
}

#[test]
fn t2_constant_matches_simpson() {
    let u = resonant_well();
    let h = detect_resonance(&u, 1e-9).unwrap();
    let family = ScalingFamily::constant_with_eps(1.0, Some(PowerLaw { c: 1.0, p: 0.25 })).unwrap();
    let p = predict_t2(&u, &sine_bump(), &family, &h).unwrap();
    let dv = |x: f64| 2.0 * PI * (2.0 * PI * x).sin() - 2.0 * PI * (4.0 * PI * x).sin();
    let k = -0.5 * simpson(|x| x * dv(x) * (PI * x).cos().powi(2), 0.0, 1.0, 20000);
    assert!((k.abs() - 1.0 / 48.0).abs() < 1e-10, "{k}");
    assert!((p.k.abs() - k.abs()).abs() < 1e-10, "{} vs {k}", p.k);
}

#[test]
fn t3_and_t4_constants_match_simpson() {
    let u = shifted_well();
    let h = detect_resonance(&u, 1e-9).unwrap();
    let x_v = PiecewisePotential::new(1.0, vec![PotentialPiece::new(-1.0, 1.0, vec![0.0, 1.0], vec![])]).unwrap();
    let t3 = predict_t3(&u, &x_v, &ScalingFamily::power(1.0, -0.25).unwrap(), &h).unwrap();
    let (u0, du0) = ((PI / 4.0).cos(), -PI * (PI / 4.0).sin());
    let k3 = -2.0 * u0 * du0 / 2.0 * simpson(|x| x * x, -1.0, 1.0, 200);
    assert!((k3 - PI / 3.0).abs() < 1e-12);
    assert!((t3.k.abs() - k3).abs() < 1e-9, "{}", t3.k);

    let cos_v = PiecewisePotential::new(1.0, vec![PotentialPiece::new(-1.0, 1.0, vec![], vec![Harmonic::cos(1.0, PI, 0.0)])]).unwrap();
    let t4 = predict_t4(&u, &cos_v, &ScalingFamily::power(1.0, 0.2).unwrap(), &h).unwrap();
    // u = cos(pi (x + 1/4)) on the well, Theta = 1 left of 0 and -1 right of it
    let k4 = -0.5
        * (simpson(|x| (PI * (x + 0.25)).cos().powi(2) - 1.0, -0.25, 0.0, 2000)
            + simpson(|x| (PI * (x + 0.25)).cos().powi(2) - 1.0, 0.0, 0.75, 2000));
    assert!((k4 - 0.25).abs() < 1e-12);
    assert!((t4.k.abs() - k4).abs() < 1e-9, "{}", t4.k);
}

#[test]
fn finite_lambda_t2_constant_matches_independent_quadrature() {
    // k_lambda = -(1/(2 eps)) int (V(alpha x) - V(x)) u^2 for the resonant well, where
    // alpha = 1 + eps and the order-eps^0 term vanishes since int V u^2 = 0.
    let u = resonant_well();
    let h = detect_resonance(&u, 1e-9).unwrap();
    let family = ScalingFamily::constant_with_eps(1.0, Some(PowerLaw { c: 1.0, p: 0.25 })).unwrap();
    let v = sine_bump();
    for lambda in [1e-6f64, 1e-8, 1e-10, 1e-12] {
        let eps = eps_of(&family, lambda).unwrap();
        let alpha = 1.0 + eps;
        let vv = |x: f64| if (0.0..=1.0).contains(&x) { 0.5 - (2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).cos() } else { 0.0 };
        let u2 = |x: f64| if x < 0.0 { 1.0 } else { (PI * x).cos().powi(2) };
        let diff = simpson(|x| (vv(alpha * x) - vv(x)) * u2(x), 0.0, 1.0, 200_000);
        let k_diff = -alpha * diff / (2.0 * eps);
        let qm = build_quasimode(Case::T2, &u, &v, &family, lambda, &h).unwrap();
        assert!((qm.k_lambda - k_diff).abs() < 1e-8 * k_diff.abs(), "{} vs {k_diff}", qm.k_lambda);
    }
}
