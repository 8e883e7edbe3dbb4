use std::f64::consts::PI;

use proptest::prelude::*;
use repulsion_core::specfun::*;

/// `J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt`, trapezoid on a periodic integrand.
fn bessel_integral(n: f64, x: f64) -> f64 {
    let m = 4000;
    let h = PI / m as f64;
    let f = |t: f64| (n * t - x * t.sin()).cos();
    let inner: f64 = (1..m).map(|k| f(k as f64 * h)).sum();
    (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
}

fn oracle_root() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if bessel_integral(0.0, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn j0_reference_values() {
    assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
    assert!((bessel_j0(1.0).unwrap() - 0.7651976865579666).abs() < 1e-12);
    assert!(bessel_j0(2.404825557695773).unwrap().abs() < 1e-10);
}

#[test]
fn j1_reference_values() {
    assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
    assert!((bessel_j1(1.0).unwrap() - 0.4400505857449335).abs() < 1e-12);
    assert!((bessel_j1(2.404825557695773).unwrap() - 0.5191474972894669).abs() < 1e-12);
}

#[test]
fn bessel_matches_integral_representation() {
    for i in 0..60 {
        let x = 0.37 * i as f64;
        assert!(
            (bessel_j0(x).unwrap() - bessel_integral(0.0, x)).abs() < 1e-12,
            "J0({x})"
        );
        assert!(
            (bessel_j1(x).unwrap() - bessel_integral(1.0, x)).abs() < 1e-12,
            "J1({x})"
        );
    }
}

#[test]
fn non_finite_arguments_rejected() {
    assert!(bessel_j0(f64::NAN).is_err());
    assert!(bessel_j1(f64::INFINITY).is_err());
}

#[test]
fn root_matches_bisection_oracle() {
    let j0 = find_bessel_root();
    assert!((j0 - 2.404825557695773).abs() < 1e-12);
    assert!((j0 - oracle_root()).abs() < 1e-12);
    assert!(bessel_j0(j0).unwrap().abs() < 1e-10);
    assert_eq!(j0, find_bessel_root());
}

#[test]
fn gamma_star_closed_form() {
    let j0 = find_bessel_root();
    let g = 3.0 / (1.0 - 2.0 / (j0 * j0));
    assert!((g - 4.586).abs() < 1e-3);
}

#[test]
fn simpson_reference_integrals() {
    for n in [3, 11, 2001] {
        let one = SampledFunction::from_fn(0.0, 1.0, n, |_| 1.0).unwrap();
        assert!((integrate(&one).unwrap() - 1.0).abs() < 1e-14);
    }
    let sq = SampledFunction::from_fn(0.0, 1.0, 2001, |x| x * x).unwrap();
    assert!((integrate(&sq).unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn singular_constant_is_grid_converged() {
    let coarse = sin2_over_x_constant(100_001).unwrap();
    let fine = sin2_over_x_constant(400_001).unwrap();
    assert!((coarse - fine).abs() < 1e-6);
    // Z = Cin(2 pi) / 2 with Cin(z) = sum_k (-1)^(k+1) z^(2k) / (2k (2k)!)
    let z = 2.0 * PI;
    let (mut term, mut cin) = (1.0, 0.0);
    for k in 1..60 {
        let kk = 2 * k;
        term *= z * z / ((kk - 1) * kk) as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        cin += sign * term / kk as f64;
    }
    assert!((fine - cin / 2.0).abs() < 1e-10);
}

#[test]
fn slope_fits() {
    let xs: Vec<f64> = (1..=8).map(|k| 0.05 * k as f64).collect();
    let cube: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
    assert!((log_slope_fit(&xs, &cube).unwrap().0 - 3.0).abs() < 1e-12);
    let lin: Vec<f64> = xs.iter().map(|x| 7.5 * x).collect();
    assert!((log_slope_fit(&xs, &lin).unwrap().0 - 1.0).abs() < 1e-12);
    let decay: Vec<f64> = xs.iter().map(|x| (-2.0 * PI * PI * x).exp()).collect();
    let logs: Vec<f64> = decay.iter().map(|v| v.ln()).collect();
    assert!(log_slope_fit(&xs, &logs).is_err());
    assert!((linear_fit(&xs, &logs).unwrap().0 + 2.0 * PI * PI).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn j0_derivative_is_minus_j1(x in 0.01f64..10.0) {
        let h = 1e-5;
        let d = (bessel_j0(x + h).unwrap() - bessel_j0(x - h).unwrap()) / (2.0 * h);
        prop_assert!((d + bessel_j1(x).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn integrate_is_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 1.0f64..6.0) {
        let f = SampledFunction::from_fn(0.0, 1.0, 401, |x| (k * x).sin()).unwrap();
        let g = SampledFunction::from_fn(0.0, 1.0, 401, |x| x.exp()).unwrap();
        let combo = f.with_values(
            f.values().iter().zip(g.values()).map(|(u, v)| a * u + b * v).collect(),
        ).unwrap();
        let lhs = integrate(&combo).unwrap();
        let rhs = a * integrate(&f).unwrap() + b * integrate(&g).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}
