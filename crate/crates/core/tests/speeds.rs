use std::f64::consts::PI;
use std::sync::OnceLock;

use repulsion_core::specfun::find_bessel_root;
use repulsion_core::speeds::*;
use repulsion_core::variational::{tabulate_j, RateTable};

fn table() -> &'static RateTable {
    static T: OnceLock<RateTable> = OnceLock::new();
    T.get_or_init(|| {
        let alphas: Vec<f64> = (0..161).map(|i| 0.05 + 0.005 * i as f64).collect();
        tabulate_j(&alphas).unwrap()
    })
}

fn j0() -> f64 {
    find_bessel_root()
}

#[test]
fn gamma_star_reproduction() {
    let g = gamma_star(table()).unwrap();
    let j = j0();
    assert!((g / 4.586 - 1.0).abs() < 5e-3);
    assert!((g / (3.0 / (1.0 - 2.0 / (j * j))) - 1.0).abs() < 5e-3);
    let coarse = gamma_star(&table().subsample(2).unwrap()).unwrap();
    assert!((coarse / g - 1.0).abs() < 2e-3);
}

#[test]
fn gamma_bullet_reproduction() {
    let (g, cost) = gamma_bullet(table()).unwrap();
    assert!((g / 3.513 - 1.0).abs() < 1e-2);
    assert!(cost < 13.26);
    assert!(cost < 2.0 * PI * PI);
    assert!(g < gamma_star(table()).unwrap());
    // at the minimum lambda = 0 and nu = -j0^2, so the cost is 2 j0^2
    let j = j0();
    assert!((cost / (2.0 * j * j) - 1.0).abs() < 1e-4);
    let star = gamma_star(table()).unwrap();
    assert!((star * j * j / 2.0 - 13.26).abs() < 0.01);
}

#[test]
fn gamma_circ_reproduction() {
    let g = gamma_circ(table()).unwrap();
    assert!((g / 1.983 - 1.0).abs() < 1e-2);
    let curve = RateCurve::new(table()).unwrap();
    assert!((curve.speed_rate(g).unwrap() / (2.0 * PI * PI) - 1.0).abs() < 1e-3);
    assert!(g < gamma_bullet(table()).unwrap().0);
}

#[test]
fn constants_chain() {
    let c = SpeedConstants::from_table(table()).unwrap();
    assert!(1.0 < c.gamma_circ && c.gamma_circ < c.gamma_bullet && c.gamma_bullet < c.gamma_star);
    assert!(c.gamma_circ - 1.0 > 0.1);
    assert!(c.gamma_bullet - c.gamma_circ > 0.1);
    assert!(c.gamma_star - c.gamma_bullet > 0.1);
    assert!(c.gamma_bullet_cost >= c.gamma_bullet * c.gamma_bullet / 2.0);
}

#[test]
fn speed_cost_values() {
    assert_eq!(speed_cost(0.0), 0.0);
    assert_eq!(speed_cost(2.0), 2.0);
}

#[test]
fn rate_exceeds_free_speed_cost() {
    let gaps: Vec<(f64, f64)> = table()
        .rows()
        .iter()
        .map(|r| (1.0 / r.alpha, r.j / r.alpha - speed_cost(1.0 / r.alpha)))
        .collect();
    assert!(gaps.iter().all(|(_, g)| *g >= 0.0));
    let (v, gap) = gaps
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!(v.is_finite() && v > 0.0 && gap > 0.0);
}

#[test]
fn straight_paths() {
    let (gb, cost) = gamma_bullet(table()).unwrap();
    let unit = path_cost(&PathSpec::straight(gb, 1.0).unwrap(), table()).unwrap();
    assert!((unit - cost).abs() < 1e-3);
    let j = j0();
    let gs = gamma_star(table()).unwrap();
    let a = 2.5;
    let extent = path_cost(&PathSpec::straight(gs, a / gs).unwrap(), table()).unwrap();
    assert!((extent / (a * j * j / 2.0) - 1.0).abs() < 1e-3);
}

#[test]
fn bent_paths_cost_more() {
    let straight = path_cost(&PathSpec::straight(3.0, 2.0).unwrap(), table()).unwrap();
    let bent = PathSpec::new(vec![(0.0, 0.0), (1.0, 2.4), (2.0, 6.0)]).unwrap();
    assert!(path_cost(&bent, table()).unwrap() > straight);
}

#[test]
fn path_cost_ignores_collinear_breakpoints() {
    let a = PathSpec::new(vec![(0.0, 0.0), (1.0, 2.5), (3.0, 9.5)]).unwrap();
    let b = PathSpec::new(vec![
        (0.0, 0.0),
        (0.4, 1.0),
        (1.0, 2.5),
        (2.0, 6.0),
        (3.0, 9.5),
    ])
    .unwrap();
    let (ca, cb) = (
        path_cost(&a, table()).unwrap(),
        path_cost(&b, table()).unwrap(),
    );
    assert!((ca - cb).abs() < 1e-10);
    assert!(path_cost(&PathSpec::straight(30.0, 1.0).unwrap(), table()).is_err());
}

#[test]
fn detour_fails_somewhere_below_gamma_circ() {
    let curve = RateCurve::new(table()).unwrap();
    let lambdas: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let scan = detour_scan(&curve, 1.5, &lambdas).unwrap();
    assert!(!scan.holds);
    assert!(detour_check(1.5, scan.worst_lambda, table()).is_ok_and(|ok| !ok));
}

#[test]
fn detour_margin_vanishes_as_lambda_shrinks() {
    let curve = RateCurve::new(table()).unwrap();
    let m1 = detour_margin(&curve, 2.5, 1e-3).unwrap().abs();
    let m2 = detour_margin(&curve, 2.5, 1e-5).unwrap().abs();
    assert!(m2 < m1 && m2 < 1e-3);
    assert!(detour_margin(&curve, 2.5, 0.0).is_err());
    assert!(detour_check(2.5, 1.0, table()).is_err());
}

#[test]
fn critical_speed_logic() {
    let v = |v, holds| DetourVerdict {
        v,
        holds,
        evaluated: 1,
        skipped: 0,
        worst_lambda: 0.5,
        worst_margin: 0.0,
    };
    assert_eq!(
        critical_speed(&[v(1.0, false), v(2.0, true), v(3.0, true)]),
        Some(1.5)
    );
    assert_eq!(
        critical_speed(&[v(1.0, true), v(2.0, false), v(3.0, true)]),
        Some(2.5)
    );
    assert_eq!(critical_speed(&[v(1.0, false), v(2.0, false)]), None);
}

#[test]
fn edge_minimum_is_a_range_error() {
    let alphas: Vec<f64> = (0..10).map(|i| 0.3 + 0.01 * i as f64).collect();
    let t = tabulate_j(&alphas).unwrap();
    assert!(gamma_star(&t).is_err());
}
