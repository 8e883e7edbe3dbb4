use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use repulsion_core::specfun::{linear_fit, log_slope_fit};
use repulsion_lab::stochastic::*;
use repulsion_lab::LabError;

/// Sample mean, its standard error, sample variance and the standard error of the variance.
fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m, (v / n).sqrt(), v, ((m4 - v * v) / n).sqrt())
}

fn besq0_at<R: Rng>(rng: &mut R, c: f64, step: f64, marks: &[usize]) -> Vec<f64> {
    let sd = step.sqrt();
    let mut y = c;
    let mut out = Vec::with_capacity(marks.len());
    let mut k = 0;
    for &m in marks {
        while k < m {
            if y > 0.0 {
                y = besq0_step(rng, y, sd);
            }
            k += 1;
        }
        out.push(y);
    }
    out
}

#[test]
fn besq2_mean_and_variance() {
    let mut rng = RngSpec::new(11, 0).rng();
    let (c, x) = (0.7, 1.0);
    let ys: Vec<f64> = (0..100_000)
        .map(|_| {
            *sample_besq2_with(&mut rng, c, x, 1e-2)
                .unwrap()
                .values
                .last()
                .unwrap()
        })
        .collect();
    let (m, se, v, vse) = moments(&ys);
    assert!((m - (c + 2.0 * x)).abs() < 3.0 * se, "mean {m} +- {se}");
    assert!(
        (v - (4.0 * c * x + 4.0 * x * x)).abs() < 3.0 * vse,
        "variance {v} +- {vse}"
    );
}

#[test]
fn besq2_from_zero_starts_at_zero() {
    let p = sample_besq2(0.0, 0.5, 1e-3, RngSpec::new(1, 0)).unwrap();
    assert_eq!(p.values[0], 0.0);
    assert_eq!(p.values.len(), 501);
    assert_eq!(p.dimension, 2);
    assert!(p.absorbed_at.is_none());
    assert!(sample_besq2(0.0, 0.5, 0.0, RngSpec::new(1, 0)).is_err());
}

#[test]
fn besq0_is_a_martingale() {
    let mut rng = RngSpec::new(12, 0).rng();
    let step = 1e-3;
    let marks = [500, 1000, 2000];
    let samples: Vec<Vec<f64>> = (0..100_000)
        .map(|_| besq0_at(&mut rng, 1.0, step, &marks))
        .collect();
    for j in 0..marks.len() {
        let col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let (m, se, _, _) = moments(&col);
        assert!(
            (m - 1.0).abs() < 3.0 * se,
            "x = {}: {m} +- {se}",
            marks[j] as f64 * step
        );
    }
}

#[test]
fn besq0_paths_are_absorbed() {
    for stream in 0..50 {
        let p = sample_besq0(0.1, 1e-3, RngSpec::new(5, stream)).unwrap();
        let k = p.absorbed_at.expect("absorbed");
        assert_eq!(k, p.values.len() - 1);
        assert_eq!(p.values[k], 0.0);
        assert!(p.values[..k].iter().all(|v| *v > 0.0));
    }
    assert!(sample_besq0(0.0, 1e-3, RngSpec::new(5, 0)).is_err());
}

#[test]
fn besq0_step_cap_is_a_simulation_error() {
    let err = sample_besq0_with(&mut RngSpec::new(3, 0).rng(), 5.0, 1e-3, 10).unwrap_err();
    assert!(matches!(err, LabError::Simulation(_)));
}

#[test]
fn besq_additivity() {
    // BESQ^0(b) + independent BESQ^2(0) has the law of BESQ^2(b)
    let (b, step) = (1.0, 1e-3);
    let marks = [500, 1000];
    let mut rng = RngSpec::new(21, 0).rng();
    let mut sums = [Vec::new(), Vec::new()];
    let mut direct = [Vec::new(), Vec::new()];
    for _ in 0..50_000 {
        let zero = besq0_at(&mut rng, b, step, &marks);
        let two = sample_besq2_with(&mut rng, 0.0, 1.0, step).unwrap();
        let full = sample_besq2_with(&mut rng, b, 1.0, step).unwrap();
        for j in 0..2 {
            sums[j].push(zero[j] + two.values[marks[j]]);
            direct[j].push(full.values[marks[j]]);
        }
    }
    for j in 0..2 {
        let (m1, se1, v1, vse1) = moments(&sums[j]);
        let (m2, se2, v2, vse2) = moments(&direct[j]);
        assert!((m1 - m2).abs() < 3.0 * se1.hypot(se2), "mean {m1} vs {m2}");
        assert!(
            (v1 - v2).abs() < 3.0 * vse1.hypot(vse2),
            "variance {v1} vs {v2}"
        );
    }
}

fn oracle_cdf(c: f64, s: f64) -> f64 {
    libm::erfc(c / (8.0 * s).sqrt())
}

#[test]
fn f_density_normalizes_and_matches_closed_form_cdf() {
    assert!((f_cdf(1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-6);
    for &(c, s) in &[
        (1.0, 0.5),
        (1.0, 1.0),
        (1.0, 2.0),
        (1.0, 5.0),
        (0.3, 0.1),
        (2.5, 7.0),
    ] {
        assert!(
            (f_cdf(c, s).unwrap() - oracle_cdf(c, s)).abs() < 1e-10,
            "c = {c}, s = {s}"
        );
    }
    assert!(f_density(0.0, 1.0).is_err());
    assert!(f_density(1.0, -1.0).is_err());
}

#[test]
fn f_density_decays_like_power_three_halves() {
    let s: Vec<f64> = (0..=40)
        .map(|i| 10f64.powf(2.0 + 2.0 * i as f64 / 40.0))
        .collect();
    let f: Vec<f64> = s.iter().map(|&x| f_density(1.0, x).unwrap()).collect();
    let (slope, _) = log_slope_fit(&s, &f).unwrap();
    assert!((slope + 1.5).abs() < 0.01, "slope {slope}");
}

#[test]
fn f_density_mode_matches_stationary_point() {
    for c in [0.5, 1.0, 2.0] {
        let grid: Vec<f64> = (1..200_000).map(|i| i as f64 * 1e-6 * c * c).collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                f_density(c, *a)
                    .unwrap()
                    .total_cmp(&f_density(c, *b).unwrap())
            })
            .unwrap();
        assert!(
            (best - c * c / 12.0).abs() < 2e-6 * c * c,
            "c = {c}: {best}"
        );
    }
}

fn path(values: Vec<f64>, step: f64) -> DiffusionPath {
    DiffusionPath {
        start: values[0],
        values,
        step,
        dimension: 2,
        absorbed_at: None,
    }
}

#[test]
fn time_change_of_constant_path_is_identity() {
    let tc = time_change(&path(vec![1.0; 1001], 1e-3), 1e-3).unwrap();
    assert!((tc.total - 1.0).abs() < 1e-12);
    for (j, (z, r)) in tc.z.values.iter().zip(&tc.rho).enumerate() {
        assert!((z - 1.0).abs() < 1e-12);
        assert!((r - j as f64 * 1e-3).abs() < 1e-9);
    }
}

#[test]
fn time_change_of_linear_path_inverts_the_quadratic() {
    // Y = a + b x: int_0^u Y = a u + b u^2 / 2 = t
    let (a, b, h) = (0.5, 2.0, 1e-3);
    let y: Vec<f64> = (0..=1000).map(|i| a + b * i as f64 * h).collect();
    let tc = time_change(&path(y, h), 1e-2).unwrap();
    assert!((tc.total - (a + b / 2.0)).abs() < 1e-10);
    for (j, r) in tc.rho.iter().enumerate() {
        let t = j as f64 * 1e-2;
        let exact = (-a + (a * a + 2.0 * b * t).sqrt()) / b;
        assert!((r - exact).abs() < 1e-8, "t = {t}: {r} vs {exact}");
        assert!((tc.z.values[j] - (a + b * exact)).abs() < 1e-8);
    }
}

#[test]
fn time_change_rejects_empty_paths() {
    assert!(time_change(&path(vec![1.0], 1e-3), 1e-3).is_err());
    assert!(time_change(&path(vec![0.0, 0.0, 0.0], 1e-3), 1e-3).is_err());
}

#[test]
fn time_change_is_consistent_with_the_integral() {
    let p = sample_besq2(0.5, 2.0, 1e-3, RngSpec::new(8, 0)).unwrap();
    let tc = time_change(&p, 1e-2).unwrap();
    let h = p.step;
    for (j, r) in tc.rho.iter().enumerate() {
        // trapezoid integral of the piecewise-linear path up to rho
        let k = ((r / h).floor() as usize).min(p.values.len() - 2);
        let mut acc: f64 = p.values[..=k]
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * h)
            .sum();
        let u = r - k as f64 * h;
        let yk = p.values[k];
        let yu = yk + (p.values[k + 1] - yk) * u / h;
        acc += 0.5 * (yk + yu) * u;
        let t = j as f64 * 1e-2;
        assert!((acc - t).abs() <= 1e-6 * t.max(1e-3), "t = {t}: {acc}");
    }
}

#[test]
fn time_changed_besq0_is_scale_two_brownian_motion() {
    // interpolating Y between grid points damps the variance of Z by a relative
    // O(z h / dt); h / dt = 1e-3 keeps that well below the sampling error here
    let dt = 1e-2;
    let (mut lv, mut sq) = (Vec::new(), Vec::new());
    for stream in 0..200 {
        // absorption times are heavy tailed; the rare capped path is skipped
        let Ok(p) = sample_besq0_with(&mut RngSpec::new(31, stream).rng(), 1.0, 1e-5, MAX_STEPS)
        else {
            continue;
        };
        let z = time_change(&p, dt).unwrap().z.values;
        for w in z.windows(2) {
            if w[0] > 0.1 && w[1] > 0.0 {
                lv.push(w[0]);
                sq.push((w[1] - w[0]).powi(2));
            }
        }
    }
    let (slope, intercept) = linear_fit(&lv, &sq).unwrap();
    let n = lv.len() as f64;
    let mx = lv.iter().sum::<f64>() / n;
    let sxx: f64 = lv.iter().map(|x| (x - mx).powi(2)).sum();
    let resid: f64 = lv
        .iter()
        .zip(&sq)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = (resid / (n - 2.0) / sxx).sqrt();
    assert!(slope.abs() < 3.0 * slope_se, "slope {slope} +- {slope_se}");
    let mean_sq = sq.iter().sum::<f64>() / n;
    assert!(
        (mean_sq / (4.0 * dt) - 1.0).abs() < 0.05,
        "variance ratio {}",
        mean_sq / (4.0 * dt)
    );
}

#[test]
fn local_time_field_counts_occupation() {
    let pos = [0.01, 0.015, 0.03, -0.005, 0.05];
    let f = local_time_field(&pos, 0.1, 0.02).unwrap();
    assert_eq!(f.bin_edges.len(), f.occupation.len() + 1);
    assert!((f.elapsed() - 0.5).abs() < 1e-12);
    assert!((f.occupation[1] - 2.0 * 0.1 / 0.02).abs() < 1e-12);
    assert!(local_time_field(&[], 0.1, 0.02).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_time_mass_equals_elapsed_time(seed in 0u64..1000, n in 1usize..5000, dt in 1e-5f64..1e-2) {
        let mut rng = RngSpec::new(seed, 0).rng();
        let mut w = 0.0f64;
        let pos: Vec<f64> = (0..n).map(|_| { w += dt.sqrt() * rng.sample::<f64, _>(StandardNormal); w }).collect();
        let f = local_time_field(&pos, dt, 0.02).unwrap();
        let elapsed = n as f64 * dt;
        prop_assert!((f.elapsed() - elapsed).abs() <= 1e-6 * elapsed);
    }

    #[test]
    fn bridge_local_time_is_zero_or_positive(a in -1.0f64..1.0, b in -1.0f64..1.0, seed in 0u64..100) {
        let l = bridge_local_time(&mut RngSpec::new(seed, 0).rng(), a, b, 1e-3);
        prop_assert!(l >= 0.0 && l.is_finite());
        if a * b < 0.0 {
            prop_assert!(l > 0.0);
        }
    }
}

#[test]
fn bridge_local_time_has_the_brownian_mean() {
    // E L_0(t) from 0 is sqrt(2t/pi); average the bridge law over Gaussian endpoints
    let t = 0.5f64;
    let mut rng = RngSpec::new(4, 0).rng();
    let ls: Vec<f64> = (0..200_000)
        .map(|_| {
            let b = t.sqrt() * rng.sample::<f64, _>(StandardNormal);
            bridge_local_time(&mut rng, 0.0, b, t)
        })
        .collect();
    let (m, se, _, _) = moments(&ls);
    let exact = (2.0 * t / std::f64::consts::PI).sqrt();
    assert!((m - exact).abs() < 3.0 * se, "{m} +- {se} vs {exact}");
}

#[test]
fn ray_knight_first_small_run() {
    let cfg = RayKnightConfig {
        level: 0.5,
        budget: 0.0,
        dt: 1e-4,
        bin_width: 0.02,
        n_paths: 20_000,
        workers: 2,
        seed: 9,
    };
    let r = ray_knight_first(cfg).unwrap();
    assert!(r.statistic.z_score(2.0) < 3.0, "{:?}", r.statistic);
    assert_eq!(r.profile.len(), 25);
    assert!(
        (r.mean_elapsed - 0.25).abs() < 0.05,
        "E tau_a = a^2, got {}",
        r.mean_elapsed
    );
}

#[test]
fn ray_knight_second_small_run() {
    let cfg = RayKnightConfig {
        level: 0.3,
        budget: 0.5,
        dt: 1e-4,
        bin_width: 0.02,
        n_paths: 20_000,
        workers: 2,
        seed: 9,
    };
    let r = ray_knight_second(cfg).unwrap();
    assert!(r.statistic.z_score(0.5) < 3.0, "{:?}", r.statistic);
    assert_eq!(r.profile.len(), 31);
    // reflected motion on [-M, M] spends time 2 M b to collect local time b at 0
    assert!((r.mean_elapsed - 0.3).abs() < 0.02, "{}", r.mean_elapsed);
}

#[test]
fn ray_knight_rejects_misaligned_levels() {
    let cfg = RayKnightConfig {
        level: 0.25,
        budget: 0.5,
        dt: 1e-4,
        bin_width: 0.02,
        n_paths: 10,
        workers: 1,
        seed: 0,
    };
    assert!(ray_knight_first(cfg).is_err());
}

#[test]
fn survival_series_limits() {
    assert_eq!(survival_eigen(0.5, 0.0, 25).unwrap(), 1.0);
    assert!((survival_eigen(0.5, 1e-4, 400).unwrap() - 1.0).abs() < 1e-6);
    assert!(survival_eigen(0.5, 1.0, 10).is_err());
    assert!(survival_eigen(1.0, 1.0, 30).is_err());
    let s: Vec<f64> = (0..=30).map(|i| 0.5 + 1.5 * i as f64 / 30.0).collect();
    let logs: Vec<f64> = s
        .iter()
        .map(|&t| survival_eigen(0.3, t, 50).unwrap().ln())
        .collect();
    let (slope, _) = linear_fit(&s, &logs).unwrap();
    let target = -2.0 * std::f64::consts::PI.powi(2);
    assert!((slope / target - 1.0).abs() < 1e-3, "{slope}");
}

#[test]
fn survival_mc_agrees_with_series() {
    for (c, s) in [(0.5, 0.05), (0.3, 0.1)] {
        let e = survival_mc(c, s, 1e-3, 200_000, 2, 17).unwrap();
        let exact = survival_eigen(c, s, 50).unwrap();
        assert!(e.z_score(exact) < 3.0, "c = {c}, s = {s}: {e:?} vs {exact}");
    }
}

#[test]
fn mc_estimate_contract() {
    let e = mc_estimate(|_| 2.5, 1000, 3, RngSpec::new(1, 0)).unwrap();
    assert_eq!((e.mean, e.se, e.n), (2.5, 0.0, 1000));
    assert!(mc_estimate(|_| 1.0, 99, 1, RngSpec::new(1, 0)).is_err());

    let f = |r: &mut rand_chacha::ChaCha8Rng| r.random::<f64>();
    let a = mc_estimate(f, 50_000, 4, RngSpec::new(7, 0)).unwrap();
    let b = mc_estimate(f, 50_000, 4, RngSpec::new(7, 0)).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.se.to_bits(), b.se.to_bits());
    let c = mc_estimate(f, 50_000, 1, RngSpec::new(7, 0)).unwrap();
    assert!(a.z_score(0.5) < 4.0 && c.z_score(0.5) < 4.0);

    let d = mc_estimate(f, 100_000, 4, RngSpec::new(7, 0)).unwrap();
    let ratio = d.se / a.se;
    assert!(
        (ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2,
        "{ratio}"
    );
}

#[test]
fn worker_shares_cover_all_paths() {
    for (n, w) in [(10u64, 3usize), (7, 7), (3, 5), (100_000, 4)] {
        assert_eq!((0..w).map(|i| share(n, w, i)).sum::<u64>(), n);
    }
}

#[test]
fn occupation_histograms_are_normalized() {
    let cfg = OccupationConfig {
        dimension: 0,
        c: 0.5,
        horizons: vec![0.05, 0.1],
        dt: 1e-3,
        bins: 50,
        n_paths: 20_000,
        workers: 2,
        seed: 5,
    };
    let runs = conditioned_occupation(&cfg).unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs[0].accepted >= runs[1].accepted);
    for h in &runs {
        for hist in [&h.y_hist, &h.z_hist] {
            assert!((hist.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(hist.weights.iter().all(|w| *w >= 0.0));
            assert_eq!(hist.bin_edges[0], 0.0);
            assert_eq!(*hist.bin_edges.last().unwrap(), 1.0);
        }
    }
}

#[test]
fn occupation_without_survivors_is_infeasible() {
    let err = mc_conditioned_occupation(0, 0.5, 0.4, 5, RngSpec::new(1, 0)).unwrap_err();
    assert!(matches!(err, LabError::Infeasible(_)));
    assert_eq!(err.exit_code(), 4);
    assert!(mc_conditioned_occupation(1, 0.5, 0.1, 5, RngSpec::new(1, 0)).is_err());
}

#[test]
fn ks_distance_of_uniform_histogram() {
    let h = OccupationHistogram::from_raw(&[1.0; 10]).unwrap();
    assert!(h.ks_distance(|x| x) < 1e-12);
    assert!((h.ks_distance(|x| x * x) - 0.25).abs() < 1e-12);
    assert!(OccupationHistogram::from_raw(&[0.0, 0.0]).is_err());
}

#[test]
fn f_density_experiment_matches_cdf() {
    let r =
        repulsion_lab::stochastic::f_density_experiment(1.0, &[0.5, 1.0, 2.0], 1e-3, 20_000, 2, 3)
            .unwrap();
    for (e, x) in r.empirical.iter().zip(&r.exact) {
        assert!(e.z_score(*x) < 3.0, "{e:?} vs {x}");
    }
}

#[test]
fn besq0_step_halving_is_within_one_standard_error() {
    // S = int Y under BESQ^0(1): CDF at s = 1 for dt and dt / 2, shared seed
    let run = |dt| {
        f_density_experiment(1.0, &[1.0], dt, 100_000, 1, 13)
            .unwrap()
            .empirical[0]
    };
    let (a, b) = (run(1e-3), run(5e-4));
    assert!((a.mean - b.mean).abs() < a.se.max(b.se), "{a:?} vs {b:?}");
}
