//! Experiment drivers shared by the command line and the acceptance run.

use std::f64::consts::PI;

use clap::ValueEnum;
use repulsion_core::specfun::linear_fit;
use repulsion_core::speeds::{critical_speed, detour_scan, gamma_bullet, DetourVerdict, RateCurve};
use repulsion_core::variational::{solve_de2, tabulate_j, tail_coefficient, tail_exponent_fit};
use repulsion_core::{measures, DensityGrid, RateTable};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::io::BinRow;
use crate::stochastic::{
    conditioned_occupation, f_density_experiment, ray_knight_first, ray_knight_second,
    survival_eigen, survival_mc, OccupationConfig, OccupationHistogram, RayKnightConfig,
    RayKnightReport, OCCUPATION_BINS, OCCUPATION_DT,
};
use crate::tolerances::Tolerances;

/// Default rate-table band and resolution.
pub const TABLE_ALPHA_MIN: f64 = 0.05;
pub const TABLE_ALPHA_MAX: f64 = 0.85;
pub const TABLE_ROWS: usize = 161;

/// `n` evenly spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` log-spaced points on `[a, b]`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

pub fn rate_table(alpha_min: f64, alpha_max: f64, n: usize) -> Result<RateTable> {
    Ok(tabulate_j(&linspace(alpha_min, alpha_max, n))?)
}

pub fn default_rate_table() -> Result<RateTable> {
    rate_table(TABLE_ALPHA_MIN, TABLE_ALPHA_MAX, TABLE_ROWS)
}

/// Mean-`alpha` optimal density, its tail samples and fitted exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub alpha: f64,
    pub coefficient: f64,
    /// `(eps, tail_mass, C eps^3)`.
    pub rows: Vec<(f64, f64, f64)>,
    pub exponent: f64,
}

pub fn tail_study(alpha: f64, eps_min: f64, eps_max: f64, n: usize) -> Result<TailReport> {
    if n < 5 {
        return Err(LabError::Usage(format!(
            "tail fit needs at least 5 eps values, got {n}"
        )));
    }
    if !(eps_min > 0.0 && eps_min < eps_max && eps_max <= 1.0) {
        return Err(LabError::Usage(format!(
            "need 0 < eps_min < eps_max <= 1, got {eps_min}, {eps_max}"
        )));
    }
    let sol = solve_de2(alpha)?;
    let eps = logspace(eps_min, eps_max, n);
    let coefficient = tail_coefficient(&sol);
    let rows = eps
        .iter()
        .map(|&e| Ok((e, measures::tail_mass(&sol.g, e)?, coefficient * e.powi(3))))
        .collect::<Result<Vec<_>>>()?;
    let exponent = tail_exponent_fit(&sol, &eps)?;
    Ok(TailReport {
        alpha,
        coefficient,
        rows,
        exponent,
    })
}

/// Detour verdicts over a speed grid and the resulting critical speed.
#[derive(Debug, Clone, PartialEq)]
pub struct DetourSweep {
    pub verdicts: Vec<DetourVerdict>,
    pub critical_speed: Option<f64>,
}

/// Detour fractions `lambda = k/100`, `k = 1..=99`.
pub fn detour_lambdas() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

pub fn detour_sweep(table: &RateTable, v_min: f64, v_max: f64, n: usize) -> Result<DetourSweep> {
    if n < 2 || !(v_min > 1.0 && v_min < v_max) {
        return Err(LabError::Usage(format!(
            "need n >= 2 and 1 < v_min < v_max, got {n}, {v_min}, {v_max}"
        )));
    }
    let curve = RateCurve::new(table)?;
    let lambdas = detour_lambdas();
    let verdicts = linspace(v_min, v_max, n)
        .into_iter()
        .map(|v| Ok(detour_scan(&curve, v, &lambdas)?))
        .collect::<Result<Vec<_>>>()?;
    let critical_speed = critical_speed(&verdicts);
    Ok(DetourSweep {
        verdicts,
        critical_speed,
    })
}

/// `x -> mu([0, x])` for a grid density, through the tail mass.
pub fn cdf_of(mu: &DensityGrid) -> impl Fn(f64) -> f64 + '_ {
    move |x| {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            1.0 - measures::tail_mass(mu, 1.0 - x).unwrap_or(f64::NAN)
        }
    }
}

/// CDF of the Dirichlet ground state `2 sin^2(pi x)`.
pub fn ground_state_cdf(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x - (2.0 * PI * x).sin() / (2.0 * PI)
}

/// Monte Carlo experiments available from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Rayknight1,
    Rayknight2,
    Fdensity,
    Survival,
    Occupation0,
    Occupation2,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rayknight1 => "rayknight1",
            Experiment::Rayknight2 => "rayknight2",
            Experiment::Fdensity => "fdensity",
            Experiment::Survival => "survival",
            Experiment::Occupation0 => "occupation0",
            Experiment::Occupation2 => "occupation2",
        }
    }
}

/// Optional overrides of an experiment's defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct McParams {
    pub s: Option<f64>,
    pub c: Option<f64>,
    pub paths: Option<u64>,
    pub dt: Option<f64>,
    pub level: Option<f64>,
    pub budget: Option<f64>,
    pub seed: u64,
    pub workers: usize,
}

/// Result of one experiment: verdict, JSON report and a binned CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    pub experiment: Experiment,
    pub passed: bool,
    pub summary: String,
    pub report: Value,
    pub bins: Vec<BinRow>,
}

fn histogram_rows(h: &OccupationHistogram) -> Vec<BinRow> {
    h.bin_edges
        .windows(2)
        .zip(h.densities())
        .map(|(e, d)| (e[0], e[1], d))
        .collect()
}

fn ray_knight_outcome(exp: Experiment, r: RayKnightReport, tol: &Tolerances) -> McOutcome {
    let z = r.statistic.z_score(r.statistic_target);
    let passed = z <= tol.se_multiplier;
    let what = if exp == Experiment::Rayknight1 {
        "slope"
    } else {
        "near-zero level"
    };
    let summary = format!(
        "{} {what} {:.5} +- {:.5} vs {} ({z:.2} SE)",
        exp.name(),
        r.statistic.mean,
        r.statistic.se,
        r.statistic_target
    );
    let bins = r
        .bin_edges
        .windows(2)
        .zip(&r.profile)
        .map(|(e, p)| (e[0], e[1], p.mean))
        .collect();
    let report = json!({
        "seed": r.config.seed,
        "workers": r.config.workers,
        "n_paths": r.config.n_paths,
        "dt": r.config.dt,
        "bin_width": r.config.bin_width,
        "level": r.config.level,
        "budget": r.config.budget,
        "statistic": r.statistic,
        "statistic_target": r.statistic_target,
        "z_score": z,
        "se_multiplier": tol.se_multiplier,
        "profile": r.profile,
        "expected": r.expected,
        "mean_elapsed": r.mean_elapsed,
        "passed": passed,
    });
    McOutcome {
        experiment: exp,
        passed,
        summary,
        report,
        bins,
    }
}

fn occupation_reference(dimension: u32) -> Result<DensityGrid> {
    if dimension == 0 {
        return Ok(measures::mu_circ());
    }
    let (gb, _) = gamma_bullet(&default_rate_table()?)?;
    Ok(solve_de2(1.0 / gb)?.g)
}

/// Runs `exp` with defaults filled in and judges it against `tol`.
pub fn run_experiment(exp: Experiment, p: &McParams, tol: &Tolerances) -> Result<McOutcome> {
    let workers = p.workers.max(1);
    match exp {
        Experiment::Rayknight1 => {
            let cfg = RayKnightConfig {
                level: p.level.unwrap_or(1.0),
                budget: 0.0,
                dt: p.dt.unwrap_or(1e-4),
                bin_width: 0.02,
                n_paths: p.paths.unwrap_or(100_000),
                workers,
                seed: p.seed,
            };
            Ok(ray_knight_outcome(exp, ray_knight_first(cfg)?, tol))
        }
        Experiment::Rayknight2 => {
            let cfg = RayKnightConfig {
                level: p.level.unwrap_or(0.3),
                budget: p.budget.unwrap_or(0.5),
                dt: p.dt.unwrap_or(1e-4),
                bin_width: 0.02,
                n_paths: p.paths.unwrap_or(100_000),
                workers,
                seed: p.seed,
            };
            Ok(ray_knight_outcome(exp, ray_knight_second(cfg)?, tol))
        }
        Experiment::Fdensity => {
            let c = p.c.unwrap_or(1.0);
            let points = match p.s {
                Some(s) => vec![s],
                None => vec![0.5, 1.0, 2.0, 5.0],
            };
            let r = f_density_experiment(
                c,
                &points,
                p.dt.unwrap_or(2.5e-4),
                p.paths.unwrap_or(100_000),
                workers,
                p.seed,
            )?;
            let z: Vec<f64> = r
                .empirical
                .iter()
                .zip(&r.exact)
                .map(|(e, x)| e.z_score(*x))
                .collect();
            let passed = z.iter().all(|z| *z <= tol.se_multiplier);
            let worst = z.iter().fold(0.0f64, |m, v| m.max(*v));
            let summary = format!(
                "fdensity CDF at {:?}: worst deviation {worst:.2} SE",
                r.points
            );
            let bins = r
                .points
                .iter()
                .zip(&r.empirical)
                .map(|(s, e)| (0.0, *s, e.mean))
                .collect();
            let report = json!({
                "seed": r.seed,
                "workers": r.workers,
                "n_paths": r.n_paths,
                "dt": r.dt,
                "c": r.c,
                "points": r.points,
                "empirical_cdf": r.empirical,
                "exact_cdf": r.exact,
                "z_scores": z,
                "se_multiplier": tol.se_multiplier,
                "passed": passed,
            });
            Ok(McOutcome {
                experiment: exp,
                passed,
                summary,
                report,
                bins,
            })
        }
        Experiment::Survival => {
            let c = p.c.unwrap_or(0.5);
            let s = p.s.unwrap_or(0.25);
            let dt = p.dt.unwrap_or(1e-3);
            let n_paths = p.paths.unwrap_or(1_000_000);
            let series = survival_eigen(c, s, 50)?;
            let est = survival_mc(c, s, dt, n_paths, workers, p.seed)?;
            let z = est.z_score(series);
            let slope = survival_log_slope(c)?;
            let slope_rel = (slope / (-2.0 * PI * PI) - 1.0).abs();
            let passed = z <= tol.se_multiplier && slope_rel <= tol.survival_slope_rel;
            let summary = format!(
                "survival MC {:.6} +- {:.6} vs series {series:.6} ({z:.2} SE); log-slope {slope:.5} vs -2pi^2",
                est.mean, est.se
            );
            let bins = linspace(0.0, 2.0, 81)
                .into_iter()
                .skip(1)
                .map(|t| Ok((0.0, t, survival_eigen(c, t, 50)?)))
                .collect::<Result<Vec<_>>>()?;
            let report = json!({
                "seed": p.seed,
                "workers": workers,
                "n_paths": n_paths,
                "dt": dt,
                "c": c,
                "s": s,
                "estimate": est,
                "series": series,
                "z_score": z,
                "log_slope": slope,
                "log_slope_rel_error": slope_rel,
                "se_multiplier": tol.se_multiplier,
                "passed": passed,
            });
            Ok(McOutcome {
                experiment: exp,
                passed,
                summary,
                report,
                bins,
            })
        }
        Experiment::Occupation0 | Experiment::Occupation2 => {
            let dimension = if exp == Experiment::Occupation0 { 0 } else { 2 };
            let s = p.s.unwrap_or(if dimension == 0 { 0.4 } else { 0.5 });
            let horizons = if dimension == 0 {
                vec![0.5 * s, s]
            } else {
                vec![0.5 * s, 0.8 * s, s]
            };
            let cfg = OccupationConfig {
                dimension,
                c: p.c.unwrap_or(0.5),
                horizons,
                dt: p.dt.unwrap_or(OCCUPATION_DT),
                bins: OCCUPATION_BINS,
                n_paths: p.paths.unwrap_or(1_000_000),
                workers,
                seed: p.seed,
            };
            let runs = conditioned_occupation(&cfg)?;
            let reference = occupation_reference(dimension)?;
            let ks: Vec<f64> = runs
                .iter()
                .map(|h| h.y_hist.ks_distance(cdf_of(&reference)))
                .collect();
            let ks_z: Vec<f64> = runs
                .iter()
                .map(|h| h.z_hist.ks_distance(ground_state_cdf))
                .collect();
            let last = runs.len() - 1;
            let (passed, summary) = if dimension == 0 {
                let ok = ks[last] <= tol.ks_occupation0 && ks_z[last] <= tol.ks_occupation0;
                (
                    ok,
                    format!(
                        "occupation0 at s = {s}: KS(Y, mu_circ) {:.4}, KS(Z, 2 sin^2) {:.4}",
                        ks[last], ks_z[last]
                    ),
                )
            } else {
                let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
                let ok = ks[last] <= tol.ks_occupation2 && decreasing;
                (
                    ok,
                    format!("occupation2 KS over horizons {:?}: {ks:.4?}", cfg.horizons),
                )
            };
            let report = json!({
                "seed": cfg.seed,
                "workers": cfg.workers,
                "n_paths": cfg.n_paths,
                "dt": cfg.dt,
                "c": cfg.c,
                "dimension": dimension,
                "horizons": cfg.horizons,
                "accepted": runs.iter().map(|h| h.accepted).collect::<Vec<_>>(),
                "acceptance": runs.iter().map(|h| h.acceptance).collect::<Vec<_>>(),
                "ks_y": ks,
                "ks_z": if dimension == 0 { json!(ks_z) } else { Value::Null },
                "ks_threshold": if dimension == 0 { tol.ks_occupation0 } else { tol.ks_occupation2 },
                "passed": passed,
            });
            Ok(McOutcome {
                experiment: exp,
                passed,
                summary,
                report,
                bins: histogram_rows(&runs[last].y_hist),
            })
        }
    }
}

/// Least-squares slope of `ln P(survive to s)` over `s in [0.5, 2]`.
pub fn survival_log_slope(c: f64) -> Result<f64> {
    let s = linspace(0.5, 2.0, 31);
    let logs = s
        .iter()
        .map(|&t| Ok(survival_eigen(c, t, 50)?.ln()))
        .collect::<Result<Vec<_>>>()?;
    Ok(linear_fit(&s, &logs)?.0)
}
