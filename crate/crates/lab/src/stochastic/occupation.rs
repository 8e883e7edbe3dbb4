use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::besq::{besq0_integral_with, f_cdf};
use super::parallel::{run_workers, Merge, Moments};
use super::{Estimate, RngSpec};
use crate::error::{LabError, Result};

/// Probability histogram on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationHistogram {
    pub bin_edges: Vec<f64>,
    pub weights: Vec<f64>,
}

impl OccupationHistogram {
    /// Uniform bins on `[0, 1]` with `raw` renormalized to unit mass.
    pub fn from_raw(raw: &[f64]) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if raw.is_empty() || !(total > 0.0) || raw.iter().any(|w| !(*w >= 0.0)) {
            return Err(LabError::Domain(
                "histogram needs non-negative weights with positive mass".into(),
            ));
        }
        let n = raw.len();
        Ok(Self {
            bin_edges: (0..=n).map(|i| i as f64 / n as f64).collect(),
            weights: raw.iter().map(|w| w / total).collect(),
        })
    }

    /// Weight divided by bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(w, e)| w / (e[1] - e[0]))
            .collect()
    }

    /// Largest gap between the histogram CDF and `cdf` at the bin edges.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let mut acc = 0.0;
        let mut worst = (cdf(self.bin_edges[0])).abs();
        for (w, e) in self.weights.iter().zip(&self.bin_edges[1..]) {
            acc += w;
            worst = worst.max((acc - cdf(*e)).abs());
        }
        worst
    }
}

/// `P(2B` from `c` stays in `(0, 1)` up to time `s)` by the Dirichlet eigen-series.
pub fn survival_eigen(c: f64, s: f64, n_terms: usize) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) || !(s >= 0.0) || n_terms < 25 {
        return Err(LabError::Domain(format!(
            "survival_eigen needs c in (0,1), s >= 0, n_terms >= 25; got {c}, {s}, {n_terms}"
        )));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let p = (1..=n_terms)
        .map(|k| {
            let kp = k as f64 * PI;
            2.0 / kp * (1.0 - (kp).cos()) * (kp * c).sin() * (-2.0 * kp * kp * s).exp()
        })
        .sum();
    Ok(p)
}

/// Killing probability of a step from `z` to `next` (both inside `(0, 1)`) under a
/// Brownian bridge with variance `4 dt`.
fn killed_between<R: Rng + ?Sized>(rng: &mut R, z: f64, next: f64, dt: f64) -> bool {
    if next <= 0.0 || next >= 1.0 {
        return true;
    }
    let p0 = (-z * next / (2.0 * dt)).exp();
    let p1 = (-(1.0 - z) * (1.0 - next) / (2.0 * dt)).exp();
    rng.random::<f64>() < p0 + p1 - p0 * p1
}

/// Rejection estimate of [`survival_eigen`] with bridge-corrected killing.
pub fn survival_mc(
    c: f64,
    s: f64,
    dt: f64,
    n_paths: u64,
    workers: usize,
    seed: u64,
) -> Result<Estimate> {
    survival_eigen(c, s, 25)?;
    if !(dt > 0.0) || n_paths == 0 {
        return Err(LabError::Usage(
            "survival_mc needs dt > 0 and n_paths > 0".into(),
        ));
    }
    let steps = (s / dt).round() as u64;
    let sd = 2.0 * dt.sqrt();
    let m = run_workers(n_paths, workers, seed, Moments::default, |rng, acc| {
        let mut z = c;
        let mut alive = true;
        for _ in 0..steps {
            let next = z + sd * rng.sample::<f64, _>(StandardNormal);
            if killed_between(rng, z, next, dt) {
                alive = false;
                break;
            }
            z = next;
        }
        acc.push(if alive { 1.0 } else { 0.0 });
        Ok(())
    })?;
    Ok(m.estimate())
}

/// Settings for a conditioned-occupation run over several horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationConfig {
    pub dimension: u32,
    pub c: f64,
    /// Increasing time horizons sharing the same simulated paths.
    pub horizons: Vec<f64>,
    pub dt: f64,
    pub bins: usize,
    pub n_paths: u64,
    pub workers: usize,
    pub seed: u64,
}

/// Accepted paths and occupation histograms at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub s: f64,
    pub accepted: u64,
    pub acceptance: f64,
    /// Occupation of `Y` (samples of `Z` weighted by `1/z`).
    pub y_hist: OccupationHistogram,
    /// Occupation of `Z` itself.
    pub z_hist: OccupationHistogram,
}

struct OccAcc {
    accepted: Vec<u64>,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
}

impl Merge for OccAcc {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.accepted.iter_mut().zip(other.accepted) {
            *a += b;
        }
        for (a, b) in self
            .y
            .iter_mut()
            .zip(other.y)
            .chain(self.z.iter_mut().zip(other.z))
        {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Time-changed process `Z` on `[0, s]` conditioned to stay below 1 (and, for
/// `d = 0`, above 0), with its occupation and that of `Y` up to `rho(s)`.
///
/// `d = 0`: `Z` is Brownian motion with variance `4t` killed at 0 and 1.
/// `d = 2`: `Z` is the radius of a planar Brownian motion with per-coordinate
/// variance `4t`, killed at radius 1; the bridge correction treats the circle as
/// its tangent line over one step.
pub fn conditioned_occupation(cfg: &OccupationConfig) -> Result<Vec<HorizonResult>> {
    if cfg.dimension != 0 && cfg.dimension != 2 {
        return Err(LabError::Domain(format!(
            "dimension must be 0 or 2, got {}",
            cfg.dimension
        )));
    }
    if !(cfg.c > 0.0 && cfg.c < 1.0) || !(cfg.dt > 0.0) || cfg.bins == 0 || cfg.n_paths == 0 {
        return Err(LabError::Domain(format!(
            "invalid occupation configuration {cfg:?}"
        )));
    }
    if cfg.horizons.is_empty()
        || cfg.horizons.windows(2).any(|w| w[1] <= w[0])
        || !(cfg.horizons[0] > 0.0)
    {
        return Err(LabError::Domain(
            "horizons must be positive and increasing".into(),
        ));
    }
    let marks: Vec<usize> = cfg
        .horizons
        .iter()
        .map(|s| ((s / cfg.dt).round() as usize).max(1))
        .collect();
    let (nh, nb) = (marks.len(), cfg.bins);
    let last = marks[nh - 1];
    let sd = 2.0 * cfg.dt.sqrt();
    let dt = cfg.dt;
    let init = || OccAcc {
        accepted: vec![0; nh],
        y: vec![vec![0.0; nb]; nh],
        z: vec![vec![0.0; nb]; nh],
    };
    let acc = run_workers(cfg.n_paths, cfg.workers, cfg.seed, init, |rng, acc| {
        let mut ys = vec![0.0; nb];
        let mut zs = vec![0.0; nb];
        let (mut px, mut py) = (cfg.c, 0.0f64);
        let mut z = cfg.c;
        let mut h = 0;
        for step in 0..last {
            let b = ((z * nb as f64) as usize).min(nb - 1);
            zs[b] += 1.0;
            ys[b] += 1.0 / z;
            if cfg.dimension == 0 {
                let next = z + sd * rng.sample::<f64, _>(StandardNormal);
                if killed_between(rng, z, next, dt) {
                    return Ok(());
                }
                z = next;
            } else {
                let nx = px + sd * rng.sample::<f64, _>(StandardNormal);
                let ny = py + sd * rng.sample::<f64, _>(StandardNormal);
                let next = nx.hypot(ny);
                if next >= 1.0
                    || rng.random::<f64>() < (-(1.0 - z) * (1.0 - next) / (2.0 * dt)).exp()
                {
                    return Ok(());
                }
                (px, py, z) = (nx, ny, next);
            }
            if step + 1 == marks[h] {
                acc.accepted[h] += 1;
                for i in 0..nb {
                    acc.y[h][i] += ys[i];
                    acc.z[h][i] += zs[i];
                }
                h += 1;
            }
        }
        Ok(())
    })?;
    let mut out = Vec::with_capacity(nh);
    for h in 0..nh {
        if acc.accepted[h] == 0 {
            return Err(LabError::Infeasible(format!(
                "no path survived to s = {}; acceptance below {:e}",
                cfg.horizons[h],
                1.0 / cfg.n_paths as f64
            )));
        }
        out.push(HorizonResult {
            s: cfg.horizons[h],
            accepted: acc.accepted[h],
            acceptance: acc.accepted[h] as f64 / cfg.n_paths as f64,
            y_hist: OccupationHistogram::from_raw(&acc.y[h])?,
            z_hist: OccupationHistogram::from_raw(&acc.z[h])?,
        });
    }
    Ok(out)
}

/// Default time step of the conditioned-occupation runs.
pub const OCCUPATION_DT: f64 = 2.5e-4;
/// Default number of histogram bins on `[0, 1]`.
pub const OCCUPATION_BINS: usize = 100;

/// Single-horizon `Y`-occupation histogram on one worker seeded by `rng`.
pub fn mc_conditioned_occupation(
    dimension: u32,
    c: f64,
    s: f64,
    n_paths: u64,
    rng: RngSpec,
) -> Result<OccupationHistogram> {
    let cfg = OccupationConfig {
        dimension,
        c,
        horizons: vec![s],
        dt: OCCUPATION_DT,
        bins: OCCUPATION_BINS,
        n_paths,
        workers: 1,
        seed: rng.seed,
    };
    let mut runs = conditioned_occupation(&cfg)?;
    Ok(runs.remove(0).y_hist)
}

/// Empirical CDF of `S = int Y` under BESQ^0(c) at the given points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FDensityReport {
    pub c: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub workers: usize,
    pub seed: u64,
    pub points: Vec<f64>,
    pub empirical: Vec<Estimate>,
    pub exact: Vec<f64>,
}

/// Simulates `S` with Euler steps of size `dt` and compares its CDF with `f_cdf`.
pub fn f_density_experiment(
    c: f64,
    points: &[f64],
    dt: f64,
    n_paths: u64,
    workers: usize,
    seed: u64,
) -> Result<FDensityReport> {
    if points.is_empty() || points.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(LabError::Domain(
            "CDF points must be positive and finite".into(),
        ));
    }
    let exact = points
        .iter()
        .map(|s| f_cdf(c, *s))
        .collect::<Result<Vec<_>>>()?;
    let cap = points.iter().fold(0.0f64, |m, s| m.max(*s));
    let np = points.len();
    let m = run_workers(
        n_paths,
        workers,
        seed,
        || vec![Moments::default(); np],
        |rng, acc| {
            let s = besq0_integral_with(rng, c, dt, cap);
            for (a, p) in acc.iter_mut().zip(points) {
                a.push(if s <= *p { 1.0 } else { 0.0 });
            }
            Ok(())
        },
    )?;
    Ok(FDensityReport {
        c,
        dt,
        n_paths,
        workers,
        seed,
        points: points.to_vec(),
        empirical: m.iter().map(Moments::estimate).collect(),
        exact,
    })
}
