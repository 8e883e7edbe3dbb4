use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::parallel::{run_workers, Merge, Moments};
use super::Estimate;
use crate::error::{LabError, Result};

/// Binned occupation density (time per unit length) of a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeField {
    pub bin_edges: Vec<f64>,
    pub occupation: Vec<f64>,
}

impl LocalTimeField {
    /// `sum occupation * width`, the total time recorded.
    pub fn elapsed(&self) -> f64 {
        self.occupation
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(o, e)| o * (e[1] - e[0]))
            .sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|e| 0.5 * (e[0] + e[1]))
            .collect()
    }
}

/// `occupation[i] = dt * #{k : positions[k] in bin i} / bin_width` on bins aligned to
/// multiples of `bin_width` covering the visited range.
pub fn local_time_field(positions: &[f64], dt: f64, bin_width: f64) -> Result<LocalTimeField> {
    if positions.is_empty() {
        return Err(LabError::Domain("local time of an empty path".into()));
    }
    if !(dt > 0.0 && bin_width > 0.0) || positions.iter().any(|p| !p.is_finite()) {
        return Err(LabError::Domain(
            "local time needs dt > 0, bin_width > 0 and finite positions".into(),
        ));
    }
    let lo = positions.iter().fold(f64::INFINITY, |m, p| m.min(*p));
    let hi = positions.iter().fold(f64::NEG_INFINITY, |m, p| m.max(*p));
    let first = (lo / bin_width).floor() as i64;
    let n = ((hi / bin_width).floor() as i64 - first + 1) as usize;
    let mut occupation = vec![0.0; n];
    for p in positions {
        let i = ((p / bin_width).floor() as i64 - first) as usize;
        occupation[i.min(n - 1)] += dt / bin_width;
    }
    let bin_edges = (0..=n)
        .map(|i| (first + i as i64) as f64 * bin_width)
        .collect();
    Ok(LocalTimeField {
        bin_edges,
        occupation,
    })
}

/// Settings for the two local-time experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayKnightConfig {
    /// Hitting level `a` (first theorem) or reflection window `M` (second).
    pub level: f64,
    /// Local-time budget `b` at 0 (second theorem only).
    pub budget: f64,
    pub dt: f64,
    pub bin_width: f64,
    pub n_paths: u64,
    pub workers: usize,
    pub seed: u64,
}

/// Mean local-time profile and the summary statistic compared with theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayKnightReport {
    pub config: RayKnightConfig,
    pub bin_edges: Vec<f64>,
    /// Per-bin mean occupation with standard errors.
    pub profile: Vec<Estimate>,
    /// Per-bin theoretical mean.
    pub expected: Vec<f64>,
    /// Per-path statistic (slope for the first theorem, near-zero level for the second).
    pub statistic: Estimate,
    pub statistic_target: f64,
    pub mean_elapsed: f64,
}

struct ProfileAcc {
    bins: Vec<Moments>,
    stat: Moments,
    elapsed: Moments,
}

impl Merge for ProfileAcc {
    fn merge(&mut self, other: Self) {
        self.bins.merge(other.bins);
        self.stat.merge(other.stat);
        self.elapsed.merge(other.elapsed);
    }
}

fn validate(cfg: &RayKnightConfig) -> Result<()> {
    if !(cfg.level > 0.0 && cfg.dt > 0.0 && cfg.bin_width > 0.0 && cfg.n_paths > 0) {
        return Err(LabError::Domain(format!(
            "invalid local-time configuration {cfg:?}"
        )));
    }
    let steps = (cfg.level / cfg.bin_width).round();
    if (steps * cfg.bin_width - cfg.level).abs() > 1e-9 * cfg.level {
        return Err(LabError::Domain(
            "level must be a multiple of the bin width".into(),
        ));
    }
    Ok(())
}

/// Brownian motion from 0 run to the first hit of `a`: `E[L_{a-x}(tau_a)] = 2x`.
///
/// Excursions below 0 leave local times on `(0, a]` unchanged, so the path is
/// simulated as reflected Brownian motion `|w + sqrt(dt) xi|`, exact in law on the
/// grid, and killed at `a` with the Brownian-bridge crossing correction.
pub fn ray_knight_first(cfg: RayKnightConfig) -> Result<RayKnightReport> {
    validate(&cfg)?;
    let a = cfg.level;
    let nb = (a / cfg.bin_width).round() as usize;
    let bw = cfg.bin_width;
    let sd = cfg.dt.sqrt();
    let xs: Vec<f64> = (0..nb).map(|i| a - (i as f64 + 0.5) * bw).collect();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let init = || ProfileAcc {
        bins: vec![Moments::default(); nb],
        stat: Moments::default(),
        elapsed: Moments::default(),
    };
    let acc = run_workers(cfg.n_paths, cfg.workers, cfg.seed, init, |rng, acc| {
        let mut counts = vec![0u32; nb];
        let mut w = 0.0f64;
        let mut steps = 0u64;
        loop {
            counts[((w / bw) as usize).min(nb - 1)] += 1;
            steps += 1;
            let next = (w + sd * rng.sample::<f64, _>(StandardNormal)).abs();
            if next >= a || rng.random::<f64>() < (-2.0 * (a - w) * (a - next) / cfg.dt).exp() {
                break;
            }
            w = next;
        }
        let mut sxy = 0.0;
        for (i, &k) in counts.iter().enumerate() {
            let l = k as f64 * cfg.dt / bw;
            acc.bins[i].push(l);
            sxy += xs[i] * l;
        }
        acc.stat.push(sxy / sxx);
        acc.elapsed.push(steps as f64 * cfg.dt);
        Ok(())
    })?;
    Ok(RayKnightReport {
        config: cfg,
        bin_edges: (0..=nb).map(|i| i as f64 * bw).collect(),
        profile: acc.bins.iter().map(Moments::estimate).collect(),
        expected: xs.iter().map(|x| 2.0 * x).collect(),
        statistic: acc.stat.estimate(),
        statistic_target: 2.0,
        mean_elapsed: acc.elapsed.mean,
    })
}

/// Number of bins on each side of 0 averaged into the second-theorem statistic.
pub const NEAR_ZERO_BINS: usize = 10;

/// Local time at 0 accumulated by a Brownian bridge from `a` to `b` over time `t`,
/// sampled by inverting `P(L > l) = exp(((b - a)^2 - (|a| + |b| + l)^2) / 2t)`.
pub fn bridge_local_time<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64, t: f64) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let d = b - a;
    let reach = (d * d - 2.0 * t * u.ln()).sqrt();
    (reach - a.abs() - b.abs()).max(0.0)
}

/// Brownian motion from 0 run until its local time at 0 reaches `b`:
/// `E[L_x(tau_b)] = b` on both sides of 0.
///
/// Local times inside `(-M, M)` do not see the path beyond `+-M`, so the motion is
/// folded into `[-M, M]` (reflected Brownian motion, exact in law). `L_0` is
/// sampled exactly step by step from the bridge law, so the path sits at 0 when
/// it reaches `b`; the interrupted last step counts half in the occupation field.
pub fn ray_knight_second(cfg: RayKnightConfig) -> Result<RayKnightReport> {
    validate(&cfg)?;
    if !(cfg.budget > 0.0) {
        return Err(LabError::Domain(
            "local-time budget must be positive".into(),
        ));
    }
    let m = cfg.level;
    let bw = cfg.bin_width;
    let half = (m / bw).round() as usize;
    let nb = 2 * half + 1;
    let sd = cfg.dt.sqrt();
    let near: Vec<usize> =
        (half - NEAR_ZERO_BINS.min(half)..=half + NEAR_ZERO_BINS.min(half)).collect();
    let init = || ProfileAcc {
        bins: vec![Moments::default(); nb],
        stat: Moments::default(),
        elapsed: Moments::default(),
    };
    let acc = run_workers(cfg.n_paths, cfg.workers, cfg.seed, init, |rng, acc| {
        let mut counts = vec![0f64; nb];
        let mut w = 0.0f64;
        let mut l0 = 0.0;
        let mut time = 0.0;
        loop {
            let i =
                (((w / bw) + 0.5).floor() as i64 + half as i64).clamp(0, nb as i64 - 1) as usize;
            let mut next = w + sd * rng.sample::<f64, _>(StandardNormal);
            while next.abs() > m {
                next = if next > m {
                    2.0 * m - next
                } else {
                    -2.0 * m - next
                };
            }
            l0 += bridge_local_time(rng, w, next, cfg.dt);
            if l0 >= cfg.budget {
                counts[i] += 0.5;
                time += 0.5 * cfg.dt;
                break;
            }
            counts[i] += 1.0;
            time += cfg.dt;
            w = next;
        }
        for (i, &k) in counts.iter().enumerate() {
            acc.bins[i].push(k * cfg.dt / bw);
        }
        let mut near_sum = 0.0;
        for &i in &near {
            near_sum += counts[i] * cfg.dt / bw;
        }
        acc.stat.push(near_sum / near.len() as f64);
        acc.elapsed.push(time);
        Ok(())
    })?;
    Ok(RayKnightReport {
        config: cfg,
        bin_edges: (0..=nb)
            .map(|i| (i as f64 - half as f64 - 0.5) * bw)
            .collect(),
        profile: acc.bins.iter().map(Moments::estimate).collect(),
        expected: vec![cfg.budget; nb],
        statistic: acc.stat.estimate(),
        statistic_target: cfg.budget,
        mean_elapsed: acc.elapsed.mean,
    })
}
