use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Seed plus stream index; equal specs give equal sample sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Per-worker partial results that can be folded together.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

/// Number of paths handled by worker `w` out of `workers`.
pub fn share(n_paths: u64, workers: usize, w: usize) -> u64 {
    let workers = workers as u64;
    n_paths / workers + u64::from((w as u64) < n_paths % workers)
}

/// Runs `per_path` `n_paths` times split over `workers` threads.
///
/// Worker `w` draws from stream `w` of `seed`; partial results are merged in
/// worker order, so the outcome is bitwise fixed by `(seed, workers)`.
pub fn run_workers<A, I, F>(
    n_paths: u64,
    workers: usize,
    seed: u64,
    init: I,
    per_path: F,
) -> Result<A>
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut ChaCha8Rng, &mut A) -> Result<()> + Sync,
{
    let workers = workers.max(1);
    let results: Vec<Result<A>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (init, per_path) = (&init, &per_path);
                s.spawn(move || {
                    let mut rng = RngSpec::new(seed, w as u64).rng();
                    let mut acc = init();
                    for _ in 0..share(n_paths, workers, w) {
                        per_path(&mut rng, &mut acc)?;
                    }
                    Ok(acc)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(LabError::Simulation("worker panicked".into())))
            })
            .collect()
    });
    let mut iter = results.into_iter();
    let mut acc = iter.next().expect("at least one worker")?;
    for r in iter {
        acc.merge(r?);
    }
    Ok(acc)
}

/// Running mean and variance (Welford), mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            se: (self.variance() / self.n.max(1) as f64).sqrt(),
            n: self.n,
        }
    }
}

impl Merge for Moments {
    fn merge(&mut self, other: Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }
}

impl Merge for Vec<Moments> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl Estimate {
    /// `|mean - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.se > 0.0 {
            (self.mean - target).abs() / self.se
        } else if self.mean == target {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Mean and standard error of `sample` over `n_paths` draws.
pub fn mc_estimate<F>(sample: F, n_paths: u64, workers: usize, rng: RngSpec) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if n_paths < 100 {
        return Err(LabError::Usage(format!(
            "mc_estimate needs at least 100 paths, got {n_paths}"
        )));
    }
    let m = run_workers(n_paths, workers, rng.seed, Moments::default, |r, acc| {
        acc.push(sample(r));
        Ok(())
    })?;
    Ok(m.estimate())
}
