use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::RngSpec;
use crate::error::{LabError, Result};

/// Default cap on the number of Euler steps of a BESQ^0 path.
pub const MAX_STEPS: usize = 10_000_000;

/// A discretized squared Bessel (or Brownian) trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionPath {
    pub values: Vec<f64>,
    pub step: f64,
    pub dimension: u32,
    pub start: f64,
    /// First index at which the path sits at 0 for good.
    pub absorbed_at: Option<usize>,
}

impl DiffusionPath {
    /// Trapezoid integral of the path over its whole grid.
    pub fn integral(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * self.step)
            .sum()
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(LabError::Domain(format!(
            "step must be positive, got {step}"
        )));
    }
    Ok(())
}

/// BESQ^2 from `c` on `[0, x_max]`, exact in law on the grid:
/// `Y = (sqrt(c) + B1)^2 + B2^2` for a planar Brownian motion `(B1, B2)`.
pub fn sample_besq2_with<R: Rng + ?Sized>(
    rng: &mut R,
    c: f64,
    x_max: f64,
    step: f64,
) -> Result<DiffusionPath> {
    check_step(step)?;
    if !(c >= 0.0) || !(x_max >= 0.0) {
        return Err(LabError::Domain(format!(
            "need c >= 0 and x_max >= 0, got {c}, {x_max}"
        )));
    }
    let n = (x_max / step).round() as usize;
    let sd = step.sqrt();
    let (mut b1, mut b2) = (c.sqrt(), 0.0f64);
    let mut values = Vec::with_capacity(n + 1);
    values.push(c);
    for _ in 0..n {
        b1 += sd * rng.sample::<f64, _>(StandardNormal);
        b2 += sd * rng.sample::<f64, _>(StandardNormal);
        values.push(b1 * b1 + b2 * b2);
    }
    Ok(DiffusionPath {
        values,
        step,
        dimension: 2,
        start: c,
        absorbed_at: None,
    })
}

pub fn sample_besq2(c: f64, x_max: f64, step: f64, rng: RngSpec) -> Result<DiffusionPath> {
    sample_besq2_with(&mut rng.rng(), c, x_max, step)
}

/// One Euler step of BESQ^0 with full truncation at 0.
#[inline]
pub fn besq0_step<R: Rng + ?Sized>(rng: &mut R, y: f64, sd: f64) -> f64 {
    (y + 2.0 * y.sqrt() * sd * rng.sample::<f64, _>(StandardNormal)).max(0.0)
}

/// BESQ^0 from `c` by Euler-Maruyama with full truncation, run until absorption.
pub fn sample_besq0_with<R: Rng + ?Sized>(
    rng: &mut R,
    c: f64,
    step: f64,
    max_steps: usize,
) -> Result<DiffusionPath> {
    check_step(step)?;
    if !(c > 0.0) {
        return Err(LabError::Domain(format!(
            "BESQ^0 start must be positive, got {c}"
        )));
    }
    let sd = step.sqrt();
    let mut values = vec![c];
    let mut y = c;
    while y > 0.0 {
        if values.len() > max_steps {
            return Err(LabError::Simulation(format!(
                "BESQ^0 path not absorbed within {max_steps} steps"
            )));
        }
        y = besq0_step(rng, y, sd);
        values.push(y);
    }
    let absorbed_at = Some(values.len() - 1);
    Ok(DiffusionPath {
        values,
        step,
        dimension: 0,
        start: c,
        absorbed_at,
    })
}

pub fn sample_besq0(c: f64, step: f64, rng: RngSpec) -> Result<DiffusionPath> {
    sample_besq0_with(&mut rng.rng(), c, step, MAX_STEPS)
}

/// `S = int_0^inf Y dx` for an Euler BESQ^0 path, stopped early once `S > s_cap`
/// (the returned value then only certifies `S > s_cap`).
pub fn besq0_integral_with<R: Rng + ?Sized>(rng: &mut R, c: f64, step: f64, s_cap: f64) -> f64 {
    let sd = step.sqrt();
    let mut y = c;
    let mut s = 0.0;
    while y > 0.0 && s <= s_cap {
        let next = besq0_step(rng, y, sd);
        s += 0.5 * (y + next) * step;
        y = next;
    }
    s
}

/// Density of `S = int_0^inf Y dx` under BESQ^0(c): `c / (sqrt(8 pi) s^1.5) exp(-c^2 / (8 s))`.
pub fn f_density(c: f64, s: f64) -> Result<f64> {
    if !(c > 0.0 && s > 0.0) {
        return Err(LabError::Domain(format!(
            "f_density needs c > 0 and s > 0, got {c}, {s}"
        )));
    }
    Ok(c / ((8.0 * PI).sqrt() * s.powf(1.5)) * (-c * c / (8.0 * s)).exp())
}

/// `int_0^s f(c, u) du` by Simpson after substituting `u = 1/w^2`
/// (the integrand becomes a Gaussian in `w`). `s = inf` gives the total mass.
pub fn f_cdf(c: f64, s: f64) -> Result<f64> {
    if !(c > 0.0 && s > 0.0) {
        return Err(LabError::Domain(format!(
            "f_cdf needs c > 0 and s > 0, got {c}, {s}"
        )));
    }
    let w0 = if s.is_infinite() { 0.0 } else { 1.0 / s.sqrt() };
    let w1 = w0 + 40.0 / c;
    let n = 20_001;
    let h = (w1 - w0) / (n - 1) as f64;
    let k = 2.0 * c / (8.0 * PI).sqrt();
    let f = |w: f64| k * (-c * c * w * w / 8.0).exp();
    let mut total = f(w0) + f(w1);
    for i in 1..n - 1 {
        total += if i % 2 == 1 { 4.0 } else { 2.0 } * f(w0 + i as f64 * h);
    }
    Ok(total * h / 3.0)
}

/// The path reparametrized by its running integral.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    /// `Z_t = Y_{rho(t)}` on the uniform grid `t = j dt`, `t <= S`.
    pub z: DiffusionPath,
    /// `rho(t)` on the same grid.
    pub rho: Vec<f64>,
    /// `S = int Y`.
    pub total: f64,
}

/// `Z_t = Y_{rho(t)}` with `rho(t) = inf{u : int_0^u Y = t}`.
///
/// `Y` is taken piecewise linear between samples, so the cumulative integral is
/// piecewise quadratic and is inverted exactly cell by cell.
pub fn time_change(path: &DiffusionPath, dt: f64) -> Result<TimeChange> {
    check_step(dt)?;
    let y = &path.values;
    let end = path.absorbed_at.map_or(y.len(), |k| k + 1);
    if end < 2 {
        return Err(LabError::Domain("time change of a zero-length path".into()));
    }
    if let Some(v) = y[..end].iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(LabError::Domain(format!(
            "time change needs non-negative finite values, found {v}"
        )));
    }
    let h = path.step;
    let mut cum = Vec::with_capacity(end);
    cum.push(0.0);
    for k in 1..end {
        cum.push(cum[k - 1] + 0.5 * (y[k - 1] + y[k]) * h);
    }
    let total = cum[end - 1];
    if !(total > 0.0) {
        return Err(LabError::Domain(
            "time change of a path with zero integral".into(),
        ));
    }
    let n_out = (total / dt).floor() as usize + 1;
    let (mut z, mut rho) = (Vec::with_capacity(n_out), Vec::with_capacity(n_out));
    let mut k = 0;
    for j in 0..n_out {
        let t = (j as f64 * dt).min(total);
        while k + 2 < end && cum[k + 1] < t {
            k += 1;
        }
        let (a, b) = (y[k], y[k + 1]);
        let rem = (t - cum[k]).max(0.0);
        let curv = (b - a) / (2.0 * h);
        let disc = (a * a + 4.0 * curv * rem).max(0.0);
        let u = if a + disc.sqrt() > 0.0 {
            (2.0 * rem / (a + disc.sqrt())).min(h)
        } else {
            0.0
        };
        rho.push(k as f64 * h + u);
        z.push(a + (b - a) * u / h);
    }
    let start = z[0];
    let absorbed_at = path
        .absorbed_at
        .map(|_| z.len() - 1)
        .filter(|&i| z[i] == 0.0);
    Ok(TimeChange {
        z: DiffusionPath {
            values: z,
            step: dt,
            dimension: path.dimension,
            start,
            absorbed_at,
        },
        rho,
        total,
    })
}
