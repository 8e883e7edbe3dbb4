//! Speed constants and path costs read off a tabulated rate curve.
//!
//! A speed `v > 1` costs `J(1/v)` per unit distance, so `v J(1/v)` per unit time.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Result};
use crate::specfun::{bisect, find_bessel_root, MonotoneCubic};
use crate::variational::RateTable;

/// Unit-time cost of a return leg, `2 pi^2`.
pub const RETURN_COST: f64 = 2.0 * PI * PI;

/// Monotone cubic interpolant of `J(alpha)` through the table rows.
#[derive(Debug, Clone)]
pub struct RateCurve {
    interp: MonotoneCubic,
}

impl RateCurve {
    pub fn new(table: &RateTable) -> Result<Self> {
        let (a, j) = table.rows().iter().map(|r| (r.alpha, r.j)).unzip();
        Ok(Self {
            interp: MonotoneCubic::new(a, j)?,
        })
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        self.interp.domain()
    }

    /// Speeds `1/alpha` covered by the table.
    pub fn speed_range(&self) -> (f64, f64) {
        let (lo, hi) = self.alpha_range();
        (1.0 / hi, 1.0 / lo)
    }

    pub fn j(&self, alpha: f64) -> Result<f64> {
        self.interp.eval(alpha)
    }

    /// `v J(1/v)`, the unit-time cost of speed `v`.
    pub fn speed_rate(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            bail!(Range, "speed must be positive, got {v}");
        }
        Ok(v * self.j(1.0 / v)?)
    }
}

/// Vertex `(x, y)` of the parabola through three points.
fn parabola_vertex(p: [(f64, f64); 3]) -> Result<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > 0.0) {
        bail!(Range, "no interior minimum: parabola curvature {a}");
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    let yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    Ok((xv, yv))
}

fn interior_argmin(values: &[f64]) -> Result<usize> {
    let k = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if k == 0 || k + 1 >= values.len() {
        bail!(
            Range,
            "minimum lies on the table edge (row {k} of {})",
            values.len()
        );
    }
    Ok(k)
}

/// `1 / argmin J`, from the parabola through the three lowest rows.
pub fn gamma_star(table: &RateTable) -> Result<f64> {
    let rows = table.rows();
    let js: Vec<f64> = rows.iter().map(|r| r.j).collect();
    let k = interior_argmin(&js)?;
    let pts = [k - 1, k, k + 1].map(|i| (rows[i].alpha, rows[i].j));
    Ok(1.0 / parabola_vertex(pts)?.0)
}

/// `(gamma_bullet, Gamma_bullet)`: minimizer and minimum of `v J(1/v)`.
pub fn gamma_bullet(table: &RateTable) -> Result<(f64, f64)> {
    let rows = table.rows();
    let costs: Vec<f64> = rows.iter().map(|r| r.j / r.alpha).collect();
    let k = interior_argmin(&costs)?;
    let pts = [k - 1, k, k + 1].map(|i| (1.0 / rows[i].alpha, costs[i]));
    parabola_vertex(pts)
}

/// Smallest `v` with `v J(1/v) = 2 pi^2`, on the interpolated curve.
pub fn gamma_circ(table: &RateTable) -> Result<f64> {
    let curve = RateCurve::new(table)?;
    let (v_lo, _) = curve.speed_range();
    let (v_top, _) = gamma_bullet(table)?;
    let g = |v: f64| curve.speed_rate(v).map(|c| c - RETURN_COST);
    if !(g(v_lo)? > 0.0) {
        bail!(
            Range,
            "v J(1/v) is already below 2 pi^2 at the slowest tabulated speed {v_lo}"
        );
    }
    let steps = 2000;
    let mut prev = v_lo;
    for i in 1..=steps {
        let v = v_lo + (v_top - v_lo) * i as f64 / steps as f64;
        if g(v)? <= 0.0 {
            return bisect(|x| g(x).unwrap_or(f64::NAN), prev, v, 1e-13);
        }
        prev = v;
    }
    bail!(Range, "v J(1/v) does not reach 2 pi^2 on [{v_lo}, {v_top}]")
}

/// `v^2 / 2`, the unit-time cost of drift `v` for free Brownian motion.
pub fn speed_cost(v: f64) -> f64 {
    v * v / 2.0
}

/// A piecewise-linear space-time path `t -> f(t)` from `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    breakpoints: Vec<(f64, f64)>,
}

impl PathSpec {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints[0] != (0.0, 0.0) {
            bail!(
                Domain,
                "path must start at (0, 0) and have at least one segment"
            );
        }
        for w in breakpoints.windows(2) {
            let (dt, dx) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if !(dt > 0.0) {
                bail!(Domain, "breakpoint times must be strictly increasing");
            }
            if !(dx / dt > 1.0) {
                bail!(
                    Domain,
                    "segment slope {} is not above 1 (infinite cost)",
                    dx / dt
                );
            }
        }
        Ok(Self { breakpoints })
    }

    /// Straight line of slope `v` over `[0, duration]`.
    pub fn straight(v: f64, duration: f64) -> Result<Self> {
        Self::new(alloc::vec![(0.0, 0.0), (duration, v * duration)])
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }
}

/// `sum over segments of (distance) J(1/slope)`, i.e. `int f'(t) J(1/f'(t)) dt`.
pub fn path_cost(path: &PathSpec, table: &RateTable) -> Result<f64> {
    let curve = RateCurve::new(table)?;
    path.breakpoints.windows(2).try_fold(0.0, |acc, w| {
        let (dt, dx) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        Ok(acc + dx * curve.j(dt / dx)?)
    })
}

/// `lambda 2 pi^2 + (1 - lambda) v J((1 - lambda)/v) - v J(1/v)`.
pub fn detour_margin(curve: &RateCurve, v: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        bail!(Domain, "detour fraction must lie in (0, 1], got {lambda}");
    }
    let direct = curve.speed_rate(v)?;
    let detour = lambda * RETURN_COST + (1.0 - lambda) * v * curve.j((1.0 - lambda) / v)?;
    Ok(detour - direct)
}

/// `v J(1/v) < lambda 2 pi^2 + (1 - lambda) v J((1 - lambda)/v)`.
pub fn detour_check(v: f64, lambda: f64, table: &RateTable) -> Result<bool> {
    Ok(detour_margin(&RateCurve::new(table)?, v, lambda)? > 0.0)
}

/// Outcome of `detour_check` over a scan of `lambda` values at one speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetourVerdict {
    pub v: f64,
    /// True when the inequality held at every evaluated `lambda`.
    pub holds: bool,
    pub evaluated: usize,
    /// `lambda` values skipped because `(1 - lambda)/v` left the table.
    pub skipped: usize,
    pub worst_lambda: f64,
    pub worst_margin: f64,
}

/// Evaluates the detour inequality at every in-range `lambda`.
pub fn detour_scan(curve: &RateCurve, v: f64, lambdas: &[f64]) -> Result<DetourVerdict> {
    let (a_lo, a_hi) = curve.alpha_range();
    let mut out = DetourVerdict {
        v,
        holds: true,
        evaluated: 0,
        skipped: 0,
        worst_lambda: f64::NAN,
        worst_margin: f64::INFINITY,
    };
    for &lambda in lambdas {
        let a = (1.0 - lambda) / v;
        if a < a_lo || a > a_hi {
            out.skipped += 1;
            continue;
        }
        let m = detour_margin(curve, v, lambda)?;
        out.evaluated += 1;
        if m < out.worst_margin {
            out.worst_margin = m;
            out.worst_lambda = lambda;
        }
        out.holds &= m > 0.0;
    }
    if out.evaluated == 0 {
        bail!(Range, "no detour fraction is evaluable at v = {v}");
    }
    Ok(out)
}

/// Smallest scanned speed from which the inequality holds at every larger scanned speed,
/// or `None` when it fails at the fastest one.
pub fn critical_speed(verdicts: &[DetourVerdict]) -> Option<f64> {
    let last_fail = verdicts.iter().rposition(|d| !d.holds);
    match last_fail {
        None => verdicts.first().map(|d| d.v),
        Some(i) if i + 1 < verdicts.len() => Some(0.5 * (verdicts[i].v + verdicts[i + 1].v)),
        Some(_) => None,
    }
}

/// The speed constants of the rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedConstants {
    pub j0: f64,
    pub gamma_star: f64,
    pub gamma_bullet: f64,
    /// `Gamma_bullet = gamma_bullet J(1/gamma_bullet)`.
    pub gamma_bullet_cost: f64,
    pub gamma_circ: f64,
}

impl SpeedConstants {
    pub fn from_table(table: &RateTable) -> Result<Self> {
        let (gamma_bullet, gamma_bullet_cost) = gamma_bullet(table)?;
        Ok(Self {
            j0: find_bessel_root(),
            gamma_star: gamma_star(table)?,
            gamma_bullet,
            gamma_bullet_cost,
            gamma_circ: gamma_circ(table)?,
        })
    }
}
