//! Special functions and numeric primitives: Bessel `J0`/`J1`, the root `j0`,
//! uniform-grid quadrature, interpolation, root bracketing and slope fits.

mod bessel;
mod interp;
mod roots;

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Result};

pub use bessel::{bessel_j0, bessel_j1, find_bessel_root};
pub use interp::MonotoneCubic;
pub use roots::{bisect, brent};

/// Tolerance on `origin + (n-1) * spacing` hitting the intended right endpoint.
const GRID_TOL: f64 = 1e-12;

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Samples of a function on a uniform grid `origin + i * spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    values: Vec<f64>,
    origin: f64,
    spacing: f64,
}

impl SampledFunction {
    pub fn new(values: Vec<f64>, origin: f64, spacing: f64) -> Result<Self> {
        if values.is_empty() {
            bail!(Domain, "sampled function needs at least one value");
        }
        if !(spacing > 0.0) || !spacing.is_finite() || !origin.is_finite() {
            bail!(Domain, "invalid grid: origin {origin}, spacing {spacing}");
        }
        Ok(Self {
            values,
            origin,
            spacing,
        })
    }

    /// Samples `f` at `n` equispaced points covering `[a, b]` exactly.
    pub fn from_fn(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        if n < 2 || !(b > a) {
            bail!(Domain, "need n >= 2 and a < b, got n = {n} on [{a}, {b}]");
        }
        let h = (b - a) / (n - 1) as f64;
        let values = (0..n)
            .map(|i| f(if i == n - 1 { b } else { a + i as f64 * h }))
            .collect();
        let out = Self::new(values, a, h)?;
        if (out.right() - b).abs() > GRID_TOL * b.abs().max(1.0) {
            bail!(Domain, "grid misses right endpoint {b}");
        }
        Ok(out)
    }

    /// A new function on the same grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            bail!(
                Domain,
                "length {} does not match grid length {}",
                values.len(),
                self.values.len()
            );
        }
        Self::new(values, self.origin, self.spacing)
    }

    pub fn map(&self, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.x(i), v))
            .collect();
        Self {
            values,
            origin: self.origin,
            spacing: self.spacing,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn right(&self) -> f64 {
        self.origin + (self.len() - 1) as f64 * self.spacing
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.len() - 1]
    }

    /// Index of the first node of the four-point stencil used on cell `cell`.
    fn stencil(&self, cell: usize) -> usize {
        let n = self.len();
        cell.saturating_sub(1).min(n.saturating_sub(4))
    }

    fn cell_of(&self, x: f64) -> usize {
        let t = ((x - self.origin) / self.spacing).floor();
        (t.max(0.0) as usize).min(self.len().saturating_sub(2))
    }

    fn eval_on_cell(&self, cell: usize, x: f64) -> f64 {
        let n = self.len();
        if n == 1 {
            return self.values[0];
        }
        if n < 4 {
            let t = (x - self.x(cell)) / self.spacing;
            return self.values[cell] * (1.0 - t) + self.values[cell + 1] * t;
        }
        let s = self.stencil(cell);
        let t = (x - self.x(s)) / self.spacing;
        let v = &self.values[s..s + 4];
        let (t0, t1, t2, t3) = (t, t - 1.0, t - 2.0, t - 3.0);
        -v[0] * t1 * t2 * t3 / 6.0 + v[1] * t0 * t2 * t3 / 2.0 - v[2] * t0 * t1 * t3 / 2.0
            + v[3] * t0 * t1 * t2 / 6.0
    }

    /// Local cubic Lagrange interpolation; out-of-grid arguments are a domain error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let tol = 1e-12 * self.spacing;
        if !(x >= self.origin - tol && x <= self.right() + tol) {
            bail!(
                Domain,
                "{x} outside grid [{}, {}]",
                self.origin,
                self.right()
            );
        }
        Ok(self.eval_on_cell(self.cell_of(x), x))
    }

    /// Integral of the piecewise-cubic interpolant over `[a, b]` (3-point Gauss per cell).
    pub fn integral_over(&self, a: f64, b: f64) -> Result<f64> {
        let tol = 1e-12 * self.spacing;
        if !(a <= b) || a < self.origin - tol || b > self.right() + tol {
            bail!(
                Domain,
                "[{a}, {b}] not inside grid [{}, {}]",
                self.origin,
                self.right()
            );
        }
        if self.len() < 2 || a == b {
            return Ok(0.0);
        }
        let (first, last) = (self.cell_of(a), self.cell_of(b));
        let mut total = 0.0;
        for cell in first..=last {
            let lo = a.max(self.x(cell));
            let hi = b.min(self.x(cell + 1));
            if hi <= lo {
                continue;
            }
            let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
            total += GAUSS3
                .iter()
                .map(|&(u, w)| w * self.eval_on_cell(cell, mid + half * u))
                .sum::<f64>()
                * half;
        }
        Ok(total)
    }
}

/// Composite Simpson for an odd number of samples, trapezoid otherwise.
///
/// The trapezoid fallback carries an `O(spacing^2)` error.
pub fn integrate(f: &SampledFunction) -> Result<f64> {
    let v = f.values();
    let n = v.len();
    if n < 2 {
        bail!(Domain, "integration needs at least 2 samples, got {n}");
    }
    let h = f.spacing();
    if n.is_multiple_of(2) {
        let inner: f64 = v[1..n - 1].iter().sum();
        return Ok(h * (inner + (v[0] + v[n - 1]) / 2.0));
    }
    let (mut odd, mut even) = (0.0, 0.0);
    for (i, &y) in v.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += y;
        } else {
            even += y;
        }
    }
    Ok(h / 3.0 * (v[0] + v[n - 1] + 4.0 * odd + 2.0 * even))
}

/// Ordinary least-squares line `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        bail!(
            Domain,
            "fit needs equal lengths >= 2, got {} and {}",
            xs.len(),
            ys.len()
        );
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if !(sxx > 0.0) {
        bail!(Domain, "abscissae are all equal");
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Least-squares line through `(ln x, ln y)`.
pub fn log_slope_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        bail!(
            Domain,
            "log-slope fit needs equal lengths >= 3, got {} and {}",
            xs.len(),
            ys.len()
        );
    }
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        bail!(
            Domain,
            "log-slope fit needs positive finite entries, found {bad}"
        );
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// `Z = int_0^1 sin^2(pi x)/x dx`, integrated on `[1e-6, 1]` plus the small-x correction.
pub fn sin2_over_x_constant(n: usize) -> Result<f64> {
    use core::f64::consts::PI;
    let x0 = 1e-6;
    let f = SampledFunction::from_fn(x0, 1.0, n, |x| {
        let s = (PI * x).sin();
        s * s / x
    })?;
    Ok(integrate(&f)? + PI * PI * x0 * x0 / 2.0)
}
