//! Probability densities on `[0,1]` carried by `g = sqrt(dmu/dx)`, the extremal
//! densities, the rate functionals `I2` and `I0`, and the tilting bijection.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Result};
use crate::specfun::{
    bessel_j0, bessel_j1, find_bessel_root, integrate, sin2_over_x_constant, SampledFunction,
};

/// Default number of grid points on `[0,1]`.
pub const GRID_POINTS: usize = 2001;
/// `|g(1)|` (or `|h|` at the ends for `I0`) above this means infinite rate.
pub const BOUNDARY_TOL: f64 = 1e-6;
/// Tolerance on `int g^2 = 1` for a grid flagged as normalized.
pub const NORM_TOL: f64 = 1e-8;

/// A probability density on `[0,1]` stored through its square root.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    g: SampledFunction,
    normalized: bool,
}

/// Mean and tail masses of a density.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureStats {
    pub mean: f64,
    /// `(eps, mu((1-eps, 1]))` sorted by `eps`.
    pub tail_mass: Vec<(f64, f64)>,
}

impl DensityGrid {
    /// Wraps a sampled `g` on `[0,1]`. A `normalized` claim is verified.
    pub fn new(g: SampledFunction, normalized: bool) -> Result<Self> {
        if g.origin().abs() > 1e-12 || (g.right() - 1.0).abs() > 1e-12 || g.len() < 3 {
            bail!(
                Domain,
                "density grid must cover [0,1] with at least 3 points"
            );
        }
        let scale = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(v) = g
            .values()
            .iter()
            .find(|v| !v.is_finite() || **v < -1e-12 * scale.max(1.0))
        {
            bail!(Domain, "g must be finite and non-negative, found {v}");
        }
        let g = g.map(|_, v| v.max(0.0));
        let out = Self {
            g,
            normalized: false,
        };
        if normalized {
            let mass = out.mass()?;
            if (mass - 1.0).abs() > NORM_TOL {
                bail!(Contract, "grid claimed normalized but int g^2 = {mass}");
            }
        }
        Ok(Self { normalized, ..out })
    }

    /// Samples `g` on the default grid and normalizes it.
    pub fn from_g_fn(f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::from_g_fn_on(GRID_POINTS, f)
    }

    pub fn from_g_fn_on(n: usize, f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(SampledFunction::from_fn(0.0, 1.0, n, f)?, false)?.normalize()
    }

    /// Builds from samples of the density itself and normalizes.
    pub fn from_density(density: &SampledFunction) -> Result<Self> {
        if let Some(v) = density.values().iter().find(|v| !(**v >= 0.0)) {
            bail!(Domain, "density must be non-negative, found {v}");
        }
        Self::new(density.map(|_, p| p.sqrt()), false)?.normalize()
    }

    pub fn g(&self) -> &SampledFunction {
        &self.g
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Samples of `g^2`.
    pub fn density(&self) -> SampledFunction {
        self.g.map(|_, v| v * v)
    }

    /// `int g^2`.
    pub fn mass(&self) -> Result<f64> {
        integrate(&self.density())
    }

    pub fn normalize(&self) -> Result<Self> {
        let mass = self.mass()?;
        if !(mass > 0.0) || !mass.is_finite() {
            bail!(Domain, "cannot normalize a density of mass {mass}");
        }
        let s = mass.sqrt();
        Ok(Self {
            g: self.g.map(|_, v| v / s),
            normalized: true,
        })
    }

    fn require_normalized(&self, op: &str) -> Result<()> {
        if !self.normalized {
            bail!(Contract, "{op} needs a normalized density");
        }
        Ok(())
    }
}

/// The minimizer of `I2`: `g(x) = J0(j0 sqrt x) / J1(j0)`.
pub fn mu_star() -> DensityGrid {
    mu_star_on(GRID_POINTS)
}

pub fn mu_star_on(n: usize) -> DensityGrid {
    let j0 = find_bessel_root();
    let norm = bessel_j1(j0).expect("finite argument");
    DensityGrid::from_g_fn_on(n, |x| {
        if x >= 1.0 {
            0.0
        } else {
            bessel_j0(j0 * x.sqrt()).expect("finite argument") / norm
        }
    })
    .expect("Bessel profile is a valid density")
}

/// `Z = int_0^1 sin^2(pi x)/x dx`, the normalizer of `mu_circ`.
pub fn z_constant() -> f64 {
    sin2_over_x_constant(200_001).expect("fixed grid is valid")
}

/// The equality case of `I0 >= 2 pi^2 E(mu)`: density `sin^2(pi x) / (Z x)`.
pub fn mu_circ() -> DensityGrid {
    mu_circ_on(GRID_POINTS)
}

pub fn mu_circ_on(n: usize) -> DensityGrid {
    let z = z_constant();
    let density = SampledFunction::from_fn(0.0, 1.0, n, |x| {
        if x == 0.0 || x >= 1.0 {
            0.0
        } else {
            let s = (PI * x).sin();
            s * s / (x * z)
        }
    })
    .expect("fixed grid is valid");
    let g = density.map(|_, p| p.sqrt());
    DensityGrid::new(g, true).expect("sin^2(pi x)/(Z x) integrates to one")
}

/// Piecewise-linear `g` vanishing outside `[center - half_width, center + half_width]`.
pub fn tent(center: f64, half_width: f64) -> Result<DensityGrid> {
    tent_on(GRID_POINTS, center, half_width)
}

pub fn tent_on(n: usize, center: f64, half_width: f64) -> Result<DensityGrid> {
    if !(half_width > 0.0) || center - half_width < -1e-12 || center + half_width > 1.0 + 1e-12 {
        bail!(
            Domain,
            "tent [{}, {}] not inside [0,1]",
            center - half_width,
            center + half_width
        );
    }
    let peak = (3.0 / (2.0 * half_width)).sqrt();
    DensityGrid::from_g_fn_on(n, |x| {
        peak * (1.0 - (x - center).abs() / half_width).max(0.0)
    })
}

/// The tent density with mean `alpha` and half-width `min(alpha, 1 - alpha)`.
pub fn make_tent(alpha: f64) -> Result<DensityGrid> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!(Domain, "tent mean must lie in (0,1), got {alpha}");
    }
    tent(alpha, alpha.min(1.0 - alpha))
}

/// `int x g(x)^2 dx`.
pub fn mean(mu: &DensityGrid) -> Result<f64> {
    mu.require_normalized("mean")?;
    integrate(&mu.density().map(|x, p| x * p))
}

/// `sum over cells of w_cell * (dv)^2 / dx^2` on the nodes `0, stride, 2 stride, ...`.
fn pl_energy(v: &SampledFunction, stride: usize, weight: impl Fn(f64, f64) -> f64) -> f64 {
    let vals = v.values();
    let h = v.spacing() * stride as f64;
    let mut total = 0.0;
    let mut i = 0;
    while i + stride < vals.len() {
        let d = (vals[i + stride] - vals[i]) / h;
        total += d * d * weight(v.x(i), v.x(i + stride));
        i += stride;
    }
    total
}

/// Dirichlet-type energy of the piecewise-linear interpolant, Richardson-extrapolated
/// against the every-other-node grid when the cell count is even.
fn dirichlet_energy(v: &SampledFunction, weight: impl Fn(f64, f64) -> f64 + Copy) -> f64 {
    let fine = pl_energy(v, 1, weight);
    let cells = v.len() - 1;
    if cells >= 4 && cells.is_multiple_of(2) {
        (4.0 * fine - pl_energy(v, 2, weight)) / 3.0
    } else {
        fine
    }
}

/// `I2(mu) = int 2x g'(x)^2 dx`; `f64::INFINITY` when `g(1) != 0`.
pub fn functional_i2(mu: &DensityGrid) -> Result<f64> {
    if mu.g.last().abs() > BOUNDARY_TOL {
        return Ok(f64::INFINITY);
    }
    Ok(dirichlet_energy(&mu.g, |a, b| b * b - a * a))
}

/// `I0(mu) = int 2 (d/dx sqrt(x) g(x))^2 dx`; `f64::INFINITY` on boundary violation.
pub fn functional_i0(mu: &DensityGrid) -> Result<f64> {
    let h = mu.g.map(|x, v| x.sqrt() * v);
    if h.first().abs() > BOUNDARY_TOL || h.last().abs() > BOUNDARY_TOL {
        return Ok(f64::INFINITY);
    }
    Ok(dirichlet_energy(&h, |a, b| 2.0 * (b - a)))
}

/// `int |h'|^2 - pi^2 int |h|^2` for `h` on `[0,1]` vanishing at both ends.
pub fn wirtinger_gap(h: &SampledFunction) -> Result<f64> {
    if h.origin().abs() > 1e-12 || (h.right() - 1.0).abs() > 1e-12 || h.len() < 3 {
        bail!(Domain, "Wirtinger gap needs a grid on [0,1]");
    }
    if h.first().abs() > 1e-8 || h.last().abs() > 1e-8 {
        bail!(
            Domain,
            "h must vanish at 0 and 1, got {} and {}",
            h.first(),
            h.last()
        );
    }
    let grad = dirichlet_energy(h, |a, b| b - a);
    Ok(grad - PI * PI * integrate(&h.map(|_, v| v * v))?)
}

/// `psi(mu)`: density proportional to `(1/x) dmu/dx`.
pub fn tilt(mu: &DensityGrid) -> Result<DensityGrid> {
    let p = mu.density();
    let vals = p.values();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(*v));
    if vals[0] > 1e-12 * scale {
        bail!(Domain, "int x^-1 dmu diverges: density at 0 is {}", vals[0]);
    }
    let mut q: Vec<f64> = vals
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 { 0.0 } else { v / p.x(i) })
        .collect();
    if q.len() >= 4 {
        q[0] = (3.0 * q[1] - 3.0 * q[2] + q[3]).max(0.0);
    }
    let q = p.with_values(q)?;
    if !integrate(&q)?.is_finite() {
        bail!(Domain, "int x^-1 dmu is not finite on the grid");
    }
    DensityGrid::from_density(&q)
}

/// `phi(mu)`: density proportional to `x dmu/dx`, the inverse of `tilt`.
pub fn untilt(mu: &DensityGrid) -> Result<DensityGrid> {
    mu.require_normalized("untilt")?;
    DensityGrid::from_density(&mu.density().map(|x, p| x * p))
}

/// `int_a^1 g^2` for piecewise-linear `g`, exact per (partial) cell.
fn pl_square_integral_from(g: &SampledFunction, a: f64) -> f64 {
    let v = g.values();
    let h = g.spacing();
    let n = v.len();
    let cell = (((a - g.origin()) / h).floor().max(0.0) as usize).min(n - 2);
    // partial cell: g runs linearly from g(a) to v[cell + 1]
    let t = ((a - g.x(cell)) / h).clamp(0.0, 1.0);
    let ga = v[cell] + t * (v[cell + 1] - v[cell]);
    let gb = v[cell + 1];
    let mut total = (1.0 - t) * h * (ga * ga + ga * gb + gb * gb) / 3.0;
    for w in v[cell + 1..].windows(2) {
        total += h * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0;
    }
    total
}

/// `mu((1 - eps, 1])` for the piecewise-linear interpolant of `g`, relative to
/// that interpolant's total mass.
pub fn tail_mass(mu: &DensityGrid, eps: f64) -> Result<f64> {
    mu.require_normalized("tail_mass")?;
    if !(eps > 0.0 && eps <= 1.0) {
        bail!(Domain, "eps must lie in (0,1], got {eps}");
    }
    let total = pl_square_integral_from(&mu.g, 0.0);
    Ok(pl_square_integral_from(&mu.g, 1.0 - eps) / total)
}

/// Mean and tail masses at the given `eps` values.
pub fn stats(mu: &DensityGrid, eps: &[f64]) -> Result<MeasureStats> {
    let mut sorted: Vec<f64> = eps.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail_mass = sorted
        .iter()
        .map(|&e| Ok((e, tail_mass(mu, e)?)))
        .collect::<Result<_>>()?;
    Ok(MeasureStats {
        mean: mean(mu)?,
        tail_mass,
    })
}

/// Mixture `lambda mu1 + (1 - lambda) mu2`, i.e. `g = sqrt(lambda g1^2 + (1 - lambda) g2^2)`.
pub fn mixture(mu1: &DensityGrid, mu2: &DensityGrid, lambda: f64) -> Result<DensityGrid> {
    if !(0.0..=1.0).contains(&lambda) || mu1.g.len() != mu2.g.len() {
        bail!(Domain, "mixture needs lambda in [0,1] and matching grids");
    }
    let g2 = mu2.g.values();
    let g = mu1.g.map(|_, _| 0.0).with_values(
        mu1.g
            .values()
            .iter()
            .zip(g2)
            .map(|(a, b)| (lambda * a * a + (1.0 - lambda) * b * b).sqrt())
            .collect(),
    )?;
    DensityGrid::new(g, mu1.normalized && mu2.normalized)
}
