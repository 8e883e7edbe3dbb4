//! The constrained Euler-Lagrange eigenproblems
//! `x g'' + g' - (lambda + nu x) g = 0`, `g` regular at 0, `g(1) = 0`,
//! solved by shooting from a Frobenius seed, and the rate curve `J(alpha)`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Error, Result};
use crate::measures::{self, DensityGrid, GRID_POINTS};
use crate::ode::{Dopri5, State};
use crate::specfun::{brent, integrate, log_slope_fit, SampledFunction};

/// Supported band for the mean constraint.
pub const ALPHA_MIN: f64 = 0.02;
pub const ALPHA_MAX: f64 = 0.92;

/// Regular solution of `x g'' + g' - (lambda + nu x) g = 0` with `g(0) = 1`, at `x0`.
///
/// Returns `(g(x0), g'(x0))` from `(k+1)^2 a_{k+1} = lambda a_k + nu a_{k-1}`.
pub fn series_start(lambda: f64, nu: f64, x0: f64) -> Result<(f64, f64)> {
    if !(x0 > 0.0 && x0 <= 1e-3) {
        bail!(Domain, "series seed point must lie in (0, 1e-3], got {x0}");
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    let (mut g, mut dg) = (1.0, 0.0);
    let mut xk = 1.0;
    let mut small_run = 0;
    for k in 0..400usize {
        let next = (lambda * cur + nu * prev) / ((k + 1) * (k + 1)) as f64;
        prev = cur;
        cur = next;
        let kk = (k + 1) as f64;
        dg += kk * cur * xk;
        xk *= x0;
        let term = cur * xk;
        g += term;
        small_run = if term.abs() < 1e-16 * g.abs() {
            small_run + 1
        } else {
            0
        };
        if small_run >= 2 {
            break;
        }
    }
    Ok((g, dg))
}

/// Minimizer of `I2` under the constraints, with its multipliers.
///
/// For the de2 problem `lambda` and `nu` multiply `int g^2 = 1` and
/// `int x g^2 = alpha`, and `rate = -2 (lambda + nu alpha)`. For the
/// unconstrained-mean problem `lambda` is the eigenvalue of
/// `2x g'' + 2g' = lambda g` and `rate = -lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSolution {
    pub alpha: f64,
    pub lambda: f64,
    pub nu: f64,
    pub g: DensityGrid,
    /// Samples of `g'` taken from the ODE state, on the grid of `g`.
    pub derivative: SampledFunction,
    pub rate: f64,
    pub boundary_slope: f64,
}

impl VariationalSolution {
    /// `C = g'(1)^2 / 3`, the coefficient of `mu((1-eps,1]) ~ C eps^3`.
    pub fn tail_coefficient(&self) -> f64 {
        tail_coefficient(self)
    }

    pub fn tail_exponent_fit(&self, eps_grid: &[f64]) -> Result<f64> {
        tail_exponent_fit(self, eps_grid)
    }

    /// Max of `|x g'' + g' - (lambda_2 + nu x) g| / max g` over interior nodes,
    /// with `g''` from fourth-order differences of the stored `g'`.
    ///
    /// `lambda_2` is the de2-convention multiplier (`lambda / 2` for de1).
    pub fn eigen_residual(&self, de1: bool) -> f64 {
        let lam = if de1 { self.lambda / 2.0 } else { self.lambda };
        let g = self.g.g().values();
        let dg = self.derivative.values();
        let h = self.derivative.spacing();
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(*v));
        let mut worst = 0.0f64;
        for i in 2..g.len() - 2 {
            let x = self.derivative.x(i);
            let d2 = (-dg[i + 2] + 8.0 * dg[i + 1] - 8.0 * dg[i - 1] + dg[i - 2]) / (12.0 * h);
            worst = worst.max((x * d2 + dg[i] - (lam + self.nu * x) * g[i]).abs());
        }
        worst / gmax
    }
}

/// Shooting solver configuration.
#[derive(Debug, Clone, Copy)]
pub struct Solver {
    pub grid_points: usize,
    pub x0: f64,
    pub ode: Dopri5,
    pub alpha_band: (f64, f64),
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            grid_points: GRID_POINTS,
            x0: 1e-4,
            ode: Dopri5::default(),
            alpha_band: (ALPHA_MIN, ALPHA_MAX),
        }
    }
}

fn rhs(lambda: f64, nu: f64) -> impl Fn(f64, &State) -> State {
    move |x, y| [y[1], ((lambda + nu * x) * y[0] - y[1]) / x]
}

struct Profile {
    lambda: f64,
    nu: f64,
    g: Vec<f64>,
    dg: Vec<f64>,
    mean: f64,
}

impl Solver {
    pub fn with_grid(grid_points: usize) -> Self {
        Self {
            grid_points,
            ..Self::default()
        }
    }

    fn spacing(&self) -> f64 {
        1.0 / (self.grid_points - 1) as f64
    }

    /// Outward shot to `x = 1`: number of sign changes of `g` (capped at 2) and `g(1)`.
    fn shoot(&self, lambda: f64, nu: f64) -> Result<(usize, f64)> {
        let y0 = series_start(lambda, nu, self.x0)?;
        let mut nodes = 0usize;
        let mut positive = y0.0 > 0.0;
        let mut h = self.x0;
        let (_, y) = self.ode.advance(
            rhs(lambda, nu),
            self.x0,
            1.0,
            [y0.0, y0.1],
            &mut h,
            |_, y| {
                if (y[0] > 0.0) != positive {
                    positive = !positive;
                    nodes += 1;
                }
                nodes < 2
            },
        )?;
        Ok((nodes, if nodes < 2 { y[0] } else { f64::NAN }))
    }

    /// The largest `lambda` at which the regular solution vanishes at 1, i.e. the
    /// principal (node-free) eigenvalue for fixed `nu`.
    pub fn principal_lambda(&self, nu: f64, hint: Option<f64>) -> Result<f64> {
        let nodes = |l: f64| self.shoot(l, nu).map(|s| s.0);
        let (mut lo, mut hi);
        match hint {
            Some(guess) => {
                let delta = 1e-3 * guess.abs().max(1.0);
                let mut d = delta;
                hi = guess + delta;
                lo = f64::NAN;
                let mut guard = 0;
                while nodes(hi)? > 0 {
                    lo = hi;
                    hi += d;
                    d *= 2.0;
                    guard += 1;
                    if guard > 80 {
                        bail!(Solver, "no node-free lambda above {guess} at nu = {nu}");
                    }
                }
                if lo.is_nan() {
                    lo = guess - delta;
                    d = delta;
                    while nodes(lo)? == 0 {
                        hi = lo;
                        lo -= d;
                        d *= 2.0;
                        guard += 1;
                        if guard > 80 {
                            bail!(Solver, "no nodal lambda below {guess} at nu = {nu}");
                        }
                    }
                }
            }
            None => {
                hi = (-nu).max(0.0) + 1.0;
                let mut d = 1.0;
                lo = hi - d;
                let mut guard = 0;
                while nodes(lo)? == 0 {
                    hi = lo;
                    d *= 2.0;
                    lo = hi - d;
                    guard += 1;
                    if guard > 80 {
                        bail!(Solver, "no nodal lambda found at nu = {nu}");
                    }
                }
            }
        }
        let mut lo_nodes = nodes(lo)?;
        let mut guard = 0;
        while lo_nodes != 1 {
            let mid = 0.5 * (lo + hi);
            let k = nodes(mid)?;
            if k == 0 {
                hi = mid;
            } else {
                lo = mid;
                lo_nodes = k;
            }
            guard += 1;
            if guard > 200 {
                bail!(
                    Solver,
                    "could not isolate the principal branch at nu = {nu}"
                );
            }
        }
        let f_lo = self.shoot(lo, nu)?.1;
        let f_hi = self.shoot(hi, nu)?.1;
        let tol = 4e-16 * lo.abs().max(hi.abs()) + 1e-15;
        brent(
            |l| {
                let (k, g1) = self.shoot(l, nu)?;
                if k > 1 {
                    bail!(
                        Solver,
                        "second node inside principal bracket at lambda = {l}"
                    );
                }
                Ok(g1)
            },
            lo,
            hi,
            f_lo,
            f_hi,
            tol,
            200,
        )
    }

    /// Regular solution on the grid, normalized, with `g(1) = 0`. For a turning
    /// point inside `(0,1)` the tail is shot inward from `x = 1` and matched.
    fn profile(&self, lambda: f64, nu: f64) -> Result<Profile> {
        let n = self.grid_points;
        let h = self.spacing();
        let xs = |i: usize| if i == n - 1 { 1.0 } else { i as f64 * h };
        let mut g = alloc::vec![0.0; n];
        let mut dg = alloc::vec![0.0; n];
        g[0] = 1.0;
        dg[0] = lambda;
        let turning = if nu > 0.0 {
            -lambda / nu
        } else {
            f64::INFINITY
        };
        let m = if turning > 0.0 && turning < 1.0 {
            ((turning / h).round() as usize).clamp(20, n - 2)
        } else {
            n - 1
        };
        let f = rhs(lambda, nu);
        let mut first = 1;
        while first < n && xs(first) <= self.x0 {
            let (a, b) = series_start(lambda, nu, xs(first).max(1e-300))?;
            g[first] = a;
            dg[first] = b;
            first += 1;
        }
        let s = series_start(lambda, nu, self.x0)?;
        let mut y = [s.0, s.1];
        let mut x = self.x0;
        let mut step = self.x0;
        for i in first..=m {
            y = self.ode.advance(&f, x, xs(i), y, &mut step, |_, _| true)?.1;
            x = xs(i);
            g[i] = y[0];
            dg[i] = y[1];
        }
        if m < n - 1 {
            let mut y = [0.0, -1.0];
            let mut x = 1.0;
            let mut step = h;
            let gl = g[m];
            for i in (m..n - 1).rev() {
                y = self.ode.advance(&f, x, xs(i), y, &mut step, |_, _| true)?.1;
                x = xs(i);
                g[i] = y[0];
                dg[i] = y[1];
            }
            if !(g[m] > 0.0 && gl > 0.0) {
                bail!(
                    Solver,
                    "matching failed at x = {}: outward {gl}, inward {}",
                    xs(m),
                    g[m]
                );
            }
            let scale = gl / g[m];
            for i in m..n {
                g[i] *= scale;
                dg[i] *= scale;
            }
            g[m] = gl;
            g[n - 1] = 0.0;
            dg[n - 1] = -scale;
        } else {
            let gmax = g.iter().fold(0.0f64, |a, v| a.max(*v));
            if g[n - 1].abs() > 1e-6 * gmax {
                bail!(
                    Solver,
                    "shot misses g(1) = 0: g(1) = {} (max {gmax})",
                    g[n - 1]
                );
            }
            g[n - 1] = 0.0;
        }
        if let Some(i) = g[..n - 1].iter().position(|v| !(*v > 0.0)) {
            bail!(
                Solver,
                "positivity violated at x = {} (lambda {lambda}, nu {nu})",
                xs(i)
            );
        }
        let grid = SampledFunction::new(g.clone(), 0.0, h)?;
        let norm = integrate(&grid.map(|_, v| v * v))?.sqrt();
        for v in g.iter_mut().chain(dg.iter_mut()) {
            *v /= norm;
        }
        let mean = integrate(
            &grid.with_values(g.iter().enumerate().map(|(i, v)| xs(i) * v * v).collect())?,
        )?;
        Ok(Profile {
            lambda,
            nu,
            g,
            dg,
            mean,
        })
    }

    fn finish(&self, alpha: f64, lambda: f64, p: Profile) -> Result<VariationalSolution> {
        let h = self.spacing();
        let gsf = SampledFunction::new(p.g, 0.0, h)?;
        let dsf = SampledFunction::new(p.dg, 0.0, h)?;
        let rate = integrate(&dsf.map(|x, d| 2.0 * x * d * d))?;
        let boundary_slope = dsf.last();
        Ok(VariationalSolution {
            alpha,
            lambda,
            nu: p.nu,
            g: DensityGrid::new(gsf, true)?,
            derivative: dsf,
            rate,
            boundary_slope,
        })
    }

    fn at_nu(&self, nu: f64, hint: Option<f64>) -> Result<Profile> {
        let lambda = self.principal_lambda(nu, hint)?;
        self.profile(lambda, nu)
    }

    /// Principal solution at fixed `nu`; `alpha` is whatever mean it has.
    pub fn solve_at_nu(&self, nu: f64) -> Result<VariationalSolution> {
        let p = self.at_nu(nu, None)?;
        let lambda = p.lambda;
        self.finish(p.mean, lambda, p)
    }

    /// Minimizer of `int 2x g'^2` over normalized `g` with `g(1) = 0`
    /// (eigenproblem `2x g'' + 2g' = lambda g`), by bisection on the sign of `g(1)`.
    pub fn solve_de1(&self) -> Result<VariationalSolution> {
        let g1 = |l: f64| -> Result<f64> {
            let (k, v) = self.shoot(l / 2.0, 0.0)?;
            Ok(if k > 1 { f64::NAN } else { v })
        };
        let (mut lo, mut hi) = (-10.0, -1.0);
        let (flo, fhi) = (g1(lo)?, g1(hi)?);
        if !(flo < 0.0 && fhi > 0.0) {
            bail!(
                Solver,
                "de1 bracket [-10, -1] lost its sign change: {flo}, {fhi}"
            );
        }
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi.abs() {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if g1(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let p = self.profile(lambda / 2.0, 0.0)?;
        let alpha = p.mean;
        self.finish(alpha, lambda, p)
    }

    /// Minimizer of `int 2x g'^2` with `int g^2 = 1`, `int x g^2 = alpha`, `g(1) = 0`.
    pub fn solve_de2(&self, alpha: f64) -> Result<VariationalSolution> {
        self.solve_de2_from(alpha, None)
    }

    /// As `solve_de2`, warm-started from a nearby `(lambda, nu)`.
    pub fn solve_de2_from(
        &self,
        alpha: f64,
        hint: Option<(f64, f64)>,
    ) -> Result<VariationalSolution> {
        let (a_lo, a_hi) = self.alpha_band;
        if !(alpha >= a_lo - 1e-12 && alpha <= a_hi + 1e-12) {
            bail!(
                Domain,
                "alpha = {alpha} outside the supported band [{a_lo}, {a_hi}]"
            );
        }
        let wrap = |e: Error| match e {
            Error::Solver(m) => Error::Solver(format!("alpha = {alpha}: {m}")),
            other => other,
        };
        self.solve_de2_inner(alpha, hint).map_err(wrap)
    }

    fn solve_de2_inner(&self, alpha: f64, hint: Option<(f64, f64)>) -> Result<VariationalSolution> {
        let (nu0, lambda0) = match hint {
            Some((l, n)) => (n, Some(l)),
            None => (0.0, None),
        };
        let mut near = self.at_nu(nu0, lambda0)?;
        let mut f_near = near.mean - alpha;
        if f_near == 0.0 {
            return self.finish(alpha, near.lambda, near);
        }
        let mut step = match hint {
            Some(_) => 1.0f64.max(0.02 * nu0.abs()),
            None => 10.0,
        };
        // mean decreases in nu: move nu up while the mean is too large
        let dir = f_near.signum();
        let mut guard = 0;
        let (far, f_far) = loop {
            let nu = near.nu + dir * step;
            let p = self.at_nu(nu, Some(near.lambda - near.mean * (nu - near.nu)))?;
            let f = p.mean - alpha;
            if (f - f_near) * dir > 0.0 {
                bail!(Solver, "mean is not monotone in nu near nu = {nu}");
            }
            if f == 0.0 || f.signum() != f_near.signum() {
                break (p, f);
            }
            near = p;
            f_near = f;
            step *= 2.0;
            guard += 1;
            if guard > 60 {
                bail!(Solver, "could not bracket the mean constraint");
            }
        };
        if f_far == 0.0 {
            return self.finish(alpha, far.lambda, far);
        }
        let slope = near.mean;
        let mut last = (far.nu, far.lambda);
        let mut found: Option<Profile> = None;
        let tol = 1e-13 * near.nu.abs().max(far.nu.abs()).max(1.0);
        let nu = brent(
            |nu| {
                let p = self.at_nu(nu, Some(last.1 - (nu - last.0) * slope))?;
                last = (nu, p.lambda);
                let f = p.mean - alpha;
                found = Some(p);
                Ok(f)
            },
            near.nu,
            far.nu,
            f_near,
            f_far,
            tol,
            200,
        )?;
        let p = match found {
            Some(p) if p.nu == nu => p,
            _ => self.at_nu(nu, Some(last.1))?,
        };
        if (p.mean - alpha).abs() > 1e-9 {
            bail!(
                Solver,
                "mean constraint residual {} at nu = {nu}",
                p.mean - alpha
            );
        }
        self.finish(alpha, p.lambda, p)
    }

    /// Rows `(alpha, J(alpha), C_alpha)` by warm-started continuation along `alphas`.
    pub fn tabulate_j(&self, alphas: &[f64]) -> Result<RateTable> {
        let mut rows = Vec::with_capacity(alphas.len());
        let mut prev: Vec<(f64, f64, f64)> = Vec::new();
        for &alpha in alphas {
            let hint = match prev.as_slice() {
                [.., (a1, l1, n1), (a2, l2, n2)] => {
                    let t = (alpha - a2) / (a2 - a1);
                    Some((l2 + t * (l2 - l1), n2 + t * (n2 - n1)))
                }
                [(_, l, n)] => Some((*l, *n)),
                [] => None,
            };
            let sol = match hint {
                Some(h) => self
                    .solve_de2_from(alpha, Some(h))
                    .or_else(|_| self.solve_de2(alpha)),
                None => self.solve_de2(alpha),
            }?;
            prev.push((alpha, sol.lambda, sol.nu));
            rows.push(RateRow {
                alpha,
                j: sol.rate,
                c: sol.tail_coefficient(),
            });
        }
        RateTable::new(rows)
    }
}

pub fn solve_de1() -> Result<VariationalSolution> {
    Solver::default().solve_de1()
}

pub fn solve_de2(alpha: f64) -> Result<VariationalSolution> {
    Solver::default().solve_de2(alpha)
}

pub fn tabulate_j(alphas: &[f64]) -> Result<RateTable> {
    Solver::default().tabulate_j(alphas)
}

/// `C = g'(1)^2 / 3`.
pub fn tail_coefficient(sol: &VariationalSolution) -> f64 {
    sol.boundary_slope * sol.boundary_slope / 3.0
}

/// Log-log slope of `mu((1-eps,1])` against `eps` for a density.
pub fn tail_exponent_fit_density(mu: &DensityGrid, eps_grid: &[f64]) -> Result<f64> {
    if eps_grid.len() < 5 {
        bail!(
            Domain,
            "tail exponent fit needs at least 5 eps values, got {}",
            eps_grid.len()
        );
    }
    let masses = eps_grid
        .iter()
        .map(|&e| measures::tail_mass(mu, e))
        .collect::<Result<Vec<_>>>()?;
    if let Some((e, _)) = eps_grid.iter().zip(&masses).find(|(_, m)| !(**m > 0.0)) {
        bail!(Domain, "zero tail mass at eps = {e}: support ends before 1");
    }
    Ok(log_slope_fit(eps_grid, &masses)?.0)
}

/// Log-log slope of the tail mass of the solution's density.
pub fn tail_exponent_fit(sol: &VariationalSolution, eps_grid: &[f64]) -> Result<f64> {
    tail_exponent_fit_density(&sol.g, eps_grid)
}

/// One row of the rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub alpha: f64,
    pub j: f64,
    pub c: f64,
}

/// Rows of `(alpha, J, C)` with strictly increasing `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    rows: Vec<RateRow>,
}

impl RateTable {
    pub fn new(rows: Vec<RateRow>) -> Result<Self> {
        if rows.len() < 3 {
            bail!(
                Domain,
                "rate table needs at least 3 rows, got {}",
                rows.len()
            );
        }
        if rows.windows(2).any(|w| !(w[1].alpha > w[0].alpha)) {
            bail!(Domain, "rate table alphas must be strictly increasing");
        }
        if let Some(r) = rows
            .iter()
            .find(|r| !(r.alpha > 0.0 && r.alpha < 1.0 && r.j > 0.0 && r.c > 0.0))
        {
            bail!(Domain, "invalid rate row ({}, {}, {})", r.alpha, r.j, r.c);
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[RateRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Every other row starting from the first.
    pub fn subsample(&self, every: usize) -> Result<Self> {
        Self::new(self.rows.iter().step_by(every.max(1)).copied().collect())
    }

    /// Divided second differences of `J` in `alpha`.
    pub fn second_differences(&self) -> Vec<f64> {
        self.rows
            .windows(3)
            .map(|w| {
                let d1 = (w[1].j - w[0].j) / (w[1].alpha - w[0].alpha);
                let d2 = (w[2].j - w[1].j) / (w[2].alpha - w[1].alpha);
                (d2 - d1) / ((w[2].alpha - w[0].alpha) / 2.0)
            })
            .collect()
    }
}
