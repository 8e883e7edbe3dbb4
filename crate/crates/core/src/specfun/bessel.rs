use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Result};

const SERIES_LIMIT: f64 = 12.0;

/// Power series `sum (-1)^k (x/2)^(2k+n) / (k! (k+n)!)` for `n` in {0, 1}.
fn series(x: f64, n: u32) -> f64 {
    let q = -x * x / 4.0;
    let mut term = if n == 0 { 1.0 } else { x / 2.0 };
    let mut sum = term;
    for k in 1..300u32 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-16 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion, truncated at the smallest term.
fn asymptotic(x: f64, n: u32) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= last || next == 0.0 {
            break;
        }
        last = next.abs();
        term = next;
        // terms alternate between Q (odd k) and P (even k), each with sign (-1)^(k/2)
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (n as f64 / 2.0 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn check(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        bail!(
            Domain,
            "Bessel argument must be finite and non-negative, got {x}"
        );
    }
    Ok(())
}

/// Bessel function of the first kind of order 0.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check(x)?;
    Ok(if x <= SERIES_LIMIT {
        series(x, 0)
    } else {
        asymptotic(x, 0)
    })
}

/// Bessel function of the first kind of order 1.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check(x)?;
    Ok(if x <= SERIES_LIMIT {
        series(x, 1)
    } else {
        asymptotic(x, 1)
    })
}

/// First positive zero `j0` of `J0`: bisection on `[2, 3]`, then Newton with `J0' = -J1`.
pub fn find_bessel_root() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if series(mid, 0) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let step = series(x, 0) / series(x, 1);
        x += step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_asymptotic_agree_near_switch() {
        for &x in &[11.0, 12.0, 13.0] {
            assert!((series(x, 0) - asymptotic(x, 0)).abs() < 1e-11, "J0 at {x}");
            assert!((series(x, 1) - asymptotic(x, 1)).abs() < 1e-11, "J1 at {x}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_j0(f64::NAN).is_err());
        assert!(bessel_j1(-1.0).is_err());
        assert!(bessel_j0(f64::INFINITY).is_err());
    }
}
