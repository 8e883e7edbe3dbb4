//! Adaptive Dormand-Prince 5(4) integration of planar first-order systems.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Result};

pub type State = [f64; 2];

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo(y: &State, h: f64, ks: &[State], coef: &[f64]) -> State {
    let mut out = *y;
    for (k, &a) in ks.iter().zip(coef) {
        out[0] += h * a * k[0];
        out[1] += h * a * k[1];
    }
    out
}

/// Step-size controlled Runge-Kutta integrator.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl Dopri5 {
    /// Integrates from `(x, y)` to `x_end` (either direction).
    ///
    /// `h` carries the step-size suggestion in and out. `observe` sees every
    /// accepted step and may stop the integration early by returning `false`;
    /// the returned abscissa tells where integration actually ended.
    pub fn advance(
        &self,
        rhs: impl Fn(f64, &State) -> State,
        mut x: f64,
        x_end: f64,
        mut y: State,
        h: &mut f64,
        mut observe: impl FnMut(f64, &State) -> bool,
    ) -> Result<(f64, State)> {
        let span = x_end - x;
        if span == 0.0 {
            return Ok((x, y));
        }
        let dir = span.signum();
        let mut step = h.abs().min(span.abs()).max(1e-14 * span.abs());
        let mut k1 = rhs(x, &y);
        for _ in 0..self.max_steps {
            let remaining = (x_end - x) * dir;
            if remaining <= 1e-15 * x_end.abs().max(1.0) {
                return Ok((x, y));
            }
            let last = step >= remaining;
            let hs = if last { remaining } else { step } * dir;
            let k2 = rhs(x + C[0] * hs, &combo(&y, hs, &[k1], &A2));
            let k3 = rhs(x + C[1] * hs, &combo(&y, hs, &[k1, k2], &A3));
            let k4 = rhs(x + C[2] * hs, &combo(&y, hs, &[k1, k2, k3], &A4));
            let k5 = rhs(x + C[3] * hs, &combo(&y, hs, &[k1, k2, k3, k4], &A5));
            let k6 = rhs(x + C[4] * hs, &combo(&y, hs, &[k1, k2, k3, k4, k5], &A6));
            let y_new = combo(&y, hs, &[k1, k2, k3, k4, k5, k6], &B);
            let x_new = if last { x_end } else { x + hs };
            let k7 = rhs(x_new, &y_new);
            let ks = [k1, k2, k3, k4, k5, k6, k7];
            let mut err = 0.0;
            for i in 0..2 {
                let e: f64 = ks.iter().zip(&E).map(|(k, &c)| c * k[i]).sum::<f64>() * hs;
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / scale) * (e / scale);
            }
            let err = (err / 2.0).sqrt();
            if !err.is_finite() {
                step *= 0.1;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                x = x_new;
                y = y_new;
                k1 = k7;
                if !last {
                    *h = step;
                }
                if !observe(x, &y) {
                    return Ok((x, y));
                }
                step *= factor;
            } else {
                step *= factor.min(1.0);
            }
            if step < 1e-15 * x.abs().max(1.0) {
                bail!(Solver, "step size underflow at x = {x}");
            }
        }
        bail!(
            Solver,
            "step limit {} exceeded before x = {x_end}",
            self.max_steps
        )
    }
}
