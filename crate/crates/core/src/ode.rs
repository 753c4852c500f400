//! Adaptive Dormand–Prince 5(4) integration of complex linear systems over
//! a real parameter interval.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_min: f64,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 2_000_000, h_min: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Solution<const N: usize> {
    pub y: [Complex64; N],
    pub steps: usize,
    pub rejected: usize,
    /// Last accepted step, useful as the initial guess for a continuation.
    pub last_h: f64,
}

impl Dopri5 {
    /// Integrates `y′ = f(t, y)` from `t0` to `t1` (`t1 ≥ t0`). The observer,
    /// if any, sees every accepted point including the initial one.
    pub fn integrate<const N: usize, F>(
        &self,
        f: F,
        t0: f64,
        t1: f64,
        y0: [Complex64; N],
        h_init: Option<f64>,
        mut observer: Option<&mut dyn FnMut(f64, &[Complex64; N])>,
    ) -> Result<Solution<N>>
    where
        F: Fn(f64, &[Complex64; N]) -> Result<[Complex64; N]>,
    {
        let span = t1 - t0;
        if let Some(obs) = observer.as_mut() {
            obs(t0, &y0);
        }
        if span == 0.0 {
            return Ok(Solution { y: y0, steps: 0, rejected: 0, last_h: 0.0 });
        }
        let mut t = t0;
        let mut y = y0;
        let mut h = h_init.unwrap_or(span * 1e-3).min(span);
        let mut k1 = f(t, &y)?;
        let mut steps = 0;
        let mut rejected = 0;
        let mut last_h = h;
        let zero = Complex64::new(0.0, 0.0);

        while t < t1 {
            if steps + rejected >= self.max_steps {
                return Err(Error::ToleranceNotMet { tol: self.rtol, steps: steps + rejected });
            }
            let last = t + h >= t1;
            if last {
                h = t1 - t;
            }
            let mut k = [[zero; N]; 7];
            k[0] = k1;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += kj[i] * (h * a);
                        }
                    }
                }
                k[s] = f(t + C[s] * h, &ys)?;
            }
            // Stage 7 is evaluated at the fifth-order solution (FSAL).
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let b = A[6][j];
                if b != 0.0 {
                    for i in 0..N {
                        y_new[i] += kj[i] * (h * b);
                    }
                }
            }
            let mut err: f64 = 0.0;
            for i in 0..N {
                let mut d = zero;
                for (j, kj) in k.iter().enumerate() {
                    d += kj[i] * E[j];
                }
                let sc = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max((d * h).norm() / sc);
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y = y_new;
                k1 = k[6];
                steps += 1;
                last_h = h;
                if let Some(obs) = observer.as_mut() {
                    obs(t, &y);
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < self.h_min {
                    return Err(Error::StepSizeUnderflow { t, h });
                }
            }
        }
        Ok(Solution { y, steps, rejected, last_h })
    }
}
