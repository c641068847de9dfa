//! Adaptive Dormand-Prince 5(4) integrator for four-component systems.

use num_traits::Float;

use crate::{Error, Result};

pub type Vec4 = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

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
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t = 0` to `t_end` (either sign).
///
/// `project` runs after every accepted step and may pull the state back onto a
/// known invariant manifold.
pub fn integrate<F, P>(mut f: F, y0: Vec4, t_end: f64, tol: Tolerance, mut project: P) -> Result<Vec4>
where
    F: FnMut(f64, &Vec4) -> Result<Vec4>,
    P: FnMut(&mut Vec4) -> Result<()>,
{
    if t_end == 0.0 {
        return Ok(y0);
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (0.1 * span).min(0.05);
    let mut k0 = f(0.0, &y)?;
    let mut steps = 0usize;
    while t < span {
        steps += 1;
        if steps > 100_000 || h < 1e-14 * span.max(1.0) {
            return Err(Error::StepFailure { alpha: dir * t });
        }
        if t + h > span {
            h = span - t;
        }
        let mut k = [[0.0; 4]; 7];
        k[0] = k0;
        let mut failed = false;
        for s in 1..7 {
            let mut ys = y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                *yi += dir * h * acc;
            }
            match f(dir * (t + C[s] * h), &ys) {
                Ok(v) => k[s] = v,
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h *= 0.25;
            continue;
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..4 {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][i];
                s4 += B4[s] * k[s][i];
            }
            y5[i] += dir * h * s5;
            let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            let e = h * (s5 - s4) / sc;
            err = err.max(e.abs());
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            project(&mut y)?;
            k0 = f(dir * t, &y)?;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(y)
}
