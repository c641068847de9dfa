//! Scalar root finding.

use crate::{Error, Result};

/// Illinois-modified regula falsi on a sign-changing bracket `[a, b]`.
pub fn illinois<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRoot("bracket has no sign change"));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let fc = f(c)?;
        if fc.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Plain bisection; returns the end of the final bracket where `pred` holds.
pub fn bisect<F>(mut pred: F, mut good: f64, mut bad: f64, iters: usize) -> f64
where
    F: FnMut(f64) -> bool,
{
    for _ in 0..iters {
        let m = 0.5 * (good + bad);
        if pred(m) {
            good = m;
        } else {
            bad = m;
        }
    }
    good
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = illinois(|x| Ok(x * x * x - 2.0), 0.0, 3.0, 1e-15, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn no_sign_change() {
        assert!(illinois(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 1e-12).is_err());
    }

    #[test]
    fn bisect_threshold() {
        let x = bisect(|x| x < 0.3, 0.0, 1.0, 60);
        assert!((x - 0.3).abs() < 1e-15);
    }
}
