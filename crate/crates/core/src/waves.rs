//! Elementary wave curves of the steady Euler system and their compositions.

use num_traits::Float;

use crate::gas::{eigenvectors, family_invariants, lambda, state_from_invariants, GasParams, GasState, Nonlinear};
use crate::ode::{self, Tolerance};
use crate::{Error, Result};

/// Wave family tags, including the non-physical fourth family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WaveFamily {
    F1,
    F2Vortex,
    F2Entropy,
    F3,
    NonPhysical,
}

impl WaveFamily {
    /// Family index used in the approaching-wave ordering (non-physical is 4).
    pub fn index(self) -> u8 {
        match self {
            WaveFamily::F1 => 1,
            WaveFamily::F2Vortex | WaveFamily::F2Entropy => 2,
            WaveFamily::F3 => 3,
            WaveFamily::NonPhysical => 4,
        }
    }
}

/// Parameter of one physical wave.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WaveParam {
    First(f64),
    Contact { vortex: f64, entropy: f64 },
    Third(f64),
}

impl WaveParam {
    pub fn index(&self) -> u8 {
        match self {
            WaveParam::First(_) => 1,
            WaveParam::Contact { .. } => 2,
            WaveParam::Third(_) => 3,
        }
    }

    /// `|alpha|`, or `|alpha21| + |alpha22|` for the 2-wave.
    pub fn strength(&self) -> f64 {
        match *self {
            WaveParam::First(a) | WaveParam::Third(a) => a.abs(),
            WaveParam::Contact { vortex, entropy } => vortex.abs() + entropy.abs(),
        }
    }

    pub fn is_shock(&self) -> bool {
        matches!(*self, WaveParam::First(a) | WaveParam::Third(a) if a < 0.0)
    }

    pub fn is_rarefaction(&self) -> bool {
        matches!(*self, WaveParam::First(a) | WaveParam::Third(a) if a > 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.strength() == 0.0
    }

    pub fn nonlinear(&self) -> Option<(Nonlinear, f64)> {
        match *self {
            WaveParam::First(a) => Some((Nonlinear::First, a)),
            WaveParam::Third(a) => Some((Nonlinear::Third, a)),
            WaveParam::Contact { .. } => None,
        }
    }

    pub fn of(family: Nonlinear, alpha: f64) -> Self {
        match family {
            Nonlinear::First => WaveParam::First(alpha),
            Nonlinear::Third => WaveParam::Third(alpha),
        }
    }
}

/// Parameters `(alpha1, alpha21, alpha22, alpha3)` of a Riemann solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaveStrengths {
    pub a1: f64,
    pub a21: f64,
    pub a22: f64,
    pub a3: f64,
}

impl WaveStrengths {
    pub fn to_array(&self) -> [f64; 4] {
        [self.a1, self.a21, self.a22, self.a3]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { a1: a[0], a21: a[1], a22: a[2], a3: a[3] }
    }

    pub fn waves(&self) -> [WaveParam; 3] {
        [
            WaveParam::First(self.a1),
            WaveParam::Contact { vortex: self.a21, entropy: self.a22 },
            WaveParam::Third(self.a3),
        ]
    }
}

/// Moves along the integral curve of `r_j` by `sigma` (either sign).
///
/// The ODE is integrated with the state projected back onto the invariant
/// manifold after every step; the endpoint is then corrected in pressure so the
/// characteristic slope moves by exactly `sigma`.
pub fn integral_curve(u0: &GasState, family: Nonlinear, sigma: f64, g: &GasParams) -> Result<GasState> {
    if sigma == 0.0 {
        return Ok(*u0);
    }
    u0.require_supersonic(g)?;
    let inv = family_invariants(u0, family, g)?;
    let rhs = |_: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let s = GasState::from_array(*y);
        Ok(eigenvectors(&s, g)?.r(family))
    };
    let project = |y: &mut [f64; 4]| -> Result<()> {
        let s = state_from_invariants(family, inv, y[2], g)?;
        *y = s.to_array();
        Ok(())
    };
    let y = ode::integrate(rhs, u0.to_array(), sigma, Tolerance::default(), project).map_err(|e| match e {
        Error::StepFailure { alpha } => Error::LeftSupersonicLost { alpha },
        other => other,
    })?;
    let target = lambda(u0, family, g)? + sigma;
    let out = curve_state_at_lambda(family, inv, target, y[2], g).unwrap_or(GasState::from_array(y));
    if !out.is_supersonic(g) {
        return Err(Error::LeftSupersonicLost { alpha: sigma });
    }
    Ok(out)
}

/// State on the rarefaction curve with invariants `inv` whose `lambda_j` equals `target`.
pub(crate) fn curve_state_at_lambda(family: Nonlinear, inv: [f64; 3], target: f64, p0: f64, g: &GasParams) -> Result<GasState> {
    let f = |p: f64| -> Result<f64> { lambda(&state_from_invariants(family, inv, p, g)?, family, g).map(|l| l - target) };
    let mut p = p0;
    for _ in 0..20 {
        let r = f(p)?;
        if r.abs() < 1e-15 {
            break;
        }
        let h = 1e-7 * p;
        let d = (f(p + h)? - f(p - h)?) / (2.0 * h);
        let step = r / d;
        p -= step;
        if !(p > 0.0) {
            return Err(Error::NoRoot("rarefaction pressure correction"));
        }
        if step.abs() < 1e-15 * p {
            break;
        }
    }
    state_from_invariants(family, inv, p, g)
}

/// Forward rarefaction `R_j(alpha; U_l)`, `alpha >= 0`.
pub fn rarefaction_forward(ul: &GasState, family: Nonlinear, alpha: f64, g: &GasParams) -> Result<GasState> {
    integral_curve(ul, family, alpha, g)
}

/// Which side of the shock is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Known {
    Left,
    Right,
}

/// Partner state of a shock through `k` with density ratio `1 + d`.
fn shock_partner(k: &GasState, family: Nonlinear, d: f64, g: &GasParams) -> Option<(GasState, f64)> {
    let gm = g.gamma;
    let den = 2.0 - (gm - 1.0) * d;
    if !(den > 0.0) || !(d > -1.0) {
        return None;
    }
    let p = k.p * (1.0 + 2.0 * gm * d / den);
    let m2 = 2.0 * gm * k.p * k.rho * (1.0 + d) / den;
    let q = k.speed();
    let sin_phi = m2.sqrt() / (k.rho * q);
    if !(sin_phi <= 1.0) {
        return None;
    }
    let beta = k.flow_angle() + family.sign() * sin_phi.asin();
    let (sb, cb) = beta.sin_cos();
    let n = [-sb, cb];
    let wn = k.u * n[0] + k.v * n[1];
    let dw = wn / (1.0 + d) - wn;
    let s = GasState::new(k.u + dw * n[0], k.v + dw * n[1], p, k.rho * (1.0 + d));
    Some((s, beta.tan()))
}

/// Solves for the shock with `lambda_j(U_r) - lambda_j(U_l) = alpha < 0`.
fn shock(k: &GasState, family: Nonlinear, alpha: f64, known: Known, g: &GasParams) -> Result<(GasState, f64)> {
    k.require_supersonic(g)?;
    let lk = lambda(k, family, g)?;
    // Admissible sign of d from the entropy condition.
    let sign = match (family, known) {
        (Nonlinear::First, Known::Left) | (Nonlinear::Third, Known::Right) => 1.0,
        _ => -1.0,
    };
    let resid = |d: f64| -> Option<(f64, GasState, f64)> {
        let (s, slope) = shock_partner(k, family, d, g)?;
        let ls = lambda(&s, family, g).ok()?;
        let jump = match known {
            Known::Left => ls - lk,
            Known::Right => lk - ls,
        };
        Some((jump - alpha, s, slope))
    };
    let e = eigenvectors(k, g)?;
    let r4 = e.r(family)[3] / k.rho;
    let mut d = match known {
        Known::Left => alpha * r4,
        Known::Right => -alpha * r4,
    };
    if d * sign <= 0.0 {
        return Err(Error::EntropyViolation { alpha });
    }
    // Newton with a bracket [lo, hi] in |d|.
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    let mut best: Option<(GasState, f64)> = None;
    for _ in 0..60 {
        let Some((r, s, slope)) = resid(d) else {
            hi = hi.min(d.abs());
            d = sign * 0.5 * (lo + hi);
            continue;
        };
        best = Some((s, slope));
        if r.abs() <= 1e-15 * (1.0 + alpha.abs()) {
            return Ok((s, slope));
        }
        // Larger |d| gives a more negative jump.
        if r < 0.0 {
            hi = hi.min(d.abs());
        } else {
            lo = lo.max(d.abs());
        }
        let h = 1e-7 * d.abs().max(1e-12);
        let dr = match resid(d + h) {
            Some((r2, _, _)) => (r2 - r) / h,
            None => f64::NAN,
        };
        let mut next = d - r / dr;
        let a = next.abs();
        if !next.is_finite() || next * sign <= 0.0 || a <= lo || a >= hi {
            next = if hi.is_finite() { sign * 0.5 * (lo + hi) } else { 2.0 * d };
        }
        if (next - d).abs() <= 1e-16 * d.abs() {
            return Ok(resid(next).map(|(_, s, sl)| (s, sl)).unwrap_or((s, slope)));
        }
        d = next;
    }
    match best {
        Some(b) if resid(d).map(|(r, _, _)| r.abs() < 1e-12).unwrap_or(false) => Ok(b),
        _ => Err(Error::NoRoot("shock density ratio")),
    }
}

/// Forward shock `S_j(alpha; U_l)`, `alpha < 0`. Returns the right state and the shock slope.
pub fn shock_forward(ul: &GasState, family: Nonlinear, alpha: f64, g: &GasParams) -> Result<(GasState, f64)> {
    if alpha == 0.0 {
        return Ok((*ul, lambda(ul, family, g)?));
    }
    if alpha > 0.0 {
        return Err(Error::EntropyViolation { alpha });
    }
    let (s, slope) = shock(ul, family, alpha, Known::Left, g)?;
    s.require_supersonic(g)?;
    Ok((s, slope))
}

/// Left state of the shock with right state `ur` and parameter `alpha < 0`.
pub fn shock_inverse(ur: &GasState, family: Nonlinear, alpha: f64, g: &GasParams) -> Result<(GasState, f64)> {
    if alpha == 0.0 {
        return Ok((*ur, lambda(ur, family, g)?));
    }
    if alpha > 0.0 {
        return Err(Error::EntropyViolation { alpha });
    }
    let (s, slope) = shock(ur, family, alpha, Known::Right, g)?;
    s.require_supersonic(g)?;
    Ok((s, slope))
}

/// `Phi_j(alpha; U_l)` for a genuinely nonlinear family.
pub fn nonlinear_forward(ul: &GasState, family: Nonlinear, alpha: f64, g: &GasParams) -> Result<GasState> {
    if alpha >= 0.0 {
        rarefaction_forward(ul, family, alpha, g)
    } else {
        shock_forward(ul, family, alpha, g).map(|r| r.0)
    }
}

/// Inverse of [`nonlinear_forward`]: the left state whose `alpha`-wave ends at `ur`.
pub fn nonlinear_inverse(ur: &GasState, family: Nonlinear, alpha: f64, g: &GasParams) -> Result<GasState> {
    if alpha >= 0.0 {
        integral_curve(ur, family, -alpha, g)
    } else {
        shock_inverse(ur, family, alpha, g).map(|r| r.0)
    }
}

/// Vortex sheet then entropy wave.
pub fn contact_forward(ul: &GasState, alpha21: f64, alpha22: f64) -> GasState {
    let e = alpha21.exp();
    GasState::new(ul.u * e, ul.v * e, ul.p, ul.rho * alpha22.exp())
}

pub fn contact_inverse(ur: &GasState, alpha21: f64, alpha22: f64) -> GasState {
    contact_forward(ur, -alpha21, -alpha22)
}

pub fn wave_forward(ul: &GasState, w: WaveParam, g: &GasParams) -> Result<GasState> {
    match w {
        WaveParam::First(a) => nonlinear_forward(ul, Nonlinear::First, a, g),
        WaveParam::Third(a) => nonlinear_forward(ul, Nonlinear::Third, a, g),
        WaveParam::Contact { vortex, entropy } => Ok(contact_forward(ul, vortex, entropy)),
    }
}

pub fn wave_inverse(ur: &GasState, w: WaveParam, g: &GasParams) -> Result<GasState> {
    match w {
        WaveParam::First(a) => nonlinear_inverse(ur, Nonlinear::First, a, g),
        WaveParam::Third(a) => nonlinear_inverse(ur, Nonlinear::Third, a, g),
        WaveParam::Contact { vortex, entropy } => Ok(contact_inverse(ur, vortex, entropy)),
    }
}

/// Composite `Phi(alpha1, alpha2, alpha3; U_L)`; returns the two middle states and `U_R`.
pub fn composite_forward(ul: &GasState, a: &WaveStrengths, g: &GasParams) -> Result<[GasState; 3]> {
    let m1 = nonlinear_forward(ul, Nonlinear::First, a.a1, g)?;
    let m2 = contact_forward(&m1, a.a21, a.a22);
    let ur = nonlinear_forward(&m2, Nonlinear::Third, a.a3, g)?;
    Ok([m1, m2, ur])
}

/// Composite inverse `Psi(alpha1, alpha2, alpha3; U_R)`.
pub fn composite_inverse(ur: &GasState, a: &WaveStrengths, g: &GasParams) -> Result<GasState> {
    let m2 = nonlinear_inverse(ur, Nonlinear::Third, a.a3, g)?;
    let m1 = contact_inverse(&m2, a.a21, a.a22);
    nonlinear_inverse(&m1, Nonlinear::First, a.a1, g)
}

/// Default extent of the shock branch admitted on the 3-curve, in slope units.
pub const SHOCK_EXTENSION: f64 = 0.05;

/// Density ratio minus one across a shock from `k` to pressure `p`.
fn density_jump_for_pressure(k: &GasState, p: f64, g: &GasParams) -> f64 {
    let r = p / k.p - 1.0;
    2.0 * r / (2.0 * g.gamma + (g.gamma - 1.0) * r)
}

/// State on the forward 3-curve through `ul` at pressure `p` and its parameter.
pub fn third_curve_at_pressure(ul: &GasState, p: f64, g: &GasParams) -> Result<(f64, GasState)> {
    ul.require_supersonic(g)?;
    let l0 = lambda(ul, Nonlinear::Third, g)?;
    if p == ul.p {
        return Ok((0.0, *ul));
    }
    let s = if p > ul.p {
        let inv = family_invariants(ul, Nonlinear::Third, g)?;
        state_from_invariants(Nonlinear::Third, inv, p, g)?
    } else {
        let d = density_jump_for_pressure(ul, p, g);
        shock_partner(ul, Nonlinear::Third, d, g).ok_or(Error::NoRoot("3-shock to pressure"))?.0
    };
    s.require_supersonic(g)?;
    Ok((lambda(&s, Nonlinear::Third, g)? - l0, s))
}

/// The unique `alpha3` with `Phi_3^(3)(alpha3; U_l) = p_target`.
///
/// Pressure increases with `alpha3` along the forward curve. Targets below
/// `p_l` are reached by the shock branch, limited to `alpha3 >= -shock_limit`.
pub fn strength_from_pressure(ul: &GasState, p_target: f64, shock_limit: f64, g: &GasParams) -> Result<f64> {
    let unreachable = || {
        let lo = shock_forward(ul, Nonlinear::Third, -shock_limit, g).map(|r| r.0.p).unwrap_or(f64::NAN);
        Error::Unreachable { target: p_target, lo, hi: f64::INFINITY }
    };
    let (a, _) = third_curve_at_pressure(ul, p_target, g).map_err(|_| unreachable())?;
    if a < -shock_limit {
        return Err(unreachable());
    }
    Ok(a)
}

/// Inverse 3-curve at pressure `p_target`: returns `(beta3, U_m)` with
/// `U_m = Psi_3(beta3; U_r)` and `p(U_m) = p_target`.
///
/// Pressure decreases along the inverse curve, so targets below `p_r` give
/// `beta3 > 0` (rarefaction) and targets above give a shock.
pub fn inverse_strength_from_pressure(ur: &GasState, p_target: f64, g: &GasParams) -> Result<(f64, GasState)> {
    ur.require_supersonic(g)?;
    let unreachable = || Error::Unreachable { target: p_target, lo: 0.0, hi: f64::INFINITY };
    if p_target == ur.p {
        return Ok((0.0, *ur));
    }
    let lr = lambda(ur, Nonlinear::Third, g)?;
    let um = if p_target < ur.p {
        let inv = family_invariants(ur, Nonlinear::Third, g)?;
        state_from_invariants(Nonlinear::Third, inv, p_target, g).map_err(|_| unreachable())?
    } else {
        let d = density_jump_for_pressure(ur, p_target, g);
        shock_partner(ur, Nonlinear::Third, d, g).ok_or_else(unreachable)?.0
    };
    if !um.is_supersonic(g) {
        return Err(unreachable());
    }
    Ok((lr - lambda(&um, Nonlinear::Third, g)?, um))
}

/// Pressure along the forward 3-curve, `Phi_3^(3)(alpha; U_l)`.
pub fn third_pressure(ul: &GasState, alpha: f64, g: &GasParams) -> Result<f64> {
    nonlinear_forward(ul, Nonlinear::Third, alpha, g).map(|s| s.p)
}

/// Slope of the front carrying `w` between `below` and `above`.
pub fn front_slope(below: &GasState, above: &GasState, w: WaveParam, g: &GasParams) -> Result<f64> {
    match w {
        WaveParam::Contact { .. } => Ok(below.v / below.u),
        WaveParam::First(a) | WaveParam::Third(a) if a < 0.0 => {
            let fam = w.nonlinear().unwrap().0;
            shock_forward(below, fam, a, g).map(|r| r.1)
        }
        WaveParam::First(_) => lambda(above, Nonlinear::First, g),
        WaveParam::Third(_) => lambda(above, Nonlinear::Third, g),
    }
}
