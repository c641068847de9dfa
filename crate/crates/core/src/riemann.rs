//! Riemann solvers: the four-wave problem, the free-boundary problem, the
//! background corner solution and the accurate/simplified front solvers.

use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};
use num_traits::Float;

use crate::gas::{eigenvalues, eigenvectors, family_invariants, lambda, GasParams, GasState, Nonlinear};
use crate::roots;
use crate::waves::{
    composite_forward, curve_state_at_lambda, inverse_strength_from_pressure, shock_forward, wave_forward, WaveParam,
    WaveStrengths,
};
use crate::{Error, Result};

/// Waves below this strength are not emitted as fronts.
pub const ZERO_WAVE: f64 = 1e-13;

/// Physical or non-physical content of a front.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FrontKind {
    Physical(WaveParam),
    NonPhysical(f64),
}

impl FrontKind {
    pub fn strength(&self) -> f64 {
        match self {
            FrontKind::Physical(w) => w.strength(),
            FrontKind::NonPhysical(e) => e.abs(),
        }
    }

    /// Family index, non-physical fronts are family 4.
    pub fn index(&self) -> u8 {
        match self {
            FrontKind::Physical(w) => w.index(),
            FrontKind::NonPhysical(_) => 4,
        }
    }
}

/// An outgoing front of a solver, emanating from the interaction point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RiemannFront {
    pub kind: FrontKind,
    pub slope: f64,
    pub below: GasState,
    pub above: GasState,
}

/// Solution of the standard Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RiemannSolution {
    pub strengths: WaveStrengths,
    /// `U_L`, the two middle states, and `U_R`.
    pub states: [GasState; 4],
}

impl RiemannSolution {
    pub fn mid_states(&self) -> [GasState; 2] {
        [self.states[1], self.states[2]]
    }

    /// Unsplit fronts of the solution in increasing family order.
    pub fn fronts(&self, g: &GasParams) -> Result<Vec<RiemannFront>> {
        fronts_from_waves(&self.states[0], &self.strengths.waves(), Some(&self.states[1..]), f64::INFINITY, g)
    }
}

fn scales(u: &GasState) -> [f64; 4] {
    let q = u.speed().max(1e-300);
    [q, q, u.p, u.rho]
}

fn linear_guess(ul: &GasState, ur: &GasState, g: &GasParams) -> [f64; 4] {
    let mid = GasState::from_array(core::array::from_fn(|i| 0.5 * (ul.to_array()[i] + ur.to_array()[i])));
    let e = match eigenvectors(&mid, g).or_else(|_| eigenvectors(ul, g)) {
        Ok(e) => e,
        Err(_) => return [0.0; 4],
    };
    let m = Matrix4::from_fn(|i, j| match j {
        0 => e.r1[i],
        1 => e.r21[i],
        2 => e.r22[i],
        _ => e.r3[i],
    });
    let d = Vector4::from_fn(|i, _| ur.to_array()[i] - ul.to_array()[i]);
    match m.lu().solve(&d) {
        Some(x) => [x[0], x[1], x[2], x[3]],
        None => [0.0; 4],
    }
}

fn residual(ul: &GasState, ur: &GasState, a: [f64; 4], sc: &[f64; 4], g: &GasParams) -> Result<[f64; 4]> {
    let [_, _, r] = composite_forward(ul, &WaveStrengths::from_array(a), g)?;
    let (x, y) = (r.to_array(), ur.to_array());
    Ok(core::array::from_fn(|i| (x[i] - y[i]) / sc[i]))
}

fn norm(r: &[f64; 4]) -> f64 {
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `Phi(alpha1, alpha21, alpha22, alpha3; U_L) = U_R`.
pub fn solve_riemann(ul: &GasState, ur: &GasState, g: &GasParams) -> Result<RiemannSolution> {
    ul.require_supersonic(g)?;
    ur.require_supersonic(g)?;
    if ul == ur {
        return Ok(RiemannSolution { strengths: WaveStrengths::default(), states: [*ul; 4] });
    }
    let sc = scales(ul);
    let mut a = linear_guess(ul, ur, g);
    let mut r = match residual(ul, ur, a, &sc, g) {
        Ok(r) => r,
        Err(_) => {
            a = [0.0; 4];
            residual(ul, ur, a, &sc, g)?
        }
    };
    let h = 1e-7;
    for _ in 0..40 {
        if norm(&r) < 1e-15 {
            break;
        }
        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let mut b = a;
            b[j] += h;
            let rb = residual(ul, ur, b, &sc, g)?;
            for i in 0..4 {
                jac[(i, j)] = (rb[i] - r[i]) / h;
            }
        }
        let rhs = Vector4::from_fn(|i, _| -r[i]);
        let Some(step) = jac.lu().solve(&rhs) else {
            return Err(Error::NoConvergence { residual: norm(&r) });
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: [f64; 4] = core::array::from_fn(|i| a[i] + t * step[i]);
            if let Ok(rt) = residual(ul, ur, trial, &sc, g) {
                if norm(&rt) < norm(&r) || norm(&rt) < 1e-15 {
                    a = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted || step.amax() < 1e-16 {
            break;
        }
    }
    let strengths = WaveStrengths::from_array(a);
    let [m1, m2, end] = composite_forward(ul, &strengths, g)?;
    let abs_res = end.to_array().iter().zip(ur.to_array().iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if abs_res > 1e-10 {
        return Err(Error::NoConvergence { residual: abs_res });
    }
    Ok(RiemannSolution { strengths, states: [*ul, m1, m2, *ur] })
}

/// Emits fronts for a chain of waves starting at `below`.
///
/// `states`, when given, pins the state after each wave; otherwise the states
/// are built by the forward maps. Rarefactions stronger than `delta` are split.
pub fn fronts_from_waves(
    below: &GasState,
    waves: &[WaveParam],
    states: Option<&[GasState]>,
    delta: f64,
    g: &GasParams,
) -> Result<Vec<RiemannFront>> {
    let mut out = Vec::new();
    let mut cur = *below;
    let mut exact = *below;
    for (k, w) in waves.iter().enumerate() {
        let next = match states {
            Some(s) => s[k],
            None => wave_forward(&exact, *w, g)?,
        };
        if w.strength() > ZERO_WAVE {
            out.extend(wave_fronts(&cur, *w, &next, delta, g)?);
            cur = next;
        }
        exact = next;
    }
    Ok(out)
}

/// Fronts of a single wave from `below` to `above`.
fn wave_fronts(below: &GasState, w: WaveParam, above: &GasState, delta: f64, g: &GasParams) -> Result<Vec<RiemannFront>> {
    match w {
        WaveParam::Contact { .. } => Ok(alloc::vec![RiemannFront {
            kind: FrontKind::Physical(w),
            slope: below.v / below.u,
            below: *below,
            above: *above,
        }]),
        WaveParam::First(a) | WaveParam::Third(a) => {
            let fam = w.nonlinear().unwrap().0;
            if a < 0.0 {
                let slope = shock_forward(below, fam, a, g)?.1;
                Ok(alloc::vec![RiemannFront { kind: FrontKind::Physical(w), slope, below: *below, above: *above }])
            } else {
                split_between(below, above, fam, a, delta, g)
            }
        }
    }
}

/// Number of equal parts for a rarefaction of strength `alpha`.
pub fn split_count(alpha: f64, delta: f64) -> usize {
    if !(delta.is_finite()) || alpha <= delta {
        return 1;
    }
    (alpha / delta * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

fn split_between(
    below: &GasState,
    above: &GasState,
    fam: Nonlinear,
    alpha: f64,
    delta: f64,
    g: &GasParams,
) -> Result<Vec<RiemannFront>> {
    let nu = split_count(alpha, delta);
    let part = alpha / nu as f64;
    let inv = family_invariants(below, fam, g)?;
    let l0 = lambda(below, fam, g)?;
    let mut out = Vec::with_capacity(nu);
    let mut prev = *below;
    for k in 1..=nu {
        let next = if k == nu {
            *above
        } else {
            let t = k as f64 / nu as f64;
            let p0 = below.p + t * (above.p - below.p);
            curve_state_at_lambda(fam, inv, l0 + k as f64 * part, p0, g)?
        };
        out.push(RiemannFront {
            kind: FrontKind::Physical(WaveParam::of(fam, part)),
            slope: lambda(&next, fam, g)?,
            below: prev,
            above: next,
        });
        prev = next;
    }
    Ok(out)
}

/// Splits the rarefaction `R_j(alpha; U_l)` into `ceil(alpha/delta)` fronts.
pub fn split_rarefaction(ul: &GasState, family: Nonlinear, alpha: f64, delta: f64, g: &GasParams) -> Result<Vec<RiemannFront>> {
    if alpha <= 0.0 {
        return Ok(Vec::new());
    }
    let ur = wave_forward(ul, WaveParam::of(family, alpha), g)?;
    split_between(ul, &ur, family, alpha, delta, g)
}

/// Accurate solver: exact Riemann solution with split rarefactions.
pub fn accurate_solver(ul: &GasState, ur: &GasState, delta: f64, g: &GasParams) -> Result<(RiemannSolution, Vec<RiemannFront>)> {
    let sol = solve_riemann(ul, ur, g)?;
    let fronts = fronts_from_waves(ul, &sol.strengths.waves(), Some(&sol.states[1..]), delta, g)?;
    Ok((sol, fronts))
}

/// Output of a simplified solve: physical fronts plus the non-physical front on top.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedOutcome {
    pub fronts: Vec<RiemannFront>,
    pub np: Option<RiemannFront>,
}

impl SimplifiedOutcome {
    pub fn epsilon(&self) -> f64 {
        self.np.map(|f| f.kind.strength()).unwrap_or(0.0)
    }
}

/// Case a: lower front `beta` (family j) meets upper front `alpha` (family i <= j).
pub fn simplified_case_a(
    ul: &GasState,
    ur: &GasState,
    beta: WaveParam,
    alpha: WaveParam,
    delta: f64,
    lambda_hat: f64,
    g: &GasParams,
) -> Result<SimplifiedOutcome> {
    let waves: Vec<WaveParam> = if alpha.index() == beta.index() {
        alloc::vec![merge(alpha, beta)]
    } else {
        alloc::vec![alpha, beta]
    };
    let fronts = fronts_from_waves(ul, &waves, None, delta, g)?;
    let mut aux = *ul;
    for w in &waves {
        aux = wave_forward(&aux, *w, g)?;
    }
    Ok(SimplifiedOutcome { fronts, np: np_front(&aux, ur, lambda_hat) })
}

fn merge(a: WaveParam, b: WaveParam) -> WaveParam {
    match (a, b) {
        (WaveParam::First(x), WaveParam::First(y)) => WaveParam::First(x + y),
        (WaveParam::Third(x), WaveParam::Third(y)) => WaveParam::Third(x + y),
        (WaveParam::Contact { vortex: v1, entropy: e1 }, WaveParam::Contact { vortex: v2, entropy: e2 }) => {
            WaveParam::Contact { vortex: v1 + v2, entropy: e1 + e2 }
        }
        _ => a,
    }
}

fn np_front(below: &GasState, above: &GasState, lambda_hat: f64) -> Option<RiemannFront> {
    let eps = below.distance(above);
    (eps > 0.0).then_some(RiemannFront { kind: FrontKind::NonPhysical(eps), slope: lambda_hat, below: *below, above: *above })
}

/// Case b: a non-physical front below meets physical front `alpha` from above.
pub fn simplified_case_b(
    ul: &GasState,
    ur: &GasState,
    alpha: WaveParam,
    lambda_hat: f64,
    g: &GasParams,
) -> Result<SimplifiedOutcome> {
    let fronts = fronts_from_waves(ul, &[alpha], None, f64::INFINITY, g)?;
    let mid = wave_forward(ul, alpha, g)?;
    Ok(SimplifiedOutcome { fronts, np: np_front(&mid, ur, lambda_hat) })
}

/// Free-boundary Riemann solution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundarySolution {
    pub beta3: f64,
    pub u_m: GasState,
    /// New boundary slope `v_m/u_m`.
    pub slope: f64,
}

/// Solves `Psi^(3)(0, 0, beta3; U_r) = p_bar` for the reflected 3-wave.
pub fn solve_boundary_riemann(ur: &GasState, p_bar: f64, g: &GasParams) -> Result<BoundarySolution> {
    let (beta3, u_m) = inverse_strength_from_pressure(ur, p_bar, g)?;
    Ok(BoundarySolution { beta3, u_m, slope: u_m.v / u_m.u })
}

/// Case c: the reflected 3-wave is replaced by a non-physical front.
pub fn simplified_case_c(ur: &GasState, p_bar: f64, lambda_hat: f64, g: &GasParams) -> Result<(BoundarySolution, Option<RiemannFront>)> {
    let b = solve_boundary_riemann(ur, p_bar, g)?;
    Ok((b, np_front(&b.u_m, ur, lambda_hat)))
}

/// Fronts of the reflected wave for the accurate boundary solver.
pub fn boundary_fronts(b: &BoundarySolution, ur: &GasState, delta: f64, g: &GasParams) -> Result<Vec<RiemannFront>> {
    fronts_from_waves(&b.u_m, &[WaveParam::Third(b.beta3)], Some(&[*ur]), delta, g)
}

/// Linearized reflection coefficient `K_b1 = -k1 (l1 - v/u) / (k3 (l3 - v/u))`.
pub fn kb1_linear(u: &GasState, g: &GasParams) -> Result<f64> {
    let e = eigenvectors(u, g)?;
    let s = u.v / u.u;
    Ok(-e.k1 * (e.lambda[0] - s) / (e.k3 * (e.lambda[2] - s)))
}

/// The corner solution: constant `U+`, a centred 3-rarefaction fan, constant `U-`, static gas.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackgroundSolution {
    pub u_plus: GasState,
    pub u_minus: GasState,
    pub p_bar: f64,
    pub p_star: f64,
    /// Free boundary slope `tan(theta-)`.
    pub k_b: f64,
    /// Upper fan edge `lambda3(U+)`.
    pub k1: f64,
    /// Lower fan edge `lambda3(U-)`.
    pub k2: f64,
    pub theta_minus: f64,
    pub s_bar: f64,
    pub invariants: [f64; 3],
}

/// Lower end of the pressure interval on the 3-curve through `U+` where `u/c > 1 + 1e-6`.
pub fn p_star(u_plus: &GasState, g: &GasParams) -> Result<f64> {
    let inv = family_invariants(u_plus, Nonlinear::Third, g)?;
    let ok = |p: f64| match crate::gas::state_from_invariants(Nonlinear::Third, inv, p, g) {
        Ok(s) => s.u > 0.0 && s.mach1(g) > 1.0 + 1e-6,
        Err(_) => false,
    };
    if !ok(u_plus.p) {
        return Err(Error::SubsonicState { u: u_plus.u, c: u_plus.sound_speed(g) });
    }
    let mut bad = 0.5 * u_plus.p;
    while ok(bad) {
        bad *= 0.5;
        if bad < 1e-300 {
            return Ok(0.0);
        }
    }
    Ok(roots::bisect(ok, u_plus.p, bad, 200))
}

impl BackgroundSolution {
    /// Lower flow state, static gas and fan for `p_* < p_bar < p+`.
    pub fn new(u_plus: &GasState, p_bar: f64, g: &GasParams) -> Result<Self> {
        u_plus.require_supersonic(g)?;
        if !(p_bar < u_plus.p) {
            return Err(Error::PressureOutOfRange { gate: "p̄ < p₊" });
        }
        let p_star = p_star(u_plus, g)?;
        if !(p_star < p_bar) {
            return Err(Error::PressureOutOfRange { gate: "p_* < p̄" });
        }
        let invariants = family_invariants(u_plus, Nonlinear::Third, g)?;
        let u_minus = crate::gas::state_from_invariants(Nonlinear::Third, invariants, p_bar, g)?;
        let k1 = lambda(u_plus, Nonlinear::Third, g)?;
        let k2 = lambda(&u_minus, Nonlinear::Third, g)?;
        Ok(Self {
            u_plus: *u_plus,
            u_minus,
            p_bar,
            p_star,
            k_b: u_minus.v / u_minus.u,
            k1,
            k2,
            theta_minus: u_minus.flow_angle(),
            s_bar: k1 - k2,
            invariants,
        })
    }

    /// Fan state `U_ba(xi)` with `lambda3 = xi`, for `xi` in `[k2, k1]`.
    pub fn fan_state(&self, xi: f64, g: &GasParams) -> Result<GasState> {
        if xi <= self.k2 {
            return Ok(self.u_minus);
        }
        if xi >= self.k1 {
            return Ok(self.u_plus);
        }
        let inv = self.invariants;
        let f = |p: f64| -> Result<f64> {
            let s = crate::gas::state_from_invariants(Nonlinear::Third, inv, p, g)?;
            Ok(lambda(&s, Nonlinear::Third, g)? - xi)
        };
        let p = roots::illinois(f, self.p_bar, self.u_plus.p, 1e-15 * self.u_plus.p, 1e-15)?;
        let guess = curve_state_at_lambda(Nonlinear::Third, inv, xi, p, g)?;
        Ok(guess)
    }

    /// State of the exact solution at `(x, y)`, `None` in the static gas.
    pub fn state_at(&self, x: f64, y: f64, g: &GasParams) -> Result<Option<GasState>> {
        if x <= 0.0 {
            return Ok(if y >= 0.0 { Some(self.u_plus) } else { None });
        }
        let xi = y / x;
        if xi < self.k_b {
            Ok(None)
        } else if xi <= self.k2 {
            Ok(Some(self.u_minus))
        } else if xi >= self.k1 {
            Ok(Some(self.u_plus))
        } else {
            self.fan_state(xi, g).map(Some)
        }
    }

    /// Number of fronts in the split fan.
    pub fn fan_count(&self, delta: f64) -> usize {
        split_count(self.s_bar, delta)
    }

    /// Fronts of the fan split with accuracy `delta`, lowest first.
    pub fn fan_fronts(&self, delta: f64, g: &GasParams) -> Result<Vec<RiemannFront>> {
        split_between(&self.u_minus, &self.u_plus, Nonlinear::Third, self.s_bar, delta, g)
    }

    /// Ratio of the total variation of `U` across the fan to `p+ - p_bar`.
    pub fn tv_constant(&self, g: &GasParams) -> Result<f64> {
        let n = 400;
        let mut tv = 0.0;
        let mut prev = self.u_minus;
        for k in 1..=n {
            let xi = self.k2 + self.s_bar * k as f64 / n as f64;
            let s = self.fan_state(xi, g)?;
            tv += s.distance(&prev);
            prev = s;
        }
        Ok(tv / (self.u_plus.p - self.p_bar))
    }
}

pub fn background_solution(u_plus: &GasState, p_bar: f64, g: &GasParams) -> Result<BackgroundSolution> {
    BackgroundSolution::new(u_plus, p_bar, g)
}

/// Slope extremes over a sampled grid of `D(U+, delta0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlopeBounds {
    pub max_lambda1: f64,
    pub min_lambda2: f64,
    pub max_lambda2: f64,
    pub min_lambda3: f64,
    pub max_lambda3: f64,
    /// Non-physical front slope.
    pub lambda_hat: f64,
    pub lambda1_star: f64,
    pub lambda3_star: f64,
    /// Whether `max lambda1 < min lambda2` and `max lambda2 < min lambda3` over the region.
    pub separated: bool,
}

/// Grid states of `D(U+, delta0)`: pressures across `[p_bar - delta0, p+ + delta0]`
/// and every corner of the invariant box.
pub fn region_samples(bg: &BackgroundSolution, delta0: f64, per_axis: usize, g: &GasParams) -> Vec<GasState> {
    let mut out = Vec::new();
    let np = per_axis.max(2);
    let offsets = [-0.999 * delta0, 0.0, 0.999 * delta0];
    for i in 0..np {
        let p = bg.p_bar - 0.999 * delta0 + (bg.u_plus.p - bg.p_bar + 1.998 * delta0) * i as f64 / (np - 1) as f64;
        for dj in offsets {
            for db in offsets {
                for da in offsets {
                    let inv = [bg.invariants[0] + dj, bg.invariants[1] + db, bg.invariants[2] + da];
                    if let Ok(s) = crate::gas::state_from_invariants(Nonlinear::Third, inv, p, g) {
                        if s.is_supersonic(g) {
                            out.push(s);
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn slope_bounds(bg: &BackgroundSolution, delta0: f64, margin: f64, g: &GasParams) -> Result<SlopeBounds> {
    let mut b = SlopeBounds {
        max_lambda1: f64::NEG_INFINITY,
        min_lambda2: f64::INFINITY,
        max_lambda2: f64::NEG_INFINITY,
        min_lambda3: f64::INFINITY,
        max_lambda3: f64::NEG_INFINITY,
        lambda_hat: 0.0,
        lambda1_star: 0.0,
        lambda3_star: 0.0,
        separated: false,
    };
    for s in region_samples(bg, delta0, 9, g) {
        let l = eigenvalues(&s, g)?;
        b.max_lambda1 = b.max_lambda1.max(l[0]);
        b.min_lambda2 = b.min_lambda2.min(l[1]);
        b.max_lambda2 = b.max_lambda2.max(l[1]);
        b.min_lambda3 = b.min_lambda3.min(l[2]);
        b.max_lambda3 = b.max_lambda3.max(l[2]);
    }
    b.separated = b.max_lambda1 < b.min_lambda2 && b.max_lambda2 < b.min_lambda3;
    b.lambda_hat = b.max_lambda3 + margin;
    b.lambda1_star = 0.5 * (b.max_lambda1 + b.min_lambda2);
    b.lambda3_star = 0.5 * (b.max_lambda2 + b.min_lambda3);
    Ok(b)
}
