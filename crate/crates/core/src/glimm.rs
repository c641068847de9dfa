//! The weighted Glimm functional, its weights and the per-interaction audit.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gas::{eigenvectors, state_from_invariants, GasParams, GasState, Nonlinear};
use crate::riemann::{solve_boundary_riemann, solve_riemann, BackgroundSolution};
use crate::tracking::{Front, FrontField};
use crate::waves::{wave_forward, WaveParam, WaveStrengths};
use crate::{Error, Result};

/// Seed of the constant estimator, fixed so that runs are reproducible.
pub const ESTIMATOR_SEED: u64 = 0x5eed_c0de;

/// Constants the weights are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Constants {
    /// Bound on the total strong strength `S(x)`.
    pub c0: f64,
    /// Bound on the O(1) factors of the interaction estimates.
    pub c1: f64,
    /// Curve-parameter to state Lipschitz bound.
    pub c1_prime: f64,
    pub c2: f64,
    /// Bound on the reflection coefficient `K_b1`.
    pub c_b: f64,
    /// Lower Lipschitz bound of the 3-curve pressure in its parameter.
    pub pressure_lo: f64,
    pub samples: usize,
    pub margin: f64,
}

impl Constants {
    /// Unit constants with `C0 = 1.25 S_bar`; for tests and overrides.
    pub fn nominal(s_bar: f64) -> Self {
        Self { c0: 1.25 * s_bar, c1: 1.0, c1_prime: 1.0, c2: 1.0, c_b: 1.0, pressure_lo: 1.0, samples: 0, margin: 1.25 }
    }
}

/// Weights of the functional.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Weights {
    pub k: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k_omega: f64,
    pub k_np: f64,
    pub k_star: f64,
    pub constants: Constants,
    pub delta_star: f64,
}

/// One weight inequality evaluated as `lhs < rhs` (or `<=`).
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn le(name: &'static str, lhs: f64, rhs: f64) -> InequalityCheck {
    InequalityCheck { name, lhs, rhs, holds: lhs <= rhs }
}

fn lt(name: &'static str, lhs: f64, rhs: f64) -> InequalityCheck {
    InequalityCheck { name, lhs, rhs, holds: lhs < rhs }
}

impl Weights {
    pub fn from_constants(c: Constants) -> Self {
        let (k1, k2, k3, k4, k_star) = (1.0, 1.0, 5.0, 1.0, 1.0);
        let k_np = 2.0 + 3.0 * c.c1;
        let e_np = (k_np * c.c0).exp();
        let k = c.c1_prime * c.c_b * (7.0 + e_np) + 1.0;
        let k_omega = 2.0 * c.c1 * (k + 8.0 + e_np);
        let e_om = (k_omega * c.c0).exp();
        let k0 = 2.0 + 2.0 * c.c1 * (k + 10.0 + e_np + 2.0 * e_om);
        let delta_star = [
            1.0 / (20.0 * c.c1 * (1.0 + k0 + k_omega + k_np)),
            1.0 / (4.0 * k0 + 3.0 * k_np * e_np + 6.0 * k_omega * e_om),
            1.0 / (c.c1 * (k_np + k_omega)).sqrt(),
            1.0 / (c.c1 * (k + 8.0 + e_np + 2.0 * e_om)),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        Self { k, k0, k1, k2, k3, k4, k_omega, k_np, k_star, constants: c, delta_star }
    }

    fn e_np(&self) -> f64 {
        (self.k_np * self.constants.c0).exp()
    }

    fn e_om(&self) -> f64 {
        (self.k_omega * self.constants.c0).exp()
    }

    /// Every inequality the decrease argument relies on, for a field with weak
    /// strength `l0` (bounding `L1`, `L2`, `L3` and any single weak 3-shock)
    /// and fan fronts no stronger than `delta`.
    pub fn inequalities(&self, l0: f64, delta: f64) -> Vec<InequalityCheck> {
        let c = &self.constants;
        let (c1, e_np, e_om) = (c.c1, self.e_np(), self.e_om());
        let crossing_common = l0 * (4.0 * self.k0 + 3.0 * self.k4 * self.k_np * e_np + 3.0 * (self.k1 + self.k2) * self.k_omega * e_om)
            + self.k4 * e_np
            + self.k
            + 3.0
            + self.k_star;
        alloc::vec![
            le(
                "weak-weak potential weight K0",
                c1 * (self.k + self.k3 + 3.0 + (self.k1 + self.k2) * e_om + self.k4 * e_np) - 0.5 * self.k0,
                -0.5,
            ),
            le("weak-weak smallness 2 C1 delta*", 2.0 * c1 * self.delta_star, 1.0),
            le(
                "reflection weight K",
                c.c1_prime * c.c_b * (1.0 + self.k3 + self.k4 * e_np + self.k0 * l0) + 0.25,
                self.k,
            ),
            le(
                "first-family crossing of the fan",
                crossing_common + self.k1 * (1.0 - 0.5 * self.k_omega / c1) + self.k2,
                -0.5,
            ),
            le(
                "second-family crossing of the fan",
                crossing_common + self.k2 * (1.0 - 0.5 * self.k_omega / c1) + self.k1,
                -0.5,
            ),
            lt("non-physical weight C1 Knp L1 delta", c1 * self.k_np * l0 * delta, 1.0),
            lt(
                "fan against weak 3-shock, rarefaction outcome",
                0.25 + 1.5 * self.k_star
                    + (3.0 * c1 * self.k0 * l0 + (self.k1 + self.k2) * c1 * e_om + self.k4 * c1 * e_np + (self.k + 3.0) * c1) * delta,
                self.k3,
            ),
            lt(
                "fan against weak 3-shock, shock outcome",
                0.5 + 2.0 * (c1 * l0 * (self.k + 3.0 + 5.0 * self.k0 * l0 + self.k4 * e_np + (self.k1 + self.k2) * e_om) + self.k_star),
                self.k3,
            ),
            le("weak 3-shock smallness C1 L3", c1 * l0, 0.5),
            lt("fan front smallness C1 delta", c1 * delta, 0.5),
            lt("weak 3-front weight Komega L3", self.k_omega * l0, 1.0),
            lt("fan against non-physical weight Knp", 1.0 + c1 + c1 * self.k0 * l0, self.k4 * (self.k_np - c1)),
            lt("non-physical against weak smallness C1 L0", c1 * l0, 0.05),
            lt("non-physical against weak weight K0", 1.0 + 2.0 * c1 * (1.0 + self.k4 * e_np), self.k0),
            le("potential smallness K0 L0", self.k0 * l0, 1.0),
            lt("accuracy below delta*", delta, self.delta_star),
        ]
    }

    /// Fails with the list of violated inequalities.
    pub fn verify(&self, l0: f64, delta: f64) -> Result<()> {
        let bad: Vec<String> = self
            .inequalities(l0, delta)
            .into_iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{} ({:.6e} vs {:.6e})", c.name, c.lhs, c.rhs))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::ConstantsInvalid(bad.join("; ")))
        }
    }
}

/// Functional components at one `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlimmSnapshot {
    pub x: f64,
    /// `L1, L2, L3, L4`.
    pub l: [f64; 4],
    /// `Q0, Q1, Q2, Q4`.
    pub q: [f64; 4],
    pub s: f64,
    pub f1: f64,
    pub f0: f64,
    pub f: f64,
}

impl GlimmSnapshot {
    /// `L0`: total weak physical strength.
    pub fn l0(&self) -> f64 {
        self.l[0] + self.l[1] + self.l[2]
    }

    /// Weighted terms `K L1, L2, K3 L3, L4, K0 Q0, K1 Q1, K2 Q2, K4 Q4, K* F1`.
    pub fn terms(&self, w: &Weights) -> [f64; 9] {
        [
            w.k * self.l[0],
            self.l[1],
            w.k3 * self.l[2],
            self.l[3],
            w.k0 * self.q[0],
            w.k1 * self.q[1],
            w.k2 * self.q[2],
            w.k4 * self.q[3],
            w.k_star * self.f1,
        ]
    }
}

/// Functional of a list of fronts ordered from the boundary upward.
pub fn functional_of(fronts: &[Front], s_bar: f64, w: &Weights, x: f64) -> GlimmSnapshot {
    let s_total: f64 = fronts.iter().filter(|f| f.is_strong).map(|f| f.strength()).sum();
    let mut l = [0.0; 4];
    let mut q = [0.0; 4];
    let mut strong_below = 0.0;
    for f in fronts {
        let a = f.strength();
        if f.is_strong {
            strong_below += a;
        } else if f.is_np() {
            l[3] += a;
            q[3] += a * (w.k_np * (s_total - strong_below).max(0.0)).exp();
        } else {
            let i = f.index() as usize;
            l[i - 1] += a;
            if i < 3 {
                q[i] += a * (w.k_omega * strong_below).exp();
            }
        }
    }
    // Q0 by a top-down sweep: weak strength above, per family, split by shocks.
    let mut above = [0.0; 4];
    let mut above_shock = [0.0; 4];
    for f in fronts.iter().rev() {
        if f.is_strong {
            continue;
        }
        let a = f.strength();
        if f.is_np() {
            q[0] += a * (above[1] + above[2] + above[3]);
            continue;
        }
        let i = f.index() as usize;
        let mut partner: f64 = (1..i).map(|j| above[j]).sum();
        partner += if f.is_shock() { above[i] } else { above_shock[i] };
        q[0] += a * partner;
        above[i] += a;
        if f.is_shock() {
            above_shock[i] += a;
        }
    }
    let f1 = (s_total - s_bar).abs();
    let f0 = w.k * l[0] + l[1] + w.k3 * l[2] + l[3] + w.k0 * q[0] + w.k1 * q[1] + w.k2 * q[2] + w.k4 * q[3];
    GlimmSnapshot { x, l, q, s: s_total, f1, f0, f: f0 + w.k_star * f1 }
}

pub fn compute_functional(field: &FrontField) -> GlimmSnapshot {
    functional_of(&field.fronts, field.background.s_bar, &field.params.weights, field.x)
}

/// Approaching pairs `(lower id, upper id)`: weak physical pairs, then
/// non-physical fronts with a weak physical front above.
pub fn approaching_pairs(fronts: &[Front]) -> (Vec<(u64, u64)>, Vec<(u64, u64)>) {
    let mut a1 = Vec::new();
    let mut a2 = Vec::new();
    for (k, lo) in fronts.iter().enumerate() {
        if lo.is_strong {
            continue;
        }
        for hi in fronts[k + 1..].iter().filter(|f| f.is_weak()) {
            if lo.is_np() {
                a2.push((lo.id, hi.id));
            } else if lo.index() > hi.index() || (lo.index() == hi.index() && (lo.is_shock() || hi.is_shock())) {
                a1.push((lo.id, hi.id));
            }
        }
    }
    (a1, a2)
}

/// Result of checking `F_after - F_before <= -E/4 + tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audit {
    pub passed: bool,
    pub delta_f: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub excess: f64,
}

pub fn audit_interaction(before: &GlimmSnapshot, after: &GlimmSnapshot, e_delta: f64) -> Audit {
    let tolerance = 1e-12 * before.f.max(after.f).max(1.0);
    let delta_f = after.f - before.f;
    let bound = -0.25 * e_delta + tolerance;
    Audit { passed: delta_f <= bound, delta_f, bound, tolerance, excess: delta_f - bound }
}

/// Per-term changes of the weighted functional.
pub fn term_deltas(before: &GlimmSnapshot, after: &GlimmSnapshot, w: &Weights) -> [f64; 9] {
    let (a, b) = (before.terms(w), after.terms(w));
    core::array::from_fn(|i| b[i] - a[i])
}

/// Pressure variation of the field against the background.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TvEstimate {
    pub tv_p: f64,
    pub tv_p_bg: f64,
    pub deviation: f64,
}

pub fn tv_estimates(fronts: &[Front], bg: &BackgroundSolution) -> TvEstimate {
    let tv_p: f64 = fronts.iter().map(|f| (f.above.p - f.below.p).abs()).sum();
    let tv_p_bg = bg.u_plus.p - bg.p_bar;
    TvEstimate { tv_p, tv_p_bg, deviation: (tv_p - tv_p_bg).abs() }
}

pub fn np_total_strength(fronts: &[Front]) -> f64 {
    fronts.iter().filter(|f| f.is_np()).map(|f| f.strength()).sum()
}

fn random_state(bg: &BackgroundSolution, delta0: f64, rng: &mut ChaCha8Rng, g: &GasParams) -> Option<GasState> {
    let p = rng.random_range(bg.p_bar..bg.u_plus.p);
    let inv: [f64; 3] = core::array::from_fn(|i| bg.invariants[i] + rng.random_range(-delta0..=delta0));
    state_from_invariants(Nonlinear::Third, inv, p, g).ok().filter(|s| s.is_supersonic(g))
}

fn random_magnitude(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_wave(family: u8, rng: &mut ChaCha8Rng, lo: f64, hi: f64, sign: Option<f64>) -> WaveParam {
    let m = random_magnitude(rng, lo, hi);
    let s = sign.unwrap_or(if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    match family {
        1 => WaveParam::First(s * m),
        3 => WaveParam::Third(s * m),
        _ => {
            let t = rng.random_range(0.0..1.0);
            WaveParam::Contact { vortex: s * m * t, entropy: -s * m * (1.0 - t) }
        }
    }
}

fn merged(a: WaveParam, b: WaveParam) -> WaveParam {
    match (a, b) {
        (WaveParam::First(x), WaveParam::First(y)) => WaveParam::First(x + y),
        (WaveParam::Third(x), WaveParam::Third(y)) => WaveParam::Third(x + y),
        (WaveParam::Contact { vortex: v1, entropy: e1 }, WaveParam::Contact { vortex: v2, entropy: e2 }) => {
            WaveParam::Contact { vortex: v1 + v2, entropy: e1 + e2 }
        }
        _ => a,
    }
}

fn add_to(s: &mut WaveStrengths, w: WaveParam) {
    match w {
        WaveParam::First(a) => s.a1 += a,
        WaveParam::Contact { vortex, entropy } => {
            s.a21 += vortex;
            s.a22 += entropy;
        }
        WaveParam::Third(a) => s.a3 += a,
    }
}

fn strengths_gap(a: &WaveStrengths, b: &WaveStrengths) -> f64 {
    (a.a1 - b.a1).abs().max((a.a21 - b.a21).abs() + (a.a22 - b.a22).abs()).max((a.a3 - b.a3).abs())
}

/// One sampled weak interaction: lower `beta`, upper `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionSample {
    pub product: f64,
    /// Simplified-solver error `|U_R - U'_R|`.
    pub epsilon: f64,
    /// Largest deviation of the accurate outgoing strengths from the incoming ones.
    pub accurate_gap: f64,
}

/// Samples approaching weak pairs with strengths in `[lo, hi]`.
pub fn interaction_samples(
    bg: &BackgroundSolution,
    delta0: f64,
    count: usize,
    lo: f64,
    hi: f64,
    seed: u64,
    g: &GasParams,
) -> Vec<InteractionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 20 * count {
        tries += 1;
        let Some(ul) = random_state(bg, delta0, &mut rng, g) else { continue };
        let (j, i) = [(3u8, 1u8), (3, 2), (2, 1), (1, 1), (3, 3)][rng.random_range(0..5usize)];
        let beta = random_wave(j, &mut rng, lo, hi, None);
        let shock_needed = i == j && !beta.is_shock();
        let alpha = random_wave(i, &mut rng, lo, hi, shock_needed.then_some(-1.0));
        if let Ok(s) = sample_pair(&ul, beta, alpha, g) {
            out.push(s);
        }
    }
    out
}

fn sample_pair(ul: &GasState, beta: WaveParam, alpha: WaveParam, g: &GasParams) -> Result<InteractionSample> {
    let um = wave_forward(ul, beta, g)?;
    let ur = wave_forward(&um, alpha, g)?;
    let mut expect = WaveStrengths::default();
    let aux = if alpha.index() == beta.index() {
        let m = merged(alpha, beta);
        add_to(&mut expect, m);
        wave_forward(ul, m, g)?
    } else {
        add_to(&mut expect, alpha);
        add_to(&mut expect, beta);
        wave_forward(&wave_forward(ul, alpha, g)?, beta, g)?
    };
    let sol = solve_riemann(ul, &ur, g)?;
    Ok(InteractionSample {
        product: alpha.strength() * beta.strength(),
        epsilon: aux.distance(&ur),
        accurate_gap: strengths_gap(&sol.strengths, &expect),
    })
}

/// Monte-Carlo estimate of the constants over `D(U+, delta0)`.
pub fn estimate_constants(u_plus: &GasState, p_bar: f64, delta0: f64, samples: usize, g: &GasParams) -> Result<Constants> {
    let bg = BackgroundSolution::new(u_plus, p_bar, g)?;
    let margin = 1.25;
    let mut rng = ChaCha8Rng::seed_from_u64(ESTIMATOR_SEED);

    let mut c1 = 0.0f64;
    for s in interaction_samples(&bg, delta0, samples, 1e-3, 2e-2, ESTIMATOR_SEED ^ 1, g) {
        c1 = c1.max(s.epsilon / s.product).max(s.accurate_gap / s.product);
    }

    // non-physical front crossing a physical one
    let mut lip = 0.0f64;
    let (mut p_lo, mut p_hi) = (f64::INFINITY, 0.0f64);
    let mut n = 0;
    while n < samples {
        let Some(ul) = random_state(&bg, delta0, &mut rng, g) else { continue };
        n += 1;
        let fam = [1u8, 2, 3][rng.random_range(0..3usize)];
        let alpha = random_wave(fam, &mut rng, 1e-3, 2e-2, None);
        let eps = random_magnitude(&mut rng, 1e-4, 1e-2);
        let dir: [f64; 4] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let sc = [ul.u, ul.u, ul.p, ul.rho];
        let um = GasState::from_array(core::array::from_fn(|k| ul.to_array()[k] + 0.2 * eps * sc[k] * dir[k] / norm));
        let e0 = ul.distance(&um);
        if let (Ok(ur), Ok(aux)) = (wave_forward(&um, alpha, g), wave_forward(&ul, alpha, g)) {
            c1 = c1.max((aux.distance(&ur) - e0).abs() / (alpha.strength() * e0));
        }
        if let Ok(e) = eigenvectors(&ul, g) {
            for r in [e.r1, e.r3, e.r21, e.r22] {
                lip = lip.max(r.iter().map(|x| x * x).sum::<f64>().sqrt());
            }
        }
        let a3 = random_magnitude(&mut rng, 1e-3, 2e-2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        if let Ok(ur) = wave_forward(&ul, WaveParam::Third(a3), g) {
            let ratio = (ur.p - ul.p).abs() / a3.abs();
            p_lo = p_lo.min(ratio);
            p_hi = p_hi.max(ratio);
            lip = lip.max(ur.distance(&ul) / a3.abs());
        }
    }

    // reflection at the boundary from states near U-
    let mut c_b = 0.0f64;
    let mut n = 0;
    let mut tries = 0;
    while n < samples.max(1) && tries < 20 * samples.max(1) {
        tries += 1;
        let inv: [f64; 3] = core::array::from_fn(|i| bg.invariants[i] + rng.random_range(-delta0..=delta0));
        let Ok(ul) = state_from_invariants(Nonlinear::Third, inv, p_bar, g) else { continue };
        let a1 = random_wave(1, &mut rng, 1e-3, 2e-2, None);
        let Ok(ur) = wave_forward(&ul, a1, g) else { continue };
        let Ok(b) = solve_boundary_riemann(&ur, p_bar, g) else { continue };
        n += 1;
        c_b = c_b.max(b.beta3.abs() / a1.strength());
        lip = lip.max(b.u_m.distance(&ur) / b.beta3.abs().max(1e-300));
    }

    let c1 = (margin * c1).max(1.0);
    let c2 = c1.max(margin * p_hi);
    Ok(Constants {
        c0: margin * bg.s_bar,
        c1,
        c1_prime: (margin * lip).max(1.0),
        c2,
        c_b: margin * c_b,
        pressure_lo: p_lo / margin,
        samples,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::FrontKind;

    const G: GasParams = GasParams { gamma: 1.4, kappa: 1.0, c_v: 1.0 };
    const UP: GasState = GasState::new(2.0, 0.0, 1.0, 1.4);

    fn fr(id: u64, w: WaveParam, strong: bool) -> Front {
        Front { id, kind: FrontKind::Physical(w), x0: 0.0, y0: id as f64, speed: 0.0, below: UP, above: UP, gen_order: 0, is_strong: strong }
    }

    fn np(id: u64, e: f64) -> Front {
        Front { kind: FrontKind::NonPhysical(e), ..fr(id, WaveParam::First(0.0), false) }
    }

    fn weights() -> Weights {
        Weights::from_constants(Constants::nominal(0.2))
    }

    #[test]
    fn recipe_values() {
        let c = Constants::nominal(0.04);
        let w = Weights::from_constants(c);
        let e_np = (5.0f64 * 0.05).exp();
        let k = 7.0 + e_np + 1.0;
        assert!((w.k_np - 5.0).abs() < 1e-15);
        assert!((w.k - k).abs() < 1e-12);
        assert!((w.k_omega - 2.0 * (k + 8.0 + e_np)).abs() < 1e-12);
        let e_om = (w.k_omega * 0.05).exp();
        assert!((w.k0 - (2.0 + 2.0 * (k + 10.0 + e_np + 2.0 * e_om))).abs() < 1e-9);
        assert!(w.delta_star > 0.0 && w.delta_star < 1.0 / (20.0 * (1.0 + w.k0)));
        assert_eq!((w.k1, w.k2, w.k3, w.k4, w.k_star), (1.0, 1.0, 5.0, 1.0, 1.0));
    }

    #[test]
    fn recipe_satisfies_its_inequalities_inside_the_admissible_range() {
        let w = weights();
        let d = 0.5 * w.delta_star;
        for c in w.inequalities(d, d) {
            assert!(c.holds, "{c:?}");
        }
        assert!(w.verify(d, d).is_ok());
        let err = w.verify(0.1, 0.1).unwrap_err();
        assert!(matches!(err, Error::ConstantsInvalid(ref m) if m.contains("K0 L0")));
    }

    #[test]
    fn background_field_has_zero_functional() {
        let fronts: Vec<Front> = (0..5).map(|k| fr(k, WaveParam::Third(0.04), true)).collect();
        let s = functional_of(&fronts, 0.2, &weights(), 0.0);
        assert_eq!(s.l, [0.0; 4]);
        assert_eq!(s.q, [0.0; 4]);
        assert!(s.f1 < 1e-15 && s.f < 1e-15);
    }

    #[test]
    fn weights_of_single_fronts() {
        let w = weights();
        let mut fronts: Vec<Front> = (1..6).map(|k| fr(k, WaveParam::Third(0.04), true)).collect();
        fronts.push(fr(9, WaveParam::First(0.01), false));
        let s = functional_of(&fronts, 0.2, &w, 0.0);
        assert!((s.q[1] - 0.01 * (w.k_omega * 0.2).exp()).abs() < 1e-12);

        let mut fronts: Vec<Front> = alloc::vec![np(0, 1e-3)];
        fronts.extend((1..6).map(|k| fr(k, WaveParam::Third(0.04), true)));
        let s = functional_of(&fronts, 0.2, &w, 0.0);
        assert!((s.q[3] - 1e-3 * (w.k_np * 0.2).exp()).abs() < 1e-15);
        assert_eq!(s.l[3], 1e-3);
    }

    #[test]
    fn approaching_examples() {
        let f1 = fr(0, WaveParam::First(0.01), false);
        let f3 = fr(1, WaveParam::Third(0.01), false);
        assert!(approaching_pairs(&[f1, f3]).0.is_empty());
        assert_eq!(approaching_pairs(&[f3, f1]).0, [(1, 0)]);
        let c1 = fr(2, WaveParam::Contact { vortex: 0.01, entropy: 0.0 }, false);
        let c2 = fr(3, WaveParam::Contact { vortex: 0.0, entropy: 0.01 }, false);
        assert!(approaching_pairs(&[c1, c2]).0.is_empty());
        let r1 = fr(4, WaveParam::First(0.01), false);
        let s1 = fr(5, WaveParam::First(-0.01), false);
        assert_eq!(approaching_pairs(&[r1, s1]).0.len(), 1);
        assert_eq!(approaching_pairs(&[np(6, 1e-3), r1]).1, [(6, 4)]);
        assert!(approaching_pairs(&[r1, np(6, 1e-3)]).1.is_empty());
    }

    #[test]
    fn q0_sweep_matches_pair_listing() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let fronts: Vec<Front> = (0..12u64)
                .map(|id| match rng.random_range(0..5) {
                    0 => fr(id, WaveParam::First(rng.random_range(-0.02..0.02)), false),
                    1 => fr(id, WaveParam::Contact { vortex: rng.random_range(-0.02..0.02), entropy: 0.01 }, false),
                    2 => fr(id, WaveParam::Third(rng.random_range(-0.02..0.02)), false),
                    3 => fr(id, WaveParam::Third(0.03), true),
                    _ => np(id, rng.random_range(0.0..0.01)),
                })
                .collect();
            let by_id = |id: u64| fronts.iter().find(|f| f.id == id).unwrap().strength();
            let (a1, a2) = approaching_pairs(&fronts);
            let q0: f64 = a1.iter().chain(a2.iter()).map(|(a, b)| by_id(*a) * by_id(*b)).sum();
            let s = functional_of(&fronts, 0.1, &weights(), 0.0);
            assert!((s.q[0] - q0).abs() < 1e-15, "{} vs {}", s.q[0], q0);
        }
    }

    #[test]
    fn audit_bounds() {
        let a = GlimmSnapshot { f: 1.0, ..Default::default() };
        let b = GlimmSnapshot { f: 1.0 - 2.5e-5, ..Default::default() };
        assert!(audit_interaction(&a, &b, 1e-4).passed);
        let b = GlimmSnapshot { f: 1.0 - 2.4e-5, ..Default::default() };
        assert!(!audit_interaction(&a, &b, 1e-4).passed);
        assert!(audit_interaction(&a, &a, 0.0).passed);
        let c = GlimmSnapshot { f: 1.0 - 2.5e-3, ..Default::default() };
        assert!(audit_interaction(&a, &c, 0.01).passed);
    }

    #[test]
    fn np_total_and_tv() {
        assert_eq!(np_total_strength(&[fr(0, WaveParam::First(0.01), false)]), 0.0);
        assert_eq!(np_total_strength(&[np(0, 1e-3), np(1, 2e-3)]), 3e-3);
        let bg = BackgroundSolution::new(&UP, 0.5, &G).unwrap();
        let fan: Vec<Front> = bg
            .fan_fronts(0.05, &G)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(k, rf)| Front { below: rf.below, above: rf.above, ..fr(k as u64, WaveParam::Third(0.0), true) })
            .collect();
        assert!(tv_estimates(&fan, &bg).deviation < 1e-12);
        let mut with_contact = fan.clone();
        let above = crate::waves::contact_forward(&UP, 0.01, 0.02);
        with_contact.push(Front { below: UP, above, ..fr(99, WaveParam::Contact { vortex: 0.01, entropy: 0.02 }, false) });
        assert!(tv_estimates(&with_contact, &bg).deviation < 1e-12);
    }

    #[test]
    fn reflection_bound_at_background() {
        let bg = BackgroundSolution::new(&UP, 0.5, &G).unwrap();
        let c = estimate_constants(&UP, 0.5, 1e-6, 60, &G).unwrap();
        let kb = crate::riemann::kb1_linear(&bg.u_minus, &G).unwrap();
        assert!((c.c_b / c.margin - kb).abs() / kb < 0.03, "{} vs {kb}", c.c_b / c.margin);
        assert!(c.c0 >= bg.s_bar);
        assert!(c.c1 >= 1.0 && c.c1_prime >= 1.0 && c.c2 >= c.c1);
    }

    #[test]
    fn simplified_error_scales_with_product() {
        let bg = BackgroundSolution::new(&UP, 0.5, &G).unwrap();
        let slope = |lo: f64, hi: f64| {
            let s = interaction_samples(&bg, 0.02, 1000, lo, hi, 11, &G);
            let num: f64 = s.iter().map(|x| x.epsilon * x.product).sum();
            let den: f64 = s.iter().map(|x| x.product * x.product).sum();
            num / den
        };
        let (a, b) = (slope(1e-3, 3e-3), slope(3e-3, 1e-2));
        assert!((a / b - 1.0).abs() < 0.2, "{a} vs {b}");
    }
}
