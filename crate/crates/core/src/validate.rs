//! Post-hoc checks of a tracked solution: entropy residuals, the weak form,
//! invariant-region margins and convergence in `delta`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::gas::{riemann_invariant_deviation, GasParams, GasState};
use crate::glimm::np_total_strength;
use crate::riemann::FrontKind;
use crate::tracking::{FrontField, History, Segment};
use crate::waves::WaveParam;

/// Absolute tolerance on entropy residuals.
pub const TOL_H: f64 = 1e-10;

/// Entropy density `eta = -rho u S` and flux `q = -rho v S`.
pub fn entropy_pair(u: &GasState, g: &GasParams) -> (f64, f64) {
    let s = u.physical_entropy(g);
    (-u.rho * u.u * s, -u.rho * u.v * s)
}

/// `h = speed [eta] - [q]`, jumps taken above minus below.
pub fn entropy_residual(speed: f64, below: &GasState, above: &GasState, g: &GasParams) -> f64 {
    let (eb, qb) = entropy_pair(below, g);
    let (ea, qa) = entropy_pair(above, g);
    speed * (ea - eb) - (qa - qb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FrontClass {
    Shock,
    Contact,
    Rarefaction,
    NonPhysical,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyEntry {
    /// Front id, `u64::MAX` for the free boundary.
    pub id: u64,
    pub class: FrontClass,
    pub x_start: f64,
    pub strength: f64,
    pub h: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyReport {
    pub entries: Vec<EntropyEntry>,
    /// Bound used for rarefaction fronts, `C1 delta^2 + TOL_H`.
    pub rarefaction_bound: f64,
    pub max_rarefaction_h: f64,
    pub min_shock_h: f64,
    pub max_contact_h: f64,
    pub max_boundary_h: f64,
    /// Sum of `|h|` over non-physical fronts.
    pub np_h_total: f64,
    /// Bound for `np_h_total`: `(|lambda_hat| L_eta + L_q) T_NP` with local Lipschitz factors.
    pub np_bound: f64,
    pub all_passed: bool,
}

impl EntropyReport {
    pub fn count(&self, class: FrontClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &EntropyEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

fn classify(kind: &FrontKind) -> FrontClass {
    match kind {
        FrontKind::NonPhysical(_) => FrontClass::NonPhysical,
        FrontKind::Physical(WaveParam::Contact { .. }) => FrontClass::Contact,
        FrontKind::Physical(w) if w.is_shock() => FrontClass::Shock,
        FrontKind::Physical(_) => FrontClass::Rarefaction,
    }
}

/// Lipschitz factors of `eta` and `q` along the straight path between two states.
fn entropy_lipschitz(a: &GasState, b: &GasState, g: &GasParams) -> (f64, f64) {
    let d = a.distance(b);
    if d == 0.0 {
        return (0.0, 0.0);
    }
    let (ea, qa) = entropy_pair(a, g);
    let (eb, qb) = entropy_pair(b, g);
    ((ea - eb).abs() / d, (qa - qb).abs() / d)
}

/// Entropy residuals of every front segment of the run and of the free boundary.
pub fn entropy_residuals(field: &FrontField) -> EntropyReport {
    let g = field.params.gas;
    let delta = field.params.delta;
    let lambda_hat = field.params.lambda_hat;
    let c1 = field.params.weights.constants.c1;
    let history = field.history();
    let rarefaction_bound = c1 * delta * delta + TOL_H;

    let mut entries = Vec::with_capacity(history.segments.len() + history.boundary.len());
    let mut np_h_total = 0.0;
    let mut np_bound = 0.0;
    for s in &history.segments {
        let class = classify(&s.kind);
        let h = entropy_residual(s.speed, &s.below, &s.above, &g);
        let passed = match class {
            FrontClass::Shock => h >= -TOL_H,
            FrontClass::Contact => h.abs() <= TOL_H,
            FrontClass::Rarefaction => h <= rarefaction_bound,
            _ => h.is_finite(),
        };
        if class == FrontClass::NonPhysical {
            np_h_total += h.abs();
            let (le, lq) = entropy_lipschitz(&s.below, &s.above, &g);
            np_bound += (lambda_hat.abs() * le + lq) * s.kind.strength();
        }
        entries.push(EntropyEntry { id: s.id, class, x_start: s.x_start, strength: s.kind.strength(), h, passed });
    }
    for b in &history.boundary {
        let Some(ub) = boundary_state(&history, b.x_start, b.x_end) else { continue };
        let h = entropy_residual(b.slope, &history.static_state, &ub, &g);
        entries.push(EntropyEntry {
            id: u64::MAX,
            class: FrontClass::Boundary,
            x_start: b.x_start,
            strength: 0.0,
            h,
            passed: h.abs() <= TOL_H,
        });
    }

    let fold = |class: FrontClass, init: f64, f: fn(f64, f64) -> f64, map: fn(f64) -> f64| {
        entries.iter().filter(|e| e.class == class).map(|e| map(e.h)).fold(init, f)
    };
    let id = |h: f64| h;
    let abs = |h: f64| h.abs();
    let max_rarefaction_h = fold(FrontClass::Rarefaction, 0.0, f64::max, id);
    let min_shock_h = fold(FrontClass::Shock, f64::INFINITY, f64::min, id);
    let max_contact_h = fold(FrontClass::Contact, 0.0, f64::max, abs);
    let max_boundary_h = fold(FrontClass::Boundary, 0.0, f64::max, abs);
    let np_ok = np_h_total <= np_bound * (1.0 + 1e-9) + TOL_H;
    let all_passed = np_ok && entries.iter().all(|e| e.passed);
    EntropyReport {
        entries,
        rarefaction_bound,
        max_rarefaction_h,
        min_shock_h,
        max_contact_h,
        max_boundary_h,
        np_h_total,
        np_bound,
        all_passed,
    }
}

/// Segments alive at `x`, ordered bottom to top.
pub fn segments_at(history: &History, x: f64) -> Vec<&Segment> {
    let at_end = x >= history.x_end;
    let mut out: Vec<&Segment> = history
        .segments
        .iter()
        .filter(|s| s.x_start <= x && (x < s.x_end || (at_end && s.x_end >= history.x_end)))
        .collect();
    out.sort_by(|a, b| a.y_at(x).total_cmp(&b.y_at(x)).then(a.speed.total_cmp(&b.speed)));
    out
}

/// Boundary height and slope at `x`.
pub fn boundary_at(history: &History, x: f64) -> (f64, f64) {
    let k = history.boundary.partition_point(|b| b.x_end <= x).min(history.boundary.len() - 1);
    let b = &history.boundary[k];
    (b.y_at(x), b.slope)
}

fn boundary_state(history: &History, x0: f64, x1: f64) -> Option<GasState> {
    if !(x1 > x0) {
        return None;
    }
    let xm = 0.5 * (x0 + x1);
    segments_at(history, xm).first().map(|s| s.below)
}

/// A constant strip of the solution at a fixed `x`; `state == None` in the static gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip {
    pub y_low: f64,
    pub y_high: f64,
    pub state: Option<GasState>,
}

/// The solution at `x` as strips covering the whole line, static gas first.
pub fn strips_at(history: &History, x: f64) -> Vec<Strip> {
    let (gy, _) = boundary_at(history, x);
    let segs = segments_at(history, x);
    let mut out = vec![Strip { y_low: f64::NEG_INFINITY, y_high: gy, state: None }];
    let mut lo = gy;
    let mut state = segs.first().map(|s| s.below).unwrap_or_else(|| history.initial.state_at(f64::INFINITY));
    for s in segs {
        let y = s.y_at(x).max(lo);
        out.push(Strip { y_low: lo, y_high: y, state: Some(state) });
        lo = y;
        state = s.above;
    }
    out.push(Strip { y_low: lo, y_high: f64::INFINITY, state: Some(state) });
    out
}

/// `int |U_a(x, y) - U_b(x, y)| dy`, the static gas counted as the state at rest.
pub fn l1_distance(a: &History, b: &History, x: f64) -> f64 {
    let sa = strips_at(a, x);
    let sb = strips_at(b, x);
    let rest_a = a.static_state;
    let rest_b = b.static_state;
    let mut edges: Vec<f64> = sa.iter().chain(sb.iter()).map(|s| s.y_low).filter(|y| y.is_finite()).collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut total = 0.0;
    let (mut i, mut j) = (0, 0);
    for w in edges.windows(2) {
        let ym = 0.5 * (w[0] + w[1]);
        while sa[i].y_high <= ym {
            i += 1;
        }
        while sb[j].y_high <= ym {
            j += 1;
        }
        let ua = sa[i].state.unwrap_or(rest_a);
        let ub = sb[j].state.unwrap_or(rest_b);
        total += (w[1] - w[0]) * ua.distance(&ub);
    }
    total
}

/// `sup |g_a'(x) - g_b'(x)|` over `[0, x_max]`.
pub fn boundary_slope_distance(a: &History, b: &History, x_max: f64) -> f64 {
    let mut xs: Vec<f64> = a
        .boundary
        .iter()
        .chain(b.boundary.iter())
        .map(|s| s.x_start)
        .filter(|&x| x < x_max)
        .collect();
    xs.push(x_max);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2)
        .map(|w| {
            let xm = 0.5 * (w[0] + w[1]);
            (boundary_at(a, xm).1 - boundary_at(b, xm).1).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRow {
    pub delta_a: f64,
    pub delta_b: f64,
    /// One L1 distance per slice.
    pub l1: Vec<f64>,
    pub slope_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceTable {
    pub slices: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Rows comparing consecutive deltas.
    pub fn consecutive(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.delta_b < r.delta_a).scan(None, |prev: &mut Option<f64>, r| {
            let keep = prev.map_or(true, |p| p == r.delta_a);
            if keep {
                *prev = Some(r.delta_b);
            }
            Some((keep, r))
        }).filter_map(|(k, r)| k.then_some(r))
    }

    /// Whether the consecutive distances decrease at every slice.
    pub fn is_decreasing(&self) -> bool {
        let rows: Vec<_> = self.consecutive().collect();
        rows.windows(2).all(|w| w[0].l1.iter().zip(&w[1].l1).all(|(a, b)| b <= a))
    }
}

/// Pairwise distances between runs of the same setup at different `delta`.
/// `runs` holds `(delta, history)` sorted by decreasing delta.
pub fn convergence_study(runs: &[(f64, &History)], slices: &[f64]) -> ConvergenceTable {
    let x_max = slices.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let (da, ha) = runs[i];
            let (db, hb) = runs[j];
            rows.push(ConvergenceRow {
                delta_a: da,
                delta_b: db,
                l1: slices.iter().map(|&x| l1_distance(ha, hb, x)).collect(),
                slope_sup: boundary_slope_distance(ha, hb, x_max),
            });
        }
    }
    ConvergenceTable { slices: slices.to_vec(), rows }
}

/// Worst deviations in the four inequalities defining `D(U+, delta0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionMargins {
    /// Largest `|I + theta - (I + theta)_+|`, `|B - B_+|`, `|A - A_+|`.
    pub invariants: [f64; 3],
    /// Largest excursion of `p` outside `[p_bar, p_+]`, zero when inside.
    pub pressure: f64,
    pub states: usize,
    /// States outside `D(U+, delta0)` or where the invariants are undefined.
    pub violations: usize,
}

impl RegionMargins {
    pub fn inside(&self) -> bool {
        self.violations == 0
    }

    pub fn worst(&self) -> f64 {
        self.invariants.iter().copied().fold(self.pressure, f64::max)
    }
}

fn region_margins<'a>(
    states: impl Iterator<Item = &'a GasState>,
    u_plus: &GasState,
    delta0: f64,
    p_bar: f64,
    g: &GasParams,
) -> RegionMargins {
    let mut m = RegionMargins { invariants: [0.0; 3], pressure: 0.0, states: 0, violations: 0 };
    for u in states {
        m.states += 1;
        let excursion = (p_bar - u.p).max(u.p - u_plus.p).max(0.0);
        m.pressure = m.pressure.max(excursion);
        let bad_p = !(p_bar - delta0 < u.p && u.p < u_plus.p + delta0);
        match riemann_invariant_deviation(u, u_plus, g) {
            Ok(d) => {
                for k in 0..3 {
                    m.invariants[k] = m.invariants[k].max(d[k].abs());
                }
                if bad_p || d.iter().any(|x| !(x.abs() < delta0)) {
                    m.violations += 1;
                }
            }
            Err(_) => {
                m.invariants = [f64::INFINITY; 3];
                m.violations += 1;
            }
        }
    }
    m
}

/// Margins over every state of the current field.
pub fn check_invariant_region(field: &FrontField, u_plus: &GasState, delta0: f64, p_bar: f64) -> RegionMargins {
    let states: Vec<GasState> =
        field.slabs().iter().filter(|s| !s.is_static).map(|s| s.state).collect();
    region_margins(states.iter(), u_plus, delta0, p_bar, &field.params.gas)
}

/// Margins over every state the run produced on `[0, x]`.
pub fn check_invariant_region_history(
    history: &History,
    u_plus: &GasState,
    delta0: f64,
    p_bar: f64,
    g: &GasParams,
) -> RegionMargins {
    let states = history.segments.iter().flat_map(|s| [&s.below, &s.above]);
    region_margins(states, u_plus, delta0, p_bar, g)
}

/// Total strength of the non-physical fronts alive in the field.
pub fn np_total(field: &FrontField) -> f64 {
    np_total_strength(&field.fronts)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Smooth bump `exp(-1/(1-t^2))` on `(-1, 1)` and its derivative.
pub fn bump(t: f64) -> (f64, f64) {
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let s = 1.0 - t * t;
    let b = (-1.0 / s).exp();
    (b, -2.0 * t / (s * s) * b)
}

/// Tensor-product bump of half-width `r` centred at `(xc, yc)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFunction {
    pub xc: f64,
    pub yc: f64,
    pub r: f64,
}

impl TestFunction {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        bump((x - self.xc) / self.r).0 * bump((y - self.yc) / self.r).0
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (bx, dbx) = bump((x - self.xc) / self.r);
        let (by, dby) = bump((y - self.yc) / self.r);
        (dbx * by / self.r, bx * dby / self.r)
    }

    /// Sub-interval of `[x0, x1]` on which the line `y0 + s (x - x0)` meets the support.
    fn clip(&self, x0: f64, x1: f64, y0: f64, s: f64) -> Option<(f64, f64)> {
        let mut lo = x0.max(self.xc - self.r);
        let mut hi = x1.min(self.xc + self.r);
        let (ylo, yhi) = (self.yc - self.r, self.yc + self.r);
        if s == 0.0 {
            if !(ylo < y0 && y0 < yhi) {
                return None;
            }
        } else {
            let a = x0 + (ylo - y0) / s;
            let b = x0 + (yhi - y0) / s;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
        (hi > lo).then_some((lo, hi))
    }
}

/// Test functions on an `n x n` grid of centres over `[0, x_max] x [y_lo, y_hi]`,
/// one set per half-width.
pub fn test_grid(x_max: f64, y_lo: f64, y_hi: f64, n: usize, radii: &[f64]) -> Vec<TestFunction> {
    let mut out = Vec::with_capacity(n * n * radii.len());
    for &r in radii {
        for i in 0..n {
            for j in 0..n {
                let xc = x_max * (i as f64 + 0.5) / n as f64;
                let yc = y_lo + (y_hi - y_lo) * (j as f64 + 0.5) / n as f64;
                out.push(TestFunction { xc, yc, r });
            }
        }
    }
    out
}

fn line_integral(
    phi: &TestFunction,
    x0: f64,
    x1: f64,
    y0: f64,
    s: f64,
    jump: &[f64; 4],
    rule: &[(f64, f64)],
    acc: &mut [f64; 4],
) {
    let Some((a, b)) = phi.clip(x0, x1, y0, s) else { return };
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for &(t, w) in rule {
        let x = m + h * t;
        sum += w * phi.value(x, y0 + s * (x - x0));
    }
    for k in 0..4 {
        acc[k] += h * sum * jump[k];
    }
}

/// Jump `s [W] - [H]` across a line of slope `s`.
pub fn flux_jump(s: f64, below: &[f64; 4], below_h: &[f64; 4], above: &[f64; 4], above_h: &[f64; 4]) -> [f64; 4] {
    core::array::from_fn(|k| s * (above[k] - below[k]) - (above_h[k] - below_h[k]))
}

/// Weak-form residual of the run for one test function, as a vector over the
/// four conservation laws. The domain integral of a piecewise-constant field
/// reduces to line integrals over fronts; the free boundary contributes the
/// mismatch of `H - W g'` against the static gas.
pub fn weak_residual_one(history: &History, phi: &TestFunction, g: &GasParams, rule: &[(f64, f64)]) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for seg in &history.segments {
        let j = flux_jump(seg.speed, &seg.below.flux_w(g), &seg.below.flux_h(g), &seg.above.flux_w(g), &seg.above.flux_h(g));
        line_integral(phi, seg.x_start, seg.x_end, seg.y_start, seg.speed, &j, rule, &mut acc);
    }
    let rest_w = history.static_state.flux_w(g);
    let rest_h = history.static_state.flux_h(g);
    for b in &history.boundary {
        let Some(ub) = boundary_state(history, b.x_start, b.x_end) else { continue };
        let j = flux_jump(b.slope, &rest_w, &rest_h, &ub.flux_w(g), &ub.flux_h(g));
        line_integral(phi, b.x_start, b.x_end, b.y_start, b.slope, &j, rule, &mut acc);
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeakResidual {
    /// Max-norm residual per test function.
    pub per_function: Vec<f64>,
    pub max: f64,
}

/// Weak-form residual over a family of test functions, 32-point Gauss-Legendre.
pub fn weak_residual(history: &History, tests: &[TestFunction], g: &GasParams) -> WeakResidual {
    let rule = gauss_legendre(32);
    let per_function: Vec<f64> = tests
        .iter()
        .map(|phi| weak_residual_one(history, phi, g, &rule).iter().fold(0.0, |m, r| m.max(r.abs())))
        .collect();
    let max = per_function.iter().copied().fold(0.0, f64::max);
    WeakResidual { per_function, max }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glimm::{Constants, Weights};
    use crate::riemann::{slope_bounds, BackgroundSolution};
    use crate::tracking::{AuditPolicy, FrontField, InitialProfile, SchemeParams};
    use crate::waves::{nonlinear_forward, shock_forward, WaveStrengths};
    use crate::gas::Nonlinear;

    const G: GasParams = GasParams { gamma: 1.4, kappa: 1.0, c_v: 1.0 };
    const UP: GasState = GasState::new(2.0, 0.0, 1.0, 1.4);

    fn params(bg: &BackgroundSolution, delta: f64) -> SchemeParams {
        let w = Weights::from_constants(Constants::nominal(bg.s_bar));
        let sb = slope_bounds(bg, 0.05, 0.5, &G).unwrap();
        SchemeParams {
            gas: G,
            delta,
            mu_delta: 1e-8,
            lambda_hat: sb.lambda_hat,
            rho_bar: bg.u_minus.rho,
            weights: w,
            audit: AuditPolicy::Off,
            max_fronts: 10_000,
            max_interactions: 100_000,
        }
    }

    fn run(profile: &InitialProfile, bg: &BackgroundSolution, delta: f64, x: f64) -> FrontField {
        let mut f = FrontField::initialize(profile, bg, params(bg, delta), 1.0).unwrap();
        f.advance(x).unwrap();
        f
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(32);
        let w: f64 = rule.iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let x62: f64 = rule.iter().map(|&(x, w)| w * x.powi(62)).sum();
        assert!((x62 - 2.0 / 63.0).abs() < 1e-14);
        let x5: f64 = rule.iter().map(|&(x, w)| w * x.powi(5)).sum();
        assert!(x5.abs() < 1e-15);
    }

    #[test]
    fn entropy_signs_of_single_waves() {
        let s = 0.01;
        let (ur, speed) = shock_forward(&UP, Nonlinear::First, -s, &G).unwrap();
        assert!(entropy_residual(speed, &UP, &ur, &G) > 0.0);
        let uc = crate::waves::contact_forward(&UP, 0.01, 0.02);
        let sc = UP.v / UP.u;
        assert!(entropy_residual(sc, &UP, &uc, &G).abs() <= TOL_H);
        let mut hs = vec![];
        for d in [0.02, 0.01, 0.005] {
            let ur = nonlinear_forward(&UP, Nonlinear::Third, d, &G).unwrap();
            let sp = crate::waves::front_slope(&UP, &ur, WaveParam::Third(d), &G).unwrap();
            hs.push((d, entropy_residual(sp, &UP, &ur, &G).abs()));
        }
        assert!(log_log_slope(&hs) > 1.7, "{hs:?}");
    }

    #[test]
    fn background_residuals_classify() {
        let bg = BackgroundSolution::new(&UP, 0.5, &G).unwrap();
        let f = run(&InitialProfile::constant(UP), &bg, 0.02, 1.0);
        let rep = entropy_residuals(&f);
        assert!(rep.all_passed, "{:?}", rep.failures().next());
        assert_eq!(rep.count(FrontClass::Rarefaction), bg.fan_count(0.02));
        assert_eq!(rep.count(FrontClass::Boundary), 1);
        assert!(rep.max_boundary_h <= TOL_H);
    }

    #[test]
    fn background_margins_and_fan_granularity() {
        let bg = BackgroundSolution::new(&UP, 0.5, &G).unwrap();
        let f = run(&InitialProfile::constant(UP), &bg, 0.02, 1.0);
        let m = check_invariant_region(&f, &UP, 0.05, 0.5);
        assert!(m.inside());
        assert!(m.invariants[1] < 1e-10 && m.invariants[2] < 1e-10, "{m:?}");
        assert_eq!(m.pressure, 0.0);

        let doubled = GasState { rho: UP.rho * 2.0f64.powf(-1.0 / 1.4), ..UP };
        let bad = region_margins([doubled].iter(), &UP, 0.05, 0.5, &G);
        assert_eq!(bad.violations, 1);

        let mut dist = vec![];
        for d in [0.04, 0.02, 0.01] {
            let a = run(&InitialProfile::constant(UP), &bg, d, 1.0).history();
            let b = run(&InitialProfile::constant(UP), &bg, d / 2.0, 1.0).history();
            let l1 = l1_distance(&a, &b, 1.0);
            assert!(boundary_slope_distance(&a, &b, 1.0) < 1e-12);
            dist.push((d, l1));
        }
        let r0 = dist[0].1 / dist[0].0;
        assert!(dist.iter().all(|&(d, l1)| l1 / d > 0.5 * r0 && l1 / d < 2.0 * r0), "{dist:?}");
        let same = run(&InitialProfile::constant(UP), &bg, 0.02, 1.0).history();
        assert_eq!(l1_distance(&same, &same, 1.0), 0.0);
    }

    #[test]
    fn weak_residual_vanishes_on_background_away_from_fronts() {
        let bg = BackgroundSolution::new(&UP, 0.5, &G).unwrap();
        let h = run(&InitialProfile::constant(UP), &bg, 0.02, 2.0).history();
        let phi = TestFunction { xc: 1.0, yc: 5.0, r: 0.5 };
        let r = weak_residual(&h, &[phi], &G);
        assert_eq!(r.max, 0.0);
    }

    /// Domain integral of `W phi_x + H phi_y` for a single straight front, by
    /// tensored Gauss-Legendre on the two pieces of the support it cuts.
    fn polygon_oracle(phi: &TestFunction, y0: f64, s: f64, below: &GasState, above: &GasState) -> [f64; 4] {
        let base = gauss_legendre(32);
        let pieces = 8;
        let rule: Vec<(f64, f64)> = (0..pieces)
            .flat_map(|k| {
                let c = -1.0 + (2 * k + 1) as f64 / pieces as f64;
                base.iter().map(move |&(t, w)| (c + t / pieces as f64, w / pieces as f64))
            })
            .collect();
        let (wb, hb, wa, ha) = (below.flux_w(&G), below.flux_h(&G), above.flux_w(&G), above.flux_h(&G));
        let mut acc = [0.0; 4];
        let (x0, x1) = (phi.xc - phi.r, phi.xc + phi.r);
        let (ylo, yhi) = (phi.yc - phi.r, phi.yc + phi.r);
        let (mx, hx) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
        for &(tx, wx) in &rule {
            let x = mx + hx * tx;
            let yf = (y0 + s * x).clamp(ylo, yhi);
            for (a, b, w, hh) in [(ylo, yf, &wb, &hb), (yf, yhi, &wa, &ha)] {
                let (my, hy) = (0.5 * (a + b), 0.5 * (b - a));
                for &(ty, wy) in &rule {
                    let y = my + hy * ty;
                    let (px, py) = phi.gradient(x, y);
                    for k in 0..4 {
                        acc[k] += hx * wx * hy * wy * (w[k] * px + hh[k] * py);
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn weak_residual_matches_polygon_quadrature() {
        let phi = TestFunction { xc: 1.0, yc: 1.0, r: 0.5 };
        let rule = gauss_legendre(32);
        let (ur, speed) = shock_forward(&UP, Nonlinear::First, -0.05, &G).unwrap();
        let y0 = 1.0 - speed;
        let mk = |s: f64, above: GasState| History {
            x_end: 3.0,
            segments: vec![Segment {
                id: 0,
                kind: FrontKind::NonPhysical(0.0),
                is_strong: false,
                gen_order: 1,
                x_start: 0.0,
                x_end: 3.0,
                y_start: y0,
                speed: s,
                below: UP,
                above,
            }],
            boundary: vec![crate::tracking::BoundarySegment { x_start: 0.0, x_end: 3.0, y_start: -10.0, slope: 0.0 }],
            static_state: GasState::at_rest(0.5, 1.0),
            initial: InitialProfile::constant(UP),
        };
        let exact = weak_residual_one(&mk(speed, ur), &phi, &G, &rule);
        assert!(exact.iter().all(|r| r.abs() < 1e-12), "{exact:?}");

        // A wrong speed leaves a residual, and both evaluations agree on it.
        let wrong = speed + 0.05;
        let h = mk(wrong, ur);
        let line = weak_residual_one(&h, &phi, &G, &rule);
        let domain = polygon_oracle(&phi, y0, wrong, &UP, &ur);
        for k in 0..4 {
            assert!((line[k] - domain[k]).abs() < 1e-6 * line[k].abs().max(1e-3), "{k}: {line:?} vs {domain:?}");
        }
        assert!(line.iter().any(|r| r.abs() > 1e-4));
    }

    #[test]
    fn perturbed_run_residual_shrinks_with_delta() {
        let bg = BackgroundSolution::new(&UP, 0.95, &G).unwrap();
        let w = WaveStrengths { a1: 0.002, a21: 0.001, a22: -0.001, a3: -0.002 };
        let lower = crate::waves::composite_inverse(&UP, &w, &G).unwrap();
        let profile = InitialProfile { pieces: vec![(0.0, lower), (0.3, UP)] };
        let tests = test_grid(2.0, -0.2, 1.5, 5, &[0.2, 0.4]);
        let mut pts = vec![];
        let mut hist = vec![];
        for d in [0.02, 0.01, 0.005] {
            let f = run(&profile, &bg, d, 2.0);
            let h = f.history();
            pts.push((d, weak_residual(&h, &tests, &G).max));
            hist.push((d, h));
        }
        let slope = log_log_slope(&pts);
        assert!((slope - 1.0).abs() < 0.3, "{pts:?}");
        let runs: Vec<(f64, &History)> = hist.iter().map(|(d, h)| (*d, h)).collect();
        let t = convergence_study(&runs, &[1.0, 2.0]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.consecutive().count(), 2);
    }
}
