//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cornerflow::config::{ConstantsChoice, Perturbation, ScenarioConfig};
use cornerflow::export::{render_diagram, snapshot_rows, write_events, write_glimm_trace, write_snapshot};
use cornerflow::runner::{run, validate_run, RunOutput};
use cornerflow_core::gas::{eigenvalues, family_invariants, Nonlinear};
use cornerflow_core::riemann::{kb1_linear, solve_boundary_riemann, solve_riemann, BackgroundSolution};
use cornerflow_core::validate::{check_invariant_region_history, entropy_residuals, log_log_slope};
use cornerflow_core::waves::{composite_forward, integral_curve, nonlinear_forward, shock_forward, WaveStrengths};
use cornerflow_core::{GasParams, GasState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const GAMMA: f64 = 1.4;
const U_PLUS: [f64; 4] = [2.0, 0.0, 1.0, 1.4];
const MILD_P_BAR: f64 = 0.95;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_supersonic(rng: &mut ChaCha8Rng) -> GasState {
    let mach = rng.random_range(1.3..3.0);
    let theta: f64 = rng.random_range(-0.3..0.3);
    let p = rng.random_range(0.3..2.0);
    let rho = rng.random_range(0.5..2.0);
    let q = mach * (GAMMA * p / rho).sqrt();
    GasState::new(q * theta.cos(), q * theta.sin(), p, rho)
}

/// Perturbed run on the mild background with unit constants.
fn mild(delta: f64, eps: f64, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::minimal(GAMMA, U_PLUS, MILD_P_BAR, delta);
    c.overrides.constants = ConstantsChoice::Nominal;
    c.overrides.allow_large_delta = true;
    c.overrides.allow_large_functional = true;
    c.perturbation = Perturbation::StepTrain { epsilon: eps, jumps: 6, y_min: 0.05, y_max: 1.0 };
    c.x_max = 10.0;
    c.seed = seed;
    c
}

fn prandtl_meyer(m: f64, g: f64) -> f64 {
    let a = ((g + 1.0) / (g - 1.0)).sqrt();
    a * ((m * m - 1.0).sqrt() / a).atan() - (m * m - 1.0).sqrt().atan()
}

fn background_exactness() -> Outcome {
    let g = GasParams::new(GAMMA);
    let up = GasState::from_array(U_PLUS);
    let p_bar = 0.5;
    let start = Instant::now();
    let bg = match BackgroundSolution::new(&up, p_bar, &g) {
        Ok(b) => b,
        Err(e) => return outcome(false, format!("background failed: {e}")),
    };
    let mut self_sim = 0.0f64;
    for k in 0..20 {
        let xi = bg.k2 + bg.s_bar * (k as f64 + 0.5) / 20.0;
        let s = bg.fan_state(xi, &g).unwrap();
        self_sim = self_sim.max((eigenvalues(&s, &g).unwrap()[2] - xi).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();

    // Isentropic expansion at constant total enthalpy, turned by the Prandtl-Meyer function.
    let c2p = GAMMA * up.p / up.rho;
    let h0 = 0.5 * (up.u * up.u + up.v * up.v) + c2p / (GAMMA - 1.0);
    let rho_m = up.rho * (p_bar / up.p).powf(1.0 / GAMMA);
    let c2m = GAMMA * p_bar / rho_m;
    let q_m = (2.0 * (h0 - c2m / (GAMMA - 1.0))).sqrt();
    let m_plus = (2.0 * (h0 - c2p / (GAMMA - 1.0))).sqrt() / c2p.sqrt();
    let oracle = prandtl_meyer(q_m / c2m.sqrt(), GAMMA) - prandtl_meyer(m_plus, GAMMA);
    let rel = (bg.theta_minus.abs() - oracle.abs()).abs() / oracle.abs();

    outcome(
        rel <= 1e-8 && self_sim <= 1e-8 && elapsed < 1.0,
        format!(
            "|theta-| = {:.12} oracle {:.12} rel err {rel:.2e}; max |lambda3 - xi| over 20 points {self_sim:.2e}; {elapsed:.3} s",
            bg.theta_minus.abs(),
            oracle.abs()
        ),
    )
}

fn riemann_round_trips() -> Outcome {
    let g = GasParams::new(GAMMA);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut solved, mut worst, mut worst_p, mut min_kb1) = (0usize, 0.0f64, 0.0f64, f64::INFINITY);
    let mut failures = 0usize;
    while solved < 1000 {
        let ul = random_supersonic(&mut rng);
        let a = WaveStrengths::from_array(std::array::from_fn(|_| rng.random_range(-0.1..0.1)));
        let Ok(states) = composite_forward(&ul, &a, &g) else { continue };
        let ur = states[2];
        if !ur.is_supersonic(&g) {
            continue;
        }
        solved += 1;
        match solve_riemann(&ul, &ur, &g) {
            Ok(sol) => {
                let err = sol.strengths.to_array().iter().zip(a.to_array()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                worst = worst.max(err);
            }
            Err(_) => failures += 1,
        }
        let p_bar = rng.random_range(0.4..0.99) * ur.p;
        match solve_boundary_riemann(&ur, p_bar, &g) {
            Ok(b) => {
                worst_p = worst_p.max((b.u_m.p - p_bar).abs());
                min_kb1 = min_kb1.min(kb1_linear(&b.u_m, &g).unwrap_or(f64::NEG_INFINITY));
            }
            Err(_) => failures += 1,
        }
        min_kb1 = min_kb1.min(kb1_linear(&ul, &g).unwrap_or(f64::NEG_INFINITY));
    }
    outcome(
        failures == 0 && worst <= 1e-7 && worst_p <= 1e-10 && min_kb1 > 0.0,
        format!(
            "{solved} problems, {failures} solver failures; max strength error {worst:.2e}; max |p - p_bar| {worst_p:.2e}; min K_b1 {min_kb1:.4}"
        ),
    )
}

/// Limit of a sequence sampled at halving steps, eliminating errors of order 1, 2, ...
fn richardson(mut t: Vec<f64>) -> f64 {
    let mut scale = 2.0;
    while t.len() > 1 {
        t = t.windows(2).map(|w| (scale * w[1] - w[0]) / (scale - 1.0)).collect();
        scale *= 2.0;
    }
    t[0]
}

fn wave_curve_oracles() -> Outcome {
    let g = GasParams::new(GAMMA);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut drift = 0.0f64;
    let mut min_order = f64::INFINITY;
    for k in 0..200 {
        let u = random_supersonic(&mut rng);
        let fam = if k % 2 == 0 { Nonlinear::Third } else { Nonlinear::First };
        let alpha = rng.random_range(0.01..0.2);
        let Ok(ur) = nonlinear_forward(&u, fam, alpha, &g) else { continue };
        let (i0, i1) = (family_invariants(&u, fam, &g).unwrap(), family_invariants(&ur, fam, &g).unwrap());
        for j in 0..3 {
            drift = drift.max((i0[j] - i1[j]).abs() / alpha);
        }
        if k < 40 {
            let gap = |a: f64| -> Option<f64> {
                let s = shock_forward(&u, fam, a, &g).ok()?.0;
                let r = integral_curve(&u, fam, a, &g).ok()?;
                Some(s.distance(&r))
            };
            // Halvings of alpha; the order sequence is extrapolated to alpha -> 0.
            let alphas = [0.08, 0.04, 0.02, 0.01, 0.005];
            let gaps: Option<Vec<f64>> = alphas.iter().map(|&a| gap(-a)).collect();
            if let Some(gaps) = gaps {
                let orders: Vec<f64> = gaps.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
                min_order = min_order.min(richardson(orders));
            }
        }
    }
    outcome(
        drift <= 1e-9 && min_order >= 3.0,
        format!("max invariant drift per unit parameter {drift:.2e}; min extrapolated branch-mismatch order {min_order:.6}"),
    )
}

struct Sample {
    delta: f64,
    eps: f64,
    seed: u64,
    seconds: f64,
    out: Result<RunOutput, String>,
}

fn randomized_runs(mu_delta: Option<f64>) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws: Vec<(f64, u64)> = (0..50).map(|k| (rng.random_range(1e-3..=1e-2), k as u64 + 1)).collect();
    let jobs: Vec<(f64, f64, u64)> =
        [0.02, 0.01].iter().flat_map(|&d| draws.iter().map(move |&(e, s)| (d, e, s))).collect();
    jobs.par_iter()
        .map(|&(delta, eps, seed)| {
            let mut cfg = mild(delta, eps, seed);
            cfg.overrides.mu_delta = mu_delta;
            let start = Instant::now();
            let out = run(&cfg).map(|(_, o)| o).map_err(|e| e.to_string());
            Sample { delta, eps, seed, seconds: start.elapsed().as_secs_f64(), out }
        })
        .collect()
}

fn glimm_monotonicity(runs: &[Sample]) -> Outcome {
    let (mut violations, mut nonmonotone, mut errors, mut events) = (0usize, 0usize, 0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    let mut slowest = 0.0f64;
    for r in runs {
        slowest = slowest.max(r.seconds);
        let Ok(out) = &r.out else {
            errors += 1;
            continue;
        };
        let (trace, ev) = (&out.field.trace, &out.field.events);
        for (k, e) in ev.iter().enumerate() {
            events += 1;
            let (before, after) = (trace[k].f, trace[k + 1].f);
            let excess = (after - before) - (-0.25 * e.e_delta + 1e-12 * before.max(1.0));
            worst = worst.max(excess);
            if excess > 0.0 {
                violations += 1;
            }
        }
        if trace.windows(2).any(|w| w[1].f > w[0].f + 1e-12 * w[0].f.max(1.0)) {
            nonmonotone += 1;
        }
    }
    outcome(
        errors == 0 && violations == 0 && nonmonotone == 0 && slowest < 60.0,
        format!(
            "{} runs, {errors} errors, {events} interactions, {violations} violate dF <= -E/4 (worst excess {worst:.2e}), {nonmonotone} runs with F increasing; slowest run {slowest:.2} s",
            runs.len()
        ),
    )
}

fn np_bound(runs: &[Sample], control: &[Sample]) -> Outcome {
    let ratio = |rs: &[Sample]| -> (usize, usize, f64) {
        let mut over = 0;
        let mut ok = 0;
        let mut worst = 0.0f64;
        for r in rs {
            if let Ok(o) = &r.out {
                ok += 1;
                let q = o.summary.t_np / r.delta;
                worst = worst.max(q);
                if q > 1.0 {
                    over += 1;
                }
            }
        }
        (ok, over, worst)
    };
    let (ok, over, worst) = ratio(runs);
    let (c_ok, c_over, c_worst) = ratio(control);
    outcome(
        ok == runs.len() && over == 0,
        format!(
            "recipe mu_delta: {over}/{ok} runs with T_NP > delta, max T_NP/delta {worst:.3e}; control mu_delta = 1: {c_over}/{c_ok} over, max T_NP/delta {c_worst:.3e}"
        ),
    )
}

fn entropy_consistency(runs: &[Sample]) -> Outcome {
    let mut fronts = 0usize;
    let mut failed = 0usize;
    let (mut min_shock, mut max_contact) = (f64::INFINITY, 0.0f64);
    for r in runs {
        if let Ok(o) = &r.out {
            let rep = entropy_residuals(&o.field);
            fronts += rep.entries.len();
            failed += rep.failures().count();
            min_shock = min_shock.min(rep.min_shock_h);
            max_contact = max_contact.max(rep.max_contact_h);
        }
    }

    let mut raref = Vec::new();
    for delta in [0.05, 0.02, 0.01, 0.005] {
        let mut cfg = ScenarioConfig::minimal(GAMMA, U_PLUS, 0.5, delta);
        cfg.overrides.constants = ConstantsChoice::Nominal;
        cfg.overrides.allow_large_delta = true;
        cfg.overrides.allow_large_functional = true;
        cfg.x_max = 1.0;
        if let Ok((_, o)) = run(&cfg) {
            raref.push((delta, entropy_residuals(&o.field).max_rarefaction_h.abs()));
        }
    }
    let raref_order = if raref.len() == 4 { log_log_slope(&raref) } else { f64::NAN };

    let mut weak = Vec::new();
    for delta in [0.02, 0.01, 0.005, 0.002] {
        let mut cfg = mild(delta, 3e-3, 7);
        cfg.x_max = 3.0;
        if let Ok((_, o)) = run(&cfg) {
            weak.push((delta, validate_run(&o).weak_residual));
        }
    }
    let weak_slope = if weak.len() == 4 { log_log_slope(&weak) } else { f64::NAN };

    outcome(
        failed == 0 && raref_order >= 1.7 && (weak_slope - 1.0).abs() <= 0.3,
        format!(
            "{fronts} front pieces, {failed} misclassified (min shock h {min_shock:.2e}, max |contact h| {max_contact:.2e}); rarefaction h order {raref_order:.3} over delta 0.05..0.005; weak residual slope {weak_slope:.3} over delta 0.02..0.002"
        ),
    )
}

fn stability_estimates() -> Outcome {
    let epsilons = [1e-3, 3e-3, 1e-2];
    let seeds = [21u64, 22, 23, 24, 25];
    let jobs: Vec<(f64, u64)> = epsilons.iter().flat_map(|&e| seeds.iter().map(move |&s| (e, s))).collect();
    let runs: Vec<(f64, Result<RunOutput, String>)> = jobs
        .par_iter()
        .map(|&(e, s)| (e, run(&mild(0.01, e, s)).map(|(_, o)| o).map_err(|e| e.to_string())))
        .collect();
    if runs.iter().any(|r| r.1.is_err()) {
        return outcome(false, "a stability run failed".into());
    }
    let mut m0 = [0.0f64; 3];
    let mut m1 = [0.0f64; 3];
    for (e, r) in &runs {
        let s = &r.as_ref().unwrap().summary;
        let k = epsilons.iter().position(|x| x == e).unwrap();
        m0[k] = m0[k].max(s.boundary_slope_deviation / e);
        m1[k] = m1[k].max(s.tv_pressure_deviation.max(s.region.worst()) / e);
    }
    let spread = |m: &[f64; 3]| m.iter().cloned().fold(0.0, f64::max) / m.iter().cloned().fold(f64::INFINITY, f64::min);
    let m1_fit = m1.iter().cloned().fold(0.0, f64::max);
    let g = GasParams::new(GAMMA);
    let up = GasState::from_array(U_PLUS);
    let mut outside = 0usize;
    for (e, r) in &runs {
        // D is open; the closure is taken so the extremal state itself counts as inside.
        let radius = m1_fit * e * (1.0 + 1e-9);
        outside += check_invariant_region_history(&r.as_ref().unwrap().field.history(), &up, radius, MILD_P_BAR, &g).violations;
    }
    outcome(
        spread(&m0) <= 2.0 && spread(&m1) <= 2.0 && outside == 0,
        format!(
            "M0 per epsilon {:.4?} (spread {:.3}); M1 per epsilon {:.4?} (spread {:.3}); {outside} states outside D(U+, M1 eps)",
            m0,
            spread(&m0),
            m1,
            spread(&m1)
        ),
    )
}

fn artifacts(out: &RunOutput) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_snapshot(&snapshot_rows(&out.field), &mut bytes).unwrap();
    write_events(&out.field.events, &mut bytes).unwrap();
    write_glimm_trace(&out.field.trace, &mut bytes).unwrap();
    bytes.extend(render_diagram(&out.field.history()).into_bytes());
    bytes.extend(serde_json::to_vec(&out.summary).unwrap());
    bytes
}

fn finiteness(runs: &[Sample]) -> Outcome {
    let mut reached = 0usize;
    let (mut fronts, mut interactions) = (0usize, 0usize);
    for r in runs {
        if let Ok(o) = &r.out {
            if o.summary.x_end >= 10.0 {
                reached += 1;
            }
            fronts = fronts.max(o.summary.fronts_max);
            interactions = interactions.max(o.summary.interactions);
        }
    }
    let replay = runs.iter().take(4).all(|r| {
        let cfg = mild(r.delta, r.eps, r.seed);
        let a = run(&cfg).map(|(_, o)| artifacts(&o));
        let b = run(&cfg).map(|(_, o)| artifacts(&o));
        matches!((a, b), (Ok(x), Ok(y)) if x == y)
    });
    let cfg = mild(0.02, 1e-3, 1);
    outcome(
        reached == runs.len() && fronts < cfg.max_fronts && interactions < cfg.max_interactions && replay,
        format!(
            "{reached}/{} runs reached x = 10; max fronts {fronts}, max interactions {interactions}; replay byte-identical: {replay}",
            runs.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 background exactness", background_exactness()));
    results.push(("2 riemann round trips", riemann_round_trips()));
    results.push(("3 wave-curve oracles", wave_curve_oracles()));
    let runs = randomized_runs(None);
    let control = randomized_runs(Some(1.0));
    results.push(("4 glimm monotonicity", glimm_monotonicity(&runs)));
    results.push(("5 non-physical bound", np_bound(&runs, &control)));
    results.push(("6 entropy consistency", entropy_consistency(&runs)));
    results.push(("7 stability estimates", stability_estimates()));
    results.push(("8 finiteness", finiteness(&runs)));

    let mut all = true;
    for (name, o) in &results {
        all &= o.passed;
        println!("criterion {name}: {} | {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
