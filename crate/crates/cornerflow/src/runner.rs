//! Running scenarios and summarising runs.

use cornerflow_core::glimm::{np_total_strength, tv_estimates};
use cornerflow_core::tracking::{FrontField, InitialProfile, SchemeParams, Solver};
use cornerflow_core::validate::{
    check_invariant_region_history, entropy_residuals, test_grid, weak_residual, RegionMargins,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{check_gates, derive, Derived, Gate, Perturbation, ScenarioConfig};
use crate::scenario::build_profile;
use crate::CliError;

/// A gated scenario with its field at `x = 0+`.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub derived: Derived,
    pub profile: InitialProfile,
    pub field: FrontField,
}

pub fn scheme_params(cfg: &ScenarioConfig, d: &Derived) -> SchemeParams {
    SchemeParams {
        gas: cfg.gas(),
        delta: cfg.delta,
        mu_delta: d.mu_delta,
        lambda_hat: d.lambda_hat,
        rho_bar: d.rho_bar,
        weights: d.weights,
        audit: cfg.audit.into(),
        max_fronts: cfg.max_fronts,
        max_interactions: cfg.max_interactions,
    }
}

/// Derives the gates, builds the initial data and the field at `x = 0+`.
pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared, CliError> {
    let mut derived = derive(cfg)?;
    let profile = build_profile(cfg)?;
    let params = scheme_params(cfg, &derived);
    let field = FrontField::initialize(&profile, &derived.background, params, cfg.tv_limit)?;
    let f0 = field.snapshot().f;
    derived.gates.push(Gate {
        name: "F(0+) < delta*".into(),
        lhs: f0,
        rhs: derived.weights.delta_star,
        holds: f0 < derived.weights.delta_star,
        overridden: cfg.overrides.allow_large_functional,
    });
    check_gates(&derived.gates)?;
    Ok(Prepared { config: cfg.clone(), derived, profile, field })
}

/// Counts and extremes of a finished run. Contains no timings, so it is
/// identical between replays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub x_end: f64,
    pub delta: f64,
    pub mu_delta: f64,
    pub delta_star: f64,
    pub initial_tv: f64,
    pub interactions: usize,
    /// Interactions per case 1..=6.
    pub cases: [usize; 6],
    pub simplified: usize,
    pub fronts_initial: usize,
    pub fronts_final: usize,
    pub fronts_max: usize,
    pub audit_failures: usize,
    pub worst_excess: f64,
    pub f_initial: f64,
    pub f_final: f64,
    /// Largest increase of `F` between consecutive interactions.
    pub f_max_increase: f64,
    pub t_np: f64,
    /// `sup |g'(x) - k_b|` over the run.
    pub boundary_slope_deviation: f64,
    pub tv_pressure_deviation: f64,
    pub region: RegionMargins,
}

pub fn summarize(prepared: &Prepared, field: &FrontField) -> RunSummary {
    let d = &prepared.derived;
    let history = field.history();
    let mut cases = [0usize; 6];
    for e in &field.events {
        cases[(e.case as usize).clamp(1, 6) - 1] += 1;
    }
    let f_max_increase = field.trace.windows(2).map(|w| w[1].f - w[0].f).fold(f64::NEG_INFINITY, f64::max);
    let k_b = d.background.k_b;
    RunSummary {
        x_end: field.x,
        delta: field.params.delta,
        mu_delta: field.params.mu_delta,
        delta_star: d.weights.delta_star,
        initial_tv: prepared.profile.total_variation(),
        interactions: field.events.len(),
        cases,
        simplified: field.events.iter().filter(|e| e.solver == Solver::Simplified).count(),
        fronts_initial: prepared.field.fronts.len(),
        fronts_final: field.fronts.len(),
        fronts_max: field.max_front_count,
        audit_failures: field.events.iter().filter(|e| !e.audit_passed).count(),
        worst_excess: field.events.iter().map(|e| e.excess).fold(0.0, f64::max),
        f_initial: field.trace[0].f,
        f_final: field.snapshot().f,
        f_max_increase: if field.trace.len() > 1 { f_max_increase } else { 0.0 },
        t_np: np_total_strength(&field.fronts),
        boundary_slope_deviation: history.boundary.iter().map(|b| (b.slope - k_b).abs()).fold(0.0, f64::max),
        tv_pressure_deviation: tv_estimates(&field.fronts, &d.background).deviation,
        region: check_invariant_region_history(
            &history,
            &d.background.u_plus,
            prepared.config.delta0,
            prepared.config.p_bar,
            &field.params.gas,
        ),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: FrontField,
    pub summary: RunSummary,
}

/// Advances the prepared field to `x_max`.
pub fn run_prepared(prepared: &Prepared) -> Result<RunOutput, CliError> {
    let mut field = prepared.field.clone();
    field.advance(prepared.config.x_max)?;
    let summary = summarize(prepared, &field);
    Ok(RunOutput { field, summary })
}

pub fn run(cfg: &ScenarioConfig) -> Result<(Prepared, RunOutput), CliError> {
    let p = prepare(cfg)?;
    let out = run_prepared(&p)?;
    Ok((p, out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub entropy_passed: bool,
    pub shocks: usize,
    pub contacts: usize,
    pub rarefactions: usize,
    pub min_shock_h: f64,
    pub max_contact_h: f64,
    pub max_rarefaction_h: f64,
    pub rarefaction_bound: f64,
    pub max_boundary_h: f64,
    pub np_h_total: f64,
    pub np_bound: f64,
    pub weak_residual: f64,
    pub region: RegionMargins,
}

/// Entropy classification, weak residual on a 5x5 grid at two scales, and region margins.
pub fn validate_run(out: &RunOutput) -> ValidationReport {
    use cornerflow_core::validate::FrontClass;
    let field = &out.field;
    let rep = entropy_residuals(field);
    let history = field.history();
    let (y_lo, y_hi) = history
        .segments
        .iter()
        .flat_map(|s| [s.y_at(s.x_start), s.y_at(s.x_end)])
        .fold((0.0f64, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
    let span = (y_hi - y_lo).max(1.0);
    let tests = test_grid(field.x, y_lo, y_hi, 5, &[0.1 * span, 0.25 * span]);
    let weak = weak_residual(&history, &tests, &field.params.gas);
    ValidationReport {
        entropy_passed: rep.all_passed,
        shocks: rep.count(FrontClass::Shock),
        contacts: rep.count(FrontClass::Contact),
        rarefactions: rep.count(FrontClass::Rarefaction),
        min_shock_h: rep.min_shock_h,
        max_contact_h: rep.max_contact_h,
        max_rarefaction_h: rep.max_rarefaction_h,
        rarefaction_bound: rep.rarefaction_bound,
        max_boundary_h: rep.max_boundary_h,
        np_h_total: rep.np_h_total,
        np_bound: rep.np_bound,
        weak_residual: weak.max,
        region: out.summary.region,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub outcome: String,
    pub summary: Option<RunSummary>,
}

fn with_epsilon(p: &Perturbation, eps: f64) -> Perturbation {
    match p.clone() {
        Perturbation::StepTrain { jumps, y_min, y_max, .. } => Perturbation::StepTrain { epsilon: eps, jumps, y_min, y_max },
        Perturbation::SingleBump { center, width, pieces, .. } => {
            Perturbation::SingleBump { epsilon: eps, center, width, pieces }
        }
        other => other,
    }
}

/// Independent runs over the product of deltas, epsilons and seeds, in parallel.
pub fn sweep(base: &ScenarioConfig, deltas: &[f64], epsilons: &[f64], seeds: &[u64]) -> Vec<SweepRow> {
    let mut jobs = Vec::new();
    for &d in deltas {
        for &e in epsilons {
            for &s in seeds {
                jobs.push((d, e, s));
            }
        }
    }
    jobs.par_iter()
        .map(|&(delta, epsilon, seed)| {
            let mut cfg = base.clone();
            cfg.delta = delta;
            cfg.seed = seed;
            cfg.perturbation = with_epsilon(&base.perturbation, epsilon);
            match run(&cfg) {
                Ok((_, out)) => SweepRow { delta, epsilon, seed, outcome: "ok".into(), summary: Some(out.summary) },
                Err(e) => SweepRow { delta, epsilon, seed, outcome: e.to_string(), summary: None },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConstantsChoice;

    fn mild() -> ScenarioConfig {
        let mut c = ScenarioConfig::minimal(1.4, [2.0, 0.0, 1.0, 1.4], 0.95, 0.02);
        c.overrides.constants = ConstantsChoice::Nominal;
        c.overrides.allow_large_delta = true;
        c.overrides.allow_large_functional = true;
        c.perturbation = Perturbation::StepTrain { epsilon: 1e-3, jumps: 4, y_min: 0.05, y_max: 1.0 };
        c.x_max = 3.0;
        c
    }

    #[test]
    fn functional_gate_is_checked_after_initialization() {
        let mut c = mild();
        c.overrides.allow_large_functional = false;
        match prepare(&c) {
            Err(CliError::Gate(m)) => assert!(m.starts_with("F(0+) < delta*"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replay_is_identical() {
        let (_, a) = run(&mild()).unwrap();
        let (_, b) = run(&mild()).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.field.events, b.field.events);
        assert!(a.summary.interactions > 0);
    }

    #[test]
    fn sweep_runs_every_combination() {
        let rows = sweep(&mild(), &[0.02, 0.01], &[1e-3], &[1, 2]);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.outcome == "ok"), "{rows:?}");
    }
}
