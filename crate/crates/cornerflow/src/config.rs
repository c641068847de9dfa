//! Scenario configuration, its defaults and the load-time gates.

use std::path::Path;

use cornerflow_core::glimm::{estimate_constants, Constants, Weights};
use cornerflow_core::riemann::{p_star, slope_bounds, BackgroundSolution, SlopeBounds};
use cornerflow_core::tracking::{mu_delta, AuditPolicy};
use cornerflow_core::{GasParams, GasState};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Shape of the initial perturbation of `U+` on `y >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// No perturbation, the background problem.
    None,
    /// `jumps` steps at seeded heights in `(y_min, y_max)`, each a random
    /// composite wave; scaled so the total variation equals `epsilon`.
    StepTrain {
        epsilon: f64,
        #[serde(default = "default_jumps")]
        jumps: usize,
        #[serde(default = "default_y_min")]
        y_min: f64,
        #[serde(default = "default_y_max")]
        y_max: f64,
    },
    /// A smooth bump of total variation `epsilon` along a fixed composite
    /// direction, sampled into `pieces` constant steps.
    SingleBump {
        epsilon: f64,
        center: f64,
        width: f64,
        #[serde(default = "default_pieces")]
        pieces: usize,
    },
    /// Explicit steps `[y, u, v, p, rho]`; the first starts at 0 and the last equals `U+`.
    Table { rows: Vec<[f64; 5]> },
}

fn default_jumps() -> usize {
    6
}
fn default_y_min() -> f64 {
    0.05
}
fn default_y_max() -> f64 {
    1.0
}
fn default_pieces() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Audit {
    Off,
    #[default]
    Warn,
    Strict,
}

impl From<Audit> for AuditPolicy {
    fn from(a: Audit) -> Self {
        match a {
            Audit::Off => AuditPolicy::Off,
            Audit::Warn => AuditPolicy::Warn,
            Audit::Strict => AuditPolicy::Strict,
        }
    }
}

/// Where the constants of the functional come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsChoice {
    /// Sampled from the background with the fixed estimator seed.
    #[default]
    Estimated,
    /// Unit constants with `C0 = 1.25 S_bar`.
    Nominal,
    Explicit(Constants),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default)]
    pub constants: ConstantsChoice,
    /// Replaces the recipe threshold.
    pub mu_delta: Option<f64>,
    pub lambda_hat: Option<f64>,
    /// Skip the `delta < delta*` gate.
    #[serde(default)]
    pub allow_large_delta: bool,
    /// Skip the `F(0+) < delta*` gate.
    #[serde(default)]
    pub allow_large_functional: bool,
}

/// A complete scenario. Only `u_plus`, `p_bar` and `delta` are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// `(u, v, p, rho)` of the upstream state; `v` must be 0.
    pub u_plus: [f64; 4],
    pub p_bar: f64,
    pub delta: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    /// Density of the static gas, defaults to the density of `U-`.
    pub rho_bar: Option<f64>,
    #[serde(default = "default_perturbation")]
    pub perturbation: Perturbation,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub audit: Audit,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default = "default_samples")]
    pub estimator_samples: usize,
    #[serde(default = "default_max_fronts")]
    pub max_fronts: usize,
    #[serde(default = "default_max_interactions")]
    pub max_interactions: usize,
    /// Upper bound on the total variation of the initial data.
    #[serde(default = "default_tv_limit")]
    pub tv_limit: f64,
}

fn default_gamma() -> f64 {
    1.4
}
fn default_delta0() -> f64 {
    0.05
}
fn default_perturbation() -> Perturbation {
    Perturbation::None
}
fn default_x_max() -> f64 {
    10.0
}
fn default_samples() -> usize {
    400
}
fn default_max_fronts() -> usize {
    20_000
}
fn default_max_interactions() -> usize {
    2_000_000
}
fn default_tv_limit() -> f64 {
    0.1
}

impl ScenarioConfig {
    /// The config with every optional field at its default.
    pub fn minimal(gamma: f64, u_plus: [f64; 4], p_bar: f64, delta: f64) -> Self {
        Self {
            gamma,
            u_plus,
            p_bar,
            delta,
            delta0: default_delta0(),
            rho_bar: None,
            perturbation: default_perturbation(),
            x_max: default_x_max(),
            seed: 0,
            audit: Audit::default(),
            overrides: Overrides::default(),
            estimator_samples: default_samples(),
            max_fronts: default_max_fronts(),
            max_interactions: default_max_interactions(),
            tv_limit: default_tv_limit(),
        }
    }

    pub fn gas(&self) -> GasParams {
        GasParams::new(self.gamma)
    }

    pub fn upstream(&self) -> GasState {
        GasState::from_array(self.u_plus)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses TOML, or JSON when the text starts with `{`.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }
}

/// Reads, parses and gates a config file.
pub fn load_config(path: &Path) -> Result<(ScenarioConfig, Derived), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    let derived = derive(&cfg)?;
    Ok((cfg, derived))
}

/// One evaluated load-time condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub overridden: bool,
}

/// Quantities computed from the config before a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub background: BackgroundSolution,
    pub p_star: f64,
    pub constants: Constants,
    pub weights: Weights,
    pub slopes: SlopeBounds,
    pub lambda_hat: f64,
    pub mu_delta: f64,
    pub rho_bar: f64,
    pub gates: Vec<Gate>,
}

fn gate(name: &str, lhs: f64, rhs: f64, overridden: bool) -> Gate {
    Gate { name: name.into(), lhs, rhs, holds: lhs < rhs, overridden }
}

/// Fails on the first gate that does not hold and is not overridden.
pub fn check_gates(gates: &[Gate]) -> Result<(), CliError> {
    match gates.iter().find(|g| !g.holds && !g.overridden) {
        Some(g) => Err(CliError::Gate(format!("{} ({} vs {})", g.name, g.lhs, g.rhs))),
        None => Ok(()),
    }
}

/// Threshold from the recipe with the given weights, capped at `delta^2`.
pub fn recipe_mu_delta(delta: f64, c: &Constants, w: &Weights) -> Result<f64, CliError> {
    let ds = w.delta_star.min(0.99 / c.c2);
    Ok(mu_delta(delta, c.c1, c.c2, ds, delta * delta)?)
}

/// Computes the background, constants, thresholds and the config gates.
pub fn derive(cfg: &ScenarioConfig) -> Result<Derived, CliError> {
    let g = cfg.gas();
    let up = cfg.upstream();
    if !(cfg.gamma > 1.0) || !up.is_valid() || up.v != 0.0 || !(cfg.delta > 0.0) || !(cfg.delta0 > 0.0) {
        return Err(CliError::Gate("gamma > 1, U+ valid with v+ = 0, delta > 0, delta0 > 0".into()));
    }
    if !up.is_supersonic(&g) {
        return Err(CliError::Gate("u+ > c+".into()));
    }
    let ps = p_star(&up, &g)?;
    let mut gates = vec![gate("p* < p_bar", ps, cfg.p_bar, false), gate("p_bar < p+", cfg.p_bar, up.p, false)];
    check_gates(&gates)?;
    let background = BackgroundSolution::new(&up, cfg.p_bar, &g)?;
    let constants = match cfg.overrides.constants {
        ConstantsChoice::Estimated => estimate_constants(&up, cfg.p_bar, cfg.delta0, cfg.estimator_samples, &g)?,
        ConstantsChoice::Nominal => Constants::nominal(background.s_bar),
        ConstantsChoice::Explicit(c) => c,
    };
    let weights = Weights::from_constants(constants);
    gates.push(gate("delta < delta*", cfg.delta, weights.delta_star, cfg.overrides.allow_large_delta));
    check_gates(&gates)?;
    let slopes = slope_bounds(&background, cfg.delta0, 0.5, &g)?;
    let lambda_hat = cfg.overrides.lambda_hat.unwrap_or(slopes.lambda_hat);
    let mu_delta = match cfg.overrides.mu_delta {
        Some(m) => m,
        None => recipe_mu_delta(cfg.delta, &constants, &weights)?,
    };
    let rho_bar = cfg.rho_bar.unwrap_or(background.u_minus.rho);
    Ok(Derived { background, p_star: ps, constants, weights, slopes, lambda_hat, mu_delta, rho_bar, gates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_fills_defaults() {
        let cfg = parse_config("u_plus = [2.0, 0.0, 1.0, 1.4]\np_bar = 0.95\ndelta = 0.01\n").unwrap();
        assert_eq!(cfg, ScenarioConfig::minimal(1.4, [2.0, 0.0, 1.0, 1.4], 0.95, 0.01));
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&json).unwrap(), cfg);
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn perturbation_shapes_parse() {
        let text = "u_plus = [2.0, 0.0, 1.0, 1.4]\np_bar = 0.95\ndelta = 0.01\n\
                    [perturbation]\nshape = \"step_train\"\nepsilon = 0.003\n";
        let cfg = parse_config(text).unwrap();
        assert!(matches!(cfg.perturbation, Perturbation::StepTrain { jumps: 6, .. }));
        assert!(parse_config("u_plus = [2.0, 0.0, 1.0, 1.4]\np_bar = 0.9\ndelta = 0.1\ncolour = 1\n").is_err());
    }

    #[test]
    fn gates_name_the_failed_inequality() {
        let mut cfg = ScenarioConfig::minimal(1.4, [2.0, 0.0, 1.0, 1.4], 1.2, 0.01);
        match derive(&cfg) {
            Err(CliError::Gate(m)) => assert!(m.starts_with("p_bar < p+"), "{m}"),
            other => panic!("{other:?}"),
        }
        cfg.p_bar = 0.5 * p_star(&cfg.upstream(), &cfg.gas()).unwrap();
        match derive(&cfg) {
            Err(CliError::Gate(m)) => assert!(m.starts_with("p* < p_bar"), "{m}"),
            other => panic!("{other:?}"),
        }
        cfg.p_bar = 0.95;
        cfg.overrides.constants = ConstantsChoice::Nominal;
        match derive(&cfg) {
            Err(CliError::Gate(m)) => assert!(m.starts_with("delta < delta*"), "{m}"),
            other => panic!("{other:?}"),
        }
        cfg.overrides.allow_large_delta = true;
        let d = derive(&cfg).unwrap();
        assert!(d.gates.iter().any(|g| g.name == "delta < delta*" && !g.holds && g.overridden));
        assert!(d.mu_delta > 0.0 && d.mu_delta <= cfg.delta * cfg.delta);
        assert_eq!(d.rho_bar, d.background.u_minus.rho);
    }
}
