//! Built-in initial profiles.

use cornerflow_core::tracking::InitialProfile;
use cornerflow_core::validate::bump;
use cornerflow_core::waves::{composite_inverse, WaveStrengths};
use cornerflow_core::{GasParams, GasState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Perturbation, ScenarioConfig};
use crate::CliError;

/// Steps built top-down from `U+`: below the edge `y_k` the state is the
/// previous one with the composite wave `scale * w_k` removed.
fn stack(up: &GasState, edges: &[f64], waves: &[[f64; 4]], scale: f64, g: &GasParams) -> Result<InitialProfile, CliError> {
    let mut pieces = Vec::with_capacity(edges.len() + 1);
    let mut u = *up;
    for (y, w) in edges.iter().zip(waves).rev() {
        pieces.push((*y, u));
        let a = WaveStrengths::from_array(w.map(|x| x * scale));
        u = composite_inverse(&u, &a, g)?;
    }
    pieces.push((0.0, u));
    pieces.reverse();
    Ok(InitialProfile { pieces })
}

/// Rescales the wave amplitudes until the profile's total variation is `epsilon`.
fn fit_tv(
    up: &GasState,
    edges: &[f64],
    waves: &[[f64; 4]],
    epsilon: f64,
    g: &GasParams,
) -> Result<InitialProfile, CliError> {
    let total: f64 = waves.iter().flatten().map(|x| x.abs()).sum();
    if total == 0.0 {
        return stack(up, edges, waves, 0.0, g);
    }
    let mut scale = epsilon / total;
    let mut profile = stack(up, edges, waves, scale, g)?;
    for _ in 0..20 {
        let tv = profile.total_variation();
        if tv == 0.0 {
            break;
        }
        if ((tv - epsilon) / epsilon).abs() < 1e-12 {
            break;
        }
        scale *= epsilon / tv;
        profile = stack(up, edges, waves, scale, g)?;
    }
    Ok(profile)
}

/// Initial data for the config; step trains draw from a ChaCha stream seeded by `cfg.seed`.
pub fn build_profile(cfg: &ScenarioConfig) -> Result<InitialProfile, CliError> {
    let g = cfg.gas();
    let up = cfg.upstream();
    match &cfg.perturbation {
        Perturbation::None => Ok(InitialProfile::constant(up)),
        Perturbation::StepTrain { epsilon, jumps, y_min, y_max } => {
            if *jumps == 0 || !(y_max > y_min) || !(*y_min > 0.0) || !(*epsilon >= 0.0) {
                return Err(CliError::Gate("step train needs jumps > 0, 0 < y_min < y_max, epsilon >= 0".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut edges: Vec<f64> = (0..*jumps).map(|_| rng.random_range(*y_min..*y_max)).collect();
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            let waves: Vec<[f64; 4]> =
                edges.iter().map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
            fit_tv(&up, &edges, &waves, *epsilon, &g)
        }
        Perturbation::SingleBump { epsilon, center, width, pieces } => {
            if *pieces < 2 || !(*width > 0.0) || !(center - width > 0.0) {
                return Err(CliError::Gate("single bump needs pieces >= 2 and 0 < center - width".into()));
            }
            let dir = [1.0, 0.5, -0.5, -1.0];
            let n = *pieces;
            let h = 2.0 * width / n as f64;
            let level: Vec<f64> = (0..n)
                .map(|k| bump((center - width + (k as f64 + 0.5) * h - center) / width).0)
                .collect();
            let lev = |k: usize| if k < n { level[k] } else { 0.0 };
            let edges: Vec<f64> = (0..=n).map(|k| center - width + k as f64 * h).collect();
            let waves: Vec<[f64; 4]> = (0..=n)
                .map(|k| {
                    let jump = lev(k) - if k == 0 { 0.0 } else { level[k - 1] };
                    dir.map(|d| d * jump)
                })
                .collect();
            fit_tv(&up, &edges, &waves, *epsilon, &g)
        }
        Perturbation::Table { rows } => {
            let pieces: Vec<(f64, GasState)> =
                rows.iter().map(|r| (r[0], GasState::new(r[1], r[2], r[3], r[4]))).collect();
            Ok(InitialProfile { pieces })
        }
    }
}
