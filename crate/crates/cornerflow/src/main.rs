use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cornerflow::config::{derive, parse_config, Audit, ScenarioConfig};
use cornerflow::export::{fmt_f64, render_diagram, snapshot_rows, write_events, write_glimm_trace, write_snapshot};
use cornerflow::runner::{run, sweep, validate_run, Prepared, RunOutput};
use cornerflow::CliError;
use cornerflow_core::riemann::{solve_boundary_riemann, solve_riemann};
use cornerflow_core::tracking::FrontField;
use cornerflow_core::{GasParams, GasState};

/// Front tracking for supersonic flow past a convex corner bounded by static gas.
#[derive(Parser)]
#[command(name = "cornerflow", version)]
struct Cli {
    /// Output directory; `CORNERFLOW_OUT` is used when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// TOML or JSON scenario file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    p_bar: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_audit)]
    audit: Option<Audit>,
}

#[derive(Subcommand)]
enum Command {
    /// Track a scenario to x_max and write snapshot, events, trace, diagram and summary.
    Run(ScenarioArgs),
    /// Background solution and its snapshot at x.
    Background {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
    },
    /// Solve one Riemann problem, or the boundary problem when --p-bar is given.
    Riemann {
        #[arg(long, default_value_t = 1.4)]
        gamma: f64,
        /// u,v,p,rho
        #[arg(long, value_parser = parse_state)]
        left: Option<GasState>,
        #[arg(long, value_parser = parse_state)]
        right: GasState,
        #[arg(long)]
        p_bar: Option<f64>,
    },
    /// Run a scenario and write entropy, weak-residual and region checks.
    Validate(ScenarioArgs),
    /// Parallel runs over deltas x epsilons x seeds.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
    },
}

fn parse_audit(s: &str) -> Result<Audit, String> {
    match s {
        "off" => Ok(Audit::Off),
        "warn" => Ok(Audit::Warn),
        "strict" => Ok(Audit::Strict),
        _ => Err(format!("unknown audit policy {s}")),
    }
}

fn parse_state(s: &str) -> Result<GasState, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    if v.len() != 4 {
        return Err("expected u,v,p,rho".into());
    }
    Ok(GasState::new(v[0], v[1], v[2], v[3]))
}

fn scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(d) = args.delta {
        cfg.delta = d;
    }
    if let Some(p) = args.p_bar {
        cfg.p_bar = p;
    }
    if let Some(x) = args.x_max {
        cfg.x_max = x;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(a) = args.audit {
        cfg.audit = a;
    }
    Ok(cfg)
}

fn out_dir(flag: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = match flag {
        Some(p) => p.clone(),
        None => std::env::var_os("CORNERFLOW_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("cornerflow-out")),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_run(dir: &Path, prepared: &Prepared, out: &RunOutput) -> Result<(), CliError> {
    write_snapshot(&snapshot_rows(&out.field), create(dir, "snapshot.csv")?)?;
    write_events(&out.field.events, create(dir, "events.jsonl")?)?;
    write_glimm_trace(&out.field.trace, create(dir, "glimm_trace.csv")?)?;
    std::fs::write(dir.join("diagram.svg"), render_diagram(&out.field.history()))?;
    write_json(dir, "gates.json", &prepared.derived.gates)?;
    write_json(dir, "summary.json", &out.summary)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = scenario(&args)?;
            let dir = out_dir(&cli.out)?;
            let (prepared, out) = run(&cfg)?;
            write_run(&dir, &prepared, &out)?;
            let s = &out.summary;
            println!(
                "x = {} interactions = {} max fronts = {} audit failures = {} F: {} -> {} T_NP = {}",
                fmt_f64(s.x_end),
                s.interactions,
                s.fronts_max,
                s.audit_failures,
                fmt_f64(s.f_initial),
                fmt_f64(s.f_final),
                fmt_f64(s.t_np)
            );
        }
        Command::Background { scenario: args, x } => {
            let mut cfg = scenario(&args)?;
            cfg.perturbation = cornerflow::config::Perturbation::None;
            let d = derive(&cfg)?;
            let dir = out_dir(&cli.out)?;
            let mut params = cornerflow::runner::scheme_params(&cfg, &d);
            params.audit = cornerflow_core::tracking::AuditPolicy::Off;
            let mut field = FrontField::initialize(
                &cornerflow_core::tracking::InitialProfile::constant(cfg.upstream()),
                &d.background,
                params,
                cfg.tv_limit,
            )?;
            field.advance(x)?;
            write_snapshot(&snapshot_rows(&field), create(&dir, "background.csv")?)?;
            write_json(&dir, "background.json", &d.background)?;
            let b = &d.background;
            println!(
                "U- = ({}, {}, {}, {}) theta- = {} k_b = {} fan slopes [{}, {}] S_bar = {} fan fronts = {}",
                fmt_f64(b.u_minus.u),
                fmt_f64(b.u_minus.v),
                fmt_f64(b.u_minus.p),
                fmt_f64(b.u_minus.rho),
                fmt_f64(b.theta_minus),
                fmt_f64(b.k_b),
                fmt_f64(b.k1),
                fmt_f64(b.k2),
                fmt_f64(b.s_bar),
                b.fan_count(cfg.delta)
            );
        }
        Command::Riemann { gamma, left, right, p_bar } => {
            let g = GasParams::new(gamma);
            let text = match (left, p_bar) {
                (Some(l), None) => serde_json::to_string_pretty(&solve_riemann(&l, &right, &g)?),
                (None, Some(p)) => serde_json::to_string_pretty(&solve_boundary_riemann(&right, p, &g)?),
                _ => return Err(CliError::Parse("give either --left or --p-bar".into())),
            };
            println!("{}", text.map_err(|e| CliError::Io(e.to_string()))?);
        }
        Command::Validate(args) => {
            let cfg = scenario(&args)?;
            let dir = out_dir(&cli.out)?;
            let (prepared, out) = run(&cfg)?;
            write_run(&dir, &prepared, &out)?;
            let report = validate_run(&out);
            write_json(&dir, "validation.json", &report)?;
            println!(
                "entropy {} weak residual {} region worst {} violations {}",
                if report.entropy_passed { "passed" } else { "FAILED" },
                fmt_f64(report.weak_residual),
                fmt_f64(report.region.worst()),
                report.region.violations
            );
        }
        Command::Sweep { scenario: args, deltas, epsilons, seeds } => {
            let cfg = scenario(&args)?;
            let dir = out_dir(&cli.out)?;
            let rows = sweep(&cfg, &deltas, &epsilons, &seeds);
            let mut w = csv::Writer::from_writer(create(&dir, "sweep.csv")?);
            w.write_record([
                "delta", "epsilon", "seed", "outcome", "interactions", "fronts_max", "audit_failures", "f_initial",
                "f_final", "t_np", "boundary_slope_deviation", "region_worst",
            ])?;
            for r in &rows {
                let mut rec = vec![fmt_f64(r.delta), fmt_f64(r.epsilon), r.seed.to_string(), r.outcome.clone()];
                match &r.summary {
                    Some(s) => rec.extend([
                        s.interactions.to_string(),
                        s.fronts_max.to_string(),
                        s.audit_failures.to_string(),
                        fmt_f64(s.f_initial),
                        fmt_f64(s.f_final),
                        fmt_f64(s.t_np),
                        fmt_f64(s.boundary_slope_deviation),
                        fmt_f64(s.region.worst()),
                    ]),
                    None => rec.extend(std::iter::repeat_n(String::new(), 8)),
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            println!("{} runs, {} ok", rows.len(), rows.iter().filter(|r| r.summary.is_some()).count());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cornerflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
