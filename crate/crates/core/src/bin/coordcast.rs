//! Command-line front end for scenario sweeps and the overhead table.
//!
//!   coordcast run --scenario scenarios/desk.toml --sweep antennas=16,32,64 --layouts 5 --channels 20 --out out/m
//!   coordcast overhead --scenario scenarios/desk.toml --antennas 16,64,100,256 --users 3,5,7 --out out/overhead.csv

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coordcast::experiments::{emit_overhead_table, run_experiment, ExperimentSpec, Metrics, OverheadSpec, Sweep};
use coordcast::network::Scenario;
use coordcast::solver::SolverSettings;

#[derive(Parser)]
#[command(name = "coordcast", version, about = "Coordinated multicast beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep writing runs.csv, aggregate.csv and friends.
    Run(RunArgs),
    /// Fronthaul overhead versus full CSI centralization.
    Overhead(OverheadArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the built-in three-cell desk scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    lambda_tol: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// `axis=v1,v2,...` with axis one of antennas, users, cells, csi_error_pct.
    #[arg(long)]
    sweep: Option<Sweep>,
    #[arg(long, default_value_t = 5)]
    layouts: usize,
    #[arg(long, default_value_t = 20)]
    channels: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Outer SCA tolerance.
    #[arg(long)]
    tol_outer: Option<f64>,
    /// Inner ADMM tolerance.
    #[arg(long)]
    tol_inner: Option<f64>,
    /// ADMM penalty ρ.
    #[arg(long)]
    rho: Option<f64>,
    /// CSI error fraction in [0, 1]; overrides the scenario.
    #[arg(long)]
    csi_error: Option<f64>,
    /// Also write per-run SCA traces.
    #[arg(long)]
    traces: bool,
}

#[derive(Args)]
struct OverheadArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = [16, 32, 64, 100, 128, 256])]
    antennas: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 5, 7])]
    users: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(common: &Common) -> coordcast::Result<(Scenario, SolverSettings)> {
    let scenario = match &common.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::desk_default(),
    };
    let mut settings = SolverSettings::default();
    if let Some(t) = common.lambda_tol {
        settings.lambda_tol = t;
    }
    Ok((scenario, settings))
}

fn run(args: RunArgs) -> coordcast::Result<bool> {
    let (mut scenario, mut settings) = load(&args.common)?;
    if let Some(f) = args.csi_error {
        scenario.csi_error = Some(f);
    }
    if let Some(t) = args.tol_outer {
        settings.sca.tol_outer = t;
    }
    if let Some(t) = args.tol_inner {
        settings.sca.admm.tol = t;
    }
    if let Some(r) = args.rho {
        settings.sca.admm.rho = r;
    }
    let spec = ExperimentSpec {
        scenario,
        sweep: args.sweep,
        layout_seeds: args.layouts,
        channel_seeds: args.channels,
        out_dir: args.out,
        metrics: Metrics {
            traces: args.traces,
            ..Metrics::default()
        },
        settings,
    };
    let out = run_experiment(&spec)?;
    for row in &out.aggregate {
        let value = row.sweep_value.map_or("-".to_string(), |v| v.to_string());
        let db = row.mean_margin_db.map_or("n/a".to_string(), |d| format!("{d:.3} dB"));
        println!("{value}: {db} over {} runs, {} failed, I_lambda {:.1}", row.runs, row.failed, row.mean_lambda_iterations);
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    for v in &out.violations {
        eprintln!("invariant violated: {v}");
    }
    Ok(out.violations.is_empty())
}

fn overhead(args: OverheadArgs) -> coordcast::Result<bool> {
    let (scenario, settings) = load(&args.common)?;
    let table = emit_overhead_table(&OverheadSpec {
        scenario,
        antennas: args.antennas,
        users: args.users,
        seeds: args.seeds,
        settings,
    })?;
    match args.out {
        Some(p) => {
            std::fs::write(&p, table)?;
            println!("wrote {}", p.display());
        }
        None => print!("{table}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Overhead(a) => overhead(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
