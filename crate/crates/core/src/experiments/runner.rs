use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::aggregate::{aggregate, empirical_cdf, AggregateRow};
use super::ExperimentSpec;
use crate::coord::{centralized_overhead, expected_solve_complex, run_distributed, FronthaulLedger, MessageKind};
use crate::error::Result;
use crate::network::{degrade_csi, generate_channels, generate_layout, linear_to_db};
use crate::solver::{ScaTrace, SolverSettings};

/// Slack below one tolerated on `min SINR/γ` before a run counts as an invariant violation.
const FEASIBILITY_TOL: f64 = 1e-3;

/// One row of `runs.csv`. Failed runs keep their seeds and the error text.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub sweep_value: Option<usize>,
    pub layout_seed: u64,
    pub channel_seed: u64,
    pub status: &'static str,
    pub max_power_margin: Option<f64>,
    pub margin_db: Option<f64>,
    pub min_sinr_slack: Option<f64>,
    pub outer_iterations: Option<usize>,
    pub inner_iterations: Option<usize>,
    pub lambda_iterations: usize,
    pub lambda_converged: bool,
    pub solve_complex: usize,
    pub lambda_reals: usize,
    pub error_gram_complex: usize,
    pub centralized_complex: usize,
    /// Exchanged scalars (two reals per complex) over the centralized count, in percent.
    pub overhead_pct: f64,
    pub error: String,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// One row of `timings.csv`; kept apart so that `runs.csv` is byte-stable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRecord {
    pub run: usize,
    pub sweep_value: Option<usize>,
    pub stage1_s: f64,
    pub stage2_s: f64,
    pub stage3_s: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub runs: Vec<RunRecord>,
    pub timings: Vec<TimingRecord>,
    pub aggregate: Vec<AggregateRow>,
    /// Invariant violations among the successful runs.
    pub violations: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Everything one run produces.
pub struct RunResult {
    pub record: RunRecord,
    pub timing: Option<TimingRecord>,
    pub ledger: FronthaulLedger,
    pub trace: Option<ScaTrace>,
    pub violations: Vec<String>,
}

/// Solves one (sweep value, layout, channel) cell of the experiment.
pub fn run_one(spec: &ExperimentSpec, run: usize, value: Option<usize>, layout: usize, channel: usize) -> Result<RunResult> {
    let scenario = spec.scenario_at(value)?;
    let config = scenario.config()?;
    let seeds = scenario.seeds;
    let flat = (layout * spec.channel_seeds + channel) as u64;
    let layout_seed = seeds.layout + layout as u64;
    let channel_seed = seeds.channel + flat;
    let mut channels = generate_channels(&config, &generate_layout(&config, layout_seed), channel_seed)?;
    if let Some(f) = scenario.csi_error {
        channels = degrade_csi(&channels, f, seeds.csi + flat)?;
    }
    let settings = SolverSettings {
        init_seed: seeds.init,
        ..spec.settings.clone()
    };
    let (ledger, result) = run_distributed(&channels, &config, &settings);
    let centralized = centralized_overhead(&config);
    let mut record = RunRecord {
        run,
        sweep_value: value,
        layout_seed,
        channel_seed,
        status: "ok",
        max_power_margin: None,
        margin_db: None,
        min_sinr_slack: None,
        outer_iterations: None,
        inner_iterations: None,
        lambda_iterations: ledger.lambda_iterations,
        lambda_converged: false,
        solve_complex: ledger.solve_complex(),
        lambda_reals: ledger.lambda_reals(),
        error_gram_complex: ledger.kind_total(MessageKind::ErrorGramUpload).0,
        centralized_complex: centralized,
        overhead_pct: 100.0 * ledger.complex_equivalent() / centralized as f64,
        error: String::new(),
    };
    let mut violations = Vec::new();
    let (timing, trace) = match result {
        Ok(sol) => {
            record.max_power_margin = Some(sol.max_power_margin);
            record.margin_db = Some(linear_to_db(sol.max_power_margin));
            record.min_sinr_slack = Some(sol.min_sinr_ratio - 1.0);
            record.outer_iterations = Some(sol.cpu.sca.trace.outer_iterations());
            record.inner_iterations = Some(sol.cpu.sca.trace.inner_iterations());
            record.lambda_converged = sol.lambda_converged;
            if sol.min_sinr_ratio < 1.0 - FEASIBILITY_TOL {
                violations.push(format!("run {run}: min SINR/target {:.6} below 1", sol.min_sinr_ratio));
            }
            if config.groups.len() == 1 && record.solve_complex != expected_solve_complex(&config) {
                violations.push(format!(
                    "run {run}: solve-stage ledger {} differs from {}",
                    record.solve_complex,
                    expected_solve_complex(&config)
                ));
            }
            let timing = TimingRecord {
                run,
                sweep_value: value,
                stage1_s: sol.times.stage1.as_secs_f64(),
                stage2_s: sol.times.stage2.as_secs_f64(),
                stage3_s: sol.times.stage3.as_secs_f64(),
            };
            (Some(timing), Some(sol.cpu.sca.trace))
        }
        Err(e) => {
            record.status = "failed";
            record.error = e.to_string();
            (None, None)
        }
    };
    Ok(RunResult {
        record,
        timing,
        ledger,
        trace,
        violations,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every (sweep value, layout seed, channel seed) combination in parallel and writes
/// `runs.csv`, `aggregate.csv` and the optional files selected in `spec.metrics`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut cells = Vec::new();
    for value in spec.sweep_values() {
        for l in 0..spec.layout_seeds {
            for c in 0..spec.channel_seeds {
                cells.push((cells.len(), value, l, c));
            }
        }
    }
    let results: Vec<RunResult> = cells
        .par_iter()
        .map(|&(run, value, l, c)| run_one(spec, run, value, l, c))
        .collect::<Result<_>>()?;

    fs::create_dir_all(&spec.out_dir)?;
    let mut files = Vec::new();
    let runs: Vec<RunRecord> = results.iter().map(|r| r.record.clone()).collect();
    let timings: Vec<TimingRecord> = results.iter().filter_map(|r| r.timing.clone()).collect();
    let violations: Vec<String> = results.iter().flat_map(|r| r.violations.clone()).collect();
    let agg = aggregate(&runs);

    let path = spec.out_dir.join("runs.csv");
    write_csv(&path, &runs)?;
    files.push(path);
    let path = spec.out_dir.join("aggregate.csv");
    write_csv(&path, &agg)?;
    files.push(path);
    if spec.metrics.cdf {
        let path = spec.out_dir.join("cdf.csv");
        write_csv(&path, &empirical_cdf(&runs))?;
        files.push(path);
    }
    if spec.metrics.timings {
        let path = spec.out_dir.join("timings.csv");
        write_csv(&path, &timings)?;
        files.push(path);
    }
    if spec.metrics.traces {
        let dir = spec.out_dir.join("traces");
        fs::create_dir_all(&dir)?;
        for r in &results {
            if let Some(t) = &r.trace {
                let path = dir.join(format!("run{:04}_sca.csv", r.record.run));
                fs::write(&path, t.to_csv())?;
                files.push(path);
            }
        }
    }
    if spec.metrics.ledgers {
        let dir = spec.out_dir.join("ledgers");
        fs::create_dir_all(&dir)?;
        for value in spec.sweep_values() {
            let Some(first) = results.iter().find(|r| r.record.sweep_value == value) else {
                continue;
            };
            let name = match value {
                Some(v) => format!("ledger_{v}.csv"),
                None => "ledger.csv".to_string(),
            };
            let path = dir.join(name);
            fs::write(&path, first.ledger.to_csv())?;
            files.push(path);
        }
    }
    Ok(ExperimentOutput {
        runs,
        timings,
        aggregate: agg,
        violations,
        files,
    })
}
