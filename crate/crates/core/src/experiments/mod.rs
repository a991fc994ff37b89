//! Monte Carlo sweeps over scenarios with CSV exports.

mod aggregate;
mod overhead;
mod runner;

pub use aggregate::{aggregate, empirical_cdf, AggregateRow, CdfRow};
pub use overhead::{emit_overhead_table, overhead_rows, OverheadRow, OverheadSpec};
pub use runner::{run_experiment, run_one, ExperimentOutput, RunRecord, TimingRecord};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::{NetworkConfig, Scenario};
use crate::solver::SolverSettings;

/// Scenario parameter varied across a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// BS antennas `M`.
    Antennas,
    /// Users per group `K` (every group of the scenario takes the value).
    Users,
    /// Coordinating cells `J`.
    Cells,
    /// CSI error fraction in percent.
    CsiErrorPercent,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Antennas => "antennas",
            SweepAxis::Users => "users",
            SweepAxis::Cells => "cells",
            SweepAxis::CsiErrorPercent => "csi_error_pct",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "antennas" | "m" | "M" => Ok(SweepAxis::Antennas),
            "users" | "k" | "K" => Ok(SweepAxis::Users),
            "cells" | "j" | "J" => Ok(SweepAxis::Cells),
            "csi_error_pct" | "csi" => Ok(SweepAxis::CsiErrorPercent),
            _ => Err(Error::InvalidConfig {
                field: "sweep",
                reason: format!("unknown axis `{s}`"),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

impl FromStr for Sweep {
    type Err = Error;

    /// `axis=v1,v2,...`, e.g. `antennas=16,32,64`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidConfig { field: "sweep", reason };
        let (axis, values) = s.split_once('=').ok_or_else(|| bad(format!("expected axis=values, got `{s}`")))?;
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|e| bad(format!("`{v}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sweep {
            axis: axis.trim().parse()?,
            values,
        })
    }
}

/// Which optional files a run writes next to `runs.csv` and `aggregate.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Metrics {
    /// Per-run SCA and λ traces under `traces/`.
    pub traces: bool,
    /// Fronthaul ledger of the first run of every sweep value under `ledgers/`.
    pub ledgers: bool,
    /// Stage wall times in `timings.csv`.
    pub timings: bool,
    /// Empirical CDFs of the power margin in `cdf.csv`.
    pub cdf: bool,
}

impl Default for Metrics {
    fn default() -> Self {
        Self {
            traces: false,
            ledgers: true,
            timings: true,
            cdf: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Without a sweep every seed runs once on the scenario as given.
    pub sweep: Option<Sweep>,
    pub layout_seeds: usize,
    pub channel_seeds: usize,
    pub out_dir: PathBuf,
    pub metrics: Metrics,
    pub settings: SolverSettings,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario,
            sweep: None,
            layout_seeds: 1,
            channel_seeds: 1,
            out_dir: out_dir.into(),
            metrics: Metrics::default(),
            settings: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layout_seeds == 0 || self.channel_seeds == 0 {
            return Err(Error::InvalidConfig {
                field: "seeds",
                reason: "need at least one layout and one channel seed".into(),
            });
        }
        if let Some(sweep) = &self.sweep {
            for &v in &sweep.values {
                let ok = match sweep.axis {
                    SweepAxis::CsiErrorPercent => v <= 100,
                    _ => v > 0,
                };
                if !ok {
                    return Err(Error::InvalidConfig {
                        field: "sweep",
                        reason: format!("value {v} out of range for {}", sweep.axis),
                    });
                }
            }
        }
        for value in self.sweep_values() {
            self.scenario_at(value)?.config()?;
        }
        Ok(())
    }

    /// Sweep values, or a single `None` without a sweep.
    pub fn sweep_values(&self) -> Vec<Option<usize>> {
        match &self.sweep {
            Some(s) if !s.values.is_empty() => s.values.iter().map(|&v| Some(v)).collect(),
            _ => vec![None],
        }
    }

    /// The scenario with the sweep value applied.
    pub fn scenario_at(&self, value: Option<usize>) -> Result<Scenario> {
        let mut s = self.scenario.clone();
        if let (Some(sweep), Some(v)) = (&self.sweep, value) {
            match sweep.axis {
                SweepAxis::Antennas => s.antennas = v,
                SweepAxis::Users => s.groups.iter_mut().for_each(|g| *g = v),
                SweepAxis::Cells => {
                    if s.network_cells.is_some_and(|n| n < v) {
                        s.network_cells = Some(v);
                    }
                    s.num_cells = v;
                }
                SweepAxis::CsiErrorPercent => s.csi_error = Some(v as f64 / 100.0),
            }
        }
        Ok(s)
    }

    pub fn config_at(&self, value: Option<usize>) -> Result<NetworkConfig> {
        self.scenario_at(value)?.config()
    }

    pub fn num_runs(&self) -> usize {
        self.sweep_values().len() * self.layout_seeds * self.channel_seeds
    }
}
