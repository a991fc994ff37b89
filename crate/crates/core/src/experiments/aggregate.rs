use serde::Serialize;

use super::runner::RunRecord;
use crate::network::linear_to_db;

/// Means over the successful runs of one sweep value; failures are only counted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub sweep_value: Option<usize>,
    pub runs: usize,
    pub failed: usize,
    pub mean_margin: Option<f64>,
    /// `10·log10` of the mean linear margin.
    pub mean_margin_db: Option<f64>,
    pub worst_min_sinr_slack: Option<f64>,
    pub mean_outer_iterations: Option<f64>,
    pub mean_inner_iterations: Option<f64>,
    pub mean_lambda_iterations: f64,
    pub mean_overhead_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfRow {
    pub sweep_value: Option<usize>,
    pub margin_db: f64,
    pub cdf: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

fn values(runs: &[RunRecord]) -> Vec<Option<usize>> {
    let mut v: Vec<Option<usize>> = Vec::new();
    for r in runs {
        if !v.contains(&r.sweep_value) {
            v.push(r.sweep_value);
        }
    }
    v
}

/// One row per sweep value, in first-seen order.
pub fn aggregate(runs: &[RunRecord]) -> Vec<AggregateRow> {
    values(runs)
        .into_iter()
        .map(|value| {
            let all: Vec<&RunRecord> = runs.iter().filter(|r| r.sweep_value == value).collect();
            let ok: Vec<&RunRecord> = all.iter().copied().filter(|r| r.ok()).collect();
            let mean_margin = mean(ok.iter().filter_map(|r| r.max_power_margin));
            AggregateRow {
                sweep_value: value,
                runs: all.len(),
                failed: all.len() - ok.len(),
                mean_margin,
                mean_margin_db: mean_margin.map(linear_to_db),
                worst_min_sinr_slack: ok.iter().filter_map(|r| r.min_sinr_slack).reduce(f64::min),
                mean_outer_iterations: mean(ok.iter().filter_map(|r| r.outer_iterations.map(|x| x as f64))),
                mean_inner_iterations: mean(ok.iter().filter_map(|r| r.inner_iterations.map(|x| x as f64))),
                mean_lambda_iterations: mean(all.iter().map(|r| r.lambda_iterations as f64)).unwrap_or(0.0),
                mean_overhead_pct: mean(all.iter().map(|r| r.overhead_pct)).unwrap_or(0.0),
            }
        })
        .collect()
}

/// Empirical CDF of the margin in dB per sweep value: the `i`-th smallest of `n` gets `i/n`.
pub fn empirical_cdf(runs: &[RunRecord]) -> Vec<CdfRow> {
    let mut rows = Vec::new();
    for value in values(runs) {
        let mut db: Vec<f64> = runs
            .iter()
            .filter(|r| r.sweep_value == value)
            .filter_map(|r| r.margin_db)
            .collect();
        db.sort_by(f64::total_cmp);
        let n = db.len() as f64;
        rows.extend(db.into_iter().enumerate().map(|(i, margin_db)| CdfRow {
            sweep_value: value,
            margin_db,
            cdf: (i + 1) as f64 / n,
        }));
    }
    rows
}
