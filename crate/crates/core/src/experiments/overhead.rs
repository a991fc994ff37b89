use serde::Serialize;

use crate::coord::{centralized_overhead, expected_solve_complex};
use crate::dual::{default_mu, fixed_point_lambda};
use crate::error::{Error, Result};
use crate::network::{generate_channels, generate_layout, Scenario};
use crate::solver::SolverSettings;

/// Fronthaul comparison against shipping all CSI to the CPU, over `M` and over `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct OverheadSpec {
    /// Base scenario; the `M` rows keep its `K` and the `K` rows keep its `M`.
    pub scenario: Scenario,
    pub antennas: Vec<usize>,
    pub users: Vec<usize>,
    /// Channel draws averaged for the measured λ iteration count.
    pub seeds: usize,
    pub settings: SolverSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverheadRow {
    pub axis: &'static str,
    pub value: usize,
    pub cells: usize,
    pub users: usize,
    pub antennas: usize,
    /// Mean measured λ iterations.
    pub lambda_iterations: f64,
    pub solve_complex: usize,
    pub lambda_reals: f64,
    /// Solve-stage complex scalars plus λ reals at two reals per complex.
    pub semi_distributed: f64,
    pub centralized: usize,
    pub ratio_pct: f64,
    /// Ratio of the solve stage alone, without the λ exchange.
    pub solve_ratio_pct: f64,
}

fn row(spec: &OverheadSpec, axis: &'static str, scenario: Scenario) -> Result<OverheadRow> {
    let config = scenario.config()?;
    if config.groups.len() != 1 {
        return Err(Error::InvalidConfig {
            field: "groups",
            reason: "the overhead table covers one group per cell".into(),
        });
    }
    let mu = default_mu(&config);
    let mut total = 0usize;
    for s in 0..spec.seeds as u64 {
        let layout = generate_layout(&config, scenario.seeds.layout + s);
        let channels = generate_channels(&config, &layout, scenario.seeds.channel + s)?;
        let lam = fixed_point_lambda(&channels, &config, &mu, spec.settings.lambda_tol, spec.settings.lambda_max_iter)?;
        total += lam.trace.iterations();
    }
    let lambda_iterations = total as f64 / spec.seeds as f64;
    let solve_complex = expected_solve_complex(&config);
    let lambda_reals = lambda_iterations * config.num_users() as f64;
    let semi = solve_complex as f64 + lambda_reals / 2.0;
    let centralized = centralized_overhead(&config);
    Ok(OverheadRow {
        axis,
        value: if axis == "antennas" { config.antennas } else { config.users_per_cell() },
        cells: config.num_cells,
        users: config.users_per_cell(),
        antennas: config.antennas,
        lambda_iterations,
        solve_complex,
        lambda_reals,
        semi_distributed: semi,
        centralized,
        ratio_pct: 100.0 * semi / centralized as f64,
        solve_ratio_pct: 100.0 * solve_complex as f64 / centralized as f64,
    })
}

pub fn overhead_rows(spec: &OverheadSpec) -> Result<Vec<OverheadRow>> {
    if spec.seeds == 0 {
        return Err(Error::InvalidConfig {
            field: "seeds",
            reason: "need at least one seed".into(),
        });
    }
    let mut rows = Vec::new();
    for &m in &spec.antennas {
        let mut s = spec.scenario.clone();
        s.antennas = m;
        rows.push(row(spec, "antennas", s)?);
    }
    for &k in &spec.users {
        let mut s = spec.scenario.clone();
        s.groups = vec![k];
        rows.push(row(spec, "users", s)?);
    }
    Ok(rows)
}

/// The overhead table as CSV text.
pub fn emit_overhead_table(spec: &OverheadSpec) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in overhead_rows(spec)? {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
