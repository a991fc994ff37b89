//! Outer SCA layer and the feasible-start search.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::admm::{admm_solve_prepared, with_objective_scale, AdmmSettings, AdmmTrace, PreparedProblem};
use super::reduced::{ReducedProblem, Weights};
use crate::error::{Error, Result};
use crate::linalg::CVec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaSettings {
    pub admm: AdmmSettings,
    /// Stop once `max_s ‖u_s^(n+1) − u_s^(n)‖/‖u_s^(n)‖` (up to a common phase per stream)
    /// or the relative objective decrease is at most this.
    pub tol_outer: f64,
    pub max_outer: usize,
}

impl Default for ScaSettings {
    fn default() -> Self {
        Self {
            admm: AdmmSettings::default(),
            tol_outer: 1e-3,
            max_outer: 30,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScaTrace {
    /// Max power margin of the expansion point, starting with the initial one.
    pub objective: Vec<f64>,
    pub u_change: Vec<f64>,
    pub inner: Vec<AdmmTrace>,
    pub inner_converged: Vec<bool>,
}

impl ScaTrace {
    pub fn outer_iterations(&self) -> usize {
        self.u_change.len()
    }

    pub fn inner_iterations(&self) -> usize {
        self.inner.iter().map(|t| t.rel_diff.len()).sum()
    }

    /// True when every objective step rises by at most `slack` relative to the previous value.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    /// Rows `(layer, iteration, metric, value)`.
    pub fn rows(&self) -> Vec<(String, usize, String, f64)> {
        let mut rows = Vec::new();
        for (n, t) in self.objective.iter().enumerate() {
            rows.push(("outer".to_string(), n, "objective".to_string(), *t));
        }
        for (n, c) in self.u_change.iter().enumerate() {
            rows.push(("outer".to_string(), n + 1, "u_change".to_string(), *c));
        }
        for (n, inner) in self.inner.iter().enumerate() {
            let layer = format!("inner{}", n + 1);
            for (l, x) in inner.rel_diff.iter().enumerate() {
                rows.push((layer.clone(), l + 1, "rel_diff".into(), *x));
                rows.push((layer.clone(), l + 1, "residual_d".into(), inner.residual_d[l]));
                rows.push((layer.clone(), l + 1, "residual_v".into(), inner.residual_v[l]));
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,iteration,metric,value\n");
        for (layer, it, metric, value) in self.rows() {
            out.push_str(&format!("{layer},{it},{metric},{value:e}\n"));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ScaOutcome {
    pub a: Weights,
    pub objective: f64,
    pub trace: ScaTrace,
    pub converged: bool,
}

pub(crate) fn relative_change(new: &[CVec], old: &[CVec]) -> f64 {
    new.iter()
        .zip(old)
        .map(|(n, o)| {
            // A common phase rotation of a stream leaves every SINR and power unchanged.
            let c = o.dotc(n);
            let phase = if c.norm() > 0.0 { c / c.norm() } else { Complex64::new(1.0, 0.0) };
            (n - o * phase).norm() / o.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// SCA over the reduced problem starting from a feasible `init_u`.
///
/// Every ADMM result is rescaled so that the tightest SINR constraint is met with equality
/// before it becomes the next expansion point.
pub fn sca_solve(problem: &ReducedProblem, init_u: &[CVec], settings: &ScaSettings) -> Result<ScaOutcome> {
    let normalized = problem.normalized();
    let prepared = PreparedProblem::new(&normalized)?;
    sca_solve_prepared(&normalized, &prepared, init_u, settings)
}

pub(crate) fn sca_solve_prepared(
    problem: &ReducedProblem,
    prepared: &PreparedProblem,
    init_u: &[CVec],
    settings: &ScaSettings,
) -> Result<ScaOutcome> {
    let mut u = problem.scale_to_feasible(init_u).ok_or(Error::Infeasible {
        best_slack: problem.min_sinr_slack(init_u),
    })?;
    let mut trace = ScaTrace {
        objective: vec![problem.max_power_margin(&u)],
        ..Default::default()
    };
    let mut converged = false;
    // Objective unit for the inner solves, fixed by the starting point.
    let scaled = with_objective_scale(problem, trace.objective[0]);
    for _ in 0..settings.max_outer {
        let inner = admm_solve_prepared(&scaled, prepared, &u, &settings.admm)?;
        trace.inner.push(inner.trace);
        trace.inner_converged.push(inner.converged);
        let Some(next) = problem.scale_to_feasible(&inner.state.a) else {
            break;
        };
        let change = relative_change(&next, &u);
        let prev = *trace.objective.last().expect("seeded with the start");
        let objective = problem.max_power_margin(&next);
        trace.objective.push(objective);
        trace.u_change.push(change);
        u = next;
        // The weights keep drifting along nearly flat directions long after the objective
        // has settled, so a stalled objective also ends the loop.
        if change <= settings.tol_outer || prev - objective <= settings.tol_outer * prev {
            converged = true;
            break;
        }
    }
    Ok(ScaOutcome {
        objective: problem.max_power_margin(&u),
        a: u,
        trace,
        converged,
    })
}

/// Feasible-start search result.
#[derive(Clone, Debug)]
pub struct InitOutcome {
    pub u: Weights,
    pub feasible: bool,
    /// Random restarts used after the all-ones start.
    pub restarts: usize,
    /// Best `min_u S_u/(γ_u·I_u)` reached (greater than one means scalable to feasibility).
    pub best_ratio: f64,
}

/// `min_u S_u/(γ_u·I_u)`: feasibility by scaling is possible exactly when this exceeds one.
pub fn interference_ratio(problem: &ReducedProblem, a: &[CVec]) -> f64 {
    let lb = problem.link_budget(a);
    (0..problem.num_users())
        .map(|u| lb.signal[u] / (problem.sinr_target[u] * lb.interference[u]))
        .fold(f64::INFINITY, f64::min)
}

const PHASE_ONE_ROUNDS: usize = 60;
const SLACK_PENALTY: f64 = 10.0;

/// Raises the SINR ratio of `a` by SCA on the slack-relaxed problem.
///
/// Each convexified SINR constraint gets a nonnegative slack priced at `κ`, so every inner
/// problem is feasible whatever the expansion point. Stops once scaling can reach the targets.
fn phase_one(problem: &ReducedProblem, prepared: &PreparedProblem, a: Weights, settings: &ScaSettings) -> (Weights, f64) {
    let admm = AdmmSettings {
        slack_penalty: SLACK_PENALTY,
        ..settings.admm
    };
    let mut ratio = interference_ratio(problem, &a);
    let mut best = (a.clone(), ratio);
    let mut a = a;
    for _ in 0..PHASE_ONE_ROUNDS {
        if ratio > 1.0 || ratio.is_nan() {
            break;
        }
        let margin = problem.max_power_margin(&a);
        if !(margin > 0.0) {
            break;
        }
        let scaled = with_objective_scale(problem, margin);
        let Ok(out) = admm_solve_prepared(&scaled, prepared, &a, &admm) else {
            break;
        };
        a = out.state.a;
        ratio = interference_ratio(problem, &a);
        if ratio > best.1 {
            best = (a.clone(), ratio);
        }
    }
    best
}

/// Finds an expansion point from which scaling reaches every SINR target.
///
/// Starts from all-ones weights, raises the SINR ratio by a slack-relaxed SCA when needed and
/// falls back to random complex starts.
pub fn initialize_u(problem: &ReducedProblem, seed: u64, max_restarts: usize) -> Result<InitOutcome> {
    let normalized = problem.normalized();
    let prepared = PreparedProblem::new(&normalized)?;
    Ok(initialize_prepared(&normalized, &prepared, seed, max_restarts, &ScaSettings::default()))
}

pub(crate) fn initialize_prepared(
    problem: &ReducedProblem,
    prepared: &PreparedProblem,
    seed: u64,
    max_restarts: usize,
    settings: &ScaSettings,
) -> InitOutcome {
    let ones: Weights = problem
        .streams
        .iter()
        .map(|s| CVec::from_element(s.dim(), Complex64::new(1.0, 0.0)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Weights, f64)> = None;
    for attempt in 0..=max_restarts {
        let start = if attempt == 0 {
            ones.clone()
        } else {
            problem
                .streams
                .iter()
                .map(|s| {
                    CVec::from_fn(s.dim(), |_, _| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im)
                    })
                })
                .collect()
        };
        let (a, ratio) = phase_one(problem, prepared, start, settings);
        if ratio > 1.0 {
            if let Some(u) = problem.scale_to_feasible(&a) {
                return InitOutcome {
                    u,
                    feasible: true,
                    restarts: attempt,
                    best_ratio: ratio,
                };
            }
        }
        if best.as_ref().is_none_or(|(_, r)| ratio > *r) {
            best = Some((a, ratio));
        }
    }
    let (u, best_ratio) = best.expect("at least one attempt runs");
    InitOutcome {
        u,
        feasible: false,
        restarts: max_restarts,
        best_ratio,
    }
}
