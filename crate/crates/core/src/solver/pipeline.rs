//! End-to-end solve split into the three stages of the semi-distributed protocol.
//!
//! Stage I runs per BS on local CSI, stage II on the reduced problem only, stage III per BS
//! again. The coordination simulator calls the same stage functions from its agents.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::admm::PreparedProblem;
use super::beamformer::{evaluate_effective_sinr, evaluate_sinr, min_sinr_ratio, reconstruct_local, BeamformerSet};
use super::reduced::{error_grams_local, reduce_local, user_noise, ReducedProblem, StreamData, Weights};
use super::sca::{initialize_prepared, sca_solve_prepared, InitOutcome, ScaOutcome, ScaSettings};
use crate::dual::{assemble_local, default_mu, fixed_point_lambda, CovarianceOperator, DualState, LambdaTrace};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::network::{ChannelSet, LocalCsi, NetworkConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub lambda_tol: f64,
    pub lambda_max_iter: usize,
    /// Per-BS weights; `None` selects the uniform `1/J`.
    pub mu: Option<Vec<f64>>,
    pub sca: ScaSettings,
    pub init_seed: u64,
    pub max_restarts: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            lambda_tol: 5e-4,
            lambda_max_iter: 100,
            mu: None,
            sca: ScaSettings::default(),
            init_seed: 0,
            max_restarts: 3,
        }
    }
}

impl SolverSettings {
    pub fn mu(&self, config: &NetworkConfig) -> Vec<f64> {
        self.mu.clone().unwrap_or_else(|| default_mu(config))
    }
}

/// What one BS uploads after stage I.
#[derive(Clone, Debug, PartialEq)]
pub struct BsUpload {
    pub streams: Vec<StreamData>,
    /// `G_sᴴE_{i,u}G_s` per local stream and user; only with estimated CSI.
    pub error_grams: Option<Vec<Vec<CMat>>>,
}

/// Stage I tail at one BS: covariance at the final λ, then the reduced data to upload.
pub fn bs_prepare(csi: LocalCsi<'_>, lambda: &[f64], mu: f64, config: &NetworkConfig) -> Result<(CovarianceOperator, BsUpload)> {
    let r = assemble_local(csi, lambda, mu, config)?;
    let streams = reduce_local(csi, &r, config);
    let error_grams = match csi.err_cov {
        Some(_) => Some(error_grams_local(csi, &r, config)?),
        None => None,
    };
    Ok((r, BsUpload { streams, error_grams }))
}

/// Stage II output.
#[derive(Clone, Debug)]
pub struct CpuResult {
    pub weights: Weights,
    pub init: InitOutcome,
    pub sca: ScaOutcome,
}

/// Stage II at the CPU: feasible start, then SCA.
///
/// `error_grams` is indexed `[stream][user]`; when present, the estimation-error energy joins
/// every user's interference, so the constraints are the effective SINR targets.
pub fn cpu_solve(problem: &ReducedProblem, error_grams: Option<&[Vec<CMat>]>, settings: &SolverSettings) -> Result<CpuResult> {
    let problem = match error_grams {
        Some(g) => problem.clone().with_error_grams(g),
        None => problem.clone(),
    };
    let normalized = problem.normalized();
    let prepared = PreparedProblem::new(&normalized)?;
    let init = initialize_prepared(&normalized, &prepared, settings.init_seed, settings.max_restarts, &settings.sca);
    if !init.feasible {
        return Err(Error::Infeasible {
            best_slack: init.best_ratio - 1.0,
        });
    }
    let sca = sca_solve_prepared(&normalized, &prepared, &init.u, &settings.sca)?;
    Ok(CpuResult {
        weights: sca.a.clone(),
        init,
        sca,
    })
}

/// Wall-clock time spent in each stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub stage1: Duration,
    pub stage2: Duration,
    pub stage3: Duration,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub beamformers: BeamformerSet,
    pub weights: Weights,
    pub dual: DualState,
    pub lambda_trace: LambdaTrace,
    /// The reduced problem as solved, with error directions when CSI is estimated.
    pub problem: ReducedProblem,
    pub init: InitOutcome,
    pub sca: ScaOutcome,
    pub max_power_margin: f64,
    /// `min_u SINR_u/γ_u` at the returned beamformers (effective SINR with estimated CSI).
    pub min_sinr_ratio: f64,
    pub times: StageTimes,
}

/// Collects per-BS uploads into the reduced problem and the per-stream error Grams.
pub fn assemble_uploads(
    uploads: Vec<BsUpload>,
    noise: Vec<f64>,
    config: &NetworkConfig,
) -> Result<(ReducedProblem, Option<Vec<Vec<CMat>>>)> {
    let mut streams = Vec::new();
    let mut grams: Option<Vec<Vec<CMat>>> = Some(Vec::new());
    for up in uploads {
        streams.extend(up.streams);
        match (up.error_grams, grams.as_mut()) {
            (Some(g), Some(all)) => all.extend(g),
            _ => grams = None,
        }
    }
    let problem = ReducedProblem::assemble(streams, noise, config)?;
    Ok((problem, grams))
}

/// Runs all three stages in process.
pub fn solve(channels: &ChannelSet, config: &NetworkConfig, settings: &SolverSettings) -> Result<Solution> {
    config.validate()?;
    channels.validate(config)?;
    let mu = settings.mu(config);

    let start = Instant::now();
    let lam = fixed_point_lambda(channels, config, &mu, settings.lambda_tol, settings.lambda_max_iter)?;
    let prepared: Vec<(CovarianceOperator, BsUpload)> = (0..config.num_cells)
        .into_par_iter()
        .map(|bs| bs_prepare(channels.local(bs), &lam.dual.lambda, mu[bs], config))
        .collect::<Result<_>>()?;
    let (covs, uploads): (Vec<_>, Vec<_>) = prepared.into_iter().unzip();
    let (problem, grams) = assemble_uploads(uploads, user_noise(channels, config), config)?;
    let stage1 = start.elapsed();

    let start = Instant::now();
    let cpu = cpu_solve(&problem, grams.as_deref(), settings)?;
    let stage2 = start.elapsed();
    let problem = match grams {
        Some(g) => problem.with_error_grams(&g),
        None => problem,
    };

    let start = Instant::now();
    let g = config.groups_per_cell();
    let w: Vec<Vec<CVec>> = covs
        .par_iter()
        .enumerate()
        .map(|(bs, r)| reconstruct_local(channels.local(bs), r, &cpu.weights[bs * g..(bs + 1) * g], config))
        .collect();
    let beamformers = BeamformerSet {
        w: w.concat(),
        stream_cell: (0..config.num_streams()).map(|s| config.stream_cell(s)).collect(),
    };
    let stage3 = start.elapsed();

    let sinr = if channels.is_estimated() {
        evaluate_effective_sinr(&beamformers, channels, config)?
    } else {
        evaluate_sinr(&beamformers, channels, config)
    };
    Ok(Solution {
        max_power_margin: beamformers.max_power_margin(config),
        min_sinr_ratio: min_sinr_ratio(&sinr, config),
        beamformers,
        weights: cpu.weights,
        dual: lam.dual,
        lambda_trace: lam.trace,
        problem,
        init: cpu.init,
        sca: cpu.sca,
        times: StageTimes { stage1, stage2, stage3 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{degrade_csi, generate_channels, generate_layout};

    fn channels(cfg: &NetworkConfig, seed: u64) -> ChannelSet {
        generate_channels(cfg, &generate_layout(cfg, seed), seed).unwrap()
    }

    #[test]
    fn stage_one_uploads_are_m_independent() {
        for m in [8, 32] {
            let cfg = NetworkConfig::uniform(3, 2, m);
            let ch = channels(&cfg, 1);
            let lam = vec![1.0; cfg.num_users()];
            let (_, up) = bs_prepare(ch.local(1), &lam, 1.0 / 3.0, &cfg).unwrap();
            assert_eq!(up.streams.len(), 1);
            assert_eq!(up.streams[0].gram.shape(), (2, 2));
            assert_eq!(up.streams[0].f.len(), 6);
            assert!(up.error_grams.is_none());
        }
    }

    #[test]
    fn solution_meets_every_target() {
        let cfg = NetworkConfig::uniform(2, 3, 16);
        let sol = solve(&channels(&cfg, 4), &cfg, &SolverSettings::default()).unwrap();
        assert!(sol.min_sinr_ratio >= 1.0 - 1e-6);
        assert!((sol.max_power_margin - sol.problem.max_power_margin(&sol.weights)).abs() < 1e-9 * sol.max_power_margin);
    }

    #[test]
    fn estimated_csi_uploads_error_grams() {
        let cfg = NetworkConfig::uniform(2, 2, 8);
        let ch = degrade_csi(&channels(&cfg, 2), 0.1, 2).unwrap();
        let lam = vec![1.0; cfg.num_users()];
        let (_, up) = bs_prepare(ch.local(0), &lam, 0.5, &cfg).unwrap();
        let grams = up.error_grams.unwrap();
        assert_eq!(grams.len(), 1);
        assert_eq!(grams[0].len(), cfg.num_users());
        let sol = solve(&ch, &cfg, &SolverSettings::default()).unwrap();
        assert!(sol.min_sinr_ratio >= 1.0 - 1e-6);
    }

    #[test]
    fn mismatched_channels_are_rejected() {
        let cfg = NetworkConfig::uniform(2, 2, 8);
        let other = NetworkConfig::uniform(2, 2, 4);
        assert!(solve(&channels(&other, 0), &cfg, &SolverSettings::default()).is_err());
    }
}
