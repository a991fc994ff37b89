//! Structured solver: reduced problem, inner ADMM, outer SCA and beamformer reconstruction.

pub mod admm;
pub mod beamformer;
pub mod pipeline;
pub mod reduced;
pub mod sca;

pub use admm::{
    a_update, admm_solve_subproblem, d_update, dual_update, t_update, v_update, AUpdate, AdmmOutcome,
    AdmmSettings, AdmmState, AdmmTrace, DProblem, DUpdate,
};
pub use reduced::{feasibility_scale, reduce, reduce_local, user_noise, LinkBudget, ReducedProblem, StreamData, Weights};
pub use sca::{initialize_u, interference_ratio, sca_solve, InitOutcome, ScaOutcome, ScaSettings, ScaTrace};
pub use beamformer::{
    error_energy, evaluate_effective_sinr, evaluate_sinr, min_sinr_ratio, reconstruct_beamformers, reconstruct_local,
    BeamformerSet,
};
pub use pipeline::{assemble_uploads, bs_prepare, cpu_solve, solve, BsUpload, CpuResult, Solution, SolverSettings, StageTimes};
