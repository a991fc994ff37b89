//! Noise-plus-weighted-channel covariances and the fixed-point multiplier solver.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitize, CMat, CVec, HermitianFactor};
use crate::network::{ChannelSet, ErrorCovariance, LocalCsi, NetworkConfig};

/// Multipliers of the SINR constraints (`lambda`, global user order) and per-BS power weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl DualState {
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>) -> Self {
        Self { lambda, mu }
    }

    /// `σ²·λᵀγ`, the value the optimum would take at the exact dual solution.
    pub fn dual_objective(&self, config: &NetworkConfig) -> f64 {
        config.noise_power
            * self
                .lambda
                .iter()
                .zip(&config.sinr_target)
                .map(|(l, g)| l * g)
                .sum::<f64>()
    }
}

/// `R_i` for one BS together with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct CovarianceOperator {
    pub bs: usize,
    matrix: CMat,
    factor: HermitianFactor,
}

impl CovarianceOperator {
    pub fn from_matrix(bs: usize, mut matrix: CMat) -> Result<Self> {
        hermitize(&mut matrix);
        debug_assert!(hermitian_defect(&matrix) <= 1e-12);
        let factor = HermitianFactor::new(&matrix).ok_or(Error::NotPositiveDefinite { bs })?;
        Ok(Self { bs, matrix, factor })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `R⁻¹x`.
    pub fn solve(&self, x: &CVec) -> CVec {
        self.factor.solve(x)
    }

    pub fn solve_mat(&self, x: &CMat) -> CMat {
        self.factor.solve_mat(x)
    }

    /// Jitter added during factorization (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }
}

fn assemble(
    bs: usize,
    vectors: &[CVec],
    err_cov: Option<&[ErrorCovariance]>,
    antennas: usize,
    lambda: &[f64],
    mu: f64,
    config: &NetworkConfig,
) -> Result<CovarianceOperator> {
    if vectors.len() != lambda.len() {
        return Err(Error::MalformedChannels(format!(
            "{} channels vs {} multipliers",
            vectors.len(),
            lambda.len()
        )));
    }
    let mut r = CMat::identity(antennas, antennas) * Complex64::new(mu / config.power_budget[bs], 0.0);
    for (u, h) in vectors.iter().enumerate() {
        let weight = lambda[u] * config.sinr_target[u];
        if weight == 0.0 {
            continue;
        }
        r.gerc(Complex64::new(weight, 0.0), h, h, Complex64::new(1.0, 0.0));
        if let Some(err) = err_cov {
            err[u].add_scaled_to(&mut r, weight);
        }
    }
    CovarianceOperator::from_matrix(bs, r)
}

/// `R_i = (μ_i/p_i)·I + Σ_u λ_u γ_u h_{i,u}h_{i,u}ᴴ` from the true channels of BS `bs`.
pub fn assemble_r(channels: &ChannelSet, dual: &DualState, config: &NetworkConfig, bs: usize) -> Result<CovarianceOperator> {
    let csi = channels.local(bs);
    assemble(bs, csi.h, None, csi.antennas, &dual.lambda, dual.mu[bs], config)
}

/// As [`assemble_r`] with `ĥĥᴴ + E` replacing `hhᴴ`.
pub fn assemble_r_hat(channels: &ChannelSet, dual: &DualState, config: &NetworkConfig, bs: usize) -> Result<CovarianceOperator> {
    let csi = channels.local(bs);
    match (csi.est, csi.err_cov) {
        (Some(est), Some(err)) => assemble(bs, est, Some(err), csi.antennas, &dual.lambda, dual.mu[bs], config),
        _ => Err(Error::MissingEstimates),
    }
}

/// Covariance used for design at one BS: `R̂` when the BS holds estimates, `R` otherwise.
pub fn assemble_local(csi: LocalCsi<'_>, lambda: &[f64], mu: f64, config: &NetworkConfig) -> Result<CovarianceOperator> {
    match (csi.est, csi.err_cov) {
        (Some(est), Some(err)) => assemble(csi.bs, est, Some(err), csi.antennas, lambda, mu, config),
        _ => assemble(csi.bs, csi.h, None, csi.antennas, lambda, mu, config),
    }
}

/// One BS's share of a fixed-point step: new multipliers for the users of its own cell.
pub fn local_lambda_step(csi: LocalCsi<'_>, lambda: &[f64], mu: f64, config: &NetworkConfig) -> Result<Vec<f64>> {
    let r = assemble_local(csi, lambda, mu, config)?;
    config
        .cell_users(csi.bs)
        .map(|u| {
            let h = csi.design(u);
            let q = h.dotc(&r.solve(h)).re;
            if q <= 0.0 {
                return Err(Error::ZeroChannel { user: u });
            }
            Ok(1.0 / ((1.0 + config.sinr_target[u]) * q))
        })
        .collect()
}

/// Uniform weights `1/J`, built so that they sum to exactly one.
pub fn default_mu(config: &NetworkConfig) -> Vec<f64> {
    let j = config.num_cells;
    let mut mu = vec![1.0 / j as f64; j];
    // Push the rounding remainder into the last entry so the ordered sum is 1.
    let head: f64 = mu[..j - 1].iter().sum();
    mu[j - 1] = 1.0 - head;
    debug_assert_eq!(mu.iter().sum::<f64>(), 1.0);
    mu
}

/// Per-iteration record of the fixed-point solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LambdaTrace {
    /// `max_u |λ^(m+1)_u − λ^(m)_u|` for each iteration.
    pub max_diff: Vec<f64>,
    /// Real scalars a BS-local run broadcasts in each iteration.
    pub reals_exchanged: Vec<usize>,
    pub converged: bool,
    /// Largest off-diagonal residual `|λ_k(1+γ_k) h_kᴴR⁻¹h_l|` over same-cell pairs, at the final λ.
    pub off_diagonal_residual: f64,
}

impl LambdaTrace {
    pub fn iterations(&self) -> usize {
        self.max_diff.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,max_diff,reals_exchanged\n");
        for (m, (d, r)) in self.max_diff.iter().zip(&self.reals_exchanged).enumerate() {
            out.push_str(&format!("{},{:e},{}\n", m + 1, d, r));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct LambdaSolution {
    pub dual: DualState,
    pub trace: LambdaTrace,
}

/// Initial multiplier value for every user.
pub const LAMBDA_INIT: f64 = 1.0;

/// Jacobi fixed-point iteration `λ_u ← 1/((1+γ_u)·h_uᴴR_i⁻¹h_u)` over all users at once.
///
/// Stops when the largest change is at most `tol`; otherwise returns the last iterate
/// with `converged = false`.
pub fn fixed_point_lambda(
    channels: &ChannelSet,
    config: &NetworkConfig,
    mu: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<LambdaSolution> {
    fixed_point_lambda_from(channels, config, mu, &vec![LAMBDA_INIT; config.num_users()], tol, max_iter)
}

/// [`fixed_point_lambda`] from a caller-chosen starting point.
pub fn fixed_point_lambda_from(
    channels: &ChannelSet,
    config: &NetworkConfig,
    mu: &[f64],
    init: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<LambdaSolution> {
    let n = config.num_users();
    let mut lambda = init.to_vec();
    let mut trace = LambdaTrace::default();
    for _ in 0..max_iter {
        let blocks: Vec<Vec<f64>> = (0..config.num_cells)
            .into_par_iter()
            .map(|bs| local_lambda_step(channels.local(bs), &lambda, mu[bs], config))
            .collect::<Result<_>>()?;
        let next: Vec<f64> = blocks.concat();
        let diff = lambda_diff(&lambda, &next);
        lambda = next;
        trace.max_diff.push(diff);
        trace.reals_exchanged.push(n);
        if diff <= tol {
            trace.converged = true;
            break;
        }
    }
    let dual = DualState::new(lambda, mu.to_vec());
    trace.off_diagonal_residual = off_diagonal_residual(channels, &dual, config)?;
    Ok(LambdaSolution { dual, trace })
}

pub fn lambda_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest `|λ_k(1+γ_k)·h_kᴴR⁻¹h_l|` for distinct users `k`, `l` of the same cell.
pub fn off_diagonal_residual(channels: &ChannelSet, dual: &DualState, config: &NetworkConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for bs in 0..config.num_cells {
        let csi = channels.local(bs);
        let r = assemble_local(csi, &dual.lambda, dual.mu[bs], config)?;
        for k in config.cell_users(bs) {
            let rk = r.solve(csi.design(k));
            for l in config.cell_users(bs) {
                if l != k {
                    let c = csi.design(l).dotc(&rk).norm();
                    worst = worst.max(dual.lambda[k] * (1.0 + config.sinr_target[k]) * c);
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{degrade_csi, generate_channels, generate_layout};

    fn scenario(j: usize, k: usize, m: usize, seed: u64) -> (NetworkConfig, ChannelSet) {
        let cfg = NetworkConfig::uniform(j, k, m);
        let ch = generate_channels(&cfg, &generate_layout(&cfg, seed), seed).unwrap();
        (cfg, ch)
    }

    fn basis(m: usize, k: usize) -> CVec {
        let mut v = CVec::zeros(m);
        v[k] = Complex64::new(1.0, 0.0);
        v
    }

    fn unit_config(m: usize, gamma: f64) -> (NetworkConfig, ChannelSet) {
        let mut cfg = NetworkConfig::uniform(1, 1, m);
        cfg.power_budget = vec![1.0];
        cfg.sinr_target = vec![gamma];
        let ch = ChannelSet {
            antennas: m,
            h: vec![vec![basis(m, 0)]],
            gain: vec![vec![1.0]],
            background: vec![0.0],
            estimate: None,
        };
        (cfg, ch)
    }

    fn naive(vectors: &[CVec], err: Option<&[ErrorCovariance]>, dual: &DualState, cfg: &NetworkConfig, bs: usize) -> CMat {
        let m = vectors[0].len();
        let mut r = CMat::zeros(m, m);
        for a in 0..m {
            r[(a, a)] += Complex64::new(dual.mu[bs] / cfg.power_budget[bs], 0.0);
        }
        for (u, h) in vectors.iter().enumerate() {
            let w = dual.lambda[u] * cfg.sinr_target[u];
            let e = err.map(|e| e[u].to_dense(m));
            for a in 0..m {
                for b in 0..m {
                    let mut x = h[a] * h[b].conj();
                    if let Some(e) = &e {
                        x += e[(a, b)];
                    }
                    r[(a, b)] += x * w;
                }
            }
        }
        r
    }

    fn rel_diff(a: &CMat, b: &CMat) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn zero_multipliers_give_scaled_identity() {
        let (cfg, ch) = unit_config(3, 1.0);
        let r = assemble_r(&ch, &DualState::new(vec![0.0], vec![1.0]), &cfg, 0).unwrap();
        assert_eq!(r.matrix(), &CMat::identity(3, 3));
    }

    #[test]
    fn rank_one_update_on_basis_vector() {
        let (cfg, ch) = unit_config(2, 0.5);
        let r = assemble_r(&ch, &DualState::new(vec![2.0], vec![1.0]), &cfg, 0).unwrap();
        let expected = CMat::from_diagonal(&CVec::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)]));
        assert_eq!(r.matrix(), &expected);
    }

    #[test]
    fn matches_naive_summation() {
        let (cfg, ch) = scenario(2, 2, 4, 3);
        let dual = DualState::new(vec![0.3, 1.2, 0.05, 2.0], vec![0.5, 0.5]);
        for bs in 0..2 {
            let r = assemble_r(&ch, &dual, &cfg, bs).unwrap();
            assert!(rel_diff(r.matrix(), &naive(&ch.h[bs], None, &dual, &cfg, bs)) < 1e-12);
        }
    }

    #[test]
    fn hat_matches_naive_and_reduces_to_perfect() {
        let (cfg, ch) = scenario(2, 2, 4, 5);
        let dual = DualState::new(vec![0.3, 1.2, 0.05, 2.0], vec![0.5, 0.5]);
        let d = degrade_csi(&ch, 0.1, 9).unwrap();
        let est = d.estimate.as_ref().unwrap();
        for bs in 0..2 {
            let r = assemble_r_hat(&d, &dual, &cfg, bs).unwrap();
            let expect = naive(&est.est[bs], Some(&est.err_cov[bs]), &dual, &cfg, bs);
            assert!(rel_diff(r.matrix(), &expect) < 1e-12);
        }
        let exact = degrade_csi(&ch, 0.0, 9).unwrap();
        for bs in 0..2 {
            assert_eq!(
                assemble_r_hat(&exact, &dual, &cfg, bs).unwrap().matrix(),
                assemble_r(&ch, &dual, &cfg, bs).unwrap().matrix()
            );
        }
        let zero = DualState::new(vec![0.0; 4], vec![0.5, 0.5]);
        let r = assemble_r_hat(&d, &zero, &cfg, 0).unwrap();
        assert_eq!(r.matrix(), &(CMat::identity(4, 4) * Complex64::new(0.5 / cfg.power_budget[0], 0.0)));
        assert!(matches!(assemble_r_hat(&ch, &dual, &cfg, 0), Err(Error::MissingEstimates)));
    }

    #[test]
    fn all_zero_weights_are_not_positive_definite() {
        let (cfg, ch) = unit_config(2, 1.0);
        assert!(matches!(
            assemble_r(&ch, &DualState::new(vec![0.0], vec![0.0]), &cfg, 0),
            Err(Error::NotPositiveDefinite { bs: 0 })
        ));
    }

    #[test]
    fn assembly_ignores_other_base_stations() {
        let (cfg, ch) = scenario(2, 2, 4, 8);
        let dual = DualState::new(vec![0.3, 1.2, 0.05, 2.0], vec![0.5, 0.5]);
        let before = assemble_r(&ch, &dual, &cfg, 0).unwrap();
        let mut other = ch.clone();
        for h in &mut other.h[1] {
            *h *= Complex64::new(3.0, -1.0);
        }
        assert_eq!(assemble_r(&other, &dual, &cfg, 0).unwrap().matrix(), before.matrix());
    }

    #[test]
    fn scalar_fixed_point_is_one() {
        let (cfg, ch) = unit_config(2, 1.0);
        let sol = fixed_point_lambda(&ch, &cfg, &[1.0], 1e-12, 200).unwrap();
        assert!(sol.trace.converged);
        assert!((sol.dual.lambda[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn returned_lambda_is_a_fixed_point() {
        let (cfg, ch) = scenario(2, 2, 8, 4);
        let tol = 1e-6;
        let mu = default_mu(&cfg);
        let sol = fixed_point_lambda(&ch, &cfg, &mu, tol, 2000).unwrap();
        assert!(sol.trace.converged);
        let again: Vec<f64> = (0..2)
            .flat_map(|bs| local_lambda_step(ch.local(bs), &sol.dual.lambda, mu[bs], &cfg).unwrap())
            .collect();
        assert!(lambda_diff(&again, &sol.dual.lambda) <= tol);
        assert!(sol.dual.lambda.iter().all(|&l| l > 0.0));
        // diagonal condition
        for bs in 0..2 {
            let r = assemble_r(&ch, &sol.dual, &cfg, bs).unwrap();
            for u in cfg.cell_users(bs) {
                let h = &ch.h[bs][u];
                let lhs = sol.dual.lambda[u] * (1.0 + cfg.sinr_target[u]) * h.dotc(&r.solve(h)).re;
                assert!((lhs - 1.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let (cfg, ch) = scenario(2, 2, 8, 4);
        let sol = fixed_point_lambda(&ch, &cfg, &default_mu(&cfg), 1e-14, 3).unwrap();
        assert!(!sol.trace.converged);
        assert_eq!(sol.trace.iterations(), 3);
        assert_eq!(sol.trace.reals_exchanged, vec![4, 4, 4]);
    }

    #[test]
    fn uniform_mu_sums_to_one() {
        for j in 1..40 {
            let cfg = NetworkConfig::uniform(j, 1, 1);
            let mu = default_mu(&cfg);
            assert_eq!(mu.iter().sum::<f64>(), 1.0);
            assert!(mu.iter().all(|&m| (m - 1.0 / j as f64).abs() < 1e-15));
        }
        assert_eq!(default_mu(&NetworkConfig::uniform(3, 1, 1))[0], 1.0 / 3.0);
    }
}
