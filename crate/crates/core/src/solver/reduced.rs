use crate::dual::CovarianceOperator;
use crate::error::{Error, Result};
use crate::linalg::{hermitize, quad_form, CMat, CVec};
use crate::network::{ChannelSet, LocalCsi, NetworkConfig};

/// Weight vectors, one per stream (cell, group).
pub type Weights = Vec<CVec>;

/// The M-independent data one stream contributes: `G_sᴴG_s` and `f_{s,u} = G_sᴴh_{i,u}`
/// for every user `u`, where `G_s = R_i⁻¹H_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamData {
    pub cell: usize,
    pub group: usize,
    pub gram: CMat,
    pub f: Vec<CVec>,
    /// Per user, vectors `v` with `Σ vvᴴ = G_sᴴE_uG_s`: the estimation-error energy
    /// `a_sᴴG_sᴴE_uG_sa_s` enters user `u`'s interference as `Σ|a_sᴴv|²`. Empty with perfect CSI.
    pub err: Vec<Vec<CVec>>,
}

impl StreamData {
    pub fn new(cell: usize, group: usize, gram: CMat, f: Vec<CVec>) -> Self {
        Self {
            cell,
            group,
            gram,
            f,
            err: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// Error directions of `user` (empty when there are none).
    pub fn error_directions(&self, user: usize) -> &[CVec] {
        self.err.get(user).map_or(&[], |v| v.as_slice())
    }
}

/// Factors a PSD error Gram into the columns `√ε_k·v_k` of its significant eigenpairs.
pub fn error_directions(q: &CMat) -> Vec<CVec> {
    let eig = nalgebra::SymmetricEigen::new({
        let mut m = q.clone();
        hermitize(&mut m);
        m
    });
    let cutoff = 1e-13 * q.trace().re.abs();
    eig.eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(e, _)| **e > cutoff && **e > 0.0)
        .map(|(e, v)| v.into_owned() * num_complex::Complex64::new(e.sqrt(), 0.0))
        .collect()
}

/// Reduced problem the CPU works on.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedProblem {
    pub num_cells: usize,
    pub streams: Vec<StreamData>,
    pub power_budget: Vec<f64>,
    pub sinr_target: Vec<f64>,
    /// Noise plus uncoordinated interference seen by each user.
    pub noise: Vec<f64>,
    /// Serving stream of each user.
    pub serving: Vec<usize>,
}

/// Per-user received signal and coordinated interference for given weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkBudget {
    pub signal: Vec<f64>,
    pub interference: Vec<f64>,
}

/// `G_s = R_i⁻¹H_s` for the streams of one BS.
pub fn stream_directions(csi: LocalCsi<'_>, r: &CovarianceOperator, config: &NetworkConfig) -> Vec<CMat> {
    (0..config.groups_per_cell())
        .map(|g| {
            let stream = config.stream_index(csi.bs, g);
            let users: Vec<CVec> = config.stream_users(stream).map(|u| csi.design(u).clone()).collect();
            r.solve_mat(&CMat::from_columns(&users))
        })
        .collect()
}

/// Reduced data of the streams of one BS, computed from that BS's CSI only.
pub fn reduce_local(csi: LocalCsi<'_>, r: &CovarianceOperator, config: &NetworkConfig) -> Vec<StreamData> {
    stream_directions(csi, r, config)
        .into_iter()
        .enumerate()
        .map(|(g, dirs)| {
            let mut gram = dirs.adjoint() * &dirs;
            hermitize(&mut gram);
            let f = (0..config.num_users()).map(|u| dirs.adjoint() * csi.design(u)).collect();
            StreamData::new(csi.bs, g, gram, f)
        })
        .collect()
}

/// Error Grams `G_sᴴE_{i,u}G_s` for the streams of one BS, indexed `[group][user]`.
pub fn error_grams_local(csi: LocalCsi<'_>, r: &CovarianceOperator, config: &NetworkConfig) -> Result<Vec<Vec<CMat>>> {
    let err = csi.err_cov.ok_or(Error::MissingEstimates)?;
    Ok(stream_directions(csi, r, config)
        .iter()
        .map(|dirs| err.iter().map(|e| e.sandwich(dirs)).collect())
        .collect())
}

/// Builds the reduced problem from per-BS covariances.
pub fn reduce(channels: &ChannelSet, covs: &[CovarianceOperator], config: &NetworkConfig) -> Result<ReducedProblem> {
    if covs.len() != config.num_cells {
        return Err(Error::MalformedChannels("one covariance per BS is required".into()));
    }
    let streams = covs
        .iter()
        .enumerate()
        .flat_map(|(bs, r)| reduce_local(channels.local(bs), r, config))
        .collect();
    ReducedProblem::assemble(streams, user_noise(channels, config), config)
}

/// Receiver noise plus uncoordinated interference of every user.
pub fn user_noise(channels: &ChannelSet, config: &NetworkConfig) -> Vec<f64> {
    channels.background.iter().map(|b| config.noise_power + b).collect()
}

impl ReducedProblem {
    /// Wraps uploaded stream data with the scenario constants.
    pub fn assemble(streams: Vec<StreamData>, noise: Vec<f64>, config: &NetworkConfig) -> Result<Self> {
        let problem = Self {
            num_cells: config.num_cells,
            streams,
            power_budget: config.power_budget.clone(),
            sinr_target: config.sinr_target.clone(),
            noise,
            serving: (0..config.num_users()).map(|u| config.serving_stream(u)).collect(),
        };
        problem.check()?;
        Ok(problem)
    }

    fn check(&self) -> Result<()> {
        for u in 0..self.num_users() {
            let s = self.serving[u];
            if self.streams[s].f[u].iter().all(|z| z.norm_sqr() == 0.0) {
                return Err(Error::ZeroChannel { user: u });
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.serving.len()
    }

    pub fn num_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn cell_streams(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.streams.len()).filter(move |&s| self.streams[s].cell == cell)
    }

    /// `(1/p_i) Σ_{s∈i} a_sᴴ gram_s a_s` for every BS.
    pub fn power_margins(&self, a: &[CVec]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_cells];
        for (s, st) in self.streams.iter().enumerate() {
            out[st.cell] += quad_form(&st.gram, &a[s]);
        }
        for (i, p) in out.iter_mut().enumerate() {
            *p /= self.power_budget[i];
        }
        out
    }

    pub fn max_power_margin(&self, a: &[CVec]) -> f64 {
        self.power_margins(a).into_iter().fold(0.0, f64::max)
    }

    /// Number of error directions `user` sees from each stream.
    pub fn error_counts(&self, user: usize) -> Vec<usize> {
        self.streams.iter().map(|st| st.error_directions(user).len()).collect()
    }

    /// Length of a user's projection vector: one entry per stream, then the error directions.
    pub fn projection_len(&self, user: usize) -> usize {
        self.num_streams() + self.error_counts(user).iter().sum::<usize>()
    }

    /// `[a_sᴴf_{s,u} for every s] ++ [a_sᴴv for every error direction v of (s, u)]`.
    pub fn user_projections(&self, a: &[CVec], user: usize) -> CVec {
        let direct = self.streams.iter().zip(a).map(|(st, a_s)| a_s.dotc(&st.f[user]));
        let errors = self
            .streams
            .iter()
            .zip(a)
            .flat_map(|(st, a_s)| st.error_directions(user).iter().map(move |v| a_s.dotc(v)));
        CVec::from_iterator(self.projection_len(user), direct.chain(errors))
    }

    /// `user_projections` for every user, indexed `[user][entry]`.
    pub fn projections(&self, a: &[CVec]) -> Vec<CVec> {
        (0..self.num_users()).map(|u| self.user_projections(a, u)).collect()
    }

    /// Attaches the uploaded error Grams (`[stream][user]`) as error directions.
    pub fn with_error_grams(mut self, grams: &[Vec<CMat>]) -> Self {
        for (st, g) in self.streams.iter_mut().zip(grams) {
            st.err = g.iter().map(error_directions).collect();
        }
        self
    }

    pub fn link_budget(&self, a: &[CVec]) -> LinkBudget {
        let proj = self.projections(a);
        let mut signal = Vec::with_capacity(self.num_users());
        let mut interference = Vec::with_capacity(self.num_users());
        for (u, p) in proj.iter().enumerate() {
            let s = self.serving[u];
            let total: f64 = p.iter().map(|z| z.norm_sqr()).sum();
            signal.push(p[s].norm_sqr());
            interference.push(total - p[s].norm_sqr());
        }
        LinkBudget { signal, interference }
    }

    pub fn sinr(&self, a: &[CVec]) -> Vec<f64> {
        let lb = self.link_budget(a);
        (0..self.num_users())
            .map(|u| lb.signal[u] / (lb.interference[u] + self.noise[u]))
            .collect()
    }

    /// `min_u SINR_u/γ_u − 1`.
    pub fn min_sinr_slack(&self, a: &[CVec]) -> f64 {
        self.sinr(a)
            .iter()
            .zip(&self.sinr_target)
            .map(|(s, g)| s / g - 1.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy with every user's noise normalized to one (reduced channels scaled by `1/σ_u`).
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for st in &mut out.streams {
            for (u, f) in st.f.iter_mut().enumerate() {
                *f /= num_complex::Complex64::new(self.noise[u].sqrt(), 0.0);
            }
            for (u, dirs) in st.err.iter_mut().enumerate() {
                for v in dirs {
                    *v /= num_complex::Complex64::new(self.noise[u].sqrt(), 0.0);
                }
            }
        }
        out.noise = vec![1.0; self.num_users()];
        out
    }
}

/// Smallest common scale `c` such that every user meets its target with `c·a`, given extra
/// per-user denominator terms `extra[u]` that scale like `c²`.
///
/// Returns `None` when some user has `S_u ≤ γ_u·(I_u + extra_u)`, since no scaling helps then.
pub fn feasibility_scale(signal: &[f64], interference: &[f64], noise: &[f64], gamma: &[f64]) -> Option<f64> {
    let mut c2 = 0.0f64;
    for u in 0..signal.len() {
        let margin = signal[u] - gamma[u] * interference[u];
        if !(margin > 0.0) {
            return None;
        }
        c2 = c2.max(gamma[u] * noise[u] / margin);
    }
    Some(c2.sqrt())
}

impl ReducedProblem {
    /// Scales `a` so the tightest SINR constraint holds with equality.
    pub fn scale_to_feasible(&self, a: &[CVec]) -> Option<Weights> {
        let lb = self.link_budget(a);
        let c = feasibility_scale(&lb.signal, &lb.interference, &self.noise, &self.sinr_target)?;
        Some(a.iter().map(|x| x * num_complex::Complex64::new(c, 0.0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{assemble_r, default_mu, DualState};
    use crate::network::{generate_channels, generate_layout};
    use num_complex::Complex64;

    fn instance(j: usize, k: usize, m: usize, seed: u64) -> (NetworkConfig, ChannelSet, Vec<CovarianceOperator>) {
        let cfg = NetworkConfig::uniform(j, k, m);
        let ch = generate_channels(&cfg, &generate_layout(&cfg, seed), seed).unwrap();
        let lambda: Vec<f64> = (0..cfg.num_users()).map(|u| 0.1 + 0.05 * u as f64).collect();
        let dual = DualState::new(lambda, default_mu(&cfg));
        let covs = (0..j).map(|bs| assemble_r(&ch, &dual, &cfg, bs).unwrap()).collect();
        (cfg, ch, covs)
    }

    fn identity_covs(cfg: &NetworkConfig) -> Vec<CovarianceOperator> {
        (0..cfg.num_cells)
            .map(|bs| CovarianceOperator::from_matrix(bs, CMat::identity(cfg.antennas, cfg.antennas)).unwrap())
            .collect()
    }

    #[test]
    fn identity_covariance_gives_plain_grams() {
        let (cfg, ch, _) = instance(2, 2, 4, 1);
        let p = reduce(&ch, &identity_covs(&cfg), &cfg).unwrap();
        let h0 = CMat::from_columns(&[ch.h[0][0].clone(), ch.h[0][1].clone()]);
        assert!((&p.streams[0].gram - h0.adjoint() * &h0).norm() < 1e-12);
        assert!((&p.streams[0].f[1] - h0.adjoint() * &ch.h[0][1]).norm() < 1e-12);
    }

    #[test]
    fn scalar_reduction() {
        let mut cfg = NetworkConfig::uniform(1, 1, 2);
        cfg.power_budget = vec![1.0];
        let mut h = CVec::zeros(2);
        h[0] = Complex64::new(1.0, 0.0);
        let ch = ChannelSet {
            antennas: 2,
            h: vec![vec![h]],
            gain: vec![vec![1.0]],
            background: vec![0.0],
            estimate: None,
        };
        let r = CovarianceOperator::from_matrix(
            0,
            CMat::from_diagonal(&CVec::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)])),
        )
        .unwrap();
        let p = reduce(&ch, &[r], &cfg).unwrap();
        assert!((p.streams[0].gram[(0, 0)].re - 0.25).abs() < 1e-15);
        assert!((p.streams[0].f[0][0].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_explicit_inverse() {
        let (cfg, ch, covs) = instance(2, 2, 6, 2);
        let p = reduce(&ch, &covs, &cfg).unwrap();
        for bs in 0..2 {
            let rinv = covs[bs].matrix().clone().try_inverse().unwrap();
            let h = CMat::from_columns(&[ch.h[bs][2 * bs].clone(), ch.h[bs][2 * bs + 1].clone()]);
            let g = &rinv * h;
            let gram = g.adjoint() * &g;
            assert!((&p.streams[bs].gram - &gram).norm() / gram.norm() < 1e-10);
            for u in 0..4 {
                let f = g.adjoint() * &ch.h[bs][u];
                assert!((&p.streams[bs].f[u] - &f).norm() / f.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn reduced_sinr_matches_full_dimension() {
        let (cfg, ch, covs) = instance(2, 2, 6, 3);
        let p = reduce(&ch, &covs, &cfg).unwrap();
        let a: Weights = vec![
            CVec::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2)]),
            CVec::from_vec(vec![Complex64::new(0.2, -1.0), Complex64::new(0.7, 0.0)]),
        ];
        let w: Vec<CVec> = (0..2)
            .map(|bs| {
                let h = CMat::from_columns(&[ch.h[bs][2 * bs].clone(), ch.h[bs][2 * bs + 1].clone()]);
                covs[bs].solve_mat(&h) * &a[bs]
            })
            .collect();
        let sinr = p.sinr(&a);
        for u in 0..4 {
            let s = u / 2;
            let sig = ch.h[s][u].dotc(&w[s]).norm_sqr();
            let int = ch.h[1 - s][u].dotc(&w[1 - s]).norm_sqr();
            assert!((sinr[u] - sig / (int + 1.0)).abs() / sinr[u] < 1e-10);
        }
        let margins = p.power_margins(&a);
        for bs in 0..2 {
            assert!((margins[bs] - w[bs].norm_squared() / cfg.power_budget[bs]).abs() < 1e-10 * margins[bs]);
        }
    }

    #[test]
    fn scaling_makes_tightest_constraint_active() {
        let (cfg, ch, covs) = instance(2, 2, 16, 4);
        let p = reduce(&ch, &covs, &cfg).unwrap();
        let ones: Weights = (0..2).map(|_| CVec::from_element(2, Complex64::new(1.0, 0.0))).collect();
        let scaled = p.scale_to_feasible(&ones).unwrap();
        assert!(p.min_sinr_slack(&scaled).abs() < 1e-10);
    }

    #[test]
    fn normalization_preserves_sinr() {
        let (cfg, ch, covs) = instance(2, 2, 8, 5);
        let mut p = reduce(&ch, &covs, &cfg).unwrap();
        p.noise = vec![0.5, 2.0, 1.0, 3.0];
        let a: Weights = (0..2).map(|_| CVec::from_element(2, Complex64::new(1.0, -1.0))).collect();
        let n = p.normalized();
        for (x, y) in p.sinr(&a).iter().zip(n.sinr(&a)) {
            assert!((x - y).abs() < 1e-12 * x);
        }
    }
}
