use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::NetworkConfig;
use super::layout::{distance, UserLayout, MIN_DISTANCE_FRACTION};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

/// Covariance of a channel-estimation error.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorCovariance {
    /// `ε·I`.
    Scaled(f64),
    Dense(CMat),
}

impl ErrorCovariance {
    /// `wᴴ E w`.
    pub fn quad(&self, w: &CVec) -> f64 {
        match self {
            ErrorCovariance::Scaled(eps) => eps * w.norm_squared(),
            ErrorCovariance::Dense(e) => w.dotc(&(e * w)).re,
        }
    }

    /// Adds `weight·E` to `acc`.
    pub fn add_scaled_to(&self, acc: &mut CMat, weight: f64) {
        match self {
            ErrorCovariance::Scaled(eps) => {
                for k in 0..acc.nrows() {
                    acc[(k, k)] += Complex64::new(weight * eps, 0.0);
                }
            }
            ErrorCovariance::Dense(e) => {
                *acc += e * Complex64::new(weight, 0.0);
            }
        }
    }

    /// `Gᴴ E G`.
    pub fn sandwich(&self, g: &CMat) -> CMat {
        match self {
            ErrorCovariance::Scaled(eps) => g.adjoint() * g * Complex64::new(*eps, 0.0),
            ErrorCovariance::Dense(e) => g.adjoint() * e * g,
        }
    }

    pub fn to_dense(&self, m: usize) -> CMat {
        match self {
            ErrorCovariance::Scaled(eps) => CMat::identity(m, m) * Complex64::new(*eps, 0.0),
            ErrorCovariance::Dense(e) => e.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ErrorCovariance::Scaled(eps) => *eps == 0.0,
            ErrorCovariance::Dense(e) => e.iter().all(|z| *z == Complex64::new(0.0, 0.0)),
        }
    }
}

/// MMSE channel estimates and their error covariances, indexed `[bs][user]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimates {
    pub est: Vec<Vec<CVec>>,
    pub err_cov: Vec<Vec<ErrorCovariance>>,
}

/// Channels from every coordinating BS to every user, `h[bs][user]` in global user order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub antennas: usize,
    pub h: Vec<Vec<CVec>>,
    /// Large-scale gain β of each link.
    pub gain: Vec<Vec<f64>>,
    /// Interference power each user receives from uncoordinated BSs.
    pub background: Vec<f64>,
    pub estimate: Option<Estimates>,
}

/// Borrowed view of one BS's local CSI: its channels to every user.
#[derive(Clone, Copy, Debug)]
pub struct LocalCsi<'a> {
    pub bs: usize,
    pub antennas: usize,
    pub h: &'a [CVec],
    pub est: Option<&'a [CVec]>,
    pub err_cov: Option<&'a [ErrorCovariance]>,
}

impl<'a> LocalCsi<'a> {
    /// Channel used for design: the estimate when present, otherwise the true channel.
    pub fn design(&self, user: usize) -> &'a CVec {
        match self.est {
            Some(est) => &est[user],
            None => &self.h[user],
        }
    }

    pub fn num_users(&self) -> usize {
        self.h.len()
    }
}

/// Owned copy of one BS's local CSI, as held by a BS agent.
#[derive(Clone, Debug, PartialEq)]
pub struct OwnedLocalCsi {
    pub bs: usize,
    pub antennas: usize,
    pub h: Vec<CVec>,
    pub est: Option<Vec<CVec>>,
    pub err_cov: Option<Vec<ErrorCovariance>>,
}

impl OwnedLocalCsi {
    pub fn view(&self) -> LocalCsi<'_> {
        LocalCsi {
            bs: self.bs,
            antennas: self.antennas,
            h: &self.h,
            est: self.est.as_deref(),
            err_cov: self.err_cov.as_deref(),
        }
    }
}

impl ChannelSet {
    pub fn num_bs(&self) -> usize {
        self.h.len()
    }

    pub fn num_users(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    pub fn is_estimated(&self) -> bool {
        self.estimate.is_some()
    }

    pub fn local(&self, bs: usize) -> LocalCsi<'_> {
        LocalCsi {
            bs,
            antennas: self.antennas,
            h: &self.h[bs],
            est: self.estimate.as_ref().map(|e| e.est[bs].as_slice()),
            err_cov: self.estimate.as_ref().map(|e| e.err_cov[bs].as_slice()),
        }
    }

    pub fn owned_local(&self, bs: usize) -> OwnedLocalCsi {
        OwnedLocalCsi {
            bs,
            antennas: self.antennas,
            h: self.h[bs].clone(),
            est: self.estimate.as_ref().map(|e| e.est[bs].clone()),
            err_cov: self.estimate.as_ref().map(|e| e.err_cov[bs].clone()),
        }
    }

    /// Checks shapes against `config` and the PSD requirement on error covariances.
    pub fn validate(&self, config: &NetworkConfig) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedChannels(msg));
        if self.antennas != config.antennas {
            return bad(format!("antennas {} vs config {}", self.antennas, config.antennas));
        }
        if self.h.len() != config.num_cells {
            return bad(format!("{} BSs vs {} cells", self.h.len(), config.num_cells));
        }
        if self.background.len() != config.num_users() {
            return bad("background length".into());
        }
        for row in &self.h {
            if row.len() != config.num_users() {
                return bad("user count".into());
            }
            if row.iter().any(|v| v.len() != self.antennas) {
                return bad("vector length".into());
            }
        }
        if let Some(est) = &self.estimate {
            if est.est.len() != self.h.len() || est.err_cov.len() != self.h.len() {
                return bad("estimate shape".into());
            }
            for (bs, row) in est.err_cov.iter().enumerate() {
                if row.len() != config.num_users() || est.est[bs].len() != config.num_users() {
                    return bad("estimate user count".into());
                }
                for cov in row {
                    match cov {
                        ErrorCovariance::Scaled(eps) if *eps < 0.0 => {
                            return bad("negative error variance".into())
                        }
                        ErrorCovariance::Dense(e) => {
                            if e.nrows() != self.antennas || e.ncols() != self.antennas {
                                return bad("error covariance shape".into());
                            }
                            let eig = nalgebra::SymmetricEigen::new(e.clone());
                            if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
                                return bad("error covariance is not PSD".into());
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Large-scale gain `ξ0·d^(−κ)` with the minimum-distance clamp.
pub fn link_gain(config: &NetworkConfig, d: f64) -> f64 {
    let d = d.max(MIN_DISTANCE_FRACTION * config.cell_radius);
    config.pathloss_constant() * d.powf(-config.pathloss_exponent)
}

/// Draws i.i.d. Rayleigh channels `h ~ CN(0, β·I)` for every coordinating BS and user.
pub fn generate_channels(config: &NetworkConfig, layout: &UserLayout, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    if layout.positions.len() != config.num_cells
        || layout.positions.iter().any(|c| c.len() != config.users_per_cell())
    {
        return Err(Error::LayoutMismatch("user counts differ from configuration".into()));
    }
    if layout.bs_positions.len() < config.network_cells {
        return Err(Error::LayoutMismatch("missing BS positions".into()));
    }
    let users: Vec<_> = layout.users().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = Vec::with_capacity(config.num_cells);
    let mut gain = Vec::with_capacity(config.num_cells);
    for bs in 0..config.num_cells {
        let mut row = Vec::with_capacity(users.len());
        let mut grow = Vec::with_capacity(users.len());
        for (u, p) in users.iter().enumerate() {
            let d = distance(&layout.bs_positions[bs], p);
            if d == 0.0 {
                return Err(Error::DegenerateGeometry { bs, user: u });
            }
            let beta = link_gain(config, d);
            row.push(CVec::from_fn(config.antennas, |_, _| complex_gaussian(&mut rng, beta)));
            grow.push(beta);
        }
        h.push(row);
        gain.push(grow);
    }
    let bg_power = config.background_power();
    let background = users
        .iter()
        .map(|p| {
            (config.num_cells..config.network_cells)
                .map(|b| bg_power * link_gain(config, distance(&layout.bs_positions[b], p)))
                .sum()
        })
        .collect();
    Ok(ChannelSet {
        antennas: config.antennas,
        h,
        gain,
        background,
        estimate: None,
    })
}

/// Splits every channel into an MMSE-style estimate and an independent error with
/// covariance `f·β·I`: `est = (1−f)·h + n`, `n ~ CN(0, f(1−f)β·I)`.
pub fn degrade_csi(channels: &ChannelSet, error_fraction: f64, seed: u64) -> Result<ChannelSet> {
    if channels.estimate.is_some() {
        return Err(Error::AlreadyDegraded);
    }
    if !(0.0..=1.0).contains(&error_fraction) {
        return Err(Error::InvalidConfig {
            field: "csi_error",
            reason: "error fraction must lie in [0, 1]".into(),
        });
    }
    let f = error_fraction;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut est = Vec::with_capacity(channels.h.len());
    let mut err_cov = Vec::with_capacity(channels.h.len());
    for (bs, row) in channels.h.iter().enumerate() {
        let mut erow = Vec::with_capacity(row.len());
        let mut crow = Vec::with_capacity(row.len());
        for (u, h) in row.iter().enumerate() {
            let beta = channels.gain[bs][u];
            if f == 0.0 {
                erow.push(h.clone());
            } else {
                let nv = f * (1.0 - f) * beta;
                erow.push(h.map(|x| x * (1.0 - f) + complex_gaussian(&mut rng, nv)));
            }
            crow.push(ErrorCovariance::Scaled(f * beta));
        }
        est.push(erow);
        err_cov.push(crow);
    }
    Ok(ChannelSet {
        estimate: Some(Estimates { est, err_cov }),
        ..channels.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::layout::generate_layout;

    fn single_link(antennas: usize, d: f64) -> (NetworkConfig, UserLayout) {
        let cfg = NetworkConfig::uniform(1, 1, antennas);
        let layout = UserLayout {
            bs_positions: vec![[0.0, 0.0]],
            positions: vec![vec![[d, 0.0]]],
        };
        (cfg, layout)
    }

    #[test]
    fn unit_distance_gain_is_boundary_calibration() {
        let (cfg, layout) = single_link(4, 1.0);
        let ch = generate_channels(&cfg, &layout, 0).unwrap();
        assert!((ch.gain[0][0] - cfg.noise_power * 10f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn doubling_distance_scales_gain() {
        let (cfg, l1) = single_link(4, 0.4);
        let (_, l2) = single_link(4, 0.8);
        let g1 = generate_channels(&cfg, &l1, 0).unwrap().gain[0][0];
        let g2 = generate_channels(&cfg, &l2, 0).unwrap().gain[0][0];
        assert!((g2 / g1 - 2f64.powf(-3.5)).abs() < 1e-12);
    }

    #[test]
    fn sample_variance_matches_gain() {
        let (cfg, layout) = single_link(10_000, 0.5);
        let ch = generate_channels(&cfg, &layout, 7).unwrap();
        let var = ch.h[0][0].iter().map(|z| z.norm_sqr()).sum::<f64>() / 10_000.0;
        assert!((var / ch.gain[0][0] - 1.0).abs() < 0.03);
    }

    #[test]
    fn colocated_user_is_rejected() {
        let (cfg, layout) = single_link(4, 0.0);
        assert!(matches!(
            generate_channels(&cfg, &layout, 0),
            Err(Error::DegenerateGeometry { bs: 0, user: 0 })
        ));
    }

    #[test]
    fn generation_is_pure() {
        let cfg = NetworkConfig::uniform(2, 2, 8);
        let layout = generate_layout(&cfg, 3);
        assert_eq!(
            generate_channels(&cfg, &layout, 9).unwrap(),
            generate_channels(&cfg, &layout, 9).unwrap()
        );
    }

    #[test]
    fn background_interference_only_from_uncoordinated_cells() {
        let cfg = NetworkConfig::uniform(1, 2, 4);
        let layout = generate_layout(&cfg, 1);
        let ch = generate_channels(&cfg, &layout, 1).unwrap();
        assert!(ch.background.iter().all(|&b| b == 0.0));
        let cfg = cfg.with_network_cells(3);
        let layout = generate_layout(&cfg, 1);
        let ch = generate_channels(&cfg, &layout, 1).unwrap();
        assert!(ch.background.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn zero_error_keeps_channels() {
        let cfg = NetworkConfig::uniform(2, 2, 8);
        let ch = generate_channels(&cfg, &generate_layout(&cfg, 0), 0).unwrap();
        let d = degrade_csi(&ch, 0.0, 5).unwrap();
        let est = d.estimate.as_ref().unwrap();
        assert_eq!(est.est, ch.h);
        assert!(est.err_cov.iter().flatten().all(ErrorCovariance::is_zero));
        assert!(matches!(degrade_csi(&d, 0.1, 1), Err(Error::AlreadyDegraded)));
    }

    #[test]
    fn full_error_leaves_no_estimate() {
        let cfg = NetworkConfig::uniform(1, 1, 64);
        let ch = generate_channels(&cfg, &generate_layout(&cfg, 0), 0).unwrap();
        let d = degrade_csi(&ch, 1.0, 5).unwrap();
        assert!(d.estimate.unwrap().est[0][0].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn error_covariance_matches_sample() {
        let (cfg, layout) = single_link(10_000, 0.5);
        let ch = generate_channels(&cfg, &layout, 11).unwrap();
        let d = degrade_csi(&ch, 0.1, 12).unwrap();
        let est = d.estimate.as_ref().unwrap();
        let err = &ch.h[0][0] - &est.est[0][0];
        let var = err.iter().map(|z| z.norm_sqr()).sum::<f64>() / 10_000.0;
        let target = match &est.err_cov[0][0] {
            ErrorCovariance::Scaled(e) => *e,
            _ => unreachable!(),
        };
        assert!((var / target - 1.0).abs() < 0.05, "{var} vs {target}");
        // estimate and error are uncorrelated
        let cross = est.est[0][0].dotc(&err).norm() / 10_000.0;
        assert!(cross < 0.05 * ch.gain[0][0]);
    }
}
