use num_complex::Complex64;

use super::reduced::{stream_directions, Weights};
use crate::dual::CovarianceOperator;
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::network::{ChannelSet, LocalCsi, NetworkConfig};

/// Transmit vectors, one per stream (cell, group).
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CVec>,
    pub stream_cell: Vec<usize>,
}

impl BeamformerSet {
    /// `Σ_{s∈i} ‖w_s‖²` for every BS.
    pub fn bs_power(&self, num_cells: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_cells];
        for (w, &c) in self.w.iter().zip(&self.stream_cell) {
            out[c] += w.norm_squared();
        }
        out
    }

    pub fn power_margins(&self, config: &NetworkConfig) -> Vec<f64> {
        self.bs_power(config.num_cells)
            .iter()
            .zip(&config.power_budget)
            .map(|(p, b)| p / b)
            .collect()
    }

    pub fn max_power_margin(&self, config: &NetworkConfig) -> f64 {
        self.power_margins(config).into_iter().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w: self.w.iter().map(|w| w * Complex64::new(c, 0.0)).collect(),
            stream_cell: self.stream_cell.clone(),
        }
    }

    /// Largest entrywise magnitude of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.w.len() != other.w.len() {
            return f64::INFINITY;
        }
        self.w
            .iter()
            .zip(&other.w)
            .map(|(a, b)| {
                if a.len() != b.len() {
                    f64::INFINITY
                } else {
                    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `w_s = R_i⁻¹H_s·a_s` for the streams of one BS, using only that BS's CSI and weights.
pub fn reconstruct_local(csi: LocalCsi<'_>, r: &CovarianceOperator, a: &[CVec], config: &NetworkConfig) -> Vec<CVec> {
    stream_directions(csi, r, config)
        .iter()
        .zip(a)
        .map(|(g, a_s)| g * a_s)
        .collect()
}

/// Beamformers of every BS from per-BS covariances and per-stream weights.
pub fn reconstruct_beamformers(
    covs: &[CovarianceOperator],
    channels: &ChannelSet,
    a: &Weights,
    config: &NetworkConfig,
) -> Result<BeamformerSet> {
    if a.len() != config.num_streams() || covs.len() != config.num_cells {
        return Err(Error::MalformedChannels("weights or covariances do not match the streams".into()));
    }
    let g = config.groups_per_cell();
    let mut w = Vec::with_capacity(a.len());
    for (bs, r) in covs.iter().enumerate() {
        w.extend(reconstruct_local(channels.local(bs), r, &a[bs * g..(bs + 1) * g], config));
    }
    Ok(BeamformerSet {
        w,
        stream_cell: (0..config.num_streams()).map(|s| config.stream_cell(s)).collect(),
    })
}

/// Signal and interference powers at each user for arbitrary channel vectors `h[bs][user]`.
fn link_powers(w: &BeamformerSet, h: &[Vec<CVec>], config: &NetworkConfig) -> (Vec<f64>, Vec<f64>) {
    let n = config.num_users();
    let mut signal = vec![0.0; n];
    let mut interference = vec![0.0; n];
    for u in 0..n {
        let serving = config.serving_stream(u);
        for (s, ws) in w.w.iter().enumerate() {
            let p = h[w.stream_cell[s]][u].dotc(ws).norm_sqr();
            if s == serving {
                signal[u] = p;
            } else {
                interference[u] += p;
            }
        }
    }
    (signal, interference)
}

/// Received SINR of every user under the true channels, including uncoordinated interference.
pub fn evaluate_sinr(w: &BeamformerSet, channels: &ChannelSet, config: &NetworkConfig) -> Vec<f64> {
    let (signal, interference) = link_powers(w, &channels.h, config);
    (0..config.num_users())
        .map(|u| signal[u] / (interference[u] + config.noise_power + channels.background[u]))
        .collect()
}

/// `Σ_s w_sᴴE_{i(s),u}w_s` for every user.
pub fn error_energy(w: &BeamformerSet, channels: &ChannelSet, config: &NetworkConfig) -> Result<Vec<f64>> {
    let est = channels.estimate.as_ref().ok_or(Error::MissingEstimates)?;
    Ok((0..config.num_users())
        .map(|u| {
            w.w.iter()
                .zip(&w.stream_cell)
                .map(|(ws, &c)| est.err_cov[c][u].quad(ws))
                .sum()
        })
        .collect())
}

/// Effective SINR perceived from the estimates:
/// `|ĥᴴw_s|² / (Σ_{s'≠s}|ĥᴴw_{s'}|² + Σ_s wᴴEw + σ²)`.
pub fn evaluate_effective_sinr(w: &BeamformerSet, channels: &ChannelSet, config: &NetworkConfig) -> Result<Vec<f64>> {
    let est = channels.estimate.as_ref().ok_or(Error::MissingEstimates)?;
    let (signal, interference) = link_powers(w, &est.est, config);
    let err = error_energy(w, channels, config)?;
    Ok((0..config.num_users())
        .map(|u| signal[u] / (interference[u] + err[u] + config.noise_power + channels.background[u]))
        .collect())
}

/// `min_u SINR_u/γ_u`.
pub fn min_sinr_ratio(sinr: &[f64], config: &NetworkConfig) -> f64 {
    sinr.iter()
        .zip(&config.sinr_target)
        .map(|(s, g)| s / g)
        .fold(f64::INFINITY, f64::min)
}
