//! BS and CPU agents driven by a single deterministic scheduler.

use std::time::Instant;

use num_complex::Complex64;

use super::ledger::FronthaulLedger;
use super::message::{AgentId, Message, MessageKind, Payload};
use crate::dual::{lambda_diff, local_lambda_step, CovarianceOperator, LAMBDA_INIT};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::network::{ChannelSet, NetworkConfig, OwnedLocalCsi};
use crate::solver::{
    bs_prepare, cpu_solve, evaluate_effective_sinr, evaluate_sinr, min_sinr_ratio, reconstruct_local, user_noise,
    BeamformerSet, BsUpload, CpuResult, SolverSettings, StageTimes, StreamData,
};

/// Holds one BS's local CSI and nothing else.
pub struct BsAgent {
    pub id: usize,
    csi: OwnedLocalCsi,
    mu: f64,
    /// Latest full λ, assembled from broadcasts.
    lambda: Vec<f64>,
    cov: Option<CovarianceOperator>,
}

impl BsAgent {
    pub fn new(csi: OwnedLocalCsi, mu: f64, config: &NetworkConfig) -> Self {
        Self {
            id: csi.bs,
            csi,
            mu,
            lambda: vec![LAMBDA_INIT; config.num_users()],
            cov: None,
        }
    }

    /// Computes the own-cell λ entries from the current full λ.
    pub fn lambda_step(&self, config: &NetworkConfig) -> Result<Message> {
        let own = local_lambda_step(self.csi.view(), &self.lambda, self.mu, config)?;
        Ok(Message::new(AgentId::Bs(self.id), AgentId::AllBs, Payload::Lambda(own)))
    }

    /// Installs a broadcast from `sender`.
    pub fn receive_lambda(&mut self, sender: usize, values: &[f64], config: &NetworkConfig) {
        for (u, v) in config.cell_users(sender).zip(values) {
            self.lambda[u] = *v;
        }
    }

    /// Final covariance and the reduced-data uploads.
    pub fn prepare(&mut self, config: &NetworkConfig) -> Result<Vec<Message>> {
        let (cov, upload) = bs_prepare(self.csi.view(), &self.lambda, self.mu, config)?;
        self.cov = Some(cov);
        let me = AgentId::Bs(self.id);
        let (grams, f): (Vec<CMat>, Vec<Vec<CVec>>) = upload.streams.into_iter().map(|s| (s.gram, s.f)).unzip();
        let mut out = vec![
            Message::new(me, AgentId::Cpu, Payload::Gram(grams)),
            Message::new(me, AgentId::Cpu, Payload::Reduced(f)),
        ];
        if let Some(eg) = upload.error_grams {
            out.push(Message::new(me, AgentId::Cpu, Payload::ErrorGram(eg)));
        }
        Ok(out)
    }

    /// Local beamformers from the downloaded weights.
    pub fn reconstruct(&self, weights: &[CVec], config: &NetworkConfig) -> Result<Vec<CVec>> {
        let cov = self.cov.as_ref().ok_or(Error::Oracle("weights arrived before stage I finished".into()))?;
        Ok(reconstruct_local(self.csi.view(), cov, weights, config))
    }
}

/// Collects the uploads and runs the reduced solve.
pub struct CpuAgent {
    grams: Vec<Option<Vec<CMat>>>,
    reduced: Vec<Option<Vec<Vec<CVec>>>>,
    error_grams: Vec<Option<Vec<Vec<CMat>>>>,
    /// Receiver noise plus uncoordinated interference per user (scenario constants).
    noise: Vec<f64>,
}

impl CpuAgent {
    pub fn new(config: &NetworkConfig, noise: Vec<f64>) -> Self {
        let j = config.num_cells;
        Self {
            grams: vec![None; j],
            reduced: vec![None; j],
            error_grams: vec![None; j],
            noise,
        }
    }

    pub fn receive(&mut self, msg: Message) -> Result<()> {
        let AgentId::Bs(bs) = msg.sender else {
            return Err(Error::Oracle("cpu received a message from itself".into()));
        };
        match msg.payload {
            Payload::Gram(g) => self.grams[bs] = Some(g),
            Payload::Reduced(f) => self.reduced[bs] = Some(f),
            Payload::ErrorGram(e) => self.error_grams[bs] = Some(e),
            _ => return Err(Error::Oracle(format!("unexpected {} at the cpu", msg.kind.name()))),
        }
        Ok(())
    }

    /// Stage II, then one weights message per BS.
    pub fn solve(&mut self, config: &NetworkConfig, settings: &SolverSettings) -> Result<(CpuResult, Vec<Message>)> {
        let g = config.groups_per_cell();
        let uploads: Vec<BsUpload> = (0..config.num_cells)
            .map(|bs| {
                let grams = self.grams[bs].take().ok_or(Error::Oracle(format!("missing gram upload from bs{bs}")))?;
                let f = self.reduced[bs].take().ok_or(Error::Oracle(format!("missing reduced upload from bs{bs}")))?;
                let streams = grams
                    .into_iter()
                    .zip(f)
                    .enumerate()
                    .map(|(group, (gram, f))| StreamData::new(bs, group, gram, f))
                    .collect();
                Ok(BsUpload {
                    streams,
                    error_grams: self.error_grams[bs].take(),
                })
            })
            .collect::<Result<_>>()?;
        let (problem, grams) = crate::solver::assemble_uploads(uploads, self.noise.clone(), config)?;
        let result = cpu_solve(&problem, grams.as_deref(), settings)?;
        let messages = (0..config.num_cells)
            .map(|bs| {
                Message::new(
                    AgentId::Cpu,
                    AgentId::Bs(bs),
                    Payload::Weights(result.weights[bs * g..(bs + 1) * g].to_vec()),
                )
            })
            .collect();
        Ok((result, messages))
    }
}

/// Test hook: perturbs the first scalar of the first message of `kind` sent by `bs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corruption {
    pub kind: MessageKind,
    pub bs: usize,
    pub delta: f64,
}

/// Delivery point for every message; records it and applies the optional corruption.
struct Fronthaul {
    ledger: FronthaulLedger,
    corruption: Option<Corruption>,
}

impl Fronthaul {
    fn send(&mut self, mut msg: Message) -> Message {
        self.ledger.record(&msg);
        if let Some(c) = self.corruption {
            let touches = msg.sender == AgentId::Bs(c.bs) || msg.receiver == AgentId::Bs(c.bs);
            if msg.kind == c.kind && touches {
                corrupt(&mut msg.payload, c.delta);
                self.corruption = None;
            }
        }
        msg
    }
}

fn corrupt(payload: &mut Payload, delta: f64) {
    let d = Complex64::new(delta, 0.0);
    match payload {
        Payload::Lambda(v) => v[0] += delta,
        Payload::Gram(g) => g[0][(0, 0)] += d,
        Payload::Reduced(f) => f[0][0][0] += d,
        Payload::ErrorGram(e) => e[0][0][(0, 0)] += d,
        Payload::Weights(a) => a[0][0] += d,
    }
}

#[derive(Clone, Debug)]
pub struct DistributedSolution {
    pub beamformers: BeamformerSet,
    pub cpu: CpuResult,
    pub lambda: Vec<f64>,
    pub lambda_converged: bool,
    pub max_power_margin: f64,
    pub min_sinr_ratio: f64,
    pub times: StageTimes,
}

/// Runs the three stages with explicit messages. The ledger covers every completed stage,
/// also when a later stage fails.
pub fn run_distributed(
    channels: &ChannelSet,
    config: &NetworkConfig,
    settings: &SolverSettings,
) -> (FronthaulLedger, Result<DistributedSolution>) {
    run_with_corruption(channels, config, settings, None)
}

pub fn run_with_corruption(
    channels: &ChannelSet,
    config: &NetworkConfig,
    settings: &SolverSettings,
    corruption: Option<Corruption>,
) -> (FronthaulLedger, Result<DistributedSolution>) {
    let mut net = Fronthaul {
        ledger: FronthaulLedger::default(),
        corruption,
    };
    let result = drive(channels, config, settings, &mut net);
    (net.ledger, result)
}

fn drive(
    channels: &ChannelSet,
    config: &NetworkConfig,
    settings: &SolverSettings,
    net: &mut Fronthaul,
) -> Result<DistributedSolution> {
    config.validate()?;
    channels.validate(config)?;
    let mu = settings.mu(config);
    let mut bss: Vec<BsAgent> = (0..config.num_cells)
        .map(|bs| BsAgent::new(channels.owned_local(bs), mu[bs], config))
        .collect();
    let mut cpu = CpuAgent::new(config, user_noise(channels, config));

    // Stage I: synchronous rounds; every BS broadcasts its own entries, then all listen.
    let start = Instant::now();
    let mut converged = false;
    for _ in 0..settings.lambda_max_iter {
        let before = bss[0].lambda.clone();
        let sent: Vec<Message> = bss
            .iter()
            .map(|b| b.lambda_step(config).map(|m| net.send(m)))
            .collect::<Result<_>>()?;
        net.ledger.lambda_iterations += 1;
        for b in bss.iter_mut() {
            for m in &sent {
                if let (AgentId::Bs(from), Payload::Lambda(v)) = (m.sender, &m.payload) {
                    b.receive_lambda(from, v, config);
                }
            }
        }
        if lambda_diff(&before, &bss[0].lambda) <= settings.lambda_tol {
            converged = true;
            break;
        }
    }
    for b in bss.iter_mut() {
        for m in b.prepare(config)? {
            cpu.receive(net.send(m))?;
        }
    }
    let stage1 = start.elapsed();

    let start = Instant::now();
    let (result, downloads) = cpu.solve(config, settings)?;
    let stage2 = start.elapsed();

    let start = Instant::now();
    let mut w = Vec::with_capacity(config.num_streams());
    for (b, m) in bss.iter().zip(downloads) {
        let m = net.send(m);
        let Payload::Weights(a) = &m.payload else {
            unreachable!("cpu only sends weights");
        };
        w.extend(b.reconstruct(a, config)?);
    }
    let stage3 = start.elapsed();

    let beamformers = BeamformerSet {
        w,
        stream_cell: (0..config.num_streams()).map(|s| config.stream_cell(s)).collect(),
    };
    let sinr = if channels.is_estimated() {
        evaluate_effective_sinr(&beamformers, channels, config)?
    } else {
        evaluate_sinr(&beamformers, channels, config)
    };
    Ok(DistributedSolution {
        max_power_margin: beamformers.max_power_margin(config),
        min_sinr_ratio: min_sinr_ratio(&sinr, config),
        beamformers,
        cpu: result,
        lambda: bss[0].lambda.clone(),
        lambda_converged: converged,
        times: StageTimes { stage1, stage2, stage3 },
    })
}
