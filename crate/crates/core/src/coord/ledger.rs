use std::collections::BTreeMap;

use super::message::{Direction, Message, MessageKind};
use crate::network::NetworkConfig;

/// One delivered message, without its payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageRecord {
    pub seq: usize,
    pub sender: String,
    pub receiver: String,
    pub kind: MessageKind,
    pub complex: usize,
    pub real: usize,
}

/// Scalar counts of everything that crossed the fronthaul.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FronthaulLedger {
    /// `(complex, real)` per kind.
    pub by_kind: BTreeMap<MessageKind, (usize, usize)>,
    pub by_direction: BTreeMap<Direction, (usize, usize)>,
    /// Iterations of the λ fixed point (`I_λ`).
    pub lambda_iterations: usize,
    pub log: Vec<MessageRecord>,
}

fn add(slot: &mut (usize, usize), c: usize, r: usize) {
    slot.0 += c;
    slot.1 += r;
}

impl FronthaulLedger {
    pub fn record(&mut self, msg: &Message) {
        let (c, r) = msg.scalar_count;
        add(self.by_kind.entry(msg.kind).or_default(), c, r);
        add(self.by_direction.entry(msg.direction()).or_default(), c, r);
        self.log.push(MessageRecord {
            seq: self.log.len(),
            sender: msg.sender.to_string(),
            receiver: msg.receiver.to_string(),
            kind: msg.kind,
            complex: c,
            real: r,
        });
    }

    pub fn kind_total(&self, kind: MessageKind) -> (usize, usize) {
        self.by_kind.get(&kind).copied().unwrap_or_default()
    }

    /// Complex scalars of the Gram, reduced-channel and weight messages.
    pub fn solve_complex(&self) -> usize {
        [MessageKind::GramUpload, MessageKind::ReducedChannelsUpload, MessageKind::WeightsDownload]
            .iter()
            .map(|k| self.kind_total(*k).0)
            .sum()
    }

    /// Reals of the λ broadcasts.
    pub fn lambda_reals(&self) -> usize {
        self.kind_total(MessageKind::LambdaBroadcast).1
    }

    /// Everything in complex-scalar units, two reals counting as one complex.
    pub fn complex_equivalent(&self) -> f64 {
        let (c, r) = self
            .by_kind
            .values()
            .fold((0, 0), |acc, (c, r)| (acc.0 + c, acc.1 + r));
        c as f64 + r as f64 / 2.0
    }

    /// Rows `kind,direction,complex_count,real_count` for every kind that was sent.
    pub fn to_csv(&self) -> String {
        let mut per: BTreeMap<(MessageKind, Direction), (usize, usize)> = BTreeMap::new();
        for rec in &self.log {
            let dir = if rec.sender == "cpu" { Direction::Downlink } else { Direction::Uplink };
            add(per.entry((rec.kind, dir)).or_default(), rec.complex, rec.real);
        }
        let mut out = String::from("kind,direction,complex_count,real_count\n");
        for ((kind, dir), (c, r)) in per {
            out.push_str(&format!("{},{},{c},{r}\n", kind.name(), dir.name()));
        }
        out
    }

    /// Message trace `seq,sender,receiver,kind,complex,real`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("seq,sender,receiver,kind,complex,real\n");
        for m in &self.log {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.seq,
                m.sender,
                m.receiver,
                m.kind.name(),
                m.complex,
                m.real
            ));
        }
        out
    }
}

/// Complex scalars to ship every BS's full CSI to the CPU: `M·K·J²`.
pub fn centralized_overhead(config: &NetworkConfig) -> usize {
    config.antennas * config.num_users() * config.num_cells
}

/// `K²J(J+1) + JK` for single-group cells.
pub fn expected_solve_complex(config: &NetworkConfig) -> usize {
    let j = config.num_cells;
    let k = config.users_per_cell();
    k * k * j * (j + 1) + j * k
}
