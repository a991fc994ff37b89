//! Fronthaul messages. Payload types carry only reduced-dimension data, so a raw channel
//! vector cannot be put on the wire.

use std::fmt;

use crate::linalg::{CMat, CVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentId {
    Bs(usize),
    Cpu,
    /// Every BS agent; used by the λ broadcast.
    AllBs,
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Bs(i) => write!(f, "bs{i}"),
            AgentId::Cpu => write!(f, "cpu"),
            AgentId::AllBs => write!(f, "all_bs"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    LambdaBroadcast,
    GramUpload,
    ReducedChannelsUpload,
    /// Error Grams for the effective-SINR scaling; sent only with estimated CSI.
    ErrorGramUpload,
    WeightsDownload,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::LambdaBroadcast,
        MessageKind::GramUpload,
        MessageKind::ReducedChannelsUpload,
        MessageKind::ErrorGramUpload,
        MessageKind::WeightsDownload,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::LambdaBroadcast => "lambda_broadcast",
            MessageKind::GramUpload => "gram_upload",
            MessageKind::ReducedChannelsUpload => "reduced_channels_upload",
            MessageKind::ErrorGramUpload => "error_gram_upload",
            MessageKind::WeightsDownload => "weights_download",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Towards the fronthaul (BS to CPU, or a BS broadcast).
    Uplink,
    Downlink,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Uplink => "uplink",
            Direction::Downlink => "downlink",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// The sender's own λ entries.
    Lambda(Vec<f64>),
    /// One Gram per local stream.
    Gram(Vec<CMat>),
    /// `f[local stream][user]`.
    Reduced(Vec<Vec<CVec>>),
    /// `[local stream][user]`.
    ErrorGram(Vec<Vec<CMat>>),
    /// Weights of the receiving BS's streams.
    Weights(Vec<CVec>),
}

impl Payload {
    /// `(complex, real)` scalars carried.
    pub fn scalar_count(&self) -> (usize, usize) {
        match self {
            Payload::Lambda(v) => (0, v.len()),
            Payload::Gram(g) => (g.iter().map(|m| m.len()).sum(), 0),
            Payload::Reduced(f) => (f.iter().flatten().map(|v| v.len()).sum(), 0),
            Payload::ErrorGram(g) => (g.iter().flatten().map(|m| m.len()).sum(), 0),
            Payload::Weights(a) => (a.iter().map(|v| v.len()).sum(), 0),
        }
    }

    fn kind(&self) -> MessageKind {
        match self {
            Payload::Lambda(_) => MessageKind::LambdaBroadcast,
            Payload::Gram(_) => MessageKind::GramUpload,
            Payload::Reduced(_) => MessageKind::ReducedChannelsUpload,
            Payload::ErrorGram(_) => MessageKind::ErrorGramUpload,
            Payload::Weights(_) => MessageKind::WeightsDownload,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub sender: AgentId,
    pub receiver: AgentId,
    pub kind: MessageKind,
    pub payload: Payload,
    /// `(complex, real)`; always equal to `payload.scalar_count()`.
    pub scalar_count: (usize, usize),
}

impl Message {
    pub fn new(sender: AgentId, receiver: AgentId, payload: Payload) -> Self {
        Self {
            sender,
            receiver,
            kind: payload.kind(),
            scalar_count: payload.scalar_count(),
            payload,
        }
    }

    pub fn direction(&self) -> Direction {
        match self.sender {
            AgentId::Cpu => Direction::Downlink,
            _ => Direction::Uplink,
        }
    }
}
