//! Zero-error variable-length coding over the BEC with feedback.
//!
//! Encoder and decoder share a contiguous interval of surviving messages and
//! a labeling, both driven only by the channel outputs. Each labeling splits
//! the live interval into a '0' block and a '1' block; a non-erased output
//! keeps the block that matches it. The labelings are
//!
//! * `l_j`, `j < k`: the first `⌊δ_j·a⌋` messages send '0';
//! * `l_k`: every message sends '1';
//! * `l̃₀`: the last `⌊δ₀·a⌋` messages send '0';
//!
//! where `a` is the live-set size. `l_j` is reached after `j` consecutive
//! received zeros, `l̃₀` after an erasure. With every `δ_j ≤ 1/2` no message
//! ever writes more than `k` consecutive zeros, whatever the erasure pattern.
//!
//! Block sizes are computed in exact fixed point: `δ` is truncated to 64
//! fractional bits, so `⌊δ·a⌋ ≤ ⌊a/2⌋` holds for every `a < 2^64`. When
//! `δ > 0` and `a ≥ 2` the '0' block is never empty, which guarantees
//! progress; this keeps both blocks within `⌊a/2⌋`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::SchemeParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("delta_{index} = {value} exceeds 1/2; the scheme would break the constraint")]
    Infeasible { index: usize, value: f64 },
    #[error("need at least two messages, got {0}")]
    InvalidMessageCount(u64),
    #[error("message {message} is outside the live set {live}")]
    MessageOutsideLiveSet { message: u64, live: MessageInterval },
    #[error("output {output} leaves no surviving message in {live} under {label}")]
    EmptySet {
        live: MessageInterval,
        label: LabelId,
        output: ChannelOutput,
    },
    #[error("transmission exceeded {0} channel uses")]
    UseBudgetExceeded(u64),
    #[error("encoder and decoder states diverged after {0} channel uses")]
    Desync(u64),
}

type Result<T> = std::result::Result<T, CodecError>;

/// Labeling in use. `L(j)` is reached after `j` received zeros in a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelId {
    Tilde0,
    L(usize),
}

impl LabelId {
    /// Position in the fixed ordering `(l̃₀, l₀, l₁, …, l_k)`.
    pub fn index(self) -> usize {
        match self {
            LabelId::Tilde0 => 0,
            LabelId::L(j) => j + 1,
        }
    }

    pub fn from_index(index: usize) -> Self {
        match index {
            0 => LabelId::Tilde0,
            i => LabelId::L(i - 1),
        }
    }

    /// Which `δ` the labeling uses; `l̃₀` shares `δ₀`.
    pub fn delta_index(self) -> usize {
        match self {
            LabelId::Tilde0 => 0,
            LabelId::L(j) => j,
        }
    }

    /// All labelings for a given `k`, in [`LabelId::index`] order.
    pub fn all(k: usize) -> Vec<LabelId> {
        (0..k + 2).map(LabelId::from_index).collect()
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelId::Tilde0 => f.write_str("tilde_l0"),
            LabelId::L(j) => write!(f, "l{j}"),
        }
    }
}

/// Channel output symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelOutput {
    Zero,
    One,
    Erasure,
}

impl ChannelOutput {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            ChannelOutput::Zero
        } else {
            ChannelOutput::One
        }
    }

    pub fn symbol(self) -> char {
        match self {
            ChannelOutput::Zero => '0',
            ChannelOutput::One => '1',
            ChannelOutput::Erasure => '?',
        }
    }
}

impl fmt::Display for ChannelOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A memoryless channel carrying one bit per use.
pub trait Channel {
    fn transmit(&mut self, x: u8) -> ChannelOutput;
}

/// Contiguous range `[lo, hi)` of message indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MessageInterval {
    pub lo: u64,
    pub hi: u64,
}

impl MessageInterval {
    pub fn new(lo: u64, hi: u64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn contains(&self, m: u64) -> bool {
        (self.lo..self.hi).contains(&m)
    }
}

impl fmt::Display for MessageInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroSide {
    Prefix,
    Suffix,
}

/// How a labeling splits a live set of a given size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub zero_count: u64,
    pub zero_side: ZeroSide,
}

impl Partition {
    pub fn zero_block(&self, live: MessageInterval) -> MessageInterval {
        match self.zero_side {
            ZeroSide::Prefix => MessageInterval::new(live.lo, live.lo + self.zero_count),
            ZeroSide::Suffix => MessageInterval::new(live.hi - self.zero_count, live.hi),
        }
    }

    pub fn one_block(&self, live: MessageInterval) -> MessageInterval {
        match self.zero_side {
            ZeroSide::Prefix => MessageInterval::new(live.lo + self.zero_count, live.hi),
            ZeroSide::Suffix => MessageInterval::new(live.lo, live.hi - self.zero_count),
        }
    }
}

/// Scheme parameters checked for feasibility, with `δ` in fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingParams {
    params: SchemeParams,
    fixed: Vec<u64>,
}

const FIXED_ONE: f64 = 18_446_744_073_709_551_616.0; // 2^64

impl CodingParams {
    pub fn new(params: SchemeParams) -> Result<Self> {
        if let Some((index, &value)) = params.delta.iter().enumerate().find(|(_, &d)| d > 0.5) {
            return Err(CodecError::Infeasible { index, value });
        }
        // δ ≤ 1/2, so δ·2^64 ≤ 2^63 is exact in f64 and fits in u64.
        let fixed = params
            .delta
            .iter()
            .map(|&d| (d * FIXED_ONE) as u64)
            .collect();
        Ok(Self { params, fixed })
    }

    pub fn k(&self) -> usize {
        self.params.delta.len()
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    fn zero_count(&self, j: usize, live_size: u64) -> u64 {
        let q = self.fixed[j];
        let count = ((u128::from(q) * u128::from(live_size)) >> 64) as u64;
        if q > 0 && live_size >= 2 {
            count.max(1)
        } else {
            count
        }
    }
}

pub fn partition(label: LabelId, live_size: u64, params: &CodingParams) -> Partition {
    match label {
        LabelId::L(j) if j >= params.k() => Partition {
            zero_count: 0,
            zero_side: ZeroSide::Prefix,
        },
        LabelId::L(j) => Partition {
            zero_count: params.zero_count(j, live_size),
            zero_side: ZeroSide::Prefix,
        },
        LabelId::Tilde0 => Partition {
            zero_count: params.zero_count(0, live_size),
            zero_side: ZeroSide::Suffix,
        },
    }
}

/// Labeling transition; the first matching rule wins:
/// `l_k`, a received '1', or an erasure under `l̃₀` lead to `l₀`; any other
/// erasure leads to `l̃₀`; a received '0' advances the zero count.
pub fn next_label(label: LabelId, y: ChannelOutput, k: usize) -> LabelId {
    match (label, y) {
        (LabelId::L(j), _) if j >= k => LabelId::L(0),
        (_, ChannelOutput::One) => LabelId::L(0),
        (LabelId::Tilde0, ChannelOutput::Erasure) => LabelId::L(0),
        (_, ChannelOutput::Erasure) => LabelId::Tilde0,
        (label, ChannelOutput::Zero) => LabelId::L(label.delta_index() + 1),
    }
}

/// Live-set update: unchanged on an erasure, otherwise the block whose
/// label matches the received bit.
pub fn update_live(
    live: MessageInterval,
    label: LabelId,
    y: ChannelOutput,
    params: &CodingParams,
) -> Result<MessageInterval> {
    let split = partition(label, live.len(), params);
    let next = match y {
        ChannelOutput::Erasure => return Ok(live),
        ChannelOutput::Zero => split.zero_block(live),
        ChannelOutput::One => split.one_block(live),
    };
    if next.is_empty() {
        return Err(CodecError::EmptySet {
            live,
            label,
            output: y,
        });
    }
    Ok(next)
}

/// Shared encoder/decoder state. Everything here is a function of the
/// channel outputs alone.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSession {
    params: CodingParams,
    label: LabelId,
    live: MessageInterval,
    uses: u64,
}

impl SchemeSession {
    pub fn new(params: CodingParams, n_messages: u64) -> Result<Self> {
        if n_messages < 2 {
            return Err(CodecError::InvalidMessageCount(n_messages));
        }
        Ok(Self {
            params,
            label: LabelId::L(0),
            live: MessageInterval::new(0, n_messages),
            uses: 0,
        })
    }

    pub fn label(&self) -> LabelId {
        self.label
    }

    pub fn live(&self) -> MessageInterval {
        self.live
    }

    pub fn uses(&self) -> u64 {
        self.uses
    }

    pub fn params(&self) -> &CodingParams {
        &self.params
    }

    pub fn is_resolved(&self) -> bool {
        self.live.len() == 1
    }

    /// The decoded message once a single message survives.
    pub fn decoded(&self) -> Option<u64> {
        self.is_resolved().then_some(self.live.lo)
    }

    pub fn current_partition(&self) -> Partition {
        partition(self.label, self.live.len(), &self.params)
    }

    /// Channel input for message `m` under the current labeling.
    pub fn input_bit(&self, m: u64) -> Result<u8> {
        if !self.live.contains(m) {
            return Err(CodecError::MessageOutsideLiveSet {
                message: m,
                live: self.live,
            });
        }
        let zeros = self.current_partition().zero_block(self.live);
        Ok(if zeros.contains(m) { 0 } else { 1 })
    }

    /// Consumes one channel output.
    pub fn observe(&mut self, y: ChannelOutput) -> Result<()> {
        self.live = update_live(self.live, self.label, y, &self.params)?;
        self.label = next_label(self.label, y, self.params.k());
        self.uses += 1;
        Ok(())
    }
}

/// Encoder side: a session plus the true message and an optional transcript.
#[derive(Debug, Clone)]
pub struct Encoder {
    session: SchemeSession,
    message: u64,
    transcript: Option<Vec<(u8, ChannelOutput)>>,
}

impl Encoder {
    pub fn new(params: CodingParams, n_messages: u64, message: u64, record: bool) -> Result<Self> {
        let session = SchemeSession::new(params, n_messages)?;
        if !session.live.contains(message) {
            return Err(CodecError::MessageOutsideLiveSet {
                message,
                live: session.live,
            });
        }
        Ok(Self {
            session,
            message,
            transcript: record.then(Vec::new),
        })
    }

    pub fn session(&self) -> &SchemeSession {
        &self.session
    }

    pub fn next_input(&self) -> Result<u8> {
        self.session.input_bit(self.message)
    }

    pub fn observe(&mut self, x: u8, y: ChannelOutput) -> Result<()> {
        if let Some(t) = self.transcript.as_mut() {
            t.push((x, y));
        }
        self.session.observe(y)
    }

    pub fn transcript(&self) -> Option<&[(u8, ChannelOutput)]> {
        self.transcript.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmitOptions {
    pub max_uses: u64,
    pub record_transcript: bool,
}

impl Default for TransmitOptions {
    fn default() -> Self {
        Self {
            max_uses: 1 << 24,
            record_transcript: false,
        }
    }
}

/// Outcome of one message transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub decoded: u64,
    pub uses: u64,
    pub inputs: Vec<u8>,
    /// Channel uses spent in each labeling, indexed by [`LabelId::index`].
    pub label_counts: Vec<u64>,
    pub transcript: Option<Vec<(u8, ChannelOutput)>>,
}

/// Sends message `m` out of `n_messages` until the decoder's live set holds a
/// single message.
pub fn transmit_message<C: Channel + ?Sized>(
    m: u64,
    n_messages: u64,
    params: &CodingParams,
    channel: &mut C,
    options: TransmitOptions,
) -> Result<Transmission> {
    let mut encoder = Encoder::new(params.clone(), n_messages, m, options.record_transcript)?;
    let mut decoder = SchemeSession::new(params.clone(), n_messages)?;
    let mut inputs = Vec::new();
    let mut label_counts = vec![0u64; params.k() + 2];

    while !decoder.is_resolved() {
        if decoder.uses() >= options.max_uses {
            return Err(CodecError::UseBudgetExceeded(options.max_uses));
        }
        let x = encoder.next_input()?;
        label_counts[decoder.label().index()] += 1;
        let y = channel.transmit(x);
        inputs.push(x);
        encoder.observe(x, y)?;
        decoder.observe(y)?;
        if encoder.session.label != decoder.label || encoder.session.live != decoder.live {
            return Err(CodecError::Desync(decoder.uses()));
        }
    }
    Ok(Transmission {
        decoded: decoder.live().lo,
        uses: decoder.uses(),
        inputs,
        label_counts,
        transcript: encoder.transcript,
    })
}
