//! Monte Carlo harness: a seeded BEC, the feedback scheme run end to end over
//! it, and a renewal simulator for the (d,∞) non-causal rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{entropy, feedback_capacity, CapacityError, SchemeParams, DEFAULT_TOL};
use crate::codec::{
    transmit_message, Channel, ChannelOutput, CodecError, CodingParams, LabelId, TransmitOptions,
};
use crate::constraint::RllConstraint;
use crate::markov::{build_labeling_chain, stationary, MarkovError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

type Result<T> = std::result::Result<T, SimError>;

/// Binary erasure channel driven by a seeded ChaCha8 stream. Each use draws
/// exactly one uniform variate.
#[derive(Debug, Clone)]
pub struct BecChannel {
    epsilon: f64,
    rng: ChaCha8Rng,
}

impl BecChannel {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self::with_stream(epsilon, seed, 0)
    }

    /// Independent sub-stream `stream` of the generator keyed by `seed`.
    pub fn with_stream(epsilon: f64, seed: u64, stream: u64) -> Self {
        Self {
            epsilon,
            rng: stream_rng(seed, stream),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_erased(&mut self) -> bool {
        self.rng.gen::<f64>() < self.epsilon
    }

    pub fn channel_step(&mut self, x: u8) -> ChannelOutput {
        if self.is_erased() {
            ChannelOutput::Erasure
        } else {
            ChannelOutput::from_bit(x)
        }
    }
}

impl Channel for BecChannel {
    fn transmit(&mut self, x: u8) -> ChannelOutput {
        self.channel_step(x)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaChoice {
    /// The maximiser returned by [`feedback_capacity`].
    Optimal,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub k: usize,
    pub epsilon: f64,
    pub log2_messages: u32,
    pub trials: u64,
    pub delta: DeltaChoice,
    pub seed: u64,
    pub max_uses_per_trial: u64,
}

impl SimConfig {
    pub fn new(k: usize, epsilon: f64, log2_messages: u32, trials: u64, seed: u64) -> Self {
        Self {
            k,
            epsilon,
            log2_messages,
            trials,
            delta: DeltaChoice::Optimal,
            seed,
            max_uses_per_trial: 1 << 24,
        }
    }

    pub fn with_delta(mut self, delta: DeltaChoice) -> Self {
        self.delta = delta;
        self
    }
}

pub const MAX_LOG2_MESSAGES: u32 = 62;

/// Aggregate over all trials of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub k: usize,
    pub epsilon: f64,
    pub delta: Vec<f64>,
    pub log2_messages: u32,
    pub seed: u64,
    pub trials: u64,
    pub total_uses: u64,
    pub total_bits: f64,
    /// Pooled ratio `total_bits / total_uses`.
    pub empirical_rate: f64,
    /// Average of the per-trial ratios `log2_messages / uses`.
    pub mean_trial_rate: f64,
    pub errors: u64,
    pub violations: u64,
    /// Channel uses per labeling, ordered `tilde_l0, l0, l1, …, lk`.
    pub label_histogram: Vec<u64>,
    /// Standard error of `empirical_rate` from the spread of per-trial use
    /// counts (first-order expansion of the ratio).
    pub stderr_rate: f64,
}

struct TrialOutcome {
    uses: u64,
    error: bool,
    violation: bool,
    label_counts: Vec<u64>,
}

fn resolve_delta(config: &SimConfig) -> Result<Vec<f64>> {
    match &config.delta {
        DeltaChoice::Optimal => Ok(feedback_capacity(config.epsilon, config.k, DEFAULT_TOL)?
            .params
            .delta),
        DeltaChoice::Explicit(d) if d.len() != config.k => Err(SimError::InvalidConfig(format!(
            "expected {} delta values, got {}",
            config.k,
            d.len()
        ))),
        DeltaChoice::Explicit(d) => Ok(d.clone()),
    }
}

/// Sends `trials` uniformly drawn messages, each over its own channel
/// realisation. Trial `t` uses sub-streams `2t` (channel) and `2t + 1`
/// (message) of the root seed, so the report does not depend on scheduling.
pub fn run_feedback_sim(config: &SimConfig) -> Result<SimReport> {
    if config.k == 0 {
        return Err(SimError::InvalidConfig("k must be at least 1".into()));
    }
    if config.log2_messages == 0 || config.log2_messages > MAX_LOG2_MESSAGES {
        return Err(SimError::InvalidConfig(format!(
            "log2_messages must be in 1..={MAX_LOG2_MESSAGES}, got {}",
            config.log2_messages
        )));
    }
    if config.trials == 0 {
        return Err(SimError::InvalidConfig("trials must be positive".into()));
    }
    let delta = resolve_delta(config)?;
    let params = CodingParams::new(SchemeParams::new(config.epsilon, delta.clone())?)?;
    let constraint = RllConstraint::zero_k(config.k as u32)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let n_messages = 1u64 << config.log2_messages;
    let options = TransmitOptions {
        max_uses: config.max_uses_per_trial,
        record_transcript: false,
    };

    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut channel = BecChannel::with_stream(config.epsilon, config.seed, 2 * t);
            let message = stream_rng(config.seed, 2 * t + 1).gen_range(0..n_messages);
            let tx = transmit_message(message, n_messages, &params, &mut channel, options)?;
            Ok(TrialOutcome {
                uses: tx.uses,
                error: tx.decoded != message,
                violation: !constraint.validate_sequence(&tx.inputs),
                label_counts: tx.label_counts,
            })
        })
        .collect::<Result<_>>()?;

    let bits = f64::from(config.log2_messages);
    let mut total_uses = 0u64;
    let mut errors = 0;
    let mut violations = 0;
    let mut rate_sum = 0.0;
    let mut label_histogram = vec![0u64; config.k + 2];
    for o in &outcomes {
        total_uses += o.uses;
        errors += u64::from(o.error);
        violations += u64::from(o.violation);
        rate_sum += bits / o.uses as f64;
        for (h, c) in label_histogram.iter_mut().zip(&o.label_counts) {
            *h += c;
        }
    }
    let trials = config.trials as f64;
    let total_bits = bits * trials;
    let mean_uses = total_uses as f64 / trials;
    let var_uses = if outcomes.len() > 1 {
        outcomes
            .iter()
            .map(|o| (o.uses as f64 - mean_uses).powi(2))
            .sum::<f64>()
            / (trials - 1.0)
    } else {
        0.0
    };

    Ok(SimReport {
        k: config.k,
        epsilon: config.epsilon,
        delta,
        log2_messages: config.log2_messages,
        seed: config.seed,
        trials: config.trials,
        total_uses,
        total_bits,
        empirical_rate: total_bits / total_uses as f64,
        mean_trial_rate: rate_sum / trials,
        errors,
        violations,
        label_histogram,
        stderr_rate: bits / (mean_uses * mean_uses) * (var_uses / trials).sqrt(),
    })
}

/// Largest gap between the empirical labeling frequencies of a run and the
/// stationary distribution of the labeling chain for `(epsilon, delta)`.
pub fn label_occupancy_check(report: &SimReport, epsilon: f64, delta: &[f64]) -> Result<f64> {
    let chain = build_labeling_chain(epsilon, delta)?;
    let pi = stationary(&chain)?;
    if report.label_histogram.len() != chain.len() {
        return Err(SimError::InvalidConfig(format!(
            "histogram has {} labelings, chain has {}",
            report.label_histogram.len(),
            chain.len()
        )));
    }
    let total: u64 = report.label_histogram.iter().sum();
    if total == 0 {
        return Err(SimError::InvalidConfig("empty histogram".into()));
    }
    Ok(report
        .label_histogram
        .iter()
        .enumerate()
        .map(|(i, &c)| (c as f64 / total as f64 - pi[i]).abs())
        .fold(0.0, f64::max))
}

/// Occupancy of each labeling along `uses` steps of the labeling walk driven
/// by a [`BecChannel`], without a message set. The input under `l_j` is '0'
/// with probability `δ_j` (`l̃₀` uses `δ₀`, `l_k` always sends '1').
pub fn labeling_walk(epsilon: f64, delta: &[f64], uses: u64, seed: u64) -> Vec<u64> {
    let k = delta.len();
    let mut channel = BecChannel::with_stream(epsilon, seed, 0);
    let mut coin = stream_rng(seed, 1);
    let mut label = LabelId::L(0);
    let mut counts = vec![0u64; k + 2];
    for _ in 0..uses {
        counts[label.index()] += 1;
        let x = match label {
            LabelId::L(j) if j >= k => 1,
            l => u8::from(coin.gen::<f64>() >= delta[l.delta_index()]),
        };
        label = crate::codec::next_label(label, channel.channel_step(x), k);
    }
    counts
}

/// Result of the (d,∞) renewal simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalEstimate {
    /// `H₂(δ) · symbols / total_uses`.
    pub rate: f64,
    pub uses_per_symbol: f64,
    pub total_uses: u64,
    /// Standard error of `rate`.
    pub stderr_rate: f64,
    /// Standard error of `uses_per_symbol`.
    pub stderr_uses: f64,
}

/// Renewal accounting for the non-causal (d,∞) scheme: each information
/// symbol waits for an unerased slot, carries a '1' with probability `δ`,
/// and a '1' is followed by `d` forced zeros.
pub fn renewal_rate_d_inf(
    epsilon: f64,
    d: u32,
    delta: f64,
    horizon_symbols: u64,
    seed: u64,
) -> Result<RenewalEstimate> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(SimError::InvalidConfig(format!(
            "epsilon must be in [0, 1), got {epsilon}"
        )));
    }
    if !(0.0..=0.5).contains(&delta) {
        return Err(SimError::InvalidConfig(format!(
            "delta must be in [0, 1/2], got {delta}"
        )));
    }
    if horizon_symbols == 0 {
        return Err(SimError::InvalidConfig("horizon must be positive".into()));
    }
    let mut channel = BecChannel::new(epsilon, seed);
    let mut source = stream_rng(seed, 1);
    let mut total_uses = 0u64;
    let mut sum_sq = 0.0;
    for _ in 0..horizon_symbols {
        let mut uses = 1u64;
        while channel.is_erased() {
            uses += 1;
        }
        if source.gen::<f64>() < delta {
            uses += u64::from(d);
        }
        total_uses += uses;
        sum_sq += (uses * uses) as f64;
    }
    let n = horizon_symbols as f64;
    let mean = total_uses as f64 / n;
    let var = if horizon_symbols > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let stderr_uses = (var / n).sqrt();
    let h = entropy(delta);
    Ok(RenewalEstimate {
        rate: h / mean,
        uses_per_symbol: mean,
        total_uses,
        stderr_rate: h / (mean * mean) * stderr_uses,
        stderr_uses,
    })
}
