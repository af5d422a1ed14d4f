//! Exhaustive check of the coding scheme on small message sets.
//!
//! Walks every output sequence the channel can produce (up to a depth) while
//! tracking, for every surviving message, the length of the zero run its
//! inputs currently end in. Message sets are at most 64 so each run level is
//! a bitmask.

use rllbec::codec::{
    next_label, update_live, ChannelOutput, CodingParams, LabelId, MessageInterval,
};

#[derive(Debug, Default, Clone, Copy)]
pub struct SweepStats {
    pub nodes: u64,
    pub resolved: u64,
}

fn mask(iv: MessageInterval) -> u64 {
    let width = iv.len();
    if width == 0 {
        return 0;
    }
    let ones = if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    ones << iv.lo
}

/// Returns an error describing the first failure found.
pub fn exhaustive_feasibility(
    params: &CodingParams,
    n_messages: u64,
    depth: usize,
) -> Result<SweepStats, String> {
    assert!((2..=64).contains(&n_messages));
    let k = params.k();
    let mut runs = vec![0u64; k + 1];
    runs[0] = mask(MessageInterval::new(0, n_messages));
    let mut stats = SweepStats::default();
    walk(
        params,
        LabelId::L(0),
        MessageInterval::new(0, n_messages),
        &runs,
        depth,
        &mut stats,
    )?;
    Ok(stats)
}

fn walk(
    params: &CodingParams,
    label: LabelId,
    live: MessageInterval,
    runs: &[u64],
    depth: usize,
    stats: &mut SweepStats,
) -> Result<(), String> {
    stats.nodes += 1;
    if live.len() == 1 {
        stats.resolved += 1;
        return Ok(());
    }
    if depth == 0 {
        return Ok(());
    }
    let k = params.k();
    let live_mask = mask(live);
    let covered = runs.iter().fold(0, |acc, r| acc | r);
    if covered != live_mask {
        return Err(format!("run tracking lost messages at {label} {live}"));
    }

    let split = rllbec::codec::partition(label, live.len(), params);
    let zero_block = split.zero_block(live);
    let one_block = split.one_block(live);
    let zeros = mask(zero_block);
    if zeros & !live_mask != 0 || zero_block.len() + one_block.len() != live.len() {
        return Err(format!("bad split {split:?} of {live}"));
    }
    if 2 * zero_block.len() > live.len() {
        return Err(format!(
            "zero block {zero_block} larger than half of {live}"
        ));
    }
    if runs[k] & zeros != 0 {
        return Err(format!(
            "a message with {k} trailing zeros sends '0' under {label} in {live}"
        ));
    }

    let mut next_runs = vec![0u64; k + 1];
    next_runs[0] = live_mask & !zeros;
    for r in 0..k {
        next_runs[r + 1] = runs[r] & zeros;
    }

    for y in [
        ChannelOutput::Zero,
        ChannelOutput::One,
        ChannelOutput::Erasure,
    ] {
        let expected = match y {
            ChannelOutput::Zero => zero_block,
            ChannelOutput::One => one_block,
            ChannelOutput::Erasure => live,
        };
        let updated = update_live(live, label, y, params);
        if expected.is_empty() {
            if updated.is_ok() {
                return Err(format!("impossible output {y} accepted in {live}"));
            }
            continue;
        }
        let next = updated.map_err(|e| e.to_string())?;
        if next != expected {
            return Err(format!(
                "output {y} in {live} gave {next}, expected {expected}"
            ));
        }
        let keep = mask(next);
        let branch: Vec<u64> = next_runs.iter().map(|r| r & keep).collect();
        walk(
            params,
            next_label(label, y, k),
            next,
            &branch,
            depth - 1,
            stats,
        )?;
    }
    Ok(())
}
