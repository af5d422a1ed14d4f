//! Finite Markov chains: the labeling chain driven by channel outputs, the
//! constraint-state chain of a restricted non-causal code, and stationary
//! distributions by power iteration.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::LabelId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("transition matrix must be square and non-empty")]
    NotSquare,
    #[error("row {row} is not a probability vector (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("root state {0} is out of range")]
    InvalidRoot(usize),
    #[error(
        "power iteration did not converge within {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("parameter out of range: {0}")]
    Domain(String),
}

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const STATIONARY_TOL: f64 = 1e-12;
pub const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Row-stochastic transition matrix over states `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteChain {
    n: usize,
    p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDist(pub Vec<f64>);

impl StationaryDist {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for StationaryDist {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl FiniteChain {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(MarkovError::NotSquare);
        }
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            let in_range = row.iter().all(|&x| (0.0..=1.0).contains(&x));
            if !in_range || (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MarkovError::NotStochastic { row: i, sum });
            }
        }
        Ok(Self {
            n,
            p: rows.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.p[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.p[from * self.n..(from + 1) * self.n]
    }

    /// `πP`.
    pub fn step(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += mass * p;
            }
        }
        out
    }

    /// States reachable from `root` along positive-probability edges.
    pub fn reachable_from(&self, root: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(s) = queue.pop_front() {
            for (t, &p) in self.row(s).iter().enumerate() {
                if p > 0.0 && !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// `‖πP − π‖∞`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.step(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution, starting the iteration from state 0's reachable set.
pub fn stationary(chain: &FiniteChain) -> Result<StationaryDist, MarkovError> {
    stationary_from(chain, 0)
}

/// Stationary distribution by power iteration on the lazy chain `(P + I)/2`.
///
/// The start vector is uniform over the states reachable from `root`; states
/// outside that set keep probability zero. The lazy chain shares its
/// stationary vector with `P` but is aperiodic, so the iteration converges
/// for periodic chains too.
pub fn stationary_from(chain: &FiniteChain, root: usize) -> Result<StationaryDist, MarkovError> {
    if root >= chain.n {
        return Err(MarkovError::InvalidRoot(root));
    }
    let reach = chain.reachable_from(root);
    let count = reach.iter().filter(|&&r| r).count() as f64;
    let mut pi: Vec<f64> = reach
        .iter()
        .map(|&r| if r { 1.0 / count } else { 0.0 })
        .collect();

    let mut residual = f64::INFINITY;
    for _ in 0..STATIONARY_MAX_ITER {
        let next = chain.step(&pi);
        residual = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= STATIONARY_TOL {
            break;
        }
        let mut lazy: Vec<f64> = next.iter().zip(&pi).map(|(a, b)| 0.5 * (a + b)).collect();
        let sum: f64 = lazy.iter().sum();
        for x in &mut lazy {
            *x /= sum;
        }
        pi = lazy;
    }
    if residual > STATIONARY_TOL {
        return Err(MarkovError::NoConvergence {
            iterations: STATIONARY_MAX_ITER,
            residual,
        });
    }
    Ok(StationaryDist(pi))
}

fn check_inputs(epsilon: f64, delta: &[f64]) -> Result<(), MarkovError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(MarkovError::Domain(format!("epsilon = {epsilon}")));
    }
    if delta.is_empty() {
        return Err(MarkovError::Domain(
            "delta must have at least one entry".into(),
        ));
    }
    if let Some(d) = delta.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(MarkovError::Domain(format!("delta = {d}")));
    }
    Ok(())
}

/// Chain over the labelings, ordered `(l̃₀, l₀, l₁, …, l_k)` as given by
/// [`LabelId::index`].
///
/// From `l_j` (j < k): to `l_{j+1}` w.p. ε̄δ_j, to `l₀` w.p. ε̄δ̄_j, to `l̃₀` w.p. ε.
/// From `l̃₀`: to `l₁` w.p. ε̄δ₀, to `l₀` otherwise. From `l_k`: to `l₀`.
pub fn build_labeling_chain(epsilon: f64, delta: &[f64]) -> Result<FiniteChain, MarkovError> {
    check_inputs(epsilon, delta)?;
    let k = delta.len();
    let n = k + 2;
    let eb = 1.0 - epsilon;
    let tilde = LabelId::Tilde0.index();
    let l = |j: usize| LabelId::L(j).index();

    let mut rows = vec![vec![0.0; n]; n];
    rows[tilde][l(1)] += eb * delta[0];
    rows[tilde][l(0)] += eb * (1.0 - delta[0]) + epsilon;
    for (j, &dj) in delta.iter().enumerate() {
        let row = &mut rows[l(j)];
        row[l(j + 1)] += eb * dj;
        row[l(0)] += eb * (1.0 - dj);
        row[tilde] += epsilon;
    }
    rows[l(k)][l(0)] = 1.0;
    FiniteChain::new(rows)
}

/// Constraint-state chain of a restricted non-causal code for (0,k).
///
/// `δ_j` is the probability of writing a '0' in node `j` given that the slot
/// is not erased; erased slots carry a '1'. From node `j < k`: to `j+1` w.p.
/// ε̄δ_j, to 0 w.p. ε + ε̄δ̄_j. From node `k`: to 0.
pub fn build_s_chain(epsilon: f64, delta: &[f64]) -> Result<FiniteChain, MarkovError> {
    check_inputs(epsilon, delta)?;
    let k = delta.len();
    let eb = 1.0 - epsilon;
    let mut rows = vec![vec![0.0; k + 1]; k + 1];
    for (j, &dj) in delta.iter().enumerate() {
        rows[j][j + 1] += eb * dj;
        rows[j][0] += epsilon + eb * (1.0 - dj);
    }
    rows[k][0] = 1.0;
    FiniteChain::new(rows)
}

/// Closed-form stationary distribution of [`build_s_chain`]:
/// `π_S(j) = ε̄^j ∏_{m<j} δ_m / (1 + Σ_{i<k} ε̄^{i+1} ∏_{m≤i} δ_m)` for `j = 0..=k`.
pub fn s_chain_closed_form(epsilon: f64, delta: &[f64]) -> Vec<f64> {
    let eb = 1.0 - epsilon;
    let mut weights = Vec::with_capacity(delta.len() + 1);
    let mut w = 1.0;
    weights.push(w);
    for &d in delta {
        w *= eb * d;
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}
