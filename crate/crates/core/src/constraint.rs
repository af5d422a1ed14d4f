//! Runlength-limited (d,k) constraints and their state graphs.
//!
//! A node of the constraint graph counts the zeros written since the last
//! '1'. For finite `k` the nodes are `0..=k`; for `k = ∞` the count is capped
//! at `d`, since every node beyond `d` accepts the same continuations.
//!
//! Walks start in node `d`, the least restrictive node in which a '1' may be
//! written. For the (0,k) family this is node 0, i.e. the sequence is treated
//! as if it were preceded by a '1'.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("invalid constraint (d={d}, k={k}): d must be smaller than k")]
    InvalidParameters { d: u32, k: u32 },
    #[error("illegal edge: bit {bit} from state {state} violates {constraint}")]
    IllegalEdge {
        constraint: RllConstraint,
        state: u32,
        bit: u8,
    },
    #[error("invalid symbol {0}: expected 0 or 1")]
    InvalidBit(u8),
    #[error("state {state} is not a node of {constraint}")]
    InvalidState {
        constraint: RllConstraint,
        state: u32,
    },
}

/// A (d,k) runlength-limited constraint. `k = None` stands for `k = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RllConstraint {
    d: u32,
    k: Option<u32>,
}

/// Node of the constraint graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintState(pub u32);

impl RllConstraint {
    pub fn new(d: u32, k: Option<u32>) -> Result<Self, ConstraintError> {
        match k {
            Some(k) if d >= k => Err(ConstraintError::InvalidParameters { d, k }),
            _ => Ok(Self { d, k }),
        }
    }

    /// The (0,k) constraint: no more than `k` consecutive zeros.
    pub fn zero_k(k: u32) -> Result<Self, ConstraintError> {
        Self::new(0, Some(k))
    }

    /// The (d,∞) constraint: every '1' is followed by at least `d` zeros.
    pub fn d_inf(d: u32) -> Self {
        Self { d, k: None }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> Option<u32> {
        self.k
    }

    pub fn num_states(&self) -> usize {
        match self.k {
            Some(k) => k as usize + 1,
            None => self.d as usize + 1,
        }
    }

    pub fn initial_state(&self) -> ConstraintState {
        ConstraintState(self.d)
    }

    pub fn next_state(
        &self,
        state: ConstraintState,
        bit: u8,
    ) -> Result<ConstraintState, ConstraintError> {
        let s = state.0;
        if s as usize >= self.num_states() {
            return Err(ConstraintError::InvalidState {
                constraint: *self,
                state: s,
            });
        }
        let illegal = || ConstraintError::IllegalEdge {
            constraint: *self,
            state: s,
            bit,
        };
        match bit {
            0 => match self.k {
                Some(k) if s >= k => Err(illegal()),
                Some(_) => Ok(ConstraintState(s + 1)),
                None => Ok(ConstraintState((s + 1).min(self.d))),
            },
            1 if s >= self.d => Ok(ConstraintState(0)),
            1 => Err(illegal()),
            other => Err(ConstraintError::InvalidBit(other)),
        }
    }

    /// Zero-based index of the first bit that cannot be written, if any.
    pub fn first_violation(&self, bits: &[u8]) -> Option<usize> {
        let mut state = self.initial_state();
        for (i, &bit) in bits.iter().enumerate() {
            match self.next_state(state, bit) {
                Ok(next) => state = next,
                Err(_) => return Some(i),
            }
        }
        None
    }

    pub fn validate_sequence(&self, bits: &[u8]) -> bool {
        self.first_violation(bits).is_none()
    }

    /// Dense adjacency matrix of the constraint graph (row = source node).
    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        let mut adj = vec![vec![0.0; n]; n];
        for (s, row) in adj.iter_mut().enumerate() {
            for bit in [0u8, 1] {
                if let Ok(next) = self.next_state(ConstraintState(s as u32), bit) {
                    row[next.0 as usize] += 1.0;
                }
            }
        }
        adj
    }

    /// Noiseless capacity in bits: log₂ of the spectral radius of the
    /// adjacency matrix.
    pub fn noiseless_capacity(&self) -> f64 {
        spectral_radius(&self.adjacency(), SPECTRAL_TOL, SPECTRAL_MAX_ITER).log2()
    }
}

impl fmt::Display for RllConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            Some(k) => write!(f, "({},{})-RLL", self.d, k),
            None => write!(f, "({},inf)-RLL", self.d),
        }
    }
}

pub const SPECTRAL_TOL: f64 = 1e-12;
pub const SPECTRAL_MAX_ITER: usize = 100_000;

/// Perron root of a nonnegative irreducible matrix by power iteration.
///
/// Iterates on `A + I`, which has the same Perron vector and is aperiodic
/// even when `A` is not; the shift is removed from the returned value.
pub fn spectral_radius(adj: &[Vec<f64>], tol: f64, max_iter: usize) -> f64 {
    let n = adj.len();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let mut w = v.clone();
        for (i, row) in adj.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                w[j] += v[i] * a;
            }
        }
        let norm: f64 = w.iter().sum();
        for x in &mut w {
            *x /= norm;
        }
        // v sums to one, so the shifted eigenvalue estimate is `norm`.
        let next = norm - 1.0;
        let delta = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = w;
        let converged = (next - lambda).abs() <= tol && delta <= tol;
        lambda = next;
        if converged {
            break;
        }
    }
    lambda
}
