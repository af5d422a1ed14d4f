//! Rate expressions, capacity optimisation and the companion bounds.
//!
//! All logarithms are base 2, so every rate is in bits per channel use.
//! Throughout, `ε̄ = 1 − ε` and `δ̄ = 1 − δ`.
//!
//! The scheme rate for the (0,k) constraint is `R_ε(δ) = N / D` with
//!
//! ```text
//! N = Σ_{i<k} ε̄^{i+1} H₂(δ_i) ∏_{m<i} δ_m
//! D = 1 + Σ_{i<k} ε̄^{i+1} ∏_{m≤i} δ_m
//! ```
//!
//! and the feedback capacity is its maximum, which is attained on the
//! one-parameter curve produced by [`delta_chain`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimize::{bisect_root, golden_section_max, scan_then_golden, Maximum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapacityError {
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid of {points} points exceeds the budget of {limit}")]
    BudgetExceeded { points: f64, limit: f64 },
}

type Result<T> = std::result::Result<T, CapacityError>;

/// Number of points in the dense scan preceding golden-section refinement.
pub const SCAN_POINTS: usize = 2001;
/// Largest grid `grid_n^k` accepted by the brute-force maximisers.
pub const GRID_BUDGET: f64 = 1e8;
/// Default bracket width for the 1-D optimisers.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Erasure probability and the labeling parameters `δ₀, …, δ_{k−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub epsilon: f64,
    pub delta: Vec<f64>,
}

impl SchemeParams {
    pub fn new(epsilon: f64, delta: Vec<f64>) -> Result<Self> {
        check_probability("epsilon", epsilon)?;
        if delta.is_empty() {
            return Err(CapacityError::Domain(
                "delta must have at least one entry".into(),
            ));
        }
        for &d in &delta {
            check_probability("delta", d)?;
        }
        Ok(Self { epsilon, delta })
    }

    pub fn k(&self) -> usize {
        self.delta.len()
    }

    /// Whether the coding scheme can run with these parameters without
    /// breaking the constraint (every `δ_j ≤ 1/2`).
    pub fn is_feasible(&self) -> bool {
        self.delta.iter().all(|&d| d <= 0.5)
    }
}

/// An optimised capacity value together with its maximiser.
///
/// `residual` is the first-order-condition residual at the maximiser: the
/// stationarity identity for (0,k), the derivative condition for the
/// single-parameter curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub params: SchemeParams,
    pub residual: f64,
}

/// Maximum found by a grid search (plus refinement) and where it sits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub value: f64,
    pub point: Vec<f64>,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(CapacityError::Domain(format!(
            "{name} = {p} is outside [0, 1]"
        )))
    }
}

/// Binary entropy in bits, with `0·log 0 = 0`.
pub fn h2(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(entropy(p))
}

#[inline]
pub(crate) fn entropy(p: f64) -> f64 {
    let plogp = |x: f64| if x <= 0.0 { 0.0 } else { x * x.log2() };
    -plogp(p) - plogp(1.0 - p)
}

/// `R_ε(δ₀, …, δ_{k−1})`.
pub fn rate(params: &SchemeParams) -> f64 {
    rate_of(params.epsilon, &params.delta)
}

/// [`rate`] without constructing a [`SchemeParams`].
#[inline]
pub fn rate_of(epsilon: f64, delta: &[f64]) -> f64 {
    let eb = 1.0 - epsilon;
    let mut numerator = 0.0;
    let mut denominator = 1.0;
    // ε̄^{i+1} ∏_{m<i} δ_m
    let mut weight = eb;
    for &d in delta {
        numerator += weight * entropy(d);
        weight *= d;
        denominator += weight;
        weight *= eb;
    }
    numerator / denominator
}

/// Completes `(δ₀, …, δ_{k−1})` from `δ_{k−1} = delta_last` by running
/// `δ_j = δ_{j+1} / (δ_{j+1} + δ̄_{j+1} (δ̄_{j+1}/δ̄_{j+2})^ε̄)` downwards,
/// with `δ̄_k = 1`.
pub fn delta_chain(delta_last: f64, epsilon: f64, k: usize) -> Result<Vec<f64>> {
    check_probability("delta_last", delta_last)?;
    check_probability("epsilon", epsilon)?;
    if k == 0 {
        return Err(CapacityError::InvalidArgument(
            "k must be at least 1".into(),
        ));
    }
    if delta_last == 1.0 {
        return Ok(vec![1.0; k]);
    }
    let eb = 1.0 - epsilon;
    let mut delta = vec![0.0; k];
    delta[k - 1] = delta_last;
    for j in (0..k - 1).rev() {
        let next = delta[j + 1];
        let next_bar = 1.0 - next;
        let after_bar = if j + 2 < k { 1.0 - delta[j + 2] } else { 1.0 };
        delta[j] = next / (next + next_bar * (next_bar / after_bar).powf(eb));
    }
    Ok(delta)
}

/// Largest violation of the first-order identities
/// `log(δ̄_j/δ_j) = log(δ̄_{j+1}/δ_{j+1}) + ε̄ log(δ̄_{j+1}/δ̄_{j+2})`, `j < k−1`.
///
/// Zero exactly on the curve traced by [`delta_chain`]; zero by definition
/// when `k = 1`.
pub fn stationarity_residual(params: &SchemeParams) -> Result<f64> {
    let delta = &params.delta;
    let k = delta.len();
    if k <= 1 {
        return Ok(0.0);
    }
    if let Some(d) = delta.iter().find(|&&d| d <= 0.0 || d >= 1.0) {
        return Err(CapacityError::Domain(format!(
            "stationarity residual needs every delta in (0, 1), got {d}"
        )));
    }
    let eb = 1.0 - params.epsilon;
    let bar = |j: usize| if j < k { 1.0 - delta[j] } else { 1.0 };
    let log_odds = |j: usize| (bar(j) / delta[j]).log2();
    Ok((0..k - 1)
        .map(|j| (log_odds(j) - log_odds(j + 1) - eb * (bar(j + 1) / bar(j + 2)).log2()).abs())
        .fold(0.0, f64::max))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CapacityError::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )))
    }
}

/// Feedback capacity of the (0,k)-RLL input-constrained BEC.
///
/// Maximises `R_ε(delta_chain(x))` over `x = δ_{k−1} ∈ [0, 1/2]` by a dense
/// scan followed by golden-section refinement to bracket width `tol`.
pub fn feedback_capacity(epsilon: f64, k: usize, tol: f64) -> Result<CapacityResult> {
    check_probability("epsilon", epsilon)?;
    check_tol(tol)?;
    if k == 0 {
        return Err(CapacityError::InvalidArgument(
            "k must be at least 1".into(),
        ));
    }
    if epsilon == 1.0 {
        // Every output is erased: the rate is identically zero.
        let params = SchemeParams::new(epsilon, vec![0.5; k])?;
        return Ok(CapacityResult {
            value: 0.0,
            params,
            residual: 0.0,
        });
    }
    let objective = |x: f64| match delta_chain(x, epsilon, k) {
        Ok(delta) => rate_of(epsilon, &delta),
        Err(_) => f64::NEG_INFINITY,
    };
    let best = scan_then_golden(objective, 0.0, 0.5, SCAN_POINTS, tol);
    let delta = delta_chain(best.x, epsilon, k)?;
    let params = SchemeParams::new(epsilon, delta)?;
    let residual = stationarity_residual(&params).unwrap_or(0.0);
    Ok(CapacityResult {
        value: rate(&params),
        params,
        residual,
    })
}

fn grid_points(grid_n: usize) -> Vec<f64> {
    let last = (grid_n - 1) as f64;
    (0..grid_n).map(|i| i as f64 / last).collect()
}

fn check_grid(grid_n: usize, dims: usize) -> Result<()> {
    if grid_n < 21 {
        return Err(CapacityError::InvalidArgument(format!(
            "grid_n = {grid_n}, need at least 21"
        )));
    }
    let points = (grid_n as f64).powi(dims as i32);
    if points > GRID_BUDGET {
        return Err(CapacityError::BudgetExceeded {
            points,
            limit: GRID_BUDGET,
        });
    }
    Ok(())
}

/// Brute-force maximum of `R_ε` over the full cube `[0,1]^k`.
///
/// Evaluates every point of a uniform `grid_n^k` grid, then runs one round
/// of coordinate-wise golden-section refinement within one grid step of the
/// best point. Does not use [`delta_chain`], so it serves as an independent
/// check on [`feedback_capacity`].
pub fn grid_max_rate(epsilon: f64, k: usize, grid_n: usize) -> Result<GridOptimum> {
    check_probability("epsilon", epsilon)?;
    if !(1..=4).contains(&k) {
        return Err(CapacityError::InvalidArgument(format!(
            "grid search supports 1 <= k <= 4, got {k}"
        )));
    }
    check_grid(grid_n, k)?;
    let axis = grid_points(grid_n);
    let mut idx = vec![0usize; k];
    let mut point = vec![0.0; k];
    let mut best = GridOptimum {
        value: f64::NEG_INFINITY,
        point: point.clone(),
    };
    'odometer: loop {
        for (p, &i) in point.iter_mut().zip(&idx) {
            *p = axis[i];
        }
        let v = rate_of(epsilon, &point);
        if v > best.value {
            best.value = v;
            best.point.copy_from_slice(&point);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < grid_n {
                continue 'odometer;
            }
            *slot = 0;
        }
        break;
    }

    let step = 1.0 / (grid_n - 1) as f64;
    let mut current = best.point.clone();
    for j in 0..k {
        let centre = current[j];
        let lo = (centre - step).max(0.0);
        let hi = (centre + step).min(1.0);
        let m = golden_section_max(
            |x| {
                let mut probe = current.clone();
                probe[j] = x;
                rate_of(epsilon, &probe)
            },
            lo,
            hi,
            DEFAULT_TOL,
        );
        if m.value > best.value {
            current[j] = m.x;
            best.value = m.value;
            best.point.copy_from_slice(&current);
        }
    }
    Ok(best)
}

/// Non-causal capacity of the (d,∞)-RLL input-constrained BEC:
/// `max_{0≤δ≤1/2} H₂(δ) / (1/(1−ε) + dδ)`. Zero at `ε = 1` by convention.
pub fn nc_capacity_d_inf(epsilon: f64, d: u32, tol: f64) -> Result<CapacityResult> {
    check_probability("epsilon", epsilon)?;
    check_tol(tol)?;
    if d == 0 {
        return Err(CapacityError::InvalidArgument(
            "d must be at least 1".into(),
        ));
    }
    if epsilon == 1.0 {
        return Ok(CapacityResult {
            value: 0.0,
            params: SchemeParams::new(epsilon, vec![0.0])?,
            residual: 0.0,
        });
    }
    let c = 1.0 / (1.0 - epsilon);
    let d = f64::from(d);
    let objective = |x: f64| entropy(x) / (c + d * x);
    // Sign of the derivative: positive left of the maximiser.
    let foc = |x: f64| ((1.0 - x) / x).log2() * (c + d * x) - d * entropy(x);
    let best = scan_then_golden(objective, 0.0, 0.5, SCAN_POINTS, tol);
    let best = polish_interior(best, &objective, &foc, 0.0, 0.5);
    Ok(CapacityResult {
        value: best.value,
        params: SchemeParams::new(epsilon, vec![best.x])?,
        residual: foc(best.x).abs(),
    })
}

/// Refines an interior maximiser by bisecting on the sign of a first-order
/// condition, which is positive left of the maximiser. Golden section alone
/// resolves a flat peak only to about `sqrt(f64::EPSILON)`.
fn polish_interior(
    best: Maximum,
    objective: &impl Fn(f64) -> f64,
    foc: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Maximum {
    if best.x <= lo || best.x >= hi {
        return best;
    }
    let width = 1e-6;
    let a = (best.x - width).max(lo + f64::EPSILON);
    let b = (best.x + width).min(hi);
    if !(foc(a) > 0.0 && foc(b) <= 0.0) {
        return best;
    }
    let x = bisect_root(foc, a, b);
    let value = objective(x);
    if value >= best.value - 1e-15 {
        Maximum { x, value }
    } else {
        best
    }
}

fn nested_golden_max<F>(
    dims: usize,
    upper: &dyn Fn(&[f64]) -> f64,
    f: &F,
    prefix: &[f64],
) -> Maximum
where
    F: Fn(&[f64]) -> f64,
{
    let hi = upper(prefix).max(0.0);
    golden_section_max(
        |x| {
            let mut point = prefix.to_vec();
            point.push(x);
            if point.len() == dims {
                f(&point)
            } else {
                nested_golden_max(dims, upper, f, &point).value
            }
        },
        0.0,
        hi,
        1e-10,
    )
}

/// Maximises a quasiconcave objective on a down-closed box or simplex by
/// nesting 1-D golden-section searches, returning the maximiser.
fn nested_refine<F>(dims: usize, upper: &dyn Fn(&[f64]) -> f64, f: F) -> GridOptimum
where
    F: Fn(&[f64]) -> f64,
{
    let mut point = Vec::with_capacity(dims);
    for _ in 0..dims {
        let m = nested_golden_max(dims, upper, &f, &point);
        point.push(m.x);
    }
    GridOptimum {
        value: f(&point),
        point,
    }
}

/// Feedback upper bound for the (2,∞)-RLL BEC from the five-node Q-graph:
///
/// ```text
/// max ε̄(H₂(δ₀) + εH₂(δ₁) + ε²H₂(δ₂)) / (1 + ε + ε² + 2ε̄(δ₀ + εδ₁ + ε²δ₂))
/// ```
///
/// over `δ_i ≥ 0`, `δ₀ + δ₁ + δ₂ ≤ 1`. The objective is a concave function
/// over a positive affine one, hence quasiconcave, so the simplex grid scan
/// is followed by nested golden-section searches that reach the global
/// maximum.
pub fn fb_upper_2inf(epsilon: f64, grid_n: usize) -> Result<GridOptimum> {
    check_probability("epsilon", epsilon)?;
    check_grid(grid_n, 2)?;
    let e = epsilon;
    let eb = 1.0 - e;
    let f = |x: &[f64]| {
        let num = eb * (entropy(x[0]) + e * entropy(x[1]) + e * e * entropy(x[2]));
        let den = 1.0 + e + e * e + 2.0 * eb * (x[0] + e * x[1] + e * e * x[2]);
        num / den
    };
    let axis = grid_points(grid_n);
    let mut best = GridOptimum {
        value: f64::NEG_INFINITY,
        point: vec![0.0; 3],
    };
    for i in 0..grid_n {
        for j in 0..grid_n - i {
            for l in 0..grid_n - i - j {
                let x = [axis[i], axis[j], axis[l]];
                let v = f(&x);
                if v > best.value {
                    best = GridOptimum {
                        value: v,
                        point: x.to_vec(),
                    };
                }
            }
        }
    }
    let upper = |prefix: &[f64]| 1.0 - prefix.iter().sum::<f64>();
    let refined = nested_refine(3, &upper, f);
    Ok(if refined.value > best.value {
        refined
    } else {
        best
    })
}

/// Capacity of the (1,2)-RLL BEC with feedback:
/// `max_{1/3≤δ≤1/2} H₂(δ) / (1/(1−ε) + ε̄ + δ)`.
///
/// At the interior maximiser `(1−δ)^{a+1} = δ^a` with `a = 1/(1−ε) + ε̄`;
/// `residual` reports `|(1−δ)^{a+1} − δ^a|`. Returns zero at `ε = 1`.
pub fn capacity_12(epsilon: f64, tol: f64) -> Result<CapacityResult> {
    check_probability("epsilon", epsilon)?;
    check_tol(tol)?;
    if epsilon == 1.0 {
        return Ok(CapacityResult {
            value: 0.0,
            params: SchemeParams::new(epsilon, vec![0.5])?,
            residual: 0.0,
        });
    }
    let a = 1.0 / (1.0 - epsilon) + (1.0 - epsilon);
    let objective = |x: f64| entropy(x) / (a + x);
    let foc = |x: f64| (a + 1.0) * (1.0 - x).ln() - a * x.ln();
    let (lo, hi) = (1.0 / 3.0, 0.5);
    let best = scan_then_golden(objective, lo, hi, SCAN_POINTS, tol);
    let best = polish_interior(best, &objective, &foc, lo, hi);
    let residual = ((1.0 - best.x).powf(a + 1.0) - best.x.powf(a)).abs();
    Ok(CapacityResult {
        value: best.value,
        params: SchemeParams::new(epsilon, vec![best.x])?,
        residual,
    })
}

/// Two-parameter feedback upper bound for the (1,2)-RLL BEC, taking the
/// coding-scheme FSM as the Q-graph:
///
/// ```text
/// max_{0≤δ₁,δ₂≤1} (ε̄²H₂(δ₁) + εε̄H₂(δ₂)) / (1 + ε̄ + ε̄²δ₁ − εε̄δ₂)
/// ```
///
/// `δ₁` is the probability of a '0' in the unconstrained node and `δ₂` in
/// the node entered after an erasure there. The maximum lies on
/// `δ₂ = 1 − δ₁`, where the expression reduces to [`capacity_12`].
pub fn ub_12_two_param(epsilon: f64, grid_n: usize) -> Result<GridOptimum> {
    check_probability("epsilon", epsilon)?;
    check_grid(grid_n, 2)?;
    let e = epsilon;
    let eb = 1.0 - e;
    let f = |x: &[f64]| {
        let num = eb * eb * entropy(x[0]) + e * eb * entropy(x[1]);
        let den = 1.0 + eb + eb * eb * x[0] - e * eb * x[1];
        num / den
    };
    let axis = grid_points(grid_n);
    let mut best = GridOptimum {
        value: f64::NEG_INFINITY,
        point: vec![0.0; 2],
    };
    for &x in &axis {
        for &y in &axis {
            let v = f(&[x, y]);
            if v > best.value {
                best = GridOptimum {
                    value: v,
                    point: vec![x, y],
                };
            }
        }
    }
    let refined = nested_refine(2, &|_| 1.0, f);
    Ok(if refined.value > best.value {
        refined
    } else {
        best
    })
}
