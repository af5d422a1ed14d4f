//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rllbec::capacity::{
    capacity_12, fb_upper_2inf, feedback_capacity, grid_max_rate, h2, nc_capacity_d_inf, rate_of,
    stationarity_residual, ub_12_two_param, SchemeParams, DEFAULT_TOL,
};
use rllbec::codec::{CodingParams, LabelId};
use rllbec::constraint::RllConstraint;
use rllbec::markov::{build_labeling_chain, build_s_chain, s_chain_closed_form, stationary};
use rllbec::sim::{renewal_rate_d_inf, run_feedback_sim, SimConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fb(eps: f64, k: usize) -> f64 {
    feedback_capacity(eps, k, DEFAULT_TOL).unwrap().value
}

fn grid_bound(k: usize) -> (usize, f64) {
    if k <= 2 {
        (201, 5e-4)
    } else {
        (51, 2e-3)
    }
}

const EPS_ORACLE: [f64; 6] = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9];

fn golden_endpoint() -> Outcome {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let got = fb(0.0, 1);
    let err = (got - phi.log2()).abs();
    check(err <= 1e-6, format!("C(0,k=1)={got:.9}, |err|={err:.2e}"))
}

fn degenerate_endpoints() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=6 {
        let at_one = fb(1.0, k);
        if at_one != 0.0 {
            return Err(format!("C(1,k={k}) = {at_one}, expected exactly 0"));
        }
        let noiseless = RllConstraint::zero_k(k as u32)
            .unwrap()
            .noiseless_capacity();
        worst = worst.max((fb(0.0, k) - noiseless).abs());
    }
    check(
        worst <= 1e-6,
        format!("C(1,k)=0 for k=1..6; max |C(0,k)-noiseless|={worst:.2e}"),
    )
}

fn grid_oracle() -> Outcome {
    let cases: Vec<(usize, f64)> = (1..=3)
        .flat_map(|k| EPS_ORACLE.iter().map(move |&e| (k, e)))
        .collect();
    let rows: Vec<(usize, f64, f64, f64, f64)> = cases
        .par_iter()
        .map(|&(k, eps)| {
            let (n, bound) = grid_bound(k);
            let g = grid_max_rate(eps, k, n).unwrap();
            let gap = (g.value - fb(eps, k)).abs();
            let residual =
                stationarity_residual(&SchemeParams::new(eps, g.point).unwrap()).unwrap();
            (k, eps, gap, bound, residual)
        })
        .collect();
    let bad: Vec<_> = rows
        .iter()
        .filter(|(_, _, gap, bound, res)| gap > bound || *res > 0.05)
        .collect();
    let max_gap = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let max_res = rows.iter().map(|r| r.4).fold(0.0, f64::max);
    check(
        bad.is_empty(),
        format!("18 cases, max gap {max_gap:.2e}, max residual {max_res:.2e}; failing {bad:?}"),
    )
}

fn optimum_invariants() -> Outcome {
    let mut worst_res = 0.0f64;
    for k in 2..=6 {
        for i in 0..10 {
            let eps = i as f64 / 10.0;
            let c = feedback_capacity(eps, k, DEFAULT_TOL).unwrap();
            let d = &c.params.delta;
            let res = stationarity_residual(&c.params).unwrap();
            worst_res = worst_res.max(res);
            let ordered = d.windows(2).all(|w| w[0] >= w[1]);
            if res > 1e-8 || !ordered || d[0] >= 0.5 {
                return Err(format!("k={k} eps={eps}: residual {res:.2e}, delta {d:?}"));
            }
        }
    }
    check(
        true,
        format!("50 optima, max residual {worst_res:.2e}, ordered, delta0<1/2"),
    )
}

fn capacity_shape() -> Outcome {
    let ks = [1usize, 2, 4, 8];
    let eps: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let table: Vec<Vec<f64>> = ks
        .par_iter()
        .map(|&k| eps.iter().map(|&e| fb(e, k)).collect())
        .collect();
    for (row, &k) in table.iter().zip(&ks) {
        for (i, w) in row.windows(2).enumerate() {
            if w[1] > w[0] + 1e-12 {
                return Err(format!("k={k}: increases at eps={}", eps[i + 1]));
            }
        }
        for (c, &e) in row.iter().zip(&eps) {
            if *c > 1.0 - e + 1e-12 {
                return Err(format!("k={k} eps={e}: {c} exceeds 1-eps"));
            }
        }
    }
    for pair in table.windows(2) {
        for (i, (a, b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            if b + 1e-12 < *a {
                return Err(format!("decreases in k at eps={}", eps[i]));
            }
        }
    }
    let c12 = fb(0.5, 12);
    check(
        (0.5 - c12).abs() <= 0.02,
        format!("monotone in eps and k, below 1-eps; C(0.5,k=12)={c12:.5}"),
    )
}

/// Maximum of the rate over the half-cube `[0,1/2]^k` by exhaustive grid.
fn half_cube_grid(eps: f64, k: usize, n: usize) -> f64 {
    let axis: Vec<f64> = (0..n).map(|i| 0.5 * i as f64 / (n - 1) as f64).collect();
    let mut idx = vec![0usize; k];
    let mut point = vec![0.0; k];
    let mut best = f64::NEG_INFINITY;
    loop {
        for (p, &i) in point.iter_mut().zip(&idx) {
            *p = axis[i];
        }
        best = best.max(rate_of(eps, &point));
        let mut carry = true;
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < n {
                carry = false;
                break;
            }
            *slot = 0;
        }
        if carry {
            return best;
        }
    }
}

fn noncausal_equals_feedback() -> Outcome {
    let cases: Vec<(usize, f64)> = (1..=3)
        .flat_map(|k| EPS_ORACLE.iter().map(move |&e| (k, e)))
        .collect();
    let rows: Vec<(usize, f64, f64, f64, bool)> = cases
        .par_iter()
        .map(|&(k, eps)| {
            let (n, bound) = grid_bound(k);
            let c = feedback_capacity(eps, k, DEFAULT_TOL).unwrap();
            let in_half = c.params.delta.iter().all(|&d| d <= 0.5);
            let full = grid_max_rate(eps, k, n).unwrap().value;
            let half = half_cube_grid(eps, k, n);
            let gap = (full - c.value)
                .abs()
                .max((half - c.value).abs())
                .max((full - half).abs());
            (k, eps, gap, bound, in_half)
        })
        .collect();
    let bad: Vec<_> = rows.iter().filter(|r| r.2 > r.3 || !r.4).collect();
    let max_gap = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    check(
        bad.is_empty(),
        format!(
            "half-cube, full-cube and chain optima agree, max gap {max_gap:.2e}; failing {bad:?}"
        ),
    )
}

fn zero_error_simulation() -> Outcome {
    let mut configs = Vec::new();
    for k in 1..=3 {
        for eps in [0.0, 0.3, 0.6] {
            for bits in [8u32, 16, 32] {
                configs.push((k, eps, bits));
            }
        }
    }
    let per_config = 10_000u64.div_ceil(configs.len() as u64);
    let mut trials = 0;
    for (i, &(k, eps, bits)) in configs.iter().enumerate() {
        let r = run_feedback_sim(&SimConfig::new(k, eps, bits, per_config, 1000 + i as u64))
            .map_err(|e| e.to_string())?;
        if r.errors != 0 || r.violations != 0 {
            return Err(format!(
                "k={k} eps={eps} bits={bits}: {} errors, {} violations",
                r.errors, r.violations
            ));
        }
        trials += r.trials;
    }

    let grid = [0.1, 0.2, 0.3, 0.4, 0.5];
    let mut deltas: Vec<Vec<f64>> = Vec::new();
    for k in 1..=3u32 {
        for code in 0..grid.len().pow(k) {
            let mut c = code;
            deltas.push(
                (0..k)
                    .map(|_| {
                        let d = grid[c % grid.len()];
                        c /= grid.len();
                        d
                    })
                    .collect(),
            );
        }
    }
    let swept: Result<Vec<u64>, String> = deltas
        .par_iter()
        .map(|delta| {
            let params = CodingParams::new(SchemeParams::new(0.5, delta.clone()).unwrap()).unwrap();
            let mut nodes = 0;
            for n in 2..=64 {
                nodes += common::exhaustive_feasibility(&params, n, 10)
                    .map_err(|e| format!("delta={delta:?} n={n}: {e}"))?
                    .nodes;
            }
            Ok(nodes)
        })
        .collect();
    let nodes: u64 = swept?.iter().sum();
    check(
        true,
        format!(
            "{trials} trials error-free and conforming; exhaustive sweep over {} delta vectors, n=2..64, depth 10, {nodes} states",
            deltas.len()
        ),
    )
}

fn rate_achievement() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for k in 1..=3 {
        for eps in [0.0, 0.2, 0.5] {
            let c = fb(eps, k);
            let bits = 62;
            let trials = (1.2e5 * c / f64::from(bits)).ceil() as u64;
            let r = run_feedback_sim(&SimConfig::new(k, eps, bits, trials, 77 + k as u64))
                .map_err(|e| e.to_string())?;
            let gap = (r.empirical_rate - c).abs();
            let band = (3.0 * r.stderr_rate).max(0.01);
            let pass = r.total_uses >= 100_000 && gap <= band && r.errors == 0 && r.violations == 0;
            ok &= pass;
            lines.push(format!(
                "k={k} eps={eps}: {:.4} vs {c:.4} ({} uses)",
                r.empirical_rate, r.total_uses
            ));
        }
    }
    check(ok, lines.join("; "))
}

fn stationary_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_pi = 0.0f64;
    let mut worst_rate = 0.0f64;
    for k in 1..=5 {
        for eps in [0.0, 0.2, 0.4, 0.6, 0.8] {
            for _ in 0..4 {
                let delta: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..0.99)).collect();
                let pi = stationary(&build_s_chain(eps, &delta).unwrap()).unwrap();
                let closed = s_chain_closed_form(eps, &delta);
                for (a, b) in pi.as_slice().iter().zip(&closed) {
                    worst_pi = worst_pi.max((a - b).abs());
                }
                let chain = build_labeling_chain(eps, &delta).unwrap();
                let pl = stationary(&chain).unwrap();
                let via_chain: f64 = LabelId::all(k)
                    .into_iter()
                    .map(|l| {
                        let d = match l {
                            LabelId::L(j) if j == k => 0.0,
                            l => delta[l.delta_index()],
                        };
                        pl[l.index()] * (1.0 - eps) * h2(d).unwrap()
                    })
                    .sum();
                worst_rate = worst_rate.max((via_chain - rate_of(eps, &delta)).abs());
            }
        }
    }
    check(
        worst_pi <= 1e-9 && worst_rate <= 1e-9,
        format!("100 configs: max |pi_S closed - iterated|={worst_pi:.2e}, max rate identity gap={worst_rate:.2e}"),
    )
}

fn two_inf_separation() -> Outcome {
    let upper = fb_upper_2inf(0.5, 201).unwrap().value;
    let nc = nc_capacity_d_inf(0.5, 2, DEFAULT_TOL).unwrap().value;
    let upper0 = fb_upper_2inf(0.0, 201).unwrap().value;
    let nc0 = nc_capacity_d_inf(0.0, 2, DEFAULT_TOL).unwrap().value;
    let ok = upper < nc
        && nc - upper > 1e-4
        && (upper0 - 0.5515).abs() <= 1e-3
        && (nc0 - 0.5515).abs() <= 1e-3;
    check(
        ok,
        format!("eps=0.5: upper {upper:.6} < non-causal {nc:.6} (gap {:.2e}); eps=0: {upper0:.6}, {nc0:.6}", nc - upper),
    )
}

fn one_two_capacity() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut worst_foc = 0.0f64;
    for i in 0..=20 {
        let eps = i as f64 / 20.0;
        let c = capacity_12(eps, DEFAULT_TOL).unwrap();
        let ub = ub_12_two_param(eps, 201).unwrap().value;
        worst_gap = worst_gap.max((c.value - ub).abs());
        let d = c.params.delta[0];
        if eps < 1.0 && d > 1.0 / 3.0 && d < 0.5 {
            let a = 1.0 / (1.0 - eps) + (1.0 - eps);
            worst_foc = worst_foc.max(((1.0 - d).powf(a + 1.0) - d.powf(a)).abs());
        }
    }
    let noiseless = RllConstraint::new(1, Some(2)).unwrap().noiseless_capacity();
    let at_zero = capacity_12(0.0, DEFAULT_TOL).unwrap().value;
    let zero_gap = (at_zero - noiseless).abs();
    check(
        worst_gap <= 1e-4 && zero_gap <= 1e-6 && worst_foc <= 1e-8,
        format!("21 points: max |cap - two-param bound|={worst_gap:.2e}; eps=0 gap {zero_gap:.2e}; max FOC residual {worst_foc:.2e}"),
    )
}

fn renewal_check() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [1u32, 2] {
        for eps in [0.1, 0.5] {
            let nc = nc_capacity_d_inf(eps, d, DEFAULT_TOL).unwrap();
            let r = renewal_rate_d_inf(eps, d, nc.params.delta[0], 1_000_000, 31 + u64::from(d))
                .map_err(|e| e.to_string())?;
            let z = (r.rate - nc.value).abs() / r.stderr_rate;
            ok &= z <= 3.0;
            lines.push(format!(
                "d={d} eps={eps}: {:.5} vs {:.5} ({z:.2} sigma)",
                r.rate, nc.value
            ));
        }
    }
    check(ok, lines.join("; "))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("golden-ratio endpoint", golden_endpoint),
        ("degenerate endpoints", degenerate_endpoints),
        ("grid oracle", grid_oracle),
        ("optimum invariants", optimum_invariants),
        ("capacity curve shape", capacity_shape),
        ("non-causal equals feedback", noncausal_equals_feedback),
        ("zero-error simulation", zero_error_simulation),
        ("rate achievement", rate_achievement),
        ("stationary identities", stationary_identities),
        ("(2,inf) separation", two_inf_separation),
        ("(1,2) capacity", one_two_capacity),
        ("(d,inf) renewal rate", renewal_check),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS [{secs:.2}s] {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:.2}s] {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
