//! ε-sweeps over the capacity curves.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use rllbec::capacity::{
    capacity_12, fb_upper_2inf, feedback_capacity, nc_capacity_d_inf, CapacityResult, DEFAULT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Fb0k,
    Unconstrained,
    NcDinf,
    FbUb2inf,
    Cap12,
}

impl FromStr for Curve {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fb0k" => Ok(Curve::Fb0k),
            "unconstrained" => Ok(Curve::Unconstrained),
            "nc-dinf" => Ok(Curve::NcDinf),
            "fb-ub-2inf" => Ok(Curve::FbUb2inf),
            "cap-12" => Ok(Curve::Cap12),
            other => Err(format!(
                "unknown curve '{other}' (expected fb0k, unconstrained, nc-dinf, fb-ub-2inf, cap-12)"
            )),
        }
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Curve::Fb0k => "fb0k",
            Curve::Unconstrained => "unconstrained",
            Curve::NcDinf => "nc-dinf",
            Curve::FbUb2inf => "fb-ub-2inf",
            Curve::Cap12 => "cap-12",
        })
    }
}

/// ε-grid given as `start:stop:step`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("grid '{s}' is not start:stop:step"));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number '{t}': {e}"))
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) {
            return Err("grid endpoints must lie in [0, 1]".into());
        }
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err("grid needs step > 0 and stop >= start".into());
        }
        let count = ((stop - start) / step + 1e-12).floor() as usize + 1;
        let mut points: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
        if let Some(last) = points.last_mut() {
            if (*last - stop).abs() <= 1e-12 {
                *last = stop;
            }
        }
        if points.len() < 2 {
            return Err(format!("grid '{s}' has fewer than two points"));
        }
        Ok(Grid(points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub curve: String,
    pub epsilon: f64,
    pub k: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub curves: Vec<Curve>,
    pub ks: Vec<usize>,
    pub d: u32,
    pub grid: Grid,
    pub grid_n: usize,
}

struct Task {
    curve: Curve,
    epsilon: f64,
    k: Option<usize>,
}

fn row(task: &Task, tag: String, value: f64, result: Option<CapacityResult>) -> SweepRow {
    SweepRow {
        curve: task.curve.to_string(),
        epsilon: task.epsilon,
        k: tag,
        value: round_sig(value),
        delta_star: result.as_ref().map(|r| r.params.delta.clone()),
        residual: result.map(|r| r.residual),
    }
}

fn evaluate(task: &Task, plan: &SweepPlan) -> Result<SweepRow> {
    let eps = task.epsilon;
    Ok(match task.curve {
        Curve::Fb0k => {
            let k = task.k.expect("fb0k tasks carry k");
            let r = feedback_capacity(eps, k, DEFAULT_TOL)?;
            row(task, k.to_string(), r.value, Some(r))
        }
        Curve::Unconstrained => row(task, "unconstrained".into(), 1.0 - eps, None),
        Curve::NcDinf => {
            let r = nc_capacity_d_inf(eps, plan.d, DEFAULT_TOL)?;
            row(task, format!("{},inf", plan.d), r.value, Some(r))
        }
        Curve::FbUb2inf => {
            let g = fb_upper_2inf(eps, plan.grid_n)?;
            let mut out = row(task, "2,inf".into(), g.value, None);
            out.delta_star = Some(g.point);
            out
        }
        Curve::Cap12 => {
            let r = capacity_12(eps, DEFAULT_TOL)?;
            row(task, "1,2".into(), r.value, Some(r))
        }
    })
}

/// Rows ordered by ε, then by curve and `k` in the order requested.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRow>> {
    if plan.curves.contains(&Curve::FbUb2inf) && plan.d != 2 {
        bail!("fb-ub-2inf is only defined for d = 2");
    }
    if plan.curves.contains(&Curve::Fb0k) && plan.ks.contains(&0) {
        bail!("k must be at least 1");
    }
    let mut tasks = Vec::new();
    for &epsilon in &plan.grid.0 {
        for &curve in &plan.curves {
            if curve == Curve::Fb0k {
                tasks.extend(plan.ks.iter().map(|&k| Task {
                    curve,
                    epsilon,
                    k: Some(k),
                }));
            } else {
                tasks.push(Task {
                    curve,
                    epsilon,
                    k: None,
                });
            }
        }
    }
    tasks.par_iter().map(|t| evaluate(t, plan)).collect()
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    r + 0.0
}

/// Shortest decimal that reads back as `x` rounded to 12 significant digits.
pub fn format_sig(x: f64) -> String {
    format!("{}", round_sig(x))
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve", "epsilon", "k", "value"])?;
    for r in rows {
        w.write_record([
            r.curve.as_str(),
            &format_sig(r.epsilon),
            &r.k,
            &format_sig(r.value),
        ])?;
    }
    w.flush().context("writing CSV")?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}
