use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apmodel::sample_ap;
use crate::depth::{build_strip_digraph, max_reach_in};
use crate::error::{Error, Result};
use crate::peeling::{parallel_strip, slow_strip};
use crate::thresholds::core_threshold;

pub const SWEEP_HEADER: &str =
    "r,k,n,c,xi,side,seed,s_rounds,slow_steps,core_vertices,core_tuples,max_reach,i_max,runtime_ms,error";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Sub,
    Super,
    Window,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Sub => "sub",
            Side::Super => "super",
            Side::Window => "window",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Measure {
    pub s: bool,
    pub max_reach: bool,
    pub core_size: bool,
    /// Also run SLOW-STRIP and record its step count.
    pub trace: bool,
}

impl Default for Measure {
    fn default() -> Self {
        Measure {
            s: true,
            max_reach: false,
            core_size: true,
            trace: false,
        }
    }
}

fn default_b() -> usize {
    crate::coupling::DEFAULT_B
}
fn default_sigma() -> f64 {
    0.1
}
fn default_big_k() -> f64 {
    2.0
}
fn default_replicates() -> usize {
    1
}

/// Declarative sweep: every `(n, δ)` pair is one grid point, run
/// `replicates` times at `c = c_{r,k} ± n^{-δ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub r: usize,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub delta_list: Vec<f64>,
    pub side: Side,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed0: u64,
    #[serde(default)]
    pub measure: Measure,
    #[serde(rename = "B", default = "default_b")]
    pub b: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(rename = "K", default = "default_big_k")]
    pub big_k: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Schema("replicates must be at least 1".into()));
        }
        if self.n_list.is_empty() || self.delta_list.is_empty() {
            return Err(Error::Schema("n_list and delta_list must be nonempty".into()));
        }
        core_threshold(self.r, self.k)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: usize,
    pub k: usize,
    pub n: usize,
    pub c: f64,
    pub xi: f64,
    pub side: Side,
    pub seed: u64,
    pub s_rounds: Option<usize>,
    pub slow_steps: Option<usize>,
    pub core_vertices: Option<usize>,
    pub core_tuples: Option<usize>,
    pub max_reach: Option<usize>,
    pub i_max: Option<usize>,
    pub runtime_ms: Option<u128>,
    pub error: Option<String>,
}

/// FNV-1a over the grid point's defining values.
fn grid_hash(r: usize, k: usize, n: usize, delta: f64, side: Side) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(&(r as u64).to_le_bytes());
    eat(&(k as u64).to_le_bytes());
    eat(&(n as u64).to_le_bytes());
    eat(&delta.to_bits().to_le_bytes());
    eat(side.as_str().as_bytes());
    h
}

/// Seed of one replicate at one grid point.
pub fn derived_seed(spec: &ExperimentSpec, n: usize, delta: f64, replicate: usize) -> u64 {
    spec.seed0
        .wrapping_add(replicate as u64)
        .wrapping_add(grid_hash(spec.r, spec.k, n, delta, spec.side))
}

struct Task {
    n: usize,
    delta: f64,
    seed: u64,
}

fn tasks(spec: &ExperimentSpec) -> Vec<Task> {
    let mut out = Vec::new();
    for &n in &spec.n_list {
        for &delta in &spec.delta_list {
            for rep in 0..spec.replicates {
                out.push(Task {
                    n,
                    delta,
                    seed: derived_seed(spec, n, delta, rep),
                });
            }
        }
    }
    out
}

fn run_task(spec: &ExperimentSpec, c_rk: f64, task: &Task, timing: bool) -> SweepRow {
    let start = Instant::now();
    let xi = match spec.side {
        Side::Window => 0.0,
        _ => (task.n as f64).powf(-task.delta),
    };
    let c = match spec.side {
        Side::Sub => c_rk - xi,
        Side::Super => c_rk + xi,
        Side::Window => c_rk,
    };
    let mut row = SweepRow {
        r: spec.r,
        k: spec.k,
        n: task.n,
        c,
        xi,
        side: spec.side,
        seed: task.seed,
        s_rounds: None,
        slow_steps: None,
        core_vertices: None,
        core_tuples: None,
        max_reach: None,
        i_max: None,
        runtime_ms: None,
        error: None,
    };
    if !(c > 0.0) || task.n == 0 {
        row.error = Some(format!("infeasible grid point: n={}, c={c}", task.n));
        return row;
    }
    let m = (c * task.n as f64).round() as usize;
    let cfg = match sample_ap(task.n, m, spec.r, task.seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let k = spec.k as u32;
    let m = &spec.measure;
    if m.s || m.core_size {
        let peel = parallel_strip(&cfg, k);
        if m.s {
            row.s_rounds = Some(peel.s);
            row.i_max = Some(peel.i_max);
        }
        if m.core_size {
            row.core_vertices = Some(peel.core_size());
            row.core_tuples = Some(peel.core.live_tuples());
        }
    }
    if m.max_reach {
        let dg = build_strip_digraph(&cfg, k);
        row.max_reach = Some(max_reach_in(&dg).1);
        if m.trace {
            row.slow_steps = Some(dg.trace().total_steps);
        }
    } else if m.trace {
        row.slow_steps = Some(slow_strip(&cfg, k).1.total_steps);
    }
    if timing {
        row.runtime_ms = Some(start.elapsed().as_millis());
    }
    row
}

/// Runs every replicate of every grid point in parallel. Rows come back in
/// grid order (`n`, then `δ`, then replicate). `runtime_ms` is filled only
/// when `timing` is set, so untimed runs are reproducible byte for byte.
pub fn run_sweep(spec: &ExperimentSpec, timing: bool) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let (c_rk, _) = core_threshold(spec.r, spec.k)?;
    Ok(tasks(spec)
        .par_iter()
        .map(|t| run_task(spec, c_rk, t, timing))
        .collect())
}

/// Single-threaded [`run_sweep`].
pub fn run_sweep_serial(spec: &ExperimentSpec, timing: bool) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let (c_rk, _) = core_threshold(spec.r, spec.k)?;
    Ok(tasks(spec).iter().map(|t| run_task(spec, c_rk, t, timing)).collect())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.r.to_string(),
            r.k.to_string(),
            r.n.to_string(),
            format!("{:.12}", r.c),
            format!("{:.12e}", r.xi),
            r.side.as_str().to_owned(),
            r.seed.to_string(),
            opt(&r.s_rounds),
            opt(&r.slow_steps),
            opt(&r.core_vertices),
            opt(&r.core_tuples),
            opt(&r.max_reach),
            opt(&r.i_max),
            opt(&r.runtime_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
