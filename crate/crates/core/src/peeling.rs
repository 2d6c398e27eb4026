//! The two stripping engines.
//!
//! The parallel process removes every light vertex (degree `< k`) of the
//! current configuration at once, together with its incident tuples, and
//! repeats until none is left; what remains is the k-core. SLOW-STRIP keeps
//! a FIFO queue of light vertices and, per step, deletes one tuple through
//! the vertex at the front, or dequeues that vertex once it has no points.
//! Both end at the same core.

use std::collections::VecDeque;

use serde::Serialize;

use crate::apmodel::{Configuration, Incidence};
use crate::error::{Error, Result};
use crate::thresholds;

#[derive(Clone, Debug, PartialEq)]
pub struct PeelResult {
    /// The k-core: the input bins with only the surviving tuples live.
    pub core: Configuration,
    /// Stripping number: rounds with a nonempty light set.
    pub s: usize,
    /// `|S_0|, |S_1|, ...`
    pub layer_sizes: Vec<usize>,
    /// Round in which each bin was removed; `None` for core bins.
    pub layer_of: Vec<Option<u32>>,
    /// Index of the last round; equal to `s`, kept under its own name because
    /// the depth bounds are phrased in terms of it.
    pub i_max: usize,
}

impl PeelResult {
    pub fn core_vertices(&self) -> Vec<u32> {
        (0..self.layer_of.len() as u32)
            .filter(|&v| self.layer_of[v as usize].is_none())
            .collect()
    }

    pub fn core_size(&self) -> usize {
        self.layer_of.iter().filter(|l| l.is_none()).count()
    }

    /// Bins of layer `i`, ascending.
    pub fn layer(&self, i: u32) -> Vec<u32> {
        (0..self.layer_of.len() as u32)
            .filter(|&v| self.layer_of[v as usize] == Some(i))
            .collect()
    }
}

/// Runs the parallel k-stripping process.
pub fn parallel_strip(cfg: &Configuration, k: u32) -> PeelResult {
    strip_rounds(cfg, k, None)
}

/// Parallel stripping restricted to the bins flagged in `present`; other
/// bins take no part and are reported with no layer.
pub(crate) fn strip_rounds(cfg: &Configuration, k: u32, present: Option<&[bool]>) -> PeelResult {
    let n = cfg.n();
    let inc = cfg.incidence();
    let mut core = cfg.clone();
    let mut alive = present.map_or_else(|| vec![true; n], <[bool]>::to_vec);
    let mut layer_of = vec![None; n];
    let mut queued = vec![false; n];
    let mut current: Vec<u32> = (0..n as u32)
        .filter(|&v| alive[v as usize] && core.degree(v) < k)
        .collect();
    for &v in &current {
        queued[v as usize] = true;
    }
    let mut layer_sizes = Vec::new();
    while !current.is_empty() {
        let round = layer_sizes.len() as u32;
        layer_sizes.push(current.len());
        for &v in &current {
            alive[v as usize] = false;
            layer_of[v as usize] = Some(round);
        }
        let mut next = Vec::new();
        for &v in &current {
            for &t in inc.of(v) {
                if !core.remove_tuple(t as usize) {
                    continue;
                }
                for &u in core.tuple(t as usize) {
                    let ui = u as usize;
                    if alive[ui] && !queued[ui] && core.degree(u) < k {
                        queued[ui] = true;
                        next.push(u);
                    }
                }
            }
        }
        current = next;
    }
    let s = layer_sizes.len();
    PeelResult {
        core,
        s,
        layer_sizes,
        layer_of,
        i_max: s,
    }
}

/// The k-core of `cfg`.
pub fn k_core(cfg: &Configuration, k: u32) -> Configuration {
    parallel_strip(cfg, k).core
}

/// What one SLOW-STRIP step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlowStep {
    /// A point of `vertex` was removed along with the rest of `tuple`.
    Point { vertex: u32, tuple: u32 },
    /// `vertex` had no points left and was dequeued.
    Vertex { vertex: u32 },
}

/// One entry of the removal log: the processed vertex and the tuple removed
/// through it, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Removal {
    pub vertex: u32,
    pub tuple: Option<u32>,
}

/// Step-by-step SLOW-STRIP engine.
///
/// The queue starts with the light bins in ascending id order; the point
/// removed from the front vertex is its lowest-index live point. Per-step
/// counters `L` (light degree), `N` (heavy bins), `D` (heavy degree) are
/// maintained exactly.
pub struct SlowStripper {
    k: u32,
    cfg: Configuration,
    inc: Incidence,
    deg: Vec<u32>,
    cursor: Vec<u32>,
    queue: VecDeque<u32>,
    queued: Vec<bool>,
    round: Vec<u32>,
    psi: Vec<u32>,
    light: u64,
    heavy_count: u64,
    heavy_degree: u64,
    heavy_at_k: u64,
    t: usize,
}

impl SlowStripper {
    pub fn new(cfg: &Configuration, k: u32) -> Self {
        let n = cfg.n();
        let deg = cfg.degrees().to_vec();
        let mut queue = VecDeque::new();
        let mut queued = vec![false; n];
        let (mut light, mut hn, mut hd, mut hk) = (0u64, 0u64, 0u64, 0u64);
        for v in 0..n {
            let d = deg[v];
            if d < k {
                light += d as u64;
                queue.push_back(v as u32);
                queued[v] = true;
            } else {
                hn += 1;
                hd += d as u64;
                if d == k {
                    hk += 1;
                }
            }
        }
        SlowStripper {
            k,
            inc: cfg.incidence(),
            cfg: cfg.clone(),
            deg,
            cursor: vec![0; n],
            queue,
            queued,
            round: vec![0; n],
            psi: Vec::new(),
            light,
            heavy_count: hn,
            heavy_degree: hd,
            heavy_at_k: hk,
            t: 0,
        }
    }

    /// Total degree of light bins, `L_t`.
    pub fn light_degree(&self) -> u64 {
        self.light
    }

    /// Number of heavy bins, `N_t`.
    pub fn heavy_count(&self) -> u64 {
        self.heavy_count
    }

    /// Total degree of heavy bins, `D_t`.
    pub fn heavy_degree(&self) -> u64 {
        self.heavy_degree
    }

    /// Heavy bins with degree exactly `k`.
    pub fn heavy_at_k(&self) -> u64 {
        self.heavy_at_k
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    pub fn front(&self) -> Option<u32> {
        self.queue.front().copied()
    }

    /// Parallel round of the vertex at the front of the queue.
    pub fn front_round(&self) -> Option<u32> {
        self.front().map(|v| self.round[v as usize])
    }

    pub fn is_done(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }

    fn decrement(&mut self, u: u32, front_round: u32) {
        let ui = u as usize;
        let old = self.deg[ui];
        let new = old - 1;
        self.deg[ui] = new;
        let k = self.k;
        if old >= k {
            if new >= k {
                self.heavy_degree -= 1;
            } else {
                self.heavy_count -= 1;
                self.heavy_degree -= old as u64;
                self.light += new as u64;
            }
            if old == k {
                self.heavy_at_k -= 1;
            }
            if new == k {
                self.heavy_at_k += 1;
            }
        } else {
            self.light -= 1;
        }
        if new < k && !self.queued[ui] {
            self.queued[ui] = true;
            self.round[ui] = front_round + 1;
            self.queue.push_back(u);
        }
    }

    /// Performs one step; `None` once the queue is empty.
    pub fn step(&mut self) -> Option<SlowStep> {
        let v = *self.queue.front()?;
        let vi = v as usize;
        self.t += 1;
        if self.deg[vi] == 0 {
            self.queue.pop_front();
            self.psi.push(v);
            return Some(SlowStep::Vertex { vertex: v });
        }
        let list = self.inc.of(v);
        let mut c = self.cursor[vi] as usize;
        while !self.cfg.is_live(list[c] as usize) {
            c += 1;
        }
        self.cursor[vi] = c as u32;
        let t = list[c];
        let front_round = self.round[vi];
        self.cfg.remove_tuple(t as usize);
        let r = self.cfg.r();
        for j in 0..r {
            let u = self.cfg.tuple(t as usize)[j];
            self.decrement(u, front_round);
        }
        Some(SlowStep::Point { vertex: v, tuple: t })
    }

    /// Vertices dequeued so far, in order.
    pub fn stripping_sequence(&self) -> &[u32] {
        &self.psi
    }
}

/// One recorded SLOW-STRIP state `G_t` (before step `t` runs).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    #[serde(rename = "L")]
    pub light: u64,
    #[serde(rename = "N")]
    pub heavy_count: u64,
    #[serde(rename = "D")]
    pub heavy_degree: u64,
    pub zeta: Option<f64>,
    /// `θ` predicted from `ζ_t` through `ψ`.
    pub theta_psi: Option<f64>,
    /// `-1 + (r-1)(k-1) p̂` with `p̂ = k·#{heavy bins of degree k} / D_t`.
    pub theta_emp: Option<f64>,
    pub round: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlowTrace {
    /// Stripping sequence Ψ: vertices in the order they were dequeued.
    pub psi: Vec<u32>,
    pub steps: Vec<TraceRow>,
    /// `t(i)`: step at which the first vertex of round `i` reached the front.
    pub t_of_round: Vec<Option<usize>>,
    pub removal_log: Vec<Removal>,
    pub total_steps: usize,
}

/// Trace stride: every step up to `10^4` bins, else every `⌈n / 10^4⌉`.
pub fn trace_stride(n: usize) -> usize {
    if n <= 10_000 {
        1
    } else {
        n.div_ceil(10_000)
    }
}

fn snapshot(st: &SlowStripper, r: usize) -> TraceRow {
    let k = st.k as usize;
    let zeta = (st.heavy_count > 0).then(|| st.heavy_degree as f64 / st.heavy_count as f64);
    let theta_psi = zeta
        .filter(|&z| z > k as f64)
        .and_then(|z| thresholds::theta_of_zeta(z, r, k).ok());
    let theta_emp = (st.heavy_degree > 0).then(|| {
        let p = (k as u64 * st.heavy_at_k) as f64 / st.heavy_degree as f64;
        -1.0 + ((r - 1) * k.saturating_sub(1)) as f64 * p
    });
    TraceRow {
        t: st.steps_taken(),
        light: st.light,
        heavy_count: st.heavy_count,
        heavy_degree: st.heavy_degree,
        zeta,
        theta_psi,
        theta_emp,
        round: st.front_round(),
    }
}

/// Runs SLOW-STRIP to completion.
pub fn slow_strip(cfg: &Configuration, k: u32) -> (PeelResult, SlowTrace) {
    let r = cfg.r();
    let stride = trace_stride(cfg.n());
    let mut st = SlowStripper::new(cfg, k);
    let mut steps = Vec::new();
    let mut t_of_round: Vec<Option<usize>> = Vec::new();
    let mut removal_log = Vec::new();
    let mut last_round: Option<u32> = None;
    loop {
        let front_round = st.front_round();
        let boundary = front_round.is_some() && front_round != last_round;
        if let (true, Some(i)) = (boundary, front_round) {
            while t_of_round.len() < i as usize {
                t_of_round.push(None);
            }
            t_of_round.push(Some(st.steps_taken()));
            last_round = front_round;
        }
        if boundary || st.steps_taken().is_multiple_of(stride) || st.is_done() {
            steps.push(snapshot(&st, r));
        }
        match st.step() {
            Some(SlowStep::Point { vertex, tuple }) => removal_log.push(Removal {
                vertex,
                tuple: Some(tuple),
            }),
            Some(SlowStep::Vertex { vertex }) => removal_log.push(Removal { vertex, tuple: None }),
            None => break,
        }
    }
    let n = cfg.n();
    let mut layer_of = vec![None; n];
    let mut layer_sizes: Vec<usize> = Vec::new();
    for &v in &st.psi {
        let i = st.round[v as usize];
        layer_of[v as usize] = Some(i);
        if layer_sizes.len() <= i as usize {
            layer_sizes.resize(i as usize + 1, 0);
        }
        layer_sizes[i as usize] += 1;
    }
    let s = layer_sizes.len();
    let total_steps = st.steps_taken();
    let psi = std::mem::take(&mut st.psi);
    let result = PeelResult {
        core: st.cfg,
        s,
        layer_sizes,
        layer_of,
        i_max: s,
    };
    let trace = SlowTrace {
        psi,
        steps,
        t_of_round,
        removal_log,
        total_steps,
    };
    (result, trace)
}

/// Expected one-step change of the light degree,
/// `θ − (θ + r) L / (L + D)` with `θ = θ(D/N)`.
pub fn drift_prediction(light: u64, heavy_count: u64, heavy_degree: u64, r: usize, k: usize) -> Result<f64> {
    if light == 0 || heavy_count == 0 {
        return Err(Error::Domain("drift needs L > 0 and N > 0".into()));
    }
    if heavy_degree <= k as u64 * heavy_count {
        return Err(Error::Domain(format!(
            "degenerate zeta: D={heavy_degree} <= kN={}",
            k as u64 * heavy_count
        )));
    }
    let theta = thresholds::theta_of_zeta(heavy_degree as f64 / heavy_count as f64, r, k)?;
    let b = (light + heavy_degree) as f64;
    Ok(theta - (theta + r as f64) * light as f64 / b)
}

/// Shape of the layer-size sequence of a subcritical run: decrease, a flat
/// valley, growth, and finally the collapse once most bins are gone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerShape {
    /// Round of the smallest layer before the collapse.
    pub argmin: usize,
    pub min_size: usize,
    /// Contiguous rounds around `argmin` with size at most
    /// `VALLEY_FACTOR` times the minimum.
    pub window: (usize, usize),
    /// Last round before the final strictly decreasing run.
    pub peak: usize,
    /// Fraction of rounds in `[burn_in, window.0)` with `|S_{i+1}| < |S_i|`.
    pub decreasing_fraction: f64,
    /// Fraction of rounds in `(window.1, peak)` with `|S_{i+1}| > |S_i|`.
    pub increasing_fraction: f64,
    /// Fraction over both outside-window ranges together.
    pub outside_fraction: f64,
}

/// Layers within this factor of the minimum count as the flat valley.
pub const VALLEY_FACTOR: f64 = 1.25;

/// Locates the valley of `layer_sizes` after `burn_in` rounds, ignoring the
/// final collapse. `None` if no round after `burn_in` precedes the collapse.
pub fn layer_shape(layer_sizes: &[usize], burn_in: usize) -> Option<LayerShape> {
    let mut peak = layer_sizes.len().checked_sub(1)?;
    while peak > 0 && layer_sizes[peak - 1] > layer_sizes[peak] {
        peak -= 1;
    }
    if peak <= burn_in + 1 {
        return None;
    }
    let argmin = (burn_in..=peak).min_by_key(|&i| (layer_sizes[i], i))?;
    let min_size = layer_sizes[argmin];
    let cap = VALLEY_FACTOR * min_size as f64;
    let mut lo = argmin;
    while lo > burn_in && layer_sizes[lo - 1] as f64 <= cap {
        lo -= 1;
    }
    let mut hi = argmin;
    while hi < peak && layer_sizes[hi + 1] as f64 <= cap {
        hi += 1;
    }
    let frac = |range: std::ops::Range<usize>, up: bool| -> (usize, usize) {
        let total = range.len();
        let good = range
            .filter(|&i| {
                let (a, b) = (layer_sizes[i], layer_sizes[i + 1]);
                if up {
                    b > a
                } else {
                    b < a
                }
            })
            .count();
        (good, total)
    };
    let (dg, dt) = frac(burn_in..lo, false);
    let (ig, it) = frac(hi..peak, true);
    let ratio = |g: usize, t: usize| if t == 0 { 1.0 } else { g as f64 / t as f64 };
    Some(LayerShape {
        argmin,
        min_size,
        window: (lo, hi),
        peak,
        decreasing_fraction: ratio(dg, dt),
        increasing_fraction: ratio(ig, it),
        outside_fraction: ratio(dg + ig, dt + it),
    })
}
