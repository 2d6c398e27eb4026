//! Depth of non-core vertices.
//!
//! The stripping digraph of a SLOW-STRIP run has an edge `u → v` whenever a
//! tuple deleted while processing `v` also contains `u`. The forward closure
//! `R⁺(v)` is a legal stripping sequence ending at `v`, so its size bounds the
//! depth of `v` from above; the parallel round gives the lower bound.

use std::collections::VecDeque;

use serde::Serialize;

use crate::apmodel::Configuration;
use crate::error::{Error, Result};
use crate::peeling::{slow_strip, PeelResult, SlowTrace};

/// Largest instance accepted by [`exact_depth`].
pub const EXACT_DEPTH_CAP: usize = 12;

#[derive(Clone, Debug)]
pub struct StripDigraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    /// Position of each bin in the stripping sequence.
    position: Vec<Option<u32>>,
    peel: PeelResult,
    trace: SlowTrace,
}

impl StripDigraph {
    pub fn n(&self) -> usize {
        self.position.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_neighbors(&self, u: u32) -> &[u32] {
        &self.targets[self.offsets[u as usize]..self.offsets[u as usize + 1]]
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n() as u32).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    pub fn position(&self, v: u32) -> Option<u32> {
        self.position[v as usize]
    }

    pub fn peel(&self) -> &PeelResult {
        &self.peel
    }

    pub fn trace(&self) -> &SlowTrace {
        &self.trace
    }
}

/// Runs SLOW-STRIP and records the digraph of its stripping sequence.
pub fn build_strip_digraph(cfg: &Configuration, k: u32) -> StripDigraph {
    let n = cfg.n();
    let (peel, trace) = slow_strip(cfg, k);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for rm in &trace.removal_log {
        if let Some(t) = rm.tuple {
            for &u in cfg.tuple(t as usize) {
                if u != rm.vertex {
                    edges.push((u, rm.vertex));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let mut offsets = vec![0usize; n + 1];
    for &(u, _) in &edges {
        offsets[u as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let targets = edges.into_iter().map(|(_, v)| v).collect();
    let mut position = vec![None; n];
    for (i, &v) in trace.psi.iter().enumerate() {
        position[v as usize] = Some(i as u32);
    }
    StripDigraph {
        offsets,
        targets,
        position,
        peel,
        trace,
    }
}

/// Visits the forward closure of `v`, using `stamp`/`epoch` as the visited
/// marker so repeated queries need no clearing.
fn closure_into(dg: &StripDigraph, v: u32, stamp: &mut [u32], epoch: u32, out: &mut Vec<u32>) {
    out.clear();
    stamp[v as usize] = epoch;
    out.push(v);
    let mut head = 0;
    while head < out.len() {
        let u = out[head];
        head += 1;
        for &w in dg.out_neighbors(u) {
            if stamp[w as usize] != epoch {
                stamp[w as usize] = epoch;
                out.push(w);
            }
        }
    }
}

/// `R⁺(v)`, sorted by position in the stripping sequence.
pub fn reach_set(dg: &StripDigraph, v: u32) -> Result<Vec<u32>> {
    if v as usize >= dg.n() {
        return Err(Error::Domain(format!("vertex {v} out of range")));
    }
    if dg.position(v).is_none() {
        return Err(Error::NotStripped(v));
    }
    let mut stamp = vec![0u32; dg.n()];
    let mut out = Vec::new();
    closure_into(dg, v, &mut stamp, 1, &mut out);
    out.sort_unstable_by_key(|&u| dg.position(u));
    Ok(out)
}

/// Non-core vertex with the largest `R⁺`, and that size; `(None, 0)` if
/// nothing was stripped. Ties go to the vertex visited first.
pub fn max_reach(cfg: &Configuration, k: u32) -> (Option<u32>, usize) {
    max_reach_in(&build_strip_digraph(cfg, k))
}

pub fn max_reach_in(dg: &StripDigraph) -> (Option<u32>, usize) {
    let psi = &dg.trace.psi;
    if psi.is_empty() {
        return (None, 0);
    }
    // Upper bounds: children precede their parents in Ψ.
    let mut ub = vec![0u64; dg.n()];
    for (pos, &v) in psi.iter().enumerate() {
        let sum = dg
            .out_neighbors(v)
            .iter()
            .fold(1u64, |acc, &w| acc.saturating_add(ub[w as usize]));
        ub[v as usize] = sum.min(pos as u64 + 1);
    }
    let mut order: Vec<u32> = psi.clone();
    order.sort_unstable_by_key(|&v| (std::cmp::Reverse(ub[v as usize]), v));
    let mut stamp = vec![0u32; dg.n()];
    let mut buf = Vec::new();
    let mut best: (Option<u32>, usize) = (None, 0);
    for (i, &v) in order.iter().enumerate() {
        if ub[v as usize] <= best.1 as u64 {
            break;
        }
        closure_into(dg, v, &mut stamp, i as u32 + 1, &mut buf);
        if buf.len() > best.1 {
            best = (Some(v), buf.len());
        }
    }
    best
}

/// Whether removing `seq` one bin at a time from `cfg` is legal: each bin
/// must have fewer than `k` live points when its turn comes.
pub fn is_legal_stripping_sequence(cfg: &Configuration, k: u32, seq: &[u32]) -> bool {
    let inc = cfg.incidence();
    let mut live = cfg.clone();
    let mut removed = vec![false; cfg.n()];
    for &v in seq {
        if v as usize >= cfg.n() || removed[v as usize] || live.degree(v) >= k {
            return false;
        }
        removed[v as usize] = true;
        for &t in inc.of(v) {
            live.remove_tuple(t as usize);
        }
    }
    true
}

/// Minimum position of `v` over all stripping sequences (1 for a bin that
/// is light from the start). Exhaustive over removed sets.
pub fn exact_depth(cfg: &Configuration, k: u32, v: u32) -> Result<usize> {
    let n = cfg.n();
    if n > EXACT_DEPTH_CAP {
        return Err(Error::SizeLimit {
            n,
            cap: EXACT_DEPTH_CAP,
        });
    }
    if v as usize >= n {
        return Err(Error::Domain(format!("vertex {v} out of range")));
    }
    let tuples: Vec<u32> = cfg
        .live_tuple_slices()
        .map(|t| t.iter().fold(0u32, |m, &b| m | (1 << b)))
        .collect();
    let slices: Vec<&[u32]> = cfg.live_tuple_slices().collect();
    let degree_after = |removed: u32, u: u32| -> u32 {
        tuples
            .iter()
            .zip(&slices)
            .filter(|(&mask, _)| mask & removed == 0)
            .map(|(_, s)| s.iter().filter(|&&b| b == u).count() as u32)
            .sum()
    };
    let mut seen = vec![false; 1 << n];
    let mut frontier = vec![0u32];
    seen[0] = true;
    for depth in 1..=n {
        if frontier.iter().any(|&s| degree_after(s, v) < k) {
            return Ok(depth);
        }
        let mut next = Vec::new();
        for &s in &frontier {
            for u in 0..n as u32 {
                let bit = 1u32 << u;
                if u == v || s & bit != 0 {
                    continue;
                }
                let t = s | bit;
                if !seen[t as usize] && degree_after(s, u) < k {
                    seen[t as usize] = true;
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    Err(Error::NotStripped(v))
}

/// Bins within hypergraph distance `s` of `a`, ascending.
pub fn neighborhood(cfg: &Configuration, a: &[u32], s: usize) -> Vec<u32> {
    let inc = cfg.incidence();
    let mut dist = vec![usize::MAX; cfg.n()];
    let mut queue = VecDeque::new();
    for &v in a {
        if dist[v as usize] != 0 {
            dist[v as usize] = 0;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize];
        if d == s {
            continue;
        }
        for &t in inc.of(u) {
            for &w in cfg.tuple(t as usize) {
                if dist[w as usize] == usize::MAX {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    (0..cfg.n() as u32)
        .filter(|&v| dist[v as usize] != usize::MAX)
        .collect()
}

/// Per-round structure shared by layered reach queries on one instance.
pub struct LayerIndex {
    peel: PeelResult,
    tuples: Vec<Vec<u32>>,
    /// Tuple ids (into `tuples`) grouped by the round in which they die.
    by_death: Vec<Vec<u32>>,
    /// Component id (union-find root) of each stripped bin inside its layer graph.
    comp: Vec<u32>,
    members: Vec<Vec<u32>>,
    dminus: Vec<u32>,
}

/// One layer of a layered reach.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReachLayer {
    pub j: usize,
    pub vertices: Vec<u32>,
    /// `D⁻` of the layer: total points of its members in tuples deleted in the
    /// previous round.
    pub dminus: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayeredReach {
    pub vertex: u32,
    pub round: usize,
    /// Indexed by `j = 0..=round`.
    pub layers: Vec<ReachLayer>,
}

impl LayeredReach {
    pub fn union(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.layers.iter().flat_map(|l| l.vertices.iter().copied()).collect();
        all.sort_unstable();
        all
    }

    pub fn total_size(&self) -> usize {
        self.layers.iter().map(|l| l.vertices.len()).sum()
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[parent[x as usize] as usize];
        parent[x as usize] = p;
        x = p;
    }
    x
}

impl LayerIndex {
    pub fn new(cfg: &Configuration, k: u32) -> Self {
        Self::from_peel(cfg, crate::peeling::parallel_strip(cfg, k))
    }

    pub fn from_peel(cfg: &Configuration, peel: PeelResult) -> Self {
        let n = cfg.n();
        let layer = |u: u32| peel.layer_of[u as usize];
        let tuples: Vec<Vec<u32>> = cfg.live_tuple_slices().map(<[u32]>::to_vec).collect();
        let mut by_death: Vec<Vec<u32>> = vec![Vec::new(); peel.s];
        let mut parent: Vec<u32> = (0..n as u32).collect();
        let mut dminus = vec![0u32; n];
        for (id, t) in tuples.iter().enumerate() {
            let Some(d) = t.iter().filter_map(|&u| layer(u)).min() else {
                continue;
            };
            by_death[d as usize].push(id as u32);
            let mut first: Option<u32> = None;
            for &u in t {
                match layer(u) {
                    Some(l) if l == d => {
                        if let Some(f) = first {
                            let (a, b) = (find(&mut parent, f), find(&mut parent, u));
                            if a != b {
                                parent[a.max(b) as usize] = a.min(b);
                            }
                        } else {
                            first = Some(u);
                        }
                    }
                    Some(l) if l == d + 1 => dminus[u as usize] += 1,
                    _ => {}
                }
            }
        }
        let mut comp = vec![u32::MAX; n];
        let mut members: Vec<Vec<u32>> = Vec::new();
        let mut root_to_comp = vec![u32::MAX; n];
        for u in 0..n as u32 {
            if layer(u).is_none() {
                continue;
            }
            let root = find(&mut parent, u) as usize;
            if root_to_comp[root] == u32::MAX {
                root_to_comp[root] = members.len() as u32;
                members.push(Vec::new());
            }
            comp[u as usize] = root_to_comp[root];
            members[root_to_comp[root] as usize].push(u);
        }
        LayerIndex {
            peel,
            tuples,
            by_death,
            comp,
            members,
            dminus,
        }
    }

    pub fn peel(&self) -> &PeelResult {
        &self.peel
    }

    /// `d⁻(u)`; zero for bins of the first layer and for core bins.
    pub fn dminus(&self, u: u32) -> u32 {
        self.dminus[u as usize]
    }

    /// The layered sets `R_j(v)` for `j = round(v)` down to 0.
    pub fn reach(&self, v: u32) -> Result<LayeredReach> {
        let n = self.comp.len();
        if v as usize >= n {
            return Err(Error::Domain(format!("vertex {v} out of range")));
        }
        let round = self.peel.layer_of[v as usize].ok_or(Error::NotStripped(v))? as usize;
        let mut in_reach = vec![false; n];
        let mut comp_taken = vec![false; self.members.len()];
        let mut seeds = vec![v];
        let mut layers = vec![
            ReachLayer {
                j: 0,
                vertices: Vec::new(),
                dminus: 0
            };
            round + 1
        ];
        for j in (0..=round).rev() {
            let mut verts = Vec::new();
            for &u in &seeds {
                let c = self.comp[u as usize] as usize;
                if !comp_taken[c] {
                    comp_taken[c] = true;
                    verts.extend_from_slice(&self.members[c]);
                }
            }
            verts.sort_unstable();
            for &u in &verts {
                in_reach[u as usize] = true;
            }
            let dminus = verts.iter().map(|&u| self.dminus[u as usize] as u64).sum();
            layers[j] = ReachLayer {
                j,
                vertices: verts,
                dminus,
            };
            seeds.clear();
            if j == 0 {
                break;
            }
            for &id in &self.by_death[j - 1] {
                let t = &self.tuples[id as usize];
                if t.iter().any(|&u| in_reach[u as usize]) {
                    for &u in t {
                        if self.peel.layer_of[u as usize] == Some(j as u32 - 1) {
                            seeds.push(u);
                        }
                    }
                }
            }
        }
        Ok(LayeredReach {
            vertex: v,
            round,
            layers,
        })
    }
}

/// Layered reach of a single vertex.
pub fn layered_reach(cfg: &Configuration, k: u32, v: u32) -> Result<LayeredReach> {
    LayerIndex::new(cfg, k).reach(v)
}

/// Smallest constant `Z_j` for which
/// `D⁻(R_j) ≤ D⁻(R_{j+1}) + Z (|S_j|/n) Σ_{ℓ>j} D⁻(R_ℓ)` holds with equality
/// at round `j`, for `burn_in ≤ j < round(v)`. Rounds with a zero sum are
/// skipped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionFit {
    pub vertex: u32,
    pub per_round: Vec<(usize, f64)>,
    pub max_z: Option<f64>,
}

pub fn recursion_fit(index: &LayerIndex, reach: &LayeredReach, burn_in: usize) -> RecursionFit {
    let n = index.comp.len() as f64;
    let d: Vec<f64> = reach.layers.iter().map(|l| l.dminus as f64).collect();
    let mut per_round = Vec::new();
    let mut suffix = 0.0;
    for j in (burn_in..reach.round).rev() {
        suffix += d[j + 1];
        let denom = index.peel.layer_sizes[j] as f64 / n * suffix;
        if denom > 0.0 {
            per_round.push((j, (d[j] - d[j + 1]) / denom));
        }
    }
    per_round.reverse();
    let max_z = per_round.iter().map(|&(_, z)| z).reduce(f64::max);
    RecursionFit {
        vertex: reach.vertex,
        per_round,
        max_z,
    }
}

/// One vertex's depth summary as emitted by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthReport {
    pub vertex: u32,
    pub round: usize,
    pub reach_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerSummary>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerSummary {
    pub j: usize,
    pub size: usize,
    pub dminus: u64,
}

impl From<&LayeredReach> for Vec<LayerSummary> {
    fn from(r: &LayeredReach) -> Self {
        r.layers
            .iter()
            .map(|l| LayerSummary {
                j: l.j,
                size: l.vertices.len(),
                dminus: l.dminus,
            })
            .collect()
    }
}
