//! The allocation-partition model.
//!
//! `rm` points are thrown independently and uniformly into `n` bins and then
//! split into `m` parts of size `r`. Bins are vertices and parts are
//! hyperedges ("tuples"); a bin may occur several times in one tuple, so a
//! configuration is a multi-hypergraph. Conditioned on being simple it is a
//! uniform r-uniform hypergraph with `m` edges.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::thresholds::{self, poisson_pmf};

/// Deterministic RNG used by every sampler in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A realization of the AP-model.
///
/// Tuples are stored flat, `r` bin ids per tuple. Points only ever die
/// together with their tuple, so one live flag per tuple also serves as the
/// live flag of each of its `r` points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    n: usize,
    r: usize,
    bins: Vec<u32>,
    live: Vec<bool>,
    degree: Vec<u32>,
    live_count: usize,
}

impl Configuration {
    pub fn new(n: usize, r: usize) -> Self {
        Configuration {
            n,
            r,
            bins: Vec::new(),
            live: Vec::new(),
            degree: vec![0; n],
            live_count: 0,
        }
    }

    pub fn from_tuples<I, T>(n: usize, r: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u32]>,
    {
        let mut cfg = Configuration::new(n, r);
        for t in tuples {
            cfg.push_tuple(t.as_ref())?;
        }
        Ok(cfg)
    }

    pub fn push_tuple(&mut self, tuple: &[u32]) -> Result<usize> {
        if tuple.len() != self.r {
            return Err(Error::Domain(format!(
                "tuple {tuple:?} does not have r={} slots",
                self.r
            )));
        }
        if let Some(&b) = tuple.iter().find(|&&b| b as usize >= self.n) {
            return Err(Error::Domain(format!("bin id {b} out of range for n={}", self.n)));
        }
        for &b in tuple {
            self.degree[b as usize] += 1;
        }
        self.bins.extend_from_slice(tuple);
        self.live.push(true);
        self.live_count += 1;
        Ok(self.live.len() - 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of tuples ever stored, live or dead.
    pub fn tuple_slots(&self) -> usize {
        self.live.len()
    }

    pub fn live_tuples(&self) -> usize {
        self.live_count
    }

    pub fn live_points(&self) -> usize {
        self.live_count * self.r
    }

    pub fn tuple(&self, i: usize) -> &[u32] {
        &self.bins[i * self.r..(i + 1) * self.r]
    }

    pub fn is_live(&self, i: usize) -> bool {
        self.live[i]
    }

    pub fn live_tuple_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.live.iter().enumerate().filter(|(_, &l)| l).map(|(i, _)| i)
    }

    pub fn live_tuple_slices(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.live_tuple_ids().map(move |i| self.tuple(i))
    }

    pub fn degree(&self, v: u32) -> u32 {
        self.degree[v as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    /// Kills tuple `i`; returns false if it was already dead.
    pub fn remove_tuple(&mut self, i: usize) -> bool {
        if !self.live[i] {
            return false;
        }
        self.live[i] = false;
        self.live_count -= 1;
        for j in i * self.r..(i + 1) * self.r {
            self.degree[self.bins[j] as usize] -= 1;
        }
        true
    }

    /// Bins with at least one live point.
    pub fn support(&self) -> Vec<u32> {
        (0..self.n as u32).filter(|&v| self.degree[v as usize] > 0).collect()
    }

    /// Same bins, only the live tuples, renumbered densely.
    pub fn compacted(&self) -> Configuration {
        let mut out = Configuration::new(self.n, self.r);
        for t in self.live_tuple_slices() {
            out.push_tuple(t).expect("tuples of a valid configuration");
        }
        out
    }

    /// Sorted list of live tuples, each canonicalized by sorting its bins.
    pub fn canonical_tuples(&self) -> Vec<Vec<u32>> {
        let mut v: Vec<Vec<u32>> = self
            .live_tuple_slices()
            .map(|t| {
                let mut t = t.to_vec();
                t.sort_unstable();
                t
            })
            .collect();
        v.sort();
        v
    }

    pub(crate) fn incidence(&self) -> Incidence {
        Incidence::build(self)
    }

    /// Writes the line format: header `n m r`, then one live tuple per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n, self.live_count, self.r)?;
        let mut line = String::new();
        for t in self.live_tuple_slices() {
            line.clear();
            for (j, b) in t.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&b.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Configuration> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = header?;
        let nums = parse_ints(&header, hl)?;
        let [n, m, arity] = nums[..] else {
            return Err(Error::Parse {
                line: hl,
                msg: "header must be `n m r`".into(),
            });
        };
        let mut cfg = Configuration::new(n as usize, arity as usize);
        for (ln, l) in lines {
            let l = l?;
            let t = parse_ints(&l, ln)?;
            cfg.push_tuple(&t).map_err(|e| Error::Parse {
                line: ln,
                msg: e.to_string(),
            })?;
        }
        if cfg.live_tuples() != m as usize {
            return Err(Error::Parse {
                line: hl,
                msg: format!("header promises {m} tuples, found {}", cfg.live_tuples()),
            });
        }
        Ok(cfg)
    }
}

fn parse_ints(s: &str, line: usize) -> Result<Vec<u32>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<u32>().map_err(|e| Error::Parse {
                line,
                msg: format!("{tok:?}: {e}"),
            })
        })
        .collect()
}

/// Bin → tuple incidence in CSR form. A tuple appears once per occurrence of
/// the bin in it, and each bin's list is ascending in tuple id.
#[derive(Clone, Debug)]
pub(crate) struct Incidence {
    offsets: Vec<usize>,
    entries: Vec<u32>,
}

impl Incidence {
    fn build(cfg: &Configuration) -> Self {
        let mut counts = vec![0usize; cfg.n + 1];
        for i in cfg.live_tuple_ids() {
            for &b in cfg.tuple(i) {
                counts[b as usize + 1] += 1;
            }
        }
        for v in 0..cfg.n {
            counts[v + 1] += counts[v];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut entries = vec![0u32; offsets[cfg.n]];
        for i in cfg.live_tuple_ids() {
            for &b in cfg.tuple(i) {
                entries[fill[b as usize]] = i as u32;
                fill[b as usize] += 1;
            }
        }
        Incidence { offsets, entries }
    }

    pub(crate) fn of(&self, v: u32) -> &[u32] {
        &self.entries[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }
}

/// Draws a configuration from `AP_r(n, m)`. Points are allocated uniformly
/// and the partition is taken as consecutive blocks of `r` points, which has
/// the same law as a uniform partition of uniformly allocated points.
pub fn sample_ap(n: usize, m: usize, r: usize, seed: u64) -> Result<Configuration> {
    let mut rng = seeded_rng(seed);
    sample_ap_with(n, m, r, &mut rng)
}

pub(crate) fn sample_ap_with<R: Rng>(n: usize, m: usize, r: usize, rng: &mut R) -> Result<Configuration> {
    if r < 2 {
        return Err(Error::Domain(format!("tuple arity r={r} must be at least 2")));
    }
    if n == 0 && m > 0 {
        return Err(Error::Domain("cannot allocate points into zero bins".into()));
    }
    if n > u32::MAX as usize {
        return Err(Error::Domain(format!("n={n} exceeds the 32-bit bin id range")));
    }
    let mut bins = Vec::with_capacity(m * r);
    let mut degree = vec![0u32; n];
    for _ in 0..m * r {
        let b = rng.gen_range(0..n as u32);
        degree[b as usize] += 1;
        bins.push(b);
    }
    Ok(Configuration {
        n,
        r,
        bins,
        live: vec![true; m],
        degree,
        live_count: m,
    })
}

/// No tuple repeats a bin and no two live tuples are equal as multisets.
pub fn is_simple(cfg: &Configuration) -> bool {
    let mut seen = HashSet::with_capacity(cfg.live_tuples());
    let mut buf = Vec::with_capacity(cfg.r());
    for t in cfg.live_tuple_slices() {
        buf.clear();
        buf.extend_from_slice(t);
        buf.sort_unstable();
        if buf.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        if !seen.insert(buf.clone()) {
            return false;
        }
    }
    true
}

pub const SIMPLE_REJECTION_CAP: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct SimpleSample {
    pub config: Configuration,
    pub rejections: u64,
}

/// Rejection-samples the AP-model until the configuration is simple.
pub fn sample_simple(n: usize, m: usize, r: usize, seed: u64) -> Result<SimpleSample> {
    let mut rng = seeded_rng(seed);
    for rejections in 0..=SIMPLE_REJECTION_CAP {
        let cfg = sample_ap_with(n, m, r, &mut rng)?;
        if is_simple(&cfg) {
            return Ok(SimpleSample {
                config: cfg,
                rejections,
            });
        }
    }
    Err(Error::Saturation {
        attempts: SIMPLE_REJECTION_CAP,
        what: format!("no simple configuration for n={n}, m={m}, r={r}"),
    })
}

/// Heavy/light degree bookkeeping of a configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeStats {
    pub k: u32,
    pub degrees: Vec<u32>,
    /// Number of heavy bins (degree ≥ k).
    pub heavy_count: u64,
    /// Total degree of heavy bins.
    pub heavy_degree: u64,
    /// Total degree of light bins.
    pub light_degree: u64,
    /// `heavy_degree / heavy_count`, absent without heavy bins.
    pub zeta: Option<f64>,
    /// Degree j → proportion of heavy bins with degree j.
    pub rho: BTreeMap<u32, f64>,
}

impl DegreeStats {
    pub fn from_degrees(degrees: Vec<u32>, k: u32) -> Self {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        let (mut nh, mut dh, mut l) = (0u64, 0u64, 0u64);
        for &d in &degrees {
            if d >= k {
                nh += 1;
                dh += d as u64;
                *counts.entry(d).or_default() += 1;
            } else {
                l += d as u64;
            }
        }
        let rho = counts.into_iter().map(|(j, c)| (j, c as f64 / nh as f64)).collect();
        let zeta = (nh > 0).then(|| dh as f64 / nh as f64);
        DegreeStats {
            k,
            degrees,
            heavy_count: nh,
            heavy_degree: dh,
            light_degree: l,
            zeta,
            rho,
        }
    }
}

pub fn degree_stats(cfg: &Configuration, k: u32) -> DegreeStats {
    DegreeStats::from_degrees(cfg.degrees().to_vec(), k)
}

/// Inversion table for a Poisson(λ) conditioned on being at least `k`.
#[derive(Clone, Debug)]
pub struct TruncatedPoisson {
    k: u32,
    cdf: Vec<f64>,
}

impl TruncatedPoisson {
    pub fn new(lambda: f64, k: u32) -> Self {
        let norm = thresholds::poisson_tail(k as u64, lambda).expect("lambda >= 0");
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut j = k as u64;
        loop {
            let p = poisson_pmf(j, lambda) / norm;
            acc += p;
            cdf.push(acc);
            j += 1;
            if (j as f64 > lambda && (p < 1e-18 || 1.0 - acc < 1e-17)) || cdf.len() > 10_000 {
                break;
            }
        }
        // Absorb rounding so every uniform maps inside the table.
        *cdf.last_mut().unwrap() = f64::INFINITY;
        TruncatedPoisson { k, cdf }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        self.k + self.cdf.partition_point(|&c| c <= u) as u32
    }

    pub fn pmf(&self, j: u32) -> f64 {
        if j < self.k {
            return 0.0;
        }
        let i = (j - self.k) as usize;
        match i {
            _ if i >= self.cdf.len() => 0.0,
            0 => self.cdf[0],
            _ if i == self.cdf.len() - 1 => 1.0 - self.cdf[i - 1],
            _ => self.cdf[i] - self.cdf[i - 1],
        }
    }
}

pub const MULTINOMIAL_RESTART_CAP: u64 = 10_000_000;

/// Bins whose values are drawn jointly, conditioned on their total.
const TAIL_BLOCK: usize = 256;

/// Exact law of sums of `j` iid truncated Poissons, `j = 0..=m`.
struct SumTables {
    k: u32,
    pmf: Vec<f64>,
    /// `dist[j][t - j k] = P(S_j = t)`.
    dist: Vec<Vec<f64>>,
}

impl SumTables {
    fn new(table: &TruncatedPoisson, m: usize) -> Self {
        let pmf: Vec<f64> = (0..table.cdf.len() as u32).map(|i| table.pmf(table.k + i)).collect();
        let mut dist = vec![vec![1.0]];
        for j in 1..=m {
            let prev = &dist[j - 1];
            let mut next = vec![0.0; prev.len() + pmf.len() - 1];
            for (a, &pa) in prev.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for (b, &pb) in pmf.iter().enumerate() {
                    next[a + b] += pa * pb;
                }
            }
            dist.push(next);
        }
        SumTables { k: table.k, pmf, dist }
    }

    fn prob(&self, j: usize, total: u64) -> f64 {
        let base = j as u64 * self.k as u64;
        total
            .checked_sub(base)
            .and_then(|i| self.dist[j].get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// Fills `out` with values conditioned on summing to `total`.
    fn sample_given_sum<R: Rng>(&self, out: &mut [u32], mut total: u64, rng: &mut R) {
        let m = out.len();
        for (i, slot) in out.iter_mut().enumerate() {
            let rest = m - i - 1;
            let weight = |b: usize| self.pmf[b] * self.prob(rest, total.wrapping_sub(self.k as u64 + b as u64));
            let sum: f64 = (0..self.pmf.len())
                .filter(|&b| total >= self.k as u64 + b as u64)
                .map(weight)
                .sum();
            let mut u = rng.gen::<f64>() * sum;
            let mut pick = 0;
            for b in 0..self.pmf.len() {
                if total < self.k as u64 + b as u64 {
                    break;
                }
                let w = weight(b);
                if w > 0.0 {
                    pick = b;
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            *slot = self.k + pick as u32;
            total -= self.k as u64 + pick as u64;
        }
    }
}

/// Draws from the truncated multinomial `Multi(N, D, k)`: `D` points in `N`
/// bins, uniformly, conditioned on every bin holding at least `k`.
///
/// Independent Poissons conditioned on `≥ k` and on their sum being `D`
/// have exactly this law for any rate; the rate solving the truncated-mean
/// equation maximizes the acceptance probability. All but the last block of
/// bins are drawn independently; the block total is then accepted with
/// probability proportional to its exact likelihood and the block is filled
/// conditionally on that total.
pub fn sample_truncated_multinomial(bins: usize, points: u64, k: u32, seed: u64) -> Result<Vec<u32>> {
    let mut rng = seeded_rng(seed);
    sample_truncated_multinomial_with(bins, points, k, &mut rng)
}

pub(crate) fn sample_truncated_multinomial_with<R: Rng>(
    bins: usize,
    points: u64,
    k: u32,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if bins == 0 {
        return Err(Error::Infeasible("Multi(N, D, k) needs N >= 1".into()));
    }
    let floor = bins as u64 * k as u64;
    if points < floor {
        return Err(Error::Infeasible(format!("D={points} < kN={floor}")));
    }
    if points == floor {
        return Ok(vec![k; bins]);
    }
    if bins == 1 {
        return Ok(vec![points as u32]);
    }
    let lambda = thresholds::lambda_of_mean(points as f64 / bins as f64, k as usize)?;
    let table = TruncatedPoisson::new(lambda, k);
    let m = bins.min(TAIL_BLOCK);
    let sums = SumTables::new(&table, m);
    let peak = sums.dist[m].iter().copied().fold(0.0, f64::max);
    let head = bins - m;
    let mut out = vec![0u32; bins];
    'attempt: for _ in 0..MULTINOMIAL_RESTART_CAP {
        let mut sum = 0u64;
        for slot in out[..head].iter_mut() {
            let x = table.sample(rng);
            sum += x as u64;
            if sum > points {
                continue 'attempt;
            }
            *slot = x;
        }
        let rest = points - sum;
        let p = sums.prob(m, rest);
        if p > 0.0 && rng.gen::<f64>() * peak < p {
            sums.sample_given_sum(&mut out[head..], rest, rng);
            return Ok(out);
        }
    }
    Err(Error::Saturation {
        attempts: MULTINOMIAL_RESTART_CAP,
        what: format!("Multi({bins}, {points}, {k})"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhoReport {
    /// Rate of the approximating truncated Poisson; absent in the degenerate
    /// all-degrees-equal-k case, which is compared against a point mass.
    pub lambda: Option<f64>,
    pub max_deviation: f64,
    pub worst_degree: u32,
}

/// Largest gap between the heavy-degree proportions and the truncated
/// Poisson law with the same mean.
pub fn rho_check(stats: &DegreeStats) -> Result<RhoReport> {
    let k = stats.k;
    let zeta = stats
        .zeta
        .ok_or_else(|| Error::Domain("rho_check needs at least one heavy bin".into()))?;
    let observed = |j: u32| stats.rho.get(&j).copied().unwrap_or(0.0);
    let max_seen = stats.rho.keys().next_back().copied().unwrap_or(k);
    if zeta <= k as f64 {
        let (mut worst, mut at) = (0.0f64, k);
        for j in k..=max_seen {
            let target = if j == k { 1.0 } else { 0.0 };
            let d = (observed(j) - target).abs();
            if d > worst {
                worst = d;
                at = j;
            }
        }
        return Ok(RhoReport {
            lambda: None,
            max_deviation: worst,
            worst_degree: at,
        });
    }
    let lambda = thresholds::lambda_of_mean(zeta, k as usize)?;
    let table = TruncatedPoisson::new(lambda, k);
    let top = max_seen.max(k + table.cdf.len() as u32);
    let (mut worst, mut at) = (0.0f64, k);
    for j in k..=top {
        let d = (observed(j) - table.pmf(j)).abs();
        if d > worst {
            worst = d;
            at = j;
        }
    }
    Ok(RhoReport {
        lambda: Some(lambda),
        max_deviation: worst,
        worst_degree: at,
    })
}

/// Degree condition certifying that every component is small:
/// `ρ(1) > K Σ_{j≥2} ((k-1) j (j-1) - j) ρ(j)`, strict.
///
/// `rho[j]` is the proportion of all bins with degree `j`.
pub fn small_component_certificate(rho: &[f64], k: u32, big_k: f64) -> bool {
    let rho1 = rho.get(1).copied().unwrap_or(0.0);
    let rhs: f64 = rho
        .iter()
        .enumerate()
        .skip(2)
        .map(|(j, &p)| {
            let j = j as f64;
            ((k as f64 - 1.0) * j * (j - 1.0) - j) * p
        })
        .sum();
    rho1 > big_k * rhs
}

/// Proportions of all bins by degree, indexed by degree.
pub fn degree_proportions(cfg: &Configuration) -> Vec<f64> {
    let max = cfg.degrees().iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &d in cfg.degrees() {
        counts[d as usize] += 1;
    }
    let n = cfg.n().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}
