//! Coupling a configuration `H` inside a denser `H'`.
//!
//! `H'` is drawn at density `c'` and `H` is obtained by deleting a uniform
//! random set of its tuples. The parallel process on `H'` is then mirrored
//! onto `H` up to round `τ'(B)`, the first round at or after `B` whose light
//! set has at most `n ξ'` bins.

use std::collections::HashMap;

use rand::seq::index::sample;
use serde::Serialize;

use crate::apmodel::{sample_ap_with, seeded_rng, Configuration};
use crate::error::{Error, Result};
use crate::peeling::{parallel_strip, strip_rounds};
use crate::thresholds;

/// Default burn-in rounds before `τ'` may stop.
pub const DEFAULT_B: usize = 10;

#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub h_prime: Configuration,
    /// Same tuple slots as `h_prime`, with the deleted ones dead.
    pub h: Configuration,
    /// Number of deleted tuples, `round((c' - c) n)`.
    pub deletions: usize,
}

/// Samples `H' ~ AP(n, c'n)` and deletes a uniform subset of
/// `round((c' - c) n)` tuples to get `H`.
pub fn couple_pair(n: usize, c: f64, c_prime: f64, r: usize, seed: u64) -> Result<CoupledPair> {
    if !(c.is_finite() && c_prime.is_finite()) || c < 0.0 {
        return Err(Error::Domain(format!(
            "densities must be finite and nonnegative: c={c}, c'={c_prime}"
        )));
    }
    if c_prime < c {
        return Err(Error::Ordering(format!("need c' >= c, got c={c}, c'={c_prime}")));
    }
    let mut rng = seeded_rng(seed);
    let m_prime = (c_prime * n as f64).round() as usize;
    let deletions = (((c_prime - c) * n as f64).round() as usize).min(m_prime);
    let h_prime = sample_ap_with(n, m_prime, r, &mut rng)?;
    let mut h = h_prime.clone();
    for i in sample(&mut rng, m_prime, deletions).into_iter() {
        h.remove_tuple(i);
    }
    Ok(CoupledPair { h_prime, h, deletions })
}

/// Marks which live tuples of `h_prime` are absent from `h`, matching tuples
/// as multisets of bins. Fails if `h` is not contained in `h_prime`.
fn deleted_mask(h_prime: &Configuration, h: &Configuration) -> Result<Vec<bool>> {
    if h.n() != h_prime.n() || h.r() != h_prime.r() {
        return Err(Error::Containment);
    }
    let key = |t: &[u32]| {
        let mut v = t.to_vec();
        v.sort_unstable();
        v
    };
    let mut count: HashMap<Vec<u32>, usize> = HashMap::new();
    for t in h.live_tuple_slices() {
        *count.entry(key(t)).or_default() += 1;
    }
    let mut deleted = vec![false; h_prime.tuple_slots()];
    for id in h_prime.live_tuple_ids() {
        match count.get_mut(&key(h_prime.tuple(id))) {
            Some(c) if *c > 0 => *c -= 1,
            _ => deleted[id] = true,
        }
    }
    if count.values().any(|&c| c > 0) {
        return Err(Error::Containment);
    }
    Ok(deleted)
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub n: usize,
    pub r: usize,
    pub k: u32,
    #[serde(rename = "B")]
    pub b: usize,
    pub c: f64,
    pub c_prime: f64,
    pub xi: f64,
    pub xi_prime: f64,
    pub deletions: usize,
    pub tau_prime_b: usize,
    /// Rounds of the parallel process on `H'`.
    pub s_prime: usize,
    /// `H'` ran out of light bins before round `B`.
    pub degenerate: bool,
    /// `τ'` reached the last round of `H'` without the light set dropping to `n ξ'`.
    pub terminal: bool,
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "L0")]
    pub l0: u64,
    pub zeta0: Option<f64>,
    /// `s(H)` from a direct parallel run.
    pub s_h: usize,
    /// Rounds of the parallel process on `G0`.
    pub s_g0: usize,
    /// Rounds on `G0` after its light bins are removed.
    pub s_after_light: usize,
    /// `s(H) <= τ' + 1 + s_after_light`.
    pub bound_holds: bool,
    /// Every mirrored removal was of a light bin.
    pub mirror_legal: bool,
    /// The core of `H` is inside the core of `H'`.
    pub core_monotone: bool,
    /// `c' - c <= 0.1 sqrt(ξ')`.
    pub surrogate_ok: bool,
    #[serde(skip)]
    pub g0: Configuration,
    /// Bins of `H'_{τ'}`.
    #[serde(skip)]
    pub present: Vec<bool>,
}

/// Mirrors the parallel process on `h_prime` onto `h` until `τ'(B)`.
///
/// `xi_prime` is `c' - c_{r,k}`; when it is not positive, `τ'` only waits for
/// `H'` to strip out.
pub fn slowed_strip(
    h_prime: &Configuration,
    h: &Configuration,
    k: u32,
    b: usize,
    xi_prime: f64,
) -> Result<CouplingReport> {
    if b < 1 {
        return Err(Error::Domain("B must be at least 1".into()));
    }
    let deleted = deleted_mask(h_prime, h)?;
    let n = h_prime.n();
    let r = h_prime.r();
    let outer = parallel_strip(h_prime, k);
    let s_prime = outer.s;
    let threshold = n as f64 * xi_prime;
    let size_at = |t: usize| outer.layer_sizes.get(t).copied().unwrap_or(0);
    let tau = if xi_prime > 0.0 {
        (b..).find(|&t| size_at(t) as f64 <= threshold).expect("layers end")
    } else {
        b.max(s_prime)
    };
    let degenerate = s_prime < b;
    let terminal = tau >= s_prime;
    let present: Vec<bool> = outer
        .layer_of
        .iter()
        .map(|l| l.is_none_or(|i| i as usize >= tau))
        .collect();

    // Mirror round by round, checking each removed bin is light in the mirror.
    let mut mirror = h.clone();
    let inc = h.incidence();
    let mut mirror_legal = true;
    let mut by_round: Vec<Vec<u32>> = vec![Vec::new(); tau.min(s_prime)];
    for (v, l) in outer.layer_of.iter().enumerate() {
        if let Some(i) = l {
            if (*i as usize) < tau {
                by_round[*i as usize].push(v as u32);
            }
        }
    }
    for round in &by_round {
        mirror_legal &= round.iter().all(|&v| mirror.degree(v) < k);
        for &v in round {
            for &t in inc.of(v) {
                mirror.remove_tuple(t as usize);
            }
        }
    }
    let g0 = mirror;

    let x = h_prime
        .live_tuple_ids()
        .filter(|&id| deleted[id] && h_prime.tuple(id).iter().all(|&u| present[u as usize]))
        .count();
    let (mut l0, mut heavy_n, mut heavy_d) = (0u64, 0u64, 0u64);
    let mut after_light = present.clone();
    for v in 0..n as u32 {
        if !present[v as usize] {
            continue;
        }
        let d = g0.degree(v) as u64;
        if d < k as u64 {
            l0 += d;
            after_light[v as usize] = false;
        } else {
            heavy_n += 1;
            heavy_d += d;
        }
    }
    let zeta0 = (heavy_n > 0).then(|| heavy_d as f64 / heavy_n as f64);
    let s_g0 = strip_rounds(&g0, k, Some(&present)).s;
    let mut h2 = g0.clone();
    for id in g0.live_tuple_ids() {
        if g0.tuple(id).iter().any(|&u| !after_light[u as usize]) {
            h2.remove_tuple(id);
        }
    }
    let s_after_light = strip_rounds(&h2, k, Some(&after_light)).s;
    let inner = parallel_strip(h, k);
    let s_h = inner.s;
    let core_monotone = inner
        .layer_of
        .iter()
        .zip(&outer.layer_of)
        .all(|(a, b)| !(a.is_none() && b.is_some()));

    let c = h.live_tuples() as f64 / n.max(1) as f64;
    let c_prime = h_prime.live_tuples() as f64 / n.max(1) as f64;
    let xi = thresholds::core_threshold(r, k as usize).map_or(f64::NAN, |(c_rk, _)| (c - c_rk).abs());
    Ok(CouplingReport {
        n,
        r,
        k,
        b,
        c,
        c_prime,
        xi,
        xi_prime,
        deletions: deleted.iter().filter(|&&d| d).count(),
        tau_prime_b: tau,
        s_prime,
        degenerate,
        terminal,
        x,
        l0,
        zeta0,
        s_h,
        s_g0,
        s_after_light,
        bound_holds: s_h <= tau + 1 + s_after_light,
        mirror_legal,
        core_monotone,
        surrogate_ok: xi_prime > 0.0 && c_prime - c <= 0.1 * xi_prime.sqrt(),
        g0,
        present,
    })
}
