//! Bins-only auxiliary process.
//!
//! Starting from a truncated-multinomial allocation of `D` points into `N`
//! bins (each holding at least `k`), a uniformly random live point is removed
//! at every step. A bin that drops below `k` is deleted together with its
//! remaining points.

use rand::Rng;
use serde::Serialize;

use crate::apmodel::{sample_truncated_multinomial_with, seeded_rng};
use crate::error::{Error, Result};
use crate::thresholds;

/// Slack below `r(k-1)` under which `ζ̂` must stay for the drift bounds.
pub const ZETA_SLACK: f64 = 0.01;

/// Fenwick tree over bin degrees, supporting point sampling by rank.
struct Fenwick {
    tree: Vec<u64>,
    top: usize,
}

impl Fenwick {
    fn new(values: &[u32]) -> Self {
        let n = values.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &v) in values.iter().enumerate() {
            tree[i + 1] += v as u64;
            let j = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if j <= n {
                tree[j] += tree[i + 1];
            }
        }
        let top = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        Fenwick { tree, top }
    }

    fn sub(&mut self, i: usize, delta: u64) {
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] -= delta;
            j += j & j.wrapping_neg();
        }
    }

    /// Index of the bin holding the point of rank `target` (0-based).
    fn find(&self, mut target: u64) -> usize {
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinRow {
    pub t: usize,
    #[serde(rename = "Nhat")]
    pub n_hat: u64,
    #[serde(rename = "Dhat")]
    pub d_hat: u64,
    #[serde(rename = "zetahat")]
    pub zeta_hat: Option<f64>,
    /// Absent when `ζ̂ <= k`.
    #[serde(rename = "thetahat")]
    pub theta_hat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinTrace {
    pub k: u32,
    pub r: usize,
    pub sigma: f64,
    pub n_ref: u64,
    /// State before the first step.
    pub initial: BinRow,
    /// State after each step.
    pub steps: Vec<BinRow>,
    /// Largest `t` with `N̂_t >= σ n_ref`, if any.
    pub tau_1: Option<usize>,
    /// Steps at which `ζ̂ >= r(k-1) - 0.01`.
    pub flagged: Vec<usize>,
}

impl BinTrace {
    /// Initial state followed by every step.
    pub fn rows(&self) -> impl Iterator<Item = &BinRow> {
        std::iter::once(&self.initial).chain(&self.steps)
    }
}

fn row(t: usize, n_hat: u64, d_hat: u64, r: usize, k: u32) -> BinRow {
    let zeta_hat = (n_hat > 0).then(|| d_hat as f64 / n_hat as f64);
    let theta_hat = zeta_hat
        .filter(|&z| z > k as f64)
        .and_then(|z| thresholds::theta_of_zeta(z, r, k as usize).ok());
    BinRow {
        t,
        n_hat,
        d_hat,
        zeta_hat,
        theta_hat,
    }
}

/// Runs the process from `Multi(N, D, k)` until fewer than `σ n_ref` bins
/// remain. `r` is needed only for `θ̂`.
pub fn run_bin_process(
    bins: u64,
    points: u64,
    k: u32,
    sigma: f64,
    n_ref: u64,
    r: usize,
    seed: u64,
) -> Result<BinTrace> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if k < 1 || r < 2 {
        return Err(Error::Domain(format!("need k >= 1 and r >= 2, got k={k}, r={r}")));
    }
    let mut rng = seeded_rng(seed);
    let mut degrees = sample_truncated_multinomial_with(bins as usize, points, k, &mut rng)?;
    let mut tree = Fenwick::new(&degrees);
    let (mut n_hat, mut d_hat) = (bins, points);
    let stop = sigma * n_ref as f64;
    let limit = r as f64 * (k as f64 - 1.0) - ZETA_SLACK;
    let initial = row(0, n_hat, d_hat, r, k);
    let mut flagged = Vec::new();
    if initial.zeta_hat.is_some_and(|z| z >= limit) {
        flagged.push(0);
    }
    let mut tau_1 = (n_hat as f64 >= stop).then_some(0);
    let mut steps = Vec::new();
    let mut t = 0;
    while n_hat > 0 && n_hat as f64 >= stop {
        let bin = tree.find(rng.gen_range(0..d_hat));
        let d = &mut degrees[bin];
        *d -= 1;
        if *d < k {
            tree.sub(bin, *d as u64 + 1);
            *d = 0;
            d_hat -= k as u64;
            n_hat -= 1;
        } else {
            tree.sub(bin, 1);
            d_hat -= 1;
        }
        t += 1;
        let rec = row(t, n_hat, d_hat, r, k);
        if rec.zeta_hat.is_some_and(|z| z >= limit) {
            flagged.push(t);
        }
        if n_hat as f64 >= stop {
            tau_1 = Some(t);
        }
        steps.push(rec);
    }
    Ok(BinTrace {
        k,
        r,
        sigma,
        n_ref,
        initial,
        steps,
        tau_1,
        flagged,
    })
}
