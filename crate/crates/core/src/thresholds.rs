//! Analytic side of the stripping process.
//!
//! Everything here is a pure function of `(r, k)` and a few reals:
//! Poisson tails `f_t(λ) = P(Poisson(λ) ≥ t)`, the k-core threshold
//! `c_{r,k} = inf_μ μ / (r f_{k-1}(μ)^{r-1})`, its minimizer `μ_{r,k}`, the
//! critical core fractions `α`, `β`, the critical mean heavy degree `ζ`, and
//! the functions `ψ` and `θ` that govern the one-step drift of SLOW-STRIP.

use serde::Serialize;

use crate::error::{Error, Result};

/// Bisection stopping width for all one-dimensional roots.
pub const ROOT_TOL: f64 = 1e-10;

/// Number of grid points used to bracket the threshold minimizer.
pub const GRID_POINTS: usize = 1024;

const MAX_SERIES_TERMS: usize = 100_000;

/// `ln(t!)` by direct summation; `t` stays small in every caller.
fn ln_factorial(t: u64) -> f64 {
    (2..=t).map(|i| (i as f64).ln()).sum()
}

/// `P(Poisson(λ) = j)`.
pub fn poisson_pmf(j: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    (-lambda + j as f64 * lambda.ln() - ln_factorial(j)).exp()
}

/// Tail with a signed index: `f_t = 1` for every `t ≤ 0`.
fn tail(t: i64, lambda: f64) -> f64 {
    if t <= 0 {
        return 1.0;
    }
    let t = t as u64;
    if lambda == 0.0 {
        return 0.0;
    }
    if (t as f64) > lambda {
        // Upper tail is small here; sum it directly.
        let mut term = poisson_pmf(t, lambda);
        let mut sum = 0.0;
        let mut i = t;
        for _ in 0..MAX_SERIES_TERMS {
            sum += term;
            i += 1;
            term *= lambda / i as f64;
            if term <= sum * 1e-17 {
                break;
            }
        }
        sum.min(1.0)
    } else {
        // Lower part is small; take the complement.
        let mut term = (-lambda).exp();
        let mut lower = 0.0;
        for i in 0..t {
            lower += term;
            term *= lambda / (i + 1) as f64;
        }
        if lower == 0.0 && lambda > 700.0 {
            // e^{-λ} underflowed; redo the lower sum in log space.
            lower = (0..t).map(|i| poisson_pmf(i, lambda)).sum();
        }
        (1.0 - lower).clamp(0.0, 1.0)
    }
}

/// `f_t(λ) = P(Poisson(λ) ≥ t)`.
pub fn poisson_tail(t: u64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("poisson_tail needs lambda >= 0, got {lambda}")));
    }
    Ok(tail(t as i64, lambda))
}

fn check_rk(r: usize, k: usize) -> Result<()> {
    if r < 2 || k < 2 || (r, k) == (2, 2) {
        return Err(Error::UnsupportedParameters { r, k });
    }
    Ok(())
}

/// The threshold objective `μ / (r f_{k-1}(μ)^{r-1})`; equals `h(μ)/r`.
pub fn threshold_objective(mu: f64, r: usize, k: usize) -> f64 {
    let f = tail(k as i64 - 1, mu);
    mu / (r as f64 * f.powi(r as i32 - 1))
}

/// Derivative sign of the log-objective: `f_{k-1}(μ) - (r-1) μ P(Poisson(μ)=k-2)`.
/// Negative left of the minimizer, positive right of it.
fn stationarity(mu: f64, r: usize, k: usize) -> f64 {
    tail(k as i64 - 1, mu) - (r as f64 - 1.0) * mu * poisson_pmf(k as u64 - 2, mu)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Bisection for an increasing-through-zero `g` on `[lo, hi]`.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn grid(r: usize, k: usize) -> impl Iterator<Item = f64> {
    let upper = 4.0 * (r * k) as f64;
    (1..=GRID_POINTS).map(move |i| upper * i as f64 / GRID_POINTS as f64)
}

/// Number of sign changes of the discrete derivative of the threshold
/// objective over the bracketing grid on `(0, 4rk]`. Unimodal objectives
/// give exactly one.
pub fn grid_sign_changes(r: usize, k: usize) -> usize {
    let values: Vec<f64> = grid(r, k).map(|mu| threshold_objective(mu, r, k)).collect();
    let signs: Vec<bool> = values.windows(2).map(|w| w[1] > w[0]).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Returns `(c_{r,k}, μ_{r,k})`.
///
/// A grid scan brackets the minimum, golden-section search narrows it, and a
/// final bisection on the stationarity condition pins the argmin: near a
/// quadratic minimum function values alone cannot resolve μ below ~1e-8.
pub fn core_threshold(r: usize, k: usize) -> Result<(f64, f64)> {
    check_rk(r, k)?;
    let pts: Vec<f64> = grid(r, k).collect();
    let (best, _) = pts
        .iter()
        .enumerate()
        .map(|(i, &mu)| (i, threshold_objective(mu, r, k)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let lo = if best == 0 { 0.0 } else { pts[best - 1] };
    let hi = pts[(best + 1).min(pts.len() - 1)];
    let golden = golden_section(|mu| threshold_objective(mu, r, k), lo, hi, 1e-7);

    // Widen around the golden-section estimate until the stationarity
    // condition changes sign, then bisect.
    let mut width = 1e-6;
    let (mut a, mut b) = ((golden - width).max(lo), (golden + width).min(hi));
    while !(stationarity(a, r, k) < 0.0 && stationarity(b, r, k) >= 0.0) && width < hi - lo {
        width *= 4.0;
        a = (golden - width).max(lo.max(f64::MIN_POSITIVE));
        b = (golden + width).min(hi);
    }
    let mu = bisect(|m| stationarity(m, r, k), a, b, 1e-13);
    Ok((threshold_objective(mu, r, k), mu))
}

/// μ(c): the larger solution of `c = μ / (r f_{k-1}(μ)^{r-1})`.
pub fn mu_of_c(c: f64, r: usize, k: usize) -> Result<f64> {
    let (c_rk, mu_rk) = core_threshold(r, k)?;
    // The objective is flat at its minimum, so values within rounding of
    // the threshold map to the minimizer itself.
    if (c - c_rk).abs() <= 1e-12 * c_rk {
        return Ok(mu_rk);
    }
    if c < c_rk {
        return Err(Error::NoSolution { c, c_rk });
    }
    let g = |mu: f64| threshold_objective(mu, r, k) - c;
    let mut hi = mu_rk.max(1.0) * 2.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Domain(format!("no bracket for mu(c) at c={c}")));
        }
    }
    Ok(bisect(g, mu_rk, hi, ROOT_TOL * 1e-2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdConstants {
    pub r: usize,
    pub k: usize,
    pub c_rk: f64,
    pub mu_rk: f64,
    /// Core vertex fraction at criticality, `f_k(μ_{r,k})`.
    pub alpha: f64,
    /// Core tuple fraction at criticality, `μ f_{k-1}(μ) / r`.
    pub beta: f64,
    /// Critical mean heavy degree `rβ/α`.
    pub zeta: f64,
    /// `ψ(ζ)`, the chance that a heavy point sits in a degree-k bin.
    pub p_bar: f64,
}

pub fn core_constants(r: usize, k: usize) -> Result<ThresholdConstants> {
    let (c_rk, mu_rk) = core_threshold(r, k)?;
    let alpha = tail(k as i64, mu_rk);
    let beta = mu_rk * tail(k as i64 - 1, mu_rk) / r as f64;
    let zeta = r as f64 * beta / alpha;
    let p_bar = psi(zeta, k)?;
    Ok(ThresholdConstants {
        r,
        k,
        c_rk,
        mu_rk,
        alpha,
        beta,
        zeta,
        p_bar,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupercriticalProfile {
    pub c: f64,
    pub mu_c: f64,
    pub alpha_c: f64,
    pub beta_c: f64,
}

/// `μ(c)`, `α(c) = f_k(μ(c))` and `β(c) = μ(c) f_{k-1}(μ(c)) / r`.
pub fn supercritical_profile(c: f64, r: usize, k: usize) -> Result<SupercriticalProfile> {
    let mu_c = mu_of_c(c, r, k)?;
    Ok(SupercriticalProfile {
        c,
        mu_c,
        alpha_c: tail(k as i64, mu_c),
        beta_c: mu_c * tail(k as i64 - 1, mu_c) / r as f64,
    })
}

/// Mean of a Poisson(λ) conditioned to be at least k.
pub fn truncated_mean(lambda: f64, k: usize) -> f64 {
    if lambda == 0.0 {
        return k as f64;
    }
    lambda * tail(k as i64 - 1, lambda) / tail(k as i64, lambda)
}

/// The unique `λ > 0` with `λ f_{k-1}(λ) / f_k(λ) = x`.
pub fn lambda_of_mean(x: f64, k: usize) -> Result<f64> {
    if !(x > k as f64) || !x.is_finite() {
        return Err(Error::Domain(format!("truncated mean {x} must exceed k={k}")));
    }
    let g = |lam: f64| truncated_mean(lam, k) - x;
    // The truncated mean exceeds λ, so λ = x over-brackets the root.
    Ok(illinois(g, 0.0, x, ROOT_TOL * 1e-2))
}

/// Regula falsi with the Illinois modification, for an increasing `g` that
/// changes sign on `[a, b]`.
fn illinois(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let (mut fa, mut fb) = (g(a), g(b));
    let mut last = 0i8;
    let mut prev = f64::NAN;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = g(c);
        if fc == 0.0 || b - a < tol || (c - prev).abs() < tol {
            return c;
        }
        prev = c;
        if fc > 0.0 {
            b = c;
            fb = fc;
            if last == -1 {
                fa *= 0.5;
            }
            last = -1;
        } else {
            a = c;
            fa = fc;
            if last == 1 {
                fb *= 0.5;
            }
            last = 1;
        }
    }
    bisect(g, a, b, tol)
}

/// `ψ(x) = e^{-λ} λ^{k-1} / (f_{k-1}(λ) (k-1)!)` with `λ = λ(x)`.
pub fn psi(x: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("psi needs k >= 1".into()));
    }
    let lam = lambda_of_mean(x, k)?;
    Ok(poisson_pmf(k as u64 - 1, lam) / tail(k as i64 - 1, lam))
}

/// `θ = -1 + (r-1)(k-1) ψ(z)`.
pub fn theta_of_zeta(z: f64, r: usize, k: usize) -> Result<f64> {
    Ok(-1.0 + ((r - 1) * (k - 1)) as f64 * psi(z, k)?)
}
