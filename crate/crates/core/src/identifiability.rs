//! Sample-count and folding-count quantities: prime sample plans, level
//! crossings of trigonometric polynomials, and the non-identifiability
//! witness for an ambiguous `k = 0` sample.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::{exponential_sum, FriParams};

/// Initial points per period for refined crossing counts.
pub const CROSSING_GRID: usize = 100_000;
const CROSSING_GRID_MAX: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimePlan {
    pub l: usize,
    pub optimal_count: u64,
    /// Smallest prime `≥ 2L + 1`.
    pub required_count: u64,
    pub excess: u64,
    pub kprime: u64,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn prime_plan(l: usize) -> Result<PrimePlan> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let optimal = 2 * l as u64 + 1;
    let required = (optimal..).step_by(2).find(|&n| is_prime(n)).expect("primes are unbounded");
    Ok(PrimePlan {
        l,
        optimal_count: optimal,
        required_count: required,
        excess: required - optimal,
        kprime: (required - 1) / 2,
    })
}

/// Plans for every `L` in `lo..=hi`.
pub fn prime_table(lo: usize, hi: usize) -> Result<Vec<PrimePlan>> {
    (lo..=hi).map(prime_plan).collect()
}

/// Sign changes of `y − level` between consecutive grid points. Points
/// exactly at the level count as above it.
pub fn level_crossings(y_grid: &[f64], level: f64) -> usize {
    y_grid.windows(2).filter(|w| (w[0] >= level) != (w[1] >= level)).count()
}

/// Fold boundaries `(2m + 1)λ` that lie within `[−sup, sup]`.
pub fn fold_levels(sup: f64, lambda: f64) -> Vec<f64> {
    let top = ((sup / lambda - 1.0) / 2.0).floor() as i64;
    (-top - 1..=top).map(|m| (2 * m + 1) as f64 * lambda).filter(|v| v.abs() <= sup).collect()
}

/// Total crossings of all fold boundaries; each one is a jump of the
/// folded signal.
pub fn fold_crossings(y_grid: &[f64], lambda: f64) -> usize {
    let sup = y_grid.iter().map(|y| y.abs()).fold(0.0, f64::max);
    fold_levels(sup, lambda).iter().map(|&lv| level_crossings(y_grid, lv)).sum()
}

/// Crossings of `level` by `f` on `[t0, t0 + period]`, starting at
/// `CROSSING_GRID` points and doubling until two successive refinements
/// agree.
pub fn refined_level_crossings(f: impl Fn(f64) -> f64, t0: f64, period: f64, level: f64) -> usize {
    refined(|grid| level_crossings(grid, level), f, t0, period)
}

/// `fold_crossings` with the same grid refinement.
pub fn refined_fold_crossings(f: impl Fn(f64) -> f64, t0: f64, period: f64, lambda: f64) -> usize {
    refined(|grid| fold_crossings(grid, lambda), f, t0, period)
}

fn refined(count: impl Fn(&[f64]) -> usize, f: impl Fn(f64) -> f64, t0: f64, period: f64) -> usize {
    let sample = |n: usize| -> Vec<f64> { (0..=n).map(|i| f(t0 + period * i as f64 / n as f64)).collect() };
    let mut n = CROSSING_GRID;
    let mut history = vec![count(&sample(n))];
    while n < CROSSING_GRID_MAX {
        n *= 2;
        history.push(count(&sample(n)));
        let h = history.len();
        if h >= 3 && history[h - 1] == history[h - 2] && history[h - 2] == history[h - 3] {
            break;
        }
    }
    *history.last().expect("non-empty")
}

/// `⌊2‖y‖∞/λ⌋ · 2K`.
pub fn folding_bound(k_max: usize, y_sup: f64, lambda: f64) -> Result<u64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    if !(y_sup >= 0.0) {
        return Err(Error::InvalidParameter("sup must be non-negative".into()));
    }
    Ok((2.0 * y_sup / lambda).floor() as u64 * 2 * k_max as u64)
}

/// Two parameter sets whose exponential sums agree on every
/// `k ∈ {−L..L} \ {0}`: unit amplitudes at `Td·ℓ/(2L)` and negative unit
/// amplitudes at `Td·(ℓ + L)/(2L)`.
pub fn non_identifiable_pair(l: usize, td: f64) -> Result<(FriParams, FriParams)> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let step = td / (2 * l) as f64;
    let a = FriParams::new(td, (1..=l).map(|i| step * i as f64).collect(), vec![1.0; l], 1.0)?;
    let b = FriParams::new(td, (1..=l).map(|i| step * (i + l) as f64).collect(), vec![-1.0; l], 1.0)?;
    Ok((a, b))
}

/// `max_{0 < |k| ≤ L} |s_a[k] − s_b[k]|` and `s_a[0] − s_b[0]`.
pub fn witness_discrepancy(a: &FriParams, b: &FriParams, k_max: usize) -> (f64, f64) {
    let sa = exponential_sum(a, k_max);
    let sb = exponential_sum(b, k_max);
    let off = sa.iter().zip(&sb).enumerate().filter(|(i, _)| *i != k_max).map(|(_, (x, y))| (x - y).norm());
    (off.fold(0.0, f64::max), (sa[k_max] - sb[k_max]).re)
}
