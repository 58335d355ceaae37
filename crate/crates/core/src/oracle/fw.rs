//! Conditional-gradient maximization of total utility over the region.
//!
//! Iterates live in rate space only, as convex combinations of region
//! vertices returned by the linear oracle. Steps are pairwise: weight moves
//! from the worst active vertex to the new one. By concavity, every iterate
//! `r` with oracle vertex `s` certifies `U* ≤ U(r) + ∇U(r)·(s − r)`, so the
//! reported bound is valid even when the iteration cap is hit first.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Network;

use super::region::{AchievableRegion, ACTION_CAP};
use super::simplex::Simplex;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Stop once the duality gap falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Cap on joint pure actions per channel state.
    pub action_cap: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: MAX_ITERATIONS,
            action_cap: ACTION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBound {
    /// Certified upper bound on total utility: `utility + gap` at the best iterate.
    pub bound: f64,
    /// Total utility of the final feasible rates.
    pub utility: f64,
    /// Final duality gap.
    pub gap: f64,
    /// Feasible rates per commodity at the final iterate.
    pub rates: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Upper bound on the optimal time-average utility with default options
/// and the given gap tolerance.
pub fn compute_upper_bound(net: &Network, tolerance: f64) -> Result<UpperBound> {
    compute_upper_bound_with(
        net,
        &OracleOptions {
            tolerance,
            ..OracleOptions::default()
        },
    )
}

pub fn compute_upper_bound_with(net: &Network, opts: &OracleOptions) -> Result<UpperBound> {
    if !(opts.tolerance.is_finite() && opts.tolerance > 0.0) {
        return Err(Error::argument("tolerance", format!("must be positive, got {}", opts.tolerance)));
    }
    let region = AchievableRegion::build(net, opts.action_cap)?;
    let mut lp = region.simplex()?;
    let utilities: Vec<_> = net.commodities().iter().map(|c| c.utility).collect();
    let k = utilities.len();
    let total = |r: &[f64]| -> f64 { utilities.iter().zip(r).map(|(u, &x)| u.value(x)).sum() };
    let grad = |r: &[f64], g: &mut [f64]| {
        for ((gi, u), &x) in g.iter_mut().zip(&utilities).zip(r) {
            *gi = u.derivative(x);
        }
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let mut g = vec![0.0; k];
    let mut r = vec![0.0; k];
    grad(&r, &mut g);
    let first = linear_oracle(&mut lp, &g, k)?;
    let mut active: Vec<(Vec<f64>, f64)> = vec![(first.clone(), 1.0)];
    r.copy_from_slice(&first);

    let mut best_bound = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut dir = vec![0.0; k];
    while iterations < opts.max_iterations {
        iterations += 1;
        grad(&r, &mut g);
        let s = linear_oracle(&mut lp, &g, k)?;
        gap = (dot(&g, &s) - dot(&g, &r)).max(0.0);
        best_bound = best_bound.min(total(&r) + gap);
        if gap < opts.tolerance {
            break;
        }
        let (away, _) = active
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, dot(&g, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("active set is never empty");
        let max_step = active[away].1;
        for ((d, &si), &ai) in dir.iter_mut().zip(&s).zip(&active[away].0) {
            *d = si - ai;
        }
        let t = line_search(&utilities, &r, &dir, max_step);
        if t <= 0.0 {
            break;
        }
        for (x, &d) in r.iter_mut().zip(&dir) {
            *x += t * d;
        }
        active[away].1 -= t;
        match active.iter().position(|(v, _)| same_point(v, &s)) {
            Some(i) => active[i].1 += t,
            None => active.push((s, t)),
        }
        active.retain(|(_, w)| *w > 1e-15);
    }
    Ok(UpperBound {
        bound: best_bound.min(total(&r) + gap),
        utility: total(&r),
        gap,
        rates: r,
        iterations,
        converged: gap < opts.tolerance,
    })
}

/// Rate part of a region vertex maximizing `g·r`.
fn linear_oracle(lp: &mut Simplex, g: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut c = vec![0.0; lp.cols()];
    c[..k].copy_from_slice(g);
    let sol = lp.maximize(&c)?;
    Ok(sol.x[..k].to_vec())
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// Maximizes the concave `t ↦ U(r + t d)` on `[0, t_max]` by bisection on
/// the derivative.
fn line_search(utilities: &[crate::model::Utility], r: &[f64], d: &[f64], t_max: f64) -> f64 {
    let slope = |t: f64| -> f64 {
        utilities
            .iter()
            .zip(r)
            .zip(d)
            .map(|((u, &x), &di)| if di == 0.0 { 0.0 } else { u.derivative((x + t * di).max(0.0)) * di })
            .sum()
    };
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    if slope(t_max) >= 0.0 {
        return t_max;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
