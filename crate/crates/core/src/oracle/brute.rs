//! Grid enumeration of the achievable-rate problem for tiny instances.
//!
//! Independent of the linear-programming path: mixtures of pure actions are
//! enumerated at the grid resolution per local state, rates are scanned on the
//! grid, and routing is checked by enumerating path splits. Every candidate it
//! accepts is feasible, so the result is a lower bound on the optimum that
//! tightens as the grid is refined.

use crate::error::{Error, Result};
use crate::model::Network;

pub const MAX_COMMODITIES: usize = 2;
pub const MAX_LINKS: usize = 4;
/// Cap on enumerated (mixture × rate) candidates.
const WORK_CAP: usize = 200_000_000;
const TOL: f64 = 1e-9;

/// One operating point: average service per link and average spend per node.
#[derive(Debug, Clone)]
struct Operating {
    service: Vec<f64>,
    spend: Vec<f64>,
}

/// Best utility over grid-feasible rates. Fails on instances with more than
/// two commodities or four links, or when the grid is too fine for the cap.
pub fn brute_force_bound(net: &Network, grid_step: f64) -> Result<f64> {
    if !(grid_step.is_finite() && grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::argument("grid_step", format!("must be in (0, 1], got {grid_step}")));
    }
    let commodities = net.commodities();
    if commodities.len() > MAX_COMMODITIES {
        return Err(Error::TooLarge {
            what: "commodities".into(),
            size: commodities.len(),
            cap: MAX_COMMODITIES,
        });
    }
    if net.link_count() > MAX_LINKS {
        return Err(Error::TooLarge {
            what: "links".into(),
            size: net.link_count(),
            cap: MAX_LINKS,
        });
    }
    let ticks = (1.0 / grid_step).round() as usize;
    let points = operating_points(net, ticks)?;

    // Zero-utility commodities only compete for capacity; fix them at zero.
    let live: Vec<usize> = (0..commodities.len())
        .filter(|&i| !commodities[i].utility.is_zero())
        .collect();
    let paths: Vec<Vec<Vec<usize>>> = live
        .iter()
        .map(|&i| {
            let c = &commodities[i];
            net.graph().simple_paths(c.source, net.destinations()[c.class])
        })
        .collect();
    let r_ticks = (net.r_max() / grid_step).floor() as usize;
    let work = points.len().saturating_mul(r_ticks + 1);
    if work > WORK_CAP {
        return Err(Error::TooLarge {
            what: "grid candidates".into(),
            size: work,
            cap: WORK_CAP,
        });
    }
    let harvest = net.mean_harvest();
    let value = |idx: &[usize]| -> f64 {
        live.iter()
            .zip(idx)
            .map(|(&i, &t)| commodities[i].utility.value(t as f64 * grid_step))
            .sum()
    };

    let mut best = 0.0f64;
    for op in &points {
        if op.spend.iter().zip(&harvest).any(|(s, h)| *s > h + TOL) {
            continue;
        }
        let feasible = |idx: &[usize]| -> bool {
            let rates: Vec<f64> = idx.iter().map(|&t| t as f64 * grid_step).collect();
            routable(&rates, &paths, &op.service, ticks)
        };
        match live.len() {
            0 => {}
            1 => {
                let top = max_feasible(r_ticks, |t| feasible(&[t]));
                best = best.max(value(&[top]));
            }
            _ => {
                for t0 in 0..=r_ticks {
                    if !feasible(&[t0, 0]) {
                        break;
                    }
                    let t1 = max_feasible(r_ticks, |t| feasible(&[t0, t]));
                    best = best.max(value(&[t0, t1]));
                }
            }
        }
    }
    Ok(best)
}

/// Largest `t ≤ top` with `ok(t)`, given that `ok` is downward closed and
/// `ok(0)` holds.
fn max_feasible(top: usize, ok: impl Fn(usize) -> bool) -> usize {
    if ok(top) {
        return top;
    }
    let (mut lo, mut hi) = (0, top);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Whether the rates can be split over their paths, in grid fractions,
/// without exceeding any link's service.
fn routable(rates: &[f64], paths: &[Vec<Vec<usize>>], service: &[f64], ticks: usize) -> bool {
    fn go(i: usize, rates: &[f64], paths: &[Vec<Vec<usize>>], load: &mut [f64], service: &[f64], ticks: usize) -> bool {
        if i == rates.len() {
            return load.iter().zip(service).all(|(l, s)| *l <= s + TOL);
        }
        if rates[i] == 0.0 {
            return go(i + 1, rates, paths, load, service, ticks);
        }
        let ps = &paths[i];
        if ps.is_empty() {
            return false;
        }
        let mut split = vec![0usize; ps.len()];
        let mut found = false;
        compositions(ticks, ps.len(), &mut split, 0, &mut |parts| {
            if found {
                return;
            }
            for (p, &n) in ps.iter().zip(parts) {
                for &l in p {
                    load[l] += rates[i] * n as f64 / ticks as f64;
                }
            }
            found = go(i + 1, rates, paths, load, service, ticks);
            for (p, &n) in ps.iter().zip(parts) {
                for &l in p {
                    load[l] -= rates[i] * n as f64 / ticks as f64;
                }
            }
        });
        found
    }
    let mut load = vec![0.0; service.len()];
    go(0, rates, paths, &mut load, service, ticks)
}

/// Calls `f` with every way to write `total` as an ordered sum of
/// `parts.len()` nonnegative integers.
fn compositions(total: usize, len: usize, parts: &mut [usize], at: usize, f: &mut dyn FnMut(&[usize])) {
    if at + 1 == len {
        parts[at] = total;
        f(parts);
        return;
    }
    for n in 0..=total {
        parts[at] = n;
        compositions(total - n, len, parts, at + 1, f);
    }
}

/// Every grid mixture of pure actions, summed over states and blocks.
fn operating_points(net: &Network, ticks: usize) -> Result<Vec<Operating>> {
    let links = net.link_count();
    let nodes = net.node_count();
    let actions = net.actions();
    let all_links: Vec<usize> = (0..links).collect();

    // Per block and local state: the pure actions as (service, spend) vectors.
    let mut blocks: Vec<Vec<(f64, Vec<Operating>)>> = Vec::new();
    let mut power = vec![0.0; links];
    let mut rates = vec![0.0; links];
    if net.rate().is_node_separable() {
        for n in 0..nodes {
            let out = actions.node_links(n);
            if out.is_empty() {
                continue;
            }
            let mut states = Vec::new();
            for (labels, prob) in net.channel_process().local_distribution(out) {
                let mut channel = vec![0usize; links];
                for (&l, &s) in out.iter().zip(&labels) {
                    channel[l] = s;
                }
                let pure = actions
                    .node_actions(n)
                    .iter()
                    .map(|a| {
                        power.fill(0.0);
                        for (&l, &p) in out.iter().zip(a) {
                            power[l] = p;
                        }
                        net.rate().rates(&channel, &power, &mut rates);
                        let mut spend = vec![0.0; nodes];
                        spend[n] = a.iter().sum();
                        Operating {
                            service: rates.clone(),
                            spend,
                        }
                    })
                    .collect();
                states.push((prob, pure));
            }
            blocks.push(states);
        }
    } else {
        let mut states = Vec::new();
        for (channel, prob) in net.channel_process().local_distribution(&all_links) {
            let mut pure = Vec::new();
            actions.for_each_joint(|choice| {
                actions.assemble(choice, &mut power);
                net.rate().rates(&channel, &power, &mut rates);
                let mut spend = vec![0.0; nodes];
                actions.node_spend(&power, &mut spend);
                pure.push(Operating {
                    service: rates.clone(),
                    spend,
                });
            });
            states.push((prob, pure));
        }
        blocks.push(states);
    }

    let mut combined = vec![Operating {
        service: vec![0.0; links],
        spend: vec![0.0; nodes],
    }];
    for states in &blocks {
        for (prob, pure) in states {
            let mixes = mixtures(pure, ticks);
            let size = combined.len().saturating_mul(mixes.len());
            if size > WORK_CAP {
                return Err(Error::TooLarge {
                    what: "grid mixtures".into(),
                    size,
                    cap: WORK_CAP,
                });
            }
            let mut next = Vec::with_capacity(size);
            for base in &combined {
                for m in &mixes {
                    next.push(Operating {
                        service: base.service.iter().zip(&m.service).map(|(a, b)| a + prob * b).collect(),
                        spend: base.spend.iter().zip(&m.spend).map(|(a, b)| a + prob * b).collect(),
                    });
                }
            }
            combined = next;
        }
    }
    Ok(combined)
}

/// Convex combinations of `pure` with weights in multiples of `1 / ticks`.
fn mixtures(pure: &[Operating], ticks: usize) -> Vec<Operating> {
    let mut out = Vec::new();
    let mut parts = vec![0usize; pure.len()];
    let links = pure[0].service.len();
    let nodes = pure[0].spend.len();
    compositions(ticks, pure.len(), &mut parts, 0, &mut |w| {
        let mut op = Operating {
            service: vec![0.0; links],
            spend: vec![0.0; nodes],
        };
        for (a, &n) in pure.iter().zip(w) {
            if n == 0 {
                continue;
            }
            let f = n as f64 / ticks as f64;
            for (s, x) in op.service.iter_mut().zip(&a.service) {
                *s += f * x;
            }
            for (s, x) in op.spend.iter_mut().zip(&a.spend) {
                *s += f * x;
            }
        }
        out.push(op);
    });
    out
}
