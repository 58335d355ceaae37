//! The energy-limited scheduling algorithm: harvesting, admission control,
//! power allocation, and backpressure routing, applied once per slot.

use serde::Serialize;

use crate::error::{Error, Result, Violation, ViolationKind};
use crate::model::rate::cmp_lex;
use crate::model::{ActionSpace, Network, NetworkGraph, RateFunction, SystemParams, Utility};
use crate::queues::{apply_data_dynamics, apply_energy_dynamics, DataQueues, EnergyQueues};

/// Harvest everything available while below the perturbation, nothing otherwise.
pub fn harvest_decision(energy: f64, theta: f64, harvestable: f64) -> f64 {
    if energy - theta < 0.0 {
        harvestable
    } else {
        0.0
    }
}

/// Admission rate maximizing `V * U(r) - Q * r` over `[0, r_max]`.
pub fn admit(q: f64, v: f64, utility: &Utility, r_max: f64) -> f64 {
    match *utility {
        Utility::Zero => 0.0,
        Utility::Log { scale, offset } => {
            if q <= 0.0 {
                r_max
            } else {
                (v * scale / q - offset).clamp(0.0, r_max)
            }
        }
        Utility::Saturating { .. } => admit_by_bisection(q, v, utility, r_max),
    }
}

/// Generic admission for any concave utility: bisection on
/// `V * U'(r) = Q`, 60 halvings of `[0, r_max]`.
pub fn admit_by_bisection(q: f64, v: f64, utility: &Utility, r_max: f64) -> f64 {
    let slope = |r: f64| v * utility.derivative(r) - q;
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    if slope(r_max) >= 0.0 {
        return r_max;
    }
    let (mut lo, mut hi) = (0.0, r_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Backpressure weights of every link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkWeights {
    /// `(link, class)` matrix of `[Q_n - Q_b - γ]⁺`.
    pub per_class: Vec<f64>,
    /// Largest class weight on each link.
    pub max: Vec<f64>,
    /// Class achieving `max`, smallest index on ties.
    pub best: Vec<usize>,
}

impl LinkWeights {
    pub fn new(link_count: usize, class_count: usize) -> Self {
        Self {
            per_class: vec![0.0; link_count * class_count],
            max: vec![0.0; link_count],
            best: vec![0; link_count],
        }
    }
}

pub fn link_weights(graph: &NetworkGraph, q: &DataQueues, gamma: f64, out: &mut LinkWeights) {
    let k = q.class_count();
    for (l, link) in graph.links().iter().enumerate() {
        let mut best = 0;
        let mut max = f64::NEG_INFINITY;
        for c in 0..k {
            let w = (q.get(link.from, c) - q.get(link.to, c) - gamma).max(0.0);
            out.per_class[l * k + c] = w;
            if w > max {
                max = w;
                best = c;
            }
        }
        out.max[l] = max.max(0.0);
        out.best[l] = best;
    }
}

/// Tolerance under which two values of `G` are treated as equal.
pub const G_TIE_TOL: f64 = 1e-9;

/// Exhaustive maximizer of
/// `G(P) = Σ_l μ_l(s, P) W_l + Σ_n (E_n - θ_n) Σ_{l∈out(n)} P_l`
/// over actions whose per-node spend fits in `E_n`.
///
/// Ties go to the smaller total power and then to the lexicographically
/// smallest per-link power vector. Values within [`G_TIE_TOL`] count as tied,
/// so that rounding in the rate function cannot break an exact tie.
pub struct PowerAllocator {
    separable: bool,
    local_rates: Vec<f64>,
    choice: Vec<usize>,
    power: Vec<f64>,
    rates: Vec<f64>,
}

impl PowerAllocator {
    pub fn new(rate: &dyn RateFunction, actions: &ActionSpace) -> Self {
        let width = (0..actions.node_count())
            .map(|n| actions.node_links(n).len())
            .max()
            .unwrap_or(0);
        Self {
            separable: rate.is_node_separable(),
            local_rates: vec![0.0; width],
            choice: vec![0; actions.node_count()],
            power: vec![0.0; actions.link_count()],
            rates: vec![0.0; actions.link_count()],
        }
    }

    /// Writes the chosen per-link power vector into `out` and returns its `G`.
    #[allow(clippy::too_many_arguments)]
    pub fn allocate(
        &mut self,
        rate: &dyn RateFunction,
        actions: &ActionSpace,
        channel: &[usize],
        weights: &[f64],
        e_minus_theta: &[f64],
        energy: &[f64],
        out: &mut [f64],
    ) -> f64 {
        if self.separable {
            self.allocate_per_node(rate, actions, channel, weights, e_minus_theta, energy, out)
        } else {
            self.allocate_joint(rate, actions, channel, weights, e_minus_theta, energy, out)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn allocate_per_node(
        &mut self,
        rate: &dyn RateFunction,
        actions: &ActionSpace,
        channel: &[usize],
        weights: &[f64],
        e_minus_theta: &[f64],
        energy: &[f64],
        out: &mut [f64],
    ) -> f64 {
        out.fill(0.0);
        let mut total = 0.0;
        for n in 0..actions.node_count() {
            let links = actions.node_links(n);
            if links.is_empty() {
                continue;
            }
            let local = &mut self.local_rates[..links.len()];
            // Actions are sorted by (total, lex): index 0 is the zero action
            // and a strict improvement test keeps the earliest maximizer.
            let mut best = 0;
            let mut best_g = 0.0;
            for (i, a) in actions.node_actions(n).iter().enumerate().skip(1) {
                let spend: f64 = a.iter().sum();
                if spend > energy[n] {
                    continue;
                }
                rate.node_rates(links, channel, a, local);
                let g = local.iter().zip(links).map(|(r, &l)| r * weights[l]).sum::<f64>()
                    + e_minus_theta[n] * spend;
                if g > best_g + G_TIE_TOL {
                    best_g = g;
                    best = i;
                }
            }
            for (&l, &p) in links.iter().zip(&actions.node_actions(n)[best]) {
                out[l] = p;
            }
            total += best_g;
        }
        total
    }

    #[allow(clippy::too_many_arguments)]
    fn allocate_joint(
        &mut self,
        rate: &dyn RateFunction,
        actions: &ActionSpace,
        channel: &[usize],
        weights: &[f64],
        e_minus_theta: &[f64],
        energy: &[f64],
        out: &mut [f64],
    ) -> f64 {
        out.fill(0.0);
        let mut best_g = 0.0;
        let mut best_total = 0.0;
        let n_nodes = actions.node_count();
        self.choice.fill(0);
        loop {
            let feasible = (0..n_nodes).all(|n| {
                actions.node_actions(n)[self.choice[n]].iter().sum::<f64>() <= energy[n]
            });
            if feasible {
                actions.assemble(&self.choice, &mut self.power);
                rate.rates(channel, &self.power, &mut self.rates);
                let mut g: f64 = self.rates.iter().zip(weights).map(|(r, w)| r * w).sum();
                let mut total = 0.0;
                for n in 0..n_nodes {
                    let s: f64 = actions.node_actions(n)[self.choice[n]].iter().sum();
                    g += e_minus_theta[n] * s;
                    total += s;
                }
                let better = g > best_g + G_TIE_TOL
                    || (g >= best_g - G_TIE_TOL
                        && (total < best_total
                            || (total == best_total && cmp_lex(&self.power, out).is_lt())));
                if better {
                    best_g = g;
                    best_total = total;
                    out.copy_from_slice(&self.power);
                }
            }
            // advance the mixed-radix counter
            let mut i = n_nodes;
            loop {
                if i == 0 {
                    return best_g;
                }
                i -= 1;
                self.choice[i] += 1;
                if self.choice[i] < actions.node_actions(i).len() {
                    break;
                }
                self.choice[i] = 0;
            }
        }
    }
}

/// Convenience wrapper around [`PowerAllocator`] for one-off calls.
pub fn allocate_power(
    rate: &dyn RateFunction,
    actions: &ActionSpace,
    channel: &[usize],
    weights: &[f64],
    e_minus_theta: &[f64],
    energy: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; actions.link_count()];
    PowerAllocator::new(rate, actions).allocate(
        rate,
        actions,
        channel,
        weights,
        e_minus_theta,
        energy,
        &mut out,
    );
    out
}

/// Gives each link's full rate to its best class when that class has
/// positive weight. Writes a `(link, class)` matrix.
pub fn route_and_schedule(link_rates: &[f64], weights: &LinkWeights, class_count: usize, out: &mut [f64]) {
    out.fill(0.0);
    for (l, &mu) in link_rates.iter().enumerate() {
        if weights.max[l] > 0.0 {
            out[l * class_count + weights.best[l]] = mu;
        }
    }
}

/// Everything decided in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotAction {
    /// Energy harvested per node.
    pub harvest: Vec<f64>,
    /// Admission per commodity, in network order.
    pub commodity_admissions: Vec<f64>,
    /// `(node, class)` admissions.
    pub admissions: Vec<f64>,
    /// Power per link.
    pub power: Vec<f64>,
    /// Power spent per node.
    pub spend: Vec<f64>,
    /// Service rate per link under `power`.
    pub link_rates: Vec<f64>,
    /// `(link, class)` allocated rates.
    pub class_rates: Vec<f64>,
}

impl SlotAction {
    fn new(net: &Network) -> Self {
        let (n, l, k) = (net.node_count(), net.link_count(), net.class_count());
        Self {
            harvest: vec![0.0; n],
            commodity_admissions: vec![0.0; net.commodities().len()],
            admissions: vec![0.0; n * k],
            power: vec![0.0; l],
            spend: vec![0.0; n],
            link_rates: vec![0.0; l],
            class_rates: vec![0.0; l * k],
        }
    }
}

/// Backlogs and batteries at the start of a slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsaState {
    pub q: DataQueues,
    pub e: EnergyQueues,
}

impl EsaState {
    /// All queues empty.
    pub fn empty(net: &Network) -> Self {
        Self {
            q: DataQueues::new(net.node_count(), net.destinations()),
            e: EnergyQueues::new(net.node_count()),
        }
    }
}

/// Checks the deterministic backlog and battery ceilings on a state.
pub fn check_queue_bounds(params: &SystemParams, state: &EsaState, slot: u64) -> Result<()> {
    let q = &state.q;
    let k = q.class_count();
    for n in 0..q.node_count() {
        for c in 0..k {
            let x = q.get(n, c);
            if !(0.0..=params.q_bound).contains(&x) {
                return Err(Error::Invariant(Violation {
                    kind: ViolationKind::DataQueueBound,
                    slot,
                    node: n + 1,
                    destination: Some(q.destination(c) + 1),
                    value: x,
                    bound: params.q_bound,
                }));
            }
        }
    }
    for n in 0..state.e.len() {
        let x = state.e.get(n);
        if !(0.0..=params.e_bound[n]).contains(&x) {
            return Err(Error::Invariant(Violation {
                kind: ViolationKind::EnergyQueueBound,
                slot,
                node: n + 1,
                destination: None,
                value: x,
                bound: params.e_bound[n],
            }));
        }
    }
    Ok(())
}

/// Checks that a node spending power holds at least `P_max` and at least
/// what it spends.
pub fn check_spend(params: &SystemParams, energy: &EnergyQueues, spend: &[f64], slot: u64) -> Result<()> {
    for (n, &s) in spend.iter().enumerate() {
        let e = energy.get(n);
        if s > e {
            return Err(Error::Invariant(Violation {
                kind: ViolationKind::EnergyAvailability,
                slot,
                node: n + 1,
                destination: None,
                value: s,
                bound: e,
            }));
        }
        if s > 0.0 && e < params.p_max {
            return Err(Error::Invariant(Violation {
                kind: ViolationKind::SpendBelowPmax,
                slot,
                node: n + 1,
                destination: None,
                value: e,
                bound: params.p_max,
            }));
        }
    }
    Ok(())
}

/// Per-run decision engine with reusable buffers.
pub struct Esa<'a> {
    net: &'a Network,
    params: SystemParams,
    weights: LinkWeights,
    allocator: PowerAllocator,
    e_minus_theta: Vec<f64>,
    action: SlotAction,
    transfers: Vec<f64>,
}

impl<'a> Esa<'a> {
    pub fn new(net: &'a Network, params: SystemParams) -> Self {
        Self {
            weights: LinkWeights::new(net.link_count(), net.class_count()),
            allocator: PowerAllocator::new(net.rate(), net.actions()),
            e_minus_theta: vec![0.0; net.node_count()],
            action: SlotAction::new(net),
            transfers: vec![0.0; net.link_count() * net.class_count()],
            net,
            params,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn weights(&self) -> &LinkWeights {
        &self.weights
    }

    /// Actual per-(link, class) amounts moved by the last [`Esa::step`].
    pub fn transfers(&self) -> &[f64] {
        &self.transfers
    }

    pub fn action(&self) -> &SlotAction {
        &self.action
    }

    /// Computes the slot decision from start-of-slot state, the channel
    /// labels (one per link), and the harvestable energy per node.
    pub fn decide(&mut self, state: &EsaState, channel: &[usize], harvestable: &[f64]) -> &SlotAction {
        let net = self.net;
        let p = &self.params;
        let k = net.class_count();
        let a = &mut self.action;

        for n in 0..net.node_count() {
            let e = state.e.get(n);
            a.harvest[n] = harvest_decision(e, p.theta[n], harvestable[n]);
            self.e_minus_theta[n] = e - p.theta[n];
        }

        a.admissions.fill(0.0);
        for (i, c) in net.commodities().iter().enumerate() {
            let r = admit(state.q.get(c.source, c.class), p.v, &c.utility, p.r_max);
            a.commodity_admissions[i] = r;
            a.admissions[c.source * k + c.class] += r;
        }

        link_weights(net.graph(), &state.q, p.gamma, &mut self.weights);
        self.allocator.allocate(
            net.rate(),
            net.actions(),
            channel,
            &self.weights.max,
            &self.e_minus_theta,
            state.e.as_slice(),
            &mut a.power,
        );
        net.actions().node_spend(&a.power, &mut a.spend);
        net.rate().rates(channel, &a.power, &mut a.link_rates);
        route_and_schedule(&a.link_rates, &self.weights, k, &mut a.class_rates);
        &self.action
    }

    /// Decides, checks feasibility, and advances `state` by one slot. The
    /// backlog and battery ceilings are checked on the resulting state.
    pub fn step(
        &mut self,
        state: &mut EsaState,
        channel: &[usize],
        harvestable: &[f64],
        slot: u64,
    ) -> Result<&SlotAction> {
        self.decide(state, channel, harvestable);
        check_spend(&self.params, &state.e, &self.action.spend, slot)?;
        apply_data_dynamics(
            &mut state.q,
            self.net.graph(),
            &self.action.class_rates,
            &self.weights.per_class,
            &self.action.admissions,
            &mut self.transfers,
        );
        apply_energy_dynamics(&mut state.e, &self.action.spend, &self.action.harvest, slot)?;
        check_queue_bounds(&self.params, state, slot + 1)?;
        Ok(&self.action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearRate;
    use crate::scenarios;
    use proptest::prelude::*;

    #[test]
    fn harvest_rule() {
        assert_eq!(harvest_decision(9.0, 10.0, 2.0), 2.0);
        assert_eq!(harvest_decision(10.0, 10.0, 2.0), 0.0);
        assert_eq!(harvest_decision(0.0, 10.0, 2.0), 2.0);
    }

    /// Maximizes `V U(r) - Q r` on a grid of step 1e-4.
    fn grid_admit(q: f64, v: f64, u: &Utility, r_max: f64) -> f64 {
        let steps = (r_max / 1e-4).round() as usize;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=steps {
            let r = i as f64 * 1e-4;
            let f = v * u.value(r) - q * r;
            if f > best.0 {
                best = (f, r);
            }
        }
        best.1
    }

    #[test]
    fn admission_examples() {
        let u = Utility::log();
        assert_eq!(admit(10.0, 100.0, &u, 3.0), 3.0);
        assert_eq!(grid_admit(10.0, 100.0, &u, 3.0), 3.0);
        assert_eq!(admit(0.0, 100.0, &u, 3.0), 3.0);
        assert_eq!(admit(100.0, 100.0, &u, 3.0), 0.0);
        assert_eq!(grid_admit(100.0, 100.0, &u, 3.0), 0.0);
        assert_eq!(admit(0.0, 100.0, &Utility::Zero, 3.0), 0.0);
        assert_eq!(admit(40.0, 100.0, &u, 3.0), 1.5);
    }

    #[test]
    fn bisection_agrees_with_log_closed_form() {
        let u = Utility::Log { scale: 2.0, offset: 1.5 };
        for q in [0.5, 10.0, 60.0, 133.0, 150.0, 400.0] {
            let a = admit(q, 100.0, &u, 3.0);
            let b = admit_by_bisection(q, 100.0, &u, 3.0);
            assert!((a - b).abs() < 1e-9, "q={q}: {a} vs {b}");
        }
    }

    #[test]
    fn weights_examples() {
        let g = NetworkGraph::from_pairs(3, &[[1, 2], [2, 3]]).unwrap();
        let mut q = DataQueues::new(3, &[2, 1]);
        q.set(0, 0, 50.0);
        q.set(1, 0, 10.0);
        let mut w = LinkWeights::new(2, 2);
        link_weights(&g, &q, 7.0, &mut w);
        assert_eq!(w.per_class[0], 33.0);
        assert_eq!(w.max[0], 33.0);
        assert_eq!(w.best[0], 0);
        assert_eq!(w.per_class[2], 3.0);
        // class 1 is destined to node 1, so its link 1 -> 2 weight is zero
        assert_eq!(w.per_class[1], 0.0);

        let mut q = DataQueues::new(3, &[2, 1]);
        q.set(0, 0, 12.0);
        q.set(0, 1, 12.0);
        link_weights(&g, &q, 7.0, &mut w);
        assert_eq!((w.max[0], w.best[0]), (5.0, 0));
    }

    #[test]
    fn routing_examples() {
        let w = LinkWeights {
            per_class: vec![33.0, 10.0, 0.0, 0.0, 5.0, 5.0],
            max: vec![33.0, 0.0, 5.0],
            best: vec![0, 0, 0],
        };
        let mut out = [0.0; 6];
        route_and_schedule(&[2.0, 2.0, 1.0], &w, 2, &mut out);
        assert_eq!(out, [2.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    fn single_link() -> (LinearRate, ActionSpace) {
        let g = NetworkGraph::from_pairs(2, &[[1, 2]]).unwrap();
        (
            LinearRate::new(vec![2.0, 1.0], 0.0, 1.0),
            ActionSpace::new(&g, &[0.0, 1.0], 1.0).unwrap(),
        )
    }

    #[test]
    fn allocation_examples() {
        let (rate, actions) = single_link();
        let p = allocate_power(&rate, &actions, &[0], &[33.0], &[-5.0, 0.0], &[10.0, 0.0]);
        assert_eq!(p, vec![1.0]);
        let p = allocate_power(&rate, &actions, &[0], &[33.0], &[-5.0, 0.0], &[0.0, 0.0]);
        assert_eq!(p, vec![0.0]);
        let p = allocate_power(&rate, &actions, &[0], &[0.0], &[-5.0, 0.0], &[10.0, 0.0]);
        assert_eq!(p, vec![0.0]);
    }

    /// Independent maximizer: enumerate every joint action, evaluate G with
    /// full rate calls, and apply the tie rule by sorting candidates.
    fn brute_allocate(
        rate: &dyn RateFunction,
        actions: &ActionSpace,
        channel: &[usize],
        w: &[f64],
        emt: &[f64],
        energy: &[f64],
    ) -> (f64, Vec<f64>) {
        let mut cands: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        actions.for_each_joint(|choice| {
            let mut p = vec![0.0; actions.link_count()];
            actions.assemble(choice, &mut p);
            let mut spend = vec![0.0; actions.node_count()];
            actions.node_spend(&p, &mut spend);
            if spend.iter().zip(energy).any(|(s, e)| s > e) {
                return;
            }
            let mut r = vec![0.0; p.len()];
            rate.rates(channel, &p, &mut r);
            let g = r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
                + spend.iter().zip(emt).map(|(s, d)| s * d).sum::<f64>();
            cands.push((g, spend.iter().sum(), p));
        });
        let g_max = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        let mut top: Vec<_> = cands.into_iter().filter(|c| c.0 >= g_max - 1e-9).collect();
        top.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| cmp_lex(&a.2, &b.2)));
        (g_max, top.swap_remove(0).2)
    }

    fn objective(rate: &dyn RateFunction, channel: &[usize], w: &[f64], emt: &[f64], actions: &ActionSpace, p: &[f64]) -> f64 {
        let mut r = vec![0.0; p.len()];
        rate.rates(channel, p, &mut r);
        let mut spend = vec![0.0; actions.node_count()];
        actions.node_spend(p, &mut spend);
        r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
            + spend.iter().zip(emt).map(|(s, d)| s * d).sum::<f64>()
    }

    fn allocation_matches_enumeration(net: &Network, seed: u64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let actions = net.actions();
        assert!(actions.joint_count() <= 1 << 16);
        let labels = net.channel_labels().len();
        let mut alloc = PowerAllocator::new(net.rate(), actions);
        let mut out = vec![0.0; net.link_count()];
        for _ in 0..2000 {
            let channel: Vec<usize> = (0..net.link_count()).map(|_| rng.random_range(0..labels)).collect();
            // integer-valued inputs produce exact ties often
            let w: Vec<f64> = (0..net.link_count())
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0..40) as f64 })
                .collect();
            let emt: Vec<f64> = (0..net.node_count()).map(|_| rng.random_range(-60..5) as f64).collect();
            let energy: Vec<f64> = (0..net.node_count()).map(|_| rng.random_range(0..4) as f64).collect();
            let g = alloc.allocate(net.rate(), actions, &channel, &w, &emt, &energy, &mut out);
            let (g_ref, p_ref) = brute_allocate(net.rate(), actions, &channel, &w, &emt, &energy);
            assert!((g - g_ref).abs() <= 1e-9, "G {g} vs {g_ref}");
            assert!((objective(net.rate(), &channel, &w, &emt, actions, &out) - g_ref).abs() <= 1e-9);
            assert_eq!(out, p_ref, "channel {channel:?} w {w:?} emt {emt:?} energy {energy:?}");
        }
    }

    #[test]
    fn separable_allocation_matches_joint_enumeration() {
        allocation_matches_enumeration(&scenarios::paper_fig1(), 1);
    }

    #[test]
    fn interfering_allocation_matches_joint_enumeration() {
        allocation_matches_enumeration(&scenarios::fig1_interference(), 2);
    }

    #[test]
    fn first_slot_admits_r_max_and_spends_nothing() {
        let net = scenarios::paper_fig1();
        let params = net.params(100.0).unwrap();
        let mut esa = Esa::new(&net, params);
        let mut state = EsaState::empty(&net);
        let a = esa.step(&mut state, &[0; 6], &[2.0; 6], 0).unwrap().clone();
        assert_eq!(&a.commodity_admissions[..3], &[3.0, 3.0, 3.0]);
        assert_eq!(&a.commodity_admissions[3..], &[0.0, 0.0]);
        assert!(a.power.iter().all(|&p| p == 0.0));
        assert_eq!(state.e.as_slice(), &[2.0; 6]);
        assert_eq!(state.q.get(0, 0), 3.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn admission_matches_grid_search(q in 0.0f64..250.0, v in 1.0f64..200.0) {
            let u = Utility::log();
            let a = admit(q, v, &u, 3.0);
            let g = grid_admit(q, v, &u, 3.0);
            let fa = v * u.value(a) - q * a;
            let fg = v * u.value(g) - q * g;
            prop_assert!(fa >= fg - 1e-9);
            prop_assert!((a - g).abs() <= 1e-3, "admit {} grid {}", a, g);
        }

        #[test]
        fn admission_non_increasing_in_backlog(q1 in 0.0f64..250.0, dq in 0.0f64..50.0, v in 1.0f64..200.0) {
            for u in [Utility::log(), Utility::Saturating { scale: 1.0, rate: 0.7 }] {
                prop_assert!(admit(q1 + dq, v, &u, 3.0) <= admit(q1, v, &u, 3.0));
            }
        }
    }
}
