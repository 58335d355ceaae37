//! Fluid data and energy queues.
//!
//! Data queues are indexed by `(node, class)` where a class is a destination
//! node. Link quantities are indexed by `(link, class)`. Both are stored flat,
//! row-major.

use serde::Serialize;

use crate::error::{Error, Result, Violation, ViolationKind};
use crate::model::NetworkGraph;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataQueues {
    classes: usize,
    destinations: Vec<usize>,
    q: Vec<f64>,
}

impl DataQueues {
    /// All-zero backlogs for `node_count` nodes and one class per destination.
    pub fn new(node_count: usize, destinations: &[usize]) -> Self {
        Self {
            classes: destinations.len(),
            destinations: destinations.to_vec(),
            q: vec![0.0; node_count * destinations.len()],
        }
    }

    pub fn node_count(&self) -> usize {
        if self.classes == 0 {
            0
        } else {
            self.q.len() / self.classes
        }
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn destination(&self, class: usize) -> usize {
        self.destinations[class]
    }

    pub fn get(&self, node: usize, class: usize) -> f64 {
        self.q[node * self.classes + class]
    }

    /// Sets a backlog. Writes to a class's own destination are ignored.
    pub fn set(&mut self, node: usize, class: usize, value: f64) {
        if node != self.destinations[class] {
            self.q[node * self.classes + class] = value;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.q.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyQueues {
    e: Vec<f64>,
}

impl EnergyQueues {
    /// Empty batteries.
    pub fn new(node_count: usize) -> Self {
        Self {
            e: vec![0.0; node_count],
        }
    }

    pub fn from_levels(levels: Vec<f64>) -> Self {
        Self { e: levels }
    }

    pub fn get(&self, node: usize) -> f64 {
        self.e[node]
    }

    pub fn set(&mut self, node: usize, value: f64) {
        self.e[node] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.e.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.e.iter().cloned().fold(0.0, f64::max)
    }
}

/// Applies one slot of data dynamics in place.
///
/// `rates` and `weights` are `(link, class)` matrices: the allocated rate and
/// the weight used to order a sender's out-links when its backlog cannot
/// cover every allocation. `admissions` is a `(node, class)` matrix. The
/// actual amount moved on each link is written to `transfers`.
///
/// Every node sends from its start-of-slot backlog; arrivals are added after
/// all departures.
pub fn apply_data_dynamics(
    q: &mut DataQueues,
    graph: &NetworkGraph,
    rates: &[f64],
    weights: &[f64],
    admissions: &[f64],
    transfers: &mut [f64],
) {
    let k = q.classes;
    debug_assert_eq!(admissions.len(), q.q.len());
    serve_departures(q, graph, rates, weights, transfers);
    for (l, link) in graph.links().iter().enumerate() {
        for c in 0..k {
            if link.to != q.destinations[c] {
                q.q[link.to * k + c] += transfers[l * k + c];
            }
        }
    }
    for n in 0..graph.node_count() {
        for c in 0..k {
            if n != q.destinations[c] {
                q.q[n * k + c] += admissions[n * k + c];
            }
        }
    }
}

/// Departure half of [`apply_data_dynamics`]: fills `transfers` with what
/// each sender can actually move and removes it from the senders' backlogs.
/// Receivers are not credited.
pub fn serve_departures(
    q: &mut DataQueues,
    graph: &NetworkGraph,
    rates: &[f64],
    weights: &[f64],
    transfers: &mut [f64],
) {
    let k = q.classes;
    debug_assert_eq!(rates.len(), graph.link_count() * k);
    transfers.fill(0.0);
    let mut order: Vec<usize> = Vec::new();
    for n in 0..graph.node_count() {
        let out = graph.out_links(n);
        for c in 0..k {
            if n == q.destinations[c] {
                continue;
            }
            let available = q.q[n * k + c];
            let wanted: f64 = out.iter().map(|&l| rates[l * k + c]).sum();
            if wanted <= 0.0 {
                continue;
            }
            if wanted <= available {
                for &l in out {
                    transfers[l * k + c] = rates[l * k + c];
                }
                q.q[n * k + c] = available - wanted;
                continue;
            }
            order.clear();
            order.extend(out.iter().copied().filter(|&l| rates[l * k + c] > 0.0));
            order.sort_by(|&a, &b| {
                weights[b * k + c]
                    .total_cmp(&weights[a * k + c])
                    .then(a.cmp(&b))
            });
            let mut left = available;
            for &l in &order {
                let x = rates[l * k + c].min(left);
                transfers[l * k + c] = x;
                left -= x;
            }
            q.q[n * k + c] = 0.0;
        }
    }
}

/// Adds `amount` to a backlog unless the node is the class's destination.
pub fn enqueue(q: &mut DataQueues, node: usize, class: usize, amount: f64) {
    if node != q.destinations[class] {
        q.q[node * q.classes + class] += amount;
    }
}

/// Applies `E' = E - spend + harvest` in place.
///
/// Spending more than the stored level is a scheduler bug and is reported as
/// an [`ViolationKind::EnergyAvailability`] violation at `slot`; the queues
/// are left untouched in that case.
pub fn apply_energy_dynamics(
    e: &mut EnergyQueues,
    spend: &[f64],
    harvest: &[f64],
    slot: u64,
) -> Result<()> {
    if let Some(n) = (0..e.e.len()).find(|&n| spend[n] > e.e[n]) {
        return Err(Error::Invariant(Violation {
            kind: ViolationKind::EnergyAvailability,
            slot,
            node: n + 1,
            destination: None,
            value: spend[n],
            bound: e.e[n],
        }));
    }
    for n in 0..e.e.len() {
        e.e[n] = e.e[n] - spend[n] + harvest[n];
    }
    Ok(())
}

/// Amount delivered to destinations by a transfer matrix, per class.
pub fn delivered(graph: &NetworkGraph, destinations: &[usize], transfers: &[f64], out: &mut [f64]) {
    let k = destinations.len();
    out.fill(0.0);
    for (l, link) in graph.links().iter().enumerate() {
        for c in 0..k {
            if link.to == destinations[c] {
                out[c] += transfers[l * k + c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line() -> NetworkGraph {
        // 0 -> 1 -> 2, destination 2
        NetworkGraph::from_pairs(3, &[[1, 2], [2, 3]]).unwrap()
    }

    #[test]
    fn sufficient_backlog_follows_plain_arithmetic() {
        let g = line();
        let mut q = DataQueues::new(3, &[2]);
        q.set(0, 0, 4.0);
        q.set(1, 0, 5.0);
        // node 1 receives 2 from node 0, sends 3, admits 1
        let rates = [2.0, 3.0];
        let mut t = [0.0; 2];
        apply_data_dynamics(&mut q, &g, &rates, &[1.0, 1.0], &[0.0, 1.0, 0.0], &mut t);
        assert_eq!(q.get(1, 0), 5.0 - 3.0 + 2.0 + 1.0);
        assert_eq!(t, [2.0, 3.0]);
    }

    #[test]
    fn short_backlog_moves_only_what_exists() {
        let g = line();
        let mut q = DataQueues::new(3, &[2]);
        q.set(0, 0, 1.0);
        let mut t = [0.0; 2];
        apply_data_dynamics(&mut q, &g, &[3.0, 0.0], &[1.0, 0.0], &[0.0; 3], &mut t);
        assert_eq!(t[0], 1.0);
        assert_eq!(q.get(0, 0), 0.0);
        assert_eq!(q.get(1, 0), 1.0);
    }

    #[test]
    fn destination_stays_empty() {
        let g = line();
        let mut q = DataQueues::new(3, &[2]);
        q.set(1, 0, 4.0);
        q.set(2, 0, 9.0);
        let mut t = [0.0; 2];
        apply_data_dynamics(&mut q, &g, &[0.0, 2.0], &[0.0, 1.0], &[0.0; 3], &mut t);
        assert_eq!(q.get(2, 0), 0.0);
        let mut d = [0.0];
        delivered(&g, &[2], &t, &mut d);
        assert_eq!(d, [2.0]);
    }

    #[test]
    fn relay_cannot_forward_same_slot_arrivals() {
        let g = line();
        let mut q = DataQueues::new(3, &[2]);
        q.set(0, 0, 2.0);
        let mut t = [0.0; 2];
        apply_data_dynamics(&mut q, &g, &[2.0, 2.0], &[1.0, 1.0], &[0.0; 3], &mut t);
        assert_eq!(t, [2.0, 0.0]);
        assert_eq!(q.get(1, 0), 2.0);
    }

    #[test]
    fn shortfall_served_by_descending_weight_then_index() {
        // node 0 has links to 1 and 2; destination 3 reachable from both
        let g = NetworkGraph::from_pairs(4, &[[1, 2], [1, 3], [2, 4], [3, 4]]).unwrap();
        let mut q = DataQueues::new(4, &[3]);
        q.set(0, 0, 3.0);
        let rates = [2.0, 2.0, 0.0, 0.0];
        let mut t = [0.0; 4];
        apply_data_dynamics(&mut q, &g, &rates, &[1.0, 5.0, 0.0, 0.0], &[0.0; 4], &mut t);
        assert_eq!(&t[..2], &[1.0, 2.0]);

        let mut q = DataQueues::new(4, &[3]);
        q.set(0, 0, 3.0);
        apply_data_dynamics(&mut q, &g, &rates, &[4.0, 4.0, 0.0, 0.0], &[0.0; 4], &mut t);
        assert_eq!(&t[..2], &[2.0, 1.0]);
    }

    #[test]
    fn energy_update_is_exact() {
        let mut e = EnergyQueues::from_levels(vec![5.0]);
        apply_energy_dynamics(&mut e, &[2.0], &[2.0], 0).unwrap();
        assert_eq!(e.get(0), 5.0);
        assert!(EnergyQueues::new(3).as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn overspend_is_a_hard_fault() {
        let mut e = EnergyQueues::new(1);
        let err = apply_energy_dynamics(&mut e, &[1.0], &[0.0], 17).unwrap_err();
        match err {
            Error::Invariant(v) => {
                assert_eq!(v.kind, ViolationKind::EnergyAvailability);
                assert_eq!(v.slot, 17);
                assert_eq!(v.node, 1);
            }
            other => panic!("unexpected {other}"),
        }
        assert_eq!(e.get(0), 0.0);
    }

    /// Diamond with two destinations so classes interact on shared links.
    fn diamond() -> NetworkGraph {
        NetworkGraph::from_pairs(
            5,
            &[[1, 2], [1, 3], [2, 4], [3, 4], [2, 5], [3, 5], [4, 5]],
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn queues_stay_nonnegative_and_conserve_mass(
            slots in prop::collection::vec(
                (
                    prop::collection::vec(0.0f64..3.0, 14),
                    prop::collection::vec(0.0f64..5.0, 14),
                    prop::collection::vec(0.0f64..2.0, 10),
                ),
                1..40,
            )
        ) {
            let g = diamond();
            let dest = [3usize, 4];
            let mut q = DataQueues::new(5, &dest);
            let mut t = vec![0.0; 14];
            let mut d = [0.0; 2];
            let (mut admitted, mut out) = (0.0, 0.0);
            for (rates, weights, adm) in &slots {
                apply_data_dynamics(&mut q, &g, rates, weights, adm, &mut t);
                delivered(&g, &dest, &t, &mut d);
                out += d[0] + d[1];
                admitted += (0..5)
                    .flat_map(|n| (0..2).map(move |c| (n, c)))
                    .filter(|&(n, c)| n != dest[c])
                    .map(|(n, c)| adm[n * 2 + c])
                    .sum::<f64>();
                prop_assert!(q.as_slice().iter().all(|&x| x >= 0.0));
                prop_assert_eq!(q.get(3, 0), 0.0);
                prop_assert_eq!(q.get(4, 1), 0.0);
                for l in 0..7 {
                    for c in 0..2 {
                        prop_assert!(t[l * 2 + c] <= rates[l * 2 + c]);
                    }
                }
            }
            let residual = admitted - out - q.total();
            prop_assert!(residual.abs() <= 1e-9 * admitted.max(1.0), "residual {}", residual);
        }

        #[test]
        fn energy_ledger_is_exact(
            steps in prop::collection::vec((0.0f64..1.0, 0.0f64..3.0), 1..100)
        ) {
            let mut e = EnergyQueues::new(1);
            let (mut h_sum, mut s_sum) = (0.0, 0.0);
            for (i, &(frac, h)) in steps.iter().enumerate() {
                let spend = frac * e.get(0);
                apply_energy_dynamics(&mut e, &[spend], &[h], i as u64).unwrap();
                h_sum += h;
                s_sum += spend;
                prop_assert!(e.get(0) >= 0.0);
            }
            prop_assert!((e.get(0) - (h_sum - s_sum)).abs() <= 1e-9 * h_sum.max(1.0));
        }
    }
}
