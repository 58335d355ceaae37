use serde::Serialize;

use crate::model::Network;

/// Time-average summary of one run.
///
/// Averages of queue levels are over the start-of-slot states `t = 0..T-1`.
/// Rates are totals divided by the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub policy: super::Policy,
    pub v: f64,
    pub seed: u64,
    pub horizon: u64,
    /// Average admitted rate per commodity.
    pub admitted_rate: Vec<f64>,
    /// Average admitted rate minus dropped traffic, per commodity. Drops of a
    /// class are charged to its commodities in proportion to their admissions.
    pub net_rate: Vec<f64>,
    /// Total utility of `net_rate`.
    pub utility: f64,
    /// Total utility of `admitted_rate`.
    pub utility_admitted: f64,
    /// Max minus min of the running total utility over the last tenth of the run.
    pub utility_tail_swing: f64,
    /// Average total data backlog (actual queues for the two-phase scheme).
    pub backlog_avg: f64,
    /// Average battery level per node.
    pub energy_node_avg: Vec<f64>,
    /// Mean of `energy_node_avg`.
    pub energy_avg: f64,
    /// Standard deviation of each battery over the second half of the run,
    /// divided by its mean there.
    pub energy_tail_cv: Vec<f64>,
    pub max_q: f64,
    pub max_e: f64,
    /// Virtual-queue averages (two-phase scheme only).
    pub virtual_backlog_avg: Option<f64>,
    pub virtual_energy_avg: Option<f64>,
    /// Battery capacity `M` (two-phase scheme only).
    pub capacity: Option<f64>,
    pub admitted_total: f64,
    pub delivered_total: f64,
    pub dropped_total: f64,
    pub backlog_final: f64,
    pub masked_deficits: u64,
    /// Always 0 on a returned run: any violation aborts the run.
    pub violations: u64,
}

/// Running sums collected while a run progresses.
pub(crate) struct Accumulator {
    horizon: u64,
    tail_start: u64,
    swing_start: u64,
    pub admitted: Vec<f64>,
    pub dropped_class: Vec<f64>,
    pub delivered: f64,
    backlog_sum: f64,
    virtual_backlog_sum: f64,
    virtual_energy_sum: f64,
    energy_sum: Vec<f64>,
    tail_sum: Vec<f64>,
    tail_sq: Vec<f64>,
    tail_n: u64,
    pub max_q: f64,
    pub max_e: f64,
    swing_min: f64,
    swing_max: f64,
    pub masked: u64,
}

impl Accumulator {
    pub fn new(net: &Network, horizon: u64) -> Self {
        let n = net.node_count();
        Self {
            horizon,
            tail_start: horizon / 2,
            swing_start: horizon - horizon / 10,
            admitted: vec![0.0; net.commodities().len()],
            dropped_class: vec![0.0; net.class_count()],
            delivered: 0.0,
            backlog_sum: 0.0,
            virtual_backlog_sum: 0.0,
            virtual_energy_sum: 0.0,
            energy_sum: vec![0.0; n],
            tail_sum: vec![0.0; n],
            tail_sq: vec![0.0; n],
            tail_n: 0,
            max_q: 0.0,
            max_e: 0.0,
            swing_min: f64::INFINITY,
            swing_max: f64::NEG_INFINITY,
            masked: 0,
        }
    }

    /// Records the start-of-slot state of slot `t`.
    pub fn observe_state(&mut self, t: u64, q: &[f64], e: &[f64]) {
        let total: f64 = q.iter().sum();
        self.backlog_sum += total;
        self.max_q = q.iter().cloned().fold(self.max_q, f64::max);
        self.max_e = e.iter().cloned().fold(self.max_e, f64::max);
        for (s, x) in self.energy_sum.iter_mut().zip(e) {
            *s += x;
        }
        if t >= self.tail_start {
            self.tail_n += 1;
            for (i, x) in e.iter().enumerate() {
                self.tail_sum[i] += x;
                self.tail_sq[i] += x * x;
            }
        }
    }

    pub fn observe_virtual(&mut self, q: &[f64], e: &[f64]) {
        self.virtual_backlog_sum += q.iter().sum::<f64>();
        self.virtual_energy_sum += e.iter().sum::<f64>() / e.len().max(1) as f64;
    }

    /// Records the running utility after slot `t` completes.
    pub fn observe_utility(&mut self, net: &Network, t: u64) {
        if t < self.swing_start {
            return;
        }
        let elapsed = (t + 1) as f64;
        let u: f64 = net
            .commodities()
            .iter()
            .zip(&self.admitted)
            .map(|(c, a)| c.utility.value(a / elapsed))
            .sum();
        self.swing_min = self.swing_min.min(u);
        self.swing_max = self.swing_max.max(u);
    }

    pub fn finish(
        self,
        net: &Network,
        policy: super::Policy,
        v: f64,
        seed: u64,
        backlog_final: f64,
        capacity: Option<f64>,
    ) -> Metrics {
        let t = self.horizon as f64;
        let avg = |x: f64| if self.horizon == 0 { 0.0 } else { x / t };
        let commodities = net.commodities();
        let mut class_admitted = vec![0.0; net.class_count()];
        for (c, a) in commodities.iter().zip(&self.admitted) {
            class_admitted[c.class] += a;
        }
        let admitted_rate: Vec<f64> = self.admitted.iter().map(|&a| avg(a)).collect();
        let net_rate: Vec<f64> = commodities
            .iter()
            .zip(&self.admitted)
            .map(|(c, &a)| {
                let share = if class_admitted[c.class] > 0.0 {
                    a / class_admitted[c.class]
                } else {
                    0.0
                };
                avg((a - share * self.dropped_class[c.class]).max(0.0))
            })
            .collect();
        let total_utility = |rates: &[f64]| -> f64 {
            commodities
                .iter()
                .zip(rates)
                .map(|(c, &r)| c.utility.value(r))
                .sum()
        };
        let energy_node_avg: Vec<f64> = self.energy_sum.iter().map(|&s| avg(s)).collect();
        let energy_avg = energy_node_avg.iter().sum::<f64>() / energy_node_avg.len().max(1) as f64;
        let energy_tail_cv = (0..self.tail_sum.len())
            .map(|i| {
                if self.tail_n == 0 {
                    return 0.0;
                }
                let n = self.tail_n as f64;
                let mean = self.tail_sum[i] / n;
                let var = (self.tail_sq[i] / n - mean * mean).max(0.0);
                if mean > 0.0 {
                    var.sqrt() / mean
                } else {
                    0.0
                }
            })
            .collect();
        let two_phase = capacity.is_some();
        Metrics {
            policy,
            v,
            seed,
            horizon: self.horizon,
            utility: total_utility(&net_rate),
            utility_admitted: total_utility(&admitted_rate),
            utility_tail_swing: if self.swing_max >= self.swing_min {
                self.swing_max - self.swing_min
            } else {
                0.0
            },
            admitted_rate,
            net_rate,
            backlog_avg: avg(self.backlog_sum),
            energy_node_avg,
            energy_avg,
            energy_tail_cv,
            max_q: self.max_q,
            max_e: self.max_e,
            virtual_backlog_avg: two_phase.then(|| avg(self.virtual_backlog_sum)),
            virtual_energy_avg: two_phase.then(|| avg(self.virtual_energy_sum)),
            capacity,
            admitted_total: self.admitted.iter().sum(),
            delivered_total: self.delivered,
            dropped_total: self.dropped_class.iter().sum(),
            backlog_final,
            masked_deficits: self.masked,
            violations: 0,
        }
    }
}
