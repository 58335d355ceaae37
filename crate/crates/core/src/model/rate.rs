//! Rate-power functions and the finite power-action sets they act on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::graph::NetworkGraph;

const FEAS_TOL: f64 = 1e-12;

/// Maps a channel state (one label per link) and a power vector (one entry
/// per link) to per-link service rates.
pub trait RateFunction: Send + Sync {
    fn rates(&self, channel: &[usize], power: &[f64], out: &mut [f64]);

    /// True when the rate of a link depends only on the powers of the node
    /// that owns it, so power allocation decomposes per node.
    fn is_node_separable(&self) -> bool;

    /// Upper bound on any link rate under any state and action.
    fn mu_max(&self) -> f64;

    /// Rates of `links` (all owned by one node) given only that node's powers.
    /// Only meaningful for separable functions.
    fn node_rates(&self, links: &[usize], channel: &[usize], power: &[f64], out: &mut [f64]) {
        let total_links = channel.len();
        let mut full = vec![0.0; total_links];
        for (&l, &p) in links.iter().zip(power) {
            full[l] = p;
        }
        let mut all = vec![0.0; total_links];
        self.rates(channel, &full, &mut all);
        for (o, &l) in out.iter_mut().zip(links) {
            *o = all[l];
        }
    }
}

/// Rate proportional to power, scaled by a per-channel-label gain, optionally
/// divided down by the total power on the other links:
/// `rate_l = gain[s_l] * P_l / (1 + interference * Σ_{k≠l} P_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRate {
    pub gains: Vec<f64>,
    #[serde(default)]
    pub interference: f64,
    max_level: f64,
}

impl LinearRate {
    pub fn new(gains: Vec<f64>, interference: f64, max_level: f64) -> Self {
        Self {
            gains,
            interference,
            max_level,
        }
    }
}

impl RateFunction for LinearRate {
    fn rates(&self, channel: &[usize], power: &[f64], out: &mut [f64]) {
        let total: f64 = if self.interference > 0.0 {
            power.iter().sum()
        } else {
            0.0
        };
        for (l, o) in out.iter_mut().enumerate() {
            let p = power[l];
            *o = if p > 0.0 {
                self.gains[channel[l]] * p / (1.0 + self.interference * (total - p))
            } else {
                0.0
            };
        }
    }

    fn is_node_separable(&self) -> bool {
        self.interference == 0.0
    }

    fn mu_max(&self) -> f64 {
        self.gains.iter().cloned().fold(0.0, f64::max) * self.max_level
    }

    fn node_rates(&self, links: &[usize], channel: &[usize], power: &[f64], out: &mut [f64]) {
        debug_assert!(self.is_node_separable());
        for ((o, &l), &p) in out.iter_mut().zip(links).zip(power) {
            *o = self.gains[channel[l]] * p;
        }
    }
}

/// Finite per-node power-action sets.
///
/// Each node chooses one level per outgoing link subject to the per-node sum
/// cap. Actions are stored sorted by total power and then lexicographically,
/// so the first maximizer found by a strict scan honors the tie rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    levels: Vec<f64>,
    p_max: f64,
    node_links: Vec<Vec<usize>>,
    node_actions: Vec<Vec<Vec<f64>>>,
    link_count: usize,
}

impl ActionSpace {
    pub fn new(graph: &NetworkGraph, levels: &[f64], p_max: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::config("rate_power.power_levels", "must not be empty"));
        }
        if let Some(x) = levels.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::config(
                "rate_power.power_levels",
                format!("levels must be finite and nonnegative, got {x}"),
            ));
        }
        if !levels.contains(&0.0) {
            return Err(Error::config(
                "rate_power.power_levels",
                "must include 0 so that zeroing a component stays feasible",
            ));
        }
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::config("params.p_max", format!("must be positive, got {p_max}")));
        }
        let mut lv = levels.to_vec();
        lv.sort_by(f64::total_cmp);
        lv.dedup();
        let node_links: Vec<Vec<usize>> = (0..graph.node_count())
            .map(|n| graph.out_links(n).to_vec())
            .collect();
        let node_actions = node_links
            .iter()
            .map(|links| enumerate_node_actions(&lv, links.len(), p_max))
            .collect();
        Ok(Self {
            levels: lv,
            p_max,
            node_links,
            node_actions,
            link_count: graph.link_count(),
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn max_level(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn node_count(&self) -> usize {
        self.node_links.len()
    }

    /// Outgoing links of `node`, matching the component order of its actions.
    pub fn node_links(&self, node: usize) -> &[usize] {
        &self.node_links[node]
    }

    pub fn node_actions(&self, node: usize) -> &[Vec<f64>] {
        &self.node_actions[node]
    }

    /// Number of joint actions (product over nodes), saturating.
    pub fn joint_count(&self) -> usize {
        self.node_actions
            .iter()
            .fold(1usize, |acc, a| acc.saturating_mul(a.len()))
    }

    /// Scatters per-node action choices into a per-link power vector.
    pub fn assemble(&self, choice: &[usize], out: &mut [f64]) {
        out.fill(0.0);
        for (n, &a) in choice.iter().enumerate() {
            for (&l, &p) in self.node_links[n].iter().zip(&self.node_actions[n][a]) {
                out[l] = p;
            }
        }
    }

    /// Per-node sums of a per-link power vector.
    pub fn node_spend(&self, power: &[f64], out: &mut [f64]) {
        for (n, links) in self.node_links.iter().enumerate() {
            out[n] = links.iter().map(|&l| power[l]).sum();
        }
    }

    /// Whether a per-link power vector is one of the enumerated actions.
    pub fn contains(&self, power: &[f64]) -> bool {
        power.len() == self.link_count
            && self.node_links.iter().enumerate().all(|(n, links)| {
                let local: Vec<f64> = links.iter().map(|&l| power[l]).collect();
                self.node_actions[n].iter().any(|a| a == &local)
            })
    }

    /// Visits every joint action as a per-node choice vector, in lexicographic
    /// order of choices.
    pub fn for_each_joint(&self, mut f: impl FnMut(&[usize])) {
        let n = self.node_actions.len();
        let mut choice = vec![0usize; n];
        loop {
            f(&choice);
            let mut i = n;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                choice[i] += 1;
                if choice[i] < self.node_actions[i].len() {
                    break;
                }
                choice[i] = 0;
            }
        }
    }
}

fn enumerate_node_actions(levels: &[f64], width: usize, p_max: f64) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(width)];
    for _ in 0..width {
        let mut next = Vec::new();
        for a in &out {
            for &lv in levels {
                let mut b = a.clone();
                b.push(lv);
                if b.iter().sum::<f64>() <= p_max + FEAS_TOL {
                    next.push(b);
                }
            }
        }
        out = next;
    }
    out.sort_by(|a, b| {
        let ta: f64 = a.iter().sum();
        let tb: f64 = b.iter().sum();
        ta.total_cmp(&tb).then_with(|| cmp_lex(a, b))
    });
    out
}

pub(crate) fn cmp_lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Outcome of checking the two structural rate properties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// Number of (state, action, zeroed component) triples examined.
    pub checks: usize,
    /// True when every state/action pair was enumerated rather than sampled.
    pub exhaustive: bool,
    pub max_rate_seen: f64,
    pub violations: Vec<RateViolation>,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateViolation {
    pub property: &'static str,
    pub channel: Vec<usize>,
    pub power: Vec<f64>,
    /// Link whose power was zeroed, when applicable.
    pub zeroed_link: Option<usize>,
    /// Link whose rate broke the property.
    pub link: usize,
    pub detail: String,
}

const MAX_REPORTED: usize = 16;

/// Checks, over (state, action) pairs, that
/// * rate on a link is at most its rate with that link's power zeroed plus
///   `delta` times the power (linear upper bound),
/// * zeroing one link's power never lowers another link's rate,
/// * rates stay in `[0, mu_max]`, and zeroed actions remain feasible.
///
/// Enumerates every pair when there are at most `sample_count` of them and
/// samples `sample_count` pairs otherwise.
pub fn check_rate_properties(
    model: &dyn RateFunction,
    actions: &ActionSpace,
    channel_labels: usize,
    delta: f64,
    sample_count: usize,
    seed: u64,
) -> RateReport {
    let links = actions.link_count();
    let state_total = channel_labels.checked_pow(links as u32);
    let joint_total = actions.joint_count();
    let pair_total = state_total.and_then(|s| s.checked_mul(joint_total));
    let exhaustive = matches!(pair_total, Some(t) if t <= sample_count);

    let mut report = RateReport {
        checks: 0,
        exhaustive,
        max_rate_seen: 0.0,
        violations: Vec::new(),
    };
    let mut power = vec![0.0; links];
    let mut channel = vec![0usize; links];
    let check = |channel: &[usize], power: &[f64], report: &mut RateReport| {
        check_pair(model, actions, delta, channel, power, report);
    };

    if exhaustive {
        let states = state_total.unwrap();
        for s in 0..states {
            let mut x = s;
            for c in channel.iter_mut() {
                *c = x % channel_labels;
                x /= channel_labels;
            }
            actions.for_each_joint(|choice| {
                actions.assemble(choice, &mut power);
                check(&channel, &power, &mut report);
            });
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut choice = vec![0usize; actions.node_count()];
        for _ in 0..sample_count {
            channel
                .iter_mut()
                .for_each(|c| *c = rng.random_range(0..channel_labels));
            for (n, c) in choice.iter_mut().enumerate() {
                *c = rng.random_range(0..actions.node_actions(n).len());
            }
            actions.assemble(&choice, &mut power);
            check(&channel, &power, &mut report);
        }
    }
    report
}

fn check_pair(
    model: &dyn RateFunction,
    actions: &ActionSpace,
    delta: f64,
    channel: &[usize],
    power: &[f64],
    report: &mut RateReport,
) {
    let links = power.len();
    let mu_max = model.mu_max();
    let mut rates = vec![0.0; links];
    let mut zeroed_rates = vec![0.0; links];
    model.rates(channel, power, &mut rates);
    let push = |report: &mut RateReport, v: RateViolation| {
        if report.violations.len() < MAX_REPORTED {
            report.violations.push(v);
        }
    };
    for (l, &r) in rates.iter().enumerate() {
        report.max_rate_seen = report.max_rate_seen.max(r);
        if !(0.0..=mu_max + FEAS_TOL).contains(&r) {
            push(
                report,
                RateViolation {
                    property: "rate_cap",
                    channel: channel.to_vec(),
                    power: power.to_vec(),
                    zeroed_link: None,
                    link: l,
                    detail: format!("rate {r} outside [0, {mu_max}]"),
                },
            );
        }
    }
    let mut spend = vec![0.0; actions.node_count()];
    actions.node_spend(power, &mut spend);
    if let Some((n, s)) = spend
        .iter()
        .enumerate()
        .find(|(_, s)| **s > actions.p_max() + FEAS_TOL)
    {
        push(
            report,
            RateViolation {
                property: "power_cap",
                channel: channel.to_vec(),
                power: power.to_vec(),
                zeroed_link: None,
                link: actions.node_links(n).first().copied().unwrap_or(0),
                detail: format!("node {} spends {s} > P_max {}", n + 1, actions.p_max()),
            },
        );
    }
    let mut zeroed = power.to_vec();
    for z in 0..links {
        if power[z] == 0.0 {
            continue;
        }
        report.checks += 1;
        zeroed[z] = 0.0;
        if !actions.contains(&zeroed) {
            push(
                report,
                RateViolation {
                    property: "zeroing_closure",
                    channel: channel.to_vec(),
                    power: power.to_vec(),
                    zeroed_link: Some(z),
                    link: z,
                    detail: "zeroed action not in feasible set".into(),
                },
            );
        }
        model.rates(channel, &zeroed, &mut zeroed_rates);
        let bound = zeroed_rates[z] + delta * power[z];
        if rates[z] > bound + FEAS_TOL {
            push(
                report,
                RateViolation {
                    property: "linear_bound",
                    channel: channel.to_vec(),
                    power: power.to_vec(),
                    zeroed_link: Some(z),
                    link: z,
                    detail: format!("rate {} > {} + delta*{}", rates[z], zeroed_rates[z], power[z]),
                },
            );
        }
        for l in (0..links).filter(|&l| l != z) {
            if rates[l] > zeroed_rates[l] + FEAS_TOL {
                push(
                    report,
                    RateViolation {
                        property: "monotone_others",
                        channel: channel.to_vec(),
                        power: power.to_vec(),
                        zeroed_link: Some(z),
                        link: l,
                        detail: format!(
                            "zeroing link {z} lowered rate on link {l} from {} to {}",
                            rates[l], zeroed_rates[l]
                        ),
                    },
                );
            }
        }
        zeroed[z] = power[z];
    }
}
