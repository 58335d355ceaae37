//! Network description: graph, commodities, rate-power model, random state
//! processes, and the scalar parameters derived from them.

pub mod config;
pub mod graph;
pub mod process;
pub mod rate;
pub mod utility;

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
pub use config::RawConfig;
use config::{Harvest, ProcessKind, ProcessSection, RateKind};
pub use graph::{Link, NetworkGraph};
pub use process::{ProcessBank, Scope, StateProcess};
pub use rate::{check_rate_properties, ActionSpace, LinearRate, RateFunction, RateReport};
pub use utility::Utility;

/// Joint-action cap for rate functions that do not decompose per node.
pub const JOINT_ACTION_CAP: usize = 1 << 20;

/// One admission point: traffic entering at `source` bound for `destination`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Commodity {
    /// 0-based.
    pub source: usize,
    /// 0-based.
    pub destination: usize,
    /// Index of the destination among the network's destination classes.
    pub class: usize,
    pub utility: Utility,
}

/// A validated, immutable network description.
#[derive(Clone)]
pub struct Network {
    raw: RawConfig,
    graph: NetworkGraph,
    commodities: Vec<Commodity>,
    destinations: Vec<usize>,
    rate: Arc<dyn RateFunction>,
    actions: ActionSpace,
    channel: ProcessBank,
    channel_labels: Vec<String>,
    energy: ProcessBank,
    harvest: Vec<Vec<f64>>,
    r_max: f64,
    p_max: f64,
    delta: f64,
    beta: f64,
    h_max: f64,
    warnings: Vec<String>,
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("nodes", &self.graph.node_count())
            .field("links", &self.graph.link_count())
            .field("commodities", &self.commodities.len())
            .finish()
    }
}

impl Network {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_raw(RawConfig::from_toml(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Checks every invariant of the raw configuration and derives the
    /// network-level constants.
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let graph = NetworkGraph::from_pairs(raw.graph.nodes, &raw.graph.links)?;
        let n = graph.node_count();
        let p = &raw.params;

        if !(p.r_max.is_finite() && p.r_max > 0.0) {
            return Err(Error::config("params.r_max", format!("must be positive, got {}", p.r_max)));
        }
        if !(p.delta.is_finite() && p.delta > 0.0) {
            return Err(Error::config("params.delta", format!("must be positive, got {}", p.delta)));
        }
        if let Some(v) = p.v {
            check_v(v)?;
        }

        if raw.commodities.is_empty() {
            return Err(Error::config("commodities", "at least one commodity is required"));
        }
        let mut destinations: Vec<usize> = Vec::new();
        for (i, c) in raw.commodities.iter().enumerate() {
            let field = format!("commodities[{i}]");
            for (name, id) in [("source", c.source), ("destination", c.destination)] {
                if id == 0 || id > n {
                    return Err(Error::config(
                        format!("{field}.{name}"),
                        format!("node id {id} outside 1..={n}"),
                    ));
                }
            }
            if c.source == c.destination {
                return Err(Error::config(field, "source equals destination"));
            }
            if raw.commodities[..i]
                .iter()
                .any(|d| d.source == c.source && d.destination == c.destination)
            {
                return Err(Error::config(field, "duplicate (source, destination) pair"));
            }
            c.utility.validate(&format!("{field}.utility"), p.r_max)?;
            destinations.push(c.destination - 1);
        }
        destinations.sort_unstable();
        destinations.dedup();
        let commodities = raw
            .commodities
            .iter()
            .map(|c| Commodity {
                source: c.source - 1,
                destination: c.destination - 1,
                class: destinations.binary_search(&(c.destination - 1)).unwrap(),
                utility: c.utility,
            })
            .collect::<Vec<_>>();
        let beta = commodities
            .iter()
            .map(|c| c.utility.beta())
            .fold(0.0, f64::max);

        let rp = &raw.rate_power;
        let actions = ActionSpace::new(&graph, &rp.power_levels, p.p_max)?;
        let channel_template = build_process("channel_process", &raw.channel_process)?;
        if rp.gains.len() != channel_template.state_count() {
            return Err(Error::config(
                "rate_power.gains",
                format!(
                    "expected one gain per channel state ({}), got {}",
                    channel_template.state_count(),
                    rp.gains.len()
                ),
            ));
        }
        if let Some(g) = rp.gains.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(Error::config("rate_power.gains", format!("invalid gain {g}")));
        }
        if !(rp.interference.is_finite() && rp.interference >= 0.0) {
            return Err(Error::config(
                "rate_power.interference",
                format!("must be nonnegative, got {}", rp.interference),
            ));
        }
        let rate: Arc<dyn RateFunction> = match rp.kind {
            RateKind::Linear => Arc::new(LinearRate::new(
                rp.gains.clone(),
                rp.interference,
                actions.max_level(),
            )),
        };
        if !rate.is_node_separable() && actions.joint_count() > JOINT_ACTION_CAP {
            return Err(Error::TooLarge {
                what: "joint power actions".into(),
                size: actions.joint_count(),
                cap: JOINT_ACTION_CAP,
            });
        }
        let channel = match raw.channel_process.scope {
            Scope::Shared => ProcessBank::new(channel_template, true, graph.link_count()),
            Scope::PerLink => ProcessBank::new(channel_template, false, graph.link_count()),
            Scope::PerNode => {
                return Err(Error::config(
                    "channel_process.scope",
                    "channel states attach to links: use `shared` or `per_link`",
                ))
            }
        };

        let energy_template = build_process("energy_process", &raw.energy_process)?;
        let k = energy_template.state_count();
        let harvest = match &raw.energy_process.harvest {
            None => return Err(Error::config("energy_process.harvest", "missing")),
            Some(Harvest::Uniform(row)) => {
                check_harvest_row("energy_process.harvest", row, k)?;
                vec![row.clone(); n]
            }
            Some(Harvest::PerNode(rows)) => {
                if rows.len() != n {
                    return Err(Error::config(
                        "energy_process.harvest",
                        format!("expected {n} rows (one per node), got {}", rows.len()),
                    ));
                }
                for (i, row) in rows.iter().enumerate() {
                    check_harvest_row(&format!("energy_process.harvest[{i}]"), row, k)?;
                }
                rows.clone()
            }
        };
        let energy = match raw.energy_process.scope {
            Scope::Shared => ProcessBank::new(energy_template, true, n),
            Scope::PerNode => ProcessBank::new(energy_template, false, n),
            Scope::PerLink => {
                return Err(Error::config(
                    "energy_process.scope",
                    "energy states attach to nodes: use `shared` or `per_node`",
                ))
            }
        };
        let h_max = harvest.iter().flatten().cloned().fold(0.0, f64::max);

        let mut warnings = Vec::new();
        if let Some(theta) = &p.theta {
            if theta.len() != n {
                return Err(Error::config(
                    "params.theta",
                    format!("expected {n} entries, got {}", theta.len()),
                ));
            }
            if let Some(t) = theta.iter().find(|t| !t.is_finite() || **t <= 0.0) {
                return Err(Error::config("params.theta", format!("entries must be positive, got {t}")));
            }
            warnings.push(
                "params.theta overrides the derived perturbation; queue bounds and energy \
                 feasibility are no longer guaranteed"
                    .into(),
            );
        }

        Ok(Self {
            channel_labels: raw.channel_process.states.clone(),
            graph,
            commodities,
            destinations,
            rate,
            actions,
            channel,
            energy,
            harvest,
            r_max: p.r_max,
            p_max: p.p_max,
            delta: p.delta,
            beta,
            h_max,
            warnings,
            raw,
        })
    }

    /// Swaps in a custom rate function (same link count and label set).
    pub fn with_rate_function(mut self, rate: Arc<dyn RateFunction>) -> Result<Self> {
        if !rate.is_node_separable() && self.actions.joint_count() > JOINT_ACTION_CAP {
            return Err(Error::TooLarge {
                what: "joint power actions".into(),
                size: self.actions.joint_count(),
                cap: JOINT_ACTION_CAP,
            });
        }
        self.rate = rate;
        Ok(self)
    }

    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn link_count(&self) -> usize {
        self.graph.link_count()
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    /// 0-based destination nodes, one per data-queue class, ascending.
    pub fn destinations(&self) -> &[usize] {
        &self.destinations
    }

    pub fn class_count(&self) -> usize {
        self.destinations.len()
    }

    pub fn rate(&self) -> &dyn RateFunction {
        self.rate.as_ref()
    }

    pub fn actions(&self) -> &ActionSpace {
        &self.actions
    }

    /// Fresh (unstarted) channel process bank.
    pub fn channel_process(&self) -> &ProcessBank {
        &self.channel
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn energy_process(&self) -> &ProcessBank {
        &self.energy
    }

    /// Harvestable energy of `node` when its energy chain is in `state`.
    pub fn harvest(&self, node: usize, state: usize) -> f64 {
        self.harvest[node][state]
    }

    /// Stationary mean harvestable energy per node.
    pub fn mean_harvest(&self) -> Vec<f64> {
        let pi = self.energy.template().stationary();
        self.harvest
            .iter()
            .map(|row| row.iter().zip(pi).map(|(h, p)| h * p).sum())
            .collect()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Largest utility slope at zero over all commodities.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn mu_max(&self) -> f64 {
        self.rate.mu_max()
    }

    pub fn d_max(&self) -> usize {
        self.graph.d_max()
    }

    /// Warnings raised during validation (e.g. a perturbation override).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// V from the config, or 100 when absent.
    pub fn default_v(&self) -> f64 {
        self.raw.params.v.unwrap_or(100.0)
    }

    /// Phase-I length for the two-phase scheme: the configured value or 50 V.
    pub fn phase1_slots(&self, v: f64) -> u64 {
        self.raw
            .params
            .phase1_t
            .unwrap_or_else(|| (50.0 * v).round() as u64)
    }

    /// Derived constants for a given V.
    pub fn params(&self, v: f64) -> Result<SystemParams> {
        check_v(v)?;
        let gamma = self.r_max + self.d_max() as f64 * self.mu_max();
        let derived = self.delta * self.beta * v + self.p_max;
        let theta = match &self.raw.params.theta {
            Some(t) => t.clone(),
            None => vec![derived; self.node_count()],
        };
        let e_bound = theta.iter().map(|t| t + self.h_max).collect();
        Ok(SystemParams {
            v,
            beta: self.beta,
            delta: self.delta,
            d_max: self.d_max(),
            mu_max: self.mu_max(),
            r_max: self.r_max,
            p_max: self.p_max,
            h_max: self.h_max,
            gamma,
            theta,
            q_bound: self.beta * v + self.r_max,
            e_bound,
        })
    }
}

fn check_v(v: f64) -> Result<()> {
    if v.is_finite() && v >= 1.0 {
        Ok(())
    } else {
        Err(Error::config("params.v", format!("V must be at least 1, got {v}")))
    }
}

fn check_harvest_row(field: &str, row: &[f64], states: usize) -> Result<()> {
    if row.len() != states {
        return Err(Error::config(
            field,
            format!("expected {states} entries (one per state), got {}", row.len()),
        ));
    }
    if let Some(h) = row.iter().find(|h| !h.is_finite() || **h < 0.0) {
        return Err(Error::config(field, format!("harvest must be nonnegative, got {h}")));
    }
    Ok(())
}

fn build_process(section: &str, s: &ProcessSection) -> Result<StateProcess> {
    let prefixed = |e: Error| match e {
        Error::Config { field, message } => Error::Config {
            field: format!("{section}.{field}"),
            message,
        },
        other => other,
    };
    let process = match s.kind {
        ProcessKind::Iid => {
            let p = s.probabilities.clone().ok_or_else(|| {
                Error::config(format!("{section}.probabilities"), "required for kind = \"iid\"")
            })?;
            StateProcess::iid(p).map_err(|e| match e {
                Error::Config { message, .. } => {
                    Error::config(format!("{section}.probabilities"), message)
                }
                other => other,
            })?
        }
        ProcessKind::Markov => {
            let t = s.transition.clone().ok_or_else(|| {
                Error::config(format!("{section}.transition"), "required for kind = \"markov\"")
            })?;
            StateProcess::markov(t).map_err(prefixed)?
        }
    };
    if process.state_count() != s.states.len() {
        return Err(Error::config(
            format!("{section}.states"),
            format!(
                "{} names given for {} states",
                s.states.len(),
                process.state_count()
            ),
        ));
    }
    match s.initial {
        Some(i) => process.with_initial(i).map_err(prefixed),
        None => Ok(process),
    }
}

/// Constants derived from a validated network and a choice of V.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    pub v: f64,
    pub beta: f64,
    pub delta: f64,
    pub d_max: usize,
    pub mu_max: f64,
    pub r_max: f64,
    pub p_max: f64,
    pub h_max: f64,
    /// Link-weight offset: R_max + d_max·μ_max.
    pub gamma: f64,
    /// Per-node energy perturbation: δβV + P_max.
    pub theta: Vec<f64>,
    /// Deterministic data-queue ceiling: βV + R_max.
    pub q_bound: f64,
    /// Per-node energy ceiling: θ_n + h_max.
    pub e_bound: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn fig1_derived_constants() {
        let net = scenarios::paper_fig1();
        assert_eq!(net.d_max(), 2);
        assert_eq!(net.mu_max(), 2.0);
        assert_eq!(net.beta(), 1.0);
        assert_eq!(net.h_max(), 2.0);
        let p = net.params(100.0).unwrap();
        assert_eq!(p.gamma, 7.0);
        assert!(p.theta.iter().all(|&t| t == 2.0 * 100.0 + 2.0));
        assert_eq!(p.q_bound, 103.0);
        assert!(p.e_bound.iter().all(|&e| e == 204.0));
        let p20 = net.params(20.0).unwrap();
        assert!(p20.theta.iter().all(|&t| t == 42.0));
    }

    #[test]
    fn fig1_has_one_destination_class() {
        let net = scenarios::paper_fig1();
        assert_eq!(net.destinations(), &[5]);
        assert_eq!(net.commodities().len(), 5);
        assert!(net.commodities().iter().all(|c| c.class == 0));
        assert_eq!(net.mean_harvest(), vec![1.0; 6]);
    }

    #[test]
    fn v_below_one_rejected() {
        let net = scenarios::paper_fig1();
        assert!(net.params(0.5).is_err());
    }

    #[test]
    fn bad_transition_row_names_field() {
        let text = scenarios::PAPER_FIG1_TOML.replacen(
            "transition = [[0.7, 0.3], [0.3, 0.7]]",
            "transition = [[0.6, 0.3], [0.3, 0.7]]",
            1,
        );
        let err = Network::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("channel_process.transition[0]"), "{err}");
        assert!(err.contains("sum to 0.9"), "{err}");
    }

    #[test]
    fn validation_errors_name_fields() {
        let cases = [
            ("source = 1\ndestination = 6", "source = 6\ndestination = 6", "commodities[0]"),
            ("gains = [2.0, 1.0]", "gains = [2.0]", "rate_power.gains"),
            ("harvest = [2.0, 0.0]", "harvest = [2.0]", "energy_process.harvest"),
            ("r_max = 3.0", "r_max = -3.0", "params.r_max"),
            ("power_levels = [0.0, 1.0]", "power_levels = [1.0]", "rate_power.power_levels"),
            ("scope = \"per_link\"", "scope = \"per_node\"", "channel_process.scope"),
        ];
        for (from, to, field) in cases {
            let text = scenarios::PAPER_FIG1_TOML.replacen(from, to, 1);
            let err = Network::from_toml(&text).unwrap_err().to_string();
            assert!(err.contains(field), "expected `{field}` in: {err}");
        }
    }

    #[test]
    fn theta_override_warns() {
        let text = scenarios::PAPER_FIG1_TOML.replace(
            "v = 100.0",
            "v = 100.0\ntheta = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0]",
        );
        let net = Network::from_toml(&text).unwrap();
        assert_eq!(net.warnings().len(), 1);
        assert_eq!(net.params(100.0).unwrap().theta, vec![10.0; 6]);
    }

    #[test]
    fn round_trip_preserves_derived_parameters() {
        let net = scenarios::paper_fig1();
        let text = net.raw().to_toml().unwrap();
        let again = Network::from_toml(&text).unwrap();
        assert_eq!(again.raw(), net.raw());
        for v in [1.0, 20.0, 100.0] {
            assert_eq!(again.params(v).unwrap(), net.params(v).unwrap());
        }
    }
}
