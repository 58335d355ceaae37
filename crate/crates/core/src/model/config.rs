//! On-disk configuration format (TOML).
//!
//! ```toml
//! [graph]
//! nodes = 3
//! links = [[1, 2], [2, 3]]          # 1-based node ids
//!
//! [[commodities]]
//! source = 1
//! destination = 3
//! utility = { kind = "log", scale = 1.0 }   # or { kind = "zero" }
//!
//! [rate_power]
//! kind = "linear"
//! power_levels = [0.0, 1.0]         # per-link choices, must include 0
//! gains = [2.0, 1.0]                # rate per unit power, by channel state
//! interference = 0.0                # optional
//!
//! [channel_process]
//! kind = "markov"                   # or "iid" with `probabilities`
//! scope = "per_link"                # or "shared"
//! states = ["good", "bad"]
//! transition = [[0.7, 0.3], [0.3, 0.7]]
//!
//! [energy_process]
//! kind = "iid"
//! scope = "per_node"                # or "shared"
//! states = ["sun", "dark"]
//! probabilities = [0.5, 0.5]
//! harvest = [2.0, 0.0]              # by state, or one row per node
//!
//! [params]
//! r_max = 3.0
//! p_max = 2.0
//! delta = 2.0
//! v = 100.0                         # optional default for runs
//! phase1_t = 5000                   # optional; defaults to 50 V
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::process::Scope;
use crate::model::utility::Utility;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub graph: GraphSection,
    pub commodities: Vec<CommoditySection>,
    pub rate_power: RatePowerSection,
    pub channel_process: ProcessSection,
    pub energy_process: ProcessSection,
    pub params: ParamsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub nodes: usize,
    pub links: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommoditySection {
    pub source: usize,
    pub destination: usize,
    pub utility: Utility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePowerSection {
    pub kind: RateKind,
    pub power_levels: Vec<f64>,
    pub gains: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub interference: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Iid,
    Markov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub kind: ProcessKind,
    pub scope: Scope,
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<usize>,
    /// Energy only: harvestable amount per state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harvest: Option<Harvest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Harvest {
    /// Same amount for every node, indexed by state.
    Uniform(Vec<f64>),
    /// One row per node, indexed by state.
    PerNode(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub r_max: f64,
    pub p_max: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase1_t: Option<u64>,
    /// Replaces the derived perturbation. The queue and feasibility
    /// guarantees no longer apply when this is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[graph]
nodes = 2
links = [[1, 2]]

[[commodities]]
source = 1
destination = 2
utility = { kind = "log" }

[rate_power]
kind = "linear"
power_levels = [0.0, 1.0]
gains = [2.0]

[channel_process]
kind = "iid"
scope = "shared"
states = ["good"]
probabilities = [1.0]

[energy_process]
kind = "iid"
scope = "per_node"
states = ["on"]
probabilities = [1.0]
harvest = [1.0]

[params]
r_max = 3.0
p_max = 1.0
delta = 2.0
"#;

    #[test]
    fn parses_minimal_config() {
        let c = RawConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.graph.links, vec![[1, 2]]);
        assert_eq!(c.energy_process.harvest, Some(Harvest::Uniform(vec![1.0])));
        assert_eq!(c.params.v, None);
    }

    #[test]
    fn parse_errors_cite_line_and_field() {
        let bad = MINIMAL.replace("r_max = 3.0", "r_max = \"three\"");
        let err = RawConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        assert!(err.contains("r_max"), "{err}");
        let unknown = MINIMAL.replace("delta = 2.0", "delta = 2.0\nthetta = 1.0");
        let err = RawConfig::from_toml(&unknown).unwrap_err().to_string();
        assert!(err.contains("thetta"), "{err}");
    }

    #[test]
    fn serializes_back_to_equal_config() {
        let c = RawConfig::from_toml(MINIMAL).unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(RawConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn per_node_harvest_rows() {
        let text = MINIMAL.replace("harvest = [1.0]", "harvest = [[1.0], [0.0]]");
        let c = RawConfig::from_toml(&text).unwrap();
        assert_eq!(
            c.energy_process.harvest,
            Some(Harvest::PerNode(vec![vec![1.0], vec![0.0]]))
        );
    }
}
