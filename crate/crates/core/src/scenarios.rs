//! Bundled example networks.

use crate::model::Network;

pub const PAPER_FIG1_TOML: &str = include_str!("../../../scenarios/paper_fig1.toml");
pub const FIG1_INTERFERENCE_TOML: &str = include_str!("../../../scenarios/fig1_interference.toml");
pub const TOY_TWO_NODE_TOML: &str = include_str!("../../../scenarios/toy_two_node.toml");
pub const THREE_NODE_LINE_TOML: &str = include_str!("../../../scenarios/three_node_line.toml");

/// Six nodes: sources 1-3, relays 4-5, sink 6; Good/Bad channels and harvesting.
pub fn paper_fig1() -> Network {
    Network::from_toml(PAPER_FIG1_TOML).expect("bundled scenario is valid")
}

/// `paper_fig1` with cross-link interference (not node separable).
pub fn fig1_interference() -> Network {
    Network::from_toml(FIG1_INTERFERENCE_TOML).expect("bundled scenario is valid")
}

pub fn toy_two_node() -> Network {
    Network::from_toml(TOY_TWO_NODE_TOML).expect("bundled scenario is valid")
}

pub fn three_node_line() -> Network {
    Network::from_toml(THREE_NODE_LINE_TOML).expect("bundled scenario is valid")
}

/// Every bundled scenario with its name.
pub fn all() -> Vec<(&'static str, Network)> {
    vec![
        ("paper_fig1", paper_fig1()),
        ("fig1_interference", fig1_interference()),
        ("toy_two_node", toy_two_node()),
        ("three_node_line", three_node_line()),
    ]
}
