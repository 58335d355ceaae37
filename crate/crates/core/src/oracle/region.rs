//! The stationary achievable-rate region as a linear program.
//!
//! Variables are commodity rates `r_k`, per-class link flows `f_{l,c}`, and
//! mixture weights `w_{b,s,a}`: how often block `b` uses pure action `a` in its
//! local channel state `s`. A block is one node when rates are node-separable
//! (its local state is the channels of its outgoing links) and the whole
//! network otherwise. The all-zero action is implicit, so the per-state weights
//! only need to sum to at most one.

use crate::error::{Error, Result};
use crate::model::Network;

use super::simplex::Simplex;

/// Default cap on joint pure actions per channel state.
pub const ACTION_CAP: usize = 10_000;

/// A pure action available in one local state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureAction {
    /// `(link, rate)` for links with a positive rate.
    pub rates: Vec<(usize, f64)>,
    /// `(node, power)` for nodes that spend.
    pub spend: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalState {
    pub probability: f64,
    pub actions: Vec<PureAction>,
}

/// The pure actions of one block, per local channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub nodes: Vec<usize>,
    pub states: Vec<LocalState>,
}

#[derive(Debug, Clone)]
pub struct AchievableRegion {
    pub blocks: Vec<Block>,
    commodities: usize,
    /// `(link, class)` for each flow column.
    flows: Vec<(usize, usize)>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl AchievableRegion {
    /// Builds the region, failing when the joint action count exceeds `cap`.
    pub fn build(net: &Network, cap: usize) -> Result<Self> {
        let joint = net.actions().joint_count();
        if joint > cap {
            return Err(Error::TooLarge {
                what: "joint pure actions per state".into(),
                size: joint,
                cap,
            });
        }
        let blocks = if net.rate().is_node_separable() {
            node_blocks(net)
        } else {
            vec![joint_block(net)]
        };

        let graph = net.graph();
        let k = net.class_count();
        let dests = net.destinations();
        let commodities = net.commodities().len();
        let flows: Vec<(usize, usize)> = graph
            .links()
            .iter()
            .enumerate()
            .flat_map(|(l, link)| {
                (0..k)
                    .filter(move |&c| link.from != dests[c])
                    .map(move |c| (l, c))
            })
            .collect();
        let mut weights = Vec::new();
        for (bi, block) in blocks.iter().enumerate() {
            for (si, st) in block.states.iter().enumerate() {
                for ai in 0..st.actions.len() {
                    weights.push((bi, si, ai));
                }
            }
        }
        let w0 = commodities + flows.len();
        let cols = w0 + weights.len();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let row = || vec![0.0; cols];

        for i in 0..commodities {
            let mut r = row();
            r[i] = 1.0;
            a.push(r);
            b.push(net.r_max());
        }
        // admissions + inflow ≤ outflow at every non-destination node
        for n in 0..graph.node_count() {
            for c in 0..k {
                if n == dests[c] {
                    continue;
                }
                let mut r = row();
                for (i, cm) in net.commodities().iter().enumerate() {
                    if cm.source == n && cm.class == c {
                        r[i] = 1.0;
                    }
                }
                for (j, &(l, fc)) in flows.iter().enumerate() {
                    if fc != c {
                        continue;
                    }
                    let link = graph.link(l);
                    if link.to == n {
                        r[commodities + j] += 1.0;
                    }
                    if link.from == n {
                        r[commodities + j] -= 1.0;
                    }
                }
                a.push(r);
                b.push(0.0);
            }
        }
        // per-link flow within average service
        for l in 0..graph.link_count() {
            let mut r = row();
            for (j, &(fl, _)) in flows.iter().enumerate() {
                if fl == l {
                    r[commodities + j] = 1.0;
                }
            }
            for (j, &(bi, si, ai)) in weights.iter().enumerate() {
                let st = &blocks[bi].states[si];
                for &(rl, mu) in &st.actions[ai].rates {
                    if rl == l {
                        r[w0 + j] -= st.probability * mu;
                    }
                }
            }
            a.push(r);
            b.push(0.0);
        }
        // average spend within average harvest
        let harvest = net.mean_harvest();
        for (n, &h) in harvest.iter().enumerate() {
            let mut r = row();
            for (j, &(bi, si, ai)) in weights.iter().enumerate() {
                let st = &blocks[bi].states[si];
                for &(sn, p) in &st.actions[ai].spend {
                    if sn == n {
                        r[w0 + j] += st.probability * p;
                    }
                }
            }
            a.push(r);
            b.push(h.max(0.0));
        }
        // mixtures are sub-stochastic per state; the rest is the zero action
        let mut j = 0;
        for block in &blocks {
            for st in &block.states {
                let mut r = row();
                for _ in &st.actions {
                    r[w0 + j] = 1.0;
                    j += 1;
                }
                a.push(r);
                b.push(1.0);
            }
        }

        Ok(Self {
            blocks,
            commodities,
            flows,
            a,
            b,
        })
    }

    pub fn commodity_count(&self) -> usize {
        self.commodities
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn column_count(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn constraint_count(&self) -> usize {
        self.b.len()
    }

    /// A simplex tableau over the region, starting at the origin.
    pub fn simplex(&self) -> Result<Simplex> {
        Simplex::new(&self.a, &self.b)
    }

    /// Whether `x` satisfies every constraint within `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.column_count()
            && x.iter().all(|&v| v >= -tol)
            && self
                .a
                .iter()
                .zip(&self.b)
                .all(|(row, &rhs)| row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= rhs + tol)
    }
}

fn node_blocks(net: &Network) -> Vec<Block> {
    let actions = net.actions();
    let links = net.link_count();
    let mut blocks = Vec::new();
    for n in 0..net.node_count() {
        let out = actions.node_links(n);
        if out.is_empty() {
            continue;
        }
        let mut channel = vec![0usize; links];
        let mut rates = vec![0.0; out.len()];
        let states = net
            .channel_process()
            .local_distribution(out)
            .into_iter()
            .map(|(labels, probability)| {
                for (&l, &s) in out.iter().zip(&labels) {
                    channel[l] = s;
                }
                let acts = actions
                    .node_actions(n)
                    .iter()
                    .filter_map(|power| {
                        net.rate().node_rates(out, &channel, power, &mut rates);
                        let r: Vec<(usize, f64)> = out
                            .iter()
                            .zip(&rates)
                            .filter(|(_, &mu)| mu > 0.0)
                            .map(|(&l, &mu)| (l, mu))
                            .collect();
                        // zero-rate actions are dominated by the zero action
                        (!r.is_empty()).then(|| PureAction {
                            rates: r,
                            spend: vec![(n, power.iter().sum())],
                        })
                    })
                    .collect();
                LocalState {
                    probability,
                    actions: acts,
                }
            })
            .collect();
        blocks.push(Block {
            nodes: vec![n],
            states,
        });
    }
    blocks
}

fn joint_block(net: &Network) -> Block {
    let actions = net.actions();
    let links = net.link_count();
    let all: Vec<usize> = (0..links).collect();
    let mut power = vec![0.0; links];
    let mut rates = vec![0.0; links];
    let mut spend = vec![0.0; net.node_count()];
    let states = net
        .channel_process()
        .local_distribution(&all)
        .into_iter()
        .map(|(channel, probability)| {
            let mut acts = Vec::new();
            actions.for_each_joint(|choice| {
                actions.assemble(choice, &mut power);
                net.rate().rates(&channel, &power, &mut rates);
                let r: Vec<(usize, f64)> = rates
                    .iter()
                    .enumerate()
                    .filter(|(_, &mu)| mu > 0.0)
                    .map(|(l, &mu)| (l, mu))
                    .collect();
                if r.is_empty() {
                    return;
                }
                actions.node_spend(&power, &mut spend);
                acts.push(PureAction {
                    rates: r,
                    spend: spend
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(n, &p)| (n, p))
                        .collect(),
                });
            });
            LocalState {
                probability,
                actions: acts,
            }
        })
        .collect();
    Block {
        nodes: (0..net.node_count()).collect(),
        states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn fig1_blocks_are_per_node() {
        let net = scenarios::paper_fig1();
        let reg = AchievableRegion::build(&net, ACTION_CAP).unwrap();
        // five transmitting nodes; relay 4 has two out-links so four local states
        assert_eq!(reg.blocks.len(), 5);
        assert_eq!(reg.blocks[3].nodes, vec![3]);
        assert_eq!(reg.blocks[3].states.len(), 4);
        let p: f64 = reg.blocks[3].states.iter().map(|s| s.probability).sum();
        assert!((p - 1.0).abs() < 1e-12);
        // {0,1}, {1,0}, {1,1}
        assert!(reg.blocks[3].states.iter().all(|s| s.actions.len() == 3));
        assert!(reg.contains(&vec![0.0; reg.column_count()], 0.0));
    }

    #[test]
    fn interference_uses_one_joint_block() {
        let net = scenarios::fig1_interference();
        let reg = AchievableRegion::build(&net, ACTION_CAP).unwrap();
        assert_eq!(reg.blocks.len(), 1);
        assert_eq!(reg.blocks[0].states.len(), 64);
        assert!(reg.blocks[0].states.iter().all(|s| s.actions.len() == 63));
    }

    #[test]
    fn cap_is_enforced() {
        let net = scenarios::paper_fig1();
        let err = AchievableRegion::build(&net, 10).unwrap_err();
        assert!(matches!(err, Error::TooLarge { size: 64, cap: 10, .. }), "{err}");
    }
}
