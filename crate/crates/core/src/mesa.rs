//! Two-phase variant with small actual buffers.
//!
//! Phase I runs the plain algorithm on virtual queues to locate the point the
//! backlogs settle around. Phase II keeps running it on virtual queues started
//! at that point, minus a margin of `M / 2`, and mirrors the decisions onto
//! actual queues whose batteries hold at most `M = 4 (ln V)²`. Transmissions
//! whose virtual battery is outside the safe window are dropped.

use serde::Serialize;

use crate::environment::{Environment, Streams};
use crate::error::{Error, Result, Violation, ViolationKind};
use crate::esa::{Esa, EsaState, SlotAction};
use crate::model::{Network, SystemParams};
use crate::queues::{enqueue, serve_departures, DataQueues, EnergyQueues};

/// Relative slack on the per-slot actual-queue checks. Actual and virtual
/// queues accumulate rounding separately when harvests or rates are not
/// integers, so the allowance scales with the virtual level being compared.
pub const SAMPLE_PATH_SLACK: f64 = 1e-9;

fn slack(scale: f64) -> f64 {
    SAMPLE_PATH_SLACK * (1.0 + scale.abs())
}

/// Battery capacity `4 (ln V)²`. Fails unless `M / 2` exceeds both `P_max`
/// and `h_max`.
pub fn mesa_capacity(v: f64, p_max: f64, h_max: f64) -> Result<f64> {
    if !(v.is_finite() && v >= 1.0) {
        return Err(Error::argument("v", format!("V must be at least 1, got {v}")));
    }
    let m = 4.0 * v.ln().powi(2);
    let alpha = p_max.max(h_max);
    if m / 2.0 <= alpha {
        return Err(Error::argument(
            "v",
            format!(
                "capacity M = 4 (ln V)^2 = {m:.4} needs M/2 > max(P_max, h_max) = {alpha}; increase V"
            ),
        ));
    }
    Ok(m)
}

/// Learned offsets subtracted from the virtual queues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offsets {
    /// `(node, class)` data offsets.
    pub q: Vec<f64>,
    /// Per-node energy offsets.
    pub e: Vec<f64>,
}

impl Offsets {
    /// `[x - M/2]⁺` of every queue in `state`.
    pub fn from_state(state: &EsaState, m: f64) -> Self {
        let half = m / 2.0;
        Self {
            q: state.q.as_slice().iter().map(|x| (x - half).max(0.0)).collect(),
            e: state.e.as_slice().iter().map(|x| (x - half).max(0.0)).collect(),
        }
    }
}

/// Runs the plain algorithm for `t` slots from empty queues on the learning
/// substreams and returns the resulting offsets.
pub fn phase1(net: &Network, params: &SystemParams, m: f64, t: u64, seed: u64) -> Result<Offsets> {
    if t == 0 {
        return Err(Error::argument("phase1_t", "Phase I needs at least one slot"));
    }
    let mut env = Environment::new(net, seed, Streams::Learning);
    let mut esa = Esa::new(net, params.clone());
    let mut state = EsaState::empty(net);
    for slot in 0..t {
        env.advance();
        esa.step(&mut state, env.channel(), env.harvestable(), slot)?;
    }
    Ok(Offsets::from_state(&state, m))
}

/// Phase II state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MesaState {
    pub virtual_state: EsaState,
    pub offsets: Offsets,
    pub q: DataQueues,
    pub e: EnergyQueues,
    pub m: f64,
}

impl MesaState {
    /// Virtual queues at the offsets, actual queues empty.
    pub fn start(net: &Network, offsets: Offsets, m: f64) -> Self {
        let mut virtual_state = EsaState::empty(net);
        for n in 0..net.node_count() {
            for c in 0..net.class_count() {
                virtual_state.q.set(n, c, offsets.q[n * net.class_count() + c]);
            }
            virtual_state.e.set(n, offsets.e[n]);
        }
        Self {
            virtual_state,
            q: DataQueues::new(net.node_count(), net.destinations()),
            e: EnergyQueues::new(net.node_count()),
            offsets,
            m,
        }
    }
}

/// What happened to actual traffic in one Phase II slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotOutcome {
    /// Delivered to destinations, per class.
    pub delivered: Vec<f64>,
    /// Dropped, per class.
    pub dropped: Vec<f64>,
    /// Nodes that were asked to spend more than their actual battery held.
    pub masked_deficits: usize,
}

/// Phase II decision and update engine.
pub struct Mesa<'a> {
    esa: Esa<'a>,
    m: f64,
    q_hat: Vec<f64>,
    e_hat: Vec<f64>,
    in_window: Vec<bool>,
    weights: Vec<f64>,
    transfers: Vec<f64>,
    arrivals: Vec<f64>,
    outcome: SlotOutcome,
}

impl<'a> Mesa<'a> {
    pub fn new(net: &'a Network, params: SystemParams, m: f64) -> Self {
        let (n, l, k) = (net.node_count(), net.link_count(), net.class_count());
        Self {
            esa: Esa::new(net, params),
            m,
            q_hat: vec![0.0; n * k],
            e_hat: vec![0.0; n],
            in_window: vec![false; n],
            weights: vec![0.0; l * k],
            transfers: vec![0.0; l * k],
            arrivals: vec![0.0; n * k],
            outcome: SlotOutcome {
                delivered: vec![0.0; k],
                dropped: vec![0.0; k],
                masked_deficits: 0,
            },
        }
    }

    pub fn params(&self) -> &SystemParams {
        self.esa.params()
    }

    pub fn action(&self) -> &SlotAction {
        self.esa.action()
    }

    /// Actual per-(link, class) amounts moved by the last step, including
    /// amounts later dropped.
    pub fn transfers(&self) -> &[f64] {
        &self.transfers
    }

    /// Advances virtual and actual queues by one slot.
    pub fn step(
        &mut self,
        st: &mut MesaState,
        channel: &[usize],
        harvestable: &[f64],
        slot: u64,
    ) -> Result<&SlotOutcome> {
        let net = self.esa.network();
        let graph = net.graph();
        let k = net.class_count();
        let m = self.m;
        let p_max = self.esa.params().p_max;

        self.q_hat.copy_from_slice(st.virtual_state.q.as_slice());
        self.e_hat.copy_from_slice(st.virtual_state.e.as_slice());
        // Virtual queues follow the unmodified algorithm, bounds included.
        self.esa.step(&mut st.virtual_state, channel, harvestable, slot)?;
        self.weights.copy_from_slice(&self.esa.weights().per_class);
        let a = self.esa.action();

        let out = &mut self.outcome;
        out.delivered.fill(0.0);
        out.dropped.fill(0.0);
        out.masked_deficits = 0;

        for n in 0..net.node_count() {
            let (e_hat, e_off, e) = (self.e_hat[n], st.offsets.e[n], st.e.get(n));
            let (spend, harvest) = (a.spend[n], a.harvest[n]);
            self.in_window[n] = e_hat >= e_off + p_max && e_hat <= e_off + m;
            let next = if e_hat < e_off {
                if spend > e {
                    out.masked_deficits += 1;
                }
                let trimmed = (harvest - (e_off - e_hat)).max(0.0);
                ((e - spend).max(0.0) + trimmed).min(m)
            } else if e_hat > e_off + m {
                (e + harvest).min(m)
            } else {
                if spend > e {
                    out.masked_deficits += 1;
                }
                ((e - spend).max(0.0) + harvest).min(m)
            };
            st.e.set(n, next);
        }

        serve_departures(&mut st.q, graph, &a.class_rates, &self.weights, &mut self.transfers);
        self.arrivals.copy_from_slice(&a.admissions);
        for (l, link) in graph.links().iter().enumerate() {
            for c in 0..k {
                let x = self.transfers[l * k + c];
                if x == 0.0 {
                    continue;
                }
                if !self.in_window[link.from] {
                    out.dropped[c] += x;
                } else if link.to == net.destinations()[c] {
                    out.delivered[c] += x;
                } else {
                    self.arrivals[link.to * k + c] += x;
                }
            }
        }
        for n in 0..net.node_count() {
            for c in 0..k {
                if n == net.destinations()[c] {
                    continue;
                }
                let i = n * k + c;
                let arriving = self.arrivals[i];
                let gap = st.offsets.q[i] - self.q_hat[i];
                let kept = if gap > 0.0 { (arriving - gap).max(0.0) } else { arriving };
                out.dropped[c] += arriving - kept;
                enqueue(&mut st.q, n, c, kept);
            }
        }

        check_sample_path(self.esa.params(), st, slot + 1)?;
        Ok(&self.outcome)
    }
}

/// Checks the actual queues against the virtual ones:
/// `Q ≤ [Q̂ - 𝒬]⁺ + γ`, `min([Ê - ℰ]⁺, M) ≤ E`, and `0 ≤ E ≤ M`.
pub fn check_sample_path(params: &SystemParams, st: &MesaState, slot: u64) -> Result<()> {
    let k = st.q.class_count();
    for n in 0..st.q.node_count() {
        for c in 0..k {
            let i = n * k + c;
            let bound = (st.virtual_state.q.get(n, c) - st.offsets.q[i]).max(0.0) + params.gamma;
            let x = st.q.get(n, c);
            if x < 0.0 || x > bound + slack(st.virtual_state.q.get(n, c)) {
                return Err(Error::Invariant(Violation {
                    kind: ViolationKind::ActualDataBound,
                    slot,
                    node: n + 1,
                    destination: Some(st.q.destination(c) + 1),
                    value: x,
                    bound,
                }));
            }
        }
        let e = st.e.get(n);
        if !(0.0..=st.m).contains(&e) {
            return Err(Error::Invariant(Violation {
                kind: ViolationKind::ActualEnergyCapacity,
                slot,
                node: n + 1,
                destination: None,
                value: e,
                bound: st.m,
            }));
        }
        let floor = (st.virtual_state.e.get(n) - st.offsets.e[n]).max(0.0).min(st.m);
        if e < floor - slack(st.virtual_state.e.get(n)) {
            return Err(Error::Invariant(Violation {
                kind: ViolationKind::ActualEnergyFloor,
                slot,
                node: n + 1,
                destination: None,
                value: e,
                bound: floor,
            }));
        }
    }
    Ok(())
}
