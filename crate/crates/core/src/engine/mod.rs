//! Seeded simulation runs, sweeps over V, and their outputs.

mod metrics;
pub mod report;
mod sweep;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, Streams};
use crate::error::{Error, Result};
use crate::esa::{Esa, EsaState};
use crate::mesa::{mesa_capacity, phase1, Mesa, MesaState};
use crate::model::Network;
use crate::queues::delivered;

pub use metrics::Metrics;
use metrics::Accumulator;
pub use sweep::{linear_fit, sweep, LinearFit, SweepFits, SweepReport};

/// Default number of slots per run.
pub const DEFAULT_HORIZON: u64 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Esa,
    Mesa,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Esa => "esa",
            Policy::Mesa => "mesa",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esa" => Ok(Policy::Esa),
            "mesa" => Ok(Policy::Mesa),
            other => Err(Error::argument(
                "policy",
                format!("unknown policy `{other}`, expected `esa` or `mesa`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub policy: Policy,
    pub v: f64,
    /// Slots simulated (Phase II slots for the two-phase scheme).
    pub horizon: u64,
    pub seed: u64,
    /// Record every `stride`-th slot; `None` records nothing.
    pub trace_stride: Option<u64>,
    /// Phase I length; defaults to the config value or 50 V.
    pub phase1_t: Option<u64>,
}

impl RunOptions {
    pub fn new(policy: Policy, v: f64, horizon: u64, seed: u64) -> Self {
        Self {
            policy,
            v,
            horizon,
            seed,
            trace_stride: None,
            phase1_t: None,
        }
    }
}

/// Start-of-slot snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: u64,
    /// `(node, class)` backlogs (actual queues for the two-phase scheme).
    pub q: Vec<f64>,
    pub e: Vec<f64>,
    /// Virtual queues, two-phase scheme only.
    pub virtual_q: Option<Vec<f64>>,
    pub virtual_e: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RunTrace {
    pub stride: u64,
    pub records: Vec<TraceRecord>,
}

/// Result of [`run`]: metrics, trace, and elapsed wall-clock time. The wall
/// clock is kept out of [`Metrics`] so that metrics stay reproducible.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: RunTrace,
    pub wall_clock: Duration,
}

/// Simulates one policy on `net`. Any broken invariant aborts the run with
/// [`Error::Invariant`].
pub fn run(net: &Network, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let stride = match opts.trace_stride {
        Some(0) => return Err(Error::argument("trace_stride", "stride must be at least 1")),
        Some(s) => s,
        None => 0,
    };
    let params = net.params(opts.v)?;
    let mut trace = RunTrace {
        stride,
        records: Vec::new(),
    };
    let mut acc = Accumulator::new(net, opts.horizon);
    let mut env = Environment::new(net, opts.seed, Streams::Main);
    let mut delivered_now = vec![0.0; net.class_count()];

    let metrics = match opts.policy {
        Policy::Esa => {
            let mut esa = Esa::new(net, params);
            let mut state = EsaState::empty(net);
            for t in 0..opts.horizon {
                acc.observe_state(t, state.q.as_slice(), state.e.as_slice());
                if stride > 0 && t % stride == 0 {
                    trace.records.push(TraceRecord {
                        t,
                        q: state.q.as_slice().to_vec(),
                        e: state.e.as_slice().to_vec(),
                        virtual_q: None,
                        virtual_e: None,
                    });
                }
                env.advance();
                let a = esa.step(&mut state, env.channel(), env.harvestable(), t)?;
                for (s, r) in acc.admitted.iter_mut().zip(&a.commodity_admissions) {
                    *s += r;
                }
                delivered(net.graph(), net.destinations(), esa.transfers(), &mut delivered_now);
                acc.delivered += delivered_now.iter().sum::<f64>();
                acc.observe_utility(net, t);
            }
            acc.finish(net, opts.policy, opts.v, opts.seed, state.q.total(), None)
        }
        Policy::Mesa => {
            let m = mesa_capacity(opts.v, net.p_max(), net.h_max())?;
            let t1 = opts.phase1_t.unwrap_or_else(|| net.phase1_slots(opts.v));
            let offsets = phase1(net, &params, m, t1, opts.seed)?;
            let mut state = MesaState::start(net, offsets, m);
            let mut mesa = Mesa::new(net, params, m);
            for t in 0..opts.horizon {
                acc.observe_state(t, state.q.as_slice(), state.e.as_slice());
                acc.observe_virtual(
                    state.virtual_state.q.as_slice(),
                    state.virtual_state.e.as_slice(),
                );
                if stride > 0 && t % stride == 0 {
                    trace.records.push(TraceRecord {
                        t,
                        q: state.q.as_slice().to_vec(),
                        e: state.e.as_slice().to_vec(),
                        virtual_q: Some(state.virtual_state.q.as_slice().to_vec()),
                        virtual_e: Some(state.virtual_state.e.as_slice().to_vec()),
                    });
                }
                env.advance();
                let out = mesa.step(&mut state, env.channel(), env.harvestable(), t)?;
                acc.delivered += out.delivered.iter().sum::<f64>();
                for (s, d) in acc.dropped_class.iter_mut().zip(&out.dropped) {
                    *s += d;
                }
                acc.masked += out.masked_deficits as u64;
                for (s, r) in acc.admitted.iter_mut().zip(&mesa.action().commodity_admissions) {
                    *s += r;
                }
                acc.observe_utility(net, t);
            }
            acc.finish(net, opts.policy, opts.v, opts.seed, state.q.total(), Some(m))
        }
    };
    Ok(RunOutput {
        metrics,
        trace,
        wall_clock: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn zero_horizon_gives_zero_averages() {
        let net = scenarios::paper_fig1();
        for policy in [Policy::Esa, Policy::Mesa] {
            let mut o = RunOptions::new(policy, 100.0, 0, 1);
            o.trace_stride = Some(1);
            o.phase1_t = Some(10);
            let out = run(&net, &o).unwrap();
            assert_eq!(out.metrics.utility, 0.0);
            assert_eq!(out.metrics.backlog_avg, 0.0);
            assert_eq!(out.metrics.dropped_total, 0.0);
            assert!(out.trace.records.is_empty());
        }
    }

    #[test]
    fn trace_is_downsampled() {
        let net = scenarios::paper_fig1();
        let mut o = RunOptions::new(Policy::Esa, 20.0, 1000, 1);
        o.trace_stride = Some(100);
        let out = run(&net, &o).unwrap();
        let ts: Vec<u64> = out.trace.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, (0..10).map(|i| i * 100).collect::<Vec<_>>());
        o.trace_stride = Some(0);
        assert!(run(&net, &o).is_err());
    }

    #[test]
    fn esa_mass_balance() {
        let net = scenarios::paper_fig1();
        let m = run(&net, &RunOptions::new(Policy::Esa, 50.0, 20_000, 5)).unwrap().metrics;
        let residual = m.admitted_total - m.delivered_total - m.backlog_final;
        assert!(residual.abs() < 1e-6 * m.admitted_total, "{residual}");
        assert_eq!(m.dropped_total, 0.0);
    }

    #[test]
    fn mesa_mass_balance() {
        let net = scenarios::paper_fig1();
        let m = run(&net, &RunOptions::new(Policy::Mesa, 50.0, 20_000, 5)).unwrap().metrics;
        let residual = m.admitted_total - m.delivered_total - m.backlog_final - m.dropped_total;
        assert!(residual.abs() < 1e-6 * m.admitted_total, "{residual}");
        assert!(m.max_e <= m.capacity.unwrap());
    }

    #[test]
    fn policy_parses() {
        assert_eq!("esa".parse::<Policy>().unwrap(), Policy::Esa);
        assert!("lyapunov".parse::<Policy>().is_err());
    }
}
