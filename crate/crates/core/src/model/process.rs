//! Finite-state random processes driving channel and harvesting states.
//!
//! A [`StateProcess`] is a single i.i.d. or Markov chain. A [`ProcessBank`]
//! attaches chains to a set of members (links or nodes): either one shared
//! chain for all members, or an independent copy per member.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Chain {
    Iid { probabilities: Vec<f64> },
    Markov { transition: Vec<Vec<f64>> },
}

/// One finite-state chain with its current state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateProcess {
    chain: Chain,
    stationary: Vec<f64>,
    initial: Option<usize>,
    current: Option<usize>,
}

impl StateProcess {
    pub fn iid(probabilities: Vec<f64>) -> Result<Self> {
        check_distribution("probabilities", &probabilities)?;
        Ok(Self {
            stationary: probabilities.clone(),
            chain: Chain::Iid { probabilities },
            initial: None,
            current: None,
        })
    }

    pub fn markov(transition: Vec<Vec<f64>>) -> Result<Self> {
        let k = transition.len();
        if k == 0 {
            return Err(Error::config("transition", "must have at least one state"));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != k {
                return Err(Error::config(
                    format!("transition[{i}]"),
                    format!("expected {k} entries, got {}", row.len()),
                ));
            }
            check_distribution(&format!("transition[{i}]"), row)?;
        }
        check_irreducible(&transition)?;
        check_aperiodic(&transition)?;
        let stationary = stationary_distribution(&transition);
        Ok(Self {
            chain: Chain::Markov { transition },
            stationary,
            initial: None,
            current: None,
        })
    }

    /// Pins the state used on the first step instead of drawing it from the
    /// stationary distribution.
    pub fn with_initial(mut self, state: usize) -> Result<Self> {
        if state >= self.state_count() {
            return Err(Error::config(
                "initial",
                format!("state {state} out of range 0..{}", self.state_count()),
            ));
        }
        self.initial = Some(state);
        Ok(self)
    }

    pub fn state_count(&self) -> usize {
        self.stationary.len()
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn current(&self) -> Option<usize> {
        self.current
    }

    /// Forces the current state; the next step transitions out of it.
    pub fn set_current(&mut self, state: usize) {
        assert!(state < self.state_count());
        self.current = Some(state);
    }

    pub fn reset(&mut self) {
        self.current = None;
    }

    /// Advances one slot and returns the emitted state.
    ///
    /// The first step of a Markov chain draws from the stationary law (or the
    /// pinned initial state); later steps follow the transition matrix.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let next = match (&self.chain, self.current) {
            (Chain::Iid { probabilities }, _) => sample(probabilities, rng),
            (Chain::Markov { .. }, None) => match self.initial {
                Some(s) => s,
                None => sample(&self.stationary, rng),
            },
            (Chain::Markov { transition }, Some(cur)) => sample(&transition[cur], rng),
        };
        self.current = Some(next);
        next
    }
}

fn sample<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the cumulative sum; take the last state
    // with positive mass.
    probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn check_distribution(field: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::config(field, "must not be empty"));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::config(field, format!("negative or non-finite entry {x}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::config(field, format!("entries sum to {sum:.6}, expected 1")));
    }
    Ok(())
}

fn reachable_from(transition: &[Vec<f64>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; transition.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for (v, &p) in transition[u].iter().enumerate() {
            if p > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn check_irreducible(transition: &[Vec<f64>]) -> Result<()> {
    for s in 0..transition.len() {
        if let Some(t) = reachable_from(transition, s).iter().position(|r| !r) {
            return Err(Error::config(
                "transition",
                format!("chain is not irreducible: state {t} unreachable from state {s}"),
            ));
        }
    }
    Ok(())
}

/// Period via BFS levels: gcd over edges u→v of level(u) + 1 − level(v).
fn period(transition: &[Vec<f64>]) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let k = transition.len();
    let mut level = vec![u64::MAX; k];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for (v, &p) in transition[u].iter().enumerate() {
            if p > 0.0 && level[v] == u64::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0;
    for u in 0..k {
        for (v, &p) in transition[u].iter().enumerate() {
            if p > 0.0 {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
            }
        }
    }
    g
}

fn check_aperiodic(transition: &[Vec<f64>]) -> Result<()> {
    let p = period(transition);
    if p != 1 {
        return Err(Error::config(
            "transition",
            format!("chain is periodic with period {p}"),
        ));
    }
    Ok(())
}

/// Solves πP = π, Σπ = 1 by Gaussian elimination with partial pivoting.
fn stationary_distribution(transition: &[Vec<f64>]) -> Vec<f64> {
    let k = transition.len();
    // Rows: (Pᵀ − I) with the last equation replaced by Σπ = 1.
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[k - 1][j] = 1.0;
    }
    a[k - 1][k] = 1.0;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for j in col..=k {
            a[col][j] /= d;
        }
        for i in 0..k {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in col..=k {
                        a[i][j] -= f * a[col][j];
                    }
                }
            }
        }
    }
    let mut pi: Vec<f64> = a.iter().map(|row| row[k].max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    pi
}

/// How chains are attached to members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// One chain drives every member.
    Shared,
    /// Independent identically distributed copy per link.
    PerLink,
    /// Independent identically distributed copy per node.
    PerNode,
}

/// A set of chains emitting one state label per member.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessBank {
    template: StateProcess,
    chains: Vec<StateProcess>,
    shared: bool,
    members: usize,
}

impl ProcessBank {
    pub fn new(template: StateProcess, shared: bool, members: usize) -> Self {
        let copies = if shared { 1 } else { members };
        Self {
            chains: vec![template.clone(); copies],
            template,
            shared,
            members,
        }
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn is_shared(&self) -> bool {
        self.shared
    }

    pub fn template(&self) -> &StateProcess {
        &self.template
    }

    pub fn state_count(&self) -> usize {
        self.template.state_count()
    }

    pub fn reset(&mut self) {
        self.chains.iter_mut().for_each(StateProcess::reset);
    }

    /// Advances every chain one slot and writes each member's state label.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.members);
        if self.shared {
            let s = self.chains[0].step(rng);
            out.fill(s);
        } else {
            for (o, c) in out.iter_mut().zip(self.chains.iter_mut()) {
                *o = c.step(rng);
            }
        }
    }

    /// Stationary joint law of the labels of `members`, as (labels, probability)
    /// pairs with positive probability.
    pub fn local_distribution(&self, members: &[usize]) -> Vec<(Vec<usize>, f64)> {
        let pi = self.template.stationary();
        let k = pi.len();
        if self.shared || members.is_empty() {
            return (0..k)
                .filter(|&s| pi[s] > 0.0)
                .map(|s| (vec![s; members.len()], pi[s]))
                .collect();
        }
        let mut out = vec![(Vec::with_capacity(members.len()), 1.0)];
        for _ in members {
            let mut next = Vec::with_capacity(out.len() * k);
            for (labels, p) in &out {
                for (s, &ps) in pi.iter().enumerate() {
                    if ps > 0.0 {
                        let mut l = labels.clone();
                        l.push(s);
                        next.push((l, p * ps));
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Number of distinct joint label vectors over all members.
    pub fn joint_state_count(&self) -> usize {
        if self.shared {
            self.state_count()
        } else {
            self.state_count().saturating_pow(self.members as u32)
        }
    }
}
