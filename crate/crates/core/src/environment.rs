//! Random channel and harvesting states, drawn from seeded substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Network, ProcessBank};

/// Which pair of substreams a run draws from.
///
/// Plain runs and the second phase of the two-phase scheme share
/// [`Streams::Main`], so both policies see the same channel and harvest
/// sample path for a given seed. The learning phase uses its own pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Streams {
    Main,
    Learning,
}

impl Streams {
    fn ids(self) -> (u64, u64) {
        match self {
            Streams::Main => (0, 1),
            Streams::Learning => (2, 3),
        }
    }
}

/// Owns the state processes of one run and their generators.
pub struct Environment {
    channel: ProcessBank,
    energy: ProcessBank,
    channel_rng: ChaCha8Rng,
    energy_rng: ChaCha8Rng,
    channel_state: Vec<usize>,
    energy_state: Vec<usize>,
    harvestable: Vec<f64>,
    harvest_table: Vec<Vec<f64>>,
}

impl Environment {
    pub fn new(net: &Network, seed: u64, streams: Streams) -> Self {
        let (cs, es) = streams.ids();
        let mut channel_rng = ChaCha8Rng::seed_from_u64(seed);
        channel_rng.set_stream(cs);
        let mut energy_rng = ChaCha8Rng::seed_from_u64(seed);
        energy_rng.set_stream(es);
        let mut channel = net.channel_process().clone();
        channel.reset();
        let mut energy = net.energy_process().clone();
        energy.reset();
        let k = energy.state_count();
        Self {
            channel_state: vec![0; net.link_count()],
            energy_state: vec![0; net.node_count()],
            harvestable: vec![0.0; net.node_count()],
            harvest_table: (0..net.node_count())
                .map(|n| (0..k).map(|s| net.harvest(n, s)).collect())
                .collect(),
            channel,
            energy,
            channel_rng,
            energy_rng,
        }
    }

    /// Draws the next slot's states.
    pub fn advance(&mut self) {
        self.channel.step(&mut self.channel_rng, &mut self.channel_state);
        self.energy.step(&mut self.energy_rng, &mut self.energy_state);
        for (n, h) in self.harvestable.iter_mut().enumerate() {
            *h = self.harvest_table[n][self.energy_state[n]];
        }
    }

    /// Channel label per link for the current slot.
    pub fn channel(&self) -> &[usize] {
        &self.channel_state
    }

    /// Energy label per node for the current slot.
    pub fn energy_states(&self) -> &[usize] {
        &self.energy_state
    }

    /// Harvestable energy per node for the current slot.
    pub fn harvestable(&self) -> &[f64] {
        &self.harvestable
    }
}
