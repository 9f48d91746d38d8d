use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ReservoirConfig, ReservoirError};

/// Integer lattice coordinates; layers are one unit apart, as are rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub fn distance_sq(&self, other: &Position) -> f64 {
        let d = |a: usize, b: usize| (a as f64 - b as f64).powi(2);
        d(self.layer, other.layer) + d(self.row, other.row) + d(self.col, other.col)
    }
}

/// `C exp(-D²/λ²)`, clamped to `[0, 1]`.
pub fn connection_probability(p1: &Position, p2: &Position, c: f64, lambda: f64) -> f64 {
    (c * (-p1.distance_sq(p2) / (lambda * lambda)).exp()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct ReservoirTopology {
    pub positions: Vec<Position>,
    /// `(pre, post)` pairs sorted by `pre` then `post`.
    pub synapses: Vec<(u32, u32)>,
    /// Initial conductance of each synapse, parallel to `synapses`.
    pub conductances: Vec<f64>,
    pub g_max: f64,
    pub neurons_per_layer: usize,
    /// `out_offsets[i]..out_offsets[i + 1]` indexes the synapses leaving neuron `i`.
    out_offsets: Vec<usize>,
    /// Synapse indices arriving at each neuron.
    incoming: Vec<Vec<u32>>,
}

impl ReservoirTopology {
    pub fn n_neurons(&self) -> usize {
        self.positions.len()
    }

    pub fn n_layers(&self) -> usize {
        self.positions.len() / self.neurons_per_layer
    }

    pub fn neuron_index(&self, p: &Position, rows: usize, cols: usize) -> usize {
        p.layer * rows * cols + p.row * cols + p.col
    }

    /// The neurons driven by input channel `channel`.
    pub fn input_neurons(&self, channel: usize) -> std::ops::Range<usize> {
        channel * self.neurons_per_layer..(channel + 1) * self.neurons_per_layer
    }

    pub fn outgoing(&self, neuron: usize) -> std::ops::Range<usize> {
        self.out_offsets[neuron]..self.out_offsets[neuron + 1]
    }

    pub fn incoming(&self, neuron: usize) -> &[u32] {
        &self.incoming[neuron]
    }

    fn from_parts(
        positions: Vec<Position>,
        synapses: Vec<(u32, u32)>,
        conductances: Vec<f64>,
        g_max: f64,
        neurons_per_layer: usize,
    ) -> Self {
        let n = positions.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut incoming = vec![Vec::new(); n];
        for (s, &(pre, post)) in synapses.iter().enumerate() {
            out_offsets[pre as usize + 1] += 1;
            incoming[post as usize].push(s as u32);
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        Self {
            positions,
            synapses,
            conductances,
            g_max,
            neurons_per_layer,
            out_offsets,
            incoming,
        }
    }
}

fn lattice(config: &ReservoirConfig) -> Vec<Position> {
    let mut positions = Vec::with_capacity(config.n_neurons());
    for layer in 0..config.n_layers {
        for row in 0..config.layer_rows {
            for col in 0..config.layer_cols {
                positions.push(Position { layer, row, col });
            }
        }
    }
    positions
}

/// Sample the random wiring: every ordered pair `(pre, post)`, `pre != post`,
/// is connected with probability [`connection_probability`]. Initial
/// conductances are drawn afterwards from the same seeded stream.
pub fn build_topology(config: &ReservoirConfig) -> Result<ReservoirTopology, ReservoirError> {
    config.validate()?;
    let positions = lattice(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut synapses = Vec::new();
    for (pre, p1) in positions.iter().enumerate() {
        for (post, p2) in positions.iter().enumerate() {
            if pre == post {
                continue;
            }
            let p = connection_probability(p1, p2, config.connection_scale, config.lambda);
            if rng.random::<f64>() < p {
                synapses.push((pre as u32, post as u32));
            }
        }
    }
    let (lo, hi) = config.init_conductance;
    let conductances = synapses
        .iter()
        .map(|_| config.g_max * (lo + (hi - lo) * rng.random::<f64>()))
        .collect();
    Ok(ReservoirTopology::from_parts(
        positions,
        synapses,
        conductances,
        config.g_max,
        config.neurons_per_layer(),
    ))
}

/// `Σ P(n1, n2)` over ordered pairs of distinct neurons.
pub fn expected_synapse_count(config: &ReservoirConfig) -> f64 {
    let positions = lattice(config);
    let mut total = 0.0;
    for (i, p1) in positions.iter().enumerate() {
        for (j, p2) in positions.iter().enumerate() {
            if i != j {
                total += connection_probability(p1, p2, config.connection_scale, config.lambda);
            }
        }
    }
    total
}
