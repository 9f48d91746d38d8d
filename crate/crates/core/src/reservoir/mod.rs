//! Liquid state machine: a tonotopic lattice of leaky integrate-and-fire
//! neurons, one 3x3 layer per input channel, with distance-dependent random
//! wiring and pair-based STDP on every synapse.

mod encode;
mod lif;
mod simulate;
mod state_io;
mod stdp;
mod topology;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use encode::{encode_input, InputDrive};
pub use lif::{lif_step, LifParams, LifState};
pub use simulate::{simulate, Reservoir, SimulationOutcome};
pub use state_io::{read_state, write_state, StateHeader, STATE_MAGIC};
pub use stdp::{stdp_delta, StdpRule};
pub use topology::{
    build_topology, connection_probability, expected_synapse_count, Position, ReservoirTopology,
};

#[derive(Debug, Error)]
pub enum ReservoirError {
    #[error("invalid reservoir configuration: {0}")]
    InvalidConfig(String),
    #[error("neuron {neuron} reached a non-finite state at step {step}")]
    NonFinite { neuron: usize, step: usize },
    #[error("map has {channels} channels but the reservoir has {layers} layers")]
    ChannelMismatch { channels: usize, layers: usize },
    #[error("malformed state file: {0}")]
    MalformedState(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReservoirConfig {
    pub n_layers: usize,
    pub layer_rows: usize,
    pub layer_cols: usize,
    /// Connection-probability scale `C`.
    pub connection_scale: f64,
    /// Connection reach `λ`, in lattice units.
    pub lambda: f64,
    pub tau_plus_ms: f64,
    /// `τ₋ / τ₊`.
    pub tau_minus_ratio: f64,
    /// Potentiation magnitude `A₊`; defaults to `0.005 g_max` when unset.
    pub a_plus: Option<f64>,
    /// `A₋ / A₊`.
    pub a_minus_ratio: f64,
    /// Synaptic conductance ceiling, in units of the leak conductance.
    pub g_max: f64,
    /// Input conductance at a fully driven frame, in units of the leak conductance.
    pub g_in_max: f64,
    /// Initial conductances are uniform in `[lo, hi] * g_max`.
    pub init_conductance: (f64, f64),
    pub dt_ms: f64,
    pub rng_seed: u64,
    pub lif: LifParams,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            n_layers: 77,
            layer_rows: 3,
            layer_cols: 3,
            connection_scale: 1.0,
            lambda: 3.4,
            tau_plus_ms: 20.0,
            tau_minus_ratio: 5.0,
            a_plus: None,
            a_minus_ratio: 1.05,
            g_max: 0.02,
            g_in_max: 0.5,
            init_conductance: (0.4, 0.6),
            dt_ms: 0.1,
            rng_seed: 1,
            lif: LifParams::default(),
        }
    }
}

impl ReservoirConfig {
    pub fn neurons_per_layer(&self) -> usize {
        self.layer_rows * self.layer_cols
    }

    pub fn n_neurons(&self) -> usize {
        self.n_layers * self.neurons_per_layer()
    }

    pub fn tau_minus_ms(&self) -> f64 {
        self.tau_plus_ms * self.tau_minus_ratio
    }

    pub fn a_plus(&self) -> f64 {
        self.a_plus.unwrap_or(0.005 * self.g_max)
    }

    pub fn a_minus(&self) -> f64 {
        self.a_plus() * self.a_minus_ratio
    }

    pub fn stdp_rule(&self) -> StdpRule {
        StdpRule {
            a_plus: self.a_plus(),
            a_minus: self.a_minus(),
            tau_plus_ms: self.tau_plus_ms,
            tau_minus_ms: self.tau_minus_ms(),
        }
    }

    pub fn validate(&self) -> Result<(), ReservoirError> {
        let bad = |msg: &str| Err(ReservoirError::InvalidConfig(msg.to_string()));
        if self.n_neurons() == 0 {
            return bad("reservoir has no neurons");
        }
        if !(self.connection_scale >= 0.0 && self.lambda > 0.0) {
            return bad("need C >= 0 and lambda > 0");
        }
        if !(self.tau_plus_ms > 0.0 && self.tau_minus_ms() > 0.0) {
            return bad("STDP time constants must be positive");
        }
        if !(self.a_plus() > 0.0 && self.a_minus() > 0.0) {
            return bad("A+ and A- must be positive");
        }
        if !(self.g_max > 0.0 && self.g_in_max >= 0.0) {
            return bad("need g_max > 0 and g_in_max >= 0");
        }
        let (lo, hi) = self.init_conductance;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("initial conductance fractions must satisfy 0 <= lo <= hi <= 1");
        }
        if !(self.dt_ms > 0.0 && self.dt_ms <= 1.0) {
            return bad("need 0 < dt_ms <= 1");
        }
        self.lif.validate().map_err(ReservoirError::InvalidConfig)
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn fingerprint(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).into()
    }
}

/// Mean firing rate (spikes/s) of every neuron over one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidState {
    pub mean_rates: Vec<f64>,
}

impl LiquidState {
    pub fn len(&self) -> usize {
        self.mean_rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_rates.is_empty()
    }
}
