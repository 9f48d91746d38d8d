use super::encode::encode_input;
use super::lif::{lif_step, LifState};
use super::topology::{build_topology, ReservoirTopology};
use super::{LiquidState, ReservoirConfig, ReservoirError};
use crate::frontend::SpectroTemporalMap;

/// A reservoir template: configuration plus the sampled wiring and initial
/// conductances. Every simulation starts from this state.
#[derive(Debug, Clone)]
pub struct Reservoir {
    pub config: ReservoirConfig,
    pub topology: ReservoirTopology,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub state: LiquidState,
    pub spike_counts: Vec<u32>,
    pub final_conductances: Vec<f64>,
    pub duration_ms: f64,
}

impl Reservoir {
    pub fn new(config: ReservoirConfig) -> Result<Self, ReservoirError> {
        let topology = build_topology(&config)?;
        Ok(Self { config, topology })
    }

    pub fn simulate(&self, map: &SpectroTemporalMap) -> Result<LiquidState, ReservoirError> {
        Ok(self.run(map)?.state)
    }

    /// Drive the network with `map` for its full duration with STDP active.
    pub fn run(&self, map: &SpectroTemporalMap) -> Result<SimulationOutcome, ReservoirError> {
        let cfg = &self.config;
        let topo = &self.topology;
        if map.n_channels() != topo.n_layers() {
            return Err(ReservoirError::ChannelMismatch {
                channels: map.n_channels(),
                layers: topo.n_layers(),
            });
        }
        let n = topo.n_neurons();
        let per_layer = topo.neurons_per_layer;
        let dt = cfg.dt_ms;
        let steps_per_frame = ((map.frame_hop_ms / dt).round() as usize).max(1);
        let drive = encode_input(map, cfg.g_in_max);
        let rule = cfg.stdp_rule();
        let g_max = topo.g_max;

        let mut weights = topo.conductances.clone();
        let mut state = LifState::at_rest(n, &cfg.lif);
        let mut input_g = vec![0.0; n];
        let no_current = vec![0.0; n];
        let mut spikes = Vec::new();
        let mut last_spike: Vec<Option<usize>> = vec![None; n];
        let mut spike_counts = vec![0u32; n];

        for frame in 0..drive.n_frames {
            for (layer, &g) in drive.frame(frame).iter().enumerate() {
                input_g[layer * per_layer..(layer + 1) * per_layer].fill(g);
            }
            for _ in 0..steps_per_frame {
                let step = state.step;
                lif_step(&mut state, &cfg.lif, dt, &input_g, &no_current, &mut spikes)?;
                for &i in &spikes {
                    spike_counts[i] += 1;
                    // pre-synaptic spike: transmit, then depress against the
                    // most recent earlier post-synaptic spike
                    for s in topo.outgoing(i) {
                        let post = topo.synapses[s].1 as usize;
                        state.g_syn[post] += weights[s];
                        if let Some(t_post) = last_spike[post] {
                            let delta = (step - t_post) as f64 * dt;
                            weights[s] = (weights[s] + rule.delta(delta)).clamp(0.0, g_max);
                        }
                    }
                    // post-synaptic spike: potentiate against the most recent
                    // earlier pre-synaptic spike
                    for &s in topo.incoming(i) {
                        let s = s as usize;
                        let pre = topo.synapses[s].0 as usize;
                        if let Some(t_pre) = last_spike[pre] {
                            let delta = -((step - t_pre) as f64) * dt;
                            weights[s] = (weights[s] + rule.delta(delta)).clamp(0.0, g_max);
                        }
                    }
                }
                // same-step pairs never see each other: spike times are
                // recorded only after the whole step is processed
                for &i in &spikes {
                    last_spike[i] = Some(step);
                }
            }
        }

        let duration_ms = state.step as f64 * dt;
        let seconds = duration_ms / 1000.0;
        let mean_rates = spike_counts
            .iter()
            .map(|&c| if seconds > 0.0 { c as f64 / seconds } else { 0.0 })
            .collect();
        Ok(SimulationOutcome {
            state: LiquidState { mean_rates },
            spike_counts,
            final_conductances: weights,
            duration_ms,
        })
    }
}

/// Build the reservoir described by `config` and run `map` through it.
pub fn simulate(map: &SpectroTemporalMap, config: &ReservoirConfig) -> Result<LiquidState, ReservoirError> {
    Reservoir::new(config.clone())?.simulate(map)
}
