use crate::frontend::SpectroTemporalMap;

/// Per-frame input conductance for every layer, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDrive {
    pub n_frames: usize,
    pub n_layers: usize,
    pub frame_ms: f64,
    values: Vec<f64>,
}

impl InputDrive {
    /// Conductance delivered to each layer during frame `t`.
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_layers..(t + 1) * self.n_layers]
    }

    pub fn layer_series(&self, layer: usize) -> Vec<f64> {
        (0..self.n_frames).map(|t| self.frame(t)[layer]).collect()
    }

    pub fn is_silent(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Min-max normalize each channel over the utterance (constant channels
/// give zero) and scale to `[0, g_in_max]`.
pub fn encode_input(map: &SpectroTemporalMap, g_in_max: f64) -> InputDrive {
    let (n_layers, n_frames) = (map.n_channels(), map.n_frames());
    let mut values = vec![0.0; n_layers * n_frames];
    for j in 0..n_layers {
        let row = map.row(j);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if !(span > 0.0) {
            continue;
        }
        for (t, &v) in row.iter().enumerate() {
            values[t * n_layers + j] = g_in_max * (v - lo) / span;
        }
    }
    InputDrive {
        n_frames,
        n_layers,
        frame_ms: map.frame_hop_ms,
        values,
    }
}
