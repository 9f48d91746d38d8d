use serde::{Deserialize, Serialize};

use super::ReservoirError;

/// Leaky integrate-and-fire parameters (potentials in mV, times in ms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifParams {
    pub tau_m_ms: f64,
    pub v_rest: f64,
    pub v_reset: f64,
    pub v_thresh: f64,
    pub refractory_ms: f64,
    pub tau_syn_ms: f64,
    /// Reversal potential of the excitatory conductances.
    pub e_exc: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau_m_ms: 20.0,
            v_rest: -74.0,
            v_reset: -60.0,
            v_thresh: -54.0,
            refractory_ms: 1.0,
            tau_syn_ms: 5.0,
            e_exc: 0.0,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.v_reset < self.v_thresh) {
            return Err("v_reset must lie below v_thresh".into());
        }
        if !(self.tau_m_ms > 0.0 && self.tau_syn_ms > 0.0 && self.refractory_ms >= 0.0) {
            return Err("time constants must be positive".into());
        }
        Ok(())
    }

    /// Whole simulation steps spent refractory after a spike.
    pub fn refractory_steps(&self, dt_ms: f64) -> u32 {
        (self.refractory_ms / dt_ms).round() as u32
    }
}

/// Mutable per-neuron state of a population.
#[derive(Debug, Clone, PartialEq)]
pub struct LifState {
    pub v: Vec<f64>,
    /// Recurrent synaptic conductance, decaying with `tau_syn_ms`.
    pub g_syn: Vec<f64>,
    pub refractory_left: Vec<u32>,
    pub step: usize,
}

impl LifState {
    pub fn at_rest(n: usize, params: &LifParams) -> Self {
        Self {
            v: vec![params.v_rest; n],
            g_syn: vec![0.0; n],
            refractory_left: vec![0; n],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Advance every neuron by one Euler step of
/// `τ_m dv/dt = (v_rest - v) + g (E_exc - v) + I_R`,
/// where `g` is the recurrent plus input conductance and `I_R` an injected
/// current expressed as its voltage `I R`. Indices of neurons that crossed
/// threshold are appended to `spikes`.
pub fn lif_step(
    state: &mut LifState,
    params: &LifParams,
    dt_ms: f64,
    input_conductance: &[f64],
    current_mv: &[f64],
    spikes: &mut Vec<usize>,
) -> Result<(), ReservoirError> {
    let n = state.len();
    assert_eq!(input_conductance.len(), n, "input conductance length");
    assert_eq!(current_mv.len(), n, "input current length");
    let k = dt_ms / params.tau_m_ms;
    let syn_decay = (-dt_ms / params.tau_syn_ms).exp();
    let refractory = params.refractory_steps(dt_ms);
    spikes.clear();
    for i in 0..n {
        let g = state.g_syn[i] + input_conductance[i];
        state.g_syn[i] *= syn_decay;
        if state.refractory_left[i] > 0 {
            state.refractory_left[i] -= 1;
            continue;
        }
        let v = state.v[i];
        let dv = k * ((params.v_rest - v) + g * (params.e_exc - v) + current_mv[i]);
        let v = v + dv;
        if !v.is_finite() {
            return Err(ReservoirError::NonFinite {
                neuron: i,
                step: state.step,
            });
        }
        if v >= params.v_thresh {
            spikes.push(i);
            state.v[i] = params.v_reset;
            state.refractory_left[i] = refractory;
        } else {
            state.v[i] = v;
        }
    }
    state.step += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_current(current: f64, dt: f64, duration_ms: f64) -> (LifState, usize) {
        let p = LifParams::default();
        let mut s = LifState::at_rest(1, &p);
        let mut spikes = Vec::new();
        let mut count = 0;
        for _ in 0..(duration_ms / dt).round() as usize {
            lif_step(&mut s, &p, dt, &[0.0], &[current], &mut spikes).unwrap();
            count += spikes.len();
        }
        (s, count)
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let (s, count) = run_current(0.0, 0.1, 500.0);
        assert_eq!(count, 0);
        assert_eq!(s.v[0], -74.0);
    }

    #[test]
    fn subthreshold_converges_to_steady_state() {
        let (s, count) = run_current(15.0, 0.1, 500.0);
        assert_eq!(count, 0);
        assert!((s.v[0] - (-74.0 + 15.0)).abs() < 1e-6);
    }

    #[test]
    fn refractory_bounds_rate() {
        // enormous drive: one spike per refractory period plus one step
        let (_, count) = run_current(1e4, 0.1, 100.0);
        assert!(count <= 100 * 10 / 11 + 1);
        assert!(count > 80);
    }

    #[test]
    fn non_finite_is_reported() {
        let p = LifParams::default();
        let mut s = LifState::at_rest(2, &p);
        let mut spikes = Vec::new();
        let err = lif_step(&mut s, &p, 0.1, &[0.0, 0.0], &[0.0, f64::NAN], &mut spikes).unwrap_err();
        assert!(matches!(err, ReservoirError::NonFinite { neuron: 1, .. }));
    }
}
