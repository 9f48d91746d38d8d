/// Asymmetric STDP window. `Δ = t_pre - t_post` in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpRule {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus_ms: f64,
    pub tau_minus_ms: f64,
}

impl StdpRule {
    #[inline]
    pub fn delta(&self, delta_ms: f64) -> f64 {
        stdp_delta(delta_ms, self)
    }
}

/// `A₊ e^{Δ/τ₊}` for `Δ < 0` (pre before post), `-A₋ e^{-Δ/τ₋}` for
/// `Δ > 0`, and zero for simultaneous spikes.
#[inline]
pub fn stdp_delta(delta_ms: f64, rule: &StdpRule) -> f64 {
    if delta_ms < 0.0 {
        rule.a_plus * (delta_ms / rule.tau_plus_ms).exp()
    } else if delta_ms > 0.0 {
        -rule.a_minus * (-delta_ms / rule.tau_minus_ms).exp()
    } else {
        0.0
    }
}
