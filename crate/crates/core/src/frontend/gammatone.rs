//! 4th-order all-pole gammatone filterbank.
//!
//! Each channel is a cascade of four identical two-pole resonators. The pole
//! radius follows the gammatone bandwidth `1.019 ERB(cf)`; the pole angle is
//! adjusted so that the magnitude peak of a resonator falls exactly on `cf`,
//! and each stage is scaled to unit gain there.

use std::f64::consts::PI;

use super::erb::{erb_bandwidth, ErbScaleGrid};
use super::FrontendError;

pub const GAMMATONE_ORDER: usize = 4;
pub const BANDWIDTH_FACTOR: f64 = 1.019;

#[derive(Debug, Clone, PartialEq)]
pub struct GammatoneChannel {
    pub center_frequency: f64,
    pub bandwidth: f64,
    sample_rate: f64,
    // y[n] = g x[n] + a1 y[n-1] - a2 y[n-2]
    a1: f64,
    a2: f64,
    stage_gain: f64,
}

impl GammatoneChannel {
    pub fn new(center_frequency: f64, sample_rate: u32) -> Result<Self, FrontendError> {
        let fs = sample_rate as f64;
        let nyquist = fs / 2.0;
        if !(center_frequency > 0.0 && center_frequency < nyquist) {
            return Err(FrontendError::AboveNyquist {
                cf: center_frequency,
                nyquist,
            });
        }
        let bandwidth = BANDWIDTH_FACTOR * erb_bandwidth(center_frequency);
        let r = (-2.0 * PI * bandwidth / fs).exp();
        let omega_c = 2.0 * PI * center_frequency / fs;
        // |(1 - p e^{-jω})(1 - p* e^{-jω})| is minimal where
        // cos ω = (1 + r²) cos θ / 2r; solve for the pole angle θ.
        let cos_theta = omega_c.cos() * 2.0 * r / (1.0 + r * r);
        let a1 = 2.0 * r * cos_theta;
        let a2 = r * r;
        let mut ch = Self {
            center_frequency,
            bandwidth,
            sample_rate: fs,
            a1,
            a2,
            stage_gain: 1.0,
        };
        ch.stage_gain = 1.0 / ch.stage_magnitude(omega_c);
        Ok(ch)
    }

    fn stage_magnitude(&self, omega: f64) -> f64 {
        // 1 / |1 - a1 e^{-jω} + a2 e^{-2jω}|
        let re = 1.0 - self.a1 * omega.cos() + self.a2 * (2.0 * omega).cos();
        let im = self.a1 * omega.sin() - self.a2 * (2.0 * omega).sin();
        self.stage_gain / re.hypot(im)
    }

    /// Analytic magnitude response of the full cascade at `f` Hz.
    pub fn magnitude_at(&self, f: f64) -> f64 {
        self.stage_magnitude(2.0 * PI * f / self.sample_rate)
            .powi(GAMMATONE_ORDER as i32)
    }

    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let mut signal = input.to_vec();
        for _ in 0..GAMMATONE_ORDER {
            let (mut y1, mut y2) = (0.0, 0.0);
            for s in signal.iter_mut() {
                let y = self.stage_gain * *s + self.a1 * y1 - self.a2 * y2;
                y2 = y1;
                y1 = y;
                *s = y;
            }
        }
        signal
    }
}

#[derive(Debug, Clone)]
pub struct GammatoneFilterbank {
    pub channels: Vec<GammatoneChannel>,
    pub sample_rate: u32,
}

impl GammatoneFilterbank {
    pub fn new(grid: &ErbScaleGrid, sample_rate: u32) -> Result<Self, FrontendError> {
        grid.check_nyquist(sample_rate)?;
        let channels = grid
            .center_frequencies
            .iter()
            .map(|&cf| GammatoneChannel::new(cf, sample_rate))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    /// One filtered signal per channel, same length as `input`.
    pub fn filter(&self, input: &[f64]) -> Vec<Vec<f64>> {
        use rayon::prelude::*;
        self.channels.par_iter().map(|ch| ch.filter(input)).collect()
    }
}

/// Filter `input` (sampled at `sample_rate`) through one channel per grid frequency.
pub fn gammatone_filterbank(
    input: &[f64],
    sample_rate: u32,
    grid: &ErbScaleGrid,
) -> Result<Vec<Vec<f64>>, FrontendError> {
    Ok(GammatoneFilterbank::new(grid, sample_rate)?.filter(input))
}
