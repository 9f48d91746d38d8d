//! Glasberg-Moore ERB-rate scale and ERB-spaced channel grids.

use serde::{Deserialize, Serialize};

use super::FrontendError;

const EAR_Q_SLOPE: f64 = 4.37 / 1000.0;

/// ERB-number of frequency `f`: `21.4 log10(4.37 f/1000 + 1)`.
pub fn erb_rate(f: f64) -> Result<f64, FrontendError> {
    if !(f >= 0.0) {
        return Err(FrontendError::NegativeFrequency(f));
    }
    Ok(21.4 * (EAR_Q_SLOPE * f + 1.0).log10())
}

/// Inverse of [`erb_rate`].
pub fn erb_rate_to_hz(erb: f64) -> f64 {
    (10f64.powf(erb / 21.4) - 1.0) / EAR_Q_SLOPE
}

/// Equivalent rectangular bandwidth (Hz) of the auditory filter at `f`.
pub fn erb_bandwidth(f: f64) -> f64 {
    24.7 * (EAR_Q_SLOPE * f + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErbScaleGrid {
    pub center_frequencies: Vec<f64>,
    pub fmin: f64,
    pub fmax: f64,
}

impl ErbScaleGrid {
    pub fn len(&self) -> usize {
        self.center_frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center_frequencies.is_empty()
    }

    pub fn check_nyquist(&self, sample_rate: u32) -> Result<(), FrontendError> {
        let nyquist = sample_rate as f64 / 2.0;
        match self.center_frequencies.iter().find(|&&cf| cf >= nyquist) {
            Some(&cf) => Err(FrontendError::AboveNyquist { cf, nyquist }),
            None => Ok(()),
        }
    }
}

/// `n_channels` centre frequencies equally spaced in ERB-rate from `fmin` to `fmax`.
pub fn make_erb_grid(n_channels: usize, fmin: f64, fmax: f64) -> Result<ErbScaleGrid, FrontendError> {
    if n_channels < 2 || !(fmin > 0.0 && fmin < fmax && fmax.is_finite()) {
        return Err(FrontendError::InvalidGrid {
            n_channels,
            fmin,
            fmax,
        });
    }
    let lo = erb_rate(fmin)?;
    let hi = erb_rate(fmax)?;
    let step = (hi - lo) / (n_channels - 1) as f64;
    let mut center_frequencies: Vec<f64> = (0..n_channels)
        .map(|j| erb_rate_to_hz(lo + j as f64 * step))
        .collect();
    center_frequencies[0] = fmin;
    center_frequencies[n_channels - 1] = fmax;
    Ok(ErbScaleGrid {
        center_frequencies,
        fmin,
        fmax,
    })
}
