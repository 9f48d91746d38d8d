//! Linear-predictive analysis: autocorrelation, Levinson-Durbin, inverse
//! filtering to the residual (source) and all-pole envelopes (vocal tract).
//!
//! Predictor convention: `x̂(n) = Σ a_i x(n-i)` and `A(z) = 1 - Σ a_i z^-i`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::audio::{frame_count, AudioSignal, FrameSequence};

/// Frames with `r[0]` below this are treated as silence.
pub const SILENCE_ENERGY: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("max lag {max_lag} must be smaller than the frame length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("autocorrelation r[0] = {r0} is not positive (silent frame)")]
    SilentFrame { r0: f64 },
    #[error("recursion broke down at stage {stage}: reflection coefficient {reflection}")]
    DegenerateFrame { stage: usize, reflection: f64 },
    #[error("order {order} needs {} autocorrelation lags, got {available}", order + 1)]
    NotEnoughLags { order: usize, available: usize },
    #[error("expected {expected} frame analyses for this signal, got {actual}")]
    AnalysisCountMismatch { expected: usize, actual: usize },
    #[error("frequency {freq} Hz outside [0, {nyquist}] Hz")]
    FrequencyOutOfRange { freq: f64, nyquist: f64 },
    #[error("frequency grid must be strictly increasing")]
    UnsortedGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpCoefficients {
    /// `a_1 .. a_M`.
    pub coeffs: Vec<f64>,
    /// Final prediction-error energy of the recursion.
    pub error_energy: f64,
    pub reflection: Vec<f64>,
}

impl LpCoefficients {
    /// The flat predictor used for silent frames.
    pub fn silent(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order],
            error_energy: SILENCE_ENERGY,
            reflection: vec![0.0; order],
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn gain(&self) -> f64 {
        self.error_energy.max(0.0).sqrt()
    }

    /// `x̂(n)` given the history `past[i] = x(n-1-i)`.
    #[inline]
    fn predict(&self, history: impl Iterator<Item = f64>) -> f64 {
        self.coeffs.iter().zip(history).map(|(a, x)| a * x).sum()
    }
}

/// Biased, unnormalized autocorrelation `r[k] = Σ frame[n] frame[n+k]`, `k = 0..=max_lag`.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Result<Vec<f64>, LpError> {
    if max_lag >= frame.len() {
        return Err(LpError::LagTooLarge {
            max_lag,
            len: frame.len(),
        });
    }
    Ok((0..=max_lag)
        .map(|k| frame[k..].iter().zip(frame).map(|(a, b)| a * b).sum())
        .collect())
}

/// Solve the normal equations of the autocorrelation method by the
/// Levinson-Durbin recursion.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<LpCoefficients, LpError> {
    if r.len() < order + 1 {
        return Err(LpError::NotEnoughLags {
            order,
            available: r.len(),
        });
    }
    if !(r[0] > 0.0) {
        return Err(LpError::SilentFrame { r0: r[0] });
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 1..=order {
        let acc = r[i] - (1..i).map(|j| a[j - 1] * r[i - j]).sum::<f64>();
        let k = acc / err;
        if !(k.abs() < 1.0) {
            return Err(LpError::DegenerateFrame {
                stage: i,
                reflection: k,
            });
        }
        prev[..i - 1].copy_from_slice(&a[..i - 1]);
        for j in 1..i {
            a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
        }
        a[i - 1] = k;
        reflection.push(k);
        err *= 1.0 - k * k;
    }
    Ok(LpCoefficients {
        coeffs: a,
        error_energy: err.max(0.0),
        reflection,
    })
}

/// Analyze one windowed frame, substituting the flat predictor for silence.
pub fn analyze_frame(frame: &[f64], order: usize) -> Result<LpCoefficients, LpError> {
    let mut r = autocorrelation(frame, order)?;
    if r[0] < SILENCE_ENERGY {
        return Ok(LpCoefficients::silent(order));
    }
    match levinson_durbin(&r, order) {
        Err(LpError::DegenerateFrame { .. }) => {
            // near-singular Toeplitz matrix; a white-noise correction restores |k| < 1
            r[0] *= 1.0 + 1e-9;
            Ok(levinson_durbin(&r, order).unwrap_or_else(|_| LpCoefficients::silent(order)))
        }
        other => other,
    }
}

pub fn analyze_frames(frames: &FrameSequence, order: usize) -> Result<Vec<LpCoefficients>, LpError> {
    frames.frames.iter().map(|f| analyze_frame(f, order)).collect()
}

/// How a sample index maps to the analysis frame whose coefficients apply.
///
/// Frame `k` spans `[k*hop, k*hop + window)`; its coefficients govern the
/// hop-long segment centred in that span. Samples before the first segment
/// use frame 0 and samples after the last use the final frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub window: usize,
    pub hop: usize,
}

impl FrameLayout {
    pub fn new(window: usize, hop: usize) -> Self {
        Self { window, hop }
    }

    pub fn from_frames(frames: &FrameSequence) -> Self {
        Self::new(frames.window_length, frames.hop)
    }

    /// First sample of the segment governed by frame 0.
    pub fn segment_offset(&self) -> usize {
        (self.window - self.hop) / 2
    }

    pub fn frame_count(&self, n_samples: usize) -> usize {
        frame_count(n_samples, self.window, self.hop)
    }

    pub fn frame_for_sample(&self, n: usize, n_frames: usize) -> usize {
        let k = n.saturating_sub(self.segment_offset()) / self.hop;
        k.min(n_frames.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

fn check_count(n: usize, layout: FrameLayout, analyses: usize) -> Result<(), LpError> {
    let expected = layout.frame_count(n);
    if expected != analyses || analyses == 0 {
        return Err(LpError::AnalysisCountMismatch {
            expected,
            actual: analyses,
        });
    }
    Ok(())
}

/// Inverse-filter the continuous signal with per-segment coefficients:
/// `e(n) = x(n) - Σ a_i x(n-i)`, with zero history before the first sample.
pub fn residual(
    signal: &AudioSignal,
    analyses: &[LpCoefficients],
    layout: FrameLayout,
) -> Result<ResidualSignal, LpError> {
    let x = signal.samples();
    check_count(x.len(), layout, analyses.len())?;
    let samples = (0..x.len())
        .map(|n| {
            let lp = &analyses[layout.frame_for_sample(n, analyses.len())];
            let history = x[..n].iter().rev().copied();
            x[n] - lp.predict(history)
        })
        .collect();
    Ok(ResidualSignal {
        samples,
        sample_rate: signal.sample_rate(),
    })
}

/// All-pole synthesis, the exact inverse of [`residual`]:
/// `x(n) = e(n) + Σ a_i x(n-i)`.
pub fn synthesize(
    residual: &ResidualSignal,
    analyses: &[LpCoefficients],
    layout: FrameLayout,
) -> Result<Vec<f64>, LpError> {
    let e = &residual.samples;
    check_count(e.len(), layout, analyses.len())?;
    let mut x: Vec<f64> = Vec::with_capacity(e.len());
    for n in 0..e.len() {
        let lp = &analyses[layout.frame_for_sample(n, analyses.len())];
        let pred = lp.predict(x.iter().rev().copied());
        x.push(e[n] + pred);
    }
    Ok(x)
}

/// Log-magnitude of the all-pole response `g / A(e^{jω})` on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSpectrum {
    pub magnitudes_db: Vec<f64>,
    pub grid: Vec<f64>,
}

/// `|A(e^{jω})|` by direct polynomial summation.
pub fn inverse_filter_magnitude(coeffs: &[f64], omega: f64) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    for (k, a) in coeffs.iter().enumerate() {
        let phase = omega * (k + 1) as f64;
        re -= a * phase.cos();
        im += a * phase.sin();
    }
    re.hypot(im)
}

pub fn lp_spectrum(
    lp: &LpCoefficients,
    grid: &[f64],
    sample_rate: u32,
) -> Result<LpSpectrum, LpError> {
    let fs = sample_rate as f64;
    let nyquist = fs / 2.0;
    if let Some(&freq) = grid.iter().find(|&&f| !(0.0..=nyquist).contains(&f)) {
        return Err(LpError::FrequencyOutOfRange { freq, nyquist });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LpError::UnsortedGrid);
    }
    let g = lp.gain();
    let magnitudes_db = grid
        .iter()
        .map(|&f| {
            let omega = 2.0 * PI * f / fs;
            20.0 * (g / inverse_filter_magnitude(&lp.coeffs, omega)).log10()
        })
        .collect();
    Ok(LpSpectrum {
        magnitudes_db,
        grid: grid.to_vec(),
    })
}
