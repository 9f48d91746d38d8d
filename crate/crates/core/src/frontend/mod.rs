//! Perceptual front-end: turns the LP residual and the LP envelopes into two
//! ERB-spaced, log-compressed spectro-temporal maps sharing one time axis.

pub mod erb;
pub mod gammatone;
mod map_io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{frame_signal, AudioError, AudioSignal};
use crate::lp::{self, FrameLayout, LpCoefficients, LpError};

pub use erb::{erb_bandwidth, erb_rate, erb_rate_to_hz, make_erb_grid, ErbScaleGrid};
pub use gammatone::{gammatone_filterbank, GammatoneChannel, GammatoneFilterbank};
pub use map_io::{read_map, write_map, MAP_MAGIC};

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("negative frequency {0} Hz")]
    NegativeFrequency(f64),
    #[error("invalid ERB grid: {n_channels} channels over [{fmin}, {fmax}] Hz")]
    InvalidGrid { n_channels: usize, fmin: f64, fmax: f64 },
    #[error("channel centre {cf} Hz is not below the Nyquist frequency {nyquist} Hz")]
    AboveNyquist { cf: f64, nyquist: f64 },
    #[error("channels have unequal lengths")]
    RaggedChannels,
    #[error("map shape mismatch: {0}")]
    Shape(String),
    #[error("malformed map file: {0}")]
    MalformedMap(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Source,
    VocalTract,
}

impl MapKind {
    pub const BOTH: [MapKind; 2] = [MapKind::VocalTract, MapKind::Source];

    pub fn tag(self) -> u8 {
        match self {
            MapKind::Source => 0,
            MapKind::VocalTract => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(MapKind::Source),
            1 => Some(MapKind::VocalTract),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Source => "source",
            MapKind::VocalTract => "vocal_tract",
        }
    }
}

/// A channels x frames matrix of log-domain values (dB), stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroTemporalMap {
    values: Vec<f64>,
    n_channels: usize,
    n_frames: usize,
    pub frame_hop_ms: f64,
    pub grid: ErbScaleGrid,
    pub kind: MapKind,
}

impl SpectroTemporalMap {
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        grid: ErbScaleGrid,
        frame_hop_ms: f64,
        kind: MapKind,
    ) -> Result<Self, FrontendError> {
        let n_channels = rows.len();
        if n_channels != grid.len() {
            return Err(FrontendError::Shape(format!(
                "{n_channels} rows for a {}-channel grid",
                grid.len()
            )));
        }
        let n_frames = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_frames) {
            return Err(FrontendError::RaggedChannels);
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FrontendError::Shape("non-finite map entry".into()));
        }
        Ok(Self {
            values: rows.into_iter().flatten().collect(),
            n_channels,
            n_frames,
            frame_hop_ms,
            grid,
            kind,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn get(&self, channel: usize, frame: usize) -> f64 {
        self.values[channel * self.n_frames + frame]
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.n_frames..(channel + 1) * self.n_frames]
    }

    pub fn column(&self, frame: usize) -> Vec<f64> {
        (0..self.n_channels).map(|j| self.get(j, frame)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn duration_ms(&self) -> f64 {
        self.n_frames as f64 * self.frame_hop_ms
    }
}

/// Segmentation of the filterbank outputs into energy blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySegments {
    /// Block length in samples.
    pub hop: usize,
    /// First sample of block 0.
    pub offset: usize,
    /// Upper bound on the number of blocks.
    pub max_frames: Option<usize>,
    pub hop_ms: f64,
}

/// Per-channel log energy of non-overlapping blocks:
/// `10 log10(max(Σ x², 10^(floor_db/10)))`. A trailing partial block is dropped.
pub fn channel_energy_map(
    channels: &[Vec<f64>],
    grid: &ErbScaleGrid,
    segments: EnergySegments,
    log_floor_db: f64,
) -> Result<SpectroTemporalMap, FrontendError> {
    let len = channels.first().map_or(0, Vec::len);
    if channels.iter().any(|c| c.len() != len) {
        return Err(FrontendError::RaggedChannels);
    }
    if segments.hop == 0 {
        return Err(FrontendError::Shape("zero-length energy segment".into()));
    }
    let mut n_frames = len.saturating_sub(segments.offset) / segments.hop;
    if let Some(max) = segments.max_frames {
        n_frames = n_frames.min(max);
    }
    let floor = 10f64.powf(log_floor_db / 10.0);
    let rows = channels
        .iter()
        .map(|ch| {
            (0..n_frames)
                .map(|t| {
                    let start = segments.offset + t * segments.hop;
                    let energy: f64 = ch[start..start + segments.hop].iter().map(|v| v * v).sum();
                    10.0 * energy.max(floor).log10()
                })
                .collect()
        })
        .collect();
    SpectroTemporalMap::from_rows(rows, grid.clone(), segments.hop_ms, MapKind::Source)
}

/// Sample each frame's all-pole envelope at the grid centre frequencies.
pub fn warp_lp_spectra(
    analyses: &[LpCoefficients],
    grid: &ErbScaleGrid,
    sample_rate: u32,
    hop_ms: f64,
    log_floor_db: f64,
) -> Result<SpectroTemporalMap, FrontendError> {
    let mut rows = vec![Vec::with_capacity(analyses.len()); grid.len()];
    for lp_frame in analyses {
        let spec = lp::lp_spectrum(lp_frame, &grid.center_frequencies, sample_rate)?;
        for (row, db) in rows.iter_mut().zip(spec.magnitudes_db) {
            row.push(db.max(log_floor_db));
        }
    }
    SpectroTemporalMap::from_rows(rows, grid.clone(), hop_ms, MapKind::VocalTract)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontendConfig {
    pub lp_order: usize,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub channels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub log_floor_db: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            lp_order: 16,
            window_ms: 30.0,
            hop_ms: 5.0,
            channels: 77,
            fmin_hz: 50.0,
            fmax_hz: 7500.0,
            log_floor_db: -80.0,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.lp_order == 0 {
            return Err("lp_order must be at least 1".into());
        }
        if !(self.hop_ms > 0.0 && self.window_ms >= self.hop_ms) {
            return Err("need window_ms >= hop_ms > 0".into());
        }
        if !(self.fmin_hz > 0.0 && self.fmin_hz < self.fmax_hz) {
            return Err("need 0 < fmin_hz < fmax_hz".into());
        }
        if self.channels < 2 {
            return Err("need at least 2 channels".into());
        }
        if !self.log_floor_db.is_finite() {
            return Err("log_floor_db must be finite".into());
        }
        Ok(())
    }
}

/// Both maps for one utterance, on a common grid and time axis.
#[derive(Debug, Clone)]
pub struct UtteranceMaps {
    pub source: SpectroTemporalMap,
    pub vocal_tract: SpectroTemporalMap,
}

impl UtteranceMaps {
    pub fn get(&self, kind: MapKind) -> &SpectroTemporalMap {
        match kind {
            MapKind::Source => &self.source,
            MapKind::VocalTract => &self.vocal_tract,
        }
    }
}

/// LP analysis, residual filterbank energies and ERB-sampled envelopes.
pub fn preprocess(signal: &AudioSignal, config: &FrontendConfig) -> Result<UtteranceMaps, FrontendError> {
    let grid = make_erb_grid(config.channels, config.fmin_hz, config.fmax_hz)?;
    grid.check_nyquist(signal.sample_rate())?;
    let frames = frame_signal(signal, config.window_ms, config.hop_ms)?;
    let analyses = lp::analyze_frames(&frames, config.lp_order)?;
    let layout = FrameLayout::from_frames(&frames);

    let vocal_tract = warp_lp_spectra(
        &analyses,
        &grid,
        signal.sample_rate(),
        config.hop_ms,
        config.log_floor_db,
    )?;

    let residual = lp::residual(signal, &analyses, layout)?;
    let bands = gammatone_filterbank(&residual.samples, residual.sample_rate, &grid)?;
    let source = channel_energy_map(
        &bands,
        &grid,
        EnergySegments {
            hop: layout.hop,
            offset: layout.segment_offset(),
            max_frames: Some(analyses.len()),
            hop_ms: config.hop_ms,
        },
        config.log_floor_db,
    )?;
    debug_assert_eq!(source.n_frames(), vocal_tract.n_frames());
    Ok(UtteranceMaps {
        source,
        vocal_tract,
    })
}
