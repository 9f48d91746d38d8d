//! WAV loading, Emo-DB corpus cataloguing and Hamming-window framing.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("audio file not found: {0}")]
    NotFound(PathBuf),
    #[error("malformed RIFF/WAV header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("unsupported WAV encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid framing parameters: {0}")]
    InvalidFraming(String),
    #[error("signal too short for one analysis window: need {required} samples, have {actual}")]
    TooShort { required: usize, actual: usize },
}

/// A mono signal with samples normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidSignal(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Number of samples spanned by `ms` milliseconds at this rate, rounded.
    pub fn ms_to_samples(&self, ms: f64) -> usize {
        ms_to_samples(ms, self.sample_rate)
    }
}

pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

fn map_hound_error(path: &Path, err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => {
            AudioError::NotFound(path.to_path_buf())
        }
        // hound surfaces truncated headers as UnexpectedEof
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            AudioError::MalformedHeader {
                path: path.to_path_buf(),
                reason: "unexpected end of file".into(),
            }
        }
        hound::Error::IoError(source) => AudioError::Io {
            path: path.to_path_buf(),
            source,
        },
        hound::Error::FormatError(reason) => AudioError::MalformedHeader {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        },
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: "format not handled by the WAV decoder".into(),
        },
        other => AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

/// Load a PCM (8/16/24/32-bit integer) or 32-bit float WAV file.
///
/// Multi-channel files keep channel 0 only. Integer samples are divided by
/// `2^(bits-1)`, so the most negative code maps to exactly -1.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioSignal, AudioError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AudioError::NotFound(path.to_path_buf()));
    }
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound_error(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound_error(path, e))?,
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{format:?} with {bits} bits per sample"),
            })
        }
    };
    AudioSignal::new(samples, spec.sample_rate)
}

/// Read only the sample rate from a WAV header.
pub fn probe_sample_rate(path: impl AsRef<Path>) -> Result<u32, AudioError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound_error(path, e))?;
    Ok(reader.spec().sample_rate)
}

/// Write a mono 16-bit PCM WAV; samples outside [-1, 1) are clipped.
pub fn write_wav_pcm16(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound_error(path, e))?;
    for &s in &signal.samples {
        // same 2^15 scale as the reader, so a round trip is off by at most one step
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| map_hound_error(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound_error(path, e))
}

/// The seven Emo-DB emotion classes, in a fixed class-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Boredom,
    Disgust,
    Fear,
    Happiness,
    Sadness,
    Neutral,
}

impl Emotion {
    pub const COUNT: usize = 7;
    pub const ALL: [Emotion; 7] = [
        Emotion::Anger,
        Emotion::Boredom,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Neutral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Decode the German-initial emotion letter used in Emo-DB file names.
    pub fn from_emodb_code(c: char) -> Option<Self> {
        Some(match c {
            'W' => Emotion::Anger,
            'L' => Emotion::Boredom,
            'E' => Emotion::Disgust,
            'A' => Emotion::Fear,
            'F' => Emotion::Happiness,
            'T' => Emotion::Sadness,
            'N' => Emotion::Neutral,
            _ => return None,
        })
    }

    pub fn emodb_code(self) -> char {
        match self {
            Emotion::Anger => 'W',
            Emotion::Boredom => 'L',
            Emotion::Disgust => 'E',
            Emotion::Fear => 'A',
            Emotion::Happiness => 'F',
            Emotion::Sadness => 'T',
            Emotion::Neutral => 'N',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Boredom => "boredom",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Speaker codes present in Emo-DB.
pub const EMODB_SPEAKERS: [&str; 10] = ["03", "08", "09", "10", "11", "12", "13", "14", "15", "16"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub speaker_id: String,
    pub text_id: String,
    pub emotion: Emotion,
    pub version: char,
    /// Header sample rate; `None` when the header could not be read during the scan.
    pub sample_rate: Option<u32>,
}

/// Parsed fields of an Emo-DB file stem such as `03a01Wa`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmoDbName {
    pub speaker_id: String,
    pub text_id: String,
    pub emotion: Emotion,
    pub version: char,
}

pub fn parse_emodb_stem(stem: &str) -> Result<EmoDbName, String> {
    let chars: Vec<char> = stem.chars().collect();
    if chars.len() < 7 {
        return Err(format!("stem {stem:?} shorter than the 7-character Emo-DB pattern"));
    }
    let speaker_id: String = chars[0..2].iter().collect();
    if !EMODB_SPEAKERS.contains(&speaker_id.as_str()) {
        return Err(format!("unknown speaker code {speaker_id:?} in {stem:?}"));
    }
    let text_id: String = chars[2..5].iter().collect();
    let emotion = Emotion::from_emodb_code(chars[5])
        .ok_or_else(|| format!("unknown emotion letter {:?} in {stem:?}", chars[5]))?;
    Ok(EmoDbName {
        speaker_id,
        text_id,
        emotion,
        version: chars[6],
    })
}

#[derive(Debug, Clone, Default)]
pub struct CorpusScan {
    pub entries: Vec<CorpusEntry>,
    pub warnings: Vec<String>,
}

/// Catalog every `*.wav` directly under `root` (recursing into subdirectories).
///
/// Files whose names do not follow the Emo-DB convention are skipped and
/// reported in `warnings`. Entries are sorted by path.
pub fn scan_corpus(root: impl AsRef<Path>) -> Result<CorpusScan, AudioError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(AudioError::NotFound(root.to_path_buf()));
    }
    let mut wavs = Vec::new();
    collect_wavs(root, &mut wavs)?;
    wavs.sort();

    let mut scan = CorpusScan::default();
    for path in wavs {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        match parse_emodb_stem(stem) {
            Ok(name) => {
                let sample_rate = match probe_sample_rate(&path) {
                    Ok(rate) => Some(rate),
                    Err(e) => {
                        scan.warnings.push(format!("{}: {e}", path.display()));
                        None
                    }
                };
                scan.entries.push(CorpusEntry {
                    path,
                    speaker_id: name.speaker_id,
                    text_id: name.text_id,
                    emotion: name.emotion,
                    version: name.version,
                    sample_rate,
                });
            }
            Err(reason) => {
                log::warn!("skipping {}: {reason}", path.display());
                scan.warnings.push(format!("skipped {}: {reason}", path.display()));
            }
        }
    }
    Ok(scan)
}

fn collect_wavs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), AudioError> {
    let io_err = |source| AudioError::Io {
        path: dir.to_path_buf(),
        source,
    };
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_dir() {
            collect_wavs(&path, out)?;
        } else if path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            out.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hamming,
}

/// `0.54 - 0.46 cos(2πn/(L-1))`.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

/// Number of left-aligned frames that fit in `n` samples.
pub fn frame_count(n: usize, window: usize, hop: usize) -> usize {
    if n < window || hop == 0 {
        0
    } else {
        (n - window) / hop + 1
    }
}

#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub window_length: usize,
    pub hop: usize,
    pub window_kind: WindowKind,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Cut `signal` into Hamming-windowed frames; frame `k` starts at `k * hop`.
pub fn frame_signal(
    signal: &AudioSignal,
    window_ms: f64,
    hop_ms: f64,
) -> Result<FrameSequence, AudioError> {
    if !(hop_ms > 0.0 && window_ms >= hop_ms) {
        return Err(AudioError::InvalidFraming(format!(
            "need window_ms >= hop_ms > 0, got window {window_ms} ms, hop {hop_ms} ms"
        )));
    }
    let window_length = signal.ms_to_samples(window_ms);
    let hop = signal.ms_to_samples(hop_ms);
    if hop == 0 {
        return Err(AudioError::InvalidFraming(format!(
            "hop of {hop_ms} ms is shorter than one sample"
        )));
    }
    if signal.len() < window_length {
        return Err(AudioError::TooShort {
            required: window_length,
            actual: signal.len(),
        });
    }
    let window = hamming(window_length);
    let count = frame_count(signal.len(), window_length, hop);
    let frames = (0..count)
        .map(|k| {
            let start = k * hop;
            signal.samples[start..start + window_length]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect();
    Ok(FrameSequence {
        frames,
        window_length,
        hop,
        window_kind: WindowKind::Hamming,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(n: usize) -> AudioSignal {
        AudioSignal::new(vec![1.0; n], 16_000).unwrap()
    }

    #[test]
    fn frame_counts_match_examples() {
        assert_eq!(frame_signal(&sig(480), 30.0, 5.0).unwrap().len(), 1);
        assert_eq!(frame_signal(&sig(560), 30.0, 5.0).unwrap().len(), 2);
    }

    #[test]
    fn constant_signal_frame_is_the_window() {
        let frames = frame_signal(&sig(600), 30.0, 5.0).unwrap();
        let w = hamming(480);
        for frame in &frames.frames {
            assert_eq!(frame, &w);
        }
        assert!((w[0] - 0.08).abs() < 1e-12);
        assert!((w[479] - 0.08).abs() < 1e-12);
    }

    #[test]
    fn short_signal_reports_lengths() {
        match frame_signal(&sig(100), 30.0, 5.0) {
            Err(AudioError::TooShort { required, actual }) => {
                assert_eq!((required, actual), (480, 100));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_framing_rejected() {
        assert!(matches!(
            frame_signal(&sig(1000), 5.0, 30.0),
            Err(AudioError::InvalidFraming(_))
        ));
        assert!(matches!(
            frame_signal(&sig(1000), 30.0, 0.0),
            Err(AudioError::InvalidFraming(_))
        ));
    }

    #[test]
    fn emodb_names() {
        let a = parse_emodb_stem("03a01Wa").unwrap();
        assert_eq!(a.speaker_id, "03");
        assert_eq!(a.text_id, "a01");
        assert_eq!(a.emotion, Emotion::Anger);
        assert_eq!(a.version, 'a');
        let b = parse_emodb_stem("16b10Td").unwrap();
        assert_eq!(b.speaker_id, "16");
        assert_eq!(b.text_id, "b10");
        assert_eq!(b.emotion, Emotion::Sadness);
        assert_eq!(b.version, 'd');
        assert!(parse_emodb_stem("03a01Xa").is_err());
    }

    #[test]
    fn emotion_codes_round_trip() {
        for e in Emotion::ALL {
            assert_eq!(Emotion::from_emodb_code(e.emodb_code()), Some(e));
            assert_eq!(Emotion::from_index(e.index()), Some(e));
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(AudioSignal::new(vec![0.0, f64::NAN], 16_000).is_err());
        assert!(AudioSignal::new(vec![0.0], 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn frame_count_closed_form(n in 1usize..4000, window in 1usize..600, hop in 1usize..200) {
            prop_assume!(window >= hop);
            let s = AudioSignal::new(vec![0.5; n], 1000).unwrap();
            // at 1 kHz one sample is one millisecond
            match frame_signal(&s, window as f64, hop as f64) {
                Ok(f) => {
                    prop_assert!(n >= window);
                    prop_assert_eq!(f.len(), (n - window) / hop + 1);
                    prop_assert!(f.frames.iter().all(|fr| fr.len() == window));
                }
                Err(AudioError::TooShort { .. }) => prop_assert!(n < window),
                Err(e) => prop_assert!(false, "unexpected {}", e),
            }
        }
    }
}
