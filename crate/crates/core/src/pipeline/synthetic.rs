//! A small synthetic corpus with seven classes that differ in pitch contour
//! and vowel quality. Every vowel and all but one pitch contour are shared
//! by two or more classes, so only the combination of the two cues names
//! the class.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{write_wav_pcm16, AudioError, AudioSignal, Emotion, EMODB_SPEAKERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitchContour {
    High,
    Low,
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vowel {
    A,
    I,
    U,
}

impl Vowel {
    /// F1..F4 in Hz.
    fn formants(self) -> [f64; 4] {
        match self {
            Vowel::A => [730.0, 1190.0, 2500.0, 3500.0],
            Vowel::I => [290.0, 2250.0, 2900.0, 3700.0],
            Vowel::U => [330.0, 850.0, 2300.0, 3400.0],
        }
    }
}

const SCHWA: [f64; 4] = [500.0, 1500.0, 2500.0, 3500.0];
const BANDWIDTHS: [f64; 4] = [80.0, 100.0, 140.0, 200.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub sample_rate: u32,
    pub duration_s: f64,
    pub per_class: usize,
    pub syllables: usize,
    /// Fraction of each syllable spent on the target vowel.
    pub vowel_share: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            duration_s: 1.0,
            per_class: 10,
            syllables: 4,
            vowel_share: 0.7,
            seed: 2024,
        }
    }
}

pub fn class_design(emotion: Emotion) -> (PitchContour, Vowel) {
    use PitchContour::*;
    match emotion {
        Emotion::Anger => (High, Vowel::A),
        Emotion::Boredom => (Falling, Vowel::A),
        Emotion::Disgust => (Falling, Vowel::U),
        Emotion::Fear => (High, Vowel::I),
        Emotion::Happiness => (Rising, Vowel::A),
        Emotion::Sadness => (Low, Vowel::U),
        Emotion::Neutral => (Rising, Vowel::I),
    }
}

fn contour_hz(contour: PitchContour, t: f64) -> f64 {
    let (lo, hi) = (110.0f64, 230.0f64);
    match contour {
        PitchContour::High => hi,
        PitchContour::Low => lo,
        PitchContour::Rising => lo * (hi / lo).powf(t),
        PitchContour::Falling => hi * (lo / hi).powf(t),
    }
}

/// Two-pole resonator with unit gain at DC.
struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn step(&mut self, x: f64, freq: f64, bw: f64, fs: f64) -> f64 {
        let r = (-PI * bw / fs).exp();
        let b = 2.0 * r * (2.0 * PI * freq / fs).cos();
        let c = -r * r;
        let y = (1.0 - b - c) * x + b * self.y1 + c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// One utterance of class `emotion`, variant `variant` (which also selects
/// the speaker-like pitch and formant scaling).
pub fn synthesize_utterance(spec: &SyntheticSpec, emotion: Emotion, variant: usize) -> AudioSignal {
    let (contour, vowel) = class_design(emotion);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream((emotion.index() * 1000 + variant) as u64);
    let mut jitter = |amount: f64| 1.0 + amount * (2.0 * rng.random::<f64>() - 1.0);

    let fs = spec.sample_rate as f64;
    let n = (spec.duration_s * fs).round() as usize;
    let speaker = (variant % EMODB_SPEAKERS.len()) as f64 / (EMODB_SPEAKERS.len() - 1) as f64;
    let f0_scale = (0.94 + 0.12 * speaker) * jitter(0.03);
    let formant_scale = (0.97 + 0.06 * speaker) * jitter(0.02);
    let target: Vec<f64> = vowel.formants().iter().map(|f| f * formant_scale * jitter(0.03)).collect();
    let schwa: Vec<f64> = SCHWA.iter().map(|f| f * formant_scale).collect();
    let syllable_len = spec.duration_s / spec.syllables as f64;
    let onset = jitter(1.0) * 0.1 * syllable_len;
    let tremor_hz = 4.0 * jitter(0.3);
    let noise_level = 0.003;

    let mut phase = 0.0f64;
    let mut tract: Vec<Resonator> = (0..4).map(|_| Resonator { y1: 0.0, y2: 0.0 }).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let pos = ((t - onset) / syllable_len).rem_euclid(1.0);
        // vowel weight: 1 on the target vowel, dipping to the schwa between syllables
        let w = if pos < spec.vowel_share {
            1.0
        } else {
            let u = (pos - spec.vowel_share) / (1.0 - spec.vowel_share);
            0.5 + 0.5 * (2.0 * PI * u).cos()
        };
        let amp = 0.35 + 0.65 * w;
        // each syllable declines a little in pitch on top of the global contour
        let f0 = contour_hz(contour, t / spec.duration_s)
            * f0_scale
            * (1.0 + 0.06 * (0.5 - pos))
            * (1.0 + 0.01 * (2.0 * PI * tremor_hz * t).sin());
        phase += 2.0 * PI * f0 / fs;
        let harmonics = (0.45 * fs / f0).floor() as usize;
        let mut glottal = 0.0;
        for h in 1..=harmonics {
            glottal += (h as f64 * phase).sin() / h as f64;
        }
        let mut x = amp * glottal + noise_level * (2.0 * rng.random::<f64>() - 1.0);
        for (k, res) in tract.iter_mut().enumerate() {
            let f = schwa[k] + w * (target[k] - schwa[k]);
            x = res.step(x, f, BANDWIDTHS[k] * formant_scale, fs);
        }
        out.push(x);
    }
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|x| *x *= 0.7 / peak);
    }
    AudioSignal::new(out, spec.sample_rate).expect("synthetic samples are finite")
}

/// Emo-DB style file stem for variant `variant` of `emotion`.
pub fn synthetic_stem(emotion: Emotion, variant: usize) -> String {
    let speaker = EMODB_SPEAKERS[variant % EMODB_SPEAKERS.len()];
    let text = variant / EMODB_SPEAKERS.len() + 1;
    format!("{speaker}s{text:02}{}a", emotion.emodb_code())
}

/// Write `per_class` utterances for each emotion into `dir`.
pub fn make_synthetic_corpus(dir: &Path, spec: &SyntheticSpec) -> Result<Vec<PathBuf>, AudioError> {
    std::fs::create_dir_all(dir).map_err(|source| AudioError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::with_capacity(Emotion::COUNT * spec.per_class);
    for emotion in Emotion::ALL {
        for variant in 0..spec.per_class {
            let path = dir.join(format!("{}.wav", synthetic_stem(emotion, variant)));
            write_wav_pcm16(&path, &synthesize_utterance(spec, emotion, variant))?;
            paths.push(path);
        }
    }
    Ok(paths)
}
