use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fuse, lda_fit, pca_fit, LdaModel, PcaModel, ReadoutError, DEFAULT_SHRINKAGE};
use crate::audio::Emotion;

/// Splits are redrawn at most this many times when a class would be missing
/// from the training portion.
const MAX_SPLIT_ATTEMPTS: usize = 100;

/// One utterance's liquid states. A reservoir that was not run is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub vocal_tract: Option<Vec<f64>>,
    pub source: Option<Vec<f64>>,
    /// Emotion index, see [`Emotion::index`].
    pub label: usize,
    pub speaker: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratify {
    #[default]
    Emotion,
    EmotionSpeaker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Principal components kept from the vocal-tract reservoir; 0 drops it.
    pub k_vt: usize,
    /// Principal components kept from the source reservoir; 0 drops it.
    pub k_src: usize,
    pub n_folds: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub shrinkage: f64,
    pub stratify: Stratify,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k_vt: 29,
            k_src: 44,
            n_folds: 50,
            test_fraction: 0.1,
            seed: 7,
            shrinkage: DEFAULT_SHRINKAGE,
            stratify: Stratify::Emotion,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), ReadoutError> {
        let bad = |m: &str| Err(ReadoutError::InvalidConfig(m.into()));
        if self.k_vt == 0 && self.k_src == 0 {
            return bad("k_vt and k_src are both zero");
        }
        if self.n_folds == 0 {
            return bad("n_folds must be at least 1");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.shrinkage) {
            return bad("shrinkage must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Number of draws needed; 1 unless the fold was resampled.
    pub attempts: usize,
}

/// Draw the stratified train/test split of fold `fold`.
///
/// Each stratum gets `floor(n_s * test_fraction)` test samples and the
/// leftover test quota goes to the strata with the largest remainders, ties
/// broken at random. A draw that leaves some class with fewer than two
/// training samples is redrawn.
pub fn split_fold(
    samples: &[Sample],
    config: &EvalConfig,
    fold: usize,
) -> Result<FoldSplit, ReadoutError> {
    let mut strata: BTreeMap<(usize, &str), Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let speaker = match config.stratify {
            Stratify::Emotion => "",
            Stratify::EmotionSpeaker => s.speaker.as_str(),
        };
        strata.entry((s.label, speaker)).or_default().push(i);
    }
    let mut class_totals: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        *class_totals.entry(s.label).or_default() += 1;
    }
    let n = samples.len();
    let n_test = ((n as f64 * config.test_fraction).round() as usize).clamp(1, n.saturating_sub(1));

    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(((fold as u64) << 8) | attempt as u64);

        let quotas: Vec<f64> = strata
            .values()
            .map(|v| v.len() as f64 * n_test as f64 / n as f64)
            .collect();
        let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut order: Vec<usize> = (0..take.len()).collect();
        order.shuffle(&mut rng);
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra)
        });
        let mut remaining = n_test - take.iter().sum::<usize>();
        for &s in &order {
            if remaining == 0 {
                break;
            }
            take[s] += 1;
            remaining -= 1;
        }

        let mut test = Vec::with_capacity(n_test);
        let mut train = Vec::with_capacity(n - n_test);
        for (members, &k) in strata.values().zip(&take) {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            test.extend_from_slice(&shuffled[..k]);
            train.extend_from_slice(&shuffled[k..]);
        }
        test.sort_unstable();
        train.sort_unstable();

        let mut train_counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &train {
            *train_counts.entry(samples[i].label).or_default() += 1;
        }
        let valid = class_totals
            .keys()
            .all(|c| train_counts.get(c).copied().unwrap_or(0) >= 2);
        if valid {
            if attempt > 0 {
                log::info!("fold {fold}: resampled split {attempt} time(s)");
            }
            return Ok(FoldSplit {
                train,
                test,
                attempts: attempt + 1,
            });
        }
    }
    Err(ReadoutError::NoValidSplit {
        fold,
        attempts: MAX_SPLIT_ATTEMPTS,
    })
}

/// PCA and LDA fitted on one training portion.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFold {
    pub pca_vt: Option<PcaModel>,
    pub pca_src: Option<PcaModel>,
    pub lda: LdaModel,
}

impl FittedFold {
    pub fn features(&self, index: usize, sample: &Sample) -> Result<Vec<f64>, ReadoutError> {
        project(index, sample, self.pca_vt.as_ref(), self.pca_src.as_ref())
    }

    pub fn predict(&self, index: usize, sample: &Sample) -> Result<usize, ReadoutError> {
        self.lda.predict(&self.features(index, sample)?)
    }
}

fn state<'a>(
    index: usize,
    s: &'a Option<Vec<f64>>,
    kind: &'static str,
) -> Result<&'a [f64], ReadoutError> {
    s.as_deref().ok_or(ReadoutError::MissingState { index, kind })
}

fn project(
    index: usize,
    sample: &Sample,
    pca_vt: Option<&PcaModel>,
    pca_src: Option<&PcaModel>,
) -> Result<Vec<f64>, ReadoutError> {
    let vt = match pca_vt {
        Some(p) => p.transform(state(index, &sample.vocal_tract, "vocal-tract")?)?,
        None => Vec::new(),
    };
    let src = match pca_src {
        Some(p) => p.transform(state(index, &sample.source, "source")?)?,
        None => Vec::new(),
    };
    Ok(fuse(&vt, &src))
}

fn fit_pca(
    samples: &[Sample],
    train: &[usize],
    k: usize,
    pick: fn(&Sample) -> &Option<Vec<f64>>,
    kind: &'static str,
) -> Result<Option<PcaModel>, ReadoutError> {
    if k == 0 {
        return Ok(None);
    }
    let rows = train
        .iter()
        .map(|&i| state(i, pick(&samples[i]), kind))
        .collect::<Result<Vec<_>, _>>()?;
    pca_fit(&rows, k).map(Some)
}

fn fit_pcas(
    samples: &[Sample],
    train: &[usize],
    k_vt: usize,
    k_src: usize,
) -> Result<(Option<PcaModel>, Option<PcaModel>), ReadoutError> {
    Ok((
        fit_pca(samples, train, k_vt, |s| &s.vocal_tract, "vocal-tract")?,
        fit_pca(samples, train, k_src, |s| &s.source, "source")?,
    ))
}

/// Fit the readout on `train` only. Nothing outside `train` is read.
pub fn fit_fold(
    samples: &[Sample],
    train: &[usize],
    config: &EvalConfig,
) -> Result<FittedFold, ReadoutError> {
    let (pca_vt, pca_src) = fit_pcas(samples, train, config.k_vt, config.k_src)?;
    let features = train
        .iter()
        .map(|&i| project(i, &samples[i], pca_vt.as_ref(), pca_src.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let labels: Vec<usize> = train.iter().map(|&i| samples[i].label).collect();
    let lda = lda_fit(&refs, &labels, config.shrinkage)?;
    Ok(FittedFold {
        pca_vt,
        pca_src,
        lda,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub k_vt: usize,
    pub k_src: usize,
    pub n_folds: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub stratify: Stratify,
    pub n_samples: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Half-width of the normal-approximation 95% interval of the mean.
    pub ci95: f64,
    pub class_names: Vec<String>,
    /// Test-set counts summed over folds; rows true, columns predicted.
    pub confusion_counts: Vec<Vec<u64>>,
    /// `confusion_counts` as row percentages; rows with no samples are zero.
    pub confusion_percent: Vec<Vec<f64>>,
    pub resampled_folds: usize,
    pub generated_unix: u64,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion_counts) {
            out.push_str(name);
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn confusion_percent_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion_percent) {
            out.push_str(name);
            for p in row {
                write!(out, ",{p:.4}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Mean and `1.96 s / sqrt(n)` half-width of a set of fold accuracies.
fn mean_ci(accuracies: &[f64]) -> (f64, f64) {
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    if accuracies.len() < 2 {
        return (mean, 0.0);
    }
    let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

fn check_samples(samples: &[Sample]) -> Result<(), ReadoutError> {
    if samples.len() < 2 {
        return Err(ReadoutError::TooFewSamples {
            needed: 2,
            actual: samples.len(),
        });
    }
    if let Some(s) = samples.iter().find(|s| s.label >= Emotion::COUNT) {
        return Err(ReadoutError::InvalidConfig(format!(
            "label {} is not an emotion index",
            s.label
        )));
    }
    Ok(())
}

struct FoldOutcome {
    pairs: Vec<(usize, usize)>,
    attempts: usize,
}

fn run_fold(samples: &[Sample], config: &EvalConfig, fold: usize) -> Result<FoldOutcome, ReadoutError> {
    let split = split_fold(samples, config, fold)?;
    let fitted = fit_fold(samples, &split.train, config)?;
    let pairs = split
        .test
        .iter()
        .map(|&i| Ok((samples[i].label, fitted.predict(i, &samples[i])?)))
        .collect::<Result<Vec<_>, ReadoutError>>()?;
    Ok(FoldOutcome {
        pairs,
        attempts: split.attempts,
    })
}

fn accuracy(pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().filter(|(t, p)| t == p).count() as f64 / pairs.len() as f64
}

/// Repeated random stratified train/test evaluation. Folds run in parallel
/// and are aggregated in fold order, so the report does not depend on the
/// thread count.
pub fn cross_validate(
    samples: &[Sample],
    config: &EvalConfig,
) -> Result<EvaluationReport, ReadoutError> {
    config.validate()?;
    check_samples(samples)?;
    let outcomes = (0..config.n_folds)
        .into_par_iter()
        .map(|fold| run_fold(samples, config, fold))
        .collect::<Result<Vec<_>, _>>()?;

    let k = Emotion::COUNT;
    let mut counts = vec![vec![0u64; k]; k];
    let mut fold_accuracies = Vec::with_capacity(outcomes.len());
    let mut resampled = 0;
    for o in &outcomes {
        for &(t, p) in &o.pairs {
            counts[t][p] += 1;
        }
        fold_accuracies.push(accuracy(&o.pairs));
        if o.attempts > 1 {
            resampled += 1;
        }
    }
    let percent = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                .collect()
        })
        .collect();
    let (mean_accuracy, ci95) = mean_ci(&fold_accuracies);
    Ok(EvaluationReport {
        k_vt: config.k_vt,
        k_src: config.k_src,
        n_folds: config.n_folds,
        test_fraction: config.test_fraction,
        seed: config.seed,
        stratify: config.stratify,
        n_samples: samples.len(),
        fold_accuracies,
        mean_accuracy,
        ci95,
        class_names: Emotion::ALL.iter().map(|e| e.name().to_string()).collect(),
        confusion_counts: counts,
        confusion_percent: percent,
        resampled_folds: resampled,
        generated_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    })
}

/// `{0} ∪ {lo, lo + stride, ..., ≤ hi}` for each reservoir, every pair except
/// `(0, 0)`, vocal-tract count varying slowest.
pub fn sweep_lattice(
    vt: (usize, usize),
    src: (usize, usize),
    stride: usize,
) -> Vec<(usize, usize)> {
    let axis = |(lo, hi): (usize, usize)| {
        let mut v = vec![0];
        v.extend((lo.max(1)..=hi).step_by(stride.max(1)));
        v
    };
    let vts = axis(vt);
    let srcs = axis(src);
    let mut cells = Vec::with_capacity(vts.len() * srcs.len());
    for &a in &vts {
        for &b in &srcs {
            if a != 0 || b != 0 {
                cells.push((a, b));
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k_vt: usize,
    pub k_src: usize,
    pub mean_acc: f64,
    pub ci95: f64,
}

impl SweepCell {
    pub const CSV_HEADER: &'static str = "k_vt,k_src,mean_acc,ci95";

    pub fn to_csv(cells: &[SweepCell]) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for c in cells {
            writeln!(out, "{},{},{:.6},{:.6}", c.k_vt, c.k_src, c.mean_acc, c.ci95).unwrap();
        }
        out
    }
}

/// Full cross-validation at every `(k_vt, k_src)` cell.
///
/// Each fold fits PCA once at the largest requested counts and reads smaller
/// cells off the leading coordinates, which gives the same projections as
/// fitting at the smaller count. Cell `(k, 0)` therefore reproduces a
/// vocal-tract-only [`cross_validate`] run exactly.
pub fn sweep_components(
    samples: &[Sample],
    base: &EvalConfig,
    cells: &[(usize, usize)],
) -> Result<Vec<SweepCell>, ReadoutError> {
    let probe = EvalConfig {
        k_vt: 1,
        ..base.clone()
    };
    probe.validate()?;
    check_samples(samples)?;
    if let Some(&(a, b)) = cells.iter().find(|&&(a, b)| a == 0 && b == 0) {
        return Err(ReadoutError::InvalidConfig(format!("sweep cell ({a}, {b}) has no features")));
    }
    let max_vt = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let max_src = cells.iter().map(|c| c.1).max().unwrap_or(0);

    let per_fold = (0..base.n_folds)
        .into_par_iter()
        .map(|fold| -> Result<Vec<f64>, ReadoutError> {
            let split = split_fold(samples, base, fold)?;
            let (pca_vt, pca_src) = fit_pcas(samples, &split.train, max_vt, max_src)?;
            let project_all = |idx: &[usize]| {
                idx.iter()
                    .map(|&i| {
                        let s = &samples[i];
                        let vt = match &pca_vt {
                            Some(p) => p.transform(state(i, &s.vocal_tract, "vocal-tract")?)?,
                            None => Vec::new(),
                        };
                        let src = match &pca_src {
                            Some(p) => p.transform(state(i, &s.source, "source")?)?,
                            None => Vec::new(),
                        };
                        Ok((vt, src))
                    })
                    .collect::<Result<Vec<_>, ReadoutError>>()
            };
            let train = project_all(&split.train)?;
            let test = project_all(&split.test)?;
            let train_labels: Vec<usize> = split.train.iter().map(|&i| samples[i].label).collect();
            cells
                .iter()
                .map(|&(kv, ks)| {
                    let cut = |(vt, src): &(Vec<f64>, Vec<f64>)| fuse(&vt[..kv], &src[..ks]);
                    let feats: Vec<Vec<f64>> = train.iter().map(cut).collect();
                    let refs: Vec<&[f64]> = feats.iter().map(Vec::as_slice).collect();
                    let lda = lda_fit(&refs, &train_labels, base.shrinkage)?;
                    let pairs = split
                        .test
                        .iter()
                        .zip(&test)
                        .map(|(&i, t)| Ok((samples[i].label, lda.predict(&cut(t))?)))
                        .collect::<Result<Vec<_>, ReadoutError>>()?;
                    Ok(accuracy(&pairs))
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(k_vt, k_src))| {
            let accs: Vec<f64> = per_fold.iter().map(|f| f[c]).collect();
            let (mean_acc, ci95) = mean_ci(&accs);
            SweepCell {
                k_vt,
                k_src,
                mean_acc,
                ci95,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed: f64,
    pub null_accuracies: Vec<f64>,
    /// `(1 + #{null >= observed}) / (1 + permutations)`.
    pub p_value: f64,
}

/// Compare the cross-validated accuracy against runs on randomly relabelled
/// copies of the data. Labels are shuffled across all samples.
pub fn permutation_test(
    samples: &[Sample],
    config: &EvalConfig,
    permutations: usize,
    seed: u64,
) -> Result<PermutationResult, ReadoutError> {
    let observed = cross_validate(samples, config)?.mean_accuracy;
    let null_accuracies = (0..permutations)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
            labels.shuffle(&mut rng);
            let permuted: Vec<Sample> = samples
                .iter()
                .zip(labels)
                .map(|(s, label)| Sample {
                    label,
                    ..s.clone()
                })
                .collect();
            let cfg = EvalConfig {
                seed: config.seed ^ rng.random::<u64>(),
                ..config.clone()
            };
            cross_validate(&permuted, &cfg).map(|r| r.mean_accuracy)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let exceed = null_accuracies.iter().filter(|&&a| a >= observed).count();
    Ok(PermutationResult {
        observed,
        p_value: (1 + exceed) as f64 / (1 + permutations) as f64,
        null_accuracies,
    })
}
