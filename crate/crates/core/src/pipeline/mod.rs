//! Corpus-level orchestration: cached preprocessing and simulation, then
//! evaluation. Every artifact is keyed by a hash of exactly the inputs it
//! depends on, so changing a parameter recomputes only the stages that read
//! it.

mod cache;
mod config;
pub mod synthetic;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::audio::{load_wav, scan_corpus, AudioError, CorpusEntry};
use crate::frontend::{preprocess, FrontendError, MapKind};
use crate::readout::{
    cross_validate, permutation_test, sweep_components, sweep_lattice, EvaluationReport,
    PermutationResult, ReadoutError, Sample, SweepCell,
};
use crate::reservoir::{Reservoir, ReservoirError, StateHeader};

pub use cache::{map_key, state_key, write_atomic, Cache, CacheKey};
pub use config::{PipelineConfig, ReservoirPair, SweepConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] AudioError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus {0} contains no usable files")]
    EmptyCorpus(PathBuf),
    #[error("{stage} failed for {} file(s):\n{}", failures.len(), list_failures(failures))]
    StageFailed {
        stage: &'static str,
        failures: Vec<EntryFailure>,
    },
    #[error("{} liquid state(s) are not cached; run simulate first:\n{}", missing.len(), missing.join("\n"))]
    MissingStates { missing: Vec<String> },
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn list_failures(f: &[EntryFailure]) -> String {
    f.iter()
        .map(|e| format!("  {}: {}", e.path.display(), e.reason))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntryFailure {
    pub path: PathBuf,
    pub reason: String,
}

/// Counters of one stage run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub computed: usize,
    pub reused: usize,
    pub failures: Vec<EntryFailure>,
}

impl StageReport {
    fn new(stage: &'static str) -> Self {
        Self {
            stage,
            ..Self::default()
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn into_result(self) -> Result<Self, PipelineError> {
        if self.succeeded() {
            Ok(self)
        } else {
            Err(PipelineError::StageFailed {
                stage: self.stage,
                failures: self.failures,
            })
        }
    }
}

enum Outcome {
    Computed,
    Reused,
    Failed(EntryFailure),
}

impl StageReport {
    fn tally(mut self, outcomes: Vec<Outcome>) -> Self {
        for o in outcomes {
            match o {
                Outcome::Computed => self.computed += 1,
                Outcome::Reused => self.reused += 1,
                Outcome::Failed(f) => self.failures.push(f),
            }
        }
        self
    }
}

/// Run `f` on a pool of `jobs` threads, or on the global pool when `jobs` is 0.
pub fn with_jobs<T: Send>(
    jobs: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, PipelineError> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

fn corpus_entries(config: &PipelineConfig) -> Result<Vec<CorpusEntry>, PipelineError> {
    let scan = scan_corpus(&config.corpus)?;
    for w in &scan.warnings {
        log::warn!("{w}");
    }
    if scan.entries.is_empty() {
        return Err(PipelineError::EmptyCorpus(config.corpus.clone()));
    }
    Ok(scan.entries)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, EntryFailure> {
    std::fs::read(path).map_err(|e| EntryFailure {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn fail(path: &Path, reason: impl ToString) -> Outcome {
    Outcome::Failed(EntryFailure {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    })
}

/// Compute and cache both maps of every corpus file. Files whose maps are
/// already cached are skipped; failures are collected and the run goes on.
pub fn run_preprocess(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    config.validate()?;
    let entries = corpus_entries(config)?;
    let cache = Cache::new(&config.cache_dir);
    let outcomes = with_jobs(config.jobs, || {
        entries
            .par_iter()
            .map(|entry| preprocess_entry(config, &cache, &entry.path))
            .collect::<Vec<_>>()
    })?;
    let report = StageReport::new("preprocess").tally(outcomes);
    log::info!(
        "preprocess: {} computed, {} reused, {} failed",
        report.computed,
        report.reused,
        report.failures.len()
    );
    Ok(report)
}

fn preprocess_entry(config: &PipelineConfig, cache: &Cache, path: &Path) -> Outcome {
    let bytes = match read_bytes(path) {
        Ok(b) => b,
        Err(f) => return Outcome::Failed(f),
    };
    let keys: Vec<(MapKind, CacheKey)> = MapKind::BOTH
        .iter()
        .map(|&k| (k, map_key(&bytes, &config.frontend, k)))
        .collect();
    if keys.iter().all(|(_, key)| cache.map_path(key).is_file()) {
        return Outcome::Reused;
    }
    let maps = match load_wav(path)
        .map_err(FrontendError::from)
        .and_then(|signal| preprocess(&signal, &config.frontend))
    {
        Ok(m) => m,
        Err(e) => return fail(path, e),
    };
    for (kind, key) in &keys {
        if let Err(e) = cache.write_map(key, maps.get(*kind)) {
            return fail(path, e);
        }
    }
    log::debug!("preprocessed {}", path.display());
    Outcome::Computed
}

/// Drive each active reservoir with every cached map and cache the liquid
/// states.
pub fn run_simulate(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    config.validate()?;
    let entries = corpus_entries(config)?;
    let cache = Cache::new(&config.cache_dir);
    let kinds = config.active_kinds();
    let reservoirs = kinds
        .iter()
        .map(|&k| Reservoir::new(config.reservoir.get(k).clone()).map(|r| (k, r)))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(&CorpusEntry, usize)> = entries
        .iter()
        .flat_map(|e| (0..reservoirs.len()).map(move |r| (e, r)))
        .collect();
    let outcomes = with_jobs(config.jobs, || {
        jobs.par_iter()
            .map(|&(entry, r)| {
                let (kind, reservoir) = &reservoirs[r];
                simulate_entry(config, &cache, &entry.path, *kind, reservoir)
            })
            .collect::<Vec<_>>()
    })?;
    let report = StageReport::new("simulate").tally(outcomes);
    log::info!(
        "simulate: {} computed, {} reused, {} failed",
        report.computed,
        report.reused,
        report.failures.len()
    );
    Ok(report)
}

fn state_header(kind: MapKind, reservoir: &crate::reservoir::ReservoirConfig) -> StateHeader {
    StateHeader {
        kind,
        seed: reservoir.rng_seed,
        config_hash: reservoir.fingerprint(),
    }
}

fn simulate_entry(
    config: &PipelineConfig,
    cache: &Cache,
    path: &Path,
    kind: MapKind,
    reservoir: &Reservoir,
) -> Outcome {
    let bytes = match read_bytes(path) {
        Ok(b) => b,
        Err(f) => return Outcome::Failed(f),
    };
    let mkey = map_key(&bytes, &config.frontend, kind);
    let skey = state_key(&mkey, &reservoir.config);
    let header = state_header(kind, &reservoir.config);
    if cache.read_state(&skey, &header).is_some() {
        return Outcome::Reused;
    }
    let map = match cache.read_map(&mkey) {
        Ok(m) => m,
        Err(e) => return fail(path, format!("{} map not cached ({e}); run preprocess", kind.name())),
    };
    let state = match reservoir.simulate(&map) {
        Ok(s) => s,
        Err(e) => return fail(path, e),
    };
    if let Err(e) = cache.write_state(&skey, &header, &state) {
        return fail(path, e);
    }
    log::debug!("simulated {} ({})", path.display(), kind.name());
    Outcome::Computed
}

/// Everything the evaluate stage produced.
#[derive(Debug, Clone)]
pub struct EvaluationOutput {
    pub report: EvaluationReport,
    pub sweep: Option<Vec<SweepCell>>,
    pub permutation: Option<PermutationResult>,
}

/// Load the cached liquid states of every corpus file as readout samples.
pub fn load_samples(config: &PipelineConfig) -> Result<Vec<Sample>, PipelineError> {
    let entries = corpus_entries(config)?;
    let cache = Cache::new(&config.cache_dir);
    let kinds = config.active_kinds();
    let mut missing = Vec::new();
    let mut samples = Vec::with_capacity(entries.len());
    for entry in &entries {
        let bytes = read_bytes(&entry.path).map_err(|f| PipelineError::StageFailed {
            stage: "evaluate",
            failures: vec![f],
        })?;
        let mut sample = Sample {
            vocal_tract: None,
            source: None,
            label: entry.emotion.index(),
            speaker: entry.speaker_id.clone(),
        };
        for &kind in &kinds {
            let rc = config.reservoir.get(kind);
            let skey = state_key(&map_key(&bytes, &config.frontend, kind), rc);
            match cache.read_state(&skey, &state_header(kind, rc)) {
                Some(s) => {
                    let slot = match kind {
                        MapKind::VocalTract => &mut sample.vocal_tract,
                        MapKind::Source => &mut sample.source,
                    };
                    *slot = Some(s.mean_rates);
                }
                None => missing.push(format!(
                    "  {} ({}): {}",
                    entry.path.display(),
                    kind.name(),
                    cache.state_path(&skey).display()
                )),
            }
        }
        samples.push(sample);
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingStates { missing });
    }
    Ok(samples)
}

/// Cross-validate the readout on the cached states and write
/// `report.json`, `confusion.csv`, `confusion_percent.csv`, plus
/// `sweep.csv` and `permutation.json` when configured.
pub fn run_evaluate(config: &PipelineConfig) -> Result<EvaluationOutput, PipelineError> {
    config.validate()?;
    let samples = load_samples(config)?;
    let readout = config.effective_readout();
    let (report, sweep, permutation) = with_jobs(config.jobs, || -> Result<_, PipelineError> {
        let report = cross_validate(&samples, &readout)?;
        let sweep = match &config.sweep {
            Some(s) => {
                let mut cells = sweep_lattice(s.k_vt, s.k_src, s.stride);
                match config.single_reservoir {
                    Some(MapKind::Source) => cells.retain(|c| c.0 == 0),
                    Some(MapKind::VocalTract) => cells.retain(|c| c.1 == 0),
                    None => {}
                }
                Some(sweep_components(&samples, &readout, &cells)?)
            }
            None => None,
        };
        let permutation = if config.permutations > 0 {
            Some(permutation_test(
                &samples,
                &readout,
                config.permutations,
                config.permutation_seed,
            )?)
        } else {
            None
        };
        Ok((report, sweep, permutation))
    })??;

    let out = &config.output_dir;
    let write = |name: &str, text: &str| {
        let path = out.join(name);
        write_atomic(&path, |w| std::io::Write::write_all(w, text.as_bytes()))
            .map_err(|source| PipelineError::Io { path, source })
    };
    write("report.json", &report.to_json())?;
    write("confusion.csv", &report.confusion_csv())?;
    write("confusion_percent.csv", &report.confusion_percent_csv())?;
    if let Some(cells) = &sweep {
        write("sweep.csv", &SweepCell::to_csv(cells))?;
    }
    if let Some(p) = &permutation {
        write(
            "permutation.json",
            &serde_json::to_string_pretty(p).expect("serializes"),
        )?;
    }
    log::info!(
        "evaluate: mean accuracy {:.2}% ± {:.2}%",
        100.0 * report.mean_accuracy,
        100.0 * report.ci95
    );
    Ok(EvaluationOutput {
        report,
        sweep,
        permutation,
    })
}

/// Stage reports of a full run plus its evaluation.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub preprocess: StageReport,
    pub simulate: StageReport,
    pub evaluation: EvaluationOutput,
}

/// Preprocess, simulate and evaluate; the first stage with failures aborts.
pub fn run_all(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    let preprocess = run_preprocess(config)?.into_result()?;
    let simulate = run_simulate(config)?.into_result()?;
    let evaluation = run_evaluate(config)?;
    Ok(RunSummary {
        preprocess,
        simulate,
        evaluation,
    })
}
