//! Readout: per-reservoir PCA, concatenation, LDA, and the repeated
//! random-split evaluation around them.

mod eval;
mod lda;
mod pca;

use thiserror::Error;

pub use eval::{
    cross_validate, fit_fold, permutation_test, split_fold, sweep_components, sweep_lattice,
    EvalConfig, EvaluationReport, FittedFold, FoldSplit, PermutationResult, Sample, Stratify,
    SweepCell,
};
pub use lda::{lda_fit, LdaModel, DEFAULT_SHRINKAGE};
pub use pca::{pca_fit, PcaModel};

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },
    #[error("expected dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cannot keep {k} components; at most {max} are available")]
    InvalidComponentCount { k: usize, max: usize },
    #[error("feature vectors are empty")]
    EmptyFeatures,
    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("class {class} has only {count} training sample(s)")]
    SmallClass { class: usize, count: usize },
    #[error("all feature vectors are identical")]
    DegenerateFeatures,
    #[error("within-class covariance is not positive definite")]
    SingularCovariance,
    #[error("sample {index} has no {kind} state")]
    MissingState { index: usize, kind: &'static str },
    #[error("no valid split found for fold {fold} after {attempts} attempts")]
    NoValidSplit { fold: usize, attempts: usize },
    #[error("invalid evaluation setting: {0}")]
    InvalidConfig(String),
}

/// Concatenate the two projections, vocal tract first.
pub fn fuse(vocal_tract: &[f64], source: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(vocal_tract.len() + source.len());
    out.extend_from_slice(vocal_tract);
    out.extend_from_slice(source);
    out
}
