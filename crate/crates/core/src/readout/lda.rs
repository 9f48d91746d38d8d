use nalgebra::{DMatrix, DVector};

use super::ReadoutError;

/// Default shrinkage toward a scaled identity.
pub const DEFAULT_SHRINKAGE: f64 = 1e-3;

/// Gaussian linear discriminant with a pooled, shrunk within-class covariance.
///
/// Class `c` scores `δ_c(x) = xᵀΣ⁻¹μ_c - ½ μ_cᵀΣ⁻¹μ_c + ln π_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// Labels present in training, ascending.
    pub classes: Vec<usize>,
    pub means: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
    /// Regularized pooled covariance, row-major `dim x dim`.
    pub covariance: Vec<f64>,
    pub shrinkage: f64,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl LdaModel {
    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Discriminant score of every trained class, in `classes` order.
    pub fn discriminants(&self, x: &[f64]) -> Result<Vec<f64>, ReadoutError> {
        if x.len() != self.dim() {
            return Err(ReadoutError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect())
    }

    /// Highest-scoring class; ties go to the lowest label.
    pub fn predict(&self, x: &[f64]) -> Result<usize, ReadoutError> {
        let scores = self.discriminants(x)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }
}

pub fn lda_fit(
    features: &[&[f64]],
    labels: &[usize],
    shrinkage: f64,
) -> Result<LdaModel, ReadoutError> {
    assert_eq!(features.len(), labels.len(), "one label per feature vector");
    let n = features.len();
    let d = features.first().map_or(0, |f| f.len());
    if d == 0 {
        return Err(ReadoutError::EmptyFeatures);
    }
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(ReadoutError::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ReadoutError::TooFewClasses(classes.len()));
    }
    let mut counts = vec![0usize; classes.len()];
    let mut means = vec![vec![0.0; d]; classes.len()];
    let slot = |label: usize| classes.binary_search(&label).unwrap();
    for (f, &l) in features.iter().zip(labels) {
        let c = slot(l);
        counts[c] += 1;
        means[c].iter_mut().zip(f.iter()).for_each(|(m, x)| *m += x);
    }
    for (c, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(ReadoutError::SmallClass {
                class: classes[c],
                count,
            });
        }
        means[c].iter_mut().for_each(|m| *m /= count as f64);
    }

    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for (f, &l) in features.iter().zip(labels) {
        let m = &means[slot(l)];
        let diff = DVector::from_iterator(d, f.iter().zip(m).map(|(x, y)| x - y));
        scatter.ger(1.0, &diff, &diff, 1.0);
    }
    let mut cov = scatter / (n - classes.len()).max(1) as f64;
    let trace = cov.trace();
    if !(trace > 0.0) {
        return Err(ReadoutError::DegenerateFeatures);
    }
    if shrinkage > 0.0 {
        cov *= 1.0 - shrinkage;
        for i in 0..d {
            cov[(i, i)] += shrinkage * trace / d as f64;
        }
    }
    let chol = cov.clone().cholesky().ok_or(ReadoutError::SingularCovariance)?;

    let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for (m, prior) in means.iter().zip(&priors) {
        let mu = DVector::from_column_slice(m);
        let w = chol.solve(&mu);
        biases.push(-0.5 * mu.dot(&w) + prior.ln());
        weights.push(w.iter().copied().collect());
    }
    Ok(LdaModel {
        classes,
        means,
        priors,
        covariance: cov.transpose().iter().copied().collect(),
        shrinkage,
        weights,
        biases,
    })
}
