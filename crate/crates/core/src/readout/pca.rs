use nalgebra::{DMatrix, SymmetricEigen};

use super::ReadoutError;

/// Principal axes of a set of liquid states, by descending explained variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `dim`.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalue of each retained component.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// The model restricted to its leading `k` components.
    pub fn truncated(&self, k: usize) -> PcaModel {
        let k = k.min(self.k());
        PcaModel {
            mean: self.mean.clone(),
            components: self.components[..k].to_vec(),
            explained_variance: self.explained_variance[..k].to_vec(),
        }
    }

    /// `components · (state - mean)`.
    pub fn transform(&self, state: &[f64]) -> Result<Vec<f64>, ReadoutError> {
        if state.len() != self.dim() {
            return Err(ReadoutError::DimensionMismatch {
                expected: self.dim(),
                actual: state.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(state.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect())
    }
}

/// Relative eigenvalue below which a direction is treated as variance-free.
const RANK_TOL: f64 = 1e-12;

/// Fit `k` principal components to the rows of `states`.
///
/// Works on the `n x n` Gram matrix when there are fewer samples than
/// dimensions and on the `d x d` covariance otherwise. Directions beyond the
/// data rank are completed deterministically to an orthonormal set with zero
/// explained variance. Each component's largest-magnitude entry is positive.
pub fn pca_fit(states: &[&[f64]], k: usize) -> Result<PcaModel, ReadoutError> {
    let n = states.len();
    if n < 2 {
        return Err(ReadoutError::TooFewSamples { needed: 2, actual: n });
    }
    let d = states[0].len();
    if let Some(bad) = states.iter().find(|s| s.len() != d) {
        return Err(ReadoutError::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    if k == 0 || k > n.min(d) {
        return Err(ReadoutError::InvalidComponentCount { k, max: n.min(d) });
    }

    let mut mean = vec![0.0; d];
    for s in states {
        for (m, x) in mean.iter_mut().zip(s.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| states[i][j] - mean[j]);
    let denom = (n - 1) as f64;

    let mut pairs: Vec<(f64, Vec<f64>)> = if n <= d {
        let gram = &centered * centered.transpose();
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]].max(0.0);
        order
            .into_iter()
            .take(k)
            .filter(|&i| eig.eigenvalues[i] > RANK_TOL * top && eig.eigenvalues[i] > 0.0)
            .map(|i| {
                let lambda = eig.eigenvalues[i];
                let u = eig.eigenvectors.column(i);
                let v = centered.transpose() * u / lambda.sqrt();
                (lambda / denom, v.iter().copied().collect())
            })
            .collect()
    } else {
        let cov = centered.transpose() * &centered / denom;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]].max(0.0);
        order
            .into_iter()
            .take(k)
            .filter(|&i| eig.eigenvalues[i] > RANK_TOL * top && eig.eigenvalues[i] > 0.0)
            .map(|i| {
                (
                    eig.eigenvalues[i],
                    eig.eigenvectors.column(i).iter().copied().collect(),
                )
            })
            .collect()
    };

    // re-orthonormalize (the Gram route loses a little orthogonality on small
    // eigenvalues), then complete with standard basis vectors
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for (lambda, v) in pairs.drain(..) {
        if let Some(u) = orthonormalize(v, &components) {
            components.push(u);
            explained_variance.push(lambda);
        }
    }
    let mut basis = 0;
    while components.len() < k && basis < d {
        let mut e = vec![0.0; d];
        e[basis] = 1.0;
        basis += 1;
        if let Some(u) = orthonormalize(e, &components) {
            components.push(u);
            explained_variance.push(0.0);
        }
    }
    for c in &mut components {
        fix_sign(c);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let norm0 = dot(&v, &v).sqrt();
    for _ in 0..2 {
        for b in basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if !(norm > 1e-6 * norm0) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
