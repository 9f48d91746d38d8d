//! Reference computations for the integration tests. Nothing here calls the
//! library routine it is used to check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Direct `Σ x[n] x[n+k]`.
pub fn direct_autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| {
            let mut s = 0.0;
            for n in 0..x.len().saturating_sub(k) {
                s += x[n] * x[n + k];
            }
            s
        })
        .collect()
}

/// Normal equations of order `m`: `Σ_j a_j r[|i-j|] = r[i]`, `i = 1..m`.
pub fn toeplitz_predictor(r: &[f64], m: usize) -> Vec<f64> {
    let a = (0..m)
        .map(|i| (0..m).map(|j| r[(i as isize - j as isize).unsigned_abs()]).collect())
        .collect();
    gauss_solve(a, r[1..=m].to_vec())
}

/// Predictor coefficients (`x(n) = Σ a_i x(n-i) + e(n)`) of a random stable
/// all-pole filter: conjugate root pairs with radius below `max_radius`.
pub fn random_stable_predictor(order: usize, max_radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // polynomial 1 + c1 z^-1 + ... built from second-order sections
    let mut poly = vec![1.0];
    let mut remaining = order;
    while remaining > 0 {
        let r = max_radius * rng.random::<f64>().sqrt();
        let section = if remaining >= 2 {
            let theta = std::f64::consts::PI * rng.random::<f64>();
            remaining -= 2;
            vec![1.0, -2.0 * r * theta.cos(), r * r]
        } else {
            remaining -= 1;
            vec![1.0, -(2.0 * rng.random::<f64>() - 1.0) * r]
        };
        let mut next = vec![0.0; poly.len() + section.len() - 1];
        for (i, p) in poly.iter().enumerate() {
            for (j, s) in section.iter().enumerate() {
                next[i + j] += p * s;
            }
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}

/// Run white noise through `1 / (1 - Σ a_i z^-i)`.
pub fn ar_process(a: &[f64], n: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let e: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut v = e[i];
        for (k, ak) in a.iter().enumerate() {
            if i > k {
                v += ak * x[i - k - 1];
            }
        }
        x[i] = v;
    }
    (x, e)
}

/// Eigenvalues and column eigenvectors of a symmetric matrix by cyclic
/// Jacobi rotations, eigenvalues descending.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance (divisor n - 1) of the rows of `x`.
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    x.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64
                })
                .collect()
        })
        .collect()
}

/// Magnitude spectrum of `x` zero-padded to `n` points; returns the peak
/// frequency (Hz, parabolic interpolation on the log magnitude) and value.
pub fn fft_peak(x: &[f64], n: usize, sample_rate: f64) -> (f64, f64) {
    use rustfft::{num_complex::Complex, FftPlanner};
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|i| Complex::new(x.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mags: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let k = (1..mags.len() - 1)
        .max_by(|&i, &j| mags[i].total_cmp(&mags[j]))
        .unwrap();
    let (a, b, c) = (mags[k - 1].ln(), mags[k].ln(), mags[k + 1].ln());
    let shift = 0.5 * (a - c) / (a - 2.0 * b + c);
    let peak = (b - 0.25 * (a - c) * shift).exp();
    ((k as f64 + shift) * sample_rate / n as f64, peak)
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}
