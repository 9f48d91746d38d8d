mod common;

use lser::readout::{
    cross_validate, fit_fold, lda_fit, pca_fit, permutation_test, split_fold, sweep_components,
    sweep_lattice, EvalConfig, Sample,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn normal(g: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - g.random::<f64>();
    let u2: f64 = g.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_rows(n: usize, d: usize, g: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    // anisotropic so eigenvalues are well separated
    (0..n)
        .map(|_| (0..d).map(|j| normal(g) * (1.0 + j as f64)).collect())
        .collect()
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn pca_matches_dense_eigensolver() {
    let mut g = rng(21);
    let x = random_rows(50, 10, &mut g);
    let model = pca_fit(&refs(&x), 10).unwrap();
    let (values, vectors) = jacobi_eigen(covariance(&x));
    for k in 0..10 {
        assert!((model.explained_variance[k] - values[k]).abs() < 1e-8 * values[0]);
        let cos = dot(&model.components[k], &vectors[k]).abs();
        assert!((cos - 1.0).abs() < 1e-8);
        for j in 0..10 {
            let expect = if j == k { 1.0 } else { 0.0 };
            assert!((dot(&model.components[k], &model.components[j]) - expect).abs() < 1e-8);
        }
    }
}

#[test]
fn full_rank_projection_preserves_distances() {
    let mut g = rng(22);
    let n = 12;
    let x = random_rows(n, 693, &mut g);
    let model = pca_fit(&refs(&x), n - 1).unwrap();
    let p: Vec<Vec<f64>> = x.iter().map(|r| model.transform(r).unwrap()).collect();
    for i in 0..n {
        for j in 0..n {
            let d_orig: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let d_proj: f64 = p[i].iter().zip(&p[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!((d_orig - d_proj).abs() < 1e-8 * d_orig.max(1.0));
        }
    }
    for (k, c) in model.components.iter().enumerate() {
        assert!((dot(c, c) - 1.0).abs() < 1e-8);
        for other in &model.components[k + 1..] {
            assert!(dot(c, other).abs() < 1e-8);
        }
    }
}

#[test]
fn training_projection_is_centred_with_eigenvalue_variances() {
    let mut g = rng(23);
    for (n, d) in [(40, 693), (80, 20)] {
        let x = random_rows(n, d, &mut g);
        let model = pca_fit(&refs(&x), 8).unwrap();
        let p: Vec<Vec<f64>> = x.iter().map(|r| model.transform(r).unwrap()).collect();
        for k in 0..8 {
            let mean = p.iter().map(|r| r[k]).sum::<f64>() / n as f64;
            let var = p.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 1e-9 * (1.0 + model.explained_variance[0]).sqrt());
            assert!((var - model.explained_variance[k]).abs() < 1e-8 * model.explained_variance[0]);
        }
    }
}

fn gaussian_classes(centres: &[Vec<f64>], counts: &[usize], g: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, (centre, &count)) in centres.iter().zip(counts).enumerate() {
        for _ in 0..count {
            x.push(centre.iter().map(|m| m + normal(g)).collect());
            y.push(c);
        }
    }
    (x, y)
}

#[test]
fn well_separated_gaussians_are_classified() {
    let mut g = rng(24);
    let mut far = vec![0.0; 5];
    far[0] = 10.0;
    let centres = vec![vec![0.0; 5], far];
    let (x, y) = gaussian_classes(&centres, &[200, 200], &mut g);
    let model = lda_fit(&refs(&x), &y, 1e-3).unwrap();
    let (tx, ty) = gaussian_classes(&centres, &[2000, 2000], &mut g);
    let correct = tx.iter().zip(&ty).filter(|(f, &l)| model.predict(f).unwrap() == l).count();
    assert!(correct as f64 / tx.len() as f64 >= 0.999);
}

#[test]
fn indistinguishable_classes_fall_back_to_the_prior() {
    let mut g = rng(25);
    let centres = vec![vec![0.0; 3], vec![0.0; 3]];
    let (x, y) = gaussian_classes(&centres, &[300, 100], &mut g);
    let model = lda_fit(&refs(&x), &y, 1e-3).unwrap();
    let (tx, ty) = gaussian_classes(&centres, &[3000, 1000], &mut g);
    let acc = tx.iter().zip(&ty).filter(|(f, &l)| model.predict(f).unwrap() == l).count() as f64
        / tx.len() as f64;
    assert!((acc - 0.75).abs() < 0.05, "accuracy {acc}");
}

#[test]
fn discriminants_match_direct_formula() {
    let mut g = rng(26);
    let d = 6;
    let centres: Vec<Vec<f64>> = (0..4).map(|c| (0..d).map(|j| ((c * 3 + j) % 5) as f64).collect()).collect();
    let (x, y) = gaussian_classes(&centres, &[20, 30, 25, 15], &mut g);
    let gamma = 1e-3;
    let model = lda_fit(&refs(&x), &y, gamma).unwrap();

    // pooled covariance, shrinkage, and the discriminants written out directly
    let n = x.len();
    let k = 4;
    let means: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let rows: Vec<&Vec<f64>> = x.iter().zip(&y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
            (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
        })
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for (r, &l) in x.iter().zip(&y) {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - means[l][i]) * (r[j] - means[l][j]) / (n - k) as f64;
            }
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    for i in 0..d {
        for j in 0..d {
            cov[i][j] *= 1.0 - gamma;
        }
        cov[i][i] += gamma * trace / d as f64;
    }
    let priors: Vec<f64> = (0..k).map(|c| y.iter().filter(|&&l| l == c).count() as f64 / n as f64).collect();
    for query in x.iter().take(30) {
        let scores = model.discriminants(query).unwrap();
        for c in 0..k {
            let w = gauss_solve(cov.clone(), means[c].clone());
            let delta = dot(query, &w) - 0.5 * dot(&means[c], &w) + priors[c].ln();
            assert!((scores[c] - delta).abs() < 1e-8 * (1.0 + delta.abs()));
        }
        let best = (0..k).max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a))).unwrap();
        assert_eq!(model.predict(query).unwrap(), best);
    }
}

#[test]
fn predictions_are_affine_invariant_without_shrinkage() {
    let mut g = rng(27);
    let d = 4;
    let centres: Vec<Vec<f64>> = (0..3).map(|c| (0..d).map(|j| (c + j) as f64 * 0.8).collect()).collect();
    let (x, y) = gaussian_classes(&centres, &[40, 40, 40], &mut g);
    let (tx, _) = gaussian_classes(&centres, &[50, 50, 50], &mut g);
    let m: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 2.0 } else { 0.0 } + 0.3 * normal(&mut g)).collect())
        .collect();
    let shift: Vec<f64> = (0..d).map(|_| 5.0 * normal(&mut g)).collect();
    let map = |v: &Vec<f64>| -> Vec<f64> { (0..d).map(|i| dot(&m[i], v) + shift[i]).collect() };
    let base = lda_fit(&refs(&x), &y, 0.0).unwrap();
    let xm: Vec<Vec<f64>> = x.iter().map(map).collect();
    let moved = lda_fit(&refs(&xm), &y, 0.0).unwrap();
    let translated: Vec<Vec<f64>> = x.iter().map(|v| v.iter().map(|a| a + 3.0).collect()).collect();
    let shifted = lda_fit(&refs(&translated), &y, 1e-3).unwrap();
    let plain = lda_fit(&refs(&x), &y, 1e-3).unwrap();
    for q in &tx {
        assert_eq!(base.predict(q).unwrap(), moved.predict(&map(q)).unwrap());
        let qt: Vec<f64> = q.iter().map(|a| a + 3.0).collect();
        assert_eq!(plain.predict(q).unwrap(), shifted.predict(&qt).unwrap());
    }
}

fn corpus(per_class: usize, d: usize, signal: f64, seed: u64) -> Vec<Sample> {
    let mut g = rng(seed);
    let mut out = Vec::new();
    for c in 0..7 {
        for i in 0..per_class {
            let mut vt: Vec<f64> = (0..d).map(|_| normal(&mut g)).collect();
            let mut src: Vec<f64> = (0..d).map(|_| normal(&mut g)).collect();
            vt[c] += signal;
            src[d - 1 - c] += signal;
            out.push(Sample {
                vocal_tract: Some(vt),
                source: Some(src),
                label: c,
                speaker: format!("{:02}", i % 10),
            });
        }
    }
    out
}

#[test]
fn shuffled_labels_score_near_chance() {
    let mut samples = corpus(20, 30, 0.0, 28);
    let mut g = rng(29);
    for i in (1..samples.len()).rev() {
        let j = g.random_range(0..=i);
        let (a, b) = (samples[i].label, samples[j].label);
        samples[i].label = b;
        samples[j].label = a;
    }
    let cfg = EvalConfig {
        k_vt: 5,
        k_src: 5,
        ..EvalConfig::default()
    };
    let r = cross_validate(&samples, &cfg).unwrap();
    assert!((0.10..=0.20).contains(&r.mean_accuracy), "{}", r.mean_accuracy);
}

#[test]
fn report_structure() {
    let samples = corpus(12, 20, 3.0, 30);
    let cfg = EvalConfig {
        k_vt: 6,
        k_src: 6,
        n_folds: 20,
        ..EvalConfig::default()
    };
    let r = cross_validate(&samples, &cfg).unwrap();
    let mean = r.fold_accuracies.iter().sum::<f64>() / 20.0;
    assert!((r.mean_accuracy - mean).abs() < 1e-15);
    let mut per_class = [0u64; 7];
    for fold in 0..20 {
        for i in split_fold(&samples, &cfg, fold).unwrap().test {
            per_class[samples[i].label] += 1;
        }
    }
    for (c, row) in r.confusion_counts.iter().enumerate() {
        assert_eq!(row.iter().sum::<u64>(), per_class[c]);
        assert!((r.confusion_percent[c].iter().sum::<f64>() - 100.0).abs() < 0.01);
    }
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["fold_accuracies"].as_array().unwrap().len(), 20);
}

#[test]
fn sweep_borders_match_single_reservoir_runs() {
    let samples = corpus(20, 60, 2.0, 31);
    let base = EvalConfig {
        n_folds: 10,
        ..EvalConfig::default()
    };
    let mut cells = sweep_lattice((1, 44), (1, 44), 7);
    cells.push((29, 44));
    let grid = sweep_components(&samples, &base, &cells).unwrap();
    assert_eq!(grid.len(), cells.len());
    let cell = grid.iter().find(|c| (c.k_vt, c.k_src) == (29, 44)).unwrap();
    assert!((0.0..=1.0).contains(&cell.mean_acc) && cell.ci95 >= 0.0);

    for kv in [1, 15, 29] {
        let border = grid.iter().find(|c| (c.k_vt, c.k_src) == (kv, 0)).unwrap();
        let alone = cross_validate(&samples, &EvalConfig { k_vt: kv, k_src: 0, ..base.clone() }).unwrap();
        assert_eq!(border.mean_acc, alone.mean_accuracy);
        assert_eq!(border.ci95, alone.ci95);
    }
    let best = grid.iter().map(|c| c.mean_acc).fold(0.0, f64::max);
    let best_border = grid
        .iter()
        .filter(|c| c.k_vt == 0 || c.k_src == 0)
        .map(|c| c.mean_acc)
        .fold(0.0, f64::max);
    assert!(best >= best_border);
}

#[test]
fn test_samples_never_reach_the_fitted_models() {
    let samples = corpus(10, 40, 1.5, 32);
    let cfg = EvalConfig {
        k_vt: 8,
        k_src: 8,
        ..EvalConfig::default()
    };
    for fold in [0, 7, 33] {
        let split = split_fold(&samples, &cfg, fold).unwrap();
        let reference = fit_fold(&samples, &split.train, &cfg).unwrap();
        for &t in &split.test {
            let mut poisoned = samples.clone();
            poisoned[t].vocal_tract.as_mut().unwrap().iter_mut().for_each(|v| *v = 1e6);
            poisoned[t].source.as_mut().unwrap()[0] = f64::MAX;
            // the split stratifies on labels, so only features are poisoned for it
            assert_eq!(split_fold(&poisoned, &cfg, fold).unwrap().train, split.train);
            poisoned[t].label = (poisoned[t].label + 1) % 7;
            assert_eq!(fit_fold(&poisoned, &split.train, &cfg).unwrap(), reference);
        }
    }
}

#[test]
fn permutation_p_value_on_separable_data() {
    let samples = corpus(10, 20, 6.0, 33);
    let cfg = EvalConfig {
        k_vt: 6,
        k_src: 6,
        n_folds: 10,
        ..EvalConfig::default()
    };
    let p = permutation_test(&samples, &cfg, 19, 5).unwrap();
    assert_eq!(p.null_accuracies.len(), 19);
    assert!(p.observed > 0.9);
    assert!((p.p_value - 1.0 / 20.0).abs() < 1e-15);
}
