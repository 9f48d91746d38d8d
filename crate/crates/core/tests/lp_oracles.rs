mod common;

use std::f64::consts::PI;

use lser::audio::{frame_signal, hamming, AudioSignal};
use lser::lp::{
    analyze_frame, analyze_frames, autocorrelation, levinson_durbin, lp_spectrum, residual,
    synthesize, FrameLayout, LpCoefficients,
};
use nalgebra::DMatrix;
use rand::Rng;

use common::*;

#[test]
fn autocorrelation_of_sinusoid_matches_direct_sum() {
    let x: Vec<f64> = (0..480).map(|n| (2.0 * PI * 500.0 * n as f64 / 16000.0).sin()).collect();
    let r = autocorrelation(&x, 16).unwrap();
    let oracle = direct_autocorrelation(&x, 16);
    for (a, b) in r.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn levinson_matches_dense_toeplitz_solve() {
    let mut g = rng(11);
    let window = hamming(480);
    for _ in 0..100 {
        let a = random_stable_predictor(16, 0.97, &mut g);
        let (x, _) = ar_process(&a, 480, &mut g);
        let frame: Vec<f64> = x.iter().zip(&window).map(|(s, w)| s * w).collect();
        let r = direct_autocorrelation(&frame, 16);
        let lp = levinson_durbin(&r, 16).unwrap();
        let oracle = toeplitz_predictor(&r, 16);
        for (c, o) in lp.coeffs.iter().zip(&oracle) {
            assert!((c - o).abs() < 1e-8, "{c} vs {o}");
        }
        let e: f64 = r[0] - oracle.iter().zip(&r[1..]).map(|(a, r)| a * r).sum::<f64>();
        assert!((lp.error_energy - e).abs() < 1e-8 * r[0]);
    }
}

#[test]
fn error_energy_does_not_increase_with_order() {
    let mut g = rng(12);
    for _ in 0..20 {
        let x: Vec<f64> = (0..480).map(|_| g.random::<f64>() - 0.5).collect();
        let r = direct_autocorrelation(&x, 16);
        assert_eq!(levinson_durbin(&r, 0).unwrap().error_energy, r[0]);
        let mut prev = r[0];
        for m in 1..=16 {
            let e = levinson_durbin(&r, m).unwrap().error_energy;
            assert!(e <= prev * (1.0 + 1e-12));
            prev = e;
        }
    }
}

#[test]
fn inverse_filter_roots_inside_unit_circle() {
    let mut g = rng(13);
    let window = hamming(480);
    for i in 0..1000 {
        // alternate between noise and strongly resonant frames
        let x: Vec<f64> = if i % 2 == 0 {
            (0..480).map(|_| g.random::<f64>() - 0.5).collect()
        } else {
            let a = random_stable_predictor(16, 0.999, &mut g);
            ar_process(&a, 480, &mut g).0
        };
        let frame: Vec<f64> = x.iter().zip(&window).map(|(s, w)| s * w).collect();
        let lp = analyze_frame(&frame, 16).unwrap();
        // companion matrix of z^16 - a1 z^15 - ... - a16
        let m = 16;
        let comp = DMatrix::from_fn(m, m, |r, c| {
            if r == 0 {
                lp.coeffs[c]
            } else if c + 1 == r {
                1.0
            } else {
                0.0
            }
        });
        for z in comp.complex_eigenvalues().iter() {
            assert!(z.norm() < 1.0, "root {z} on or outside the unit circle");
        }
    }
}

fn fixed_analyses(a: &[f64], n: usize, layout: FrameLayout) -> Vec<LpCoefficients> {
    let lp = LpCoefficients {
        coeffs: a.to_vec(),
        error_energy: 1.0,
        reflection: vec![0.0; a.len()],
    };
    vec![lp; layout.frame_count(n)]
}

#[test]
fn residual_recovers_driving_noise() {
    let mut g = rng(14);
    let a = random_stable_predictor(16, 0.95, &mut g);
    let (x, e) = ar_process(&a, 16000, &mut g);
    let signal = AudioSignal::new(x, 16000).unwrap();
    let layout = FrameLayout::new(480, 80);
    let analyses = fixed_analyses(&a, signal.len(), layout);
    let res = residual(&signal, &analyses, layout).unwrap();
    for n in 16..e.len() - 16 {
        assert!((res.samples[n] - e[n]).abs() < 1e-6);
    }
}

#[test]
fn impulse_driven_ar2_residual_is_the_impulse() {
    let n = 4000;
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut v = if i == 0 { 1.0 } else { 0.0 };
        if i >= 1 {
            v += x[i - 1];
        }
        if i >= 2 {
            v -= 0.5 * x[i - 2];
        }
        x[i] = v;
    }
    let r = direct_autocorrelation(&x, 2);
    let lp = levinson_durbin(&r, 2).unwrap();
    assert!((lp.coeffs[0] - 1.0).abs() < 1e-9 && (lp.coeffs[1] + 0.5).abs() < 1e-9);
    let signal = AudioSignal::new(x, 16000).unwrap();
    let layout = FrameLayout::new(480, 80);
    let res = residual(&signal, &vec![lp; layout.frame_count(n)], layout).unwrap();
    assert!((res.samples[0] - 1.0).abs() < 1e-9);
    assert!(res.samples[1..].iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn analysis_synthesis_round_trip() {
    let mut g = rng(15);
    let a = random_stable_predictor(12, 0.9, &mut g);
    let (x, _) = ar_process(&a, 8000, &mut g);
    let signal = AudioSignal::new(x.clone(), 16000).unwrap();
    let frames = frame_signal(&signal, 30.0, 5.0).unwrap();
    let analyses = analyze_frames(&frames, 16).unwrap();
    let layout = FrameLayout::from_frames(&frames);
    let res = residual(&signal, &analyses, layout).unwrap();
    let back = synthesize(&res, &analyses, layout).unwrap();
    let err: Vec<f64> = x.iter().zip(&back).map(|(a, b)| a - b).collect();
    assert!(rms(&err) / rms(&x) < 1e-6);
}

#[test]
fn single_real_pole_spectrum() {
    let lp = LpCoefficients {
        coeffs: vec![0.9],
        error_energy: 0.25,
        reflection: vec![0.9],
    };
    let grid: Vec<f64> = (0..=80).map(|i| i as f64 * 100.0).collect();
    let s = lp_spectrum(&lp, &grid, 16000).unwrap();
    assert!((s.magnitudes_db[0] - 20.0 * (0.5f64 / 0.1).log10()).abs() < 1e-9);
    assert!(s.magnitudes_db.windows(2).all(|w| w[1] < w[0]));
    // closed form |1 - 0.9 e^{-jω}|² = 1.81 - 1.8 cos ω
    for (f, db) in grid.iter().zip(&s.magnitudes_db) {
        let w = 2.0 * PI * f / 16000.0;
        let oracle = 20.0 * 0.5f64.log10() - 10.0 * (1.81 - 1.8 * w.cos()).log10();
        assert!((db - oracle).abs() < 1e-9);
    }
}

#[test]
fn resonance_peak_matches_impulse_response_fft() {
    let (radius, fc, fs) = (0.98, 1000.0, 16000.0);
    let a = vec![2.0 * radius * (2.0 * PI * fc / fs).cos(), -radius * radius];
    // impulse response of 1/A(z), peak located by FFT
    let mut h = vec![0.0; 4096];
    for n in 0..h.len() {
        let mut v = if n == 0 { 1.0 } else { 0.0 };
        if n >= 1 {
            v += a[0] * h[n - 1];
        }
        if n >= 2 {
            v += a[1] * h[n - 2];
        }
        h[n] = v;
    }
    let (fft_peak_hz, _) = fft_peak(&h, 65536, fs);
    let lp = LpCoefficients {
        coeffs: a,
        error_energy: 1.0,
        reflection: vec![0.0; 2],
    };
    let step = 10.0;
    let grid: Vec<f64> = (1..800).map(|i| i as f64 * step).collect();
    let s = lp_spectrum(&lp, &grid, 16000).unwrap();
    let k = (0..grid.len())
        .max_by(|&i, &j| s.magnitudes_db[i].total_cmp(&s.magnitudes_db[j]))
        .unwrap();
    assert!((grid[k] - fft_peak_hz).abs() <= step);
    assert!((grid[k] - fc).abs() <= step);
}
