//! Measurement helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{rngs::StdRng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use spiral_scattering::filterbank::{build_modulation_bank, build_order1, Filterbank, ModulationAxis};
use spiral_scattering::pipeline::{scalogram_of, second_order, PipelineConfig};
use spiral_scattering::scalogram::{average_time, cqt, smooth_time, to_spiral};
use spiral_scattering::scattering::{average_scattering, ScatteringCoefficients, TransformKind};
use spiral_scattering::sourcefilter::{
    inharmonic_comb, partials_below, synthesize, synthesize_segments, Envelope, Segment,
    SourceFilterSpec,
};
use spiral_scattering::validation::{
    fit_plane_interior_against, harmonicity_residual, interior_window, modulation_pairs,
    spin_asymmetry, PlaneFit, SpinAsymmetry,
};
use spiral_scattering::wavelets::LowpassKernel;

pub const FS: f64 = 16000.0;
pub const T: f64 = 0.37;

pub fn headline_envelope() -> Envelope {
    Envelope::LogGaussian {
        center_hz: 800.0,
        width_octaves: 1.0,
    }
}

/// 400 Hz, 6 partials, 2 s at 16 kHz under the default envelope.
pub fn glide(source_velocity: f64, filter_velocity: f64) -> Vec<f64> {
    let spec = SourceFilterSpec::new(
        400.0,
        source_velocity,
        filter_velocity,
        6,
        headline_envelope(),
        2.0,
        FS,
    );
    synthesize(&spec).unwrap().samples
}

pub struct PlaneRun {
    pub fit: PlaneFit,
    pub pairs: Vec<(f64, f64)>,
    pub alpha_min: f64,
}

pub fn plane_of(x: &[f64], cfg: &PipelineConfig) -> PlaneRun {
    let sc = scalogram_of(x, FS, cfg).unwrap();
    let x2 = second_order(&sc, TransformKind::Spiral, &cfg.second_order).unwrap();
    PlaneRun {
        fit: fit_plane_interior_against(&x2, &sc).unwrap(),
        pairs: modulation_pairs(&x2),
        alpha_min: cfg.second_order.alpha_min,
    }
}

/// Dense comb starting at the lowest first-order center, partials up to 7.5 kHz.
pub fn comb_residual(stretch: f64) -> f64 {
    let cfg = PipelineConfig::default();
    let f0 = 0.4 * FS * 2f64.powf(-((cfg.quality * cfg.octaves - 1) as f64) / cfg.quality as f64);
    let x = inharmonic_comb(f0, partials_below(f0, stretch, 7500.0), stretch, 1.0, FS).unwrap();
    let s1 = average_time(&scalogram_of(&x, FS, &cfg).unwrap(), T).unwrap();
    let bank = build_modulation_bank(
        ModulationAxis::Octave,
        &cfg.second_order.gamma_resolutions,
        (2 * cfg.octaves).next_power_of_two(),
    )
    .unwrap();
    harmonicity_residual(&to_spiral(&s1).unwrap(), &bank).unwrap()
}

/// Falling then rising pitch and envelope; spin ratios over the middle of each second.
pub fn two_segment_spin() -> [SpinAsymmetry; 2] {
    let segs = [
        Segment {
            duration: 1.0,
            source_velocity: -1.0,
            filter_velocity: -2.0,
        },
        Segment {
            duration: 1.0,
            source_velocity: 1.0,
            filter_velocity: 2.0,
        },
    ];
    let env = Envelope::LogGaussian {
        center_hz: 800.0,
        width_octaves: 0.5,
    };
    let x = synthesize_segments(400.0, &segs, 6, &env, FS, 16).unwrap().samples;
    let x2 = scalogram_spiral(&x);
    let fr = x2.frame_rate;
    let w = |a: f64, b: f64| (a * fr) as usize..(b * fr) as usize;
    [
        spin_asymmetry(&x2, w(0.2, 0.8)).unwrap(),
        spin_asymmetry(&x2, w(1.2, 1.8)).unwrap(),
    ]
}

fn scalogram_spiral(x: &[f64]) -> ScatteringCoefficients {
    let cfg = PipelineConfig::default();
    let sc = scalogram_of(x, FS, &cfg).unwrap();
    second_order(&sc, TransformKind::Spiral, &cfg.second_order).unwrap()
}

pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Positive/negative spin energy ratios of 2 s white noise, pooled over seeds
/// (interior frames), plus the per-seed ratios.
pub fn noise_spin(seeds: u64) -> ((f64, f64), Vec<(f64, f64)>) {
    let (mut bp, mut bn, mut gp, mut gn) = (0.0, 0.0, 0.0, 0.0);
    let mut each = Vec::new();
    for seed in 0..seeds {
        let x2 = scalogram_spiral(&white_noise(32000, seed));
        let win = interior_window(x2.frames());
        for (p, row) in x2.paths.iter().zip(x2.values.rows()) {
            let e: f64 = row.slice(ndarray::s![win.clone()]).iter().map(|v| v * v).sum();
            if p.beta > 0.0 {
                bp += e;
            } else {
                bn += e;
            }
            if p.gamma > 0.0 {
                gp += e;
            } else {
                gn += e;
            }
        }
        let s = spin_asymmetry(&x2, win).unwrap();
        each.push((s.beta_ratio, s.gamma_ratio.unwrap()));
    }
    ((bp / bn, gp / gn), each)
}

fn rel_change(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let n: f64 = a.iter().map(|x| x * x).sum();
    (d / n).sqrt()
}

/// Relative change of S1 and of averaged spiral S2 when a 1 kHz sine onset moves by T/32.
pub fn translation_changes() -> (f64, f64) {
    let shift = (T / 32.0 * FS).round() as usize;
    let onset = |start: usize| -> Vec<f64> {
        (0..32000)
            .map(|i| {
                if i < start {
                    0.0
                } else {
                    (2.0 * PI * 1000.0 * (i - start) as f64 / FS).sin()
                }
            })
            .collect()
    };
    let cfg = PipelineConfig::default();
    let measure = |x: &[f64]| {
        let sc = scalogram_of(x, FS, &cfg).unwrap();
        let s1 = average_time(&sc, T).unwrap();
        let x2 = second_order(&sc, TransformKind::Spiral, &cfg.second_order).unwrap();
        (s1.values, average_scattering(&x2, T).unwrap().values)
    };
    let (a1, a2) = measure(&onset(8000));
    let (b1, b2) = measure(&onset(8000 + shift));
    (rel_change(&a1, &b1), rel_change(&a2, &b2))
}

/// Largest `||U x - U y|| / ||x - y||` over random pairs, for the scalogram layer and its
/// `phi_T` smoothing, with the renormalized bank at hop 1 and no padding.
pub fn worst_expansion(pairs: usize) -> (f64, f64) {
    let fs = 8000.0;
    let n = 4096;
    let lp = LowpassKernel::new(T).unwrap();
    let fb = build_order1(8, 5, n, fs).unwrap().renormalized(Some(&lp));
    let (mut w1, mut ws) = (0.0f64, 0.0f64);
    for k in 0..pairs as u64 {
        let x = white_noise(n, 1000 + 2 * k);
        let scale = 0.1 + (k % 7) as f64;
        let y: Vec<f64> = white_noise(n, 1001 + 2 * k)
            .iter()
            .zip(&x)
            .map(|(e, v)| v + scale * e * if k % 2 == 0 { 1.0 } else { 0.01 })
            .collect();
        let dx = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let ux = cqt(&x, fs, &fb, 1).unwrap();
        let uy = cqt(&y, fs, &fb, 1).unwrap();
        let du = |a: &Array2<f64>, b: &Array2<f64>| {
            a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
        };
        w1 = w1.max(du(&ux.values, &uy.values) / dx);
        let (sx, sy) = (smooth_time(&ux, T).unwrap(), smooth_time(&uy, T).unwrap());
        ws = ws.max(du(&sx.values, &sy.values) / dx);
    }
    (w1, ws)
}

/// Max relative deviation between the FFT scalogram and a DFT-free direct convolution
/// on a 2048-sample signal (no padding, so both are circular).
pub fn fft_direct_deviation() -> f64 {
    let fs = 8000.0;
    let n = 2048;
    let hop = 16;
    let fb: Filterbank = build_order1(4, 3, n, fs).unwrap();
    let x: Vec<f64> = (0..n)
        .map(|i| (2.0 * PI * 440.0 * i as f64 / fs).sin() + ((i * 37) % 101) as f64 / 101.0 - 0.5)
        .collect();
    let fast = cqt(&x, fs, &fb, hop).unwrap();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (i, h) in fb.responses.iter().enumerate() {
        // impulse response by the defining sum, not by an FFT
        let imp: Vec<Complex64> = (0..n)
            .map(|t| {
                h.iter()
                    .enumerate()
                    .map(|(k, hk)| hk * Complex64::from_polar(1.0, 2.0 * PI * (k * t % n) as f64 / n as f64))
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect();
        for f in 0..n / hop {
            let t = f * hop;
            let acc: Complex64 = (0..n).map(|k| imp[k] * x[(t + n - k) % n]).sum();
            scale = scale.max(acc.norm());
            worst = worst.max((acc.norm() - fast.values[[f, i]]).abs());
        }
    }
    worst / scale
}
