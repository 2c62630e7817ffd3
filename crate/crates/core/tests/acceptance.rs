//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
//! Run with `cargo test --test acceptance`.

mod common;

use std::process::Command;
use std::time::Instant;

use ndarray::{s, Array2, ArrayD, IxDyn};

use common::{
    comb_residual, fft_direct_deviation, glide, noise_spin, plane_of, translation_changes,
    two_segment_spin, worst_expansion, FS, T,
};
use spiral_scattering::filterbank::{build_order1, littlewood_paley};
use spiral_scattering::io::{read_tensor, read_wav, write_tensor, write_wav};
use spiral_scattering::pipeline::{scalogram_of, second_order, PipelineConfig};
use spiral_scattering::scalogram::{from_spiral, to_spiral};
use spiral_scattering::scattering::{
    scatter_spiral, scatter_spiral_sequential, ScatteringCoefficients, SecondOrderBanks, SpiralAxis,
    TransformKind,
};
use spiral_scattering::validation::interior_window;
use spiral_scattering::wavelets::LowpassKernel;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn plane_reproduction() -> Outcome {
    let cfg = PipelineConfig::default();
    let start = Instant::now();
    let run = plane_of(&glide(-1.0, 0.5), &cfg);
    let secs = start.elapsed().as_secs_f64();
    let f = &run.fit;
    let (vs, vf) = (f.estimated_source_velocity, f.estimated_filter_velocity);
    let pass = (vs + 1.0).abs() <= 0.2
        && vs < 0.0
        && (vf - 0.5).abs() <= 0.1
        && vf > 0.0
        && f.mass_fraction >= 0.5
        && secs <= 60.0;
    // v_f estimates under other true filter velocities, for context
    let controls: Vec<String> = [-0.5, 0.0]
        .iter()
        .map(|&v| format!("v_f={v}: {:.3}", plane_of(&glide(-1.0, v), &cfg).fit.estimated_filter_velocity))
        .collect();
    outcome(
        pass,
        format!(
            "v_s={vs:.3} v_f={vf:.3} mass={:.3} residual={:.3} {secs:.1}s; controls {}",
            f.mass_fraction,
            f.residual,
            controls.join(", ")
        ),
    )
}

fn zero_velocity() -> Outcome {
    let run = plane_of(&glide(0.0, 0.0), &PipelineConfig::default());
    let span = run.fit.max_predicted_alpha(&run.pairs);
    outcome(
        span <= 2.0 * run.alpha_min,
        format!(
            "v_s={:.3} v_f={:.3} max |predicted alpha|={span:.3} Hz (bin edge {} Hz)",
            run.fit.estimated_source_velocity,
            run.fit.estimated_filter_velocity,
            2.0 * run.alpha_min
        ),
    )
}

fn harmonicity() -> Outcome {
    let start = Instant::now();
    let harmonic = comb_residual(0.0);
    let stretched = comb_residual(0.02);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        harmonic <= 0.2 && stretched >= 2.0 * harmonic && secs <= 10.0,
        format!(
            "harmonic {harmonic:.3}, stretched {stretched:.3} (ratio {:.2}, need >= 2), {secs:.1}s",
            stretched / harmonic
        ),
    )
}

fn spin() -> Outcome {
    let [fall, rise] = two_segment_spin();
    let (fg, rg) = (fall.gamma_ratio.unwrap(), rise.gamma_ratio.unwrap());
    let sides = fall.beta_ratio < 1.0 && fg < 1.0 && rise.beta_ratio > 1.0 && rg > 1.0;
    let ((nb, ng), _) = noise_spin(10);
    let balanced = (nb - 1.0).abs() <= 0.1 && (ng - 1.0).abs() <= 0.1;
    outcome(
        sides && balanced,
        format!(
            "falling beta {:.2} gamma {fg:.2}; rising beta {:.2} gamma {rg:.2}; noise beta {nb:.3} gamma {ng:.3}",
            fall.beta_ratio, rise.beta_ratio
        ),
    )
}

fn frame_quality() -> Outcome {
    let fb = build_order1(16, 8, 1 << 16, FS).unwrap();
    let d = littlewood_paley(&fb, &LowpassKernel::new(T).unwrap()).unwrap();
    outcome(
        (d.upper_bound - 1.0).abs() <= 1e-9 && d.lower_bound >= 0.75,
        format!(
            "A={:.4} B={:.6} over [{:.1}, {:.1}] Hz",
            d.lower_bound, d.upper_bound, d.band.0, d.band.1
        ),
    )
}

fn stability() -> Outcome {
    let (s1, s2) = translation_changes();
    let (u1, smooth) = worst_expansion(100);
    let dev = fft_direct_deviation();
    outcome(
        s1 <= 0.1 && s2 <= 0.1 && u1 <= 1.0 + 1e-9 && smooth <= 1.0 + 1e-9 && dev <= 1e-6,
        format!(
            "translation S1 {s1:.4} S2 {s2:.4}; expansion {u1:.4} / smoothed {smooth:.4}; fft vs direct {dev:.1e}"
        ),
    )
}

/// Beta and gamma of the path with the most interior energy; time reversal must flip beta.
fn dominant_spin(x2: &ScatteringCoefficients) -> (f64, f64) {
    let win = interior_window(x2.frames());
    let (i, _) = x2
        .values
        .rows()
        .into_iter()
        .map(|r| r.slice(s![win.clone()]).iter().map(|v| v * v).sum::<f64>())
        .enumerate()
        .fold((0, -1.0), |b, (i, e)| if e > b.1 { (i, e) } else { b });
    (x2.paths[i].beta, x2.paths[i].gamma)
}

fn max_rel(a: &Array2<f64>, b: &Array2<f64>, scale: f64) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) / scale
}

fn structure() -> Outcome {
    let cfg = PipelineConfig::default();
    let x = glide(-1.0, 0.5);
    let sc = scalogram_of(&x, FS, &cfg).unwrap();
    let sp = to_spiral(&sc).unwrap();
    let round_trip = from_spiral(&sp) == sc;

    let banks = SecondOrderBanks::for_scalogram(&sc, &cfg.second_order).unwrap();
    let fused = scatter_spiral(&sp, &banks.alpha, &banks.beta, &banks.gamma).unwrap();
    let scale = fused.values.iter().cloned().fold(0.0, f64::max);
    let order = [
        [SpiralAxis::Time, SpiralAxis::LogFrequency, SpiralAxis::Octave],
        [SpiralAxis::Octave, SpiralAxis::LogFrequency, SpiralAxis::Time],
        [SpiralAxis::LogFrequency, SpiralAxis::Octave, SpiralAxis::Time],
    ]
    .iter()
    .map(|o| {
        let seq = scatter_spiral_sequential(&sp, &banks.alpha, &banks.beta, &banks.gamma, *o).unwrap();
        max_rel(&fused.values, &seq.values, scale)
    })
    .fold(0.0, f64::max);

    let c = 3.25;
    let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
    let sc_c = scalogram_of(&scaled, FS, &cfg).unwrap();
    let x2_c = second_order(&sc_c, TransformKind::Spiral, &cfg.second_order).unwrap();
    let homog = max_rel(&fused.values.mapv(|v| c * v), &x2_c.values, c * scale);

    let rev: Vec<f64> = x.iter().rev().cloned().collect();
    let x2_rev = second_order(&scalogram_of(&rev, FS, &cfg).unwrap(), TransformKind::Spiral, &cfg.second_order).unwrap();
    let (fb, fg) = dominant_spin(&fused);
    let (rb, rg) = dominant_spin(&x2_rev);
    let flip = fb * rb < 0.0;

    outcome(
        round_trip && order <= 1e-9 && homog <= 1e-12 && flip,
        format!(
            "round-trip {}; axis order {order:.1e}; homogeneity {homog:.1e}; dominant (beta, gamma) ({fb}, {fg}) -> ({rb}, {rg})",
            if round_trip { "exact" } else { "differs" }
        ),
    )
}

fn io_suite() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let x = glide(-1.0, 0.5);
    let peak = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let x: Vec<f64> = x.iter().map(|v| 0.9 * v / peak).collect();
    let wav = dir.path().join("x.wav");
    write_wav(&wav, &x, FS).unwrap();
    let back = read_wav(&wav).unwrap();
    let wav_err = x
        .iter()
        .zip(&back.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let wav_ok = back.samples.len() == x.len() && back.sample_rate == FS && wav_err <= 0.5 / 32768.0 + 1e-12;

    let t = ArrayD::from_shape_fn(IxDyn(&[3, 5, 7]), |i| {
        (i[0] as f64 - 1.3).powi(3) / (1.0 + i[1] as f64) + 1e-300 * i[2] as f64
    });
    let bin = dir.path().join("t.bin");
    write_tensor(&t, &bin).unwrap();
    let tb = read_tensor(&bin).unwrap();
    let spsc_ok = tb.shape() == t.shape() && tb.iter().zip(t.iter()).all(|(a, b)| a.to_bits() == b.to_bits());

    let spec = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/headline.json");
    let mut deterministic = true;
    for fmt in ["csv", "bin"] {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let p = dir.path().join(format!("s{k}.{fmt}"));
                let st = Command::new(env!("CARGO_BIN_EXE_spiral"))
                    .args(["scatter", "--kind", "spiral", "--format", fmt, "-i"])
                    .arg(&spec)
                    .arg("-o")
                    .arg(&p)
                    .status()
                    .unwrap();
                assert!(st.success());
                std::fs::read(p).unwrap()
            })
            .collect();
        deterministic &= !outs[0].is_empty() && outs[0] == outs[1];
    }
    outcome(
        wav_ok && spsc_ok && deterministic,
        format!(
            "wav max error {:.2} LSB; spsc {}; cli {}",
            wav_err * 32768.0,
            if spsc_ok { "bit-exact" } else { "differs" },
            if deterministic { "deterministic" } else { "non-deterministic" }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 plane reproduction", plane_reproduction),
        ("2 zero-velocity control", zero_velocity),
        ("3 harmonicity", harmonicity),
        ("4 spin asymmetry", spin),
        ("5 frame quality", frame_quality),
        ("6 stability", stability),
        ("7 structure", structure),
        ("8 io", io_suite),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
