//! Temporal, joint and spiral scattering of a source-filter glide, with the strongest paths.
//!
//! cargo run --release --example spiral_scattering

use spiral_scattering::pipeline::{scalogram_of, second_order, PipelineConfig};
use spiral_scattering::scattering::{average_scattering, ScatteringCoefficients, TransformKind};
use spiral_scattering::sourcefilter::{synthesize, Envelope, SourceFilterSpec};

fn strongest(x2: &ScatteringCoefficients, count: usize) {
    let mut by_path: Vec<(usize, f64)> = x2
        .values
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>())
        .enumerate()
        .collect();
    by_path.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (i, e) in by_path.into_iter().take(count) {
        let p = &x2.paths[i];
        println!(
            "    lambda1 #{:<3} alpha {:>5} beta {:>5} gamma {:>5}  energy {e:.3e}",
            p.lambda1_index, p.alpha, p.beta, p.gamma
        );
    }
}

fn main() -> spiral_scattering::error::Result<()> {
    let fs = 16000.0;
    // pitch falling at 1 oct/s under a fixed formant
    let spec = SourceFilterSpec::new(
        400.0,
        -1.0,
        0.0,
        6,
        Envelope::LogGaussian {
            center_hz: 800.0,
            width_octaves: 1.0,
        },
        2.0,
        fs,
    );
    let x = synthesize(&spec)?.samples;
    let cfg = PipelineConfig::default();
    let sc = scalogram_of(&x, fs, &cfg)?;
    for kind in [TransformKind::Temporal, TransformKind::Joint, TransformKind::Spiral] {
        let start = std::time::Instant::now();
        let x2 = second_order(&sc, kind, &cfg.second_order)?;
        let s2 = average_scattering(&x2, 0.37)?;
        println!(
            "{kind:?}: {} paths, {} frames raw, {} averaged ({:.2} s)",
            x2.paths.len(),
            x2.frames(),
            s2.frames(),
            start.elapsed().as_secs_f64()
        );
        strongest(&x2, 3);
    }
    Ok(())
}
