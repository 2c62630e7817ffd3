//! Spin asymmetry of a falling-then-rising glide and of white noise.
//!
//! cargo run --release --example spin

use rand::{rngs::StdRng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use spiral_scattering::pipeline::{scalogram_of, second_order, PipelineConfig};
use spiral_scattering::scattering::{ScatteringCoefficients, TransformKind};
use spiral_scattering::sourcefilter::{synthesize_segments, Envelope, Segment};
use spiral_scattering::validation::{interior_window, spin_asymmetry};

fn spiral(x: &[f64], fs: f64) -> spiral_scattering::error::Result<ScatteringCoefficients> {
    let cfg = PipelineConfig::default();
    let sc = scalogram_of(x, fs, &cfg)?;
    second_order(&sc, TransformKind::Spiral, &cfg.second_order)
}

fn main() -> spiral_scattering::error::Result<()> {
    let fs = 16000.0;
    let segments = [
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
    let x = synthesize_segments(400.0, &segments, 6, &env, fs, 16)?.samples;
    let x2 = spiral(&x, fs)?;
    let fr = x2.frame_rate;
    for (name, a, b) in [("falling", 0.2, 0.8), ("rising", 1.2, 1.8)] {
        let s = spin_asymmetry(&x2, (a * fr) as usize..(b * fr) as usize)?;
        println!(
            "{name:>8}: beta ratio {:.2}, gamma ratio {:.2}",
            s.beta_ratio,
            s.gamma_ratio.unwrap_or(f64::NAN)
        );
    }

    let mut rng = StdRng::seed_from_u64(0);
    let noise: Vec<f64> = (0..32000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x2 = spiral(&noise, fs)?;
    let s = spin_asymmetry(&x2, interior_window(x2.frames()))?;
    println!(
        "   noise: beta ratio {:.2}, gamma ratio {:.2}",
        s.beta_ratio,
        s.gamma_ratio.unwrap_or(f64::NAN)
    );
    Ok(())
}
