//! Fit the plane of spiral scattering energy and read off pitch and envelope velocities.
//!
//! cargo run --release --example plane_fit [source_velocity] [filter_velocity]

use spiral_scattering::pipeline::{scalogram_of, second_order, PipelineConfig};
use spiral_scattering::scattering::TransformKind;
use spiral_scattering::sourcefilter::{synthesize, Envelope, SourceFilterSpec};
use spiral_scattering::validation::{fit_plane_interior_against, modulation_pairs};

fn main() -> spiral_scattering::error::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("velocity in oct/s"));
    let vs = args.next().unwrap_or(-1.0);
    let vf = args.next().unwrap_or(0.5);
    let fs = 16000.0;
    let spec = SourceFilterSpec::new(
        400.0,
        vs,
        vf,
        6,
        Envelope::LogGaussian {
            center_hz: 800.0,
            width_octaves: 1.0,
        },
        2.0,
        fs,
    );
    let syn = synthesize(&spec)?;
    for w in &syn.warnings {
        println!("synthesis warning: {w}");
    }
    let cfg = PipelineConfig::default();
    let sc = scalogram_of(&syn.samples, fs, &cfg)?;
    let x2 = second_order(&sc, TransformKind::Spiral, &cfg.second_order)?;
    let fit = fit_plane_interior_against(&x2, &sc)?;
    println!("true:      source {vs:+.3} oct/s, filter {vf:+.3} oct/s");
    println!(
        "estimated: source {:+.3} oct/s, filter {:+.3} oct/s",
        fit.estimated_source_velocity, fit.estimated_filter_velocity
    );
    println!(
        "residual {:.3}, energy within an octave of the plane {:.3}",
        fit.residual, fit.mass_fraction
    );
    let pairs = modulation_pairs(&x2);
    println!(
        "largest predicted |alpha| over the bank: {:.2} Hz (alpha_min {} Hz)",
        fit.max_predicted_alpha(&pairs),
        cfg.second_order.alpha_min
    );
    Ok(())
}
