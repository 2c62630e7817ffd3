//! Octave-axis regularity of a harmonic comb against a stretched, inharmonic one.
//!
//! cargo run --release --example harmonicity [f0]

use spiral_scattering::filterbank::{build_modulation_bank, ModulationAxis};
use spiral_scattering::pipeline::{scalogram_of, PipelineConfig};
use spiral_scattering::scalogram::{average_time, to_spiral};
use spiral_scattering::sourcefilter::{inharmonic_comb, partials_below};
use spiral_scattering::validation::harmonicity_residual;

fn main() -> spiral_scattering::error::Result<()> {
    let fs = 16000.0;
    let f0: f64 = std::env::args().nth(1).map(|a| a.parse().expect("f0 in Hz")).unwrap_or(26.1);
    let cfg = PipelineConfig::default();
    let bank = build_modulation_bank(ModulationAxis::Octave, &cfg.second_order.gamma_resolutions, 16)?;
    for stretch in [0.0, 0.01, 0.02, 0.05] {
        let partials = partials_below(f0, stretch, 7500.0);
        let x = inharmonic_comb(f0, partials, stretch, 1.0, fs)?;
        let s1 = average_time(&scalogram_of(&x, fs, &cfg)?, 0.37)?;
        let r = harmonicity_residual(&to_spiral(&s1)?, &bank)?;
        println!("stretch {stretch:.2}: {partials:>3} partials, residual {r:.3}");
    }
    Ok(())
}
