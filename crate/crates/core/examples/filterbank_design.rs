//! Build the default first-order bank and a second-order set, and print frame bounds.
//!
//! cargo run --release --example filterbank_design

use spiral_scattering::filterbank::{
    build_modulation_bank, build_order1, build_order2_time_up_to, littlewood_paley, ModulationAxis,
};
use spiral_scattering::wavelets::LowpassKernel;

fn main() -> spiral_scattering::error::Result<()> {
    let fs = 16000.0;
    let bank = build_order1(16, 8, 1 << 16, fs)?;
    let centers = bank.frequencies();
    println!("first order: {} gammatone filters, Q = {}", bank.len(), bank.quality);
    println!(
        "  centers {:.1} .. {:.1} Hz (grid resolution {:.3} Hz)",
        bank.centers[0],
        bank.centers[bank.len() - 1],
        centers[1] - centers[0]
    );
    for octave in 0..bank.octaves {
        let (oct, chroma0) = bank.spiral_index(octave * 16);
        println!("  octave {oct}: first filter at {:.1} Hz (chroma {chroma0})", bank.centers[octave * 16]);
    }

    let lp = LowpassKernel::new(0.37)?;
    let d = littlewood_paley(&bank, &lp)?;
    println!(
        "Littlewood-Paley after renormalization: A = {:.4}, B = {:.4} over {:.1}-{:.1} Hz",
        d.lower_bound, d.upper_bound, d.band.0, d.band.1
    );

    // hop 128 gives 125 frames/s; the temporal modulation bank stops at a quarter of that
    let frame_rate = fs / 128.0;
    let alpha = build_order2_time_up_to(512, frame_rate, 1.0, frame_rate / 4.0)?;
    println!("temporal modulation centers (Hz): {:?}", alpha.centers);
    let beta = build_modulation_bank(
        ModulationAxis::LogFrequency { bins_per_octave: 16 },
        &[0.25, 0.5, 1.0, 2.0],
        256,
    )?;
    println!("log-frequency spins (cycles/octave): {:?}", beta.centers);
    let gamma = build_modulation_bank(ModulationAxis::Octave, &[0.25, 0.5], 16)?;
    println!("octave spins (cycles/octave): {:?}", gamma.centers);
    Ok(())
}
