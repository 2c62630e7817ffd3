//! Scalogram of an exponential chirp, its spiral reshape, and a PGM picture of it.
//!
//! cargo run --release --example chirp_scalogram [out.pgm]

use std::f64::consts::PI;

use spiral_scattering::io::{write_matrix, OutputFormat, PgmOptions};
use spiral_scattering::pipeline::{scalogram_of, PipelineConfig};
use spiral_scattering::scalogram::{average_time, to_spiral};
use spiral_scattering::cli::scalogram_table;

fn main() -> spiral_scattering::error::Result<()> {
    let fs = 16000.0;
    // 100 Hz rising two octaves per second for 2 s
    let (f0, rate) = (100.0, 2.0);
    let x: Vec<f64> = (0..32000)
        .map(|i| {
            let t = i as f64 / fs;
            let phase = 2.0 * PI * f0 * ((rate * t).exp2() - 1.0) / (rate * 2f64.ln());
            phase.sin()
        })
        .collect();

    let cfg = PipelineConfig::default();
    let sc = scalogram_of(&x, fs, &cfg)?;
    println!("scalogram: {} frames x {} filters at {} frames/s", sc.frames(), sc.n_lambda1(), sc.frame_rate);
    for second in [0.25, 0.75, 1.25, 1.75] {
        let n = (second * sc.frame_rate) as usize;
        let row = sc.values.row(n);
        let k = (0..row.len()).max_by(|a, b| row[*a].total_cmp(&row[*b])).unwrap();
        let expected = f0 * (rate * second).exp2();
        println!("  t = {second:.2} s: peak at {:.0} Hz (chirp at {expected:.0} Hz)", sc.lambda1_centers[k]);
    }

    let sp = to_spiral(&sc)?;
    println!("spiral tensor shape (frames, chroma, octave): {:?}", sp.values.dim());

    let s1 = average_time(&sc, 0.37)?;
    println!("averaged S1: {} frames", s1.frames());

    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("chirp_scalogram.pgm"));
    write_matrix(&scalogram_table(&sc), OutputFormat::Pgm, &out, PgmOptions { inverted: true })?;
    println!("wrote {}", out.display());
    Ok(())
}
