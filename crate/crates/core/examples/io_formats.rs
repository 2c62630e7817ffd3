//! Synthesize to WAV, read it back, and export a scalogram in every output format.
//!
//! cargo run --release --example io_formats [out_dir]

use std::path::PathBuf;

use ndarray::Array2;
use spiral_scattering::cli::scalogram_table;
use spiral_scattering::config::RunConfig;
use spiral_scattering::io::{
    read_csv, read_pgm, read_tensor, read_wav, write_matrix, write_tensor, write_wav, OutputFormat,
    PgmOptions, Table,
};
use spiral_scattering::pipeline::scalogram_of;
use spiral_scattering::scalogram::{average_time, to_spiral};
use spiral_scattering::sourcefilter::{synthesize, Envelope, SourceFilterSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("spiral_io_formats"));
    std::fs::create_dir_all(&dir)?;

    let cfg = RunConfig::default();
    let spec = SourceFilterSpec::new(220.0, 0.5, 0.0, 6, Envelope::Flat, 1.0, cfg.sample_rate);
    let x: Vec<f64> = synthesize(&spec)?.samples;
    let peak = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let x: Vec<f64> = x.iter().map(|v| 0.9 * v / peak).collect();

    let wav = dir.join("glide.wav");
    write_wav(&wav, &x, cfg.sample_rate)?;
    let audio = read_wav(&wav)?;
    let err = x.iter().zip(&audio.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("wav: {} samples at {} Hz, max error {:.2} LSB", audio.samples.len(), audio.sample_rate, err * 32768.0);

    let sc = scalogram_of(&audio.samples, audio.sample_rate, &cfg.pipeline())?;
    let s1 = average_time(&sc, cfg.t)?;
    let table = scalogram_table(&s1);
    for (format, name) in [
        (OutputFormat::Csv, "s1.csv"),
        (OutputFormat::Bin, "s1.bin"),
        (OutputFormat::Pgm, "s1.pgm"),
        (OutputFormat::Json, "s1.json"),
    ] {
        write_matrix(&table, format, dir.join(name), PgmOptions::default())?;
    }
    let csv = read_csv(dir.join("s1.csv"))?;
    let bin = read_tensor(dir.join("s1.bin"))?;
    let pgm = read_pgm(dir.join("s1.pgm"))?;
    println!("csv: {} columns, first {:?}", csv.columns.len(), csv.columns[0]);
    println!("bin: shape {:?}, bit-exact {}", bin.shape(), bin.iter().zip(s1.values.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    println!("pgm: {}x{}, max {}", pgm.width, pgm.height, pgm.max);

    let sp = to_spiral(&sc)?;
    write_tensor(&sp.values.clone().into_dyn(), dir.join("spiral.bin"))?;
    println!("spiral tensor: {:?}", read_tensor(dir.join("spiral.bin"))?.shape());

    let small = Table::unlabelled(Array2::eye(2));
    write_matrix(&small, OutputFormat::Csv, dir.join("eye.csv"), PgmOptions::default())?;
    print!("eye.csv:\n{}", std::fs::read_to_string(dir.join("eye.csv"))?);

    std::fs::write(dir.join("config.json"), cfg.to_json())?;
    println!("outputs in {}", dir.display());
    Ok(())
}
