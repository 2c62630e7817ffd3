//! Command-line front end. Exit codes: 0 success, 2 parameter error, 3 I/O error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::Serialize;

use crate::config::{load_input, load_synth_spec, Input, RunConfig};
use crate::error::{Error, Result};
use crate::fft::next_pow2;
use crate::filterbank::{build_modulation_bank, build_order1, littlewood_paley, ModulationAxis};
use crate::io::{write_matrix, write_tensor, write_wav, OutputFormat, PgmOptions, Table};
use crate::pipeline::{scalogram_of, second_order};
use crate::scalogram::{average_time, to_spiral, Scalogram};
use crate::scattering::{average_scattering, ScatteringCoefficients, TransformKind};
use crate::sourcefilter::synthesize;
use crate::validation::{
    fit_plane_interior_against, harmonicity_residual, interior_window, spin_asymmetry,
};
use crate::wavelets::LowpassKernel;

#[derive(Parser, Debug)]
#[command(name = "spiral", version, about = "Spiral scattering transform for audio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the fields of a JSON run configuration; flags win over `--config`.
#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Filters per octave.
    #[arg(long = "Q")]
    q: Option<usize>,
    /// Octaves.
    #[arg(long = "J")]
    j: Option<usize>,
    /// Averaging support in seconds.
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long)]
    sample_rate: Option<f64>,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta_resolutions: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gamma_resolutions: Option<Vec<f64>>,
    /// WAV file, or a JSON synthesis spec.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// csv | bin | pgm | json
    #[arg(long = "format")]
    output_format: Option<OutputFormat>,
}

impl ConfigArgs {
    fn resolve(&self, kind: Option<TransformKind>) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { c.$f = v.clone(); })*};
        }
        set!(q, j, t, sample_rate, hop, alpha_min, beta_resolutions, gamma_resolutions, output_format);
        if let Some(k) = kind {
            c.transform_kind = k;
        }
        if let Some(p) = &self.input {
            c.input = Some(Input::Path(p.clone()));
        }
        if let Some(p) = &self.output {
            c.output = Some(p.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug, Clone, Default)]
struct ImageArgs {
    /// PGM only: large values dark.
    #[arg(long)]
    inverted: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scalogram of a signal: averaged S1 by default, x1 with --raw.
    Scalogram {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        raw: bool,
        /// Write the (frames, chroma, octave) tensor; binary format only.
        #[arg(long)]
        spiral: bool,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Second-order coefficients: rows are frames, one column per path.
    Scatter {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// temporal | joint | spiral
        #[arg(long)]
        kind: Option<TransformKind>,
        /// Skip the phi_T averaging.
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Render a JSON source-filter spec to a 16-bit WAV.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run a validation and print a JSON report.
    Validate {
        #[command(subcommand)]
        what: Validation,
    },
    /// Littlewood-Paley bounds of the first-order bank.
    FrameCheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// DFT size the bank is sampled on.
        #[arg(long, default_value_t = 1 << 16)]
        grid: usize,
    },
}

#[derive(Subcommand, Debug)]
enum Validation {
    /// Fit the plane of spiral scattering energy and estimate both velocities.
    Plane {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Octave-axis residual of the averaged scalogram.
    Harmonicity {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Positive/negative spin energy ratios.
    Spin {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        kind: Option<TransformKind>,
        /// Window start in seconds (default: interior half).
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        end: Option<f64>,
    },
}

/// Parse `args` (including the program name) and run; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn signal(cfg: &RunConfig) -> Result<(Vec<f64>, f64)> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::param("no input: pass --input or set it in the config"))?;
    load_input(input)
}

fn output(cfg: &RunConfig) -> Result<&PathBuf> {
    cfg.output
        .as_ref()
        .ok_or_else(|| Error::param("no output: pass --output or set it in the config"))
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Scalogram {
            cfg,
            raw,
            spiral,
            image,
        } => {
            let cfg = cfg.resolve(None)?;
            let (x, fs) = signal(&cfg)?;
            let mut sc = scalogram_of(&x, fs, &cfg.pipeline())?;
            if !raw {
                sc = average_time(&sc, cfg.t)?;
            }
            if spiral {
                if cfg.output_format != OutputFormat::Bin {
                    return Err(Error::param("--spiral writes a 3-d tensor and needs --format bin"));
                }
                return write_tensor(&to_spiral(&sc)?.values.into_dyn(), output(&cfg)?);
            }
            write_matrix(&scalogram_table(&sc), cfg.output_format, output(&cfg)?, pgm(&image))
        }
        Command::Scatter {
            cfg,
            kind,
            raw,
            image,
        } => {
            let cfg = cfg.resolve(kind)?;
            let (x, fs) = signal(&cfg)?;
            let sc = scalogram_of(&x, fs, &cfg.pipeline())?;
            let mut x2 = second_order(&sc, cfg.transform_kind, &cfg.pipeline().second_order)?;
            if !raw {
                x2 = average_scattering(&x2, cfg.t)?;
            }
            write_matrix(&scattering_table(&x2), cfg.output_format, output(&cfg)?, pgm(&image))
        }
        Command::Synth { cfg } => {
            let cfg = cfg.resolve(None)?;
            let spec = match cfg.input.as_ref() {
                Some(Input::Synth(s)) => s.clone(),
                Some(Input::Path(p)) => load_synth_spec(p)?,
                None => return Err(Error::param("synth needs a JSON spec as --input")),
            };
            let mut syn = synthesize(&spec)?;
            for w in &syn.warnings {
                log::warn!("{w}");
            }
            let peak = syn.samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if peak > 1.0 {
                log::warn!("peak {peak:.3} would clip; scaling to 0.99");
                syn.samples.iter_mut().for_each(|v| *v *= 0.99 / peak);
            }
            write_wav(output(&cfg)?, &syn.samples, spec.sample_rate)
        }
        Command::Validate { what } => validate(what),
        Command::FrameCheck { cfg, grid } => {
            let cfg = cfg.resolve(None)?;
            let fb = build_order1(cfg.q, cfg.j, grid, cfg.sample_rate)?;
            let d = littlewood_paley(&fb, &LowpassKernel::new(cfg.t)?)?;
            report(
                &cfg,
                &FrameReport {
                    q: cfg.q,
                    j: cfg.j,
                    t: cfg.t,
                    sample_rate: cfg.sample_rate,
                    grid,
                    lower_bound: d.lower_bound,
                    upper_bound: d.upper_bound,
                    band_hz: d.band,
                },
            )
        }
    }
}

#[derive(Serialize)]
struct FrameReport {
    #[serde(rename = "Q")]
    q: usize,
    #[serde(rename = "J")]
    j: usize,
    #[serde(rename = "T")]
    t: f64,
    sample_rate: f64,
    grid: usize,
    lower_bound: f64,
    upper_bound: f64,
    band_hz: (f64, f64),
}

#[derive(Serialize)]
struct HarmonicityReport {
    residual: f64,
    gamma_resolutions: Vec<f64>,
}

#[derive(Serialize)]
struct SpinReport {
    beta_ratio: f64,
    gamma_ratio: Option<f64>,
    start_s: f64,
    end_s: f64,
}

fn validate(what: Validation) -> Result<()> {
    match what {
        Validation::Plane { cfg } => {
            let cfg = cfg.resolve(Some(TransformKind::Spiral))?;
            let (x, fs) = signal(&cfg)?;
            let sc = scalogram_of(&x, fs, &cfg.pipeline())?;
            let x2 = second_order(&sc, TransformKind::Spiral, &cfg.pipeline().second_order)?;
            report(&cfg, &fit_plane_interior_against(&x2, &sc)?)
        }
        Validation::Harmonicity { cfg } => {
            let cfg = cfg.resolve(None)?;
            let (x, fs) = signal(&cfg)?;
            let s1 = average_time(&scalogram_of(&x, fs, &cfg.pipeline())?, cfg.t)?;
            let bank = build_modulation_bank(
                ModulationAxis::Octave,
                &cfg.gamma_resolutions,
                next_pow2(2 * cfg.j),
            )?;
            let residual = harmonicity_residual(&to_spiral(&s1)?, &bank)?;
            report(
                &cfg,
                &HarmonicityReport {
                    residual,
                    gamma_resolutions: cfg.gamma_resolutions.clone(),
                },
            )
        }
        Validation::Spin {
            cfg,
            kind,
            start,
            end,
        } => {
            let cfg = cfg.resolve(kind)?;
            let (x, fs) = signal(&cfg)?;
            let sc = scalogram_of(&x, fs, &cfg.pipeline())?;
            let x2 = second_order(&sc, cfg.transform_kind, &cfg.pipeline().second_order)?;
            let mut window = interior_window(x2.frames());
            if let Some(s) = start {
                window.start = (s * x2.frame_rate).round().max(0.0) as usize;
            }
            if let Some(e) = end {
                window.end = ((e * x2.frame_rate).round().max(0.0) as usize).min(x2.frames());
            }
            let s = spin_asymmetry(&x2, window.clone())?;
            report(
                &cfg,
                &SpinReport {
                    beta_ratio: s.beta_ratio,
                    gamma_ratio: s.gamma_ratio,
                    start_s: window.start as f64 / x2.frame_rate,
                    end_s: window.end as f64 / x2.frame_rate,
                },
            )
        }
    }
}

/// Print a JSON report, and also write it when an output path is configured.
fn report<R: Serialize>(cfg: &RunConfig, r: &R) -> Result<()> {
    let json = serde_json::to_string_pretty(r).expect("reports are always serializable");
    println!("{json}");
    if let Some(p) = &cfg.output {
        std::fs::write(p, format!("{json}\n")).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn pgm(image: &ImageArgs) -> PgmOptions {
    PgmOptions {
        inverted: image.inverted,
    }
}

/// Frames by first-order channels, columns labelled by center frequency in Hz.
pub fn scalogram_table(sc: &Scalogram) -> Table {
    Table {
        columns: sc.lambda1_centers.iter().map(|f| format!("{f:.4}")).collect(),
        values: sc.values.clone(),
    }
}

/// Frames by paths; columns are labelled `lambda1/alpha/beta/gamma`.
pub fn scattering_table(x2: &ScatteringCoefficients) -> Table {
    let columns = x2
        .paths
        .iter()
        .map(|p| {
            format!(
                "{:.4}/{}/{}/{}",
                x2.lambda1_centers[p.lambda1_index], p.alpha, p.beta, p.gamma
            )
        })
        .collect();
    let values: Array2<f64> = x2.values.t().to_owned();
    Table { columns, values }
}
