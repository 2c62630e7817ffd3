//! Run configuration shared by the CLI and the examples, serializable as JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_wav, OutputFormat};
use crate::pipeline::PipelineConfig;
use crate::scattering::{SecondOrderParams, TransformKind};
use crate::sourcefilter::{synthesize, SourceFilterSpec};

/// Either a WAV path (or a JSON synthesis spec path) or an inline synthesis spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Input {
    Path(PathBuf),
    Synth(SourceFilterSpec),
}

/// Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Filters per octave.
    #[serde(rename = "Q")]
    pub q: usize,
    /// Octaves.
    #[serde(rename = "J")]
    pub j: usize,
    /// Averaging support in seconds.
    #[serde(rename = "T")]
    pub t: f64,
    /// Rate for synthesized input; WAV files keep their own.
    pub sample_rate: f64,
    pub hop: usize,
    pub alpha_min: f64,
    pub beta_resolutions: Vec<f64>,
    pub gamma_resolutions: Vec<f64>,
    pub transform_kind: TransformKind,
    pub input: Option<Input>,
    pub output: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let so = SecondOrderParams::default();
        RunConfig {
            q: 16,
            j: 8,
            t: 0.37,
            sample_rate: 16000.0,
            hop: 128,
            alpha_min: so.alpha_min,
            beta_resolutions: so.beta_resolutions,
            gamma_resolutions: so.gamma_resolutions,
            transform_kind: TransformKind::Spiral,
            input: None,
            output: None,
            output_format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// Checks that do not need the input signal.
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.j == 0 {
            return Err(Error::param("Q and J must be at least 1"));
        }
        if !(self.t > 0.0) {
            return Err(Error::param(format!("T must be positive, got {}", self.t)));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::param("sample_rate must be positive"));
        }
        if self.hop == 0 || !self.hop.is_power_of_two() {
            return Err(Error::param(format!("hop must be a power of two, got {}", self.hop)));
        }
        if !(self.alpha_min > 0.0) {
            return Err(Error::param("alpha_min must be positive"));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            quality: self.q,
            octaves: self.j,
            hop: self.hop,
            second_order: SecondOrderParams {
                alpha_min: self.alpha_min,
                alpha_max: None,
                beta_resolutions: self.beta_resolutions.clone(),
                gamma_resolutions: self.gamma_resolutions.clone(),
            },
        }
    }
}

/// Samples and rate of an input: WAV files are decoded, `.json` paths and inline specs
/// are synthesized. Synthesis warnings are logged.
pub fn load_input(input: &Input) -> Result<(Vec<f64>, f64)> {
    let spec = match input {
        Input::Path(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => {
            load_synth_spec(p)?
        }
        Input::Path(p) => {
            let a = read_wav(p)?;
            return Ok((a.samples, a.sample_rate));
        }
        Input::Synth(s) => s.clone(),
    };
    let syn = synthesize(&spec)?;
    for w in &syn.warnings {
        log::warn!("{w}");
    }
    Ok((syn.samples, spec.sample_rate))
}

pub fn load_synth_spec(path: &Path) -> Result<SourceFilterSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}
