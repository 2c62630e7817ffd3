//! End-to-end helpers: signal to scalogram to second-order coefficients with one config.

use crate::error::Result;
use crate::fft::next_pow2;
use crate::filterbank::build_order1;
use crate::scalogram::{cqt, to_spiral, Scalogram};
use crate::scattering::{
    scatter_joint, scatter_spiral, scatter_temporal, ScatteringCoefficients, SecondOrderBanks,
    SecondOrderParams, TransformKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub quality: usize,
    pub octaves: usize,
    pub hop: usize,
    pub second_order: SecondOrderParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            quality: 16,
            octaves: 8,
            hop: 128,
            second_order: SecondOrderParams::default(),
        }
    }
}

/// First-order scalogram on a grid of at least twice the signal length.
pub fn scalogram_of(signal: &[f64], sample_rate: f64, cfg: &PipelineConfig) -> Result<Scalogram> {
    let grid = next_pow2(2 * signal.len()).max(2 * cfg.hop * cfg.octaves);
    let fb = build_order1(cfg.quality, cfg.octaves, grid, sample_rate)?;
    cqt(signal, sample_rate, &fb, cfg.hop)
}

/// Unaveraged second-order coefficients of a scalogram.
pub fn second_order(
    sc: &Scalogram,
    kind: TransformKind,
    params: &SecondOrderParams,
) -> Result<ScatteringCoefficients> {
    let banks = SecondOrderBanks::for_scalogram(sc, params)?;
    match kind {
        TransformKind::Temporal => scatter_temporal(sc, &banks.alpha),
        TransformKind::Joint => scatter_joint(sc, &banks.alpha, &banks.beta),
        TransformKind::Spiral => {
            scatter_spiral(&to_spiral(sc)?, &banks.alpha, &banks.beta, &banks.gamma)
        }
    }
}

/// Signal straight to unaveraged second-order coefficients.
pub fn scatter_signal(
    signal: &[f64],
    sample_rate: f64,
    kind: TransformKind,
    cfg: &PipelineConfig,
) -> Result<ScatteringCoefficients> {
    let sc = scalogram_of(signal, sample_rate, cfg)?;
    second_order(&sc, kind, &cfg.second_order)
}
