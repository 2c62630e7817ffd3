//! Second-order transforms of a scalogram: temporal, joint time-frequency, and spiral
//! scattering, with optional `phi_T` averaging.
//!
//! Time is reflect-padded (so a steady scalogram row has no temporal modulation), the
//! log-frequency and octave axes are zero-padded, and a single modulus is taken after the
//! full separable convolution.

use ndarray::{s, Array2};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::filterbank::{
    build_modulation_bank, build_order2_time_up_to, BankKind, Filterbank, ModulationAxis,
};
use crate::scalogram::{
    check_average_support, decimation_factor, from_spiral, reflect_pad, smooth_series, Scalogram,
    SpiralTensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Temporal,
    Joint,
    Spiral,
}

impl std::str::FromStr for TransformKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temporal" => Ok(TransformKind::Temporal),
            "joint" => Ok(TransformKind::Joint),
            "spiral" => Ok(TransformKind::Spiral),
            other => Err(Error::param(format!("unknown transform kind {other:?}"))),
        }
    }
}

/// One second-order path. `beta`/`gamma` are 0 when the transform has no such axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub lambda1_index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Second-order coefficients, `values[[path, frame]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringCoefficients {
    pub kind: TransformKind,
    pub paths: Vec<Path>,
    pub values: Array2<f64>,
    pub frame_rate: f64,
    pub averaged: bool,
    pub lambda1_centers: Vec<f64>,
}

impl ScatteringCoefficients {
    pub fn frames(&self) -> usize {
        self.values.ncols()
    }

    /// Total squared norm of all coefficients.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Banks for the second order, sized for a given scalogram.
#[derive(Debug, Clone)]
pub struct SecondOrderBanks {
    pub alpha: Filterbank,
    pub beta: Filterbank,
    pub gamma: Filterbank,
}

/// Parameters of the second-order banks.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderParams {
    pub alpha_min: f64,
    /// Highest temporal modulation; defaults to a quarter of the frame rate.
    pub alpha_max: Option<f64>,
    pub beta_resolutions: Vec<f64>,
    pub gamma_resolutions: Vec<f64>,
}

impl Default for SecondOrderParams {
    fn default() -> Self {
        SecondOrderParams {
            alpha_min: 1.0,
            alpha_max: None,
            beta_resolutions: vec![0.25, 0.5, 1.0, 2.0],
            gamma_resolutions: vec![0.25, 0.5],
        }
    }
}

impl SecondOrderBanks {
    /// Time axis padded to at least twice the frame count, log-frequency to
    /// `Q * next_pow2(2J)` bins, octave axis to `next_pow2(2J)`.
    pub fn for_scalogram(sc: &Scalogram, p: &SecondOrderParams) -> Result<Self> {
        let time_grid = fft::next_pow2(2 * sc.frames());
        let alpha_max = p.alpha_max.unwrap_or(sc.frame_rate / 4.0);
        let alpha = build_order2_time_up_to(time_grid, sc.frame_rate, p.alpha_min, alpha_max)?;
        let octave_grid = fft::next_pow2(2 * sc.octaves);
        let beta = build_modulation_bank(
            ModulationAxis::LogFrequency {
                bins_per_octave: sc.quality,
            },
            &p.beta_resolutions,
            sc.quality * octave_grid,
        )?;
        let gamma = build_modulation_bank(ModulationAxis::Octave, &p.gamma_resolutions, octave_grid)?;
        Ok(SecondOrderBanks { alpha, beta, gamma })
    }
}

fn check_alpha(bank: &Filterbank, frame_rate: f64, frames: usize) -> Result<()> {
    if bank.kind != BankKind::Order2Time {
        return Err(Error::param("alpha bank must be a temporal second-order bank"));
    }
    if (bank.sample_rate - frame_rate).abs() > 1e-9 * frame_rate {
        return Err(Error::param(format!(
            "alpha bank rate {} Hz does not match the scalogram frame rate {frame_rate} Hz",
            bank.sample_rate
        )));
    }
    if bank.grid_size < frames {
        return Err(Error::param(format!(
            "alpha bank grid {} is shorter than the {frames} scalogram frames",
            bank.grid_size
        )));
    }
    Ok(())
}

fn check_beta(bank: &Filterbank, q: usize, j: usize) -> Result<()> {
    if bank.kind != BankKind::ModulationLogfreq {
        return Err(Error::param("beta bank must be a log-frequency modulation bank"));
    }
    if (bank.sample_rate - q as f64).abs() > 1e-12 {
        return Err(Error::param(format!(
            "beta bank samples {} bins per octave, scalogram has {q}",
            bank.sample_rate
        )));
    }
    if bank.grid_size < q * j {
        return Err(Error::param("beta bank grid is shorter than the log-frequency axis"));
    }
    let slowest = bank.centers.iter().map(|c| c.abs()).filter(|c| *c > 0.0).fold(f64::INFINITY, f64::min);
    if 1.0 / slowest > j as f64 {
        return Err(Error::param(format!(
            "beta period of {} octaves is longer than the {j}-octave frequency axis",
            1.0 / slowest
        )));
    }
    Ok(())
}

fn check_gamma(bank: &Filterbank, j: usize) -> Result<()> {
    if bank.kind != BankKind::ModulationOctave {
        return Err(Error::param("gamma bank must be an octave modulation bank"));
    }
    if bank.grid_size < j {
        return Err(Error::param(format!(
            "gamma bank grid {} is shorter than the {j} octaves",
            bank.grid_size
        )));
    }
    Ok(())
}

/// Amplitude-modulation bandwidth rule: keep `alpha < lambda1 / Q`.
fn keeps(alpha: f64, lambda1: f64, q: usize) -> bool {
    alpha < lambda1 / q as f64
}

/// Reflect-pad rows (time) to `rows`, zero-pad columns to `cols`; returns the time offset.
fn padded(values: &Array2<f64>, rows: usize, cols: usize) -> (Array2<Complex64>, usize) {
    let mut out = Array2::from_elem((rows, cols), Complex64::new(0.0, 0.0));
    let mut offset = 0;
    for c in 0..values.ncols() {
        let (col, left) = reflect_pad(&values.column(c).to_vec(), rows);
        offset = left;
        for (r, v) in col.into_iter().enumerate() {
            out[[r, c]] = v;
        }
    }
    (out, offset)
}

/// Temporal scattering `||x1(., lambda1) * psi_alpha||`.
pub fn scatter_temporal(sc: &Scalogram, bank_alpha: &Filterbank) -> Result<ScatteringCoefficients> {
    let frames = sc.frames();
    check_alpha(bank_alpha, sc.frame_rate, frames)?;
    let grid = bank_alpha.grid_size;
    let per_channel: Vec<Vec<(Path, Vec<f64>)>> = (0..sc.n_lambda1())
        .into_par_iter()
        .map(|i| {
            let lambda1 = sc.lambda1_centers[i];
            let (mut spec, left) = reflect_pad(&sc.values.column(i).to_vec(), grid);
            fft::forward(&mut spec);
            bank_alpha
                .centers
                .iter()
                .zip(&bank_alpha.responses)
                .filter(|(a, _)| keeps(**a, lambda1, sc.quality))
                .map(|(a, h)| {
                    let mut y: Vec<Complex64> = spec.iter().zip(h).map(|(x, h)| x * h).collect();
                    fft::inverse(&mut y);
                    let row = y[left..left + frames].iter().map(|v| v.norm()).collect();
                    (
                        Path {
                            lambda1_index: i,
                            alpha: *a,
                            beta: 0.0,
                            gamma: 0.0,
                        },
                        row,
                    )
                })
                .collect()
        })
        .collect();
    Ok(assemble(
        TransformKind::Temporal,
        per_channel.into_iter().flatten().collect(),
        frames,
        sc,
    ))
}

fn assemble(
    kind: TransformKind,
    rows: Vec<(Path, Vec<f64>)>,
    frames: usize,
    sc: &Scalogram,
) -> ScatteringCoefficients {
    let mut values = Array2::zeros((rows.len(), frames));
    let mut paths = Vec::with_capacity(rows.len());
    for (k, (p, row)) in rows.into_iter().enumerate() {
        values.row_mut(k).assign(&ndarray::ArrayView1::from(row.as_slice()));
        paths.push(p);
    }
    ScatteringCoefficients {
        kind,
        paths,
        values,
        frame_rate: sc.frame_rate,
        averaged: false,
        lambda1_centers: sc.lambda1_centers.clone(),
    }
}

/// One filtered plane `|x1 * (psi_alpha psi_beta [psi_gamma])|`, cropped to the scalogram.
type Plane = Array2<f64>;

fn modulus_crop(mut y: Array2<Complex64>, offset: usize, frames: usize, n_lambda: usize) -> Plane {
    fft::along_axis(&mut y, 1, true);
    fft::along_axis(&mut y, 0, true);
    y.slice(s![offset..offset + frames, ..n_lambda]).mapv(|v| v.norm())
}

// Rows for every path of a set of planes, enumerated lambda1 first, then plane order.
fn planes_to_rows(
    planes: &[(f64, f64, f64, Plane)],
    sc: &Scalogram,
) -> Vec<(Path, Vec<f64>)> {
    let mut rows = Vec::new();
    for i in 0..sc.n_lambda1() {
        let lambda1 = sc.lambda1_centers[i];
        for (a, b, g, plane) in planes {
            if keeps(*a, lambda1, sc.quality) {
                rows.push((
                    Path {
                        lambda1_index: i,
                        alpha: *a,
                        beta: *b,
                        gamma: *g,
                    },
                    plane.column(i).to_vec(),
                ));
            }
        }
    }
    rows
}

/// Joint time-frequency scattering `|x1 *t psi_alpha *logf psi_beta|`.
pub fn scatter_joint(
    sc: &Scalogram,
    bank_alpha: &Filterbank,
    bank_beta: &Filterbank,
) -> Result<ScatteringCoefficients> {
    let (frames, n_lambda) = sc.values.dim();
    check_alpha(bank_alpha, sc.frame_rate, frames)?;
    check_beta(bank_beta, sc.quality, sc.octaves)?;
    let (mut spec, offset) = padded(&sc.values, bank_alpha.grid_size, bank_beta.grid_size);
    fft::along_axis(&mut spec, 0, false);
    fft::along_axis(&mut spec, 1, false);
    let combos: Vec<(usize, usize)> = (0..bank_alpha.len())
        .flat_map(|a| (0..bank_beta.len()).map(move |b| (a, b)))
        .collect();
    let planes: Vec<(f64, f64, f64, Plane)> = combos
        .par_iter()
        .map(|&(a, b)| {
            let ha = &bank_alpha.responses[a];
            let hb = &bank_beta.responses[b];
            let y = Array2::from_shape_fn(spec.raw_dim(), |(t, l)| spec[[t, l]] * ha[t] * hb[l]);
            (
                bank_alpha.centers[a],
                bank_beta.centers[b],
                0.0,
                modulus_crop(y, offset, frames, n_lambda),
            )
        })
        .collect();
    Ok(assemble(TransformKind::Joint, planes_to_rows(&planes, sc), frames, sc))
}

fn check_spiral_banks(
    sp: &SpiralTensor,
    bank_alpha: &Filterbank,
    bank_beta: &Filterbank,
    bank_gamma: &Filterbank,
) -> Result<()> {
    check_alpha(bank_alpha, sp.frame_rate, sp.frames())?;
    check_beta(bank_beta, sp.quality, sp.octaves)?;
    check_gamma(bank_gamma, sp.octaves)?;
    if bank_beta.grid_size != sp.quality * bank_gamma.grid_size {
        return Err(Error::param(format!(
            "beta grid {} must equal Q x gamma grid = {}",
            bank_beta.grid_size,
            sp.quality * bank_gamma.grid_size
        )));
    }
    Ok(())
}

/// Spiral scattering: convolutions along time (`psi_alpha`), the unrolled log-frequency axis
/// (`psi_beta`) and the octave axis at fixed chroma (`psi_gamma`), then one modulus.
///
/// The octave convolution is applied in the log-frequency Fourier domain: with the
/// log-frequency axis padded to `Q * Jp` bins, filtering octaves at fixed chroma is a
/// multiplication by `psi_gamma(k mod Jp)`.
pub fn scatter_spiral(
    sp: &SpiralTensor,
    bank_alpha: &Filterbank,
    bank_beta: &Filterbank,
    bank_gamma: &Filterbank,
) -> Result<ScatteringCoefficients> {
    check_spiral_banks(sp, bank_alpha, bank_beta, bank_gamma)?;
    let sc = from_spiral(sp);
    let (frames, n_lambda) = sc.values.dim();
    let jp = bank_gamma.grid_size;
    let (mut spec, offset) = padded(&sc.values, bank_alpha.grid_size, bank_beta.grid_size);
    fft::along_axis(&mut spec, 0, false);
    fft::along_axis(&mut spec, 1, false);
    let mut combos = Vec::new();
    for a in 0..bank_alpha.len() {
        for b in 0..bank_beta.len() {
            for g in 0..bank_gamma.len() {
                combos.push((a, b, g));
            }
        }
    }
    let planes: Vec<(f64, f64, f64, Plane)> = combos
        .par_iter()
        .map(|&(a, b, g)| {
            let ha = &bank_alpha.responses[a];
            let hb = &bank_beta.responses[b];
            let hg = &bank_gamma.responses[g];
            let y = Array2::from_shape_fn(spec.raw_dim(), |(t, l)| {
                spec[[t, l]] * ha[t] * (hb[l] * hg[l % jp])
            });
            (
                bank_alpha.centers[a],
                bank_beta.centers[b],
                bank_gamma.centers[g],
                modulus_crop(y, offset, frames, n_lambda),
            )
        })
        .collect();
    Ok(assemble(TransformKind::Spiral, planes_to_rows(&planes, &sc), frames, &sc))
}

/// Axes of the spiral convolution, for running them one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpiralAxis {
    Time,
    LogFrequency,
    Octave,
}

/// Spiral scattering computed by three explicit per-axis convolutions in the given order.
/// Slower than [`scatter_spiral`]; the result does not depend on the order.
pub fn scatter_spiral_sequential(
    sp: &SpiralTensor,
    bank_alpha: &Filterbank,
    bank_beta: &Filterbank,
    bank_gamma: &Filterbank,
    order: [SpiralAxis; 3],
) -> Result<ScatteringCoefficients> {
    check_spiral_banks(sp, bank_alpha, bank_beta, bank_gamma)?;
    let sc = from_spiral(sp);
    let (frames, n_lambda) = sc.values.dim();
    let q = sp.quality;
    let jp = bank_gamma.grid_size;
    let (base, offset) = padded(&sc.values, bank_alpha.grid_size, bank_beta.grid_size);
    let mut planes = Vec::new();
    for a in 0..bank_alpha.len() {
        for b in 0..bank_beta.len() {
            for g in 0..bank_gamma.len() {
                let mut y = base.clone();
                for axis in order {
                    match axis {
                        SpiralAxis::Time => {
                            filter_axis(&mut y, 0, &bank_alpha.responses[a]);
                        }
                        SpiralAxis::LogFrequency => {
                            filter_axis(&mut y, 1, &bank_beta.responses[b]);
                        }
                        SpiralAxis::Octave => {
                            filter_octaves(&mut y, q, jp, &bank_gamma.responses[g]);
                        }
                    }
                }
                planes.push((
                    bank_alpha.centers[a],
                    bank_beta.centers[b],
                    bank_gamma.centers[g],
                    y.slice(s![offset..offset + frames, ..n_lambda]).mapv(|v| v.norm()),
                ));
            }
        }
    }
    Ok(assemble(TransformKind::Spiral, planes_to_rows(&planes, &sc), frames, &sc))
}

fn filter_axis(y: &mut Array2<Complex64>, axis: usize, h: &[Complex64]) {
    fft::along_axis(y, axis, false);
    for mut lane in y.lanes_mut(ndarray::Axis(axis)) {
        for (v, hk) in lane.iter_mut().zip(h) {
            *v *= hk;
        }
    }
    fft::along_axis(y, axis, true);
}

fn filter_octaves(y: &mut Array2<Complex64>, q: usize, jp: usize, h: &[Complex64]) {
    let mut lane = vec![Complex64::new(0.0, 0.0); jp];
    for t in 0..y.nrows() {
        for chroma in 0..q {
            for (j, v) in lane.iter_mut().enumerate() {
                *v = y[[t, j * q + chroma]];
            }
            fft::forward(&mut lane);
            for (v, hk) in lane.iter_mut().zip(h) {
                *v *= hk;
            }
            fft::inverse(&mut lane);
            for (j, v) in lane.iter().enumerate() {
                y[[t, j * q + chroma]] = *v;
            }
        }
    }
}

/// Smooth every path with `phi_T` without decimation.
pub fn smooth_scattering(x2: &ScatteringCoefficients, t: f64) -> Result<ScatteringCoefficients> {
    check_average_support(x2.frame_rate, t)?;
    let rows: Vec<Vec<f64>> = (0..x2.paths.len())
        .into_par_iter()
        .map(|p| smooth_series(&x2.values.row(p).to_vec(), x2.frame_rate, t))
        .collect::<Result<_>>()?;
    let mut values = Array2::zeros(x2.values.raw_dim());
    for (p, row) in rows.iter().enumerate() {
        values.row_mut(p).assign(&ndarray::ArrayView1::from(row.as_slice()));
    }
    Ok(ScatteringCoefficients {
        values,
        averaged: true,
        ..x2.clone()
    })
}

/// S2: `phi_T` smoothing of every path, then decimation to at least `2/T` frames per second.
pub fn average_scattering(x2: &ScatteringCoefficients, t: f64) -> Result<ScatteringCoefficients> {
    let sm = smooth_scattering(x2, t)?;
    let step = decimation_factor(x2.frame_rate, t);
    Ok(ScatteringCoefficients {
        values: sm.values.slice(s![.., ..;step]).to_owned(),
        frame_rate: x2.frame_rate / step as f64,
        ..sm
    })
}
