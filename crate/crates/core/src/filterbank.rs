//! Indexed filter sets sampled on a DFT grid: the first-order constant-Q bank, the
//! temporal second-order bank, and the signed modulation banks along log-frequency and
//! octave, plus Littlewood-Paley diagnostics.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fftfreq;
use crate::wavelets::{LowpassKernel, WaveletKernel};

/// Ratio of the top first-order center frequency to the sample rate.
pub const TOP_FREQUENCY_RATIO: f64 = 0.4;
/// Quality factor of the temporal second-order wavelets.
pub const ORDER2_QUALITY: f64 = 1.0;
/// Default quality of the log-frequency (Morlet) modulation wavelets.
pub const LOGFREQ_QUALITY: f64 = 1.5;
/// Default quality of the octave (gammatone) modulation wavelets.
pub const OCTAVE_QUALITY: f64 = 1.0;
/// The octave wavelets vanish to second order at DC so affine octave profiles give little response.
pub const OCTAVE_VANISHING_MOMENTS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankKind {
    Order1,
    Order2Time,
    ModulationLogfreq,
    ModulationOctave,
}

/// Axis a modulation bank operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulationAxis {
    /// Unrolled log-frequency, sampled `bins_per_octave` times per octave. Units: cycles/octave.
    LogFrequency { bins_per_octave: usize },
    /// Octave index at fixed chroma, one sample per octave. Units: cycles/octave.
    Octave,
}

impl ModulationAxis {
    pub fn sample_rate(&self) -> f64 {
        match self {
            ModulationAxis::LogFrequency { bins_per_octave } => *bins_per_octave as f64,
            ModulationAxis::Octave => 1.0,
        }
    }
}

/// Immutable set of sampled frequency responses.
///
/// `sample_rate` is the number of samples per axis unit: Hz for the temporal banks,
/// bins per octave for modulation banks. For modulation banks `centers` are the signed
/// spin labels; a positive label responds to upward motion along the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Filterbank {
    pub kind: BankKind,
    pub centers: Vec<f64>,
    pub responses: Vec<Vec<Complex64>>,
    pub quality: f64,
    /// Octave count J (first-order banks only, 0 otherwise).
    pub octaves: usize,
    pub grid_size: usize,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub band: (f64, f64),
}

impl Filterbank {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// DFT bin frequencies of the shared grid, in axis units.
    pub fn frequencies(&self) -> Vec<f64> {
        fftfreq(self.grid_size, self.sample_rate)
    }

    /// Bins per octave of a first-order bank.
    pub fn bins_per_octave(&self) -> usize {
        self.quality.round() as usize
    }

    /// (octave, chroma) of a first-order filter index.
    pub fn spiral_index(&self, i: usize) -> (usize, usize) {
        let q = self.bins_per_octave();
        (i / q, i % q)
    }

    /// Symmetrized Littlewood-Paley sum on every grid bin, including `lowpass`.
    pub fn littlewood_paley_sum(&self, lowpass: Option<&LowpassKernel>) -> Vec<f64> {
        let n = self.grid_size;
        let mut sum = vec![0.0; n];
        for r in &self.responses {
            for k in 0..n {
                let mirror = (n - k) % n;
                sum[k] += 0.5 * (r[k].norm_sqr() + r[mirror].norm_sqr());
            }
        }
        if let Some(lp) = lowpass {
            for (s, p) in sum.iter_mut().zip(lp.response(&self.frequencies())) {
                *s += p * p;
            }
        }
        sum
    }

    /// Copy of the bank with its band-pass responses scaled by the largest common factor
    /// that keeps the Littlewood-Paley sum (including `lowpass`, whose DC gain stays 1) at
    /// or below 1 everywhere.
    pub fn renormalized(&self, lowpass: Option<&LowpassKernel>) -> Filterbank {
        let filters = self.littlewood_paley_sum(None);
        let lp = lowpass.map(|l| l.response(&self.frequencies()));
        let mut gain = f64::INFINITY;
        for (k, s) in filters.iter().enumerate() {
            if *s > 0.0 {
                let room = lp.as_ref().map_or(1.0, |p| 1.0 - p[k] * p[k]);
                gain = gain.min(room.max(0.0) / s);
            }
        }
        let mut out = self.clone();
        if gain.is_finite() {
            let s = gain.sqrt();
            for r in &mut out.responses {
                for v in r.iter_mut() {
                    *v *= s;
                }
            }
        }
        out
    }
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < 2 || !grid_size.is_power_of_two() {
        return Err(Error::param(format!("grid size must be a power of two >= 2, got {grid_size}")));
    }
    Ok(())
}

fn sample(kernel: WaveletKernel, freqs: &[f64]) -> Result<Vec<Complex64>> {
    kernel.response(freqs)
}

/// First-order constant-Q gammatone bank with `q * j` filters topped at `0.4 * sample_rate`.
pub fn build_order1(q: usize, j: usize, grid_size: usize, sample_rate: f64) -> Result<Filterbank> {
    build_order1_with_top(q, j, grid_size, sample_rate, TOP_FREQUENCY_RATIO * sample_rate)
}

/// First-order bank with an explicit top center frequency.
pub fn build_order1_with_top(
    q: usize,
    j: usize,
    grid_size: usize,
    sample_rate: f64,
    f_max: f64,
) -> Result<Filterbank> {
    if q == 0 || j == 0 {
        return Err(Error::param(format!("need Q >= 1 and J >= 1, got Q={q}, J={j}")));
    }
    check_grid(grid_size)?;
    if !(sample_rate > 0.0) || !(f_max > 0.0) {
        return Err(Error::param("sample rate and top frequency must be positive"));
    }
    let qf = q as f64;
    if f_max >= 0.5 * sample_rate {
        return Err(Error::param(format!(
            "top filter at {f_max} Hz aliases past Nyquist ({} Hz)",
            0.5 * sample_rate
        )));
    }
    let n = q * j;
    let centers: Vec<f64> = (0..n)
        .map(|i| f_max * 2f64.powf(-((n - 1 - i) as f64) / qf))
        .collect();
    let freqs = fftfreq(grid_size, sample_rate);
    let responses = centers
        .iter()
        .map(|&c| sample(WaveletKernel::gammatone(c, qf), &freqs))
        .collect::<Result<Vec<_>>>()?;
    Ok(Filterbank {
        kind: BankKind::Order1,
        centers,
        responses,
        quality: qf,
        octaves: j,
        grid_size,
        sample_rate,
    })
}

/// Octave-spaced Q=1 gammatone bank from `alpha_min` up to the largest center strictly below
/// the Nyquist frequency of `sample_rate`.
pub fn build_order2_time(grid_size: usize, sample_rate: f64, alpha_min: f64) -> Result<Filterbank> {
    build_order2_time_up_to(grid_size, sample_rate, alpha_min, f64::INFINITY)
}

/// As [`build_order2_time`], additionally capping centers at `alpha_max`.
pub fn build_order2_time_up_to(
    grid_size: usize,
    sample_rate: f64,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<Filterbank> {
    if grid_size == 0 {
        return Err(Error::param("grid size must be positive"));
    }
    if !(alpha_min > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::param(format!("alpha_min must be > 0, got {alpha_min}")));
    }
    let nyquist = 0.5 * sample_rate;
    let mut centers = Vec::new();
    let mut a = alpha_min;
    while a < nyquist && a <= alpha_max * (1.0 + 1e-12) {
        centers.push(a);
        a *= 2.0;
    }
    if centers.is_empty() {
        return Err(Error::param(format!(
            "empty temporal bank: alpha_min {alpha_min} Hz is not below Nyquist {nyquist} Hz"
        )));
    }
    let freqs = fftfreq(grid_size, sample_rate);
    let responses = centers
        .iter()
        .map(|&c| sample(WaveletKernel::gammatone(c, ORDER2_QUALITY), &freqs))
        .collect::<Result<Vec<_>>>()?;
    Ok(Filterbank {
        kind: BankKind::Order2Time,
        centers,
        responses,
        quality: ORDER2_QUALITY,
        octaves: 0,
        grid_size,
        sample_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationOptions {
    /// Overrides the axis default quality.
    pub quality: Option<f64>,
    /// Adds a low-pass filter labelled 0.
    pub include_zero: bool,
}

impl Default for ModulationOptions {
    fn default() -> Self {
        ModulationOptions {
            quality: None,
            include_zero: false,
        }
    }
}

/// Signed modulation bank: filters labelled `-r` and `+r` for every resolution.
pub fn build_modulation_bank(
    axis: ModulationAxis,
    resolutions: &[f64],
    grid_size: usize,
) -> Result<Filterbank> {
    build_modulation_bank_with(axis, resolutions, grid_size, ModulationOptions::default())
}

pub fn build_modulation_bank_with(
    axis: ModulationAxis,
    resolutions: &[f64],
    grid_size: usize,
    opts: ModulationOptions,
) -> Result<Filterbank> {
    if resolutions.is_empty() {
        return Err(Error::param("empty resolution list"));
    }
    if resolutions.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::param("modulation resolutions must be positive"));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("modulation resolutions must be strictly ascending"));
    }
    if grid_size == 0 {
        return Err(Error::param("grid size must be positive"));
    }
    let rate = axis.sample_rate();
    let nyquist = 0.5 * rate;
    if let Some(r) = resolutions.iter().find(|r| **r > nyquist) {
        return Err(Error::param(format!(
            "resolution {r} cycles/octave is above the axis Nyquist {nyquist}"
        )));
    }
    let (kind, quality) = match axis {
        ModulationAxis::LogFrequency { .. } => (
            BankKind::ModulationLogfreq,
            opts.quality.unwrap_or(LOGFREQ_QUALITY),
        ),
        ModulationAxis::Octave => (BankKind::ModulationOctave, opts.quality.unwrap_or(OCTAVE_QUALITY)),
    };
    let kernel = |r: f64| match axis {
        ModulationAxis::LogFrequency { .. } => WaveletKernel::morlet(r, quality),
        ModulationAxis::Octave => {
            WaveletKernel::gammatone(r, quality).with_vanishing_moments(OCTAVE_VANISHING_MOMENTS)
        }
    };
    let freqs = fftfreq(grid_size, rate);
    let mut centers = Vec::new();
    let mut responses = Vec::new();
    // A pattern moving up the axis has its phase decreasing along the axis, so the
    // upward-tracking (+r) filter lives at negative axis frequency.
    for &r in resolutions.iter().rev() {
        centers.push(-r);
        responses.push(kernel(r).periodic_response(&freqs, rate)?);
    }
    if opts.include_zero {
        let lp = LowpassKernel::new(2.0 / resolutions[0])?;
        centers.push(0.0);
        responses.push(
            lp.response(&freqs)
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect(),
        );
    }
    for &r in resolutions {
        centers.push(r);
        responses.push(kernel(r).mirrored().periodic_response(&freqs, rate)?);
    }
    Ok(Filterbank {
        kind,
        centers,
        responses,
        quality,
        octaves: 0,
        grid_size,
        sample_rate: rate,
    })
}

/// Littlewood-Paley bounds of the renormalized first-order bank over the band it covers
/// (lowest to highest center frequency).
pub fn littlewood_paley(fb: &Filterbank, lowpass: &LowpassKernel) -> Result<FrameDiagnostics> {
    let band = (
        *fb.centers.first().ok_or_else(|| Error::param("empty bank"))?,
        *fb.centers.last().unwrap(),
    );
    littlewood_paley_over(fb, lowpass, band)
}

/// Renormalized Littlewood-Paley bounds measured over an explicit frequency band.
pub fn littlewood_paley_over(
    fb: &Filterbank,
    lowpass: &LowpassKernel,
    band: (f64, f64),
) -> Result<FrameDiagnostics> {
    if fb.kind != BankKind::Order1 {
        return Err(Error::param("Littlewood-Paley diagnostics need a first-order bank"));
    }
    let sum = fb
        .renormalized(Some(lowpass))
        .littlewood_paley_sum(Some(lowpass));
    let peak = sum.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("bank has no energy".into()));
    }
    let freqs = fb.frequencies();
    let lower = freqs
        .iter()
        .zip(&sum)
        .filter(|(f, _)| **f >= band.0 && **f <= band.1)
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    if !lower.is_finite() {
        return Err(Error::param("band contains no grid frequency"));
    }
    Ok(FrameDiagnostics {
        lower_bound: lower,
        upper_bound: peak,
        band,
    })
}
