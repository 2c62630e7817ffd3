//! Constant-Q scalogram, time averaging, and the spiral (chroma x octave) view.

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::filterbank::{BankKind, Filterbank};
use crate::wavelets::LowpassKernel;

/// `values[[frame, i]] = |x * psi_i|(frame * hop)`, filters in ascending center order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub values: Array2<f64>,
    pub frame_rate: f64,
    pub lambda1_centers: Vec<f64>,
    /// Bins per octave.
    pub quality: usize,
    pub octaves: usize,
}

/// `values[[frame, chroma, octave]]`, a lossless reindexing of a [`Scalogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralTensor {
    pub values: Array3<f64>,
    pub frame_rate: f64,
    pub lambda1_centers: Vec<f64>,
    pub quality: usize,
    pub octaves: usize,
}

impl Scalogram {
    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_lambda1(&self) -> usize {
        self.values.ncols()
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.frame_rate
    }
}

impl SpiralTensor {
    pub fn frames(&self) -> usize {
        self.values.shape()[0]
    }
}

/// Index into a reflect-padded (edge excluded) signal of length `len`.
fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Reflect-pad `signal` to `grid` samples, centred. Returns the padded buffer and left offset.
pub(crate) fn reflect_pad(signal: &[f64], grid: usize) -> (Vec<Complex64>, usize) {
    let len = signal.len();
    let left = (grid - len) / 2;
    let buf = (0..grid)
        .map(|k| Complex64::new(signal[reflect_index(k as isize - left as isize, len)], 0.0))
        .collect();
    (buf, left)
}

/// Scalogram of `signal` with a first-order bank, sampled every `hop` samples.
pub fn cqt(signal: &[f64], sample_rate: f64, fb: &Filterbank, hop: usize) -> Result<Scalogram> {
    if fb.kind != BankKind::Order1 {
        return Err(Error::param("cqt needs a first-order filterbank"));
    }
    if (sample_rate - fb.sample_rate).abs() > 1e-9 * fb.sample_rate {
        return Err(Error::param(format!(
            "signal sample rate {sample_rate} Hz does not match the filterbank's {} Hz",
            fb.sample_rate
        )));
    }
    if signal.is_empty() {
        return Err(Error::param("empty signal"));
    }
    if signal.len() > fb.grid_size {
        return Err(Error::param(format!(
            "signal of {} samples exceeds the filterbank grid of {}",
            signal.len(),
            fb.grid_size
        )));
    }
    if hop == 0 || !hop.is_power_of_two() || hop > fb.grid_size / (2 * fb.octaves.max(1)) {
        return Err(Error::param(format!(
            "hop must be a power of two <= grid/(2J) = {}, got {hop}",
            fb.grid_size / (2 * fb.octaves.max(1))
        )));
    }
    let (mut spectrum, left) = reflect_pad(signal, fb.grid_size);
    fft::forward(&mut spectrum);
    let frames = signal.len().div_ceil(hop);
    let columns: Vec<Vec<f64>> = fb
        .responses
        .par_iter()
        .map(|h| {
            let mut y: Vec<Complex64> = spectrum.iter().zip(h).map(|(x, h)| x * h).collect();
            fft::inverse(&mut y);
            (0..frames).map(|n| y[left + n * hop].norm()).collect()
        })
        .collect();
    let mut values = Array2::zeros((frames, fb.len()));
    for (i, col) in columns.iter().enumerate() {
        for (n, v) in col.iter().enumerate() {
            values[[n, i]] = *v;
        }
    }
    Ok(Scalogram {
        values,
        frame_rate: sample_rate / hop as f64,
        lambda1_centers: fb.centers.clone(),
        quality: fb.bins_per_octave(),
        octaves: fb.octaves,
    })
}

/// Low-pass one series with `phi_T` after even (half-sample) symmetric extension to twice
/// its length; the extension keeps the operator non-expansive and free of edge jumps.
pub fn smooth_series(x: &[f64], rate: f64, t: f64) -> Result<Vec<f64>> {
    let lp = LowpassKernel::new(t)?;
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut buf: Vec<Complex64> = x
        .iter()
        .chain(x.iter().rev())
        .map(|v| Complex64::new(*v, 0.0))
        .collect();
    fft::forward(&mut buf);
    let resp = lp.response(&fft::fftfreq(2 * n, rate));
    for (b, r) in buf.iter_mut().zip(resp) {
        *b *= r;
    }
    fft::inverse(&mut buf);
    Ok(buf[..n].iter().map(|v| v.re).collect())
}

/// Largest power-of-two decimation keeping at least `2/T` frames per second.
pub fn decimation_factor(rate: f64, t: f64) -> usize {
    let mut s = 1usize;
    while rate / (2 * s) as f64 >= 2.0 / t {
        s *= 2;
    }
    s
}

pub(crate) fn check_average_support(rate: f64, t: f64) -> Result<()> {
    if !(t > 0.0) || t < 2.0 / rate - 1e-12 {
        return Err(Error::param(format!(
            "averaging support T = {t} s is below 2 frames at {rate} Hz"
        )));
    }
    Ok(())
}

/// Smooth every column (time along rows) without decimation.
pub fn smooth_columns(values: &Array2<f64>, rate: f64, t: f64) -> Result<Array2<f64>> {
    let cols: Vec<Vec<f64>> = (0..values.ncols())
        .into_par_iter()
        .map(|c| smooth_series(&values.column(c).to_vec(), rate, t))
        .collect::<Result<_>>()?;
    let mut out = Array2::zeros(values.raw_dim());
    for (c, col) in cols.iter().enumerate() {
        out.column_mut(c).assign(&ndarray::ArrayView1::from(col.as_slice()));
    }
    Ok(out)
}

/// `phi_T` smoothing without decimation; frame rate unchanged.
pub fn smooth_time(sc: &Scalogram, t: f64) -> Result<Scalogram> {
    check_average_support(sc.frame_rate, t)?;
    Ok(Scalogram {
        values: smooth_columns(&sc.values, sc.frame_rate, t)?,
        ..sc.clone()
    })
}

/// Averaged scalogram S1: `phi_T` smoothing, then decimation to at least `2/T` frames per second.
pub fn average_time(sc: &Scalogram, t: f64) -> Result<Scalogram> {
    let smoothed = smooth_time(sc, t)?;
    let s = decimation_factor(sc.frame_rate, t);
    let values = smoothed.values.slice(ndarray::s![..;s, ..]).to_owned();
    Ok(Scalogram {
        values,
        frame_rate: sc.frame_rate / s as f64,
        ..smoothed
    })
}

/// Roll log-frequency onto the spiral: `out[[n, chroma, octave]] = x1[[n, octave * Q + chroma]]`.
pub fn to_spiral(sc: &Scalogram) -> Result<SpiralTensor> {
    let (q, j) = (sc.quality, sc.octaves);
    if q == 0 || j == 0 || sc.n_lambda1() != q * j {
        return Err(Error::param(format!(
            "{} log-frequency bins do not form a {q} x {j} spiral grid",
            sc.n_lambda1()
        )));
    }
    let frames = sc.frames();
    let values = Array3::from_shape_fn((frames, q, j), |(n, c, o)| sc.values[[n, o * q + c]]);
    Ok(SpiralTensor {
        values,
        frame_rate: sc.frame_rate,
        lambda1_centers: sc.lambda1_centers.clone(),
        quality: q,
        octaves: j,
    })
}

/// Inverse of [`to_spiral`].
pub fn from_spiral(sp: &SpiralTensor) -> Scalogram {
    let (frames, q, j) = sp.values.dim();
    let values = Array2::from_shape_fn((frames, q * j), |(n, l)| sp.values[[n, l % q, l / q]]);
    Scalogram {
        values,
        frame_rate: sp.frame_rate,
        lambda1_centers: sp.lambda1_centers.clone(),
        quality: q,
        octaves: j,
    }
}

/// Time-average of each log-frequency channel over all frames.
pub fn mean_over_time(sc: &Scalogram) -> Vec<f64> {
    sc.values.mean_axis(Axis(0)).unwrap().to_vec()
}
