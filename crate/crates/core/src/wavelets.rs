//! Mother wavelets and the Gaussian low-pass, designed directly in the frequency domain.
//!
//! Every band-pass response is a function of `freq / center` only, so a bank built by
//! dilating one kernel is exactly dilation covariant on any grid. Peaks are normalized
//! to 1 (unit peak gain), which corresponds to l1-normalized time-domain filters.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HALF_POWER: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Default gammatone order (classical auditory-filter choice).
pub const GAMMATONE_ORDER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Morlet,
    Gammatone,
}

/// A band-pass mother wavelet dilated to `center_frequency`.
///
/// When `signed` is set the response is the conjugate mirror `conj(H(-freq))`, i.e. the
/// complex conjugate of the kernel, so both spins see the same envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletKernel {
    pub family: Family,
    pub center_frequency: f64,
    pub quality: f64,
    /// Gammatone order; ignored for Morlet.
    pub order: u32,
    /// Number of vanishing moments at frequency zero (gammatone only: response ~ freq^m).
    pub vanishing_moments: u32,
    pub signed: bool,
}

impl WaveletKernel {
    pub fn morlet(center_frequency: f64, quality: f64) -> Self {
        WaveletKernel {
            family: Family::Morlet,
            center_frequency,
            quality,
            order: 0,
            vanishing_moments: 2,
            signed: false,
        }
    }

    pub fn gammatone(center_frequency: f64, quality: f64) -> Self {
        WaveletKernel {
            family: Family::Gammatone,
            center_frequency,
            quality,
            order: GAMMATONE_ORDER,
            vanishing_moments: 1,
            signed: false,
        }
    }

    pub fn with_vanishing_moments(mut self, m: u32) -> Self {
        self.vanishing_moments = m;
        self
    }

    pub fn mirrored(mut self) -> Self {
        self.signed = true;
        self
    }

    /// Sample the response on `freqs` (same units as `center_frequency`).
    pub fn response(&self, freqs: &[f64]) -> Result<Vec<Complex64>> {
        let grid: Vec<f64> = if self.signed {
            freqs.iter().map(|f| -f).collect()
        } else {
            freqs.to_vec()
        };
        match self.family {
            Family::Morlet => Ok(morlet_response(self.center_frequency, self.quality, &grid)?
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect()),
            Family::Gammatone => gammatone_response_with_moments(
                self.center_frequency,
                self.quality,
                self.order,
                self.vanishing_moments,
                &grid,
            )
            .map(|v| {
                if self.signed {
                    v.into_iter().map(|z| z.conj()).collect()
                } else {
                    v
                }
            }),
        }
    }

    /// Response of the kernel sampled on an axis of rate `rate`: the sum over the aliases
    /// `freq + k * rate`, so a bin at Nyquist gets the same value from either side.
    pub fn periodic_response(&self, freqs: &[f64], rate: f64) -> Result<Vec<Complex64>> {
        if freqs.is_empty() {
            return Ok(Vec::new());
        }
        let shifted: Vec<f64> = (-ALIASES..=ALIASES)
            .flat_map(|k| freqs.iter().map(move |f| f + k as f64 * rate))
            .collect();
        let all = self.response(&shifted)?;
        let mut acc = vec![Complex64::new(0.0, 0.0); freqs.len()];
        for chunk in all.chunks(freqs.len()) {
            for (a, v) in acc.iter_mut().zip(chunk) {
                *a += v;
            }
        }
        Ok(acc)
    }
}

/// Alias count on each side for [`WaveletKernel::periodic_response`].
const ALIASES: i32 = 256;

/// Gaussian low-pass of support `support` seconds (or axis units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowpassKernel {
    pub support: f64,
}

impl LowpassKernel {
    pub fn new(support: f64) -> Result<Self> {
        if !(support > 0.0) || !support.is_finite() {
            return Err(Error::param(format!("low-pass support must be > 0, got {support}")));
        }
        Ok(LowpassKernel { support })
    }

    pub fn response(&self, freqs: &[f64]) -> Vec<f64> {
        let sf = lowpass_sigma(self.support);
        freqs.iter().map(|f| (-f * f / (2.0 * sf * sf)).exp()).collect()
    }
}

// Chosen so that the response at 1/T is exactly one half.
fn lowpass_sigma(t: f64) -> f64 {
    1.0 / (t * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Gaussian low-pass response: 1 at DC, 0.5 at `1/T`.
pub fn gaussian_lowpass_response(t: f64, freqs: &[f64]) -> Result<Vec<f64>> {
    Ok(LowpassKernel::new(t)?.response(freqs))
}

// ---------------------------------------------------------------------------
// Morlet

#[derive(Debug, Clone, Copy)]
struct MorletShape {
    center: f64,
    sigma: f64,
    kappa: f64,
    slope: f64,
    peak: f64,
}

impl MorletShape {
    fn new(center: f64, sigma: f64) -> Self {
        let kappa = (-center * center / (2.0 * sigma * sigma)).exp();
        let slope = center * kappa / (sigma * sigma);
        let mut s = MorletShape {
            center,
            sigma,
            kappa,
            slope,
            peak: 1.0,
        };
        s.peak = s.raw(1.0);
        s
    }

    fn raw(&self, u: f64) -> f64 {
        let s2 = 2.0 * self.sigma * self.sigma;
        let g = (-u * u / s2).exp();
        (-(u - self.center).powi(2) / s2).exp() - self.kappa * g - self.slope * u * g
    }

    fn derivative(&self, u: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let g = (-u * u / (2.0 * s2)).exp();
        let gp = -u / s2 * g;
        let big = (-(u - self.center).powi(2) / (2.0 * s2)).exp();
        -(u - self.center) / s2 * big - self.kappa * gp - self.slope * g - self.slope * u * gp
    }
}

// For a given width, place the Gaussian so that the corrected response peaks at u = 1.
fn morlet_center_for_sigma(sigma: f64) -> Option<f64> {
    let (mut lo, mut hi) = (1e-3, 1.0);
    if MorletShape::new(hi, sigma).derivative(1.0) <= 0.0 {
        return Some(1.0);
    }
    if MorletShape::new(lo, sigma).derivative(1.0) >= 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if MorletShape::new(mid, sigma).derivative(1.0) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

// Half-power width around the unit peak of a unimodal profile on u > 0.
fn half_power_width(mag: impl Fn(f64) -> f64) -> f64 {
    let target = HALF_POWER;
    let left = bisect(1e-12, 1.0, |u| mag(u) - target);
    let mut hi = 2.0;
    while mag(hi) > target {
        hi *= 2.0;
    }
    let right = bisect(1.0, hi, |u| mag(u) - target);
    right - left
}

fn morlet_width(sigma: f64) -> f64 {
    match morlet_center_for_sigma(sigma) {
        None => f64::INFINITY,
        Some(c) => {
            let shape = MorletShape::new(c, sigma);
            half_power_width(|u| shape.raw(u) / shape.peak)
        }
    }
}

fn morlet_shape(q: f64) -> Result<MorletShape> {
    let target = 1.0 / q;
    let (mut lo, mut hi) = (1e-4 / q, 2.0);
    if morlet_width(hi) < target {
        return Err(Error::param(format!("Morlet quality {q} is too low")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if morlet_width(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    let width = morlet_width(sigma);
    if !width.is_finite() || (width * q - 1.0).abs() > 1e-3 {
        return Err(Error::param(format!(
            "Morlet quality {q} is too low for a zero-mean, zero-first-moment wavelet"
        )));
    }
    let c = morlet_center_for_sigma(sigma).expect("feasible width");
    Ok(MorletShape::new(c, sigma))
}

/// Corrected Morlet: Gaussian bump minus a Gaussian correction at 0 that cancels both the
/// response and its slope at DC (zero mean and vanishing first moment). The Gaussian is
/// recentred so that the corrected response peaks exactly at `xi` with a -3 dB width of
/// `xi / q`. Real-valued.
pub fn morlet_response(xi: f64, q: f64, freqs: &[f64]) -> Result<Vec<f64>> {
    if !(xi > 0.0) || !(q > 0.0) {
        return Err(Error::param(format!("Morlet needs xi > 0 and Q > 0, got xi={xi}, Q={q}")));
    }
    let shape = morlet_shape(q)?;
    Ok(freqs.iter().map(|f| shape.raw(f / xi) / shape.peak).collect())
}

// ---------------------------------------------------------------------------
// Gammatone

/// Frequency-domain gammatone `u^m (s + i(u - u_p))^(-N)`, `u = freq/xi`, one-sided.
#[derive(Debug, Clone, Copy)]
struct GammatoneShape {
    order: i32,
    moments: i32,
    s: f64,
    up: f64,
    norm: Complex64,
}

impl GammatoneShape {
    fn new(order: u32, moments: u32, s: f64) -> Self {
        let k = order as f64 / moments as f64;
        let d = 0.5 * (k - (k * k - 4.0 * s * s).max(0.0).sqrt());
        let mut g = GammatoneShape {
            order: order as i32,
            moments: moments as i32,
            s,
            up: 1.0 - d,
            norm: Complex64::new(1.0, 0.0),
        };
        g.norm = g.raw(1.0);
        g
    }

    fn raw(&self, u: f64) -> Complex64 {
        if u <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(self.s, u - self.up).powi(-self.order) * u.powi(self.moments)
    }

    fn magnitude(&self, u: f64) -> f64 {
        (self.raw(u) / self.norm).norm()
    }
}

fn gammatone_shape(q: f64, order: u32, moments: u32) -> Result<GammatoneShape> {
    let target = 1.0 / q;
    let k = order as f64 / moments as f64;
    let width = |s: f64| {
        let g = GammatoneShape::new(order, moments, s);
        half_power_width(|u| g.magnitude(u))
    };
    let (mut lo, mut hi) = (1e-9, 0.5 * k * (1.0 - 1e-12));
    if width(hi) < target {
        return Err(Error::param(format!(
            "gammatone quality {q} is too low for order {order} with {moments} vanishing moments"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if width(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammatoneShape::new(order, moments, 0.5 * (lo + hi)))
}

/// Analytic gammatone of the given order with one vanishing moment, peak 1 at `xi`.
pub fn gammatone_response(xi: f64, q: f64, order: u32, freqs: &[f64]) -> Result<Vec<Complex64>> {
    gammatone_response_with_moments(xi, q, order, 1, freqs)
}

/// Gammatone whose response vanishes like `freq^moments` at DC.
pub fn gammatone_response_with_moments(
    xi: f64,
    q: f64,
    order: u32,
    moments: u32,
    freqs: &[f64],
) -> Result<Vec<Complex64>> {
    if order < 2 {
        return Err(Error::param(format!("gammatone order must be >= 2, got {order}")));
    }
    if moments == 0 || moments >= order {
        return Err(Error::param(format!(
            "gammatone needs 1 <= vanishing moments < order, got {moments}"
        )));
    }
    if !(xi > 0.0) || !(q > 0.0) {
        return Err(Error::param(format!("gammatone needs xi > 0 and Q > 0, got xi={xi}, Q={q}")));
    }
    let g = gammatone_shape(q, order, moments)?;
    Ok(freqs.iter().map(|f| g.raw(f / xi) / g.norm).collect())
}
