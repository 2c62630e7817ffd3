//! Quantitative checks on scalograms and spiral coefficients: octave and chroma residuals,
//! plane fitting in (alpha, beta, gamma) with velocity recovery, and spin asymmetry.
//!
//! With the spin labels of [`crate::filterbank`], a source gliding at `v_s` oct/s under an
//! envelope gliding at `v_f` oct/s puts its energy near `alpha = |v_s beta + v_f gamma|`.

use std::ops::Range;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::filterbank::{BankKind, Filterbank};
use crate::scalogram::{to_spiral, Scalogram, SpiralTensor};
use crate::scattering::{ScatteringCoefficients, TransformKind};

/// Outcome of a plane fit. Velocities in octaves per second, `t` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub estimated_source_velocity: f64,
    pub estimated_filter_velocity: f64,
    pub residual: f64,
    pub t: f64,
    pub mass_fraction: f64,
}

impl PlaneFit {
    /// Largest `|v_s beta + v_f gamma|` over the given modulation pairs.
    pub fn max_predicted_alpha(&self, pairs: &[(f64, f64)]) -> f64 {
        pairs
            .iter()
            .map(|(b, g)| (self.estimated_source_velocity * b + self.estimated_filter_velocity * g).abs())
            .fold(0.0, f64::max)
    }
}

/// Energy ratios of positive to negative spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinAsymmetry {
    pub beta_ratio: f64,
    pub gamma_ratio: Option<f64>,
}

// Least-squares removal of the affine trend of a short profile.
fn remove_affine(v: &mut [f64]) {
    let n = v.len();
    if n < 2 {
        if n == 1 {
            v[0] = 0.0;
        }
        return;
    }
    let c = (n as f64 - 1.0) / 2.0;
    let mean = v.iter().sum::<f64>() / n as f64;
    let sxx: f64 = (0..n).map(|i| (i as f64 - c).powi(2)).sum();
    let slope = v.iter().enumerate().map(|(i, x)| (i as f64 - c) * x).sum::<f64>() / sxx;
    for (i, x) in v.iter_mut().enumerate() {
        *x -= mean + slope * (i as f64 - c);
    }
}

// Max over filters of ||detrended profile * psi|| restricted to `keep`, squared, summed over profiles.
fn profile_response(
    profiles: impl Iterator<Item = Vec<f64>>,
    bank: &Filterbank,
    keep: Range<usize>,
) -> Vec<f64> {
    let mut energy = vec![0.0; bank.len()];
    let grid = bank.grid_size;
    for mut prof in profiles {
        remove_affine(&mut prof);
        let mut spec = vec![Complex64::new(0.0, 0.0); grid];
        for (s, v) in spec.iter_mut().zip(&prof) {
            *s = Complex64::new(*v, 0.0);
        }
        fft::forward(&mut spec);
        for (k, h) in bank.responses.iter().enumerate() {
            let mut y: Vec<Complex64> = spec.iter().zip(h).map(|(a, b)| a * b).collect();
            fft::inverse(&mut y);
            energy[k] += y[keep.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
    }
    energy
}

/// Octave-axis residual of a spiral tensor: each (frame, chroma) octave profile is
/// detrended, filtered with every `psi_gamma` of the bank, and the interior octaves (first
/// and last excluded) are compared to the tensor norm. Returns the maximum over the bank.
pub fn harmonicity_residual(sp: &SpiralTensor, bank_gamma: &Filterbank) -> Result<f64> {
    if bank_gamma.kind != BankKind::ModulationOctave {
        return Err(Error::param("harmonicity residual needs an octave modulation bank"));
    }
    let (frames, q, j) = sp.values.dim();
    if j < 3 {
        return Err(Error::param("need at least 3 octaves for interior residuals"));
    }
    if bank_gamma.grid_size < j {
        return Err(Error::param("gamma bank grid is shorter than the octave axis"));
    }
    let norm = sp.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("all-zero spiral tensor".into()));
    }
    let values = &sp.values;
    let profiles = (0..frames).flat_map(|n| {
        (0..q).map(move |c| values.slice(ndarray::s![n, c, ..]).to_vec())
    });
    let energy = profile_response(profiles, bank_gamma, 1..j - 1);
    Ok(energy.into_iter().fold(0.0, f64::max).sqrt() / norm)
}

/// Chroma-axis residual: each (frame, octave) chroma profile is detrended and filtered with
/// every `psi_beta` of a log-frequency bank. Returns the maximum ratio to the scalogram norm.
pub fn spectral_regularity_residual(sc: &Scalogram, bank_beta: &Filterbank) -> Result<f64> {
    if bank_beta.kind != BankKind::ModulationLogfreq {
        return Err(Error::param("spectral regularity needs a log-frequency modulation bank"));
    }
    let sp = to_spiral(sc)?;
    let (frames, q, j) = sp.values.dim();
    if (bank_beta.sample_rate - q as f64).abs() > 1e-12 || bank_beta.grid_size < q {
        return Err(Error::param("beta bank does not match the chroma axis"));
    }
    let norm = sp.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("all-zero scalogram".into()));
    }
    let values = &sp.values;
    let profiles = (0..frames).flat_map(|n| {
        (0..j).map(move |o| values.slice(ndarray::s![n, .., o]).to_vec())
    });
    let energy = profile_response(profiles, bank_beta, 0..q);
    Ok(energy.into_iter().fold(0.0, f64::max).sqrt() / norm)
}

struct Grid {
    alphas: Vec<f64>,
    pairs: Vec<(f64, f64)>,
    /// energy[pair][alpha]
    energy: Vec<Vec<f64>>,
}

fn position(v: &[f64], x: f64) -> usize {
    v.iter().position(|y| *y == x).expect("value collected from the same paths")
}

fn modulation_grid(x2: &ScatteringCoefficients, window: &Range<usize>) -> Grid {
    let mut alphas: Vec<f64> = Vec::new();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for p in &x2.paths {
        if !alphas.contains(&p.alpha) {
            alphas.push(p.alpha);
        }
        if !pairs.contains(&(p.beta, p.gamma)) {
            pairs.push((p.beta, p.gamma));
        }
    }
    alphas.sort_by(f64::total_cmp);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut energy = vec![vec![0.0; alphas.len()]; pairs.len()];
    for (p, row) in x2.paths.iter().zip(x2.values.rows()) {
        let e: f64 = row.slice(ndarray::s![window.clone()]).iter().map(|v| v * v).sum();
        let pi = pairs.iter().position(|q| *q == (p.beta, p.gamma)).unwrap();
        energy[pi][position(&alphas, p.alpha)] += e;
    }
    Grid {
        alphas,
        pairs,
        energy,
    }
}

/// Log-centroid of alpha over the argmax bin and its neighbours (ties to the smaller alpha).
/// A peak in the lowest bin means the modulation is below resolution and maps to 0.
fn local_alpha(alphas: &[f64], e: &[f64]) -> f64 {
    let mut k = 0;
    for (i, v) in e.iter().enumerate() {
        if *v > e[k] {
            k = i;
        }
    }
    if k == 0 {
        return 0.0;
    }
    let hi = (k + 1).min(e.len() - 1);
    let (mut num, mut den) = (0.0, 0.0);
    for i in k - 1..=hi {
        num += alphas[i].log2() * e[i];
        den += e[i];
    }
    (num / den).exp2()
}

struct Point {
    beta: f64,
    gamma: f64,
    alpha: f64,
    weight: f64,
}

fn weighted_fit(points: &[&Point]) -> Option<(f64, f64)> {
    let (mut sbb, mut sbg, mut sgg, mut sba, mut sga) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        sbb += p.weight * p.beta * p.beta;
        sbg += p.weight * p.beta * p.gamma;
        sgg += p.weight * p.gamma * p.gamma;
        sba += p.weight * p.beta * p.alpha;
        sga += p.weight * p.gamma * p.alpha;
    }
    let det = sbb * sgg - sbg * sbg;
    if !(det.abs() > 1e-12 * (sbb * sgg).abs()) || sbb == 0.0 || sgg == 0.0 {
        return None;
    }
    Some(((sba * sgg - sga * sbg) / det, (sbb * sga - sbg * sba) / det))
}

fn spin_split(pts: &[Point], axis: impl Fn(&Point) -> f64) -> (f64, f64) {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for p in pts {
        let s = axis(p);
        if s > 0.0 {
            pos += p.weight;
        } else if s < 0.0 {
            neg += p.weight;
        }
    }
    (pos, neg)
}

/// Second-order energy of a (beta, gamma) pair, relative to the first-order energy over the
/// same frames, below which the pair counts as unmodulated.
pub const MIN_MODULATION_ENERGY: f64 = 1e-4;

/// Fit `alpha* = v_s beta + v_f gamma` over frames `window` of spiral coefficients.
///
/// `alpha*` per (beta, gamma) is a local energy-weighted argmax. The modulus fold is
/// resolved by starting from the half-space of the dominant spin (on whichever of beta or
/// gamma is more lopsided) and then iterating on the set where the fitted plane is positive.
pub fn fit_plane(x2: &ScatteringCoefficients, window: Range<usize>) -> Result<PlaneFit> {
    fit_plane_with_floor(x2, window, 0.0)
}

/// [`fit_plane`] with the scalogram the coefficients came from: pairs carrying less than
/// [`MIN_MODULATION_ENERGY`] of its energy in the window are treated as unmodulated.
pub fn fit_plane_against(
    x2: &ScatteringCoefficients,
    sc: &Scalogram,
    window: Range<usize>,
) -> Result<PlaneFit> {
    if sc.frames() != x2.frames() {
        return Err(Error::param(format!(
            "scalogram has {} frames, coefficients {}",
            sc.frames(),
            x2.frames()
        )));
    }
    let reference: f64 = sc
        .values
        .slice(ndarray::s![window.clone(), ..])
        .iter()
        .map(|v| v * v)
        .sum();
    fit_plane_with_floor(x2, window, MIN_MODULATION_ENERGY * reference)
}

fn fit_plane_with_floor(
    x2: &ScatteringCoefficients,
    window: Range<usize>,
    floor: f64,
) -> Result<PlaneFit> {
    if x2.kind != TransformKind::Spiral {
        return Err(Error::param("plane fitting needs spiral coefficients"));
    }
    if window.start >= window.end || window.end > x2.frames() {
        return Err(Error::param(format!(
            "frame window {window:?} is outside 0..{}",
            x2.frames()
        )));
    }
    let grid = modulation_grid(x2, &window);
    let total: f64 = grid.energy.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("scattering energy is zero in the window".into()));
    }
    let points: Vec<Point> = grid
        .pairs
        .iter()
        .zip(&grid.energy)
        .filter(|(_, e)| e.iter().sum::<f64>() > 0.0)
        .map(|(&(beta, gamma), e)| Point {
            beta,
            gamma,
            alpha: if e.iter().sum::<f64>() < floor {
                0.0
            } else {
                local_alpha(&grid.alphas, e)
            },
            weight: e.iter().sum(),
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 (beta, gamma) pairs with energy, got {}",
            points.len()
        )));
    }

    let lopsided = |(p, n): (f64, f64)| {
        if p > 0.0 && n > 0.0 {
            (p / n).ln().abs()
        } else if p + n > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let b = spin_split(&points, |p| p.beta);
    let g = spin_split(&points, |p| p.gamma);
    let mut set: Vec<bool> = if lopsided(b) >= lopsided(g) {
        let s = if b.0 >= b.1 { 1.0 } else { -1.0 };
        points.iter().map(|p| p.beta * s > 0.0).collect()
    } else {
        let s = if g.0 >= g.1 { 1.0 } else { -1.0 };
        points.iter().map(|p| p.gamma * s > 0.0).collect()
    };

    let chosen = |set: &[bool]| -> Vec<&Point> {
        points.iter().zip(set).filter(|(_, s)| **s).map(|(p, _)| p).collect()
    };
    if chosen(&set).len() < 3 {
        return Err(Error::Degenerate("fewer than 3 pairs on the dominant half-space".into()));
    }
    let mut coef = (0.0, 0.0);
    for _ in 0..32 {
        coef = weighted_fit(&chosen(&set))
            .ok_or_else(|| Error::Degenerate("singular plane fit".into()))?;
        let next: Vec<bool> = points
            .iter()
            .map(|p| coef.0 * p.beta + coef.1 * p.gamma > 0.0)
            .collect();
        // a vanishing plane (no resolved modulation) leaves no half-space to refine
        if next == set || chosen(&next).len() < 3 {
            break;
        }
        set = next;
    }

    let (mut err, mut norm) = (0.0, 0.0);
    for p in chosen(&set) {
        let pred = coef.0 * p.beta + coef.1 * p.gamma;
        err += p.weight * (p.alpha - pred).powi(2);
        norm += p.weight * p.alpha * p.alpha;
    }
    let residual = if norm > 0.0 { (err / norm).sqrt() } else { err.sqrt() };

    let (a_lo, a_hi) = (grid.alphas[0], *grid.alphas.last().unwrap());
    let mut near = 0.0;
    for (&(beta, gamma), e) in grid.pairs.iter().zip(&grid.energy) {
        let target = (coef.0 * beta + coef.1 * gamma).abs().clamp(a_lo, a_hi);
        for (a, v) in grid.alphas.iter().zip(e) {
            if (a.log2() - target.log2()).abs() <= 1.0 + 1e-9 {
                near += v;
            }
        }
    }

    Ok(PlaneFit {
        estimated_source_velocity: coef.0,
        estimated_filter_velocity: coef.1,
        residual,
        t: 0.5 * (window.start + window.end) as f64 / x2.frame_rate,
        mass_fraction: near / total,
    })
}

/// Central half of the frames, away from boundary transients.
pub fn interior_window(frames: usize) -> Range<usize> {
    frames / 4..(3 * frames / 4).max(frames / 4 + 1)
}

/// [`fit_plane`] over the interior half of the frames.
pub fn fit_plane_interior(x2: &ScatteringCoefficients) -> Result<PlaneFit> {
    fit_plane(x2, interior_window(x2.frames()))
}

/// [`fit_plane_against`] over the interior half of the frames.
pub fn fit_plane_interior_against(x2: &ScatteringCoefficients, sc: &Scalogram) -> Result<PlaneFit> {
    fit_plane_against(x2, sc, interior_window(x2.frames()))
}

/// Distinct (beta, gamma) pairs present in a coefficient set.
pub fn modulation_pairs(x2: &ScatteringCoefficients) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for p in &x2.paths {
        if !pairs.contains(&(p.beta, p.gamma)) {
            pairs.push((p.beta, p.gamma));
        }
    }
    pairs
}

/// Ratio of positive- to negative-spin energy over `window`, per axis.
pub fn spin_asymmetry(x2: &ScatteringCoefficients, window: Range<usize>) -> Result<SpinAsymmetry> {
    if x2.kind == TransformKind::Temporal {
        return Err(Error::param("temporal coefficients carry no spin"));
    }
    if window.start >= window.end || window.end > x2.frames() {
        return Err(Error::param(format!("frame window {window:?} is outside 0..{}", x2.frames())));
    }
    let (mut bp, mut bn, mut gp, mut gn) = (0.0, 0.0, 0.0, 0.0);
    for (p, row) in x2.paths.iter().zip(x2.values.rows()) {
        let e: f64 = row.slice(ndarray::s![window.clone()]).iter().map(|v| v * v).sum();
        if p.beta > 0.0 {
            bp += e;
        } else if p.beta < 0.0 {
            bn += e;
        }
        if p.gamma > 0.0 {
            gp += e;
        } else if p.gamma < 0.0 {
            gn += e;
        }
    }
    let ratio = |p: f64, n: f64| {
        if n > 0.0 {
            Ok(p / n)
        } else {
            Err(Error::Degenerate("no negative-spin energy".into()))
        }
    };
    Ok(SpinAsymmetry {
        beta_ratio: ratio(bp, bn)?,
        gamma_ratio: if x2.kind == TransformKind::Spiral {
            Some(ratio(gp, gn)?)
        } else {
            None
        },
    })
}
