//! Deformed source-filter signals: a harmonic source whose pitch glides exponentially,
//! shaped by a spectral envelope that is itself dilated over time.
//!
//! Synthesis is additive: `x(t) = sum_p h(p f(t) / d(t)) cos(p theta(t))` where `f` is the
//! instantaneous fundamental and `d` the envelope dilation. Velocities are in octaves per
//! second throughout.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffeoKind {
    #[default]
    Exponential,
}

/// Time warp with `d/dt log2(rate) = velocity`; `initial_rate` is in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diffeo {
    #[serde(default)]
    pub kind: DiffeoKind,
    pub initial_rate: f64,
    pub velocity: f64,
}

/// Warp value, rate (rad/s) and relative acceleration (1/s) at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoState {
    pub phase: f64,
    pub rate: f64,
    pub relative_acceleration: f64,
}

impl Diffeo {
    pub fn new(initial_rate: f64, velocity: f64) -> Self {
        Diffeo {
            kind: DiffeoKind::Exponential,
            initial_rate,
            velocity,
        }
    }

    /// Instantaneous frequency in Hz.
    pub fn frequency(&self, t: f64) -> f64 {
        self.initial_rate * (self.velocity * t).exp2()
    }
}

/// Closed-form exponential warp; the zero-velocity limit is exact.
pub fn eval_diffeo(d: &Diffeo, t: f64) -> DiffeoState {
    let w0 = 2.0 * PI * d.initial_rate;
    let k = d.velocity * LN_2;
    let x = k * t;
    let phase = if x == 0.0 { w0 * t } else { w0 * t * x.exp_m1() / x };
    DiffeoState {
        phase,
        rate: w0 * (d.velocity * t).exp2(),
        relative_acceleration: k,
    }
}

/// Spectral envelope `h` as a function of frequency in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Envelope {
    Flat,
    /// Gaussian bump in log-frequency (quadratic log-magnitude).
    LogGaussian { center_hz: f64, width_octaves: f64 },
}

impl Envelope {
    pub fn gain(&self, f: f64) -> f64 {
        match *self {
            Envelope::Flat => 1.0,
            Envelope::LogGaussian {
                center_hz,
                width_octaves,
            } => {
                let d = (f / center_hz).log2();
                (-d * d / (2.0 * width_octaves * width_octaves)).exp()
            }
        }
    }

    /// `|d ln h / d log2 f|` at frequency `f`.
    pub fn log_slope(&self, f: f64) -> f64 {
        match *self {
            Envelope::Flat => 0.0,
            Envelope::LogGaussian {
                center_hz,
                width_octaves,
            } => ((f / center_hz).log2() / (width_octaves * width_octaves)).abs(),
        }
    }

    pub fn max_gain(&self) -> f64 {
        1.0
    }

    fn validate(&self) -> Result<()> {
        if let Envelope::LogGaussian {
            center_hz,
            width_octaves,
        } = *self
        {
            if !(center_hz > 0.0) || !(width_octaves > 0.0) {
                return Err(Error::param("envelope center and width must be positive"));
            }
        }
        Ok(())
    }
}

fn default_quality() -> usize {
    16
}

/// Full description of a deformed source-filter signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFilterSpec {
    pub source: Diffeo,
    pub filter: Diffeo,
    pub partials: usize,
    pub envelope: Envelope,
    pub duration: f64,
    pub sample_rate: f64,
    /// Quality factor of the analysis bank the signal is meant for.
    #[serde(default = "default_quality")]
    pub analysis_quality: usize,
}

impl SourceFilterSpec {
    /// Source at `f0` gliding at `source_velocity`, envelope gliding at `filter_velocity`.
    pub fn new(
        f0: f64,
        source_velocity: f64,
        filter_velocity: f64,
        partials: usize,
        envelope: Envelope,
        duration: f64,
        sample_rate: f64,
    ) -> Self {
        SourceFilterSpec {
            source: Diffeo::new(f0, source_velocity),
            filter: Diffeo::new(1.0, filter_velocity),
            partials,
            envelope,
            duration,
            sample_rate,
            analysis_quality: default_quality(),
        }
    }
}

/// One piece of a piecewise-exponential trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub source_velocity: f64,
    pub filter_velocity: f64,
}

/// Synthesized samples with any slow-variation warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub samples: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Additive synthesis of `spec`. Violations of the slow-variation and spectral-regularity
/// hypotheses are reported as warnings; aliasing and too many partials are errors.
pub fn synthesize(spec: &SourceFilterSpec) -> Result<Synthesis> {
    synthesize_segments(
        spec.source.initial_rate,
        &[Segment {
            duration: spec.duration,
            source_velocity: spec.source.velocity,
            filter_velocity: spec.filter.velocity,
        }],
        spec.partials,
        &spec.envelope,
        spec.sample_rate,
        spec.analysis_quality,
    )
}

/// Piecewise trajectory: log-pitch, log-dilation and phase are continuous across segments.
pub fn synthesize_segments(
    f0: f64,
    segments: &[Segment],
    partials: usize,
    envelope: &Envelope,
    sample_rate: f64,
    analysis_quality: usize,
) -> Result<Synthesis> {
    if !(f0 > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::param("f0 and sample rate must be positive"));
    }
    if partials == 0 {
        return Err(Error::param("need at least one partial"));
    }
    if 2 * partials >= analysis_quality {
        return Err(Error::param(format!(
            "{partials} partials is not below Q/2 = {}",
            analysis_quality as f64 / 2.0
        )));
    }
    if segments.is_empty() || segments.iter().any(|s| !(s.duration > 0.0)) {
        return Err(Error::param("segments must have positive durations"));
    }
    envelope.validate()?;

    // Fundamental at every segment boundary; exponential glides are monotone inside.
    let mut boundary = vec![f0];
    for s in segments {
        let last = *boundary.last().unwrap();
        boundary.push(last * (s.source_velocity * s.duration).exp2());
    }
    let f_hi = boundary.iter().cloned().fold(0.0, f64::max);
    let f_lo = boundary.iter().cloned().fold(f64::INFINITY, f64::min);
    let nyquist = 0.5 * sample_rate;
    if partials as f64 * f_hi >= nyquist {
        return Err(Error::param(format!(
            "partial {partials} reaches {} Hz, above Nyquist {nyquist} Hz",
            partials as f64 * f_hi
        )));
    }

    let q = analysis_quality as f64;
    let mut warnings = Vec::new();
    let bound = 0.1 * f_lo / q;
    for (name, v) in segments
        .iter()
        .flat_map(|s| [("source", s.source_velocity), ("filter", s.filter_velocity)])
    {
        if (v * LN_2).abs() > bound {
            warnings.push(format!(
                "{name} varies too fast: |{v} oct/s x ln2| exceeds 0.1 x {f_lo:.1} Hz / Q = {bound:.3}"
            ));
        }
    }

    let total: usize = segments
        .iter()
        .map(|s| (s.duration * sample_rate).round() as usize)
        .sum();
    let mut samples = Vec::with_capacity(total);
    let mut worst_slope: f64 = 0.0;
    let (mut phase0, mut freq0, mut log_dilation0) = (0.0, f0, 0.0);
    for seg in segments {
        let n = (seg.duration * sample_rate).round() as usize;
        let src = Diffeo::new(freq0, seg.source_velocity);
        for i in 0..n {
            let t = i as f64 / sample_rate;
            let st = eval_diffeo(&src, t);
            let fund = st.rate / (2.0 * PI);
            let dilation = (log_dilation0 + seg.filter_velocity * t).exp2();
            let theta = phase0 + st.phase;
            let mut acc = 0.0;
            for p in 1..=partials {
                let fp = p as f64 * fund / dilation;
                worst_slope = worst_slope.max(envelope.log_slope(fp));
                acc += envelope.gain(fp) * (p as f64 * theta).cos();
            }
            samples.push(acc);
        }
        phase0 += eval_diffeo(&src, seg.duration).phase;
        freq0 = src.frequency(seg.duration);
        log_dilation0 += seg.filter_velocity * seg.duration;
    }
    if worst_slope / q > 1.0 {
        warnings.push(format!(
            "envelope not smooth at the analysis resolution: log-slope {worst_slope:.2} per octave exceeds Q = {q}"
        ));
    }
    Ok(Synthesis { samples, warnings })
}

/// `sum_p cos(2 pi p f0 t)`, p = 1..=P.
pub fn harmonic_comb(f0: f64, partials: usize, duration: f64, sample_rate: f64) -> Result<Vec<f64>> {
    inharmonic_comb(f0, partials, 0.0, duration, sample_rate)
}

/// Stretched comb with partial frequencies `p f0 (1 + stretch p)`.
pub fn inharmonic_comb(
    f0: f64,
    partials: usize,
    stretch: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<Vec<f64>> {
    if !(f0 > 0.0) || partials == 0 || !(duration > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::param("comb needs f0 > 0, P >= 1, duration > 0, sample rate > 0"));
    }
    let freqs: Vec<f64> = (1..=partials)
        .map(|p| p as f64 * f0 * (1.0 + stretch * p as f64))
        .collect();
    let top = freqs.iter().cloned().fold(0.0, f64::max);
    if top >= 0.5 * sample_rate {
        return Err(Error::param(format!(
            "comb reaches {top} Hz, above Nyquist {} Hz",
            0.5 * sample_rate
        )));
    }
    let n = (duration * sample_rate).round() as usize;
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            freqs.iter().map(|f| (2.0 * PI * f * t).cos()).sum()
        })
        .collect())
}

/// Number of partials of a (possibly stretched) comb that stay at or below `f_max`.
pub fn partials_below(f0: f64, stretch: f64, f_max: f64) -> usize {
    let mut p = 0;
    while (p + 1) as f64 * f0 * (1.0 + stretch * (p + 1) as f64) <= f_max {
        p += 1;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft;
    use crate::filterbank::build_order1;
    use crate::scalogram::cqt;
    use rustfft::num_complex::Complex64;

    #[test]
    fn zero_velocity_is_linear_phase() {
        let d = Diffeo::new(440.0, 0.0);
        for t in [0.0, 0.1, 1.7] {
            assert_eq!(eval_diffeo(&d, t).phase, 2.0 * PI * 440.0 * t);
        }
    }

    #[test]
    fn one_octave_per_second_doubles_rate() {
        let d = Diffeo::new(100.0, 1.0);
        assert_eq!(eval_diffeo(&d, 1.0).rate / eval_diffeo(&d, 0.0).rate, 2.0);
    }

    #[test]
    fn relative_acceleration_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let v = rng.random_range(-2.0..2.0);
            let d = Diffeo::new(rng.random_range(50.0..500.0), v);
            let t: f64 = rng.random_range(0.0..2.0);
            let h = 1e-5;
            let rate = |t: f64| eval_diffeo(&d, t).rate;
            let fd = (rate(t + h) - rate(t - h)) / (2.0 * h) / rate(t);
            let exact = eval_diffeo(&d, t).relative_acceleration;
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-12) + 1e-9, "{fd} {exact}");
            // phase derivative is the rate
            let ph = |t: f64| eval_diffeo(&d, t).phase;
            let dph = (ph(t + h) - ph(t - h)) / (2.0 * h);
            assert!((dph / rate(t) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_flat_partial_is_a_sine() {
        let spec = SourceFilterSpec::new(300.0, 0.0, 0.0, 1, Envelope::Flat, 0.1, 8000.0);
        let s = synthesize(&spec).unwrap();
        assert!(s.warnings.is_empty());
        for (i, v) in s.samples.iter().enumerate() {
            let t = i as f64 / 8000.0;
            assert!((v - (2.0 * PI * 300.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_bound() {
        let spec = SourceFilterSpec::new(
            200.0,
            0.5,
            -0.3,
            5,
            Envelope::LogGaussian {
                center_hz: 600.0,
                width_octaves: 1.0,
            },
            0.5,
            16000.0,
        );
        let s = synthesize(&spec).unwrap();
        assert!(s.samples.iter().all(|v| v.abs() <= 5.0));
    }

    #[test]
    fn errors_and_warnings() {
        let alias = SourceFilterSpec::new(1000.0, 1.0, 0.0, 6, Envelope::Flat, 1.0, 16000.0);
        assert!(synthesize(&alias).is_err());
        let many = SourceFilterSpec::new(100.0, 0.0, 0.0, 8, Envelope::Flat, 0.1, 16000.0);
        assert!(synthesize(&many).is_err());
        let fast = SourceFilterSpec::new(100.0, 4.0, 0.0, 2, Envelope::Flat, 0.5, 16000.0);
        let s = synthesize(&fast).unwrap();
        assert!(s.warnings.iter().any(|w| w.contains("source")));
        let sharp = SourceFilterSpec::new(
            400.0,
            0.0,
            0.0,
            6,
            Envelope::LogGaussian {
                center_hz: 400.0,
                width_octaves: 0.1,
            },
            0.1,
            16000.0,
        );
        assert!(synthesize(&sharp).unwrap().warnings.iter().any(|w| w.contains("envelope")));
    }

    #[test]
    fn descending_ridge_slope() {
        let fs = 16000.0;
        let spec = SourceFilterSpec::new(400.0, -1.0, 0.0, 1, Envelope::Flat, 2.0, fs);
        let x = synthesize(&spec).unwrap().samples;
        let fb = build_order1(16, 8, fft::next_pow2(2 * x.len()), fs).unwrap();
        let sc = cqt(&x, fs, &fb, 128).unwrap();
        // ridge: argmax channel per frame, in octaves
        let (lo, hi) = (sc.frames() / 8, 7 * sc.frames() / 8);
        let pts: Vec<(f64, f64)> = (lo..hi)
            .map(|n| {
                let row = sc.values.row(n);
                let k = (0..row.len()).max_by(|a, b| row[*a].total_cmp(&row[*b])).unwrap();
                (n as f64 / sc.frame_rate, sc.lambda1_centers[k].log2())
            })
            .collect();
        let m = pts.len() as f64;
        let (mt, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / m,
            pts.iter().map(|p| p.1).sum::<f64>() / m,
        );
        let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn segments_are_continuous() {
        let segs = [
            Segment {
                duration: 0.5,
                source_velocity: -1.0,
                filter_velocity: -1.0,
            },
            Segment {
                duration: 0.5,
                source_velocity: 1.0,
                filter_velocity: 1.0,
            },
        ];
        let s = synthesize_segments(300.0, &segs, 1, &Envelope::Flat, 16000.0, 16).unwrap();
        assert_eq!(s.samples.len(), 16000);
        let jumps: f64 = s.samples.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        // max step of a <= 300 Hz unit sinusoid at 16 kHz
        assert!(jumps < 2.0 * PI * 300.0 / 16000.0 * 1.01);
    }

    #[test]
    fn sample_rate_covariance() {
        let fs = 8000.0;
        let env = Envelope::LogGaussian {
            center_hz: 500.0,
            width_octaves: 1.0,
        };
        let base = synthesize(&SourceFilterSpec::new(220.0, 0.5, 0.2, 4, env, 0.5, fs))
            .unwrap()
            .samples;
        let high = synthesize(&SourceFilterSpec::new(220.0, 0.5, 0.2, 4, env, 0.5, 2.0 * fs))
            .unwrap()
            .samples;
        // ideal low-pass at the base Nyquist, then keep every other sample
        let mut spec: Vec<Complex64> = high.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft::forward(&mut spec);
        let freqs = fft::fftfreq(spec.len(), 2.0 * fs);
        for (s, f) in spec.iter_mut().zip(freqs) {
            if f.abs() >= 0.5 * fs {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        fft::inverse(&mut spec);
        let dec: Vec<f64> = spec.iter().step_by(2).map(|v| v.re).collect();
        let n = base.len();
        let (a, b) = (n / 10, 9 * n / 10);
        let err: f64 = (a..b).map(|i| (dec[i] - base[i]).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = (a..b).map(|i| base[i].powi(2)).sum::<f64>().sqrt();
        assert!(err / norm < 1e-3, "{}", err / norm);
    }

    #[test]
    fn combs() {
        let x = harmonic_comb(100.0, 1, 0.01, 8000.0).unwrap();
        assert_eq!(x.len(), 80);
        for (i, v) in x.iter().enumerate() {
            assert!((v - (2.0 * PI * 100.0 * i as f64 / 8000.0).cos()).abs() < 1e-12);
        }
        assert!(harmonic_comb(1000.0, 4, 0.1, 8000.0).is_err());
        assert_eq!(partials_below(100.0, 0.0, 750.0), 7);
        assert!(partials_below(100.0, 0.02, 750.0) < 7);
    }

    #[test]
    fn comb_energy_sits_on_its_partials() {
        let fs = 16000.0;
        let fb = build_order1(16, 8, 1 << 15, fs).unwrap();
        let f0 = 200.0;
        let x = harmonic_comb(f0, 6, 1.0, fs).unwrap();
        let sc = cqt(&x, fs, &fb, 64).unwrap();
        let energy: Vec<f64> = (0..fb.len())
            .map(|i| sc.values.column(i).iter().map(|v| v * v).sum())
            .collect();
        let total: f64 = energy.iter().sum();
        let mut on = 0.0;
        for p in 1..=6 {
            let f = p as f64 * f0;
            let k = (0..fb.len())
                .min_by(|a, b| {
                    (fb.centers[*a] / f).log2().abs().total_cmp(&(fb.centers[*b] / f).log2().abs())
                })
                .unwrap();
            for j in k.saturating_sub(1)..=(k + 1).min(fb.len() - 1) {
                on += energy[j];
            }
        }
        assert!(on / total >= 0.9, "{}", on / total);
    }
}
