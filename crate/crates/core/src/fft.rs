//! Thin helpers over rustfft: cached planners, frequency grids, axis transforms.

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Forward DFT in place (no scaling).
pub fn forward(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// Inverse DFT in place, scaled by 1/n so that `inverse(forward(x)) == x`.
pub fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    if n > 1 {
        plan(n, true).process(buf);
    }
    let s = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// DFT bin frequencies, numpy `fftfreq` ordering, for `n` samples taken `rate` per unit.
pub fn fftfreq(n: usize, rate: f64) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) {
                k as f64
            } else {
                k as f64 - nf
            };
            k * rate / nf
        })
        .collect()
}

/// Transform every lane of `a` along `axis`.
pub fn along_axis(a: &mut Array2<Complex64>, axis: usize, inv: bool) {
    let n = a.len_of(Axis(axis));
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for mut lane in a.lanes_mut(Axis(axis)) {
        for (s, v) in scratch.iter_mut().zip(lane.iter()) {
            *s = *v;
        }
        if inv {
            inverse(&mut scratch);
        } else {
            forward(&mut scratch);
        }
        for (v, s) in lane.iter_mut().zip(scratch.iter()) {
            *v = *s;
        }
    }
}

/// Smallest power of two that is `>= n` (and at least 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
