//! Thin wrapper around rustfft plus the handful of spectral primitives the
//! solvers share (derivatives, zero-padded interpolation).

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::TorusGrid;
use crate::scalar::Real;

/// Planned forward/inverse FFT pair of a fixed size with reusable scratch.
pub struct FftCache<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> FftCache<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform scaled by `1/N`, so `inverse(forward(x)) == x`.
    pub fn inverse(&mut self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process_with_scratch(buf, &mut self.scratch);
        let scale = T::one() / T::from_usize_(self.n);
        for v in buf.iter_mut() {
            *v = v.scale(scale);
        }
    }
}

/// Spectral derivative of periodic samples: multiply by `i*xi_j` in Fourier.
pub fn derivative<T: Real>(
    grid: &TorusGrid<T>,
    values: &[Complex<T>],
    cache: &mut FftCache<T>,
) -> Vec<Complex<T>> {
    let mut buf = values.to_vec();
    cache.forward(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= Complex::new(T::zero(), grid.freq(j));
    }
    cache.inverse(&mut buf);
    buf
}

/// Second spectral derivative: multiply by `-xi_j^2`.
pub fn second_derivative<T: Real>(
    grid: &TorusGrid<T>,
    values: &[Complex<T>],
    cache: &mut FftCache<T>,
) -> Vec<Complex<T>> {
    let mut buf = values.to_vec();
    cache.forward(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        let xi = grid.freq(j);
        *v = v.scale(-xi * xi);
    }
    cache.inverse(&mut buf);
    buf
}

/// Trigonometric interpolation from `n_from` to `n_to >= n_from` samples by
/// zero padding the spectrum. Exact for band-limited data; the Nyquist bin is
/// split symmetrically.
pub fn upsample<T: Real>(
    values: &[Complex<T>],
    n_to: usize,
    from: &mut FftCache<T>,
    to: &mut FftCache<T>,
) -> Vec<Complex<T>> {
    let n_from = values.len();
    assert!(n_to >= n_from && from.n() == n_from && to.n() == n_to);
    if n_to == n_from {
        return values.to_vec();
    }
    let mut spec = values.to_vec();
    from.forward(&mut spec);
    let mut out = vec![Complex::default(); n_to];
    let h = n_from / 2;
    out[..h].copy_from_slice(&spec[..h]);
    out[n_to - h + 1..].copy_from_slice(&spec[h + 1..]);
    let half = Complex::new(T::of(0.5), T::zero());
    out[h] = spec[h] * half;
    out[n_to - h] = spec[h] * half;
    let scale = T::from_usize_(n_to) / T::from_usize_(n_from);
    to.inverse(&mut out);
    for v in out.iter_mut() {
        *v = v.scale(scale);
    }
    out
}
