use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform periodic grid on a torus of integer length `L`, with `N` a power
/// of two. Points are `x_i = i*dx - L/2`; frequencies are `2*pi*j/L` over the
/// symmetric integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid<T> {
    length: u32,
    points: usize,
    _scalar: PhantomData<fn() -> T>,
}

impl<T: Real> TorusGrid<T> {
    pub fn new(length: u32, points: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("torus length must be a positive integer"));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::invalid(format!(
                "grid points must be a power of two >= 2, got {points}"
            )));
        }
        Ok(Self {
            length,
            points,
            _scalar: PhantomData,
        })
    }

    #[inline]
    pub fn length(&self) -> u32 {
        self.length
    }

    #[inline]
    pub fn len_t(&self) -> T {
        T::of(f64::from(self.length))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.len_t() / T::from_usize_(self.points)
    }

    /// Grid point `x_i = i*dx - L/2`.
    #[inline]
    pub fn x(&self, i: usize) -> T {
        T::from_usize_(i) * self.dx() - self.len_t() / T::of(2.0)
    }

    pub fn xs(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.points).map(move |i| self.x(i))
    }

    /// Signed FFT index: `j` for `j < N/2`, `j - N` otherwise.
    #[inline]
    pub fn signed_index(&self, j: usize) -> i64 {
        if j < self.points / 2 {
            j as i64
        } else {
            j as i64 - self.points as i64
        }
    }

    /// Angular frequency of FFT bin `j`: `xi_j = 2*pi*signed(j)/L`.
    #[inline]
    pub fn freq(&self, j: usize) -> T {
        T::TAU() * T::of(self.signed_index(j) as f64) / self.len_t()
    }

    pub fn freqs(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.points).map(move |j| self.freq(j))
    }

    /// Frequency quadrature weight `d_xi = 2*pi/L`.
    #[inline]
    pub fn d_xi(&self) -> T {
        T::TAU() / self.len_t()
    }
}
