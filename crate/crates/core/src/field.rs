use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::scalar::Real;
use crate::spectral::FftCache;

/// Regularity exponent `s >= 0` of the scaled Sobolev norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevIndex<T>(T);

impl<T: Real> SobolevIndex<T> {
    pub fn new(s: T) -> Result<Self> {
        if s < T::zero() || !s.is_finite() {
            return Err(Error::invalid("Sobolev index must satisfy s >= 0"));
        }
        Ok(Self(s))
    }

    pub fn one() -> Self {
        Self(T::one())
    }

    #[inline]
    pub fn value(&self) -> T {
        self.0
    }
}

/// Complex field sampled on a periodic grid, carrying the semiclassical
/// scale `epsilon` of its `H^s_eps` norm.
#[derive(Clone, Debug)]
pub struct WaveField<T> {
    grid: TorusGrid<T>,
    values: Vec<Complex<T>>,
    epsilon: T,
}

impl<T: Real> WaveField<T> {
    pub fn new(grid: TorusGrid<T>, values: Vec<Complex<T>>, epsilon: T) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid(format!(
                "field has {} samples for a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        if !(epsilon > T::zero() && epsilon <= T::one()) {
            return Err(Error::invalid("epsilon must lie in (0, 1]"));
        }
        Ok(Self {
            grid,
            values,
            epsilon,
        })
    }

    pub fn from_fn(grid: TorusGrid<T>, epsilon: T, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let values = grid.xs().map(f).collect();
        Self::new(grid, values, epsilon)
    }

    pub fn zero(grid: TorusGrid<T>, epsilon: T) -> Result<Self> {
        Self::new(grid, vec![Complex::default(); grid.n()], epsilon)
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    #[inline]
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Quadrature `L^2` norm of the samples.
    pub fn l2_norm(&self) -> T {
        let sum: T = self.values.iter().map(|v| v.norm_sqr()).sum();
        Float::sqrt(sum * self.grid.dx())
    }

    pub fn linf_norm(&self) -> T {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Scaled Sobolev norm: discrete form of
    /// `( \int (1 + |eps*xi|^2)^s |f_hat(xi)|^2 dxi )^{1/2}` with the
    /// continuum Fourier convention mapped to the DFT via the quadrature
    /// factor `d_xi = 2*pi/L`, so that `s = 0` reproduces the `L^2` norm.
    pub fn hs_eps_norm(&self, s: SobolevIndex<T>) -> T {
        let mut cache = FftCache::new(self.grid.n());
        self.hs_eps_norm_cached(s, &mut cache)
    }

    pub fn hs_eps_norm_cached(&self, s: SobolevIndex<T>, cache: &mut FftCache<T>) -> T {
        let mut buf = self.values.clone();
        cache.forward(&mut buf);
        let s = s.value();
        let eps2 = self.epsilon * self.epsilon;
        let mut sum = T::zero();
        for (j, v) in buf.iter().enumerate() {
            let xi = self.grid.freq(j);
            let w = if s == T::zero() {
                T::one()
            } else {
                Float::powf(T::one() + eps2 * xi * xi, s)
            };
            sum += w * v.norm_sqr();
        }
        let dx = self.grid.dx();
        Float::sqrt(sum * dx * dx / self.grid.len_t())
    }

    /// Gagliardo-Nirenberg diagnostic `||f||_Linf * eps^{1/2} / ||f||_{H^s_eps}`,
    /// bounded uniformly in `eps` for `s > 1/2`.
    pub fn gn_ratio(&self, s: SobolevIndex<T>) -> Result<T> {
        if s.value() <= T::of(0.5) {
            return Err(Error::invalid("gn_ratio requires s > 1/2"));
        }
        let hs = self.hs_eps_norm(s);
        if hs == T::zero() {
            return Err(Error::invalid("gn_ratio of an identically zero field"));
        }
        Ok(self.linf_norm() * Float::sqrt(self.epsilon) / hs)
    }
}

impl<T: Real> std::ops::Sub for &WaveField<T> {
    type Output = WaveField<T>;

    fn sub(self, rhs: &WaveField<T>) -> WaveField<T> {
        assert_eq!(
            self.grid, rhs.grid,
            "field difference requires matching grids"
        );
        assert!(
            self.epsilon == rhs.epsilon,
            "field difference requires matching epsilon"
        );
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a - b)
            .collect();
        WaveField {
            grid: self.grid,
            values,
            epsilon: self.epsilon,
        }
    }
}
