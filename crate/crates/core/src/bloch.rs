//! Floquet-Bloch eigenvalue problems for `H = -d^2/dx^2 + V(x)` on the unit
//! lattice: plane-wave Galerkin truncation over modes `-M..M`, full Hermitian
//! diagonalization per quasimomentum, dispersion bands and Bloch waves.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::Float;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::PeriodicPotential;
use crate::scalar::Real;

/// Matrix of `H(k)` in the pseudoperiodic plane-wave basis
/// `e^{i(k + 2*pi*m)x}`, `m = -M..M`.
pub struct HillMatrix<T: Real> {
    k: T,
    truncation: usize,
    matrix: DMatrix<Complex<T>>,
}

/// Normalized Bloch wave `Phi(x,k) = e^{ikx} sum_m c_m e^{2*pi*i*m*x}` with
/// its eigenvalue; coefficients are indexed by `m + M`.
#[derive(Clone, Debug)]
pub struct BlochWave<T> {
    pub k: T,
    pub eigenvalue: T,
    pub coeffs: Vec<Complex<T>>,
}

/// Dispersion bands sampled over a quasimomentum grid, sorted per k.
pub struct BandStructure<T: Real> {
    k_grid: Vec<T>,
    bands: Vec<Vec<T>>,
    waves: Option<Vec<Vec<BlochWave<T>>>>,
}

/// Plane-wave frequency of mode `m` at quasimomentum `k`.
#[inline]
pub fn mode_frequency<T: Real>(k: T, m: i64) -> T {
    k + T::TAU() * T::of(m as f64)
}

impl<T: Real> HillMatrix<T> {
    #[inline]
    pub fn k(&self) -> T {
        self.k
    }

    #[inline]
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.truncation + 1
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    /// Applies `H(k)` to a coefficient vector (used by resolvent checks).
    pub fn apply(&self, coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.dim();
        assert_eq!(coeffs.len(), n);
        let mut out = vec![Complex::default(); n];
        for i in 0..n {
            let mut acc = Complex::default();
            for j in 0..n {
                acc += self.matrix[(i, j)] * coeffs[j];
            }
            out[i] = acc;
        }
        out
    }
}

/// Assembles `H(k)` at truncation `M`: diagonal `(k + 2*pi*m)^2`, off-diagonal
/// `V_|m-m'|/2` (cosine convention).
pub fn assemble_hill_matrix<T: Real + RealField>(
    pot: &PeriodicPotential<T>,
    k: T,
    m_trunc: usize,
) -> Result<HillMatrix<T>> {
    if k < T::zero() || k > T::TAU() {
        return Err(Error::invalid("quasimomentum must lie in [0, 2*pi]"));
    }
    if (m_trunc as u64) < u64::from(pot.max_mode()) {
        return Err(Error::Truncation {
            m: m_trunc,
            mode: pot.max_mode(),
        });
    }
    let n = 2 * m_trunc + 1;
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let m = i as i64 - m_trunc as i64;
        let mp = j as i64 - m_trunc as i64;
        if i == j {
            let w = mode_frequency(k, m);
            Complex::new(w * w, T::zero())
        } else {
            Complex::new(pot.half_coefficient(m - mp), T::zero())
        }
    });
    Ok(HillMatrix {
        k,
        truncation: m_trunc,
        matrix,
    })
}

/// Full Hermitian eigensolve of `H(k)`, eigenpairs sorted ascending.
pub fn eigensolve<T: Real + RealField>(
    pot: &PeriodicPotential<T>,
    k: T,
    m_trunc: usize,
) -> Result<Vec<BlochWave<T>>> {
    let hill = assemble_hill_matrix(pot, k, m_trunc)?;
    let n = hill.dim();
    let eig = nalgebra::SymmetricEigen::try_new(hill.matrix.clone(), T::default_epsilon(), 50_000)
        .ok_or_else(|| {
            Error::NumericalFailure(format!("eigensolver failed to converge at k = {k}"))
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("non-finite eigenvalue")
    });
    Ok(order
        .into_iter()
        .map(|idx| {
            let col = eig.eigenvectors.column(idx);
            let coeffs: Vec<Complex<T>> = col.iter().copied().collect();
            BlochWave {
                k,
                eigenvalue: eig.eigenvalues[idx],
                coeffs,
            }
        })
        .collect())
}

/// Solves the band problem over a quasimomentum grid.
pub fn solve_bands<T: Real + RealField>(
    pot: &PeriodicPotential<T>,
    k_grid: &[T],
    n_bands: usize,
    m_trunc: usize,
    keep_waves: bool,
) -> Result<BandStructure<T>> {
    if k_grid.is_empty() {
        return Err(Error::invalid("empty quasimomentum grid"));
    }
    if !k_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid(
            "quasimomentum grid must be strictly increasing",
        ));
    }
    if n_bands == 0 || n_bands > 2 * m_trunc + 1 {
        return Err(Error::invalid(format!(
            "n_bands must lie in 1..={}, got {n_bands}",
            2 * m_trunc + 1
        )));
    }
    let solved: Result<Vec<Vec<BlochWave<T>>>> = k_grid
        .par_iter()
        .map(|&k| {
            let mut waves = eigensolve(pot, k, m_trunc)?;
            waves.truncate(n_bands);
            Ok(waves)
        })
        .collect();
    let solved = solved?;
    let bands = solved
        .iter()
        .map(|ws| ws.iter().map(|w| w.eigenvalue).collect())
        .collect();
    Ok(BandStructure {
        k_grid: k_grid.to_vec(),
        bands,
        waves: keep_waves.then_some(solved),
    })
}

impl<T: Real> BlochWave<T> {
    #[inline]
    pub fn truncation(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// `e^{ikx} sum_m c_m e^{2*pi*i*m*x}` at each sample.
    pub fn eval(&self, xs: &[T]) -> Vec<Complex<T>> {
        let m_trunc = self.truncation() as i64;
        xs.iter()
            .map(|&x| {
                let mut acc = Complex::default();
                for (i, c) in self.coeffs.iter().enumerate() {
                    let m = i as i64 - m_trunc;
                    let phase = mode_frequency(self.k, m) * x;
                    acc += c * Complex::from_polar(T::one(), phase);
                }
                acc
            })
            .collect()
    }

    /// Coefficients of `d/dx Phi`: multiply by `i*(k + 2*pi*m)`.
    pub fn derivative_coeffs(&self) -> Vec<Complex<T>> {
        let m_trunc = self.truncation() as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex::new(T::zero(), mode_frequency(self.k, i as i64 - m_trunc)))
            .collect()
    }

    /// `sum_m (k + 2*pi*m) |c_m|^2`, the band slope divided by two.
    pub fn frequency_moment(&self) -> T {
        let m_trunc = self.truncation() as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| mode_frequency(self.k, i as i64 - m_trunc) * c.norm_sqr())
            .sum()
    }

    /// `L^2([0,1])` norm from the coefficients (1 for normalized waves).
    pub fn cell_norm(&self) -> T {
        Float::sqrt(self.coeffs.iter().map(|c| c.norm_sqr()).sum())
    }
}

impl<T: Real> BandStructure<T> {
    #[inline]
    pub fn k_grid(&self) -> &[T] {
        &self.k_grid
    }

    #[inline]
    pub fn n_bands(&self) -> usize {
        self.bands.first().map_or(0, Vec::len)
    }

    /// Band `n` (1-based) at grid index `idx`.
    #[inline]
    pub fn band(&self, n: usize, idx: usize) -> T {
        self.bands[idx][n - 1]
    }

    pub fn bands_at(&self, idx: usize) -> &[T] {
        &self.bands[idx]
    }

    pub fn waves(&self) -> Option<&Vec<Vec<BlochWave<T>>>> {
        self.waves.as_ref()
    }

    fn grid_index_of(&self, k: T) -> Result<usize> {
        let tol = T::of(1e-11);
        self.k_grid
            .iter()
            .position(|&kj| Float::abs(kj - k) <= tol)
            .ok_or_else(|| Error::DomainError(format!("k = {k} is not a grid point")))
    }
}

/// Centered finite-difference band slope `d mu_n / dk` at a grid point `k`,
/// Richardson-extrapolated over the one- and two-cell stencils. The 5-point
/// stencil must stay on one side of the non-smooth point k = pi.
pub fn band_derivative<T: Real>(bs: &BandStructure<T>, n: usize, k: T) -> Result<T> {
    if n == 0 || n > bs.n_bands() {
        return Err(Error::invalid(format!("band index {n} out of range")));
    }
    let j = bs.grid_index_of(k)?;
    if j < 2 || j + 2 >= bs.k_grid.len() {
        return Err(Error::DomainError(
            "band_derivative needs two grid neighbors on each side".into(),
        ));
    }
    let h = bs.k_grid[j + 1] - bs.k_grid[j];
    for w in bs.k_grid[j - 2..=j + 2].windows(2) {
        if Float::abs((w[1] - w[0]) - h) > T::of(1e-10) {
            return Err(Error::DomainError(
                "band_derivative needs uniform grid spacing".into(),
            ));
        }
    }
    let pi = T::PI();
    let lo = bs.k_grid[j - 2];
    let hi = bs.k_grid[j + 2];
    if (lo - pi) * (hi - pi) < T::zero() || Float::abs(k - pi) < h / T::of(2.0) {
        return Err(Error::DomainError(
            "band slope stencil would straddle the Dirac point k = pi".into(),
        ));
    }
    let two = T::of(2.0);
    let d_h = (bs.band(n, j + 1) - bs.band(n, j - 1)) / (two * h);
    let d_2h = (bs.band(n, j + 2) - bs.band(n, j - 2)) / (two * two * h);
    Ok((T::of(4.0) * d_h - d_2h) / T::of(3.0))
}
