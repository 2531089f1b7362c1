//! Dirac point at k = pi: detection of the folded band degeneracy,
//! symmetry-adapted gauge fixing of the Bloch pair, and the effective
//! coefficients c_sharp, beta_1, beta_2.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::bloch::{eigensolve, BandStructure, BlochWave};
use crate::error::{Error, Result};
use crate::potential::PeriodicPotential;
use crate::scalar::Real;

/// Absolute degeneracy tolerance (energy units) for the folded pair at k = pi.
pub const TOL_DEG: f64 = 1e-8;

/// Offsets used by the crossing-expansion probe.
pub const DEFAULT_SLOPE_OFFSETS: [f64; 3] = [1e-2, 3e-3, 1e-3];

/// Full eigensystem of `H(pi)` together with the detected degenerate pair.
pub struct PiEigensystem<T> {
    /// All eigenvalues, ascending.
    pub mu: Vec<T>,
    /// Matching coefficient vectors.
    pub coeffs: Vec<Vec<Complex<T>>>,
    /// Lower band index of the degenerate pair (1-based).
    pub n_star: usize,
    pub mu_star: T,
    pub gap: T,
}

/// Empirical record of the linear crossing law near k = pi (right side).
#[derive(Clone, Debug)]
pub struct SlopeCheck<T> {
    pub offsets: Vec<T>,
    /// `(mu_-(pi+dk) - mu*)/(-c_sharp*dk) - 1`, the empirical eta_-.
    pub r_minus: Vec<T>,
    /// `(mu_+(pi+dk) - mu*)/(+c_sharp*dk) - 1`, the empirical eta_+.
    pub r_plus: Vec<T>,
    /// `|slope(mu_-)(pi+dk)/(-c_sharp) - 1|` from Richardson finite differences.
    pub slope_minus_residual: Vec<T>,
    /// `|slope(mu_+)(pi+dk)/(+c_sharp) - 1|`.
    pub slope_plus_residual: Vec<T>,
    /// Offsets skipped because they were too close to zero.
    pub skipped: usize,
}

/// The effective coefficient set at the Dirac point (k* = pi).
#[derive(Clone, Debug)]
pub struct DiracPointData<T> {
    pub k_star: T,
    pub mu_star: T,
    /// Lower band index of the crossing (1-based).
    pub n_star: usize,
    pub phi_minus: BlochWave<T>,
    pub phi_plus: BlochWave<T>,
    /// `2i <dPhi_-/dx, Phi_->_{L^2([0,1])}`, relabeled so it is positive.
    pub c_sharp: T,
    pub beta1: T,
    pub beta2: T,
    pub gap: T,
    pub slope_check: SlopeCheck<T>,
}

/// Flat `f64` view of the Dirac data for JSON emission.
#[derive(Serialize, Deserialize, Debug)]
pub struct DiracSummary {
    pub mu_star: f64,
    pub n_star: usize,
    pub c_sharp: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gap: f64,
    pub slope_residuals: SlopeResiduals,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct SlopeResiduals {
    pub offsets: Vec<f64>,
    pub r_minus: Vec<f64>,
    pub r_plus: Vec<f64>,
    pub slope_minus: Vec<f64>,
    pub slope_plus: Vec<f64>,
}

/// Parity action `f(x) -> f(-x)` on k = pi coefficient vectors:
/// `c_m -> c_{-m-1}` (the mode falling outside the truncation is dropped;
/// its coefficient is below roundoff for converged eigenvectors).
pub fn parity_coeffs<T: Real>(c: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = c.len();
    (0..n)
        .map(|i| {
            if i + 1 < n {
                c[n - 2 - i]
            } else {
                Complex::default()
            }
        })
        .collect()
}

fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Finds the folded degeneracy at k = pi. The candidate pair is
/// `(n_hint, n_hint + 1)` or the first pair `(1, 2)`: for even-mode
/// potentials every folded pair is exactly degenerate so the lowest is always
/// n* = 1, while scanning higher pairs would mistake the super-exponentially
/// small avoided crossings of gap-opened potentials for degeneracies.
pub fn detect_dirac<T: Real + RealField>(
    pot: &PeriodicPotential<T>,
    m_trunc: usize,
    n_hint: Option<usize>,
) -> Result<PiEigensystem<T>> {
    let waves = eigensolve(pot, T::PI(), m_trunc)?;
    let dim = waves.len();
    let n = n_hint.unwrap_or(1);
    if n < 1 || n + 1 > dim {
        return Err(Error::invalid(format!(
            "band hint {n} out of range 1..{}",
            dim - 1
        )));
    }
    let tol = T::of(TOL_DEG);
    let gap = waves[n].eigenvalue - waves[n - 1].eigenvalue;
    if gap > tol {
        return Err(Error::GapOpen {
            gap: gap.to_f64_(),
            tol: TOL_DEG,
        });
    }
    let mu_star = (waves[n - 1].eigenvalue + waves[n].eigenvalue) / T::of(2.0);
    // A third collapsing eigenvalue is impossible for the 1-D problem.
    let below = n >= 2 && waves[n - 1].eigenvalue - waves[n - 2].eigenvalue <= tol;
    let above = n + 1 < dim && waves[n + 1].eigenvalue - waves[n].eigenvalue <= tol;
    if below || above {
        return Err(Error::ExtraDegeneracy {
            mu: mu_star.to_f64_(),
            detail: format!(
                "a third eigenvalue collapses onto the pair ({n}, {})",
                n + 1
            ),
        });
    }
    let (mu, coeffs) = waves.into_iter().map(|w| (w.eigenvalue, w.coeffs)).unzip();
    Ok(PiEigensystem {
        mu,
        coeffs,
        n_star: n,
        mu_star,
        gap,
    })
}

/// Builds the symmetry-adapted pair from an orthonormal basis of the
/// degenerate eigenspace: diagonalize the parity map into even/odd vectors,
/// rotate each phase so its coefficients are real (equivalently
/// `conj(p(-x)) = p(x)`), and combine into `Phi_∓ = (p_e ± p_o)/sqrt(2)`,
/// which satisfies `Phi_+(x) = Phi_-(-x)` and `conj(Phi_∓) = Phi_±`.
pub fn gauge_fix_pair<T: Real>(
    basis: [&[Complex<T>]; 2],
    mu_star: T,
) -> Result<(BlochWave<T>, BlochWave<T>)> {
    let [v0, v1] = basis;
    if v0.len() != v1.len() || v0.len() % 2 == 0 {
        return Err(Error::invalid(
            "eigenspace basis must be two vectors of odd length 2M+1",
        ));
    }
    let tol = T::of(1e-8);
    if Float::abs(inner(v0, v0).re - T::one()) > tol
        || Float::abs(inner(v1, v1).re - T::one()) > tol
        || inner(v0, v1).norm() > tol
    {
        return Err(Error::invalid("eigenspace basis is not orthonormal"));
    }

    let pv0 = parity_coeffs(v0);
    let pv1 = parity_coeffs(v1);
    // Parity restricted to the eigenspace: p[i][j] = <P v_j, v_i>.
    let p = [
        [inner(&pv0, v0), inner(&pv1, v0)],
        [inner(&pv0, v1), inner(&pv1, v1)],
    ];

    // P must act within the eigenspace and square to the identity.
    for (pv, j) in [(&pv0, 0), (&pv1, 1)] {
        let defect: T = pv
            .iter()
            .enumerate()
            .map(|(m, c)| (c - (p[0][j] * v0[m] + p[1][j] * v1[m])).norm_sqr())
            .sum();
        if Float::sqrt(defect) > tol {
            return Err(Error::SymmetryViolation(
                "parity does not preserve the degenerate eigenspace".into(),
            ));
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            let sq = p[i][0] * p[0][j] + p[i][1] * p[1][j];
            let expect = if i == j { T::one() } else { T::zero() };
            if (sq - expect).norm() > tol {
                return Err(Error::SymmetryViolation(
                    "parity restricted to the eigenspace is not an involution".into(),
                ));
            }
        }
    }

    // Hermitian 2x2 eigensplit; the parity eigenvalues must be +1 and -1.
    let a = p[0][0].re;
    let d = p[1][1].re;
    let b = p[0][1];
    let half = T::of(0.5);
    let disc = Float::sqrt((a - d) * (a - d) * T::of(0.25) + b.norm_sqr());
    let lam_plus = (a + d) * half + disc;
    let lam_minus = (a + d) * half - disc;
    if Float::abs(lam_plus - T::one()) > T::of(1e-6)
        || Float::abs(lam_minus + T::one()) > T::of(1e-6)
    {
        return Err(Error::SymmetryViolation(format!(
            "parity eigenvalues ({:.3e}, {:.3e}) are not +1/-1",
            lam_plus.to_f64_(),
            lam_minus.to_f64_()
        )));
    }
    let combine = |u0: Complex<T>, u1: Complex<T>| -> Vec<Complex<T>> {
        let norm = Float::sqrt(u0.norm_sqr() + u1.norm_sqr());
        v0.iter()
            .zip(v1)
            .map(|(x, y)| (x * u0 + y * u1).unscale(norm))
            .collect()
    };
    let eigvec = |lam: T| -> Vec<Complex<T>> {
        if b.norm() > T::of(1e-14) {
            combine(b, Complex::new(lam - a, T::zero()))
        } else if Float::abs(a - lam) < Float::abs(d - lam) {
            combine(Complex::new(T::one(), T::zero()), Complex::default())
        } else {
            combine(Complex::default(), Complex::new(T::one(), T::zero()))
        }
    };
    let mut p_even = eigvec(lam_plus);
    let mut p_odd = eigvec(lam_minus);

    // Phase-fix so conj(p(-x)) = p(x): coefficients become real.
    for p in [&mut p_even, &mut p_odd] {
        let i0 = (0..p.len())
            .max_by(|&i, &j| p[i].norm().partial_cmp(&p[j].norm()).unwrap())
            .unwrap();
        let rot = Complex::from_polar(T::one(), -p[i0].arg());
        let mut imag_max = T::zero();
        for c in p.iter_mut() {
            *c *= rot;
            imag_max = Float::max(imag_max, Float::abs(c.im));
        }
        if imag_max > tol {
            return Err(Error::GaugeError(format!(
                "parity eigenvector is not real up to a phase (residual {:.3e})",
                imag_max.to_f64_()
            )));
        }
    }

    let sqrt_half = Float::sqrt(half);
    let minus: Vec<Complex<T>> = p_even
        .iter()
        .zip(&p_odd)
        .map(|(e, o)| (e + o).scale(sqrt_half))
        .collect();
    let plus: Vec<Complex<T>> = p_even
        .iter()
        .zip(&p_odd)
        .map(|(e, o)| (e - o).scale(sqrt_half))
        .collect();
    let pi = T::PI();
    Ok((
        BlochWave {
            k: pi,
            eigenvalue: mu_star,
            coeffs: minus,
        },
        BlochWave {
            k: pi,
            eigenvalue: mu_star,
            coeffs: plus,
        },
    ))
}

/// `c_sharp = 2i <dPhi_-/dx, Phi_-> = -2 sum_m (pi + 2*pi*m)|c_m|^2`,
/// validated against the mirror expression `-2i <dPhi_+/dx, Phi_+>`.
/// The returned value may be negative; the pipeline relabels the pair so the
/// stored coefficient is positive.
pub fn compute_c_sharp<T: Real>(phi_minus: &BlochWave<T>, phi_plus: &BlochWave<T>) -> Result<T> {
    let c = -T::of(2.0) * phi_minus.frequency_moment();
    let mirror = T::of(2.0) * phi_plus.frequency_moment();
    let scale = Float::max(T::one(), Float::abs(c));
    if Float::abs(c - mirror) > T::of(1e-8) * scale {
        return Err(Error::GaugeError(format!(
            "mirror identity violated: c_sharp {:.6e} vs {:.6e}",
            c.to_f64_(),
            mirror.to_f64_()
        )));
    }
    Ok(c)
}

/// Coefficients of `|Phi|^2 = sum_q A_q e^{2*pi*i*q*y}`: `A_q = sum_m c_m conj(c_{m-q})`.
fn auto_correlation<T: Real>(c: &[Complex<T>]) -> Vec<Complex<T>> {
    cross_correlation(c, c)
}

/// Coefficients of `Phi_a conj(Phi_b)` (1-periodic): `C_q = sum_m a_m conj(b_{m-q})`,
/// `q = -2M..2M` indexed by `q + 2M`.
fn cross_correlation<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = a.len() as i64;
    let mm = (n - 1) / 2;
    (-2 * mm..=2 * mm)
        .map(|q| {
            let mut acc = Complex::default();
            for m in (-mm).max(-mm + q)..=mm.min(mm + q) {
                acc += a[(m + mm) as usize] * b[(m - q + mm) as usize].conj();
            }
            acc
        })
        .collect()
}

/// Coefficients of the periodic part of `Phi^2`: `B_q = sum_m c_m c_{q-m}`.
fn self_convolution<T: Real>(c: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = c.len() as i64;
    let mm = (n - 1) / 2;
    (-2 * mm..=2 * mm)
        .map(|q| {
            let mut acc = Complex::default();
            for m in (-mm).max(q - mm)..=mm.min(q + mm) {
                acc += c[(m + mm) as usize] * c[(q - m + mm) as usize];
            }
            acc
        })
        .collect()
}

/// `int_0^1` of the product of two 1-periodic coefficient sequences:
/// `sum_q A_q B_{-q}`.
fn zero_mode_of_product<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let n = a.len();
    (0..n).map(|i| a[i] * b[n - 1 - i]).sum()
}

/// `beta_1 = int |Phi_+|^2 |Phi_-|^2`, `beta_2 = int conj(Phi_+)^2 Phi_-^2`,
/// both evaluated exactly by Fourier convolution. `beta_2` must be real for a
/// correctly gauged pair; its real part is returned.
pub fn compute_betas<T: Real>(phi_minus: &BlochWave<T>, phi_plus: &BlochWave<T>) -> Result<(T, T)> {
    let beta1 = zero_mode_of_product(
        &auto_correlation(&phi_plus.coeffs),
        &auto_correlation(&phi_minus.coeffs),
    );
    let bp = self_convolution(&phi_plus.coeffs);
    let bm = self_convolution(&phi_minus.coeffs);
    let beta2: Complex<T> = bp.iter().zip(&bm).map(|(p, m)| p.conj() * m).sum();
    if Float::abs(beta2.im) > T::of(1e-8) {
        return Err(Error::GaugeError(format!(
            "Im(beta_2) = {:.3e} exceeds 1e-8",
            beta2.im.to_f64_()
        )));
    }
    if Float::abs(beta1.im) > T::of(1e-8) || beta1.re <= T::zero() {
        return Err(Error::GaugeError("beta_1 must be real and positive".into()));
    }
    Ok((beta1.re, beta2.re))
}

/// Max modulus of the four cubic integrals
/// `int |Phi_j|^2 Phi_j conj(Phi_j')` and `int |Phi_j|^2 Phi_j' conj(Phi_j)`
/// (j' = -j), all of which vanish by the Bloch-pair symmetries.
pub fn cubic_vanishing_residual<T: Real>(phi_minus: &BlochWave<T>, phi_plus: &BlochWave<T>) -> T {
    let mut worst = T::zero();
    for (cj, cjp) in [
        (&phi_minus.coeffs, &phi_plus.coeffs),
        (&phi_plus.coeffs, &phi_minus.coeffs),
    ] {
        let aj = auto_correlation(cj);
        let i1 = zero_mode_of_product(&aj, &cross_correlation(cj, cjp)).norm();
        let i2 = zero_mode_of_product(&aj, &cross_correlation(cjp, cj)).norm();
        worst = Float::max(worst, Float::max(i1, i2));
    }
    worst
}

/// Empirical check of the linear crossing law from tabulated bands:
/// `r_±(dk) = (mu_±(pi+dk) - mu*)/(±c_sharp*dk) - 1`. Offsets smaller than
/// 1e-12 are skipped. The band structure must contain the points `pi + dk`.
pub fn crossing_expansion_check<T: Real>(
    bs: &BandStructure<T>,
    dp: &DiracPointData<T>,
    offsets: &[T],
) -> Result<SlopeCheck<T>> {
    let mut out = SlopeCheck {
        offsets: Vec::new(),
        r_minus: Vec::new(),
        r_plus: Vec::new(),
        slope_minus_residual: Vec::new(),
        slope_plus_residual: Vec::new(),
        skipped: 0,
    };
    let pi = T::PI();
    for &dk in offsets {
        if Float::abs(dk) < T::of(1e-12) {
            out.skipped += 1;
            continue;
        }
        let k = pi + dk;
        let idx = bs
            .k_grid()
            .iter()
            .position(|&kj| Float::abs(kj - k) <= T::of(1e-11))
            .ok_or_else(|| {
                Error::DomainError(format!("band structure has no sample at k = {k}"))
            })?;
        let lower = bs.band(dp.n_star, idx);
        let upper = bs.band(dp.n_star + 1, idx);
        out.offsets.push(dk);
        out.r_minus
            .push((lower - dp.mu_star) / (-dp.c_sharp * dk) - T::one());
        out.r_plus
            .push((upper - dp.mu_star) / (dp.c_sharp * dk) - T::one());
    }
    Ok(out)
}

/// Richardson-extrapolated one-sided band slopes at `pi + dk` by direct
/// eigensolves (stencil `dk/2`, `dk/4`; all points stay right of pi).
fn slope_probe<T: Real + RealField>(
    pot: &PeriodicPotential<T>,
    m_trunc: usize,
    n_star: usize,
    mu_star: T,
    c_sharp: T,
    offsets: &[T],
) -> Result<SlopeCheck<T>> {
    let pi = T::PI();
    let mut out = SlopeCheck {
        offsets: Vec::new(),
        r_minus: Vec::new(),
        r_plus: Vec::new(),
        slope_minus_residual: Vec::new(),
        slope_plus_residual: Vec::new(),
        skipped: 0,
    };
    let pair_at = |k: T| -> Result<(T, T)> {
        let waves = eigensolve(pot, k, m_trunc)?;
        Ok((waves[n_star - 1].eigenvalue, waves[n_star].eigenvalue))
    };
    for &dk in offsets {
        if Float::abs(dk) < T::of(1e-12) {
            out.skipped += 1;
            continue;
        }
        let (lo, up) = pair_at(pi + dk)?;
        out.offsets.push(dk);
        out.r_minus
            .push((lo - mu_star) / (-c_sharp * dk) - T::one());
        out.r_plus.push((up - mu_star) / (c_sharp * dk) - T::one());

        let two = T::of(2.0);
        let slope = |h: T| -> Result<(T, T)> {
            let (lo_p, up_p) = pair_at(pi + dk + h)?;
            let (lo_m, up_m) = pair_at(pi + dk - h)?;
            Ok(((lo_p - lo_m) / (two * h), (up_p - up_m) / (two * h)))
        };
        let h = dk / two;
        let (dlo1, dup1) = slope(h)?;
        let (dlo2, dup2) = slope(h / two)?;
        let third = T::of(3.0);
        let dlo = (T::of(4.0) * dlo2 - dlo1) / third;
        let dup = (T::of(4.0) * dup2 - dup1) / third;
        out.slope_minus_residual
            .push(Float::abs(dlo / (-c_sharp) - T::one()));
        out.slope_plus_residual
            .push(Float::abs(dup / c_sharp - T::one()));
    }
    Ok(out)
}

/// Full Dirac-point pipeline: detection, gauge fixing, the c_sharp > 0
/// relabeling, effective coefficients, and the slope probe. Also returns the
/// eigensystem of `H(pi)` for downstream resolvent work.
pub fn dirac_point<T: Real + RealField>(
    pot: &PeriodicPotential<T>,
    m_trunc: usize,
    n_hint: Option<usize>,
) -> Result<(DiracPointData<T>, PiEigensystem<T>)> {
    let sys = detect_dirac(pot, m_trunc, n_hint)?;
    let n = sys.n_star;
    let (pm, pp) = gauge_fix_pair([&sys.coeffs[n - 1], &sys.coeffs[n]], sys.mu_star)?;
    let c = compute_c_sharp(&pm, &pp)?;
    let (phi_minus, phi_plus, c_sharp) = if c < T::zero() {
        (pp, pm, -c)
    } else {
        (pm, pp, c)
    };
    if c_sharp < T::of(1e-10) {
        return Err(Error::NumericalFailure(
            "c_sharp vanishes: band crossing is not of Dirac type".into(),
        ));
    }
    let (beta1, beta2) = compute_betas(&phi_minus, &phi_plus)?;
    let offsets: Vec<T> = DEFAULT_SLOPE_OFFSETS.iter().map(|&d| T::of(d)).collect();
    let slope_check = slope_probe(pot, m_trunc, n, sys.mu_star, c_sharp, &offsets)?;
    let dp = DiracPointData {
        k_star: T::PI(),
        mu_star: sys.mu_star,
        n_star: n,
        phi_minus,
        phi_plus,
        c_sharp,
        beta1,
        beta2,
        gap: sys.gap,
        slope_check,
    };
    Ok((dp, sys))
}

impl<T: Real> DiracPointData<T> {
    pub fn summary(&self) -> DiracSummary {
        let sc = &self.slope_check;
        DiracSummary {
            mu_star: self.mu_star.to_f64_(),
            n_star: self.n_star,
            c_sharp: self.c_sharp.to_f64_(),
            beta1: self.beta1.to_f64_(),
            beta2: self.beta2.to_f64_(),
            gap: self.gap.to_f64_(),
            slope_residuals: SlopeResiduals {
                offsets: sc.offsets.iter().map(|v| v.to_f64_()).collect(),
                r_minus: sc.r_minus.iter().map(|v| v.to_f64_()).collect(),
                r_plus: sc.r_plus.iter().map(|v| v.to_f64_()).collect(),
                slope_minus: sc
                    .slope_minus_residual
                    .iter()
                    .map(|v| v.to_f64_())
                    .collect(),
                slope_plus: sc.slope_plus_residual.iter().map(|v| v.to_f64_()).collect(),
            },
        }
    }
}
