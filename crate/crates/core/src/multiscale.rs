//! Two-scale machinery: the leading-order field `u_0 = alpha . Phi`, the
//! Fredholm corrector `u_1 = (H(pi) - mu*)^{-1} F` with
//! `F = (i d_t + 2 d_x d_y - kappa |u_0|^2) u_0`, assembly of the ansatz
//! `psi_a = e^{-i mu* t/eps} (u_0 + eps u_1)` on the eps-resolving grid, and
//! the residual `rho = i eps d_t psi_a - H_eps psi_a - eps kappa |psi_a|^2 psi_a`.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::Float;

use crate::dirac::{dirac_point, DiracPointData};
use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::grid::TorusGrid;
use crate::nld::{nld_rhs, NLDParams, NldStepper, SpinorField};
use crate::potential::PeriodicPotential;
use crate::scalar::Real;
use crate::spectral::{derivative, second_derivative, upsample, FftCache};

/// Tolerance of the per-point Fredholm guard in [`MultiscaleContext::build_u1`].
pub const SOLVABILITY_GUARD: f64 = 1e-6;

/// Dirac-point data plus the full eigendecomposition of `H(pi)` used by the
/// resolvent; built once per potential and shared across the eps sweep.
pub struct MultiscaleContext<T: Real> {
    pot: PeriodicPotential<T>,
    m_trunc: usize,
    dp: DiracPointData<T>,
    /// Eigenvalues of `H(pi)`, ascending.
    mu: Vec<T>,
    /// Matching eigenvector coefficient vectors.
    basis: Vec<Vec<Complex<T>>>,
    /// 0-based indices of the kernel pair inside `mu`/`basis`.
    kernel: [usize; 2],
}

/// Two-scale field: envelope spinor times the gauge-fixed Bloch pair, plus
/// the optional first-order corrector table (fast-variable Fourier
/// coefficients of `u_1(t, x, .)` per envelope point).
pub struct AnsatzBundle<T: Real> {
    pub spinor: SpinorField<T>,
    u1: Option<Vec<Vec<Complex<T>>>>,
    phi_minus: Vec<Complex<T>>,
    phi_plus: Vec<Complex<T>>,
    mu_star: T,
}

/// Kernel-projection residuals of the corrector equation.
pub struct SolvabilityReport<T> {
    /// `max_x max_j |<F(x,.), Phi_j>|`.
    pub max_abs: T,
    /// Per envelope point: `[ |<F,Phi_->|, |<F,Phi_+>| ]`.
    pub per_point: Vec<[T; 2]>,
}

impl<T: Real + RealField> MultiscaleContext<T> {
    pub fn new(pot: &PeriodicPotential<T>, m_trunc: usize, n_hint: Option<usize>) -> Result<Self> {
        let (dp, sys) = dirac_point(pot, m_trunc, n_hint)?;
        let kernel = [sys.n_star - 1, sys.n_star];
        // the 1-D problem caps the multiplicity at two; any further mode this
        // close to mu* would poison the resolvent
        for (n, &mu) in sys.mu.iter().enumerate() {
            if !kernel.contains(&n) && Float::abs(mu - sys.mu_star) < T::of(1e-8) {
                return Err(Error::ExtraDegeneracy {
                    mu: sys.mu_star.to_f64_(),
                    detail: format!("eigenvalue {n} lies within 1e-8 of mu*"),
                });
            }
        }
        Ok(Self {
            pot: pot.clone(),
            m_trunc,
            dp,
            mu: sys.mu,
            basis: sys.coeffs,
            kernel,
        })
    }

    #[inline]
    pub fn dp(&self) -> &DiracPointData<T> {
        &self.dp
    }

    #[inline]
    pub fn potential(&self) -> &PeriodicPotential<T> {
        &self.pot
    }

    #[inline]
    pub fn m_trunc(&self) -> usize {
        self.m_trunc
    }

    fn n_modes(&self) -> usize {
        2 * self.m_trunc + 1
    }

    /// Fast-variable coefficients of `F(x, .) = (i d_t + 2 d_x d_y -
    /// kappa |u_0|^2) u_0` per envelope point; `d_t alpha` is supplied by the
    /// caller (analytically from the NLD right side in normal use).
    pub fn forcing_coeffs(
        &self,
        spinor: &SpinorField<T>,
        dt_alpha: (&[Complex<T>], &[Complex<T>]),
        params: &NLDParams<T>,
    ) -> Vec<Vec<Complex<T>>> {
        let n_env = spinor.grid().n();
        let nm = self.n_modes();
        let mm = self.m_trunc as i64;
        let mut cache = FftCache::new(n_env);
        let dx_minus = derivative(spinor.grid(), spinor.minus(), &mut cache);
        let dx_plus = derivative(spinor.grid(), spinor.plus(), &mut cache);
        let cm = &self.dp.phi_minus.coeffs;
        let cp = &self.dp.phi_plus.coeffs;
        let i_unit = Complex::new(T::zero(), T::one());
        let omegas: Vec<T> = (0..nm)
            .map(|i| crate::bloch::mode_frequency(T::PI(), i as i64 - mm))
            .collect();
        let mut out = Vec::with_capacity(n_env);
        let mut u = vec![Complex::<T>::default(); nm];
        let mut corr = vec![Complex::<T>::default(); 2 * nm - 1];
        for i in 0..n_env {
            let am = spinor.minus()[i];
            let ap = spinor.plus()[i];
            for m in 0..nm {
                u[m] = cm[m] * am + cp[m] * ap;
            }
            // A_q = sum_m u_m conj(u_{m-q}), q = -2M..2M
            for (qi, a) in corr.iter_mut().enumerate() {
                let q = qi as i64 - 2 * mm;
                let mut acc = Complex::default();
                let lo = (-mm).max(-mm + q);
                let hi = mm.min(mm + q);
                for m in lo..=hi {
                    acc += u[(m + mm) as usize] * u[(m - q + mm) as usize].conj();
                }
                *a = acc;
            }
            let mut f = vec![Complex::<T>::default(); nm];
            for m_i in 0..nm {
                let m = m_i as i64 - mm;
                // cubic (|u_0|^2 u_0)_m truncated to the basis support
                let mut cubic = Complex::default();
                for q in (m - mm)..=(m + mm) {
                    cubic += corr[(q + 2 * mm) as usize] * u[(m - q + mm) as usize];
                }
                let transport = i_unit.scale(T::of(2.0) * omegas[m_i])
                    * (cm[m_i] * dx_minus[i] + cp[m_i] * dx_plus[i]);
                let time = i_unit * (cm[m_i] * dt_alpha.0[i] + cp[m_i] * dt_alpha.1[i]);
                f[m_i] = time + transport - cubic.scale(params.kappa);
            }
            out.push(f);
        }
        out
    }

    fn kernel_inner(&self, f: &[Complex<T>]) -> [Complex<T>; 2] {
        let pm = &self.dp.phi_minus.coeffs;
        let pp = &self.dp.phi_plus.coeffs;
        let mut a = Complex::default();
        let mut b = Complex::default();
        for (i, v) in f.iter().enumerate() {
            a += v * pm[i].conj();
            b += v * pp[i].conj();
        }
        [a, b]
    }

    /// Kernel projections of `F` for a caller-supplied `d_t alpha` (used with
    /// zero to exhibit the uncancelled transport term).
    pub fn kernel_projection_residual(
        &self,
        spinor: &SpinorField<T>,
        dt_alpha: (&[Complex<T>], &[Complex<T>]),
        params: &NLDParams<T>,
    ) -> SolvabilityReport<T> {
        let forcing = self.forcing_coeffs(spinor, dt_alpha, params);
        let per_point: Vec<[T; 2]> = forcing
            .iter()
            .map(|f| {
                let [a, b] = self.kernel_inner(f);
                [a.norm(), b.norm()]
            })
            .collect();
        let max_abs = per_point
            .iter()
            .flatten()
            .copied()
            .fold(T::zero(), Float::max);
        SolvabilityReport { max_abs, per_point }
    }

    /// Fredholm check with `d_t alpha` substituted from the NLD right side;
    /// near zero iff the NLD is the correct effective envelope equation.
    pub fn solvability_check(
        &self,
        spinor: &SpinorField<T>,
        params: &NLDParams<T>,
    ) -> SolvabilityReport<T> {
        let (dm, dp_) = nld_rhs(spinor, params);
        self.kernel_projection_residual(spinor, (&dm, &dp_), params)
    }

    /// Solves `(H(pi) - mu*) u_1 = F` per envelope point by eigenbasis
    /// expansion, projecting out the kernel pair. Errors if the kernel
    /// components of `F` are not negligible (the envelope must satisfy the
    /// NLD for the corrector to exist).
    pub fn build_u1(
        &self,
        spinor: &SpinorField<T>,
        params: &NLDParams<T>,
    ) -> Result<Vec<Vec<Complex<T>>>> {
        let (dm, dp_) = nld_rhs(spinor, params);
        let forcing = self.forcing_coeffs(spinor, (&dm, &dp_), params);
        let nm = self.n_modes();

        let f_scale = forcing
            .iter()
            .map(|f| Float::sqrt(f.iter().map(|v| v.norm_sqr()).sum()))
            .fold(T::zero(), Float::max);
        let bound = T::of(SOLVABILITY_GUARD) * Float::max(f_scale, T::of(1e-12));

        let mut out = Vec::with_capacity(forcing.len());
        for f in &forcing {
            let [a, b] = self.kernel_inner(f);
            let worst = Float::max(a.norm(), b.norm());
            if worst > bound {
                return Err(Error::Solvability {
                    residual: worst.to_f64_(),
                    bound: bound.to_f64_(),
                });
            }
            let mut u1 = vec![Complex::default(); nm];
            for n in 0..nm {
                if self.kernel.contains(&n) {
                    continue;
                }
                let basis_n = &self.basis[n];
                let mut proj = Complex::default();
                for (i, v) in f.iter().enumerate() {
                    proj += v * basis_n[i].conj();
                }
                let w = proj.unscale(self.mu[n] - self.dp.mu_star);
                for (i, t) in u1.iter_mut().enumerate() {
                    *t += basis_n[i] * w;
                }
            }
            out.push(u1);
        }
        Ok(out)
    }

    /// Packs the envelope and (optionally) the corrector for assembly.
    pub fn bundle(
        &self,
        spinor: &SpinorField<T>,
        params: &NLDParams<T>,
        with_u1: bool,
    ) -> Result<AnsatzBundle<T>> {
        let u1 = if with_u1 {
            Some(self.build_u1(spinor, params)?)
        } else {
            None
        };
        Ok(AnsatzBundle {
            spinor: spinor.clone(),
            u1,
            phi_minus: self.dp.phi_minus.coeffs.clone(),
            phi_plus: self.dp.phi_plus.coeffs.clone(),
            mu_star: self.dp.mu_star,
        })
    }

    /// Residual of the ansatz inserted into the semiclassical NLS at the
    /// spinor's time, with the stiff phase factor differentiated analytically
    /// and the envelope time derivative by centered differences at
    /// `t ± dt_fd` (the spinor is advanced by the NLD stepper and the
    /// corrector rebuilt at each side). Returns the residual field and its
    /// `H^s_eps` norm at the params' diagnostic index.
    pub fn residual_rho(
        &self,
        spinor: &SpinorField<T>,
        params: &NLDParams<T>,
        fine: &TorusGrid<T>,
        inv_epsilon: u32,
        dt_fd: T,
    ) -> Result<(WaveField<T>, T)> {
        if dt_fd <= T::zero() {
            return Err(Error::invalid("dt_fd must be positive"));
        }
        let eps = T::one() / T::of(f64::from(inv_epsilon));
        let step = |dt: T| -> Result<SpinorField<T>> {
            let mut f = spinor.clone();
            let p = NLDParams {
                dt,
                ..params.clone()
            };
            NldStepper::new(*spinor.grid(), p).step(&mut f)?;
            Ok(f)
        };
        let sp = step(dt_fd)?;
        let sm = step(-dt_fd)?;
        let psi0 = self
            .bundle(spinor, params, true)?
            .sample_envelope(fine, inv_epsilon)?;
        let psi_p = self
            .bundle(&sp, params, true)?
            .sample_envelope(fine, inv_epsilon)?;
        let psi_m = self
            .bundle(&sm, params, true)?
            .sample_envelope(fine, inv_epsilon)?;

        let mut cache = FftCache::new(fine.n());
        let lap = second_derivative(fine, &psi0, &mut cache);
        let inv_t = T::of(f64::from(inv_epsilon));
        let half_over = T::one() / (T::of(2.0) * dt_fd);
        let phase = Complex::from_polar(T::one(), -self.dp.mu_star * spinor.time() * inv_t);
        let values: Vec<Complex<T>> = (0..fine.n())
            .map(|i| {
                let y = fine.x(i) * inv_t;
                let v = self.pot.eval(y);
                let dt_psi = (psi_p[i] - psi_m[i]).scale(half_over);
                let nl = psi0[i].scale(eps * params.kappa * psi0[i].norm_sqr());
                let r = psi0[i].scale(self.dp.mu_star)
                    + dt_psi * Complex::new(T::zero(), eps)
                    + lap[i].scale(eps * eps)
                    - psi0[i].scale(v)
                    - nl;
                r * phase
            })
            .collect();
        let field = WaveField::new(*fine, values, eps)?;
        let norm = field.hs_eps_norm(params.s);
        Ok((field, norm))
    }
}

/// Leading-order two-scale field `u_0(t, x, y) = alpha_-(t,x) Phi_-(y) +
/// alpha_+(t,x) Phi_+(y)` as an assemblable bundle (no corrector).
pub fn build_u0<T: Real>(dp: &DiracPointData<T>, spinor: &SpinorField<T>) -> AnsatzBundle<T> {
    AnsatzBundle {
        spinor: spinor.clone(),
        u1: None,
        phi_minus: dp.phi_minus.coeffs.clone(),
        phi_plus: dp.phi_plus.coeffs.clone(),
        mu_star: dp.mu_star,
    }
}

impl<T: Real> AnsatzBundle<T> {
    pub fn u1_coeffs(&self) -> Option<&Vec<Vec<Complex<T>>>> {
        self.u1.as_ref()
    }

    pub fn mu_star(&self) -> T {
        self.mu_star
    }

    /// `int_0^1 |u_0(x_i, y)|^2 dy` per envelope point (Parseval in the
    /// orthonormal Bloch pair).
    pub fn cell_density(&self, i: usize) -> T {
        let am = self.spinor.minus()[i];
        let ap = self.spinor.plus()[i];
        self.phi_minus
            .iter()
            .zip(&self.phi_plus)
            .map(|(m, p)| (m * am + p * ap).norm_sqr())
            .sum()
    }

    fn check_commensurate(&self, fine: &TorusGrid<T>, inv_epsilon: u32) -> Result<usize> {
        if inv_epsilon == 0 || inv_epsilon % 2 != 0 {
            return Err(Error::Incommensurate(
                "1/epsilon must be a positive even integer".into(),
            ));
        }
        if fine.length() != self.spinor.grid().length() {
            return Err(Error::Incommensurate(
                "fine grid and envelope grid must share the torus length".into(),
            ));
        }
        let cells = fine.length() as usize * inv_epsilon as usize;
        if fine.n() % cells != 0 {
            return Err(Error::Incommensurate(format!(
                "{} grid points do not divide into {cells} eps-cells",
                fine.n()
            )));
        }
        if fine.n() < self.spinor.grid().n() {
            return Err(Error::Incommensurate(
                "fine grid must be at least as fine as the envelope grid".into(),
            ));
        }
        Ok(fine.n() / cells)
    }

    /// Samples `u_0 + eps u_1` at `(x_i, y = x_i/eps)` on the fine grid
    /// (no `e^{-i mu* t/eps}` phase). Envelope factors are interpolated
    /// spectrally; the pseudoperiodic carrier is evaluated from per-cell
    /// tables with the exact `Phi(y+1) = -Phi(y)` sign flips.
    fn sample_envelope(&self, fine: &TorusGrid<T>, inv_epsilon: u32) -> Result<Vec<Complex<T>>> {
        let ppc = self.check_commensurate(fine, inv_epsilon)?;
        let n_env = self.spinor.grid().n();
        let n_fine = fine.n();
        let mut env_cache = FftCache::new(n_env);
        let mut fine_cache = FftCache::new(n_fine);

        let am = upsample(self.spinor.minus(), n_fine, &mut env_cache, &mut fine_cache);
        let ap = upsample(self.spinor.plus(), n_fine, &mut env_cache, &mut fine_cache);

        let nm = self.phi_minus.len();
        let mm = (nm as i64 - 1) / 2;
        // e^{i pi(2m+1) r/ppc} per mode and per within-cell offset
        let mode_table: Vec<Vec<Complex<T>>> = (0..nm)
            .map(|m_i| {
                let omega = crate::bloch::mode_frequency(T::PI(), m_i as i64 - mm);
                (0..ppc)
                    .map(|r| {
                        Complex::from_polar(
                            T::one(),
                            omega * T::from_usize_(r) / T::from_usize_(ppc),
                        )
                    })
                    .collect()
            })
            .collect();
        let cell_minus: Vec<Complex<T>> = (0..ppc)
            .map(|r| (0..nm).map(|m| self.phi_minus[m] * mode_table[m][r]).sum())
            .collect();
        let cell_plus: Vec<Complex<T>> = (0..ppc)
            .map(|r| (0..nm).map(|m| self.phi_plus[m] * mode_table[m][r]).sum())
            .collect();
        // global sign from y_0 = -L/(2 eps): (-1)^{L * inv_eps / 2}
        let half_cells = (fine.length() as u64 * u64::from(inv_epsilon)) / 2;
        let s0 = if half_cells % 2 == 0 {
            T::one()
        } else {
            -T::one()
        };

        let mut out = vec![Complex::default(); n_fine];
        for i in 0..n_fine {
            let q = i / ppc;
            let r = i % ppc;
            let sign = if q % 2 == 0 { s0 } else { -s0 };
            out[i] = (am[i] * cell_minus[r] + ap[i] * cell_plus[r]).scale(sign);
        }

        if let Some(u1) = &self.u1 {
            let eps = T::one() / T::of(f64::from(inv_epsilon));
            // interpolate each fast-mode coefficient function across x
            for (m_i, table) in mode_table.iter().enumerate() {
                let coarse: Vec<Complex<T>> = u1.iter().map(|row| row[m_i]).collect();
                let finem = upsample(&coarse, n_fine, &mut env_cache, &mut fine_cache);
                for i in 0..n_fine {
                    let q = i / ppc;
                    let r = i % ppc;
                    let sign = if q % 2 == 0 { s0 } else { -s0 };
                    out[i] += (finem[i] * table[r]).scale(sign * eps);
                }
            }
        }
        Ok(out)
    }

    /// Evaluates `e^{-i mu* t/eps} [u_0 + eps u_1]` on the fine grid at the
    /// given time (the envelope is the bundle's stored spinor; only the fast
    /// phase depends on `t` here).
    pub fn assemble(&self, fine: &TorusGrid<T>, inv_epsilon: u32, t: T) -> Result<WaveField<T>> {
        let mut values = self.sample_envelope(fine, inv_epsilon)?;
        let inv_t = T::of(f64::from(inv_epsilon));
        let phase = Complex::from_polar(T::one(), -self.mu_star * t * inv_t);
        for v in values.iter_mut() {
            *v *= phase;
        }
        WaveField::new(*fine, values, T::one() / inv_t)
    }
}
