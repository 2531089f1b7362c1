//! Semiclassical cubic NLS on an eps-resolving periodic grid:
//! `i*eps*d_t psi = -eps^2 d_xx psi + V(x/eps) psi + eps*kappa |psi|^2 psi`,
//! stepped by Strang splitting between the kinetic multiplier and the exact
//! local phase flow, plus the frame-rescaling maps.

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{SobolevIndex, WaveField};
use crate::grid::TorusGrid;
use crate::potential::PeriodicPotential;
use crate::scalar::Real;
use crate::spectral::FftCache;

/// Largest allowed `dt/eps`; the fast phase `exp(-i t mu*/eps)` must be
/// resolved (the production default is `dt = eps/200`).
pub const MAX_DT_OVER_EPS: f64 = 1.0 / 64.0;

#[derive(Clone, Debug)]
pub struct NLSParams<T> {
    inv_epsilon: u32,
    pub kappa: T,
    pub pot: PeriodicPotential<T>,
    pub dt: T,
    pub grid: TorusGrid<T>,
    pub blowup_factor: T,
    /// Regularity of the blow-up diagnostic.
    pub s: SobolevIndex<T>,
}

impl<T: Real> NLSParams<T> {
    /// `inv_epsilon` is `1/eps` and must be an even integer so that both the
    /// scaled potential and the `e^{i pi x/eps}` carrier close up on the
    /// integer-length torus; the grid must resolve the fast scale with at
    /// least 32 points per eps-cell.
    pub fn new(
        inv_epsilon: u32,
        kappa: T,
        pot: PeriodicPotential<T>,
        dt: T,
        grid: TorusGrid<T>,
    ) -> Result<Self> {
        if inv_epsilon == 0 || inv_epsilon % 2 != 0 {
            return Err(Error::invalid("1/epsilon must be a positive even integer"));
        }
        if !(kappa == T::one() || kappa == -T::one() || kappa == T::zero()) {
            return Err(Error::invalid("kappa must be -1, 0 or +1"));
        }
        let min_points = 32usize
            .checked_mul(grid.length() as usize)
            .and_then(|v| v.checked_mul(inv_epsilon as usize))
            .ok_or_else(|| Error::invalid("grid requirement overflow"))?;
        if grid.n() < min_points {
            return Err(Error::invalid(format!(
                "grid must resolve the fast scale: need at least {min_points} points, got {}",
                grid.n()
            )));
        }
        let eps = T::one() / T::of(f64::from(inv_epsilon));
        if dt <= T::zero() || !dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        let limit = eps * T::of(MAX_DT_OVER_EPS);
        if dt > limit {
            return Err(Error::StepSize {
                dt: dt.to_f64_(),
                limit: limit.to_f64_(),
            });
        }
        Ok(Self {
            inv_epsilon,
            kappa,
            pot,
            dt,
            grid,
            blowup_factor: T::of(1e6),
            s: SobolevIndex::one(),
        })
    }

    #[inline]
    pub fn epsilon(&self) -> T {
        T::one() / T::of(f64::from(self.inv_epsilon))
    }

    #[inline]
    pub fn inv_epsilon(&self) -> u32 {
        self.inv_epsilon
    }
}

/// Mass/energy log entry recorded at each sample time.
#[derive(Clone, Copy, Debug)]
pub struct ConservationRecord<T> {
    pub t: T,
    pub mass: T,
    pub energy: T,
}

pub struct NlsEvolution<T> {
    pub snapshots: Vec<WaveField<T>>,
    pub log: Vec<ConservationRecord<T>>,
}

/// Strang stepper with precomputed kinetic multipliers and potential phase.
pub struct NlsStepper<T: Real> {
    params: NLSParams<T>,
    fft: FftCache<T>,
    /// `exp(-i (dt/2) eps xi^2)`.
    kin_half: Vec<Complex<T>>,
    /// `exp(-i dt eps xi^2)` (used by the fused evolution path).
    kin_full: Vec<Complex<T>>,
    /// `exp(-i dt V(x/eps)/eps)`.
    pot_phase: Vec<Complex<T>>,
    /// `V(x_i/eps)` (kept for the energy functional).
    v_samples: Vec<T>,
}

impl<T: Real> NlsStepper<T> {
    pub fn new(params: NLSParams<T>) -> Self {
        let grid = params.grid;
        let eps = params.epsilon();
        let half = params.dt / T::of(2.0);
        let kin_half: Vec<Complex<T>> = (0..grid.n())
            .map(|j| {
                let xi = grid.freq(j);
                Complex::from_polar(T::one(), -half * eps * xi * xi)
            })
            .collect();
        let kin_full = kin_half.iter().map(|m| m * m).collect();
        let v_samples: Vec<T> = grid.xs().map(|x| params.pot.eval(x / eps)).collect();
        let pot_phase = v_samples
            .iter()
            .map(|&v| Complex::from_polar(T::one(), -params.dt * v / eps))
            .collect();
        Self {
            params,
            fft: FftCache::new(grid.n()),
            kin_half,
            kin_full,
            pot_phase,
            v_samples,
        }
    }

    pub fn params(&self) -> &NLSParams<T> {
        &self.params
    }

    pub fn multiplier_unitarity_defect(&self) -> T {
        self.kin_half
            .iter()
            .chain(&self.pot_phase)
            .map(|m| Float::abs(m.norm() - T::one()))
            .fold(T::zero(), Float::max)
    }

    fn check_field(&self, field: &WaveField<T>) -> Result<()> {
        if field.grid() != &self.params.grid {
            return Err(Error::invalid(
                "field grid does not match the NLS parameters",
            ));
        }
        if Float::abs(field.epsilon() - self.params.epsilon()) > T::of(1e-14) {
            return Err(Error::invalid(
                "field epsilon does not match the NLS parameters",
            ));
        }
        Ok(())
    }

    fn apply_kinetic(&mut self, values: &mut [Complex<T>], full: bool) {
        self.fft.forward(values);
        let mult = if full { &self.kin_full } else { &self.kin_half };
        for (v, m) in values.iter_mut().zip(mult) {
            *v *= m;
        }
        self.fft.inverse(values);
    }

    /// Exact flow of `i d_t psi = [V(x/eps)/eps + kappa |psi|^2] psi` over dt.
    fn apply_phase(&self, values: &mut [Complex<T>]) {
        let c = -self.params.dt * self.params.kappa;
        for (v, p) in values.iter_mut().zip(&self.pot_phase) {
            let (sin, cos) = Float::sin_cos(c * v.norm_sqr());
            *v *= p * Complex::new(cos, sin);
        }
    }

    /// One symmetric Strang step: half kinetic, exact phase flow, half kinetic.
    pub fn step(&mut self, field: &mut WaveField<T>) -> Result<()> {
        self.check_field(field)?;
        self.apply_kinetic(field.values_mut(), false);
        self.apply_phase(field.values_mut());
        self.apply_kinetic(field.values_mut(), false);
        Ok(())
    }

    /// `n` Strang steps with the interior half-kinetic substeps fused into
    /// full multipliers (algebraically identical composition).
    fn run_fused(&mut self, field: &mut WaveField<T>, n: usize) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        self.check_field(field)?;
        self.apply_kinetic(field.values_mut(), false);
        self.apply_phase(field.values_mut());
        for _ in 1..n {
            self.apply_kinetic(field.values_mut(), true);
            self.apply_phase(field.values_mut());
        }
        self.apply_kinetic(field.values_mut(), false);
        Ok(())
    }

    /// Energy functional evaluated with the stepper's cached potential.
    pub fn energy(&mut self, field: &WaveField<T>) -> T {
        let grid = &self.params.grid;
        let eps = self.params.epsilon();
        let dx = grid.dx();
        let mut spec = field.values().to_vec();
        self.fft.forward(&mut spec);
        let mut kinetic = T::zero();
        for (j, v) in spec.iter().enumerate() {
            let exi = eps * grid.freq(j);
            kinetic += exi * exi * v.norm_sqr();
        }
        kinetic = kinetic * dx * dx / grid.len_t();
        let mut potential = T::zero();
        let mut quartic = T::zero();
        for (v, &vs) in field.values().iter().zip(&self.v_samples) {
            let d = v.norm_sqr();
            potential += vs * d;
            quartic += d * d;
        }
        kinetic + potential * dx + self.params.kappa * eps / T::of(2.0) * quartic * dx
    }
}

/// One Strang step of the semiclassical NLS.
pub fn nls_step<T: Real>(field: &WaveField<T>, params: &NLSParams<T>) -> Result<WaveField<T>> {
    let mut out = field.clone();
    NlsStepper::new(params.clone()).step(&mut out)?;
    Ok(out)
}

/// Evolves to `t_final` with snapshots at the requested times (reached
/// exactly by a shortened final step), logging mass and energy per sample.
pub fn nls_evolve<T: Real>(
    psi0: &WaveField<T>,
    params: &NLSParams<T>,
    t_final: T,
    sample_times: &[T],
) -> Result<NlsEvolution<T>> {
    if t_final < T::zero() {
        return Err(Error::invalid("t_final must be nonnegative"));
    }
    let tol = T::of(1e-12) * Float::max(T::one(), t_final);
    if sample_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("sample times must be nondecreasing"));
    }
    if sample_times.iter().any(|&t| t < -tol || t > t_final + tol) {
        return Err(Error::invalid("sample times must lie in [0, t_final]"));
    }
    let mut stepper = NlsStepper::new(params.clone());
    let mut field = psi0.clone();
    let norm0 = field.hs_eps_norm(params.s);
    let mut out = NlsEvolution {
        snapshots: Vec::new(),
        log: Vec::new(),
    };
    let mut t = T::zero();
    for &ts in sample_times {
        let span = ts - t;
        if span > tol {
            let n_whole = Float::floor(span / params.dt + T::of(1e-9)).to_f64_() as usize;
            stepper.run_fused(&mut field, n_whole)?;
            let remainder = span - T::from_usize_(n_whole) * params.dt;
            if remainder > tol {
                let partial = NLSParams {
                    dt: remainder,
                    ..params.clone()
                };
                NlsStepper::new(partial).step(&mut field)?;
            }
            t = ts;
        }
        if norm0 > T::zero() {
            let ratio = field.hs_eps_norm(params.s) / norm0;
            if ratio > params.blowup_factor {
                return Err(Error::BlowUp {
                    t: t.to_f64_(),
                    factor: ratio.to_f64_(),
                });
            }
        }
        out.log.push(ConservationRecord {
            t: ts,
            mass: field.l2_norm().powi(2),
            energy: stepper.energy(&field),
        });
        out.snapshots.push(field.clone());
    }
    Ok(out)
}

/// Energy `int |eps psi'|^2 + int V(x/eps)|psi|^2 + kappa (eps/2) int |psi|^4`,
/// kinetic term evaluated spectrally.
pub fn nls_energy<T: Real>(field: &WaveField<T>, params: &NLSParams<T>) -> T {
    NlsStepper::new(params.clone()).energy(field)
}

fn integral_inv_epsilon<T: Real>(epsilon: T) -> Result<u32> {
    let inv = T::one() / epsilon;
    let rounded = Float::round(inv);
    if Float::abs(inv - rounded) > T::of(1e-9) || rounded < T::one() {
        return Err(Error::Incommensurate(format!(
            "1/epsilon = {} is not a positive integer",
            inv.to_f64_()
        )));
    }
    Ok(rounded.to_f64_() as u32)
}

/// Maps a semiclassical-frame field to the physical frame
/// `psi(x) = sqrt(eps) psi_eps(eps x)`: same samples scaled by `sqrt(eps)` on
/// the dilated torus of length `L/eps`, with `epsilon = 1` thereafter.
pub fn rescale_to_physical<T: Real>(field: &WaveField<T>) -> Result<WaveField<T>> {
    let eps = field.epsilon();
    let inv = integral_inv_epsilon(eps)?;
    let length = field
        .grid()
        .length()
        .checked_mul(inv)
        .ok_or_else(|| Error::Incommensurate("physical torus length overflows".into()))?;
    let grid = TorusGrid::new(length, field.grid().n())?;
    let amp = Float::sqrt(eps);
    let values = field.values().iter().map(|v| v.scale(amp)).collect();
    WaveField::new(grid, values, T::one())
}

/// Inverse of [`rescale_to_physical`]: requires the physical torus length to
/// be divisible by `1/eps`.
pub fn rescale_to_semiclassical<T: Real>(
    field: &WaveField<T>,
    inv_epsilon: u32,
) -> Result<WaveField<T>> {
    if inv_epsilon == 0 {
        return Err(Error::invalid("1/epsilon must be positive"));
    }
    if Float::abs(field.epsilon() - T::one()) > T::of(1e-14) {
        return Err(Error::Incommensurate(
            "input field is not in the physical frame".into(),
        ));
    }
    if field.grid().length() % inv_epsilon != 0 {
        return Err(Error::Incommensurate(format!(
            "torus length {} is not divisible by 1/epsilon = {inv_epsilon}",
            field.grid().length()
        )));
    }
    let eps = T::one() / T::of(f64::from(inv_epsilon));
    let grid = TorusGrid::new(field.grid().length() / inv_epsilon, field.grid().n())?;
    let amp = Float::sqrt(T::of(f64::from(inv_epsilon)));
    let values = field.values().iter().map(|v| v.scale(amp)).collect();
    WaveField::new(grid, values, eps)
}
