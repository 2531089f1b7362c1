//! End-to-end convergence study: solve the NLD envelope, prepare the
//! well-prepared initial datum, evolve the semiclassical NLS, measure
//! `w(t) = || psi(t) - e^{-i mu* t/eps} alpha(t) . Phi(./eps) ||_{H^s_eps}`
//! per eps, and fit the rate of `e(eps) = sup_t w(t)`.

use std::time::Instant;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::Float;
use rayon::prelude::*;

use crate::dirac::DiracSummary;
use crate::error::{Error, Result};
use crate::field::SobolevIndex;
use crate::grid::TorusGrid;
use crate::multiscale::MultiscaleContext;
use crate::nld::{nld_evolve, NLDParams, SpinorField};
use crate::nls::{nls_evolve, NLSParams};
use crate::potential::PeriodicPotential;
use crate::scalar::Real;

/// Time-step rule for the NLS leg of the study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtRule<T> {
    /// `dt = eps / coeff` (the module-level default coupling).
    Linear(T),
    /// `dt = eps^2 / coeff`; keeps the splitting defect a fixed fraction of
    /// the O(eps) signal across the sweep.
    Quadratic(T),
}

impl<T: Real> DtRule<T> {
    pub fn dt(&self, eps: T) -> T {
        match *self {
            DtRule::Linear(c) => eps / c,
            DtRule::Quadratic(c) => eps * eps / c,
        }
    }
}

/// Gaussian component of the initial envelope: `amp * exp(-x^2/(2 w^2))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianSpec<T> {
    pub amplitude: T,
    pub width: T,
}

#[derive(Clone, Debug)]
pub struct StudyConfig<T> {
    pub potential: PeriodicPotential<T>,
    pub m_trunc: usize,
    /// Comparison regularity (s > 1/2).
    pub s: SobolevIndex<T>,
    /// NLD diagnostic regularity.
    pub s_env: SobolevIndex<T>,
    /// Values of 1/eps, strictly increasing even integers.
    pub inv_epsilons: Vec<u32>,
    pub t_star: T,
    pub kappa: T,
    pub box_length: u32,
    pub envelope_points: usize,
    pub fine_points_per_cell: u32,
    pub nls_dt: DtRule<T>,
    pub nld_dt: T,
    pub alpha0_minus: GaussianSpec<T>,
    pub alpha0_plus: GaussianSpec<T>,
    pub n_hint: Option<usize>,
    pub seed: u64,
    pub sample_count: usize,
    pub emit_bands: bool,
    pub bands_k_points: usize,
    pub bands_n_bands: usize,
}

impl<T: Real> Default for StudyConfig<T> {
    fn default() -> Self {
        Self {
            potential: PeriodicPotential::single_mode(2, T::of(5.0)).expect("default potential"),
            m_trunc: 24,
            s: SobolevIndex::one(),
            s_env: SobolevIndex::one(),
            inv_epsilons: vec![8, 16, 32, 64],
            t_star: T::of(0.5),
            kappa: T::one(),
            box_length: 32,
            envelope_points: 256,
            fine_points_per_cell: 32,
            nls_dt: DtRule::Quadratic(T::of(48.0)),
            nld_dt: T::of(1.0 / 400.0),
            alpha0_minus: GaussianSpec {
                amplitude: T::one(),
                width: T::one(),
            },
            alpha0_plus: GaussianSpec {
                amplitude: T::zero(),
                width: T::one(),
            },
            n_hint: None,
            seed: 0,
            sample_count: 11,
            emit_bands: false,
            bands_k_points: 129,
            bands_n_bands: 6,
        }
    }
}

impl<T: Real> StudyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.s.value() <= T::of(0.5) {
            return Err(Error::Config("s must exceed 1/2".into()));
        }
        if self.inv_epsilons.is_empty() {
            return Err(Error::Config("inv_epsilons must be nonempty".into()));
        }
        if !self.inv_epsilons.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "epsilon list must be strictly decreasing".into(),
            ));
        }
        if self.inv_epsilons.iter().any(|&v| v == 0 || v % 2 != 0) {
            return Err(Error::Config(
                "each 1/epsilon must be a positive even integer".into(),
            ));
        }
        if self.t_star <= T::zero() {
            return Err(Error::Config("t_star must be positive".into()));
        }
        if !(self.kappa == T::one() || self.kappa == -T::one() || self.kappa == T::zero()) {
            return Err(Error::Config("kappa must be -1, 0 or +1".into()));
        }
        if self.nld_dt <= T::zero() {
            return Err(Error::Config("nld_dt must be positive".into()));
        }
        if self.sample_count < 2 {
            return Err(Error::Config("sample_count must be at least 2".into()));
        }
        if !self.envelope_points.is_power_of_two() {
            return Err(Error::Config(
                "envelope_points must be a power of two".into(),
            ));
        }
        for &inv in &self.inv_epsilons {
            let n = self.fine_n(inv)?;
            if !n.is_power_of_two() {
                return Err(Error::Config(format!(
                    "fine grid for 1/eps = {inv} has {n} points; must be a power of two"
                )));
            }
        }
        Ok(())
    }

    pub fn fine_n(&self, inv_epsilon: u32) -> Result<usize> {
        (self.fine_points_per_cell as usize)
            .checked_mul(self.box_length as usize)
            .and_then(|v| v.checked_mul(inv_epsilon as usize))
            .ok_or_else(|| Error::Config("fine grid size overflows".into()))
    }

    pub fn sample_times(&self) -> Vec<T> {
        let n = self.sample_count;
        (0..n)
            .map(|i| self.t_star * T::from_usize_(i) / T::from_usize_(n - 1))
            .collect()
    }

    pub fn initial_spinor(&self, grid: TorusGrid<T>) -> Result<SpinorField<T>> {
        let gm = self.alpha0_minus;
        let gp = self.alpha0_plus;
        let gauss = |g: GaussianSpec<T>| {
            move |x: T| {
                Complex::new(
                    g.amplitude * Float::exp(-x * x / (T::of(2.0) * g.width * g.width)),
                    T::zero(),
                )
            }
        };
        SpinorField::from_fns(grid, gauss(gm), gauss(gp))
    }
}

/// One eps leg of the sweep; `failure` records an isolated solver abort.
#[derive(Clone, Debug)]
pub struct EpsRun<T> {
    pub inv_epsilon: u32,
    /// `(t, w(t))` samples.
    pub samples: Vec<(T, T)>,
    pub sup_error: Option<T>,
    pub runtime_secs: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct RateFit<T> {
    /// Fitted order `p` of `e(eps) ~ C eps^p`.
    pub p: T,
    pub c: T,
    pub max_residual: T,
}

pub struct StudyReport<T> {
    pub dirac: DiracSummary,
    pub runs: Vec<EpsRun<T>>,
    pub rate: Option<RateFit<T>>,
    pub notice: Option<String>,
    pub total_runtime_secs: f64,
}

/// Least-squares fit of `log e = log C + p log eps`.
pub fn fit_rate<T: Real>(points: &[(T, T)]) -> Result<RateFit<T>> {
    if points.len() < 2 {
        return Err(Error::invalid("rate fit needs at least two points"));
    }
    if points
        .iter()
        .any(|&(eps, e)| eps <= T::zero() || e <= T::zero())
    {
        return Err(Error::invalid(
            "rate fit needs positive epsilons and errors",
        ));
    }
    let n = T::from_usize_(points.len());
    let xs: Vec<T> = points.iter().map(|&(eps, _)| Float::ln(eps)).collect();
    let ys: Vec<T> = points.iter().map(|&(_, e)| Float::ln(e)).collect();
    let xbar = xs.iter().copied().sum::<T>() / n;
    let ybar = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (*x - xbar) * (*x - xbar);
        sxy += (*x - xbar) * (*y - ybar);
    }
    if sxx == T::zero() {
        return Err(Error::invalid("rate fit needs distinct epsilons"));
    }
    let p = sxy / sxx;
    let b = ybar - p * xbar;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| Float::abs(*y - (b + p * *x)))
        .fold(T::zero(), Float::max);
    Ok(RateFit {
        p,
        c: Float::exp(b),
        max_residual,
    })
}

/// Fraction of the envelope mass in the outer 10% of the box (tail spill
/// diagnostic for the torus truncation).
pub fn envelope_tail_mass_fraction<T: Real>(spinor: &SpinorField<T>) -> T {
    let grid = spinor.grid();
    let edge = grid.len_t() * T::of(0.45);
    let mut tail = T::zero();
    let mut total = T::zero();
    for (i, x) in grid.xs().enumerate() {
        let d = spinor.minus()[i].norm_sqr() + spinor.plus()[i].norm_sqr();
        total += d;
        if Float::abs(x) >= edge {
            tail += d;
        }
    }
    if total == T::zero() {
        T::zero()
    } else {
        tail / total
    }
}

fn run_one_eps<T: Real + RealField>(
    cfg: &StudyConfig<T>,
    ctx: &MultiscaleContext<T>,
    inv: u32,
    sample_times: &[T],
) -> Result<Vec<(T, T)>> {
    let dp = ctx.dp();
    let fine = TorusGrid::new(cfg.box_length, cfg.fine_n(inv)?)?;
    let env_grid = TorusGrid::new(cfg.box_length, cfg.envelope_points)?;
    let spinor0 = cfg.initial_spinor(env_grid)?;

    let nld_params = NLDParams {
        blowup_factor: T::of(1e6),
        ..NLDParams::new(
            dp.c_sharp, dp.beta1, dp.beta2, cfg.kappa, cfg.nld_dt, cfg.s_env,
        )?
    };
    let envelopes = nld_evolve(&spinor0, &nld_params, cfg.t_star, sample_times)?;

    // well-prepared datum: psi_0 = u_0(0) + eps u_1(0)
    let psi0 = ctx
        .bundle(&spinor0, &nld_params, true)?
        .assemble(&fine, inv, T::zero())?;

    let eps = T::one() / T::of(f64::from(inv));
    let nls_params = NLSParams::new(
        inv,
        cfg.kappa,
        cfg.potential.clone(),
        cfg.nls_dt.dt(eps),
        fine,
    )?;
    let evolution = nls_evolve(&psi0, &nls_params, cfg.t_star, sample_times)?;

    let mut samples = Vec::with_capacity(sample_times.len());
    for (i, &t) in sample_times.iter().enumerate() {
        let comparison = ctx
            .bundle(&envelopes[i], &nld_params, false)?
            .assemble(&fine, inv, t)?;
        let w = (&evolution.snapshots[i] - &comparison).hs_eps_norm(cfg.s);
        samples.push((t, w));
    }
    Ok(samples)
}

/// Runs the full sweep: one Dirac detection, then one NLD+NLS pipeline per
/// eps (in parallel), then the log-log rate fit over the successful legs.
/// Solver failures are isolated per eps; detection failures abort the study.
pub fn run_convergence_study<T: Real + RealField>(cfg: &StudyConfig<T>) -> Result<StudyReport<T>> {
    cfg.validate()?;
    let t_start = Instant::now();
    let ctx = MultiscaleContext::new(&cfg.potential, cfg.m_trunc, cfg.n_hint)?;
    let sample_times = cfg.sample_times();

    let runs: Vec<EpsRun<T>> = cfg
        .inv_epsilons
        .par_iter()
        .map(|&inv| {
            let t0 = Instant::now();
            match run_one_eps(cfg, &ctx, inv, &sample_times) {
                Ok(samples) => {
                    let sup = samples.iter().map(|&(_, w)| w).fold(T::zero(), Float::max);
                    EpsRun {
                        inv_epsilon: inv,
                        samples,
                        sup_error: Some(sup),
                        runtime_secs: t0.elapsed().as_secs_f64(),
                        failure: None,
                    }
                }
                Err(e) => EpsRun {
                    inv_epsilon: inv,
                    samples: Vec::new(),
                    sup_error: None,
                    runtime_secs: t0.elapsed().as_secs_f64(),
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();

    let points: Vec<(T, T)> = runs
        .iter()
        .filter_map(|r| {
            r.sup_error.and_then(|e| {
                (e > T::zero()).then(|| (T::one() / T::of(f64::from(r.inv_epsilon)), e))
            })
        })
        .collect();
    let (rate, notice) = if points.len() >= 2 {
        (Some(fit_rate(&points)?), None)
    } else {
        (
            None,
            Some("fewer than two successful epsilon legs; rate fit skipped".to_string()),
        )
    };

    Ok(StudyReport {
        dirac: ctx.dp().summary(),
        runs,
        rate,
        notice,
        total_runtime_secs: t_start.elapsed().as_secs_f64(),
    })
}
