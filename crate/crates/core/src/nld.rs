//! Effective cubic nonlinear Dirac system for the envelope spinor
//! `alpha = (alpha_-, alpha_+)` on a periodic grid:
//! `i d_t alpha = i c_sharp sigma_3 d_x alpha + kappa G(alpha) alpha`.
//!
//! With the crate's gauge (c_sharp > 0, Phi_- on the descending band) the
//! solvability conditions put the transport term with this orientation:
//! alpha_- travels with velocity -c_sharp, alpha_+ with +c_sharp.
//! Time stepping is Strang splitting: exact spectral transport around a
//! pointwise RK4 integration of the full 2x2 nonlinear flow.

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::SobolevIndex;
use crate::grid::TorusGrid;
use crate::scalar::Real;
use crate::spectral::FftCache;

/// Envelope spinor sampled on the (slow) periodic grid.
#[derive(Clone, Debug)]
pub struct SpinorField<T> {
    grid: TorusGrid<T>,
    minus: Vec<Complex<T>>,
    plus: Vec<Complex<T>>,
    time: T,
}

/// Coefficients and numerical controls of the NLD flow.
#[derive(Clone, Debug)]
pub struct NLDParams<T> {
    pub c_sharp: T,
    pub beta1: T,
    pub beta2: T,
    pub kappa: T,
    pub dt: T,
    /// Regularity of the blow-up diagnostic norm.
    pub s: SobolevIndex<T>,
    /// Diagnostic growth factor that aborts the evolution.
    pub blowup_factor: T,
}

impl<T: Real> NLDParams<T> {
    pub fn new(
        c_sharp: T,
        beta1: T,
        beta2: T,
        kappa: T,
        dt: T,
        s: SobolevIndex<T>,
    ) -> Result<Self> {
        if dt <= T::zero() || !dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        if !(kappa == T::one() || kappa == -T::one() || kappa == T::zero()) {
            return Err(Error::invalid("kappa must be -1, 0 or +1"));
        }
        Ok(Self {
            c_sharp,
            beta1,
            beta2,
            kappa,
            dt,
            s,
            blowup_factor: T::of(1e6),
        })
    }
}

impl<T: Real> SpinorField<T> {
    pub fn new(
        grid: TorusGrid<T>,
        minus: Vec<Complex<T>>,
        plus: Vec<Complex<T>>,
        time: T,
    ) -> Result<Self> {
        if minus.len() != grid.n() || plus.len() != grid.n() {
            return Err(Error::invalid("spinor components must match the grid size"));
        }
        Ok(Self {
            grid,
            minus,
            plus,
            time,
        })
    }

    pub fn from_fns(
        grid: TorusGrid<T>,
        f_minus: impl Fn(T) -> Complex<T>,
        f_plus: impl Fn(T) -> Complex<T>,
    ) -> Result<Self> {
        let minus = grid.xs().map(&f_minus).collect();
        let plus = grid.xs().map(&f_plus).collect();
        Self::new(grid, minus, plus, T::zero())
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn minus(&self) -> &[Complex<T>] {
        &self.minus
    }

    #[inline]
    pub fn plus(&self) -> &[Complex<T>] {
        &self.plus
    }

    #[inline]
    pub fn time(&self) -> T {
        self.time
    }

    /// `int (|alpha_-|^2 + |alpha_+|^2) dx` by quadrature.
    pub fn mass(&self) -> T {
        let sum: T = self
            .minus
            .iter()
            .zip(&self.plus)
            .map(|(m, p)| m.norm_sqr() + p.norm_sqr())
            .sum();
        sum * self.grid.dx()
    }

    /// `H^s` diagnostic norm of the spinor (eps = 1 weight).
    pub fn hs_norm(&self, s: SobolevIndex<T>) -> T {
        let mut cache = FftCache::new(self.grid.n());
        self.hs_norm_cached(s, &mut cache)
    }

    fn hs_norm_cached(&self, s: SobolevIndex<T>, cache: &mut FftCache<T>) -> T {
        let mut total = T::zero();
        for comp in [&self.minus, &self.plus] {
            let mut buf = comp.clone();
            cache.forward(&mut buf);
            for (j, v) in buf.iter().enumerate() {
                let xi = self.grid.freq(j);
                total += Float::powf(T::one() + xi * xi, s.value()) * v.norm_sqr();
            }
        }
        let dx = self.grid.dx();
        Float::sqrt(total * dx * dx / self.grid.len_t())
    }
}

/// The Hermitian coupling matrix `G_{beta1,beta2}(alpha)` at one point.
pub fn coupling_matrix<T: Real>(
    a_minus: Complex<T>,
    a_plus: Complex<T>,
    p: &NLDParams<T>,
) -> [[Complex<T>; 2]; 2] {
    let two = T::of(2.0);
    let g11 = p.beta1 * (a_minus.norm_sqr() + two * a_plus.norm_sqr());
    let g22 = p.beta1 * (a_plus.norm_sqr() + two * a_minus.norm_sqr());
    let g12 = (a_minus.conj() * a_plus).scale(p.beta2);
    [
        [Complex::new(g11, T::zero()), g12],
        [g12.conj(), Complex::new(g22, T::zero())],
    ]
}

#[inline]
fn nonlinear_rhs_at<T: Real>(
    m: Complex<T>,
    p: Complex<T>,
    params: &NLDParams<T>,
) -> (Complex<T>, Complex<T>) {
    // i a_t = kappa G a  =>  a_t = -i kappa G a
    let g = coupling_matrix(m, p, params);
    let mi = Complex::new(T::zero(), -params.kappa);
    (
        mi * (g[0][0] * m + g[0][1] * p),
        mi * (g[1][0] * m + g[1][1] * p),
    )
}

/// Time stepper owning the FFT plan and the transport multipliers for a
/// fixed dt.
pub struct NldStepper<T: Real> {
    params: NLDParams<T>,
    fft: FftCache<T>,
    /// Half-step multiplier for alpha_-: `exp(+i c_sharp xi dt/2)`.
    half_minus: Vec<Complex<T>>,
    /// Half-step multiplier for alpha_+: the conjugate.
    half_plus: Vec<Complex<T>>,
}

impl<T: Real> NldStepper<T> {
    pub fn new(grid: TorusGrid<T>, params: NLDParams<T>) -> Self {
        let half = params.dt / T::of(2.0);
        let half_minus: Vec<Complex<T>> = (0..grid.n())
            .map(|j| Complex::from_polar(T::one(), params.c_sharp * grid.freq(j) * half))
            .collect();
        let half_plus = half_minus.iter().map(Complex::conj).collect();
        Self {
            params,
            fft: FftCache::new(grid.n()),
            half_minus,
            half_plus,
        }
    }

    pub fn params(&self) -> &NLDParams<T> {
        &self.params
    }

    /// Modulus defect of the transport multipliers (unitarity diagnostic).
    pub fn multiplier_unitarity_defect(&self) -> T {
        self.half_minus
            .iter()
            .chain(&self.half_plus)
            .map(|m| Float::abs(m.norm() - T::one()))
            .fold(T::zero(), Float::max)
    }

    fn apply_transport(&mut self, field: &mut SpinorField<T>) {
        self.fft.forward(&mut field.minus);
        for (v, m) in field.minus.iter_mut().zip(&self.half_minus) {
            *v *= m;
        }
        self.fft.inverse(&mut field.minus);
        self.fft.forward(&mut field.plus);
        for (v, m) in field.plus.iter_mut().zip(&self.half_plus) {
            *v *= m;
        }
        self.fft.inverse(&mut field.plus);
    }

    fn rk4_nonlinear(&self, field: &mut SpinorField<T>, dt: T) {
        let p = &self.params;
        if p.kappa == T::zero() {
            return;
        }
        let half = dt / T::of(2.0);
        let sixth = dt / T::of(6.0);
        let two = T::of(2.0);
        for (m, q) in field.minus.iter_mut().zip(field.plus.iter_mut()) {
            let (m0, p0) = (*m, *q);
            let (k1m, k1p) = nonlinear_rhs_at(m0, p0, p);
            let (k2m, k2p) = nonlinear_rhs_at(m0 + k1m.scale(half), p0 + k1p.scale(half), p);
            let (k3m, k3p) = nonlinear_rhs_at(m0 + k2m.scale(half), p0 + k2p.scale(half), p);
            let (k4m, k4p) = nonlinear_rhs_at(m0 + k3m.scale(dt), p0 + k3p.scale(dt), p);
            *m = m0 + (k1m + (k2m + k3m).scale(two) + k4m).scale(sixth);
            *q = p0 + (k1p + (k2p + k3p).scale(two) + k4p).scale(sixth);
        }
    }

    fn check_cfl(&self, field: &SpinorField<T>) -> Result<()> {
        let mut gmax = T::zero();
        for (m, q) in field.minus.iter().zip(&field.plus) {
            let g = coupling_matrix(*m, *q, &self.params);
            let row1 = Float::abs(g[0][0].re) + g[0][1].norm();
            let row2 = Float::abs(g[1][1].re) + g[1][0].norm();
            gmax = Float::max(gmax, Float::max(row1, row2));
        }
        let dt = Float::abs(self.params.dt);
        if dt * gmax > T::of(0.1) {
            return Err(Error::StepSize {
                dt: dt.to_f64_(),
                limit: (T::of(0.1) / gmax).to_f64_(),
            });
        }
        Ok(())
    }

    /// One Strang step: exact transport half-step, pointwise RK4 of the full
    /// nonlinear 2x2 flow, transport half-step.
    pub fn step(&mut self, field: &mut SpinorField<T>) -> Result<()> {
        self.check_cfl(field)?;
        self.apply_transport(field);
        self.rk4_nonlinear(field, self.params.dt);
        self.apply_transport(field);
        field.time += self.params.dt;
        Ok(())
    }
}

/// One Strang step with a fresh stepper (spectral transport plus pointwise
/// RK4 nonlinear substep).
pub fn nld_step<T: Real>(field: &SpinorField<T>, params: &NLDParams<T>) -> Result<SpinorField<T>> {
    let mut out = field.clone();
    NldStepper::new(field.grid, params.clone()).step(&mut out)?;
    Ok(out)
}

/// Evolves to `t_final`, returning snapshots at the requested sample times
/// (each reached exactly by shortening the final partial step). A diagnostic
/// `H^s` norm exceeding `blowup_factor` times its initial value aborts with
/// the blow-up time.
pub fn nld_evolve<T: Real>(
    field0: &SpinorField<T>,
    params: &NLDParams<T>,
    t_final: T,
    sample_times: &[T],
) -> Result<Vec<SpinorField<T>>> {
    if t_final < T::zero() {
        return Err(Error::invalid("t_final must be nonnegative"));
    }
    let tol = T::of(1e-12);
    if sample_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("sample times must be nondecreasing"));
    }
    if sample_times.iter().any(|&t| t < -tol || t > t_final + tol) {
        return Err(Error::invalid("sample times must lie in [0, t_final]"));
    }
    let mut cache = FftCache::new(field0.grid.n());
    let norm0 = field0.hs_norm_cached(params.s, &mut cache);
    let mut stepper = NldStepper::new(field0.grid, params.clone());
    let mut field = field0.clone();
    let start = field.time;
    let mut out = Vec::with_capacity(sample_times.len());
    for &ts in sample_times {
        let target = start + ts;
        loop {
            let remaining = target - field.time;
            if remaining <= tol {
                break;
            }
            if remaining >= params.dt - tol {
                stepper.step(&mut field)?;
            } else {
                // partial step to land exactly on the sample time
                let mut partial = NldStepper::new(
                    field.grid,
                    NLDParams {
                        dt: remaining,
                        ..params.clone()
                    },
                );
                partial.step(&mut field)?;
            }
            if norm0 > T::zero() {
                let ratio = field.hs_norm_cached(params.s, &mut cache) / norm0;
                if ratio > params.blowup_factor {
                    return Err(Error::BlowUp {
                        t: field.time.to_f64_(),
                        factor: ratio.to_f64_(),
                    });
                }
            }
        }
        field.time = target;
        out.push(field.clone());
    }
    Ok(out)
}

/// Full NLD right-hand side `d_t alpha` with the transport term evaluated
/// spectrally: `d_t alpha_- = +c_sharp d_x alpha_- - i kappa (G a)_-`,
/// `d_t alpha_+ = -c_sharp d_x alpha_+ - i kappa (G a)_+`.
pub fn nld_rhs<T: Real>(
    field: &SpinorField<T>,
    params: &NLDParams<T>,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let mut cache = FftCache::new(field.grid.n());
    let dm = crate::spectral::derivative(&field.grid, &field.minus, &mut cache);
    let dp = crate::spectral::derivative(&field.grid, &field.plus, &mut cache);
    let n = field.grid.n();
    let mut out_m = Vec::with_capacity(n);
    let mut out_p = Vec::with_capacity(n);
    for i in 0..n {
        let (nm, np) = nonlinear_rhs_at(field.minus[i], field.plus[i], params);
        out_m.push(dm[i].scale(params.c_sharp) + nm);
        out_p.push(dp[i].scale(-params.c_sharp) + np);
    }
    (out_m, out_p)
}

/// Conserved functional of the NLD flow (transport + quartic terms); exposed
/// as an empirical drift diagnostic.
pub fn nld_energy<T: Real>(field: &SpinorField<T>, params: &NLDParams<T>) -> T {
    let mut cache = FftCache::new(field.grid.n());
    let dm = crate::spectral::derivative(&field.grid, &field.minus, &mut cache);
    let dp = crate::spectral::derivative(&field.grid, &field.plus, &mut cache);
    let two = T::of(2.0);
    let four = T::of(4.0);
    let mut acc = T::zero();
    for i in 0..field.grid.n() {
        let (m, p) = (field.minus[i], field.plus[i]);
        let transport =
            -params.c_sharp * (m.conj() * dm[i]).im + params.c_sharp * (p.conj() * dp[i]).im;
        let m2 = m.norm_sqr();
        let p2 = p.norm_sqr();
        let cross = (m.conj() * m.conj() * p * p).re;
        let quartic = params.beta1 * (m2 * m2 + p2 * p2)
            + four * params.beta1 * m2 * p2
            + two * params.beta2 * cross;
        acc += transport + params.kappa / two * quartic;
    }
    acc * field.grid.dx()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid<f64> {
        TorusGrid::new(32, 256).unwrap()
    }

    fn params(c: f64, b1: f64, b2: f64, kappa: f64, dt: f64) -> NLDParams<f64> {
        NLDParams::new(c, b1, b2, kappa, dt, SobolevIndex::one()).unwrap()
    }

    fn gaussian(grid: TorusGrid<f64>, amp_m: f64, amp_p: f64) -> SpinorField<f64> {
        SpinorField::from_fns(
            grid,
            move |x| Complex::new(amp_m * (-x * x / 2.0).exp(), 0.0),
            move |x| Complex::new(amp_p * (-x * x / 4.0).exp(), 0.0),
        )
        .unwrap()
    }

    #[test]
    fn coupling_matrix_examples() {
        let p = params(1.0, 1.0, 0.0, 1.0, 1e-3);
        let g = coupling_matrix(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), &p);
        assert_eq!(g[0][0], Complex::new(1.0, 0.0));
        assert_eq!(g[1][1], Complex::new(2.0, 0.0));
        assert_eq!(g[0][1], Complex::new(0.0, 0.0));

        let g = coupling_matrix(Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), &p);
        for row in g {
            for v in row {
                assert_eq!(v, Complex::new(0.0, 0.0));
            }
        }

        let p = params(1.0, 1.0, 0.5, 1.0, 1e-3);
        let g = coupling_matrix(Complex::new(1.0, 0.0), Complex::new(0.0, 1.0), &p);
        assert_eq!(g[0][0], Complex::new(3.0, 0.0));
        assert_eq!(g[1][1], Complex::new(3.0, 0.0));
        assert!((g[0][1] - Complex::new(0.0, 0.5)).norm() < 1e-15);
        assert!((g[1][0] - Complex::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn mass_examples() {
        let g = TorusGrid::new(8, 64).unwrap();
        let zero =
            SpinorField::from_fns(g, |_| Complex::default(), |_| Complex::default()).unwrap();
        assert_eq!(zero.mass(), 0.0);
        let one =
            SpinorField::from_fns(g, |_| Complex::new(1.0, 0.0), |_| Complex::default()).unwrap();
        assert!((one.mass() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn multipliers_are_unitary() {
        let st = NldStepper::new(grid(), params(2.0 * PI, 1.0, 0.0, 1.0, 1e-2));
        assert!(st.multiplier_unitarity_defect() <= 1e-14);
    }

    #[test]
    fn kappa_zero_is_exact_transport() {
        // alpha_- is carried with velocity -c_sharp: alpha(t,x) = alpha0(x + c*t)
        let g = grid();
        let p = params(2.0 * PI, 1.0, 0.0, 0.0, 1.0 / 400.0);
        let f0 = gaussian(g, 1.0, 0.0);
        let t_final = 0.25;
        let snaps = nld_evolve(&f0, &p, t_final, &[t_final]).unwrap();
        let got = &snaps[0];
        // spectral translation of the initial data by c*t
        let mut cache = FftCache::new(g.n());
        let mut expected = f0.minus().to_vec();
        cache.forward(&mut expected);
        let shift = 2.0 * PI * t_final;
        for (j, v) in expected.iter_mut().enumerate() {
            *v *= Complex::from_polar(1.0, g.freq(j) * shift);
        }
        cache.inverse(&mut expected);
        let diff = SpinorField::new(
            g,
            got.minus()
                .iter()
                .zip(&expected)
                .map(|(a, b)| a - b)
                .collect(),
            vec![Complex::default(); g.n()],
            0.0,
        )
        .unwrap();
        let h1_err = diff.hs_norm(SobolevIndex::one());
        assert!(h1_err <= 1e-8, "transport H1 error {h1_err}");
        // the translated packet moved left by pi/2
        let peak = (0..g.n())
            .max_by(|&i, &j| {
                got.minus()[i]
                    .norm()
                    .partial_cmp(&got.minus()[j].norm())
                    .unwrap()
            })
            .unwrap();
        assert!((g.x(peak) + PI / 2.0).abs() < 0.2);
    }

    #[test]
    fn constant_data_phase_rotation() {
        // beta2 = 0: alpha_-(t) = a exp(-i kappa beta1 (|a|^2 + 2|b|^2) t)
        let g = grid();
        let (a, b) = (0.8, 0.5);
        let p = params(2.0 * PI, 1.3, 0.0, 1.0, 1.0 / 400.0);
        let f0 =
            SpinorField::from_fns(g, |_| Complex::new(a, 0.0), |_| Complex::new(b, 0.0)).unwrap();
        let snaps = nld_evolve(&f0, &p, 1.0, &[1.0]).unwrap();
        let expect_m = Complex::from_polar(a, -1.3 * (a * a + 2.0 * b * b));
        let expect_p = Complex::from_polar(b, -1.3 * (b * b + 2.0 * a * a));
        for (m, q) in snaps[0].minus().iter().zip(snaps[0].plus()) {
            assert!((m - expect_m).norm() <= 1e-8);
            assert!((q - expect_p).norm() <= 1e-8);
        }
    }

    #[test]
    fn pointwise_density_conserved_by_nonlinear_substep() {
        // constant data makes transport a no-op; beta2 != 0 mixes the
        // components, but G Hermitian keeps |a-|^2 + |a+|^2 pointwise.
        let g = grid();
        let p = params(2.0 * PI, 1.0, 0.5, 1.0, 1.0 / 400.0);
        let f0 = SpinorField::from_fns(g, |_| Complex::new(0.9, 0.2), |_| Complex::new(0.3, -0.4))
            .unwrap();
        let f1 = nld_step(&f0, &p).unwrap();
        for i in 0..g.n() {
            let d0 = f0.minus()[i].norm_sqr() + f0.plus()[i].norm_sqr();
            let d1 = f1.minus()[i].norm_sqr() + f1.plus()[i].norm_sqr();
            assert!(
                (d1 - d0).abs() <= 1e-12,
                "density drift {}",
                (d1 - d0).abs()
            );
        }
        // moduli are genuinely exchanged (the substep is not diagonal)
        assert!((f1.minus()[0].norm_sqr() - f0.minus()[0].norm_sqr()).abs() > 1e-9);
    }

    #[test]
    fn mass_conservation_and_energy_drift() {
        let g = grid();
        let p = params(6.26, 1.0035, -0.1264, 1.0, 1.0 / 400.0);
        let f0 = gaussian(g, 1.0, 0.5);
        let m0 = f0.mass();
        let e0 = nld_energy(&f0, &p);
        let snaps = nld_evolve(&f0, &p, 1.0, &[1.0]).unwrap();
        let m1 = snaps[0].mass();
        assert!(
            (m1 - m0).abs() / m0 <= 1e-10,
            "mass drift {}",
            (m1 - m0).abs() / m0
        );
        // empirical Hamiltonian drift (splitting artifact), reported loosely
        let e1 = nld_energy(&snaps[0], &p);
        assert!(
            (e1 - e0).abs() / e0.abs() <= 1e-4,
            "energy drift {}",
            (e1 - e0).abs()
        );
    }

    #[test]
    fn strang_self_convergence_order_two() {
        let g = grid();
        let f0 = gaussian(g, 1.0, 0.5);
        let run = |dt: f64| {
            let p = params(6.26, 1.0035, -0.1264, 1.0, dt);
            nld_evolve(&f0, &p, 1.0, &[1.0]).unwrap().remove(0)
        };
        let a = run(1e-2);
        let b = run(5e-3);
        let c = run(2.5e-3);
        let dist = |x: &SpinorField<f64>, y: &SpinorField<f64>| -> f64 {
            let mut acc = 0.0;
            for i in 0..x.grid().n() {
                acc += (x.minus()[i] - y.minus()[i]).norm_sqr()
                    + (x.plus()[i] - y.plus()[i]).norm_sqr();
            }
            (acc * x.grid().dx()).sqrt()
        };
        let order = (dist(&a, &b) / dist(&b, &c)).log2();
        assert!((order - 2.0).abs() <= 0.2, "splitting order {order}");
        // dt vs dt/2 self-difference ratio ~ 4
        let ratio = dist(&a, &b) / dist(&b, &c);
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn reversibility_and_gauge_covariance() {
        let g = grid();
        let f0 = gaussian(g, 1.0, 0.0);
        // kappa = 0 forward then backward returns the initial data
        let p = params(2.0 * PI, 1.0, 0.0, 0.0, 1.0 / 128.0);
        let mut f = f0.clone();
        let mut fwd = NldStepper::new(g, p.clone());
        for _ in 0..128 {
            fwd.step(&mut f).unwrap();
        }
        let pb = NLDParams {
            dt: -p.dt,
            ..p.clone()
        };
        let mut back = NldStepper::new(g, pb);
        for _ in 0..128 {
            back.step(&mut f).unwrap();
        }
        let mut worst: f64 = 0.0;
        for i in 0..g.n() {
            worst = worst.max((f.minus()[i] - f0.minus()[i]).norm());
        }
        assert!(worst <= 1e-11, "reversibility defect {worst}");

        // global phase commutes with the flow
        let p = params(6.26, 1.0, -0.12, 1.0, 1.0 / 400.0);
        let theta = 0.7;
        let rot = Complex::from_polar(1.0, theta);
        let f_rot = SpinorField::new(
            g,
            f0.minus().iter().map(|v| v * rot).collect(),
            f0.plus().iter().map(|v| v * rot).collect(),
            0.0,
        )
        .unwrap();
        let a = nld_evolve(&f0, &p, 0.5, &[0.5]).unwrap().remove(0);
        let b = nld_evolve(&f_rot, &p, 0.5, &[0.5]).unwrap().remove(0);
        let mut worst: f64 = 0.0;
        for i in 0..g.n() {
            worst = worst.max((a.minus()[i] * rot - b.minus()[i]).norm());
            worst = worst.max((a.plus()[i] * rot - b.plus()[i]).norm());
        }
        assert!(worst <= 1e-11, "gauge covariance defect {worst}");
    }

    #[test]
    fn evolve_edge_cases() {
        let g = grid();
        let p = params(1.0, 1.0, 0.0, 1.0, 1e-2);
        let f0 = gaussian(g, 1.0, 0.0);
        // T = 0 returns the initial field
        let snaps = nld_evolve(&f0, &p, 0.0, &[0.0]).unwrap();
        assert_eq!(snaps.len(), 1);
        for i in 0..g.n() {
            assert_eq!(snaps[0].minus()[i], f0.minus()[i]);
        }
        // bad sample times
        assert!(nld_evolve(&f0, &p, 1.0, &[2.0]).is_err());
        // CFL violation
        let pbad = params(1.0, 1.0, 0.0, 1.0, 1.0);
        assert!(matches!(nld_step(&f0, &pbad), Err(Error::StepSize { .. })));
    }

    #[test]
    fn f32_instantiation_smoke() {
        let g: TorusGrid<f32> = TorusGrid::new(8, 64).unwrap();
        let p = NLDParams::new(1.0f32, 1.0, 0.0, 1.0, 1e-2, SobolevIndex::one()).unwrap();
        let f0 = SpinorField::from_fns(
            g,
            |x: f32| Complex::new((-x * x / 2.0).exp(), 0.0),
            |_| Complex::default(),
        )
        .unwrap();
        let m0 = f0.mass();
        let out = nld_evolve(&f0, &p, 0.1, &[0.1]).unwrap();
        assert!((out[0].mass() - m0).abs() / m0 < 1e-4);
    }

    #[test]
    fn blowup_guard_fires() {
        let g = grid();
        let mut p = params(6.26, 1.0, -0.12, 1.0, 1.0 / 400.0);
        p.blowup_factor = 1.0 + 1e-9; // artificially tight
        let f0 = gaussian(g, 1.0, 0.5);
        assert!(matches!(
            nld_evolve(&f0, &p, 1.0, &[1.0]),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn rhs_examples_and_step_consistency() {
        let g = grid();
        let p = params(2.0 * PI, 1.0, 0.0, 0.0, 1e-4);
        // constant alpha, kappa = 0: rhs = 0
        let f = SpinorField::from_fns(g, |_| Complex::new(0.7, 0.1), |_| Complex::new(0.2, 0.0))
            .unwrap();
        let (rm, rp) = nld_rhs(&f, &p);
        for v in rm.iter().chain(&rp) {
            assert!(v.norm() < 1e-12);
        }
        // single mode: d_t alpha_- = +c_sharp (2*pi*i/L) alpha_-
        let l = 32.0;
        let f = SpinorField::from_fns(
            g,
            move |x| Complex::from_polar(1.0, 2.0 * PI * x / l),
            |_| Complex::default(),
        )
        .unwrap();
        let (rm, _) = nld_rhs(&f, &p);
        let k = 2.0 * PI / l;
        for (r, m) in rm.iter().zip(f.minus()) {
            let expect = Complex::new(0.0, 2.0 * PI * k) * m;
            assert!((r - expect).norm() < 1e-10);
        }
        // finite-difference consistency of the stepper with the rhs
        let p = params(6.26, 1.0035, -0.1264, 1.0, 1e-4);
        let f = gaussian(g, 1.0, 0.5);
        let f1 = nld_step(&f, &p).unwrap();
        let (rm, rp) = nld_rhs(&f, &p);
        let mut worst: f64 = 0.0;
        for i in 0..g.n() {
            let fd_m = (f1.minus()[i] - f.minus()[i]).unscale(p.dt);
            let fd_p = (f1.plus()[i] - f.plus()[i]).unscale(p.dt);
            worst = worst.max((fd_m - rm[i]).norm()).max((fd_p - rp[i]).norm());
        }
        // (step - id)/dt agrees with the rhs to O(dt) with an O(100) Lipschitz scale
        assert!(worst < 0.05, "stepper/rhs consistency defect {worst}");
    }
}
