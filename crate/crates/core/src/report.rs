//! Report emission: `errors.csv` (per-sample errors, 15 significant digits),
//! `summary.json` (coefficients, fitted rate, per-eps sup errors, runtimes),
//! and optionally `bands.csv`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::RealField;
use serde::{Deserialize, Serialize};

use crate::bloch::solve_bands;
use crate::dirac::DiracSummary;
use crate::error::Result;
use crate::scalar::Real;
use crate::study::{StudyConfig, StudyReport};

#[derive(Serialize, Deserialize, Debug)]
pub struct SummaryJson {
    pub mu_star: f64,
    pub n_star: usize,
    pub c_sharp: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gap: f64,
    pub slope_residuals: crate::dirac::SlopeResiduals,
    pub potential: Vec<(u32, f64)>,
    pub kappa: f64,
    pub s: f64,
    pub t_star: f64,
    pub seed: u64,
    pub rate_p: Option<f64>,
    pub constant_c: Option<f64>,
    pub max_fit_residual: Option<f64>,
    /// Slopes between consecutive eps legs, largest eps first.
    pub pairwise_rates: Vec<f64>,
    /// Largest epsilon whose pairwise slope is already first order (>= 0.9).
    pub largest_epsilon_first_order: Option<f64>,
    pub per_epsilon: Vec<EpsSummary>,
    pub warning: Option<String>,
    pub total_runtime_secs: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct EpsSummary {
    pub inv_epsilon: u32,
    pub epsilon: f64,
    pub sup_error: Option<f64>,
    pub runtime_secs: f64,
    pub failure: Option<String>,
}

/// 15 significant digits, scientific.
pub fn sig15(v: f64) -> String {
    format!("{v:.14e}")
}

pub fn summary_of<T: Real>(report: &StudyReport<T>, cfg: &StudyConfig<T>) -> SummaryJson {
    let d: &DiracSummary = &report.dirac;
    let points: Vec<(f64, f64)> = report
        .runs
        .iter()
        .filter_map(|r| {
            r.sup_error
                .map(|e| (1.0 / f64::from(r.inv_epsilon), e.to_f64_()))
        })
        .collect();
    let pairwise_rates: Vec<f64> = points
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect();
    let largest_epsilon_first_order = points
        .windows(2)
        .zip(&pairwise_rates)
        .find(|(_, &p)| p >= 0.9)
        .map(|(w, _)| w[0].0);
    SummaryJson {
        mu_star: d.mu_star,
        n_star: d.n_star,
        c_sharp: d.c_sharp,
        beta1: d.beta1,
        beta2: d.beta2,
        gap: d.gap,
        slope_residuals: crate::dirac::SlopeResiduals {
            offsets: d.slope_residuals.offsets.clone(),
            r_minus: d.slope_residuals.r_minus.clone(),
            r_plus: d.slope_residuals.r_plus.clone(),
            slope_minus: d.slope_residuals.slope_minus.clone(),
            slope_plus: d.slope_residuals.slope_plus.clone(),
        },
        potential: cfg
            .potential
            .modes()
            .map(|(m, a)| (m, a.to_f64_()))
            .collect(),
        kappa: cfg.kappa.to_f64_(),
        s: cfg.s.value().to_f64_(),
        t_star: cfg.t_star.to_f64_(),
        seed: cfg.seed,
        rate_p: report.rate.map(|r| r.p.to_f64_()),
        constant_c: report.rate.map(|r| r.c.to_f64_()),
        max_fit_residual: report.rate.map(|r| r.max_residual.to_f64_()),
        pairwise_rates,
        largest_epsilon_first_order,
        per_epsilon: report
            .runs
            .iter()
            .map(|r| EpsSummary {
                inv_epsilon: r.inv_epsilon,
                epsilon: 1.0 / f64::from(r.inv_epsilon),
                sup_error: r.sup_error.map(|v| v.to_f64_()),
                runtime_secs: r.runtime_secs,
                failure: r.failure.clone(),
            })
            .collect(),
        warning: report.notice.clone(),
        total_runtime_secs: report.total_runtime_secs,
    }
}

/// Renders `errors.csv`: header `epsilon,t,w`, one row per sample of each
/// successful eps leg.
pub fn errors_csv<T: Real>(report: &StudyReport<T>) -> String {
    let mut out = String::from("epsilon,t,w\n");
    for run in &report.runs {
        if run.failure.is_some() {
            continue;
        }
        let eps = 1.0 / f64::from(run.inv_epsilon);
        for &(t, w) in &run.samples {
            let _ = writeln!(
                out,
                "{},{},{}",
                sig15(eps),
                sig15(t.to_f64_()),
                sig15(w.to_f64_())
            );
        }
    }
    out
}

/// Renders `bands.csv` over a uniform Brillouin-zone grid: `k,mu_1,...,mu_n`.
pub fn bands_csv<T: Real + RealField>(cfg: &StudyConfig<T>) -> Result<String> {
    let n_pts = cfg.bands_k_points.max(2);
    let ks: Vec<T> = (0..n_pts)
        .map(|i| T::TAU() * T::from_usize_(i) / T::from_usize_(n_pts - 1))
        .collect();
    let bs = solve_bands(&cfg.potential, &ks, cfg.bands_n_bands, cfg.m_trunc, false)?;
    let mut out = String::from("k");
    for n in 1..=cfg.bands_n_bands {
        let _ = write!(out, ",mu_{n}");
    }
    out.push('\n');
    for (idx, &k) in bs.k_grid().iter().enumerate() {
        let _ = write!(out, "{}", sig15(k.to_f64_()));
        for &mu in bs.bands_at(idx) {
            let _ = write!(out, ",{}", sig15(mu.to_f64_()));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes the report files into `out_dir` (created if missing); returns the
/// paths written.
pub fn emit_report<T: Real + RealField>(
    report: &StudyReport<T>,
    cfg: &StudyConfig<T>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let errors_path = out_dir.join("errors.csv");
    std::fs::write(&errors_path, errors_csv(report))?;
    written.push(errors_path);

    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary_of(report, cfg))
        .map_err(|e| crate::error::Error::NumericalFailure(format!("json: {e}")))?;
    std::fs::write(&summary_path, json)?;
    written.push(summary_path);

    if cfg.emit_bands {
        let bands_path = out_dir.join("bands.csv");
        std::fs::write(&bands_path, bands_csv(cfg)?)?;
        written.push(bands_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::{fit_rate, EpsRun, StudyReport};

    fn fake_report() -> StudyReport<f64> {
        let runs = vec![
            EpsRun {
                inv_epsilon: 8,
                samples: vec![(0.0, 0.01), (0.5, 0.25)],
                sup_error: Some(0.25),
                runtime_secs: 1.0,
                failure: None,
            },
            EpsRun {
                inv_epsilon: 16,
                samples: vec![(0.0, 0.005), (0.5, 0.125)],
                sup_error: Some(0.125),
                runtime_secs: 2.0,
                failure: None,
            },
        ];
        let rate = fit_rate(&[(1.0 / 8.0, 0.25), (1.0 / 16.0, 0.125)]).ok();
        StudyReport {
            dirac: crate::dirac::DiracSummary {
                mu_star: 9.76,
                n_star: 1,
                c_sharp: 6.26,
                beta1: 1.0035,
                beta2: -0.126,
                gap: 3e-12,
                slope_residuals: crate::dirac::SlopeResiduals {
                    offsets: vec![1e-3],
                    r_minus: vec![-1e-4],
                    r_plus: vec![1e-4],
                    slope_minus: vec![2e-4],
                    slope_plus: vec![2e-4],
                },
            },
            runs,
            rate,
            notice: None,
            total_runtime_secs: 3.0,
        }
    }

    #[test]
    fn csv_shape_and_precision() {
        let report = fake_report();
        let csv = errors_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epsilon,t,w");
        assert_eq!(lines.len(), 1 + 4); // header + |eps| * |samples|
        assert!(lines[1].starts_with("1.25000000000000e-1,"));
    }

    #[test]
    fn summary_roundtrip_reproduces_rate() {
        let report = fake_report();
        let cfg = StudyConfig::<f64>::default();
        let json = serde_json::to_string(&summary_of(&report, &cfg)).unwrap();
        let back: SummaryJson = serde_json::from_str(&json).unwrap();
        let pts: Vec<(f64, f64)> = back
            .per_epsilon
            .iter()
            .map(|e| (e.epsilon, e.sup_error.unwrap()))
            .collect();
        let refit = fit_rate(&pts).unwrap();
        assert!((refit.p - back.rate_p.unwrap()).abs() <= 1e-12);
        assert!((refit.c - back.constant_c.unwrap()).abs() <= 1e-12);
        assert_eq!(back.pairwise_rates.len(), 1);
        assert!((back.pairwise_rates[0] - 1.0).abs() <= 1e-12);
        assert_eq!(back.largest_epsilon_first_order, Some(0.125));
    }

    #[test]
    fn empty_report_carries_warning() {
        let report = StudyReport::<f64> {
            dirac: fake_report().dirac,
            runs: vec![EpsRun {
                inv_epsilon: 8,
                samples: Vec::new(),
                sup_error: None,
                runtime_secs: 0.1,
                failure: Some("norm blow-up at t = 0.2".into()),
            }],
            rate: None,
            notice: Some("fewer than two successful epsilon legs; rate fit skipped".into()),
            total_runtime_secs: 0.1,
        };
        let csv = errors_csv(&report);
        assert_eq!(csv, "epsilon,t,w\n");
        let cfg = StudyConfig::<f64>::default();
        let s = summary_of(&report, &cfg);
        assert!(s.warning.is_some());
        assert!(s.rate_p.is_none());
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = fake_report();
        let mut cfg = StudyConfig::<f64>::default();
        cfg.emit_bands = true;
        cfg.bands_k_points = 17;
        cfg.bands_n_bands = 3;
        let paths = emit_report(&report, &cfg, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        let bands = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
        assert!(bands.starts_with("k,mu_1,mu_2,mu_3\n"));
        assert_eq!(bands.lines().count(), 18);
        let _: SummaryJson = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("summary.json")).unwrap(),
        )
        .unwrap();
    }
}
