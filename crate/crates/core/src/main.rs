use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_complex::Complex;

use nlsdirac::dirac::dirac_point;
use nlsdirac::error::Result;
use nlsdirac::field::{SobolevIndex, WaveField};
use nlsdirac::grid::TorusGrid;
use nlsdirac::nld::{nld_evolve, NLDParams, SpinorField};
use nlsdirac::nls::{nls_evolve, NLSParams};
use nlsdirac::potential::PeriodicPotential;
use nlsdirac::report::{bands_csv, emit_report, sig15};
use nlsdirac::study::{run_convergence_study, StudyConfig};

#[derive(Parser)]
#[command(
    name = "nlsdirac",
    about = "Effective nonlinear Dirac dynamics of the 1-D periodic cubic Schrödinger equation",
    version
)]
struct Cli {
    /// Config file (key = value lines); built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for emitted files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed recorded in reports (the pipeline itself is deterministic).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dispersion bands over the Brillouin zone; writes bands.csv.
    Bands {
        /// Number of quasimomentum samples in [0, 2*pi].
        #[arg(long)]
        k_points: Option<usize>,
        /// Number of bands per sample.
        #[arg(long)]
        n_bands: Option<usize>,
    },
    /// Dirac point of the configured potential; prints a JSON record.
    Dirac,
    /// Evolve the effective nonlinear Dirac envelope; writes nld.csv.
    Nld {
        /// Transport coefficient; computed from the potential when omitted.
        #[arg(long)]
        c_sharp: Option<f64>,
        #[arg(long)]
        beta1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta2: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1.0 / 400.0)]
        dt: f64,
        /// Torus length of the envelope grid.
        #[arg(long, default_value_t = 32)]
        length: u32,
        /// Envelope grid points (power of two).
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Number of snapshot times (equispaced in [0, t_final]).
        #[arg(long, default_value_t = 6)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        amp_minus: f64,
        #[arg(long, default_value_t = 1.0)]
        width_minus: f64,
        #[arg(long, default_value_t = 0.0)]
        amp_plus: f64,
        #[arg(long, default_value_t = 1.0)]
        width_plus: f64,
    },
    /// Evolve the semiclassical NLS; writes nls.csv and conservation.csv.
    Nls {
        /// Value of 1/epsilon (positive even integer).
        #[arg(long, default_value_t = 16)]
        inv_epsilon: u32,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long, default_value_t = 0.5)]
        t_final: f64,
        /// Time step; defaults to eps/200.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 32)]
        length: u32,
        /// Grid points per eps-cell (fine grid has this * length / eps points).
        #[arg(long, default_value_t = 32)]
        points_per_cell: u32,
        /// Potential override, e.g. "2:5.0" (otherwise from config).
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, default_value_t = 6)]
        samples: usize,
        /// Gaussian envelope amplitude of the initial carrier wave packet.
        #[arg(long, default_value_t = 1.0)]
        amp: f64,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
    },
    /// Full convergence study; writes errors.csv and summary.json.
    Converge {
        /// Also write bands.csv.
        #[arg(long)]
        emit_bands: bool,
    },
}

fn load_config(cli: &Cli) -> Result<StudyConfig<f64>> {
    let mut cfg = match &cli.config {
        Some(path) => StudyConfig::from_file(path)?,
        None => StudyConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn sample_times(t_final: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![t_final];
    }
    (0..n)
        .map(|i| t_final * i as f64 / (n - 1) as f64)
        .collect()
}

fn write_out(dir: &PathBuf, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Bands { k_points, n_bands } => {
            let mut cfg = cfg;
            if let Some(kp) = k_points {
                cfg.bands_k_points = kp;
            }
            if let Some(nb) = n_bands {
                cfg.bands_n_bands = nb;
            }
            let path = write_out(&cli.out, "bands.csv", &bands_csv(&cfg)?)?;
            println!("wrote {}", path.display());
        }
        Command::Dirac => {
            let (dp, _) = dirac_point(&cfg.potential, cfg.m_trunc, cfg.n_hint)?;
            let json =
                serde_json::to_string_pretty(&dp.summary()).expect("dirac summary serializes");
            println!("{json}");
            let _ = write_out(&cli.out, "dirac.json", &json)?;
        }
        Command::Nld {
            c_sharp,
            beta1,
            beta2,
            kappa,
            t_final,
            dt,
            length,
            points,
            samples,
            amp_minus,
            width_minus,
            amp_plus,
            width_plus,
        } => {
            let (c_sharp, beta1, beta2) = match (c_sharp, beta1, beta2) {
                (Some(c), Some(b1), Some(b2)) => (c, b1, b2),
                _ => {
                    let (dp, _) = dirac_point(&cfg.potential, cfg.m_trunc, cfg.n_hint)?;
                    (
                        c_sharp.unwrap_or(dp.c_sharp),
                        beta1.unwrap_or(dp.beta1),
                        beta2.unwrap_or(dp.beta2),
                    )
                }
            };
            let grid = TorusGrid::new(length, points)?;
            let spinor = SpinorField::from_fns(
                grid,
                move |x: f64| {
                    Complex::new(
                        amp_minus * (-x * x / (2.0 * width_minus * width_minus)).exp(),
                        0.0,
                    )
                },
                move |x: f64| {
                    Complex::new(
                        amp_plus * (-x * x / (2.0 * width_plus * width_plus)).exp(),
                        0.0,
                    )
                },
            )?;
            let params = NLDParams::new(c_sharp, beta1, beta2, kappa, dt, SobolevIndex::one())?;
            let times = sample_times(t_final, samples);
            let snaps = nld_evolve(&spinor, &params, t_final, &times)?;
            let mut csv = String::from("t,x,re_minus,im_minus,re_plus,im_plus\n");
            for (snap, &t) in snaps.iter().zip(&times) {
                for (i, x) in grid.xs().enumerate() {
                    let m = snap.minus()[i];
                    let p = snap.plus()[i];
                    csv.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        sig15(t),
                        sig15(x),
                        sig15(m.re),
                        sig15(m.im),
                        sig15(p.re),
                        sig15(p.im)
                    ));
                }
            }
            let path = write_out(&cli.out, "nld.csv", &csv)?;
            println!("wrote {} ({} snapshots)", path.display(), snaps.len());
        }
        Command::Nls {
            inv_epsilon,
            kappa,
            t_final,
            dt,
            length,
            points_per_cell,
            potential,
            samples,
            amp,
            width,
        } => {
            let pot: PeriodicPotential<f64> = match potential {
                Some(spec) => spec.parse()?,
                None => cfg.potential.clone(),
            };
            let eps = 1.0 / f64::from(inv_epsilon);
            let dt = dt.unwrap_or(eps / 200.0);
            let n = points_per_cell as usize * length as usize * inv_epsilon as usize;
            let grid = TorusGrid::new(length, n)?;
            let params = NLSParams::new(inv_epsilon, kappa, pot, dt, grid)?;
            let psi0 = WaveField::from_fn(grid, eps, |x| {
                Complex::from_polar(
                    amp * (-x * x / (2.0 * width * width)).exp(),
                    -std::f64::consts::PI * x / eps,
                )
            })?;
            let times = sample_times(t_final, samples);
            let evolution = nls_evolve(&psi0, &params, t_final, &times)?;
            let mut csv = String::from("t,x,re,im\n");
            for (snap, &t) in evolution.snapshots.iter().zip(&times) {
                for (i, x) in grid.xs().enumerate() {
                    let v = snap.values()[i];
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        sig15(t),
                        sig15(x),
                        sig15(v.re),
                        sig15(v.im)
                    ));
                }
            }
            let path = write_out(&cli.out, "nls.csv", &csv)?;
            let mut log = String::from("t,mass,energy\n");
            for rec in &evolution.log {
                log.push_str(&format!(
                    "{},{},{}\n",
                    sig15(rec.t),
                    sig15(rec.mass),
                    sig15(rec.energy)
                ));
            }
            let log_path = write_out(&cli.out, "conservation.csv", &log)?;
            println!("wrote {} and {}", path.display(), log_path.display());
        }
        Command::Converge { emit_bands } => {
            let mut cfg = cfg;
            cfg.emit_bands = cfg.emit_bands || emit_bands;
            let report = run_convergence_study(&cfg)?;
            let paths = emit_report(&report, &cfg, &cli.out)?;
            for p in &paths {
                println!("wrote {}", p.display());
            }
            for leg in &report.runs {
                match (&leg.failure, leg.sup_error) {
                    (Some(f), _) => println!("1/eps = {:>3}: FAILED ({f})", leg.inv_epsilon),
                    (None, Some(e)) => println!(
                        "1/eps = {:>3}: sup_t w(t) = {:.6e}  [{:.1}s]",
                        leg.inv_epsilon, e, leg.runtime_secs
                    ),
                    _ => {}
                }
            }
            match report.rate {
                Some(rate) => println!(
                    "fitted rate p = {:.4}, C = {:.4} (max log residual {:.2e})",
                    rate.p, rate.c, rate.max_residual
                ),
                None => println!("{}", report.notice.unwrap_or_default()),
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            std::process::exit(if ok { 0 } else { 1 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
