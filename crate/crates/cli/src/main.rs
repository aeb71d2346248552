//! `cavlab` command-line entry point.
//!
//! Exit codes: 0 success, 1 failed check or pipeline error, 2 usage error
//! (bad arguments, unreadable or invalid config).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cavlab::artifacts::{self, ArtifactStore};
use cavlab::chart::{self, GasChart};
use cavlab::diagnostics::RunReport;
use cavlab::entropy::{convexity_check, SpecialGenerator};
use cavlab::kernel::{container, verify, GridSpec, KernelKind, KernelTransform};
use cavlab::{basis, run_sweep, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavlab", version, about = "Gas charts, entropy kernels and vanishing-viscosity runs for gamma = 3")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the gas chart (nu, rho, q, sigma, k, k', k'', M) as CSV.
    Tables {
        #[arg(long)]
        nu_star: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        nu_min: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Fourier-side basis recurrences; JSON report.
    BasisCheck {
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 60.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build or verify kernel tables.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Entropy generator checks.
    #[command(subcommand)]
    Entropy(EntropyCmd),
    /// Solve at a single viscosity and write the run directory.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Viscosity; defaults to the first entry of solver.epsilons.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run the viscosity sweep with diagnostics and write the run directory.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the sweep (or read an existing run) and fail on any check.
    Check {
        #[command(flatten)]
        run: RunArgs,
        /// Evaluate an existing run directory instead of solving.
        #[arg(long, conflicts_with_all = ["config", "out"])]
        run_dir: Option<PathBuf>,
    },
    /// Summarize the report of a run directory.
    Report {
        dir: PathBuf,
        /// Print the full JSON report.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    Build {
        #[arg(long, value_parser = parse_kind)]
        kind: KernelKind,
        #[arg(long)]
        nu_star: Option<f64>,
        /// Largest frequency in units of 1/k(nu_star).
        #[arg(long)]
        xi_max: Option<f64>,
        #[arg(long)]
        nu_points: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    Verify {
        table: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EntropyCmd {
    /// Convexity margins of the special generator over the invariant region.
    Check {
        #[arg(long, default_value_t = 0.9)]
        q_inf: f64,
        #[arg(long, default_value_t = 40)]
        nu_points: usize,
        #[arg(long, default_value_t = 41)]
        theta_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<KernelKind, String> {
    s.parse().map_err(|e: cavlab::CavError| e.to_string())
}

#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl fmt::Display) -> anyhow::Error {
    Usage(msg.to_string()).into()
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> Result<RunReport> {
    let store = ArtifactStore::create(&cfg.output_dir)?;
    let out = run_sweep(cfg, Some(&store))?;
    eprintln!("wrote {}", store.dir.display());
    Ok(out.report)
}

fn summarize(rep: &RunReport) -> String {
    let mut s = format!(
        "scheme {}  q_inf {}  h {}  bump {}  vertices {}\n",
        rep.scheme, rep.q_inf, rep.h_mesh, rep.bump_height, rep.n_vertices
    );
    s.push_str("epsilon      iters  min_q        max|theta|   dissipation  mass_res     curl_res\n");
    for r in &rep.records {
        s.push_str(&format!(
            "{:<12} {:>5}  {:<12.6e} {:<12.6e} {:<12.6e} {:<12.6e} {:<12.6e}\n",
            r.epsilon, r.iterations, r.min_q, r.max_abs_theta, r.dissipation, r.mass_residual, r.curl_residual
        ));
    }
    for c in &rep.checks {
        s.push_str(&format!(
            "{} {}: {:.6e} (threshold {:.6e})\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        ));
    }
    s.push_str(if rep.pass { "overall PASS\n" } else { "overall FAIL\n" });
    s
}

fn verdict(pass: bool) -> Outcome {
    if pass {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    }
}

fn run(cmd: Cmd) -> Result<Outcome> {
    match cmd {
        Cmd::Tables { nu_star, nu_min, points, out } => {
            let chart = match nu_star {
                Some(n) => GasChart::new(n).map_err(usage)?,
                None => GasChart::default(),
            };
            let rows = chart.table(nu_min, points).map_err(usage)?;
            emit(out.as_deref(), &artifacts::chart_csv(&rows)?)?;
            Ok(Outcome::Ok)
        }
        Cmd::BasisCheck { points, xi_max, tol, out } => {
            if points < 2 || !(xi_max > 0.0) {
                return Err(usage("basis-check needs --points >= 2 and --xi-max > 0"));
            }
            let grid: Vec<f64> = (0..points).map(|i| xi_max * (i + 1) as f64 / points as f64).collect();
            let rep = basis::check_recurrences(&grid, tol);
            emit(out.as_deref(), &json(&rep))?;
            Ok(verdict(rep.pass))
        }
        Cmd::Kernel(KernelCmd::Build { kind, nu_star, xi_max, nu_points, out }) => {
            let defaults = GridSpec::default();
            let spec = GridSpec {
                xi_max_factor: xi_max.unwrap_or(defaults.xi_max_factor),
                nu_points: nu_points.unwrap_or(defaults.nu_points),
                ..defaults
            };
            let nu_star = nu_star.unwrap_or(chart::NU_CR / 2.0);
            let kt = KernelTransform::build(nu_star, kind, &spec).map_err(|e| match e {
                cavlab::CavError::Domain { .. } | cavlab::CavError::Config(_) => usage(e),
                e => e.into(),
            })?;
            container::write_table(&out, &kt)?;
            eprintln!("wrote {} ({} kernel, nu_star {nu_star})", out.display(), kind.name());
            Ok(Outcome::Ok)
        }
        Cmd::Kernel(KernelCmd::Verify { table, out }) => {
            let kt = container::read_table(&table).with_context(|| format!("reading {}", table.display()))?;
            let rep = verify(&kt)?;
            emit(out.as_deref(), &json(&rep))?;
            Ok(verdict(rep.pass))
        }
        Cmd::Entropy(EntropyCmd::Check { q_inf, nu_points, theta_points, out }) => {
            if nu_points < 2 || theta_points < 2 {
                return Err(usage("entropy check needs at least two grid points per axis"));
            }
            let gen = SpecialGenerator::from_q_inf(q_inf).map_err(usage)?;
            let rho_inf = chart::rho_of_q(q_inf)?;
            let k_inf = chart::k_of_q(q_inf)?;
            let nus: Vec<f64> = (0..nu_points)
                .map(|i| chart::nu_of_rho(rho_inf * (i + 1) as f64 / nu_points as f64))
                .collect::<cavlab::Result<_>>()?;
            let ths: Vec<f64> = (0..theta_points)
                .map(|i| -k_inf + 2.0 * k_inf * i as f64 / (theta_points - 1) as f64)
                .collect();
            let rep = convexity_check(&gen, &nus, &ths)?;
            emit(out.as_deref(), &artifacts::convexity_csv(&rep)?)?;
            eprintln!(
                "{}: margin1 {:.6e}, margin2 {:.6e}, admissible {}",
                rep.generator, rep.margin1, rep.margin2, rep.admissible
            );
            Ok(verdict(rep.admissible))
        }
        Cmd::Solve { run, eps } => {
            let mut cfg = load_config(&run)?;
            let e = eps.unwrap_or(cfg.solver.epsilons[0]);
            cfg.solver.epsilons = vec![e];
            cfg.validate().map_err(usage)?;
            let rep = execute(&cfg)?;
            print!("{}", summarize(&rep));
            Ok(Outcome::Ok)
        }
        Cmd::Sweep { run } => {
            let rep = execute(&load_config(&run)?)?;
            print!("{}", summarize(&rep));
            Ok(Outcome::Ok)
        }
        Cmd::Check { run, run_dir } => {
            let rep = match run_dir {
                Some(d) => ArtifactStore::open(&d).map_err(usage)?.report()?,
                None => execute(&load_config(&run)?)?,
            };
            print!("{}", summarize(&rep));
            for c in rep.checks.iter().filter(|c| !c.pass) {
                eprintln!("check failed: {} = {:.6e} (threshold {:.6e})", c.name, c.value, c.threshold);
            }
            Ok(verdict(rep.pass))
        }
        Cmd::Report { dir, json: full } => {
            let rep = ArtifactStore::open(&dir).map_err(usage)?.report()?;
            if full {
                print!("{}", rep.to_json());
            } else {
                print!("{}", summarize(&rep));
            }
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.cmd) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 2 } else { 1 })
        }
    }
}
