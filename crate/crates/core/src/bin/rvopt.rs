use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use rvopt::certify::{
    check_tangential_condition, multiplier_certificate, qualification_check, scalarized_fan_certificate,
    CertificateStatus, Problem,
};
use rvopt::io::load_problem;
use rvopt::pareto::{descent_solve, grid_scan_weak_pareto, GridSpec};
use rvopt::regularity::{check_metric_increase, verify_error_bound, IncreaseGrid};
use rvopt::report::{run_report, ReportOptions};
use rvopt::{sampling, Error, Result};

/// Robust vector optimization under uncertain cone constraints.
#[derive(Parser)]
#[command(name = "rvopt", version, about)]
struct Cli {
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = sampling::DEFAULT_SEED)]
    seed: u64,
    /// Multiplies every numerical tolerance of the loaded problem.
    #[arg(
        long = "tol-scale",
        global = true,
        default_value_t = 1.0,
        allow_negative_numbers = true
    )]
    tol_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct At {
    /// Problem document.
    file: PathBuf,
    /// Reference point.
    #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
    at: Vec<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Merit value phi(x) = exc(G(x), C).
    Merit(At),
    /// Feasibility of a point; exits 2 when infeasible.
    Feasible(At),
    /// Sampled metric C-increase check at a given constant.
    Increase {
        #[command(flatten)]
        at: At,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
    },
    /// Grid check of the local error bound.
    Errorbound {
        #[command(flatten)]
        at: At,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        radius: f64,
        /// Nodes per axis.
        #[arg(long, default_value_t = 41)]
        res: usize,
    },
    /// First-order certificates at a point.
    Certify {
        #[command(flatten)]
        at: At,
        /// Treat the qualification condition as assumed.
        #[arg(long = "skip-cq")]
        skip_cq: bool,
    },
    /// Brute-force weak-Pareto scan over a box.
    Scan {
        file: PathBuf,
        /// Bounds as lo1 hi1 lo2 hi2 ...
        #[arg(long = "box", num_args = 2.., allow_negative_numbers = true, required = true)]
        bounds: Vec<f64>,
        /// Nodes per axis, one value or one per axis.
        #[arg(long, num_args = 1.., default_values_t = [41])]
        res: Vec<usize>,
        /// Write the node table as CSV ("-" for stdout).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Weighted pattern search on the penalized objective.
    Solve {
        file: PathBuf,
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        weights: Vec<f64>,
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        start: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
    /// Full analysis report.
    Report {
        #[command(flatten)]
        at: At,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "skip-cq")]
        skip_cq: bool,
    },
}

fn load(cli: &Cli, file: &PathBuf) -> Result<Problem> {
    let mut p = load_problem(file).map_err(|e| match e {
        Error::Io(io) => Error::Input(format!("{}: {io}", file.display())),
        e => e,
    })?;
    if cli.tol_scale != 1.0 {
        if !(cli.tol_scale > 0.0 && cli.tol_scale.is_finite()) {
            return Err(Error::Input("--tol-scale must be positive".into()));
        }
        p.tolerances = p.tolerances.scaled(cli.tol_scale);
    }
    Ok(p)
}

fn print(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("json values serialize");
    // a closed pipe (`rvopt ... | head`) is not an error
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn vec(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Merit(a) => {
            let p = load(cli, &a.file)?;
            let x = vec(&a.at);
            print(&json!({ "phi": p.merit(&x)?, "feasible": p.is_feasible(&x)? }));
            Ok(0)
        }
        Command::Feasible(a) => {
            let p = load(cli, &a.file)?;
            let x = vec(&a.at);
            let feasible = p.is_feasible(&x)?;
            print(&json!({ "feasible": feasible, "phi": p.merit(&x)? }));
            Ok(if feasible { 0 } else { 2 })
        }
        Command::Increase { at, alpha, delta } => {
            let p = load(cli, &at.file)?;
            let grid = IncreaseGrid {
                seed: cli.seed,
                ..Default::default()
            };
            let r = check_metric_increase(&p.g, &p.c, &p.s, &vec(&at.at), *alpha, *delta, &grid)?;
            print(&serde_json::to_value(&r).expect("serializable"));
            Ok(if r.pass { 0 } else { 3 })
        }
        Command::Errorbound { at, sigma, radius, res } => {
            let p = load(cli, &at.file)?;
            let r = verify_error_bound(&p.g, &p.c, &p.s, &vec(&at.at), *sigma, *radius, *res)?;
            print(&serde_json::to_value(&r).expect("serializable"));
            Ok(if r.pass { 0 } else { 2 })
        }
        Command::Certify { at, skip_cq } => {
            let p = load(cli, &at.file)?;
            let x = vec(&at.at);
            if !p.is_feasible(&x)? {
                print(&json!({ "feasible": false }));
                return Ok(2);
            }
            let fan = p.fan();
            let mult = multiplier_certificate(&p, &x, &fan)?;
            let scal = scalarized_fan_certificate(&p, &x, &fan)?;
            let tang = check_tangential_condition(&p, &x, &fan, 64, cli.seed)?;
            let qual = if *skip_cq {
                None
            } else {
                Some(qualification_check(&p, &fan, &x)?)
            };
            let qualified = qual.as_ref().is_none_or(|q| q.pass);
            print(&json!({
                "feasible": true,
                "multiplier": mult,
                "scalarized_fan": scal,
                "tangential": tang,
                "qualification": qual,
            }));
            let refuted = (qualified && mult.status == CertificateStatus::LpInfeasible)
                || scal.status == CertificateStatus::LpInfeasible
                || matches!(tang.status, CertificateStatus::Violated { .. });
            Ok(if refuted {
                2
            } else if mult.holds() {
                0
            } else {
                3
            })
        }
        Command::Scan { file, bounds, res, csv } => {
            let p = load(cli, file)?;
            if bounds.len() != 2 * p.n() {
                return Err(Error::Input(format!(
                    "--box needs {} values (lo hi per axis)",
                    2 * p.n()
                )));
            }
            let res = match res.len() {
                1 => vec![res[0]; p.n()],
                _ => res.clone(),
            };
            let lo = bounds.iter().step_by(2).copied().collect();
            let hi = bounds.iter().skip(1).step_by(2).copied().collect();
            let scan = grid_scan_weak_pareto(&p, &GridSpec::new(lo, hi, res)?)?;
            let count = |v: &[bool]| v.iter().filter(|&&b| b).count();
            match csv {
                Some(path) if path.as_os_str() == "-" => scan.write_csv(io::stdout().lock())?,
                Some(path) => scan.write_csv(BufWriter::new(File::create(path)?))?,
                None => {}
            }
            let summary = json!({
                "nodes": scan.len(),
                "feasible": count(&scan.feasible),
                "weak_efficient": count(&scan.weak_efficient),
                "efficient": count(&scan.efficient),
            });
            if matches!(csv, Some(path) if path.as_os_str() == "-") {
                eprintln!("{summary}");
            } else {
                print(&summary);
            }
            Ok(0)
        }
        Command::Solve {
            file,
            weights,
            start,
            ell,
            sigma,
            budget,
        } => {
            let p = load(cli, file)?;
            let r = descent_solve(&p, &vec(start), &vec(weights), *ell, *sigma, *budget)?;
            print(&serde_json::to_value(&r).expect("serializable"));
            Ok(0)
        }
        Command::Report { at, out, skip_cq } => {
            let p = load(cli, &at.file)?;
            let mut opts = ReportOptions::with_seed(cli.seed);
            opts.skip_cq = *skip_cq;
            let r = run_report(&p, &vec(&at.at), &opts)?;
            let text = r.to_json();
            match out {
                Some(path) => {
                    let mut f = BufWriter::new(File::create(path)?);
                    f.write_all(text.as_bytes())?;
                    f.flush()?;
                    let _ = writeln!(io::stdout().lock(), "{}", r.summary.headline);
                }
                None => {
                    let _ = io::stdout().lock().write_all(text.as_bytes());
                }
            }
            Ok(r.summary.verdict.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors must not collide with the refutation exit code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
