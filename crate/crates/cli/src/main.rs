//! Command-line front end for the Newton convergence certification engine.
//!
//! Subcommands:
//! - `certify <file>`: run all convergence criteria on a problem and print
//!   the certificate table (exit 0 when the fixed-point condition passes,
//!   2 when it fails, 1 on operational errors).
//! - `run <file>`: execute the (certified) Newton iteration, audit every
//!   step against the majorant envelope, and optionally dump a trace CSV.
//! - `sweep`: map out which criteria pass over a grid of (l0/l, l*eta).

mod report;
mod sweep;

use clap::{Parser, Subcommand, ValueEnum};
use newton_cert::{
    check_argyros, check_kantorovich, check_new_general, criteria::critical_ratio, eta_of,
    load_problem_file, run_certified, run_uncertified, AuditMode, Certificate, ComparisonVerdict,
    ContinuityModulus, Error, LipschitzPair, LoadedProblem, MajorantModel, Result, RunOptions,
};
use report::{CertificateReport, ComparisonReport, Report, TraceSummary};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "newton-cert",
    version,
    about = "A priori convergence certification for Newton's method"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the convergence criteria for a problem without iterating.
    Certify {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Continuity modulus file (JSON); overrides the analytic modulus.
        #[arg(long)]
        modulus: Option<PathBuf>,
        /// Upward override of eta (values below the computed minimum are
        /// ignored with a warning).
        #[arg(long)]
        eta: Option<f64>,
        /// Write the machine-readable report to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the Newton iteration (certified unless --uncertified).
    Run {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Skip the certificate gate and the per-step audits.
        #[arg(long)]
        uncertified: bool,
        /// Iteration budget.
        #[arg(long = "max-iter", default_value_t = 100)]
        max_iter: usize,
        /// Residual stop tolerance.
        #[arg(long = "tol", default_value_t = 1e-12)]
        tol: f64,
        /// Write the per-iterate trace CSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// strict: stop on the first audit violation; record: log and go on.
        #[arg(long, value_enum, default_value_t = AuditArg::Strict)]
        audit: AuditArg,
        /// Continuity modulus file (JSON); overrides the analytic modulus.
        #[arg(long)]
        modulus: Option<PathBuf>,
        /// Upward override of eta.
        #[arg(long)]
        eta: Option<f64>,
        /// Write the machine-readable report to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate the criteria over a grid of (l0/l, l*eta) cells.
    Sweep {
        /// Ratio grid l0/l as a:b:step, values in (0, 1].
        #[arg(long)]
        ratio: String,
        /// l*eta grid as a:b:step.
        #[arg(long)]
        leta: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AuditArg {
    Strict,
    Record,
}

impl From<AuditArg> for AuditMode {
    fn from(a: AuditArg) -> Self {
        match a {
            AuditArg::Strict => AuditMode::Strict,
            AuditArg::Record => AuditMode::Record,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli.command {
        Command::Certify {
            problem,
            modulus,
            eta,
            json,
        } => cmd_certify(&problem, modulus.as_deref(), eta, json.as_deref()),
        Command::Run {
            problem,
            uncertified,
            max_iter,
            tol,
            trace,
            audit,
            modulus,
            eta,
            json,
        } => cmd_run(
            &problem,
            uncertified,
            max_iter,
            tol,
            trace.as_deref(),
            audit.into(),
            modulus.as_deref(),
            eta,
            json.as_deref(),
        ),
        Command::Sweep { ratio, leta, out } => cmd_sweep(&ratio, &leta, out.as_deref()),
    };
    std::process::exit(code);
}

/// Modulus priority: explicit file, then the problem's analytic modulus.
fn resolve_modulus(
    problem: &LoadedProblem,
    override_path: Option<&Path>,
) -> Result<ContinuityModulus> {
    if let Some(path) = override_path {
        return newton_cert::modulus::load_modulus_file(path);
    }
    problem.analytic_modulus.clone().ok_or_else(|| {
        Error::InvalidInput(
            "problem has no analytic modulus; pass one with --modulus <file>".into(),
        )
    })
}

/// Eta is computed from the problem and may only be overridden upward.
fn resolve_eta(problem: &LoadedProblem, override_eta: Option<f64>) -> Result<f64> {
    let minimum = eta_of(&problem.system)?;
    match override_eta {
        None => Ok(minimum),
        Some(eta) if eta >= minimum => Ok(eta),
        Some(eta) => {
            eprintln!(
                "warning: --eta {eta} is below the first Newton step length {minimum}; using {minimum}"
            );
            Ok(minimum)
        }
    }
}

/// The Lipschitz pair for the Kantorovich check and the ratio comparison.
/// Analytic constants win; a linear modulus without a known full Lipschitz
/// constant falls back to l = l0, flagged in the certificate diagnostics.
fn resolve_pair(
    problem: &LoadedProblem,
    modulus: &ContinuityModulus,
) -> Option<(LipschitzPair, bool)> {
    if let (Some(l0), Some(l)) = (problem.analytic_l0, problem.analytic_l) {
        if let Ok(pair) = LipschitzPair::new(l0, l) {
            return Some((pair, false));
        }
    }
    if let ContinuityModulus::Linear { l0 } = modulus {
        if let Ok(pair) = LipschitzPair::new(*l0, *l0) {
            return Some((pair, true));
        }
    }
    None
}

struct Certification {
    report: Report,
    new_condition_passed: bool,
    model: MajorantModel,
}

fn certify_problem(
    problem: &LoadedProblem,
    modulus_path: Option<&Path>,
    eta_override: Option<f64>,
) -> Result<Certification> {
    let modulus = resolve_modulus(problem, modulus_path)?;
    let eta = resolve_eta(problem, eta_override)?;
    let radius = problem.system.radius();
    let model = MajorantModel::new(modulus.clone(), eta, radius)?;

    let mut certificates: Vec<Certificate> = Vec::new();
    let pair = resolve_pair(problem, &modulus);
    if let Some((pair, assumed)) = &pair {
        let mut kantorovich = check_kantorovich(pair, eta);
        if *assumed {
            kantorovich
                .diagnostics
                .push(("l_assumed_equal_l0".into(), 1.0));
        }
        certificates.push(kantorovich);
    }
    let new_condition = check_new_general(&model);
    let new_condition_passed = new_condition.passed;
    certificates.push(new_condition);
    certificates.push(check_argyros(&model));

    let comparison = pair.and_then(|(pair, _)| {
        (pair.l() > 0.0).then(|| {
            let ratio = pair.ratio();
            ComparisonReport::from(&ComparisonVerdict {
                ratio,
                critical_ratio: critical_ratio(),
                new_weaker_than_kantorovich: ratio < critical_ratio(),
            })
        })
    });

    let report = Report {
        problem_name: problem.system.name().to_string(),
        eta,
        modulus_description: modulus.describe(),
        certificates: certificates.iter().map(CertificateReport::from).collect(),
        comparison,
        trace_summary: None,
    };
    Ok(Certification {
        report,
        new_condition_passed,
        model,
    })
}

fn cmd_certify(
    problem_path: &Path,
    modulus_path: Option<&Path>,
    eta_override: Option<f64>,
    json_path: Option<&Path>,
) -> i32 {
    let outcome = (|| -> Result<(Report, bool)> {
        let problem = load_problem_file(problem_path)?;
        let certification = certify_problem(&problem, modulus_path, eta_override)?;
        Ok((certification.report, certification.new_condition_passed))
    })();
    match outcome {
        Ok((report, passed)) => {
            print!("{}", report::render_table(&report));
            if let Some(path) = json_path {
                if let Err(e) = std::fs::write(path, report::to_json(&report)) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return 1;
                }
            }
            if passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    problem_path: &Path,
    uncertified: bool,
    max_iter: usize,
    tol: f64,
    trace_path: Option<&Path>,
    audit_mode: AuditMode,
    modulus_path: Option<&Path>,
    eta_override: Option<f64>,
    json_path: Option<&Path>,
) -> i32 {
    let outcome = (|| -> Result<(Report, newton_cert::NewtonTrace)> {
        let problem = load_problem_file(problem_path)?;
        let opts = RunOptions {
            max_iterations: max_iter,
            residual_tol: tol,
            audit_mode,
            ..RunOptions::default()
        };
        if uncertified {
            let trace = run_uncertified(&problem.system, &opts)?;
            let report = Report {
                problem_name: problem.system.name().to_string(),
                eta: eta_of(&problem.system)?,
                modulus_description: "(uncertified run)".into(),
                certificates: Vec::new(),
                comparison: None,
                trace_summary: Some(TraceSummary::from_trace(&trace)),
            };
            Ok((report, trace))
        } else {
            let certification = certify_problem(&problem, modulus_path, eta_override)?;
            let trace = run_certified(&problem.system, &certification.model, &opts)?;
            let mut report = certification.report;
            report.trace_summary = Some(TraceSummary::from_trace(&trace));
            Ok((report, trace))
        }
    })();
    match outcome {
        Ok((report, trace)) => {
            print!("{}", report::render_table(&report));
            for warning in &trace.warnings {
                eprintln!("warning: {warning}");
            }
            if let Some(path) = trace_path {
                let mut buffer = Vec::new();
                if let Err(e) = report::write_trace_csv(&mut buffer, &trace) {
                    eprintln!("error: cannot render trace: {e}");
                    return 1;
                }
                if let Err(e) = std::fs::write(path, buffer) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return 1;
                }
            }
            if let Some(path) = json_path {
                if let Err(e) = std::fs::write(path, report::to_json(&report)) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return 1;
                }
            }
            0
        }
        Err(Error::NotCertified(reason)) => {
            eprintln!("not certified: {reason}");
            eprintln!("hint: rerun with --uncertified or --audit record to iterate anyway");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_sweep(ratio_spec: &str, leta_spec: &str, out_path: Option<&Path>) -> i32 {
    let outcome = (|| -> Result<String> {
        let ratio_grid = sweep::parse_grid(ratio_spec)?;
        let leta_grid = sweep::parse_grid(leta_spec)?;
        sweep::run_sweep(&ratio_grid, &leta_grid)
    })();
    match outcome {
        Ok(csv) => {
            match out_path {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, csv) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 1;
                    }
                }
                None => print!("{csv}"),
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
