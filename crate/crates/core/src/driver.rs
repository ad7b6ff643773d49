//! Certified Newton runs: iterate x_{k+1} = x_k - F'(x_k)^-1 F(x_k) while
//! auditing, at every step, the guarantees the certificate promised -- the
//! step-norm bound ||x_{k+1} - x_k|| <= v_{k+1} - v_k and containment of all
//! iterates in the ball of radius v* around x0 -- and record a full trace.
//!
//! The majorant sequence is precomputed before the Newton loop, so audit
//! failures are attributable: the scalar sequence is fixed data by the time
//! the vector iteration runs.

use crate::criteria::check_new_general;
use crate::error::{Error, Result};
use crate::majorant::{MajorantModel, DEFAULT_SEQUENCE_CAP};
use crate::numerics::Vector;
use crate::problem::{eta_of, newton_step, NonlinearSystem};

/// Slack factor absorbing the proxy error of using the final iterate for the
/// true solution, and roundoff in the scalar sequence.
const AUDIT_SLACK: f64 = 1e-9;

/// What to do when a step breaks an audited bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMode {
    /// Stop the run at the first violated bound.
    Strict,
    /// Log the violation and keep iterating (for studying near-boundary
    /// behavior empirically).
    Record,
}

/// Options for a Newton run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_iterations: usize,
    pub residual_tol: f64,
    pub step_tol: f64,
    pub audit_mode: AuditMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_iterations: 100,
            residual_tol: 1e-12,
            step_tol: 1e-14,
            audit_mode: AuditMode::Strict,
        }
    }
}

impl RunOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.residual_tol > 0.0) || !(self.step_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    /// Residual fell to the stop tolerance.
    ConvergedToRoot,
    /// Strict mode only: a step broke an audited bound.
    AuditViolation,
    /// The Jacobian became numerically singular mid-run.
    SingularJacobian,
    /// Iteration budget exhausted (or the step stalled above tolerance).
    MaxIterations,
}

/// Audit record for one Newton step.
#[derive(Debug, Clone, Copy)]
pub struct StepAudit {
    /// `||x_{k+1} - x_k|| <= v_{k+1} - v_k` (with slack).
    pub step_bound_ok: bool,
    /// `||x_{k+1} - x0|| <= v*` (with slack).
    pub ball_ok: bool,
}

/// Full record of a Newton run.
#[derive(Debug, Clone)]
pub struct NewtonTrace {
    pub iterates: Vec<Vector>,
    /// `||x_{k+1} - x_k||`, one per step.
    pub step_norms: Vec<f64>,
    /// `||F(x_k)||`, one per iterate.
    pub residual_norms: Vec<f64>,
    /// Majorant values aligned with the iterates (empty for uncertified
    /// runs).
    pub majorant_values: Vec<f64>,
    /// One audit per step (empty for uncertified runs).
    pub audits: Vec<StepAudit>,
    pub status: TerminalStatus,
    /// Final iterate when the run converged to the residual tolerance.
    pub x_star: Option<Vector>,
    /// Certified radius of the enclosing ball around x0, when certified.
    pub v_star: Option<f64>,
    /// A priori bound `v* - v_K` on the distance from the final iterate to
    /// the true solution, when certified.
    pub final_error_bound: Option<f64>,
    pub warnings: Vec<String>,
}

impl NewtonTrace {
    /// True when every recorded audit passed.
    pub fn audits_passed(&self) -> bool {
        self.audits.iter().all(|a| a.step_bound_ok && a.ball_ok)
    }

    pub fn iterations(&self) -> usize {
        self.step_norms.len()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&f64::NAN)
    }
}

/// Runs Newton with the theorem's per-step audits against the precomputed
/// majorant sequence.
///
/// Requires `model.eta >= eta_of(sys)` and a passing certificate from
/// [`check_new_general`]; in `Strict` mode both are hard errors
/// ([`Error::NotCertified`]), in `Record` mode they downgrade to warnings
/// and the run proceeds without a guarantee.
pub fn run_certified(
    sys: &NonlinearSystem,
    model: &MajorantModel,
    opts: &RunOptions,
) -> Result<NewtonTrace> {
    opts.validate()?;
    let mut warnings = Vec::new();

    let eta_floor = eta_of(sys)?;
    if model.eta() < eta_floor - 1e-12 * eta_floor.max(1.0) {
        let message = format!(
            "model eta = {} is below the first Newton step length {}",
            model.eta(),
            eta_floor
        );
        if opts.audit_mode == AuditMode::Strict {
            return Err(Error::NotCertified(message));
        }
        warnings.push(message);
    }

    let certificate = check_new_general(model);
    if !certificate.passed {
        let message = format!(
            "no minimal fixed point of the majorant update in ]eta, R] (eta = {}, eta_max = {})",
            model.eta(),
            certificate.eta_max
        );
        if opts.audit_mode == AuditMode::Strict {
            return Err(Error::NotCertified(message));
        }
        warnings.push(message);
    }
    let v_star = certificate.v_star;

    let sequence = model.majorant_sequence(DEFAULT_SEQUENCE_CAP);
    let mut majorant_values = sequence.values;
    majorant_values.truncate(opts.max_iterations + 2);
    // Reference scale for audit slack and gap computations.
    let v_reference = v_star
        .or(majorant_values.last().copied())
        .unwrap_or(0.0);
    let v_at = |k: usize| -> f64 {
        majorant_values
            .get(k)
            .copied()
            .unwrap_or(v_reference)
    };

    let x0 = sys.x0().clone();
    let mut iterates = vec![x0.clone()];
    let mut residual_norms = vec![sys.eval_f(&x0)?.norm_inf()];
    let mut step_norms: Vec<f64> = Vec::new();
    let mut audits: Vec<StepAudit> = Vec::new();

    let status = loop {
        let k = iterates.len() - 1;
        if residual_norms[k] <= opts.residual_tol {
            break TerminalStatus::ConvergedToRoot;
        }
        if k >= opts.max_iterations {
            break TerminalStatus::MaxIterations;
        }
        let current = iterates.last().unwrap();
        let next = match newton_step(sys, current) {
            Ok(x) => x,
            Err(Error::SingularMatrix) => break TerminalStatus::SingularJacobian,
            Err(e) => return Err(e),
        };
        let step_norm = next.sub(current).norm_inf();
        let slack = AUDIT_SLACK * v_reference.max(1.0);
        let audit = StepAudit {
            step_bound_ok: step_norm <= (v_at(k + 1) - v_at(k)) + slack,
            ball_ok: next.sub(&x0).norm_inf() <= v_reference + slack,
        };
        audits.push(audit);
        step_norms.push(step_norm);
        residual_norms.push(sys.eval_f(&next)?.norm_inf());
        iterates.push(next);
        if opts.audit_mode == AuditMode::Strict && !(audit.step_bound_ok && audit.ball_ok) {
            break TerminalStatus::AuditViolation;
        }
        if step_norm <= opts.step_tol && residual_norms[k + 1] > opts.residual_tol {
            warnings.push(format!(
                "step stalled at {step_norm:.3e} with residual {:.3e} above tolerance",
                residual_norms[k + 1]
            ));
            break TerminalStatus::MaxIterations;
        }
    };

    let x_star = (status == TerminalStatus::ConvergedToRoot)
        .then(|| iterates.last().unwrap().clone());
    let final_error_bound = v_star.map(|v| (v - v_at(iterates.len() - 1)).max(0.0));

    Ok(NewtonTrace {
        iterates,
        step_norms,
        residual_norms,
        majorant_values,
        audits,
        status,
        x_star,
        v_star,
        final_error_bound,
        warnings,
    })
}

/// Plain Newton without the certificate gate or the audits; for comparison
/// runs on problems outside every certificate.
pub fn run_uncertified(sys: &NonlinearSystem, opts: &RunOptions) -> Result<NewtonTrace> {
    opts.validate()?;
    let x0 = sys.x0().clone();
    let mut iterates = vec![x0.clone()];
    let mut residual_norms = vec![sys.eval_f(&x0)?.norm_inf()];
    let mut step_norms: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();

    let status = loop {
        let k = iterates.len() - 1;
        if residual_norms[k] <= opts.residual_tol {
            break TerminalStatus::ConvergedToRoot;
        }
        if k >= opts.max_iterations {
            break TerminalStatus::MaxIterations;
        }
        let current = iterates.last().unwrap();
        let next = match newton_step(sys, current) {
            Ok(x) => x,
            Err(Error::SingularMatrix) => break TerminalStatus::SingularJacobian,
            Err(e) => return Err(e),
        };
        let step_norm = next.sub(current).norm_inf();
        step_norms.push(step_norm);
        residual_norms.push(sys.eval_f(&next)?.norm_inf());
        iterates.push(next);
        if step_norm <= opts.step_tol && residual_norms[k + 1] > opts.residual_tol {
            warnings.push(format!(
                "step stalled at {step_norm:.3e} with residual {:.3e} above tolerance",
                residual_norms[k + 1]
            ));
            break TerminalStatus::MaxIterations;
        }
    };

    let x_star = (status == TerminalStatus::ConvergedToRoot)
        .then(|| iterates.last().unwrap().clone());

    Ok(NewtonTrace {
        iterates,
        step_norms,
        residual_norms,
        majorant_values: Vec::new(),
        audits: Vec::new(),
        status,
        x_star,
        v_star: None,
        final_error_bound: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::MajorantModel;
    use crate::modulus::ContinuityModulus;
    use crate::problem::{load_builtin, load_builtin_configured};

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    fn analytic_model(name: &str) -> (crate::problem::BuiltinProblem, MajorantModel) {
        let p = load_builtin(name).unwrap();
        let eta = eta_of(&p.system).unwrap();
        let model =
            MajorantModel::new(p.analytic_modulus.clone(), eta, p.system.radius()).unwrap();
        (p, model)
    }

    #[test]
    fn affine_converges_in_one_step() {
        let (p, model) = analytic_model("affine");
        let trace = run_certified(&p.system, &model, &RunOptions::default()).unwrap();
        assert_eq!(trace.status, TerminalStatus::ConvergedToRoot);
        assert_eq!(trace.iterations(), 1);
        assert!(trace.audits_passed());
        let x = trace.x_star.unwrap();
        assert_close(x[0], 1.0, 1e-12);
        assert_close(x[1], -1.0, 1e-12);
    }

    #[test]
    fn scalar_sqrt2_certified_run() {
        let (p, model) = analytic_model("scalar-sqrt2");
        let trace = run_certified(&p.system, &model, &RunOptions::default()).unwrap();
        assert_eq!(trace.status, TerminalStatus::ConvergedToRoot);
        assert!(trace.audits_passed());
        assert!(trace.warnings.is_empty());
        assert_close(trace.x_star.unwrap()[0], std::f64::consts::SQRT_2, 1e-12);
        let v_star = trace.v_star.unwrap();
        for x in &trace.iterates {
            assert!(x.sub(p.system.x0()).norm_inf() <= v_star + 1e-9);
        }
        assert!(trace.final_error_bound.unwrap() >= 0.0);
    }

    #[test]
    fn distance_to_limit_bounded_by_majorant_gap() {
        let (p, model) = analytic_model("2d-quadratic");
        let trace = run_certified(&p.system, &model, &RunOptions::default()).unwrap();
        assert_eq!(trace.status, TerminalStatus::ConvergedToRoot);
        let x_final = trace.x_star.as_ref().unwrap();
        let v_star = trace.v_star.unwrap();
        for (k, x) in trace.iterates.iter().enumerate() {
            let gap = v_star - trace.majorant_values.get(k).copied().unwrap_or(v_star);
            assert!(
                x_final.sub(x).norm_inf() <= gap + 1e-9,
                "limit audit fails at k={k}"
            );
        }
    }

    #[test]
    fn uncertified_start_rejected_in_strict_mode() {
        let p = load_builtin_configured("scalar-sqrt2", Some(&[1.0]), None).unwrap();
        let eta = eta_of(&p.system).unwrap();
        let model =
            MajorantModel::new(p.analytic_modulus.clone(), eta, p.system.radius()).unwrap();
        let result = run_certified(&p.system, &model, &RunOptions::default());
        assert!(matches!(result, Err(Error::NotCertified(_))));
    }

    #[test]
    fn record_mode_runs_without_certificate() {
        let p = load_builtin_configured("scalar-sqrt2", Some(&[1.0]), None).unwrap();
        let eta = eta_of(&p.system).unwrap();
        let model =
            MajorantModel::new(p.analytic_modulus.clone(), eta, p.system.radius()).unwrap();
        let opts = RunOptions {
            audit_mode: AuditMode::Record,
            ..RunOptions::default()
        };
        let trace = run_certified(&p.system, &model, &opts).unwrap();
        assert!(!trace.warnings.is_empty());
        // Newton still converges here; only the guarantee is missing.
        assert_eq!(trace.status, TerminalStatus::ConvergedToRoot);
    }

    #[test]
    fn underreported_eta_rejected() {
        let (p, model) = analytic_model("scalar-sqrt2");
        let lowball = model.with_eta(model.eta() / 2.0).unwrap();
        assert!(matches!(
            run_certified(&p.system, &lowball, &RunOptions::default()),
            Err(Error::NotCertified(_))
        ));
    }

    #[test]
    fn uncertified_newton_still_converges() {
        let p = load_builtin_configured("scalar-sqrt2", Some(&[1.0]), None).unwrap();
        let trace = run_uncertified(&p.system, &RunOptions::default()).unwrap();
        assert_eq!(trace.status, TerminalStatus::ConvergedToRoot);
        assert_close(trace.x_star.unwrap()[0], std::f64::consts::SQRT_2, 1e-12);
        assert!(trace.majorant_values.is_empty());
        assert!(trace.audits.is_empty());
    }

    #[test]
    fn max_iterations_status() {
        let (p, model) = analytic_model("scalar-sqrt2");
        let opts = RunOptions {
            max_iterations: 1,
            ..RunOptions::default()
        };
        let trace = run_certified(&p.system, &model, &opts).unwrap();
        assert_eq!(trace.status, TerminalStatus::MaxIterations);
        assert_eq!(trace.iterations(), 1);
    }

    #[test]
    fn invalid_options_rejected() {
        let (p, model) = analytic_model("affine");
        let opts = RunOptions {
            residual_tol: 0.0,
            ..RunOptions::default()
        };
        assert!(run_certified(&p.system, &model, &opts).is_err());
    }

    #[test]
    fn zero_modulus_model_with_large_radius_allows_any_start() {
        // eta = 1 on the affine problem: certificate is degenerate but the
        // run is exact after one step.
        let p = load_builtin("affine").unwrap();
        let model = MajorantModel::new(
            ContinuityModulus::linear(0.0).unwrap(),
            eta_of(&p.system).unwrap(),
            p.system.radius(),
        )
        .unwrap();
        let trace = run_certified(&p.system, &model, &RunOptions::default()).unwrap();
        assert_eq!(trace.status, TerminalStatus::ConvergedToRoot);
        assert!(trace.audits_passed());
    }
}
