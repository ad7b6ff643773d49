//! A priori convergence certification for Newton's method on
//! finite-dimensional nonlinear systems.
//!
//! Given a system F with analytic Jacobian, a starting point x0, and a
//! centered continuity modulus w0 bounding the preconditioned derivative
//! deviation `||F'(x0)^-1 (F'(x) - F'(x0))|| <= w0(||x - x0||)`, the crate
//! decides before iterating whether Newton's method is guaranteed to
//! converge, produces the scalar majorizing sequence and the error envelope
//! it implies, runs the certified iteration with per-step audits of those
//! bounds, and compares three certificates:
//!
//! - the classical Kantorovich condition `l eta <= 1/2`,
//! - the majorant fixed-point condition (existence of a minimal solution of
//!   `v = eta + 2 (1 - w0(v))^-1 integral(w0, [0, v])` in `]eta, R]`), which
//!   in the Lipschitz case reads `l0 eta <= 3 - 2 sqrt(2)`,
//! - the Argyros-type condition (`l0 eta <= 0.1` in the Lipschitz case).
//!
//! The fixed-point condition beats Kantorovich whenever the ratio of the
//! center-Lipschitz to the full Lipschitz constant is below `6 - 4 sqrt(2)`.
//!
//! Modules:
//! - [`numerics`]: dense LU solving, infinity norms, adaptive Simpson.
//! - [`problem`]: nonlinear systems, builtin corpus, problem files.
//! - [`modulus`]: continuity modulus representations and estimation.
//! - [`majorant`]: the scalar majorant machinery.
//! - [`criteria`]: the three certificates and their comparison.
//! - [`driver`]: certified and plain Newton runs with audit traces.

pub mod criteria;
pub mod driver;
pub mod error;
pub mod expr;
pub mod majorant;
pub mod modulus;
pub mod numerics;
pub mod problem;

pub use criteria::{
    check_argyros, check_kantorovich, check_new_general, check_new_lipschitz, compare_criteria,
    Certificate, ComparisonVerdict, CriteriaComparison, CriterionKind,
};
pub use driver::{run_certified, run_uncertified, AuditMode, NewtonTrace, RunOptions, StepAudit, TerminalStatus};
pub use error::{Error, Result};
pub use majorant::{FixedPoint, MajorantModel, MajorantSequenceResult, SequenceStatus};
pub use modulus::{estimate_modulus, ContinuityModulus, LipschitzPair, LowerEstimate, ModulusSpec};
pub use numerics::{integrate, solve_linear, Matrix, Vector};
pub use problem::{
    eta_of, load_builtin, load_builtin_configured, load_problem_file, newton_step, parse_problem,
    BuiltinProblem, LoadedProblem, NonlinearSystem, BUILTIN_NAMES,
};
