//! Finite-dimensional nonlinear systems F with analytic Jacobians, a
//! starting point and a domain ball, plus a small corpus of builtin test
//! problems whose continuity moduli are known in closed form.
//!
//! All moduli and constants live in the affine-invariant scaling: everything
//! is measured after left-multiplication by the inverse Jacobian at the
//! starting point. Jacobians are supplied analytically; there is no
//! finite-difference fallback, since a certified modulus needs a trustworthy
//! derivative.

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::modulus::ContinuityModulus;
use crate::numerics::{solve_linear, Matrix, Vector};
use serde::Deserialize;
use std::sync::Arc;

type FnEval = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacEval = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A nonlinear system F: R^n -> R^n with analytic Jacobian, defined on the
/// closed ball of radius `radius` around `x0`. The Jacobian at `x0` is
/// checked to be invertible at construction.
#[derive(Clone)]
pub struct NonlinearSystem {
    name: String,
    dim: usize,
    x0: Vector,
    radius: f64,
    f: FnEval,
    jac: JacEval,
}

impl std::fmt::Debug for NonlinearSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x0", &self.x0)
            .field("radius", &self.radius)
            .finish()
    }
}

impl NonlinearSystem {
    /// Builds a system and probes the Jacobian at x0 with a linear solve, so
    /// a singular starting Jacobian is rejected immediately.
    pub fn new(
        name: impl Into<String>,
        x0: Vector,
        radius: f64,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jac: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "domain radius must be finite and > 0, got {radius}"
            )));
        }
        let sys = NonlinearSystem {
            name: name.into(),
            dim: x0.dim(),
            x0,
            radius,
            f: Arc::new(f),
            jac: Arc::new(jac),
        };
        // Invertibility probe; also validates both evaluators at x0.
        let j0 = sys.eval_jacobian(&sys.x0.clone())?;
        let f0 = sys.eval_f(&sys.x0.clone())?;
        solve_linear(&j0, &f0)?;
        Ok(sys)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// F(x), validated to have the right dimension and finite entries.
    pub fn eval_f(&self, x: &Vector) -> Result<Vector> {
        let out = (self.f)(x.as_slice());
        if out.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "F returned dimension {}, expected {}",
                out.len(),
                self.dim
            )));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("F(x) for {}", self.name)));
        }
        Ok(Vector::from_raw(out))
    }

    /// Jacobian F'(x) as a row-major matrix, validated like `eval_f`.
    pub fn eval_jacobian(&self, x: &Vector) -> Result<Matrix> {
        let out = (self.jac)(x.as_slice());
        if out.len() != self.dim * self.dim {
            return Err(Error::InvalidInput(format!(
                "Jacobian returned {} entries, expected {}",
                out.len(),
                self.dim * self.dim
            )));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("F'(x) for {}", self.name)));
        }
        Ok(Matrix::from_raw(self.dim, out))
    }

    /// Distance check against the domain ball; tiny relative slack so points
    /// exactly on the boundary pass.
    pub fn check_in_domain(&self, x: &Vector) -> Result<()> {
        let distance = x.sub(&self.x0).norm_inf();
        if distance > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain {
                distance,
                radius: self.radius,
            });
        }
        Ok(())
    }
}

/// One Newton step `T(x) = x - F'(x)^-1 F(x)`.
///
/// Fails with `OutOfDomain` when x is outside the domain ball and propagates
/// `SingularMatrix` when F'(x) is numerically non-invertible.
pub fn newton_step(sys: &NonlinearSystem, x: &Vector) -> Result<Vector> {
    sys.check_in_domain(x)?;
    let jacobian = sys.eval_jacobian(x)?;
    let f_value = sys.eval_f(x)?;
    let correction = solve_linear(&jacobian, &f_value)?;
    Ok(x.sub(&correction))
}

/// The minimal admissible eta: the length of the first Newton step,
/// `||F'(x0)^-1 F(x0)||`. Callers may pass any larger value downstream.
pub fn eta_of(sys: &NonlinearSystem) -> Result<f64> {
    let j0 = sys.eval_jacobian(sys.x0())?;
    let f0 = sys.eval_f(sys.x0())?;
    Ok(solve_linear(&j0, &f0)?.norm_inf())
}

/// Operator norm of the preconditioned Jacobian deviation
/// `J(x0)^-1 (J(x) - J(x0))`, computed columnwise through the LU solve.
/// This is the quantity a continuity modulus must dominate.
pub fn centered_deviation_norm(sys: &NonlinearSystem, x: &Vector) -> Result<f64> {
    sys.check_in_domain(x)?;
    let j0 = sys.eval_jacobian(sys.x0())?;
    let jx = sys.eval_jacobian(x)?;
    let delta = jx.sub(&j0);
    let n = sys.dim();
    let mut preconditioned = Matrix::zeros(n);
    for j in 0..n {
        let column = solve_linear(&j0, &delta.column(j))?;
        for i in 0..n {
            preconditioned.set(i, j, column[i]);
        }
    }
    Ok(preconditioned.operator_norm_inf())
}

/// A corpus problem bundled with its exact continuity modulus and, where
/// defined, the center-Lipschitz and Lipschitz constants.
#[derive(Debug, Clone)]
pub struct BuiltinProblem {
    pub system: NonlinearSystem,
    pub analytic_modulus: ContinuityModulus,
    pub analytic_l0: Option<f64>,
    pub analytic_l: Option<f64>,
}

pub const BUILTIN_NAMES: [&str; 4] = ["scalar-sqrt2", "scalar-exp", "2d-quadratic", "affine"];

/// Loads a corpus problem with its default configuration.
pub fn load_builtin(name: &str) -> Result<BuiltinProblem> {
    load_builtin_configured(name, None, None)
}

/// Loads a corpus problem, optionally overriding the starting point and the
/// domain radius; the analytic modulus and constants are recomputed for the
/// chosen configuration.
pub fn load_builtin_configured(
    name: &str,
    x0_override: Option<&[f64]>,
    radius_override: Option<f64>,
) -> Result<BuiltinProblem> {
    match name {
        "scalar-sqrt2" => builtin_scalar_sqrt2(x0_override, radius_override),
        "scalar-exp" => builtin_scalar_exp(x0_override, radius_override),
        "2d-quadratic" => builtin_2d_quadratic(x0_override, radius_override),
        "affine" => builtin_affine(x0_override, radius_override),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

fn scalar_x0(name: &str, x0_override: Option<&[f64]>, default: f64) -> Result<f64> {
    match x0_override {
        None => Ok(default),
        Some([v]) => Ok(*v),
        Some(other) => Err(Error::InvalidInput(format!(
            "builtin {name:?} is scalar, got x0 of dimension {}",
            other.len()
        ))),
    }
}

/// F(x) = x^2 - 2. In the affine-invariant scaling at x0 the deviation is
/// (x - x0)/x0, so w0(r) = r/|x0| exactly and l0 = l = 1/|x0|.
fn builtin_scalar_sqrt2(
    x0_override: Option<&[f64]>,
    radius_override: Option<f64>,
) -> Result<BuiltinProblem> {
    let x0 = scalar_x0("scalar-sqrt2", x0_override, 1.4)?;
    if x0 == 0.0 {
        return Err(Error::InvalidInput(
            "scalar-sqrt2 needs x0 != 0 (the derivative vanishes at 0)".into(),
        ));
    }
    let radius = radius_override.unwrap_or(x0.abs());
    let l0 = 1.0 / x0.abs();
    let system = NonlinearSystem::new(
        "scalar-sqrt2",
        Vector::new(vec![x0])?,
        radius,
        |x| vec![x[0] * x[0] - 2.0],
        |x| vec![2.0 * x[0]],
    )?;
    Ok(BuiltinProblem {
        system,
        analytic_modulus: ContinuityModulus::linear(l0)?,
        analytic_l0: Some(l0),
        analytic_l: Some(l0),
    })
}

/// F(x) = e^x - 1.1. The preconditioned deviation is e^(x-x0) - 1, so the
/// exact modulus is w0(r) = e^r - 1 independently of x0. It is stored as its
/// piecewise-linear upper envelope (chords of a convex function), exact at
/// the knots. On [0, R] the analytic constants are l0 = (e^R - 1)/R and
/// l = e^R.
fn builtin_scalar_exp(
    x0_override: Option<&[f64]>,
    radius_override: Option<f64>,
) -> Result<BuiltinProblem> {
    let x0 = scalar_x0("scalar-exp", x0_override, 0.0)?;
    let radius = radius_override.unwrap_or(0.5);
    let segments = 256;
    let mut knots = Vec::with_capacity(segments + 1);
    for i in 0..=segments {
        let r = radius * i as f64 / segments as f64;
        knots.push((r, r.exp_m1()));
    }
    let system = NonlinearSystem::new(
        "scalar-exp",
        Vector::new(vec![x0])?,
        radius,
        |x| vec![x[0].exp() - 1.1],
        |x| vec![x[0].exp()],
    )?;
    Ok(BuiltinProblem {
        system,
        analytic_modulus: ContinuityModulus::piecewise_linear(knots)?,
        analytic_l0: Some(radius.exp_m1() / radius),
        analytic_l: Some(radius.exp()),
    })
}

/// A 2x2 quadratic system:
///   F1 = x1 + x2 + x1^2 - 0.1
///   F2 = x1 - x2 + x2^2 - 0.05
/// The preconditioned deviation is J0^-1 diag(2 dx1, 2 dx2), which gives the
/// exact linear modulus w0(r) = 2 ||J0^-1|| r; at the default start (0, 0)
/// that is 2r, eta = 0.075 and the certified radius is exactly 0.1.
fn builtin_2d_quadratic(
    x0_override: Option<&[f64]>,
    radius_override: Option<f64>,
) -> Result<BuiltinProblem> {
    let x0 = match x0_override {
        None => vec![0.0, 0.0],
        Some(v) if v.len() == 2 => v.to_vec(),
        Some(other) => {
            return Err(Error::InvalidInput(format!(
                "builtin \"2d-quadratic\" has dimension 2, got x0 of dimension {}",
                other.len()
            )))
        }
    };
    let radius = radius_override.unwrap_or(0.5);
    let system = NonlinearSystem::new(
        "2d-quadratic",
        Vector::new(x0)?,
        radius,
        |x| {
            vec![
                x[0] + x[1] + x[0] * x[0] - 0.1,
                x[0] - x[1] + x[1] * x[1] - 0.05,
            ]
        },
        |x| vec![1.0 + 2.0 * x[0], 1.0, 1.0, -1.0 + 2.0 * x[1]],
    )?;
    // l0 = 2 ||J0^-1||_inf: the deviation J0^-1 diag(u, v) with |u|, |v| <= 2r
    // attains that bound at a sign pattern of the corner directions.
    let j0 = system.eval_jacobian(system.x0())?;
    let mut j0_inv = Matrix::zeros(2);
    for j in 0..2 {
        let e = Matrix::identity(2).column(j);
        let col = solve_linear(&j0, &e)?;
        for i in 0..2 {
            j0_inv.set(i, j, col[i]);
        }
    }
    let l0 = 2.0 * j0_inv.operator_norm_inf();
    Ok(BuiltinProblem {
        system,
        analytic_modulus: ContinuityModulus::linear(l0)?,
        analytic_l0: Some(l0),
        analytic_l: Some(l0),
    })
}

/// F(x) = A (x - c) with constant invertible A: zero modulus, one exact
/// Newton step from anywhere.
fn builtin_affine(
    x0_override: Option<&[f64]>,
    radius_override: Option<f64>,
) -> Result<BuiltinProblem> {
    let x0 = match x0_override {
        None => vec![0.0, 0.0],
        Some(v) if v.len() == 2 => v.to_vec(),
        Some(other) => {
            return Err(Error::InvalidInput(format!(
                "builtin \"affine\" has dimension 2, got x0 of dimension {}",
                other.len()
            )))
        }
    };
    let radius = radius_override.unwrap_or(2.0);
    const A: [f64; 4] = [2.0, 1.0, 0.0, 3.0];
    const C: [f64; 2] = [1.0, -1.0];
    let system = NonlinearSystem::new(
        "affine",
        Vector::new(x0)?,
        radius,
        |x| {
            let d = [x[0] - C[0], x[1] - C[1]];
            vec![A[0] * d[0] + A[1] * d[1], A[2] * d[0] + A[3] * d[1]]
        },
        |_| A.to_vec(),
    )?;
    Ok(BuiltinProblem {
        system,
        analytic_modulus: ContinuityModulus::linear(0.0)?,
        analytic_l0: Some(0.0),
        analytic_l: Some(0.0),
    })
}

/// A problem loaded from a JSON file: either a (possibly re-configured)
/// builtin, which carries analytic data, or an expression-defined system,
/// which does not.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub system: NonlinearSystem,
    pub analytic_modulus: Option<ContinuityModulus>,
    pub analytic_l0: Option<f64>,
    pub analytic_l: Option<f64>,
}

impl From<BuiltinProblem> for LoadedProblem {
    fn from(p: BuiltinProblem) -> Self {
        LoadedProblem {
            system: p.system,
            analytic_modulus: Some(p.analytic_modulus),
            analytic_l0: p.analytic_l0,
            analytic_l: p.analytic_l,
        }
    }
}

/// Problem file syntax: `{"builtin": name}` with optional `x0` and `R`
/// overrides, or `{"dimension": n, "x0": [...], "R": r, "expression": [...]}`
/// with one expression string per component over the variables `x1..xn`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProblemFile {
    Builtin {
        builtin: String,
        #[serde(default)]
        x0: Option<Vec<f64>>,
        #[serde(rename = "R", default)]
        radius: Option<f64>,
    },
    Expression {
        dimension: usize,
        x0: Vec<f64>,
        #[serde(rename = "R")]
        radius: f64,
        expression: Vec<String>,
        #[serde(default)]
        name: Option<String>,
    },
}

/// Parses a problem from JSON text. Expression-defined systems get their
/// Jacobian by symbolic differentiation of the parsed components.
pub fn parse_problem(text: &str) -> Result<LoadedProblem> {
    let file: ProblemFile = serde_json::from_str(text)?;
    match file {
        ProblemFile::Builtin {
            builtin,
            x0,
            radius,
        } => Ok(load_builtin_configured(&builtin, x0.as_deref(), radius)?.into()),
        ProblemFile::Expression {
            dimension,
            x0,
            radius,
            expression,
            name,
        } => {
            if expression.len() != dimension {
                return Err(Error::InvalidInput(format!(
                    "expected {dimension} expressions, got {}",
                    expression.len()
                )));
            }
            if x0.len() != dimension {
                return Err(Error::InvalidInput(format!(
                    "expected x0 of dimension {dimension}, got {}",
                    x0.len()
                )));
            }
            let components: Vec<Expr> = expression
                .iter()
                .map(|s| expr::parse(s, dimension))
                .collect::<Result<_>>()?;
            let mut jacobian_entries = Vec::with_capacity(dimension * dimension);
            for component in &components {
                for var in 0..dimension {
                    jacobian_entries.push(component.diff(var));
                }
            }
            let components = Arc::new(components);
            let jacobian_entries = Arc::new(jacobian_entries);
            let f_components = Arc::clone(&components);
            let system = NonlinearSystem::new(
                name.unwrap_or_else(|| "expression-system".into()),
                Vector::new(x0)?,
                radius,
                move |x| f_components.iter().map(|e| e.eval(x)).collect(),
                move |x| jacobian_entries.iter().map(|e| e.eval(x)).collect(),
            )?;
            Ok(LoadedProblem {
                system,
                analytic_modulus: None,
                analytic_l0: None,
                analytic_l: None,
            })
        }
    }
}

/// Loads a problem from a JSON file on disk.
pub fn load_problem_file(path: &std::path::Path) -> Result<LoadedProblem> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}
