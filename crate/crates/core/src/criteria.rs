//! The three convergence certificates and their comparison arithmetic.
//!
//! For a Lipschitz-continuous derivative with center-Lipschitz constant l0
//! and Lipschitz constant l (affine-invariant scaling, l0 <= l):
//!
//! - Kantorovich: passes iff `l eta <= 1/2`, enclosing radius
//!   `v* = (1 - sqrt(1 - 2 l eta)) / l`.
//! - New condition: the majorant fixed-point equation reduces to
//!   `2 l0 v^2 - (1 + l0 eta) v + eta = 0`; a real root exists iff the
//!   discriminant `D = (l0 eta)^2 - 6 l0 eta + 1` is non-negative, i.e.
//!   `l0 eta <= 3 - 2 sqrt(2)`.
//! - Argyros: existence of a minimal solution of f(r) = r for
//!   `f(v) = gamma(v) (integral(w0,[0,v]) + w0(v) v + eta)` together with
//!   `q(r0) = 2 w0(r0) / (1 - w0(r0)) < 1`; in the linear case this is
//!   `l0 eta <= 0.1`.
//!
//! The new condition beats Kantorovich exactly when `l0/l < 6 - 4 sqrt(2)`.

use crate::error::{Error, Result};
use crate::majorant::{solve_scalar_fixed_point, MajorantModel, SequenceStatus};
use crate::modulus::{ContinuityModulus, LipschitzPair};

/// Iteration budget for the fixed-point searches behind the certificates.
/// Near the pass/fail boundary the scalar iteration converges sublinearly,
/// so this is far above the default sequence cap.
pub(crate) const CRITERIA_SEQUENCE_CAP: usize = 10_000_000;

/// Equality slack for the closed-form threshold comparisons.
const BOUNDARY_TOL: f64 = 1e-15;

/// Absolute tolerance of the eta_max bisection.
const ETA_MAX_TOL: f64 = 1e-10;

/// Largest admissible `l0 eta` under the new condition: `3 - 2 sqrt(2)`.
pub fn new_condition_threshold() -> f64 {
    3.0 - 2.0 * std::f64::consts::SQRT_2
}

/// Ratio `l0/l` below which the new condition is weaker than Kantorovich:
/// `6 - 4 sqrt(2)`.
pub fn critical_ratio() -> f64 {
    2.0 * new_condition_threshold()
}

/// Largest admissible `l0 eta` under the Argyros restrictions in the linear
/// case.
pub const ARGYROS_LINEAR_THRESHOLD: f64 = 0.1;

/// The alternative literature bound `(2 - sqrt(3))/2`, reported for
/// reference only.
pub fn argyros_alternative_threshold() -> f64 {
    (2.0 - 3.0_f64.sqrt()) / 2.0
}

/// Which criterion a certificate speaks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    Kantorovich,
    NewCondition,
    Argyros,
}

impl CriterionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionKind::Kantorovich => "kantorovich",
            CriterionKind::NewCondition => "new-condition",
            CriterionKind::Argyros => "argyros",
        }
    }
}

/// Outcome of one convergence criterion: pass/fail, the largest eta the
/// criterion admits, the promised enclosing-ball radius, and named
/// diagnostics (discriminants, fixed-point data, ...).
#[derive(Debug, Clone)]
pub struct Certificate {
    pub criterion: CriterionKind,
    pub passed: bool,
    pub eta: f64,
    /// Largest admissible eta; infinite for an affine system under
    /// Kantorovich.
    pub eta_max: f64,
    pub v_star: Option<f64>,
    pub diagnostics: Vec<(String, f64)>,
}

/// The classical criterion `l eta <= 1/2` with enclosing radius from the
/// quadratic majorant. `l = 0` is the affine limit: always passes with
/// `v* = eta`.
pub fn check_kantorovich(pair: &LipschitzPair, eta: f64) -> Certificate {
    let l = pair.l();
    let lambda = l * eta;
    let (passed, eta_max, v_star) = if l == 0.0 {
        (true, f64::INFINITY, Some(eta))
    } else {
        let passed = lambda <= 0.5 + BOUNDARY_TOL;
        let v_star = passed.then(|| (1.0 - (1.0 - 2.0 * lambda).max(0.0).sqrt()) / l);
        (passed, 0.5 / l, v_star)
    };
    Certificate {
        criterion: CriterionKind::Kantorovich,
        passed,
        eta,
        eta_max,
        v_star,
        diagnostics: vec![
            ("l_eta".into(), lambda),
            ("discriminant".into(), 1.0 - 2.0 * lambda),
        ],
    }
}

/// The new condition in the Lipschitz case, entirely in closed form:
/// `l0 eta <= 3 - 2 sqrt(2)` and the minimal quadratic root within R.
pub fn check_new_lipschitz(pair: &LipschitzPair, eta: f64, radius: f64) -> Certificate {
    let l0 = pair.l0();
    let lambda = l0 * eta;
    let discriminant = lambda * lambda - 6.0 * lambda + 1.0;
    let (passed, eta_max, v_star) = if l0 == 0.0 {
        // Affine limit: the fixed point is eta itself, so only R constrains.
        let passed = eta <= radius + BOUNDARY_TOL;
        (passed, radius, passed.then_some(eta))
    } else {
        let below_threshold = lambda <= new_condition_threshold() + BOUNDARY_TOL;
        if below_threshold {
            let root = ((1.0 + lambda) - discriminant.max(0.0).sqrt()) / (4.0 * l0);
            let passed = root <= radius + BOUNDARY_TOL;
            (
                passed,
                new_condition_threshold() / l0,
                passed.then_some(root),
            )
        } else {
            (false, new_condition_threshold() / l0, None)
        }
    };
    Certificate {
        criterion: CriterionKind::NewCondition,
        passed,
        eta,
        eta_max,
        v_star,
        diagnostics: vec![
            ("discriminant".into(), discriminant),
            ("l0_eta".into(), lambda),
        ],
    }
}

/// The new condition for an arbitrary modulus: existence of the minimal
/// fixed point of psi within (eta, R], located by iterate-then-bisect.
/// `eta_max` comes from bisection on eta over [0, R] to 1e-10.
pub fn check_new_general(model: &MajorantModel) -> Certificate {
    let fixed_point = model.minimal_fixed_point_with_cap(CRITERIA_SEQUENCE_CAP);
    let passed = fixed_point.is_some();
    let mut diagnostics = Vec::new();
    if let Some(fp) = &fixed_point {
        diagnostics.push(("degenerate".into(), if fp.degenerate { 1.0 } else { 0.0 }));
        if let Ok(w) = model.modulus().eval(fp.value) {
            diagnostics.push(("omega0_at_v_star".into(), w));
        }
        if let Ok(psi_v) = model.psi(fp.value) {
            diagnostics.push(("fixed_point_residual".into(), (fp.value - psi_v).abs()));
        }
    }
    // Pass region rearranged: psi_eta(v) <= v for some v in [0, R'] holds
    // iff eta <= sup of (v - 2 gamma(v) I(v)); the sup is eta-independent,
    // which keeps every bisection probe O(1).
    let threshold = sup_eta_threshold(model, |m, v| {
        let g = m.gamma(v)?;
        Ok(v - 2.0 * g * m.modulus().integral(v)?)
    });
    let eta_max = eta_max_bisection(threshold, model.radius());
    diagnostics.push(("eta_max_threshold".into(), threshold));
    Certificate {
        criterion: CriterionKind::NewCondition,
        passed,
        eta: model.eta(),
        eta_max,
        v_star: fixed_point.map(|fp| fp.value),
        diagnostics,
    }
}

/// The Argyros criterion: a minimal solution r0 of f(r) = r located by the
/// same iterate-then-bisect machinery as the majorant sequence, plus the
/// second restriction `q(r0) < 1`, implemented as `w0(r0) < 1/3 - 1e-12`
/// (algebraically equivalent, stable near the pole of q).
pub fn check_argyros(model: &MajorantModel) -> Certificate {
    let eta = model.eta();
    let argyros_map = |v: f64| -> Result<f64> {
        let g = model.gamma(v)?;
        let integral = model.modulus().integral(v)?;
        let w = model.modulus().eval(v)?;
        Ok(g * (integral + w * v + eta))
    };
    let search = solve_scalar_fixed_point(&argyros_map, model.radius(), CRITERIA_SEQUENCE_CAP, None);

    let mut diagnostics = Vec::new();
    let mut passed = false;
    let mut r0_found = None;
    if search.status == SequenceStatus::Converged {
        let r0 = search.fixed_point.unwrap_or(0.0);
        let w = model.modulus().eval(r0).unwrap_or(f64::NAN);
        let q = 2.0 * w / (1.0 - w);
        diagnostics.push(("r0".into(), r0));
        diagnostics.push(("q_r0".into(), q));
        diagnostics.push(("omega0_at_r0".into(), w));
        let q_ok = w < 1.0 / 3.0 - 1e-12;
        passed = if eta == 0.0 { true } else { q_ok };
        if passed {
            r0_found = Some(r0);
        }
    }

    let eta_max = match model.modulus() {
        // (5/2) l0 v^2 - v + eta = 0 has a root iff 1 - 10 l0 eta >= 0.
        ContinuityModulus::Linear { l0 } if *l0 > 0.0 => {
            diagnostics.push((
                "argyros_discriminant".into(),
                1.0 - 10.0 * l0 * eta,
            ));
            ARGYROS_LINEAR_THRESHOLD / l0
        }
        m if m.is_zero() => model.radius(),
        _ => {
            // Existence rearranged: f_eta(v) <= v iff
            // eta <= v - 2 v w0(v) - I(v).
            let threshold = sup_eta_threshold(model, |m, v| {
                let w = m.modulus().eval(v)?;
                Ok(v - 2.0 * v * w - m.modulus().integral(v)?)
            });
            eta_max_bisection(threshold, model.radius())
        }
    };

    Certificate {
        criterion: CriterionKind::Argyros,
        passed,
        eta,
        eta_max,
        v_star: r0_found,
        diagnostics,
    }
}

/// Verdict of the threshold comparison between the new condition and
/// Kantorovich.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonVerdict {
    /// l0 / l.
    pub ratio: f64,
    /// 6 - 4 sqrt(2).
    pub critical_ratio: f64,
    /// True iff ratio < critical_ratio (strictly): the new condition then
    /// admits a larger eta than Kantorovich.
    pub new_weaker_than_kantorovich: bool,
}

/// All three certificates for a Lipschitz pair, plus the ratio verdict and
/// the reference threshold constants.
#[derive(Debug, Clone)]
pub struct CriteriaComparison {
    pub verdict: ComparisonVerdict,
    pub certificates: Vec<Certificate>,
    pub diagnostics: Vec<(String, f64)>,
}

/// Runs all three criteria on a Lipschitz pair and reports which is weakest.
/// The reference points `3 - 2 sqrt(2)`, `0.1` and `(2 - sqrt(3))/2` are
/// emitted as constants in the diagnostics.
pub fn compare_criteria(pair: &LipschitzPair, eta: f64, radius: f64) -> Result<CriteriaComparison> {
    if pair.l() <= 0.0 {
        return Err(Error::InvalidInput(
            "threshold comparison needs l > 0 (affine systems have no ratio)".into(),
        ));
    }
    if eta > radius {
        return Err(Error::InvalidInput(format!(
            "eta = {eta} exceeds the ball radius R = {radius}"
        )));
    }
    let kantorovich = check_kantorovich(pair, eta);
    let new_lipschitz = check_new_lipschitz(pair, eta, radius);
    let argyros_model = MajorantModel::new(
        ContinuityModulus::linear(pair.l0())?,
        eta,
        radius,
    )?;
    let argyros = check_argyros(&argyros_model);

    let ratio = pair.ratio();
    let verdict = ComparisonVerdict {
        ratio,
        critical_ratio: critical_ratio(),
        new_weaker_than_kantorovich: ratio < critical_ratio(),
    };
    let mut diagnostics = vec![
        ("threshold_new_condition".into(), new_condition_threshold()),
        (
            "threshold_argyros_lipschitz".into(),
            ARGYROS_LINEAR_THRESHOLD,
        ),
        (
            "threshold_argyros_alternative".into(),
            argyros_alternative_threshold(),
        ),
        ("eta_max_kantorovich".into(), 0.5 / pair.l()),
    ];
    if pair.l0() > 0.0 {
        diagnostics.push((
            "eta_max_new_condition".into(),
            new_condition_threshold() / pair.l0(),
        ));
        diagnostics.push((
            "eta_max_argyros".into(),
            ARGYROS_LINEAR_THRESHOLD / pair.l0(),
        ));
    }
    Ok(CriteriaComparison {
        verdict,
        certificates: vec![kantorovich, new_lipschitz, argyros],
        diagnostics,
    })
}

/// Largest eta for which the rearranged pass predicate `eta <= phi(v)` has a
/// witness v: the supremum of phi over [0, min(R, saturation radius)],
/// located by a dense scan plus golden-section refinement.
fn sup_eta_threshold(
    model: &MajorantModel,
    phi: impl Fn(&MajorantModel, f64) -> Result<f64>,
) -> f64 {
    let hi = unsaturated_radius(model);
    if hi <= 0.0 {
        return 0.0;
    }
    let samples = 2048usize;
    let mut best_value = 0.0f64; // phi(0) = 0
    let mut best_index = 0usize;
    for i in 0..=samples {
        let v = hi * i as f64 / samples as f64;
        if let Ok(value) = phi(model, v) {
            if value > best_value {
                best_value = value;
                best_index = i;
            }
        }
    }
    // Golden-section refinement inside the bracketing cells.
    let mut lo = hi * best_index.saturating_sub(1) as f64 / samples as f64;
    let mut up = hi * (best_index + 1).min(samples) as f64 / samples as f64;
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let value_at = |v: f64| phi(model, v).unwrap_or(f64::NEG_INFINITY);
    let mut a = up - ratio * (up - lo);
    let mut b = lo + ratio * (up - lo);
    let mut fa = value_at(a);
    let mut fb = value_at(b);
    for _ in 0..120 {
        if up - lo <= 1e-14 * up.max(1.0) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (up - lo);
            fb = value_at(b);
        } else {
            up = b;
            b = a;
            fb = fa;
            a = up - ratio * (up - lo);
            fa = value_at(a);
        }
    }
    best_value.max(fa).max(fb).max(0.0)
}

/// Largest v <= R at which the modulus stays below saturation.
fn unsaturated_radius(model: &MajorantModel) -> f64 {
    let saturated = |v: f64| match model.modulus().eval(v) {
        Ok(w) => w >= 1.0 - 1e-12,
        Err(_) => true,
    };
    let radius = model.radius();
    if !saturated(radius) {
        return radius;
    }
    let mut lo = 0.0f64;
    let mut hi = radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if saturated(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Literal bisection on eta over [0, R] against the precomputed pass
/// threshold, to 1e-10 absolute.
fn eta_max_bisection(threshold: f64, radius: f64) -> f64 {
    let passes = |eta: f64| eta <= threshold;
    if passes(radius) {
        return radius;
    }
    let mut lo = 0.0f64;
    let mut hi = radius;
    while hi - lo > ETA_MAX_TOL {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
