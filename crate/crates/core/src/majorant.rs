//! Scalar majorant machinery: the update map psi whose iterates dominate the
//! Newton step norms, the majorizing sequence and its minimal fixed point,
//! the Rheinboldt-style two-history bound Omega with its first-integral
//! majorant, and the cross-check sequence it generates.
//!
//! The central objects, for a modulus w0, an initial step bound eta and a
//! ball radius R:
//!
//! ```text
//! gamma(s)        = 1 / (1 - w0(s))
//! psi(v)          = eta + 2 gamma(v) * integral(w0, [0, v])
//! Omega(t, s, r)  = gamma(s) * (integral(w0, [r, r+t]) + w0(r) t)
//! OmegaBar(t,s,r) = 2 gamma(s) integral(w0, [0, r+t]) - 2 gamma(r) integral(w0, [0, r])
//! ```
//!
//! Convergence of Newton's method from x0 is certified by the existence of a
//! minimal solution v* of v = psi(v) with eta < v* <= R; v* is then the
//! radius of the ball around x0 that contains every iterate and the solution.

use crate::error::{Error, Result};
use crate::modulus::ContinuityModulus;

/// Default iteration cap for the scalar sequences. The sequence converges
/// only linearly near criticality, so the cap is generous.
pub const DEFAULT_SEQUENCE_CAP: usize = 100_000;

/// Relative step tolerance declaring the scalar iteration converged.
pub(crate) const SEQUENCE_STEP_TOL: f64 = 1e-14;

/// Saturation guard: the slack factor gamma is refused once w0 reaches
/// 1 - 1e-12, where certificates become numerically meaningless.
pub(crate) const SATURATION_MARGIN: f64 = 1e-12;

/// The (w0, eta, R) bundle every certificate and audit is computed from.
#[derive(Debug, Clone)]
pub struct MajorantModel {
    modulus: ContinuityModulus,
    eta: f64,
    radius: f64,
}

impl MajorantModel {
    pub fn new(modulus: ContinuityModulus, eta: f64, radius: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "eta must be finite and >= 0, got {eta}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "radius must be finite and > 0, got {radius}"
            )));
        }
        if eta > radius {
            return Err(Error::InvalidInput(format!(
                "eta = {eta} exceeds the ball radius R = {radius}"
            )));
        }
        // The modulus must be evaluable on all of [0, R].
        if let Some(r_max) = modulus.max_radius() {
            if r_max < radius {
                return Err(Error::BeyondTabulatedRange {
                    r: radius,
                    r_max,
                });
            }
        }
        Ok(MajorantModel {
            modulus,
            eta,
            radius,
        })
    }

    pub fn modulus(&self) -> &ContinuityModulus {
        &self.modulus
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Same modulus and radius, different eta.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        MajorantModel::new(self.modulus.clone(), eta, self.radius)
    }

    /// Slack factor `1/(1 - w0(s))`.
    ///
    /// Fails once w0(s) >= 1 - 1e-12: the derivative may lose invertibility
    /// there and every bound built on gamma blows up.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        let w = self.modulus.eval(s)?;
        if w >= 1.0 - SATURATION_MARGIN {
            return Err(Error::ModulusSaturated { at: s });
        }
        Ok(1.0 / (1.0 - w))
    }

    /// The majorant update `psi(v) = eta + 2 gamma(v) integral(w0, [0, v])`.
    ///
    /// For a linear modulus this reduces to the closed form
    /// `eta + l0 v^2 / (1 - l0 v)`, which is used directly.
    pub fn psi(&self, v: f64) -> Result<f64> {
        match self.modulus {
            ContinuityModulus::Linear { l0 } => {
                let w = l0 * v;
                if w >= 1.0 - SATURATION_MARGIN {
                    return Err(Error::ModulusSaturated { at: v });
                }
                Ok(self.eta + l0 * v * v / (1.0 - w))
            }
            _ => {
                let g = self.gamma(v)?;
                Ok(self.eta + 2.0 * g * self.modulus.integral(v)?)
            }
        }
    }

    /// Per-step bound `Omega(t, s, r) = gamma(s) (integral(w0, [r, r+t]) + w0(r) t)`
    /// on the next Newton step length, given the previous step length t and
    /// the distances s, r of the last two iterates from the start.
    pub fn omega_bound(&self, t: f64, s: f64, r: f64) -> Result<f64> {
        debug_assert!(t >= 0.0 && r >= 0.0 && r <= s);
        let g = self.gamma(s)?;
        let band = self.modulus.integral(r + t)? - self.modulus.integral(r)?;
        Ok(g * (band + self.modulus.eval(r)? * t))
    }

    /// First-integral majorant of `omega_bound`:
    /// `2 gamma(s) integral(w0, [0, r+t]) - 2 gamma(r) integral(w0, [0, r])`.
    /// With s = r + t it telescopes to `psi(r+t) - psi(r)`.
    pub fn omega_majorant(&self, t: f64, s: f64, r: f64) -> Result<f64> {
        debug_assert!(t >= 0.0 && r >= 0.0 && r <= s);
        let gs = self.gamma(s)?;
        let gr = self.gamma(r)?;
        Ok(2.0 * gs * self.modulus.integral(r + t)? - 2.0 * gr * self.modulus.integral(r)?)
    }

    /// Runs the majorizing recurrence `v_{k+1} = psi(v_k)` from v_0 = 0,
    /// recording every iterate.
    ///
    /// Stops `Converged` once the step falls to `1e-14 * max(1, v_k)`, then
    /// polishes the limit by bisection on `v - psi(v)` just beyond the last
    /// iterate when a sign change exists there. Stops `ExceededRadius` when
    /// an iterate escapes [0, R], `ModulusSaturated` when psi fails, and
    /// `IterationCapped` at `max_iter`.
    pub fn majorant_sequence(&self, max_iter: usize) -> MajorantSequenceResult {
        let mut values = Vec::new();
        let search = solve_scalar_fixed_point(
            &|v| self.psi(v),
            self.radius,
            max_iter,
            Some(&mut values),
        );
        MajorantSequenceResult {
            values,
            status: search.status,
            v_star: search.fixed_point,
            iterations: search.iterations,
        }
    }

    /// Minimal solution of `v = psi(v)` in [0, R], when the majorizing
    /// sequence reaches one.
    ///
    /// Returns `None` when the sequence escapes, saturates or runs out of
    /// iterations. A solution with v* = eta (in particular eta = 0, the
    /// starting point already solving the system at tolerance level) is
    /// flagged degenerate: the strict eta < v* demanded by the certificate
    /// fails, but the iteration is exact there.
    pub fn minimal_fixed_point(&self) -> Option<FixedPoint> {
        self.minimal_fixed_point_with_cap(DEFAULT_SEQUENCE_CAP)
    }

    /// As [`minimal_fixed_point`](Self::minimal_fixed_point) with an explicit
    /// iteration cap (the sequence is linearly convergent near criticality,
    /// so boundary studies need more room).
    pub fn minimal_fixed_point_with_cap(&self, max_iter: usize) -> Option<FixedPoint> {
        let search = solve_scalar_fixed_point(&|v| self.psi(v), self.radius, max_iter, None);
        match (search.status, search.fixed_point) {
            (SequenceStatus::Converged, Some(v_star)) => {
                if v_star > self.radius * (1.0 + 1e-12) {
                    return None;
                }
                let degenerate =
                    self.eta == 0.0 || v_star <= self.eta * (1.0 + 1e-12);
                Some(FixedPoint {
                    value: v_star,
                    degenerate,
                })
            }
            _ => None,
        }
    }

    /// Runs the two-history recurrence
    /// `u_{k+1} = u_k + Omega(u_k - u_{k-1}, u_k, u_{k-1})` from
    /// u_0 = 0, u_1 = eta. Its increments are dominated by those of the
    /// majorizing sequence; it serves as a cross-check.
    pub fn rheinboldt_sequence(&self, max_iter: usize) -> MajorantSequenceResult {
        let mut values = vec![0.0];
        if self.eta == 0.0 {
            return MajorantSequenceResult {
                values,
                status: SequenceStatus::Converged,
                v_star: Some(0.0),
                iterations: 0,
            };
        }
        values.push(self.eta);
        let mut previous = 0.0f64;
        let mut current = self.eta;
        let radius_guard = self.radius * (1.0 + 1e-12);
        for iteration in 1..=max_iter {
            let step = match self.omega_bound(current - previous, current, previous) {
                Ok(s) => s,
                Err(_) => {
                    return MajorantSequenceResult {
                        values,
                        status: SequenceStatus::ModulusSaturated,
                        v_star: None,
                        iterations: iteration,
                    }
                }
            };
            let next = current + step;
            if next > radius_guard {
                return MajorantSequenceResult {
                    values,
                    status: SequenceStatus::ExceededRadius,
                    v_star: None,
                    iterations: iteration,
                };
            }
            values.push(next);
            if step <= SEQUENCE_STEP_TOL * current.max(1.0) {
                return MajorantSequenceResult {
                    values,
                    status: SequenceStatus::Converged,
                    v_star: Some(next),
                    iterations: iteration,
                };
            }
            previous = current;
            current = next;
        }
        MajorantSequenceResult {
            values,
            status: SequenceStatus::IterationCapped,
            v_star: None,
            iterations: max_iter,
        }
    }
}

/// Terminal state of a scalar sequence run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceStatus {
    /// Step fell below tolerance; the limit exists in [0, R].
    Converged,
    /// An iterate escaped the ball radius: no fixed point at or below R.
    ExceededRadius,
    /// The modulus reached 1 along the way.
    ModulusSaturated,
    /// Budget exhausted without a verdict.
    IterationCapped,
}

/// A scalar sequence run: the iterates, how it stopped, and the (refined)
/// limit when it converged.
#[derive(Debug, Clone)]
pub struct MajorantSequenceResult {
    pub values: Vec<f64>,
    pub status: SequenceStatus,
    pub v_star: Option<f64>,
    pub iterations: usize,
}

/// Minimal fixed point of the majorant update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub value: f64,
    /// True when v* does not strictly exceed eta (affine-like case: the
    /// modulus vanishes up to eta, or eta = 0).
    pub degenerate: bool,
}

pub(crate) struct FixedPointSearch {
    pub status: SequenceStatus,
    pub fixed_point: Option<f64>,
    pub iterations: usize,
}

/// Iterates a monotone update map from 0 towards its minimal fixed point,
/// then polishes the limit by bisection on `g(v) = v - map(v)` over the
/// short bracket past the last iterate, if g changes sign there.
///
/// Shared by the majorant sequence and the Argyros-style fixed-point search.
pub(crate) fn solve_scalar_fixed_point(
    map: &dyn Fn(f64) -> Result<f64>,
    radius: f64,
    max_iter: usize,
    mut record: Option<&mut Vec<f64>>,
) -> FixedPointSearch {
    if let Some(values) = record.as_deref_mut() {
        values.push(0.0);
    }
    let mut current = 0.0f64;
    let radius_guard = radius * (1.0 + 1e-12);
    for iteration in 1..=max_iter {
        let next = match map(current) {
            Ok(v) => v,
            Err(_) => {
                return FixedPointSearch {
                    status: SequenceStatus::ModulusSaturated,
                    fixed_point: None,
                    iterations: iteration,
                }
            }
        };
        if next == current {
            // Exact fixed point (covers eta = 0 and flat maps).
            return FixedPointSearch {
                status: SequenceStatus::Converged,
                fixed_point: Some(current),
                iterations: iteration,
            };
        }
        if next > radius_guard {
            return FixedPointSearch {
                status: SequenceStatus::ExceededRadius,
                fixed_point: None,
                iterations: iteration,
            };
        }
        if let Some(values) = record.as_deref_mut() {
            values.push(next);
        }
        let step = next - current;
        if step <= SEQUENCE_STEP_TOL * current.max(1.0) {
            let upper = (next + 10.0 * step.max(0.0) + 1e-12).min(radius);
            let refined = refine_fixed_point(map, next, upper).unwrap_or(next);
            return FixedPointSearch {
                status: SequenceStatus::Converged,
                fixed_point: Some(refined),
                iterations: iteration,
            };
        }
        current = next;
    }
    FixedPointSearch {
        status: SequenceStatus::IterationCapped,
        fixed_point: None,
        iterations: max_iter,
    }
}

/// Bisection on g(v) = v - map(v) over [lo, hi]; returns None without a sign
/// change (e.g. a tangent fixed point), in which case the iterate stands.
fn refine_fixed_point(map: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Option<f64> {
    let g = |v: f64| -> Option<f64> { map(v).ok().map(|m| v - m) };
    let mut lo = lo;
    let mut hi = hi;
    if hi <= lo {
        return None;
    }
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if g_lo > 0.0 {
        // Already past the root; the iterate itself is the best answer.
        return None;
    }
    if g_hi < 0.0 {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-16 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match g(mid) {
            Some(v) if v < 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    fn linear_model(l0: f64, eta: f64, radius: f64) -> MajorantModel {
        MajorantModel::new(ContinuityModulus::linear(l0).unwrap(), eta, radius).unwrap()
    }

    fn zero_model(eta: f64, radius: f64) -> MajorantModel {
        linear_model(0.0, eta, radius)
    }

    /// Minimal root of the quadratic 2 l0 v^2 - (1 + l0 eta) v + eta = 0.
    fn quadratic_minimal_root(l0: f64, eta: f64) -> f64 {
        let lambda = l0 * eta;
        let d = lambda * lambda - 6.0 * lambda + 1.0;
        ((1.0 + lambda) - d.sqrt()) / (4.0 * l0)
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(zero_model(0.1, 1.0).gamma(0.7).unwrap(), 1.0);
        assert_close(linear_model(1.0, 0.1, 1.0).gamma(0.5).unwrap(), 2.0, 1e-15);
        assert!(matches!(
            linear_model(1.0, 0.1, 1.0).gamma(1.0),
            Err(Error::ModulusSaturated { .. })
        ));
    }

    #[test]
    fn psi_examples() {
        let m = linear_model(1.0, 0.1, 1.0);
        assert_close(m.psi(0.0).unwrap(), 0.1, 1e-15);
        assert_close(m.psi(0.2).unwrap(), 0.15, 1e-15);
        assert_close(zero_model(0.3, 1.0).psi(0.9).unwrap(), 0.3, 1e-15);
    }

    #[test]
    fn psi_closed_form_matches_general_path() {
        // The linear closed form must agree with eta + 2 gamma I computed
        // through the generic route.
        for &(l0, eta, v) in &[(0.7, 0.05, 0.3), (2.0, 0.01, 0.2), (0.1, 0.1, 0.9)] {
            let m = linear_model(l0, eta, 1.0);
            let general = eta + 2.0 * m.gamma(v).unwrap() * (0.5 * l0 * v * v);
            assert_close(m.psi(v).unwrap(), general, 1e-15);
        }
    }

    #[test]
    fn sequence_degenerate_eta_zero() {
        let m = linear_model(1.0, 0.0, 1.0);
        let seq = m.majorant_sequence(100);
        assert_eq!(seq.status, SequenceStatus::Converged);
        assert_eq!(seq.values, vec![0.0]);
        assert_eq!(seq.v_star, Some(0.0));
    }

    #[test]
    fn sequence_converges_at_critical_eta() {
        // At l0 eta = 3 - 2 sqrt(2) the fixed-point equation has a double
        // root; convergence is sublinear, hence the generous cap.
        let eta = 3.0 - 2.0 * std::f64::consts::SQRT_2;
        let m = linear_model(1.0, eta, 1.0);
        let seq = m.majorant_sequence(10_000_000);
        assert_eq!(seq.status, SequenceStatus::Converged);
        let v_star = seq.v_star.unwrap();
        assert_close(v_star, (1.0 + eta) / 4.0, 1e-6);
        // Residual of the fixed-point equation stays at tolerance level.
        assert!((v_star - m.psi(v_star).unwrap()).abs() <= 1e-12 * v_star.max(1.0));
    }

    #[test]
    fn sequence_escapes_beyond_critical_eta() {
        let m = linear_model(1.0, 0.2, 1.0);
        let seq = m.majorant_sequence(DEFAULT_SEQUENCE_CAP);
        assert!(
            matches!(
                seq.status,
                SequenceStatus::ExceededRadius | SequenceStatus::IterationCapped
            ),
            "unexpected status {:?}",
            seq.status
        );
        assert!(seq.v_star.is_none());
    }

    #[test]
    fn sequence_values_monotone_and_below_limit() {
        let m = linear_model(1.0, 0.1, 1.0);
        let seq = m.majorant_sequence(DEFAULT_SEQUENCE_CAP);
        assert_eq!(seq.status, SequenceStatus::Converged);
        let v_star = seq.v_star.unwrap();
        for pair in seq.values.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        for &v in &seq.values {
            assert!(v <= v_star * (1.0 + 1e-12));
        }
        assert!(m.eta() < v_star && v_star <= m.radius());
    }

    #[test]
    fn minimal_fixed_point_matches_quadratic_root() {
        let m = linear_model(1.0, 0.1, 1.0);
        let fp = m.minimal_fixed_point().unwrap();
        assert!(!fp.degenerate);
        assert_close(fp.value, quadratic_minimal_root(1.0, 0.1), 1e-10);
    }

    #[test]
    fn minimal_fixed_point_degenerate_affine() {
        let fp = zero_model(0.3, 1.0).minimal_fixed_point().unwrap();
        assert!(fp.degenerate);
        assert_close(fp.value, 0.3, 1e-15);
    }

    #[test]
    fn minimal_fixed_point_absent_above_threshold() {
        // D(0.5) = 0.25 - 3 + 1 < 0: no real root.
        assert!(linear_model(1.0, 0.5, 1.0).minimal_fixed_point().is_none());
    }

    #[test]
    fn omega_bound_examples() {
        let m = linear_model(1.0, 0.1, 1.0);
        assert_eq!(m.omega_bound(0.0, 0.2, 0.2).unwrap(), 0.0);
        assert_eq!(zero_model(0.1, 1.0).omega_bound(0.3, 0.5, 0.2).unwrap(), 0.0);
        // gamma(0.2) * (integral over [0.2, 0.3] + w0(0.2) * 0.1)
        //   = 1.25 * (0.025 + 0.02) = 0.05625
        assert_close(m.omega_bound(0.1, 0.2, 0.2).unwrap(), 0.05625, 1e-15);
    }

    #[test]
    fn omega_majorant_examples() {
        let m = linear_model(1.0, 0.1, 1.0);
        assert_close(m.omega_majorant(0.0, 0.2, 0.2).unwrap(), 0.0, 1e-15);
        assert_eq!(
            zero_model(0.1, 1.0).omega_majorant(0.3, 0.5, 0.2).unwrap(),
            0.0
        );
        // With s = r + t the majorant telescopes to psi(r+t) - psi(r).
        let direct = m.omega_majorant(0.1, 0.3, 0.2).unwrap();
        let telescoped = m.psi(0.3).unwrap() - m.psi(0.2).unwrap();
        assert_close(direct, telescoped, 1e-15);
    }

    #[test]
    fn rheinboldt_zero_modulus_is_constant() {
        let m = zero_model(0.25, 1.0);
        let seq = m.rheinboldt_sequence(100);
        assert_eq!(seq.status, SequenceStatus::Converged);
        assert_eq!(seq.values, vec![0.0, 0.25, 0.25]);
    }

    #[test]
    fn rheinboldt_eta_zero_all_zeros() {
        let seq = linear_model(1.0, 0.0, 1.0).rheinboldt_sequence(100);
        assert_eq!(seq.status, SequenceStatus::Converged);
        assert_eq!(seq.values, vec![0.0]);
        assert_eq!(seq.v_star, Some(0.0));
    }

    #[test]
    fn rheinboldt_dominated_by_majorant_sequence() {
        let m = linear_model(1.0, 0.1, 1.0);
        let u = m.rheinboldt_sequence(DEFAULT_SEQUENCE_CAP);
        let v = m.majorant_sequence(DEFAULT_SEQUENCE_CAP);
        assert_eq!(u.status, SequenceStatus::Converged);
        let shared = u.values.len().min(v.values.len());
        for k in 1..shared {
            let du = u.values[k] - u.values[k - 1];
            let dv = v.values[k] - v.values[k - 1];
            assert!(
                du <= dv + 1e-12,
                "increment domination fails at k={k}: {du} > {dv}"
            );
            assert!(u.values[k] <= v.values[k] + 1e-12);
        }
    }

    #[test]
    fn model_construction_validation() {
        let linear = ContinuityModulus::linear(1.0).unwrap();
        assert!(MajorantModel::new(linear.clone(), -0.1, 1.0).is_err());
        assert!(MajorantModel::new(linear.clone(), 0.5, 0.4).is_err());
        assert!(MajorantModel::new(linear, 0.1, 0.0).is_err());
        let table =
            ContinuityModulus::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.2)]).unwrap();
        assert!(matches!(
            MajorantModel::new(table, 0.1, 1.0),
            Err(Error::BeyondTabulatedRange { .. })
        ));
    }

    #[test]
    fn converged_implies_unsaturated_limit() {
        for &(l0, eta) in &[(1.0, 0.1), (2.0, 0.05), (0.5, 0.3)] {
            let m = linear_model(l0, eta, 10.0);
            if let Some(fp) = m.minimal_fixed_point() {
                assert!(m.modulus().eval(fp.value).unwrap() < 1.0);
            }
        }
    }

    proptest! {
        #[test]
        fn psi_is_monotone(
            l0 in 0.0f64..2.0,
            eta in 0.0f64..0.3,
            a in 0.0f64..0.45,
            b in 0.0f64..0.45,
        ) {
            let m = linear_model(l0, eta.min(0.5), 0.5);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.psi(lo).unwrap() <= m.psi(hi).unwrap() + 1e-12);
        }

        #[test]
        fn linear_fixed_point_matches_formula(
            l0 in 0.1f64..4.0,
            lambda in 0.005f64..0.17,
        ) {
            let eta = lambda / l0;
            let expected = quadratic_minimal_root(l0, eta);
            let m = linear_model(l0, eta, expected * 3.0);
            let fp = m.minimal_fixed_point().expect("fixed point must exist");
            prop_assert!(!fp.degenerate);
            prop_assert!((fp.value - expected).abs() <= 1e-10,
                "v* {} vs formula {}", fp.value, expected);
        }

        #[test]
        fn sequence_increments_dominate_rheinboldt(
            l0 in 0.2f64..3.0,
            lambda in 0.01f64..0.16,
        ) {
            let eta = lambda / l0;
            let m = linear_model(l0, eta, 1.0 / l0);
            let u = m.rheinboldt_sequence(DEFAULT_SEQUENCE_CAP);
            let v = m.majorant_sequence(DEFAULT_SEQUENCE_CAP);
            let shared = u.values.len().min(v.values.len());
            for k in 1..shared {
                prop_assert!(
                    u.values[k] - u.values[k - 1] <= v.values[k] - v.values[k - 1] + 1e-12
                );
            }
        }
    }
}
