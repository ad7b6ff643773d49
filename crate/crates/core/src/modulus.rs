//! Centered continuity moduli w0(r): analytic families, exact tabulated
//! envelopes, and an empirical estimator from Jacobian samples.
//!
//! A modulus is a continuous non-decreasing function with w0(0) = 0 that
//! bounds the preconditioned Jacobian deviation
//! `||J(x0)^-1 (J(x) - J(x0))|| <= w0(r)` for `||x - x0|| <= r`. Everything
//! downstream (the majorant map, the certificates) is driven by it.

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::problem::{centered_deviation_norm, NonlinearSystem};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A centered continuity modulus.
///
/// Variants:
/// - `Linear`: `w0(r) = l0 * r` (Lipschitz-continuous derivative, l0 the
///   center-Lipschitz constant),
/// - `Power`: `w0(r) = c * r^p` with `0 < p <= 1` (Hoelder continuity),
/// - `PiecewiseLinear`: linear interpolation through knots `(r_i, w_i)`,
///   starting at (0, 0); evaluation beyond the last knot is an error rather
///   than an extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuityModulus {
    Linear { l0: f64 },
    Power { c: f64, p: f64 },
    PiecewiseLinear(PiecewiseModulus),
}

/// Tabulated modulus with precomputed per-segment integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseModulus {
    knots: Vec<(f64, f64)>,
    // prefix_area[i] = integral of the interpolant over [0, r_i]
    prefix_area: Vec<f64>,
}

impl PiecewiseModulus {
    fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput(
                "piecewise modulus needs at least two knots".into(),
            ));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::InvalidInput(
                "piecewise modulus must start at the knot (0, 0)".into(),
            ));
        }
        for pair in knots.windows(2) {
            let (r0, w0) = pair[0];
            let (r1, w1) = pair[1];
            if !(r1.is_finite() && w1.is_finite()) {
                return Err(Error::NonFinite("modulus knot".into()));
            }
            if r1 <= r0 {
                return Err(Error::InvalidInput(
                    "piecewise modulus radii must be strictly increasing".into(),
                ));
            }
            if w1 < w0 {
                return Err(Error::InvalidInput(
                    "piecewise modulus values must be non-decreasing".into(),
                ));
            }
        }
        let mut prefix_area = Vec::with_capacity(knots.len());
        prefix_area.push(0.0);
        for pair in knots.windows(2) {
            let (r0, w0) = pair[0];
            let (r1, w1) = pair[1];
            let last = *prefix_area.last().unwrap();
            prefix_area.push(last + 0.5 * (w0 + w1) * (r1 - r0));
        }
        Ok(PiecewiseModulus { knots, prefix_area })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn r_max(&self) -> f64 {
        self.knots.last().unwrap().0
    }

    /// Index of the segment [r_i, r_{i+1}] containing r (r <= r_max).
    fn segment_of(&self, r: f64) -> usize {
        let i = self.knots.partition_point(|&(knot_r, _)| knot_r <= r);
        i.saturating_sub(1).min(self.knots.len() - 2)
    }

    fn eval(&self, r: f64) -> Result<f64> {
        if r > self.r_max() {
            return Err(Error::BeyondTabulatedRange {
                r,
                r_max: self.r_max(),
            });
        }
        let i = self.segment_of(r);
        let (r0, w0) = self.knots[i];
        let (r1, w1) = self.knots[i + 1];
        Ok(w0 + (w1 - w0) * (r - r0) / (r1 - r0))
    }

    fn integral(&self, v: f64) -> Result<f64> {
        if v > self.r_max() {
            return Err(Error::BeyondTabulatedRange {
                r: v,
                r_max: self.r_max(),
            });
        }
        let i = self.segment_of(v);
        let (r0, w0) = self.knots[i];
        let w_v = self.eval(v)?;
        Ok(self.prefix_area[i] + 0.5 * (w0 + w_v) * (v - r0))
    }
}

impl ContinuityModulus {
    /// `w0(r) = l0 * r`, `l0 >= 0`.
    pub fn linear(l0: f64) -> Result<Self> {
        if !(l0.is_finite() && l0 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "linear modulus slope must be finite and >= 0, got {l0}"
            )));
        }
        Ok(ContinuityModulus::Linear { l0 })
    }

    /// `w0(r) = c * r^p`, `c >= 0`, `0 < p <= 1`.
    pub fn power(c: f64, p: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "power modulus coefficient must be finite and >= 0, got {c}"
            )));
        }
        if !(p.is_finite() && p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "power modulus exponent must lie in ]0, 1], got {p}"
            )));
        }
        Ok(ContinuityModulus::Power { c, p })
    }

    /// Interpolated tabulated modulus; knots must start at (0, 0), have
    /// strictly increasing radii and non-decreasing values.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        Ok(ContinuityModulus::PiecewiseLinear(PiecewiseModulus::new(
            knots,
        )?))
    }

    /// w0(r).
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "modulus argument must be >= 0, got {r}"
            )));
        }
        match self {
            ContinuityModulus::Linear { l0 } => Ok(l0 * r),
            ContinuityModulus::Power { c, p } => Ok(c * r.powf(*p)),
            ContinuityModulus::PiecewiseLinear(t) => t.eval(r),
        }
    }

    /// Exact integral of w0 over [0, v]: closed form for the analytic
    /// variants, trapezoid sums per segment for tables. Never falls back to
    /// numeric quadrature.
    pub fn integral(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "integral endpoint must be >= 0, got {v}"
            )));
        }
        match self {
            ContinuityModulus::Linear { l0 } => Ok(0.5 * l0 * v * v),
            ContinuityModulus::Power { c, p } => Ok(c * v.powf(p + 1.0) / (p + 1.0)),
            ContinuityModulus::PiecewiseLinear(t) => t.integral(v),
        }
    }

    /// Largest radius at which the modulus can be evaluated, if bounded.
    pub fn max_radius(&self) -> Option<f64> {
        match self {
            ContinuityModulus::PiecewiseLinear(t) => Some(t.r_max()),
            _ => None,
        }
    }

    /// True when the modulus is identically zero (constant derivative).
    pub fn is_zero(&self) -> bool {
        match self {
            ContinuityModulus::Linear { l0 } => *l0 == 0.0,
            ContinuityModulus::Power { c, .. } => *c == 0.0,
            ContinuityModulus::PiecewiseLinear(t) => t.knots.iter().all(|&(_, w)| w == 0.0),
        }
    }

    /// Short human-readable description for reports.
    pub fn describe(&self) -> String {
        match self {
            ContinuityModulus::Linear { l0 } => format!("linear(l0={l0})"),
            ContinuityModulus::Power { c, p } => format!("power(c={c}, p={p})"),
            ContinuityModulus::PiecewiseLinear(t) => format!(
                "table({} knots, r_max={})",
                t.knots.len(),
                t.r_max()
            ),
        }
    }
}

/// The pair of a center-Lipschitz constant l0 and a full Lipschitz constant l
/// (both in the affine-invariant scaling), with l0 <= l.
///
/// l0 measures the derivative's deviation from the starting point only and is
/// generically smaller than l; zero values describe a constant derivative
/// (affine system).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzPair {
    l0: f64,
    l: f64,
}

impl LipschitzPair {
    pub fn new(l0: f64, l: f64) -> Result<Self> {
        if !(l0.is_finite() && l.is_finite() && l0 >= 0.0 && l >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "Lipschitz constants must be finite and >= 0, got l0={l0}, l={l}"
            )));
        }
        if l0 > l {
            return Err(Error::InvalidInput(format!(
                "center-Lipschitz constant must satisfy l0 <= l, got l0={l0} > l={l}"
            )));
        }
        Ok(LipschitzPair { l0, l })
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn ratio(&self) -> f64 {
        self.l0 / self.l
    }
}

/// A lower envelope of the true modulus, produced by finite sampling.
///
/// A maximum over finitely many directions cannot certify an upper bound, so
/// the estimate is explicitly flagged: certificates built on it are heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerEstimate(pub ContinuityModulus);

impl LowerEstimate {
    pub fn into_modulus(self) -> ContinuityModulus {
        self.0
    }
}

/// Samples the preconditioned Jacobian deviation on spheres of the given
/// radii and returns the monotone envelope as a tabulated modulus with a
/// leading (0, 0) knot.
///
/// For each radius the probe points are `x0 + r*d` over all +-coordinate
/// directions plus random infinity-norm unit vectors, `dirs_per_radius` in
/// total (at least 2n). Directions come from the caller's generator, so the
/// result is deterministic given the seed.
pub fn estimate_modulus<R: Rng + ?Sized>(
    sys: &NonlinearSystem,
    radii: &[f64],
    dirs_per_radius: usize,
    rng: &mut R,
) -> Result<LowerEstimate> {
    let n = sys.dim();
    if radii.is_empty() {
        return Err(Error::InvalidInput("need at least one radius".into()));
    }
    for pair in radii.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidInput(
                "radii must be strictly increasing".into(),
            ));
        }
    }
    if radii[0] <= 0.0 {
        return Err(Error::InvalidInput("radii must be positive".into()));
    }
    let r_last = *radii.last().unwrap();
    if r_last > sys.radius() {
        return Err(Error::OutOfDomain {
            distance: r_last,
            radius: sys.radius(),
        });
    }
    if dirs_per_radius < 2 * n {
        return Err(Error::InvalidInput(format!(
            "need at least 2n = {} directions per radius, got {dirs_per_radius}",
            2 * n
        )));
    }

    let mut directions: Vec<Vector> = Vec::with_capacity(dirs_per_radius);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = sign;
            directions.push(Vector::from_raw(d));
        }
    }
    while directions.len() < dirs_per_radius {
        directions.push(random_unit_inf(n, rng));
    }

    let mut knots = vec![(0.0, 0.0)];
    let mut envelope = 0.0f64;
    for &r in radii {
        let mut worst = 0.0f64;
        for d in &directions {
            let x = sys.x0().add(&d.scale(r));
            let deviation = centered_deviation_norm(sys, &x)?;
            worst = worst.max(deviation);
        }
        // Cumulative max keeps the tabulated envelope non-decreasing.
        envelope = envelope.max(worst);
        knots.push((r, envelope));
    }
    Ok(LowerEstimate(ContinuityModulus::piecewise_linear(knots)?))
}

/// Random vector with infinity norm exactly 1.
fn random_unit_inf<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm > 1e-6 {
            return Vector::from_raw(raw.iter().map(|x| x / norm).collect());
        }
    }
}

/// Serialized form of a modulus:
/// `{"kind":"linear","l0":...}`, `{"kind":"power","c":...,"p":...}` or
/// `{"kind":"table","knots":[[r,w],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModulusSpec {
    Linear { l0: f64 },
    Power { c: f64, p: f64 },
    Table { knots: Vec<[f64; 2]> },
}

impl ModulusSpec {
    pub fn build(&self) -> Result<ContinuityModulus> {
        match self {
            ModulusSpec::Linear { l0 } => ContinuityModulus::linear(*l0),
            ModulusSpec::Power { c, p } => ContinuityModulus::power(*c, *p),
            ModulusSpec::Table { knots } => ContinuityModulus::piecewise_linear(
                knots.iter().map(|k| (k[0], k[1])).collect(),
            ),
        }
    }
}

/// Loads a modulus from a JSON file.
pub fn load_modulus_file(path: &std::path::Path) -> Result<ContinuityModulus> {
    let text = std::fs::read_to_string(path)?;
    let spec: ModulusSpec = serde_json::from_str(&text)?;
    spec.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::problem::load_builtin;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    #[test]
    fn eval_linear() {
        let m = ContinuityModulus::linear(2.0).unwrap();
        assert_eq!(m.eval(0.3).unwrap(), 0.6);
        assert_eq!(m.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn eval_at_zero_is_zero_for_all_variants() {
        let variants = [
            ContinuityModulus::linear(3.0).unwrap(),
            ContinuityModulus::power(2.0, 0.5).unwrap(),
            ContinuityModulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.5)]).unwrap(),
        ];
        for m in variants {
            assert_eq!(m.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn eval_piecewise_interpolates() {
        let m =
            ContinuityModulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_close(m.eval(0.5).unwrap(), 0.25, 1e-15);
        assert_close(m.eval(1.5).unwrap(), 0.5, 1e-15);
        assert_close(m.eval(2.0).unwrap(), 0.5, 1e-15);
    }

    #[test]
    fn eval_beyond_table_errors() {
        let m = ContinuityModulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.5)]).unwrap();
        assert!(matches!(
            m.eval(1.5),
            Err(Error::BeyondTabulatedRange { .. })
        ));
        assert!(matches!(
            m.integral(1.0 + 1e-9),
            Err(Error::BeyondTabulatedRange { .. })
        ));
    }

    #[test]
    fn integral_examples() {
        let linear = ContinuityModulus::linear(1.0).unwrap();
        assert_close(linear.integral(2.0).unwrap(), 2.0, 1e-15);
        assert_eq!(linear.integral(0.0).unwrap(), 0.0);

        let power = ContinuityModulus::power(1.0, 0.5).unwrap();
        assert_close(power.integral(1.0).unwrap(), 2.0 / 3.0, 1e-15);
    }

    #[test]
    fn integral_piecewise_exact() {
        // w(r) = r/2 up to r=1 then flat at 1/2: integral over [0, 1.5]
        // is 1/4 + 1/4 = 0.5.
        let m =
            ContinuityModulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_close(m.integral(1.5).unwrap(), 0.5, 1e-15);
    }

    #[test]
    fn invalid_constructions_rejected() {
        assert!(ContinuityModulus::linear(-1.0).is_err());
        assert!(ContinuityModulus::power(1.0, 0.0).is_err());
        assert!(ContinuityModulus::power(1.0, 1.5).is_err());
        assert!(ContinuityModulus::piecewise_linear(vec![(0.0, 0.1), (1.0, 0.5)]).is_err());
        assert!(ContinuityModulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.5), (1.0, 0.6)])
            .is_err());
        assert!(
            ContinuityModulus::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.4)]).is_err()
        );
        assert!(LipschitzPair::new(2.0, 1.0).is_err());
        assert!(LipschitzPair::new(1.0, 1.0).is_ok());
        assert!(LipschitzPair::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn estimate_on_affine_is_zero() {
        let p = load_builtin("affine").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let est = estimate_modulus(&p.system, &[0.5, 1.0], 4, &mut rng).unwrap();
        let m = est.into_modulus();
        assert_eq!(m.eval(1.0).unwrap(), 0.0);
        assert!(m.is_zero());
    }

    #[test]
    fn estimate_scalar_sqrt2_matches_formula() {
        // Deviation for F(x) = x^2 - 2 at x0 = 1.4 is |x - x0| / x0, so the
        // sphere maxima are r / 1.4, attained at the coordinate directions.
        let p = load_builtin("scalar-sqrt2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let est = estimate_modulus(&p.system, &[0.1, 0.2], 2, &mut rng).unwrap();
        match est.0 {
            ContinuityModulus::PiecewiseLinear(ref t) => {
                let knots = t.knots();
                assert_eq!(knots.len(), 3);
                assert_eq!(knots[0], (0.0, 0.0));
                assert_close(knots[1].1, 0.1 / 1.4, 1e-12);
                assert_close(knots[2].1, 0.2 / 1.4, 1e-12);
            }
            _ => panic!("expected tabulated modulus"),
        }
    }

    #[test]
    fn estimate_out_of_domain() {
        let p = load_builtin("scalar-sqrt2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r_too_big = p.system.radius() * 2.0;
        assert!(matches!(
            estimate_modulus(&p.system, &[0.1, r_too_big], 2, &mut rng),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn estimate_below_analytic_modulus() {
        for name in ["scalar-sqrt2", "scalar-exp", "2d-quadratic", "affine"] {
            let p = load_builtin(name).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            let r = p.system.radius();
            let radii = [0.2 * r, 0.5 * r, 0.9 * r];
            let est = estimate_modulus(&p.system, &radii, 2 * p.system.dim() + 4, &mut rng)
                .unwrap()
                .into_modulus();
            for &radius in &radii {
                let estimated = est.eval(radius).unwrap();
                let analytic = p.analytic_modulus.eval(radius).unwrap();
                assert!(
                    estimated <= analytic + 1e-9,
                    "{name}: estimate {estimated} above analytic {analytic} at r={radius}"
                );
            }
        }
    }

    #[test]
    fn modulus_spec_round_trip() {
        let spec: ModulusSpec =
            serde_json::from_str(r#"{"kind":"table","knots":[[0.0,0.0],[1.0,0.25]]}"#).unwrap();
        let m = spec.build().unwrap();
        assert_close(m.eval(0.5).unwrap(), 0.125, 1e-15);
        let linear: ModulusSpec = serde_json::from_str(r#"{"kind":"linear","l0":2.5}"#).unwrap();
        assert_eq!(
            linear.build().unwrap(),
            ContinuityModulus::linear(2.5).unwrap()
        );
    }

    fn arb_modulus() -> impl Strategy<Value = ContinuityModulus> {
        prop_oneof![
            (0.0f64..4.0).prop_map(|l0| ContinuityModulus::linear(l0).unwrap()),
            (0.0f64..3.0, 0.05f64..=1.0)
                .prop_map(|(c, p)| ContinuityModulus::power(c, p).unwrap()),
            (
                proptest::collection::vec(0.01f64..1.0, 1..6),
                proptest::collection::vec(0.0f64..0.5, 1..6)
            )
                .prop_map(|(dr, dw)| {
                    let mut knots = vec![(0.0, 0.0)];
                    let mut r = 0.0;
                    let mut w = 0.0;
                    for i in 0..dr.len() {
                        r += dr[i];
                        w += dw[i % dw.len()];
                        knots.push((r, w));
                    }
                    ContinuityModulus::piecewise_linear(knots).unwrap()
                }),
        ]
    }

    proptest! {
        #[test]
        fn eval_is_non_decreasing(m in arb_modulus(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let r_max = m.max_radius().unwrap_or(f64::INFINITY);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let lo = lo.min(r_max);
            let hi = hi.min(r_max);
            prop_assert!(m.eval(lo).unwrap() <= m.eval(hi).unwrap() + 1e-15);
        }

        #[test]
        fn closed_form_integral_matches_quadrature(m in arb_modulus(), v in 0.0f64..1.0) {
            let v = v.min(m.max_radius().unwrap_or(f64::INFINITY));
            let exact = m.integral(v).unwrap();
            let quad = integrate(|l| m.eval(l).unwrap(), v, 1e-12).unwrap();
            let tol = (1e-9 * exact.abs()).max(1e-13);
            prop_assert!(
                (exact - quad).abs() <= tol,
                "closed form {exact} vs quadrature {quad}"
            );
        }
    }
}
