//! Dense vector/matrix arithmetic, LU solving with partial pivoting, the
//! infinity norm and its induced operator norm, and adaptive Simpson
//! quadrature.
//!
//! Everything here works on desk-scale systems (n <= 100 or so) and sticks to
//! the infinity norm, whose induced matrix norm is exactly the maximum
//! absolute row sum. All operations are pure functions over immutable values.

use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot with magnitude at or below
/// `1e-14 * max|A|` is treated as zero.
const PIVOT_REL_TOL: f64 = 1e-14;

/// Default relative tolerance for [`integrate`].
pub const DEFAULT_QUAD_REL_TOL: f64 = 1e-12;

/// Absolute floor for the quadrature tolerance.
const QUAD_ABS_FLOOR: f64 = 1e-15;

/// Maximum recursion depth for adaptive Simpson.
const QUAD_MAX_DEPTH: u32 = 60;

/// A finite real vector of dimension n >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("vector must have dimension >= 1".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("vector entry".into()));
        }
        Ok(Vector(entries))
    }

    /// Internal constructor for values produced by our own arithmetic.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Vector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Maximum absolute entry.
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Componentwise difference.
    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Componentwise sum.
    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Scalar multiple.
    pub fn scale(&self, factor: f64) -> Vector {
        Vector::from_raw(self.0.iter().map(|a| a * factor).collect())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A square matrix with finite entries, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds an n x n matrix from row-major data.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix must have dimension >= 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(Matrix { n, data })
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Matrix { n, data }
    }

    /// Builds a matrix from rows; every row must have the same length as the
    /// number of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows must form a square".into()));
        }
        Matrix::new(n, rows.iter().flatten().copied().collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    /// Matrix-vector product.
    pub fn mat_vec(&self, v: &Vector) -> Vector {
        assert_eq!(self.n, v.dim(), "dimension mismatch");
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(v.as_slice()).map(|(a, x)| a * x).sum();
        }
        Vector::from_raw(out)
    }

    /// Matrix-matrix product.
    pub fn mat_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Matrix::from_raw(n, out)
    }

    /// Componentwise difference.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Matrix::from_raw(
            self.n,
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        )
    }

    /// Induced infinity norm: the maximum absolute row sum. Exact for the
    /// infinity vector norm, submultiplicative and consistent with it.
    pub fn operator_norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|x| x.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Extracts column j.
    pub fn column(&self, j: usize) -> Vector {
        Vector::from_raw((0..self.n).map(|i| self.get(i, j)).collect())
    }
}

/// Solves A x = b by LU factorization with partial pivoting.
///
/// Fails with [`Error::SingularMatrix`] when a pivot magnitude falls to
/// `1e-14 * max|A|` or below, which signals that A is numerically
/// non-invertible.
pub fn solve_linear(a: &Matrix, b: &Vector) -> Result<Vector> {
    assert_eq!(a.dim(), b.dim(), "dimension mismatch");
    let n = a.dim();
    let tol = PIVOT_REL_TOL * a.max_abs();

    let mut lu = a.data.clone();
    let mut x: Vec<f64> = b.as_slice().to_vec();

    for col in 0..n {
        // Partial pivoting: bring the largest remaining entry of this column
        // to the diagonal.
        let mut pivot_row = col;
        let mut pivot_mag = lu[col * n + col].abs();
        for row in col + 1..n {
            let mag = lu[row * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        // Written so that a NaN pivot also counts as singular.
        if !(pivot_mag > tol) {
            return Err(Error::SingularMatrix);
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let pivot = lu[col * n + col];
        for row in col + 1..n {
            let factor = lu[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[row * n + col] = 0.0;
            for j in col + 1..n {
                lu[row * n + j] -= factor * lu[col * n + j];
            }
            x[row] -= factor * x[col];
        }
    }

    // Back substitution.
    for row in (0..n).rev() {
        let mut sum = x[row];
        for j in row + 1..n {
            sum -= lu[row * n + j] * x[j];
        }
        x[row] = sum / lu[row * n + row];
    }

    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear solve result".into()));
    }
    Ok(Vector::from_raw(x))
}

/// Integrates f over [0, b] by adaptive Simpson quadrature with relative
/// tolerance `rel_tol` (absolute floor 1e-15).
///
/// Intended for continuous, non-negative, non-decreasing integrands such as
/// continuity moduli; fails with [`Error::NonConvergedQuadrature`] after 60
/// recursion levels.
///
/// The panel acceptance test uses the full tolerance rather than splitting
/// it between children: Hoelder-type integrands (infinite slope at 0, e.g.
/// `c l^p` with small p) would otherwise outrun a halving budget near the
/// endpoint and never terminate within the depth limit.
pub fn integrate<F: Fn(f64) -> f64>(f: F, b: f64, rel_tol: f64) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "integration endpoint must be >= 0, got {b}"
        )));
    }
    if b == 0.0 {
        return Ok(0.0);
    }

    let fa = f(0.0);
    let fb = f(b);
    let (m, fm, whole) = simpson_panel(&f, 0.0, fa, b, fb);
    let eps = (rel_tol * whole.abs()).max(QUAD_ABS_FLOOR);
    adaptive_step(&f, 0.0, fa, m, fm, b, fb, whole, eps, 1)
}

/// One Simpson panel over [a, b]; returns the midpoint, its value, and the
/// panel estimate.
fn simpson_panel<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let estimate = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    (m, fm, estimate)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let (ml, fml, left) = simpson_panel(f, a, fa, m, fm);
    let (mr, fmr, right) = simpson_panel(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= QUAD_MAX_DEPTH {
        return Err(Error::NonConvergedQuadrature);
    }
    Ok(adaptive_step(f, a, fa, ml, fml, m, fm, left, eps, depth + 1)?
        + adaptive_step(f, m, fm, mr, fmr, b, fb, right, eps, depth + 1)?)
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

    #[test]
    fn solve_identity() {
        let a = Matrix::identity(3);
        let b = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_diagonal() {
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let b = Vector::new(vec![2.0, 8.0]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn solve_rank_deficient_is_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let b = Vector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(solve_linear(&a, &b), Err(Error::SingularMatrix)));
    }

    #[test]
    fn solve_zero_matrix_is_singular() {
        let a = Matrix::zeros(1);
        let b = Vector::new(vec![1.0]).unwrap();
        assert!(matches!(solve_linear(&a, &b), Err(Error::SingularMatrix)));
    }

    #[test]
    fn solve_needs_pivoting() {
        // Zero on the first diagonal entry forces a row swap.
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let b = Vector::new(vec![3.0, 5.0]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x.as_slice(), &[5.0, 3.0]);
    }

    #[test]
    fn norm_inf_examples() {
        assert_eq!(Vector::new(vec![0.0, 0.0, 0.0]).unwrap().norm_inf(), 0.0);
        assert_eq!(Vector::new(vec![-3.0, 2.0]).unwrap().norm_inf(), 3.0);
        assert_eq!(Vector::new(vec![1e-300, -1.0]).unwrap().norm_inf(), 1.0);
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(Matrix::identity(4).operator_norm_inf(), 1.0);
        let a = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(a.operator_norm_inf(), 3.0);
        assert_eq!(Matrix::zeros(3).operator_norm_inf(), 0.0);
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(Vector::new(vec![f64::NAN]).is_err());
        assert!(Vector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Matrix::new(2, vec![1.0, 2.0, f64::NAN, 4.0]).is_err());
        assert!(Vector::new(vec![]).is_err());
    }

    #[test]
    fn integrate_zero_function() {
        assert_eq!(integrate(|_| 0.0, 5.0, 1e-12).unwrap(), 0.0);
        assert_eq!(integrate(|l| l, 0.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn integrate_linear_and_quadratic() {
        assert_close(integrate(|l| l, 2.0, 1e-12).unwrap(), 2.0, 1e-12);
        assert_close(integrate(|l| l * l, 3.0, 1e-12).unwrap(), 9.0, 1e-10);
    }

    #[test]
    fn integrate_exponential() {
        let v = integrate(|l| l.exp() - 1.0, 1.0, 1e-12).unwrap();
        assert_close(v, 1.0_f64.exp() - 2.0, 1e-11);
    }

    #[test]
    fn integrate_rejects_negative_endpoint() {
        assert!(integrate(|l| l, -1.0, 1e-12).is_err());
    }

    /// Random diagonally dominant matrix; comfortably well-conditioned.
    fn dominant_matrix(n: usize, seed: &[f64]) -> Matrix {
        let mut data = vec![0.0; n * n];
        for (k, slot) in data.iter_mut().enumerate() {
            *slot = seed[k % seed.len()] * if k % 3 == 0 { -1.0 } else { 1.0 };
        }
        let mut m = Matrix::from_raw(n, data);
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| m.get(i, j).abs()).sum();
            m.set(i, i, row_sum + 1.0);
        }
        m
    }

    proptest! {
        #[test]
        fn solve_residual_small(
            n in 1usize..=50,
            seed in proptest::collection::vec(-10.0f64..10.0, 8..64),
            rhs_seed in proptest::collection::vec(-100.0f64..100.0, 8..64),
        ) {
            let a = dominant_matrix(n, &seed);
            let b = Vector::from_raw((0..n).map(|i| rhs_seed[i % rhs_seed.len()]).collect());
            let x = solve_linear(&a, &b).unwrap();
            let residual = a.mat_vec(&x).sub(&b).norm_inf();
            prop_assert!(residual <= 1e-10 * b.norm_inf().max(1.0));
        }

        #[test]
        fn operator_norm_submultiplicative(
            n in 1usize..=8,
            da in proptest::collection::vec(-5.0f64..5.0, 64),
            db in proptest::collection::vec(-5.0f64..5.0, 64),
        ) {
            let a = Matrix::from_raw(n, da[..n * n].to_vec());
            let b = Matrix::from_raw(n, db[..n * n].to_vec());
            let lhs = a.mat_mul(&b).operator_norm_inf();
            let rhs = a.operator_norm_inf() * b.operator_norm_inf();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn operator_norm_consistent_with_vector_norm(
            n in 1usize..=8,
            da in proptest::collection::vec(-5.0f64..5.0, 64),
            dv in proptest::collection::vec(-5.0f64..5.0, 8),
        ) {
            let a = Matrix::from_raw(n, da[..n * n].to_vec());
            let v = Vector::from_raw(dv[..n].to_vec());
            let lhs = a.mat_vec(&v).norm_inf();
            let rhs = a.operator_norm_inf() * v.norm_inf();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn integrate_monotone_in_endpoint(b1 in 0.0f64..3.0, b2 in 0.0f64..3.0) {
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let f = |l: f64| l.sqrt();
            let v_lo = integrate(f, lo, 1e-12).unwrap();
            let v_hi = integrate(f, hi, 1e-12).unwrap();
            prop_assert!(v_lo <= v_hi + 1e-12);
        }
    }
}
