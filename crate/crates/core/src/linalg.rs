//! Small dense helpers shared by the cone, reformulation and solver code.

use nalgebra::{DMatrix, DVector};

/// Running sums `(v_1, v_1 + v_2, ...)`.
pub fn prefix_sums(v: &DVector<f64>) -> DVector<f64> {
    let mut acc = 0.0;
    DVector::from_iterator(
        v.len(),
        v.iter().map(|&vi| {
            acc += vi;
            acc
        }),
    )
}

/// Lower-triangular all-ones matrix `L_I`; left-multiplying takes prefix sums.
pub fn lower_ones(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 })
}

/// Upper-triangular all-ones matrix `U_I`.
pub fn upper_ones(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j >= i { 1.0 } else { 0.0 })
}

pub fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Maximum absolute column sum.
pub fn norm_one(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Result of a dense LU solve with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseSolve {
    pub solution: DVector<f64>,
    /// 1-norm condition number computed from the factorization.
    pub condition: f64,
}

/// Solves `m x = rhs` by LU with partial pivoting. Returns `None` when the
/// factorization reports an exactly singular matrix.
pub fn lu_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DenseSolve> {
    let lu = m.clone().lu();
    let inverse = lu.try_inverse()?;
    let solution = lu.solve(rhs)?;
    let condition = norm_one(m) * norm_one(&inverse);
    Some(DenseSolve {
        solution,
        condition,
    })
}

/// 1-norm condition estimate of a square matrix, `inf` when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    match m.clone().try_inverse() {
        Some(inv) => {
            let c = norm_one(m) * norm_one(&inv);
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// `a >= b` up to the mixed absolute/relative slack `tol * (1 + max(|a|, |b|))`.
pub fn approx_geq(a: f64, b: f64, tol: f64) -> bool {
    a >= b - tol * (1.0 + a.abs().max(b.abs()))
}

/// `|a - b| <= tol * (1 + max(|a|, |b|))`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sums_and_triangles() {
        let v = DVector::from_vec(vec![1.0, -2.0, 4.0]);
        assert_eq!(prefix_sums(&v).as_slice(), &[1.0, -1.0, 3.0]);
        assert_eq!(lower_ones(3) * &v, prefix_sums(&v));
        assert_eq!(
            upper_ones(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])
        );
    }

    #[test]
    fn lu_solve_reports_condition() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let s = lu_solve(&m, &DVector::from_vec(vec![2.0, 1.0])).unwrap();
        assert_eq!(s.solution.as_slice(), &[1.0, 2.0]);
        assert!((s.condition - 4.0).abs() < 1e-12);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(lu_solve(&singular, &DVector::zeros(2)).is_none());
        assert!(condition_number(&singular).is_infinite());
    }
}
