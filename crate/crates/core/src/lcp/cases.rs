//! The two special cases where the solution has `u = 0` or `Cx + Du + v = 0`.
//! Both reduce to a linear mixed complementarity problem in the difference
//! variables `x = U w` (`U` the upper all-ones triangle), which is handed to a
//! caller-supplied [`LinearMcpSolver`].

use nalgebra::{DMatrix, DVector};

use super::LcpInstance;
use crate::cone::ConePoint;
use crate::error::{Error, Result};
use crate::linalg::{approx_eq, approx_geq, upper_ones};

/// Linear mixed complementarity problem in `n = n_comp + n_free` unknowns
/// `z = (w, u)`:
///
/// ```text
///     0 <= w  _|_  (M z + q)[..n_comp] >= 0
///     (M z + q)[n_comp..] = 0,          u free
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMcp {
    pub m: DMatrix<f64>,
    pub q: DVector<f64>,
    pub n_comp: usize,
}

impl LinearMcp {
    pub fn new(m: DMatrix<f64>, q: DVector<f64>, n_comp: usize) -> Result<Self> {
        if !m.is_square() || m.nrows() != q.len() || n_comp > q.len() {
            return Err(Error::Dimension(format!(
                "mixed LCP with M {}x{}, q {}, {} complementarity rows",
                m.nrows(),
                m.ncols(),
                q.len(),
                n_comp
            )));
        }
        Ok(Self { m, q, n_comp })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn image(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.m * z + &self.q
    }

    /// Largest violation of the complementarity and equality conditions.
    pub fn violation(&self, z: &DVector<f64>) -> f64 {
        let f = self.image(z);
        let mut worst = 0.0_f64;
        for i in 0..self.dim() {
            if i < self.n_comp {
                worst = worst.max(-z[i]).max(-f[i]).max(z[i].min(f[i]).abs());
            } else {
                worst = worst.max(f[i].abs());
            }
        }
        worst
    }
}

/// Anything that can solve a [`LinearMcp`].
pub trait LinearMcpSolver {
    fn solve_mcp(&self, problem: &LinearMcp) -> Result<DVector<f64>>;
}

/// Case `u = 0`: solve `LCP(A, y)` over the monotone nonnegative cone, then
/// require `x_p = 0` and `e'(Ax + y) >= ||Cx + v||`.
///
/// Returns `Ok(None)` when the sub-solution fails these checks.
pub fn solve_case_u_zero<S: LinearMcpSolver + ?Sized>(
    inst: &LcpInstance,
    solver: &S,
    tol: f64,
) -> Result<Option<ConePoint>> {
    let p = inst.dims().p();
    let q = inst.dims().q();
    let upper = upper_ones(p);
    // x = U w; the monotone dual cone is the set where U' s >= 0
    let m = upper.transpose() * &inst.t.a * &upper;
    let rhs = upper.transpose() * &inst.r.x;
    let problem = LinearMcp::new(m, rhs, p)?;
    let w = solver.solve_mcp(&problem)?;
    let x = &upper * w;

    let s = &inst.t.a * &x + &inst.r.x;
    let lower = &inst.t.c * &x + &inst.r.u;
    let accepted = approx_eq(x[p - 1], 0.0, tol) && approx_geq(s.sum(), lower.norm(), tol);
    Ok(accepted.then(|| ConePoint::new(x, DVector::zeros(q))))
}

/// Case `Cx + Du + v = 0`: solve the mixed problem with complementarity map
/// `Ax + Bu + y` over the monotone nonnegative cone and the linear equality,
/// then require `x_i >= ||u||` and `e'(Ax + Bu + y) = 0`.
pub fn solve_case_w_zero<S: LinearMcpSolver + ?Sized>(
    inst: &LcpInstance,
    solver: &S,
    tol: f64,
) -> Result<Option<ConePoint>> {
    let p = inst.dims().p();
    let q = inst.dims().q();
    let upper = upper_ones(p);
    let mut m = DMatrix::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p))
        .copy_from(&(upper.transpose() * &inst.t.a * &upper));
    m.view_mut((0, p), (p, q))
        .copy_from(&(upper.transpose() * &inst.t.b));
    m.view_mut((p, 0), (q, p)).copy_from(&(&inst.t.c * &upper));
    m.view_mut((p, p), (q, q)).copy_from(&inst.t.d);
    let mut rhs = DVector::zeros(p + q);
    rhs.rows_mut(0, p).copy_from(&(upper.transpose() * &inst.r.x));
    rhs.rows_mut(p, q).copy_from(&inst.r.u);

    let problem = LinearMcp::new(m, rhs, p)?;
    let sol = solver.solve_mcp(&problem)?;
    let x = &upper * sol.rows(0, p);
    let u = sol.rows(p, q).into_owned();

    let s = &inst.t.a * &x + &inst.t.b * &u + &inst.r.x;
    let u_norm = u.norm();
    let accepted =
        x.iter().all(|&xi| approx_geq(xi, u_norm, tol)) && approx_eq(s.sum(), 0.0, tol);
    Ok(accepted.then(|| ConePoint::new(x, u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{classify_pair, ConeDims};
    use crate::lcp::BlockMatrix;
    use crate::solver::FbLinearMcpSolver;

    /// Enumerates complementary index patterns; exact for small nondegenerate
    /// problems and independent of the Newton iteration.
    struct Enumeration;

    impl LinearMcpSolver for Enumeration {
        fn solve_mcp(&self, problem: &LinearMcp) -> Result<DVector<f64>> {
            let n = problem.dim();
            let k = problem.n_comp;
            for mask in 0u32..(1 << k) {
                // rows i < k in `mask` have w_i basic (F_i = 0); others have w_i = 0
                let mut a = DMatrix::zeros(n, n);
                let mut b = DVector::zeros(n);
                for i in 0..n {
                    let basic = i >= k || mask & (1 << i) != 0;
                    if basic {
                        a.set_row(i, &problem.m.row(i));
                        b[i] = -problem.q[i];
                    } else {
                        a[(i, i)] = 1.0;
                    }
                }
                if let Some(z) = a.lu().solve(&b) {
                    if problem.violation(&z) <= 1e-10 {
                        return Ok(z);
                    }
                }
            }
            Err(Error::SubSolver("no complementary pattern".into()))
        }
    }

    fn instance(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>, y: &[f64], v: &[f64]) -> LcpInstance {
        let dims = ConeDims::new(a.nrows(), d.nrows()).unwrap();
        LcpInstance::new(BlockMatrix::new(dims, a, b, c, d).unwrap(), ConePoint::from_slices(y, v)).unwrap()
    }

    #[test]
    fn u_zero_accepts_origin_for_nonnegative_y() {
        let inst = instance(
            DMatrix::identity(3, 3),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 3),
            DMatrix::identity(1, 1),
            &[1.0, 0.5, 2.0],
            &[0.0],
        );
        for solver in [&Enumeration as &dyn LinearMcpSolver, &FbLinearMcpSolver::default()] {
            let z = solve_case_u_zero(&inst, solver, 1e-9).unwrap().unwrap();
            assert!(z.x.norm() < 1e-9);
            let s = inst.affine_image(&z).unwrap();
            assert!(classify_pair(&z, &s, 1e-8).unwrap().accepted());
        }
    }

    #[test]
    fn u_zero_rejects_nonzero_tail() {
        // A = I, y = -e: the unique monotone-cone solution is x = e, so x_p != 0
        let inst = instance(
            DMatrix::identity(3, 3),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 3),
            DMatrix::identity(1, 1),
            &[-1.0, -1.0, -1.0],
            &[0.0],
        );
        assert!(solve_case_u_zero(&inst, &Enumeration, 1e-9).unwrap().is_none());
        assert!(solve_case_u_zero(&inst, &FbLinearMcpSolver::default(), 1e-9)
            .unwrap()
            .is_none());
        // y = (-1, 0, 0): x = (1, 0, 0) has x_p = 0 and Ax + y = 0
        let inst = instance(
            DMatrix::identity(3, 3),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 3),
            DMatrix::identity(1, 1),
            &[-1.0, 0.0, 0.0],
            &[0.0],
        );
        let z = solve_case_u_zero(&inst, &Enumeration, 1e-9).unwrap().unwrap();
        assert!((z.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u_zero_rejects_when_sum_below_lower_norm() {
        let inst = instance(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::identity(1, 1),
            &[0.5, 0.5],
            &[3.0],
        );
        assert!(solve_case_u_zero(&inst, &Enumeration, 1e-9).unwrap().is_none());
    }

    #[test]
    fn w_zero_with_identity_d_forces_u_zero() {
        let inst = instance(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            &[0.0, 0.0],
            &[0.0, 0.0],
        );
        let z = solve_case_w_zero(&inst, &Enumeration, 1e-9).unwrap().unwrap();
        assert!(z.u.norm() < 1e-12);
    }

    fn planted_w_zero(x_tail: f64) -> LcpInstance {
        // x = 2e (or with a small tail), u = (0.6, 0.8), y := -Ax - Bu, v := -Cx - Du
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 5.0]);
        let b = DMatrix::from_row_slice(3, 2, &[0.5, -1.0, 0.0, 1.0, 1.0, 0.0]);
        let c = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 0.0, 2.0, 0.0]);
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, -1.0, 2.0]);
        let x = DVector::from_vec(vec![2.0, 2.0, x_tail]);
        let u = DVector::from_vec(vec![0.6, 0.8]);
        let y = -(&a * &x + &b * &u);
        let v = -(&c * &x + &d * &u);
        instance(a, b, c, d, y.as_slice(), v.as_slice())
    }

    #[test]
    fn w_zero_recovers_planted_point() {
        let inst = planted_w_zero(2.0);
        for solver in [&Enumeration as &dyn LinearMcpSolver, &FbLinearMcpSolver::default()] {
            let z = solve_case_w_zero(&inst, solver, 1e-9).unwrap().unwrap();
            assert!((z.x.add_scalar(-2.0)).amax() < 1e-8);
            assert!((z.u[0] - 0.6).abs() < 1e-8 && (z.u[1] - 0.8).abs() < 1e-8);
        }
    }

    #[test]
    fn w_zero_rejects_tail_below_norm_u() {
        // the planted point has x_p = 0.5 < ||u|| = 1
        let inst = planted_w_zero(0.5);
        assert!(solve_case_w_zero(&inst, &Enumeration, 1e-9).unwrap().is_none());
    }
}
