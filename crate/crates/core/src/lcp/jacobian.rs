use nalgebra::{DMatrix, DVector};

use super::{x_from_reform, LcpInstance, ReformPoint};
use crate::error::Result;
use crate::linalg::{lower_ones, upper_ones};

/// Jacobian of `(G, H)` with respect to `(w, (u, t))`:
///
/// ```text
///     [ dG/dw  dG/d(u,t) ]   [ A~  B~ ]
///     [ dH/dw  dH/d(u,t) ] = [ C~  D~ ]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBlocks {
    /// `(p-1) x (p-1)`.
    pub a_tilde: DMatrix<f64>,
    /// `(p-1) x (q+1)`.
    pub b_tilde: DMatrix<f64>,
    /// `(q+1) x (p-1)`.
    pub c_tilde: DMatrix<f64>,
    /// `(q+1) x (q+1)`.
    pub d_tilde: DMatrix<f64>,
}

impl JacobianBlocks {
    /// Stacks the four blocks into the square matrix `[A~ B~; C~ D~]`.
    pub fn assemble(&self) -> DMatrix<f64> {
        let m = self.a_tilde.nrows();
        let k = self.d_tilde.nrows();
        let mut j = DMatrix::zeros(m + k, m + k);
        j.view_mut((0, 0), (m, m)).copy_from(&self.a_tilde);
        j.view_mut((0, m), (m, k)).copy_from(&self.b_tilde);
        j.view_mut((m, 0), (k, m)).copy_from(&self.c_tilde);
        j.view_mut((m, m), (k, k)).copy_from(&self.d_tilde);
        j
    }

    /// Schur complement `A~ - B~ D~^{-1} C~`, or `None` when `D~` is singular.
    pub fn schur_complement(&self) -> Option<DMatrix<f64>> {
        let d_inv = self.d_tilde.clone().try_inverse()?;
        Some(&self.a_tilde - &self.b_tilde * d_inv * &self.c_tilde)
    }
}

impl LcpInstance {
    /// Exact Jacobian blocks of the reformulated maps at `pt`.
    ///
    /// With `L_I`, `U_I` the lower/upper all-ones triangles of order `p - 1`:
    ///
    /// ```text
    ///     A~ = L_I A[..p-1, ..p-1] U_I
    ///     B~ = [ L_I B[..p-1, :] | L_I A[..p-1, :] e ]
    ///     C~ = [ t C[:, ..p-1] U_I + u e' A[:, ..p-1] U_I ; 0 ]
    ///     D~ = [ t D + u e'B + e'(Ax + Bu + y) I | Du + v + Cx + t Ce + u e'Ae ;
    ///            -2u'                            | 2t                          ]
    /// ```
    pub fn jacobian_blocks(&self, pt: &ReformPoint) -> Result<JacobianBlocks> {
        self.check_reform(pt)?;
        let (p, q) = (self.dims.p(), self.dims.q());
        let m = p - 1;
        let (a, b, c, d) = (&self.t.a, &self.t.b, &self.t.c, &self.t.d);
        let l_i = lower_ones(m);
        let u_i = upper_ones(m);
        let x = x_from_reform(pt);
        let u = &pt.u;
        let t = pt.t;

        let a_head = a.view((0, 0), (m, m)).into_owned();
        let a_tilde = &l_i * a_head * &u_i;

        let mut b_tilde = DMatrix::zeros(m, q + 1);
        b_tilde
            .view_mut((0, 0), (m, q))
            .copy_from(&(&l_i * b.view((0, 0), (m, q))));
        let row_sums = a.view((0, 0), (m, p)).column_sum();
        b_tilde.set_column(q, &(&l_i * row_sums));

        // e'A restricted to the first p-1 columns, then accumulated by U_I
        let col_sums_a: DVector<f64> = a.row_sum().transpose();
        let col_sums_b: DVector<f64> = b.row_sum().transpose();
        let ea_head = col_sums_a.rows(0, m).transpose() * &u_i;
        let mut c_tilde = DMatrix::zeros(q + 1, m);
        let c_head = c.view((0, 0), (q, m)) * &u_i * t + u * &ea_head;
        c_tilde.view_mut((0, 0), (q, m)).copy_from(&c_head);

        let s = (a * &x + b * u + &self.r.x).sum();
        let mut d_tilde = DMatrix::zeros(q + 1, q + 1);
        let top_left = d * t + u * col_sums_b.transpose() + DMatrix::identity(q, q) * s;
        d_tilde.view_mut((0, 0), (q, q)).copy_from(&top_left);
        let ce = c.column_sum();
        let eae = col_sums_a.sum();
        let top_right = d * u + &self.r.u + c * &x + ce * t + u * eae;
        d_tilde.view_mut((0, q), (q, 1)).copy_from(&top_right);
        for j in 0..q {
            d_tilde[(q, j)] = -2.0 * u[j];
        }
        d_tilde[(q, q)] = 2.0 * t;

        Ok(JacobianBlocks {
            a_tilde,
            b_tilde,
            c_tilde,
            d_tilde,
        })
    }
}
