//! Linear complementarity problems `LCP(T, r, L)` on the monotone extended
//! second order cone and their reformulation as a mixed complementarity
//! problem on the nonnegative orthant.
//!
//! A point `(x, u)` is parametrised by successive differences
//! `w_i = x_i - x_{i+1}` (`i < p`) and an auxiliary scalar `t` standing in for
//! `||u||`:
//!
//! ```text
//!     x_i(w, t) = w_i + ... + w_{p-1} + t,     x_p = t
//! ```
//!
//! The complementarity part is `0 <= w  _|_  G(w, u, t) >= 0` with `G` the
//! first `p - 1` prefix sums of `Ax + Bu + y`, and the equality part is
//!
//! ```text
//!     H(w, u, t) = ( u e'(Ax + Bu + y) + t (Cx + Du + v),  t^2 - ||u||^2 ) = 0.
//! ```

mod cases;
mod jacobian;

pub use cases::{solve_case_u_zero, solve_case_w_zero, LinearMcp, LinearMcpSolver};
pub use jacobian::JacobianBlocks;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::{ConeDims, ConePoint};
use crate::error::{Error, Result};
use crate::linalg::prefix_sums;

/// The blocks of `T = [A B; C D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl BlockMatrix {
    pub fn new(
        dims: ConeDims,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let (p, q) = (dims.p(), dims.q());
        let expect = [("A", &a, p, p), ("B", &b, p, q), ("C", &c, q, p), ("D", &d, q, q)];
        for (name, m, rows, cols) in expect {
            if m.shape() != (rows, cols) {
                return Err(Error::Dimension(format!(
                    "block {name} is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Splits a full `(p+q) x (p+q)` matrix into its blocks.
    pub fn from_full(dims: ConeDims, t: &DMatrix<f64>) -> Result<Self> {
        let (p, q) = (dims.p(), dims.q());
        if t.shape() != (p + q, p + q) {
            return Err(Error::Dimension(format!(
                "T is {}x{}, expected {}x{}",
                t.nrows(),
                t.ncols(),
                p + q,
                p + q
            )));
        }
        Ok(Self {
            a: t.view((0, 0), (p, p)).into_owned(),
            b: t.view((0, p), (p, q)).into_owned(),
            c: t.view((p, 0), (q, p)).into_owned(),
            d: t.view((p, p), (q, q)).into_owned(),
        })
    }

    pub fn full(&self) -> DMatrix<f64> {
        let (p, q) = (self.a.nrows(), self.d.nrows());
        let mut t = DMatrix::zeros(p + q, p + q);
        t.view_mut((0, 0), (p, p)).copy_from(&self.a);
        t.view_mut((0, p), (p, q)).copy_from(&self.b);
        t.view_mut((p, 0), (q, p)).copy_from(&self.c);
        t.view_mut((p, p), (q, q)).copy_from(&self.d);
        t
    }
}

/// `LCP(T, r, L)`: find `z` in `L` with `(z, Tz + r)` in `C(L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpInstance {
    dims: ConeDims,
    pub t: BlockMatrix,
    /// `r = (y, v)`.
    pub r: ConePoint,
}

/// On-disk instance layout: dense row-major blocks.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[allow(non_snake_case)]
pub struct InstanceFile {
    pub p: usize,
    pub q: usize,
    pub A: Vec<Vec<f64>>,
    pub B: Vec<Vec<f64>>,
    pub C: Vec<Vec<f64>>,
    pub D: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("block {name} must be {nrows}x{ncols}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("block {name}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl LcpInstance {
    pub fn new(t: BlockMatrix, r: ConePoint) -> Result<Self> {
        let dims = ConeDims::new(t.a.nrows(), t.d.nrows())?;
        let t = BlockMatrix::new(dims, t.a, t.b, t.c, t.d)?;
        if r.x.len() != dims.p() || r.u.len() != dims.q() {
            return Err(Error::Dimension(format!(
                "r has blocks ({}, {}), expected ({}, {})",
                r.x.len(),
                r.u.len(),
                dims.p(),
                dims.q()
            )));
        }
        if !r.is_finite() {
            return Err(Error::NonFinite("r".into()));
        }
        Ok(Self { dims, t, r })
    }

    pub fn from_full(dims: ConeDims, t: &DMatrix<f64>, r: &DVector<f64>) -> Result<Self> {
        Self::new(BlockMatrix::from_full(dims, t)?, ConePoint::from_stacked(r, dims)?)
    }

    pub fn dims(&self) -> ConeDims {
        self.dims
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        let dims = ConeDims::new(file.p, file.q)?;
        let (p, q) = (dims.p(), dims.q());
        let t = BlockMatrix {
            a: matrix_from_rows("A", &file.A, p, p)?,
            b: matrix_from_rows("B", &file.B, p, q)?,
            c: matrix_from_rows("C", &file.C, q, p)?,
            d: matrix_from_rows("D", &file.D, q, q)?,
        };
        if file.y.len() != p || file.v.len() != q {
            return Err(Error::Dimension(format!(
                "r has blocks ({}, {}), expected ({p}, {q})",
                file.y.len(),
                file.v.len()
            )));
        }
        Self::new(t, ConePoint::from_slices(&file.y, &file.v))
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            p: self.dims.p(),
            q: self.dims.q(),
            A: matrix_to_rows(&self.t.a),
            B: matrix_to_rows(&self.t.b),
            C: matrix_to_rows(&self.t.c),
            D: matrix_to_rows(&self.t.d),
            y: self.r.x.iter().copied().collect(),
            v: self.r.u.iter().copied().collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    fn check_point(&self, z: &ConePoint) -> Result<()> {
        if z.x.len() != self.dims.p() || z.u.len() != self.dims.q() {
            return Err(Error::Dimension(format!(
                "point has blocks ({}, {}), instance expects ({}, {})",
                z.x.len(),
                z.u.len(),
                self.dims.p(),
                self.dims.q()
            )));
        }
        Ok(())
    }

    fn check_reform(&self, pt: &ReformPoint) -> Result<()> {
        if pt.w_hat.len() + 1 != self.dims.p() || pt.u.len() != self.dims.q() {
            return Err(Error::Dimension(format!(
                "reformulated point has blocks ({}, {}), instance expects ({}, {})",
                pt.w_hat.len(),
                pt.u.len(),
                self.dims.p() - 1,
                self.dims.q()
            )));
        }
        Ok(())
    }

    /// `Ax + Bu + y`.
    fn upper_image(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.t.a * x + &self.t.b * u + &self.r.x
    }

    /// `Cx + Du + v`.
    fn lower_image(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.t.c * x + &self.t.d * u + &self.r.u
    }

    /// `Tz + r`.
    pub fn affine_image(&self, z: &ConePoint) -> Result<ConePoint> {
        self.check_point(z)?;
        Ok(ConePoint::new(self.upper_image(&z.x, &z.u), self.lower_image(&z.x, &z.u)))
    }

    /// Complementarity map `G`: the first `p - 1` prefix sums of `Ax + Bu + y`
    /// at `x = x(w, t)`.
    pub fn g_tilde(&self, pt: &ReformPoint) -> Result<DVector<f64>> {
        self.check_reform(pt)?;
        let x = x_from_reform(pt);
        let sums = prefix_sums(&self.upper_image(&x, &pt.u));
        Ok(sums.rows(0, self.dims.p() - 1).into_owned())
    }

    /// Equality map `H` with `q + 1` components.
    pub fn h_tilde(&self, pt: &ReformPoint) -> Result<DVector<f64>> {
        self.check_reform(pt)?;
        let q = self.dims.q();
        let x = x_from_reform(pt);
        let s = self.upper_image(&x, &pt.u).sum();
        let head = &pt.u * s + self.lower_image(&x, &pt.u) * pt.t;
        let mut h = DVector::zeros(q + 1);
        h.rows_mut(0, q).copy_from(&head);
        h[q] = pt.t * pt.t - pt.u.norm_squared();
        Ok(h)
    }

    /// `alpha = (x_1 - x_2, ..., x_{p-1} - x_p, x_p - ||u||)` and `beta` the
    /// prefix sums of `Ax + Bu + y`. A solution makes `(alpha, beta)`
    /// complementary in the nonnegative orthant.
    pub fn alpha_beta_certificate(&self, z: &ConePoint) -> Result<AlphaBetaCertificate> {
        self.check_point(z)?;
        let p = self.dims.p();
        let mut alpha = DVector::zeros(p);
        for i in 0..p - 1 {
            alpha[i] = z.x[i] - z.x[i + 1];
        }
        alpha[p - 1] = z.x[p - 1] - z.u.norm();
        let beta = prefix_sums(&self.upper_image(&z.x, &z.u));
        Ok(AlphaBetaCertificate { alpha, beta })
    }
}

/// Reformulated variables `(w, u, t)`, stacked in that order when viewed as a
/// single vector of length `(p - 1) + q + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReformPoint {
    pub w_hat: DVector<f64>,
    pub u: DVector<f64>,
    pub t: f64,
}

impl ReformPoint {
    pub fn new(w_hat: DVector<f64>, u: DVector<f64>, t: f64) -> Self {
        Self { w_hat, u, t }
    }

    pub fn dim(&self) -> usize {
        self.w_hat.len() + self.u.len() + 1
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.dim());
        let m = self.w_hat.len();
        z.rows_mut(0, m).copy_from(&self.w_hat);
        z.rows_mut(m, self.u.len()).copy_from(&self.u);
        z[self.dim() - 1] = self.t;
        z
    }

    pub fn from_vector(z: &DVector<f64>, dims: ConeDims) -> Result<Self> {
        let m = dims.p() - 1;
        if z.len() != m + dims.q() + 1 {
            return Err(Error::Dimension(format!(
                "reformulated vector has length {}, expected {}",
                z.len(),
                m + dims.q() + 1
            )));
        }
        Ok(Self {
            w_hat: z.rows(0, m).into_owned(),
            u: z.rows(m, dims.q()).into_owned(),
            t: z[z.len() - 1],
        })
    }

    /// Point of `R^p x R^q` represented by these variables.
    pub fn to_cone_point(&self) -> ConePoint {
        ConePoint::new(x_from_reform(self), self.u.clone())
    }
}

/// `x_i = w_i + ... + w_{p-1} + t` for `i < p` and `x_p = t`.
pub fn x_from_reform(pt: &ReformPoint) -> DVector<f64> {
    let m = pt.w_hat.len();
    let mut x = DVector::from_element(m + 1, pt.t);
    for i in (0..m).rev() {
        x[i] = x[i + 1] + pt.w_hat[i];
    }
    x
}

/// Inverse of [`x_from_reform`] on points with `x_p = ||u||`:
/// `w_i = x_i - x_{i+1}`, `t = ||u||`.
pub fn reform_from_xu(x: &DVector<f64>, u: &DVector<f64>) -> ReformPoint {
    let w_hat = DVector::from_iterator(x.len().saturating_sub(1), x.as_slice().windows(2).map(|w| w[0] - w[1]));
    ReformPoint::new(w_hat, u.clone(), u.norm())
}

/// Pair `(alpha, beta)` whose orthant complementarity encodes a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBetaCertificate {
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
}

impl AlphaBetaCertificate {
    pub fn inner(&self) -> f64 {
        self.alpha.dot(&self.beta)
    }

    pub fn is_complementary(&self, tol: f64) -> bool {
        let nonneg = self.alpha.iter().chain(self.beta.iter()).all(|&v| v >= -tol);
        nonneg && self.inner().abs() <= tol * (1.0 + self.alpha.norm() * self.beta.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{published_point, reference_instance};

    fn v(s: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(s)
    }

    fn close(a: &DVector<f64>, b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn zero_instance(p: usize, q: usize, y: &[f64]) -> LcpInstance {
        LcpInstance::new(
            BlockMatrix {
                a: DMatrix::zeros(p, p),
                b: DMatrix::zeros(p, q),
                c: DMatrix::zeros(q, p),
                d: DMatrix::zeros(q, q),
            },
            ConePoint::new(v(y), DVector::zeros(q)),
        )
        .unwrap()
    }

    #[test]
    fn affine_image_examples() {
        let dims = ConeDims::new(2, 1).unwrap();
        let ident = LcpInstance::from_full(dims, &DMatrix::identity(3, 3), &DVector::zeros(3)).unwrap();
        let z = ConePoint::from_slices(&[1.5, -2.0], &[0.25]);
        assert_eq!(ident.affine_image(&z).unwrap(), z);

        let inst = reference_instance();
        let r = inst.affine_image(&ConePoint::zeros(inst.dims())).unwrap();
        assert_eq!(r.stacked().as_slice(), &[2.0, 3.0, 1.0, 4.0, 5.0]);

        let img = inst.affine_image(&published_point().to_cone_point()).unwrap();
        assert!((img.x[0] - 0.86759).abs() < 1e-5);
        assert!((img.u[0] - 4.02739).abs() < 1e-5);
        assert!((img.u[1] - 4.44749).abs() < 1e-5);

        assert!(inst.affine_image(&ConePoint::from_slices(&[1.0], &[1.0])).is_err());
    }

    #[test]
    fn x_from_reform_examples() {
        let x = x_from_reform(&ReformPoint::new(DVector::zeros(3), DVector::zeros(1), 2.5));
        assert_eq!(x.as_slice(), &[2.5; 4]);
        let x = x_from_reform(&ReformPoint::new(v(&[1.0, 2.0]), DVector::zeros(1), 3.0));
        assert_eq!(x.as_slice(), &[6.0, 5.0, 3.0]);
        close(&x_from_reform(&published_point()), &[0.78233, 0.39117, 0.39117], 1e-5);
    }

    #[test]
    fn reform_from_xu_examples() {
        let r = reform_from_xu(&v(&[6.0, 5.0, 3.0]), &v(&[0.0, 3.0]));
        assert_eq!(r.w_hat.as_slice(), &[1.0, 2.0]);
        assert_eq!(r.t, 3.0);
        let r = reform_from_xu(&v(&[4.0, 4.0]), &v(&[0.0]));
        assert_eq!(r.w_hat.as_slice(), &[0.0]);
        assert_eq!(r.t, 0.0);
        let claimed = published_point().to_cone_point();
        let r = reform_from_xu(&claimed.x, &claimed.u);
        close(&r.w_hat, &[0.39117, 0.0], 1e-5);
        assert!((r.t - 0.39117).abs() < 1e-5);
    }

    #[test]
    fn g_tilde_examples() {
        let inst = zero_instance(3, 1, &[1.0, 1.0, 1.0]);
        let pt = ReformPoint::new(v(&[0.3, 7.0]), v(&[2.0]), -1.0);
        assert_eq!(inst.g_tilde(&pt).unwrap().as_slice(), &[1.0, 2.0]);

        let mut inst = zero_instance(3, 1, &[0.0; 3]);
        inst.t.a = DMatrix::identity(3, 3);
        let pt = ReformPoint::new(v(&[1.0, 2.0]), v(&[0.0]), 3.0);
        assert_eq!(inst.g_tilde(&pt).unwrap().as_slice(), &[6.0, 11.0]);

        // reference instance at the printed point: the first component does not vanish
        let g = reference_instance().g_tilde(&published_point()).unwrap();
        close(&g, &[0.86759, 4.54871], 1e-5);
    }

    #[test]
    fn h_tilde_examples() {
        let inst = reference_instance();
        let origin = ReformPoint::new(DVector::zeros(2), DVector::zeros(2), 0.0);
        assert_eq!(inst.h_tilde(&origin).unwrap().as_slice(), &[0.0; 3]);
        close(&inst.h_tilde(&published_point()).unwrap(), &[0.0; 3], 1e-5);
        let pt = ReformPoint::new(v(&[0.1, 0.2]), v(&[0.6, -0.8]), -1.0);
        assert!(inst.h_tilde(&pt).unwrap()[2].abs() < 1e-15);
    }

    #[test]
    fn alpha_beta_examples() {
        let inst = zero_instance(3, 2, &[1.0, -0.5, 2.0]);
        let ab = inst.alpha_beta_certificate(&ConePoint::zeros(inst.dims())).unwrap();
        assert_eq!(ab.alpha.as_slice(), &[0.0; 3]);
        assert_eq!(ab.beta.as_slice(), &[1.0, 0.5, 2.5]);
        assert!(ab.is_complementary(1e-12));

        let ab = inst
            .alpha_beta_certificate(&ConePoint::from_slices(&[5.0, 5.0, 5.0], &[3.0, 4.0]))
            .unwrap();
        assert_eq!(ab.alpha.as_slice(), &[0.0; 3]);

        let inst = reference_instance();
        let ab = inst
            .alpha_beta_certificate(&published_point().to_cone_point())
            .unwrap();
        close(&ab.alpha, &[0.39117, 0.0, 0.0], 1e-5);
        close(&ab.beta, &[0.86759, 4.54871, 6.00001], 1e-4);
        assert!((ab.inner() - 0.3394).abs() < 1e-4);
        assert!(!ab.is_complementary(1e-8));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = reference_instance();
        let text = inst.to_json().unwrap();
        assert_eq!(LcpInstance::from_json(&text).unwrap(), inst);
        let mut bad = inst.to_file();
        bad.B.pop();
        assert!(matches!(LcpInstance::from_file(&bad), Err(Error::Dimension(_))));
        assert!(LcpInstance::from_json("{\"p\": 1}").is_err());
    }

    proptest::proptest! {
        #[test]
        fn reform_round_trip(
            w in proptest::collection::vec(-3.0..3.0f64, 1..5),
            u in proptest::collection::vec(-3.0..3.0f64, 1..4),
        ) {
            let u = DVector::from_vec(u);
            let pt = ReformPoint::new(DVector::from_vec(w), u.clone(), u.norm());
            let back = reform_from_xu(&x_from_reform(&pt), &u);
            for (a, b) in back.w_hat.iter().zip(pt.w_hat.iter()) {
                proptest::prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs() + pt.t.abs()));
            }
            proptest::prop_assert_eq!(back.t, pt.t);
        }
    }
}
