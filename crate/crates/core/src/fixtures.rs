//! A small published instance (`p = 3`, `q = 2`) and two points for it: the
//! closed-form point printed alongside it, and the solution the solver
//! actually certifies.
//!
//! The printed point has `w = (t*, 0)`. It satisfies `H = 0`, `t^2 = ||u||^2`
//! and `sum(y) = ||v|| = 6`, but `<w, G>` is about 0.339, so it is not a
//! solution. The certified solution has the same `(u*, t*)` with `w = 0`,
//! i.e. `x = t* e`.

use nalgebra::{DMatrix, DVector};

use crate::cone::ConeDims;
use crate::lcp::{LcpInstance, ReformPoint};

#[rustfmt::skip]
const T: [f64; 25] = [
     1.0,  0.0, -2.0,  1.0,  3.0,
    -2.0,  6.0, -1.0,  0.0, -1.0,
     1.0, -3.0,  0.0, -1.0, -2.0,
     0.0,  1.0, -1.0,  1.0, -1.0,
     0.0, -1.0,  1.0,  1.0,  1.0,
];
const R: [f64; 5] = [2.0, 3.0, 1.0, 4.0, 5.0];

pub fn reference_instance() -> LcpInstance {
    let dims = ConeDims::new(3, 2).expect("fixture dims");
    LcpInstance::from_full(dims, &DMatrix::from_row_slice(5, 5, &T), &DVector::from_column_slice(&R))
        .expect("fixture instance")
}

/// `t* = sqrt(82 - 12 sqrt(46)) / 2`.
pub fn t_star() -> f64 {
    (82.0 - 12.0 * 46f64.sqrt()).sqrt() / 2.0
}

/// `u* = ((-225 + 30 sqrt(46)) / 82, (139 - 24 sqrt(46)) / 82)`.
pub fn u_star() -> DVector<f64> {
    let s = 46f64.sqrt();
    DVector::from_vec(vec![(-225.0 + 30.0 * s) / 82.0, (139.0 - 24.0 * s) / 82.0])
}

/// The printed closed-form point `(w*, u*, t*)` with `w* = (t*, 0)`.
pub fn published_point() -> ReformPoint {
    ReformPoint::new(DVector::from_vec(vec![t_star(), 0.0]), u_star(), t_star())
}

/// The certified solution `x = t* e`, `u = u*`.
pub fn reference_solution() -> (DVector<f64>, DVector<f64>) {
    (DVector::from_element(3, t_star()), u_star())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_constants() {
        assert!((t_star() - 0.39117).abs() < 1e-5);
        assert!((u_star().norm() - t_star()).abs() < 1e-12);
        assert!((u_star()[0] + 0.26256).abs() < 1e-5);
        assert!((u_star()[1] + 0.28995).abs() < 1e-5);
    }
}
