use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::newton::NewtonConfig;
use crate::error::Result;
use crate::lcp::{LcpInstance, ReformPoint};

/// How the diagonal pair `(d_k, d'_k)` was chosen for component `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KinkSelection {
    /// `(w_k, G_k) != (0, 0)`: the gradient of `phi` is unique.
    Smooth,
    /// At the kink: the symmetric element `(1/sqrt(2) - 1, 1/sqrt(2) - 1)`.
    Symmetric,
}

/// One element of the B-subdifferential of `Phi`:
///
/// ```text
///     [ D1 + D2 A~   D2 B~ ]
///     [ C~           D~    ]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GenJacobianElement {
    pub matrix: DMatrix<f64>,
    pub d1: DVector<f64>,
    pub d2: DVector<f64>,
    pub selection: Vec<KinkSelection>,
}

impl GenJacobianElement {
    pub fn kink_count(&self) -> usize {
        self.selection
            .iter()
            .filter(|s| **s == KinkSelection::Symmetric)
            .count()
    }
}

/// Partial derivatives of `phi(a, b)` minus nothing: returns
/// `(a / r - 1, b / r - 1)` away from the origin and the symmetric element at it.
pub(crate) fn fb_diagonal(a: f64, b: f64, kink_threshold: f64) -> (f64, f64, KinkSelection) {
    let r = a.hypot(b);
    if r <= kink_threshold {
        let s = std::f64::consts::FRAC_1_SQRT_2 - 1.0;
        (s, s, KinkSelection::Symmetric)
    } else {
        (a / r - 1.0, b / r - 1.0, KinkSelection::Smooth)
    }
}

pub fn generalized_jacobian(
    inst: &LcpInstance,
    pt: &ReformPoint,
    config: &NewtonConfig,
) -> Result<GenJacobianElement> {
    let blocks = inst.jacobian_blocks(pt)?;
    let g = inst.g_tilde(pt)?;
    let m = g.len();
    let k = blocks.d_tilde.nrows();
    let n = m + k;

    let mut d1 = DVector::zeros(m);
    let mut d2 = DVector::zeros(m);
    let mut selection = Vec::with_capacity(m);
    for i in 0..m {
        let (a, b, tag) = fb_diagonal(pt.w_hat[i], g[i], config.kink_perturbation);
        d1[i] = a;
        d2[i] = b;
        selection.push(tag);
    }

    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            matrix[(i, j)] = d2[i] * blocks.a_tilde[(i, j)];
        }
        matrix[(i, i)] += d1[i];
        for j in 0..k {
            matrix[(i, m + j)] = d2[i] * blocks.b_tilde[(i, j)];
        }
    }
    matrix.view_mut((m, 0), (k, m)).copy_from(&blocks.c_tilde);
    matrix.view_mut((m, m), (k, k)).copy_from(&blocks.d_tilde);

    Ok(GenJacobianElement {
        matrix,
        d1,
        d2,
        selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeDims;
    use crate::solver::fb_residual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_examples() {
        let (d, dp, tag) = fb_diagonal(0.0, 1.0, 1e-12);
        assert_eq!((d, dp, tag), (-1.0, 0.0, KinkSelection::Smooth));
        let (d, dp, tag) = fb_diagonal(0.0, 0.0, 1e-12);
        assert_eq!(tag, KinkSelection::Symmetric);
        assert!((d - (0.5f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(((d + 1.0).powi(2) + (dp + 1.0).powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn element_matches_finite_differences_of_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = NewtonConfig::default();
        for _ in 0..30 {
            let p = rng.random_range(2..=5);
            let q = rng.random_range(1..=3);
            let dims = ConeDims::new(p, q).unwrap();
            let t = DMatrix::from_fn(p + q, p + q, |_, _| rng.random_range(-2.0..2.0));
            let r = DVector::from_fn(p + q, |_, _| rng.random_range(-2.0..2.0));
            let inst = LcpInstance::from_full(dims, &t, &r).unwrap();
            let z = DVector::from_fn(p + q, |_, _| rng.random_range(-1.0..1.0));
            let pt = ReformPoint::from_vector(&z, dims).unwrap();
            let el = generalized_jacobian(&inst, &pt, &config).unwrap();
            for i in 0..el.d1.len() {
                let circle = (el.d1[i] + 1.0).powi(2) + (el.d2[i] + 1.0).powi(2);
                assert!((circle - 1.0).abs() < 1e-12);
            }
            let h = 1e-6;
            let mut fd = DMatrix::zeros(z.len(), z.len());
            for k in 0..z.len() {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[k] += h;
                zm[k] -= h;
                let fp = fb_residual(&inst, &ReformPoint::from_vector(&zp, dims).unwrap()).unwrap();
                let fm = fb_residual(&inst, &ReformPoint::from_vector(&zm, dims).unwrap()).unwrap();
                fd.set_column(k, &((fp.phi - fm.phi) / (2.0 * h)));
            }
            let err = (&el.matrix - &fd).amax() / el.matrix.amax().max(1.0);
            assert!(err <= 1e-6, "err={err}");
        }
    }
}
