use nalgebra::DVector;

use crate::error::Result;
use crate::lcp::{LcpInstance, ReformPoint};
use crate::linalg::norm_inf;

/// `phi(a, b) = sqrt(a^2 + b^2) - (a + b)`; zero exactly when `a >= 0`,
/// `b >= 0` and `ab = 0`.
pub fn fb_scalar(a: f64, b: f64) -> f64 {
    a.hypot(b) - (a + b)
}

/// Stacked residual `Phi = (phi(w_k, G_k))_k ++ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbResidual {
    pub phi: DVector<f64>,
    /// Number of leading complementarity components (`p - 1`).
    pub n_comp: usize,
}

impl FbResidual {
    /// `Psi = ||Phi||^2 / 2`.
    pub fn merit(&self) -> f64 {
        0.5 * self.phi.norm_squared()
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.phi)
    }

    pub fn complementarity_part(&self) -> DVector<f64> {
        self.phi.rows(0, self.n_comp).into_owned()
    }

    pub fn equality_part(&self) -> DVector<f64> {
        self.phi.rows(self.n_comp, self.phi.len() - self.n_comp).into_owned()
    }
}

pub fn fb_residual(inst: &LcpInstance, pt: &ReformPoint) -> Result<FbResidual> {
    let g = inst.g_tilde(pt)?;
    let h = inst.h_tilde(pt)?;
    let n_comp = g.len();
    let phi = DVector::from_iterator(
        n_comp + h.len(),
        pt.w_hat
            .iter()
            .zip(g.iter())
            .map(|(&w, &gk)| fb_scalar(w, gk))
            .chain(h.iter().copied()),
    );
    Ok(FbResidual { phi, n_comp })
}
