use nalgebra::{DMatrix, DVector};

use super::fb::fb_residual;
use super::jacobian::generalized_jacobian;
use super::newton::NewtonConfig;
use crate::error::Result;
use crate::lcp::{LcpInstance, ReformPoint};
use crate::linalg::{condition_number, norm_inf};

/// Condition estimate below which a block is reported nonsingular.
const NONSINGULAR_CONDITION: f64 = 1e14;

/// Stationarity of the merit function at a point, with the complementarity
/// index partition and block conditioning. This is a computable surrogate
/// for FB-regularity, not a decision procedure for it.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    /// `grad Psi = G' Phi` for the selected element `G`.
    pub gradient: DVector<f64>,
    pub gradient_inf: f64,
    pub merit: f64,
    /// Indices `k` with `min(w_k, G_k)` within tolerance of zero and both
    /// nonnegative within tolerance.
    pub complementary: Vec<usize>,
    /// Indices with `w_k > tol` and `G_k > tol`.
    pub positive: Vec<usize>,
    /// Everything else (some component negative).
    pub negative: Vec<usize>,
    pub a_tilde_condition: f64,
    pub d_tilde_condition: f64,
    pub a_tilde_nonsingular: bool,
    pub d_tilde_nonsingular: bool,
    /// `A~ - B~ D~^{-1} C~` when `D~` is invertible.
    pub schur_complement: Option<DMatrix<f64>>,
}

impl StationarityReport {
    pub fn is_stationary(&self, tol: f64) -> bool {
        self.gradient_inf <= tol
    }
}

pub fn stationarity_check(inst: &LcpInstance, pt: &ReformPoint, tol: f64) -> Result<StationarityReport> {
    let config = NewtonConfig::default();
    let phi = fb_residual(inst, pt)?;
    let element = generalized_jacobian(inst, pt, &config)?;
    let gradient = element.matrix.transpose() * &phi.phi;
    let g = inst.g_tilde(pt)?;

    let mut complementary = Vec::new();
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for k in 0..g.len() {
        let (w, gk) = (pt.w_hat[k], g[k]);
        if w > tol && gk > tol {
            positive.push(k);
        } else if w >= -tol && gk >= -tol && w.min(gk).abs() <= tol {
            complementary.push(k);
        } else {
            negative.push(k);
        }
    }

    let blocks = inst.jacobian_blocks(pt)?;
    let a_tilde_condition = condition_number(&blocks.a_tilde);
    let d_tilde_condition = condition_number(&blocks.d_tilde);
    let d_tilde_nonsingular = d_tilde_condition < NONSINGULAR_CONDITION;
    let schur_complement = if d_tilde_nonsingular {
        blocks.schur_complement()
    } else {
        None
    };
    Ok(StationarityReport {
        gradient_inf: norm_inf(&gradient),
        gradient,
        merit: phi.merit(),
        complementary,
        positive,
        negative,
        a_tilde_condition,
        d_tilde_condition,
        a_tilde_nonsingular: a_tilde_condition < NONSINGULAR_CONDITION,
        d_tilde_nonsingular,
        schur_complement,
    })
}
