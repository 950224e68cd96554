//! Membership, duality and complementarity tests for the monotone extended
//! second order cone
//!
//! ```text
//!     L = { (x, u) in R^p x R^q : x_1 >= x_2 >= ... >= x_p >= ||u|| }
//! ```
//!
//! and its dual
//!
//! ```text
//!     M = { (y, v) : y_1 + ... + y_j >= 0 for j < p,  y_1 + ... + y_p >= ||v|| }
//! ```
//!
//! together with the monotone nonnegative cone `{x_1 >= ... >= x_p >= 0}` and
//! the nonnegative orthant. Every test takes a caller-supplied tolerance and
//! compares in the mixed form `a >= b - tol * (1 + max(|a|, |b|))`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{approx_eq, approx_geq, prefix_sums};

/// Default absolute/relative tolerance for membership and complementarity tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Block sizes `(p, q)` of the product space `R^p x R^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeDims {
    p: usize,
    q: usize,
}

impl ConeDims {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p < 2 || q < 1 {
            return Err(Error::InvalidDims { p, q });
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Ambient dimension `n = p + q`.
    pub fn n(&self) -> usize {
        self.p + self.q
    }
}

/// A vector `(x, u)` of `R^p x R^q`. Used both for primal points of `L` and
/// for dual points `(y, v)` of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConePoint {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
}

impl ConePoint {
    pub fn new(x: DVector<f64>, u: DVector<f64>) -> Self {
        Self { x, u }
    }

    pub fn from_slices(x: &[f64], u: &[f64]) -> Self {
        Self {
            x: DVector::from_column_slice(x),
            u: DVector::from_column_slice(u),
        }
    }

    pub fn zeros(dims: ConeDims) -> Self {
        Self {
            x: DVector::zeros(dims.p()),
            u: DVector::zeros(dims.q()),
        }
    }

    pub fn dims(&self) -> Result<ConeDims> {
        ConeDims::new(self.x.len(), self.u.len())
    }

    /// Stacked vector `(x, u)` in `R^(p+q)`.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len() + self.u.len(),
            self.x.iter().chain(self.u.iter()).copied(),
        )
    }

    pub fn from_stacked(z: &DVector<f64>, dims: ConeDims) -> Result<Self> {
        if z.len() != dims.n() {
            return Err(Error::Dimension(format!(
                "stacked vector has length {}, expected {}",
                z.len(),
                dims.n()
            )));
        }
        Ok(Self {
            x: z.rows(0, dims.p()).into_owned(),
            u: z.rows(dims.p(), dims.q()).into_owned(),
        })
    }

    pub fn dot(&self, other: &ConePoint) -> f64 {
        self.x.dot(&other.x) + self.u.dot(&other.u)
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.u.norm_squared()).sqrt()
    }

    pub fn scale(&self, a: f64) -> ConePoint {
        ConePoint::new(&self.x * a, &self.u * a)
    }

    pub fn add(&self, other: &ConePoint) -> ConePoint {
        ConePoint::new(&self.x + &other.x, &self.u + &other.u)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.u.iter()).all(|v| v.is_finite())
    }
}

fn check_same_dims(a: &ConePoint, b: &ConePoint) -> Result<()> {
    if a.x.len() != b.x.len() || a.u.len() != b.u.len() {
        return Err(Error::Dimension(format!(
            "pair has blocks ({}, {}) and ({}, {})",
            a.x.len(),
            a.u.len(),
            b.x.len(),
            b.u.len()
        )));
    }
    Ok(())
}

/// `x_1 >= ... >= x_p >= ||u||`, each link relaxed by `tol`.
pub fn mesoc_contains(z: &ConePoint, tol: f64) -> Result<bool> {
    z.dims()?;
    Ok(mesoc_contains_unchecked(z, tol))
}

fn mesoc_contains_unchecked(z: &ConePoint, tol: f64) -> bool {
    let chain = z.x.as_slice().windows(2).all(|w| approx_geq(w[0], w[1], tol));
    chain && approx_geq(z.x[z.x.len() - 1], z.u.norm(), tol)
}

/// Largest violation of the `L` inequalities (zero for members).
pub fn mesoc_gap(z: &ConePoint) -> f64 {
    let chain = z
        .x
        .as_slice()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let tail = z.x.len().checked_sub(1).map_or(0.0, |last| z.u.norm() - z.x[last]);
    chain.max(tail).max(0.0)
}

/// Prefix sums of `y` nonnegative and `sum(y) >= ||v||`, each relaxed by `tol`.
pub fn dual_contains(s: &ConePoint, tol: f64) -> Result<bool> {
    s.dims()?;
    let sums = prefix_sums(&s.x);
    let p = sums.len();
    let prefixes = sums.iter().take(p - 1).all(|&c| approx_geq(c, 0.0, tol));
    Ok(prefixes && approx_geq(sums[p - 1], s.u.norm(), tol))
}

/// Largest violation of the `M` inequalities (zero for members).
pub fn dual_gap(s: &ConePoint) -> f64 {
    let sums = prefix_sums(&s.x);
    let p = sums.len();
    if p == 0 {
        return 0.0;
    }
    let prefixes = sums.iter().take(p - 1).map(|&c| -c).fold(0.0, f64::max);
    prefixes.max(s.u.norm() - sums[p - 1]).max(0.0)
}

/// `x_1 >= ... >= x_p >= 0`.
pub fn monotone_nonneg_contains(x: &DVector<f64>, tol: f64) -> bool {
    let chain = x.as_slice().windows(2).all(|w| approx_geq(w[0], w[1], tol));
    chain && x.iter().last().is_none_or(|&xp| approx_geq(xp, 0.0, tol))
}

/// Every coordinate nonnegative.
pub fn orthant_contains(x: &DVector<f64>, tol: f64) -> bool {
    x.iter().all(|&xi| approx_geq(xi, 0.0, tol))
}

/// Dual of the monotone nonnegative cone: every prefix sum nonnegative.
pub fn monotone_dual_contains(y: &DVector<f64>, tol: f64) -> bool {
    prefix_sums(y).iter().all(|&c| approx_geq(c, 0.0, tol))
}

/// `x - ||u|| e`. Lies in the monotone nonnegative cone exactly when `z` is in `L`.
pub fn shift_to_monotone(z: &ConePoint) -> DVector<f64> {
    z.x.add_scalar(-z.u.norm())
}

/// Zero pattern of the `(u, v)` blocks of a complementary pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    BothZero,
    UZero,
    VZero,
    Generic,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::BothZero => "both-zero",
            CaseTag::UZero => "u-zero",
            CaseTag::VZero => "v-zero",
            CaseTag::Generic => "generic",
        }
    }
}

/// Outcome of testing whether `(z, s)` lies in the complementarity set `C(L)`.
#[derive(Debug, Clone)]
pub struct ComplementarityCertificate {
    pub primal: ConePoint,
    pub dual: ConePoint,
    /// Multiplier in `v = -lambda u`; present only for the generic case.
    pub lambda: Option<f64>,
    pub case_tag: CaseTag,
    pub residuals: BTreeMap<String, f64>,
    pub primal_member: bool,
    pub dual_member: bool,
    pub orthogonal: bool,
    /// Case-specific conditions (always true for the zero cases, where they
    /// follow from membership and orthogonality).
    pub case_conditions: bool,
    /// Generic case with `lambda` within tolerance of zero.
    pub lambda_near_zero: bool,
    pub tol: f64,
}

impl ComplementarityCertificate {
    pub fn accepted(&self) -> bool {
        self.primal_member && self.dual_member && self.orthogonal && self.case_conditions
    }

    pub fn residual(&self, key: &str) -> f64 {
        self.residuals.get(key).copied().unwrap_or(f64::NAN)
    }
}

/// Decides membership of `(z, s)` in `C(L)`.
///
/// Membership, dual membership and `|<z, s>| <= tol (1 + ||z|| ||s||)` are
/// required in every case. When both `u` and `v` are nonzero the pair must
/// additionally satisfy `x_p = ||u||`, `sum(y) = ||v||`, and `v = -lambda u`
/// with the least-squares `lambda = -<u, v> / <u, u>`.
pub fn classify_pair(z: &ConePoint, s: &ConePoint, tol: f64) -> Result<ComplementarityCertificate> {
    check_same_dims(z, s)?;
    z.dims()?;

    let p = z.x.len();
    let u_norm = z.u.norm();
    let v_norm = s.u.norm();
    let y_sum = s.x.sum();
    let x_p = z.x[p - 1];
    let inner = z.dot(s);

    let case_tag = match (u_norm > tol, v_norm > tol) {
        (false, false) => CaseTag::BothZero,
        (false, true) => CaseTag::UZero,
        (true, false) => CaseTag::VZero,
        (true, true) => CaseTag::Generic,
    };

    let primal_member = mesoc_contains_unchecked(z, tol);
    let dual_member = dual_contains(s, tol)?;
    let orth_scale = 1.0 + z.norm() * s.norm();
    let orthogonal = inner.abs() <= tol * orth_scale;

    let mut residuals = BTreeMap::new();
    residuals.insert("primal_gap".to_string(), mesoc_gap(z));
    residuals.insert("dual_gap".to_string(), dual_gap(s));
    residuals.insert("orthogonality".to_string(), inner.abs());
    residuals.insert("sum_y_minus_norm_v".to_string(), y_sum - v_norm);
    residuals.insert("xp_minus_norm_u".to_string(), x_p - u_norm);

    // the shifted pair (x - ||u|| e, y - ||v|| e^p) is complementary for the
    // monotone nonnegative cone in every case
    let shifted_x = shift_to_monotone(z);
    let mut shifted_y = s.x.clone();
    shifted_y[p - 1] -= v_norm;
    residuals.insert("shifted_orthogonality".to_string(), shifted_x.dot(&shifted_y).abs());

    let mut lambda = None;
    let mut lambda_near_zero = false;
    let mut case_conditions = true;
    if case_tag == CaseTag::Generic {
        let lam = -z.u.dot(&s.u) / z.u.norm_squared();
        let defect = (&s.u + &z.u * lam).norm();
        residuals.insert("colinearity_defect".to_string(), defect);
        residuals.insert("lambda".to_string(), lam);
        let colinear = defect <= tol * (1.0 + v_norm);
        case_conditions = colinear
            && lam >= -tol
            && approx_eq(x_p, u_norm, tol)
            && approx_eq(y_sum, v_norm, tol);
        lambda_near_zero = lam.abs() <= tol;
        lambda = Some(lam.max(0.0));
    }

    Ok(ComplementarityCertificate {
        primal: z.clone(),
        dual: s.clone(),
        lambda,
        case_tag,
        residuals,
        primal_member,
        dual_member,
        orthogonal,
        case_conditions,
        lambda_near_zero,
        tol,
    })
}
