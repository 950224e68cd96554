//! Random cone members, complementary pairs, and instances with a planted
//! solution `r := s* - T z*`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::{CaseTag, ConeDims, ConePoint};
use crate::error::Result;
use crate::lcp::LcpInstance;

fn normal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Nonzero vector with standard normal entries.
fn nonzero_normal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = normal(rng, n);
        if v.norm() > 1e-3 {
            return v;
        }
    }
}

/// `x` with consecutive differences `alpha[..p-1]` and last entry `x_p`.
fn x_from_differences(alpha: &[f64], x_p: f64) -> DVector<f64> {
    let p = alpha.len() + 1;
    let mut x = DVector::from_element(p, x_p);
    for i in (0..p - 1).rev() {
        x[i] = x[i + 1] + alpha[i];
    }
    x
}

/// `y` with prefix sums `beta`.
fn y_from_prefix_sums(beta: &[f64]) -> DVector<f64> {
    let mut prev = 0.0;
    DVector::from_iterator(
        beta.len(),
        beta.iter().map(|&b| {
            let y = b - prev;
            prev = b;
            y
        }),
    )
}

/// Draws a point of `L`: nonnegative differences (about a quarter exactly
/// zero) and `x_p = ||u|| + slack`, where the slack is zero a quarter of the time.
pub fn sample_mesoc_member<R: Rng + ?Sized>(dims: ConeDims, rng: &mut R) -> ConePoint {
    let u = normal(rng, dims.q());
    let alpha: Vec<f64> = (0..dims.p() - 1)
        .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..2.0) })
        .collect();
    let slack = if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..2.0) };
    ConePoint::new(x_from_differences(&alpha, u.norm() + slack), u)
}

/// Draws a point of the dual cone `M`: nonnegative prefix sums with the
/// last one at least `||v||`.
pub fn sample_dual_member<R: Rng + ?Sized>(dims: ConeDims, rng: &mut R) -> ConePoint {
    let v = normal(rng, dims.q());
    let mut beta: Vec<f64> = (0..dims.p() - 1)
        .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..2.0) })
        .collect();
    let slack = if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..2.0) };
    beta.push(v.norm() + slack);
    ConePoint::new(y_from_prefix_sums(&beta), v)
}

/// A pair `(z, s)` in `C(L)` with the requested zero pattern of `(u, v)`,
/// and the multiplier `lambda` with `v = -lambda u` in the generic case.
///
/// With `alpha_i = x_i - x_{i+1}` and `beta` the prefix sums of `y`,
/// `<x, y> = sum_{i<p} alpha_i beta_i + x_p beta_p`, so complementarity of the
/// leading terms is enforced by a random mask and the last term by the case.
pub fn complementary_pair<R: Rng + ?Sized>(
    dims: ConeDims,
    case: CaseTag,
    rng: &mut R,
) -> (ConePoint, ConePoint, Option<f64>) {
    let (p, q) = (dims.p(), dims.q());
    let mut alpha = vec![0.0; p - 1];
    let mut beta = vec![0.0; p];
    for i in 0..p - 1 {
        if rng.random_bool(0.5) {
            alpha[i] = rng.random_range(0.1..1.1);
        } else {
            beta[i] = rng.random_range(0.1..1.1);
        }
    }
    let (u, v, x_p, lambda) = match case {
        CaseTag::BothZero => {
            // one of x_p, beta_p is zero
            let (x_p, b_p) = if rng.random_bool(0.5) {
                (rng.random_range(0.1..1.1), 0.0)
            } else {
                (0.0, rng.random_range(0.1..1.1))
            };
            beta[p - 1] = b_p;
            (DVector::zeros(q), DVector::zeros(q), x_p, None)
        }
        CaseTag::UZero => {
            let v = nonzero_normal(rng, q);
            beta[p - 1] = v.norm() + rng.random_range(0.0..1.0);
            (DVector::zeros(q), v, 0.0, None)
        }
        CaseTag::VZero => {
            let u = nonzero_normal(rng, q);
            let x_p = u.norm() + rng.random_range(0.0..1.0);
            beta[p - 1] = 0.0;
            (u, DVector::zeros(q), x_p, None)
        }
        CaseTag::Generic => {
            let u = nonzero_normal(rng, q);
            let lambda = rng.random_range(0.1..1.1);
            let v = &u * -lambda;
            beta[p - 1] = v.norm();
            let x_p = u.norm();
            (u, v, x_p, Some(lambda))
        }
    };
    let z = ConePoint::new(x_from_differences(&alpha, x_p), u);
    let s = ConePoint::new(y_from_prefix_sums(&beta), v);
    (z, s, lambda)
}

/// An instance together with the complementary pair it was built from.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub instance: LcpInstance,
    pub z: ConePoint,
    /// `s* = T z* + r`.
    pub s: ConePoint,
    pub lambda: f64,
}

/// Sidecar file contents: the planted `z* = (x, u)` and `s* = (y, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSidecar {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub lambda: f64,
}

impl PlantedInstance {
    pub fn sidecar(&self) -> PlantedSidecar {
        let v = |d: &DVector<f64>| d.iter().copied().collect();
        PlantedSidecar {
            x: v(&self.z.x),
            u: v(&self.z.u),
            y: v(&self.s.x),
            v: v(&self.s.u),
            lambda: self.lambda,
        }
    }
}

/// Generic-case pair with standard normal `T` and `r := s* - T z*`.
pub fn planted_instance<R: Rng + ?Sized>(p: usize, q: usize, rng: &mut R) -> Result<PlantedInstance> {
    let dims = ConeDims::new(p, q)?;
    let (z, s, lambda) = complementary_pair(dims, CaseTag::Generic, rng);
    let n = dims.n();
    let t = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let r = s.stacked() - &t * z.stacked();
    let instance = LcpInstance::from_full(dims, &t, &r)?;
    Ok(PlantedInstance {
        instance,
        z,
        s,
        lambda: lambda.expect("generic case has a multiplier"),
    })
}

/// [`planted_instance`] driven by a ChaCha8 generator seeded with `seed`.
pub fn generate_planted(p: usize, q: usize, seed: u64) -> Result<PlantedInstance> {
    planted_instance(p, q, &mut ChaCha8Rng::seed_from_u64(seed))
}
