use log::{debug, trace};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fb::fb_residual;
use super::jacobian::generalized_jacobian;
use crate::error::{Error, Result};
use crate::lcp::{LcpInstance, ReformPoint};
use crate::linalg::{all_finite, lu_solve, norm_inf};

/// Condition estimate above which the Newton matrix is treated as singular.
const SINGULAR_CONDITION: f64 = 1e14;

/// Stopping and globalization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Stop when `||Phi||_inf` falls to this value.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant, in `(0, 1/2)`.
    pub armijo_sigma: f64,
    pub backtrack_factor: f64,
    /// Give up when the accepted step length would drop below this.
    pub min_step: f64,
    /// Use `-grad Psi` when the Newton direction is unavailable or not a descent direction.
    pub gradient_fallback: bool,
    /// Radius around `(w_k, G_k) = (0, 0)` treated as a kink.
    pub kink_perturbation: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_iter: 200,
            armijo_sigma: 1e-4,
            backtrack_factor: 0.5,
            min_step: 1e-12,
            gradient_fallback: true,
            kink_perturbation: 1e-12,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_residual", self.tol_residual),
            ("armijo_sigma", self.armijo_sigma),
            ("backtrack_factor", self.backtrack_factor),
            ("min_step", self.min_step),
            ("kink_perturbation", self.kink_perturbation),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        if self.armijo_sigma >= 0.5 {
            return Err(Error::InvalidParameter("armijo_sigma must be below 1/2".into()));
        }
        if self.backtrack_factor >= 1.0 {
            return Err(Error::InvalidParameter("backtrack_factor must be below 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// A square nonsmooth system `Phi(z) = 0` with a selection from its
/// generalized Jacobian.
pub trait SemismoothSystem {
    fn dim(&self) -> usize;
    fn residual(&self, z: &DVector<f64>) -> DVector<f64>;
    fn jacobian_element(&self, z: &DVector<f64>) -> DMatrix<f64>;
}

/// The Fischer-Burmeister system of an MESOC instance in the variables `(w, u, t)`.
pub struct MesocSystem<'a> {
    pub inst: &'a LcpInstance,
    pub config: NewtonConfig,
}

impl<'a> MesocSystem<'a> {
    pub fn new(inst: &'a LcpInstance, config: &NewtonConfig) -> Self {
        Self {
            inst,
            config: config.clone(),
        }
    }

    fn point(&self, z: &DVector<f64>) -> ReformPoint {
        ReformPoint::from_vector(z, self.inst.dims()).expect("system dimension")
    }
}

impl SemismoothSystem for MesocSystem<'_> {
    fn dim(&self) -> usize {
        self.inst.dims().n()
    }

    fn residual(&self, z: &DVector<f64>) -> DVector<f64> {
        fb_residual(self.inst, &self.point(z)).expect("system dimension").phi
    }

    fn jacobian_element(&self, z: &DVector<f64>) -> DMatrix<f64> {
        generalized_jacobian(self.inst, &self.point(z), &self.config)
            .expect("system dimension")
            .matrix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NewtonStatus {
    /// `||Phi||_inf <= tol_residual`.
    Solved,
    /// Line search could not find an acceptable step.
    Stalled,
    MaxIter,
    /// Non-finite arithmetic.
    Diverged,
}

/// State after iteration `iteration` (record 0 is the starting point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub merit: f64,
    pub residual_inf: f64,
    /// Step length accepted to reach this iterate; 0 for the start.
    pub step: f64,
    /// Whether the step used `-grad Psi` instead of the Newton direction.
    pub fallback: bool,
    /// Condition estimate of the Newton matrix used for the step.
    pub condition: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn fallback_steps(&self) -> usize {
        self.records.iter().filter(|r| r.fallback).count()
    }

    /// One whitespace-separated record per line:
    /// `iteration merit residual step fallback condition`.
    pub fn to_lines(&self) -> String {
        let mut out = String::from("# iter merit residual_inf step fallback condition\n");
        for r in &self.records {
            out.push_str(&format!(
                "{} {:.6e} {:.6e} {:.6e} {} {:.3e}\n",
                r.iteration, r.merit, r.residual_inf, r.step, r.fallback as u8, r.condition
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct NewtonRun {
    pub z: DVector<f64>,
    pub trace: IterationTrace,
    pub status: NewtonStatus,
}

impl NewtonRun {
    pub fn residual_inf(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |r| r.residual_inf)
    }
}

struct Direction {
    d: DVector<f64>,
    slope: f64,
    condition: f64,
}

/// Armijo backtracking on `Psi` along `d`. Returns the accepted step and the
/// residual there.
fn line_search<S: SemismoothSystem>(
    sys: &S,
    z: &DVector<f64>,
    merit: f64,
    dir: &Direction,
    config: &NewtonConfig,
) -> Option<(f64, DVector<f64>, DVector<f64>)> {
    let mut alpha = 1.0;
    while alpha >= config.min_step {
        let candidate = z + &dir.d * alpha;
        let phi = sys.residual(&candidate);
        if all_finite(&phi) {
            let m = 0.5 * phi.norm_squared();
            if m <= merit + config.armijo_sigma * alpha * dir.slope {
                return Some((alpha, candidate, phi));
            }
        }
        alpha *= config.backtrack_factor;
    }
    None
}

/// Semismooth Newton iteration `G(z_k) d_k = -Phi(z_k)` with Armijo
/// backtracking on `Psi = ||Phi||^2 / 2` and an optional gradient fallback.
pub fn newton_iterate<S: SemismoothSystem>(
    sys: &S,
    start: &DVector<f64>,
    config: &NewtonConfig,
) -> NewtonRun {
    let mut z = start.clone();
    let mut phi = sys.residual(&z);
    let mut trace = IterationTrace::default();
    let finish = |z: DVector<f64>, trace: IterationTrace, status| NewtonRun { z, trace, status };

    if !all_finite(&z) || !all_finite(&phi) {
        return finish(z, trace, NewtonStatus::Diverged);
    }
    trace.records.push(IterationRecord {
        iteration: 0,
        merit: 0.5 * phi.norm_squared(),
        residual_inf: norm_inf(&phi),
        step: 0.0,
        fallback: false,
        condition: f64::NAN,
    });

    for k in 1..=config.max_iter {
        let merit = 0.5 * phi.norm_squared();
        if norm_inf(&phi) <= config.tol_residual {
            return finish(z, trace, NewtonStatus::Solved);
        }
        let jac = sys.jacobian_element(&z);
        if !jac.iter().all(|v| v.is_finite()) {
            return finish(z, trace, NewtonStatus::Diverged);
        }
        let grad = jac.transpose() * &phi;

        let newton = lu_solve(&jac, &(-&phi)).and_then(|s| {
            let slope = grad.dot(&s.solution);
            let usable = s.condition <= SINGULAR_CONDITION && all_finite(&s.solution) && slope < 0.0;
            usable.then_some(Direction {
                d: s.solution,
                slope,
                condition: s.condition,
            })
        });
        let condition = newton.as_ref().map_or(f64::INFINITY, |d| d.condition);
        let gradient = || Direction {
            d: -&grad,
            slope: -grad.norm_squared(),
            condition,
        };

        let mut accepted = None;
        if let Some(dir) = &newton {
            accepted = line_search(sys, &z, merit, dir, config).map(|s| (s, false, dir.condition));
        }
        if accepted.is_none() && config.gradient_fallback && grad.norm_squared() > 0.0 {
            let dir = gradient();
            accepted = line_search(sys, &z, merit, &dir, config).map(|s| (s, true, dir.condition));
        }
        let Some(((alpha, next, next_phi), fallback, cond)) = accepted else {
            debug!("stalled at iteration {k}, merit {merit:.3e}");
            return finish(z, trace, NewtonStatus::Stalled);
        };

        z = next;
        phi = next_phi;
        let record = IterationRecord {
            iteration: k,
            merit: 0.5 * phi.norm_squared(),
            residual_inf: norm_inf(&phi),
            step: alpha,
            fallback,
            condition: cond,
        };
        trace!("{record:?}");
        trace.records.push(record);
    }
    if norm_inf(&phi) <= config.tol_residual {
        return finish(z, trace, NewtonStatus::Solved);
    }
    finish(z, trace, NewtonStatus::MaxIter)
}

/// Runs [`newton_iterate`] on the reformulated system of `inst` from `start`.
pub fn newton_solve(
    inst: &LcpInstance,
    start: &ReformPoint,
    config: &NewtonConfig,
) -> Result<(ReformPoint, IterationTrace, NewtonStatus)> {
    config.validate()?;
    let sys = MesocSystem::new(inst, config);
    let z0 = start.to_vector();
    if z0.len() != sys.dim() {
        return Err(Error::Dimension(format!(
            "start has length {}, system has {}",
            z0.len(),
            sys.dim()
        )));
    }
    let run = newton_iterate(&sys, &z0, config);
    let pt = ReformPoint::from_vector(&run.z, inst.dims())?;
    Ok((pt, run.trace, run.status))
}
