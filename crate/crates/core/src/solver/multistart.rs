use log::debug;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::newton::{newton_solve, IterationTrace, NewtonConfig, NewtonStatus};
use crate::cone::{classify_pair, ComplementarityCertificate, ConeDims, ConePoint};
use crate::error::{Error, Result};
use crate::lcp::{LcpInstance, ReformPoint};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub config: NewtonConfig,
    /// Number of generated starting points (see [`default_starts`]).
    pub starts: usize,
    pub seed: u64,
    /// Caller-supplied starting points, tried after the generated ones.
    pub extra_starts: Vec<ReformPoint>,
    /// Tolerance for [`classify_pair`] on the reconstructed point.
    pub cert_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            config: NewtonConfig::default(),
            starts: 20,
            seed: 0,
            extra_starts: Vec::new(),
            cert_tol: 1e-8,
        }
    }
}

/// Generated starting points. Start 0 is `w = 0`, `||u|| = 0.1`, `t = 0.1`;
/// the rest draw a scale `s = 10^U(-1, 1)` and set `w = |N| s`, `u = N s`,
/// `t = ||u||`. Start `k` uses stream `k` of a ChaCha8 generator seeded with
/// `seed`, so each start is reproducible on its own.
pub fn default_starts(dims: ConeDims, count: usize, seed: u64) -> Vec<ReformPoint> {
    let m = dims.p() - 1;
    let q = dims.q();
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut normal = |n: usize| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            if k == 0 {
                let mut u = normal(q);
                let norm = u.norm();
                if norm > 0.0 {
                    u *= 0.1 / norm;
                } else {
                    u[0] = 0.1;
                }
                ReformPoint::new(DVector::zeros(m), u, 0.1)
            } else {
                let w = normal(m).abs();
                let u = normal(q);
                let scale = 10f64.powf(rng.random_range(-1.0..1.0));
                let u = u * scale;
                let t = u.norm();
                ReformPoint::new(w * scale, u, t)
            }
        })
        .collect()
}

/// Reconstructs `z = (x, u)` from `pt` (with `t` replaced by `|t|`, which
/// leaves `Phi` unchanged up to sign of the `H` head) and tests
/// `(z, Tz + r)` for membership in `C(L)`. Points with `t < -tol` are
/// rejected regardless of the certificate.
pub fn certify_reform_point(
    inst: &LcpInstance,
    pt: &ReformPoint,
    tol: f64,
) -> Result<(ComplementarityCertificate, bool)> {
    let t_ok = pt.t >= -tol;
    let fixed = ReformPoint::new(pt.w_hat.clone(), pt.u.clone(), pt.t.abs());
    let z = fixed.to_cone_point();
    let s = inst.affine_image(&z)?;
    let cert = classify_pair(&z, &s, tol)?;
    let accepted = t_ok && cert.accepted();
    Ok((cert, accepted))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// A start converged and its point passed certification.
    Solved,
    /// Best run converged (`||Phi||_inf <= tol`) but the point is not a
    /// solution of the cone LCP.
    SpuriousRoot,
    Stalled,
    MaxIter,
    Diverged,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::SpuriousRoot => "spurious-root",
            SolveStatus::Stalled => "stalled",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Diverged => "diverged",
        }
    }
}

/// Per-status counts over all starts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub starts: usize,
    pub certified: usize,
    pub spurious: usize,
    pub stalled: usize,
    pub max_iter: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone)]
pub struct LcpSolution {
    pub status: SolveStatus,
    pub point: ReformPoint,
    /// `z = (x, u)` reconstructed with `|t|`.
    pub z: ConePoint,
    /// `Tz + r`.
    pub s: ConePoint,
    pub certificate: ComplementarityCertificate,
    pub residual_inf: f64,
    pub trace: IterationTrace,
    pub start_index: usize,
    pub summary: RunSummary,
}

struct StartOutcome {
    index: usize,
    point: ReformPoint,
    trace: IterationTrace,
    newton: NewtonStatus,
    residual_inf: f64,
    certificate: ComplementarityCertificate,
    certified: bool,
}

impl StartOutcome {
    fn status(&self) -> SolveStatus {
        match (self.certified, self.newton) {
            (true, _) => SolveStatus::Solved,
            (false, NewtonStatus::Solved) => SolveStatus::SpuriousRoot,
            (false, NewtonStatus::Stalled) => SolveStatus::Stalled,
            (false, NewtonStatus::MaxIter) => SolveStatus::MaxIter,
            (false, NewtonStatus::Diverged) => SolveStatus::Diverged,
        }
    }

    /// Certified first, then smallest residual, then start index.
    fn better_than(&self, other: &StartOutcome) -> bool {
        let residual = |o: &StartOutcome| if o.residual_inf.is_nan() { f64::INFINITY } else { o.residual_inf };
        (!self.certified, residual(self), self.index) < (!other.certified, residual(other), other.index)
    }
}

fn run_start(inst: &LcpInstance, index: usize, start: &ReformPoint, opts: &SolveOptions) -> Result<StartOutcome> {
    let (point, trace, newton) = newton_solve(inst, start, &opts.config)?;
    let residual_inf = trace.last().map_or(f64::INFINITY, |r| r.residual_inf);
    let (certificate, accepted) = certify_reform_point(inst, &point, opts.cert_tol)?;
    let certified = newton == NewtonStatus::Solved && accepted;
    debug!("start {index}: {newton:?} residual {residual_inf:.3e} certified {certified}");
    Ok(StartOutcome {
        index,
        point,
        trace,
        newton,
        residual_inf,
        certificate,
        certified,
    })
}

/// Runs the semismooth Newton method from every start in parallel and keeps
/// the best outcome. Only a certified point is reported as
/// [`SolveStatus::Solved`].
pub fn solve(inst: &LcpInstance, opts: &SolveOptions) -> Result<LcpSolution> {
    opts.config.validate()?;
    if !(opts.cert_tol > 0.0) {
        return Err(Error::InvalidParameter("cert_tol must be positive".into()));
    }
    let mut starts = default_starts(inst.dims(), opts.starts, opts.seed);
    starts.extend(opts.extra_starts.iter().cloned());
    if starts.is_empty() {
        return Err(Error::InvalidParameter("at least one start is required".into()));
    }

    let outcomes = starts
        .par_iter()
        .enumerate()
        .map(|(k, s)| run_start(inst, k, s, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = RunSummary {
        starts: outcomes.len(),
        ..RunSummary::default()
    };
    for o in &outcomes {
        match o.status() {
            SolveStatus::Solved => summary.certified += 1,
            SolveStatus::SpuriousRoot => summary.spurious += 1,
            SolveStatus::Stalled => summary.stalled += 1,
            SolveStatus::MaxIter => summary.max_iter += 1,
            SolveStatus::Diverged => summary.diverged += 1,
        }
    }

    let best = outcomes
        .into_iter()
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
        .expect("non-empty");
    let status = best.status();
    let fixed = ReformPoint::new(best.point.w_hat.clone(), best.point.u.clone(), best.point.t.abs());
    let z = fixed.to_cone_point();
    let s = inst.affine_image(&z)?;
    Ok(LcpSolution {
        status,
        point: best.point,
        z,
        s,
        certificate: best.certificate,
        residual_inf: best.residual_inf,
        trace: best.trace,
        start_index: best.index,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{reference_instance, reference_solution};
    use crate::generate::planted_instance;

    #[test]
    fn starts_are_reproducible_and_shaped() {
        let dims = ConeDims::new(4, 3).unwrap();
        let a = default_starts(dims, 5, 9);
        assert_eq!(a, default_starts(dims, 5, 9));
        assert_ne!(a, default_starts(dims, 5, 10));
        assert_eq!(a[0].w_hat, DVector::zeros(3));
        assert!((a[0].u.norm() - 0.1).abs() < 1e-15 && a[0].t == 0.1);
        for s in &a[1..] {
            assert!(s.w_hat.iter().all(|&w| w >= 0.0));
            assert!((s.t - s.u.norm()).abs() < 1e-15 && s.t > 0.0);
        }
        // each start depends only on (seed, index)
        assert_eq!(default_starts(dims, 3, 9)[2], a[2]);
    }

    #[test]
    fn reference_instance_is_solved_and_certified() {
        let inst = reference_instance();
        let sol = solve(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert!(sol.residual_inf <= 1e-9);
        assert!(sol.certificate.accepted());
        let (x, u) = reference_solution();
        assert!((&sol.z.x - x).amax() < 1e-7 && (&sol.z.u - u).amax() < 1e-7);
    }

    #[test]
    fn origin_of_reference_instance_is_a_spurious_root() {
        let inst = reference_instance();
        let origin = ReformPoint::new(DVector::zeros(2), DVector::zeros(2), 0.0);
        assert!(crate::solver::fb_residual(&inst, &origin).unwrap().norm_inf() == 0.0);
        let (cert, accepted) = certify_reform_point(&inst, &origin, 1e-8).unwrap();
        assert!(!accepted && !cert.dual_member);
    }

    #[test]
    fn result_does_not_depend_on_thread_scheduling() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(3);
        let planted = planted_instance(4, 3, &mut rng).unwrap();
        let opts = SolveOptions {
            seed: 17,
            ..SolveOptions::default()
        };
        let a = solve(&planted.instance, &opts).unwrap();
        let b = solve(&planted.instance, &opts).unwrap();
        assert_eq!(a.start_index, b.start_index);
        assert_eq!(a.point, b.point);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn extra_starts_are_used() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(8);
        let planted = planted_instance(3, 2, &mut rng).unwrap();
        let exact = crate::lcp::reform_from_xu(&planted.z.x, &planted.z.u);
        let opts = SolveOptions {
            starts: 0,
            extra_starts: vec![exact.clone()],
            ..SolveOptions::default()
        };
        let sol = solve(&planted.instance, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert_eq!(sol.start_index, 0);
        assert_eq!(sol.summary.starts, 1);
    }

    #[test]
    fn rejects_bad_options() {
        let inst = reference_instance();
        let opts = SolveOptions {
            starts: 0,
            ..SolveOptions::default()
        };
        assert!(solve(&inst, &opts).is_err());
    }
}
