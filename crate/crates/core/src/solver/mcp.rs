use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fb::fb_scalar;
use super::jacobian::fb_diagonal;
use super::newton::{newton_iterate, NewtonConfig, NewtonStatus, SemismoothSystem};
use crate::error::{Error, Result};
use crate::lcp::{LinearMcp, LinearMcpSolver};

/// Accepted violation of a returned mixed LCP solution.
const MCP_TOL: f64 = 1e-9;

/// Fischer-Burmeister Newton solver for [`LinearMcp`], restarted from the
/// origin and then from seeded random points until one converges.
#[derive(Debug, Clone)]
pub struct FbLinearMcpSolver {
    pub config: NewtonConfig,
    pub starts: usize,
    pub seed: u64,
}

impl Default for FbLinearMcpSolver {
    fn default() -> Self {
        Self {
            config: NewtonConfig::default(),
            starts: 20,
            seed: 0,
        }
    }
}

struct McpSystem<'a> {
    problem: &'a LinearMcp,
    kink: f64,
}

impl SemismoothSystem for McpSystem<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn residual(&self, z: &DVector<f64>) -> DVector<f64> {
        let f = self.problem.image(z);
        DVector::from_fn(z.len(), |i, _| {
            if i < self.problem.n_comp {
                fb_scalar(z[i], f[i])
            } else {
                f[i]
            }
        })
    }

    fn jacobian_element(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let f = self.problem.image(z);
        let mut j = self.problem.m.clone();
        for i in 0..self.problem.n_comp {
            let (d1, d2, _) = fb_diagonal(z[i], f[i], self.kink);
            j.row_mut(i).scale_mut(d2);
            j[(i, i)] += d1;
        }
        j
    }
}

impl LinearMcpSolver for FbLinearMcpSolver {
    fn solve_mcp(&self, problem: &LinearMcp) -> Result<DVector<f64>> {
        self.config.validate()?;
        let sys = McpSystem {
            problem,
            kink: self.config.kink_perturbation,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = problem.dim();
        let mut best: Option<(f64, DVector<f64>)> = None;
        for k in 0..self.starts.max(1) {
            let start = if k == 0 {
                DVector::zeros(n)
            } else {
                let scale = 10f64.powf(rng.random_range(-1.0..1.0));
                DVector::from_fn(n, |i, _| {
                    let v: f64 = rng.random_range(-1.0..1.0) * scale;
                    if i < problem.n_comp {
                        v.abs()
                    } else {
                        v
                    }
                })
            };
            let run = newton_iterate(&sys, &start, &self.config);
            if run.status == NewtonStatus::Diverged {
                continue;
            }
            let violation = problem.violation(&run.z);
            if violation <= MCP_TOL {
                return Ok(run.z);
            }
            if best.as_ref().is_none_or(|(v, _)| violation < *v) {
                best = Some((violation, run.z));
            }
        }
        let worst = best.map_or(f64::INFINITY, |(v, _)| v);
        Err(Error::SubSolver(format!(
            "no start reached a mixed LCP solution (best violation {worst:.3e})"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_lcp() {
        // M = [[2, 1], [1, 2]], q = (-1, -1): z = (1/3, 1/3)
        let problem = LinearMcp::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
            DVector::from_vec(vec![-1.0, -1.0]),
            2,
        )
        .unwrap();
        let z = FbLinearMcpSolver::default().solve_mcp(&problem).unwrap();
        assert!((z[0] - 1.0 / 3.0).abs() < 1e-9 && (z[1] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn solves_mixed_problem_with_free_block() {
        // w >= 0 _|_ w - u + 1 >= 0, and w + u - 3 = 0: w = 1, u = 2
        let problem = LinearMcp::new(
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0]),
            DVector::from_vec(vec![1.0, -3.0]),
            1,
        )
        .unwrap();
        let z = FbLinearMcpSolver::default().solve_mcp(&problem).unwrap();
        assert!(problem.violation(&z) <= 1e-9);
        assert!((z[0] - 1.0).abs() < 1e-9 && (z[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_problem_is_an_error() {
        // w >= 0 and -w - 1 >= 0 cannot both hold
        let problem =
            LinearMcp::new(DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, -1.0), 1).unwrap();
        let solver = FbLinearMcpSolver {
            starts: 3,
            ..FbLinearMcpSolver::default()
        };
        assert!(matches!(solver.solve_mcp(&problem), Err(Error::SubSolver(_))));
    }
}
