//! Conic mean-absolute-deviation portfolio model
//!
//! ```text
//!     min  c0 f'y - r'u / ||U_j*||
//!     s.t. e'u = ||U_j*||,   (y_T, ..., y_1, u) in L
//! ```
//!
//! with `U_j = R^j - r` the per-period disturbances and `u = w ||U_j*||`.
//! Its KKT conditions are a complementarity problem on `L`; this module
//! evaluates the closed-form solutions and checks them against that problem.

use std::collections::BTreeMap;
use std::io::Read;

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::{classify_pair, CaseTag, ComplementarityCertificate, ConePoint};
use crate::error::{Error, Result};

/// Relative size below which a denominator or `theta_1` counts as zero.
const DEGENERATE_TOL: f64 = 1e-12;

/// Per-period asset returns (rows are periods, columns assets) with the mean
/// return vector used to form disturbances.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    pub returns: DMatrix<f64>,
    pub means: DVector<f64>,
    pub labels: Vec<String>,
    /// `true` when `means` was supplied rather than computed from `returns`.
    pub means_supplied: bool,
}

impl ReturnsPanel {
    pub fn new(returns: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if returns.nrows() == 0 || returns.ncols() == 0 {
            return Err(Error::EmptyPanel);
        }
        if labels.len() != returns.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} assets",
                labels.len(),
                returns.ncols()
            )));
        }
        if returns.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("returns".into()));
        }
        let means = returns.row_mean().transpose();
        Ok(Self {
            returns,
            means,
            labels,
            means_supplied: false,
        })
    }

    /// Replaces the computed column means by `means`.
    pub fn with_means(mut self, means: DVector<f64>) -> Result<Self> {
        if means.len() != self.n_assets() {
            return Err(Error::Dimension(format!(
                "{} means for {} assets",
                means.len(),
                self.n_assets()
            )));
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("means".into()));
        }
        self.means = means;
        self.means_supplied = true;
        Ok(self)
    }

    /// Header row of asset labels, then one row of decimal returns per period.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let labels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut values = Vec::new();
        let mut rows = 0;
        for (k, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != labels.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, header has {}",
                    k + 1,
                    record.len(),
                    labels.len()
                )));
            }
            for field in record.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: not a number: {field:?}", k + 1)))?;
                values.push(v);
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(Error::EmptyPanel);
        }
        Self::new(DMatrix::from_row_slice(rows, labels.len(), &values), labels)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(&self.labels)?;
        for row in self.returns.row_iter() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    pub fn n_periods(&self) -> usize {
        self.returns.nrows()
    }
}

/// Row `j` is `U_j = R^j - r`.
pub fn disturbances(panel: &ReturnsPanel) -> Result<DMatrix<f64>> {
    if panel.n_periods() == 0 || panel.n_assets() == 0 {
        return Err(Error::EmptyPanel);
    }
    let mut u = panel.returns.clone();
    for mut row in u.row_iter_mut() {
        row -= panel.means.transpose();
    }
    Ok(u)
}

/// `theta_t = c0 (f_t + ... + f_{T-1} - f_T)` for `t < T`, `theta_T = -c0 f_T`.
/// This is the unique multiplier vector making the `y` block of the
/// Lagrangian gradient vanish.
pub fn theta_schedule(c0: f64, f: &DVector<f64>) -> DVector<f64> {
    let t = f.len();
    if t == 0 {
        return DVector::zeros(0);
    }
    let f_last = f[t - 1];
    let mut theta = DVector::zeros(t);
    let mut tail = 0.0;
    theta[t - 1] = -c0 * f_last;
    for i in (0..t - 1).rev() {
        tail += f[i];
        theta[i] = c0 * (tail - f_last);
    }
    theta
}

/// Risk aversion `c0 > 0`, per-period cost weights `f`, and the selected
/// period `j*` (0-based) with `||U_j*|| > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MadModel {
    pub c0: f64,
    pub f: DVector<f64>,
    pub jstar: usize,
    pub norm_ujstar: f64,
}

impl MadModel {
    pub fn new(panel: &ReturnsPanel, c0: f64, f: DVector<f64>, jstar: usize) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
        }
        if f.len() != panel.n_periods() {
            return Err(Error::Dimension(format!(
                "f has {} entries for {} periods",
                f.len(),
                panel.n_periods()
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("f".into()));
        }
        if jstar >= panel.n_periods() {
            return Err(Error::InvalidParameter(format!(
                "j* = {} out of range for {} periods",
                jstar + 1,
                panel.n_periods()
            )));
        }
        let norm_ujstar = disturbances(panel)?.row(jstar).norm();
        if !(norm_ujstar > 0.0) {
            return Err(Error::NonPositiveDisturbance(norm_ujstar));
        }
        Ok(Self {
            c0,
            f,
            jstar,
            norm_ujstar,
        })
    }

    pub fn theta(&self) -> DVector<f64> {
        theta_schedule(self.c0, &self.f)
    }

    /// `c0 sum(f) + 2 theta_T`.
    pub fn kappa_general(&self) -> f64 {
        let theta = self.theta();
        self.c0 * self.f.sum() + 2.0 * theta[theta.len() - 1]
    }

    /// `theta_1`.
    pub fn kappa_degenerate(&self) -> f64 {
        self.theta()[0]
    }

    /// `K = c0 sum(f) + 2 theta_T - theta_1`; identically zero under
    /// [`theta_schedule`], up to rounding.
    pub fn k_constant(&self) -> f64 {
        self.kappa_general() - self.kappa_degenerate()
    }
}

/// Coefficients of `n b^2 - 2 (S / N) b + Q / N^2 - kappa^2 = 0` with
/// `S = sum(r)`, `Q = sum(r^2)`, `N = ||U_j*||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaQuadratic {
    pub a: f64,
    /// Half the linear coefficient with its sign flipped: `S / N`.
    pub half_b: f64,
    pub c: f64,
}

impl BetaQuadratic {
    pub fn new(means: &DVector<f64>, norm_ujstar: f64, kappa: f64) -> Result<Self> {
        if !(norm_ujstar > 0.0) {
            return Err(Error::NonPositiveDisturbance(norm_ujstar));
        }
        let n = means.len() as f64;
        Ok(Self {
            a: n,
            half_b: means.sum() / norm_ujstar,
            c: means.norm_squared() / (norm_ujstar * norm_ujstar) - kappa * kappa,
        })
    }

    pub fn discriminant(&self) -> f64 {
        self.half_b * self.half_b - self.a * self.c
    }

    pub fn eval(&self, beta: f64) -> f64 {
        self.a * beta * beta - 2.0 * self.half_b * beta + self.c
    }

    /// `(beta_plus, beta_minus)`, or `None` for a negative discriminant.
    /// The root away from zero is formed first and the other from the
    /// product of the roots, avoiding cancellation.
    pub fn roots(&self) -> Option<(f64, f64)> {
        let disc = self.discriminant();
        if !(disc >= 0.0) {
            return None;
        }
        let sq = disc.sqrt();
        let big = if self.half_b >= 0.0 {
            (self.half_b + sq) / self.a
        } else {
            (self.half_b - sq) / self.a
        };
        let small = if big != 0.0 { self.c / (self.a * big) } else { 0.0 };
        let (plus, minus) = if self.half_b >= 0.0 { (big, small) } else { (small, big) };
        Some((plus, minus))
    }
}

pub fn beta_roots_general(model: &MadModel, panel: &ReturnsPanel) -> Result<Option<(f64, f64)>> {
    Ok(BetaQuadratic::new(&panel.means, model.norm_ujstar, model.kappa_general())?.roots())
}

pub fn beta_roots_degenerate(model: &MadModel, panel: &ReturnsPanel) -> Result<Option<(f64, f64)>> {
    Ok(BetaQuadratic::new(&panel.means, model.norm_ujstar, model.kappa_degenerate())?.roots())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PortfolioCase {
    /// The `u`-gradient of the Lagrangian vanishes.
    Degenerate,
    /// The `u`-gradient equals `-lambda u` for some `lambda > 0`.
    General,
}

#[derive(Debug, Clone)]
pub struct PortfolioSolution {
    pub w: DVector<f64>,
    /// `w ||U_j*||`.
    pub u: DVector<f64>,
    pub beta: f64,
    pub theta: DVector<f64>,
    pub lambda: Option<f64>,
    /// `lambda` is present but not positive beyond rounding.
    pub lambda_flagged: bool,
    pub case_tag: PortfolioCase,
    pub kkt_residuals: BTreeMap<String, f64>,
}

/// `w = (r - beta N e) / (<r, e> - n beta N)`, `u = N w`, and
/// `lambda = K / ||u||`.
pub fn weights_closed_form(model: &MadModel, panel: &ReturnsPanel, beta: f64) -> Result<PortfolioSolution> {
    let r = &panel.means;
    let n = r.len() as f64;
    let big_n = model.norm_ujstar;
    let denom = r.sum() - n * beta * big_n;
    let scale = r.abs().sum() + n * (beta * big_n).abs();
    if denom.abs() <= DEGENERATE_TOL * scale.max(f64::MIN_POSITIVE) || denom == 0.0 {
        return Err(Error::DegenerateDenominator(denom));
    }
    let w = r.add_scalar(-beta * big_n) / denom;
    let u = &w * big_n;
    let k = model.k_constant();
    let lambda = k / u.norm();
    // K vanishes identically under the theta schedule, so only a clearly
    // positive K counts as lambda > 0
    let k_scale = 1.0 + model.c0 * model.f.abs().sum();
    let mut sol = PortfolioSolution {
        w,
        u,
        beta,
        theta: model.theta(),
        lambda: Some(lambda),
        lambda_flagged: !(k > DEGENERATE_TOL * k_scale),
        case_tag: PortfolioCase::General,
        kkt_residuals: BTreeMap::new(),
    };
    sol.kkt_residuals = kkt_residuals(model, panel, &sol)?;
    Ok(sol)
}

/// Degenerate case: `u = N (beta N e - r) / (n beta N - <r, e>)` for each
/// root of the `theta_1` quadratic, kept when the existence condition holds
/// (all components of `||u|| r / N - theta_1 u` equal) and the `u`-gradient
/// of the Lagrangian vanishes. Of the two roots at most one passes, since
/// the gradient vanishes only when `theta_1 (<r, e> - n beta N) > 0`.
pub fn solve_degenerate_case(model: &MadModel, panel: &ReturnsPanel) -> Result<Option<PortfolioSolution>> {
    let theta1 = model.kappa_degenerate();
    let f_scale = model.c0 * model.f.abs().sum();
    if theta1.abs() <= DEGENERATE_TOL * f_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ZeroTheta);
    }
    let Some((bp, bm)) = beta_roots_degenerate(model, panel)? else {
        return Ok(None);
    };
    let r = &panel.means;
    let big_n = model.norm_ujstar;
    let mut best: Option<PortfolioSolution> = None;
    for beta in [bp, bm] {
        let mut sol = match weights_closed_form(model, panel, beta) {
            Ok(sol) => sol,
            Err(Error::DegenerateDenominator(_)) => continue,
            Err(e) => return Err(e),
        };
        let u_norm = sol.u.norm();
        let lhs = r * (u_norm / big_n) - &sol.u * theta1;
        let spread = lhs.max() - lhs.min();
        let tol = 1e-9 * (1.0 + lhs.amax());
        let gradient = sol.kkt_residuals["dl_du"];
        debug!("degenerate root {beta}: spread {spread:.3e}, gradient {gradient:.3e}");
        if spread > tol || gradient > 1e-8 {
            continue;
        }
        sol.case_tag = PortfolioCase::Degenerate;
        sol.lambda = None;
        sol.lambda_flagged = false;
        if best.as_ref().is_none_or(|b| gradient < b.kkt_residuals["dl_du"]) {
            best = Some(sol);
        }
    }
    Ok(best)
}

/// The complementarity pair of the KKT system at `sol`: primal
/// `(y_T, ..., y_1, u)` with every `y_t = ||u||` (the bound chain collapsed
/// onto its lower end), and dual `(dL/dy reversed, dL/du)`.
pub fn kkt_pair(model: &MadModel, panel: &ReturnsPanel, sol: &PortfolioSolution) -> Result<(ConePoint, ConePoint)> {
    let t = model.f.len();
    let u_norm = sol.u.norm();
    if !(u_norm > 0.0) {
        return Err(Error::InvalidParameter("u vanishes".into()));
    }
    let theta = &sol.theta;
    // dL/dy_t = c0 f_t + theta_{t+1} - theta_t, and c0 f_T + theta_T
    let dl_dy = DVector::from_fn(t, |i, _| {
        let next = if i + 1 < t { theta[i + 1] - theta[i] } else { theta[i] };
        model.c0 * model.f[i] + next
    });
    let g = -(&panel.means / model.norm_ujstar) + &sol.u * (theta[0] / u_norm) + DVector::from_element(sol.u.len(), sol.beta);
    let primal = ConePoint::new(DVector::from_element(t, u_norm), sol.u.clone());
    let dual_y = DVector::from_fn(t, |i, _| dl_dy[t - 1 - i]);
    Ok((primal, ConePoint::new(dual_y, g)))
}

/// Certificate of the KKT pair at tolerance `tol`.
pub fn kkt_certificate(
    model: &MadModel,
    panel: &ReturnsPanel,
    sol: &PortfolioSolution,
    tol: f64,
) -> Result<ComplementarityCertificate> {
    let (z, s) = kkt_pair(model, panel, sol)?;
    classify_pair(&z, &s, tol)
}

/// Named residuals of the KKT system: membership gaps and orthogonality of
/// the pair, the two Lagrangian gradient blocks, the budget `e'w - 1`, the
/// collapsed-chain tie `y_min - ||u||`, and the constant `K`.
pub fn kkt_residuals(model: &MadModel, panel: &ReturnsPanel, sol: &PortfolioSolution) -> Result<BTreeMap<String, f64>> {
    let (z, s) = kkt_pair(model, panel, sol)?;
    let cert = classify_pair(&z, &s, 1e-8)?;
    let mut out = BTreeMap::new();
    out.insert("primal_gap".into(), cert.residual("primal_gap"));
    out.insert("dual_gap".into(), cert.residual("dual_gap"));
    out.insert("orthogonality".into(), cert.residual("orthogonality"));
    out.insert("dl_dy".into(), s.x.amax());
    out.insert("dl_du".into(), s.u.amax());
    out.insert("budget".into(), sol.w.sum() - 1.0);
    out.insert("y_min_minus_norm_u".into(), z.x.min() - sol.u.norm());
    out.insert("k_constant".into(), model.k_constant());
    Ok(out)
}

/// One evaluated root of the general quadratic.
#[derive(Debug, Clone)]
pub struct BetaCandidate {
    pub beta: f64,
    pub quadratic_residual: f64,
    pub solution: Option<PortfolioSolution>,
    pub error: Option<String>,
    /// The KKT pair passes [`classify_pair`] at `1e-8`.
    pub accepted: bool,
    pub case_tag: Option<CaseTag>,
}

#[derive(Debug, Clone)]
pub struct PortfolioReport {
    pub model: MadModel,
    pub candidates: Vec<BetaCandidate>,
    /// Best accepted candidate (smallest `dL/du`), if any.
    pub best: Option<PortfolioSolution>,
    pub degenerate: Option<PortfolioSolution>,
}

/// Evaluates both roots of the general quadratic, certifies each KKT pair,
/// and also runs the degenerate path when `theta_1 != 0`.
pub fn solve_portfolio(model: &MadModel, panel: &ReturnsPanel) -> Result<PortfolioReport> {
    let quad = BetaQuadratic::new(&panel.means, model.norm_ujstar, model.kappa_general())?;
    let mut candidates = Vec::new();
    if let Some((bp, bm)) = quad.roots() {
        for beta in [bp, bm] {
            let quadratic_residual = quad.eval(beta);
            match weights_closed_form(model, panel, beta) {
                Ok(sol) => {
                    let cert = kkt_certificate(model, panel, &sol, 1e-8)?;
                    candidates.push(BetaCandidate {
                        beta,
                        quadratic_residual,
                        accepted: cert.accepted(),
                        case_tag: Some(cert.case_tag),
                        solution: Some(sol),
                        error: None,
                    });
                }
                Err(e @ Error::DegenerateDenominator(_)) => candidates.push(BetaCandidate {
                    beta,
                    quadratic_residual,
                    solution: None,
                    error: Some(e.to_string()),
                    accepted: false,
                    case_tag: None,
                }),
                Err(e) => return Err(e),
            }
        }
    }
    let best = candidates
        .iter()
        .filter(|c| c.accepted)
        .filter_map(|c| c.solution.as_ref())
        .min_by(|a, b| a.kkt_residuals["dl_du"].total_cmp(&b.kkt_residuals["dl_du"]))
        .cloned();
    let degenerate = match solve_degenerate_case(model, panel) {
        Ok(sol) => sol,
        Err(Error::ZeroTheta) => None,
        Err(e) => return Err(e),
    };
    Ok(PortfolioReport {
        model: model.clone(),
        candidates,
        best,
        degenerate,
    })
}

/// How the period `j*` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum JstarMode {
    /// A caller-supplied 0-based index.
    Fixed(usize),
    /// `argmin_j |U_j' w|` over periods with `U_j != 0`.
    GivenW(DVector<f64>),
    /// Alternate between solving for `w` and re-selecting `j*`, starting
    /// from `start`, for at most 50 rounds.
    FixedPoint { c0: f64, f: DVector<f64>, start: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JstarSelection {
    pub index: usize,
    pub iterations: usize,
    /// Fixed-point mode only: whether the index stopped changing.
    pub converged: Option<bool>,
}

const FIXED_POINT_ROUNDS: usize = 50;

fn argmin_abs_projection(u: &DMatrix<f64>, w: &DVector<f64>) -> Result<usize> {
    if w.len() != u.ncols() {
        return Err(Error::Dimension(format!("w has {} entries for {} assets", w.len(), u.ncols())));
    }
    let mut best: Option<(f64, usize)> = None;
    for (j, row) in u.row_iter().enumerate() {
        if row.norm() == 0.0 {
            continue;
        }
        let value = (row * w)[0].abs();
        if best.is_none_or(|(b, _)| value < b) {
            best = Some((value, j));
        }
    }
    best.map(|(_, j)| j).ok_or(Error::AllDisturbancesZero)
}

pub fn select_jstar(panel: &ReturnsPanel, mode: &JstarMode) -> Result<JstarSelection> {
    let u = disturbances(panel)?;
    if u.row_iter().all(|r| r.norm() == 0.0) {
        return Err(Error::AllDisturbancesZero);
    }
    match mode {
        JstarMode::Fixed(j) => {
            if *j >= panel.n_periods() {
                return Err(Error::InvalidParameter(format!("j* = {} out of range", j + 1)));
            }
            Ok(JstarSelection {
                index: *j,
                iterations: 0,
                converged: None,
            })
        }
        JstarMode::GivenW(w) => Ok(JstarSelection {
            index: argmin_abs_projection(&u, w)?,
            iterations: 0,
            converged: None,
        }),
        JstarMode::FixedPoint { c0, f, start } => {
            let mut j = *start;
            for k in 1..=FIXED_POINT_ROUNDS {
                let model = MadModel::new(panel, *c0, f.clone(), j)?;
                let report = solve_portfolio(&model, panel)?;
                let Some(sol) = report.best.or(report.degenerate) else {
                    return Ok(JstarSelection {
                        index: j,
                        iterations: k,
                        converged: Some(false),
                    });
                };
                let next = argmin_abs_projection(&u, &sol.w)?;
                if next == j {
                    return Ok(JstarSelection {
                        index: j,
                        iterations: k,
                        converged: Some(true),
                    });
                }
                j = next;
            }
            Ok(JstarSelection {
                index: j,
                iterations: FIXED_POINT_ROUNDS,
                converged: Some(false),
            })
        }
    }
}

/// Parses a cost-weight spec: `const:X` (all periods X), `linear:X` (period
/// `t` gets `X t`, 1-based), or an explicit comma-separated list.
pub fn parse_f_spec(spec: &str, periods: usize) -> Result<DVector<f64>> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
    };
    let f = if let Some(x) = spec.strip_prefix("const:") {
        DVector::from_element(periods, number(x)?)
    } else if let Some(x) = spec.strip_prefix("linear:") {
        let x = number(x)?;
        DVector::from_fn(periods, |i, _| x * (i + 1) as f64)
    } else {
        let values = spec.split(',').map(number).collect::<Result<Vec<_>>>()?;
        if values.len() != periods {
            return Err(Error::Dimension(format!("f has {} entries for {periods} periods", values.len())));
        }
        DVector::from_vec(values)
    };
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("f".into()));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn panel(rows: &[&[f64]]) -> ReturnsPanel {
        let n = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let labels = (0..n).map(|i| format!("a{i}")).collect();
        ReturnsPanel::new(DMatrix::from_row_slice(rows.len(), n, &flat), labels).unwrap()
    }

    fn random_panel(rng: &mut ChaCha8Rng, n: usize, t: usize) -> ReturnsPanel {
        let m = DMatrix::from_fn(t, n, |_, _| rng.random_range(-0.05..0.08));
        ReturnsPanel::new(m, (0..n).map(|i| format!("a{i}")).collect()).unwrap()
    }

    #[test]
    fn disturbance_examples() {
        let p = panel(&[&[1.0], &[3.0]]);
        assert_eq!(disturbances(&p).unwrap().as_slice(), &[-1.0, 1.0]);
        let constant = panel(&[&[0.1, 0.2], &[0.1, 0.2]]);
        assert!(disturbances(&constant).unwrap().iter().all(|&v| v == 0.0));
        // n = 2, T = 2: means (0.2, 0.1), U_1 = (-0.1, 0.1), U_2 = (0.1, -0.1)
        let two = panel(&[&[0.1, 0.2], &[0.3, 0.0]]);
        let u = disturbances(&two).unwrap();
        assert!((u.row(0).norm() - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((u[(1, 0)] - 0.1).abs() < 1e-15 && (u[(1, 1)] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_schedule(1.0, &DVector::zeros(3)), DVector::zeros(3));
        assert_eq!(theta_schedule(1.0, &DVector::from_vec(vec![1.0, 1.0])).as_slice(), &[0.0, -1.0]);
        assert_eq!(
            theta_schedule(2.0, &DVector::from_vec(vec![3.0, 2.0, 1.0])).as_slice(),
            &[8.0, 2.0, -2.0]
        );
    }

    #[test]
    fn k_vanishes_for_any_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_panel(&mut rng, 3, 7);
        for _ in 0..20 {
            let f = DVector::from_fn(7, |_, _| rng.random_range(0.0..3.0));
            let model = MadModel::new(&p, rng.random_range(0.1..5.0), f, 2).unwrap();
            assert!(model.k_constant().abs() < 1e-12 * (1.0 + model.c0 * model.f.sum()));
        }
    }

    #[test]
    fn quadratic_examples() {
        // n = 2, r = (0.1, 0.2), N = 1, kappa = 0.5: 2b^2 - 0.6b - 0.2 = 0
        let q = BetaQuadratic::new(&DVector::from_vec(vec![0.1, 0.2]), 1.0, 0.5).unwrap();
        let (bp, bm) = q.roots().unwrap();
        assert!((bp - 0.5).abs() < 1e-15 && (bm + 0.2).abs() < 1e-15);
        assert!(q.eval(bp).abs() < 1e-15 && q.eval(bm).abs() < 1e-15);

        // n = 1: b = r_1 / N +- |kappa|
        let q = BetaQuadratic::new(&DVector::from_vec(vec![0.3]), 2.0, 0.4).unwrap();
        let (bp, bm) = q.roots().unwrap();
        assert!((bp - 0.55).abs() < 1e-15 && (bm + 0.25).abs() < 1e-15);

        // spread-out means and a tiny kappa: no real roots
        let q = BetaQuadratic::new(&DVector::from_vec(vec![1.0, -1.0]), 1.0, 1e-3).unwrap();
        assert!(q.roots().is_none());
    }

    #[test]
    fn weights_examples() {
        let p = panel(&[&[0.1, 0.2], &[0.3, 0.0]]);
        let model = MadModel::new(&p, 1.0, DVector::from_vec(vec![1.0, 1.0]), 0).unwrap();
        let sol = weights_closed_form(&model, &p, -0.2414).unwrap();
        let n = model.norm_ujstar;
        let denom = 0.3 - 2.0 * -0.2414 * n;
        assert!((sol.w[0] - (0.2 + 0.2414 * n) / denom).abs() < 1e-15);
        assert!((sol.w.sum() - 1.0).abs() < 1e-12);
        assert!((&sol.u - &sol.w * n).amax() == 0.0);

        // symmetric means give equal weights
        let sym = panel(&[&[0.1, 0.1, 0.1], &[0.3, 0.3, 0.3], &[0.0, 0.5, -0.1]]).with_means(DVector::from_element(3, 0.2));
        let sym = sym.unwrap();
        let model = MadModel::new(&sym, 1.0, DVector::from_element(3, 1.0), 2).unwrap();
        let sol = weights_closed_form(&model, &sym, 0.01).unwrap();
        assert!(sol.w.iter().all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));

        // <r, e> = n beta N
        let beta = sym.means.sum() / (3.0 * model.norm_ujstar);
        assert!(matches!(
            weights_closed_form(&model, &sym, beta),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn exactly_one_root_certifies_and_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..40 {
            let n = rng.random_range(1..=6);
            let t = rng.random_range(2..=12);
            let p = random_panel(&mut rng, n, t);
            let f = DVector::from_fn(t, |_, _| rng.random_range(0.0..2.0));
            let model = MadModel::new(&p, rng.random_range(0.5..3.0), f, rng.random_range(0..t)).unwrap();
            let report = solve_portfolio(&model, &p).unwrap();
            if report.candidates.is_empty() {
                continue;
            }
            let accepted: Vec<_> = report.candidates.iter().filter(|c| c.accepted).collect();
            assert!(accepted.len() <= 1 || report.candidates[0].beta == report.candidates[1].beta);
            if let (Some(best), Some(deg)) = (&report.best, &report.degenerate) {
                assert!((&best.w - &deg.w).amax() < 1e-8);
            }
            for c in accepted {
                assert_eq!(c.case_tag, Some(CaseTag::VZero));
                let sol = c.solution.as_ref().unwrap();
                assert!(sol.lambda_flagged);
                assert!(sol.kkt_residuals["budget"].abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kkt_residuals_respond_to_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_panel(&mut rng, 3, 6);
        let model = MadModel::new(&p, 1.0, DVector::from_element(6, 1.0), 0).unwrap();
        let report = solve_portfolio(&model, &p).unwrap();
        let sol = report.best.expect("a root is accepted");
        assert!(sol.kkt_residuals.values().all(|v| v.abs() <= 1e-8));
        let mut bumped = sol.clone();
        let delta = DVector::from_vec(vec![1e-3, -2e-3, 4e-3]);
        bumped.w += &delta;
        bumped.u = &bumped.w * model.norm_ujstar;
        let res = kkt_residuals(&model, &p, &bumped).unwrap();
        assert!((res["budget"] - delta.sum()).abs() < 1e-15);
        assert!(res["dl_du"] > 1e-6);
    }

    #[test]
    fn jstar_selection() {
        let single = panel(&[&[0.1, 0.2]]).with_means(DVector::from_vec(vec![0.0, 0.0])).unwrap();
        let sel = select_jstar(&single, &JstarMode::GivenW(DVector::from_vec(vec![0.5, 0.5]))).unwrap();
        assert_eq!(sel.index, 0);

        // U_2 = (1, -1) is orthogonal to w = (0.5, 0.5); the others are not
        let p = panel(&[&[1.0, 2.0], &[1.0, -1.0], &[0.0, 3.0]]).with_means(DVector::zeros(2)).unwrap();
        let sel = select_jstar(&p, &JstarMode::GivenW(DVector::from_vec(vec![0.5, 0.5]))).unwrap();
        assert_eq!(sel.index, 1);

        let zero = panel(&[&[0.1, 0.2], &[0.1, 0.2]]);
        assert!(matches!(select_jstar(&zero, &JstarMode::Fixed(0)), Err(Error::AllDisturbancesZero)));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_panel(&mut rng, 3, 3);
        let mode = JstarMode::FixedPoint {
            c0: 1.0,
            f: DVector::from_element(3, 1.0),
            start: 0,
        };
        let sel = select_jstar(&p, &mode).unwrap();
        assert!(sel.converged.is_some() && sel.index < 3 && sel.iterations >= 1);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let text = "A,B\n0.01,0.02\n-0.01,0.03\n";
        let p = ReturnsPanel::from_csv(text.as_bytes()).unwrap();
        assert_eq!(p.labels, vec!["A", "B"]);
        assert!((p.means[1] - 0.025).abs() < 1e-15);
        assert!(!p.means_supplied);
        let again = ReturnsPanel::from_csv(p.to_csv().unwrap().as_bytes()).unwrap();
        assert_eq!(again.returns, p.returns);
        assert!(matches!(ReturnsPanel::from_csv("A,B\n".as_bytes()), Err(Error::EmptyPanel)));
        assert!(ReturnsPanel::from_csv("A,B\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn f_spec_parsing() {
        assert_eq!(parse_f_spec("const:2", 3).unwrap().as_slice(), &[2.0, 2.0, 2.0]);
        assert_eq!(parse_f_spec("linear:0.5", 3).unwrap().as_slice(), &[0.5, 1.0, 1.5]);
        assert_eq!(parse_f_spec("1,2,3", 3).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        assert!(parse_f_spec("1,2", 3).is_err());
        assert!(parse_f_spec("const:abc", 3).is_err());
    }

    #[test]
    fn model_validation() {
        let p = panel(&[&[0.1, 0.2], &[0.3, 0.0]]);
        let f = DVector::from_element(2, 1.0);
        assert!(MadModel::new(&p, 0.0, f.clone(), 0).is_err());
        assert!(MadModel::new(&p, 1.0, f.clone(), 2).is_err());
        assert!(MadModel::new(&p, 1.0, DVector::zeros(3), 0).is_err());
        let flat = panel(&[&[0.1, 0.2], &[0.1, 0.2]]);
        assert!(matches!(MadModel::new(&flat, 1.0, f, 0), Err(Error::NonPositiveDisturbance(_))));
    }
}
