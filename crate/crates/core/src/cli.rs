//! Command implementations behind the `mesoc` binary. Each command returns a
//! [`RunReport`] and an exit code: 0 solved / passed, 1 input error, 2 no
//! solution or no convergence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cone::{classify_pair, ComplementarityCertificate, ConePoint};
use crate::error::{Error, Result};
use crate::generate::generate_planted;
use crate::lcp::LcpInstance;
use crate::portfolio::{
    disturbances, select_jstar, solve_portfolio, JstarMode, MadModel, PortfolioSolution, ReturnsPanel,
};
use crate::solver::{solve, NewtonConfig, SolveOptions, SolveStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    /// SHA-256 of the input file bytes (hex).
    pub instance_digest: String,
    pub status: String,
    pub solution: Option<Value>,
    pub residuals: BTreeMap<String, f64>,
    pub trace_summary: Option<Value>,
    pub wall_time_ms: f64,
}

impl RunReport {
    fn new(command: &[String], digest: String) -> Self {
        Self {
            command: command.to_vec(),
            instance_digest: digest,
            status: String::new(),
            solution: None,
            residuals: BTreeMap::new(),
            trace_summary: None,
            wall_time_ms: 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text rendering for terminals.
    pub fn render_human(&self) -> String {
        let mut out = format!("{}: {}\n", self.command.join(" "), self.status);
        out.push_str(&format!("input sha256 {}\n", self.instance_digest));
        if let Some(sol) = &self.solution {
            out.push_str("solution:\n");
            render_value(&mut out, sol, 1);
        }
        if !self.residuals.is_empty() {
            out.push_str("residuals:\n");
            for (k, v) in &self.residuals {
                out.push_str(&format!("  {k:<24} {v:.3e}\n"));
            }
        }
        if let Some(trace) = &self.trace_summary {
            out.push_str("trace:\n");
            render_value(&mut out, trace, 1);
        }
        out.push_str(&format!("wall time {:.1} ms\n", self.wall_time_ms));
        out
    }
}

fn render_value(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_value(out, v, depth + 1);
                    }
                    Value::Array(items) if items.iter().any(Value::is_object) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        for item in items {
                            render_value(out, item, depth + 1);
                            out.push_str(&format!("{pad}  --\n"));
                        }
                    }
                    _ => out.push_str(&format!("{pad}{k}: {v}\n")),
                }
            }
        }
        other => out.push_str(&format!("{pad}{other}\n")),
    }
}

/// A finished command.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub report: RunReport,
    pub exit_code: i32,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn vec_json(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<_>>())
}

fn certificate_json(cert: &ComplementarityCertificate) -> Value {
    json!({
        "case_tag": cert.case_tag.as_str(),
        "lambda": cert.lambda,
        "lambda_near_zero": cert.lambda_near_zero,
        "primal_member": cert.primal_member,
        "dual_member": cert.dual_member,
        "orthogonal": cert.orthogonal,
        "case_conditions": cert.case_conditions,
        "accepted": cert.accepted(),
        "tol": cert.tol,
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone)]
pub struct SolveArgs {
    pub instance: PathBuf,
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub seed: u64,
    /// Write the best run's iteration records here.
    pub trace_out: Option<PathBuf>,
}

impl SolveArgs {
    pub fn new(instance: impl Into<PathBuf>) -> Self {
        let defaults = SolveOptions::default();
        Self {
            instance: instance.into(),
            tol: defaults.config.tol_residual,
            max_iter: defaults.config.max_iter,
            starts: defaults.starts,
            seed: defaults.seed,
            trace_out: None,
        }
    }
}

fn read_instance(path: &Path) -> Result<(LcpInstance, String)> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((LcpInstance::from_json(&text)?, sha256_hex(&bytes)))
}

pub fn cmd_solve(args: &SolveArgs, command: &[String]) -> Result<CommandOutcome> {
    let start = Instant::now();
    let (inst, digest) = read_instance(&args.instance)?;
    let opts = SolveOptions {
        config: NewtonConfig {
            tol_residual: args.tol,
            max_iter: args.max_iter,
            ..NewtonConfig::default()
        },
        starts: args.starts,
        seed: args.seed,
        ..SolveOptions::default()
    };
    let sol = solve(&inst, &opts)?;
    if let Some(path) = &args.trace_out {
        fs::write(path, sol.trace.to_lines())?;
    }

    let mut report = RunReport::new(command, digest);
    report.status = sol.status.as_str().to_string();
    report.residuals = sol.certificate.residuals.clone();
    report.residuals.insert("phi_inf".into(), sol.residual_inf);
    report.solution = Some(json!({
        "x": vec_json(&sol.z.x),
        "u": vec_json(&sol.z.u),
        "w_hat": vec_json(&sol.point.w_hat),
        "t": sol.point.t,
        "image_y": vec_json(&sol.s.x),
        "image_v": vec_json(&sol.s.u),
        "certificate": certificate_json(&sol.certificate),
    }));
    let last = sol.trace.last();
    report.trace_summary = Some(json!({
        "best_start": sol.start_index,
        "iterations": sol.trace.iterations(),
        "fallback_steps": sol.trace.fallback_steps(),
        "final_merit": last.map(|r| r.merit),
        "final_residual_inf": last.map(|r| r.residual_inf),
        "starts": sol.summary,
    }));
    report.wall_time_ms = elapsed_ms(start);
    let exit_code = if sol.status == SolveStatus::Solved {
        EXIT_OK
    } else {
        EXIT_NO_SOLUTION
    };
    Ok(CommandOutcome { report, exit_code })
}

/// Candidate file: `{"x": [...], "u": [...]}`, or a `solve` report whose
/// `solution` object carries those keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateFile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

fn parse_candidate(text: &str) -> Result<CandidateFile> {
    let value: Value = serde_json::from_str(text)?;
    let body = match value.get("solution") {
        Some(sol) if sol.is_object() => sol.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(body)?)
}

pub fn cmd_certify(instance: &Path, candidate: &Path, tol: f64, command: &[String]) -> Result<CommandOutcome> {
    let start = Instant::now();
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (inst, digest) = read_instance(instance)?;
    let cand = parse_candidate(&fs::read_to_string(candidate)?)?;
    let z = ConePoint::from_slices(&cand.x, &cand.u);
    if !z.is_finite() {
        return Err(Error::NonFinite("candidate".into()));
    }
    let s = inst.affine_image(&z)?;
    let cert = classify_pair(&z, &s, tol)?;
    let ab = inst.alpha_beta_certificate(&z)?;

    let mut report = RunReport::new(command, digest);
    report.status = if cert.accepted() { "pass" } else { "fail" }.to_string();
    report.residuals = cert.residuals.clone();
    report.residuals.insert("alpha_beta_inner".into(), ab.inner());
    report.solution = Some(json!({
        "x": cand.x,
        "u": cand.u,
        "image_y": vec_json(&s.x),
        "image_v": vec_json(&s.u),
        "alpha": vec_json(&ab.alpha),
        "beta": vec_json(&ab.beta),
        "certificate": certificate_json(&cert),
    }));
    report.wall_time_ms = elapsed_ms(start);
    let exit_code = if cert.accepted() { EXIT_OK } else { EXIT_NO_SOLUTION };
    Ok(CommandOutcome { report, exit_code })
}

/// Sidecar path next to an instance file: `name.json` becomes `name.planted.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.planted.json"))
}

pub fn cmd_generate(p: usize, q: usize, seed: u64, out: &Path, command: &[String]) -> Result<CommandOutcome> {
    let start = Instant::now();
    let planted = generate_planted(p, q, seed)?;
    let text = planted.instance.to_json()?;
    fs::write(out, &text)?;
    let sidecar = sidecar_path(out);
    fs::write(&sidecar, serde_json::to_string_pretty(&planted.sidecar())?)?;

    let s = planted.instance.affine_image(&planted.z)?;
    let cert = classify_pair(&planted.z, &s, 1e-12)?;
    let mut report = RunReport::new(command, sha256_hex(text.as_bytes()));
    report.status = "generated".into();
    report.residuals = cert.residuals.clone();
    report.solution = Some(json!({
        "instance": out.display().to_string(),
        "sidecar": sidecar.display().to_string(),
        "x": vec_json(&planted.z.x),
        "u": vec_json(&planted.z.u),
        "lambda": planted.lambda,
        "certificate": certificate_json(&cert),
    }));
    report.wall_time_ms = elapsed_ms(start);
    Ok(CommandOutcome {
        report,
        exit_code: EXIT_OK,
    })
}

#[derive(Debug, Clone)]
pub struct PortfolioArgs {
    pub csv: PathBuf,
    pub c0: f64,
    /// `const:X`, `linear:X`, or a comma-separated list.
    pub f_spec: String,
    /// `fixed:K` (1-based), `given-w` (equal weights), or `fixed-point`.
    pub jstar: String,
    /// Supplied mean returns as a comma-separated list.
    pub means: Option<String>,
}

fn parse_jstar(spec: &str, panel: &ReturnsPanel, c0: f64, f: &DVector<f64>) -> Result<JstarMode> {
    if let Some(k) = spec.strip_prefix("fixed:") {
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad j* index {k:?}")))?;
        if k == 0 {
            return Err(Error::InvalidParameter("j* is 1-based".into()));
        }
        return Ok(JstarMode::Fixed(k - 1));
    }
    match spec {
        "given-w" => {
            let n = panel.n_assets();
            Ok(JstarMode::GivenW(DVector::from_element(n, 1.0 / n as f64)))
        }
        "fixed-point" => Ok(JstarMode::FixedPoint {
            c0,
            f: f.clone(),
            start: 0,
        }),
        other => Err(Error::Parse(format!(
            "j* mode must be fixed:K, given-w or fixed-point, got {other:?}"
        ))),
    }
}

fn portfolio_json(sol: &PortfolioSolution, labels: &[String]) -> Value {
    let weights: serde_json::Map<String, Value> = labels
        .iter()
        .zip(sol.w.iter())
        .map(|(l, w)| (l.clone(), json!(w)))
        .collect();
    json!({
        "case": match sol.case_tag {
            crate::portfolio::PortfolioCase::Degenerate => "degenerate",
            crate::portfolio::PortfolioCase::General => "general",
        },
        "beta": sol.beta,
        "weights": weights,
        "u": vec_json(&sol.u),
        "theta": vec_json(&sol.theta),
        "lambda": sol.lambda,
        "lambda_flagged": sol.lambda_flagged,
        "kkt_residuals": sol.kkt_residuals,
    })
}

pub fn cmd_portfolio(args: &PortfolioArgs, command: &[String]) -> Result<CommandOutcome> {
    let start = Instant::now();
    let bytes = fs::read(&args.csv)?;
    let mut panel = ReturnsPanel::from_csv(bytes.as_slice())?;
    if let Some(m) = &args.means {
        let values = m
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad mean {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        panel = panel.with_means(DVector::from_vec(values))?;
    }
    if disturbances(&panel)?.row_iter().all(|r| r.norm() == 0.0) {
        return Err(Error::AllDisturbancesZero);
    }
    let f = crate::portfolio::parse_f_spec(&args.f_spec, panel.n_periods())?;
    let mode = parse_jstar(&args.jstar, &panel, args.c0, &f)?;
    let selection = select_jstar(&panel, &mode)?;
    let model = MadModel::new(&panel, args.c0, f, selection.index)?;
    let result = solve_portfolio(&model, &panel)?;

    let candidates: Vec<Value> = result
        .candidates
        .iter()
        .map(|c| {
            json!({
                "beta": c.beta,
                "quadratic_residual": c.quadratic_residual,
                "accepted": c.accepted,
                "kkt_case_tag": c.case_tag.map(|t| t.as_str()),
                "error": c.error,
                "solution": c.solution.as_ref().map(|s| portfolio_json(s, &panel.labels)),
            })
        })
        .collect();

    let mut report = RunReport::new(command, sha256_hex(&bytes));
    let chosen = result.best.as_ref().or(result.degenerate.as_ref());
    report.status = if chosen.is_some() { "accepted" } else { "no-candidate" }.to_string();
    if let Some(sol) = chosen {
        report.residuals = sol.kkt_residuals.clone();
    }
    report.solution = Some(json!({
        "jstar": selection.index + 1,
        "jstar_iterations": selection.iterations,
        "jstar_converged": selection.converged,
        "norm_ujstar": model.norm_ujstar,
        "means_supplied": panel.means_supplied,
        "candidates": candidates,
        "degenerate": result.degenerate.as_ref().map(|s| portfolio_json(s, &panel.labels)),
        "chosen": chosen.map(|s| portfolio_json(s, &panel.labels)),
    }));
    report.wall_time_ms = elapsed_ms(start);
    let exit_code = if chosen.is_some() { EXIT_OK } else { EXIT_NO_SOLUTION };
    Ok(CommandOutcome { report, exit_code })
}

/// Exit code for an error raised while running a command.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::SubSolver(_) => EXIT_NO_SOLUTION,
        _ => EXIT_INPUT,
    }
}
