//! Batch front-end: reads a flat `key=value` problem config, runs one of the
//! solve / continue / certify / operator modes, and writes a trajectory CSV
//! plus a plain-text run report.
//!
//! Config grammar: one `key = value` pair per line, `#` starts a comment,
//! lists are comma-separated. Numbers are plain decimal text. The right-hand
//! side and envelope values are expressions in the grammar of [`crate::expr`].
//!
//! The CSV carries the header `t,s,x,y_weighted` (`x1,y1,x2,y2,...` for
//! systems), one row per grid node, every number printed with 17 significant
//! digits so the file round-trips losslessly. The raw value column is left
//! empty at `t = 0` when `gamma < 1`, where the raw solution is undefined.
//!
//! Exit status: `0` success, `2` parameter-domain error, `3`
//! non-convergence or stall, `4` config or parse error. Every failure also
//! prints a one-line machine-parsable diagnostic on standard error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::continuation::{
    check_global_certificate, continue_solution, Classification, ContinuationOptions, Target,
};
use crate::error::Error;
use crate::expr::{self, Expr};
use crate::operators::{hilfer_katugampola_derivative, katugampola_derivative, katugampola_integral};
use crate::space::{weighted_norm, CauchyProblem, FhkParams, Rhs, SGrid, WeightedTrajectory};
use crate::volterra::{estimate_l, local_radius, picard_solve, volterra_residual, SolveOptions};

/// Formula provenance strings printed verbatim in run reports.
pub const H_LOCAL_FORMULA: &str = "min{ (k rho^(alpha-gamma+1) Gamma(alpha-lambda+1) / (L Gamma(1-lambda)))^(1/(rho (alpha-gamma-lambda+1))), T }";
pub const H_STEP_FORMULA: &str =
    "min{ (k rho^alpha Gamma(alpha+1) / Theta)^(1/(rho alpha)), 1 }";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Continue,
    Certify,
    Operator,
}

impl Mode {
    fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "solve" => Ok(Mode::Solve),
            "continue" => Ok(Mode::Continue),
            "certify" => Ok(Mode::Certify),
            "operator" => Ok(Mode::Operator),
            other => Err(CliError::Config(format!(
                "mode must be one of solve|continue|certify|operator, got `{other}`"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Continue => "continue",
            Mode::Certify => "certify",
            Mode::Operator => "operator",
        }
    }
}

/// A fully parsed run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub n: usize,
    pub rhs: Vec<String>,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub grading: f64,
    /// Solve interval override; defaults to the horizon (solve/certify) or
    /// the computed local radius (continue).
    pub h: Option<f64>,
    pub k: Option<f64>,
    pub blowup_threshold: f64,
    /// `None` means unbounded continuation.
    pub target_t: Option<f64>,
    pub step_nodes: usize,
    pub max_steps: usize,
    pub g: Option<String>,
    pub f: Option<String>,
    pub psi: Option<String>,
    pub output: Option<PathBuf>,
}

/// Failures of a run, each carrying its exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("parameter domain: {0}")]
    Domain(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 4,
            CliError::Domain(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Domain(_) => "parameter-domain",
            CliError::NonConvergence(_) => "non-convergence",
            CliError::Io(_) => "io",
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ParameterDomain(_)
            | Error::EmptyDomain(_)
            | Error::IncompatibleTrajectories(_)
            | Error::IncompatibleInput(_)
            | Error::InsufficientGrid(_)
            | Error::OutOfRegime(_)
            | Error::RhsEvaluation { .. }
            | Error::CertificateInput(_) => CliError::Domain(e.to_string()),
        }
    }
}

/// Parses the flat `key = value` config text.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig {
        mode: Mode::Solve,
        alpha: f64::NAN,
        beta: f64::NAN,
        rho: f64::NAN,
        x0: Vec::new(),
        horizon: f64::NAN,
        n: 256,
        rhs: Vec::new(),
        lambda: 0.0,
        tol: 1e-10,
        max_iter: 200,
        grading: 1.0,
        h: None,
        k: None,
        blowup_threshold: 1e8,
        target_t: None,
        step_nodes: 48,
        max_steps: 1000,
        g: None,
        f: None,
        psi: None,
        output: None,
    };
    let mut saw_mode = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let bad_num = |k: &str, v: &str| {
            CliError::Config(format!("line {}: `{k}` is not a number: `{v}`", lineno + 1))
        };
        let parse_f64 = |v: &str, k: &str| v.parse::<f64>().map_err(|_| bad_num(k, v));
        let parse_usize = |v: &str, k: &str| v.parse::<usize>().map_err(|_| bad_num(k, v));
        match key {
            "mode" => {
                cfg.mode = Mode::parse(value)?;
                saw_mode = true;
            }
            "alpha" => cfg.alpha = parse_f64(value, key)?,
            "beta" => cfg.beta = parse_f64(value, key)?,
            "rho" => cfg.rho = parse_f64(value, key)?,
            "x0" => {
                cfg.x0 = value
                    .split(',')
                    .map(|v| parse_f64(v.trim(), key))
                    .collect::<Result<_, _>>()?;
            }
            "T" => cfg.horizon = parse_f64(value, key)?,
            "N" => cfg.n = parse_usize(value, key)?,
            "rhs" => {
                cfg.rhs = value.split(',').map(|v| v.trim().to_string()).collect();
            }
            "lambda" => cfg.lambda = parse_f64(value, key)?,
            "tol" => cfg.tol = parse_f64(value, key)?,
            "max_iter" => cfg.max_iter = parse_usize(value, key)?,
            "grading" => cfg.grading = parse_f64(value, key)?,
            "h" => cfg.h = Some(parse_f64(value, key)?),
            "k" => cfg.k = Some(parse_f64(value, key)?),
            "blowup_threshold" => cfg.blowup_threshold = parse_f64(value, key)?,
            "target_T" => {
                cfg.target_t = if value == "unbounded" {
                    None
                } else {
                    Some(parse_f64(value, key)?)
                };
            }
            "step_nodes" => cfg.step_nodes = parse_usize(value, key)?,
            "max_steps" => cfg.max_steps = parse_usize(value, key)?,
            "g" => cfg.g = Some(value.to_string()),
            "f" => cfg.f = Some(value.to_string()),
            "psi" => cfg.psi = Some(value.to_string()),
            "output" => cfg.output = Some(PathBuf::from(value)),
            other => {
                return Err(CliError::Config(format!(
                    "line {}: unknown key `{other}`",
                    lineno + 1
                )));
            }
        }
    }
    if !saw_mode {
        return Err(CliError::Config("missing `mode`".into()));
    }
    for (name, v) in [
        ("alpha", cfg.alpha),
        ("beta", cfg.beta),
        ("rho", cfg.rho),
        ("T", cfg.horizon),
    ] {
        if v.is_nan() {
            return Err(CliError::Config(format!("missing `{name}`")));
        }
    }
    if cfg.x0.is_empty() && cfg.mode != Mode::Operator {
        return Err(CliError::Config("missing `x0`".into()));
    }
    if cfg.rhs.is_empty() {
        return Err(CliError::Config("missing `rhs`".into()));
    }
    Ok(cfg)
}

fn parse_expr(src: &str, what: &str) -> Result<Expr, CliError> {
    expr::parse(src).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn rhs_from_exprs(exprs: Vec<Expr>) -> Rhs {
    let dim = exprs.len();
    Rhs::system(dim, move |t, x, out| {
        let mut vars: Vec<(&str, f64)> = Vec::with_capacity(x.len() + 2);
        vars.push(("t", t));
        vars.push(("x", x[0]));
        let names = ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9"];
        for (i, v) in x.iter().enumerate().take(names.len()) {
            vars.push((names[i], *v));
        }
        for (i, e) in exprs.iter().enumerate() {
            out[i] = e.eval(&vars).map_err(|err| err.to_string())?;
        }
        Ok(())
    })
}

fn envelope_fn(e: Expr, var: &'static str) -> impl Fn(f64) -> Result<f64, String> {
    move |v: f64| e.eval(&[(var, v)]).map_err(|err| err.to_string())
}

fn build_problem(cfg: &RunConfig) -> Result<CauchyProblem, CliError> {
    let params = FhkParams::new(cfg.alpha, cfg.beta, cfg.rho).map_err(CliError::from)?;
    let mut exprs = Vec::new();
    for (i, src) in cfg.rhs.iter().enumerate() {
        exprs.push(parse_expr(src, &format!("rhs[{i}]"))?);
    }
    if exprs.len() != cfg.x0.len() {
        return Err(CliError::Config(format!(
            "{} rhs expressions for {} components",
            exprs.len(),
            cfg.x0.len()
        )));
    }
    CauchyProblem::new(
        params,
        cfg.x0.clone(),
        rhs_from_exprs(exprs),
        cfg.lambda,
        cfg.horizon,
    )
    .map_err(CliError::from)
}

/// 17 significant digits: enough to reproduce the binary value exactly.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_trajectory_csv(path: &Path, traj: &WeightedTrajectory) -> Result<(), CliError> {
    let grid = traj.grid();
    let dim = traj.dim();
    let mut out = String::new();
    if dim == 1 {
        out.push_str("t,s,x,y_weighted\n");
    } else {
        out.push_str("t,s");
        for d in 1..=dim {
            write!(out, ",x{d},y{d}").expect("string write");
        }
        out.push('\n');
    }
    for i in 0..grid.len() {
        write!(out, "{},{}", fmt17(grid.t_at(i)), fmt17(grid.s_at(i))).expect("string write");
        let raw = traj.raw_x(i);
        for d in 0..dim {
            match &raw {
                Some(x) => write!(out, ",{}", fmt17(x[d])).expect("string write"),
                None => out.push(','),
            }
            write!(out, ",{}", fmt17(traj.y()[i][d])).expect("string write");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("writing {path:?}: {e}")))
}

fn report_path(csv: &Path) -> PathBuf {
    let mut name = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    name.push_str(".report.txt");
    csv.with_file_name(name)
}

/// Everything a completed run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
    pub report: String,
}

/// Executes one run. The error, if any, carries the process exit status.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let Some(output) = cfg.output.clone() else {
        return Err(CliError::Config(
            "missing `output` (config key or --output flag)".into(),
        ));
    };
    let mut report = String::new();
    let mut push = |k: &str, v: String| {
        let _ = writeln!(report, "{k}: {v}");
    };
    push("mode", cfg.mode.name().into());
    push("alpha", fmt17(cfg.alpha));
    push("beta", fmt17(cfg.beta));
    push("rho", fmt17(cfg.rho));

    match cfg.mode {
        Mode::Operator => {
            let (grid, columns) = run_operator(cfg, &mut report)?;
            write_table_csv(&output, &grid, &columns)?;
        }
        Mode::Solve | Mode::Certify => {
            let traj = run_solve(cfg, &mut report)?;
            write_trajectory_csv(&output, &traj)?;
        }
        Mode::Continue => {
            let traj = run_continue(cfg, &mut report)?;
            write_trajectory_csv(&output, &traj)?;
        }
    }
    let rp = report_path(&output);
    std::fs::write(&rp, &report).map_err(|e| CliError::Io(format!("writing {rp:?}: {e}")))?;
    Ok(RunSummary {
        csv_path: output,
        report_path: rp,
        report,
    })
}

fn push_line(report: &mut String, k: &str, v: String) {
    let _ = writeln!(report, "{k}: {v}");
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        n: cfg.n,
        mesh: if cfg.grading > 1.0 {
            crate::space::Mesh::GradedStart { r: cfg.grading }
        } else {
            crate::space::Mesh::Uniform
        },
    }
}

fn local_radius_report(
    problem: &CauchyProblem,
    cfg: &RunConfig,
    report: &mut String,
) -> Option<f64> {
    let k = cfg
        .k
        .unwrap_or_else(|| crate::volterra::default_ball_radius(problem));
    let grid = SGrid::uniform(cfg.rho, cfg.horizon, 64.min(cfg.n)).ok()?;
    let l = estimate_l(problem, k, &grid).ok()?;
    push_line(report, "k", fmt17(k));
    push_line(report, "L_estimate", fmt17(l));
    match local_radius(k, l, cfg.lambda, problem.params(), cfg.horizon) {
        Ok(h) => {
            push_line(report, "h_local", fmt17(h));
            push_line(report, "h_local_formula", H_LOCAL_FORMULA.into());
            Some(h)
        }
        Err(e) => {
            push_line(report, "h_local", format!("unavailable ({e})"));
            None
        }
    }
}

fn run_solve(cfg: &RunConfig, report: &mut String) -> Result<WeightedTrajectory, CliError> {
    let problem = build_problem(cfg)?;
    push_line(report, "gamma", fmt17(problem.params().gamma()));
    push_line(report, "lambda", fmt17(cfg.lambda));
    push_line(
        report,
        "x0",
        cfg.x0.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(","),
    );
    push_line(report, "T", fmt17(cfg.horizon));
    push_line(report, "N", cfg.n.to_string());
    push_line(report, "grading", fmt17(cfg.grading));
    let _ = local_radius_report(&problem, cfg, report);
    let h_solve = cfg.h.unwrap_or(cfg.horizon).min(cfg.horizon);
    push_line(report, "solve_interval", format!("(0, {}]", fmt17(h_solve)));
    let opts = solve_options(cfg);
    let sr = picard_solve(&problem, &opts, h_solve)?;
    push_line(report, "iterations", sr.iterations.to_string());
    push_line(report, "residual", fmt17(sr.residual));
    push_line(report, "converged", sr.converged.to_string());
    push_line(report, "max_ball_deviation", fmt17(sr.max_deviation));
    if !sr.converged {
        return Err(CliError::NonConvergence(format!(
            "picard iteration stopped after {} iterations with residual {:.3e}",
            sr.iterations, sr.residual
        )));
    }
    push_line(
        report,
        "weighted_norm",
        fmt17(weighted_norm(&sr.traj).map_err(CliError::from)?),
    );

    if cfg.mode == Mode::Certify {
        let g_src = cfg.g.as_deref().ok_or_else(|| {
            CliError::Config("certify mode needs envelope `g`".into())
        })?;
        let f_src = cfg.f.as_deref().ok_or_else(|| {
            CliError::Config("certify mode needs envelope `f`".into())
        })?;
        let psi_src = cfg.psi.as_deref().ok_or_else(|| {
            CliError::Config("certify mode needs envelope `psi`".into())
        })?;
        let g = envelope_fn(parse_expr(g_src, "g")?, "t");
        let f = envelope_fn(parse_expr(f_src, "f")?, "x");
        let psi = envelope_fn(parse_expr(psi_src, "psi")?, "t");
        let cert = check_global_certificate(&problem, &g, &f, &psi, &sr.traj)?;
        push_line(report, "certificate_holds", cert.holds.to_string());
        push_line(report, "certificate_omega", fmt17(cert.omega));
        if let Some(v) = cert.first_violation {
            push_line(
                report,
                "certificate_violation",
                format!(
                    "node {} at t={} with |phi|={} > envelope {}",
                    v.node,
                    fmt17(v.t),
                    fmt17(v.lhs),
                    fmt17(v.rhs)
                ),
            );
        }
        let bmax = cert.bound_trace.iter().cloned().fold(0.0f64, f64::max);
        push_line(report, "certificate_bound_max", fmt17(bmax));
    }
    Ok(sr.traj)
}

fn run_continue(cfg: &RunConfig, report: &mut String) -> Result<WeightedTrajectory, CliError> {
    let problem = build_problem(cfg)?;
    push_line(report, "gamma", fmt17(problem.params().gamma()));
    push_line(report, "lambda", fmt17(cfg.lambda));
    push_line(report, "T", fmt17(cfg.horizon));
    let h_local = local_radius_report(&problem, cfg, report);
    let h_solve = cfg
        .h
        .or(h_local)
        .unwrap_or(cfg.horizon / 10.0)
        .min(cfg.horizon);
    push_line(report, "local_interval", format!("(0, {}]", fmt17(h_solve)));
    let opts = solve_options(cfg);
    let local = picard_solve(&problem, &opts, h_solve)?;
    push_line(report, "local_iterations", local.iterations.to_string());
    push_line(report, "local_residual", fmt17(local.residual));
    push_line(report, "local_converged", local.converged.to_string());
    if !local.converged {
        return Err(CliError::NonConvergence(format!(
            "local solve stopped after {} iterations with residual {:.3e}",
            local.iterations, local.residual
        )));
    }
    let copts = ContinuationOptions {
        k_step: cfg.k,
        max_steps: cfg.max_steps,
        blowup_threshold: cfg.blowup_threshold,
        target: match cfg.target_t {
            Some(t) => Target::Time(t),
            None => Target::Unbounded,
        },
        solve: SolveOptions {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            ..Default::default()
        },
        step_nodes: cfg.step_nodes,
    };
    let cr = continue_solution(&problem, &local, &copts)?;
    push_line(report, "h_step_formula", H_STEP_FORMULA.into());
    push_line(report, "steps", cr.steps.len().to_string());
    push_line(report, "final_t", fmt17(cr.traj.grid().t_end()));
    push_line(
        report,
        "classification",
        match cr.classification {
            Classification::ReachedTarget => "reached_target",
            Classification::SuspectedBlowup => "suspected_blowup",
            Classification::Stalled => "stalled",
        }
        .to_string(),
    );
    let max_phi = cr
        .phi_trace
        .iter()
        .filter(|v| v.is_finite())
        .cloned()
        .fold(0.0f64, f64::max);
    push_line(report, "max_phi", fmt17(max_phi));
    if cr.traj.grid().len() <= 4097 {
        let res = volterra_residual(&problem, &cr.traj).map_err(CliError::from)?;
        push_line(report, "stitched_residual", fmt17(res));
    } else {
        push_line(report, "stitched_residual", "skipped (grid too large)".into());
    }
    push_line(
        report,
        "weighted_norm",
        fmt17(weighted_norm(&cr.traj).map_err(CliError::from)?),
    );
    if cr.classification == Classification::Stalled {
        return Err(CliError::NonConvergence(format!(
            "continuation stalled at t = {}",
            cr.traj.grid().t_end()
        )));
    }
    Ok(cr.traj)
}

type OperatorTable = (SGrid, Vec<Vec<f64>>);

fn run_operator(cfg: &RunConfig, report: &mut String) -> Result<OperatorTable, CliError> {
    let params = FhkParams::new(cfg.alpha, cfg.beta, cfg.rho).map_err(CliError::from)?;
    let e = parse_expr(&cfg.rhs[0], "rhs")?;
    let grid = SGrid::graded(cfg.rho, cfg.horizon, cfg.n, cfg.grading).map_err(CliError::from)?;
    let mut f = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let t = grid.t_at(i);
        let v = e
            .eval(&[("t", t)])
            .map_err(|err| CliError::Domain(format!("rhs({t}) failed: {err}")))?;
        f.push(v);
    }
    let integral = katugampola_integral(cfg.alpha, &grid, &f).map_err(CliError::from)?;
    let derivative = katugampola_derivative(cfg.alpha, &grid, &f).map_err(CliError::from)?;
    let hk = hilfer_katugampola_derivative(&params, &grid, &f).map_err(CliError::from)?;
    push_line(report, "gamma", fmt17(params.gamma()));
    push_line(report, "N", cfg.n.to_string());
    push_line(report, "operator_columns", "f,integral,derivative,hk_derivative".into());
    Ok((grid, vec![f, integral, derivative, hk]))
}

/// Operator tables: derivative values at the origin are undefined by
/// contract and print as empty fields.
fn write_table_csv(path: &Path, grid: &SGrid, columns: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::from("t,s,f,integral,derivative,hk_derivative\n");
    for i in 0..grid.len() {
        write!(out, "{},{}", fmt17(grid.t_at(i)), fmt17(grid.s_at(i))).expect("string write");
        for col in columns {
            if col[i].is_finite() {
                write!(out, ",{}", fmt17(col[i])).expect("string write");
            } else {
                out.push(',');
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("writing {path:?}: {e}")))
}
