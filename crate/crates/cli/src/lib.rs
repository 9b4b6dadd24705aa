//! The `slq` command line: planning, estimation, plan sweeps, node diagnostics.
//!
//! Each command returns its standard output and any files it wants written,
//! so the binary stays a thin shell and the commands can be tested in-process.

pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use slq_core::bounds::{epsilon_from_relative_target, plan, BoundPlan, PlanRequest, Theorem};
use slq_core::diagnostics::{self, AppendixCase, Verdict, MEASURE_GRID_POINTS};
use slq_core::lanczos::{lanczos, LanczosOptions};
use slq_core::operators::{estimate_spectrum_bounds, OperatorSpec, SpectrumBounds, DEFAULT_SAFETY};
use slq_core::quadrature::{pushforward_rule, AffineMap};
use slq_core::slq::{
    estimate_with_plan, query_rng, rademacher_unit_vector, slq_estimate, PlannedRunOptions,
    SlqConfig,
};
use slq_core::tridiag_eig::{exact_logdet_capped, DEFAULT_ORACLE_CAP};
use slq_core::{EstimateResult, LinearOperator, Result, SlqError};

/// Environment variable naming the Matrix Market file for the sparse symmetry case.
pub const ND3K_ENV: &str = "SLQ_ND3K_PATH";

#[derive(Debug, Parser)]
#[command(
    name = "slq",
    version,
    about = "Log-determinant estimation by stochastic Lanczos quadrature"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a certified (m, N) plan from spectrum bounds
    Plan(PlanArgs),
    /// Run SLQ on a matrix with explicit or planned (m, N)
    Estimate(EstimateArgs),
    /// Sweep relative targets and tabulate MVM counts per plan
    Compare(CompareArgs),
    /// Check Gauss node symmetry on the four reference cases
    Symmetry(SymmetryArgs),
    /// Print the Gauss nodes and weights of one SLQ query
    Nodes(NodesArgs),
    /// Exact log-determinant by dense factorization or known spectrum
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub theorem: Theorem,
    #[arg(long)]
    pub lambda_min: f64,
    #[arg(long)]
    pub lambda_max: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub eta: f64,
    /// Put the extra factor n inside the logarithm of the optimized m bound
    #[arg(long)]
    pub include_n_factor: bool,
    #[arg(long)]
    pub json: bool,
    /// Accepted for uniformity; planning is deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// decay:n=..,r=..,scale=.. | householder:file=.. | mm:file=..
    #[arg(long)]
    pub matrix: String,
    #[arg(long, required_unless_present = "auto")]
    pub m: Option<usize>,
    #[arg(long = "N", value_name = "N", required_unless_present = "auto")]
    pub queries: Option<usize>,
    /// Choose (m, N) from a plan
    #[arg(long, conflicts_with_all = ["m", "queries"], requires_all = ["eps", "eta", "theorem"])]
    pub auto: bool,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub theorem: Option<Theorem>,
    /// Fail instead of rescaling when a relative plan needs lambda_max < 1
    #[arg(long)]
    pub no_rescale: bool,
    #[arg(long)]
    pub include_n_factor: bool,
    /// Lanczos steps for the spectrum probe when the spectrum is not known
    #[arg(long, default_value_t = 60)]
    pub probe_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the result row to this CSV file
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print the full result (per-query values included) as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub matrix: String,
    /// Comma-separated relative targets; defaults to 0.01, 0.02, ..., 0.20
    #[arg(long, value_delimiter = ',')]
    pub eps_star: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "corrected_absolute,relative,optimized"
    )]
    pub theorems: Vec<Theorem>,
    /// log det A for converting relative targets into absolute ones
    #[arg(long, allow_hyphen_values = true)]
    pub logdet: Option<f64>,
    #[arg(long, default_value_t = 60)]
    pub probe_steps: usize,
    /// Directory for compare.csv and compare.svg
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    /// 1, 2, 3, 4 or all
    #[arg(long, default_value = "all")]
    pub case: String,
    #[arg(long, default_value_t = 9)]
    pub m: usize,
    /// Matrix Market file for case 4; falls back to $SLQ_ND3K_PATH
    #[arg(long)]
    pub nd3k: Option<PathBuf>,
    #[arg(long, default_value = "symmetry")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct NodesArgs {
    #[arg(long)]
    pub matrix: String,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Which query's probe vector to use
    #[arg(long, default_value_t = 0)]
    pub query: u64,
    /// Map nodes to [-1, 1] through the spectrum interval
    #[arg(long)]
    pub reference: bool,
    #[arg(long, default_value_t = 60)]
    pub probe_steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub matrix: String,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    /// Diagnostics for stderr: warnings, skips, heuristic notices.
    pub notices: Vec<String>,
    pub files: Vec<(PathBuf, String)>,
}

pub fn run(cli: Cli) -> Result<CommandOutput> {
    match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Symmetry(a) => cmd_symmetry(&a),
        Command::Nodes(a) => cmd_nodes(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

/// Writes the requested files, creating parent directories.
pub fn write_files(out: &CommandOutput) -> Result<()> {
    for (path, contents) in &out.files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, contents)?;
    }
    Ok(())
}

fn load(spec: &str) -> Result<LinearOperator> {
    OperatorSpec::parse(spec)?.build()
}

/// Exact bounds when the spectrum is stored, otherwise a Lanczos probe.
fn operator_bounds(
    a: &LinearOperator,
    probe_steps: usize,
    notices: &mut Vec<String>,
) -> Result<SpectrumBounds> {
    if let Some(s) = a.known_spectrum() {
        return SpectrumBounds::from_spectrum(s);
    }
    let b = estimate_spectrum_bounds(a, probe_steps, DEFAULT_SAFETY)?;
    notices.push(format!(
        "spectrum bounds [{:e}, {:e}] are heuristic ({probe_steps}-step Lanczos probe, safety {DEFAULT_SAFETY})",
        b.lambda_min, b.lambda_max
    ));
    Ok(b)
}

fn exact_if_cheap(a: &LinearOperator) -> Option<f64> {
    exact_logdet_capped(a, DEFAULT_ORACLE_CAP).ok()
}

pub fn format_plan(p: &BoundPlan) -> String {
    let mut s = String::new();
    let mut row = |k: &str, v: String| {
        let _ = writeln!(s, "{k:<22} {v}");
    };
    row("theorem", p.theorem.to_string());
    row("n", p.n.to_string());
    row("lambda_min", p.lambda_min.to_string());
    row("lambda_max", p.lambda_max.to_string());
    row("kappa", p.kappa.to_string());
    row("epsilon", p.epsilon.to_string());
    row("eta", p.eta.to_string());
    row("rho", p.rho.to_string());
    row("m_rho", p.m_rho.to_string());
    row("k_rho", p.k_rho.to_string());
    if let Some(a) = p.alpha_star {
        row("alpha_star", a.to_string());
    }
    if let Some(c) = p.c {
        row("C", c.to_string());
    }
    row("m_bound", p.m_bound.to_string());
    row("N_bound", p.queries_bound.to_string());
    row("m", p.m.to_string());
    row("N", p.queries.to_string());
    row("mvm_total", p.mvm_total.to_string());
    row("symmetric_nodes_only", p.symmetric_nodes_only.to_string());
    s
}

pub fn cmd_plan(args: &PlanArgs) -> Result<CommandOutput> {
    let bounds = SpectrumBounds::new(args.lambda_min, args.lambda_max, args.n)?;
    let mut req = PlanRequest::new(bounds, args.eps, args.eta, args.theorem);
    req.include_n_factor = args.include_n_factor;
    let p = plan(&req)?;
    let stdout = if args.json {
        serde_json::to_string_pretty(&p).map_err(|e| SlqError::Io(e.to_string()))? + "\n"
    } else {
        format_plan(&p)
    };
    Ok(CommandOutput {
        stdout,
        notices: p.warnings.clone(),
        files: Vec::new(),
    })
}

pub const ESTIMATE_CSV_HEADER: &str = "theorem,n,m,N,mvm,estimate,exact,rel_err,seed";

fn estimate_csv(theorem: &str, r: &EstimateResult, exact: Option<f64>) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let rel = exact
        .map(|e| format!("{:e}", ((r.estimate - e) / e).abs()))
        .unwrap_or_default();
    format!(
        "{ESTIMATE_CSV_HEADER}\n{theorem},{},{},{},{},{},{},{},{}\n",
        r.n,
        r.m,
        r.queries,
        r.mvm_total,
        r.estimate,
        opt(exact),
        rel,
        r.seed
    )
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<CommandOutput> {
    let a = load(&args.matrix)?;
    let mut notices = Vec::new();
    let (result, theorem) = if args.auto {
        let (Some(eps), Some(eta), Some(theorem)) = (args.eps, args.eta, args.theorem) else {
            return Err(SlqError::InvalidArgument(
                "--auto needs --eps, --eta and --theorem".into(),
            ));
        };
        let bounds = operator_bounds(&a, args.probe_steps, &mut notices)?;
        let opts = PlannedRunOptions {
            seed: args.seed,
            rescale: !args.no_rescale,
            include_n_factor: args.include_n_factor,
            ..PlannedRunOptions::default()
        };
        (
            estimate_with_plan(&a, &bounds, eps, eta, theorem, &opts)?,
            theorem.to_string(),
        )
    } else {
        let (Some(m), Some(queries)) = (args.m, args.queries) else {
            return Err(SlqError::InvalidArgument(
                "give --m and --N, or --auto".into(),
            ));
        };
        (
            slq_estimate(&a, &SlqConfig::new(m, queries, args.seed))?,
            "manual".to_string(),
        )
    };
    if let Some(p) = &result.plan {
        notices.extend(p.warnings.iter().cloned());
    }
    notices.extend(result.notes.iter().cloned());
    let exact = exact_if_cheap(&a);

    let mut stdout = String::new();
    if args.json {
        stdout =
            serde_json::to_string_pretty(&result).map_err(|e| SlqError::Io(e.to_string()))? + "\n";
    } else {
        let mut row = |k: &str, v: String| {
            let _ = writeln!(stdout, "{k:<18} {v}");
        };
        row("matrix", args.matrix.clone());
        row("theorem", theorem.clone());
        row("n", result.n.to_string());
        row("m", result.m.to_string());
        row("N", result.queries.to_string());
        row("mvm_total", result.mvm_total.to_string());
        row("estimate", result.estimate.to_string());
        if result.scale_correction != 0.0 {
            row("scale_correction", result.scale_correction.to_string());
        }
        if let Some(e) = exact {
            row("exact", e.to_string());
            row(
                "rel_err",
                format!("{:e}", ((result.estimate - e) / e).abs()),
            );
        }
        row("seed", result.seed.to_string());
    }
    let files = args
        .csv
        .iter()
        .map(|p| (p.clone(), estimate_csv(&theorem, &result, exact)))
        .collect();
    Ok(CommandOutput {
        stdout,
        notices,
        files,
    })
}

/// `0.01, 0.02, ..., 0.20`
pub fn default_eps_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub eps_star: f64,
    pub theorem: Theorem,
    pub plan: BoundPlan,
}

/// Plans every `(ε*, theorem)` pair of the sweep. Relative rules use `ε*`
/// directly; absolute rules get `ε = ε*|log det A|/n`, which needs the exact value.
pub fn compare_rows(
    a: &LinearOperator,
    bounds: &SpectrumBounds,
    grid: &[f64],
    eta: f64,
    theorems: &[Theorem],
    logdet: Option<f64>,
    notices: &mut Vec<String>,
) -> Result<Vec<CompareRow>> {
    if grid.is_empty() || theorems.is_empty() {
        return Err(SlqError::InvalidArgument(
            "the sweep needs at least one target and one theorem".into(),
        ));
    }
    if let Some(e) = grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(SlqError::InvalidArgument(format!(
            "eps_star values must lie in (0,1), got {e}"
        )));
    }
    let rel_bounds = if bounds.lambda_max >= 1.0 && theorems.iter().any(Theorem::is_relative) {
        let s = 0.99 / bounds.lambda_max;
        notices.push(format!(
            "relative plans use the operator rescaled by {s:e} (lambda_max = 0.99)"
        ));
        bounds.scaled(s)
    } else {
        *bounds
    };
    let mut active = Vec::new();
    for &t in theorems {
        if !t.is_relative() && logdet.is_none() {
            notices.push(format!(
                "{t}: skipped; converting eps_star needs log det A (pass --logdet or use a matrix the oracle can handle)"
            ));
        } else {
            active.push(t);
        }
    }
    if logdet.is_some() && active.iter().any(|t| !t.is_relative()) {
        notices.push("absolute plans use eps = eps_star*|logdet|/n, a benchmark-only conversion that assumes log det A is known".into());
    }
    let mut rows = Vec::new();
    let mut out_of_range = Vec::new();
    for &eps_star in grid {
        for &t in &active {
            let (b, eps) = if t.is_relative() {
                (rel_bounds, eps_star)
            } else {
                let eps =
                    epsilon_from_relative_target(eps_star, logdet.unwrap_or_default(), a.dim())?;
                if eps >= 1.0 {
                    out_of_range.push(format!("{t}@{eps_star}"));
                    continue;
                }
                (*bounds, eps)
            };
            let p = plan(&PlanRequest::new(b, eps, eta, t))?;
            rows.push(CompareRow {
                eps_star,
                theorem: t,
                plan: p,
            });
        }
    }
    if !out_of_range.is_empty() {
        notices.push(format!(
            "skipped points where the converted absolute eps is not below 1: {}",
            out_of_range.join(" ")
        ));
    }
    Ok(rows)
}

pub const COMPARE_CSV_HEADER: &str = "eps_star,theorem,m,N,mvm";

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = format!("{COMPARE_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.eps_star, r.theorem, r.plan.m, r.plan.queries, r.plan.mvm_total
        );
    }
    s
}

pub fn compare_svg(rows: &[CompareRow], title: &str) -> String {
    let mut series: Vec<svg::Series> = Vec::new();
    for r in rows {
        let label = r.theorem.to_string();
        let point = (r.eps_star, r.plan.mvm_total as f64);
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(svg::Series {
                label,
                points: vec![point],
            }),
        }
    }
    svg::LineChart {
        title: title.to_string(),
        x_label: "relative error target eps*".into(),
        y_label: "matrix-vector products".into(),
        log_y: true,
        series,
    }
    .render()
}

pub fn cmd_compare(args: &CompareArgs) -> Result<CommandOutput> {
    let a = load(&args.matrix)?;
    let mut notices = Vec::new();
    let bounds = operator_bounds(&a, args.probe_steps, &mut notices)?;
    let logdet = match args.logdet {
        Some(v) => Some(v),
        None => exact_if_cheap(&a),
    };
    let grid = if args.eps_star.is_empty() {
        default_eps_grid()
    } else {
        args.eps_star.clone()
    };
    let rows = compare_rows(
        &a,
        &bounds,
        &grid,
        args.eta,
        &args.theorems,
        logdet,
        &mut notices,
    )?;
    let csv = compare_csv(&rows);
    let mut files = Vec::new();
    if let Some(dir) = &args.out {
        files.push((dir.join("compare.csv"), csv.clone()));
        files.push((
            dir.join("compare.svg"),
            compare_svg(&rows, &format!("MVMs vs eps* for {}", args.matrix)),
        ));
    }
    Ok(CommandOutput {
        stdout: csv,
        notices,
        files,
    })
}

fn parse_cases(s: &str) -> Result<Vec<AppendixCase>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(AppendixCase::ALL.to_vec());
    }
    let k: u8 = s.parse().map_err(|_| {
        SlqError::InvalidArgument(format!("--case must be 1, 2, 3, 4 or all, got '{s}'"))
    })?;
    Ok(vec![AppendixCase::from_number(k)?])
}

/// `--nd3k`, then `$SLQ_ND3K_PATH`.
pub fn nd3k_path(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(ND3K_ENV).map(PathBuf::from))
}

pub fn cmd_symmetry(args: &SymmetryArgs) -> Result<CommandOutput> {
    let cases = parse_cases(&args.case)?;
    let path = nd3k_path(args.nd3k.as_deref());
    let run = diagnostics::run_appendix_cases(&cases, args.m, path.as_deref())?;
    let mut out = CommandOutput {
        notices: run.skipped.clone(),
        ..CommandOutput::default()
    };
    for r in &run.results {
        let k = r.case.number();
        let _ = writeln!(out.stdout, "case {k}: {}", r.report.summary());
        let label = k.to_string();
        out.files.push((
            args.out.join(format!("case{k}_nodes.csv")),
            diagnostics::nodes_csv(&label, &r.report.rule),
        ));
        match &r.report.measure {
            Some(mu) => out.files.push((
                args.out.join(format!("case{k}_measure.csv")),
                diagnostics::measure_csv(&label, mu, MEASURE_GRID_POINTS),
            )),
            None => out.notices.push(format!(
                "case {k}: n exceeds the dense oracle cap; spectral measure and sav check skipped"
            )),
        }
        if r.report.verdict == Verdict::Asymmetric
            && r.report.sav_holds == Some(true)
            && r.report.spectrum_symmetric == Some(true)
        {
            out.notices.push(format!(
                "case {k}: asymmetric nodes despite symmetric hypotheses"
            ));
        }
    }
    Ok(out)
}

pub const NODES_CSV_HEADER: &str = "k,theta,tau";

pub fn cmd_nodes(args: &NodesArgs) -> Result<CommandOutput> {
    let a = load(&args.matrix)?;
    let n = a.dim();
    let mut notices = Vec::new();
    let m = args.m.min(n.saturating_sub(1));
    if m < args.m {
        notices.push(format!("m = {} capped at n - 1 = {m}", args.m));
    }
    if m == 0 {
        return Err(SlqError::InvalidArgument(
            "m must be at least 1 (and n at least 2)".into(),
        ));
    }
    let v = rademacher_unit_vector(n, &mut query_rng(args.seed, args.query))?;
    let mut rule = lanczos(&a, &v, m, &LanczosOptions::default())?.rule;
    if args.reference {
        let b = operator_bounds(&a, args.probe_steps, &mut notices)?;
        rule = pushforward_rule(
            &rule,
            &AffineMap::reference_to_physical(b.lambda_min, b.lambda_max)?,
        );
    }
    let mut csv = format!("{NODES_CSV_HEADER}\n");
    for (k, (t, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let _ = writeln!(csv, "{},{t},{w}", k + 1);
    }
    let files = args.out.iter().map(|p| (p.clone(), csv.clone())).collect();
    Ok(CommandOutput {
        stdout: csv,
        notices,
        files,
    })
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<CommandOutput> {
    let a = load(&args.matrix)?;
    let v = exact_logdet_capped(&a, args.cap)?;
    Ok(CommandOutput {
        stdout: format!("logdet {v}\n"),
        ..CommandOutput::default()
    })
}
