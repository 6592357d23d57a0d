//! Batch front end: a TOML run configuration plus a subcommand, producing
//! CSV solutions, trace files, certificates, and a `summary.txt` of
//! `key=value` lines.
//!
//! Every random choice flows through one ChaCha8 generator seeded from the
//! config (or `--seed`), and the seed is echoed into the summary, so a rerun
//! with the same config and seed reproduces every output byte for byte.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::cones::{
    certify_invariance, invariance_ok, negative_envelope, positive_envelope, separation_radius,
    verify_strict, Certificate, ConeSpec,
};
use crate::eigen::{self, EigenConfig};
use crate::flows::{monotone_iterate, MonotoneConfig, MonotoneDirection};
use crate::functional::{energy, sweep_integral_inequalities, sweep_vector_inequalities};
use crate::grid::{build_mesh, fmt_float, interpolate, DomainSpec, FeFunction, Mesh};
use crate::minmax::{four_solutions, min_pairwise_distance, FourSolutionsConfig};
use crate::problem::{check_hypotheses, HypothesisParams, NonlinearitySpec};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "conewalk",
    version,
    about = "multi-solution solver for the quasilinear problem -div(|grad u|^{p-2} grad u) = f(x,u)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First two Dirichlet eigenvalues of the p-Laplacian on the configured mesh
    Eigen(CommonArgs),
    /// Minimal solution between an ordered barrier pair, by monotone fixed-point iteration
    SolveMin(CommonArgs),
    /// Trivial, negative, positive, and sign-changing solutions in one run
    FourSolutions(CommonArgs),
    /// Build the barrier cones and certify their fixed-point-map invariance
    CheckCones(CommonArgs),
    /// Random sweeps of the vector and integral monotonicity inequalities
    VerifyInequalities(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eigen(_) => "eigen",
            Command::SolveMin(_) => "solve-min",
            Command::FourSolutions(_) => "four-solutions",
            Command::CheckCones(_) => "check-cones",
            Command::VerifyInequalities(_) => "verify-inequalities",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Eigen(a)
            | Command::SolveMin(a)
            | Command::FourSolutions(a)
            | Command::CheckCones(a)
            | Command::VerifyInequalities(a) => a,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Write per-iteration trace CSVs
    #[arg(long)]
    pub trace: bool,
    /// Output directory (overrides the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed (overrides the config)
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parsed run configuration. Unknown fields are rejected so typos surface as
/// config errors naming the offending key.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional declaration of the intended subcommand; checked when present.
    pub command: Option<String>,
    pub domain: DomainConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub barriers: Option<BarriersConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trace: bool,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// "interval" or "unit-square"
    pub kind: String,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    /// Mesh resolution: subintervals in 1d, subdivisions per side in 2d.
    pub n: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    /// "linear", "saturating", "constant", "odd-power", or "affine-forcing"
    pub catalog: String,
    pub lambda: Option<f64>,
    /// Resolve lambda as this multiple of the second eigenvalue on the run mesh.
    pub lambda_factor_of_lambda2: Option<f64>,
    pub delta: Option<f64>,
    pub value: Option<f64>,
    pub coeff: Option<f64>,
    pub exponent: Option<f64>,
    /// Constant forcing level for the affine-forcing entry.
    pub forcing: Option<f64>,
}

/// Optional solver overrides; anything omitted keeps its default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol: Option<f64>,
    pub eigen_tol: Option<f64>,
    pub path_nodes: Option<usize>,
    pub outer_iter: Option<usize>,
    pub step_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub t_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarriersConfig {
    /// "zero" or "negative-envelope"
    pub lower: String,
    /// "parabola" or "positive-envelope"
    pub upper: Option<String>,
    /// "ascending" (start at the lower barrier) or "descending"
    #[serde(default = "ascending")]
    pub direction: String,
}

fn ascending() -> String {
    "ascending".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_vector_pairs")]
    pub vector_pairs: usize,
    #[serde(default = "default_integral_pairs")]
    pub integral_pairs: usize,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
}

fn default_vector_pairs() -> usize {
    100_000
}

fn default_integral_pairs() -> usize {
    1_000
}

fn default_exponents() -> Vec<f64> {
    vec![1.2, 1.5, 2.0, 3.0, 4.0]
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            vector_pairs: default_vector_pairs(),
            integral_pairs: default_integral_pairs(),
            exponents: default_exponents(),
        }
    }
}

/// Ordered `key=value` lines; insertion order is the file order, so identical
/// runs serialize identically.
#[derive(Debug, Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push((key.to_string(), value.into()));
    }

    pub fn push_f(&mut self, key: &str, v: f64) {
        self.push(key, fmt_float(v));
    }

    pub fn push_n(&mut self, key: &str, v: usize) {
        self.push(key, v.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// Everything one run needs, resolved from the config file and CLI overrides.
struct Run {
    cfg: RunConfig,
    mesh: Arc<Mesh>,
    rng: ChaCha8Rng,
    out: PathBuf,
    trace: bool,
    summary: Summary,
}

impl Run {
    fn prepare(command: &str, args: &CommonArgs) -> Result<Run> {
        let text = std::fs::read_to_string(&args.config).map_err(|e| {
            Error::Config(format!("cannot read `{}`: {e}", args.config.display()))
        })?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.message().to_string()))?;
        if let Some(declared) = &cfg.command {
            if declared != command {
                return Err(Error::Config(format!(
                    "field `command`: config declares `{declared}` but the `{command}` subcommand was invoked"
                )));
            }
        }
        let domain = parse_domain(&cfg.domain)?;
        if cfg.domain.n < 2 {
            return Err(Error::Config(
                "field `domain.n`: need at least 2 subdivisions".into(),
            ));
        }
        let mesh = build_mesh(domain, cfg.domain.n)?;
        let seed = args.seed.unwrap_or(cfg.seed);
        let out = args.out.clone().unwrap_or_else(|| cfg.out.clone());
        let trace = args.trace || cfg.trace;
        let mut summary = Summary::default();
        summary.push("command", command);
        summary.push_n("seed", seed as usize);
        summary.push("domain", cfg.domain.kind.clone());
        if matches!(domain, DomainSpec::Interval { .. }) {
            summary.push_f("domain_a", cfg.domain.a);
            summary.push_f("domain_b", cfg.domain.b);
        }
        summary.push_n("n", cfg.domain.n);
        summary.push_f("p", cfg.problem.p);
        summary.push("catalog", cfg.problem.catalog.clone());
        Ok(Run {
            cfg,
            mesh,
            rng: ChaCha8Rng::seed_from_u64(seed),
            out,
            trace,
            summary,
        })
    }

    fn eigen_config(&self) -> EigenConfig {
        let mut cfg = EigenConfig::default();
        if let Some(t) = self.cfg.solver.eigen_tol {
            cfg.tol = t;
        }
        if let Some(n) = self.cfg.solver.path_nodes {
            cfg.path_nodes = n;
        }
        cfg
    }

    fn monotone_config(&self) -> MonotoneConfig {
        let mut cfg = MonotoneConfig::default();
        if let Some(t) = self.cfg.solver.step_tol {
            cfg.step_tol = t;
        }
        if let Some(m) = self.cfg.solver.max_iter {
            cfg.max_iter = m;
        }
        if let Some(t) = self.cfg.solver.newton_tol {
            cfg.newton.tol = t;
        }
        cfg
    }

    fn four_solutions_config(&self) -> FourSolutionsConfig {
        let mut cfg = FourSolutionsConfig::default();
        let s = &self.cfg.solver;
        if let Some(t) = s.newton_tol {
            cfg.newton.tol = t;
            cfg.monotone.newton.tol = t;
            cfg.minmax.newton.tol = t;
        }
        if let Some(t) = s.eigen_tol {
            cfg.eigen.tol = t;
        }
        if let Some(n) = s.path_nodes {
            cfg.minmax.path_nodes = n;
        }
        if let Some(n) = s.outer_iter {
            cfg.minmax.outer_iter = n;
        }
        if let Some(t) = s.t_scale {
            cfg.t_scale = t;
        }
        cfg
    }

    /// Builds the nonlinearity, resolving `lambda_factor_of_lambda2` against
    /// the run mesh. Consumes RNG draws only when the factor form is used.
    fn build_spec(&mut self) -> Result<NonlinearitySpec> {
        let pc = &self.cfg.problem;
        let lambda = match (pc.lambda, pc.lambda_factor_of_lambda2) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "fields `problem.lambda` and `problem.lambda_factor_of_lambda2` are mutually exclusive"
                        .into(),
                ))
            }
            (Some(l), None) => Some(l),
            (None, Some(factor)) => {
                let ecfg = self.eigen_config();
                let first = eigen::lambda1(&self.mesh, pc.p, &ecfg)?;
                let second = eigen::lambda2(&self.mesh, pc.p, &first, &ecfg, &mut self.rng)?;
                Some(factor * second.lambda)
            }
            (None, None) => None,
        };
        let p = pc.p;
        let need = |field: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                Error::Config(format!(
                    "field `problem.{field}` is required for catalog `{}`",
                    pc.catalog
                ))
            })
        };
        let spec = match pc.catalog.as_str() {
            "linear" => NonlinearitySpec::linear(p, need("lambda", lambda)?)?,
            "saturating" => NonlinearitySpec::saturating(
                p,
                need("lambda", lambda)?,
                pc.delta.unwrap_or(1.0),
            )?,
            "constant" => NonlinearitySpec::constant(p, need("value", pc.value)?)?,
            "odd-power" => NonlinearitySpec::odd_power(
                p,
                need("coeff", pc.coeff)?,
                need("exponent", pc.exponent)?,
            )?,
            "affine-forcing" => NonlinearitySpec::affine_forcing(
                p,
                need("lambda", lambda)?,
                FeFunction::constant(&self.mesh, need("forcing", pc.forcing)?),
            )?,
            other => {
                return Err(Error::Config(format!(
                    "field `problem.catalog`: unknown entry `{other}`"
                )))
            }
        };
        if let Some(l) = lambda {
            self.summary.push_f("lambda", l);
        }
        if let Some(d) = pc.delta {
            self.summary.push_f("delta", d);
        }
        if let Some(v) = pc.value {
            self.summary.push_f("value", v);
        }
        Ok(spec)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        std::fs::write(self.out.join(name), contents)?;
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        self.write("summary.txt", &self.summary.render())
    }
}

fn parse_domain(d: &DomainConfig) -> Result<DomainSpec> {
    match d.kind.as_str() {
        "interval" => {
            if d.b <= d.a {
                return Err(Error::Config(
                    "field `domain.b` must exceed `domain.a`".into(),
                ));
            }
            Ok(DomainSpec::Interval { a: d.a, b: d.b })
        }
        "unit-square" => Ok(DomainSpec::UnitSquare),
        other => Err(Error::Config(format!(
            "field `domain.kind`: expected `interval` or `unit-square`, got `{other}`"
        ))),
    }
}

/// Parse `argv` and execute; returns the process exit code. Config and usage
/// problems exit 2, runtime failures 1.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Dispatch a parsed subcommand; artifacts land in the resolved output
/// directory and `summary.txt` is written last.
pub fn execute(command: &Command) -> Result<()> {
    let mut run = Run::prepare(command.name(), command.args())?;
    match command {
        Command::Eigen(_) => cmd_eigen(&mut run),
        Command::SolveMin(_) => cmd_solve_min(&mut run),
        Command::FourSolutions(_) => cmd_four_solutions(&mut run),
        Command::CheckCones(_) => cmd_check_cones(&mut run),
        Command::VerifyInequalities(_) => cmd_verify_inequalities(&mut run),
    }?;
    run.finish()
}

fn cmd_eigen(run: &mut Run) -> Result<()> {
    let p = run.cfg.problem.p;
    let ecfg = run.eigen_config();
    let first = eigen::lambda1(&run.mesh, p, &ecfg).map_err(|e| e.in_stage("eigen"))?;
    let second = eigen::lambda2(&run.mesh, p, &first, &ecfg, &mut run.rng)
        .map_err(|e| e.in_stage("eigen"))?;
    run.summary.push_f("lambda1", first.lambda);
    run.summary.push_n("lambda1_iterations", first.iterations);
    run.summary.push_f("lambda2", second.lambda);
    run.summary.push_n("lambda2_iterations", second.iterations);
    run.summary.push_f("hopf_margin", eigen::hopf_margin(&first.phi));
    if run.mesh.dim() == 1 {
        run.summary.push_f("pi_p", eigen::pi_p(p));
    }
    run.write("solution_phi1.csv", &first.phi.csv_string())?;
    if run.trace {
        let mut csv = String::from("iter,level\n");
        for (k, level) in second.history.iter().enumerate() {
            let _ = writeln!(csv, "{k},{}", fmt_float(*level));
        }
        run.write("trace_lambda2.csv", &csv)?;
    }
    Ok(())
}

fn build_barrier(run: &mut Run, which: &str, name: &str, spec: &NonlinearitySpec) -> Result<FeFunction> {
    match name {
        "zero" => Ok(FeFunction::zero(&run.mesh)),
        "parabola" => match run.mesh.domain {
            DomainSpec::Interval { a, b } => {
                Ok(interpolate(&run.mesh, |x| (x[0] - a) * (b - x[0])))
            }
            _ => Err(Error::Config(format!(
                "field `barriers.{which}`: `parabola` needs an interval domain"
            ))),
        },
        "negative-envelope" | "positive-envelope" => {
            let ecfg = run.eigen_config();
            let first =
                eigen::lambda1(&run.mesh, spec.p, &ecfg).map_err(|e| e.in_stage("envelopes"))?;
            let asym = spec.asymptotic.ok_or_else(|| {
                Error::Config(format!(
                    "field `barriers.{which}`: envelopes need a nonlinearity with an asymptotic slope bound"
                ))
            })?;
            let tight = spec
                .clone()
                .with_asymptotic_mu(asym.mu.min(first.lambda / 2.0))
                .map_err(|e| e.in_stage("envelopes"))?;
            let env = if name == "negative-envelope" {
                negative_envelope(&run.mesh, &tight, first.lambda)
            } else {
                positive_envelope(&run.mesh, &tight, first.lambda)
            }
            .map_err(|e| e.in_stage("envelopes"))?;
            Ok(env.w)
        }
        other => Err(Error::Config(format!(
            "field `barriers.{which}`: unknown barrier `{other}`"
        ))),
    }
}

fn cmd_solve_min(run: &mut Run) -> Result<()> {
    let spec = run.build_spec()?;
    let barriers = run.cfg.barriers.take().ok_or_else(|| {
        Error::Config("section `barriers` is required for solve-min".into())
    })?;
    let lower = build_barrier(run, "lower", &barriers.lower, &spec)?;
    let upper = match &barriers.upper {
        Some(name) => Some(build_barrier(run, "upper", name, &spec)?),
        None => None,
    };
    let (start, dir) = match barriers.direction.as_str() {
        "ascending" => (lower.clone(), MonotoneDirection::Ascending),
        "descending" => (
            upper
                .clone()
                .ok_or_else(|| {
                    Error::Config(
                        "field `barriers.upper` is required for a descending run".into(),
                    )
                })?,
            MonotoneDirection::Descending,
        ),
        other => {
            return Err(Error::Config(format!(
                "field `barriers.direction`: expected `ascending` or `descending`, got `{other}`"
            )))
        }
    };
    let mcfg = run.monotone_config();
    let result =
        monotone_iterate(&start, &spec, dir, &mcfg).map_err(|e| e.in_stage("solve-min"))?;

    // the iterate must stay inside the declared barrier interval
    let scale = 1.0 + result.u.max_abs();
    let slack = 1e-10 * scale;
    let above = result
        .u
        .values
        .iter()
        .zip(&lower.values)
        .all(|(u, l)| u + slack >= *l);
    let below = upper.as_ref().map(|b| {
        result
            .u
            .values
            .iter()
            .zip(&b.values)
            .all(|(u, v)| *u <= v + slack)
    });
    if !above || below == Some(false) {
        return Err(Error::Precondition(
            "the limit left the barrier interval".into(),
        )
        .in_stage("solve-min"));
    }

    run.summary.push("lower", barriers.lower.clone());
    if let Some(name) = &barriers.upper {
        run.summary.push("upper", name.clone());
    }
    run.summary.push("direction", barriers.direction.clone());
    run.summary.push_n("iterations", result.iterations);
    run.summary.push_f("residual", result.residual);
    run.summary.push_f("energy", energy(&result.u, &spec));
    run.summary.push_f("min_value", result.u.min_value());
    run.summary.push_f("max_value", result.u.max_value());
    run.summary
        .push("ordered", if below != Some(false) { "true" } else { "false" });
    run.write("solution_min.csv", &result.u.csv_string())?;
    if run.trace {
        let mut csv = String::from("iter,step_norm,energy\n");
        for (k, (s, e)) in result
            .step_norms
            .iter()
            .zip(&result.energies)
            .enumerate()
        {
            let _ = writeln!(csv, "{k},{},{}", fmt_float(*s), fmt_float(*e));
        }
        run.write("trace_monotone.csv", &csv)?;
    }
    Ok(())
}

fn aggregate_status(certs: &[Certificate]) -> &'static str {
    if invariance_ok(certs) {
        "satisfied"
    } else if certs
        .iter()
        .any(|c| c.status == crate::cones::CertStatus::Violated)
    {
        "violated"
    } else {
        "inconclusive"
    }
}

fn certificate_text(label: &str, certs: &[Certificate]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "cone={label}");
    let _ = writeln!(s, "status={}", aggregate_status(certs));
    for c in certs {
        let _ = writeln!(s);
        let _ = writeln!(s, "[{}]", c.name);
        let _ = writeln!(s, "status={}", c.status);
        let levels: Vec<String> = c.levels.iter().map(|&v| fmt_float(v)).collect();
        let _ = writeln!(s, "levels={}", levels.join(","));
        let _ = writeln!(s, "detail={}", c.detail);
    }
    s
}

fn cmd_four_solutions(run: &mut Run) -> Result<()> {
    let spec = run.build_spec()?;
    let cfg = run.four_solutions_config();
    let report = four_solutions(&run.mesh, &spec, &cfg, &mut run.rng)?;

    run.summary.push_f("lambda1", report.lambda1);
    run.summary.push_f("lambda2", report.lambda2);
    run.summary.push_f("hopf_margin", report.hopf_margin);
    run.summary.push_f("p_threshold", report.p_threshold);
    run.summary.push_f("mu_eff", report.mu_eff);
    run.summary.push_f("t_bar", report.t_bar);
    run.summary.push_f("ell", report.ell);
    run.summary.push_f("eps_bar", report.eps_bar);
    run.summary.push_f("saddle_level", report.saddle_level);
    run.summary.push_n("outer_iterations", report.outer_iterations);
    for entry in &report.solutions {
        let label = entry.label;
        run.summary.push_f(&format!("{label}_energy"), entry.energy);
        run.summary
            .push_f(&format!("{label}_residual"), entry.residual);
        run.summary
            .push(&format!("{label}_sign"), entry.sign.to_string());
        run.write(
            &format!("solution_{label}.csv"),
            &entry.u.csv_string(),
        )?;
    }
    run.summary
        .push_f("min_pairwise_distance", min_pairwise_distance(&report));
    for (label, certs) in &report.certificates {
        run.summary
            .push(&format!("cert_{label}"), aggregate_status(certs));
        run.write(
            &format!("certificate_{label}.txt"),
            &certificate_text(label, certs),
        )?;
    }
    run.summary.push(
        "hypotheses",
        if report.hypotheses.all_ok() { "ok" } else { "violated" },
    );
    for (k, note) in report.notes.iter().enumerate() {
        run.summary.push(&format!("note_{k}"), note.clone());
    }
    if run.trace {
        let mut csv = String::from("iter,level\n");
        for (k, level) in report.level_history.iter().enumerate() {
            let _ = writeln!(csv, "{k},{}", fmt_float(*level));
        }
        run.write("trace_levels.csv", &csv)?;
    }
    Ok(())
}

fn cmd_check_cones(run: &mut Run) -> Result<()> {
    let spec = run.build_spec()?;
    let p = spec.p;
    let mesh = Arc::clone(&run.mesh);

    let hypotheses = check_hypotheses(&spec, &mesh.domain, &HypothesisParams::default());
    run.summary.push(
        "hypotheses",
        if hypotheses.all_ok() { "ok" } else { "violated" },
    );

    let ecfg = run.eigen_config();
    let first = eigen::lambda1(&mesh, p, &ecfg).map_err(|e| e.in_stage("eigen"))?;
    let second = eigen::lambda2(&mesh, p, &first, &ecfg, &mut run.rng)
        .map_err(|e| e.in_stage("eigen"))?;
    run.summary.push_f("lambda1", first.lambda);
    run.summary.push_f("lambda2", second.lambda);

    let cfg = run.four_solutions_config();
    let ladder = crate::cones::eigen_ladder(&spec, &first, cfg.t_scale)
        .map_err(|e| e.in_stage("ladder"))?;
    run.summary.push_f("t_bar", ladder.t_bar);
    run.summary.push_f("ell", ladder.ell);

    let asym = spec.asymptotic.ok_or_else(|| {
        Error::Precondition("an asymptotic slope bound is required".into()).in_stage("envelopes")
    })?;
    let mu_eff = asym.mu.min(first.lambda / 2.0);
    run.summary.push_f("mu_eff", mu_eff);
    let spec = spec
        .clone()
        .with_asymptotic_mu(mu_eff)
        .map_err(|e| e.in_stage("envelopes"))?;
    let neg = negative_envelope(&mesh, &spec, first.lambda).map_err(|e| e.in_stage("envelopes"))?;
    let pos = positive_envelope(&mesh, &spec, first.lambda).map_err(|e| e.in_stage("envelopes"))?;

    let alpha1 = ConeSpec::lower("alpha1", neg.w);
    let beta2 = ConeSpec::upper("beta2", pos.w);
    let mut alpha2 = ladder.alpha;
    alpha2.label = "alpha2".into();
    let mut beta1 = ladder.beta;
    beta1.label = "beta1".into();
    let eps_bar = separation_radius(&alpha2, &beta1, p).map_err(|e| e.in_stage("certificates"))?;
    run.summary.push_f("eps_bar", eps_bar);

    let mut all_ok = true;
    for cone in [&alpha1, &beta1, &alpha2, &beta2] {
        let strict = verify_strict(cone, &spec);
        run.summary
            .push_f(&format!("strict_{}", cone.label), strict.min_margin);
        let margin = cone.remainder_fn(&spec);
        let certs = certify_invariance(&mesh.domain, margin.as_ref(), p, mesh.dim());
        all_ok &= invariance_ok(&certs) && strict.strict;
        run.summary
            .push(&format!("cert_{}", cone.label), aggregate_status(&certs));
        run.write(
            &format!("certificate_{}.txt", cone.label),
            &certificate_text(&cone.label, &certs),
        )?;
    }
    run.summary
        .push("invariance", if all_ok { "ok" } else { "failed" });
    Ok(())
}

fn cmd_verify_inequalities(run: &mut Run) -> Result<()> {
    let sweep_cfg = run.cfg.sweep.take().unwrap_or_default();
    let dim = run.mesh.dim();
    let mut total_failures = 0usize;
    for &p in &sweep_cfg.exponents {
        if p <= 1.0 {
            return Err(Error::Config(format!(
                "field `sweep.exponents`: exponent {p} must exceed 1"
            )));
        }
        let key = |family: &str, kind: &str| {
            format!("{family}_p{}_{kind}", fmt_exponent(p))
        };
        for sweep in sweep_vector_inequalities(p, dim, sweep_cfg.vector_pairs, &mut run.rng) {
            total_failures += sweep.failures;
            run.summary.push_n(&key(sweep.name, "failures"), sweep.failures);
            run.summary.push_f(&key(sweep.name, "worst"), sweep.worst);
        }
        for sweep in
            sweep_integral_inequalities(&run.mesh, p, sweep_cfg.integral_pairs, &mut run.rng)
        {
            total_failures += sweep.failures;
            run.summary.push_n(&key(sweep.name, "failures"), sweep.failures);
            run.summary.push_f(&key(sweep.name, "worst"), sweep.worst);
        }
    }
    run.summary.push_n("total_failures", total_failures);
    Ok(())
}

fn fmt_exponent(p: f64) -> String {
    if p == p.trunc() {
        format!("{}", p as i64)
    } else {
        format!("{p}").replace('.', "_")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("run.toml");
        std::fs::write(&path, body).unwrap();
        path
    }

    fn args(config: &Path, out: &Path, extra: &[&str]) -> Vec<String> {
        let mut v = vec![
            "--config".to_string(),
            config.display().to_string(),
            "--out".to_string(),
            out.display().to_string(),
        ];
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    }

    #[test]
    fn eigen_summary_hits_the_linear_eigenvalue() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"
            [domain]
            kind = "interval"
            n = 2048
            [problem]
            p = 2.0
            catalog = "linear"
            lambda = 1.0
            "#,
        );
        let out = dir.path().join("out");
        let mut argv = vec!["conewalk".to_string(), "eigen".to_string()];
        argv.extend(args(&cfg, &out, &[]));
        assert_eq!(run(argv), 0);
        let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
        let lambda1: f64 = summary
            .lines()
            .find_map(|l| l.strip_prefix("lambda1="))
            .unwrap()
            .parse()
            .unwrap();
        let exact = std::f64::consts::PI.powi(2);
        assert!((lambda1 - exact).abs() / exact < 1e-3, "lambda1={lambda1}");
        assert!(out.join("solution_phi1.csv").exists());
    }

    #[test]
    fn unknown_config_field_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"
            [domain]
            kind = "interval"
            n = 64
            typo = 3
            [problem]
            p = 2.0
            catalog = "linear"
            lambda = 1.0
            "#,
        );
        let out = dir.path().join("out");
        let mut argv = vec!["conewalk".to_string(), "eigen".to_string()];
        argv.extend(args(&cfg, &out, &[]));
        assert_eq!(run(argv), 2);
        assert!(!out.join("summary.txt").exists());
    }

    #[test]
    fn mismatched_command_declaration_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"
            command = "eigen"
            [domain]
            kind = "interval"
            n = 64
            [problem]
            p = 2.0
            catalog = "linear"
            lambda = 1.0
            "#,
        );
        let out = dir.path().join("out");
        let mut argv = vec!["conewalk".to_string(), "solve-min".to_string()];
        argv.extend(args(&cfg, &out, &[]));
        assert_eq!(run(argv), 2);
    }

    #[test]
    fn solve_min_between_zero_and_parabola() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"
            [domain]
            kind = "interval"
            n = 512
            [problem]
            p = 2.0
            catalog = "constant"
            value = 1.0
            [barriers]
            lower = "zero"
            upper = "parabola"
            "#,
        );
        let out = dir.path().join("out");
        let mut argv = vec!["conewalk".to_string(), "solve-min".to_string()];
        argv.extend(args(&cfg, &out, &["--trace"]));
        assert_eq!(run(argv), 0);
        let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
        let max_value: f64 = summary
            .lines()
            .find_map(|l| l.strip_prefix("max_value="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((max_value - 0.125).abs() < 1e-8, "max={max_value}");
        assert!(summary.contains("ordered=true"));
        assert!(out.join("trace_monotone.csv").exists());
    }

    #[test]
    fn verify_inequalities_is_deterministic_and_clean() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"
            [domain]
            kind = "interval"
            n = 48
            [problem]
            p = 2.0
            catalog = "linear"
            lambda = 1.0
            [sweep]
            vector_pairs = 2000
            integral_pairs = 50
            "#,
        );
        let mut outputs = Vec::new();
        for round in 0..2 {
            let out = dir.path().join(format!("out{round}"));
            let mut argv = vec!["conewalk".to_string(), "verify-inequalities".to_string()];
            argv.extend(args(&cfg, &out, &["--seed", "42"]));
            assert_eq!(run(argv), 0);
            outputs.push(std::fs::read(out.join("summary.txt")).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
        let text = String::from_utf8(outputs[0].clone()).unwrap();
        assert!(text.contains("total_failures=0"), "{text}");
        assert!(text.contains("seed=42"));
    }
}
