//! Batch driver: reads a JSON run configuration, dispatches one study and
//! persists a JSON report plus CSV sidecars.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use dispersal_core::analysis::{
    generalized_eigen_residual, integrability_diagnostic, perturbation_probe, spectral_field, sweep,
    FieldSamples, ProbeMode, SweepMode,
};
use dispersal_core::assembly::{assemble_sampled, chis, pointwise_a, write_matrix};
use dispersal_core::epidemic::{q_csv, r0_report, VsiParams};
use dispersal_core::model::{
    validate_sampled, CoefField, DispersalSystem, KernelSpec, SampledSystem,
};
use dispersal_core::opspec::{dense_spectrum, spectral_bound, spectral_report, Certificate};
use dispersal_core::perron::PerronOptions;
use dispersal_core::reduce::reduced_quantities;
use dispersal_core::{Expr, Grid};

pub use config::RunConfig;
use config::Format;
use report::{
    csv_f64, DiagnoseReport, ErrorEntry, OracleReport, ProbeReport, ProbeRow, RunReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dispersal", version, about = "Spectral studies of cooperative nonlocal dispersal systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: ./out, or output.directory from the config]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed for probes [default: 0, or seed from the config]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid size override.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Skip the hypothesis validation gate.
    #[arg(long, global = true)]
    pub force: bool,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Hypothesis report for the sampled system.
    Validate,
    /// Spectral bound, essential bound, gap and principal-eigenvalue certificate.
    Spectrum,
    /// Perron weights, averaged matrix, pointwise and averaged bounds, threshold.
    Reduce,
    /// Spectral bound along a diffusion-scale schedule.
    Sweep {
        #[arg(long, value_enum)]
        mode: Option<SweepModeArg>,
    },
    /// Integrability evidence and generalized eigenvalue residual.
    Diagnose,
    /// Basic reproduction ratio of the viral-infection model.
    R0,
    /// Full dense spectrum of the assembled operator.
    Oracle,
    /// Perturbation continuity probe.
    Probe,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Spectrum => "spectrum",
            Command::Reduce => "reduce",
            Command::Sweep { .. } => "sweep",
            Command::Diagnose => "diagnose",
            Command::R0 => "r0",
            Command::Oracle => "oracle",
            Command::Probe => "probe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepModeArg {
    SmallD,
    LargeDNonDegen,
    LargeDDegen,
}

impl From<SweepModeArg> for SweepMode {
    fn from(m: SweepModeArg) -> Self {
        match m {
            SweepModeArg::SmallD => SweepMode::SmallD,
            SweepModeArg::LargeDNonDegen => SweepMode::LargeDNonDegen,
            SweepModeArg::LargeDDegen => SweepMode::LargeDDegen,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dispersal_core::Error),
    #[error("hypothesis validation failed with {0} violation(s)")]
    Validation(usize),
    #[error("{0} did not converge")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dispersal_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::NotConverged(_) => EXIT_SOLVER,
            CliError::Core(e) => match e {
                E::Validation { .. } => EXIT_VALIDATION,
                E::NotConverged { .. }
                | E::ResolventDomain { .. }
                | E::GridConsistency { .. }
                | E::Inconsistency(_)
                | E::ClassificationFailure { .. } => EXIT_SOLVER,
                E::InvalidDomain(_)
                | E::Dimension(_)
                | E::Expr { .. }
                | E::SizeCap { .. }
                | E::InvalidParameters(_)
                | E::Mode(_) => EXIT_CONFIG,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Core(_) => "solver",
            CliError::Validation(_) => "validation",
            CliError::NotConverged(_) => "not-converged",
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `argv` (program name first), runs the study and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> i32 {
    let started = Instant::now();
    let mut report = RunReport::new(cli.command.name());
    let loaded = load_config(cli);
    let out_dir = out_dir(cli, loaded.as_ref().ok());
    let result = loaded.and_then(|cfg| {
        report.seed = cli.seed.unwrap_or(cfg.seed);
        report.grid_n = Some(cli.n.unwrap_or(cfg.grid.n));
        report.config = Some(cfg.clone());
        let ctx = Context {
            cli,
            cfg: &cfg,
            out: &out_dir,
        };
        dispatch(&ctx, &mut report)
    });
    let code = match &result {
        Ok(()) => report.exit_code(),
        Err(e) => {
            report.errors.push(ErrorEntry {
                kind: e.kind().into(),
                message: e.to_string(),
                exit_code: e.exit_code(),
            });
            e.exit_code()
        }
    };
    report.exit_code = code;
    report.timings.insert("total_seconds".into(), started.elapsed().as_secs_f64());
    let written = write_report(&out_dir, &report);
    if !cli.quiet {
        for e in &report.errors {
            eprintln!("error [{}]: {}", e.kind, e.message);
        }
        match &written {
            Ok(path) => println!("{} report written to {}", report.command, path.display()),
            Err(e) => eprintln!("error: {e}"),
        }
    }
    match written {
        Ok(_) => code,
        Err(e) if code == EXIT_OK => e.exit_code(),
        Err(_) => code,
    }
}

struct Context<'a> {
    cli: &'a Cli,
    cfg: &'a RunConfig,
    out: &'a Path,
}

impl Context<'_> {
    fn n(&self) -> usize {
        self.cli.n.unwrap_or(self.cfg.grid.n)
    }

    fn seed(&self) -> u64 {
        self.cli.seed.unwrap_or(self.cfg.seed)
    }

    fn grid(&self, n: usize) -> CliResult<Grid> {
        Ok(Grid::new(self.cfg.domain.a, self.cfg.domain.b, n)?)
    }

    fn opts(&self) -> PerronOptions {
        let s = &self.cfg.solver;
        PerronOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            power_budget: None,
            refine_budget: s.refine_budget,
        }
    }

    fn system(&self) -> CliResult<DispersalSystem> {
        let sys = self
            .cfg
            .system
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a `system` section".into()))?;
        build_system(sys, (self.cfg.domain.a, self.cfg.domain.b))
    }

    fn sampled(&self, n: usize) -> CliResult<SampledSystem> {
        Ok(self.system()?.sample(&self.grid(n)?)?)
    }

    fn write(&self, name: &str, contents: &[u8]) -> CliResult<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
    }

    fn csv(&self, name: &str, contents: String) -> CliResult<()> {
        if self.cfg.wants(Format::Csv) {
            self.write(name, contents.as_bytes())?;
        }
        Ok(())
    }
}

pub fn build_system(sys: &config::SystemConfig, domain: (f64, f64)) -> CliResult<DispersalSystem> {
    if sys.coefficients.len() != sys.l {
        return Err(CliError::Config(format!(
            "system.l = {} but {} coefficient rows given",
            sys.l,
            sys.coefficients.len()
        )));
    }
    let kernels = sys
        .kernels
        .iter()
        .map(|k| KernelSpec::parse(k))
        .collect::<dispersal_core::Result<Vec<_>>>()?;
    let coefficients = CoefField::parse(&sys.coefficients)?;
    Ok(DispersalSystem::new(sys.l1, sys.d.clone(), kernels, coefficients, domain)?)
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| {
            cfg.and_then(|c| c.output.as_ref())
                .and_then(|o| o.directory.as_ref())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("./out"))
}

fn write_report(dir: &Path, report: &RunReport) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(format!("{}.json", report.command));
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn dispatch(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    fs::create_dir_all(ctx.out).map_err(|source| CliError::Io {
        path: ctx.out.to_path_buf(),
        source,
    })?;
    let clock = Instant::now();
    let result = match &ctx.cli.command {
        Command::Validate => cmd_validate(ctx, report),
        Command::Spectrum => cmd_spectrum(ctx, report),
        Command::Reduce => cmd_reduce(ctx, report),
        Command::Sweep { mode } => cmd_sweep(ctx, report, *mode),
        Command::Diagnose => cmd_diagnose(ctx, report),
        Command::R0 => cmd_r0(ctx, report),
        Command::Oracle => cmd_oracle(ctx, report),
        Command::Probe => cmd_probe(ctx, report),
    };
    report
        .timings
        .insert("compute_seconds".into(), clock.elapsed().as_secs_f64());
    result
}

/// Samples and, unless forced, enforces the hypotheses.
fn gated(ctx: &Context<'_>, report: &mut RunReport, n: usize) -> CliResult<SampledSystem> {
    let s = ctx.sampled(n)?;
    let v = validate_sampled(&s);
    let passed = v.passed();
    let count = v.violations.len();
    report.validation = Some(v);
    if !passed && !ctx.cli.force {
        return Err(CliError::Validation(count));
    }
    Ok(s)
}

fn cmd_validate(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    let s = ctx.sampled(ctx.n())?;
    let v = validate_sampled(&s);
    let count = v.violations.len();
    report.validation = Some(v);
    if count > 0 {
        return Err(CliError::Validation(count));
    }
    Ok(())
}

fn cmd_spectrum(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    let s = gated(ctx, report, ctx.n())?;
    let chi = chis(&s);
    let op = assemble_sampled(&s);
    let pa = pointwise_a(&s, &chi);
    let r = spectral_report(&op, &pa, &ctx.opts(), ctx.cfg.solver.gap_tol)?;
    if let Certificate::Exists { eigvec, .. } = &r.certificate {
        let mut csv = String::from("species,x,component\n");
        for (k, v) in eigvec.iter().enumerate() {
            let (i, a) = (k / s.n(), k % s.n());
            csv.push_str(&format!("{i},{},{}\n", csv_f64(s.grid.points()[a]), csv_f64(*v)));
        }
        ctx.csv("spectrum_eigenvector.csv", csv)?;
    }
    if ctx.cfg.wants(Format::Bin) {
        let mut buf = Vec::new();
        op.write_binary(&mut buf).expect("in-memory write");
        ctx.write("operator.bin", &buf)?;
    }
    let converged = r.converged;
    report.spectrum = Some(r);
    if !converged {
        return Err(CliError::NotConverged("spectral bound".into()));
    }
    Ok(())
}

fn cmd_reduce(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    let s = gated(ctx, report, ctx.n())?;
    let rq = reduced_quantities(&s, ctx.cfg.solver.tol)?;
    let mut csv = String::from("x");
    for w in &rq.weights {
        csv.push_str(&format!(",p{}", w.species));
    }
    csv.push('\n');
    for (a, x) in s.grid.points().iter().enumerate() {
        csv.push_str(&csv_f64(*x));
        for w in &rq.weights {
            csv.push(',');
            csv.push_str(&csv_f64(w.samples[a]));
        }
        csv.push('\n');
    }
    ctx.csv("reduce_weights.csv", csv)?;
    if let Some(c) = &rq.classification {
        let mut csv = String::from("epsilon,gamma,s_tilde_b\n");
        for sample in &c.ladder.samples {
            csv.push_str(&format!(
                "{},{},{}\n",
                csv_f64(sample.epsilon),
                csv_f64(sample.at),
                csv_f64(sample.value)
            ));
        }
        ctx.csv("reduce_ladder.csv", csv)?;
    }
    report.reduced = Some(rq);
    Ok(())
}

fn cmd_sweep(ctx: &Context<'_>, report: &mut RunReport, mode: Option<SweepModeArg>) -> CliResult<()> {
    let cfg = ctx
        .cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a `sweep` section with t_schedule".into()))?;
    let mode = mode
        .map(SweepMode::from)
        .or(cfg.mode)
        .ok_or_else(|| CliError::Config("sweep mode missing: pass --mode or set sweep.mode".into()))?;
    let s = gated(ctx, report, ctx.n())?;
    let table = sweep(&s, &cfg.t_schedule, mode, &ctx.opts())?;
    ctx.csv("sweep.csv", table.to_csv())?;
    let converged = table.rows.iter().all(|r| r.converged);
    report.sweep = Some(table);
    if !converged {
        return Err(CliError::NotConverged("sweep spectral bound".into()));
    }
    Ok(())
}

fn cmd_diagnose(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    let dcfg = ctx.cfg.diagnose.clone().unwrap_or(config::DiagnoseConfig {
        region: None,
        window: dispersal_core::analysis::DEFAULT_FIT_WINDOW,
        lambda: None,
    });
    let n = ctx.n();
    let s = gated(ctx, report, n)?;
    let opts = ctx.opts();
    let chi = chis(&s);
    let pa = pointwise_a(&s, &chi);
    let field = spectral_field(&s, &pa, opts.tol)?;

    let mut ns = ctx.cfg.grid.refinement.clone();
    if ns.is_empty() {
        ns = vec![n / 2, n, 2 * n];
    }
    ns.retain(|&m| m >= 2);
    ns.sort_unstable();
    ns.dedup();
    let mut fields = Vec::with_capacity(ns.len());
    for &m in &ns {
        let sm = ctx.sampled(m)?;
        let pam = pointwise_a(&sm, &chis(&sm));
        let f = spectral_field(&sm, &pam, opts.tol)?;
        fields.push(FieldSamples {
            grid: sm.grid.clone(),
            values: f.big_h,
        });
    }
    let region = dcfg.region.unwrap_or((ctx.cfg.domain.a, ctx.cfg.domain.b));
    let integrability = integrability_diagnostic(&fields, region, dcfg.window)?;

    let (lambda, certified) = match dcfg.lambda {
        Some(l) => (Some(l), false),
        None => {
            let op = assemble_sampled(&s);
            let r = spectral_report(&op, &pa, &opts, ctx.cfg.solver.gap_tol)?;
            (r.certificate.lambda(), r.certificate.exists())
        }
    };
    let residual = match lambda {
        Some(l) => Some(generalized_eigen_residual(&s, l, &opts)?),
        None => None,
    };

    let mut csv = String::from("x,big_h,small_h\n");
    for a in 0..field.points.len() {
        csv.push_str(&format!(
            "{},{},{}\n",
            csv_f64(field.points[a]),
            csv_f64(field.big_h[a]),
            csv_f64(field.small_h[a])
        ));
    }
    ctx.csv("diagnose_field.csv", csv)?;
    report.diagnose = Some(DiagnoseReport {
        eta: field.eta,
        max_small_h: field.small_h.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        integrability,
        lambda,
        lambda_certified: certified,
        generalized_residual: residual,
        tol: opts.tol,
    });
    Ok(())
}

fn parse_expr(field: &str, text: &str) -> CliResult<Expr> {
    Expr::parse(text).map_err(|e| CliError::Config(format!("epidemic.{field} `{text}`: {e}")))
}

fn cmd_r0(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    let e = ctx
        .cfg
        .epidemic
        .as_ref()
        .ok_or_else(|| CliError::Config("r0 needs an `epidemic` section".into()))?;
    let grid = ctx.grid(ctx.n())?;
    let base = VsiParams {
        kernel: KernelSpec::parse(&e.kernel)?,
        d: 0.0,
        r: parse_expr("r", &e.r)?,
        m: parse_expr("m", &e.m)?,
        b: parse_expr("b", &e.b)?,
        beta_d: parse_expr("beta_d", &e.beta_d)?,
        beta_i: parse_expr("beta_i", &e.beta_i)?,
        domain: (ctx.cfg.domain.a, ctx.cfg.domain.b),
    };
    let sampled = base.sample(&grid)?;
    let mut table = String::from("d,r0,h_at_r0,hat_r0,r0_small_d,limit_case,limit\n");
    for (k, &d) in e.d.iter().enumerate() {
        if !(d.is_finite() && d >= 0.0) {
            return Err(CliError::Config(format!("epidemic.d[{k}] must be finite and nonnegative")));
        }
        let r = r0_report(&sampled.with_d(d), ctx.cfg.solver.r0_tol)?;
        let case = match r.limit {
            dispersal_core::epidemic::LimitClass::RootCase { .. } => "root-case",
            dispersal_core::epidemic::LimitClass::BoundaryCase { .. } => "boundary-case",
        };
        table.push_str(&format!(
            "{},{},{},{},{},{case},{}\n",
            csv_f64(d),
            csv_f64(r.r0.value),
            csv_f64(r.h_at_r0),
            csv_f64(r.hat_r0),
            csv_f64(r.r0_small_d),
            csv_f64(r.limit.limit())
        ));
        if k == 0 {
            ctx.csv("r0_q.csv", q_csv(&r.q_samples))?;
        }
        report.r0.push(r);
    }
    ctx.csv("r0.csv", table)?;
    Ok(())
}

fn cmd_oracle(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    let s = gated(ctx, report, ctx.n())?;
    let op = assemble_sampled(&s);
    let spectrum = dense_spectrum(&op)?;
    let est = spectral_bound(&op, &ctx.opts());
    let max_re = spectrum.first().map_or(f64::NAN, |z| z.re);
    let mut csv = String::from("re,im\n");
    for z in &spectrum {
        csv.push_str(&format!("{},{}\n", csv_f64(z.re), csv_f64(z.im)));
    }
    ctx.csv("oracle_spectrum.csv", csv)?;
    if ctx.cfg.wants(Format::Bin) {
        let mut buf = Vec::new();
        write_matrix(&op.matrix, &mut buf).expect("in-memory write");
        ctx.write("operator.bin", &buf)?;
    }
    report.oracle = Some(OracleReport {
        size: op.size(),
        eigenvalues: spectrum.len(),
        max_real_part: max_re,
        spectral_bound: est.value,
        converged: est.converged,
        difference: est.value - max_re,
        tol: est.tol,
    });
    if !est.converged {
        return Err(CliError::NotConverged("spectral bound".into()));
    }
    Ok(())
}

fn cmd_probe(ctx: &Context<'_>, report: &mut RunReport) -> CliResult<()> {
    let p = ctx
        .cfg
        .probe
        .as_ref()
        .ok_or_else(|| CliError::Config("probe needs a `probe` section".into()))?;
    let s = gated(ctx, report, ctx.n())?;
    let opts = ctx.opts();
    let seed = ctx.seed();
    let mut rows = Vec::new();
    for (k, &delta) in p.deltas.iter().enumerate() {
        for draw in 0..p.draws {
            let draw_seed = seed
                .wrapping_mul(1_000_003)
                .wrapping_add((k * p.draws + draw) as u64);
            let r = perturbation_probe(&s, ProbeMode::Random { delta }, draw_seed, &opts)?;
            rows.push(ProbeRow::from_result(delta, draw, &r));
        }
    }
    let shift = match p.diagonal_shift {
        Some(c) => Some(perturbation_probe(&s, ProbeMode::DiagonalShift { shift: c }, seed, &opts)?),
        None => None,
    };
    let mut csv = String::from("delta,draw,seed,ds,bound,norm_dm,norm_dk,within_bound\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_f64(r.delta),
            r.draw,
            r.seed,
            csv_f64(r.ds),
            csv_f64(r.bound),
            csv_f64(r.norm_dm),
            csv_f64(r.norm_dk),
            r.within_bound
        ));
    }
    ctx.csv("probe.csv", csv)?;
    report.probe = Some(ProbeReport::new(rows, shift, opts.tol));
    Ok(())
}
