//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or IO error, 2 iteration budget exhausted
//! before the target, 3 a check failed.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spcdm_core::smoothing::{check, loss_constants};
use spcdm_core::solver::{choose_mu, Target};
use spcdm_core::{eso, BetaFormula, LossKind, ProblemData, Regularizer, SmoothedLoss, SolverConfig};

use crate::error::{Error, Result};
use crate::report::{self, ConfigEcho, RunReport};
use crate::{bench, parallel, svmlight};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spcdm", version, about = "Smoothed parallel coordinate descent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize a loss on an SVMlight dataset and write a JSON report.
    Solve(SolveArgs),
    /// Tabulate the three β′ formulas over a range of τ.
    EsoTable(EsoTableArgs),
    /// Compare analytic and finite-difference gradients on random instances.
    Gradcheck(GradcheckArgs),
    /// Coordinate updates and time to a target for several τ.
    Bench(BenchArgs),
    /// Write a random sparse dataset with a fixed row degree.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum App {
    Linf,
    L1,
    Adaboost,
}

impl From<App> for LossKind {
    fn from(a: App) -> Self {
        match a {
            App::Linf => LossKind::Linf,
            App::L1 => LossKind::L1,
            App::Adaboost => LossKind::AdaBoost,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// SVMlight/LIBSVM file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub app: App,
    /// Number of columns, if larger than the largest index in the file.
    #[arg(long)]
    pub n_cols: Option<usize>,
    /// Smoothing parameter.
    #[arg(long, conflicts_with = "eps")]
    pub mu: Option<f64>,
    /// Accuracy ε′ on the nonsmooth objective; sets μ = ε′/(2D) and stops
    /// once F(x) − lower bound ≤ ε′.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Lower bound on min F for the ε′ stopping rule (default 0 for linf/l1).
    #[arg(long, allow_negative_numbers = true)]
    pub lower_bound: Option<f64>,
    /// Stop once the smoothed objective F_μ is at or below this value.
    #[arg(long, allow_negative_numbers = true)]
    pub target: Option<f64>,
    /// none | l1:LAMBDA | box:LO:HI | ridge:DELTA
    #[arg(long, default_value = "none")]
    pub reg: String,
    /// beta1 | beta2 | beta3 | a positive number (default: beta3 for linf and
    /// adaboost, beta2 for l1).
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub trace_every: usize,
    #[arg(long, env = "SPCDM_THREADS", default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
    /// JSON report path.
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Trace CSV path (default: the report path with a .csv extension).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub taus: Vec<usize>,
    /// CSV output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EsoTableArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub omega: usize,
    #[arg(long, default_value_t = 1)]
    pub tau_min: usize,
    #[arg(long)]
    pub tau_max: usize,
    #[arg(long, default_value_t = 1)]
    pub tau_step: usize,
    /// CSV output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[arg(long, value_enum)]
    pub app: App,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub mu: f64,
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub omega: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Solve(a) => solve(&a),
        Command::EsoTable(a) => eso_table(&a),
        Command::Gradcheck(a) => gradcheck(&a),
        Command::Bench(a) => bench_cmd(&a),
        Command::Synth(a) => {
            let pd = ProblemData::synthetic(a.m, a.n, a.omega, a.seed)?;
            svmlight::save(&pd, &a.out)?;
            Ok(EXIT_OK)
        }
    }
}

pub fn parse_regularizer(s: &str) -> Result<Regularizer> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| -> Result<f64> {
        t.parse()
            .map_err(|_| Error::Usage(format!("bad number {t:?} in --reg {s:?}")))
    };
    match parts.as_slice() {
        ["none"] => Ok(Regularizer::None),
        ["l1", l] => Ok(Regularizer::L1(num(l)?)),
        ["ridge", d] => Ok(Regularizer::Ridge(num(d)?)),
        ["box", lo, hi] => Ok(Regularizer::boxed(num(lo)?, num(hi)?)),
        _ => Err(Error::Usage(format!(
            "unknown regularizer {s:?} (expected none, l1:LAMBDA, box:LO:HI or ridge:DELTA)"
        ))),
    }
}

pub fn parse_beta(s: &str) -> Result<BetaFormula> {
    match s {
        "beta1" => Ok(BetaFormula::Beta1),
        "beta2" => Ok(BetaFormula::Beta2),
        "beta3" => Ok(BetaFormula::Beta3),
        other => other
            .parse()
            .map(BetaFormula::Override)
            .map_err(|_| Error::Usage(format!("bad --beta {other:?}"))),
    }
}

/// `D` for the loss built from `pd`, without materializing the working matrix.
fn prox_range(kind: LossKind, pd: &ProblemData) -> f64 {
    match kind {
        LossKind::Linf => (2.0 * pd.m() as f64).ln(),
        _ => loss_constants(kind, pd).1,
    }
}

struct Prepared {
    pd: ProblemData,
    loss: SmoothedLoss,
    reg: Regularizer,
    cfg: SolverConfig,
}

fn prepare(a: &ProblemArgs, tau: usize) -> Result<Prepared> {
    let pd = svmlight::load(&a.data, a.n_cols)?;
    let kind = LossKind::from(a.app);
    let mu = match (kind, a.mu, a.eps) {
        (LossKind::AdaBoost, _, _) => 1.0,
        (_, Some(mu), _) => mu,
        (_, None, Some(eps)) => choose_mu(eps, prox_range(kind, &pd))?,
        (_, None, None) => return Err(Error::Usage("one of --mu or --eps is required".into())),
    };
    let loss = SmoothedLoss::new(kind, &pd, mu)?;
    let reg = parse_regularizer(&a.reg)?;
    let mut cfg = SolverConfig::for_loss(&loss, tau, a.seed);
    if let Some(b) = &a.beta {
        cfg.beta_formula = parse_beta(b)?;
    }
    cfg.max_epochs = a.max_epochs;
    cfg.trace_every = a.trace_every;
    cfg.workers = a.workers;
    cfg.target = match (a.target, a.eps) {
        (Some(t), _) => Some(Target::Smoothed(t)),
        (None, Some(eps)) => {
            let lower_bound = match (a.lower_bound, kind) {
                (Some(lb), _) => lb,
                (None, LossKind::AdaBoost) => {
                    return Err(Error::Usage(
                        "adaboost has no default lower bound: pass --lower-bound or --target".into(),
                    ))
                }
                (None, _) => 0.0,
            };
            Some(Target::Accuracy { eps, lower_bound })
        }
        (None, None) => None,
    };
    Ok(Prepared { pd, loss, reg, cfg })
}

fn solve(a: &SolveArgs) -> Result<i32> {
    let p = prepare(&a.problem, a.tau)?;
    let start = Instant::now();
    let stats = parallel::solve(&p.loss, &p.reg, &p.cfg, None)?;
    let wall = start.elapsed().as_secs_f64();

    let working = p.loss.problem();
    let echo = ConfigEcho {
        dataset: Some(a.problem.data.display().to_string()),
        tau: a.tau,
        seed: a.problem.seed,
        mu: p.loss.mu(),
        eps: a.problem.eps,
        lower_bound: a.problem.lower_bound,
        target: a.problem.target,
        beta: a.problem.beta.clone().unwrap_or_else(|| p.cfg.beta_formula.name().into()),
        regularizer: a.problem.reg.clone(),
        max_epochs: p.cfg.max_epochs,
        trace_every: p.cfg.trace_every,
        workers: p.cfg.workers,
    };
    let rep = RunReport::new(
        LossKind::from(a.problem.app).name(),
        &stats,
        wall,
        p.pd.omega(),
        working.active_columns().len(),
        echo,
    );
    rep.save(&a.out)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    report::write_trace(&rep.objective_trace, fs::File::create(&trace_path)?)?;

    let last = stats.trace.last().expect("trace holds the starting point");
    eprintln!(
        "epochs={} updates={} F_mu={:.6e} F={:.6e} beta'={:.6} reached_target={}",
        stats.epochs_run,
        stats.coordinate_updates,
        last.smoothed,
        last.nonsmooth,
        stats.eso.beta_prime,
        stats.reached_target
    );
    Ok(if p.cfg.target.is_some() && !stats.reached_target {
        EXIT_BUDGET
    } else {
        EXIT_OK
    })
}

fn bench_cmd(a: &BenchArgs) -> Result<i32> {
    if a.problem.target.is_none() && a.problem.eps.is_none() {
        return Err(Error::Usage("bench needs --target or --eps".into()));
    }
    if a.taus.is_empty() {
        return Err(Error::Usage("--taus is empty".into()));
    }
    let p = prepare(&a.problem, a.taus[0])?;
    let rows = bench::run(&p.loss, &p.reg, &p.cfg, &a.taus)?;
    with_output(a.out.as_deref(), |w| bench::write_csv(&rows, w))?;
    Ok(if rows.iter().all(|r| r.reached_target) {
        EXIT_OK
    } else {
        EXIT_BUDGET
    })
}

#[derive(serde::Serialize)]
struct EsoRow {
    tau: usize,
    beta1: f64,
    beta2: f64,
    beta3: f64,
}

fn eso_table(a: &EsoTableArgs) -> Result<i32> {
    if a.omega == 0 || a.omega > a.n {
        return Err(Error::Usage(format!("omega must lie in 1..={}", a.n)));
    }
    if a.tau_min == 0 || a.tau_min > a.tau_max || a.tau_max > a.n || a.tau_step == 0 {
        return Err(Error::Usage(format!(
            "need 1 <= tau-min <= tau-max <= n = {} and tau-step >= 1",
            a.n
        )));
    }
    let rows: Vec<EsoRow> = (a.tau_min..=a.tau_max)
        .step_by(a.tau_step)
        .map(|tau| EsoRow {
            tau,
            beta1: eso::beta1(a.omega, tau),
            beta2: eso::beta2(a.omega, tau, a.n),
            beta3: eso::beta3(a.omega, tau, a.n, a.m),
        })
        .collect();
    with_output(a.out.as_deref(), |out| {
        let mut w = csv::Writer::from_writer(out);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(EXIT_OK)
}

fn gradcheck(a: &GradcheckArgs) -> Result<i32> {
    let kind = LossKind::from(a.app);
    let rep = check::run(kind, a.mu, a.seed, a.instances)?;
    let ok = rep.max_rel_error <= check::DEFAULT_TOLERANCE;
    println!(
        "app={} mu={} instances={} max_rel_error={:.3e} worst_seed={} tolerance={:.0e} {}",
        kind.name(),
        a.mu,
        rep.instances,
        rep.max_rel_error,
        rep.worst_seed,
        check::DEFAULT_TOLERANCE,
        if ok { "ok" } else { "FAILED" }
    );
    if !ok {
        eprintln!(
            "gradient check failed; at very small mu the finite-difference step no longer \
             resolves the smoothed curvature"
        );
    }
    Ok(if ok { EXIT_OK } else { EXIT_CHECK })
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p)?);
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
    }
    Ok(())
}
