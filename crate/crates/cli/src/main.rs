mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dcen::bench::{MatrixKind, Method};
use dcen::{DcenError, DcenParams, Result};

use config::*;

/// Sparse recovery with the difference-of-convex Elastic Net penalty.
///
/// Values are resolved as flags, then the `--config` JSON file, then built-in
/// defaults. Every run writes `manifest.json` into the output directory; pass
/// it to `replay` to regenerate the same files.
#[derive(Parser)]
#[command(name = "dcen", version)]
struct Cli {
    /// Worker threads for trial-level parallelism (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one least-squares problem; exit 2 if the iteration cap was hit.
    Solve(SolveArgs),
    /// Run a Monte-Carlo experiment described by a config file.
    Bench(BenchArgs),
    /// DCEN-TV reconstruction from radially undersampled Fourier data.
    Mri(MriArgs),
    /// Generate seeded test data.
    Gen(GenArgs),
    /// Evaluate the DCEN proximal operator at one point.
    ProxCheck(ProxArgs),
    /// Recovery-condition constants for a sensing matrix.
    ReportConditions(ConditionsArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Args, Default)]
struct ParamArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    eps_machine: Option<f64>,
    #[arg(long)]
    dca_eps: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    adaptive_rho: bool,
}

impl ParamArgs {
    fn apply(&self, p: &mut DcenParams) {
        set(&mut p.lambda, self.lambda);
        set(&mut p.gamma, self.gamma);
        set(&mut p.alpha, self.alpha);
        set(&mut p.rho, self.rho);
        set(&mut p.eps_abs, self.eps_abs);
        set(&mut p.eps_rel, self.eps_rel);
        set(&mut p.eps_machine, self.eps_machine);
        set(&mut p.dca_eps, self.dca_eps);
        set(&mut p.max_outer, self.max_outer);
        if self.max_inner.is_some() {
            p.max_inner = self.max_inner;
        }
        if self.adaptive_rho {
            p.adaptive_rho = true;
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "dca" => Ok(Method::DcenDca),
        "admm" => Ok(Method::DcenAdmm),
        "lasso" => Ok(Method::LassoAdmm),
        other => other.parse().map_err(|e: DcenError| e.to_string()),
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// dca, admm, lasso or any bench method name.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Start DCA methods from zero instead of the LASSO solution.
    #[arg(long)]
    cold_start: bool,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct MriArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_side: Option<usize>,
    #[arg(long)]
    lines: Option<usize>,
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<GenKind>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Oversampled DCT with this factor.
    #[arg(long, conflicts_with = "r")]
    f: Option<f64>,
    /// Correlated Gaussian with this correlation.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    min_sep: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    n_side: Option<usize>,
    #[arg(long)]
    lines: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct ProxArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated input vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct ConditionsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    big_m: Option<f64>,
    #[arg(long)]
    delta_3s: Option<f64>,
    #[arg(long)]
    delta_4s: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[command(flatten)]
    params: ParamArgs,
}

fn resolve(command: Command) -> Result<RunConfig> {
    Ok(match command {
        Command::Solve(a) => {
            let mut c: SolveConfig = load_or_default(a.config.as_deref())?;
            set(&mut c.method, a.method);
            set(&mut c.a, a.a);
            set(&mut c.b, a.b);
            if a.x0.is_some() {
                c.x0 = a.x0;
            }
            if a.cold_start {
                c.warm_start = false;
            }
            set(&mut c.format, a.format);
            a.params.apply(&mut c.params);
            RunConfig::Solve(c)
        }
        Command::Bench(a) => {
            let mut c: BenchConfig = read_json(&a.config)?;
            if let Some(t) = a.trials {
                c.set_trials(t);
            }
            if let Some(s) = a.seed {
                c.set_seed(s);
            }
            set(&mut c.format, a.format);
            RunConfig::Bench(c)
        }
        Command::Mri(a) => {
            let mut c: MriConfig = load_or_default(a.config.as_deref())?;
            set(&mut c.n_side, a.n_side);
            set(&mut c.lines, a.lines);
            if a.image.is_some() {
                c.image = a.image;
            }
            set(&mut c.gamma, a.gamma);
            set(&mut c.alpha, a.alpha);
            if a.mu.is_some() {
                c.mu = a.mu;
            }
            set(&mut c.beta, a.beta);
            set(&mut c.max_outer, a.max_outer);
            set(&mut c.max_inner, a.max_inner);
            RunConfig::Mri(c)
        }
        Command::Gen(a) => {
            let mut c: GenConfig = load_or_default(a.config.as_deref())?;
            set(&mut c.kind, a.kind);
            set(&mut c.m, a.m);
            set(&mut c.n, a.n);
            if let Some(f) = a.f {
                c.matrix = MatrixKind::DctOversampled { f };
            }
            if let Some(r) = a.r {
                c.matrix = MatrixKind::GaussianCorrelated { r };
            }
            set(&mut c.s, a.s);
            set(&mut c.min_sep, a.min_sep);
            if a.snr_db.is_some() {
                c.snr_db = a.snr_db;
            }
            set(&mut c.n_side, a.n_side);
            set(&mut c.lines, a.lines);
            set(&mut c.seed, a.seed);
            if a.binary {
                c.binary = true;
            }
            RunConfig::Gen(c)
        }
        Command::ProxCheck(a) => {
            let mut c: ProxConfig = load_or_default(a.config.as_deref())?;
            set(&mut c.y, a.y);
            set(&mut c.step, a.step);
            set(&mut c.gamma, a.gamma);
            set(&mut c.alpha, a.alpha);
            RunConfig::ProxCheck(c)
        }
        Command::ReportConditions(a) => {
            let mut c: ConditionsConfig = load_or_default(a.config.as_deref())?;
            set(&mut c.a, a.a);
            if a.b.is_some() {
                c.b = a.b;
            }
            if a.truth.is_some() {
                c.truth = a.truth;
            }
            set(&mut c.s, a.s);
            set(&mut c.p, a.p);
            if a.big_m.is_some() {
                c.big_m = a.big_m;
            }
            set(&mut c.delta_3s, a.delta_3s);
            set(&mut c.delta_4s, a.delta_4s);
            set(&mut c.r, a.r);
            a.params.apply(&mut c.params);
            RunConfig::ReportConditions(c)
        }
        Command::Replay { manifest } => {
            let m: Manifest = read_json(&manifest)?;
            m.run
        }
    })
}

fn run_and_record(run: RunConfig, out: &Path) -> Result<u8> {
    let t0 = Instant::now();
    let outcome = run::execute(&run, out)?;
    let manifest = Manifest {
        tool: "dcen".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        run,
        outputs: outcome.outputs,
        wall_time_ms: t0.elapsed().as_secs_f64() * 1e3,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match resolve(cli.command).and_then(|run| run_and_record(run, &cli.out)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
