//! Command-line front end. Exit codes: 0 ok, 2 invalid arguments, 3 I/O,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use robust_estim_cli::commands::{self, GenCommon, SolveArgs};
use robust_estim_cli::error::{CliError, CliResult};
use robust_estim_cli::experiment::{self, ExperimentConfig, Method};
use robust_estim_cli::plot;

#[derive(Parser)]
#[command(
    name = "robust-estim",
    about = "Robust regression and AR(d) estimation under sparse corruptions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic instances (data file + truth sidecar)
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve one instance file, print one CSV row to stdout
    Solve(SolveCli),
    /// Run a sweep experiment and write a CSV
    Experiment(ExperimentCli),
    /// Diagnostics: subset constants, moment identity, solve traces
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
    /// Render an experiment CSV as an SVG line plot
    Plot(PlotCli),
}

#[derive(Args)]
struct GenCommonCli {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    kstar: usize,
    #[arg(long, default_value_t = 10.0)]
    low: f64,
    #[arg(long, default_value_t = 20.0)]
    high: f64,
    /// positive | symmetric
    #[arg(long, default_value = "positive")]
    sign: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; extension and sidecar suffix are appended
    #[arg(long)]
    out: PathBuf,
}

impl GenCommonCli {
    fn into_common(self) -> CliResult<GenCommon> {
        Ok(GenCommon {
            n: self.n,
            d: self.d,
            sigma: self.sigma,
            k_star: self.kstar,
            low: self.low,
            high: self.high,
            sign: commands::parse_sign(&self.sign)?,
            seed: self.seed,
            out: self.out,
        })
    }
}

#[derive(Subcommand)]
enum GenCommand {
    /// Linear regression instance -> <out>.csv + <out>.truth.json
    Regression(GenCommonCli),
    /// AR(d) series -> <out>.series + <out>.truth.json
    Ar {
        #[command(flatten)]
        common: GenCommonCli,
        /// clean | additive | innovational
        #[arg(long, default_value = "clean")]
        mode: String,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
    },
}

#[derive(Args)]
struct SolveCli {
    #[arg(long)]
    input: PathBuf,
    /// Truth sidecar; defaults to <input stem>.truth.json when present
    #[arg(long)]
    truth: Option<PathBuf>,
    /// crr | crtse | ioard | ols | oracle
    #[arg(long)]
    method: String,
    /// Thresholding parameter; defaults from the sidecar corruption count
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// none | auto | auto:MULT | fixed:LEVEL (series solvers only)
    #[arg(long, default_value = "auto")]
    clip: String,
}

impl SolveCli {
    fn into_args(self) -> CliResult<SolveArgs> {
        Ok(SolveArgs {
            input: self.input,
            truth: self.truth,
            method: Method::parse(&self.method)?,
            k: self.k,
            tol: self.tol,
            max_iters: self.max_iters,
            seed: self.seed,
            clip: commands::parse_clip(&self.clip)?,
        })
    }
}

#[derive(Args)]
struct ExperimentCli {
    /// fig1a | fig2a
    #[arg(long)]
    preset: Option<String>,
    /// JSON experiment config; explicit flags win on conflict
    #[arg(long)]
    config: Option<PathBuf>,
    /// regression | ar-additive | ar-innovational
    #[arg(long)]
    problem: Option<String>,
    /// n | d | sigma | kstar
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated, strictly increasing sweep values
    #[arg(long)]
    values: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Fixed corruption count
    #[arg(long)]
    kstar: Option<usize>,
    /// Corruption count as a fraction of n
    #[arg(long)]
    kstar_frac: Option<f64>,
    /// Fixed thresholding parameter (default: twice the corruption count)
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated subset of crr,crtse,ioard,ols,oracle
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DiagnoseCommand {
    /// Exact subset constants (k, lambda_k, Lambda_k) of a design
    Ssc {
        /// Problem CSV to read the design from (otherwise a Gaussian draw)
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        kmax: Option<usize>,
        /// Aligned group size for the group constants
        #[arg(long)]
        group_size: Option<usize>,
    },
    /// Monte-Carlo vs quadrature check of the truncated-moment identity
    Moment {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 0.005)]
        lambda_norm: f64,
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-iteration diagnostics of a ground-truth-aware CRR solve
    Trace(SolveCli),
}

#[derive(Args)]
struct PlotCli {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// log10 both axes
    #[arg(long)]
    log_log: bool,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 520)]
    height: u32,
}

fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::InvalidArgs(format!("bad sweep value {v:?}")))
        })
        .collect()
}

fn parse_methods(s: &str) -> CliResult<Vec<Method>> {
    s.split(',').map(|m| Method::parse(m.trim())).collect()
}

fn build_experiment_config(args: ExperimentCli) -> CliResult<(ExperimentConfig, PathBuf)> {
    use robust_estim_cli::experiment::{KRule, KStarRule, ProblemKind, SweepAxis};

    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => experiment::preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("io error on {}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| CliError::InvalidArgs(format!("bad config: {e}")))?
        }
        (None, None) => experiment::preset_fig1a(),
    };
    // explicit flags override whatever the preset or config said
    if let Some(p) = &args.problem {
        cfg.problem = match p.as_str() {
            "regression" => ProblemKind::Regression,
            "ar-additive" => ProblemKind::ArAdditive,
            "ar-innovational" => ProblemKind::ArInnovational,
            other => return Err(CliError::InvalidArgs(format!("unknown problem {other:?}"))),
        };
    }
    if let Some(s) = &args.sweep {
        cfg.sweep = match s.as_str() {
            "n" => SweepAxis::N,
            "d" => SweepAxis::D,
            "sigma" => SweepAxis::Sigma,
            "kstar" => SweepAxis::KStar,
            other => return Err(CliError::InvalidArgs(format!("unknown sweep {other:?}"))),
        };
    }
    if let Some(v) = &args.values {
        cfg.values = parse_values(v)?;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(s) = args.sigma {
        cfg.sigma = s;
    }
    if let Some(ks) = args.kstar {
        cfg.k_star = KStarRule::Count(ks);
    }
    if let Some(f) = args.kstar_frac {
        cfg.k_star = KStarRule::Fraction(f);
    }
    if let Some(k) = args.k {
        cfg.k = KRule::Fixed(k);
    }
    if let Some(m) = &args.methods {
        cfg.methods = parse_methods(m)?;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.base_seed {
        cfg.base_seed = s;
    }
    Ok((cfg, args.out))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(GenCommand::Regression(common)) => {
            commands::cmd_gen_regression(&common.into_common()?)
        }
        Command::Gen(GenCommand::Ar {
            common,
            mode,
            burn_in,
        }) => commands::cmd_gen_ar(&common.into_common()?, &mode, burn_in),
        Command::Solve(args) => commands::cmd_solve(&args.into_args()?),
        Command::Experiment(args) => {
            let (cfg, out) = build_experiment_config(args)?;
            let rows = experiment::run_experiment(&cfg, experiment::thread_cap())?;
            let csv = experiment::rows_to_csv(&rows);
            std::fs::write(&out, csv)
                .map_err(|e| CliError::Io(format!("io error on {}: {e}", out.display())))?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Diagnose(DiagnoseCommand::Ssc {
            input,
            n,
            d,
            seed,
            kmax,
            group_size,
        }) => commands::cmd_diagnose_ssc(input.as_deref(), n, d, seed, kmax, group_size),
        Command::Diagnose(DiagnoseCommand::Moment {
            d,
            sigma,
            tau,
            lambda_norm,
            samples,
            seed,
        }) => commands::cmd_diagnose_moment(d, sigma, tau, lambda_norm, samples, seed),
        Command::Diagnose(DiagnoseCommand::Trace(args)) => {
            commands::cmd_diagnose_trace(&args.into_args()?)
        }
        Command::Plot(args) => {
            let text = std::fs::read_to_string(&args.input)
                .map_err(|e| CliError::Io(format!("io error on {}: {e}", args.input.display())))?;
            let lines = plot::median_lines(&text)?;
            let x_label = text
                .lines()
                .nth(1)
                .and_then(|l| l.split(',').next())
                .unwrap_or("sweep value")
                .to_string();
            let svg = plot::render_svg(&lines, args.log_log, args.width, args.height, &x_label)?;
            std::fs::write(&args.out, svg)
                .map_err(|e| CliError::Io(format!("io error on {}: {e}", args.out.display())))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
