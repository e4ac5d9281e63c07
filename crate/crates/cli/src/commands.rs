//! Implementations behind the `gen`, `solve` and `diagnose` subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;

use robust_estim::ar::{self, TimeSeriesRecord};
use robust_estim::crr::{solve_crr, solve_crr_traced};
use robust_estim::datagen::{self, CorruptionPlan, SignMode};
use robust_estim::diagnostics;
use robust_estim::fileio::{self, fmt_g17, TruthSidecar};
use robust_estim::problem::{ols, ClipPolicy, GroundTruthReg, RegressionProblem, SolverConfig};
use robust_estim::thresholding::group_partition;
use robust_estim::{Estimate, Termination};

use crate::error::{CliError, CliResult};
use crate::experiment::Method;

pub struct GenCommon {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub k_star: usize,
    pub low: f64,
    pub high: f64,
    pub sign: SignMode,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn parse_sign(s: &str) -> CliResult<SignMode> {
    match s {
        "positive" => Ok(SignMode::Positive),
        "symmetric" => Ok(SignMode::Symmetric),
        other => Err(CliError::InvalidArgs(format!(
            "unknown sign mode {other:?}"
        ))),
    }
}

pub fn parse_clip(s: &str) -> CliResult<ClipPolicy> {
    if s == "none" {
        return Ok(ClipPolicy::None);
    }
    if s == "auto" {
        return Ok(ClipPolicy::AutoMad { multiplier: None });
    }
    if let Some(m) = s.strip_prefix("auto:") {
        let mult: f64 = m
            .parse()
            .map_err(|_| CliError::InvalidArgs(format!("bad clip multiplier {m:?}")))?;
        return Ok(ClipPolicy::AutoMad {
            multiplier: Some(mult),
        });
    }
    if let Some(l) = s.strip_prefix("fixed:") {
        let level: f64 = l
            .parse()
            .map_err(|_| CliError::InvalidArgs(format!("bad clip level {l:?}")))?;
        return Ok(ClipPolicy::Fixed(level));
    }
    Err(CliError::InvalidArgs(format!(
        "unknown clip policy {s:?} (none | auto | auto:MULT | fixed:LEVEL)"
    )))
}

fn plan_of(args: &GenCommon) -> CorruptionPlan {
    CorruptionPlan {
        k_star: args.k_star,
        low: args.low,
        high: args.high,
        sign: args.sign,
        seed: args.seed,
    }
}

/// `gen regression`: writes `<out>.csv` and `<out>.truth.json`.
pub fn cmd_gen_regression(args: &GenCommon) -> CliResult<()> {
    let problem = datagen::gen_regression(args.n, args.d, args.sigma, &plan_of(args), args.seed)?;
    let data_path = args.out.with_extension("csv");
    fileio::write_problem_csv(&data_path, &problem)?;
    let sidecar = TruthSidecar::for_regression(problem.truth().expect("generated"), args.seed);
    let side_path = fileio::sidecar_path(&data_path);
    fileio::write_sidecar(&side_path, &sidecar)?;
    println!("{}", data_path.display());
    println!("{}", side_path.display());
    Ok(())
}

/// `gen ar`: writes `<out>.series` and `<out>.truth.json`.
pub fn cmd_gen_ar(args: &GenCommon, mode: &str, burn_in: usize) -> CliResult<()> {
    let record = match mode {
        "clean" => datagen::gen_ar_series(args.n, args.d, args.sigma, args.seed, burn_in)?,
        "additive" => {
            let clean = datagen::gen_ar_series(args.n, args.d, args.sigma, args.seed, burn_in)?;
            datagen::inject_additive(&clean, &plan_of(args))?
        }
        "innovational" => datagen::gen_ar_series_io(
            args.n,
            args.d,
            args.sigma,
            &plan_of(args),
            args.seed,
            burn_in,
        )?,
        other => {
            return Err(CliError::InvalidArgs(format!(
                "unknown mode {other:?} (clean | additive | innovational)"
            )))
        }
    };
    let data_path = args.out.with_extension("series");
    fileio::write_series(&data_path, &record)?;
    let sidecar = TruthSidecar::for_series(record.truth().expect("generated"), args.seed);
    let side_path = fileio::sidecar_path(&data_path);
    fileio::write_sidecar(&side_path, &sidecar)?;
    println!("{}", data_path.display());
    println!("{}", side_path.display());
    Ok(())
}

pub struct SolveArgs {
    pub input: PathBuf,
    pub truth: Option<PathBuf>,
    pub method: Method,
    pub k: Option<usize>,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub clip: ClipPolicy,
}

enum LoadedInput {
    Regression(RegressionProblem),
    Series(TimeSeriesRecord),
}

fn load_input(path: &Path, sidecar: Option<&TruthSidecar>) -> CliResult<LoadedInput> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("io error on {}: {e}", path.display())))?;
    if text.starts_with('#') {
        Ok(LoadedInput::Series(fileio::read_series(path)?))
    } else {
        let parsed = fileio::read_problem_csv(path)?;
        // a full ground truth needs the sidecar model plus the csv columns
        let truth = match (sidecar, parsed.b_star, parsed.eps) {
            (Some(sc), Some(b_star), Some(eps)) => Some(GroundTruthReg {
                w_star: sc.w_star_vector(),
                support: sc.support.clone(),
                sigma: sc.sigma,
                b_star,
                eps,
            }),
            _ => None,
        };
        Ok(LoadedInput::Regression(RegressionProblem::new(
            parsed.x, parsed.y, truth,
        )?))
    }
}

fn load_sidecar(args_truth: &Option<PathBuf>, input: &Path) -> CliResult<Option<TruthSidecar>> {
    match args_truth {
        Some(p) => Ok(Some(fileio::read_sidecar(p)?)),
        None => {
            let implied = fileio::sidecar_path(input);
            if implied.exists() {
                Ok(Some(fileio::read_sidecar(&implied)?))
            } else {
                Ok(None)
            }
        }
    }
}

fn default_k(method: Method, sidecar: Option<&TruthSidecar>) -> CliResult<usize> {
    let k_star = sidecar.map(|s| s.support.len()).ok_or_else(|| {
        CliError::InvalidArgs("no --k given and no truth sidecar to derive one from".into())
    })?;
    Ok(match method {
        Method::Ols => 0,
        // exact trimming wants the true count; thresholding solvers get slack
        Method::Oracle => k_star,
        _ => 2 * k_star,
    })
}

/// `solve`: run one method on one input file, print one CSV row
/// (`method,n,d,k,k_star,sigma,err_l2,iters,termination,wall_ms,seed`).
pub fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    let sidecar = load_sidecar(&args.truth, &args.input)?;
    let input = load_input(&args.input, sidecar.as_ref())?;
    let k = match args.k {
        Some(k) => k,
        None if args.method == Method::Ols => 0,
        None => default_k(args.method, sidecar.as_ref())?,
    };
    let config = SolverConfig {
        k,
        tol: args.tol,
        max_iters: args.max_iters,
        seed: args.seed,
        clip: args.clip,
    };

    let (n, d) = match &input {
        LoadedInput::Regression(p) => (p.len(), p.dim()),
        LoadedInput::Series(r) => (r.n(), r.order()),
    };
    let start = Instant::now();
    let est = run_solve(&input, args.method, &config)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let (err_l2, k_star_str, sigma_str, seed) = match &sidecar {
        Some(sc) => (
            fmt_g17((est.w.clone() - sc.w_star_vector()).norm()),
            sc.support.len().to_string(),
            fmt_g17(sc.sigma),
            sc.seed,
        ),
        None => (String::new(), String::new(), String::new(), args.seed),
    };
    println!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        args.method.name(),
        n,
        d,
        k,
        k_star_str,
        sigma_str,
        err_l2,
        est.iters,
        est.termination,
        fmt_g17(wall_ms),
        seed
    );
    Ok(())
}

fn run_solve(input: &LoadedInput, method: Method, config: &SolverConfig) -> CliResult<Estimate> {
    Ok(match (input, method) {
        (LoadedInput::Regression(p), Method::Crr) => solve_crr(p, config)?,
        (LoadedInput::Regression(p), Method::Ols) => {
            let w = ols(p.design(), p.responses())?;
            plain(w, p.len())
        }
        (LoadedInput::Regression(p), Method::Oracle) => {
            let out = diagnostics::oracle_trimmed_ls(p.design(), p.responses(), config.k)?;
            Estimate {
                w: out.w,
                b: out.b,
                iters: 0,
                termination: Termination::Converged,
                objective: out.objective,
            }
        }
        (LoadedInput::Regression(_), m) => {
            return Err(CliError::InvalidArgs(format!(
                "method {} requires a series input",
                m.name()
            )))
        }
        (LoadedInput::Series(r), Method::Crtse) => ar::solve_crtse(r, config)?,
        (LoadedInput::Series(r), Method::Ioard | Method::Crr) => ar::solve_ioard(r, config)?,
        (LoadedInput::Series(r), Method::Ols) => {
            let (x, y) = r.lagged_design()?;
            let n = y.len();
            plain(ols(&x, &y)?, n)
        }
        (LoadedInput::Series(r), Method::Oracle) => {
            let (x, y) = r.lagged_design()?;
            let out = diagnostics::oracle_trimmed_ls(&x, &y, config.k)?;
            Estimate {
                w: out.w,
                b: out.b,
                iters: 0,
                termination: Termination::Converged,
                objective: out.objective,
            }
        }
    })
}

fn plain(w: DVector<f64>, n: usize) -> Estimate {
    Estimate {
        w,
        b: DVector::zeros(n),
        iters: 0,
        termination: Termination::Converged,
        objective: f64::NAN,
    }
}

/// `diagnose ssc`: subset convexity/smoothness constants of a design, one
/// row per level.
pub fn cmd_diagnose_ssc(
    input: Option<&Path>,
    n: usize,
    d: usize,
    seed: u64,
    kmax: Option<usize>,
    group_size: Option<usize>,
) -> CliResult<()> {
    let x = match input {
        Some(p) => fileio::read_problem_csv(p)?.x,
        None => {
            let mut s = robust_estim::rng::Stream::new(seed, robust_estim::rng::DESIGN);
            let data: Vec<f64> = (0..n * d).map(|_| s.next_normal()).collect();
            nalgebra::DMatrix::from_column_slice(d, n, &data)
        }
    };
    let n = x.ncols();
    match group_size {
        None => {
            let kmax = kmax.unwrap_or(n).min(n);
            println!("k,lambda_k,Lambda_k");
            for k in 1..=kmax {
                let (lo, hi) = diagnostics::ssc_sss_exact(&x, k)?;
                println!("{k},{},{}", fmt_g17(lo), fmt_g17(hi));
            }
        }
        Some(g) => {
            let part = group_partition(n, g)?;
            let kmax = kmax.unwrap_or(part.group_count()).min(part.group_count());
            println!("k,lambda_k,Lambda_k");
            for k in 1..=kmax {
                let (lo, hi) = diagnostics::sgsc_sgss_exact(&x, k, &part)?;
                println!("{k},{},{}", fmt_g17(lo), fmt_g17(hi));
            }
        }
    }
    Ok(())
}

/// `diagnose moment`: Monte-Carlo vs quadrature comparison of the truncated
/// moment, one summary row.
pub fn cmd_diagnose_moment(
    d: usize,
    sigma: f64,
    tau: f64,
    lambda_norm: f64,
    samples: u64,
    seed: u64,
) -> CliResult<()> {
    let mut lambda = DVector::zeros(d);
    if d > 0 {
        lambda[0] = lambda_norm;
    }
    let mc = diagnostics::truncated_moment_mc(&lambda, sigma, tau, samples, seed)?;
    let (c_tau, quad) = diagnostics::truncated_moment_quadrature(&lambda, sigma, tau)?;
    let bound = diagnostics::moment_coefficient_bound(sigma, tau);

    let mc_norm = mc.estimate.norm();
    let quad_norm = quad.norm();
    let cosine = if mc_norm > 0.0 && quad_norm > 0.0 {
        (mc.estimate.dot(&quad) / (mc_norm * quad_norm)).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    let angle_deg = cosine.acos().to_degrees();
    // standard error of the estimate magnitude along the reference direction
    let se_mag = if quad_norm > 0.0 {
        let u = &quad / quad_norm;
        mc.std_errors
            .iter()
            .zip(u.iter())
            .map(|(se, ui)| (se * ui) * (se * ui))
            .sum::<f64>()
            .sqrt()
    } else {
        mc.std_errors.norm()
    };
    let within = ((mc_norm - quad_norm).abs() <= 3.0 * se_mag) as u8;
    println!("d,sigma,tau,lambda_norm,samples,c_tau,c_tau_bound,angle_deg,mc_magnitude,quad_magnitude,magnitude_se,within_3se");
    println!(
        "{d},{},{},{},{samples},{},{},{},{},{},{},{within}",
        fmt_g17(sigma),
        fmt_g17(tau),
        fmt_g17(lambda_norm),
        fmt_g17(c_tau),
        fmt_g17(bound),
        fmt_g17(angle_deg),
        fmt_g17(mc_norm),
        fmt_g17(quad_norm),
        fmt_g17(se_mag),
    );
    Ok(())
}

/// `diagnose trace`: per-iteration diagnostics of a ground-truth-aware CRR
/// solve.
pub fn cmd_diagnose_trace(args: &SolveArgs) -> CliResult<()> {
    if args.method != Method::Crr {
        return Err(CliError::InvalidArgs(
            "trace diagnostics are defined for the crr method".into(),
        ));
    }
    let sidecar = load_sidecar(&args.truth, &args.input)?;
    let input = load_input(&args.input, sidecar.as_ref())?;
    let LoadedInput::Regression(problem) = input else {
        return Err(CliError::InvalidArgs(
            "trace diagnostics need a regression input".into(),
        ));
    };
    let k = match args.k {
        Some(k) => k,
        None => default_k(Method::Crr, sidecar.as_ref())?,
    };
    let config = SolverConfig {
        k,
        tol: args.tol,
        max_iters: args.max_iters,
        seed: args.seed,
        clip: args.clip,
    };
    let (_, trace) = solve_crr_traced(&problem, &config)?;
    println!("iter,lambda_norm,md,fa,ci,b_err,objective");
    for row in &trace.rows {
        println!(
            "{},{},{},{},{},{},{}",
            row.iter,
            fmt_g17(row.lambda_norm),
            row.md,
            row.fa,
            row.ci,
            fmt_g17(row.b_err),
            fmt_g17(row.objective)
        );
    }
    Ok(())
}
