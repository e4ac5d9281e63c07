//! Sweep experiments: for every (sweep value, trial) cell, generate one
//! seeded instance and run every configured method on it, collecting one CSV
//! row per solve.
//!
//! Cell seeds derive injectively from `(base_seed, sweep value, trial)`, so
//! no two cells share a generator stream and all methods within a cell see
//! the same instance. Rows are buffered per cell and emitted sorted by
//! `(sweep_value, trial, method)`, so the output does not depend on the
//! worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use robust_estim::ar::{self, TimeSeriesRecord};
use robust_estim::crr::solve_crr;
use robust_estim::datagen::{self, CorruptionPlan, SignMode};
use robust_estim::diagnostics::{self, oracle_trimmed_ls};
use robust_estim::fileio::fmt_g17;
use robust_estim::problem::{ols, SolverConfig};
use robust_estim::rng::derive_seed;
use robust_estim::Estimate;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Regression,
    ArAdditive,
    ArInnovational,
}

impl ProblemKind {
    pub fn is_series(self) -> bool {
        !matches!(self, ProblemKind::Regression)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    N,
    D,
    Sigma,
    KStar,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::D => "d",
            SweepAxis::Sigma => "sigma",
            SweepAxis::KStar => "k_star",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KStarRule {
    /// Fixed corruption count.
    Count(usize),
    /// Corruption count as a fraction of n, rounded down.
    Fraction(f64),
}

impl KStarRule {
    fn resolve(self, n: usize) -> usize {
        match self {
            KStarRule::Count(c) => c,
            KStarRule::Fraction(f) => (f * n as f64).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    /// Threshold at twice the true corruption count, scaled per method:
    /// group solvers use `2 k*` groups, pointwise solvers on additive series
    /// use `2 k* d` entries (a spiked value pollutes `d + 1` rows).
    TwiceKStar,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Crr,
    Crtse,
    Ioard,
    Ols,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Crr => "crr",
            Method::Crtse => "crtse",
            Method::Ioard => "ioard",
            Method::Ols => "ols",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> CliResult<Method> {
        match s {
            "crr" => Ok(Method::Crr),
            "crtse" => Ok(Method::Crtse),
            "ioard" => Ok(Method::Ioard),
            "ols" => Ok(Method::Ols),
            "oracle" => Ok(Method::Oracle),
            other => Err(CliError::InvalidArgs(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub sweep: SweepAxis,
    pub values: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub k_star: KStarRule,
    pub k: KRule,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_low")]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
    #[serde(default = "default_sign")]
    pub sign: SignMode,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_low() -> f64 {
    10.0
}
fn default_high() -> f64 {
    20.0
}
fn default_sign() -> SignMode {
    SignMode::Positive
}
fn default_burn_in() -> usize {
    datagen::DEFAULT_BURN_IN
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    500
}

/// Preset reproducing the regression error-vs-n sweep: five sample sizes,
/// 2% corruption, thresholding at twice the corruption count.
pub fn preset_fig1a() -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemKind::Regression,
        sweep: SweepAxis::N,
        values: vec![1000.0, 2000.0, 4000.0, 8000.0, 16000.0],
        n: 1000,
        d: 10,
        sigma: 1.0,
        k_star: KStarRule::Fraction(0.02),
        k: KRule::TwiceKStar,
        methods: vec![Method::Crr, Method::Ols],
        trials: 20,
        base_seed: 1729,
        low: default_low(),
        high: default_high(),
        sign: default_sign(),
        burn_in: default_burn_in(),
        tol: default_tol(),
        max_iters: default_max_iters(),
    }
}

/// Preset reproducing the additive-outlier AR sweep: four sample sizes,
/// one corruption per 200 points, group thresholding at twice that.
pub fn preset_fig2a() -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemKind::ArAdditive,
        sweep: SweepAxis::N,
        values: vec![1000.0, 2000.0, 4000.0, 8000.0],
        n: 1000,
        d: 5,
        sigma: 1.0,
        k_star: KStarRule::Fraction(0.005),
        k: KRule::TwiceKStar,
        methods: vec![Method::Crtse, Method::Ols],
        trials: 50,
        base_seed: 1729,
        low: default_low(),
        high: default_high(),
        sign: default_sign(),
        burn_in: default_burn_in(),
        tol: default_tol(),
        max_iters: default_max_iters(),
    }
}

pub fn preset(name: &str) -> CliResult<ExperimentConfig> {
    match name {
        "fig1a" => Ok(preset_fig1a()),
        "fig2a" => Ok(preset_fig2a()),
        other => Err(CliError::InvalidArgs(format!("unknown preset {other:?}"))),
    }
}

/// Parameters of one experiment cell after the sweep value is applied.
#[derive(Debug, Clone, Copy)]
pub struct CellParams {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub k_star: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub sweep_param: &'static str,
    pub sweep_value: f64,
    pub trial: usize,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub k_star: usize,
    pub sigma: f64,
    pub err_l2: Option<f64>,
    pub iters: usize,
    pub termination: String,
    pub wall_ms: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "sweep_param,sweep_value,trial,method,n,d,k,k_star,sigma,err_l2,iters,termination,wall_ms,seed";

impl Row {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.sweep_param,
            fmt_g17(self.sweep_value),
            self.trial,
            self.method.name(),
            self.n,
            self.d,
            self.k,
            self.k_star,
            fmt_g17(self.sigma),
            self.err_l2.map(fmt_g17).unwrap_or_default(),
            self.iters,
            self.termination,
            fmt_g17(self.wall_ms),
            self.seed
        )
    }
}

impl ExperimentConfig {
    pub fn cell_params(&self, value: f64, trial: usize) -> CellParams {
        let mut n = self.n;
        let mut d = self.d;
        let mut sigma = self.sigma;
        let mut k_star_rule = self.k_star;
        match self.sweep {
            SweepAxis::N => n = value as usize,
            SweepAxis::D => d = value as usize,
            SweepAxis::Sigma => sigma = value,
            SweepAxis::KStar => k_star_rule = KStarRule::Count(value as usize),
        }
        CellParams {
            n,
            d,
            sigma,
            k_star: k_star_rule.resolve(n),
            seed: derive_seed(self.base_seed, &[value.to_bits(), trial as u64]),
        }
    }

    // Thresholding parameter for one method in one cell.
    fn method_k(&self, method: Method, cell: &CellParams) -> usize {
        if method == Method::Ols {
            return 0;
        }
        match self.k {
            KRule::Fixed(k) => k,
            KRule::TwiceKStar => match (self.problem, method) {
                (_, Method::Crtse) => 2 * cell.k_star,
                // pointwise methods on additive series must cover the
                // block support of a spiked value
                (ProblemKind::ArAdditive, Method::Crr | Method::Oracle) => 2 * cell.k_star * cell.d,
                _ => 2 * cell.k_star,
            },
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.values.is_empty() {
            return Err(CliError::InvalidArgs(
                "sweep values must be nonempty".into(),
            ));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::InvalidArgs(
                "sweep values must be strictly increasing".into(),
            ));
        }
        if self.trials < 1 {
            return Err(CliError::InvalidArgs("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::InvalidArgs("methods must be nonempty".into()));
        }
        for m in &self.methods {
            let series_only = matches!(m, Method::Crtse | Method::Ioard);
            if series_only && !self.problem.is_series() {
                return Err(CliError::InvalidArgs(format!(
                    "method {} requires a series problem",
                    m.name()
                )));
            }
        }
        if self.methods.contains(&Method::Oracle) {
            for &v in &self.values {
                let cell = self.cell_params(v, 0);
                let k = self.method_k(Method::Oracle, &cell);
                diagnostics::enumeration_guard(cell.n, k)
                    .map_err(|e| CliError::InvalidArgs(e.to_string()))?;
            }
        }
        Ok(())
    }
}

fn solver_config(
    &ExperimentConfig { tol, max_iters, .. }: &ExperimentConfig,
    k: usize,
) -> SolverConfig {
    SolverConfig {
        k,
        tol,
        max_iters,
        ..Default::default()
    }
}

enum Instance {
    Regression(robust_estim::RegressionProblem),
    Series(TimeSeriesRecord),
}

fn generate(config: &ExperimentConfig, cell: &CellParams) -> CliResult<Instance> {
    let plan = CorruptionPlan {
        k_star: cell.k_star,
        low: config.low,
        high: config.high,
        sign: config.sign,
        seed: cell.seed,
    };
    Ok(match config.problem {
        ProblemKind::Regression => Instance::Regression(datagen::gen_regression(
            cell.n, cell.d, cell.sigma, &plan, cell.seed,
        )?),
        ProblemKind::ArAdditive => {
            let clean =
                datagen::gen_ar_series(cell.n, cell.d, cell.sigma, cell.seed, config.burn_in)?;
            Instance::Series(datagen::inject_additive(&clean, &plan)?)
        }
        ProblemKind::ArInnovational => Instance::Series(datagen::gen_ar_series_io(
            cell.n,
            cell.d,
            cell.sigma,
            &plan,
            cell.seed,
            config.burn_in,
        )?),
    })
}

fn run_method(
    config: &ExperimentConfig,
    instance: &Instance,
    method: Method,
    k: usize,
) -> robust_estim::Result<(Estimate, nalgebra::DVector<f64>)> {
    match instance {
        Instance::Regression(problem) => {
            let truth = problem.truth().expect("synthetic instance").w_star.clone();
            let est = match method {
                Method::Crr => solve_crr(problem, &solver_config(config, k))?,
                Method::Ols => {
                    let w = ols(problem.design(), problem.responses())?;
                    plain_estimate(w, problem.len())
                }
                Method::Oracle => {
                    let out = oracle_trimmed_ls(problem.design(), problem.responses(), k)?;
                    Estimate {
                        w: out.w,
                        b: out.b,
                        iters: 0,
                        termination: robust_estim::Termination::Converged,
                        objective: out.objective,
                    }
                }
                Method::Crtse | Method::Ioard => unreachable!("validated earlier"),
            };
            Ok((est, truth))
        }
        Instance::Series(record) => {
            let truth = record.truth().expect("synthetic instance").w_star.clone();
            let est = match method {
                Method::Crtse => ar::solve_crtse(record, &solver_config(config, k))?,
                Method::Ioard | Method::Crr => ar::solve_ioard(record, &solver_config(config, k))?,
                Method::Ols => {
                    let (x, y) = record.lagged_design()?;
                    let w = ols(&x, &y)?;
                    plain_estimate(w, y.len())
                }
                Method::Oracle => {
                    let (x, y) = record.lagged_design()?;
                    let out = oracle_trimmed_ls(&x, &y, k)?;
                    Estimate {
                        w: out.w,
                        b: out.b,
                        iters: 0,
                        termination: robust_estim::Termination::Converged,
                        objective: out.objective,
                    }
                }
            };
            Ok((est, truth))
        }
    }
}

fn plain_estimate(w: nalgebra::DVector<f64>, n: usize) -> Estimate {
    Estimate {
        w,
        b: nalgebra::DVector::zeros(n),
        iters: 0,
        termination: robust_estim::Termination::Converged,
        objective: f64::NAN,
    }
}

fn run_cell(config: &ExperimentConfig, value: f64, trial: usize) -> Vec<Row> {
    let cell = config.cell_params(value, trial);
    let base_row = |method: Method, k: usize| Row {
        sweep_param: config.sweep.name(),
        sweep_value: value,
        trial,
        method,
        n: cell.n,
        d: cell.d,
        k,
        k_star: cell.k_star,
        sigma: cell.sigma,
        err_l2: None,
        iters: 0,
        termination: "failed".into(),
        wall_ms: 0.0,
        seed: cell.seed,
    };
    let instance = match generate(config, &cell) {
        Ok(i) => i,
        Err(_) => {
            // generation failure poisons every method row of the cell
            return config
                .methods
                .iter()
                .map(|&m| base_row(m, config.method_k(m, &cell)))
                .collect();
        }
    };
    config
        .methods
        .iter()
        .map(|&method| {
            let k = config.method_k(method, &cell);
            let mut row = base_row(method, k);
            let start = Instant::now();
            match run_method(config, &instance, method, k) {
                Ok((est, w_star)) => {
                    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                    row.err_l2 = Some((est.w - w_star).norm());
                    row.iters = est.iters;
                    row.termination = est.termination.to_string();
                }
                Err(_) => {
                    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                }
            }
            row
        })
        .collect()
}

/// Worker-pool size: `ROBUST_ESTIM_THREADS` if set, otherwise the available
/// parallelism.
pub fn thread_cap() -> usize {
    match std::env::var("ROBUST_ESTIM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        Some(t) if t >= 1 => t,
        _ => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

/// Run the full sweep on `threads` workers. The returned rows are sorted by
/// `(sweep_value, trial, method)` and do not depend on the worker count.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> CliResult<Vec<Row>> {
    config.validate()?;
    let cells: Vec<(f64, usize)> = config
        .values
        .iter()
        .flat_map(|&v| (0..config.trials).map(move |t| (v, t)))
        .collect();

    let mut results: Vec<Vec<Row>> = if threads <= 1 {
        cells.iter().map(|&(v, t)| run_cell(config, v, t)).collect()
    } else {
        let slots: Vec<Mutex<Vec<Row>>> = cells.iter().map(|_| Mutex::new(Vec::new())).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..threads.min(cells.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= cells.len() {
                        break;
                    }
                    let (v, t) = cells[i];
                    *slots[i].lock().unwrap() = run_cell(config, v, t);
                });
            }
        });
        slots.into_iter().map(|m| m.into_inner().unwrap()).collect()
    };

    let mut rows: Vec<Row> = results.drain(..).flatten().collect();
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.trial.cmp(&b.trial))
            .then(a.method.name().cmp(b.method.name()))
    });
    Ok(rows)
}

/// Render rows as the documented single-header CSV.
pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Median of the `err_l2` values for one method at one sweep value.
pub fn median_err(rows: &[Row], method: Method, sweep_value: f64) -> Option<f64> {
    let mut errs: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && r.sweep_value == sweep_value)
        .filter_map(|r| r.err_l2)
        .collect();
    if errs.is_empty() {
        return None;
    }
    errs.sort_by(f64::total_cmp);
    let mid = errs.len() / 2;
    Some(if errs.len() % 2 == 1 {
        errs[mid]
    } else {
        0.5 * (errs[mid - 1] + errs[mid])
    })
}
