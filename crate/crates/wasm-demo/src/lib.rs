//! Browser bindings for the interactive demo page. Every export returns a
//! JSON string; errors come back as `{"error": "..."}` so the page can show
//! them inline.

use nalgebra::DVector;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use robust_estim::ar;
use robust_estim::crr::solve_crr_traced;
use robust_estim::datagen::{self, CorruptionPlan, SignMode};
use robust_estim::problem::{ols, SolverConfig};
use robust_estim::spectral;
use robust_estim::thresholding::group_partition;

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

fn err_json(message: impl std::fmt::Display) -> String {
    to_json(&serde_json::json!({ "error": message.to_string() }))
}

#[derive(Serialize)]
struct ArDemoResponse {
    d: usize,
    n: usize,
    /// Observed series at times 1..=n (lags omitted).
    observed: Vec<f64>,
    clean: Vec<f64>,
    /// True corruption times (1-based).
    outliers: Vec<usize>,
    /// Times covered by the detected corruption groups (1-based).
    detected: Vec<usize>,
    w_true: Vec<f64>,
    w_crtse: Vec<f64>,
    w_ols: Vec<f64>,
    err_crtse: f64,
    err_ols: f64,
    iters: usize,
}

/// Generate an additive-outlier AR(d) series, estimate it robustly and with
/// plain least squares, and report both fits plus the detected outliers.
#[wasm_bindgen]
pub fn ar_outlier_demo(
    n: usize,
    d: usize,
    sigma: f64,
    k_star: usize,
    magnitude: f64,
    seed: u32,
) -> String {
    let run = || -> Result<ArDemoResponse, robust_estim::Error> {
        let seed = seed as u64;
        let clean = datagen::gen_ar_series(n, d, sigma, seed, datagen::DEFAULT_BURN_IN)?;
        let plan = CorruptionPlan {
            k_star,
            low: magnitude,
            high: magnitude * 2.0,
            sign: SignMode::Positive,
            seed,
        };
        let record = datagen::inject_additive(&clean, &plan)?;
        let truth = record.truth().expect("synthetic record").clone();

        let config = SolverConfig::new(2 * k_star);
        let est = ar::solve_crtse(&record, &config)?;
        let (x, y) = record.lagged_design()?;
        let w_ols = ols(&x, &y)?;

        // map the group support of b back to original time indices
        let n_used = est.b.len();
        let drop = record.n() - n_used;
        let part = group_partition(n_used, d)?;
        let mut detected = Vec::new();
        for g in 0..part.group_count() {
            if part.range(g).any(|i| est.b[i] != 0.0) {
                detected.extend(part.range(g).map(|i| i + 1 + drop));
            }
        }

        let values = record.values();
        Ok(ArDemoResponse {
            d,
            n: record.n(),
            observed: values[d..].to_vec(),
            clean: truth.clean_values[d..].to_vec(),
            outliers: truth.e_star.iter().map(|&(t, _)| t).collect(),
            detected,
            w_true: truth.w_star.iter().copied().collect(),
            w_crtse: est.w.iter().copied().collect(),
            w_ols: w_ols.iter().copied().collect(),
            err_crtse: (&est.w - &truth.w_star).norm(),
            err_ols: (&w_ols - &truth.w_star).norm(),
            iters: est.iters,
        })
    };
    match run() {
        Ok(resp) => to_json(&resp),
        Err(e) => err_json(e),
    }
}

#[derive(Serialize)]
struct TraceDemoResponse {
    n: usize,
    d: usize,
    k_star: usize,
    rows: Vec<TraceRowOut>,
    err_crr: f64,
    err_ols: f64,
}

#[derive(Serialize)]
struct TraceRowOut {
    iter: usize,
    lambda_norm: f64,
    md: usize,
    fa: usize,
    ci: usize,
    b_err: f64,
}

/// Corrupted regression instance: per-iteration support discovery of the
/// thresholding solver, with the least-squares error as a reference.
#[wasm_bindgen]
pub fn crr_trace_demo(n: usize, d: usize, sigma: f64, k_star: usize, seed: u32) -> String {
    let run = || -> Result<TraceDemoResponse, robust_estim::Error> {
        let seed = seed as u64;
        let plan = CorruptionPlan::new(k_star, seed);
        let problem = datagen::gen_regression(n, d, sigma, &plan, seed)?;
        let truth = problem.truth().expect("synthetic instance").clone();
        let config = SolverConfig::new(2 * k_star);
        let (est, trace) = solve_crr_traced(&problem, &config)?;
        let w_ols = ols(problem.design(), problem.responses())?;
        Ok(TraceDemoResponse {
            n,
            d,
            k_star,
            rows: trace
                .rows
                .iter()
                .map(|r| TraceRowOut {
                    iter: r.iter,
                    lambda_norm: r.lambda_norm,
                    md: r.md,
                    fa: r.fa,
                    ci: r.ci,
                    b_err: r.b_err,
                })
                .collect(),
            err_crr: (&est.w - &truth.w_star).norm(),
            err_ols: (&w_ols - &truth.w_star).norm(),
        })
    };
    match run() {
        Ok(resp) => to_json(&resp),
        Err(e) => err_json(e),
    }
}

#[derive(Serialize)]
struct SpectralResponse {
    stationary: bool,
    omega: Vec<f64>,
    rho: Vec<f64>,
    rho_max: f64,
    rho_min: f64,
    var_bound: f64,
}

/// Spectral density of an AR process over `[0, 2pi)`, with its extrema and
/// the companion VAR bound. `w_csv` holds comma-separated coefficients.
#[wasm_bindgen]
pub fn spectral_curve(w_csv: String, sigma: f64) -> String {
    let coeffs: Result<Vec<f64>, _> = w_csv.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let coeffs = match coeffs {
        Ok(c) if !c.is_empty() => c,
        _ => return err_json("coefficients must be comma-separated numbers"),
    };
    let w = DVector::from_vec(coeffs);
    if !spectral::stationarity_check(&w) {
        return to_json(&serde_json::json!({
            "stationary": false,
            "error": "non-stationary coefficients (companion spectral radius >= 1)"
        }));
    }
    let run = || -> Result<SpectralResponse, robust_estim::Error> {
        let points = 512;
        let mut omega = Vec::with_capacity(points);
        let mut rho = Vec::with_capacity(points);
        for i in 0..points {
            let om = std::f64::consts::TAU * i as f64 / points as f64;
            omega.push(om);
            rho.push(spectral::spectral_density(&w, sigma, om)?);
        }
        let summary = spectral::summarize(&w, sigma, spectral::DEFAULT_GRID_SIZE)?;
        Ok(SpectralResponse {
            stationary: true,
            omega,
            rho,
            rho_max: summary.rho_max,
            rho_min: summary.rho_min,
            var_bound: summary.var_bound,
        })
    };
    match run() {
        Ok(resp) => to_json(&resp),
        Err(e) => err_json(e),
    }
}

/// Quick sanity that the instance sizes the page offers stay responsive.
#[wasm_bindgen]
pub fn version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}
