//! On-disk formats: series files, problem CSVs, truth sidecars, and the
//! numeric formatting they share.
//!
//! All numeric fields are printed with [`fmt_g17`], a `%.17g`-style
//! rendering (17 significant digits, trailing zeros trimmed, scientific
//! notation outside `1e-4 ..= 1e16`), which round-trips every finite `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ar::TimeSeriesRecord;
use crate::problem::{GroundTruthReg, RegressionProblem};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Domain(#[from] crate::error::Error),
}

pub type FileResult<T> = std::result::Result<T, FileError>;

fn io_err(path: &Path, source: std::io::Error) -> FileError {
    FileError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> FileError {
    FileError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// `%.17g`-style rendering of a double.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf".into() } else { "inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    const PREC: i32 = 17;
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp_str) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp_str.parse().expect("exponent digits");
    if !(-4..PREC).contains(&exp) {
        let mantissa = trim_trailing_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let prec = (PREC - 1 - exp).max(0) as usize;
        trim_trailing_zeros(&format!("{x:.prec$}")).to_string()
    }
}

fn trim_trailing_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_f64(path: &Path, token: &str) -> FileResult<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|e| parse_err(path, format!("bad number {token:?}: {e}")))
}

/// Write a series file: header `# d=<order> n=<n>`, one value per line in
/// time order `y_{-d+1} .. y_n`.
pub fn write_series(path: &Path, record: &TimeSeriesRecord) -> FileResult<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# d={} n={}", record.order(), record.n());
    for v in record.values() {
        let _ = writeln!(out, "{}", fmt_g17(*v));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read a series file back; the returned record carries no ground truth.
pub fn read_series(path: &Path) -> FileResult<TimeSeriesRecord> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty series file"))?;
    let rest = header
        .strip_prefix("# d=")
        .ok_or_else(|| parse_err(path, format!("bad header {header:?}")))?;
    let (d_str, n_str) = rest
        .split_once(" n=")
        .ok_or_else(|| parse_err(path, format!("bad header {header:?}")))?;
    let order: usize = d_str
        .trim()
        .parse()
        .map_err(|_| parse_err(path, format!("bad order {d_str:?}")))?;
    let n: usize = n_str
        .trim()
        .parse()
        .map_err(|_| parse_err(path, format!("bad length {n_str:?}")))?;
    let mut values = Vec::with_capacity(n + order);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_f64(path, line)?);
    }
    if values.len() != n + order {
        return Err(parse_err(
            path,
            format!("expected {} values, found {}", n + order, values.len()),
        ));
    }
    Ok(TimeSeriesRecord::new(values, order, None)?)
}

/// Write a regression problem as CSV. With ground truth the columns are
/// `x_1..x_d, y, b_star, eps`; without they stop at `y`.
pub fn write_problem_csv(path: &Path, problem: &RegressionProblem) -> FileResult<()> {
    let d = problem.dim();
    let n = problem.len();
    let mut out = String::new();
    for j in 1..=d {
        let _ = write!(out, "x_{j},");
    }
    match problem.truth() {
        Some(_) => out.push_str("y,b_star,eps\n"),
        None => out.push_str("y\n"),
    }
    for i in 0..n {
        for j in 0..d {
            let _ = write!(out, "{},", fmt_g17(problem.design()[(j, i)]));
        }
        let _ = write!(out, "{}", fmt_g17(problem.responses()[i]));
        if let Some(t) = problem.truth() {
            let _ = write!(out, ",{},{}", fmt_g17(t.b_star[i]), fmt_g17(t.eps[i]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// A regression problem parsed from CSV; corruption and noise columns are
/// present only when the file carried them.
pub struct ParsedProblem {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub b_star: Option<DVector<f64>>,
    pub eps: Option<DVector<f64>>,
}

pub fn read_problem_csv(path: &Path) -> FileResult<ParsedProblem> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty problem file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let d = cols.iter().take_while(|c| c.starts_with("x_")).count();
    if d == 0 || cols.get(d) != Some(&"y") {
        return Err(parse_err(path, format!("bad header {header:?}")));
    }
    let with_truth = cols.len() == d + 3 && cols[d + 1] == "b_star" && cols[d + 2] == "eps";
    if !with_truth && cols.len() != d + 1 {
        return Err(parse_err(path, format!("bad header {header:?}")));
    }

    let mut xs: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    let mut b_star = Vec::new();
    let mut eps = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(parse_err(
                path,
                format!("row with {} fields, expected {}", fields.len(), cols.len()),
            ));
        }
        for f in &fields[..d] {
            xs.push(parse_f64(path, f)?);
        }
        y.push(parse_f64(path, fields[d])?);
        if with_truth {
            b_star.push(parse_f64(path, fields[d + 1])?);
            eps.push(parse_f64(path, fields[d + 2])?);
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(parse_err(path, "no data rows"));
    }
    // rows hold points, the design stores them as columns
    let x = DMatrix::from_row_slice(n, d, &xs).transpose();
    Ok(ParsedProblem {
        x,
        y: DVector::from_vec(y),
        b_star: with_truth.then(|| DVector::from_vec(b_star)),
        eps: with_truth.then(|| DVector::from_vec(eps)),
    })
}

/// Generation metadata stored next to every synthetic instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub w_star: Vec<f64>,
    /// Corruption support: row indices (regression) or time indices `1..=n`
    /// (series).
    pub support: Vec<usize>,
    pub sigma: f64,
    pub seed: u64,
}

impl TruthSidecar {
    pub fn for_regression(truth: &GroundTruthReg, seed: u64) -> Self {
        TruthSidecar {
            w_star: truth.w_star.iter().copied().collect(),
            support: truth.support.clone(),
            sigma: truth.sigma,
            seed,
        }
    }

    pub fn for_series(truth: &crate::ar::GroundTruthTs, seed: u64) -> Self {
        TruthSidecar {
            w_star: truth.w_star.iter().copied().collect(),
            support: truth.e_star.iter().map(|&(t, _)| t).collect(),
            sigma: truth.sigma,
            seed,
        }
    }

    pub fn w_star_vector(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.w_star)
    }
}

pub fn write_sidecar(path: &Path, sidecar: &TruthSidecar) -> FileResult<()> {
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    fs::write(path, json).map_err(|e| io_err(path, e))
}

pub fn read_sidecar(path: &Path) -> FileResult<TruthSidecar> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}

/// Conventional sidecar path: `foo.csv` or `foo.series` -> `foo.truth.json`.
pub fn sidecar_path(data_path: &Path) -> std::path::PathBuf {
    data_path.with_extension("truth.json")
}
