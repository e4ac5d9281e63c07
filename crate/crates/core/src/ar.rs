//! Robust AR(d) estimation.
//!
//! Two estimators operate on a scalar series observed at times
//! `-d+1, ..., 0, 1, ..., n` (the first `d` values only seed the lags):
//!
//! * [`solve_crtse`] targets additive outliers. A single corrupted value
//!   pollutes `d + 1` consecutive regression rows, so the corruption vector
//!   of the lagged model is block sparse: the estimator clips the series,
//!   then runs the projected iteration with *group* hard thresholding over
//!   aligned blocks of size `d`.
//! * [`solve_ioard`] targets innovational outliers, which enter through the
//!   noise term and leave the corruption vector pointwise sparse: same
//!   iteration with pointwise hard thresholding, no clipping.
//!
//! Both stop when consecutive corruption iterates move less than the
//! configured tolerance and return `w = (X X^T)^{-1} X (y - b)`.

use nalgebra::{DMatrix, DVector};

use crate::crr::run_iht;
use crate::error::{Error, Result};
use crate::problem::{ClipPolicy, Estimate, Projector, SolverConfig};
use crate::thresholding::{group_hard_threshold, group_partition, hard_threshold};

/// Which corruption mechanism produced an observed series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionMode {
    Clean,
    Additive,
    Innovational,
}

impl std::fmt::Display for CorruptionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorruptionMode::Clean => write!(f, "clean"),
            CorruptionMode::Additive => write!(f, "additive"),
            CorruptionMode::Innovational => write!(f, "innovational"),
        }
    }
}

/// Ground truth attached to a synthetic series.
#[derive(Debug, Clone)]
pub struct GroundTruthTs {
    pub w_star: DVector<f64>,
    pub sigma: f64,
    pub mode: CorruptionMode,
    /// Injected corruptions as `(t, value)` with `t` in `1..=n`.
    pub e_star: Vec<(usize, f64)>,
    /// The uncorrupted series, same indexing as the observed one.
    pub clean_values: Vec<f64>,
}

impl GroundTruthTs {
    pub fn k_star(&self) -> usize {
        self.e_star.len()
    }
}

/// A scalar time series of order `d`: `n + d` values, the first `d` of which
/// are the pre-sample lags `y_{-d+1} .. y_0`.
#[derive(Debug, Clone)]
pub struct TimeSeriesRecord {
    values: Vec<f64>,
    order: usize,
    truth: Option<GroundTruthTs>,
}

impl TimeSeriesRecord {
    /// Requires `n >= d + 1`, i.e. at least `2d + 1` stored values.
    pub fn new(values: Vec<f64>, order: usize, truth: Option<GroundTruthTs>) -> Result<Self> {
        assert!(order >= 1, "series order must be at least 1");
        let min = 2 * order + 1;
        if values.len() < min {
            return Err(Error::TooShort {
                len: values.len(),
                min,
            });
        }
        Ok(TimeSeriesRecord {
            values,
            order,
            truth,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of modeled observations (`t = 1..=n`).
    pub fn n(&self) -> usize {
        self.values.len() - self.order
    }

    pub fn truth(&self) -> Option<&GroundTruthTs> {
        self.truth.as_ref()
    }

    /// Value at time `t`, `t` ranging over `-d+1 ..= n`.
    pub fn value_at(&self, t: i64) -> f64 {
        let idx = t + self.order as i64 - 1;
        self.values[idx as usize]
    }

    pub fn lagged_design(&self) -> Result<(DMatrix<f64>, DVector<f64>)> {
        build_lagged_design(&self.values, self.order)
    }
}

/// Clamp every value to `[-level, level]`.
pub fn clip_series(values: &[f64], level: f64) -> Result<Vec<f64>> {
    if level.is_nan() || level <= 0.0 {
        return Err(Error::InvalidClipLevel(level));
    }
    Ok(values.iter().map(|&v| v.clamp(-level, level)).collect())
}

/// Robust scale of the innovations: `1.4826 * MAD(first differences) / sqrt(2)`.
/// The first difference of a series with variance-`sigma^2` innovations has a
/// scale of at least `sigma * sqrt(2)`, and the MAD ignores the sparse
/// corruption spikes.
pub fn estimate_sigma_mad(values: &[f64]) -> f64 {
    assert!(values.len() >= 3, "need at least 3 values to difference");
    let mut diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median_in_place(&mut diffs);
    let mut devs: Vec<f64> = diffs.iter().map(|&x| (x - med).abs()).collect();
    1.4826 * median_in_place(&mut devs) / std::f64::consts::SQRT_2
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let mid = v.len() / 2;
    v.sort_by(f64::total_cmp);
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Resolve a clip policy into a concrete level (`None` when no clipping).
pub fn resolve_clip_level(policy: &ClipPolicy, values: &[f64], n: usize) -> Option<f64> {
    match policy {
        ClipPolicy::None => None,
        ClipPolicy::Fixed(level) => Some(*level),
        ClipPolicy::AutoMad { multiplier } => {
            let mult = multiplier.unwrap_or_else(|| 3.0 * (2.0 * (n as f64).ln()).sqrt());
            Some(mult * estimate_sigma_mad(values))
        }
    }
}

/// Lagged regression form of a series: column `i` of `X` holds the lags
/// `(y_{i-1}, ..., y_{i-d})`, responses are `(y_1, ..., y_n)`.
pub fn build_lagged_design(values: &[f64], order: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    assert!(order >= 1, "series order must be at least 1");
    if values.len() < order + 1 {
        return Err(Error::TooShort {
            len: values.len(),
            min: order + 1,
        });
    }
    let n = values.len() - order;
    let x = DMatrix::from_fn(order, n, |r, c| values[order - 1 - r + c]);
    let y = DVector::from_fn(n, |i, _| values[order + i]);
    Ok((x, y))
}

/// Group-thresholding parameter matching a record's true corruption count:
/// an additive outlier can straddle two aligned groups, so `k = 2 k*`.
pub fn default_group_k(record: &TimeSeriesRecord) -> Option<usize> {
    record.truth().map(|t| 2 * t.k_star())
}

fn finish(
    projector: &Projector,
    y: &DVector<f64>,
    b: DVector<f64>,
    iters: usize,
    termination: crate::problem::Termination,
) -> Estimate {
    let residual = y - &b;
    let w = projector.solve_coeffs(&residual);
    let objective = projector.reduced_objective(&residual);
    Estimate {
        w,
        b,
        iters,
        termination,
        objective,
    }
}

/// Robust AR(d) estimation under additive outliers: clip, build the lagged
/// design on the clipped values, iterate the group-thresholded update.
///
/// When the group size does not divide the sample count the series is
/// trimmed from the front to the largest usable length (the aligned groups
/// require `d | n`); the dropped values still serve as lags.
pub fn solve_crtse(record: &TimeSeriesRecord, config: &SolverConfig) -> Result<Estimate> {
    let d = record.order();
    let clipped = match resolve_clip_level(&config.clip, record.values(), record.n()) {
        Some(level) => clip_series(record.values(), level)?,
        None => record.values().to_vec(),
    };
    let n_full = record.n();
    let n_used = (n_full / d) * d;
    if n_used == 0 {
        return Err(Error::TooShort {
            len: record.values().len(),
            min: 2 * d,
        });
    }
    let values = &clipped[clipped.len() - (n_used + d)..];
    let part = group_partition(n_used, d)?;
    if config.k > part.group_count() {
        return Err(Error::InvalidK {
            k: config.k,
            max: part.group_count(),
        });
    }
    let (x, y) = build_lagged_design(values, d)?;
    let projector = Projector::new(&x)?;
    let (b, iters, termination) = run_iht(
        &projector,
        &y,
        config,
        |target| group_hard_threshold(target, config.k, &part),
        |_, _| {},
    )?;
    Ok(finish(&projector, &y, b, iters, termination))
}

/// Robust AR(d) estimation under innovational outliers: pointwise hard
/// thresholding on the lagged design, no clipping.
///
/// The stop rule is the same corruption-movement test as the other solvers;
/// a residual-norm test would never fire under nonzero noise.
pub fn solve_ioard(record: &TimeSeriesRecord, config: &SolverConfig) -> Result<Estimate> {
    let (x, y) = record.lagged_design()?;
    let n = y.len();
    if config.k > n {
        return Err(Error::InvalidK {
            k: config.k,
            max: n,
        });
    }
    let projector = Projector::new(&x)?;
    let (b, iters, termination) = run_iht(
        &projector,
        &y,
        config,
        |target| hard_threshold(target, config.k),
        |_, _| {},
    )?;
    Ok(finish(&projector, &y, b, iters, termination))
}
