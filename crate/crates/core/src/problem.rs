//! Shared domain types and the projection / least-squares primitives every
//! solver is built on.
//!
//! A regression instance is a design matrix `X` of shape `d x n` whose
//! *columns* are the covariate points, together with a response vector `y` of
//! length `n`. All solvers interact with the design only through the
//! orthogonal projector onto its row space,
//!
//! ```text
//! P_X = X^T (X X^T)^{-1} X,
//! ```
//!
//! which [`Projector`] represents. The `d x d` Gram matrix is factored once
//! (Cholesky); the inverse is never formed. For small instances
//! (`n <= DENSE_PROJECTOR_LIMIT`) the `n x n` projector is materialized so
//! repeated applications are a single mat-vec; above that it is applied
//! lazily as `X^T (Gram \ (X v))`, which is all the solvers need.

use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative cutoff on singular values below which a design is rejected.
pub const RANK_TOL: f64 = 1e-10;

/// Largest `n` for which the projector is materialized as a dense matrix.
pub const DENSE_PROJECTOR_LIMIT: usize = 5000;

/// Ground truth attached to a synthetic regression instance.
#[derive(Debug, Clone)]
pub struct GroundTruthReg {
    /// True coefficient vector, length `d`.
    pub w_star: DVector<f64>,
    /// True corruption vector, length `n`, exactly `k*`-sparse.
    pub b_star: DVector<f64>,
    /// Dense noise realization, length `n`.
    pub eps: DVector<f64>,
    /// Sorted corruption support; entries of `b_star` off it are zero.
    pub support: Vec<usize>,
    /// Noise standard deviation used to generate `eps`.
    pub sigma: f64,
}

impl GroundTruthReg {
    pub fn k_star(&self) -> usize {
        self.support.len()
    }
}

/// A linear regression instance: responses `y = X^T w* + b* + eps`.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    truth: Option<GroundTruthReg>,
}

impl RegressionProblem {
    /// `x` is `d x n` with points as columns. Requires `n >= d >= 1`; the
    /// rank of the design is checked later, at solve time.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, truth: Option<GroundTruthReg>) -> Result<Self> {
        let (d, n) = x.shape();
        if d < 1 || n < d {
            return Err(Error::InvalidSize(format!(
                "need n >= d >= 1, got d = {d}, n = {n}"
            )));
        }
        if y.len() != n {
            return Err(Error::InvalidSize(format!(
                "y has {} entries, design has {n} columns",
                y.len()
            )));
        }
        if let Some(t) = &truth {
            if t.w_star.len() != d || t.b_star.len() != n || t.eps.len() != n {
                return Err(Error::InvalidSize("ground truth shape mismatch".into()));
            }
        }
        Ok(RegressionProblem { x, y, truth })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn responses(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn truth(&self) -> Option<&GroundTruthReg> {
        self.truth.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How an AR series is clipped before estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClipPolicy {
    /// No clipping.
    None,
    /// Clamp every value to `[-level, level]`.
    Fixed(f64),
    /// Clamp to `multiplier * sigma_hat` where `sigma_hat` is the robust MAD
    /// scale of the first differences. A `None` multiplier means the default
    /// `3 * sqrt(2 ln n)`, which leaves clean Gaussian series untouched with
    /// high probability while bounding gross outliers.
    AutoMad { multiplier: Option<f64> },
}

impl Default for ClipPolicy {
    fn default() -> Self {
        ClipPolicy::AutoMad { multiplier: None }
    }
}

/// Solver knobs shared by the regression and time-series estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Thresholding parameter: entries (pointwise solvers) or groups
    /// (group solver) retained per iteration.
    pub k: usize,
    /// Stop once consecutive corruption iterates move less than this.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub clip: ClipPolicy,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        SolverConfig {
            k,
            ..Default::default()
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 0,
            tol: 1e-8,
            max_iters: 500,
            seed: 0,
            clip: ClipPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::MaxIters => write!(f, "max_iters"),
        }
    }
}

/// Result of a robust solve: recovered model, corruption estimate and the
/// value of the reduced objective `1/2 ||(I - P_X)(y - b)||^2` at the end.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub w: DVector<f64>,
    pub b: DVector<f64>,
    pub iters: usize,
    pub termination: Termination,
    pub objective: f64,
}

/// One row of a ground-truth-aware solve trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    /// `|| (X X^T)^{-1} X (b^t - b*) ||_2`, the model-space gap induced by
    /// the current corruption estimate.
    pub lambda_norm: f64,
    /// Missed detections: true corruption indices absent from `supp(b^t)`.
    pub md: usize,
    /// False alarms: estimated indices outside the true support.
    pub fa: usize,
    /// Correct identifications: `supp(b^t)` intersected with the truth.
    pub ci: usize,
    pub b_err: f64,
    pub objective: f64,
}

/// Per-iteration diagnostics for synthetic runs. Row 0 describes the all-zero
/// starting iterate.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticTrace {
    pub rows: Vec<TraceRow>,
}

/// The orthogonal projector onto the row space of a full-row-rank design.
pub struct Projector {
    x: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    dense: Option<DMatrix<f64>>,
}

impl Projector {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let sv = x.clone().svd(false, false).singular_values;
        let largest = sv.max();
        let smallest = sv.min();
        if smallest.is_nan() || smallest <= RANK_TOL * largest || largest == 0.0 {
            return Err(Error::RankDeficient {
                smallest,
                largest,
                tol: RANK_TOL,
            });
        }
        let gram = x * x.transpose();
        let chol = Cholesky::new(gram).ok_or(Error::RankDeficient {
            smallest,
            largest,
            tol: RANK_TOL,
        })?;
        let dense = if x.ncols() <= DENSE_PROJECTOR_LIMIT {
            Some(x.transpose() * chol.solve(x))
        } else {
            None
        };
        Ok(Projector {
            x: x.clone(),
            chol,
            dense,
        })
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn d(&self) -> usize {
        self.x.nrows()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `P_X v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.dense {
            Some(p) => p * v,
            None => self.x.transpose() * self.chol.solve(&(&self.x * v)),
        }
    }

    /// The iteration target `P_X b + (I - P_X) y`, computed as
    /// `y + P_X (b - y)` (one projector application).
    pub fn update_target(&self, y: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut t = self.apply(&(b - y));
        t += y;
        t
    }

    /// `(X X^T)^{-1} v` through the Cholesky factor.
    pub fn gram_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// Least-squares coefficients for responses `r`: `(X X^T)^{-1} X r`.
    pub fn solve_coeffs(&self, r: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(&(&self.x * r))
    }

    /// `1/2 || (I - P_X) r ||^2`.
    pub fn reduced_objective(&self, r: &DVector<f64>) -> f64 {
        let res = r - self.apply(r);
        0.5 * res.norm_squared()
    }

    /// The projector as an explicit `n x n` matrix (cached below the dense
    /// limit, built on demand above it).
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.dense {
            Some(p) => p.clone(),
            None => self.x.transpose() * self.chol.solve(&self.x),
        }
    }
}

/// The projector `P_X = X^T (X X^T)^{-1} X` as a dense `n x n` matrix.
///
/// Fails with [`Error::RankDeficient`] when the smallest singular value of
/// `X` is not above `RANK_TOL` times the largest.
pub fn projector(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(Projector::new(x)?.to_dense())
}

/// Ordinary least squares `(X X^T)^{-1} X y` via the Gram Cholesky factor.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    assert_eq!(x.ncols(), y.len(), "design/response length mismatch");
    Ok(Projector::new(x)?.solve_coeffs(y))
}
