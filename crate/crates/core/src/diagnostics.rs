//! Oracles and property checkers: exact subset-convexity constants, the
//! brute-force trimmed least squares oracle, Monte-Carlo and quadrature
//! routes to the truncated-moment identity, and evaluable bound formulas.
//!
//! Everything here exists to *check* the estimators, so the expensive paths
//! are guarded enumerations (at most [`ENUMERATION_LIMIT`] supports) and the
//! bound formulas are soft diagnostics: they never gate a solver.

use nalgebra::{linalg::Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{Projector, RANK_TOL};
use crate::rng::{self, Stream};
use crate::thresholding::GroupPartition;

/// Cap on the number of enumerated supports in the exact routines.
pub const ENUMERATION_LIMIT: f64 = 1e6;

// Number of k-subsets of an n-set, saturating; None above the guard.
fn combinations_within_guard(n: usize, k: usize) -> Option<f64> {
    if k > n {
        return Some(0.0);
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
        if acc > ENUMERATION_LIMIT {
            return None;
        }
    }
    Some(acc)
}

/// Check that enumerating the k-subsets of an n-set stays under the guard.
pub fn enumeration_guard(n: usize, k: usize) -> Result<()> {
    match combinations_within_guard(n, k) {
        Some(_) => Ok(()),
        None => Err(Error::TooLarge {
            combinations: binomial_approx(n, k),
            limit: ENUMERATION_LIMIT,
        }),
    }
}

fn binomial_approx(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
        if !acc.is_finite() {
            return f64::INFINITY;
        }
    }
    acc
}

// Visit every k-subset of [0, n) in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // advance: rightmost position that can still move
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

// Extreme eigenvalues of sum_{i in S} x_i x_i^T for the given columns.
fn subset_gram_extremes(x: &DMatrix<f64>, cols: &[usize]) -> (f64, f64) {
    let d = x.nrows();
    let mut gram = DMatrix::zeros(d, d);
    for &i in cols {
        let col = x.column(i);
        gram.syger(1.0, &col, &col, 1.0);
    }
    // syger maintains the lower triangle only
    gram.fill_upper_triangle_with_lower_triangle();
    let eig = gram.symmetric_eigen().eigenvalues;
    (eig.min(), eig.max())
}

/// Exact subset strong convexity / smoothness constants at level `k`: the
/// extreme eigenvalues of `X_S X_S^T` over every support of size `k`.
pub fn ssc_sss_exact(x: &DMatrix<f64>, k: usize) -> Result<(f64, f64)> {
    let n = x.ncols();
    if k < 1 || k > n {
        return Err(Error::InvalidArgs(format!("k = {k} outside 1..={n}")));
    }
    enumeration_guard(n, k)?;
    let mut lambda = f64::INFINITY;
    let mut cap = f64::NEG_INFINITY;
    for_each_combination(n, k, |cols| {
        let (lo, hi) = subset_gram_extremes(x, cols);
        lambda = lambda.min(lo);
        cap = cap.max(hi);
    });
    Ok((lambda, cap))
}

/// Group analogue of [`ssc_sss_exact`]: extrema over unions of `k` aligned
/// groups.
pub fn sgsc_sgss_exact(x: &DMatrix<f64>, k: usize, part: &GroupPartition) -> Result<(f64, f64)> {
    assert_eq!(x.ncols(), part.len(), "design/partition length mismatch");
    let groups = part.group_count();
    if k < 1 || k > groups {
        return Err(Error::InvalidArgs(format!("k = {k} outside 1..={groups}")));
    }
    enumeration_guard(groups, k)?;
    let mut lambda = f64::INFINITY;
    let mut cap = f64::NEG_INFINITY;
    let mut cols = Vec::with_capacity(k * part.group_size());
    for_each_combination(groups, k, |picked| {
        cols.clear();
        for &g in picked {
            cols.extend(part.range(g));
        }
        let (lo, hi) = subset_gram_extremes(x, &cols);
        lambda = lambda.min(lo);
        cap = cap.max(hi);
    });
    Ok((lambda, cap))
}

/// Monte-Carlo surrogate for the subset constants when enumeration is
/// infeasible. Extrema over `samples` uniformly drawn supports: the returned
/// pair brackets nothing by itself, it is a one-sided estimate with
/// `lambda_lo >= lambda_k` and `Lambda_hi <= Lambda_k`.
pub fn ssc_sss_sampled(x: &DMatrix<f64>, k: usize, samples: usize, seed: u64) -> (f64, f64) {
    assert!(samples >= 1, "need at least one sample");
    let n = x.ncols();
    assert!(k >= 1 && k <= n, "k outside 1..={n}");
    let mut stream = Stream::new(seed, rng::SUPPORT_SAMPLE);
    let mut lambda = f64::INFINITY;
    let mut cap = f64::NEG_INFINITY;
    for _ in 0..samples {
        let cols = stream.sample_indices(n, k);
        let (lo, hi) = subset_gram_extremes(x, &cols);
        lambda = lambda.min(lo);
        cap = cap.max(hi);
    }
    (lambda, cap)
}

/// Result of the trimmed least squares oracle.
#[derive(Debug, Clone)]
pub struct TrimmedLs {
    pub b: DVector<f64>,
    pub w: DVector<f64>,
    pub support: Vec<usize>,
    pub objective: f64,
}

/// Global minimizer of the k-sparse corruption objective by support
/// enumeration: for every support of size `k`, fit least squares on the
/// complement and interpolate on the support. Ties go to the
/// lexicographically smallest support.
pub fn oracle_trimmed_ls(x: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Result<TrimmedLs> {
    let (d, n) = x.shape();
    assert_eq!(n, y.len(), "design/response length mismatch");
    if n - k < d {
        return Err(Error::InvalidArgs(format!(
            "need n - k >= d, got n = {n}, k = {k}, d = {d}"
        )));
    }
    enumeration_guard(n, k)?;
    // full-design rank check, and the projector-based objective for the result
    let projector = Projector::new(x)?;

    let full_gram = x * x.transpose();
    let full_rhs = x * y;
    let full_ysq: f64 = y.norm_squared();

    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    let mut any_solved = false;
    for_each_combination(n, k, |cols| {
        let mut gram = full_gram.clone();
        let mut rhs = full_rhs.clone();
        let mut ysq = full_ysq;
        for &i in cols {
            let col = x.column(i);
            gram.syger(-1.0, &col, &col, 1.0);
            rhs -= y[i] * col;
            ysq -= y[i] * y[i];
        }
        // syger maintains the lower triangle only
        gram.fill_upper_triangle_with_lower_triangle();
        let Some(chol) = Cholesky::new(gram.clone()) else {
            return; // complement rank-deficient: skip this support
        };
        any_solved = true;
        let w = chol.solve(&rhs);
        let objective = 0.5 * (ysq - 2.0 * w.dot(&rhs) + (&gram * &w).dot(&w));
        if best.as_ref().is_none_or(|(obj, _, _)| objective < *obj) {
            best = Some((objective, cols.to_vec(), w));
        }
    });
    if !any_solved {
        return Err(Error::RankDeficient {
            smallest: 0.0,
            largest: 0.0,
            tol: RANK_TOL,
        });
    }
    let (_, support, w) = best.unwrap();
    let mut b = DVector::zeros(n);
    for &i in &support {
        b[i] = y[i] - x.column(i).dot(&w);
    }
    let objective = projector.reduced_objective(&(y - &b));
    Ok(TrimmedLs {
        b,
        w,
        support,
        objective,
    })
}

/// `lambda^T D^{-2} lambda` for `D = (I + lambda lambda^T / sigma^2)^{1/2}`,
/// through the rank-1 identity.
fn lambda_d2_lambda(lambda: &DVector<f64>, sigma: f64) -> f64 {
    let s2 = lambda.norm_squared();
    s2 / (1.0 + s2 / (sigma * sigma))
}

/// `D^{-3} lambda`, again rank-1: the matrix power acts as the scalar
/// `(1 + ||lambda||^2/sigma^2)^{-3/2}` along `lambda`.
pub fn d_inv3_lambda(lambda: &DVector<f64>, sigma: f64) -> DVector<f64> {
    let s2 = lambda.norm_squared();
    lambda * (1.0 + s2 / (sigma * sigma)).powf(-1.5)
}

fn check_moment_args(lambda: &DVector<f64>, sigma: f64, tau: f64) -> Result<()> {
    if tau.is_nan() || sigma.is_nan() || tau <= 0.0 || sigma <= 0.0 {
        return Err(Error::InvalidArgs(format!(
            "need sigma > 0 and tau > 0, got sigma = {sigma}, tau = {tau}"
        )));
    }
    let norm = lambda.norm();
    let bound = sigma / 100.0;
    if norm > bound {
        return Err(Error::HypothesisViolated { norm, bound });
    }
    Ok(())
}

/// Monte-Carlo estimate of `E[ 1{|y| > tau} y x ]` with `x ~ N(0, I_d)`,
/// `g ~ N(0, sigma^2)`, `y = x^T lambda + g`.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub estimate: DVector<f64>,
    pub std_errors: DVector<f64>,
    pub n_samples: u64,
}

/// Samples are consumed in fixed-size chunks with one substream per chunk,
/// so the result is bitwise reproducible independent of any batching above.
pub const MC_CHUNK: usize = 1 << 16;

pub fn truncated_moment_mc(
    lambda: &DVector<f64>,
    sigma: f64,
    tau: f64,
    n_samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    check_moment_args(lambda, sigma, tau)?;
    assert!(n_samples > 0, "need at least one sample");
    let d = lambda.len();
    let base = Stream::new(seed, rng::MONTE_CARLO);
    let mut sum = vec![0.0f64; d];
    let mut sumsq = vec![0.0f64; d];
    let chunks = n_samples.div_ceil(MC_CHUNK as u64);
    let mut x = vec![0.0f64; d];
    for c in 0..chunks {
        let mut s = base.substream(c);
        let in_chunk = (n_samples - c * MC_CHUNK as u64).min(MC_CHUNK as u64);
        let mut csum = vec![0.0f64; d];
        let mut csumsq = vec![0.0f64; d];
        for _ in 0..in_chunk {
            let mut y = sigma * s.next_normal();
            for (j, xj) in x.iter_mut().enumerate() {
                *xj = s.next_normal();
                y += lambda[j] * *xj;
            }
            if y.abs() > tau {
                for j in 0..d {
                    let z = y * x[j];
                    csum[j] += z;
                    csumsq[j] += z * z;
                }
            }
        }
        for j in 0..d {
            sum[j] += csum[j];
            sumsq[j] += csumsq[j];
        }
    }
    let ns = n_samples as f64;
    let estimate = DVector::from_fn(d, |j, _| sum[j] / ns);
    let std_errors = DVector::from_fn(d, |j, _| {
        let var = (sumsq[j] / ns - estimate[j] * estimate[j]).max(0.0);
        (var / ns).sqrt()
    });
    Ok(MomentEstimate {
        estimate,
        std_errors,
        n_samples,
    })
}

// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Quadrature route to the truncated-moment identity: returns the scalar
/// coefficient `C_tau` (adaptive Simpson over `|y| > tau`, relative
/// tolerance 1e-8) and the moment vector `C_tau * D^{-3} lambda`.
pub fn truncated_moment_quadrature(
    lambda: &DVector<f64>,
    sigma: f64,
    tau: f64,
) -> Result<(f64, DVector<f64>)> {
    check_moment_args(lambda, sigma, tau)?;
    // exponent: -y^2/(2 sigma^2) + y^2 (lambda^T D^-2 lambda)/(2 sigma^4)
    let s2 = sigma * sigma;
    let a = (1.0 - lambda_d2_lambda(lambda, sigma) / s2) / s2;
    let scale = 1.0 / (s2 * sigma * (2.0 * std::f64::consts::PI).sqrt());
    let integrand = move |y: f64| scale * y * y * (-0.5 * a * y * y).exp();
    // the integrand is even; a Gaussian of scale 1/sqrt(a) is fully decayed
    // 40 scale-units past tau
    let upper = tau + 40.0 / a.sqrt();
    let rough = adaptive_simpson(&integrand, tau, upper, 1e-4);
    let c_tau = 2.0 * adaptive_simpson(&integrand, tau, upper, 1e-8 * rough.abs().max(1e-300));
    Ok((c_tau, c_tau * d_inv3_lambda(lambda, sigma)))
}

/// Closed-form upper bound on `C_tau`:
/// `2.001 / (sigma sqrt(2 pi)) * (tau + sigma^2 / tau) * exp(-tau^2 / (2.001 sigma^2))`.
/// The parenthesis reduces to `(tau + 1/tau)` in the unit-variance case.
pub fn moment_coefficient_bound(sigma: f64, tau: f64) -> f64 {
    2.001 / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        * (tau + sigma * sigma / tau)
        * (-tau * tau / (2.001 * sigma * sigma)).exp()
}

/// The explicit coarse-phase error constant
/// `e0 = sigma sqrt(k + k*) sqrt(1 + 2e sqrt(6 ln(e n / (delta (k + k*)))))`.
/// A soft diagnostic: solvers never consult it.
pub fn bound_e0(
    n: usize,
    d: usize,
    k: usize,
    k_star: usize,
    sigma: f64,
    delta: f64,
) -> Result<f64> {
    let kk = k + k_star;
    if kk < 1 {
        return Err(Error::InvalidArgs("k + k_star must be >= 1".into()));
    }
    if n < d || d < 1 {
        return Err(Error::InvalidArgs(format!(
            "need n >= d >= 1, got n = {n}, d = {d}"
        )));
    }
    if sigma.is_nan() || delta.is_nan() || sigma <= 0.0 || delta <= 0.0 || delta > 1.0 {
        return Err(Error::InvalidArgs(format!(
            "need sigma > 0 and delta in (0, 1], got sigma = {sigma}, delta = {delta}"
        )));
    }
    let e = std::f64::consts::E;
    let log_term = (e * n as f64 / (delta * kk as f64)).ln();
    Ok(sigma * (kk as f64).sqrt() * (1.0 + 2.0 * e * (6.0 * log_term).sqrt()).sqrt())
}

/// Leading term of the Gaussian subset-smoothness bound at fraction `gamma`:
/// `gamma n (1 + 3e sqrt(6 ln(e / gamma)))`. Soft diagnostic; the dropped
/// residual is O(sqrt(n p + n ln(1/delta))).
pub fn bound_gaussian_sss_leading(gamma: f64, n: usize) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgs(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let e = std::f64::consts::E;
    Ok(gamma * n as f64 * (1.0 + 3.0 * e * (6.0 * (e / gamma).ln()).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholding::group_partition;

    fn identity2() -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }

    #[test]
    fn ssc_identity_design() {
        let x = identity2();
        let (l1, u1) = ssc_sss_exact(&x, 1).unwrap();
        assert!((l1 - 0.0).abs() < 1e-15 && (u1 - 1.0).abs() < 1e-15);
        let (l2, u2) = ssc_sss_exact(&x, 2).unwrap();
        assert!((l2 - 1.0).abs() < 1e-12 && (u2 - 1.0).abs() < 1e-12);
    }

    fn gaussian_design(d: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut s = Stream::new(seed, rng::DESIGN);
        let data: Vec<f64> = (0..d * n).map(|_| s.next_normal()).collect();
        DMatrix::from_column_slice(d, n, &data)
    }

    #[test]
    fn constants_monotone_and_match_full_gram() {
        let x = gaussian_design(3, 12, 1);
        let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for k in 1..=12 {
            let (l, u) = ssc_sss_exact(&x, k).unwrap();
            assert!(l >= prev.0 - 1e-12 && u >= prev.1 - 1e-12, "k = {k}");
            prev = (l, u);
        }
        let eig = (&x * x.transpose()).symmetric_eigen().eigenvalues;
        let (l, u) = ssc_sss_exact(&x, 12).unwrap();
        assert!((l - eig.min()).abs() < 1e-10);
        assert!((u - eig.max()).abs() < 1e-10);
    }

    #[test]
    fn group_constants_reduce_and_bracket() {
        let x = gaussian_design(2, 12, 3);
        // size-1 groups: identical to the pointwise constants
        let trivial = group_partition(12, 1).unwrap();
        for k in [1, 4, 9] {
            let a = ssc_sss_exact(&x, k).unwrap();
            let b = sgsc_sgss_exact(&x, k, &trivial).unwrap();
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        // k = all groups: the full Gram extremes
        let part = group_partition(12, 2).unwrap();
        let eig = (&x * x.transpose()).symmetric_eigen().eigenvalues;
        let (l, u) = sgsc_sgss_exact(&x, 6, &part).unwrap();
        assert!((l - eig.min()).abs() < 1e-10 && (u - eig.max()).abs() < 1e-10);
        // group supports are a subset of the size-kd supports
        let k = 3;
        let (lp, up) = ssc_sss_exact(&x, k * 2).unwrap();
        let (lg, ug) = sgsc_sgss_exact(&x, k, &part).unwrap();
        assert!(lp <= lg + 1e-12);
        assert!(ug <= up + 1e-12);
    }

    #[test]
    fn sampled_constants_are_one_sided_and_complete_when_exhaustive() {
        let x = gaussian_design(2, 9, 5);
        let (le, ue) = ssc_sss_exact(&x, 2).unwrap();
        let (ls, us) = ssc_sss_sampled(&x, 2, 4000, 7); // 36 supports: samples cover all whp
        assert!((ls - le).abs() < 1e-12);
        assert!((us - ue).abs() < 1e-12);
        let (ls2, us2) = ssc_sss_sampled(&x, 2, 5, 7);
        assert!(ls2 >= le - 1e-12);
        assert!(us2 <= ue + 1e-12);
        // determinism
        assert_eq!(ssc_sss_sampled(&x, 2, 50, 9), ssc_sss_sampled(&x, 2, 50, 9));
    }

    #[test]
    fn enumeration_guard_fires() {
        let x = gaussian_design(3, 60, 2);
        assert!(matches!(ssc_sss_exact(&x, 30), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn oracle_mean_instance() {
        let x = DMatrix::from_row_slice(1, 4, &[1.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_row_slice(&[1.0, 1.0, 1.0, 100.0]);
        let out = oracle_trimmed_ls(&x, &y, 1).unwrap();
        assert_eq!(out.support, vec![3]);
        assert!((out.w[0] - 1.0).abs() < 1e-12);
        assert!((out.b[3] - 99.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_with_k_zero_is_ols() {
        let x = gaussian_design(2, 10, 11);
        let mut s = Stream::new(4, rng::NOISE);
        let y = DVector::from_fn(10, |_, _| s.next_normal());
        let out = oracle_trimmed_ls(&x, &y, 0).unwrap();
        assert!(out.support.is_empty());
        assert_eq!(out.b.norm(), 0.0);
        let w = crate::problem::ols(&x, &y).unwrap();
        assert!((out.w - w).norm() < 1e-12);
    }

    #[test]
    fn oracle_objective_definitions_agree() {
        // the complement least-squares value equals the reduced objective
        let x = gaussian_design(2, 8, 13);
        let mut s = Stream::new(6, rng::NOISE);
        let y = DVector::from_fn(8, |_, _| 2.0 * s.next_normal());
        let out = oracle_trimmed_ls(&x, &y, 2).unwrap();
        let mut direct = 0.0;
        for i in 0..8 {
            if !out.support.contains(&i) {
                let r = y[i] - x.column(i).dot(&out.w);
                direct += 0.5 * r * r;
            }
        }
        assert!((out.objective - direct).abs() < 1e-10);
    }

    // Exhaustive minimum of the reduced objective over k-sparse b with
    // entries on an integer grid; sanity check of the support-enumeration
    // reduction on integer noiseless instances where the optimum is on-grid.
    fn grid_min_objective(x: &DMatrix<f64>, y: &DVector<f64>, k: usize, grid: &[f64]) -> f64 {
        let n = y.len();
        let projector = Projector::new(x).unwrap();
        let mut best = f64::INFINITY;
        for_each_combination(n, k, |cols| {
            let mut assignment = vec![0usize; cols.len()];
            loop {
                let mut b = DVector::zeros(n);
                for (slot, &i) in cols.iter().enumerate() {
                    b[i] = grid[assignment[slot]];
                }
                best = best.min(projector.reduced_objective(&(y - &b)));
                // odometer over grid values
                let mut carry = 0;
                loop {
                    if carry == assignment.len() {
                        return;
                    }
                    assignment[carry] += 1;
                    if assignment[carry] < grid.len() {
                        break;
                    }
                    assignment[carry] = 0;
                    carry += 1;
                }
            }
        });
        best
    }

    #[test]
    fn oracle_matches_grid_search_on_integer_instances() {
        let grid: Vec<f64> = (-20..=20).map(|v| v as f64).collect();
        // integer noiseless instance: the optimum lies on the grid
        let x = DMatrix::from_row_slice(1, 5, &[1.0, 2.0, 1.0, 3.0, 1.0]);
        let w_star = 2.0;
        let mut y = DVector::from_fn(5, |i, _| w_star * x[(0, i)]);
        y[3] += 14.0;
        let out = oracle_trimmed_ls(&x, &y, 1).unwrap();
        let grid_best = grid_min_objective(&x, &y, 1, &grid);
        assert!(out.objective < 1e-18);
        assert!((grid_best - out.objective).abs() < 1e-12);
        // and on a noisy instance the grid can never beat the oracle
        let mut s = Stream::new(8, rng::NOISE);
        let y2 = DVector::from_fn(5, |i, _| w_star * x[(0, i)] + 0.3 * s.next_normal());
        let out2 = oracle_trimmed_ls(&x, &y2, 1).unwrap();
        let grid2 = grid_min_objective(&x, &y2, 1, &grid);
        assert!(grid2 >= out2.objective - 1e-12);
    }

    #[test]
    fn moment_hypothesis_guard() {
        let lambda = DVector::from_row_slice(&[0.5, 0.0]);
        assert!(matches!(
            truncated_moment_mc(&lambda, 1.0, 1.0, 100, 0),
            Err(Error::HypothesisViolated { .. })
        ));
        assert!(matches!(
            truncated_moment_quadrature(&lambda, 1.0, 1.0),
            Err(Error::HypothesisViolated { .. })
        ));
        let ok = DVector::from_row_slice(&[0.005, 0.0]);
        assert!(matches!(
            truncated_moment_quadrature(&ok, 1.0, 0.0),
            Err(Error::InvalidArgs(_))
        ));
    }

    #[test]
    fn mc_is_central_at_lambda_zero() {
        let lambda = DVector::zeros(3);
        let out = truncated_moment_mc(&lambda, 1.0, 1.0, 400_000, 5).unwrap();
        for j in 0..3 {
            assert!(
                out.estimate[j].abs() <= 3.0 * out.std_errors[j],
                "coord {j}: {} vs se {}",
                out.estimate[j],
                out.std_errors[j]
            );
        }
    }

    #[test]
    fn quadrature_matches_tail_integration_identity() {
        // int_tau^inf y^2 e^{-a y^2/2} dy
        //   = (tau/a) e^{-a tau^2/2} + (1/a) int_tau^inf e^{-a y^2/2} dy
        let lambda = DVector::from_row_slice(&[0.004, -0.002, 0.001]);
        for (sigma, tau) in [(1.0, 1.0), (0.5, 0.8), (2.0, 1.5)] {
            let lam = &lambda * (sigma / 1.0);
            let (c_tau, _) = truncated_moment_quadrature(&lam, sigma, tau).unwrap();
            let s2 = sigma * sigma;
            let a = (1.0 - lambda_d2_lambda(&lam, sigma) / s2) / s2;
            let scale = 2.0 / (s2 * sigma * (2.0 * std::f64::consts::PI).sqrt());
            let gauss = |y: f64| (-0.5 * a * y * y).exp();
            let tail = adaptive_simpson(&gauss, tau, tau + 40.0 / a.sqrt(), 1e-12);
            let byparts = scale * ((tau / a) * gauss(tau) + tail / a);
            assert!(
                (c_tau - byparts).abs() < 1e-7 * byparts,
                "sigma = {sigma}, tau = {tau}: {c_tau} vs {byparts}"
            );
        }
    }

    #[test]
    fn quadrature_moment_at_zero_lambda_is_zero_vector() {
        let lambda = DVector::zeros(3);
        let (c_tau, moment) = truncated_moment_quadrature(&lambda, 1.0, 1.0).unwrap();
        assert!(c_tau > 0.0);
        assert_eq!(moment.norm(), 0.0);
    }

    #[test]
    fn rank_one_matrix_power_matches_dense_route() {
        let sigma = 1.3;
        let lambda = DVector::from_row_slice(&[0.003, 0.004, -0.0012]);
        let fast = d_inv3_lambda(&lambda, sigma);
        // dense: D^2 = I + ll^T/s^2, D^-3 = Q diag(e^{-3/2}) Q^T
        let d2 = DMatrix::identity(3, 3) + &lambda * lambda.transpose() / (sigma * sigma);
        let eig = d2.symmetric_eigen();
        let mut scaled = eig.eigenvectors.clone();
        for j in 0..3 {
            let p = eig.eigenvalues[j].powf(-1.5);
            scaled.column_mut(j).scale_mut(p);
        }
        let dense = scaled * eig.eigenvectors.transpose() * &lambda;
        assert!((fast - dense).norm() < 1e-14);
    }

    #[test]
    fn coefficient_bound_dominates_quadrature_on_grid() {
        for &sigma in &[0.5, 1.0, 2.0] {
            for &tau in &[0.5, 1.0, 2.0] {
                let lambda = DVector::from_row_slice(&[sigma / 200.0, 0.0, 0.0]);
                let (c_tau, _) = truncated_moment_quadrature(&lambda, sigma, tau).unwrap();
                let bound = moment_coefficient_bound(sigma, tau);
                assert!(
                    c_tau <= bound,
                    "sigma = {sigma}, tau = {tau}: C = {c_tau} > bound = {bound}"
                );
            }
        }
        // pinned value at sigma = tau = 1
        assert!((moment_coefficient_bound(1.0, 1.0) - 0.9686).abs() < 1e-3);
    }

    #[test]
    fn e0_scaling_and_pinned_value() {
        let base = bound_e0(4000, 10, 40, 40, 1.0, 0.1).unwrap();
        let doubled = bound_e0(4000, 10, 40, 40, 2.0, 0.1).unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-12);
        for k in 1..60 {
            let a = bound_e0(4000, 10, k, 40, 1.0, 0.1).unwrap();
            let b = bound_e0(4000, 10, k + 1, 40, 1.0, 0.1).unwrap();
            assert!(b >= a);
        }
        // frozen by independent arithmetic on the displayed expression
        assert!((base - 54.23576190011212).abs() < 1e-9, "e0 = {base}");
    }

    #[test]
    fn sss_leading_term_soft_check_against_empirical_constants() {
        // the leading term plus a sampling allowance dominates the observed
        // subset smoothness constant on small Gaussian designs
        let (n, d) = (12usize, 3usize);
        let gamma = 0.25;
        let k = (gamma * n as f64) as usize;
        let lead = bound_gaussian_sss_leading(gamma, n).unwrap();
        let allowance = 10.0 * ((n * d) as f64).sqrt();
        let mut ok = 0;
        for seed in 0..20 {
            let x = gaussian_design(d, n, 700 + seed);
            let (_, cap) = ssc_sss_exact(&x, k).unwrap();
            if cap <= lead + allowance {
                ok += 1;
            }
        }
        assert!(ok >= 18, "soft bound held in only {ok}/20 draws");
    }

    #[test]
    fn sss_leading_term() {
        let e = std::f64::consts::E;
        let at_one = bound_gaussian_sss_leading(1.0, 100).unwrap();
        assert!((at_one - 100.0 * (1.0 + 3.0 * e * (6.0f64).sqrt())).abs() < 1e-9);
        let mut prev = 0.0;
        for i in 1..=50 {
            let g = i as f64 / 50.0;
            let v = bound_gaussian_sss_leading(g, 200).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(bound_gaussian_sss_leading(0.0, 10).is_err());
        assert!(bound_gaussian_sss_leading(1.5, 10).is_err());
    }
}
