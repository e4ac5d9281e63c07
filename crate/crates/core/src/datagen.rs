//! Seeded synthetic instance generation for both problem families.
//!
//! Regression: unit-norm coefficients, standard normal covariates, Gaussian
//! noise and a sparse corruption with magnitudes drawn from `U(low, high)`
//! on a uniformly random support. Time series: an AR(d) recursion seeded
//! with standard normal values, stabilized over a burn-in prefix, then
//! corrupted either additively (observed values) or innovationally (noise
//! terms, so the corruption propagates).
//!
//! Every random quantity comes from a named stream (see [`crate::rng`]), so
//! changing the corruption plan of an instance never perturbs its design or
//! noise draws. Calling any generator twice with equal arguments yields
//! identical bytes.

use nalgebra::{DMatrix, DVector};

use crate::ar::{CorruptionMode, GroundTruthTs, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::problem::{GroundTruthReg, RegressionProblem};
use crate::rng::{self, Stream};
use crate::spectral;

/// Burn-in length used by the presets: the recursion runs this many steps
/// before any value is recorded.
pub const DEFAULT_BURN_IN: usize = 100;

/// Norm given to drawn AR coefficient vectors; `0.9 / sqrt(d)` keeps the
/// recursion comfortably inside the stationary region for every order.
pub const AR_COEFF_NORM: f64 = 0.9;

const REDRAW_RADIUS: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    /// Corruptions keep the sign of the sampled magnitude (all positive).
    Positive,
    /// A fair coin flips each corruption's sign.
    Symmetric,
}

/// How corruptions are placed and sized. The plan owns its own seed: the
/// location and value streams derive from it, not from the instance seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionPlan {
    pub k_star: usize,
    pub low: f64,
    pub high: f64,
    pub sign: SignMode,
    pub seed: u64,
}

impl CorruptionPlan {
    /// `k_star` corruptions with the magnitudes used throughout: `U(10, 20)`,
    /// positive sign.
    pub fn new(k_star: usize, seed: u64) -> Self {
        CorruptionPlan {
            k_star,
            low: 10.0,
            high: 20.0,
            sign: SignMode::Positive,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.low >= self.high {
            return Err(Error::InvalidPlan(format!(
                "need low < high, got [{}, {}]",
                self.low, self.high
            )));
        }
        if self.k_star > n {
            return Err(Error::InvalidPlan(format!(
                "k_star = {} exceeds n = {n}",
                self.k_star
            )));
        }
        Ok(())
    }

    // Sorted support and corruption values, from the plan's own streams.
    fn draw(&self, n: usize) -> (Vec<usize>, Vec<f64>) {
        let mut loc = Stream::new(self.seed, rng::CORRUPT_LOC);
        let mut val = Stream::new(self.seed, rng::CORRUPT_VAL);
        let support = loc.sample_indices(n, self.k_star);
        let values = support
            .iter()
            .map(|_| {
                let mag = val.next_uniform(self.low, self.high);
                match self.sign {
                    SignMode::Positive => mag,
                    SignMode::Symmetric => {
                        if val.next_f64() < 0.5 {
                            mag
                        } else {
                            -mag
                        }
                    }
                }
            })
            .collect();
        (support, values)
    }
}

/// Synthetic regression instance `y = X^T w* + eps + b*` with full ground
/// truth attached.
pub fn gen_regression(
    n: usize,
    d: usize,
    sigma: f64,
    plan: &CorruptionPlan,
    seed: u64,
) -> Result<RegressionProblem> {
    if d < 1 || n < d {
        return Err(Error::InvalidSize(format!(
            "need n >= d >= 1, got d = {d}, n = {n}"
        )));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidSize(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    plan.validate(n)?;

    let mut model = Stream::new(seed, rng::MODEL);
    let w_star = loop {
        let raw = DVector::from_fn(d, |_, _| model.next_normal());
        let norm = raw.norm();
        if norm > 0.0 {
            break raw / norm;
        }
    };

    let mut design = Stream::new(seed, rng::DESIGN);
    let mut data = Vec::with_capacity(d * n);
    for _ in 0..n {
        for _ in 0..d {
            data.push(design.next_normal());
        }
    }
    let x = DMatrix::from_column_slice(d, n, &data);

    let mut noise = Stream::new(seed, rng::NOISE);
    let eps = DVector::from_fn(n, |_, _| sigma * noise.next_normal());

    let (support, values) = plan.draw(n);
    let mut b_star = DVector::zeros(n);
    for (&i, &v) in support.iter().zip(&values) {
        b_star[i] = v;
    }

    let y = x.transpose() * &w_star + &eps + &b_star;
    RegressionProblem::new(
        x,
        y,
        Some(GroundTruthReg {
            w_star,
            b_star,
            eps,
            support,
            sigma,
        }),
    )
}

// AR coefficient draw: direction uniform, norm 0.9/sqrt(d), redrawn until
// the companion spectral radius is below 0.99.
fn draw_ar_coefficients(d: usize, model: &mut Stream) -> DVector<f64> {
    loop {
        let raw = DVector::from_fn(d, |_, _| model.next_normal());
        let norm = raw.norm();
        if norm == 0.0 {
            continue;
        }
        let w = raw * (AR_COEFF_NORM / (d as f64).sqrt() / norm);
        if companion_radius(&w) < REDRAW_RADIUS {
            return w;
        }
    }
}

fn companion_radius(w: &DVector<f64>) -> f64 {
    spectral::companion_matrix(w)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
}

// Run the recursion: `init` seeds the first d states, innovations are
// consumed in order, the last n + d generated values are recorded.
fn run_recursion(
    w: &DVector<f64>,
    init: &[f64],
    innovations: &[f64],
    recorded_len: usize,
) -> Vec<f64> {
    let d = w.len();
    let mut buf: Vec<f64> = init.to_vec();
    for &e in innovations {
        let mut next = e;
        for i in 0..d {
            next += w[i] * buf[buf.len() - 1 - i];
        }
        buf.push(next);
    }
    buf.split_off(buf.len() - recorded_len)
}

fn series_draws(n: usize, d: usize, sigma: f64, seed: u64, burn_in: usize) -> (Vec<f64>, Vec<f64>) {
    let mut init_stream = Stream::new(seed, rng::INIT);
    let init: Vec<f64> = (0..d).map(|_| init_stream.next_normal()).collect();
    let mut noise = Stream::new(seed, rng::NOISE);
    let innovations: Vec<f64> = (0..burn_in + n + d)
        .map(|_| sigma * noise.next_normal())
        .collect();
    (init, innovations)
}

fn check_series_size(n: usize, d: usize, sigma: f64) -> Result<()> {
    if d < 1 || n < d + 1 {
        return Err(Error::InvalidSize(format!(
            "need n >= d + 1 >= 2, got d = {d}, n = {n}"
        )));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidSize(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    Ok(())
}

/// Clean stationary AR(d) series of `n + d` values with drawn coefficients.
pub fn gen_ar_series(
    n: usize,
    d: usize,
    sigma: f64,
    seed: u64,
    burn_in: usize,
) -> Result<TimeSeriesRecord> {
    check_series_size(n, d, sigma)?;
    let mut model = Stream::new(seed, rng::MODEL);
    let w_star = draw_ar_coefficients(d, &mut model);
    gen_ar_series_with(n, d, sigma, &w_star, seed, burn_in)
}

/// Clean AR(d) series with caller-supplied coefficients (test hook; the
/// random draws are identical to [`gen_ar_series`] with the same seed).
pub fn gen_ar_series_with(
    n: usize,
    d: usize,
    sigma: f64,
    w_star: &DVector<f64>,
    seed: u64,
    burn_in: usize,
) -> Result<TimeSeriesRecord> {
    check_series_size(n, d, sigma)?;
    assert_eq!(w_star.len(), d, "coefficient length must equal the order");
    if !spectral::stationarity_check(w_star) {
        return Err(Error::NonStationary);
    }
    let (init, innovations) = series_draws(n, d, sigma, seed, burn_in);
    let values = run_recursion(w_star, &init, &innovations, n + d);
    let truth = GroundTruthTs {
        w_star: w_star.clone(),
        sigma,
        mode: CorruptionMode::Clean,
        e_star: Vec::new(),
        clean_values: values.clone(),
    };
    TimeSeriesRecord::new(values, d, Some(truth))
}

/// Overlay additive outliers on a clean record: `y_t += e*_t` at `k_star`
/// uniform locations in `1..=n`. The latent process is untouched.
pub fn inject_additive(
    record: &TimeSeriesRecord,
    plan: &CorruptionPlan,
) -> Result<TimeSeriesRecord> {
    let truth = record.truth().ok_or(Error::MissingTruth)?;
    let n = record.n();
    let d = record.order();
    plan.validate(n)?;
    let (support, corruption) = plan.draw(n);
    let mut values = record.values().to_vec();
    let mut e_star = Vec::with_capacity(support.len());
    for (&i, &v) in support.iter().zip(&corruption) {
        let t = i + 1;
        values[d - 1 + t] += v;
        e_star.push((t, v));
    }
    let new_truth = GroundTruthTs {
        w_star: truth.w_star.clone(),
        sigma: truth.sigma,
        mode: CorruptionMode::Additive,
        e_star,
        clean_values: record.values().to_vec(),
    };
    TimeSeriesRecord::new(values, d, Some(new_truth))
}

/// AR(d) series with innovational outliers: the corruption is added to the
/// innovation inside the recursion, so it propagates to every later value.
pub fn gen_ar_series_io(
    n: usize,
    d: usize,
    sigma: f64,
    plan: &CorruptionPlan,
    seed: u64,
    burn_in: usize,
) -> Result<TimeSeriesRecord> {
    check_series_size(n, d, sigma)?;
    let mut model = Stream::new(seed, rng::MODEL);
    let w_star = draw_ar_coefficients(d, &mut model);
    gen_ar_series_io_with(n, d, sigma, &w_star, plan, seed, burn_in)
}

/// Innovational-outlier series with caller-supplied coefficients (test hook).
pub fn gen_ar_series_io_with(
    n: usize,
    d: usize,
    sigma: f64,
    w_star: &DVector<f64>,
    plan: &CorruptionPlan,
    seed: u64,
    burn_in: usize,
) -> Result<TimeSeriesRecord> {
    check_series_size(n, d, sigma)?;
    assert_eq!(w_star.len(), d, "coefficient length must equal the order");
    if !spectral::stationarity_check(w_star) {
        return Err(Error::NonStationary);
    }
    plan.validate(n)?;
    let (init, innovations) = series_draws(n, d, sigma, seed, burn_in);
    let clean_values = run_recursion(w_star, &init, &innovations, n + d);

    let (support, corruption) = plan.draw(n);
    let mut spiked = innovations;
    let mut e_star = Vec::with_capacity(support.len());
    for (&i, &v) in support.iter().zip(&corruption) {
        let t = i + 1;
        // y_t is generated at recursion step burn_in + d - 1 + t
        spiked[burn_in + d - 1 + t] += v;
        e_star.push((t, v));
    }
    let values = run_recursion(w_star, &init, &spiked, n + d);
    let truth = GroundTruthTs {
        w_star: w_star.clone(),
        sigma,
        mode: CorruptionMode::Innovational,
        e_star,
        clean_values,
    };
    TimeSeriesRecord::new(values, d, Some(truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_without_corruption_is_exact_model_plus_noise() {
        let plan = CorruptionPlan::new(0, 1);
        let p = gen_regression(50, 3, 0.7, &plan, 2).unwrap();
        let t = p.truth().unwrap();
        assert_eq!(t.b_star.norm(), 0.0);
        assert!(t.support.is_empty());
        let expect = p.design().transpose() * &t.w_star + &t.eps;
        assert!((p.responses() - expect).norm() < 1e-14);
        assert!((t.w_star.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regression_corruption_counts_and_range() {
        let plan = CorruptionPlan::new(3, 9);
        let p = gen_regression(100, 5, 1.0, &plan, 4).unwrap();
        let t = p.truth().unwrap();
        let nonzero: Vec<usize> = (0..100).filter(|&i| t.b_star[i] != 0.0).collect();
        assert_eq!(nonzero.len(), 3);
        assert_eq!(nonzero, t.support);
        for &i in &t.support {
            assert!(t.b_star[i] >= 10.0 && t.b_star[i] <= 20.0);
        }
    }

    #[test]
    fn generators_are_bit_identical_across_calls() {
        let plan = CorruptionPlan::new(5, 3);
        let a = gen_regression(60, 4, 1.0, &plan, 7).unwrap();
        let b = gen_regression(60, 4, 1.0, &plan, 7).unwrap();
        assert_eq!(a.design(), b.design());
        assert_eq!(a.responses(), b.responses());

        let ra = gen_ar_series(40, 2, 1.0, 11, DEFAULT_BURN_IN).unwrap();
        let rb = gen_ar_series(40, 2, 1.0, 11, DEFAULT_BURN_IN).unwrap();
        assert_eq!(ra.values(), rb.values());

        let ia = gen_ar_series_io(40, 2, 1.0, &plan, 11, DEFAULT_BURN_IN).unwrap();
        let ib = gen_ar_series_io(40, 2, 1.0, &plan, 11, DEFAULT_BURN_IN).unwrap();
        assert_eq!(ia.values(), ib.values());
    }

    #[test]
    fn changing_corruption_plan_leaves_design_and_noise_alone() {
        let a = gen_regression(50, 3, 1.0, &CorruptionPlan::new(0, 5), 21).unwrap();
        let b = gen_regression(50, 3, 1.0, &CorruptionPlan::new(10, 5), 21).unwrap();
        assert_eq!(a.design(), b.design());
        assert_eq!(a.truth().unwrap().eps, b.truth().unwrap().eps);
        assert_eq!(a.truth().unwrap().w_star, b.truth().unwrap().w_star);
    }

    #[test]
    fn white_noise_hook_matches_iid_variance() {
        let w0 = DVector::zeros(1);
        let rec = gen_ar_series_with(100_000, 1, 1.5, &w0, 13, DEFAULT_BURN_IN).unwrap();
        let vals = rec.values();
        let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        let target = 1.5 * 1.5;
        assert!((var - target).abs() < 0.05 * target, "var = {var}");
    }

    #[test]
    fn ar1_hook_matches_stationary_variance() {
        let w = DVector::from_row_slice(&[0.5]);
        let rec = gen_ar_series_with(100_000, 1, 1.0, &w, 17, DEFAULT_BURN_IN).unwrap();
        let vals = rec.values();
        let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        let target = 4.0 / 3.0; // sigma^2 / (1 - w^2)
        assert!((var - target).abs() < 0.05 * target, "var = {var}");
    }

    #[test]
    fn drawn_coefficients_are_stationary_with_margin() {
        for seed in 0..30 {
            for d in [1, 3, 10, 25] {
                let rec = gen_ar_series(2 * d + 2, d, 1.0, seed, 0).unwrap();
                let w = &rec.truth().unwrap().w_star;
                let norm_target = AR_COEFF_NORM / (d as f64).sqrt();
                assert!((w.norm() - norm_target).abs() < 1e-12);
                assert!(companion_radius(w) < REDRAW_RADIUS);
            }
        }
    }

    #[test]
    fn nonstationary_hook_rejected() {
        let w = DVector::from_row_slice(&[1.0]);
        assert_eq!(
            gen_ar_series_with(50, 1, 1.0, &w, 0, 10).err(),
            Some(Error::NonStationary)
        );
    }

    #[test]
    fn additive_injection_is_exactly_the_corruption() {
        let clean = gen_ar_series(200, 3, 1.0, 23, DEFAULT_BURN_IN).unwrap();
        let plan = CorruptionPlan::new(7, 29);
        let noisy = inject_additive(&clean, &plan).unwrap();
        let t = noisy.truth().unwrap();
        assert_eq!(t.mode, CorruptionMode::Additive);
        assert_eq!(t.k_star(), 7);
        let mut diff: Vec<f64> = noisy
            .values()
            .iter()
            .zip(clean.values())
            .map(|(a, b)| a - b)
            .collect();
        for &(t_idx, v) in &t.e_star {
            let pos = 3 - 1 + t_idx;
            assert!((diff[pos] - v).abs() < 1e-15);
            assert!((10.0..=20.0).contains(&v));
            diff[pos] = 0.0;
        }
        assert!(diff.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn additive_injection_with_zero_corruptions_is_identity() {
        let clean = gen_ar_series(50, 2, 1.0, 31, DEFAULT_BURN_IN).unwrap();
        let out = inject_additive(&clean, &CorruptionPlan::new(0, 1)).unwrap();
        assert_eq!(out.values(), clean.values());
        assert_eq!(out.truth().unwrap().mode, CorruptionMode::Additive);
    }

    #[test]
    fn io_with_zero_coefficients_does_not_propagate() {
        let w0 = DVector::zeros(2);
        let plan = CorruptionPlan::new(4, 3);
        let rec = gen_ar_series_io_with(100, 2, 1.0, &w0, &plan, 37, DEFAULT_BURN_IN).unwrap();
        let t = rec.truth().unwrap();
        assert_eq!(t.k_star(), 4);
        let corrupt_pos: Vec<usize> = t.e_star.iter().map(|&(ti, _)| 2 - 1 + ti).collect();
        for (p, (a, b)) in rec.values().iter().zip(&t.clean_values).enumerate() {
            if corrupt_pos.contains(&p) {
                assert!((a - b).abs() > 1.0);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn io_propagates_geometrically_for_ar1() {
        let w = DVector::from_row_slice(&[0.5]);
        let mut plan = CorruptionPlan::new(1, 41);
        plan.low = 8.0;
        plan.high = 8.0 + 1e-9;
        let rec = gen_ar_series_io_with(80, 1, 0.0, &w, &plan, 43, DEFAULT_BURN_IN).unwrap();
        let t = rec.truth().unwrap();
        let (t0, beta) = t.e_star[0];
        assert!(t0 <= 78, "outlier too close to the end for this check");
        // order 1: value y_t sits at index t of the stored vector
        let delta = |off: usize| {
            let ti = t0 + off;
            rec.value_at(ti as i64) - t.clean_values[ti]
        };
        assert!((delta(0) - beta).abs() < 1e-9);
        assert!((delta(1) - 0.5 * beta).abs() < 1e-9);
        assert!((delta(2) - 0.25 * beta).abs() < 1e-9);
    }

    #[test]
    fn plan_validation() {
        let mut plan = CorruptionPlan::new(5, 1);
        plan.low = 20.0;
        plan.high = 10.0;
        assert!(matches!(
            gen_regression(30, 2, 1.0, &plan, 0),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            gen_regression(3, 2, 1.0, &CorruptionPlan::new(5, 1), 0),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            gen_regression(1, 2, 1.0, &CorruptionPlan::new(0, 1), 0),
            Err(Error::InvalidSize(_))
        ));
    }
}
