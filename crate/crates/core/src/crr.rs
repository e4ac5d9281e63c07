//! CRR: consistent robust regression by iterative hard thresholding on the
//! corruption vector.
//!
//! The sparse reformulation of robust least squares,
//!
//! ```text
//! min_{||b||_0 <= k}  f(b) = 1/2 ||(I - P_X)(y - b)||^2,
//! ```
//!
//! is optimized with the fixed unit-step update
//!
//! ```text
//! b^{t+1} = HT_k( P_X b^t + (I - P_X) y ),
//! ```
//!
//! starting from `b^0 = 0` and stopping once consecutive iterates move less
//! than the configured tolerance. The model is recovered once at the end:
//! `w = (X X^T)^{-1} X (y - b)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::{
    DiagnosticTrace, Estimate, Projector, RegressionProblem, SolverConfig, Termination, TraceRow,
};
use crate::thresholding::hard_threshold;

/// One CRR update: `HT_k(P_X b + (I - P_X) y)`.
pub fn crr_step(
    projector: &Projector,
    y: &DVector<f64>,
    b: &DVector<f64>,
    k: usize,
) -> Result<DVector<f64>> {
    hard_threshold(&projector.update_target(y, b), k)
}

// Shared iteration driver. `threshold` maps the update target to the next
// iterate; `observe` sees every iterate including b^0. Iteration count is the
// number of threshold applications performed.
pub(crate) fn run_iht<F, O>(
    projector: &Projector,
    y: &DVector<f64>,
    config: &SolverConfig,
    threshold: F,
    mut observe: O,
) -> Result<(DVector<f64>, usize, Termination)>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    O: FnMut(usize, &DVector<f64>),
{
    let mut b = DVector::zeros(y.len());
    observe(0, &b);
    for t in 1..=config.max_iters {
        let next = threshold(&projector.update_target(y, &b))?;
        let delta = (&next - &b).norm();
        b = next;
        observe(t, &b);
        if delta <= config.tol {
            return Ok((b, t, Termination::Converged));
        }
    }
    Ok((b, config.max_iters, Termination::MaxIters))
}

fn finish(
    projector: &Projector,
    y: &DVector<f64>,
    b: DVector<f64>,
    iters: usize,
    termination: Termination,
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

/// Solve a robust regression instance with CRR.
///
/// Running with `config.k` below the true corruption count is allowed (the
/// consistency theory is void there, but breakdown experiments need it).
pub fn solve_crr(problem: &RegressionProblem, config: &SolverConfig) -> Result<Estimate> {
    let n = problem.len();
    if config.k > n {
        return Err(Error::InvalidK {
            k: config.k,
            max: n,
        });
    }
    let projector = Projector::new(problem.design())?;
    let y = problem.responses();
    let (b, iters, termination) = run_iht(
        &projector,
        y,
        config,
        |target| hard_threshold(target, config.k),
        |_, _| {},
    )?;
    Ok(finish(&projector, y, b, iters, termination))
}

/// Like [`solve_crr`] but records per-iteration diagnostics against the
/// instance's ground truth. The returned estimate is identical to the plain
/// solver's.
pub fn solve_crr_traced(
    problem: &RegressionProblem,
    config: &SolverConfig,
) -> Result<(Estimate, DiagnosticTrace)> {
    let n = problem.len();
    if config.k > n {
        return Err(Error::InvalidK {
            k: config.k,
            max: n,
        });
    }
    let truth = problem.truth().ok_or(Error::MissingTruth)?;
    let projector = Projector::new(problem.design())?;
    let y = problem.responses();
    let mut trace = DiagnosticTrace::default();
    let (b, iters, termination) = run_iht(
        &projector,
        y,
        config,
        |target| hard_threshold(target, config.k),
        |t, bt| {
            trace.rows.push(trace_row(
                &projector,
                y,
                bt,
                &truth.b_star,
                &truth.support,
                t,
            ));
        },
    )?;
    Ok((finish(&projector, y, b, iters, termination), trace))
}

pub(crate) fn trace_row(
    projector: &Projector,
    y: &DVector<f64>,
    b: &DVector<f64>,
    b_star: &DVector<f64>,
    support: &[usize],
    iter: usize,
) -> TraceRow {
    let diff = b - b_star;
    let lambda = projector.solve_coeffs(&diff);
    let est: Vec<usize> = (0..b.len()).filter(|&i| b[i] != 0.0).collect();
    let ci = est
        .iter()
        .filter(|i| support.binary_search(i).is_ok())
        .count();
    TraceRow {
        iter,
        lambda_norm: lambda.norm(),
        md: support.len() - ci,
        fa: est.len() - ci,
        ci,
        b_err: diff.norm(),
        objective: projector.reduced_objective(&(y - b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_regression, CorruptionPlan};
    use nalgebra::DMatrix;

    fn ones_design_instance() -> (Projector, DVector<f64>) {
        let x = DMatrix::from_row_slice(1, 4, &[1.0, 1.0, 1.0, 1.0]);
        (
            Projector::new(&x).unwrap(),
            DVector::from_row_slice(&[0.0, 0.0, 0.0, 8.0]),
        )
    }

    #[test]
    fn step_on_ones_design_keeps_the_outlier() {
        // P = ones(4)/4, so (I - P) y = (-2, -2, -2, 6): top-1 is entry 4.
        let (p, y) = ones_design_instance();
        let b = DVector::zeros(4);
        let next = crr_step(&p, &y, &b, 1).unwrap();
        let expect = DVector::from_row_slice(&[0.0, 0.0, 0.0, 6.0]);
        assert!((next - expect).norm() < 1e-12);
    }

    #[test]
    fn step_with_k_zero_is_zero() {
        let (p, y) = ones_design_instance();
        let b = DVector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(crr_step(&p, &y, &b, 0).unwrap(), DVector::zeros(4));
    }

    #[test]
    fn clean_noiseless_data_is_a_fixed_point() {
        let x = DMatrix::from_fn(2, 10, |r, c| {
            ((r + 1) * (c + 3)) as f64 / 7.0 + (c as f64).sin()
        });
        let w_star = DVector::from_row_slice(&[1.5, -0.5]);
        let y = x.transpose() * &w_star;
        let p = Projector::new(&x).unwrap();
        let step = crr_step(&p, &y, &DVector::zeros(10), 2).unwrap();
        assert!(step.norm() < 1e-10);

        let problem = RegressionProblem::new(x, y, None).unwrap();
        let est = solve_crr(&problem, &SolverConfig::new(2)).unwrap();
        assert_eq!(est.iters, 1);
        assert_eq!(est.termination, Termination::Converged);
        assert!((est.w - w_star).norm() < 1e-10);
        assert!(est.b.norm() < 1e-12);
    }

    fn gross_instance(
        seed: u64,
        n: usize,
        d: usize,
        k_star: usize,
        sigma: f64,
    ) -> RegressionProblem {
        let plan = CorruptionPlan {
            k_star,
            low: 12.0,
            high: 18.0,
            sign: crate::datagen::SignMode::Positive,
            seed,
        };
        gen_regression(n, d, sigma, &plan, seed).unwrap()
    }

    #[test]
    fn recovers_single_gross_corruption_exactly_when_noiseless() {
        let problem = gross_instance(11, 20, 2, 1, 0.0);
        let truth = problem.truth().unwrap().clone();
        let est = solve_crr(&problem, &SolverConfig::new(1)).unwrap();
        assert!((est.w - &truth.w_star).norm() < 1e-8);
        let supp: Vec<usize> = (0..20).filter(|&i| est.b[i] != 0.0).collect();
        assert_eq!(supp, truth.support);
    }

    #[test]
    fn objective_never_exceeds_start() {
        for seed in 0..5 {
            let problem = gross_instance(40 + seed, 60, 3, 4, 0.5);
            let p = Projector::new(problem.design()).unwrap();
            let f0 = p.reduced_objective(problem.responses());
            let est = solve_crr(&problem, &SolverConfig::new(8)).unwrap();
            assert!(
                est.objective <= f0 + 1e-12,
                "f = {} vs f0 = {f0}",
                est.objective
            );
        }
    }

    #[test]
    fn deterministic_bit_identical_runs() {
        let problem = gross_instance(7, 50, 3, 3, 1.0);
        let cfg = SolverConfig::new(6);
        let a = solve_crr(&problem, &cfg).unwrap();
        let b = solve_crr(&problem, &cfg).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.b, b.b);
        assert_eq!(a.iters, b.iters);
        assert!(a.objective.to_bits() == b.objective.to_bits());
    }

    #[test]
    fn traced_matches_untraced_and_counts_sets() {
        let problem = gross_instance(13, 40, 2, 2, 0.1);
        let truth = problem.truth().unwrap().clone();
        let cfg = SolverConfig::new(4);
        let plain = solve_crr(&problem, &cfg).unwrap();
        let (est, trace) = solve_crr_traced(&problem, &cfg).unwrap();
        assert_eq!(plain.w, est.w);
        assert_eq!(plain.b, est.b);

        // iteration 0: nothing detected yet
        let first = trace.rows.first().unwrap();
        assert_eq!(first.iter, 0);
        assert_eq!(first.md, truth.k_star());
        assert_eq!(first.fa, 0);
        assert_eq!(first.ci, 0);
        assert!((first.b_err - truth.b_star.norm()).abs() < 1e-12);

        for row in &trace.rows {
            assert_eq!(row.md + row.ci, truth.k_star());
        }
        assert_eq!(trace.rows.len(), est.iters + 1);
        // fa + ci equals the estimated support size at termination
        let b_card = est.b.iter().filter(|&&x| x != 0.0).count();
        let last = trace.rows.last().unwrap();
        assert_eq!(last.fa + last.ci, b_card);
        assert!(b_card <= cfg.k);
    }

    #[test]
    fn traced_requires_truth() {
        let x = DMatrix::identity(2, 2);
        let y = DVector::from_row_slice(&[1.0, 2.0]);
        let problem = RegressionProblem::new(x, y, None).unwrap();
        assert_eq!(
            solve_crr_traced(&problem, &SolverConfig::new(1)).err(),
            Some(Error::MissingTruth)
        );
    }

    #[test]
    fn lambda_and_sets_vanish_at_truth() {
        let problem = gross_instance(99, 30, 2, 2, 0.0);
        let truth = problem.truth().unwrap();
        let p = Projector::new(problem.design()).unwrap();
        let row = trace_row(
            &p,
            problem.responses(),
            &truth.b_star,
            &truth.b_star,
            &truth.support,
            0,
        );
        assert!(row.lambda_norm < 1e-12);
        assert_eq!(row.md, 0);
        assert_eq!(row.fa, 0);
        assert_eq!(row.ci, truth.k_star());
    }

    #[test]
    fn b_error_non_increasing_after_first_iteration_on_gross_instance() {
        // regression fixture observed on the oracle-verified family
        let problem = gross_instance(5, 24, 2, 2, 0.1);
        let cfg = SolverConfig::new(2);
        let (_, trace) = solve_crr_traced(&problem, &cfg).unwrap();
        for pair in trace.rows[1..].windows(2) {
            assert!(pair[1].b_err <= pair[0].b_err + 1e-9);
        }
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let x = DMatrix::identity(2, 2);
        let y = DVector::from_row_slice(&[1.0, 2.0]);
        let problem = RegressionProblem::new(x, y, None).unwrap();
        assert!(matches!(
            solve_crr(&problem, &SolverConfig::new(3)),
            Err(Error::InvalidK { .. })
        ));
    }
}
