//! Spectral quantities of stationary AR(d) processes: the spectral density,
//! its extrema, the companion-form VAR(1) embedding and its spectral bound.
//!
//! Complex arithmetic is carried out explicitly on (re, im) pairs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Spectral radius margin: coefficients with companion radius above
/// `1 - STATIONARITY_MARGIN` are treated as non-stationary.
pub const STATIONARITY_MARGIN: f64 = 1e-9;

/// Default frequency grid resolution for extremum searches.
pub const DEFAULT_GRID_SIZE: usize = 4096;

const MIN_GRID_SIZE: usize = 256;

/// Density extrema and the VAR(1) spectral bound for one coefficient vector.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// sup of the spectral density over `[0, 2pi)`.
    pub rho_max: f64,
    /// inf of the spectral density over `[0, 2pi)`.
    pub rho_min: f64,
    /// Spectral bound of the companion VAR(1) embedding; no order relation
    /// with `rho_max` is asserted.
    pub var_bound: f64,
    pub grid_size: usize,
    pub sigma: f64,
    pub w: DVector<f64>,
}

/// Companion matrix of an AR(d) recursion: coefficients along the first row,
/// ones on the subdiagonal.
pub fn companion_matrix(w: &DVector<f64>) -> DMatrix<f64> {
    let d = w.len();
    assert!(d >= 1, "companion matrix needs at least one coefficient");
    DMatrix::from_fn(d, d, |r, c| {
        if r == 0 {
            w[c]
        } else if r == c + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// True iff the AR(d) recursion with these coefficients is stationary and
/// stable: spectral radius of the companion matrix below `1 - 1e-9`.
pub fn stationarity_check(w: &DVector<f64>) -> bool {
    if w.is_empty() {
        return true;
    }
    let radius = companion_matrix(w)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    radius < 1.0 - STATIONARITY_MARGIN
}

/// Spectral density `rho(omega) = sigma^2 / |1 - sum_k w_k e^{ik omega}|^2`.
pub fn spectral_density(w: &DVector<f64>, sigma: f64, omega: f64) -> Result<f64> {
    if !stationarity_check(w) {
        return Err(Error::NonStationary);
    }
    Ok(density_unchecked(w, sigma, omega))
}

fn density_unchecked(w: &DVector<f64>, sigma: f64, omega: f64) -> f64 {
    let mut re = 1.0;
    let mut im = 0.0;
    for (k, &wk) in w.iter().enumerate() {
        let th = (k as f64 + 1.0) * omega;
        re -= wk * th.cos();
        im -= wk * th.sin();
    }
    sigma * sigma / (re * re + im * im)
}

// Golden-section minimization of `f` on [a, b].
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    f(0.5 * (a + b)).min(fc).min(fd)
}

// Grid scan over [0, 2pi) plus one golden-section refinement around the grid
// argmin; returns the minimum of `f`.
fn grid_refine_min(f: &impl Fn(f64) -> f64, grid_size: usize) -> f64 {
    let step = std::f64::consts::TAU / grid_size as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..grid_size {
        let v = f(i as f64 * step);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = (best_i as f64 - 1.0) * step;
    let hi = (best_i as f64 + 1.0) * step;
    golden_min(f, lo, hi).min(best)
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::InvalidArgs(format!(
            "grid_size {grid_size} below minimum {MIN_GRID_SIZE}"
        )));
    }
    Ok(())
}

/// `(sup rho, inf rho)` over `[0, 2pi)` by dense grid search with local
/// golden-section refinement.
pub fn spectral_extrema(w: &DVector<f64>, sigma: f64, grid_size: usize) -> Result<(f64, f64)> {
    check_grid(grid_size)?;
    if !stationarity_check(w) {
        return Err(Error::NonStationary);
    }
    let neg = |om: f64| -density_unchecked(w, sigma, om);
    let pos = |om: f64| density_unchecked(w, sigma, om);
    let max = -grid_refine_min(&neg, grid_size);
    let min = grid_refine_min(&pos, grid_size);
    Ok((max, min))
}

// lambda_min of the Hermitian matrix (I - W^T e^{i om})(I - W e^{-i om}),
// evaluated through the real symmetric 2d x 2d embedding [[A, -B], [B, A]]
// of H = A + iB, whose spectrum equals that of H with doubled multiplicity.
fn var_matrix_lambda_min(companion: &DMatrix<f64>, wtw: &DMatrix<f64>, omega: f64) -> f64 {
    let d = companion.nrows();
    let (c, s) = (omega.cos(), omega.sin());
    // H = I + W^T W - cos(om) (W + W^T) + i sin(om) (W - W^T)
    let sym = companion + companion.transpose();
    let skew = companion - companion.transpose();
    let a = DMatrix::identity(d, d) + wtw - c * sym;
    let b = s * skew;
    let mut embed = DMatrix::zeros(2 * d, 2 * d);
    embed.view_mut((0, 0), (d, d)).copy_from(&a);
    embed.view_mut((d, d), (d, d)).copy_from(&a);
    embed.view_mut((0, d), (d, d)).copy_from(&(-&b));
    embed.view_mut((d, 0), (d, d)).copy_from(&b);
    embed.symmetric_eigen().eigenvalues.min()
}

/// Spectral bound of the VAR(1) embedding:
/// `sigma^2 / inf_omega lambda_min[(I - W^T e^{i om})(I - W e^{-i om})]`
/// with `W` the companion matrix.
pub fn var_spectral_bound(w: &DVector<f64>, sigma: f64, grid_size: usize) -> Result<f64> {
    check_grid(grid_size)?;
    if !stationarity_check(w) {
        return Err(Error::NonStationary);
    }
    let companion = companion_matrix(w);
    let wtw = companion.transpose() * &companion;
    let f = |om: f64| var_matrix_lambda_min(&companion, &wtw, om);
    let inf = grid_refine_min(&f, grid_size);
    Ok(sigma * sigma / inf)
}

/// Compute all spectral constants for one coefficient vector.
pub fn summarize(w: &DVector<f64>, sigma: f64, grid_size: usize) -> Result<SpectralSummary> {
    let (rho_max, rho_min) = spectral_extrema(w, sigma, grid_size)?;
    let var_bound = var_spectral_bound(w, sigma, grid_size)?;
    Ok(SpectralSummary {
        rho_max,
        rho_min,
        var_bound,
        grid_size,
        sigma,
        w: w.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(data: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(data)
    }

    #[test]
    fn white_noise_density_is_flat() {
        let w = wv(&[0.0]);
        for om in [0.0, 1.0, 2.0, 3.1, 6.0] {
            assert!((spectral_density(&w, 2.0, om).unwrap() - 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ar1_density_closed_form_points() {
        let w = wv(&[0.5]);
        assert!((spectral_density(&w, 1.0, 0.0).unwrap() - 4.0).abs() < 1e-12);
        let at_pi = spectral_density(&w, 1.0, std::f64::consts::PI).unwrap();
        assert!((at_pi - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn ar1_extrema_closed_forms() {
        for &a in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let (max, min) = spectral_extrema(&wv(&[a]), 1.0, DEFAULT_GRID_SIZE).unwrap();
            let cf_max = 1.0 / ((1.0 - a) * (1.0 - a));
            let cf_min = 1.0 / ((1.0 + a) * (1.0 + a));
            assert!(
                (max - cf_max).abs() <= 1e-6 * cf_max,
                "a = {a}: {max} vs {cf_max}"
            );
            assert!(
                (min - cf_min).abs() <= 1e-6 * cf_min,
                "a = {a}: {min} vs {cf_min}"
            );
        }
        let (max, min) = spectral_extrema(&wv(&[0.0]), 1.5, DEFAULT_GRID_SIZE).unwrap();
        assert!((max - 2.25).abs() < 1e-12);
        assert!((min - 2.25).abs() < 1e-12);
    }

    #[test]
    fn extrema_grid_converged_for_ar2() {
        let w = wv(&[0.3, 0.2]);
        let (m1, s1) = spectral_extrema(&w, 1.0, DEFAULT_GRID_SIZE).unwrap();
        let (m2, s2) = spectral_extrema(&w, 1.0, 2 * DEFAULT_GRID_SIZE).unwrap();
        assert!((m1 - m2).abs() < 1e-8);
        assert!((s1 - s2).abs() < 1e-8);
    }

    #[test]
    fn companion_layout() {
        assert_eq!(
            companion_matrix(&wv(&[0.5])),
            DMatrix::from_row_slice(1, 1, &[0.5])
        );
        let c = companion_matrix(&wv(&[0.3, -0.2]));
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 1.0, 0.0]));
        let eig = companion_matrix(&wv(&[0.5])).complex_eigenvalues();
        assert!((eig[0].re - 0.5).abs() < 1e-12 && eig[0].im.abs() < 1e-12);
    }

    #[test]
    fn stationarity_examples() {
        assert!(stationarity_check(&wv(&[0.5])));
        assert!(!stationarity_check(&wv(&[1.0]))); // unit root
                                                   // lambda^2 - 0.5 lambda - 0.5 = 0 has roots 1 and -0.5
        assert!(!stationarity_check(&wv(&[0.5, 0.5])));
    }

    #[test]
    fn density_requires_stationarity() {
        assert_eq!(
            spectral_density(&wv(&[1.1]), 1.0, 0.0),
            Err(Error::NonStationary)
        );
    }

    #[test]
    fn var_bound_matches_ar1_closed_form() {
        let m = var_spectral_bound(&wv(&[0.5]), 1.0, DEFAULT_GRID_SIZE).unwrap();
        assert!((m - 4.0).abs() < 1e-6, "M_W = {m}");
        let white = var_spectral_bound(&wv(&[0.0]), 1.3, DEFAULT_GRID_SIZE).unwrap();
        assert!((white - 1.69).abs() < 1e-9);
    }

    #[test]
    fn var_matrix_is_psd_on_grid() {
        let w = wv(&[0.4, 0.1, -0.2]);
        let companion = companion_matrix(&w);
        let wtw = companion.transpose() * &companion;
        for i in 0..512 {
            let om = std::f64::consts::TAU * i as f64 / 512.0;
            let lmin = var_matrix_lambda_min(&companion, &wtw, om);
            assert!(lmin > -1e-10, "lambda_min = {lmin} at omega = {om}");
        }
    }

    #[test]
    fn density_symmetric_around_pi() {
        let w = wv(&[0.4, -0.1, 0.05]);
        for i in 1..40 {
            let om = 0.07 * i as f64;
            let a = spectral_density(&w, 1.0, om).unwrap();
            let b = spectral_density(&w, 1.0, std::f64::consts::TAU - om).unwrap();
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn grid_size_floor_enforced() {
        assert!(matches!(
            spectral_extrema(&wv(&[0.5]), 1.0, 100),
            Err(Error::InvalidArgs(_))
        ));
    }
}
