//! Principal eigenpairs of `-Δ_y + coeff(y)` on transverse grids.
//!
//! Shifted inverse-power iteration: the shift sits below the Gershgorin lower
//! bound, so the shifted operator is a nonsingular M-matrix with a positive
//! inverse and the iteration converges to the positive (Perron) eigenvector.

use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::transverse_tridiagonal;
use crate::error::{Error, Result};
use crate::geometry::{Potential, TransverseGrid};
use crate::nonlinearity::{Heterogeneity, Reaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linearization {
    ZeroSolution,
    Profile,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Nodal values, positive at unknown nodes, `∫ φ² = 1` by the grid quadrature.
    pub phi: Vec<f64>,
    /// `‖Lφ - λφ‖` in the quadrature-weighted L² norm.
    pub residual: f64,
    pub alpha: f64,
    pub about: Linearization,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-11,
            max_iter: 500_000,
        }
    }
}

/// Principal eigenpair of `-Δ_y + coeff(y)`; `coeff` holds one value per grid node.
pub fn principal_pair(grid: &TransverseGrid, coeff: &[f64], opts: EigenOptions) -> Result<(f64, Vec<f64>, f64, usize)> {
    let tri = transverse_tridiagonal(grid, coeff, 0.0);
    let m = tri.len();
    let nodes: Vec<usize> = grid.unknowns().collect();
    let w: Vec<f64> = nodes.iter().map(|&j| grid.weights()[j]).collect();

    let gershgorin = (0..m)
        .map(|k| tri.diag[k] - tri.lower[k].abs() - tri.upper[k].abs())
        .fold(f64::INFINITY, f64::min);
    let shift = gershgorin - 1e-3 * gershgorin.abs().max(1.0);
    let shifted: Vec<f64> = vec![-shift; m];
    let lu = tri.shifted(&shifted).factor()?;

    let wnorm = |x: &[f64]| x.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
    let mut x: Vec<f64> = vec![1.0; m];
    let n0 = wnorm(&x);
    x.iter_mut().for_each(|v| *v /= n0);

    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        lu.solve_in_place(&mut x);
        let nrm = wnorm(&x);
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(Error::Breakdown {
                what: "inverse power iteration",
                iteration: it,
                detail: format!("iterate norm {nrm:e}"),
            });
        }
        x.iter_mut().for_each(|v| *v /= nrm);
        let ax = tri.apply(&x);
        lambda = ax.iter().zip(&x).zip(&w).map(|((a, b), w)| w * a * b).sum();
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
        residual = wnorm(&r);
        if residual <= opts.tol * lambda.abs().max(1.0) {
            let mut phi = vec![0.0; grid.len()];
            for (k, &j) in nodes.iter().enumerate() {
                phi[j] = x[k];
            }
            if phi.iter().any(|&v| v < 0.0) {
                return Err(Error::Ordering("principal eigenvector lost positivity".into()));
            }
            return Ok((lambda, phi, residual, it));
        }
    }
    let _ = lambda;
    Err(Error::NoConvergence {
        what: "inverse power iteration",
        iterations: opts.max_iter,
        residual,
    })
}

/// Principal eigenpair of `-Δ_y + αg(y) - f'(0)`.
pub fn principal_eigen(
    grid: &TransverseGrid,
    potential: &Potential,
    alpha: f64,
    fprime0: f64,
) -> Result<EigenResult> {
    principal_eigen_with(grid, potential, alpha, fprime0, EigenOptions::default())
}

pub fn principal_eigen_with(
    grid: &TransverseGrid,
    potential: &Potential,
    alpha: f64,
    fprime0: f64,
    opts: EigenOptions,
) -> Result<EigenResult> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let coeff: Vec<f64> = potential
        .eval_on(grid)
        .iter()
        .map(|g| alpha * g - fprime0)
        .collect();
    let (lambda, phi, residual, iterations) = principal_pair(grid, &coeff, opts)?;
    Ok(EigenResult {
        lambda,
        phi,
        residual,
        alpha,
        about: Linearization::ZeroSolution,
        iterations,
    })
}

/// Eigenvalue on the grid and on its refinement (spacing halved), combined by
/// Richardson extrapolation for the second-order discretization.
pub fn principal_eigen_extrapolated(
    grid: &TransverseGrid,
    potential: &Potential,
    alpha: f64,
    fprime0: f64,
) -> Result<f64> {
    let coarse = principal_eigen(grid, potential, alpha, fprime0)?.lambda;
    let fine_grid = TransverseGrid::new(grid.layout(), grid.radius(), 2 * grid.len() - 1)?;
    let fine = principal_eigen(&fine_grid, potential, alpha, fprime0)?.lambda;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `(∫|∇φ|² + ∫ coeff φ²) / ∫φ²` by the grid quadrature.
pub fn rayleigh_quotient(grid: &TransverseGrid, coeff: &[f64], phi: &[f64]) -> f64 {
    let pot: Vec<f64> = coeff.iter().zip(phi).map(|(c, p)| c * p).collect();
    (grid.dirichlet_energy(phi) + grid.inner(&pot, phi)) / grid.inner(phi, phi)
}

/// Eigenvalues along a sorted list of `α`, solved in parallel, in input order.
pub fn eigen_curve(
    alphas: &[f64],
    grid: &TransverseGrid,
    potential: &Potential,
    fprime0: f64,
) -> Result<Vec<EigenResult>> {
    if alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::invalid("alpha values must be positive"));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("alpha values must be strictly increasing"));
    }
    alphas
        .par_iter()
        .map(|&a| principal_eigen(grid, potential, a, fprime0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alpha0 {
    /// `+∞` when `λ_α` stays negative up to `alpha_max`.
    pub value: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// `λ` at `alpha_max`, recorded when no threshold was found.
    pub lambda_at_max: Option<f64>,
}

impl Alpha0 {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

impl std::fmt::Display for Alpha0 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.value.is_finite() {
            write!(f, "alpha0 = {:.6}", self.value)
        } else {
            write!(f, "alpha0 = +inf (case ii)")
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Alpha0Options {
    pub alpha_max: f64,
    pub atol: f64,
}

impl Default for Alpha0Options {
    fn default() -> Self {
        Alpha0Options {
            alpha_max: 1e3,
            atol: 1e-4,
        }
    }
}

/// Bisection on `α ↦ λ_α` for the sign change of the principal eigenvalue.
pub fn find_alpha0(
    grid: &TransverseGrid,
    potential: &Potential,
    fprime0: f64,
    opts: Alpha0Options,
) -> Result<Alpha0> {
    let lambda = |a: f64| principal_eigen(grid, potential, a, fprime0).map(|e| e.lambda);
    if fprime0 <= 0.0 {
        // λ_α > -f'(0) >= 0 for every α > 0
        return Ok(Alpha0 {
            value: 0.0,
            bracket: (0.0, 0.0),
            lambda_at_max: None,
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0f64.min(opts.alpha_max);
    loop {
        let l = lambda(hi)?;
        if l > 0.0 {
            break;
        }
        if hi >= opts.alpha_max {
            return Ok(Alpha0 {
                value: f64::INFINITY,
                bracket: (hi, f64::INFINITY),
                lambda_at_max: Some(l),
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(opts.alpha_max);
    }
    while hi - lo > opts.atol {
        let mid = 0.5 * (lo + hi);
        if lambda(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Alpha0 {
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        lambda_at_max: None,
    })
}

/// [`find_alpha0`] on the grid and its refinement, combined by Richardson extrapolation.
pub fn find_alpha0_extrapolated(
    grid: &TransverseGrid,
    potential: &Potential,
    fprime0: f64,
    opts: Alpha0Options,
) -> Result<Alpha0> {
    let coarse = find_alpha0(grid, potential, fprime0, opts)?;
    if !coarse.is_finite() {
        return Ok(coarse);
    }
    let fine_grid = TransverseGrid::new(grid.layout(), grid.radius(), 2 * grid.len() - 1)?;
    let fine = find_alpha0(&fine_grid, potential, fprime0, opts)?;
    if !fine.is_finite() {
        return Ok(fine);
    }
    Ok(Alpha0 {
        value: (4.0 * fine.value - coarse.value) / 3.0,
        ..fine
    })
}

/// Principal eigenpair on the ball of radius `radius` with Dirichlet data on its boundary.
pub fn dirichlet_ball_eigen(
    grid: &TransverseGrid,
    radius: f64,
    potential: &Potential,
    alpha: f64,
    fprime0: f64,
) -> Result<EigenResult> {
    let ball = grid.truncated(radius)?;
    principal_eigen(&ball, potential, alpha, fprime0)
}

/// Principal eigenpair of the linearization `-Δ_y - ∂_s h(y, V)` about a profile `V`.
pub fn linearized_stability(
    grid: &TransverseGrid,
    heterogeneity: &Heterogeneity,
    reaction: &Reaction,
    profile: &[f64],
) -> Result<EigenResult> {
    if profile.len() != grid.len() {
        return Err(Error::invalid("profile does not match the grid"));
    }
    let coeff: Vec<f64> = grid
        .radii()
        .iter()
        .zip(profile)
        .map(|(&r, &v)| -heterogeneity.dh_ds(reaction, r, v))
        .collect();
    let (lambda, phi, residual, iterations) = principal_pair(grid, &coeff, EigenOptions::default())?;
    let alpha = match heterogeneity {
        Heterogeneity::Confined { alpha, .. } => *alpha,
        Heterogeneity::Csd(_) => 0.0,
    };
    let zero = profile.iter().all(|&v| v == 0.0);
    Ok(EigenResult {
        lambda,
        phi,
        residual,
        alpha,
        about: if zero {
            Linearization::ZeroSolution
        } else {
            Linearization::Profile
        },
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Layout;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn line(r: f64, h: f64) -> TransverseGrid {
        TransverseGrid::new(Layout::Line, r, (2.0 * r / h).round() as usize + 1).unwrap()
    }

    #[test]
    fn harmonic_ground_state_1d() {
        let g = line(8.0, 0.02);
        let e = principal_eigen(&g, &Potential::Quadratic, 1.0, 1.0).unwrap();
        assert!(e.lambda.abs() <= 1e-3, "lambda = {}", e.lambda);
        let coeff: Vec<f64> = Potential::Quadratic.eval_on(&g).iter().map(|v| v - 1.0).collect();
        assert_abs_diff_eq!(rayleigh_quotient(&g, &coeff, &e.phi), e.lambda, epsilon = 1e-8);
        assert_abs_diff_eq!(g.inner(&e.phi, &e.phi), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn harmonic_eigenfunction_shape() {
        let g = line(8.0, 0.02);
        let e = principal_eigen(&g, &Potential::Quadratic, 4.0, 0.0).unwrap();
        assert_abs_diff_eq!(e.lambda, 2.0, epsilon = 1e-3);
        let peak = e.phi[g.origin_index()];
        for (y, p) in g.coords().iter().zip(&e.phi) {
            assert!((p / peak - (-y * y).exp()).abs() < 1e-3);
        }
    }

    #[test]
    fn harmonic_radial_2() {
        let g = TransverseGrid::new(Layout::Radial(2), 8.0, 801).unwrap();
        let e = principal_eigen(&g, &Potential::Quadratic, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e.lambda, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn shift_covariance() {
        let g = line(6.0, 0.05);
        let a = principal_eigen(&g, &Potential::Quadratic, 0.7, 1.0).unwrap();
        let b = principal_eigen(&g, &Potential::Quadratic, 0.7, 1.3).unwrap();
        assert_abs_diff_eq!(b.lambda, a.lambda - 0.3, epsilon = 1e-10);
        for (p, q) in a.phi.iter().zip(&b.phi) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-8);
        }
    }

    #[test]
    fn second_order_grid_convergence() {
        let exact = 0.0;
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&h| (principal_eigen(&line(8.0, h), &Potential::Quadratic, 1.0, 1.0).unwrap().lambda - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn curve_matches_harmonic_law() {
        let g = line(16.0, 0.02);
        let curve = eigen_curve(&[0.25, 1.0, 4.0], &g, &Potential::Quadratic, 1.0).unwrap();
        let expected = [-0.5, 0.0, 1.0];
        for (e, x) in curve.iter().zip(expected) {
            assert_abs_diff_eq!(e.lambda, x, epsilon = 1e-3);
        }
        assert!(eigen_curve(&[1.0, 0.5], &g, &Potential::Quadratic, 1.0).is_err());
    }

    #[test]
    fn alpha0_quadratic() {
        let g = line(8.0, 0.05);
        let a = find_alpha0(&g, &Potential::Quadratic, 1.0, Alpha0Options::default()).unwrap();
        assert_abs_diff_eq!(a.value, 1.0, epsilon = 2e-3);
        let a = find_alpha0(&g, &Potential::Quadratic, 2.0, Alpha0Options::default()).unwrap();
        assert_abs_diff_eq!(a.value, 4.0, epsilon = 1e-2);
    }

    #[test]
    fn alpha0_plateau_is_infinite() {
        // Dirichlet ground energy of [-2, 2] is (π/4)² < f'(0) = 1
        let g = line(8.0, 0.02);
        let p = Potential::plateau(2.0).unwrap();
        let a = find_alpha0(&g, &p, 1.0, Alpha0Options::default()).unwrap();
        assert!(!a.is_finite());
        assert!(a.lambda_at_max.unwrap() < 0.0);
        assert_eq!(a.to_string(), "alpha0 = +inf (case ii)");
    }

    #[test]
    fn ball_eigenvalues_decrease_with_radius() {
        let g = line(8.0, 0.02);
        let p = Potential::Quadratic;
        let r2 = dirichlet_ball_eigen(&g, 2.0, &p, 1.0, 1.0).unwrap().lambda;
        let r6 = dirichlet_ball_eigen(&g, 6.0, &p, 1.0, 1.0).unwrap().lambda;
        let full = principal_eigen(&g, &p, 1.0, 1.0).unwrap().lambda;
        assert!(r2 > r6 && r6 > full - 1e-12);
        let same = dirichlet_ball_eigen(&g, 8.0, &p, 1.0, 1.0).unwrap().lambda;
        assert_abs_diff_eq!(same, full, epsilon = 1e-6);
    }

    #[test]
    fn plateau_ball_is_interval_dirichlet_laplacian() {
        // oracle: the Dirichlet Laplacian on [-2, 2] has ground energy (π/4)²
        let g = line(8.0, 0.01);
        let p = Potential::plateau(2.0).unwrap();
        for alpha in [0.5, 7.0] {
            let e = dirichlet_ball_eigen(&g, 2.0, &p, alpha, 0.0).unwrap();
            assert_abs_diff_eq!(e.lambda, (PI / 4.0).powi(2), epsilon = 1e-4);
        }
    }

    #[test]
    fn linearization_about_zero_is_principal_eigen() {
        let g = line(6.0, 0.05);
        let f = Reaction::kpp(1.0).unwrap();
        let h = Heterogeneity::confined(0.5, Potential::Quadratic);
        let lin = linearized_stability(&g, &h, &f, &vec![0.0; g.len()]).unwrap();
        let direct = principal_eigen(&g, &Potential::Quadratic, 0.5, 1.0).unwrap();
        assert_eq!(lin.lambda, direct.lambda);
        assert_eq!(lin.about, Linearization::ZeroSolution);
    }
}
