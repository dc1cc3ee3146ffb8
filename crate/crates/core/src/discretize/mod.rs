//! Finite-difference operators on transverse and slab grids, and the linear-solve
//! contract shared by every solver.
//!
//! All operators act on unknown nodes only; Dirichlet values enter through the
//! right-hand side.

pub mod linalg;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Potential, SlabGrid, TransverseGrid};
pub use linalg::{BandLu, Csr, PivotedBandLu, Tridiagonal, TridiagonalLu};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub matrix: Csr,
    pub symmetric: bool,
    /// Which continuous operator this discretizes.
    pub note: String,
}

impl SparseOperator {
    pub fn from_triplets(n: usize, triplets: Vec<(usize, usize, f64)>, note: impl Into<String>) -> Self {
        let matrix = Csr::from_triplets(n, triplets);
        let symmetric = matrix.is_symmetric(1e-14);
        SparseOperator {
            matrix,
            symmetric,
            note: note.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul(x)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.dim())
            .flat_map(|r| self.matrix.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    /// Positive diagonal and nonpositive off-diagonal entries.
    pub fn has_m_matrix_signs(&self) -> bool {
        (0..self.dim()).all(|r| {
            self.matrix
                .row(r)
                .all(|(c, v)| if c == r { v > 0.0 } else { v <= 0.0 })
        })
    }
}

/// Tridiagonal form of `-Δ_y + coeff(y) + shift` on the transverse unknowns.
/// `coeff` is sampled at every node of the grid.
pub fn transverse_tridiagonal(grid: &TransverseGrid, coeff: &[f64], shift: f64) -> Tridiagonal {
    let nodes: Vec<usize> = grid.unknowns().collect();
    let m = nodes.len();
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for (k, &j) in nodes.iter().enumerate() {
        let s = grid.stencil(j);
        lower[k] = if k > 0 { s.lower } else { 0.0 };
        upper[k] = if k + 1 < m { s.upper } else { 0.0 };
        diag[k] = s.diag + coeff[j] + shift;
    }
    Tridiagonal::new(lower, diag, upper)
}

/// `-Δ_y + alpha g(y) + shift` on the transverse unknowns.
pub fn assemble_transverse(
    grid: &TransverseGrid,
    potential: &Potential,
    alpha: f64,
    shift: f64,
) -> Result<SparseOperator> {
    if alpha < 0.0 {
        return Err(Error::invalid(format!("alpha must be nonnegative, got {alpha}")));
    }
    let coeff: Vec<f64> = potential.eval_on(grid).iter().map(|g| alpha * g).collect();
    let tri = transverse_tridiagonal(grid, &coeff, shift);
    Ok(tridiagonal_operator(
        &tri,
        format!("-Δ_y + {alpha} g(y) + {shift} on {} nodes", grid.layout()),
    ))
}

pub fn tridiagonal_operator(tri: &Tridiagonal, note: String) -> SparseOperator {
    let m = tri.len();
    let mut t = Vec::with_capacity(3 * m);
    for k in 0..m {
        if k > 0 {
            t.push((k, k - 1, tri.lower[k]));
        }
        t.push((k, k, tri.diag[k]));
        if k + 1 < m {
            t.push((k, k + 1, tri.upper[k]));
        }
    }
    SparseOperator::from_triplets(m, t, note)
}

/// Differencing used for the advection term `-c ∂_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvectionScheme {
    Central,
    Upwind,
}

impl AdvectionScheme {
    /// Central differences while the cell Péclet number `|c| hx / 2` stays at most 1.
    pub fn select(c: f64, hx: f64) -> Self {
        if c.abs() * hx / 2.0 <= 1.0 {
            AdvectionScheme::Central
        } else {
            AdvectionScheme::Upwind
        }
    }

    /// Coefficients `(west, centre, east)` of `-∂_11 - c ∂_1` on a uniform grid.
    pub fn x_stencil(&self, c: f64, hx: f64) -> (f64, f64, f64) {
        let d = 1.0 / (hx * hx);
        match self {
            AdvectionScheme::Central => {
                let a = c / (2.0 * hx);
                (-d + a, 2.0 * d, -d - a)
            }
            AdvectionScheme::Upwind => {
                let a = c.abs() / hx;
                if c >= 0.0 {
                    (-d, 2.0 * d + a, -d - a)
                } else {
                    (-d - a, 2.0 * d + a, -d)
                }
            }
        }
    }
}

/// `-Δ - c ∂_1 + coeff(y) + shift` on a slab, unknowns ordered with the transverse index fastest.
#[derive(Debug, Clone)]
pub struct SlabOperator {
    pub op: SparseOperator,
    pub scheme: AdvectionScheme,
    /// x1 stencil coefficients `(west, centre, east)`.
    pub x_stencil: (f64, f64, f64),
    pub nx_unknowns: usize,
    pub ny_unknowns: usize,
}

impl SlabOperator {
    /// Right-hand-side contribution of Dirichlet data on the faces `x1 = -a` and `x1 = a`
    /// (full transverse nodal vectors).
    pub fn boundary_rhs(&self, grid: &SlabGrid, left: &[f64], right: &[f64]) -> Vec<f64> {
        let m = self.ny_unknowns;
        let mut rhs = vec![0.0; self.op.dim()];
        let (west, _, east) = self.x_stencil;
        let first = grid.transverse().unknowns().start;
        for k in 0..m {
            rhs[k] -= west * left[first + k];
            let last = (self.nx_unknowns - 1) * m + k;
            rhs[last] -= east * right[first + k];
        }
        rhs
    }
}

/// Assembles `-Δ - c ∂_1 + coeff(y) + shift` on the slab; `coeff` is sampled at every
/// transverse node. Upwinding replaces central differences when `|c| hx / 2 > 1`.
pub fn assemble_slab(grid: &SlabGrid, coeff: &[f64], c: f64, shift: f64) -> SlabOperator {
    assemble_slab_with_diag(grid, coeff, c, shift, None)
}

/// As [`assemble_slab`], with an extra nodal diagonal over the unknowns (Newton Jacobians).
pub fn assemble_slab_with_diag(
    grid: &SlabGrid,
    coeff: &[f64],
    c: f64,
    shift: f64,
    extra_diag: Option<&[f64]>,
) -> SlabOperator {
    let tg = grid.transverse();
    let scheme = AdvectionScheme::select(c, grid.hx());
    let (west, centre, east) = scheme.x_stencil(c, grid.hx());
    let tri = transverse_tridiagonal(tg, coeff, shift);
    let m = tri.len();
    let nxu = grid.nx() - 2;
    let n = nxu * m;
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..nxu {
        for k in 0..m {
            let r = i * m + k;
            let mut d = tri.diag[k] + centre;
            if let Some(extra) = extra_diag {
                d += extra[r];
            }
            t.push((r, r, d));
            if k > 0 {
                t.push((r, r - 1, tri.lower[k]));
            }
            if k + 1 < m {
                t.push((r, r + 1, tri.upper[k]));
            }
            if i > 0 {
                t.push((r, r - m, west));
            }
            if i + 1 < nxu {
                t.push((r, r + m, east));
            }
        }
    }
    let note = format!(
        "-Δ - {c} ∂_1 + coeff(y) + {shift} on {}x{} slab ({:?} advection)",
        grid.nx(),
        tg.len(),
        scheme
    );
    SlabOperator {
        op: SparseOperator::from_triplets(n, t, note),
        scheme,
        x_stencil: (west, centre, east),
        nx_unknowns: nxu,
        ny_unknowns: m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ConjugateGradient,
    BiCgStabIlu0,
    DirectBand,
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub method: SolveMethod,
    pub iterations: usize,
    /// `‖Ax - b‖₂ / ‖b‖₂`
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub rtol: f64,
    pub max_iter: usize,
    /// Skip the Krylov attempt and factor directly.
    pub direct: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rtol: 1e-10,
            max_iter: 5000,
            direct: false,
        }
    }
}

/// Solves `A x = b`: conjugate gradients for symmetric operators, ILU(0)-preconditioned
/// BiCGSTAB otherwise, with a banded direct factorization as the fallback.
pub fn linear_solve(a: &SparseOperator, b: &[f64], opts: SolveOptions) -> Result<LinearSolution> {
    if b.len() != a.dim() {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, operator has dimension {}",
            b.len(),
            a.dim()
        )));
    }
    let bnorm = linalg::norm2(b);
    let iterative = if opts.direct {
        None
    } else if a.symmetric {
        Some((
            SolveMethod::ConjugateGradient,
            linalg::conjugate_gradient(&a.matrix, b, opts.rtol, opts.max_iter),
        ))
    } else {
        Some((
            SolveMethod::BiCgStabIlu0,
            linalg::bicgstab_ilu0(&a.matrix, b, opts.rtol, opts.max_iter),
        ))
    };
    let krylov_error = match iterative {
        Some((method, Ok(out))) => {
            return Ok(LinearSolution {
                x: out.x,
                method,
                iterations: out.iterations,
                residual: out.residual,
            })
        }
        Some((_, Err(e))) => Some(e),
        None => None,
    };
    let lu = BandLu::factor(&a.matrix).map_err(|e| match krylov_error {
        Some(k) => Error::Breakdown {
            what: "linear solve",
            iteration: 0,
            detail: format!("Krylov: {k}; direct: {e}"),
        },
        None => e,
    })?;
    let x = lu.solve(b);
    let r: Vec<f64> = a.apply(&x).iter().zip(b).map(|(p, q)| p - q).collect();
    let residual = if bnorm > 0.0 { linalg::norm2(&r) / bnorm } else { 0.0 };
    if residual > opts.rtol.max(1e-8) {
        return Err(Error::NoConvergence {
            what: "direct band solve",
            iterations: 1,
            residual,
        });
    }
    Ok(LinearSolution {
        x,
        method: SolveMethod::DirectBand,
        iterations: 1,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Layout;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_stencil_rows() {
        // three interior nodes with hy = 1
        let g = TransverseGrid::new(Layout::Line, 2.0, 5).unwrap();
        let zero = vec![0.0; 5];
        let tri = transverse_tridiagonal(&g, &zero, 0.0);
        assert_eq!(tri.diag, vec![2.0, 2.0, 2.0]);
        assert_eq!(&tri.lower[1..], &[-1.0, -1.0]);
        assert_eq!(&tri.upper[..2], &[-1.0, -1.0]);
        let op = assemble_transverse(&g, &Potential::Quadratic, 0.0, 0.0).unwrap();
        assert!(op.symmetric);
        assert!(op.has_m_matrix_signs());
    }

    #[test]
    fn potential_raises_the_diagonal() {
        let g = TransverseGrid::new(Layout::Line, 4.0, 9).unwrap();
        let flat = assemble_transverse(&g, &Potential::Quadratic, 0.0, 0.0).unwrap();
        let conf = assemble_transverse(&g, &Potential::Quadratic, 1.0, 0.0).unwrap();
        // node y = 2 is node 6, unknown 5
        assert_abs_diff_eq!(g.coords()[6], 2.0);
        assert_abs_diff_eq!(conf.matrix.get(5, 5) - flat.matrix.get(5, 5), 4.0);
    }

    #[test]
    fn radial_rows_annihilate_constants() {
        let g = TransverseGrid::new(Layout::Radial(2), 3.0, 31).unwrap();
        let op = assemble_transverse(&g, &Potential::Quadratic, 0.0, 0.0).unwrap();
        let ones = vec![1.0; op.dim()];
        let out = op.apply(&ones);
        // the last unknown couples to the Dirichlet node, the rest see a constant
        for v in &out[..out.len() - 1] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-10);
        }
        // first-derivative weight (d-1)/r shows up as upper/lower asymmetry
        let j = 10;
        let s = g.stencil(j);
        let r = g.coords()[j];
        let h = g.spacing();
        assert_abs_diff_eq!((s.lower - s.upper) * h, 1.0 / r, epsilon = 1e-3);
    }

    fn dense_kron_sum(ax: &[Vec<f64>], ay: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (p, q) = (ax.len(), ay.len());
        let mut out = vec![vec![0.0; p * q]; p * q];
        for i in 0..p {
            for k in 0..q {
                for i2 in 0..p {
                    for k2 in 0..q {
                        let mut v = 0.0;
                        if k == k2 {
                            v += ax[i][i2];
                        }
                        if i == i2 {
                            v += ay[k][k2];
                        }
                        out[i * q + k][i2 * q + k2] = v;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn slab_operator_is_kronecker_sum_at_zero_speed() {
        let tg = TransverseGrid::new(Layout::Line, 1.0, 7).unwrap();
        let slab = SlabGrid::new(1.0, 7, tg.clone()).unwrap();
        let coeff = Potential::Quadratic.eval_on(&tg);
        let op = assemble_slab(&slab, &coeff, 0.0, 0.0);
        assert_eq!(op.op.dim(), 25);
        assert!(op.op.symmetric);
        // 1D pieces built independently of the slab assembly
        let hx = slab.hx();
        let ax: Vec<Vec<f64>> = (0..5)
            .map(|i| {
                (0..5)
                    .map(|j| match (i as i64 - j as i64).abs() {
                        0 => 2.0 / (hx * hx),
                        1 => -1.0 / (hx * hx),
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        let hy = tg.spacing();
        let ay: Vec<Vec<f64>> = (0..5)
            .map(|k| {
                let y = tg.coords()[k + 1];
                (0..5)
                    .map(|j| match (k as i64 - j as i64).abs() {
                        0 => 2.0 / (hy * hy) + y * y,
                        1 => -1.0 / (hy * hy),
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        let expected = dense_kron_sum(&ax, &ay);
        let got = op.op.matrix.to_dense();
        for (er, gr) in expected.iter().zip(&got) {
            for (e, g) in er.iter().zip(gr) {
                assert_abs_diff_eq!(e, g, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn peclet_rule() {
        assert_eq!(AdvectionScheme::select(2.0, 0.5), AdvectionScheme::Central);
        assert_eq!(AdvectionScheme::select(10.0, 0.5), AdvectionScheme::Upwind);
        let tg = TransverseGrid::new(Layout::Line, 1.0, 5).unwrap();
        let slab = SlabGrid::new(2.0, 9, tg.clone()).unwrap();
        let coeff = vec![0.0; 5];
        let op = assemble_slab(&slab, &coeff, 10.0, 0.0);
        assert_eq!(op.scheme, AdvectionScheme::Upwind);
        assert!(op.op.has_m_matrix_signs());
        let op = assemble_slab(&slab, &coeff, -10.0, 0.0);
        assert!(op.op.has_m_matrix_signs());
        assert!(!op.op.symmetric);
    }

    #[test]
    fn identity_solve() {
        let op = SparseOperator::from_triplets(4, (0..4).map(|i| (i, i, 1.0)).collect(), "I");
        let b = vec![1.0, -2.0, 3.5, 0.25];
        let sol = linear_solve(&op, &b, SolveOptions::default()).unwrap();
        for (x, y) in sol.x.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn poisson_midpoint_converges_to_one_eighth() {
        // -u'' = 1 on [0, 1] with u(0) = u(1) = 0 has u(1/2) = 1/8
        let mut prev_err = f64::INFINITY;
        for n in [21usize, 41, 81, 161] {
            let g = TransverseGrid::new(Layout::Line, 0.5, n).unwrap();
            let op = assemble_transverse(&g, &Potential::Quadratic, 0.0, 0.0).unwrap();
            let b = vec![1.0; op.dim()];
            let sol = linear_solve(&op, &b, SolveOptions::default()).unwrap();
            assert!(sol.residual <= 1e-10);
            let mid = sol.x[(op.dim() - 1) / 2];
            let err = (mid - 0.125).abs();
            assert!(err < 1e-10 || err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-10);
    }

    #[test]
    fn singular_neumann_fixture_is_reported() {
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            t.push((i, i, deg));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let op = SparseOperator::from_triplets(n, t, "Neumann Laplacian");
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let opts = SolveOptions {
            max_iter: 200,
            ..SolveOptions::default()
        };
        assert!(linear_solve(&op, &b, opts).is_err());
    }

    #[test]
    fn nonsymmetric_slab_solve_meets_tolerance() {
        let tg = TransverseGrid::new(Layout::Radial(2), 3.0, 16).unwrap();
        let slab = SlabGrid::new(3.0, 31, tg.clone()).unwrap();
        let coeff = Potential::Quadratic.eval_on(&tg);
        let op = assemble_slab(&slab, &coeff, 1.3, 0.5);
        let b: Vec<f64> = (0..op.op.dim()).map(|i| 1.0 + (i % 5) as f64).collect();
        let sol = linear_solve(&op.op, &b, SolveOptions::default()).unwrap();
        assert_eq!(sol.method, SolveMethod::BiCgStabIlu0);
        assert!(sol.residual <= 1e-10);
        let direct = linear_solve(&op.op, &b, SolveOptions { direct: true, ..Default::default() }).unwrap();
        for (p, q) in sol.x.iter().zip(&direct.x) {
            assert!((p - q).abs() < 1e-8 * q.abs().max(1.0));
        }
    }
}
