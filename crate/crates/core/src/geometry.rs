//! Confinement potentials and the truncated transverse / slab grids.
//!
//! Transverse problems live either on the full line `[-R, R]` or on the radial
//! half-line `[0, R]` for radially symmetric data in `d` transverse dimensions.
//! `Radial(1)` is the even reduction of the line problem. The radial Laplacian
//! is a finite-volume discretization with exact cell measures, so it is
//! self-adjoint for the quadrature weights returned by [`TransverseGrid::weights`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `g(y) = |y|^2`
    Quadratic,
    /// `g = 0` on the ball of radius `r0`, `(|y| - r0)^2` outside.
    Plateau { r0: f64 },
    /// Tabulated radial profile `g(|y|)`, extrapolated linearly past the last row.
    Custom(MonotoneCubic),
}

impl Potential {
    pub fn plateau(r0: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::invalid(format!("plateau radius must be positive, got {r0}")));
        }
        Ok(Potential::Plateau { r0 })
    }

    pub fn custom(r: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if r.first().copied() != Some(0.0) {
            return Err(Error::invalid("custom potential table must start at |y| = 0"));
        }
        if g.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("custom potential must be nonnegative"));
        }
        if g[0] != 0.0 {
            return Err(Error::invalid("custom potential must vanish at the origin"));
        }
        Ok(Potential::Custom(MonotoneCubic::new(r, g)?))
    }

    /// Value at distance `r = |y|` from the axis.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            Potential::Quadratic => r * r,
            Potential::Plateau { r0 } => {
                if r <= *r0 {
                    0.0
                } else {
                    (r - r0) * (r - r0)
                }
            }
            Potential::Custom(table) => table.eval(r).max(0.0),
        }
    }

    /// Potential sampled at every node of the grid (boundary nodes included).
    pub fn eval_on(&self, grid: &TransverseGrid) -> Vec<f64> {
        grid.radii().iter().map(|&r| self.eval(r)).collect()
    }

    /// Warning text when a tabulated potential does not grow past `floor` by the
    /// truncation radius.
    pub fn divergence_warning(&self, grid: &TransverseGrid, floor: f64) -> Option<String> {
        match self {
            Potential::Custom(_) => {
                let edge = self.eval(grid.radius());
                (edge < floor).then(|| {
                    format!(
                        "custom potential reaches only {edge:.3e} at |y| = {} (floor {floor:.3e}); \
                         confinement may be too weak for the truncation",
                        grid.radius()
                    )
                })
            }
            _ => None,
        }
    }

    /// Default truncation radius `8 / alpha^(1/4)`, the scale of the harmonic ground state.
    pub fn default_radius(alpha: f64) -> f64 {
        8.0 / alpha.powf(0.25)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "layout", content = "dim")]
pub enum Layout {
    /// Full line `[-R, R]`, one transverse dimension.
    Line,
    /// Radially symmetric reduction on `[0, R]` in `d` transverse dimensions.
    Radial(u32),
}

impl Layout {
    /// Number of transverse dimensions `N - 1`.
    pub fn dim(&self) -> u32 {
        match self {
            Layout::Line => 1,
            Layout::Radial(d) => *d,
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::Line => write!(f, "line"),
            Layout::Radial(d) => write!(f, "radial-{d}"),
        }
    }
}

/// Surface measure of the unit sphere in `R^d` (`2` for `d = 1`).
pub fn sphere_measure(d: u32) -> f64 {
    let mut omega = if d % 2 == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    let mut k = if d % 2 == 1 { 1 } else { 2 };
    while k < d {
        omega *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    omega
}

/// Three-point stencil of `-Δ` at one node, as coefficients on (left, self, right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub lower: f64,
    pub diag: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransverseGrid {
    layout: Layout,
    radius: f64,
    n: usize,
    h: f64,
    coords: Vec<f64>,
    /// Quadrature weight of each node, including the sphere measure.
    weights: Vec<f64>,
    /// Flux weights `r_{j+1/2}^{d-1}` on the edges `j -> j+1`.
    edge: Vec<f64>,
}

impl TransverseGrid {
    pub fn new(layout: Layout, radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("truncation radius must be positive, got {radius}")));
        }
        if n < 3 {
            return Err(Error::invalid(format!("transverse grid needs at least 3 nodes, got {n}")));
        }
        if let Layout::Radial(0) = layout {
            return Err(Error::invalid("radial layout needs dimension >= 1"));
        }
        let (start, length) = match layout {
            Layout::Line => (-radius, 2.0 * radius),
            Layout::Radial(_) => (0.0, radius),
        };
        let h = length / (n - 1) as f64;
        let coords: Vec<f64> = (0..n).map(|j| start + j as f64 * h).collect();
        let (weights, edge) = match layout {
            Layout::Line => (vec![h; n], vec![1.0; n - 1]),
            Layout::Radial(d) => {
                let omega = sphere_measure(d);
                let df = d as f64;
                let w = coords
                    .iter()
                    .map(|&r| {
                        let hi = r + 0.5 * h;
                        let lo = (r - 0.5 * h).max(0.0);
                        omega * (hi.powf(df) - lo.powf(df)) / df
                    })
                    .collect();
                let e = (0..n - 1)
                    .map(|j| (coords[j] + 0.5 * h).powi(d as i32 - 1))
                    .collect();
                (w, e)
            }
        };
        Ok(TransverseGrid {
            layout,
            radius,
            n,
            h,
            coords,
            weights,
            edge,
        })
    }

    /// Same spacing, truncated at the largest node not beyond `radius`.
    pub fn truncated(&self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= self.radius + 1e-12) {
            return Err(Error::invalid(format!(
                "ball radius {radius} must lie in (0, {}]",
                self.radius
            )));
        }
        let steps = ((radius / self.h) + 1e-9).floor() as usize;
        let n = match self.layout {
            Layout::Line => 2 * steps + 1,
            Layout::Radial(_) => steps + 1,
        };
        let exact = steps as f64 * self.h;
        if self.layout == Layout::Line && (self.n % 2 == 0) {
            return Err(Error::invalid("line grid must have an odd node count to be truncated"));
        }
        Self::new(self.layout, exact, n)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `|y|` at every node.
    pub fn radii(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.abs()).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True for the symmetry condition at `r = 0` (radial layouts).
    pub fn neumann_at_origin(&self) -> bool {
        matches!(self.layout, Layout::Radial(_))
    }

    /// Node nearest to `y = 0`.
    pub fn origin_index(&self) -> usize {
        match self.layout {
            Layout::Line => (self.n - 1) / 2,
            Layout::Radial(_) => 0,
        }
    }

    /// Nodes carrying unknowns; the others hold the Dirichlet value 0.
    pub fn unknowns(&self) -> std::ops::Range<usize> {
        match self.layout {
            Layout::Line => 1..self.n - 1,
            Layout::Radial(_) => 0..self.n - 1,
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.unknowns().len()
    }

    /// Stencil of `-Δ_y` at node `j` (an unknown node).
    pub fn stencil(&self, j: usize) -> Stencil {
        let h = self.h;
        match self.layout {
            Layout::Line => {
                let c = 1.0 / (h * h);
                Stencil {
                    lower: -c,
                    diag: 2.0 * c,
                    upper: -c,
                }
            }
            Layout::Radial(d) => {
                let omega = sphere_measure(d);
                let cell = self.weights[j] / omega;
                let right = self.edge[j] / (h * cell);
                let left = if j == 0 { 0.0 } else { self.edge[j - 1] / (h * cell) };
                Stencil {
                    lower: -left,
                    diag: left + right,
                    upper: -right,
                }
            }
        }
    }

    /// Applies `-Δ_y` to a full nodal vector; rows of Dirichlet nodes are zero.
    pub fn apply_neg_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for j in self.unknowns() {
            let s = self.stencil(j);
            let left = if j == 0 { 0.0 } else { u[j - 1] };
            out[j] = s.lower * left + s.diag * u[j] + s.upper * u[j + 1];
        }
        out
    }

    /// `∫ u v` by the grid quadrature.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn integrate(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, a)| w * a).sum()
    }

    /// `∫ |∇u|^2`, summed over cell edges; consistent with [`Self::apply_neg_laplacian`].
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        let scale = match self.layout {
            Layout::Line => 1.0,
            Layout::Radial(d) => sphere_measure(d),
        };
        scale
            * (0..self.n - 1)
                .map(|j| {
                    let d = u[j + 1] - u[j];
                    self.edge[j] * d * d / self.h
                })
                .sum::<f64>()
    }

    /// Linear interpolation of nodal values at distance `r` (line layouts use the signed coordinate).
    pub fn interpolate(&self, u: &[f64], y: f64) -> f64 {
        let start = self.coords[0];
        let t = (y - start) / self.h;
        if t <= 0.0 {
            return u[0];
        }
        let k = t.floor() as usize;
        if k >= self.n - 1 {
            return u[self.n - 1];
        }
        let frac = t - k as f64;
        (1.0 - frac) * u[k] + frac * u[k + 1]
    }
}

/// Tensor grid over `[-a, a]` times a transverse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabGrid {
    a: f64,
    nx: usize,
    hx: f64,
    transverse: TransverseGrid,
}

impl SlabGrid {
    pub fn new(a: f64, nx: usize, transverse: TransverseGrid) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("slab half-length must be positive, got {a}")));
        }
        if nx < 3 {
            return Err(Error::invalid(format!("slab needs at least 3 nodes in x1, got {nx}")));
        }
        Ok(SlabGrid {
            a,
            nx,
            hx: 2.0 * a / (nx - 1) as f64,
            transverse,
        })
    }

    /// Slab whose x1 spacing is as close as possible to `hx`.
    pub fn with_spacing(a: f64, hx: f64, transverse: TransverseGrid) -> Result<Self> {
        if !(hx > 0.0) {
            return Err(Error::invalid("x1 spacing must be positive"));
        }
        let nx = (2.0 * a / hx).round() as usize + 1;
        Self::new(a, nx, transverse)
    }

    pub fn half_length(&self) -> f64 {
        self.a
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn ny(&self) -> usize {
        self.transverse.len()
    }

    pub fn transverse(&self) -> &TransverseGrid {
        &self.transverse
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.a + i as f64 * self.hx
    }

    pub fn x_coords(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Flat index of node `(i, j)`, transverse index fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// x1 index nearest to `x`.
    pub fn nearest_x(&self, x: f64) -> usize {
        (((x + self.a) / self.hx).round().max(0.0) as usize).min(self.nx - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn make_transverse_examples() {
        let g = TransverseGrid::new(Layout::Line, 10.0, 201).unwrap();
        assert_abs_diff_eq!(g.spacing(), 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(g.coords()[0], -10.0);
        let r = TransverseGrid::new(Layout::Radial(2), 10.0, 201).unwrap();
        assert!(r.neumann_at_origin());
        assert_abs_diff_eq!(r.coords()[0], 0.0);
        assert_abs_diff_eq!(*r.coords().last().unwrap(), 10.0, epsilon = 1e-12);
        assert!(TransverseGrid::new(Layout::Line, 10.0, 2).is_err());
        assert!(TransverseGrid::new(Layout::Line, -1.0, 20).is_err());
    }

    #[test]
    fn potential_examples() {
        assert_abs_diff_eq!(Potential::Quadratic.eval(3.0), 9.0);
        let p = Potential::plateau(2.0).unwrap();
        assert_abs_diff_eq!(p.eval(1.0), 0.0);
        assert_abs_diff_eq!(p.eval(3.0), 1.0);
        assert_abs_diff_eq!(p.eval(-3.0), 1.0);
        let g = TransverseGrid::new(Layout::Radial(2), 10.0, 201).unwrap();
        let vals = Potential::Quadratic.eval_on(&g);
        assert_abs_diff_eq!(vals[40], 4.0, epsilon = 1e-12);
        assert!(vals.iter().all(|&v| v >= 0.0));
        assert_eq!(vals[0], 0.0);
    }

    #[test]
    fn custom_potential_warns_when_not_divergent() {
        let p = Potential::custom(vec![0.0, 1.0, 2.0], vec![0.0, 0.1, 0.2]).unwrap();
        let g = TransverseGrid::new(Layout::Line, 3.0, 31).unwrap();
        assert!(p.divergence_warning(&g, 10.0).is_some());
        assert!(Potential::Quadratic.divergence_warning(&g, 10.0).is_none());
        assert!(Potential::custom(vec![0.5, 1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn sphere_measures() {
        use std::f64::consts::PI;
        assert_abs_diff_eq!(sphere_measure(1), 2.0);
        assert_abs_diff_eq!(sphere_measure(2), 2.0 * PI);
        assert_abs_diff_eq!(sphere_measure(3), 4.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(sphere_measure(4), 2.0 * PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn radial_laplacian_of_r_squared_is_2d() {
        for d in 1..=4 {
            let g = TransverseGrid::new(Layout::Radial(d), 5.0, 51).unwrap();
            let u: Vec<f64> = g.coords().iter().map(|r| r * r).collect();
            let lap = g.apply_neg_laplacian(&u);
            for j in 0..g.len() - 1 {
                assert_abs_diff_eq!(-lap[j], 2.0 * d as f64, epsilon = 1e-9);
            }
        }
        let g = TransverseGrid::new(Layout::Line, 5.0, 51).unwrap();
        let u: Vec<f64> = g.coords().iter().map(|r| r * r).collect();
        let lap = g.apply_neg_laplacian(&u);
        for j in 1..g.len() - 1 {
            assert_abs_diff_eq!(-lap[j], 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn laplacian_annihilates_constants_in_the_interior() {
        for layout in [Layout::Line, Layout::Radial(2), Layout::Radial(3)] {
            let g = TransverseGrid::new(layout, 4.0, 41).unwrap();
            for j in g.unknowns() {
                let s = g.stencil(j);
                let sum = s.diag + s.upper + if j == 0 { 0.0 } else { s.lower };
                assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn quadrature_of_gaussian() {
        use std::f64::consts::PI;
        let line = TransverseGrid::new(Layout::Line, 10.0, 401).unwrap();
        let u: Vec<f64> = line.coords().iter().map(|y| (-y * y).exp()).collect();
        assert_abs_diff_eq!(line.integrate(&u), PI.sqrt(), epsilon = 1e-10);
        let half = TransverseGrid::new(Layout::Radial(1), 10.0, 201).unwrap();
        let u: Vec<f64> = half.coords().iter().map(|y| (-y * y).exp()).collect();
        assert_abs_diff_eq!(half.integrate(&u), PI.sqrt(), epsilon = 1e-10);
        let disk = TransverseGrid::new(Layout::Radial(2), 10.0, 801).unwrap();
        let u: Vec<f64> = disk.coords().iter().map(|r| (-r * r).exp()).collect();
        assert_abs_diff_eq!(disk.integrate(&u), PI, epsilon = 1e-4);
    }

    #[test]
    fn dirichlet_energy_is_adjoint_to_laplacian() {
        for layout in [Layout::Line, Layout::Radial(1), Layout::Radial(2), Layout::Radial(3)] {
            let g = TransverseGrid::new(layout, 3.0, 31).unwrap();
            let mut u: Vec<f64> = g.coords().iter().map(|y| (1.0 - y * y / 9.0).max(0.0)).collect();
            let last = g.len() - 1;
            u[last] = 0.0;
            if layout == Layout::Line {
                u[0] = 0.0;
            }
            let lap = g.apply_neg_laplacian(&u);
            assert_abs_diff_eq!(g.inner(&u, &lap), g.dirichlet_energy(&u), epsilon = 1e-9);
        }
    }

    #[test]
    fn truncation_keeps_spacing() {
        let g = TransverseGrid::new(Layout::Line, 8.0, 801).unwrap();
        let t = g.truncated(2.0).unwrap();
        assert_abs_diff_eq!(t.spacing(), g.spacing(), epsilon = 1e-14);
        assert_abs_diff_eq!(t.radius(), 2.0, epsilon = 1e-12);
        assert!(g.truncated(9.0).is_err());
    }

    #[test]
    fn slab_indexing() {
        let t = TransverseGrid::new(Layout::Line, 2.0, 5).unwrap();
        let s = SlabGrid::new(3.0, 7, t).unwrap();
        assert_abs_diff_eq!(s.hx(), 1.0);
        assert_eq!(s.index(2, 3), 13);
        assert_eq!(s.nearest_x(0.0), 3);
        assert!(SlabGrid::new(1.0, 2, s.transverse().clone()).is_err());
    }
}
