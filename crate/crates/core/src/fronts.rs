//! Traveling fronts through the finite-slab problem
//! `-Δu - c ∂_1 u = h(y, u)` on `(-a, a)`, `u(-a, ·) = V`, `u(a, ·) = 0`.

use serde::Serialize;

use crate::discretize::{
    assemble_slab, assemble_slab_with_diag, AdvectionScheme, BandLu, Csr, PivotedBandLu, SlabOperator, Tridiagonal,
};
use crate::error::{Error, Result};
use crate::geometry::SlabGrid;
use crate::nonlinearity::{Heterogeneity, Reaction, ReactionClass};

/// Largest admissible increase of `u` along `x1` in a returned front.
pub const MONOTONE_TOL: f64 = 1e-8;

const CERTIFY_SWEEPS: usize = 400;
const PSEUDO_DT0: f64 = 1.0;
const PSEUDO_MAX_STEPS: usize = 400;
const CERTIFY_MARGIN: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Normalization {
    /// `u(0, 0) = level`
    Point { level: f64 },
    /// `max_y u(0, y) = level`
    Max { level: f64 },
}

impl Normalization {
    pub fn level(&self) -> f64 {
        match *self {
            Normalization::Point { level } | Normalization::Max { level } => level,
        }
    }

    /// Normalization functional of a slab function, linearly interpolated at `x1 = 0`.
    pub fn value(&self, grid: &SlabGrid, u: &[f64]) -> f64 {
        let slice = x_slice(grid, u, 0.0);
        match self {
            Normalization::Point { .. } => slice[grid.transverse().origin_index()],
            Normalization::Max { .. } => slice.iter().cloned().fold(0.0, f64::max),
        }
    }
}

/// Transverse slice `u(x, ·)` by linear interpolation in `x1`; constant extension
/// by the end slices outside the slab.
pub fn x_slice(grid: &SlabGrid, u: &[f64], x: f64) -> Vec<f64> {
    let ny = grid.ny();
    let t = (x + grid.half_length()) / grid.hx();
    let last = grid.nx() - 1;
    let (i, w) = if t <= 0.0 {
        (0, 0.0)
    } else if t >= last as f64 {
        (last - 1, 1.0)
    } else {
        let i = (t.floor() as usize).min(last - 1);
        (i, t - i as f64)
    };
    (0..ny)
        .map(|j| (1.0 - w) * u[grid.index(i, j)] + w * u[grid.index(i + 1, j)])
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontSolution {
    /// Nodal values on the slab, boundary faces included.
    #[serde(skip)]
    pub u: Vec<f64>,
    pub c: f64,
    pub a: f64,
    pub normalization: Normalization,
    /// Value of the normalization functional.
    pub normalized_value: f64,
    /// `sup |Δu + c ∂_1 u + h(y, u)|` over the unknowns.
    pub residual: f64,
    pub monotone_x1: bool,
    /// `max (u(x_{i+1}, y) - u(x_i, y))`, nonpositive for a monotone front.
    pub max_x1_increase: f64,
    pub scheme: AdvectionScheme,
    pub newton_steps: usize,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FrontOptions {
    pub residual_tol: f64,
    pub max_newton: usize,
    /// Monotone sweeps run from the super-solution when Newton stalls.
    pub fallback_sweeps: usize,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions {
            residual_tol: 1e-10,
            max_newton: 40,
            fallback_sweeps: 3_000,
        }
    }
}

/// Slab problem with fixed geometry, medium and boundary data.
#[derive(Debug, Clone)]
pub struct SlabProblem<'a> {
    grid: &'a SlabGrid,
    reaction: &'a Reaction,
    profile: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    rho: Vec<f64>,
    q: Vec<f64>,
    unknown_y: Vec<usize>,
    pub opts: FrontOptions,
}

impl<'a> SlabProblem<'a> {
    /// Standard data `u(-a, ·) = V`, `u(a, ·) = 0`.
    pub fn new(grid: &'a SlabGrid, het: &Heterogeneity, reaction: &'a Reaction, profile: &[f64]) -> Result<Self> {
        let ny = grid.ny();
        Self::with_boundary(grid, het, reaction, profile, profile.to_vec(), vec![0.0; ny])
    }

    pub fn with_boundary(
        grid: &'a SlabGrid,
        het: &Heterogeneity,
        reaction: &'a Reaction,
        profile: &[f64],
        left: Vec<f64>,
        right: Vec<f64>,
    ) -> Result<Self> {
        let ny = grid.ny();
        if profile.len() != ny || left.len() != ny || right.len() != ny {
            return Err(Error::invalid("boundary data must match the transverse grid"));
        }
        let radii = grid.transverse().radii();
        Ok(SlabProblem {
            grid,
            reaction,
            profile: profile.to_vec(),
            left,
            right,
            rho: radii.iter().map(|&r| het.reaction_weight(r)).collect(),
            q: radii.iter().map(|&r| het.absorption(r)).collect(),
            unknown_y: grid.transverse().unknowns().collect(),
            opts: FrontOptions::default(),
        })
    }

    pub fn grid(&self) -> &SlabGrid {
        self.grid
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    fn m(&self) -> usize {
        self.unknown_y.len()
    }

    fn gather(&self, u: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut x = Vec::with_capacity((self.grid.nx() - 2) * m);
        for i in 1..self.grid.nx() - 1 {
            for &j in &self.unknown_y {
                x.push(u[self.grid.index(i, j)]);
            }
        }
        x
    }

    fn scatter(&self, x: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let mut u = vec![0.0; g.len()];
        for j in 0..g.ny() {
            u[g.index(0, j)] = self.left[j];
            u[g.index(g.nx() - 1, j)] = self.right[j];
        }
        let m = self.m();
        for i in 1..g.nx() - 1 {
            for (k, &j) in self.unknown_y.iter().enumerate() {
                u[g.index(i, j)] = x[(i - 1) * m + k];
            }
        }
        u
    }

    fn rho_at(&self, r: usize) -> f64 {
        self.rho[self.unknown_y[r % self.m()]]
    }

    /// `L x - b - rho f(x)`, the negative of the PDE residual.
    fn defect(&self, op: &SlabOperator, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = op.op.apply(x);
        for (r, o) in out.iter_mut().enumerate() {
            *o -= b[r] + self.rho_at(r) * self.reaction.eval_smooth(x[r]);
        }
        out
    }

    /// Extends `V` to the slab, constant in `x1`, a super-solution of the standard problem.
    pub fn supersolution(&self) -> Vec<f64> {
        let g = self.grid;
        let mut u = vec![0.0; g.len()];
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                u[g.index(i, j)] = self.profile[j];
            }
        }
        u
    }

    /// Solves the slab problem at speed `c`, starting Newton from `init` (full nodal
    /// vector), or from the super-solution `V`.
    pub fn solve(&self, c: f64, init: Option<&[f64]>, normalization: Normalization) -> Result<FrontSolution> {
        let op = assemble_slab(self.grid, &self.q, c, 0.0);
        let b = op.boundary_rhs(self.grid, &self.left, &self.right);
        let tol = self.opts.residual_tol;
        let mut newton_steps = 0;
        let mut sweeps = 0;

        let start = match init {
            Some(u) => self.gather(u),
            None => self.gather(&self.supersolution()),
        };
        let mut x = match self.newton(c, &op, &b, start, &mut newton_steps) {
            Ok(x) => Some(x),
            Err(_) => None,
        };
        if x.is_none() {
            // globalize: monotone sweeps down from V, then Newton again
            let (xs, n) = self.sweeps(&op, &b, self.gather(&self.supersolution()), tol)?;
            sweeps = n;
            x = Some(self.newton(c, &op, &b, xs, &mut newton_steps)?);
        }
        let x = x.expect("solution present");
        let residual = sup(&self.defect(&op, &b, &x));
        let u = self.scatter(&x);
        self.check(&u)?;
        let max_inc = self.max_x1_increase(&u);
        Ok(FrontSolution {
            normalized_value: normalization.value(self.grid, &u),
            u,
            c,
            a: self.grid.half_length(),
            normalization,
            residual,
            monotone_x1: max_inc <= 1e-10,
            max_x1_increase: max_inc,
            scheme: op.scheme,
            newton_steps,
            sweeps,
        })
    }

    fn newton(&self, c: f64, op: &SlabOperator, b: &[f64], mut x: Vec<f64>, count: &mut usize) -> Result<Vec<f64>> {
        let tol = self.opts.residual_tol;
        let mut d = self.defect(op, b, &x);
        let mut dn = sup(&d);
        for _ in 0..self.opts.max_newton {
            if dn <= tol {
                return Ok(x);
            }
            *count += 1;
            let extra: Vec<f64> = (0..x.len())
                .map(|r| -self.rho_at(r) * self.reaction.derivative_smooth(x[r]))
                .collect();
            let jac = assemble_slab_with_diag(self.grid, &self.q, c, 0.0, Some(&extra));
            let lu = BandLu::factor(&jac.op.matrix)?;
            let mut step: Vec<f64> = d.iter().map(|v| -v).collect();
            lu.solve_in_place(&mut step);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                let td = self.defect(op, b, &trial);
                let tn = sup(&td);
                if tn < dn {
                    x = trial;
                    d = td;
                    dn = tn;
                    break;
                }
                t *= 0.5;
                if t < 1.0 / 64.0 {
                    return Err(Error::NoConvergence {
                        what: "slab Newton",
                        iterations: *count,
                        residual: dn,
                    });
                }
            }
        }
        if dn <= tol {
            return Ok(x);
        }
        Err(Error::NoConvergence {
            what: "slab Newton",
            iterations: *count,
            residual: dn,
        })
    }

    /// Monotone iteration `(L + K) x⁺ = b + rho f(x) + K x` from a super-solution.
    fn sweeps(&self, op: &SlabOperator, b: &[f64], mut x: Vec<f64>, tol: f64) -> Result<(Vec<f64>, usize)> {
        let k = self.reaction.lipschitz();
        let n = x.len();
        let shifted = {
            let mut t = op.op.triplets();
            for r in 0..n {
                t.push((r, r, k));
            }
            crate::discretize::Csr::from_triplets(n, t)
        };
        let lu = BandLu::factor(&shifted)?;
        for it in 1..=self.opts.fallback_sweeps {
            let mut rhs: Vec<f64> = (0..n)
                .map(|r| b[r] + self.rho_at(r) * self.reaction.eval(x[r]) + k * x[r])
                .collect();
            lu.solve_in_place(&mut rhs);
            let mut change = 0.0_f64;
            for (new, old) in rhs.iter().zip(&x) {
                if new - old > 1e-12 {
                    return Err(Error::Ordering(format!(
                        "slab sweep increased by {:e} at iteration {it}",
                        new - old
                    )));
                }
                change = change.max((new - old).abs());
            }
            x = rhs;
            // hand back to Newton once the iterate is close
            if change <= 1e-6 || sup(&self.defect(op, b, &x)) <= tol {
                return Ok((x, it));
            }
        }
        Err(Error::NoConvergence {
            what: "slab monotone sweep",
            iterations: self.opts.fallback_sweeps,
            residual: sup(&self.defect(op, b, &x)),
        })
    }

    /// Coefficients of the normalization functional on the unknowns (row index, weight),
    /// with its current value.
    fn pin_functional(&self, u: &[f64], normalization: Normalization) -> (Vec<(usize, f64)>, f64) {
        let g = self.grid;
        let t = g.half_length() / g.hx();
        let i = (t.floor() as usize).clamp(1, g.nx() - 3);
        let w = t - i as f64;
        let slice = x_slice(g, u, 0.0);
        let j = match normalization {
            Normalization::Point { .. } => g.transverse().origin_index(),
            Normalization::Max { .. } => (0..g.ny())
                .max_by(|&p, &q| slice[p].total_cmp(&slice[q]))
                .unwrap_or(0),
        };
        let m = self.m();
        let k = self.unknown_y.iter().position(|&jj| jj == j).unwrap_or(0);
        let mut e = vec![((i - 1) * m + k, 1.0 - w)];
        if w > 0.0 {
            e.push((i * m + k, w));
        }
        (e, slice[j])
    }

    /// `∂F/∂c` at fixed `u`; the x1 stencil is affine in `c` for a fixed scheme.
    fn d_defect_dc(&self, scheme: AdvectionScheme, c: f64, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let s0 = scheme.x_stencil(c, g.hx());
        let s1 = scheme.x_stencil(c + 1.0, g.hx());
        let (dw, dc, de) = (s1.0 - s0.0, s1.1 - s0.1, s1.2 - s0.2);
        let mut out = Vec::with_capacity((g.nx() - 2) * self.m());
        for i in 1..g.nx() - 1 {
            for &j in &self.unknown_y {
                out.push(dw * u[g.index(i - 1, j)] + dc * u[g.index(i, j)] + de * u[g.index(i + 1, j)]);
            }
        }
        out
    }

    /// Solves the pinned system `F(u, c) = 0`, `N(u) = level` for the front together
    /// with its speed, starting from `init` at speed `c0`. Pseudo-time steps of the
    /// frozen parabolic flow keep the iterates on the positive branch; the step grows
    /// with the defect decrease until the iteration is plain Newton.
    pub fn solve_pinned(&self, c0: f64, init: &[f64], normalization: Normalization) -> Result<FrontSolution> {
        let tol = self.opts.residual_tol;
        let level = normalization.level();
        let mut c = c0;
        let mut x = self.gather(init);
        let merit = |c: f64, x: &[f64]| -> (f64, f64, Vec<f64>) {
            let op = assemble_slab(self.grid, &self.q, c, 0.0);
            let b = op.boundary_rhs(self.grid, &self.left, &self.right);
            let d = self.defect(&op, &b, x);
            let (_, v) = self.pin_functional(&self.scatter(x), normalization);
            (sup(&d), v - level, d)
        };
        let (mut dn, mut gv, mut d) = merit(c, &x);
        let mut dt = PSEUDO_DT0;
        let mut steps = 0;
        while dn > tol || gv.abs() > 1e-12 {
            if steps >= PSEUDO_MAX_STEPS || dt < 1e-8 {
                return Err(Error::NoConvergence {
                    what: "pinned slab solve",
                    iterations: steps,
                    residual: dn.max(gv.abs()),
                });
            }
            steps += 1;
            let u = self.scatter(&x);
            let scheme = AdvectionScheme::select(c, self.grid.hx());
            let extra: Vec<f64> = (0..x.len())
                .map(|r| 1.0 / dt - self.rho_at(r) * self.reaction.derivative_smooth(x[r]))
                .collect();
            let jac = assemble_slab_with_diag(self.grid, &self.q, c, 0.0, Some(&extra));
            let dfdc = self.d_defect_dc(scheme, c, &u);
            let (e, _) = self.pin_functional(&u, normalization);
            let rhs: Vec<f64> = d.iter().map(|v| -v).collect();
            let (w, dc) = bordered_solve(&jac.op.matrix, self.m(), &dfdc, &e, &rhs, -gv)?;
            let trial: Vec<f64> = x.iter().zip(&w).map(|(a, p)| a + p).collect();
            let tc = c + dc;
            let (tn, tg, td) = merit(tc, &trial);
            let low = trial.iter().fold(0.0_f64, |m, &v| m.min(v));
            if !tn.is_finite() || tn > 2.0 * dn.max(tol) || low < -1e-10 {
                dt *= 0.25;
                continue;
            }
            dt = (dt * (dn / tn.max(1e-300)).clamp(0.5, 4.0)).min(1e14);
            x = trial;
            c = tc;
            dn = tn;
            gv = tg;
            d = td;
        }
        let u = self.scatter(&x);
        self.check(&u)?;
        let max_inc = self.max_x1_increase(&u);
        Ok(FrontSolution {
            normalized_value: normalization.value(self.grid, &u),
            u,
            c,
            a: self.grid.half_length(),
            normalization,
            residual: dn,
            monotone_x1: max_inc <= 1e-10,
            max_x1_increase: max_inc,
            scheme: AdvectionScheme::select(c, self.grid.hx()),
            newton_steps: steps,
            sweeps: 0,
        })
    }

    /// Whether monotone sweeps at speed `c` from `start` prove that the slab solution's
    /// normalization value lies below (`below`) or above the level. `start` is a
    /// super-solution (sub-solution) at `c` when it solves a slower (faster) problem,
    /// so the iterates bound the solution from that side.
    pub fn certify_side(&self, c: f64, start: &[f64], normalization: Normalization, below: bool) -> Result<bool> {
        let level = normalization.level();
        let op = assemble_slab(self.grid, &self.q, c, 0.0);
        let b = op.boundary_rhs(self.grid, &self.left, &self.right);
        let k = self.reaction.lipschitz();
        let mut x = self.gather(start);
        let n = x.len();
        let mut t = op.op.triplets();
        for r in 0..n {
            t.push((r, r, k));
        }
        let lu = BandLu::factor(&Csr::from_triplets(n, t))?;
        for _ in 0..CERTIFY_SWEEPS {
            let mut next: Vec<f64> = (0..n)
                .map(|r| b[r] + self.rho_at(r) * self.reaction.eval(x[r]) + k * x[r])
                .collect();
            lu.solve_in_place(&mut next);
            let wrong_way = next
                .iter()
                .zip(&x)
                .any(|(p, q)| if below { p - q > 1e-9 } else { q - p > 1e-9 });
            if wrong_way {
                return Ok(false);
            }
            x = next;
            let v = normalization.value(self.grid, &self.scatter(&x));
            if (below && v < level - CERTIFY_MARGIN) || (!below && v > level + CERTIFY_MARGIN) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        let g = self.grid;
        let mut worst_low = 0.0_f64;
        let mut worst_high = 0.0_f64;
        for i in 1..g.nx() - 1 {
            for &j in &self.unknown_y {
                let v = u[g.index(i, j)];
                worst_low = worst_low.min(v);
                worst_high = worst_high.max(v - self.profile[j]);
            }
        }
        if worst_low < -1e-8 {
            return Err(Error::Ordering(format!("front lost positivity ({worst_low:e})")));
        }
        if worst_high > 1e-8 {
            return Err(Error::Ordering(format!("front exceeds the profile by {worst_high:e}")));
        }
        let inc = self.max_x1_increase(u);
        if inc > MONOTONE_TOL {
            return Err(Error::Ordering(format!("front increases along x1 by {inc:e}")));
        }
        Ok(())
    }

    fn max_x1_increase(&self, u: &[f64]) -> f64 {
        let g = self.grid;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..g.nx() - 1 {
            for &j in &self.unknown_y {
                worst = worst.max(u[g.index(i + 1, j)] - u[g.index(i, j)]);
            }
        }
        worst
    }
}

/// Solves `J dx + b dc = f`, `e · dx = g` for slice-ordered unknowns (`m` per slice).
/// Each slice carries its own copy of `dc`, tied to its neighbours toward the pinned
/// slice, which keeps the system banded; a pivoted band LU then handles the nearly
/// singular `J`.
fn bordered_solve(
    jac: &Csr,
    m: usize,
    b: &[f64],
    e: &[(usize, f64)],
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = jac.n;
    let slices = n / m;
    let w = m + 1;
    let at = |r: usize| (r / m) * w + r % m;
    let s0 = e.iter().map(|&(r, _)| r / m).min().unwrap_or(0);
    let mut t = Vec::with_capacity(6 * n + 2 * slices);
    for r in 0..n {
        for (c, v) in jac.row(r) {
            t.push((at(r), at(c), v));
        }
        t.push((at(r), (r / m) * w + m, b[r]));
    }
    for s in 0..slices {
        let row = s * w + m;
        if s == s0 {
            for &(r, v) in e {
                t.push((row, at(r), v));
            }
        } else {
            let other = if s < s0 { s + 1 } else { s - 1 };
            t.push((row, row, 1.0));
            t.push((row, other * w + m, -1.0));
        }
    }
    let a = Csr::from_triplets(slices * w, t);
    let lu = PivotedBandLu::factor(&a)?;
    let mut x = vec![0.0; slices * w];
    for r in 0..n {
        x[at(r)] = f[r];
    }
    x[s0 * w + m] = g;
    lu.solve_in_place(&mut x);
    let dx = (0..n).map(|r| x[at(r)]).collect();
    Ok((dx, x[s0 * w + m]))
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// Record of one speed search.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedSearch<S> {
    pub c: f64,
    pub bracket: (f64, f64),
    /// `(c, normalization value - level)` in evaluation order.
    pub history: Vec<(f64, f64)>,
    #[serde(skip)]
    pub state: S,
}

impl<S> SpeedSearch<S> {
    /// Whether `c ↦ value` is strictly decreasing over the evaluated speeds.
    pub fn history_monotone(&self) -> bool {
        let mut h = self.history.clone();
        h.sort_by(|a, b| a.0.total_cmp(&b.0));
        h.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 < w[0].1 + 1e-9)
    }
}

/// Finishing step of a speed search: from a speed estimate and a nearby state, returns
/// `(c, g(c), state)` with `g` driven to zero by other means.
pub type Refine<'r, S> = &'r mut dyn FnMut(f64, &S) -> Result<(f64, f64, S)>;

/// Root of a decreasing scalar map `c ↦ g(c)` on `[lo, hi]` by the Illinois variant
/// of regula falsi. `eval(c, warm)` receives the state of the largest `c` with `g > 0`.
/// When an interior evaluation fails (the map is too steep to resolve at fixed `c`),
/// or the value tolerance is out of reach, `refine` finishes from the best state.
pub fn locate_speed<S: Clone, F>(
    mut eval: F,
    mut refine: Option<Refine<'_, S>>,
    what: &'static str,
    lo: f64,
    hi: f64,
    value_tol: f64,
    width_tol: f64,
) -> Result<SpeedSearch<S>>
where
    F: FnMut(f64, Option<&S>) -> Result<(f64, S)>,
{
    let mut history = Vec::new();
    let (g_lo0, s_lo0) = eval(lo, None)?;
    history.push((lo, g_lo0));
    if g_lo0 <= 0.0 {
        return Err(Error::BracketNotFound {
            what,
            lo,
            hi,
            f_lo: g_lo0,
            f_hi: f64::NAN,
        });
    }
    let (g_hi0, s_hi0) = eval(hi, Some(&s_lo0))?;
    history.push((hi, g_hi0));
    if g_hi0 >= 0.0 {
        return Err(Error::BracketNotFound {
            what,
            lo,
            hi,
            f_lo: g_lo0,
            f_hi: g_hi0,
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    let (mut g_lo, mut g_hi) = (g_lo0, g_hi0);
    let (mut fg_lo, mut fg_hi) = (g_lo0, g_hi0);
    let mut s_lo = s_lo0;
    let mut best = if g_lo0 < -g_hi0 {
        (lo, g_lo0, s_lo.clone())
    } else {
        (hi, g_hi0, s_hi0)
    };
    let mut side = 0;
    let mut probes: Vec<f64> = Vec::new();
    let mut stalled = false;
    for _ in 0..200 {
        if hi - lo <= width_tol && (best.1.abs() <= value_tol || hi - lo <= 1e-3 * width_tol) {
            break;
        }
        let c = if let Some(p) = probes.pop() {
            p
        } else if side != 0 && hi - lo <= width_tol {
            0.5 * (lo + hi)
        } else {
            let mut c = (lo * fg_hi - hi * fg_lo) / (fg_hi - fg_lo);
            let margin = 1e-3 * (hi - lo);
            if !(c > lo + margin && c < hi - margin) {
                c = 0.5 * (lo + hi);
            }
            c
        };
        if !(c > lo && c < hi) {
            continue;
        }
        let (g, s) = match eval(c, Some(&s_lo)) {
            Ok(v) => v,
            Err(_) if refine.is_some() => {
                stalled = true;
                break;
            }
            Err(e) => return Err(e),
        };
        history.push((c, g));
        if g.abs() < best.1.abs() {
            best = (c, g, s.clone());
        }
        if g > 0.0 {
            lo = c;
            g_lo = g;
            fg_lo = g;
            s_lo = s;
            if side == 1 {
                fg_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = c;
            g_hi = g;
            fg_hi = g;
            if side == -1 {
                fg_lo *= 0.5;
            }
            side = -1;
        }
        if g == 0.0 {
            break;
        }
        if best.1.abs() <= value_tol && hi - lo > width_tol && probes.is_empty() {
            // tighten the bracket around the accepted speed
            let slope = (g_lo - g_hi) / (hi - lo);
            let root = best.0 + best.1 / slope;
            let half = 0.4 * width_tol;
            probes.push((root + half).min(hi - f64::EPSILON * hi.abs()));
            probes.push((root - half).max(lo + f64::EPSILON * lo.abs()));
        }
    }
    if let Some(refine) = refine.as_mut() {
        if stalled || best.1.abs() > value_tol {
            let estimate = {
                let c = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
                if c > lo && c < hi {
                    c
                } else {
                    0.5 * (lo + hi)
                }
            };
            let start = if best.0 >= lo && best.0 <= hi { &best.2 } else { &s_lo };
            if let Ok((c, g, s)) = refine(estimate, start) {
                let slack = 1e-9 * (1.0 + c.abs());
                if c >= lo - slack && c <= hi + slack && g.abs() <= value_tol {
                    history.push((c, g));
                    best = (c, g, s);
                }
            }
        }
    }
    if best.1.abs() > value_tol && hi - lo > width_tol {
        return Err(Error::NoConvergence {
            what: "speed search",
            iterations: history.len(),
            residual: best.1.abs(),
        });
    }
    let out = SpeedSearch {
        c: best.0,
        bracket: (lo.min(best.0), hi.max(best.0)),
        history,
        state: best.2,
    };
    if !out.history_monotone() {
        return Err(Error::Ordering(format!("{what}: normalization not decreasing in c")));
    }
    Ok(out)
}

/// Translates a slab function along `x1` so that the normalization functional of its
/// slices crosses `level` at `x1 = 0`; `V` enters from the left and 0 from the right.
pub fn recenter(grid: &SlabGrid, u: &[f64], profile: &[f64], normalization: Normalization) -> Vec<f64> {
    let level = normalization.level();
    let origin = grid.transverse().origin_index();
    let at = |i: usize| -> f64 {
        match normalization {
            Normalization::Point { .. } => u[grid.index(i, origin)],
            Normalization::Max { .. } => (0..grid.ny()).map(|j| u[grid.index(i, j)]).fold(0.0, f64::max),
        }
    };
    let values: Vec<f64> = (0..grid.nx()).map(at).collect();
    let shift = match (0..grid.nx() - 1).rev().find(|&i| values[i] >= level) {
        None => -grid.half_length(),
        Some(i) => {
            let (v0, v1) = (values[i], values[i + 1]);
            let t = if v0 > v1 { (v0 - level) / (v0 - v1) } else { 0.0 };
            grid.x(i) + t * grid.hx()
        }
    };
    let a = grid.half_length();
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.nx() {
        let x = grid.x(i) + shift;
        let slice = if x < -a {
            profile.to_vec()
        } else if x > a {
            vec![0.0; grid.ny()]
        } else {
            x_slice(grid, u, x)
        };
        for j in 0..grid.ny() {
            out[grid.index(i, j)] = slice[j];
        }
    }
    for j in 0..grid.ny() {
        out[grid.index(0, j)] = u[grid.index(0, j)];
        out[grid.index(grid.nx() - 1, j)] = u[grid.index(grid.nx() - 1, j)];
    }
    out
}

/// Target width of speed brackets.
pub const SPEED_WIDTH: f64 = 1e-6;

/// Normalized slab front: the speed `c_a` with `N(u_a^{c_a}) = level`.
pub fn find_speed(
    problem: &SlabProblem<'_>,
    normalization: Normalization,
    bracket: (f64, f64),
    guess: Option<(f64, &[f64])>,
) -> Result<SpeedSearch<FrontSolution>> {
    let level = normalization.level();
    let eval = |c: f64, warm: Option<&FrontSolution>| -> Result<(f64, FrontSolution)> {
        let sol = problem.solve(c, warm.map(|w| w.u.as_slice()), normalization)?;
        Ok((sol.normalized_value - level, sol))
    };
    let (lo, hi) = match guess {
        None => bracket,
        Some((c0, u0)) => {
            // widen outward from the guess until the sign changes
            let first = problem
                .solve(c0, Some(u0), normalization)
                .or_else(|_| problem.solve(c0, None, normalization))?;
            let g0 = first.normalized_value - level;
            let mut step = 0.02 * (bracket.1 - bracket.0).max(1e-3);
            let (mut lo, mut hi) = (c0, c0);
            let mut warm = first;
            if g0 > 0.0 {
                loop {
                    hi = (lo + step).min(bracket.1);
                    let s = problem.solve(hi, Some(&warm.u), normalization)?;
                    if s.normalized_value - level < 0.0 || hi >= bracket.1 {
                        break;
                    }
                    lo = hi;
                    warm = s;
                    step *= 2.0;
                }
            } else {
                loop {
                    lo = (hi - step).max(bracket.0);
                    let s = problem.solve(lo, None, normalization)?;
                    if s.normalized_value - level > 0.0 || lo <= bracket.0 {
                        break;
                    }
                    hi = lo;
                    step *= 2.0;
                }
            }
            (lo, hi)
        }
    };
    let mut refine = |c: f64, near: &FrontSolution| -> Result<(f64, f64, FrontSolution)> {
        let centred = recenter(problem.grid(), &near.u, problem.profile(), normalization);
        let sol = problem.solve_pinned(c, &centred, normalization)?;
        Ok((sol.c, sol.normalized_value - level, sol))
    };
    let mut search = locate_speed(eval, Some(&mut refine), "front speed", lo, hi, 1e-6, SPEED_WIDTH)?;
    if search.bracket.1 - search.bracket.0 > SPEED_WIDTH {
        let (c, u) = (search.c, &search.state.u);
        let d = 0.4 * SPEED_WIDTH;
        if problem.certify_side(c + d, u, normalization, true)? && problem.certify_side(c - d, u, normalization, false)? {
            search.bracket = (c - d, c + d);
        }
    }
    Ok(search)
}

/// Speed from pinned Newton started at `(c0, u0)`, with the bracket certified by
/// monotone sweeps on both sides.
pub fn pinned_speed(
    problem: &SlabProblem<'_>,
    normalization: Normalization,
    c0: f64,
    u0: &[f64],
) -> Result<SpeedSearch<FrontSolution>> {
    let centred = recenter(problem.grid(), u0, problem.profile(), normalization);
    let sol = problem.solve_pinned(c0, &centred, normalization)?;
    let d = 0.4 * SPEED_WIDTH;
    let c = sol.c;
    if !(problem.certify_side(c + d, &sol.u, normalization, true)?
        && problem.certify_side(c - d, &sol.u, normalization, false)?)
    {
        return Err(Error::Ordering("pinned speed could not be bracketed".into()));
    }
    Ok(SpeedSearch {
        c,
        bracket: (c - d, c + d),
        history: vec![(c, sol.normalized_value - normalization.level())],
        state: sol,
    })
}

/// `η/4` with `η` the linearization range for `δ = -λ/2`; when `λ ≥ 0`, `δ = f'(0)/2`.
pub fn kpp_theta_norm(reaction: &Reaction, lambda: f64) -> Result<f64> {
    let delta = if lambda < 0.0 {
        (-0.5 * lambda).min(0.5 * reaction.fprime0())
    } else {
        0.5 * reaction.fprime0()
    };
    Ok(reaction.kpp_linearization_range(delta)?.1)
}

/// A-priori speed bracket `[-1, 2√(-λ) + 1]` for KPP fronts.
pub fn kpp_bracket(lambda: f64) -> (f64, f64) {
    (-1.0, 2.0 * (-lambda).max(0.0).sqrt() + 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct OneDFront {
    pub gamma: f64,
    pub a: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub bracket: (f64, f64),
    pub residual: f64,
}

/// One-dimensional slab front `-z'' - γ z' = f(z)`, `z(-a) = 1`, `z(a) = 0`, `z(0) = θ`.
pub fn one_d_bistable_speed(a: f64, hx: f64, reaction: &Reaction) -> Result<OneDFront> {
    let theta = match (reaction.class(), reaction.theta()) {
        (ReactionClass::Bistable, Some(t)) => t,
        _ => return Err(Error::invalid("the one-dimensional oracle needs a bistable reaction")),
    };
    let nx = (2.0 * a / hx).round() as usize + 1;
    if nx < 5 {
        return Err(Error::invalid("one-dimensional slab too coarse"));
    }
    let h = 2.0 * a / (nx - 1) as f64;
    let x: Vec<f64> = (0..nx).map(|i| -a + i as f64 * h).collect();
    let n = nx - 2;
    let z_at_zero = |z: &[f64]| -> f64 {
        let t = a / h;
        let i = (t.floor() as usize).min(nx - 2);
        let w = t - i as f64;
        (1.0 - w) * z[i] + w * z[i + 1]
    };
    let solve = |c: f64, init: Option<&Vec<f64>>| -> Result<(Vec<f64>, f64)> {
        let scheme = AdvectionScheme::select(c, h);
        let (west, centre, east) = scheme.x_stencil(c, h);
        let full = |zi: &[f64]| -> Vec<f64> {
            let mut z = vec![0.0; nx];
            z[0] = 1.0;
            z[1..nx - 1].copy_from_slice(zi);
            z
        };
        let defect = |zi: &[f64]| -> Vec<f64> {
            let z = full(zi);
            (1..nx - 1)
                .map(|i| west * z[i - 1] + centre * z[i] + east * z[i + 1] - reaction.eval_smooth(z[i]))
                .collect()
        };
        let newton = |mut zi: Vec<f64>| -> (Vec<f64>, f64) {
            let mut d = defect(&zi);
            let mut dn = sup(&d);
            for _ in 0..100 {
                if dn <= 1e-11 {
                    break;
                }
                let diag: Vec<f64> = zi.iter().map(|&v| centre - reaction.derivative_smooth(v)).collect();
                let tri = Tridiagonal::new(vec![west; n], diag, vec![east; n]);
                let mut step: Vec<f64> = d.iter().map(|v| -v).collect();
                match tri.factor() {
                    Ok(lu) => lu.solve_in_place(&mut step),
                    Err(_) => break,
                }
                let mut t = 1.0;
                loop {
                    let trial: Vec<f64> = zi.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                    let td = defect(&trial);
                    let tn = sup(&td);
                    if tn < dn {
                        zi = trial;
                        d = td;
                        dn = tn;
                        break;
                    }
                    t *= 0.5;
                    if t < 1.0 / 64.0 {
                        return (zi, dn);
                    }
                }
            }
            (zi, dn)
        };
        let (mut zi, mut dn) = match init {
            Some(z) => newton(z[1..nx - 1].to_vec()),
            None => (vec![1.0; n], f64::INFINITY),
        };
        if dn > 1e-11 {
            // monotone sweeps down from the super-solution 1, then Newton
            let k = reaction.lipschitz();
            let lu = Tridiagonal::new(vec![west; n], vec![centre + k; n], vec![east; n]).factor()?;
            let mut z = vec![1.0; n];
            for _ in 0..20_000 {
                let mut rhs: Vec<f64> = z.iter().map(|&v| reaction.eval(v) + k * v).collect();
                rhs[0] -= west;
                lu.solve_in_place(&mut rhs);
                let change = rhs.iter().zip(&z).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                z = rhs;
                if change <= 1e-5 {
                    break;
                }
            }
            let out = newton(z);
            zi = out.0;
            dn = out.1;
        }
        if dn > 1e-8 {
            return Err(Error::NoConvergence {
                what: "one-dimensional front Newton",
                iterations: 100,
                residual: dn,
            });
        }
        Ok((full(&zi), dn))
    };
    let bound = {
        // speeds of fronts of f are bounded by 2 sqrt(sup f(s)/s)
        let k = (1..1000)
            .map(|i| {
                let s = i as f64 / 1000.0;
                reaction.eval(s) / s
            })
            .fold(0.0, f64::max);
        2.0 * k.sqrt() + 1.0
    };
    let eval = |c: f64, warm: Option<&(Vec<f64>, f64)>| -> Result<(f64, (Vec<f64>, f64))> {
        let out = solve(c, warm.map(|w| &w.0))?;
        Ok((z_at_zero(&out.0) - theta, out))
    };
    let mut refine = |c0: f64, near: &(Vec<f64>, f64)| -> Result<(f64, f64, (Vec<f64>, f64))> {
        // Newton on the pinned system, the speed solved together with z
        let t0 = a / h;
        let ip = (t0.floor() as usize).clamp(1, nx - 3);
        let wp = t0 - ip as f64;
        let mut c = c0;
        let mut z = {
            let zs = &near.0;
            let shift = match (0..nx - 1).rev().find(|&i| zs[i] >= theta) {
                None => -a,
                Some(i) => {
                    let t = if zs[i] > zs[i + 1] { (zs[i] - theta) / (zs[i] - zs[i + 1]) } else { 0.0 };
                    x[i] + t * h
                }
            };
            let mut out: Vec<f64> = x
                .iter()
                .map(|&xi| {
                    let p = (xi + shift + a) / h;
                    if p <= 0.0 {
                        1.0
                    } else if p >= (nx - 1) as f64 {
                        0.0
                    } else {
                        let k = p.floor() as usize;
                        let w = p - k as f64;
                        (1.0 - w) * zs[k] + w * zs[k + 1]
                    }
                })
                .collect();
            out[0] = 1.0;
            out[nx - 1] = 0.0;
            out
        };
        let defect = |c: f64, z: &[f64]| -> Vec<f64> {
            let (west, centre, east) = AdvectionScheme::select(c, h).x_stencil(c, h);
            (1..nx - 1)
                .map(|i| west * z[i - 1] + centre * z[i] + east * z[i + 1] - reaction.eval_smooth(z[i]))
                .collect()
        };
        let pin = |z: &[f64]| (1.0 - wp) * z[ip] + wp * z[ip + 1] - theta;
        for _ in 0..100 {
            let d = defect(c, &z);
            let dn = sup(&d);
            let g = pin(&z);
            if dn <= 1e-11 && g.abs() <= 1e-13 {
                return Ok((c, g, (z, dn)));
            }
            let scheme = AdvectionScheme::select(c, h);
            let (west, centre, east) = scheme.x_stencil(c, h);
            let s1 = scheme.x_stencil(c + 1.0, h);
            let (dw, dcn, de) = (s1.0 - west, s1.1 - centre, s1.2 - east);
            let mut trip = Vec::with_capacity(3 * n);
            for k in 0..n {
                trip.push((k, k, centre - reaction.derivative_smooth(z[k + 1])));
                if k > 0 {
                    trip.push((k, k - 1, west));
                }
                if k + 1 < n {
                    trip.push((k, k + 1, east));
                }
            }
            let jac = Csr::from_triplets(n, trip);
            let dfdc: Vec<f64> = (1..nx - 1)
                .map(|i| dw * z[i - 1] + dcn * z[i] + de * z[i + 1])
                .collect();
            // unknown k holds node k + 1
            let e = [(ip - 1, 1.0 - wp), (ip, wp)];
            let rhs: Vec<f64> = d.iter().map(|v| -v).collect();
            let (w, dc) = bordered_solve(&jac, 1, &dfdc, &e, &rhs, -g)?;
            let old = dn + g.abs();
            let mut t = 1.0;
            loop {
                let mut trial = z.clone();
                for k in 0..n {
                    trial[k + 1] = z[k + 1] + t * w[k];
                }
                let tc = c + t * dc;
                if sup(&defect(tc, &trial)) + pin(&trial).abs() < old || t < 1.0 / 64.0 {
                    z = trial;
                    c = tc;
                    break;
                }
                t *= 0.5;
            }
        }
        Err(Error::NoConvergence {
            what: "pinned one-dimensional Newton",
            iterations: 100,
            residual: sup(&defect(c, &z)),
        })
    };
    let mut search = locate_speed(eval, Some(&mut refine), "one-dimensional front speed", -bound, bound, 1e-9, SPEED_WIDTH)?;
    if search.bracket.1 - search.bracket.0 > SPEED_WIDTH {
        let certify = |c: f64, below: bool| -> Result<bool> {
            let (west, centre, east) = AdvectionScheme::select(c, h).x_stencil(c, h);
            let k = reaction.lipschitz();
            let lu = Tridiagonal::new(vec![west; n], vec![centre + k; n], vec![east; n]).factor()?;
            let mut z = search.state.0[1..nx - 1].to_vec();
            for _ in 0..CERTIFY_SWEEPS {
                let mut next: Vec<f64> = z.iter().map(|&v| reaction.eval(v) + k * v).collect();
                next[0] -= west;
                lu.solve_in_place(&mut next);
                if next.iter().zip(&z).any(|(p, q)| if below { p - q > 1e-9 } else { q - p > 1e-9 }) {
                    return Ok(false);
                }
                z = next;
                let mut full = vec![1.0];
                full.extend_from_slice(&z);
                full.push(0.0);
                let v = z_at_zero(&full);
                if (below && v < theta - CERTIFY_MARGIN) || (!below && v > theta + CERTIFY_MARGIN) {
                    return Ok(true);
                }
            }
            Ok(false)
        };
        let d = 0.4 * SPEED_WIDTH;
        if certify(search.c + d, true)? && certify(search.c - d, false)? {
            search.bracket = (search.c - d, search.c + d);
        }
    }
    Ok(OneDFront {
        gamma: search.c,
        a,
        x,
        residual: search.state.1,
        z: search.state.0,
        bracket: search.bracket,
    })
}

/// Linear interpolation of a front onto a larger slab with the same transverse grid;
/// `V` to the left and 0 to the right of the old slab.
pub fn extend_front(old: &SlabGrid, u: &[f64], new: &SlabGrid, profile: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; new.len()];
    let a_old = old.half_length();
    for i in 0..new.nx() {
        let x = new.x(i);
        let slice = if x < -a_old {
            profile.to_vec()
        } else if x > a_old {
            vec![0.0; new.ny()]
        } else {
            x_slice(old, u, x)
        };
        for j in 0..new.ny() {
            out[new.index(i, j)] = slice[j];
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedCurve {
    /// `(a, c_a)`
    pub points: Vec<(f64, f64)>,
    pub c_inf: f64,
    /// `|c_inf - c_a|` at the largest `a`.
    pub uncertainty: f64,
    /// `sup |u - V|` over the left quarter of the last slab.
    pub left_state_error: f64,
    /// `sup |u(-a + 1, ·) - V|` on the last slab.
    pub left_edge_error: f64,
    /// `sup u` over the right quarter of the last slab.
    pub right_state_error: f64,
    #[serde(skip)]
    pub last: Option<FrontSolution>,
    #[serde(skip)]
    pub last_grid: Option<SlabGrid>,
}

/// Aitken's Δ² limit of the last three terms; falls back to the last term.
pub fn aitken(c: &[f64]) -> f64 {
    let n = c.len();
    if n < 3 {
        return *c.last().unwrap_or(&f64::NAN);
    }
    let (x0, x1, x2) = (c[n - 3], c[n - 2], c[n - 1]);
    let denom = (x2 - x1) - (x1 - x0);
    if denom.abs() < 1e-300 {
        return x2;
    }
    x2 - (x2 - x1) * (x2 - x1) / denom
}

/// Fronts on slabs of increasing half-length, each speed search warm-started from the
/// previous front. `make_grid(a)` builds the slab for half-length `a`.
pub fn continue_speed<G>(
    a_list: &[f64],
    make_grid: G,
    het: &Heterogeneity,
    reaction: &Reaction,
    profile: &[f64],
    normalization: Normalization,
    bracket: impl Fn(f64) -> Result<(f64, f64)>,
) -> Result<SpeedCurve>
where
    G: Fn(f64) -> Result<SlabGrid>,
{
    if a_list.is_empty() || a_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("a-list must be nonempty and increasing"));
    }
    let mut points = Vec::new();
    let mut prev: Option<(SlabGrid, FrontSolution)> = None;
    for &a in a_list {
        let grid = make_grid(a)?;
        let problem = SlabProblem::new(&grid, het, reaction, profile)?;
        let br = bracket(a)?;
        let search = match &prev {
            Some((g_old, f_old)) => {
                let warm = extend_front(g_old, &f_old.u, &grid, profile);
                pinned_speed(&problem, normalization, f_old.c, &warm)
                    .or_else(|_| find_speed(&problem, normalization, br, Some((f_old.c, &warm))))
                    .or_else(|_| find_speed(&problem, normalization, br, None))?
            }
            None => find_speed(&problem, normalization, br, None)?,
        };
        points.push((a, search.c));
        prev = Some((grid, search.state));
    }
    let speeds: Vec<f64> = points.iter().map(|p| p.1).collect();
    let c_inf = aitken(&speeds);
    let (grid, last) = prev.expect("at least one slab");
    let a = grid.half_length();
    let mut left = 0.0_f64;
    let mut right = 0.0_f64;
    for i in 0..grid.nx() {
        let x = grid.x(i);
        for j in 0..grid.ny() {
            let v = last.u[grid.index(i, j)];
            if x <= -0.5 * a {
                left = left.max((v - profile[j]).abs());
            }
            if x >= 0.5 * a {
                right = right.max(v.abs());
            }
        }
    }
    let edge = x_slice(&grid, &last.u, -a + 1.0)
        .iter()
        .zip(profile)
        .fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
    Ok(SpeedCurve {
        uncertainty: (c_inf - speeds[speeds.len() - 1]).abs(),
        points,
        c_inf,
        left_state_error: left,
        left_edge_error: edge,
        right_state_error: right,
        last: Some(last),
        last_grid: Some(grid),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupercriticalFront {
    pub front: FrontSolution,
    /// Translation of the minimal-speed front supplying the boundary data.
    pub r: f64,
    pub r_bracket: (f64, f64),
}

/// Front of speed `c > c_inf` on a slab of half-length `a`, with boundary data
/// `u*(±a + r, ·)` taken from a minimal-speed front `u*` and `r` chosen so that the
/// point normalization holds.
#[allow(clippy::too_many_arguments)]
pub fn supercritical_front(
    star_grid: &SlabGrid,
    star: &FrontSolution,
    c_inf: f64,
    c: f64,
    a: f64,
    het: &Heterogeneity,
    reaction: &Reaction,
    profile: &[f64],
) -> Result<SupercriticalFront> {
    if c <= c_inf {
        return Err(Error::BracketNotFound {
            what: "supercritical front (speed not above the minimal speed)",
            lo: c,
            hi: c_inf,
            f_lo: f64::NAN,
            f_hi: f64::NAN,
        });
    }
    let a_star = star_grid.half_length();
    if a >= a_star {
        return Err(Error::invalid("supercritical slab must be shorter than the minimal-speed slab"));
    }
    let grid = SlabGrid::with_spacing(a, star_grid.hx(), star_grid.transverse().clone())?;
    let normalization = match star.normalization {
        Normalization::Point { level } => Normalization::Point { level },
        n => n,
    };
    let level = normalization.level();
    let slice = |x: f64| -> Vec<f64> {
        if x < -a_star {
            profile.to_vec()
        } else if x > a_star {
            vec![0.0; grid.ny()]
        } else {
            x_slice(star_grid, &star.u, x)
        }
    };
    // the normalization value decreases in r
    let eval = |r: f64, warm: Option<&FrontSolution>| -> Result<(f64, FrontSolution)> {
        let problem = SlabProblem::with_boundary(&grid, het, reaction, profile, slice(-a + r), slice(a + r))?;
        let sol = match warm {
            Some(w) => problem
                .solve(c, Some(&w.u), normalization)
                .or_else(|_| problem.solve(c, None, normalization))?,
            None => problem.solve(c, None, normalization)?,
        };
        Ok((sol.normalized_value - level, sol))
    };
    let r_hi = a_star - a;
    let mut r_lo = -a;
    loop {
        let (g, _) = eval(r_lo, None)?;
        if g > 0.0 {
            break;
        }
        r_lo -= 0.5 * a;
        if r_lo < -a_star - a {
            return Err(Error::BracketNotFound {
                what: "supercritical translation",
                lo: r_lo,
                hi: r_hi,
                f_lo: g,
                f_hi: f64::NAN,
            });
        }
    }
    let search = locate_speed(eval, None, "supercritical translation", r_lo, r_hi, 1e-6, 1e-6)?;
    Ok(SupercriticalFront {
        r: search.c,
        r_bracket: search.bracket,
        front: search.state,
    })
}
