//! Transverse steady states `-ΔV = h(y, V)`: the KPP profile, the bistable
//! maximal solution, energy minimizers and the bistable thresholds.

use serde::Serialize;

use crate::discretize::{transverse_tridiagonal, Tridiagonal};
use crate::error::{Error, Result};
use crate::geometry::{Potential, TransverseGrid};
use crate::nonlinearity::{Heterogeneity, Reaction, ReactionClass};
use crate::spectral::principal_pair;

/// Amplitude below which a profile is classified as zero.
pub const ZERO_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    MonotoneIteration,
    ParabolicDescent,
    EnergyMinimizer,
}

#[derive(Debug, Clone, Serialize)]
pub struct Profile {
    /// Nodal values on the transverse grid, Dirichlet nodes included.
    pub values: Vec<f64>,
    /// Confinement strength; 0 for CSD media.
    pub alpha: f64,
    pub class: ReactionClass,
    /// `sup |ΔV + h(y, V)|` over the unknown nodes.
    pub residual: f64,
    pub origin: Origin,
    /// Fitted exponential rate of the tail (see [`tail_rate`]).
    pub decay_rate: f64,
    pub energy: f64,
    pub iterations: usize,
}

impl Profile {
    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileOutcome {
    Zero { sup: f64, iterations: usize },
    Found(Profile),
}

impl ProfileOutcome {
    pub fn profile(&self) -> Option<&Profile> {
        match self {
            ProfileOutcome::Found(p) => Some(p),
            ProfileOutcome::Zero { .. } => None,
        }
    }

    pub fn into_profile(self) -> Option<Profile> {
        match self {
            ProfileOutcome::Found(p) => Some(p),
            ProfileOutcome::Zero { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProfileOutcome::Zero { .. })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    /// Weighted L² norm of `-Δw - h(y, w)` over the unknown nodes.
    pub gradient_norm: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    /// Residual required of every returned profile.
    pub residual_tol: f64,
    /// Sup-norm change per sweep at which monotone sweeps hand over to Newton.
    pub sweep_tol: f64,
    pub max_sweeps: usize,
    /// Pseudo-time step of the descent.
    pub dt: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            residual_tol: 1e-10,
            sweep_tol: 1e-10,
            max_sweeps: 2_000_000,
            dt: 100.0,
        }
    }
}

/// Discretized transverse problem `A V = rho f(V)` with `A = -Δ_y + q`.
pub(crate) struct TransverseProblem<'a> {
    grid: &'a TransverseGrid,
    reaction: &'a Reaction,
    rho: Vec<f64>,
    nodes: Vec<usize>,
    base: Tridiagonal,
}

impl<'a> TransverseProblem<'a> {
    pub(crate) fn new(grid: &'a TransverseGrid, het: &Heterogeneity, reaction: &'a Reaction) -> Self {
        let radii = grid.radii();
        let rho: Vec<f64> = radii.iter().map(|&r| het.reaction_weight(r)).collect();
        let q: Vec<f64> = radii.iter().map(|&r| het.absorption(r)).collect();
        let base = transverse_tridiagonal(grid, &q, 0.0);
        TransverseProblem {
            grid,
            reaction,
            rho,
            nodes: grid.unknowns().collect(),
            base,
        }
    }

    fn gather(&self, v: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&j| v[j]).collect()
    }

    fn scatter(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.grid.len()];
        for (k, &j) in self.nodes.iter().enumerate() {
            v[j] = x[k];
        }
        v
    }

    fn source(&self, v: &[f64]) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&j| self.rho[j] * self.reaction.eval(v[j]))
            .collect()
    }

    /// `ΔV + h(y, V)` on the unknowns.
    pub(crate) fn residual(&self, v: &[f64]) -> Vec<f64> {
        let av = self.base.apply(&self.gather(v));
        av.iter().zip(self.source(v)).map(|(a, s)| s - a).collect()
    }

    pub(crate) fn residual_sup(&self, v: &[f64]) -> f64 {
        self.residual(v).iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Stabilized semi-implicit sweeps
    /// `(1/dt + A + K) z⁺ = z/dt + rho f(z) + K z`, monotone for every `dt`.
    /// Stops when the sweep changes less than `tol`, or, if `floor` is given,
    /// as soon as `sup z` drops below it.
    fn sweep(
        &self,
        start: Vec<f64>,
        dt: f64,
        direction: Direction,
        tol: f64,
        max_sweeps: usize,
        floor: Option<f64>,
    ) -> Result<(Vec<f64>, usize)> {
        let k = self.reaction.lipschitz();
        let inv_dt = if dt.is_finite() { 1.0 / dt } else { 0.0 };
        let m = self.nodes.len();
        let lu = self.base.shifted(&vec![k + inv_dt; m]).factor()?;
        let mut z = start;
        for it in 1..=max_sweeps {
            let src = self.source(&z);
            let mut x: Vec<f64> = self
                .nodes
                .iter()
                .zip(&src)
                .map(|(&j, s)| s + (k + inv_dt) * z[j])
                .collect();
            lu.solve_in_place(&mut x);
            let next = self.scatter(&x);
            let mut change = 0.0_f64;
            for (a, b) in next.iter().zip(&z) {
                let d = a - b;
                let wrong = match direction {
                    Direction::Down => d > 1e-13 * b.abs().max(1.0),
                    Direction::Up => d < -1e-13 * b.abs().max(1.0),
                };
                if wrong {
                    return Err(Error::Ordering(format!(
                        "monotone sweep moved against its direction by {d:e} at iteration {it}"
                    )));
                }
                change = change.max(d.abs());
            }
            z = next;
            if let Some(fl) = floor {
                if z.iter().cloned().fold(0.0, f64::max) <= fl {
                    return Ok((z, it));
                }
            }
            if change <= tol {
                return Ok((z, it));
            }
        }
        Err(Error::NoConvergence {
            what: "monotone sweep",
            iterations: max_sweeps,
            residual: self.residual_sup(&z),
        })
    }

    /// Damped Newton on `A V - rho f(V) = 0` with tridiagonal Jacobians.
    pub(crate) fn newton(&self, start: Vec<f64>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
        let mut v = start;
        let mut r = self.residual(&v);
        let mut rn = sup(&r);
        for it in 0..max_iter {
            if rn <= tol {
                return Ok((v, it));
            }
            let jac_shift: Vec<f64> = self
                .nodes
                .iter()
                .map(|&j| -self.rho[j] * self.reaction.derivative(v[j]))
                .collect();
            let mut step = r.clone();
            self.base.shifted(&jac_shift).factor()?.solve_in_place(&mut step);
            let mut t = 1.0;
            loop {
                let mut trial = v.clone();
                for (k, &j) in self.nodes.iter().enumerate() {
                    trial[j] += t * step[k];
                }
                let tr = self.residual(&trial);
                let tn = sup(&tr);
                if tn < rn || t < 1e-4 {
                    if tn >= rn {
                        return Err(Error::NoConvergence {
                            what: "profile Newton",
                            iterations: it,
                            residual: rn,
                        });
                    }
                    v = trial;
                    r = tr;
                    rn = tn;
                    break;
                }
                t *= 0.5;
            }
        }
        if rn <= tol {
            return Ok((v, max_iter));
        }
        Err(Error::NoConvergence {
            what: "profile Newton",
            iterations: max_iter,
            residual: rn,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Down,
    Up,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}

fn ones(grid: &TransverseGrid) -> Vec<f64> {
    let mut v = vec![0.0; grid.len()];
    for j in grid.unknowns() {
        v[j] = 1.0;
    }
    v
}

fn alpha_of(het: &Heterogeneity) -> f64 {
    match het {
        Heterogeneity::Confined { alpha, .. } => *alpha,
        Heterogeneity::Csd(_) => 0.0,
    }
}

fn finish(
    grid: &TransverseGrid,
    het: &Heterogeneity,
    reaction: &Reaction,
    values: Vec<f64>,
    origin: Origin,
    iterations: usize,
) -> Profile {
    let problem = TransverseProblem::new(grid, het, reaction);
    Profile {
        residual: problem.residual_sup(&values),
        alpha: alpha_of(het),
        class: reaction.class(),
        origin,
        decay_rate: tail_rate(grid, &values),
        energy: energy(grid, het, reaction, &values).value,
        iterations,
        values,
    }
}

/// KPP profile with its uniqueness check.
#[derive(Debug, Clone, Serialize)]
pub struct KppProfile {
    pub outcome: ProfileOutcome,
    /// Principal eigenvalue `λ_α` on the same grid.
    pub lambda: f64,
    /// Sub-solution amplitude `ε` of the upward run.
    pub epsilon: Option<f64>,
    /// Sup-norm gap between the downward and upward limits.
    pub uniqueness_gap: Option<f64>,
}

/// Largest dyadic `ε ≤ 1/2` with `-λ ε φ + f(εφ) - f'(0) ε φ ≥ 0` at every node
/// (`φ` normalized to unit maximum).
pub fn subsolution_epsilon(reaction: &Reaction, lambda: f64, phi: &[f64]) -> Option<f64> {
    let top = phi.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) || lambda >= 0.0 {
        return None;
    }
    let mut eps = 0.5;
    for _ in 0..200 {
        let ok = phi.iter().all(|&p| {
            let s = eps * p / top;
            -lambda * s + reaction.eval(s) - reaction.fprime0() * s >= 0.0
        });
        if ok {
            return Some(eps);
        }
        eps *= 0.5;
    }
    None
}

/// Positive solution of `-ΔV = f(V) - αg V` for a KPP reaction, by monotone
/// iteration down from 1 and up from `εφ_α`.
pub fn solve_profile_kpp(
    grid: &TransverseGrid,
    alpha: f64,
    potential: &Potential,
    reaction: &Reaction,
    opts: ProfileOptions,
) -> Result<KppProfile> {
    if reaction.class() != ReactionClass::Kpp {
        return Err(Error::invalid("solve_profile_kpp needs a KPP reaction"));
    }
    let het = Heterogeneity::confined(alpha, potential.clone());
    let coeff: Vec<f64> = potential
        .eval_on(grid)
        .iter()
        .map(|g| alpha * g - reaction.fprime0())
        .collect();
    let (lambda, phi, _, _) = principal_pair(grid, &coeff, Default::default())?;
    if lambda >= 0.0 {
        return Ok(KppProfile {
            outcome: ProfileOutcome::Zero { sup: 0.0, iterations: 0 },
            lambda,
            epsilon: None,
            uniqueness_gap: None,
        });
    }
    let problem = TransverseProblem::new(grid, &het, reaction);

    let (down, n_down) = problem.sweep(ones(grid), f64::INFINITY, Direction::Down, opts.sweep_tol, opts.max_sweeps, None)?;
    let (down, _) = problem.newton(down, opts.residual_tol, 50)?;

    let eps = subsolution_epsilon(reaction, lambda, &phi)
        .ok_or_else(|| Error::invalid("no admissible sub-solution amplitude"))?;
    let top = phi.iter().cloned().fold(0.0, f64::max);
    let start: Vec<f64> = phi.iter().map(|p| eps * p / top).collect();
    let (up, _) = problem.sweep(start, f64::INFINITY, Direction::Up, opts.sweep_tol, opts.max_sweeps, None)?;
    let (up, _) = problem.newton(up, opts.residual_tol, 50)?;

    let gap = down.iter().zip(&up).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if down.iter().cloned().fold(0.0, f64::max) < ZERO_THRESHOLD {
        return Ok(KppProfile {
            outcome: ProfileOutcome::Zero {
                sup: down.iter().cloned().fold(0.0, f64::max),
                iterations: n_down,
            },
            lambda,
            epsilon: Some(eps),
            uniqueness_gap: Some(gap),
        });
    }
    let profile = finish(grid, &het, reaction, down, Origin::MonotoneIteration, n_down);
    Ok(KppProfile {
        outcome: ProfileOutcome::Found(profile),
        lambda,
        epsilon: Some(eps),
        uniqueness_gap: Some(gap),
    })
}

/// Descent `∂_t z = Δz + h(y, z)` from `seed` to its steady limit.
pub fn descend(
    grid: &TransverseGrid,
    het: &Heterogeneity,
    reaction: &Reaction,
    seed: &[f64],
    origin: Origin,
    opts: ProfileOptions,
) -> Result<ProfileOutcome> {
    if seed.len() != grid.len() {
        return Err(Error::invalid("seed does not match the grid"));
    }
    let problem = TransverseProblem::new(grid, het, reaction);
    let mut start = seed.to_vec();
    for j in 0..grid.len() {
        if !grid.unknowns().contains(&j) {
            start[j] = 0.0;
        }
    }
    // every nonzero bistable steady state exceeds theta somewhere
    let floor = match reaction.theta() {
        Some(t) if reaction.class() == ReactionClass::Bistable => t,
        _ => ZERO_THRESHOLD,
    };
    let descending = origin == Origin::ParabolicDescent;
    let direction = if descending { Direction::Down } else { Direction::Up };
    let (z, iterations) = if descending {
        problem.sweep(start, opts.dt, direction, opts.sweep_tol, opts.max_sweeps, Some(floor))?
    } else {
        free_flow(&problem, start, opts, floor)?
    };
    let top = z.iter().cloned().fold(0.0, f64::max);
    if top <= floor || top < ZERO_THRESHOLD {
        return Ok(ProfileOutcome::Zero { sup: top, iterations });
    }
    let (v, _) = problem.newton(z, opts.residual_tol, 50)?;
    let top = v.iter().cloned().fold(0.0, f64::max);
    if top < ZERO_THRESHOLD {
        return Ok(ProfileOutcome::Zero { sup: top, iterations });
    }
    Ok(ProfileOutcome::Found(finish(grid, het, reaction, v, origin, iterations)))
}

/// Same sweeps without a monotonicity requirement, for seeds that are neither
/// sub- nor super-solutions.
fn free_flow(problem: &TransverseProblem<'_>, start: Vec<f64>, opts: ProfileOptions, floor: f64) -> Result<(Vec<f64>, usize)> {
    let k = problem.reaction.lipschitz();
    let inv_dt = 1.0 / opts.dt;
    let m = problem.nodes.len();
    let lu = problem.base.shifted(&vec![k + inv_dt; m]).factor()?;
    let mut z = start;
    for it in 1..=opts.max_sweeps {
        let src = problem.source(&z);
        let mut x: Vec<f64> = problem
            .nodes
            .iter()
            .zip(&src)
            .map(|(&j, s)| s + (k + inv_dt) * z[j])
            .collect();
        lu.solve_in_place(&mut x);
        let next = problem.scatter(&x);
        let change = next.iter().zip(&z).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        z = next;
        let top = z.iter().cloned().fold(0.0, f64::max);
        if change <= opts.sweep_tol || top < floor.min(ZERO_THRESHOLD) {
            return Ok((z, it));
        }
    }
    Err(Error::NoConvergence {
        what: "energy descent",
        iterations: opts.max_sweeps,
        residual: problem.residual_sup(&z),
    })
}

/// Maximal solution: the decreasing descent limit from `z ≡ 1`.
pub fn solve_profile_maximal(
    grid: &TransverseGrid,
    het: &Heterogeneity,
    reaction: &Reaction,
    opts: ProfileOptions,
) -> Result<ProfileOutcome> {
    descend(grid, het, reaction, &ones(grid), Origin::ParabolicDescent, opts)
}

pub fn solve_profile_bistable_maximal(
    grid: &TransverseGrid,
    alpha: f64,
    potential: &Potential,
    reaction: &Reaction,
    opts: ProfileOptions,
) -> Result<ProfileOutcome> {
    if reaction.class() != ReactionClass::Bistable {
        return Err(Error::invalid("solve_profile_bistable_maximal needs a bistable reaction"));
    }
    let het = Heterogeneity::confined(alpha, potential.clone());
    solve_profile_maximal(grid, &het, reaction, opts)
}

/// Nonzero profile for either class: the KPP solution or the bistable maximal solution.
pub fn solve_profile(
    grid: &TransverseGrid,
    het: &Heterogeneity,
    reaction: &Reaction,
    opts: ProfileOptions,
) -> Result<ProfileOutcome> {
    match (reaction.class(), het) {
        (ReactionClass::Kpp, Heterogeneity::Confined { alpha, potential }) => {
            Ok(solve_profile_kpp(grid, *alpha, potential, reaction, opts)?.outcome)
        }
        _ => solve_profile_maximal(grid, het, reaction, opts),
    }
}

/// `J(w) = ∫ ½|∇w|² - H(y, w)`, with `H(y, z) = ∫_0^z h(y, s) ds`.
pub fn energy(grid: &TransverseGrid, het: &Heterogeneity, reaction: &Reaction, w: &[f64]) -> EnergyReport {
    let radii = grid.radii();
    let potential: f64 = grid
        .weights()
        .iter()
        .zip(&radii)
        .zip(w)
        .map(|((wt, &r), &z)| wt * het.antiderivative(reaction, r, z))
        .sum();
    let value = 0.5 * grid.dirichlet_energy(w) - potential;
    let problem = TransverseProblem::new(grid, het, reaction);
    let res = problem.residual(w);
    let gradient_norm = problem
        .nodes
        .iter()
        .zip(&res)
        .map(|(&j, r)| grid.weights()[j] * r * r)
        .sum::<f64>()
        .sqrt();
    EnergyReport {
        value,
        gradient_norm,
        spacing: grid.spacing(),
    }
}

/// Confined-medium energy `∫ ½|∇w|² + α/2 g w² - F(w)`.
pub fn confined_energy(
    grid: &TransverseGrid,
    alpha: f64,
    potential: &Potential,
    reaction: &Reaction,
    w: &[f64],
) -> EnergyReport {
    energy(grid, &Heterogeneity::confined(alpha, potential.clone()), reaction, w)
}

/// Gradient of the discrete energy with respect to the nodal values at the unknowns,
/// `W_j (-Δw - h(y, w))_j`.
pub fn energy_gradient(grid: &TransverseGrid, het: &Heterogeneity, reaction: &Reaction, w: &[f64]) -> Vec<f64> {
    let problem = TransverseProblem::new(grid, het, reaction);
    let res = problem.residual(w);
    let mut g = vec![0.0; grid.len()];
    for (k, &j) in problem.nodes.iter().enumerate() {
        g[j] = -grid.weights()[j] * res[k];
    }
    g
}

/// Smooth bump `height · cos²(π|y| / 2width)` on `|y| < width`.
pub fn bump(grid: &TransverseGrid, height: f64, width: f64) -> Vec<f64> {
    let mut v: Vec<f64> = grid
        .radii()
        .iter()
        .map(|&r| {
            if r < width {
                let c = (std::f64::consts::FRAC_PI_2 * r / width).cos();
                height * c * c
            } else {
                0.0
            }
        })
        .collect();
    for j in 0..grid.len() {
        if !grid.unknowns().contains(&j) {
            v[j] = 0.0;
        }
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct Minimizer {
    pub outcome: ProfileOutcome,
    pub energy: f64,
    /// Whether the limit matches the maximal solution within `1e-5`.
    pub matches_maximal: Option<bool>,
}

/// Gradient flow of `J` from `seed`, compared with the maximal solution.
pub fn minimize_energy(
    grid: &TransverseGrid,
    het: &Heterogeneity,
    reaction: &Reaction,
    seed: &[f64],
    opts: ProfileOptions,
) -> Result<Minimizer> {
    if reaction.class() != ReactionClass::Bistable {
        return Err(Error::invalid("minimize_energy needs a bistable reaction"));
    }
    let outcome = descend(grid, het, reaction, seed, Origin::EnergyMinimizer, opts)?;
    let maximal = solve_profile_maximal(grid, het, reaction, opts)?;
    let matches_maximal = match (&outcome, &maximal) {
        (ProfileOutcome::Found(a), ProfileOutcome::Found(b)) => Some(
            a.values
                .iter()
                .zip(&b.values)
                .all(|(x, y)| (x - y).abs() <= 1e-5),
        ),
        (ProfileOutcome::Zero { .. }, ProfileOutcome::Zero { .. }) => Some(true),
        _ => Some(false),
    };
    let energy = outcome.profile().map_or(0.0, |p| p.energy);
    Ok(Minimizer {
        outcome,
        energy,
        matches_maximal,
    })
}

/// Rate `γ` of the least-squares fit `log V ≈ c - γ|y|` over the outer quarter
/// of the grid (unknown nodes with `V > 0` only).
pub fn tail_rate(grid: &TransverseGrid, values: &[f64]) -> f64 {
    let r_max = grid.radius();
    let radii = grid.radii();
    let pts: Vec<(f64, f64)> = grid
        .unknowns()
        .filter(|&j| radii[j] >= 0.75 * r_max && values[j] > 1e-300)
        .filter(|&j| grid.layout() != crate::geometry::Layout::Line || grid.coords()[j] > 0.0)
        .map(|j| (radii[j], values[j].ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -sxy / sxx
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BistableThresholds {
    /// `α_*`: largest `α` found with `min J_α < 0`.
    pub alpha_lower: f64,
    /// `α*`: largest `α` found with a nonzero maximal solution.
    pub alpha_upper: f64,
    /// Final bisection widths.
    pub width: f64,
}

/// Bisection estimates of `α_*` and `α*` for a bistable reaction.
pub fn bistable_thresholds(
    grid: &TransverseGrid,
    potential: &Potential,
    reaction: &Reaction,
    width: f64,
    opts: ProfileOptions,
) -> Result<BistableThresholds> {
    if reaction.class() != ReactionClass::Bistable {
        return Err(Error::invalid("bistable_thresholds needs a bistable reaction"));
    }
    let solve = |alpha: f64| solve_profile_bistable_maximal(grid, alpha, potential, reaction, opts);
    let exists = |alpha: f64| -> Result<bool> { Ok(!solve(alpha)?.is_zero()) };
    let negative = |alpha: f64| -> Result<bool> {
        Ok(solve(alpha)?.profile().map_or(false, |p| p.energy < 0.0))
    };

    let mut lo = 1e-3;
    if !negative(lo)? {
        return Err(Error::BracketNotFound {
            what: "bistable thresholds (small alpha has no negative-energy profile)",
            lo,
            hi: lo,
            f_lo: 0.0,
            f_hi: 0.0,
        });
    }
    let mut hi = 2.0 * lo;
    while exists(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::BracketNotFound {
                what: "bistable upper threshold",
                lo,
                hi,
                f_lo: 1.0,
                f_hi: 1.0,
            });
        }
    }
    let start = (lo, hi);
    let (mut a, mut b) = start;
    while b - a > width {
        let mid = 0.5 * (a + b);
        if exists(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    let alpha_upper = a;
    let (mut a, mut b) = (1e-3, b);
    while b - a > width {
        let mid = 0.5 * (a + b);
        if negative(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(BistableThresholds {
        alpha_lower: a,
        alpha_upper,
        width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Layout;

    fn line(radius: f64, n: usize) -> TransverseGrid {
        TransverseGrid::new(Layout::Line, radius, n).unwrap()
    }

    #[test]
    fn kpp_profile_is_symmetric_and_unique() {
        let g = line(12.0, 241);
        let f = Reaction::kpp(1.0).unwrap();
        let out = solve_profile_kpp(&g, 0.25, &Potential::Quadratic, &f, Default::default()).unwrap();
        let p = out.outcome.profile().unwrap();
        assert!(p.residual <= 1e-8);
        assert!(out.uniqueness_gap.unwrap() <= 1e-6);
        let mid = g.origin_index();
        assert!((p.sup() - p.values[mid]).abs() < 1e-14);
        assert!(p.values.iter().all(|&v| (0.0..1.0).contains(&v)));
        assert!(p.energy < 0.0);
    }

    #[test]
    fn kpp_profile_vanishes_beyond_alpha0() {
        let g = line(10.0, 201);
        let f = Reaction::kpp(1.0).unwrap();
        let out = solve_profile_kpp(&g, 1.5, &Potential::Quadratic, &f, Default::default()).unwrap();
        assert!(out.outcome.is_zero());
    }

    #[test]
    fn bistable_maximal_regimes() {
        let g = line(10.0, 201);
        let f = Reaction::bistable(1.0, 0.25).unwrap();
        let small = solve_profile_bistable_maximal(&g, 0.01, &Potential::Quadratic, &f, Default::default()).unwrap();
        let p = small.profile().unwrap();
        assert!(p.sup() > 0.25 && p.residual <= 1e-8);
        let big = solve_profile_bistable_maximal(&g, 50.0, &Potential::Quadratic, &f, Default::default()).unwrap();
        assert!(big.is_zero());
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let g = line(5.0, 51);
        let f = Reaction::bistable(1.0, 0.25).unwrap();
        let e = confined_energy(&g, 1.0, &Potential::Quadratic, &f, &vec![0.0; 51]);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let g = line(6.0, 61);
        let f = Reaction::bistable(1.0, 0.25).unwrap();
        let het = Heterogeneity::confined(0.3, Potential::Quadratic);
        let w = bump(&g, 0.8, 4.0);
        let grad = energy_gradient(&g, &het, &f, &w);
        let dir: Vec<f64> = (0..61).map(|j| if j == 0 || j == 60 { 0.0 } else { ((j * 7) % 5) as f64 - 2.0 }).collect();
        let eps = 1e-6;
        let plus: Vec<f64> = w.iter().zip(&dir).map(|(a, d)| a + eps * d).collect();
        let minus: Vec<f64> = w.iter().zip(&dir).map(|(a, d)| a - eps * d).collect();
        let fd = (energy(&g, &het, &f, &plus).value - energy(&g, &het, &f, &minus).value) / (2.0 * eps);
        let exact: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0));
    }
}
