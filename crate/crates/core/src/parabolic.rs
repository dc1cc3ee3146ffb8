//! Time integration of `∂_t u - Δu = h(y, u)` on a slab, with a moving window,
//! level-set tracking and spreading-speed fits.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fronts::x_slice;
use crate::geometry::SlabGrid;
use crate::nonlinearity::{Heterogeneity, Reaction};

/// Sine transform `X_k = Σ_j v_j sin(π j k / (n + 1))`, two real rows per complex FFT.
struct Dst {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Dst {
    fn new(n: usize) -> Self {
        let len = 2 * (n + 1);
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Dst {
            n,
            fft,
            buf: vec![Complex::default(); len],
            scratch,
        }
    }

    fn pair(&mut self, a: &mut [f64], b: Option<&mut [f64]>) {
        let n = self.n;
        let len = 2 * (n + 1);
        self.buf[0] = Complex::default();
        self.buf[n + 1] = Complex::default();
        for k in 1..=n {
            let im = b.as_ref().map_or(0.0, |b| b[k - 1]);
            let z = Complex::new(a[k - 1], im);
            self.buf[k] = z;
            self.buf[len - k] = -z;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for k in 1..=n {
            a[k - 1] = -0.5 * self.buf[k].im;
        }
        if let Some(b) = b {
            for k in 1..=n {
                b[k - 1] = 0.5 * self.buf[k].re;
            }
        }
    }

    fn rows(&mut self, rows: &mut [Vec<f64>], scale: f64) {
        let mut it = rows.chunks_mut(2);
        for chunk in &mut it {
            match chunk {
                [a, b] => self.pair(a, Some(b)),
                [a] => self.pair(a, None),
                _ => unreachable!(),
            }
        }
        if scale != 1.0 {
            for row in rows.iter_mut() {
                row.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }
}

/// First-order IMEX step `(I + dt(-Δ + q)) u⁺ = u + dt ρ f(u)` with zero Dirichlet data
/// on the slab ends and the transverse boundary.
pub struct ImexStepper {
    grid: SlabGrid,
    reaction: Reaction,
    dt: f64,
    rho: Vec<f64>,
    ys: Vec<usize>,
    /// Thomas factors of every x1 mode, stored transverse-row major:
    /// `inv_pivot[k][mode]`, `upper[k][mode]`, with the shared subdiagonal `lower[k]`.
    lower: Vec<f64>,
    inv_pivot: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
    dst: Dst,
    rows: Vec<Vec<f64>>,
}

impl ImexStepper {
    pub fn new(grid: &SlabGrid, het: &Heterogeneity, reaction: &Reaction, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        let tg = grid.transverse();
        let radii = tg.radii();
        let ys: Vec<usize> = tg.unknowns().collect();
        let n = grid.nx() - 2;
        let h = grid.hx();
        let m = ys.len();
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for (k, &j) in ys.iter().enumerate() {
            let s = tg.stencil(j);
            lower[k] = dt * s.lower;
            upper[k] = dt * s.upper;
            diag[k] = 1.0 + dt * (s.diag + het.absorption(radii[j]));
        }
        let mut inv_pivot = vec![vec![0.0; n]; m];
        let mut up = vec![vec![0.0; n]; m];
        for mode in 0..n {
            let sn = (std::f64::consts::PI * (mode + 1) as f64 / (2.0 * (n + 1) as f64)).sin();
            let mu = 4.0 * sn * sn / (h * h);
            let mut prev = 0.0;
            for k in 0..m {
                let pivot = diag[k] + dt * mu - if k > 0 { lower[k] * prev } else { 0.0 };
                if !(pivot.abs() > 1e-14) {
                    return Err(Error::Breakdown {
                        what: "IMEX transverse factorization",
                        iteration: k,
                        detail: format!("pivot {pivot:e} in mode {mode}"),
                    });
                }
                inv_pivot[k][mode] = 1.0 / pivot;
                prev = if k + 1 < m { upper[k] / pivot } else { 0.0 };
                up[k][mode] = prev;
            }
        }
        Ok(ImexStepper {
            grid: grid.clone(),
            reaction: reaction.clone(),
            dt,
            rho: radii.iter().map(|&r| het.reaction_weight(r)).collect(),
            ys,
            lower,
            inv_pivot,
            upper: up,
            dst: Dst::new(n),
            rows: vec![vec![0.0; n]; m],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self, u: &mut [f64]) {
        let g = &self.grid;
        let n = g.nx() - 2;
        for i in 1..=n {
            for (k, &j) in self.ys.iter().enumerate() {
                let v = u[g.index(i, j)];
                self.rows[k][i - 1] = v + self.dt * self.rho[j] * self.reaction.eval(v);
            }
        }
        self.dst.rows(&mut self.rows, 1.0);
        let m = self.ys.len();
        for k in 0..m {
            let (done, rest) = self.rows.split_at_mut(k);
            let row = &mut rest[0];
            let piv = &self.inv_pivot[k];
            if k == 0 {
                row.iter_mut().zip(piv).for_each(|(x, p)| *x *= p);
            } else {
                let (l, prev) = (self.lower[k], &done[k - 1]);
                for ((x, p), q) in row.iter_mut().zip(piv).zip(prev) {
                    *x = (*x - l * q) * p;
                }
            }
        }
        for k in (0..m.saturating_sub(1)).rev() {
            let (head, tail) = self.rows.split_at_mut(k + 1);
            let (row, next) = (&mut head[k], &tail[0]);
            for ((x, u), q) in row.iter_mut().zip(&self.upper[k]).zip(next) {
                *x -= u * q;
            }
        }
        self.dst.rows(&mut self.rows, 2.0 / (n + 1) as f64);
        u.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..=n {
            for (k, &j) in self.ys.iter().enumerate() {
                u[g.index(i, j)] = self.rows[k][i - 1];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimulationOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Steps between stored snapshots; 0 keeps only the final state.
    pub snapshot_every: usize,
    /// Level tracked along `y = 0`.
    pub level: f64,
    pub moving_window: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    /// Cumulative window shift: node `i` sits at `x(i) + shift`.
    pub shift: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// `(t, x_θ(t))` in fixed coordinates; NaN while no node reaches the level.
    pub track: Vec<(f64, f64)>,
    pub sup_history: Vec<(f64, f64)>,
    pub shift: f64,
    pub bound: f64,
    pub level: f64,
    #[serde(skip)]
    pub last: Vec<f64>,
}

impl Trajectory {
    pub fn final_sup(&self) -> f64 {
        self.sup_history.last().map_or(0.0, |p| p.1)
    }

    /// Tracked position at the last step not after `t`.
    pub fn position_at(&self, t: f64) -> f64 {
        self.track
            .iter()
            .take_while(|p| p.0 <= t + 1e-12)
            .last()
            .map_or(f64::NAN, |p| p.1)
    }
}

/// `sup{x : u(x, 0) ≥ level}` in window coordinates, interpolated between nodes.
pub fn level_crossing(grid: &SlabGrid, u: &[f64], level: f64) -> Option<f64> {
    let j = grid.transverse().origin_index();
    let i = (0..grid.nx()).rev().find(|&i| u[grid.index(i, j)] >= level)?;
    if i + 1 == grid.nx() {
        return Some(grid.x(i));
    }
    let (v0, v1) = (u[grid.index(i, j)], u[grid.index(i + 1, j)]);
    let t = if v0 > v1 { (v0 - level) / (v0 - v1) } else { 0.0 };
    Some(grid.x(i) + t * grid.hx())
}

/// Compact initial datum: a plateau of height `min(0.9, 4 level)` on `|x1| ≤ 2`,
/// `|y| ≤ 1`, cut off smoothly over a unit width and kept below `0.99 V` when a
/// profile is given.
pub fn compact_initial(grid: &SlabGrid, level: f64, profile: Option<&[f64]>) -> Vec<f64> {
    let height = (4.0 * level).min(0.9);
    let cut = |s: f64, plateau: f64| -> f64 {
        let s = s.abs();
        if s <= plateau {
            1.0
        } else if s >= plateau + 1.0 {
            0.0
        } else {
            let c = (0.5 * std::f64::consts::PI * (s - plateau)).cos();
            c * c
        }
    };
    let tg = grid.transverse();
    let ys = tg.coords();
    let mut u = vec![0.0; grid.len()];
    for i in 1..grid.nx() - 1 {
        let cx = cut(grid.x(i), 2.0);
        if cx == 0.0 {
            continue;
        }
        for j in tg.unknowns() {
            let mut v = height * cx * cut(ys[j], 1.0);
            if let Some(p) = profile {
                v = v.min(0.99 * p[j]);
            }
            u[grid.index(i, j)] = v;
        }
    }
    u
}

/// Runs the IMEX scheme from `u0` up to `t_end`. With the moving window, once the
/// tracked level reaches `0.75 a` the state moves left by a quarter of the slab and
/// zeros enter on the right. `sink` sees every stored snapshot as it is taken.
pub fn simulate(
    grid: &SlabGrid,
    het: &Heterogeneity,
    reaction: &Reaction,
    u0: &[f64],
    opts: &SimulationOptions,
    mut sink: Option<&mut dyn FnMut(&Snapshot)>,
) -> Result<Trajectory> {
    if u0.len() != grid.len() {
        return Err(Error::invalid("initial datum does not match the grid"));
    }
    if u0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("initial datum must be finite and nonnegative"));
    }
    if !(opts.t_end > 0.0) {
        return Err(Error::invalid("final time must be positive"));
    }
    let mut stepper = ImexStepper::new(grid, het, reaction, opts.dt)?;
    let steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let sup0 = sup(u0);
    let bound = sup0.max(1.0);
    let a = grid.half_length();
    let cells = ((0.25 * a / grid.hx()).round() as usize).max(1);
    let ny = grid.ny();

    let mut u = u0.to_vec();
    let mut shift = 0.0;
    let mut track = vec![(0.0, track_point(grid, &u, opts.level, shift))];
    let mut sup_history = vec![(0.0, sup0)];
    let mut snapshots = Vec::new();
    let mut keep = |snap: Snapshot, snapshots: &mut Vec<Snapshot>| {
        if let Some(s) = sink.as_mut() {
            s(&snap);
        }
        snapshots.push(snap);
    };
    if opts.snapshot_every > 0 {
        keep(Snapshot { t: 0.0, shift, u: u.clone() }, &mut snapshots);
    }
    for step in 1..=steps {
        let t = step as f64 * opts.dt;
        stepper.step(&mut u);
        let s = sup(&u);
        if !(s <= bound + 1e-6) {
            return Err(Error::Unstable { t, sup: s, bound });
        }
        if opts.moving_window {
            if let Some(x) = level_crossing(grid, &u, opts.level) {
                if x >= 0.75 * a {
                    u.copy_within(cells * ny.., 0);
                    let tail = u.len() - cells * ny;
                    u[tail..].iter_mut().for_each(|v| *v = 0.0);
                    shift += cells as f64 * grid.hx();
                }
            }
        }
        track.push((t, track_point(grid, &u, opts.level, shift)));
        sup_history.push((t, s));
        let due = opts.snapshot_every > 0 && step % opts.snapshot_every == 0;
        if due || step == steps {
            keep(Snapshot { t, shift, u: u.clone() }, &mut snapshots);
        }
    }
    Ok(Trajectory {
        snapshots,
        track,
        sup_history,
        shift,
        bound,
        level: opts.level,
        last: u,
    })
}

fn track_point(grid: &SlabGrid, u: &[f64], level: f64, shift: f64) -> f64 {
    level_crossing(grid, u, level).map_or(f64::NAN, |x| x + shift)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedFit {
    pub c: f64,
    /// Root-mean-square deviation of the track from the fitted line.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares slope of the level-set track over the final half of the run.
pub fn measure_spreading_speed(traj: &Trajectory) -> Result<SpeedFit> {
    let t_end = traj.track.last().map_or(0.0, |p| p.0);
    let pts: Vec<(f64, f64)> = traj.track.iter().copied().filter(|p| p.0 >= 0.5 * t_end).collect();
    if pts.len() < 3 {
        return Err(Error::NoFront("track too short".into()));
    }
    if let Some(p) = pts.iter().find(|p| !p.1.is_finite()) {
        return Err(Error::NoFront(format!(
            "level {} not reached at t = {:.3} (sup u = {:.3e})",
            traj.level,
            p.0,
            traj.final_sup()
        )));
    }
    if let Some(w) = pts.windows(2).find(|w| w[1].1 < w[0].1 - 1e-6) {
        return Err(Error::NoFront(format!(
            "track recedes from {:.4} to {:.4} at t = {:.3}",
            w[0].1, w[1].1, w[1].0
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let stx: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum();
    let c = stx / stt;
    let residual = (pts.iter().map(|p| (p.1 - xm - c * (p.0 - tm)).powi(2)).sum::<f64>() / n).sqrt();
    if !(c > 0.0) {
        return Err(Error::NoFront(format!("track does not advance (slope {c:.3e})")));
    }
    Ok(SpeedFit {
        c,
        residual,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

/// Sup-norm gap between a parabolic state and a slab front, both translated so
/// that their level crossings on `y = 0` coincide, over `|x - crossing| ≤ half_width`.
pub fn front_shape_gap(
    grid: &SlabGrid,
    u: &[f64],
    front_grid: &SlabGrid,
    front: &[f64],
    level: f64,
    half_width: f64,
) -> Result<f64> {
    if grid.transverse() != front_grid.transverse() {
        return Err(Error::invalid("shape comparison needs the same transverse grid"));
    }
    let xp = level_crossing(grid, u, level).ok_or_else(|| Error::NoFront("state below the level".into()))?;
    let xf = level_crossing(front_grid, front, level).ok_or_else(|| Error::NoFront("front below the level".into()))?;
    let steps = (half_width / grid.hx()).floor() as i64;
    let mut gap = 0.0_f64;
    for s in -steps..=steps {
        let d = s as f64 * grid.hx();
        let (x1, x2) = (xp + d, xf + d);
        let inside = |g: &SlabGrid, x: f64| x >= -g.half_length() && x <= g.half_length();
        if !inside(grid, x1) || !inside(front_grid, x2) {
            continue;
        }
        let a = x_slice(grid, u, x1);
        let b = x_slice(front_grid, front, x2);
        for (p, q) in a.iter().zip(&b) {
            gap = gap.max((p - q).abs());
        }
    }
    Ok(gap)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}
