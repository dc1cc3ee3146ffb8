//! One function per subcommand. Each writes its artifacts to the output directory
//! and returns the lines printed on standard output.

use std::sync::mpsc;
use std::time::Instant;

use serde::Serialize;

use super::config::{ReactionKind, RunConfig};
use super::output::{csv_bytes, write_file, FileRecord, OutputDir};
use crate::csd::{
    classifications_monotone, csd_front, csd_phase_diagram, csd_profile, csd_thresholds, phase_svg, speeds_monotone,
    Classification,
};
use crate::error::{Error, Result};
use crate::fronts::{
    continue_speed, find_speed, kpp_bracket, kpp_theta_norm, one_d_bistable_speed, FrontSolution, Normalization,
    SlabProblem,
};
use crate::geometry::{SlabGrid, TransverseGrid};
use crate::nonlinearity::{CsdMedium, Heterogeneity, Reaction, ReactionClass};
use crate::parabolic::{compact_initial, measure_spreading_speed, simulate, SimulationOptions, Snapshot};
use crate::profiles::{bump, energy, energy_gradient, minimize_energy, solve_profile, tail_rate};
use crate::spectral::{
    eigen_curve, find_alpha0, find_alpha0_extrapolated, linearized_stability, principal_eigen,
    principal_eigen_extrapolated, Alpha0Options,
};

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a mut OutputDir,
    pub timings: &'a mut Vec<(String, f64)>,
}

impl Context<'_> {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let r = f();
        self.timings.push((stage.to_string(), t.elapsed().as_secs_f64()));
        r
    }
}

fn profile_rows(grid: &TransverseGrid, v: &[f64]) -> Vec<[f64; 2]> {
    grid.coords().iter().zip(v).map(|(&y, &v)| [y, v]).collect()
}

fn slab_rows(grid: &SlabGrid, u: &[f64], shift: f64) -> Vec<[f64; 3]> {
    let ys = grid.transverse().coords();
    let mut rows = Vec::with_capacity(u.len());
    for i in 0..grid.nx() {
        for (j, &y) in ys.iter().enumerate() {
            rows.push([grid.x(i) + shift, y, u[grid.index(i, j)]]);
        }
    }
    rows
}

pub fn eig(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let grid = cfg.transverse()?;
    let pot = cfg.potential()?;
    let fp = cfg.fprime0()?;
    let alpha = cfg.potential.alpha;
    let mut lines = Vec::new();
    let e = ctx.timed("eigen", || principal_eigen(&grid, &pot, alpha, fp))?;
    lines.push(format!("lambda = {:.6}", e.lambda));
    let mut summary = serde_json::json!({
        "alpha": alpha, "fprime0": fp, "lambda": e.lambda, "residual": e.residual, "iterations": e.iterations,
    });
    if cfg.grid.extrapolate {
        let x = ctx.timed("extrapolation", || principal_eigen_extrapolated(&grid, &pot, alpha, fp))?;
        lines.push(format!("lambda (extrapolated) = {x:.6}"));
        summary["lambda_extrapolated"] = x.into();
    }
    ctx.out.csv("eig.csv", &["y", "phi"], profile_rows(&grid, &e.phi))?;
    if !cfg.sweep.alphas.is_empty() {
        let curve = ctx.timed("eigen curve", || eigen_curve(&cfg.sweep.alphas, &grid, &pot, fp))?;
        let rows: Vec<[f64; 3]> = curve.iter().map(|e| [e.alpha, e.lambda, e.residual]).collect();
        ctx.out.csv("eig_curve.csv", &["alpha", "lambda", "residual"], rows)?;
        lines.push(format!("eigen curve: {} points", curve.len()));
    }
    ctx.out.json("eig.json", &summary)?;
    Ok(lines)
}

pub fn alpha0(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let grid = cfg.transverse()?;
    let pot = cfg.potential()?;
    let fp = cfg.fprime0()?;
    let opts = Alpha0Options {
        alpha_max: cfg.tolerances.alpha_max,
        atol: cfg.tolerances.alpha0_atol,
    };
    let a0 = ctx.timed("alpha0", || {
        if cfg.grid.extrapolate {
            find_alpha0_extrapolated(&grid, &pot, fp, opts)
        } else {
            find_alpha0(&grid, &pot, fp, opts)
        }
    })?;
    ctx.out.json("alpha0.json", &a0)?;
    let mut lines = vec![a0.to_string()];
    if let Some(l) = a0.lambda_at_max {
        lines.push(format!("lambda(alpha_max = {}) = {l:.6}", opts.alpha_max));
    }
    Ok(lines)
}

fn confined(cfg: &RunConfig) -> Result<Heterogeneity> {
    Ok(Heterogeneity::confined(cfg.potential.alpha, cfg.potential()?))
}

pub fn profile(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let grid = cfg.transverse()?;
    let het = confined(cfg)?;
    let f = cfg.reaction()?;
    let outcome = ctx.timed("profile", || solve_profile(&grid, &het, &f, cfg.profile_options()))?;
    ctx.out.json("profile.json", &outcome)?;
    match outcome.profile() {
        None => Ok(vec!["profile = 0 (no nonzero profile)".into()]),
        Some(p) => {
            let stab = ctx.timed("stability", || linearized_stability(&grid, &het, &f, &p.values))?;
            ctx.out.csv("profile.csv", &["y", "v"], profile_rows(&grid, &p.values))?;
            Ok(vec![
                format!("sup V = {:.6}", p.sup()),
                format!("J(V) = {:.6e}", p.energy),
                format!("lambda1[V] = {:.6e}", stab.lambda),
                format!("residual = {:.3e}", p.residual),
            ])
        }
    }
}

pub fn energy_cmd(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let grid = cfg.transverse()?;
    let het = confined(cfg)?;
    let f = cfg.reaction()?;
    let outcome = ctx.timed("profile", || solve_profile(&grid, &het, &f, cfg.profile_options()))?;
    let Some(p) = outcome.profile() else {
        ctx.out.json("energy.json", &serde_json::json!({ "profile": "zero", "energy": 0.0 }))?;
        return Ok(vec!["profile = 0, J = 0".into()]);
    };
    let report = energy(&grid, &het, &f, &p.values);
    let grad = energy_gradient(&grid, &het, &f, &p.values);
    let mut summary = serde_json::json!({ "energy": report });
    let mut lines = vec![format!("J(V) = {:.6e}", report.value)];
    if f.class() == ReactionClass::Bistable {
        let seed = bump(&grid, 1.0, 0.5 * grid.radius());
        let min = ctx.timed("minimizer", || minimize_energy(&grid, &het, &f, &seed, cfg.profile_options()))?;
        lines.push(format!("min J from bump seed = {:.6e}", min.energy));
        summary["minimizer_energy"] = min.energy.into();
        summary["minimizer_matches_maximal"] = min.matches_maximal.into();
    }
    let rows: Vec<[f64; 3]> = grid
        .coords()
        .iter()
        .zip(&p.values)
        .zip(&grad)
        .map(|((&y, &v), &g)| [y, v, g])
        .collect();
    ctx.out.csv("energy.csv", &["y", "v", "gradient"], rows)?;
    ctx.out.json("energy.json", &summary)?;
    Ok(lines)
}

/// Profile, normalization and speed bracket for slab fronts in the confined medium.
struct FrontSetup {
    grid: TransverseGrid,
    het: Heterogeneity,
    reaction: Reaction,
    profile: Vec<f64>,
    normalization: Normalization,
    lambda: Option<f64>,
}

fn front_setup(cfg: &RunConfig) -> Result<FrontSetup> {
    let grid = cfg.transverse()?;
    let het = confined(cfg)?;
    let reaction = cfg.reaction()?;
    let outcome = solve_profile(&grid, &het, &reaction, cfg.profile_options())?;
    let profile = outcome
        .into_profile()
        .ok_or_else(|| Error::NoFront("the medium carries no nonzero profile".into()))?
        .values;
    let (normalization, lambda) = match reaction.class() {
        ReactionClass::Kpp => {
            let lambda = principal_eigen(&grid, &cfg.potential()?, cfg.potential.alpha, reaction.fprime0())?.lambda;
            (
                Normalization::Point {
                    level: kpp_theta_norm(&reaction, lambda)?,
                },
                Some(lambda),
            )
        }
        ReactionClass::Bistable => (
            Normalization::Max {
                level: reaction.theta().expect("bistable theta"),
            },
            None,
        ),
    };
    Ok(FrontSetup {
        grid,
        het,
        reaction,
        profile,
        normalization,
        lambda,
    })
}

fn bracket_for(s: &FrontSetup, a: f64, hx: f64) -> Result<(f64, f64)> {
    match s.lambda {
        Some(l) => Ok(kpp_bracket(l)),
        None => {
            let g = one_d_bistable_speed(a, hx, &s.reaction)?.gamma.abs();
            Ok((-g - 1.0, g + 1.0))
        }
    }
}

#[derive(Serialize)]
struct FrontSummary<'a> {
    c: f64,
    bracket: (f64, f64),
    a: f64,
    #[serde(flatten)]
    solution: &'a FrontSolution,
}

pub fn front(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let s = ctx.timed("profile", || front_setup(cfg))?;
    let a = cfg.grid.a;
    let slab = SlabGrid::with_spacing(a, cfg.grid.hx, s.grid.clone())?;
    let bracket = bracket_for(&s, a, cfg.grid.hx)?;
    let search = ctx.timed("speed", || {
        let problem = SlabProblem::new(&slab, &s.het, &s.reaction, &s.profile)?;
        find_speed(&problem, s.normalization, bracket, None)
    })?;
    ctx.out.csv("front.csv", &["x", "y", "u"], slab_rows(&slab, &search.state.u, 0.0))?;
    let history: Vec<[f64; 2]> = search.history.iter().map(|&(c, g)| [c, g]).collect();
    ctx.out.csv("speed_history.csv", &["c", "defect"], history)?;
    ctx.out.json(
        "front.json",
        &FrontSummary {
            c: search.c,
            bracket: search.bracket,
            a,
            solution: &search.state,
        },
    )?;
    Ok(vec![
        format!("c_a = {:.7} (a = {a})", search.c),
        format!("bracket = [{:.7}, {:.7}]", search.bracket.0, search.bracket.1),
        format!("monotone in x1: {}", search.state.monotone_x1),
    ])
}

pub fn speed_curve(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let s = ctx.timed("profile", || front_setup(cfg))?;
    let hx = cfg.grid.hx;
    let curve = ctx.timed("continuation", || {
        continue_speed(
            &cfg.sweep.a_list,
            |a| SlabGrid::with_spacing(a, hx, s.grid.clone()),
            &s.het,
            &s.reaction,
            &s.profile,
            s.normalization,
            |a| bracket_for(&s, a, hx),
        )
    })?;
    let rows: Vec<[f64; 2]> = curve.points.iter().map(|&(a, c)| [a, c]).collect();
    ctx.out.csv("speed_curve.csv", &["a", "c"], rows)?;
    ctx.out.json("speed_curve.json", &curve)?;
    let mut lines: Vec<String> = curve.points.iter().map(|(a, c)| format!("a = {a}: c = {c:.7}")).collect();
    lines.push(format!("c_inf = {:.7} (+/- {:.1e})", curve.c_inf, curve.uncertainty));
    if let Some(l) = s.lambda {
        lines.push(format!("2 sqrt(-lambda) = {:.7}", 2.0 * (-l).max(0.0).sqrt()));
    }
    Ok(lines)
}

/// Runs the parabolic problem, streaming snapshots to a writer thread.
fn run_parabolic(
    ctx: &mut Context<'_>,
    moving_window: bool,
) -> Result<(crate::parabolic::Trajectory, SlabGrid, f64)> {
    let cfg = ctx.cfg;
    let grid = cfg.transverse()?;
    let het = confined(cfg)?;
    let f = cfg.reaction()?;
    let profile = solve_profile(&grid, &het, &f, cfg.profile_options())?.into_profile();
    let level = match (cfg.time.level, f.class()) {
        (Some(l), _) => l,
        (None, ReactionClass::Bistable) => f.theta().expect("bistable theta"),
        (None, ReactionClass::Kpp) => {
            let lambda = principal_eigen(&grid, &cfg.potential()?, cfg.potential.alpha, f.fprime0())?.lambda;
            kpp_theta_norm(&f, lambda)?
        }
    };
    let slab = cfg.slab(cfg.grid.a)?;
    let u0 = compact_initial(&slab, level, profile.as_ref().map(|p| p.values.as_slice()));
    let opts = SimulationOptions {
        t_end: cfg.time.t_end,
        dt: cfg.time.dt,
        snapshot_every: cfg.time.snapshot_every,
        level,
        moving_window,
    };
    let root = ctx.out.root().to_path_buf();
    let t = Instant::now();
    let (traj, records) = std::thread::scope(|scope| -> Result<_> {
        let (tx, rx) = mpsc::sync_channel::<Snapshot>(4);
        let writer_grid = &slab;
        let writer = scope.spawn(move || -> Result<Vec<FileRecord>> {
            let mut records = Vec::new();
            for (k, snap) in rx.into_iter().enumerate() {
                let bytes = csv_bytes(&["x", "y", "u"], slab_rows(writer_grid, &snap.u, snap.shift))?;
                records.push(write_file(&root, &format!("snapshots/snapshot_{k:05}.csv"), &bytes)?);
            }
            Ok(records)
        });
        let traj = if opts.snapshot_every > 0 {
            let mut send = |s: &Snapshot| {
                let _ = tx.send(s.clone());
            };
            simulate(&slab, &het, &f, &u0, &opts, Some(&mut send))
        } else {
            simulate(&slab, &het, &f, &u0, &opts, None)
        };
        drop(tx);
        let records = writer.join().expect("snapshot writer panicked")?;
        Ok((traj?, records))
    })?;
    ctx.timings.push(("simulation".into(), t.elapsed().as_secs_f64()));
    for r in records {
        ctx.out.record(r);
    }
    let track: Vec<[f64; 2]> = traj.track.iter().map(|&(t, x)| [t, x]).collect();
    ctx.out.csv("track.csv", &["t", "x"], track)?;
    let sup: Vec<[f64; 2]> = traj.sup_history.iter().map(|&(t, s)| [t, s]).collect();
    ctx.out.csv("sup.csv", &["t", "sup"], sup)?;
    ctx.out.csv("final.csv", &["x", "y", "u"], slab_rows(&slab, &traj.last, traj.shift))?;
    Ok((traj, slab, level))
}

pub fn spread(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let moving = ctx.cfg.time.moving_window;
    let (traj, _, level) = run_parabolic(ctx, moving)?;
    let fit = measure_spreading_speed(&traj)?;
    ctx.out.json("spread.json", &serde_json::json!({ "fit": fit, "level": level, "shift": traj.shift }))?;
    Ok(vec![
        format!("spreading speed = {:.5}", fit.c),
        format!("fit window = [{}, {}], {} points", fit.window.0, fit.window.1, fit.points),
    ])
}

pub fn extinction(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let (traj, _, level) = run_parabolic(ctx, false)?;
    let t_end = cfg.time.t_end;
    let sup = traj.final_sup();
    let decayed = sup < cfg.time.decay_level;
    let x_end = traj.position_at(t_end);
    let x_half = traj.position_at(0.5 * t_end);
    ctx.out.json(
        "extinction.json",
        &serde_json::json!({
            "final_sup": sup, "decayed": decayed, "decay_level": cfg.time.decay_level,
            "level": level, "x_half": x_half, "x_end": x_end,
        }),
    )?;
    Ok(vec![
        format!("sup u(T) = {sup:.6e}"),
        format!("x_level(T/2) = {x_half:.4}, x_level(T) = {x_end:.4}"),
        if decayed { "extinction".into() } else { "persistence".into() },
    ])
}

fn csd_medium(cfg: &RunConfig) -> Result<Heterogeneity> {
    Ok(Heterogeneity::Csd(
        CsdMedium::new(cfg.csd.l1, cfg.csd.l2, cfg.csd.m)?.with_transition(cfg.csd.transition),
    ))
}

pub fn csd_profile_cmd(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let c = &cfg.csd;
    let f = cfg.reaction()?;
    let g = cfg.csd_grid();
    let grid = g.transverse(c.l2, c.m, g.hy)?;
    let het = csd_medium(cfg)?;
    let outcome = ctx.timed("profile", || {
        if c.l1 == c.l2 {
            csd_profile(c.l1, c.l2, c.m, &f, &grid, cfg.profile_options())
        } else {
            crate::profiles::solve_profile_maximal(&grid, &het, &f, cfg.profile_options())
        }
    })?;
    ctx.out.json("csd_profile.json", &outcome)?;
    match outcome.profile() {
        None => Ok(vec!["profile = 0 (no nonzero profile)".into()]),
        Some(p) => {
            let stab = linearized_stability(&grid, &het, &f, &p.values)?;
            ctx.out.csv("csd_profile.csv", &["y", "v"], profile_rows(&grid, &p.values))?;
            Ok(vec![
                format!("sup V = {:.6}", p.sup()),
                format!("J(V) = {:.6e}", p.energy),
                format!("tail rate = {:.4} (sqrt(m) = {:.4})", tail_rate(&grid, &p.values), c.m.sqrt()),
                format!("lambda1[V] = {:.6e}", stab.lambda),
            ])
        }
    }
}

pub fn csd_front_cmd(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let c = &cfg.csd;
    let f = cfg.reaction()?;
    let g = cfg.csd_grid();
    let front = ctx.timed("front", || csd_front(c.l1, c.l2, c.m, &f, &g, cfg.profile_options()))?;
    let Some(front) = front else {
        ctx.out.json("csd_front.json", &serde_json::json!({ "front": null }))?;
        return Ok(vec!["no profile, no front".into()]);
    };
    if let Some(slab) = &front.grid {
        ctx.out.csv("csd_front.csv", &["x", "y", "u"], slab_rows(slab, &front.u, 0.0))?;
    }
    ctx.out.json("csd_front.json", &front)?;
    Ok(vec![
        format!("c = {:.7}", front.c),
        format!("1D comparison speed = {:.7}", front.gamma_a),
    ])
}

pub fn csd_phase(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let f = cfg.reaction()?;
    let g = cfg.csd_grid();
    let m = cfg.csd.m;
    let reports = ctx.timed("phase diagram", || {
        csd_phase_diagram(&cfg.sweep.l1_list, &cfg.l2_rule(), m, &f, &g, cfg.profile_options())
    })?;
    let thresholds = ctx.timed("thresholds", || {
        csd_thresholds(m, &f, &g, cfg.threshold_mode(), cfg.tolerances.threshold_width, cfg.profile_options())
    })?;
    let code = |c: Classification| c as u8 as f64;
    let rows: Vec<[f64; 6]> = reports
        .iter()
        .map(|r| {
            [
                r.l1,
                r.l2,
                code(r.classification),
                r.profile_sup.unwrap_or(0.0),
                r.energy,
                r.speed.unwrap_or(f64::NAN),
            ]
        })
        .collect();
    ctx.out.csv("csd_phase.csv", &["l1", "l2", "class", "sup_v", "energy", "c"], rows)?;
    ctx.out.write("csd_phase.svg", phase_svg(&reports).as_bytes())?;
    ctx.out.json(
        "csd_phase.json",
        &serde_json::json!({ "reports": reports, "thresholds": thresholds,
            "classifications_monotone": classifications_monotone(&reports),
            "speeds_monotone": speeds_monotone(&reports, 1e-6),
            "class_codes": { "0": "no-profile", "1": "profile-no-front", "2": "propagating" } }),
    )?;
    let mut lines: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "L1 = {}, L2 = {}: {}{}",
                r.l1,
                r.l2,
                r.classification.label(),
                r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
            )
        })
        .collect();
    lines.push(format!("L_* = {:.4}, L^* = {:.4}", thresholds.l_lower, thresholds.l_upper));
    if !classifications_monotone(&reports) || !speeds_monotone(&reports, 1e-6) {
        lines.push("warning: classifications or speeds are not monotone in L1".into());
    }
    Ok(lines)
}

pub fn oracle_1d(ctx: &mut Context<'_>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let f = cfg.reaction()?;
    let a = cfg.grid.a;
    let o = ctx.timed("oracle", || one_d_bistable_speed(a, cfg.grid.hx, &f))?;
    let rows: Vec<[f64; 2]> = o.x.iter().zip(&o.z).map(|(&x, &z)| [x, z]).collect();
    ctx.out.csv("oracle_1d.csv", &["x", "z"], rows)?;
    let mut lines = vec![format!("gamma_a = {:.7} (a = {a})", o.gamma)];
    let mut summary = serde_json::json!({ "gamma": o.gamma, "a": a, "bracket": o.bracket, "residual": o.residual });
    if matches!(cfg.reaction.kind, ReactionKind::Bistable | ReactionKind::Cubic) {
        let exact = (2.0 * cfg.reaction.amplitude).sqrt() * (0.5 - cfg.reaction.theta);
        lines.push(format!("closed form = {exact:.7}"));
        summary["closed_form"] = exact.into();
    }
    ctx.out.json("oracle_1d.json", &summary)?;
    Ok(lines)
}
