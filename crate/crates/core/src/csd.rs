//! Cortical-spreading-depression medium: bistable reaction in the core `|y| ≤ L1`,
//! absorption `-m u` beyond `L2`. Profiles, energy, the critical radii `L_*`, `L^*`,
//! fronts and phase diagrams.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fronts::{find_speed, one_d_bistable_speed, Normalization, SlabProblem};
use crate::geometry::{Layout, SlabGrid, TransverseGrid};
use crate::nonlinearity::{CsdMedium, Heterogeneity, Reaction, ReactionClass};
use crate::profiles::{energy, solve_profile_maximal, EnergyReport, ProfileOptions, ProfileOutcome};

/// Discretization of CSD problems; the transverse radius follows the medium as
/// `R = L2 + margin / √m`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsdGrid {
    pub layout: Layout,
    /// Transverse spacing for profiles and thresholds.
    pub hy: f64,
    /// Transverse spacing for slab fronts.
    pub front_hy: f64,
    pub hx: f64,
    /// Slab half-length for fronts.
    pub a: f64,
    pub margin: f64,
}

impl Default for CsdGrid {
    fn default() -> Self {
        CsdGrid {
            layout: Layout::Radial(1),
            hy: 0.1,
            front_hy: 0.2,
            hx: 0.2,
            a: 20.0,
            margin: 10.0,
        }
    }
}

impl CsdGrid {
    pub fn transverse(&self, l2: f64, m: f64, hy: f64) -> Result<TransverseGrid> {
        let radius = l2 + self.margin / m.sqrt();
        let span = match self.layout {
            Layout::Line => 2.0 * radius,
            Layout::Radial(_) => radius,
        };
        let cells = (span / hy).ceil().max(2.0);
        let radius = match self.layout {
            Layout::Line => 0.5 * cells * hy,
            Layout::Radial(_) => cells * hy,
        };
        TransverseGrid::new(self.layout, radius, cells as usize + 1)
    }
}

fn medium(l1: f64, l2: f64, m: f64) -> Result<Heterogeneity> {
    Ok(Heterogeneity::Csd(CsdMedium::new(l1, l2, m)?))
}

fn check_bistable(reaction: &Reaction) -> Result<()> {
    if reaction.class() != ReactionClass::Bistable {
        return Err(Error::invalid("the CSD model needs a bistable reaction"));
    }
    Ok(())
}

/// Maximal solution of `-ΔV = h(y, V)` by the descent from 1.
pub fn csd_profile(
    l1: f64,
    l2: f64,
    m: f64,
    reaction: &Reaction,
    grid: &TransverseGrid,
    opts: ProfileOptions,
) -> Result<ProfileOutcome> {
    check_bistable(reaction)?;
    solve_profile_maximal(grid, &medium(l1, l2, m)?, reaction, opts)
}

/// `J(w) = ∫ ½|∇w|² - H(y, w)` for the CSD medium.
pub fn csd_energy(w: &[f64], l1: f64, l2: f64, m: f64, reaction: &Reaction, grid: &TransverseGrid) -> Result<EnergyReport> {
    if w.len() != grid.len() {
        return Err(Error::invalid("energy argument does not match the grid"));
    }
    Ok(energy(grid, &medium(l1, l2, m)?, reaction, w))
}

/// How `L2` follows the scanned radius `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `L1 = L2 = L`
    Tie,
    /// `L1 = L`, `L2 = ratio L`
    Ratio { ratio: f64 },
}

impl ThresholdMode {
    pub fn radii(&self, l: f64) -> (f64, f64) {
        match *self {
            ThresholdMode::Tie => (l, l),
            ThresholdMode::Ratio { ratio } => (l, ratio * l),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CsdThresholds {
    /// `L_*`: below it the medium carries no nonzero profile.
    pub l_lower: f64,
    /// `L^*`: from it on the maximal profile has negative energy.
    pub l_upper: f64,
    pub width: f64,
    pub mode: ThresholdMode,
}

/// Bisection estimates of `L_*` (on nonexistence) and `L^*` (on existence with `J < 0`).
pub fn csd_thresholds(
    m: f64,
    reaction: &Reaction,
    grid: &CsdGrid,
    mode: ThresholdMode,
    width: f64,
    opts: ProfileOptions,
) -> Result<CsdThresholds> {
    check_bistable(reaction)?;
    if let ThresholdMode::Ratio { ratio } = mode {
        if !(ratio >= 1.0) {
            return Err(Error::invalid(format!("L2/L1 ratio must be at least 1, got {ratio}")));
        }
    }
    let classify = |l: f64| -> Result<(bool, bool)> {
        let (l1, l2) = mode.radii(l);
        let tg = grid.transverse(l2, m, grid.hy)?;
        let out = csd_profile(l1, l2, m, reaction, &tg, opts)?;
        Ok(match out.profile() {
            None => (false, false),
            Some(p) => (true, p.energy < 0.0),
        })
    };
    let lo0 = 0.05;
    let first = classify(lo0)?;
    if first.0 {
        return Err(Error::BracketNotFound {
            what: "CSD lower radius (profile already present)",
            lo: lo0,
            hi: lo0,
            f_lo: 1.0,
            f_hi: f64::NAN,
        });
    }
    let mut hi = 1.0;
    loop {
        let c = classify(hi)?;
        if c.0 && c.1 {
            break;
        }
        if hi >= 128.0 {
            return Err(Error::BracketNotFound {
                what: "CSD upper radius (no negative-energy profile)",
                lo: lo0,
                hi,
                f_lo: 0.0,
                f_hi: if c.0 { 1.0 } else { 0.0 },
            });
        }
        hi *= 2.0;
    }
    let bisect = |pred: &dyn Fn((bool, bool)) -> bool, mut a: f64, mut b: f64| -> Result<f64> {
        while b - a > width {
            let mid = 0.5 * (a + b);
            if pred(classify(mid)?) {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(0.5 * (a + b))
    };
    let l_lower = bisect(&|c| c.0, lo0, hi)?;
    let l_upper = bisect(&|c| c.0 && c.1, lo0.max(l_lower - width), hi)?;
    if l_lower > l_upper + width {
        return Err(Error::Ordering(format!("L_* = {l_lower} exceeds L^* = {l_upper}")));
    }
    Ok(CsdThresholds {
        l_lower,
        l_upper,
        width,
        mode,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CsdFront {
    pub c: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    /// Speed of the one-dimensional comparison front for `max(f, -m s)` on the same slab.
    pub gamma_a: f64,
    pub monotone_x1: bool,
    pub max_x1_increase: f64,
    #[serde(skip)]
    pub grid: Option<SlabGrid>,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub profile: Vec<f64>,
}

/// Normalized slab front `max_y u(0, y) = θ`; `None` when the medium has no profile.
pub fn csd_front(l1: f64, l2: f64, m: f64, reaction: &Reaction, grid: &CsdGrid, opts: ProfileOptions) -> Result<Option<CsdFront>> {
    check_bistable(reaction)?;
    let theta = reaction
        .theta()
        .ok_or_else(|| Error::invalid("bistable reaction without theta"))?;
    let tg = grid.transverse(l2, m, grid.front_hy)?;
    let het = medium(l1, l2, m)?;
    let outcome = solve_profile_maximal(&tg, &het, reaction, opts)?;
    let Some(profile) = outcome.into_profile() else {
        return Ok(None);
    };
    let floored = reaction.floored(m)?;
    let same_signs = (1..200).all(|k| {
        let s = k as f64 / 200.0;
        floored.eval(s).signum() == reaction.eval(s).signum() || reaction.eval(s).abs() < 1e-14
    });
    if !same_signs {
        return Err(Error::Ordering("max(f, -m s) lost the bistable sign pattern".into()));
    }
    let one_d = one_d_bistable_speed(grid.a, grid.hx, &floored)?;
    let gamma_a = one_d.gamma;
    let slab = SlabGrid::with_spacing(grid.a, grid.hx, tg)?;
    let problem = SlabProblem::new(&slab, &het, reaction, &profile.values)?;
    let normalization = Normalization::Max { level: theta };
    let bracket = (-gamma_a.abs() - 1.0, gamma_a.abs() + 1.0);
    let search = find_speed(&problem, normalization, bracket, None)?;
    let sol = search.state;
    if sol.c > gamma_a + 1e-6 {
        return Err(Error::Ordering(format!(
            "CSD front speed {} exceeds the one-dimensional bound {gamma_a}",
            sol.c
        )));
    }
    Ok(Some(CsdFront {
        c: sol.c,
        bracket: search.bracket,
        residual: sol.residual,
        gamma_a,
        monotone_x1: sol.monotone_x1,
        max_x1_increase: sol.max_x1_increase,
        grid: Some(slab),
        u: sol.u,
        profile: profile.values,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    NoProfile,
    ProfileNoFront,
    Propagating,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::NoProfile => "no-profile",
            Classification::ProfileNoFront => "profile-no-front",
            Classification::Propagating => "propagating",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CsdReport {
    pub l1: f64,
    pub l2: f64,
    pub m: f64,
    pub classification: Classification,
    pub profile_sup: Option<f64>,
    /// `J` at the maximal profile, 0 without one.
    pub energy: f64,
    pub speed: Option<f64>,
    pub error: Option<String>,
}

/// `L2` values scanned for each `L1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum L2Rule {
    Tie,
    Ratios { ratios: Vec<f64> },
    Values { values: Vec<f64> },
}

impl L2Rule {
    fn l2_for(&self, l1: f64) -> Vec<f64> {
        match self {
            L2Rule::Tie => vec![l1],
            L2Rule::Ratios { ratios } => ratios.iter().map(|r| r * l1).collect(),
            L2Rule::Values { values } => values.iter().copied().filter(|&v| v >= l1).collect(),
        }
    }
}

/// One report per `(L1, L2)` point, in scan order; failures are recorded on the
/// point and the scan continues.
pub fn csd_phase_diagram(
    l1_list: &[f64],
    rule: &L2Rule,
    m: f64,
    reaction: &Reaction,
    grid: &CsdGrid,
    opts: ProfileOptions,
) -> Result<Vec<CsdReport>> {
    check_bistable(reaction)?;
    let points: Vec<(f64, f64)> = l1_list
        .iter()
        .flat_map(|&l1| rule.l2_for(l1).into_iter().map(move |l2| (l1, l2)))
        .collect();
    Ok(points
        .par_iter()
        .map(|&(l1, l2)| classify_point(l1, l2, m, reaction, grid, opts))
        .collect())
}

fn classify_point(l1: f64, l2: f64, m: f64, reaction: &Reaction, grid: &CsdGrid, opts: ProfileOptions) -> CsdReport {
    let mut report = CsdReport {
        l1,
        l2,
        m,
        classification: Classification::NoProfile,
        profile_sup: None,
        energy: 0.0,
        speed: None,
        error: None,
    };
    let profile = grid
        .transverse(l2, m, grid.hy)
        .and_then(|tg| csd_profile(l1, l2, m, reaction, &tg, opts));
    match profile {
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
        Ok(ProfileOutcome::Zero { .. }) => return report,
        Ok(ProfileOutcome::Found(p)) => {
            report.classification = Classification::ProfileNoFront;
            report.profile_sup = Some(p.sup());
            report.energy = p.energy;
        }
    }
    match csd_front(l1, l2, m, reaction, grid, opts) {
        Ok(Some(front)) => {
            report.speed = Some(front.c);
            if front.c > 0.0 {
                report.classification = Classification::Propagating;
            }
        }
        Ok(None) => {}
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}

/// No point is classified lower than an earlier point with the same `L2/L1` ordering
/// position along increasing `L1`.
pub fn classifications_monotone(reports: &[CsdReport]) -> bool {
    let mut by_l2: std::collections::BTreeMap<u64, Vec<&CsdReport>> = Default::default();
    for r in reports {
        let key = if (r.l2 - r.l1).abs() < 1e-12 { 0 } else { (r.l2 / r.l1 * 1e6).round() as u64 };
        by_l2.entry(key).or_default().push(r);
    }
    by_l2.values().all(|rs| {
        let mut rs = rs.clone();
        rs.sort_by(|a, b| a.l1.total_cmp(&b.l1));
        rs.windows(2).all(|w| w[1].classification >= w[0].classification)
    })
}

/// At each fixed `L2`, the front speed does not decrease with `L1` (within `tol`).
pub fn speeds_monotone(reports: &[CsdReport], tol: f64) -> bool {
    let mut rs: Vec<&CsdReport> = reports.iter().filter(|r| r.speed.is_some()).collect();
    rs.sort_by(|a, b| a.l2.total_cmp(&b.l2).then(a.l1.total_cmp(&b.l1)));
    rs.windows(2)
        .filter(|w| w[0].l2 == w[1].l2)
        .all(|w| w[1].speed.unwrap() >= w[0].speed.unwrap() - tol)
}

/// Heatmap of the classifications: columns by `L1`, rows by `L2`.
pub fn phase_svg(reports: &[CsdReport]) -> String {
    let mut l1s: Vec<f64> = reports.iter().map(|r| r.l1).collect();
    let mut l2s: Vec<f64> = reports.iter().map(|r| r.l2).collect();
    for v in [&mut l1s, &mut l2s] {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    }
    let cell = 28.0;
    let (left, top) = (70.0, 20.0);
    let width = left + cell * l1s.len() as f64 + 150.0;
    let height = top + cell * l2s.len() as f64 + 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let colour = |c: Classification| match c {
        Classification::NoProfile => "#d0d0d0",
        Classification::ProfileNoFront => "#f2b84b",
        Classification::Propagating => "#c0392b",
    };
    for r in reports {
        let i = l1s.iter().position(|v| (v - r.l1).abs() < 1e-12).unwrap_or(0);
        let j = l2s.iter().position(|v| (v - r.l2).abs() < 1e-12).unwrap_or(0);
        let x = left + i as f64 * cell;
        let y = top + (l2s.len() - 1 - j) as f64 * cell;
        let fill = if r.error.is_some() { "#ffffff" } else { colour(r.classification) };
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="gray"><title>L1={} L2={} {}</title></rect>"#,
            r.l1,
            r.l2,
            r.classification.label()
        );
    }
    for (i, v) in l1s.iter().enumerate() {
        let x = left + (i as f64 + 0.5) * cell;
        let y = top + cell * l2s.len() as f64 + 14.0;
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="middle">{v}</text>"#);
    }
    for (j, v) in l2s.iter().enumerate() {
        let y = top + (l2s.len() - 1 - j) as f64 * cell + 0.6 * cell;
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v}</text>"#, left - 6.0);
    }
    let base = top + cell * l2s.len() as f64 + 34.0;
    let _ = writeln!(s, r#"<text x="{}" y="{base}" text-anchor="middle">L1</text>"#, left + 0.5 * cell * l1s.len() as f64);
    let _ = writeln!(s, r#"<text x="12" y="{}">L2</text>"#, top + 0.5 * cell * l2s.len() as f64);
    for (k, c) in [Classification::NoProfile, Classification::ProfileNoFront, Classification::Propagating]
        .iter()
        .enumerate()
    {
        let x = left + cell * l1s.len() as f64 + 16.0;
        let y = top + k as f64 * 18.0;
        let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{}"/>"#, colour(*c));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 18.0, y + 10.0, c.label());
    }
    s.push_str("</svg>\n");
    s
}
