//! Run configuration: a TOML or JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::csd::{CsdGrid, L2Rule, ThresholdMode};
use crate::error::{Error, Result};
use crate::geometry::{Layout, Potential, SlabGrid, TransverseGrid};
use crate::nonlinearity::{Reaction, ReactionClass, Transition};
use crate::profiles::ProfileOptions;

pub const OUT_DIR_ENV: &str = "CONFRONT_OUT_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Seed for randomized fixtures; the solvers themselves are deterministic.
    pub seed: u64,
    pub reaction: ReactionSpec,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub csd: CsdSpec,
    pub time: TimeSpec,
    pub sweep: SweepSpec,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionKind {
    Kpp,
    Bistable,
    /// Cubic `s(s-θ)(1-s)` without the positive-mass requirement.
    Cubic,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReactionSpec {
    pub kind: ReactionKind,
    pub rate: f64,
    pub amplitude: f64,
    pub theta: f64,
    /// Two-column CSV `(s, f(s))` for tabulated reactions.
    pub csv: Option<PathBuf>,
    /// Class of a tabulated reaction: `kpp` or `bistable`.
    pub class: Option<String>,
    /// Overrides `f'(0)` in the linear spectral commands.
    pub fprime0: Option<f64>,
}

impl Default for ReactionSpec {
    fn default() -> Self {
        ReactionSpec {
            kind: ReactionKind::Kpp,
            rate: 1.0,
            amplitude: 1.0,
            theta: 0.25,
            csv: None,
            class: None,
            fprime0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Quadratic,
    Plateau,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSpec {
    pub g: PotentialKind,
    pub r0: f64,
    /// Two-column CSV `(|y|, g)` for custom potentials.
    pub csv: Option<PathBuf>,
    pub alpha: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            g: PotentialKind::Quadratic,
            r0: 1.0,
            csv: None,
            alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    Line,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub layout: LayoutKind,
    pub dim: u32,
    /// Truncation radius; defaults to `8 / α^(1/4)`.
    pub radius: Option<f64>,
    pub n: usize,
    pub a: f64,
    pub hx: f64,
    /// Richardson extrapolation in `hy` for the spectral commands.
    pub extrapolate: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            layout: LayoutKind::Radial,
            dim: 1,
            radius: None,
            n: 201,
            a: 20.0,
            hx: 0.2,
            extrapolate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CsdModeKind {
    Tie,
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsdSpec {
    pub l1: f64,
    pub l2: f64,
    pub m: f64,
    pub transition: Transition,
    pub hy: f64,
    pub front_hy: f64,
    pub margin: f64,
    pub mode: CsdModeKind,
    pub ratio: f64,
}

impl Default for CsdSpec {
    fn default() -> Self {
        let g = CsdGrid::default();
        CsdSpec {
            l1: 10.0,
            l2: 10.0,
            m: 1.0,
            transition: Transition::Linear,
            hy: g.hy,
            front_hy: g.front_hy,
            margin: g.margin,
            mode: CsdModeKind::Tie,
            ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_every: usize,
    pub moving_window: bool,
    /// Tracked level; defaults to the front normalization level.
    pub level: Option<f64>,
    /// Threshold on `sup u` below which an extinction run counts as decayed.
    pub decay_level: f64,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec {
            t_end: 100.0,
            dt: 0.025,
            snapshot_every: 0,
            moving_window: true,
            level: None,
            decay_level: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub a_list: Vec<f64>,
    pub l1_list: Vec<f64>,
    /// `L2/L1` ratios for the phase diagram; empty means `L1 = L2`.
    pub l2_ratios: Vec<f64>,
    /// Fixed `L2` values for the phase diagram, used when nonempty.
    pub l2_values: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            alphas: Vec::new(),
            a_list: vec![10.0, 20.0, 40.0],
            l1_list: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            l2_ratios: Vec::new(),
            l2_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub profile_residual: f64,
    pub alpha0_atol: f64,
    pub alpha_max: f64,
    pub threshold_width: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            profile_residual: 1e-10,
            alpha0_atol: 1e-4,
            alpha_max: 1e3,
            threshold_width: 1e-2,
        }
    }
}

impl RunConfig {
    /// Reads a config file; `.json` is parsed as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    /// Canonical serialization, hashed into the manifest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let r = &self.reaction;
        if !(r.theta > 0.0 && r.theta < 1.0) {
            return bad(format!("reaction.theta must lie in (0, 1), got {}", r.theta));
        }
        if !(r.rate > 0.0) || !(r.amplitude > 0.0) {
            return bad("reaction.rate and reaction.amplitude must be positive".into());
        }
        if r.kind == ReactionKind::Tabulated && r.csv.is_none() {
            return bad("tabulated reaction needs reaction.csv".into());
        }
        if let Some(f) = r.fprime0 {
            if !f.is_finite() {
                return bad("fprime0 must be finite".into());
            }
        }
        let p = &self.potential;
        if !(p.alpha > 0.0) {
            return bad(format!("potential.alpha must be positive, got {}", p.alpha));
        }
        if p.g == PotentialKind::Plateau && !(p.r0 > 0.0) {
            return bad("potential.r0 must be positive".into());
        }
        if p.g == PotentialKind::Custom && p.csv.is_none() {
            return bad("custom potential needs potential.csv".into());
        }
        let g = &self.grid;
        if g.n < 3 {
            return bad(format!("grid.n must be at least 3, got {}", g.n));
        }
        if g.layout == LayoutKind::Radial && g.dim == 0 {
            return bad("grid.dim must be at least 1".into());
        }
        if g.radius.is_some_and(|r| !(r > 0.0)) {
            return bad("grid.radius must be positive".into());
        }
        if !(g.a > 0.0 && g.hx > 0.0 && g.hx < g.a) {
            return bad("grid.a and grid.hx must be positive with hx < a".into());
        }
        let c = &self.csd;
        if !(c.m > 0.0 && c.l1 > 0.0 && c.l2 >= c.l1) {
            return bad("csd needs m > 0 and 0 < l1 <= l2".into());
        }
        if !(c.hy > 0.0 && c.front_hy > 0.0 && c.margin > 0.0) {
            return bad("csd.hy, csd.front_hy and csd.margin must be positive".into());
        }
        if c.mode == CsdModeKind::Ratio && !(c.ratio >= 1.0) {
            return bad("csd.ratio must be at least 1".into());
        }
        let t = &self.time;
        if !(t.t_end > 0.0 && t.dt > 0.0 && t.dt <= t.t_end) {
            return bad("time.t_end and time.dt must be positive with dt <= t_end".into());
        }
        let s = &self.sweep;
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|&x| x > 0.0);
        if !increasing(&s.alphas) || !increasing(&s.a_list) || !increasing(&s.l1_list) {
            return bad("sweep lists must be positive and strictly increasing".into());
        }
        if s.l2_ratios.iter().any(|&r| !(r >= 1.0)) {
            return bad("sweep.l2_ratios must be at least 1".into());
        }
        let tol = &self.tolerances;
        if !(tol.profile_residual > 0.0 && tol.alpha0_atol > 0.0 && tol.alpha_max > 0.0 && tol.threshold_width > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    pub fn reaction(&self) -> Result<Reaction> {
        let r = &self.reaction;
        match r.kind {
            ReactionKind::Kpp => Reaction::kpp(r.rate),
            ReactionKind::Bistable => Reaction::bistable(r.amplitude, r.theta),
            ReactionKind::Cubic => Reaction::cubic(r.amplitude, r.theta),
            ReactionKind::Tabulated => {
                let class = match r.class.as_deref() {
                    Some("kpp") | None => ReactionClass::Kpp,
                    Some("bistable") => ReactionClass::Bistable,
                    Some(other) => return Err(Error::Config(format!("unknown reaction class {other:?}"))),
                };
                let (s, f) = read_table(r.csv.as_deref().expect("validated"))?;
                Reaction::tabulated(class, s, f)
            }
        }
    }

    /// `f'(0)` for the linear problems: the flag when given, else from the reaction.
    pub fn fprime0(&self) -> Result<f64> {
        match self.reaction.fprime0 {
            Some(f) => Ok(f),
            None => Ok(self.reaction()?.fprime0()),
        }
    }

    pub fn potential(&self) -> Result<Potential> {
        let p = &self.potential;
        match p.g {
            PotentialKind::Quadratic => Ok(Potential::Quadratic),
            PotentialKind::Plateau => Potential::plateau(p.r0),
            PotentialKind::Custom => {
                let (r, g) = read_table(p.csv.as_deref().expect("validated"))?;
                Potential::custom(r, g)
            }
        }
    }

    pub fn layout(&self) -> Layout {
        match self.grid.layout {
            LayoutKind::Line => Layout::Line,
            LayoutKind::Radial => Layout::Radial(self.grid.dim),
        }
    }

    pub fn transverse(&self) -> Result<TransverseGrid> {
        let radius = self
            .grid
            .radius
            .unwrap_or_else(|| Potential::default_radius(self.potential.alpha));
        TransverseGrid::new(self.layout(), radius, self.grid.n)
    }

    pub fn slab(&self, a: f64) -> Result<SlabGrid> {
        SlabGrid::with_spacing(a, self.grid.hx, self.transverse()?)
    }

    pub fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            residual_tol: self.tolerances.profile_residual,
            ..ProfileOptions::default()
        }
    }

    pub fn csd_grid(&self) -> CsdGrid {
        CsdGrid {
            layout: self.layout(),
            hy: self.csd.hy,
            front_hy: self.csd.front_hy,
            hx: self.grid.hx,
            a: self.grid.a,
            margin: self.csd.margin,
        }
    }

    pub fn threshold_mode(&self) -> ThresholdMode {
        match self.csd.mode {
            CsdModeKind::Tie => ThresholdMode::Tie,
            CsdModeKind::Ratio => ThresholdMode::Ratio { ratio: self.csd.ratio },
        }
    }

    pub fn l2_rule(&self) -> L2Rule {
        let s = &self.sweep;
        if !s.l2_values.is_empty() {
            L2Rule::Values {
                values: s.l2_values.clone(),
            }
        } else if !s.l2_ratios.is_empty() {
            L2Rule::Ratios {
                ratios: s.l2_ratios.clone(),
            }
        } else {
            L2Rule::Tie
        }
    }
}

/// Two-column numeric CSV with a header row.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Config(format!("{}: row {} needs two columns", path.display(), k + 1)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{}: row {}: bad number {s:?}", path.display(), k + 1)))
        };
        a.push(parse(&rec[0])?);
        b.push(parse(&rec[1])?);
    }
    Ok((a, b))
}
