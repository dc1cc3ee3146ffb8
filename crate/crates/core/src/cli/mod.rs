//! Command-line front end: `confront <command> [flags]`.
//!
//! Flags override the config file given by `--config`. Exit codes: 0 on success,
//! 1 on a solver failure, 2 on a usage or configuration error (nothing is written).

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::nonlinearity::Transition;
use config::{CsdModeKind, LayoutKind, PotentialKind, ReactionKind, RunConfig, OUT_DIR_ENV};
use output::{sha256_hex, Manifest, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "confront", version, about = "Reaction-diffusion fronts in transversely confined media")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Principal eigenpair of -Δ + αg - f'(0).
    Eig(Flags),
    /// Extinction threshold α0 (the sign change of λ_α).
    Alpha0(Flags),
    /// Stationary transverse profile.
    Profile(Flags),
    /// Energy of the profile and, for bistable reactions, of the minimizer.
    Energy(Flags),
    /// Normalized slab front and its speed at one half-length.
    Front(Flags),
    /// Slab speeds along the a-list and the extrapolated limit.
    SpeedCurve(Flags),
    /// Parabolic run from compact data with the spreading-speed fit.
    Spread(Flags),
    /// Parabolic run on a fixed window, reporting decay or persistence.
    Extinction(Flags),
    /// Maximal profile of the CSD medium.
    CsdProfile(Flags),
    /// Slab front of the CSD medium.
    CsdFront(Flags),
    /// Classification over an (L1, L2) scan plus the critical radii.
    CsdPhase(Flags),
    /// One-dimensional bistable slab front.
    #[command(name = "oracle-1d")]
    Oracle1d(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Eig(f) => ("eig", f),
            Command::Alpha0(f) => ("alpha0", f),
            Command::Profile(f) => ("profile", f),
            Command::Energy(f) => ("energy", f),
            Command::Front(f) => ("front", f),
            Command::SpeedCurve(f) => ("speed-curve", f),
            Command::Spread(f) => ("spread", f),
            Command::Extinction(f) => ("extinction", f),
            Command::CsdProfile(f) => ("csd-profile", f),
            Command::CsdFront(f) => ("csd-front", f),
            Command::CsdPhase(f) => ("csd-phase", f),
            Command::Oracle1d(f) => ("oracle-1d", f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML or JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: config, then $CONFRONT_OUT_DIR, then ./confront-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    pub reaction: Option<ReactionKind>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Two-column CSV (s, f) for a tabulated reaction.
    #[arg(long)]
    pub f_csv: Option<PathBuf>,
    /// Class of a tabulated reaction (kpp or bistable).
    #[arg(long)]
    pub f_class: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub fprime0: Option<f64>,

    #[arg(long, value_enum)]
    pub g: Option<PotentialKind>,
    #[arg(long)]
    pub r0: Option<f64>,
    /// Two-column CSV (|y|, g) for a custom potential.
    #[arg(long)]
    pub g_csv: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long, value_enum)]
    pub layout: Option<LayoutKind>,
    #[arg(long)]
    pub dim: Option<u32>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub hx: Option<f64>,
    #[arg(long)]
    pub extrapolate: bool,

    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// linear or cosine
    #[arg(long)]
    pub transition: Option<String>,
    #[arg(long)]
    pub hy: Option<f64>,
    #[arg(long)]
    pub front_hy: Option<f64>,
    #[arg(long, value_enum)]
    pub csd_mode: Option<CsdModeKind>,
    #[arg(long)]
    pub ratio: Option<f64>,

    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub fixed_window: bool,
    #[arg(long)]
    pub level: Option<f64>,

    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub a_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub l1_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub l2_ratios: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub l2_values: Option<Vec<f64>>,
}

macro_rules! set {
    ($target:expr, $flag:expr) => {
        if let Some(v) = $flag.clone() {
            $target = v;
        }
    };
}

impl Flags {
    /// Config file (if any) with these flags applied on top.
    pub fn resolve(&self, command: &str) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(cmd) = &c.command {
            if cmd != command {
                return Err(Error::Config(format!("config is for command {cmd:?}, not {command:?}")));
            }
        }
        c.command = Some(command.to_string());
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        set!(c.seed, self.seed);
        let r = &mut c.reaction;
        set!(r.kind, self.reaction);
        set!(r.rate, self.rate);
        set!(r.amplitude, self.amplitude);
        set!(r.theta, self.theta);
        if self.f_csv.is_some() {
            r.csv = self.f_csv.clone();
        }
        if self.f_class.is_some() {
            r.class = self.f_class.clone();
        }
        if self.fprime0.is_some() {
            r.fprime0 = self.fprime0;
        }
        let p = &mut c.potential;
        set!(p.g, self.g);
        set!(p.r0, self.r0);
        set!(p.alpha, self.alpha);
        if self.g_csv.is_some() {
            p.csv = self.g_csv.clone();
        }
        let g = &mut c.grid;
        set!(g.layout, self.layout);
        set!(g.dim, self.dim);
        if self.radius.is_some() {
            g.radius = self.radius;
        }
        set!(g.n, self.n);
        set!(g.a, self.a);
        set!(g.hx, self.hx);
        g.extrapolate |= self.extrapolate;
        let s = &mut c.csd;
        set!(s.l1, self.l1);
        set!(s.l2, self.l2);
        if self.l1.is_some() && self.l2.is_none() && s.l2 < s.l1 {
            s.l2 = s.l1;
        }
        set!(s.m, self.m);
        set!(s.hy, self.hy);
        set!(s.front_hy, self.front_hy);
        set!(s.mode, self.csd_mode);
        set!(s.ratio, self.ratio);
        if let Some(t) = &self.transition {
            s.transition = match t.as_str() {
                "linear" => Transition::Linear,
                "cosine" => Transition::Cosine,
                other => return Err(Error::Config(format!("unknown transition {other:?}"))),
            };
        }
        let t = &mut c.time;
        set!(t.t_end, self.t_end);
        set!(t.dt, self.dt);
        set!(t.snapshot_every, self.snapshot_every);
        if self.fixed_window {
            t.moving_window = false;
        }
        if self.level.is_some() {
            t.level = self.level;
        }
        let w = &mut c.sweep;
        set!(w.alphas, self.alphas);
        set!(w.a_list, self.a_list);
        set!(w.l1_list, self.l1_list);
        set!(w.l2_ratios, self.l2_ratios);
        set!(w.l2_values, self.l2_values);
        c.validate()?;
        Ok(c)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        _ => 1,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, flags) = cli.command.parts();
    let cfg = match flags.resolve(name) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let out_dir = cfg
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("confront-out"));
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: worker pool: {e}");
            return 1;
        }
    };
    let mut out = OutputDir::new(&out_dir);
    let mut timings = Vec::new();
    let start = Instant::now();
    let result = pool.install(|| {
        let mut ctx = commands::Context {
            cfg: &cfg,
            out: &mut out,
            timings: &mut timings,
        };
        match &cli.command {
            Command::Eig(_) => commands::eig(&mut ctx),
            Command::Alpha0(_) => commands::alpha0(&mut ctx),
            Command::Profile(_) => commands::profile(&mut ctx),
            Command::Energy(_) => commands::energy_cmd(&mut ctx),
            Command::Front(_) => commands::front(&mut ctx),
            Command::SpeedCurve(_) => commands::speed_curve(&mut ctx),
            Command::Spread(_) => commands::spread(&mut ctx),
            Command::Extinction(_) => commands::extinction(&mut ctx),
            Command::CsdProfile(_) => commands::csd_profile_cmd(&mut ctx),
            Command::CsdFront(_) => commands::csd_front_cmd(&mut ctx),
            Command::CsdPhase(_) => commands::csd_phase(&mut ctx),
            Command::Oracle1d(_) => commands::oracle_1d(&mut ctx),
        }
    });
    timings.push(("total".into(), start.elapsed().as_secs_f64()));
    let code = match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    let canonical = cfg.canonical_json();
    let manifest = Manifest {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(canonical.as_bytes()),
        config: &cfg,
        tolerances: &cfg.tolerances,
        timings,
        files: out.files(),
    };
    if code == 0 || !out.files().is_empty() {
        let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
        if let Err(e) = output::write_file(&out_dir, "manifest.json", text.as_bytes()) {
            eprintln!("error: writing manifest: {e}");
            return 1;
        }
    }
    code
}
