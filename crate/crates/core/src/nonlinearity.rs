//! Reaction terms `f(s)` and transverse heterogeneities `h(y, s)`.
//!
//! Every reaction is extended by zero outside `[0, 1]`, so iterates that
//! overshoot the invariant interval see no source term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Potential;
use crate::interp::{adaptive_simpson, MonotoneCubic};

/// Number of sample points used when checking reaction invariants.
pub const SAMPLE_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReactionClass {
    Kpp,
    Bistable,
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    /// `a s (1 - s)`
    Logistic { rate: f64 },
    /// `b s (s - theta) (1 - s)`
    Cubic { amplitude: f64, theta: f64 },
    Tabulated(MonotoneCubic),
    /// `max(f(s), -m s)`
    Floored { inner: Box<Reaction>, m: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    class: ReactionClass,
    law: Law,
    fprime0: f64,
    lipschitz: f64,
    theta: Option<f64>,
}

impl Reaction {
    /// Logistic KPP term `a s (1 - s)`.
    pub fn kpp(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid(format!("KPP rate must be positive, got {rate}")));
        }
        Ok(Reaction {
            class: ReactionClass::Kpp,
            law: Law::Logistic { rate },
            fprime0: rate,
            lipschitz: rate,
            theta: None,
        })
    }

    /// Cubic bistable term `b s (s - theta) (1 - s)`.
    pub fn bistable(amplitude: f64, theta: f64) -> Result<Self> {
        let r = Self::cubic(amplitude, theta)?;
        r.check_invariants()?;
        Ok(r)
    }

    /// Cubic term without the positive-mass requirement, for one-dimensional
    /// comparisons with `theta >= 1/2`.
    pub fn cubic(amplitude: f64, theta: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!(
                "bistable amplitude must be positive, got {amplitude}"
            )));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!("theta must lie in (0, 1), got {theta}")));
        }
        let peak = (1.0 + theta) / 3.0;
        let interior = amplitude * (-3.0 * peak * peak + 2.0 * (1.0 + theta) * peak - theta);
        let lipschitz = (amplitude * theta)
            .max(amplitude * (1.0 - theta))
            .max(interior.abs());
        let r = Reaction {
            class: ReactionClass::Bistable,
            law: Law::Cubic { amplitude, theta },
            fprime0: -amplitude * theta,
            lipschitz,
            theta: Some(theta),
        };
        r.check_shape()?;
        Ok(r)
    }

    /// Custom reaction from samples `(s_k, f(s_k))` covering `[0, 1]`.
    pub fn tabulated(class: ReactionClass, s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let table = MonotoneCubic::new(s, f)?;
        if table.x_min() > 0.0 || table.x_max() < 1.0 {
            return Err(Error::invalid("tabulated reaction must cover [0, 1]"));
        }
        let mut r = Reaction {
            class,
            fprime0: table.derivative(0.0),
            law: Law::Tabulated(table),
            lipschitz: 0.0,
            theta: None,
        };
        r.lipschitz = r.sampled_lipschitz();
        if class == ReactionClass::Bistable {
            r.theta = Some(r.locate_theta()?);
        }
        r.check_invariants()?;
        Ok(r)
    }

    /// `max(f(s), -m s)`, the one-dimensional comparison reaction of the CSD model.
    pub fn floored(&self, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::invalid(format!("floor slope must be positive, got {m}")));
        }
        let mut r = Reaction {
            class: self.class,
            fprime0: self.fprime0.max(-m),
            lipschitz: self.lipschitz.max(m),
            theta: None,
            law: Law::Floored {
                inner: Box::new(self.clone()),
                m,
            },
        };
        if self.class == ReactionClass::Bistable {
            r.theta = Some(r.locate_theta()?);
        }
        Ok(r)
    }

    pub fn class(&self) -> ReactionClass {
        self.class
    }

    pub fn fprime0(&self) -> f64 {
        self.fprime0
    }

    /// Lipschitz constant of `f` on `[0, 1]`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Unstable zero of a bistable reaction.
    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// `(f'(0), f'(1))`; reported for bistable terms, never used to reject them.
    pub fn endpoint_derivatives(&self) -> (f64, f64) {
        (self.df_raw(0.0), self.df_raw(1.0))
    }

    pub fn eval(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        self.f_raw(s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        self.df_raw(s)
    }

    /// `f` continued linearly outside `[0, 1]`, a C¹ extension for Newton solvers
    /// whose iterates may leave the invariant interval.
    pub fn eval_smooth(&self, s: f64) -> f64 {
        if s < 0.0 {
            self.df_raw(0.0) * s
        } else if s > 1.0 {
            self.df_raw(1.0) * (s - 1.0)
        } else {
            self.f_raw(s)
        }
    }

    pub fn derivative_smooth(&self, s: f64) -> f64 {
        self.df_raw(s.clamp(0.0, 1.0))
    }

    /// `F(s) = ∫_0^s f`, using the zero extension outside `[0, 1]`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match &self.law {
            Law::Logistic { rate } => rate * (0.5 * s * s - s * s * s / 3.0),
            Law::Cubic { amplitude, theta } => {
                // s (s - θ)(1 - s) = -s^3 + (1 + θ) s^2 - θ s
                let s2 = s * s;
                amplitude * (-0.25 * s2 * s2 + (1.0 + theta) * s2 * s / 3.0 - 0.5 * theta * s2)
            }
            Law::Tabulated(t) => t.integral_from_start(s) - t.integral_from_start(0.0),
            Law::Floored { .. } => adaptive_simpson(&|t| self.f_raw(t), 0.0, s, 1e-13),
        }
    }

    fn f_raw(&self, s: f64) -> f64 {
        match &self.law {
            Law::Logistic { rate } => rate * s * (1.0 - s),
            Law::Cubic { amplitude, theta } => amplitude * s * (s - theta) * (1.0 - s),
            Law::Tabulated(t) => t.eval(s),
            Law::Floored { inner, m } => inner.f_raw(s).max(-m * s),
        }
    }

    fn df_raw(&self, s: f64) -> f64 {
        match &self.law {
            Law::Logistic { rate } => rate * (1.0 - 2.0 * s),
            Law::Cubic { amplitude, theta } => {
                amplitude * (-3.0 * s * s + 2.0 * (1.0 + theta) * s - theta)
            }
            Law::Tabulated(t) => t.derivative(s),
            Law::Floored { inner, m } => {
                if inner.f_raw(s) >= -m * s {
                    inner.df_raw(s)
                } else {
                    -m
                }
            }
        }
    }

    fn samples(&self) -> impl Iterator<Item = f64> {
        (0..=SAMPLE_POINTS).map(|k| k as f64 / SAMPLE_POINTS as f64)
    }

    fn sampled_lipschitz(&self) -> f64 {
        let vals: Vec<f64> = self.samples().map(|s| self.f_raw(s)).collect();
        let h = 1.0 / SAMPLE_POINTS as f64;
        let secant = vals
            .windows(2)
            .map(|w| ((w[1] - w[0]) / h).abs())
            .fold(0.0, f64::max);
        let tangent = self.samples().map(|s| self.df_raw(s).abs()).fold(0.0, f64::max);
        secant.max(tangent)
    }

    fn locate_theta(&self) -> Result<f64> {
        // last sign change from negative to positive on the sample grid, refined by bisection
        let pts: Vec<f64> = self.samples().collect();
        let mut bracket = None;
        for w in pts.windows(2).skip(1) {
            if self.f_raw(w[0]) <= 0.0 && self.f_raw(w[1]) > 0.0 {
                bracket = Some((w[0], w[1]));
            }
        }
        let (mut lo, mut hi) =
            bracket.ok_or_else(|| Error::invalid("bistable reaction has no interior zero"))?;
        if self.f_raw(lo) == 0.0 {
            return Ok(lo);
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.f_raw(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Checks the sign pattern and structural hypotheses of the reaction's class
    /// on the sample grid.
    pub fn check_invariants(&self) -> Result<()> {
        self.check_shape()?;
        if self.class == ReactionClass::Bistable {
            let mass = self.antiderivative(1.0);
            if mass <= 0.0 {
                return Err(Error::invalid(format!(
                    "bistable reaction needs positive mass, ∫f = {mass:e}"
                )));
            }
        }
        Ok(())
    }

    fn check_shape(&self) -> Result<()> {
        let tol = 1e-12;
        let f0 = self.f_raw(0.0);
        let f1 = self.f_raw(1.0);
        if f0.abs() > tol || f1.abs() > tol {
            return Err(Error::invalid(format!(
                "reaction must vanish at 0 and 1 (f(0) = {f0:e}, f(1) = {f1:e})"
            )));
        }
        let interior = self.samples().skip(1).take(SAMPLE_POINTS - 1);
        match self.class {
            ReactionClass::Kpp => {
                let mut prev_ratio = f64::INFINITY;
                for s in interior {
                    let v = self.f_raw(s);
                    if v <= 0.0 {
                        return Err(Error::invalid(format!("KPP reaction not positive at s = {s}")));
                    }
                    if v > self.fprime0 * s * (1.0 + 1e-9) + tol {
                        return Err(Error::invalid(format!("KPP bound f(s) <= f'(0) s fails at s = {s}")));
                    }
                    let ratio = v / s;
                    if ratio > prev_ratio * (1.0 + 1e-9) + tol {
                        return Err(Error::invalid(format!("f(s)/s increases at s = {s}")));
                    }
                    prev_ratio = ratio;
                }
            }
            ReactionClass::Bistable => {
                let theta = self
                    .theta
                    .ok_or_else(|| Error::invalid("bistable reaction without theta"))?;
                for s in interior {
                    let v = self.f_raw(s);
                    let below = s < theta - 1e-9 && v > tol;
                    let above = s > theta + 1e-9 && v < -tol;
                    if below || above {
                        return Err(Error::invalid(format!(
                            "bistable sign pattern fails at s = {s} (f = {v:e}, theta = {theta})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest `eta <= 1` with `f(s) >= (f'(0) - delta) s` on `[0, eta]`, together with
    /// the default normalization level `eta / 4`.
    pub fn kpp_linearization_range(&self, delta: f64) -> Result<(f64, f64)> {
        if self.class != ReactionClass::Kpp {
            return Err(Error::invalid("linearization range is defined for KPP reactions only"));
        }
        if !(delta > 0.0 && delta < self.fprime0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, f'(0) = {}), got {delta}",
                self.fprime0
            )));
        }
        let slope = self.fprime0 - delta;
        let holds = |s: f64| self.f_raw(s) >= slope * s;
        let first_bad = self.samples().skip(1).find(|&s| !holds(s));
        let eta = match first_bad {
            None => 1.0,
            Some(bad) => {
                let mut lo = bad - 1.0 / SAMPLE_POINTS as f64;
                let mut hi = bad;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if holds(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        };
        Ok((eta, eta / 4.0))
    }
}

/// Shape of the gray/white matter transition between `L1` and `L2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    #[default]
    Linear,
    Cosine,
}

/// CSD medium: reaction `f` in the core `|y| <= L1`, absorption `-m u` beyond `L2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsdMedium {
    pub l1: f64,
    pub l2: f64,
    pub m: f64,
    pub transition: Transition,
}

impl CsdMedium {
    pub fn new(l1: f64, l2: f64, m: f64) -> Result<Self> {
        if !(l1 > 0.0 && l2 >= l1 && l2.is_finite()) {
            return Err(Error::invalid(format!("need 0 < L1 <= L2, got L1 = {l1}, L2 = {l2}")));
        }
        if !(m > 0.0) {
            return Err(Error::invalid(format!("absorption m must be positive, got {m}")));
        }
        Ok(CsdMedium {
            l1,
            l2,
            m,
            transition: Transition::Linear,
        })
    }

    pub fn with_transition(mut self, transition: Transition) -> Self {
        self.transition = transition;
        self
    }

    /// Weight `w(|y|)`: 1 in the core, 0 beyond `L2`.
    pub fn weight(&self, r: f64) -> f64 {
        if r <= self.l1 {
            1.0
        } else if r >= self.l2 {
            0.0
        } else {
            let t = (r - self.l1) / (self.l2 - self.l1);
            match self.transition {
                Transition::Linear => 1.0 - t,
                Transition::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * t).cos()),
            }
        }
    }
}

/// Transverse coefficient of the equation, written as
/// `h(y, s) = rho(y) f(s) - q(y) s` with `0 <= rho <= 1` and `q >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Heterogeneity {
    /// `h(y, s) = f(s) - alpha g(y) s`
    Confined { alpha: f64, potential: Potential },
    /// `h(y, s) = w f(s) - (1 - w) m s`
    Csd(CsdMedium),
}

impl Heterogeneity {
    pub fn confined(alpha: f64, potential: Potential) -> Self {
        Heterogeneity::Confined { alpha, potential }
    }

    pub fn reaction_weight(&self, r: f64) -> f64 {
        match self {
            Heterogeneity::Confined { .. } => 1.0,
            Heterogeneity::Csd(medium) => medium.weight(r),
        }
    }

    pub fn absorption(&self, r: f64) -> f64 {
        match self {
            Heterogeneity::Confined { alpha, potential } => alpha * potential.eval(r),
            Heterogeneity::Csd(medium) => (1.0 - medium.weight(r)) * medium.m,
        }
    }

    pub fn h(&self, reaction: &Reaction, r: f64, s: f64) -> f64 {
        self.reaction_weight(r) * reaction.eval(s) - self.absorption(r) * s
    }

    pub fn dh_ds(&self, reaction: &Reaction, r: f64, s: f64) -> f64 {
        self.reaction_weight(r) * reaction.derivative(s) - self.absorption(r)
    }

    /// `H(y, z) = ∫_0^z h(y, s) ds`
    pub fn antiderivative(&self, reaction: &Reaction, r: f64, z: f64) -> f64 {
        self.reaction_weight(r) * reaction.antiderivative(z) - 0.5 * self.absorption(r) * z * z
    }
}
