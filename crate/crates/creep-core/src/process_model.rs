//! Process and curve specifications.
//!
//! A subordinator is described by a nonnegative drift, a jump law, and an
//! optional exponential kill rate. Infinite-activity jump laws carry a
//! truncation floor `eps`; jumps below the floor are dropped (never folded
//! into the drift, so the drift coefficient of every spec is exactly the
//! drift the detector sees). Stable laws are parametrised so that the
//! Laplace exponent of the untruncated law is `scale · λ^alpha`; the
//! one-half-stable presets `√(2λ)` and `√λ` are both provided because the
//! two normalisations differ by `√2` and silently mixing them is the easiest
//! mistake to make with this family.
//!
//! Curves are monotone by construction; non-monotone tabulated data is
//! rejected. Specs serialize to a key/value configuration document and
//! round-trip losslessly.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

use crate::special::{gamma, exp_integral_e1};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("invalid curve: {0}")]
    Curve(String),
    #[error("invalid spec: {0}")]
    Invalid(String),
}

/// Distribution of a single compound-Poisson jump, supported on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum JumpSizeDist {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl JumpSizeDist {
    pub fn validate(&self, out: &mut Vec<String>) {
        match *self {
            JumpSizeDist::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    out.push(format!("jump size rate must be positive, got {rate}"));
                }
            }
            JumpSizeDist::Uniform { lo, hi } => {
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    out.push(format!("jump size range must satisfy 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            JumpSizeDist::Constant { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    out.push(format!("jump size must be positive, got {value}"));
                }
            }
        }
    }

    /// `E[e^{-λJ}]` of a single jump, in closed form.
    pub fn laplace_transform(&self, lambda: f64) -> f64 {
        match *self {
            JumpSizeDist::Exponential { rate } => rate / (rate + lambda),
            JumpSizeDist::Uniform { lo, hi } => {
                if lambda == 0.0 {
                    1.0
                } else {
                    ((-lambda * lo).exp() - (-lambda * hi).exp()) / (lambda * (hi - lo))
                }
            }
            JumpSizeDist::Constant { value } => (-lambda * value).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpSizeDist::Exponential { rate } => 1.0 / rate,
            JumpSizeDist::Uniform { lo, hi } => 0.5 * (lo + hi),
            JumpSizeDist::Constant { value } => value,
        }
    }
}

/// Two-sided strictly stable jump law with `alpha` in `(0,1)`.
///
/// The positive side has Lévy density `scale_pos·alpha/Γ(1-alpha)·x^{-1-alpha}`
/// (so a one-sided law with `scale_pos = s` has Laplace exponent `s·λ^alpha`),
/// and symmetrically for the negative side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedStableLaw {
    pub alpha: f64,
    pub scale_pos: f64,
    pub scale_neg: f64,
    pub eps: f64,
}

impl TwoSidedStableLaw {
    pub fn validate(&self, out: &mut Vec<String>) {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            out.push(format!("stable index must lie in (0,1), got {}", self.alpha));
        }
        if !(self.scale_pos >= 0.0 && self.scale_neg >= 0.0 && self.scale_pos + self.scale_neg > 0.0)
        {
            out.push(format!(
                "stable scales must be nonnegative with positive sum, got ({}, {})",
                self.scale_pos, self.scale_neg
            ));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            out.push(format!(
                "infinite-activity laws need a positive truncation floor, got {}",
                self.eps
            ));
        }
    }

    /// Total rate of jumps with `|x| >= eps`.
    pub fn truncated_rate(&self) -> f64 {
        (self.scale_pos + self.scale_neg) / gamma(1.0 - self.alpha) * self.eps.powf(-self.alpha)
    }

    /// Probability that a truncated jump is positive.
    pub fn positive_fraction(&self) -> f64 {
        self.scale_pos / (self.scale_pos + self.scale_neg)
    }

    /// `∫_{|x|<eps} |x| ν(dx)` per unit time: the pathwise mass removed by
    /// the truncation, used as the reported bias rate.
    pub fn small_jump_mass_rate(&self) -> f64 {
        let c = (self.scale_pos + self.scale_neg) * self.alpha / gamma(1.0 - self.alpha);
        c * self.eps.powf(1.0 - self.alpha) / (1.0 - self.alpha)
    }
}

/// Jump component of a subordinator coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
    /// No jumps at all (pure drift coordinate).
    None,
    /// Finite-activity jumps at `rate` with sizes drawn from `sizes`.
    CompoundPoisson { rate: f64, sizes: JumpSizeDist },
    /// One-sided stable law; Laplace exponent of the untruncated law is
    /// `scale · λ^alpha`.
    Stable { alpha: f64, scale: f64, eps: f64 },
    /// Gamma subordinator jumps, Lévy density `shape · x^{-1} e^{-rate·x}`.
    Gamma { shape: f64, rate: f64, eps: f64 },
    /// Two-sided stable jumps (not a subordinator coordinate; used as the
    /// driving noise of the mean-reverting process).
    TwoSidedStable(TwoSidedStableLaw),
}

impl JumpLaw {
    pub fn validate(&self, out: &mut Vec<String>) {
        match self {
            JumpLaw::None => {}
            JumpLaw::CompoundPoisson { rate, sizes } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    out.push(format!("compound-Poisson rate must be positive, got {rate}"));
                }
                sizes.validate(out);
            }
            JumpLaw::Stable { alpha, scale, eps } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    out.push(format!("stable index must lie in (0,1), got {alpha}"));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    out.push(format!("stable scale must be positive, got {scale}"));
                }
                if !(*eps > 0.0 && eps.is_finite()) {
                    out.push(format!(
                        "infinite-activity laws need a positive truncation floor, got {eps}"
                    ));
                }
            }
            JumpLaw::Gamma { shape, rate, eps } => {
                if !(*shape > 0.0 && shape.is_finite()) {
                    out.push(format!("gamma shape must be positive, got {shape}"));
                }
                if !(*rate > 0.0 && rate.is_finite()) {
                    out.push(format!("gamma rate must be positive, got {rate}"));
                }
                if !(*eps > 0.0 && eps.is_finite()) {
                    out.push(format!(
                        "gamma jumps have infinite activity; a positive truncation floor is required, got {eps}"
                    ));
                }
            }
            JumpLaw::TwoSidedStable(law) => law.validate(out),
        }
    }

    /// Total jump rate after truncation, in closed form for every kind.
    pub fn truncated_rate(&self) -> f64 {
        match self {
            JumpLaw::None => 0.0,
            JumpLaw::CompoundPoisson { rate, .. } => *rate,
            JumpLaw::Stable { alpha, scale, eps } => {
                scale / gamma(1.0 - alpha) * eps.powf(-alpha)
            }
            JumpLaw::Gamma { shape, rate, eps } => shape * exp_integral_e1(rate * eps),
            JumpLaw::TwoSidedStable(law) => law.truncated_rate(),
        }
    }

    /// `∫_0^eps x ν(dx)` per unit time (zero for finite-activity laws).
    pub fn small_jump_mass_rate(&self) -> f64 {
        match self {
            JumpLaw::None | JumpLaw::CompoundPoisson { .. } => 0.0,
            JumpLaw::Stable { alpha, scale, eps } => {
                let c = scale * alpha / gamma(1.0 - alpha);
                c * eps.powf(1.0 - alpha) / (1.0 - alpha)
            }
            JumpLaw::Gamma { shape, rate, eps } => shape * (1.0 - (-rate * eps).exp()) / rate,
            JumpLaw::TwoSidedStable(law) => law.small_jump_mass_rate(),
        }
    }

    /// Laplace exponent `φ(λ)` of the *untruncated* law (one-sided kinds only).
    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        match self {
            JumpLaw::None => 0.0,
            JumpLaw::CompoundPoisson { rate, sizes } => {
                rate * (1.0 - sizes.laplace_transform(lambda))
            }
            JumpLaw::Stable { alpha, scale, .. } => scale * lambda.powf(*alpha),
            JumpLaw::Gamma { shape, rate, .. } => shape * (1.0 + lambda / rate).ln(),
            JumpLaw::TwoSidedStable(_) => {
                panic!("two-sided laws have no Laplace exponent")
            }
        }
    }

    pub fn has_jumps(&self) -> bool {
        !matches!(self, JumpLaw::None)
    }
}

/// One coordinate of a (bivariate) subordinator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    pub drift: f64,
    /// Exponential kill rate; zero means the process is conservative.
    #[serde(default)]
    pub kill_rate: f64,
    pub jumps: JumpLaw,
}

impl SubordinatorSpec {
    pub fn pure_drift(drift: f64) -> Self {
        SubordinatorSpec {
            drift,
            jumps: JumpLaw::None,
            kill_rate: 0.0,
        }
    }

    /// One-half-stable subordinator with Laplace exponent `√(2λ)`;
    /// its marginal density at time `t` is `t/√(2π x³) · e^{-t²/(2x)}`.
    pub fn stable_half_sqrt_two_lambda(eps: f64) -> Self {
        SubordinatorSpec {
            drift: 0.0,
            jumps: JumpLaw::Stable {
                alpha: 0.5,
                scale: std::f64::consts::SQRT_2,
                eps,
            },
            kill_rate: 0.0,
        }
    }

    /// One-half-stable subordinator with Laplace exponent `√λ`: the inverse
    /// local time at the maximum of a standard Brownian motion.
    pub fn stable_half_sqrt_lambda(eps: f64) -> Self {
        SubordinatorSpec {
            drift: 0.0,
            jumps: JumpLaw::Stable {
                alpha: 0.5,
                scale: 1.0,
                eps,
            },
            kill_rate: 0.0,
        }
    }

    pub fn gamma(shape: f64, rate: f64, eps: f64, drift: f64) -> Self {
        SubordinatorSpec {
            drift,
            jumps: JumpLaw::Gamma { shape, rate, eps },
            kill_rate: 0.0,
        }
    }

    pub fn validate(&self, out: &mut Vec<String>) {
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            out.push(format!("drift must be nonnegative, got {}", self.drift));
        }
        if !(self.kill_rate >= 0.0 && self.kill_rate.is_finite()) {
            out.push(format!("kill rate must be nonnegative, got {}", self.kill_rate));
        }
        if matches!(self.jumps, JumpLaw::TwoSidedStable(_)) {
            out.push("two-sided jumps are not allowed in a subordinator coordinate".into());
        }
        self.jumps.validate(out);
    }
}

/// Joint jump sampler for couplings not expressible by the named variants.
pub trait JointJumpLaw: Send + Sync {
    fn drifts(&self) -> (f64, f64);
    /// Total arrival rate of joint jumps.
    fn rate(&self) -> f64;
    /// Draw one joint jump `(dy, dz)`.
    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64);
    fn label(&self) -> &str;
}

/// How the two coordinates of a bivariate subordinator are tied together.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "coupling", rename_all = "snake_case")]
pub enum Coupling {
    /// Independent coordinates.
    Independent {
        y: SubordinatorSpec,
        z: SubordinatorSpec,
    },
    /// `Y_t = t` exactly; only `Z` is random.
    TimeAndProcess { z: SubordinatorSpec },
    /// Ladder pair of a standard Brownian motion: `Y` is the `√λ` one-half
    /// stable subordinator (no drift), `Z` is pure drift `1/√2`.
    BmLadder { eps: f64 },
    /// Ladder pair of a Brownian motion with drift `mu >= 0`: the ladder time
    /// gains the exponential tempering `e^{-mu²u/2}` on its jump density and
    /// the ladder height stays pure drift `1/√2`.
    BmLadderDrift { mu: f64, eps: f64 },
    /// Caller-supplied joint jump sampler; not expressible in configuration
    /// documents.
    #[serde(skip)]
    Custom(Arc<dyn JointJumpLaw>),
}

impl std::fmt::Debug for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coupling::Independent { y, z } => f
                .debug_struct("Independent")
                .field("y", y)
                .field("z", z)
                .finish(),
            Coupling::TimeAndProcess { z } => {
                f.debug_struct("TimeAndProcess").field("z", z).finish()
            }
            Coupling::BmLadder { eps } => f.debug_struct("BmLadder").field("eps", eps).finish(),
            Coupling::BmLadderDrift { mu, eps } => f
                .debug_struct("BmLadderDrift")
                .field("mu", mu)
                .field("eps", eps)
                .finish(),
            Coupling::Custom(law) => f.debug_tuple("Custom").field(&law.label()).finish(),
        }
    }
}

impl PartialEq for Coupling {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Coupling::Independent { y: a, z: b }, Coupling::Independent { y: c, z: d }) => {
                a == c && b == d
            }
            (Coupling::TimeAndProcess { z: a }, Coupling::TimeAndProcess { z: b }) => a == b,
            (Coupling::BmLadder { eps: a }, Coupling::BmLadder { eps: b }) => a == b,
            (
                Coupling::BmLadderDrift { mu: a, eps: ea },
                Coupling::BmLadderDrift { mu: b, eps: eb },
            ) => a == b && ea == eb,
            (Coupling::Custom(a), Coupling::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

pub const BM_LADDER_HEIGHT_DRIFT: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateSubordinatorSpec {
    #[serde(flatten)]
    pub coupling: Coupling,
}

impl BivariateSubordinatorSpec {
    pub fn independent(y: SubordinatorSpec, z: SubordinatorSpec) -> Self {
        BivariateSubordinatorSpec {
            coupling: Coupling::Independent { y, z },
        }
    }

    pub fn time_and_process(z: SubordinatorSpec) -> Self {
        BivariateSubordinatorSpec {
            coupling: Coupling::TimeAndProcess { z },
        }
    }

    pub fn bm_ladder(eps: f64) -> Self {
        BivariateSubordinatorSpec {
            coupling: Coupling::BmLadder { eps },
        }
    }

    pub fn bm_ladder_drift(mu: f64, eps: f64) -> Self {
        BivariateSubordinatorSpec {
            coupling: Coupling::BmLadderDrift { mu, eps },
        }
    }

    /// Drift coefficients `(d_Y, d_Z)` seen by the creep detector.
    pub fn drifts(&self) -> (f64, f64) {
        match &self.coupling {
            Coupling::Independent { y, z } => (y.drift, z.drift),
            Coupling::TimeAndProcess { z } => (1.0, z.drift),
            Coupling::BmLadder { .. } | Coupling::BmLadderDrift { .. } => {
                (0.0, BM_LADDER_HEIGHT_DRIFT)
            }
            Coupling::Custom(law) => law.drifts(),
        }
    }

    /// Exponential kill rate of the pair (sum over coordinates).
    pub fn kill_rate(&self) -> f64 {
        match &self.coupling {
            Coupling::Independent { y, z } => y.kill_rate + z.kill_rate,
            Coupling::TimeAndProcess { z } => z.kill_rate,
            _ => 0.0,
        }
    }

    /// `∫_0^eps x ν(dx)` summed over both coordinates, per unit time.
    pub fn small_jump_mass_rate(&self) -> f64 {
        match &self.coupling {
            Coupling::Independent { y, z } => {
                y.jumps.small_jump_mass_rate() + z.jumps.small_jump_mass_rate()
            }
            Coupling::TimeAndProcess { z } => z.jumps.small_jump_mass_rate(),
            Coupling::BmLadder { eps } => {
                JumpLaw::Stable {
                    alpha: 0.5,
                    scale: 1.0,
                    eps: *eps,
                }
                .small_jump_mass_rate()
            }
            // Tempering only shrinks the removed mass; the untempered value
            // is a valid (slightly conservative) bound.
            Coupling::BmLadderDrift { eps, .. } => {
                JumpLaw::Stable {
                    alpha: 0.5,
                    scale: 1.0,
                    eps: *eps,
                }
                .small_jump_mass_rate()
            }
            Coupling::Custom(_) => 0.0,
        }
    }

    /// Whether the renewal measure of the pair has a two-dimensional density,
    /// which the closed-form creep expressions require. Pure-drift pairs
    /// concentrate on a ray and are flagged inapplicable.
    pub fn formula_applicable(&self) -> bool {
        match &self.coupling {
            Coupling::Independent { y, z } => y.jumps.has_jumps() || z.jumps.has_jumps(),
            Coupling::TimeAndProcess { z } => z.jumps.has_jumps(),
            Coupling::BmLadder { .. } | Coupling::BmLadderDrift { .. } => true,
            Coupling::Custom(law) => law.rate() > 0.0,
        }
    }
}

/// Flat list of everything wrong with a bivariate spec; empty means valid.
pub fn validate_spec(spec: &BivariateSubordinatorSpec) -> Vec<String> {
    let mut out = Vec::new();
    match &spec.coupling {
        Coupling::Independent { y, z } => {
            y.validate(&mut out);
            z.validate(&mut out);
        }
        Coupling::TimeAndProcess { z } => z.validate(&mut out),
        Coupling::BmLadder { eps } => {
            if !(*eps > 0.0 && eps.is_finite()) {
                out.push(format!("ladder-time truncation floor must be positive, got {eps}"));
            }
        }
        Coupling::BmLadderDrift { mu, eps } => {
            if !(*mu >= 0.0 && mu.is_finite()) {
                out.push(format!("ladder drift parameter must be nonnegative, got {mu}"));
            }
            if !(*eps > 0.0 && eps.is_finite()) {
                out.push(format!("ladder-time truncation floor must be positive, got {eps}"));
            }
        }
        Coupling::Custom(law) => {
            let (dy, dz) = law.drifts();
            if !(dy >= 0.0 && dz >= 0.0) {
                out.push(format!("custom coupling drifts must be nonnegative, got ({dy}, {dz})"));
            }
            if !(law.rate() >= 0.0 && law.rate().is_finite()) {
                out.push(format!("custom coupling rate must be finite, got {}", law.rate()));
            }
        }
    }
    out
}

/// Mean-reverting process `Z_t = z + X_t - gamma ∫_0^t Z_s ds` driven by a
/// two-sided stable noise with index in `(0,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuSpec {
    pub gamma: f64,
    pub start: f64,
    pub noise: TwoSidedStableLaw,
}

impl OuSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            out.push(format!("mean-reversion rate must be positive, got {}", self.gamma));
        }
        if !self.start.is_finite() {
            out.push(format!("start state must be finite, got {}", self.start));
        }
        self.noise.validate(&mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
    Constant,
}

/// Built-in monotone curves. `eval` is total: kinds whose formula leaves the
/// positive quadrant keep evaluating continuously (the circle clamps to 0 at
/// its right endpoint, affine and mean-reversion curves continue negative),
/// so detectors can bracket roots at the domain edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case")]
pub enum CurveKind {
    /// `f(t) = level`.
    Constant { level: f64 },
    /// `f(t) = coef · t^{-exponent}` with `exponent > 0`.
    Power { coef: f64, exponent: f64 },
    /// `f(t) = intercept + slope · t`.
    Affine { intercept: f64, slope: f64 },
    /// Quarter circle `f(u) = √(radius² - u²)` on `(0, radius)`.
    Circle { radius: f64 },
    /// `f(s) = level · (alpha·gamma·s + 1)^{1/alpha} - start`: the curve whose
    /// first crossing by the driving noise is the level crossing of the
    /// mean-reverting process.
    MeanReversion {
        level: f64,
        start: f64,
        alpha: f64,
        gamma: f64,
    },
    /// Piecewise-linear interpolation of strictly monotone knot values;
    /// constant extension outside the knot range.
    Tabulated { ts: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(flatten)]
    pub kind: CurveKind,
}

impl CurveSpec {
    pub fn new(kind: CurveKind) -> Result<Self, SpecError> {
        match &kind {
            CurveKind::Constant { level } => {
                if !(*level > 0.0 && level.is_finite()) {
                    return Err(SpecError::Curve(format!(
                        "constant level must be positive, got {level}"
                    )));
                }
            }
            CurveKind::Power { coef, exponent } => {
                if !(*coef > 0.0 && coef.is_finite()) {
                    return Err(SpecError::Curve(format!("power coefficient must be positive, got {coef}")));
                }
                if !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(SpecError::Curve(format!(
                        "power curve exponent must be positive, got {exponent}"
                    )));
                }
            }
            CurveKind::Affine { intercept, slope } => {
                if !(intercept.is_finite() && slope.is_finite()) {
                    return Err(SpecError::Curve("affine parameters must be finite".into()));
                }
                if *slope < 0.0 && !(*intercept > 0.0) {
                    return Err(SpecError::Curve(format!(
                        "decreasing affine curve needs a positive intercept, got {intercept}"
                    )));
                }
                if *slope >= 0.0 && !(*intercept >= 0.0) {
                    return Err(SpecError::Curve(format!(
                        "nondecreasing affine curve needs a nonnegative intercept, got {intercept}"
                    )));
                }
            }
            CurveKind::Circle { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(SpecError::Curve(format!("circle radius must be positive, got {radius}")));
                }
            }
            CurveKind::MeanReversion {
                level,
                start,
                alpha,
                gamma,
            } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(SpecError::Curve(format!("index must lie in (0,1), got {alpha}")));
                }
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(SpecError::Curve(format!("reversion rate must be positive, got {gamma}")));
                }
                if !(level.is_finite() && start.is_finite()) {
                    return Err(SpecError::Curve("level and start must be finite".into()));
                }
                if *level == 0.0 {
                    return Err(SpecError::Curve("level 0 has no crossing curve".into()));
                }
            }
            CurveKind::Tabulated { ts, values } => {
                if ts.len() != values.len() || ts.len() < 2 {
                    return Err(SpecError::Curve(
                        "tabulated curve needs at least two knots with matching lengths".into(),
                    ));
                }
                if !ts.windows(2).all(|w| w[0] < w[1]) {
                    return Err(SpecError::Curve("tabulated knots must be strictly increasing".into()));
                }
                let incr = values.windows(2).all(|w| w[0] <= w[1]);
                let decr = values.windows(2).all(|w| w[0] >= w[1]);
                if !(incr || decr) {
                    return Err(SpecError::Curve("tabulated values must be monotone".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(SpecError::Curve("tabulated values must be finite".into()));
                }
            }
        }
        Ok(CurveSpec { kind })
    }

    pub fn direction(&self) -> Direction {
        match &self.kind {
            CurveKind::Constant { .. } => Direction::Constant,
            CurveKind::Power { .. } | CurveKind::Circle { .. } => Direction::NonIncreasing,
            CurveKind::Affine { slope, .. } => {
                if *slope < 0.0 {
                    Direction::NonIncreasing
                } else if *slope > 0.0 {
                    Direction::NonDecreasing
                } else {
                    Direction::Constant
                }
            }
            CurveKind::MeanReversion { level, .. } => {
                if *level < 0.0 {
                    Direction::NonIncreasing
                } else {
                    Direction::NonDecreasing
                }
            }
            CurveKind::Tabulated { values, .. } => {
                let first = values.first().copied().unwrap_or(0.0);
                let last = values.last().copied().unwrap_or(0.0);
                if first == last {
                    Direction::Constant
                } else if first < last {
                    Direction::NonDecreasing
                } else {
                    Direction::NonIncreasing
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            CurveKind::Constant { level } => *level,
            CurveKind::Power { coef, exponent } => coef * t.powf(-exponent),
            CurveKind::Affine { intercept, slope } => intercept + slope * t,
            CurveKind::Circle { radius } => {
                if t >= *radius {
                    0.0
                } else {
                    (radius * radius - t * t).sqrt()
                }
            }
            CurveKind::MeanReversion {
                level,
                start,
                alpha,
                gamma,
            } => level * (alpha * gamma * t + 1.0).powf(1.0 / alpha) - start,
            CurveKind::Tabulated { ts, values } => {
                if t <= ts[0] {
                    values[0]
                } else if t >= *ts.last().unwrap() {
                    *values.last().unwrap()
                } else {
                    let i = ts.partition_point(|&u| u <= t) - 1;
                    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
                    values[i] + w * (values[i + 1] - values[i])
                }
            }
        }
    }

    /// First derivative where the curve is smooth; `None` for tabulated
    /// curves (their Stieltjes weight is the exact knot sum instead).
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match &self.kind {
            CurveKind::Constant { .. } => Some(0.0),
            CurveKind::Power { coef, exponent } => {
                Some(-coef * exponent * t.powf(-exponent - 1.0))
            }
            CurveKind::Affine { slope, .. } => Some(*slope),
            CurveKind::Circle { radius } => {
                if t >= *radius {
                    None
                } else {
                    Some(-t / (radius * radius - t * t).sqrt())
                }
            }
            CurveKind::MeanReversion {
                level,
                alpha,
                gamma,
                ..
            } => Some(level * gamma * (alpha * gamma * t + 1.0).powf(1.0 / alpha - 1.0)),
            CurveKind::Tabulated { .. } => None,
        }
    }

    /// Inverse of a strictly monotone curve (value -> argument).
    pub fn inverse(&self, y: f64) -> Option<f64> {
        match &self.kind {
            CurveKind::Constant { .. } => None,
            CurveKind::Power { coef, exponent } => Some((coef / y).powf(1.0 / exponent)),
            CurveKind::Affine { intercept, slope } => {
                if *slope == 0.0 {
                    None
                } else {
                    Some((y - intercept) / slope)
                }
            }
            CurveKind::Circle { radius } => {
                if y < 0.0 || y > *radius {
                    None
                } else {
                    Some((radius * radius - y * y).sqrt())
                }
            }
            CurveKind::MeanReversion {
                level,
                start,
                alpha,
                gamma,
            } => {
                let base = (y + start) / level;
                if base <= 0.0 {
                    None
                } else {
                    Some((base.powf(*alpha) - 1.0) / (alpha * gamma))
                }
            }
            CurveKind::Tabulated { ts, values } => {
                let incr = values.last()? >= values.first()?;
                let (lo, hi) = if incr {
                    (*values.first()?, *values.last()?)
                } else {
                    (*values.last()?, *values.first()?)
                };
                if y < lo || y > hi {
                    return None;
                }
                for i in 0..values.len() - 1 {
                    let (a, b) = (values[i], values[i + 1]);
                    let inside = if incr { a <= y && y <= b } else { b <= y && y <= a };
                    if inside {
                        if a == b {
                            return Some(ts[i]);
                        }
                        let w = (y - a) / (b - a);
                        return Some(ts[i] + w * (ts[i + 1] - ts[i]));
                    }
                }
                None
            }
        }
    }

    /// Upper end of the interval where the curve is positive (`∞` if it
    /// never reaches zero).
    pub fn positive_until(&self) -> f64 {
        match &self.kind {
            CurveKind::Constant { .. } | CurveKind::Power { .. } => f64::INFINITY,
            CurveKind::Affine { intercept, slope } => {
                if *slope < 0.0 {
                    -intercept / slope
                } else {
                    f64::INFINITY
                }
            }
            CurveKind::Circle { radius } => *radius,
            CurveKind::MeanReversion {
                level,
                start,
                alpha,
                gamma,
            } => {
                if *level < 0.0 {
                    let ratio = start / level;
                    if ratio > 1.0 {
                        ((ratio).powf(*alpha) - 1.0) / (alpha * gamma)
                    } else {
                        0.0
                    }
                } else {
                    f64::INFINITY
                }
            }
            CurveKind::Tabulated { ts, values } => {
                if values.iter().all(|&v| v > 0.0) {
                    f64::INFINITY
                } else {
                    // First knot interval where the interpolant reaches 0.
                    for i in 0..values.len() - 1 {
                        if values[i] > 0.0 && values[i + 1] <= 0.0 {
                            let w = values[i] / (values[i] - values[i + 1]);
                            return ts[i] + w * (ts[i + 1] - ts[i]);
                        }
                    }
                    if values[0] <= 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            }
        }
    }

    /// Limit of the curve at `0+`; may be `∞` for power curves.
    pub fn limit_at_zero(&self) -> f64 {
        match &self.kind {
            CurveKind::Power { .. } => f64::INFINITY,
            _ => self.eval(0.0),
        }
    }

    /// Knot times for tabulated curves; detectors and the Stieltjes term
    /// split integration at these points.
    pub fn knots(&self) -> Option<&[f64]> {
        match &self.kind {
            CurveKind::Tabulated { ts, .. } => Some(ts),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn truncated_rate_stable_half() {
        // √(2λ) normalisation: tail is √(2/(π eps)).
        let law = JumpLaw::Stable {
            alpha: 0.5,
            scale: std::f64::consts::SQRT_2,
            eps: 0.01,
        };
        assert_relative_eq!(law.truncated_rate(), 7.978_845_608_028_654, epsilon = 1e-12);
    }

    #[test]
    fn truncated_rate_gamma() {
        let law = JumpLaw::Gamma {
            shape: 1.0,
            rate: 1.0,
            eps: 1.0,
        };
        assert_relative_eq!(law.truncated_rate(), 0.219_383_934_395_52, epsilon = 1e-12);
    }

    #[test]
    fn truncated_rate_against_midpoint_sum() {
        // Brute-force ∫_eps^∞ ν(dx) on a log grid for both infinite-activity kinds.
        let stable = JumpLaw::Stable {
            alpha: 0.7,
            scale: 1.3,
            eps: 1e-3,
        };
        let c = 1.3 * 0.7 / gamma(0.3);
        let mut acc = 0.0;
        let n = 400_000;
        let h = (1e9_f64 / 1e-3).ln() / n as f64;
        for i in 0..n {
            let x = 1e-3 * ((i as f64 + 0.5) * h).exp();
            acc += c * x.powf(-0.7) * h;
        }
        assert_relative_eq!(stable.truncated_rate(), acc, max_relative = 1e-5);

        let gam = JumpLaw::Gamma {
            shape: 2.0,
            rate: 3.0,
            eps: 0.25,
        };
        let mut acc = 0.0;
        let h = (40.0_f64 / 0.25).ln() / n as f64;
        for i in 0..n {
            let x = 0.25 * ((i as f64 + 0.5) * h).exp();
            acc += 2.0 * (-3.0 * x).exp() * h;
        }
        assert_relative_eq!(gam.truncated_rate(), acc, max_relative = 1e-5);
    }

    #[test]
    fn small_jump_mass_rates() {
        let law = JumpLaw::Stable {
            alpha: 0.5,
            scale: std::f64::consts::SQRT_2,
            eps: 1e-4,
        };
        // (1/√(2π)) · 2√eps
        assert_relative_eq!(
            law.small_jump_mass_rate(),
            2.0 * 1e-2 / (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-14
        );
        let gam = JumpLaw::Gamma {
            shape: 1.0,
            rate: 1.0,
            eps: 1e-4,
        };
        assert_relative_eq!(gam.small_jump_mass_rate(), 1.0 - (-1e-4_f64).exp(), epsilon = 1e-16);
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut spec = BivariateSubordinatorSpec::time_and_process(SubordinatorSpec {
            drift: -1.0,
            jumps: JumpLaw::Gamma {
                shape: 1.0,
                rate: 1.0,
                eps: 0.0,
            },
            kill_rate: 0.0,
        });
        let problems = validate_spec(&spec);
        assert_eq!(problems.len(), 2, "{problems:?}");
        spec = BivariateSubordinatorSpec::time_and_process(SubordinatorSpec::gamma(
            1.0, 1.0, 1e-3, 0.5,
        ));
        assert!(validate_spec(&spec).is_empty());
    }

    #[test]
    fn alpha_must_be_interior() {
        for alpha in [0.0, 1.0, 1.5, -0.2] {
            let law = JumpLaw::Stable {
                alpha,
                scale: 1.0,
                eps: 1e-3,
            };
            let mut out = Vec::new();
            law.validate(&mut out);
            assert!(!out.is_empty(), "alpha {alpha} should be rejected");
        }
    }

    #[test]
    fn pure_drift_pair_is_formula_inapplicable() {
        let spec = BivariateSubordinatorSpec::independent(
            SubordinatorSpec::pure_drift(1.0),
            SubordinatorSpec::pure_drift(1.0),
        );
        assert!(validate_spec(&spec).is_empty());
        assert!(!spec.formula_applicable());
        let with_jumps = BivariateSubordinatorSpec::time_and_process(SubordinatorSpec::gamma(
            1.0, 1.0, 1e-3, 0.0,
        ));
        assert!(with_jumps.formula_applicable());
    }

    #[test]
    fn config_round_trip_is_lossless() {
        let spec = BivariateSubordinatorSpec::independent(
            SubordinatorSpec::gamma(1.0, 1.0, 1e-4, 0.3),
            SubordinatorSpec {
                drift: 0.1 + 0.2, // deliberately non-representable sum
                jumps: JumpLaw::CompoundPoisson {
                    rate: 2.5,
                    sizes: JumpSizeDist::Uniform { lo: 0.1, hi: 0.9 },
                },
                kill_rate: 0.25,
            },
        );
        let text = toml::to_string(&spec).unwrap();
        let back: BivariateSubordinatorSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);

        let ou = OuSpec {
            gamma: 1.0,
            start: -1.0,
            noise: TwoSidedStableLaw {
                alpha: 0.75,
                scale_pos: 1.0,
                scale_neg: 1.0,
                eps: 1e-4,
            },
        };
        let text = toml::to_string(&ou).unwrap();
        let back: OuSpec = toml::from_str(&text).unwrap();
        assert_eq!(ou, back);
    }

    #[test]
    fn curve_round_trip_and_eval() {
        let curve = CurveSpec::new(CurveKind::Power {
            coef: 1.0,
            exponent: 2.0,
        })
        .unwrap();
        assert_eq!(curve.direction(), Direction::NonIncreasing);
        assert_relative_eq!(curve.eval(2.0), 0.25);
        assert_relative_eq!(curve.inverse(0.25).unwrap(), 2.0);
        assert_relative_eq!(curve.derivative(1.0).unwrap(), -2.0);
        let text = toml::to_string(&curve).unwrap();
        let back: CurveSpec = toml::from_str(&text).unwrap();
        assert_eq!(curve, back);
    }

    #[test]
    fn circle_curve_clamps_and_inverts() {
        let curve = CurveSpec::new(CurveKind::Circle { radius: 2.0 }).unwrap();
        assert_relative_eq!(curve.eval(1.2), (4.0_f64 - 1.44).sqrt());
        assert_eq!(curve.eval(2.5), 0.0);
        assert_relative_eq!(curve.inverse(curve.eval(1.2)).unwrap(), 1.2, epsilon = 1e-12);
        assert_eq!(curve.positive_until(), 2.0);
    }

    #[test]
    fn mean_reversion_curve_matches_case_split() {
        // Negative start, level inside (start, 0): decreasing positive curve.
        let curve = CurveSpec::new(CurveKind::MeanReversion {
            level: -0.5,
            start: -1.0,
            alpha: 0.75,
            gamma: 1.0,
        })
        .unwrap();
        assert_eq!(curve.direction(), Direction::NonIncreasing);
        assert_relative_eq!(curve.eval(0.0), 0.5);
        let s_star = curve.positive_until();
        assert_relative_eq!(curve.eval(s_star), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            s_star,
            (2.0_f64.powf(0.75) - 1.0) / 0.75,
            epsilon = 1e-12
        );
        // Positive level from a negative start: nondecreasing.
        let up = CurveSpec::new(CurveKind::MeanReversion {
            level: 0.5,
            start: -1.0,
            alpha: 0.75,
            gamma: 1.0,
        })
        .unwrap();
        assert_eq!(up.direction(), Direction::NonDecreasing);
        assert_relative_eq!(up.eval(0.0), 1.5);
    }

    #[test]
    fn tabulated_rejects_non_monotone() {
        let bad = CurveSpec::new(CurveKind::Tabulated {
            ts: vec![0.0, 1.0, 2.0],
            values: vec![1.0, 3.0, 2.0],
        });
        assert!(bad.is_err());
        let good = CurveSpec::new(CurveKind::Tabulated {
            ts: vec![0.0, 1.0, 2.0],
            values: vec![3.0, 2.0, 0.5],
        })
        .unwrap();
        assert_relative_eq!(good.eval(0.5), 2.5);
        assert_relative_eq!(good.eval(1.5), 1.25);
        assert_relative_eq!(good.inverse(1.25).unwrap(), 1.5);
        // Constant extension outside the knots.
        assert_relative_eq!(good.eval(-1.0), 3.0);
        assert_relative_eq!(good.eval(5.0), 0.5);
    }

    #[test]
    fn curve_monotonicity_on_probe_grid() {
        let curves = [
            CurveSpec::new(CurveKind::Power { coef: 2.0, exponent: 1.5 }).unwrap(),
            CurveSpec::new(CurveKind::Affine { intercept: 2.0, slope: -1.0 }).unwrap(),
            CurveSpec::new(CurveKind::Affine { intercept: 1.0, slope: 0.5 }).unwrap(),
            CurveSpec::new(CurveKind::Circle { radius: 1.5 }).unwrap(),
            CurveSpec::new(CurveKind::MeanReversion {
                level: -0.5,
                start: -1.0,
                alpha: 0.6,
                gamma: 2.0,
            })
            .unwrap(),
        ];
        for curve in &curves {
            let dir = curve.direction();
            let mut prev = curve.eval(1e-6);
            for i in 1..200 {
                let t = i as f64 * 0.05;
                let v = curve.eval(t);
                match dir {
                    Direction::NonIncreasing => assert!(v <= prev + 1e-12, "{curve:?} at {t}"),
                    Direction::NonDecreasing => assert!(v >= prev - 1e-12, "{curve:?} at {t}"),
                    Direction::Constant => assert_eq!(v, prev),
                }
                prev = v;
            }
        }
    }

    #[test]
    fn laplace_exponents() {
        let stable = JumpLaw::Stable {
            alpha: 0.5,
            scale: std::f64::consts::SQRT_2,
            eps: 1e-4,
        };
        assert_relative_eq!(stable.laplace_exponent(2.0), 2.0, epsilon = 1e-14);
        let gamma_law = JumpLaw::Gamma {
            shape: 1.0,
            rate: 1.0,
            eps: 1e-4,
        };
        assert_relative_eq!(gamma_law.laplace_exponent(1.0), 2.0_f64.ln(), epsilon = 1e-14);
        let cp = JumpLaw::CompoundPoisson {
            rate: 2.0,
            sizes: JumpSizeDist::Exponential { rate: 4.0 },
        };
        assert_relative_eq!(cp.laplace_exponent(1.0), 2.0 * (1.0 - 4.0 / 5.0), epsilon = 1e-14);
    }
}
