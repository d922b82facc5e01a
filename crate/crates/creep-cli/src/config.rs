//! Scenario configuration: the plain-text schema behind every run, plus the
//! embedded golden catalog.
//!
//! A scenario file is TOML with a `kind` discriminator. No environment
//! variable influences a run; seeds enter only through the file or the
//! command line.

use creep_core::process_model::{
    validate_spec, BivariateSubordinatorSpec, Coupling, CurveSpec, JumpLaw, JumpSizeDist, OuSpec,
};
use serde::{Deserialize, Serialize};

/// One golden scenario, embedded at compile time so the binary is
/// self-contained; `--config` loads the same schema from disk instead.
pub struct GoldenEntry {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! golden {
    ($name:literal) => {
        GoldenEntry {
            name: $name,
            source: include_str!(concat!("../../../golden/", $name, ".toml")),
        }
    };
}

/// Catalog in suite execution order.
pub const GOLDEN: &[GoldenEntry] = &[
    golden!("stable_half_inverse_square"),
    golden!("bm_ladder_inverse"),
    golden!("bm_ladder_window"),
    golden!("bm_drift_ladder"),
    golden!("bm_grid_supremum"),
    golden!("gamma_circle"),
    golden!("gamma_level"),
    golden!("gamma_level_window"),
    golden!("affine_shift_level"),
    golden!("nondecreasing_driftless"),
    golden!("constant_driftless"),
    golden!("ou_creep_band"),
    golden!("ou_jump_only"),
    golden!("ou_from_zero"),
    golden!("tanaka_reversal"),
];

pub fn find_golden(name: &str) -> Option<&'static GoldenEntry> {
    GOLDEN.iter().find(|e| e.name == name)
}

/// Reference distribution for a KS check on the creep-conditioned first
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsReference {
    /// Crossing-time law of the driftless one-half-stable clock through the
    /// inverse-square curve.
    HalfStableCrossing,
    /// Brownian-supremum crossing law through the inverse curve, read on the
    /// ladder-time coordinate.
    BmLadderCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsSpec {
    pub reference: KsReference,
    pub threshold: f64,
}

/// Which analytic assembly the quadrature route uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    /// Renewal-density creep identity over the curve's own argument.
    #[default]
    Bivariate,
    /// Quarter-circle form in the angle variable; the curve must be a circle.
    Norm,
}

/// Substitute inputs for the analytic route when it is a transformed version
/// of the simulated problem rather than the same (process, curve) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticOverride {
    pub process: Option<BivariateSubordinatorSpec>,
    pub curve: Option<CurveSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Monte Carlo against the creep quadrature, with an agreement verdict.
    CurveCompare {
        process: BivariateSubordinatorSpec,
        curve: CurveSpec,
        horizon: f64,
        /// Restrict both routes to creep with first coordinate in this range.
        u_window: Option<[f64; 2]>,
        #[serde(default)]
        formula: FormulaId,
        /// Pinned quadrature value; the run fails if the live quadrature
        /// drifts from it by more than `expected_tol`.
        expected: Option<f64>,
        #[serde(default = "default_expected_tol")]
        expected_tol: f64,
        ks: Option<KsSpec>,
        analytic: Option<AnalyticOverride>,
    },
    /// The process cannot creep; the run passes iff zero creep events and
    /// zero graph-contact jump anomalies are observed.
    NeverCreep {
        process: BivariateSubordinatorSpec,
        curve: CurveSpec,
        horizon: f64,
    },
    /// Gridded Brownian supremum against the curve at several step sizes;
    /// passes iff the creep-at-supremum fraction moves strictly toward
    /// `expected` as the grid refines.
    GridSupremum {
        curve: CurveSpec,
        /// Step sizes, coarsest first.
        dts: Vec<f64>,
        /// Contact window is `window_factor · √dt`.
        window_factor: f64,
        horizon: f64,
        expected: f64,
    },
    /// Mean-reverting level crossing via the exponential-decay route and the
    /// curve-crossing route, with a pooled two-sample agreement check.
    OuDichotomy {
        ou: OuSpec,
        level: f64,
        horizon: f64,
        /// The regime where creep is impossible; both routes must report 0.
        #[serde(default)]
        expect_zero: bool,
        /// Regression band for the creep fraction of the decay route.
        baseline_band: Option<[f64; 2]>,
    },
    /// Per-path reversal identities: creep at the supremum of the original
    /// path iff last passage of the transformed path sits at its future
    /// infimum, with equal times.
    Tanaka {
        drift: f64,
        rate: f64,
        sizes: JumpSizeDist,
        curve: CurveSpec,
        horizon: f64,
    },
}

fn default_expected_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    /// One-line description shown by the catalog listing.
    pub anchor: String,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub kind: ScenarioKind,
}

impl ScenarioConfig {
    pub fn parse(source: &str) -> Result<Self, String> {
        toml::from_str(source).map_err(|e| e.to_string())
    }

    /// Structural validation beyond what deserialization enforces. Returns
    /// every problem found, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.name.is_empty() {
            out.push("scenario name must be non-empty".into());
        }
        if self.anchor.is_empty() {
            out.push("scenario anchor must be non-empty".into());
        }
        if self.n_paths == 0 {
            out.push("n_paths must be positive".into());
        }
        match &self.kind {
            ScenarioKind::CurveCompare {
                process,
                curve,
                horizon,
                u_window,
                formula,
                expected_tol,
                ks,
                analytic,
                ..
            } => {
                out.extend(validate_spec(process));
                validate_curve(curve, &mut out);
                validate_horizon(*horizon, &mut out);
                if let Some([u0, u1]) = u_window {
                    if !(*u0 >= 0.0 && u1 > u0) {
                        out.push(format!("u_window must satisfy 0 <= u0 < u1, got [{u0}, {u1}]"));
                    }
                }
                if *formula == FormulaId::Norm {
                    let c = analytic
                        .as_ref()
                        .and_then(|a| a.curve.as_ref())
                        .unwrap_or(curve);
                    if !matches!(
                        c.kind,
                        creep_core::process_model::CurveKind::Circle { .. }
                    ) {
                        out.push("the norm formula needs a circle curve".into());
                    }
                }
                if !(*expected_tol > 0.0) {
                    out.push(format!("expected_tol must be positive, got {expected_tol}"));
                }
                if let Some(k) = ks {
                    if !(k.threshold > 0.0 && k.threshold < 1.0) {
                        out.push(format!("ks threshold must lie in (0,1), got {}", k.threshold));
                    }
                }
                if let Some(a) = analytic {
                    if let Some(p) = &a.process {
                        out.extend(validate_spec(p));
                    }
                    if let Some(c) = &a.curve {
                        validate_curve(c, &mut out);
                    }
                }
            }
            ScenarioKind::NeverCreep { process, curve, horizon } => {
                out.extend(validate_spec(process));
                validate_curve(curve, &mut out);
                validate_horizon(*horizon, &mut out);
            }
            ScenarioKind::GridSupremum {
                curve,
                dts,
                window_factor,
                horizon,
                expected,
            } => {
                validate_curve(curve, &mut out);
                validate_horizon(*horizon, &mut out);
                if dts.is_empty() {
                    out.push("dts must list at least one step size".into());
                }
                if dts.windows(2).any(|w| w[1] >= w[0]) || dts.iter().any(|&d| !(d > 0.0)) {
                    out.push("dts must be positive and strictly decreasing".into());
                }
                if !(*window_factor > 0.0) {
                    out.push(format!("window_factor must be positive, got {window_factor}"));
                }
                if !(0.0..=1.0).contains(expected) {
                    out.push(format!("expected fraction must lie in [0,1], got {expected}"));
                }
            }
            ScenarioKind::OuDichotomy { ou, level, horizon, baseline_band, .. } => {
                out.extend(ou.validate());
                validate_horizon(*horizon, &mut out);
                if !(level.is_finite() && *level != 0.0) {
                    out.push(format!("level must be finite and nonzero, got {level}"));
                }
                if let Some([lo, hi]) = baseline_band {
                    if !(*lo >= 0.0 && hi > lo && *hi <= 1.0) {
                        out.push(format!(
                            "baseline_band must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"
                        ));
                    }
                }
            }
            ScenarioKind::Tanaka { drift, rate, sizes, curve, horizon } => {
                if !(*drift > 0.0 && drift.is_finite()) {
                    out.push(format!("reversal scenarios need positive drift, got {drift}"));
                }
                if !(*rate > 0.0 && rate.is_finite()) {
                    out.push(format!("jump rate must be positive, got {rate}"));
                }
                sizes.validate(&mut out);
                validate_curve(curve, &mut out);
                use creep_core::process_model::Direction;
                if curve.direction() == Direction::NonDecreasing {
                    out.push("reversal scenarios need a nonincreasing curve".into());
                }
                validate_horizon(*horizon, &mut out);
            }
        }
        out
    }

    /// Truncation floor actually in effect, when the process has one.
    pub fn effective_eps(&self) -> Option<f64> {
        match &self.kind {
            ScenarioKind::CurveCompare { process, .. }
            | ScenarioKind::NeverCreep { process, .. } => spec_eps(process),
            ScenarioKind::OuDichotomy { ou, .. } => Some(ou.noise.eps),
            ScenarioKind::GridSupremum { .. } | ScenarioKind::Tanaka { .. } => None,
        }
    }

    /// Horizon of the simulated batch.
    pub fn horizon(&self) -> f64 {
        match &self.kind {
            ScenarioKind::CurveCompare { horizon, .. }
            | ScenarioKind::NeverCreep { horizon, .. }
            | ScenarioKind::GridSupremum { horizon, .. }
            | ScenarioKind::OuDichotomy { horizon, .. }
            | ScenarioKind::Tanaka { horizon, .. } => *horizon,
        }
    }

    /// Expected value string for the catalog listing.
    pub fn expected_display(&self) -> String {
        match &self.kind {
            ScenarioKind::CurveCompare { expected: Some(v), .. } => format!("{v}"),
            ScenarioKind::CurveCompare { expected: None, .. } => "quadrature".into(),
            ScenarioKind::NeverCreep { .. } => "0 creep".into(),
            ScenarioKind::GridSupremum { expected, .. } => format!("-> {expected} as dt -> 0"),
            ScenarioKind::OuDichotomy { expect_zero: true, .. } => "0 creep, both routes".into(),
            ScenarioKind::OuDichotomy { baseline_band: Some([lo, hi]), .. } => {
                format!("routes agree, fraction in [{lo}, {hi}]")
            }
            ScenarioKind::OuDichotomy { .. } => "routes agree".into(),
            ScenarioKind::Tanaka { .. } => "pathwise identities hold".into(),
        }
    }

    /// Replace every jump-truncation floor with `eps`.
    pub fn set_eps(&mut self, eps: f64) {
        match &mut self.kind {
            ScenarioKind::CurveCompare { process, analytic, .. } => {
                set_spec_eps(process, eps);
                if let Some(a) = analytic {
                    if let Some(p) = &mut a.process {
                        set_spec_eps(p, eps);
                    }
                }
            }
            ScenarioKind::NeverCreep { process, .. } => set_spec_eps(process, eps),
            ScenarioKind::OuDichotomy { ou, .. } => ou.noise.eps = eps,
            ScenarioKind::GridSupremum { .. } | ScenarioKind::Tanaka { .. } => {}
        }
    }
}

fn validate_horizon(h: f64, out: &mut Vec<String>) {
    if !(h > 0.0 && h.is_finite()) {
        out.push(format!("horizon must be positive and finite, got {h}"));
    }
}

fn validate_curve(curve: &CurveSpec, out: &mut Vec<String>) {
    // Deserialization bypasses the checked constructor, so re-run it.
    if let Err(e) = CurveSpec::new(curve.kind.clone()) {
        out.push(e.to_string());
    }
}

fn law_eps(law: &JumpLaw) -> Option<f64> {
    match law {
        JumpLaw::Stable { eps, .. } | JumpLaw::Gamma { eps, .. } => Some(*eps),
        JumpLaw::TwoSidedStable(t) => Some(t.eps),
        JumpLaw::None | JumpLaw::CompoundPoisson { .. } => None,
    }
}

fn set_law_eps(law: &mut JumpLaw, new: f64) {
    match law {
        JumpLaw::Stable { eps, .. } | JumpLaw::Gamma { eps, .. } => *eps = new,
        JumpLaw::TwoSidedStable(t) => t.eps = new,
        JumpLaw::None | JumpLaw::CompoundPoisson { .. } => {}
    }
}

fn spec_eps(spec: &BivariateSubordinatorSpec) -> Option<f64> {
    match &spec.coupling {
        Coupling::Independent { y, z } => law_eps(&y.jumps).or(law_eps(&z.jumps)),
        Coupling::TimeAndProcess { z } => law_eps(&z.jumps),
        Coupling::BmLadder { eps } | Coupling::BmLadderDrift { eps, .. } => Some(*eps),
        Coupling::Custom(_) => None,
    }
}

fn set_spec_eps(spec: &mut BivariateSubordinatorSpec, new: f64) {
    match &mut spec.coupling {
        Coupling::Independent { y, z } => {
            set_law_eps(&mut y.jumps, new);
            set_law_eps(&mut z.jumps, new);
        }
        Coupling::TimeAndProcess { z } => set_law_eps(&mut z.jumps, new),
        Coupling::BmLadder { eps } | Coupling::BmLadderDrift { eps, .. } => *eps = new,
        Coupling::Custom(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_catalog_is_big_enough_and_fully_parseable() {
        assert!(GOLDEN.len() >= 10, "catalog has {} scenarios", GOLDEN.len());
        for entry in GOLDEN {
            let cfg = ScenarioConfig::parse(entry.source)
                .unwrap_or_else(|e| panic!("{} does not parse: {e}", entry.name));
            assert_eq!(cfg.name, entry.name, "file name and config name differ");
            assert!(!cfg.anchor.is_empty(), "{} has an empty anchor", entry.name);
            let problems = cfg.validate();
            assert!(problems.is_empty(), "{}: {problems:?}", entry.name);
        }
        let mut names: Vec<_> = GOLDEN.iter().map(|e| e.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), GOLDEN.len(), "duplicate scenario names");
    }

    #[test]
    fn zero_paths_is_rejected() {
        let entry = find_golden("gamma_level").unwrap();
        let mut cfg = ScenarioConfig::parse(entry.source).unwrap();
        cfg.n_paths = 0;
        assert!(cfg.validate().iter().any(|p| p.contains("n_paths")));
    }

    #[test]
    fn eps_override_reaches_every_floor() {
        for name in ["stable_half_inverse_square", "bm_ladder_inverse", "ou_creep_band"] {
            let mut cfg = ScenarioConfig::parse(find_golden(name).unwrap().source).unwrap();
            cfg.set_eps(0.5);
            assert_eq!(cfg.effective_eps(), Some(0.5), "{name}");
        }
    }

    #[test]
    fn configs_round_trip_through_toml() {
        for entry in GOLDEN {
            let cfg = ScenarioConfig::parse(entry.source).unwrap();
            let text = toml::to_string(&cfg).unwrap();
            let back = ScenarioConfig::parse(&text).unwrap();
            assert_eq!(cfg, back, "{} drifts through serialization", entry.name);
        }
    }
}
