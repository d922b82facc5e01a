//! Machine-readable run reports. Every field is a pure function of the
//! configuration, so reruns of the same scenario produce byte-identical
//! files; nothing time- or host-dependent is recorded.

use creep_core::creep_detect::CrossingOutcome;
use creep_core::mc_estimator::{KsReport, McSummary, TwoSampleCheck, Verdict};
use serde::Serialize;
use std::io::Write as _;
use std::path::Path;

pub const SCHEMA: &str = "creep-report/1";

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    pub formula_id: String,
    pub value: f64,
    pub abs_error_estimate: f64,
    pub panels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub u0: f64,
    pub u1: f64,
    pub creep_in_window: u64,
    pub fraction: f64,
    pub ci99: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub value: f64,
    pub analytic_error: f64,
    pub z: f64,
    pub verdict: Verdict,
    /// Which fraction the verdict judged.
    pub on: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsSection {
    pub reference: String,
    #[serde(flatten)]
    pub report: KsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteReport {
    pub decay: McSummary,
    pub curve: McSummary,
    pub check: TwoSampleCheck,
    pub expect_zero: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_band: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub dt: f64,
    pub window: f64,
    pub at_supremum: u64,
    pub off_supremum: u64,
    pub horizon: u64,
    pub fraction: f64,
    pub gap_to_expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TanakaReport {
    pub creep_at_supremum: u64,
    pub creep_at_future_infimum: u64,
    pub indicator_mismatches: u64,
    pub time_mismatches: u64,
    pub max_time_gap: f64,
    pub indeterminate: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub schema: &'static str,
    pub scenario: String,
    pub mode: &'static str,
    pub seed: u64,
    pub n_paths: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routes: Option<RouteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tanaka: Option<TanakaReport>,
    pub exit_code: i32,
}

impl SummaryReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// One human line for the terminal; files carry the full record.
    pub fn headline(&self) -> String {
        let mut parts = vec![format!("{}: ", self.scenario)];
        if let Some(c) = &self.comparison {
            parts.push(format!(
                "verdict {:?} (value {:.6}, z {:+.2})",
                c.verdict, c.value, c.z
            ));
        } else if let Some(r) = &self.routes {
            parts.push(format!(
                "routes {} (decay {:.4}, curve {:.4})",
                if self.exit_code == 0 { "agree" } else { "disagree" },
                r.decay.p_hat,
                r.curve.p_hat
            ));
        } else if let Some(t) = &self.tanaka {
            parts.push(format!(
                "{} identity mismatches over {} paths",
                t.indicator_mismatches + t.time_mismatches,
                self.n_paths
            ));
        } else if let Some(g) = &self.grid {
            let fr: Vec<String> = g.iter().map(|r| format!("{:.4}", r.fraction)).collect();
            parts.push(format!("fractions [{}]", fr.join(", ")));
        } else if let Some(m) = &self.mc {
            parts.push(format!(
                "p_hat {:.6} in [{:.6}, {:.6}]",
                m.p_hat, m.ci_low, m.ci_high
            ));
        } else if let Some(a) = &self.analytic {
            parts.push(format!("value {:.12} +- {:.2e}", a.value, a.abs_error_estimate));
        }
        parts.concat()
    }
}

/// Suite roll-up, one row per golden scenario in execution order.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub scenario: String,
    pub mode: &'static str,
    pub exit_code: i32,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: &'static str,
    pub rows: Vec<SuiteRow>,
    pub all_ok: bool,
}

const CSV_HEADER: &str = "path,outcome,t,y,z";

fn outcome_fields(out: &CrossingOutcome) -> (&'static str, String, String, String) {
    match *out {
        CrossingOutcome::Creep { t, y, z } => ("creep", fmt(t), fmt(y), fmt(z)),
        CrossingOutcome::JumpOver { t, y, z } => ("jump_over", fmt(t), fmt(y), fmt(z)),
        CrossingOutcome::JumpOntoGraph { t, y, z } => ("jump_onto_graph", fmt(t), fmt(y), fmt(z)),
        CrossingOutcome::JumpFromGraph { t, y, z } => ("jump_from_graph", fmt(t), fmt(y), fmt(z)),
        CrossingOutcome::Killed { t } => ("killed", fmt(t), String::new(), String::new()),
        CrossingOutcome::Horizon => ("horizon", String::new(), String::new(), String::new()),
    }
}

fn fmt(x: f64) -> String {
    // Shortest round-trip form, so the CSV is exact and rerun-stable.
    let mut buf = ryu_free_format(x);
    if buf.is_empty() {
        buf.push('0');
    }
    buf
}

fn ryu_free_format(x: f64) -> String {
    // `{:?}` on f64 prints the shortest string that parses back exactly.
    format!("{x:?}")
}

/// Per-path outcome dump; `label` prefixes the path id for multi-batch runs.
pub fn outcomes_csv(batches: &[(&str, &[CrossingOutcome])]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for (label, outcomes) in batches {
        for (i, out) in outcomes.iter().enumerate() {
            let (kind, t, y, z) = outcome_fields(out);
            if label.is_empty() {
                s.push_str(&format!("{i},{kind},{t},{y},{z}\n"));
            } else {
                s.push_str(&format!("{label}/{i},{kind},{t},{y},{z}\n"));
            }
        }
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)
        .map_err(|e| format!("creating {}: {e}", path.display()))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| format!("writing {}: {e}", path.display()))
}
