//! Batch estimates, intervals, and formula-versus-simulation verdicts.
//!
//! Counting is associative and commutative, so any reduction tree over any
//! partition of a batch produces the same counters and therefore the same
//! serialized summary. Intervals are Wilson at 99% rather than Wald: several
//! scenarios sit at or near zero successes, where Wald collapses to a point.

use serde::{Deserialize, Serialize};

use crate::creep_detect::CrossingOutcome;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Agreement radius: three combined error widths.
pub const AGREE_FACTOR: f64 = 3.0;
/// A batch is inconclusive when its half-width exceeds all of: this factor
/// times the analytic error bound, this fraction of the target value, and
/// the absolute floor.
pub const INCONCLUSIVE_ANALYTIC_FACTOR: f64 = 5.0;
pub const INCONCLUSIVE_RELATIVE: f64 = 0.25;
pub const INCONCLUSIVE_ABSOLUTE: f64 = 0.05;

/// Per-kind outcome counters. Merging adds fieldwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub creep: u64,
    pub jump_over: u64,
    pub jump_onto_graph: u64,
    pub jump_from_graph: u64,
    pub killed: u64,
    pub horizon: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: &CrossingOutcome) {
        match outcome {
            CrossingOutcome::Creep { .. } => self.creep += 1,
            CrossingOutcome::JumpOver { .. } => self.jump_over += 1,
            CrossingOutcome::JumpOntoGraph { .. } => self.jump_onto_graph += 1,
            CrossingOutcome::JumpFromGraph { .. } => self.jump_from_graph += 1,
            CrossingOutcome::Killed { .. } => self.killed += 1,
            CrossingOutcome::Horizon => self.horizon += 1,
        }
    }

    pub fn merge(mut self, other: OutcomeCounts) -> OutcomeCounts {
        self.creep += other.creep;
        self.jump_over += other.jump_over;
        self.jump_onto_graph += other.jump_onto_graph;
        self.jump_from_graph += other.jump_from_graph;
        self.killed += other.killed;
        self.horizon += other.horizon;
        self
    }

    pub fn total(&self) -> u64 {
        self.creep
            + self.jump_over
            + self.jump_onto_graph
            + self.jump_from_graph
            + self.killed
            + self.horizon
    }

    fn absent(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (n, label) in [
            (self.creep, "creep"),
            (self.jump_over, "jump_over"),
            (self.jump_onto_graph, "jump_onto_graph"),
            (self.jump_from_graph, "jump_from_graph"),
            (self.killed, "killed"),
            (self.horizon, "horizon"),
        ] {
            if n == 0 {
                out.push(label);
            }
        }
        out
    }
}

/// Wilson score interval at 99%, clamped to `[0, 1]`.
pub fn wilson_99(successes: u64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / nf;
    let center = p + z2 / (2.0 * nf);
    let half = Z_99 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (
        ((center - half) / denom).max(0.0),
        ((center + half) / denom).min(1.0),
    )
}

/// Batch summary around the creep fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n_paths: u64,
    pub counts: OutcomeCounts,
    /// Kinds never observed, in fixed kind order.
    pub absent_kinds: Vec<String>,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Propagated truncation bias bound from the path sampler's jump floor.
    pub bias_bound: f64,
    /// `3/n` when no creep was observed: the 95% upper bound consistent
    /// with zero successes.
    pub rule_of_three_bound: Option<f64>,
    pub master_seed: u64,
}

impl McSummary {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Summarise counted outcomes. The batch must be nonempty.
pub fn summarize(counts: OutcomeCounts, bias_bound: f64, master_seed: u64) -> McSummary {
    let n = counts.total();
    assert!(n > 0, "empty batch");
    let (ci_low, ci_high) = wilson_99(counts.creep, n);
    let p_hat = counts.creep as f64 / n as f64;
    McSummary {
        n_paths: n,
        absent_kinds: counts.absent().iter().map(|s| s.to_string()).collect(),
        p_hat,
        ci_low,
        ci_high,
        bias_bound,
        rule_of_three_bound: (counts.creep == 0).then(|| 3.0 / n as f64),
        master_seed,
        counts,
    }
}

pub fn estimate(outcomes: &[CrossingOutcome], bias_bound: f64, master_seed: u64) -> McSummary {
    let mut counts = OutcomeCounts::default();
    for o in outcomes {
        counts.record(o);
    }
    summarize(counts, bias_bound, master_seed)
}

/// Empirical-vs-analytic sup distance. The reference must be nondecreasing
/// with values in `[0, 1]` along the sorted sample.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, String> {
    if sample.is_empty() {
        return Err("empty sample".into());
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("sample values must be ordered"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut prev_f = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0 + 1e-12).contains(&f) || f + 1e-12 < prev_f {
            return Err(format!("reference distribution is not a cdf at {x}: {f}"));
        }
        prev_f = f;
        d = d.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn ks_report(sample: &[f64], cdf: impl Fn(f64) -> f64, threshold: f64) -> Result<KsReport, String> {
    let statistic = ks_distance(sample, cdf)?;
    Ok(KsReport {
        statistic,
        threshold,
        pass: statistic < threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    Disagree,
    Inconclusive,
}

/// A formula value against a batch. `z` is the discrepancy in units of one
/// combined standard error (Wilson half-width rescaled to one sigma, plus
/// the analytic and bias bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub value: f64,
    pub analytic_error: f64,
    pub mc: McSummary,
    pub z: f64,
    pub verdict: Verdict,
}

impl ComparisonVerdict {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Agree => 0,
            Verdict::Disagree => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

/// Verdict rule. Agreement means the discrepancy fits inside three combined
/// widths; a batch too noisy to carry three-width resolution against every
/// scale in play is inconclusive rather than wrong.
pub fn compare(value: f64, analytic_error: f64, mc: &McSummary) -> ComparisonVerdict {
    let hw = mc.half_width();
    let inconclusive_above = (INCONCLUSIVE_ANALYTIC_FACTOR * analytic_error)
        .max(INCONCLUSIVE_RELATIVE * value.abs())
        .max(INCONCLUSIVE_ABSOLUTE);
    let diff = mc.p_hat - value;
    let se = hw / Z_99 + analytic_error + mc.bias_bound;
    let z = if se > 0.0 { diff / se } else { 0.0 };
    let verdict = if hw > inconclusive_above {
        Verdict::Inconclusive
    } else if diff.abs() <= AGREE_FACTOR * (hw + analytic_error + mc.bias_bound) {
        Verdict::Agree
    } else {
        Verdict::Disagree
    };
    ComparisonVerdict {
        value,
        analytic_error,
        mc: mc.clone(),
        z,
        verdict,
    }
}

/// Two independent creep fractions, pooled. Used where two simulation routes
/// must reproduce the same probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleCheck {
    pub diff: f64,
    pub pooled_se: f64,
    pub agree: bool,
}

pub fn two_sample_check(k1: u64, n1: u64, k2: u64, n2: u64) -> TwoSampleCheck {
    let p1 = k1 as f64 / n1 as f64;
    let p2 = k2 as f64 / n2 as f64;
    let pooled_se =
        (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt();
    let diff = p1 - p2;
    TwoSampleCheck {
        diff,
        pooled_se,
        agree: diff.abs() <= AGREE_FACTOR * pooled_se,
    }
}
