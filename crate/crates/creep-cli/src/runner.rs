//! Scenario execution: Monte Carlo batches, quadrature routes, verdicts,
//! and the suite roll-up. Path generation fans out over a worker pool keyed
//! by path index, so results are independent of the worker count.

use crate::config::{
    AnalyticOverride, FormulaId, KsReference, KsSpec, ScenarioConfig, ScenarioKind, GOLDEN,
};
use crate::report::{
    outcomes_csv, write_file, AnalyticReport, ComparisonReport, GridRow, KsSection, RouteReport,
    SuiteReport, SuiteRow, SummaryReport, TanakaReport, WindowReport, SCHEMA,
};
use creep_core::analytic::{
    bm_sup_creep_time_cdf, creep_formula_bivariate, creep_formula_norm, renewal_density_for,
    stable_half_creep_time_cdf, FormulaValue, TOL_FORMULA,
};
use creep_core::conditioned::{
    last_passage_creep, sample_spectrally_negative, supremum_creep, tanaka_transform, LastPassage,
    SupCreepOutcome,
};
use creep_core::creep_detect::{
    first_passage_path, ou_first_passage, ou_first_passage_via_curve, supremum_creep_bm_grid,
    CrossingOutcome, GridSupOutcome,
};
use creep_core::mc_estimator::{
    compare, estimate, ks_report, summarize, two_sample_check, wilson_99, OutcomeCounts,
};
use creep_core::path_engine::{sample_bivariate_path, SeedPolicy};
use creep_core::process_model::{BivariateSubordinatorSpec, CurveKind, CurveSpec, OuSpec};
use rayon::prelude::*;
use std::path::PathBuf;

/// Seed offset between the two mean-reversion routes, so the route-agreement
/// check compares statistically independent batches.
const ROUTE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// Creep times from the two reversal detectors must coincide to root-finding
/// accuracy; they are produced by different arithmetic on the same path.
const REVERSAL_TIME_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    UnknownScenario(String),
    Quadrature(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 3,
            RunError::UnknownScenario(_) => 4,
            RunError::Quadrature(_) => 5,
            RunError::Io(_) => 6,
        }
    }

    pub fn message(&self) -> String {
        match self {
            RunError::Config(m) => format!("invalid config: {m}"),
            RunError::UnknownScenario(m) => format!("unknown scenario: {m}"),
            RunError::Quadrature(m) => format!("quadrature failure: {m}"),
            RunError::Io(m) => format!("io error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub out_dir: Option<PathBuf>,
    pub format: Format,
}

/// A finished run: the summary, plus the outcome dump when the format asks
/// for one.
pub struct RunProduct {
    pub report: SummaryReport,
    pub csv: Option<String>,
}

impl RunProduct {
    /// Write report files under `out_dir` when one is configured.
    pub fn emit(&self, out: &OutputSpec) -> Result<(), RunError> {
        if let Some(dir) = &out.out_dir {
            write_file(dir, &format!("{}.summary.json", self.report.scenario), &self.report.to_json())
                .map_err(RunError::Io)?;
            if let (Format::Csv, Some(csv)) = (out.format, &self.csv) {
                write_file(dir, &format!("{}.outcomes.csv", self.report.scenario), csv)
                    .map_err(RunError::Io)?;
            }
        }
        Ok(())
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Config(format!("worker pool: {e}")))
}

fn mc_batch(
    process: &BivariateSubordinatorSpec,
    curve: &CurveSpec,
    horizon: f64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<CrossingOutcome>, RunError> {
    let policy = SeedPolicy::new(seed);
    Ok(pool(workers)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|k| {
                let path = sample_bivariate_path(process, policy, k, horizon);
                first_passage_path(&path, curve)
            })
            .collect()
    }))
}

/// Truncation-bias convention: horizon times the discarded small-jump mass
/// rate bounds the pathwise displacement, and the comparison rule treats it
/// as a one-sided slack on both sides.
fn bias_bound(cfg: &ScenarioConfig) -> f64 {
    match &cfg.kind {
        ScenarioKind::CurveCompare { process, horizon, .. }
        | ScenarioKind::NeverCreep { process, horizon, .. } => {
            horizon * process.small_jump_mass_rate()
        }
        ScenarioKind::OuDichotomy { ou, horizon, .. } => {
            horizon * ou.noise.small_jump_mass_rate()
        }
        ScenarioKind::GridSupremum { .. } | ScenarioKind::Tanaka { .. } => 0.0,
    }
}

fn creep_times_in(outcomes: &[CrossingOutcome]) -> Vec<f64> {
    outcomes
        .iter()
        .filter_map(|o| match o {
            CrossingOutcome::Creep { y, .. } => Some(*y),
            _ => None,
        })
        .collect()
}

fn window_count(outcomes: &[CrossingOutcome], u0: f64, u1: f64) -> u64 {
    outcomes
        .iter()
        .filter(|o| matches!(o, CrossingOutcome::Creep { y, .. } if (u0..=u1).contains(y)))
        .count() as u64
}

fn quadrature_value(
    process: &BivariateSubordinatorSpec,
    curve: &CurveSpec,
    formula: FormulaId,
    u_window: Option<[f64; 2]>,
    analytic: &Option<AnalyticOverride>,
) -> Result<FormulaValue, RunError> {
    let over_p = analytic.as_ref().and_then(|a| a.process.clone());
    let over_c = analytic.as_ref().and_then(|a| a.curve.clone());
    let process = over_p.as_ref().unwrap_or(process);
    let curve = over_c.as_ref().unwrap_or(curve);
    let v = renewal_density_for(process).map_err(RunError::Quadrature)?;
    let (d_y, d_z) = process.drifts();
    match formula {
        FormulaId::Bivariate => {
            let [u0, u1] = u_window.unwrap_or([0.0, f64::INFINITY]);
            creep_formula_bivariate(&v, curve, d_y, d_z, u0, u1, TOL_FORMULA)
        }
        FormulaId::Norm => {
            let radius = match curve.kind {
                CurveKind::Circle { radius } => radius,
                _ => return Err(RunError::Config("norm formula needs a circle curve".into())),
            };
            creep_formula_norm(&v, radius, d_y, d_z, TOL_FORMULA)
        }
    }
    .map_err(|e| RunError::Quadrature(e.to_string()))
}

fn analytic_report(fv: &FormulaValue, expected: Option<f64>) -> AnalyticReport {
    AnalyticReport {
        formula_id: fv.formula_id.clone(),
        value: fv.value,
        abs_error_estimate: fv.abs_error_estimate,
        panels: fv.panels,
        expected,
    }
}

/// The pinned value in a golden file is a tripwire: a quadrature that moves
/// away from it signals a regression in the analytic stack, not a verdict.
fn check_expected(fv: &FormulaValue, expected: Option<f64>, tol: f64) -> Result<(), RunError> {
    if let Some(exp) = expected {
        let slack = tol.max(10.0 * fv.abs_error_estimate);
        if (fv.value - exp).abs() > slack {
            return Err(RunError::Quadrature(format!(
                "value {} drifted from the pinned {} by more than {:.3e}",
                fv.value, exp, slack
            )));
        }
    }
    Ok(())
}

fn ks_section(
    spec: &KsSpec,
    outcomes: &[CrossingOutcome],
) -> Result<KsSection, RunError> {
    let sample = creep_times_in(outcomes);
    let cdf: fn(f64) -> f64 = match spec.reference {
        KsReference::HalfStableCrossing => stable_half_creep_time_cdf,
        KsReference::BmLadderCrossing => bm_sup_creep_time_cdf,
    };
    let report = ks_report(&sample, cdf, spec.threshold)
        .map_err(|e| RunError::Config(format!("ks check: {e}")))?;
    let reference = match spec.reference {
        KsReference::HalfStableCrossing => "half_stable_crossing".to_string(),
        KsReference::BmLadderCrossing => "bm_ladder_crossing".to_string(),
    };
    Ok(KsSection { reference, report })
}

fn base_report(cfg: &ScenarioConfig, mode: &'static str) -> SummaryReport {
    SummaryReport {
        schema: SCHEMA,
        scenario: cfg.name.clone(),
        mode,
        seed: cfg.seed,
        n_paths: cfg.n_paths,
        eps: cfg.effective_eps(),
        horizon: cfg.horizon(),
        mc: None,
        window: None,
        analytic: None,
        ks: None,
        comparison: None,
        routes: None,
        grid: None,
        tanaka: None,
        exit_code: 0,
    }
}

pub fn run_simulate(cfg: &ScenarioConfig, workers: usize) -> Result<RunProduct, RunError> {
    match &cfg.kind {
        ScenarioKind::CurveCompare { process, curve, horizon, u_window, ks, .. } => {
            let outcomes = mc_batch(process, curve, *horizon, cfg.n_paths, cfg.seed, workers)?;
            let mut report = base_report(cfg, "simulate");
            report.mc = Some(estimate(&outcomes, bias_bound(cfg), cfg.seed));
            if let Some([u0, u1]) = *u_window {
                report.window = Some(window_report(&outcomes, u0, u1, cfg.n_paths));
            }
            if let Some(spec) = ks {
                let section = ks_section(spec, &outcomes)?;
                if !section.report.pass {
                    report.exit_code = 1;
                }
                report.ks = Some(section);
            }
            Ok(RunProduct {
                csv: Some(outcomes_csv(&[("", &outcomes)])),
                report,
            })
        }
        ScenarioKind::NeverCreep { process, curve, horizon } => {
            let outcomes = mc_batch(process, curve, *horizon, cfg.n_paths, cfg.seed, workers)?;
            let mut report = base_report(cfg, "simulate");
            report.mc = Some(estimate(&outcomes, bias_bound(cfg), cfg.seed));
            Ok(RunProduct {
                csv: Some(outcomes_csv(&[("", &outcomes)])),
                report,
            })
        }
        ScenarioKind::GridSupremum { .. } => {
            let (rows, csv) = grid_rows(cfg, workers)?;
            let mut report = base_report(cfg, "simulate");
            report.grid = Some(rows);
            Ok(RunProduct { report, csv: Some(csv) })
        }
        ScenarioKind::OuDichotomy { ou, level, horizon, .. } => {
            // MC-only mode runs just the decay route.
            let outcomes = ou_batch(ou, *level, *horizon, cfg.n_paths, cfg.seed, workers, false)?;
            let mut report = base_report(cfg, "simulate");
            report.mc = Some(estimate(&outcomes, bias_bound(cfg), cfg.seed));
            Ok(RunProduct {
                csv: Some(outcomes_csv(&[("", &outcomes)])),
                report,
            })
        }
        ScenarioKind::Tanaka { .. } => Err(RunError::Config(
            "reversal scenarios run under tanaka-check".into(),
        )),
    }
}

pub fn run_quadrature(cfg: &ScenarioConfig) -> Result<RunProduct, RunError> {
    match &cfg.kind {
        ScenarioKind::CurveCompare {
            process,
            curve,
            u_window,
            formula,
            expected,
            expected_tol,
            analytic,
            ..
        } => {
            let fv = quadrature_value(process, curve, *formula, *u_window, analytic)?;
            check_expected(&fv, *expected, *expected_tol)?;
            let mut report = base_report(cfg, "quadrature");
            report.analytic = Some(analytic_report(&fv, *expected));
            Ok(RunProduct { report, csv: None })
        }
        _ => Err(RunError::Config(
            "only curve-compare scenarios have a quadrature route".into(),
        )),
    }
}

fn window_report(outcomes: &[CrossingOutcome], u0: f64, u1: f64, n: u64) -> WindowReport {
    let k = window_count(outcomes, u0, u1);
    WindowReport {
        u0,
        u1,
        creep_in_window: k,
        fraction: k as f64 / n as f64,
        ci99: wilson_99(k, n),
    }
}

/// Verdict on the windowed fraction: same comparison rule, applied to the
/// creep-in-window count.
fn windowed_verdict(
    fv: &FormulaValue,
    k: u64,
    n: u64,
    bias: f64,
    seed: u64,
) -> creep_core::mc_estimator::ComparisonVerdict {
    let counts = OutcomeCounts {
        creep: k,
        jump_over: n - k,
        ..OutcomeCounts::default()
    };
    compare(fv.value, fv.abs_error_estimate, &summarize(counts, bias, seed))
}

pub fn run_compare(cfg: &ScenarioConfig, workers: usize) -> Result<RunProduct, RunError> {
    match &cfg.kind {
        ScenarioKind::CurveCompare {
            process,
            curve,
            horizon,
            u_window,
            formula,
            expected,
            expected_tol,
            ks,
            analytic,
        } => {
            let fv = quadrature_value(process, curve, *formula, *u_window, analytic)?;
            check_expected(&fv, *expected, *expected_tol)?;
            let outcomes = mc_batch(process, curve, *horizon, cfg.n_paths, cfg.seed, workers)?;
            let bias = bias_bound(cfg);
            let summary = estimate(&outcomes, bias, cfg.seed);

            let mut report = base_report(cfg, "compare");
            let verdict = match *u_window {
                None => compare(fv.value, fv.abs_error_estimate, &summary),
                Some([u0, u1]) => {
                    let k = window_count(&outcomes, u0, u1);
                    report.window = Some(window_report(&outcomes, u0, u1, cfg.n_paths));
                    windowed_verdict(&fv, k, cfg.n_paths, bias, cfg.seed)
                }
            };
            let mut exit = verdict.exit_code();
            if let Some(spec) = ks {
                let section = ks_section(spec, &outcomes)?;
                if !section.report.pass && exit == 0 {
                    exit = 1;
                }
                report.ks = Some(section);
            }
            report.mc = Some(summary);
            report.analytic = Some(analytic_report(&fv, *expected));
            report.comparison = Some(ComparisonReport {
                value: verdict.value,
                analytic_error: verdict.analytic_error,
                z: verdict.z,
                verdict: verdict.verdict,
                on: if u_window.is_some() { "window" } else { "total" },
            });
            report.exit_code = exit;
            Ok(RunProduct {
                csv: Some(outcomes_csv(&[("", &outcomes)])),
                report,
            })
        }
        ScenarioKind::NeverCreep { process, curve, horizon } => {
            let outcomes = mc_batch(process, curve, *horizon, cfg.n_paths, cfg.seed, workers)?;
            let summary = estimate(&outcomes, bias_bound(cfg), cfg.seed);
            let clean = summary.counts.creep == 0
                && summary.counts.jump_onto_graph == 0
                && summary.counts.jump_from_graph == 0;
            let mut report = base_report(cfg, "compare");
            report.exit_code = if clean { 0 } else { 1 };
            report.mc = Some(summary);
            Ok(RunProduct {
                csv: Some(outcomes_csv(&[("", &outcomes)])),
                report,
            })
        }
        ScenarioKind::GridSupremum { expected, .. } => {
            let (rows, csv) = grid_rows(cfg, workers)?;
            // Pass iff each refinement lands strictly closer to the limit.
            let improving = rows.windows(2).all(|w| w[1].gap_to_expected < w[0].gap_to_expected);
            let _ = expected;
            let mut report = base_report(cfg, "compare");
            report.exit_code = if improving { 0 } else { 1 };
            report.grid = Some(rows);
            Ok(RunProduct { report, csv: Some(csv) })
        }
        ScenarioKind::OuDichotomy { .. } => Err(RunError::Config(
            "mean-reversion scenarios run under the ou subcommand".into(),
        )),
        ScenarioKind::Tanaka { .. } => Err(RunError::Config(
            "reversal scenarios run under tanaka-check".into(),
        )),
    }
}

fn grid_rows(cfg: &ScenarioConfig, workers: usize) -> Result<(Vec<GridRow>, String), RunError> {
    let ScenarioKind::GridSupremum { curve, dts, window_factor, horizon, expected } = &cfg.kind
    else {
        return Err(RunError::Config("not a grid scenario".into()));
    };
    let policy = SeedPolicy::new(cfg.seed);
    let pool = pool(workers)?;
    let mut rows = Vec::new();
    let mut csv = String::from("dt,path,outcome,t\n");
    for &dt in dts {
        let window = window_factor * dt.sqrt();
        let outcomes: Vec<GridSupOutcome> = pool.install(|| {
            (0..cfg.n_paths)
                .into_par_iter()
                .map(|k| supremum_creep_bm_grid(curve, dt, *horizon, window, policy, k))
                .collect()
        });
        let mut at_sup = 0u64;
        let mut off_sup = 0u64;
        let mut miss = 0u64;
        for (i, out) in outcomes.iter().enumerate() {
            match out {
                GridSupOutcome::CreepAtSup { t } => {
                    at_sup += 1;
                    csv.push_str(&format!("{dt:?},{i},at_supremum,{t:?}\n"));
                }
                GridSupOutcome::ContactOffSup { t } => {
                    off_sup += 1;
                    csv.push_str(&format!("{dt:?},{i},off_supremum,{t:?}\n"));
                }
                GridSupOutcome::Horizon => {
                    miss += 1;
                    csv.push_str(&format!("{dt:?},{i},horizon,\n"));
                }
            }
        }
        let fraction = at_sup as f64 / cfg.n_paths as f64;
        rows.push(GridRow {
            dt,
            window,
            at_supremum: at_sup,
            off_supremum: off_sup,
            horizon: miss,
            fraction,
            gap_to_expected: (fraction - expected).abs(),
        });
    }
    Ok((rows, csv))
}

fn ou_batch(
    ou: &OuSpec,
    level: f64,
    horizon: f64,
    n: u64,
    seed: u64,
    workers: usize,
    via_curve: bool,
) -> Result<Vec<CrossingOutcome>, RunError> {
    let policy = SeedPolicy::new(seed);
    Ok(pool(workers)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|k| {
                if via_curve {
                    ou_first_passage_via_curve(ou, level, horizon, policy, k)
                } else {
                    ou_first_passage(ou, level, horizon, policy, k)
                }
            })
            .collect()
    }))
}

pub fn run_ou(cfg: &ScenarioConfig, workers: usize) -> Result<RunProduct, RunError> {
    let ScenarioKind::OuDichotomy { ou, level, horizon, expect_zero, baseline_band } = &cfg.kind
    else {
        return Err(RunError::Config("not a mean-reversion scenario".into()));
    };
    let bias = bias_bound(cfg);
    let seed_curve = cfg.seed ^ ROUTE_SEED_OFFSET;
    let decay = ou_batch(ou, *level, *horizon, cfg.n_paths, cfg.seed, workers, false)?;
    let curve = ou_batch(ou, *level, *horizon, cfg.n_paths, seed_curve, workers, true)?;
    let decay_sum = estimate(&decay, bias, cfg.seed);
    let curve_sum = estimate(&curve, bias, seed_curve);
    let check = two_sample_check(
        decay_sum.counts.creep,
        cfg.n_paths,
        curve_sum.counts.creep,
        cfg.n_paths,
    );
    let band_holds = baseline_band
        .map(|[lo, hi]| decay_sum.p_hat >= lo && decay_sum.p_hat <= hi);
    let zero_ok = !*expect_zero
        || (decay_sum.counts.creep == 0 && curve_sum.counts.creep == 0);
    let pass = check.agree && zero_ok && band_holds.unwrap_or(true);

    let mut report = base_report(cfg, "ou");
    report.exit_code = if pass { 0 } else { 1 };
    report.routes = Some(RouteReport {
        decay: decay_sum,
        curve: curve_sum,
        check,
        expect_zero: *expect_zero,
        baseline_band: *baseline_band,
        band_holds,
    });
    Ok(RunProduct {
        csv: Some(outcomes_csv(&[("decay", &decay), ("curve", &curve)])),
        report,
    })
}

pub fn run_tanaka(cfg: &ScenarioConfig, workers: usize) -> Result<RunProduct, RunError> {
    let ScenarioKind::Tanaka { drift, rate, sizes, curve, horizon } = &cfg.kind else {
        return Err(RunError::Config("not a reversal scenario".into()));
    };
    let policy = SeedPolicy::new(cfg.seed);
    struct Row {
        creep_sup: bool,
        t_sup: f64,
        creep_inf: bool,
        t_inf: f64,
        indeterminate: bool,
    }
    let rows: Vec<Result<Row, String>> = pool(workers)?.install(|| {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|k| {
                let path = sample_spectrally_negative(*drift, *rate, sizes, *horizon, policy, k);
                let sup = supremum_creep(&path, curve)?;
                let w = tanaka_transform(&path);
                let last = last_passage_creep(&w, curve)?;
                let (creep_sup, t_sup) = match sup {
                    SupCreepOutcome::Creep { t, at_supremum: true, .. } => (true, t),
                    _ => (false, f64::NAN),
                };
                let (creep_inf, t_inf, indeterminate) = match last {
                    LastPassage::At { t, at_future_infimum, .. } => {
                        (at_future_infimum, t, false)
                    }
                    LastPassage::Indeterminate => (false, f64::NAN, true),
                };
                Ok(Row { creep_sup, t_sup, creep_inf, t_inf, indeterminate })
            })
            .collect()
    });

    let mut csv =
        String::from("path,creep_at_supremum,t_supremum,creep_at_future_infimum,t_future_infimum\n");
    let mut rep = TanakaReport {
        creep_at_supremum: 0,
        creep_at_future_infimum: 0,
        indicator_mismatches: 0,
        time_mismatches: 0,
        max_time_gap: 0.0,
        indeterminate: 0,
    };
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.map_err(RunError::Config)?;
        if row.creep_sup {
            rep.creep_at_supremum += 1;
        }
        if row.creep_inf {
            rep.creep_at_future_infimum += 1;
        }
        if row.indeterminate {
            rep.indeterminate += 1;
        }
        if row.creep_sup != row.creep_inf {
            rep.indicator_mismatches += 1;
        } else if row.creep_sup {
            let gap = (row.t_sup - row.t_inf).abs();
            rep.max_time_gap = rep.max_time_gap.max(gap);
            if gap > REVERSAL_TIME_TOL * (1.0 + row.t_sup.abs()) {
                rep.time_mismatches += 1;
            }
        }
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            row.creep_sup,
            if row.t_sup.is_nan() { String::new() } else { format!("{:?}", row.t_sup) },
            row.creep_inf,
            if row.t_inf.is_nan() { String::new() } else { format!("{:?}", row.t_inf) },
        ));
    }
    let pass = rep.indicator_mismatches == 0 && rep.time_mismatches == 0;
    let mut report = base_report(cfg, "tanaka-check");
    report.exit_code = if pass { 0 } else { 1 };
    report.tanaka = Some(rep);
    Ok(RunProduct { report, csv: Some(csv) })
}

/// Natural check for a scenario kind, as the suite runs it.
pub fn run_natural(cfg: &ScenarioConfig, workers: usize) -> Result<RunProduct, RunError> {
    match &cfg.kind {
        ScenarioKind::CurveCompare { .. }
        | ScenarioKind::NeverCreep { .. }
        | ScenarioKind::GridSupremum { .. } => run_compare(cfg, workers),
        ScenarioKind::OuDichotomy { .. } => run_ou(cfg, workers),
        ScenarioKind::Tanaka { .. } => run_tanaka(cfg, workers),
    }
}

pub fn run_suite(workers: usize, out: &OutputSpec) -> Result<(SuiteReport, Vec<String>), RunError> {
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for entry in GOLDEN {
        let cfg = ScenarioConfig::parse(entry.source)
            .map_err(|e| RunError::Config(format!("{}: {e}", entry.name)))?;
        let problems = cfg.validate();
        if !problems.is_empty() {
            return Err(RunError::Config(format!("{}: {problems:?}", entry.name)));
        }
        let product = run_natural(&cfg, workers)?;
        product.emit(out)?;
        lines.push(product.report.headline());
        rows.push(SuiteRow {
            scenario: cfg.name.clone(),
            mode: product.report.mode,
            exit_code: product.report.exit_code,
            ok: product.report.exit_code == 0,
        });
    }
    let all_ok = rows.iter().all(|r| r.ok);
    let suite = SuiteReport { schema: SCHEMA, rows, all_ok };
    if let Some(dir) = &out.out_dir {
        let mut body = serde_json::to_string_pretty(&suite).expect("suite serialization");
        body.push('\n');
        write_file(dir, "suite.json", &body).map_err(RunError::Io)?;
    }
    Ok((suite, lines))
}

/// Catalog listing: name, expected value, path budget, and description.
pub fn golden_catalog() -> Result<Vec<(String, String, u64, String)>, RunError> {
    let mut out = Vec::new();
    for entry in GOLDEN {
        let cfg = ScenarioConfig::parse(entry.source)
            .map_err(|e| RunError::Config(format!("{}: {e}", entry.name)))?;
        out.push((cfg.name.clone(), cfg.expected_display(), cfg.n_paths, cfg.anchor.clone()));
    }
    Ok(out)
}
