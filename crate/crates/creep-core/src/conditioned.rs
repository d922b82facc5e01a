//! Pathwise excursion reversal for bounded-variation paths with drift.
//!
//! A scalar path that leaves its running maximum only by jumping down and
//! returns by drifting up splits into contact eras (path at its maximum) and
//! reflected excursions below it. Reversing each excursion in place yields a
//! path whose contact times with its own future infimum are exactly the
//! original contact times, which turns a first-passage question at the
//! supremum into a last-passage question at the future infimum. Everything
//! here is exact index arithmetic on those eras: era endpoints and contact
//! values are copied, never recomputed, so the identity checks compare
//! bitwise.

use crate::creep_detect::bisect_up;
use crate::path_engine::{exp_sample, jump_size_sample, Channel, SeedPolicy};
use crate::process_model::{CurveSpec, Direction, JumpSizeDist};

/// One-dimensional bounded-variation path: `X_t = drift·t + Σ_{t_i ≤ t} dx_i`
/// with signed jump sizes, piecewise linear between jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPath {
    pub drift: f64,
    pub horizon: f64,
    /// `(t_i, dx_i)` with strictly increasing times in `(0, horizon]`.
    pub events: Vec<(f64, f64)>,
}

impl ScalarPath {
    pub fn new(drift: f64, horizon: f64, events: Vec<(f64, f64)>) -> Result<Self, String> {
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(format!("drift must be finite and nonnegative, got {drift}"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(format!("horizon must be positive, got {horizon}"));
        }
        let mut prev = 0.0;
        for &(t, dx) in &events {
            if !(t > prev && t <= horizon) {
                return Err(format!("jump times must increase within (0, horizon], got {t}"));
            }
            if !(dx.is_finite() && dx != 0.0) {
                return Err(format!("jump sizes must be finite and nonzero, got {dx}"));
            }
            prev = t;
        }
        Ok(ScalarPath { drift, horizon, events })
    }

    /// `X_t`, one summation order, for spot checks.
    pub fn value_at(&self, t: f64) -> f64 {
        let mut x = self.drift * t;
        for &(ti, dx) in &self.events {
            if ti > t {
                break;
            }
            x += dx;
        }
        x
    }
}

/// Drift plus compound-Poisson downward jumps, the preset family for the
/// reversal scenarios: upward motion is all drift, so every return to the
/// maximum is continuous.
pub fn sample_spectrally_negative(
    drift: f64,
    rate: f64,
    sizes: &JumpSizeDist,
    horizon: f64,
    policy: SeedPolicy,
    path: u64,
) -> ScalarPath {
    let mut rng = policy.rng(path, Channel::FlowZ);
    let mut events = Vec::new();
    let mut t = exp_sample(&mut rng, rate);
    while t <= horizon {
        events.push((t, -jump_size_sample(sizes, &mut rng)));
        t += exp_sample(&mut rng, rate);
    }
    ScalarPath { drift, horizon, events }
}

/// Maximal era with `X = X̄`, with the path's nodes on it. The closed hull
/// `[start, end]` includes the right endpoint where the path jumps away.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactEra {
    pub start: f64,
    pub end: f64,
    /// `(t, x)` nodes; an upward jump at the maximum contributes a pre/post
    /// pair sharing its time.
    pub nodes: Vec<(f64, f64)>,
}

/// One excursion below the running maximum, carried as the reflected height
/// profile `R = X̄ - X` on `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Excursion {
    pub start: f64,
    pub end: f64,
    /// Running maximum during the excursion.
    pub base: f64,
    /// Running maximum at `end`: equals `base` after a drift recovery,
    /// exceeds it when an upward jump ended the excursion from below.
    pub end_max: f64,
    pub ended_by_jump: bool,
    /// `(t, R_t)` nodes, jump pairs sharing a time; starts at `(start, 0)`.
    pub reflected: Vec<(f64, f64)>,
}

/// Alternating contact/excursion split of `[0, end]`. `contacts[i].end ==
/// excursions[i].start` and `excursions[i].end == contacts[i+1].start`; an
/// excursion still open at the horizon is dropped and `truncated_at` records
/// the last contact time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionDecomposition {
    pub contacts: Vec<ContactEra>,
    pub excursions: Vec<Excursion>,
    pub truncated_at: Option<f64>,
    /// Last covered time: the horizon, or the truncation point.
    pub end: f64,
}

impl ExcursionDecomposition {
    pub fn contact_hulls(&self) -> Vec<(f64, f64)> {
        self.contacts.iter().map(|c| (c.start, c.end)).collect()
    }
}

pub fn decompose(path: &ScalarPath) -> ExcursionDecomposition {
    let mut contacts = Vec::new();
    let mut excursions = Vec::new();
    // (t, x) is the current state; in contact x is the running maximum.
    let mut t = 0.0_f64;
    let mut x = 0.0_f64;
    let mut m = 0.0_f64;
    let mut era: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut era_start = 0.0_f64;
    // Open excursion: (start, base, reflected nodes).
    let mut open: Option<(f64, f64, Vec<(f64, f64)>)> = None;

    let close_era = |contacts: &mut Vec<ContactEra>, start: f64, end: f64, nodes: Vec<(f64, f64)>| {
        contacts.push(ContactEra { start, end, nodes });
    };

    for &(tj, dx) in &path.events {
        if let Some((g, base, mut refl)) = open.take() {
            // Recovery time of the climb toward the frozen maximum.
            let t_rec = if path.drift > 0.0 {
                t + (m - x) / path.drift
            } else {
                f64::INFINITY
            };
            if t_rec < tj {
                refl.push((t_rec, 0.0));
                excursions.push(Excursion {
                    start: g,
                    end: t_rec,
                    base,
                    end_max: m,
                    ended_by_jump: false,
                    reflected: refl,
                });
                t = t_rec;
                x = m;
                era_start = t_rec;
                era = vec![(t_rec, m)];
            } else {
                let x_pre = x + path.drift * (tj - t);
                let x_post = x_pre + dx;
                refl.push((tj, m - x_pre));
                if x_post >= m {
                    // Upward jump across (or onto) the maximum ends the
                    // excursion at the jump epoch.
                    excursions.push(Excursion {
                        start: g,
                        end: tj,
                        base,
                        end_max: x_post,
                        ended_by_jump: true,
                        reflected: refl,
                    });
                    t = tj;
                    x = x_post;
                    m = x_post;
                    era_start = tj;
                    era = vec![(tj, x_post)];
                } else {
                    refl.push((tj, m - x_post));
                    t = tj;
                    x = x_post;
                    open = Some((g, base, refl));
                }
                continue;
            }
        }
        // In contact: climb along the maximum to the jump.
        let x_pre = x + path.drift * (tj - t);
        era.push((tj, x_pre));
        m = x_pre;
        if dx > 0.0 {
            let x_post = x_pre + dx;
            era.push((tj, x_post));
            t = tj;
            x = x_post;
            m = x_post;
        } else {
            close_era(&mut contacts, era_start, tj, std::mem::take(&mut era));
            open = Some((tj, m, vec![(tj, 0.0), (tj, -dx)]));
            t = tj;
            x = x_pre + dx;
        }
    }

    match open {
        Some((g, base, mut refl)) => {
            let t_rec = if path.drift > 0.0 {
                t + (m - x) / path.drift
            } else {
                f64::INFINITY
            };
            if t_rec <= path.horizon {
                refl.push((t_rec, 0.0));
                excursions.push(Excursion {
                    start: g,
                    end: t_rec,
                    base,
                    end_max: m,
                    ended_by_jump: false,
                    reflected: refl,
                });
                close_era(
                    &mut contacts,
                    t_rec,
                    path.horizon,
                    vec![(t_rec, m), (path.horizon, m + path.drift * (path.horizon - t_rec))],
                );
                ExcursionDecomposition {
                    contacts,
                    excursions,
                    truncated_at: None,
                    end: path.horizon,
                }
            } else {
                ExcursionDecomposition {
                    contacts,
                    excursions,
                    truncated_at: Some(g),
                    end: g,
                }
            }
        }
        None => {
            era.push((path.horizon, x + path.drift * (path.horizon - t)));
            close_era(&mut contacts, era_start, path.horizon, era);
            ExcursionDecomposition {
                contacts,
                excursions,
                truncated_at: None,
                end: path.horizon,
            }
        }
    }
}

/// Piecewise-linear path as `(t, x)` nodes, every segment climbing at the
/// common drift rate; jumps are consecutive nodes sharing a time, pre value
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub nodes: Vec<(f64, f64)>,
}

impl Polyline {
    /// Suffix minimum of node values; index `i` covers nodes `i..`.
    pub fn future_min(&self) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; self.nodes.len()];
        let mut m = f64::INFINITY;
        for (i, &(_, x)) in self.nodes.iter().enumerate().rev() {
            m = if x < m { x } else { m };
            out[i] = m;
        }
        out
    }

    /// `min_{s ≥ t}` of the path, `t` within the covered range. Segments
    /// climb, so suffix node values already carry every local minimum except
    /// the evaluation point itself.
    pub fn future_min_from(&self, t: f64, value_at_t: f64) -> f64 {
        let fm = self.future_min();
        match self.nodes.iter().position(|&(ti, _)| ti >= t) {
            Some(i) => value_at_t.min(fm[i]),
            None => value_at_t,
        }
    }
}

/// Excursion-reversed path. Contact-era nodes are copied from the source
/// path; each excursion contributes its reflected profile reversed in time
/// on top of the maximum at its endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedPath {
    pub drift: f64,
    pub line: Polyline,
    /// Relocated jumps `(t, size)`, signs preserved.
    pub jumps: Vec<(f64, f64)>,
    pub truncated_at: Option<f64>,
    pub end: f64,
}

impl TransformedPath {
    /// Value at `t` from the owning segment's start node, exact on nodes.
    pub fn value_at(&self, t: f64) -> f64 {
        let nodes = &self.line.nodes;
        let mut idx = None;
        for (i, &(ti, _)) in nodes.iter().enumerate() {
            if ti <= t {
                idx = Some(i);
            } else {
                break;
            }
        }
        match idx {
            Some(i) => {
                let (ti, xi) = nodes[i];
                xi + self.drift * (t - ti)
            }
            None => 0.0,
        }
    }

    /// Event rows in the shared dump format; the scalar jump occupies the
    /// second coordinate column.
    pub fn to_event_csv(&self, path_id: u64) -> String {
        let mut out = String::new();
        for &(t, dx) in &self.jumps {
            out.push_str(&crate::path_engine::event_csv_row(path_id, t, 0.0, dx));
        }
        out
    }

    /// Maximal intervals where the path sits at its future minimum, as
    /// closed hulls. Computed from the nodes alone.
    pub fn contact_hulls(&self) -> Vec<(f64, f64)> {
        let nodes = &self.line.nodes;
        let fm = self.line.future_min();
        let n = nodes.len();
        let at_min =
            |i: usize| -> bool { i + 1 >= n || nodes[i].1 <= fm[i + 1] };
        let mut hulls: Vec<(f64, f64)> = Vec::new();
        let mut run: Option<(f64, f64)> = None;
        for i in 0..n {
            if at_min(i) {
                run = match run {
                    Some((s, _)) => Some((s, nodes[i].0)),
                    None => Some((nodes[i].0, nodes[i].0)),
                };
            } else if let Some(h) = run.take() {
                hulls.push(h);
            }
        }
        if let Some(h) = run {
            hulls.push(h);
        }
        hulls
    }
}

pub fn tanaka_transform(path: &ScalarPath) -> TransformedPath {
    let dec = decompose(path);
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let push = |nodes: &mut Vec<(f64, f64)>, node: (f64, f64)| {
        if nodes.last() != Some(&node) {
            nodes.push(node);
        }
    };
    for (i, era) in dec.contacts.iter().enumerate() {
        for &node in &era.nodes {
            push(&mut nodes, node);
        }
        if let Some(exc) = dec.excursions.get(i) {
            let pivot = exc.start + exc.end;
            for &(s, r) in exc.reflected.iter().rev() {
                // Boundary nodes land exactly on the excursion endpoints;
                // pivot - s would wobble them by an ulp.
                let tau = if s == exc.end {
                    exc.start
                } else if s == exc.start {
                    exc.end
                } else {
                    pivot - s
                };
                push(&mut nodes, (tau, exc.end_max + r));
            }
        }
    }
    let mut jumps = Vec::new();
    for w in nodes.windows(2) {
        if w[0].0 == w[1].0 {
            jumps.push((w[1].0, w[1].1 - w[0].1));
        }
    }
    TransformedPath {
        drift: path.drift,
        line: Polyline { nodes },
        jumps,
        truncated_at: dec.truncated_at,
        end: dec.end,
    }
}

/// First crossing of a nonincreasing curve, with the crossing mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupCreepOutcome {
    /// Continuous contact; `at_supremum` iff it happened inside a contact
    /// era, so the path met the curve at its own running maximum.
    Creep { t: f64, x: f64, at_supremum: bool },
    JumpOver { t: f64, x: f64 },
    /// No crossing on the decomposed part of the path.
    Horizon,
}

/// Last time at or below a nonincreasing curve, with the future-infimum flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LastPassage {
    At { t: f64, x: f64, at_future_infimum: bool },
    /// Still at or below the curve when the path ends: the true last passage
    /// lies beyond what was observed.
    Indeterminate,
}

fn require_nonincreasing(curve: &CurveSpec) -> Result<(), String> {
    match curve.direction() {
        Direction::NonIncreasing | Direction::Constant => Ok(()),
        Direction::NonDecreasing => Err("curve must be nonincreasing".into()),
    }
}

/// Scan the decomposition in order for the first segment contact or jump
/// crossing of `curve`. Climbing segments against a nonincreasing curve make
/// the gap monotone, so bracketed bisection per segment is exact.
pub fn supremum_creep(path: &ScalarPath, curve: &CurveSpec) -> Result<SupCreepOutcome, String> {
    require_nonincreasing(curve)?;
    let dec = decompose(path);
    for (i, era) in dec.contacts.iter().enumerate() {
        // An era after a jump-ended excursion opens at the jump's landing
        // point; landing above the curve is a jump crossing.
        let (t0, x0) = era.nodes[0];
        if i > 0 && x0 - curve.eval(t0) > 0.0 {
            return Ok(SupCreepOutcome::JumpOver { t: t0, x: x0 });
        }
        if let Some(out) = scan_nodes(&era.nodes, path.drift, curve, true) {
            return Ok(out);
        }
        if let Some(exc) = dec.excursions.get(i) {
            let xs: Vec<(f64, f64)> =
                exc.reflected.iter().map(|&(s, r)| (s, exc.base - r)).collect();
            if let Some(out) = scan_nodes(&xs, path.drift, curve, false) {
                return Ok(out);
            }
        }
    }
    Ok(SupCreepOutcome::Horizon)
}

fn scan_nodes(
    nodes: &[(f64, f64)],
    drift: f64,
    curve: &CurveSpec,
    at_supremum: bool,
) -> Option<SupCreepOutcome> {
    for w in nodes.windows(2) {
        let (t0, x0) = w[0];
        let (t1, x1) = w[1];
        if t0 == t1 {
            // Jump pair: the pre side stayed below the curve or the segment
            // scan would have returned already.
            if x1 - curve.eval(t1) > 0.0 {
                return Some(SupCreepOutcome::JumpOver { t: t1, x: x1 });
            }
            continue;
        }
        let g = |t: f64| x0 + drift * (t - t0) - curve.eval(t);
        if g(t1) >= 0.0 {
            let t = bisect_up(&g, t0, t1);
            return Some(SupCreepOutcome::Creep {
                t,
                x: x0 + drift * (t - t0),
                at_supremum,
            });
        }
    }
    None
}

/// Last time the transformed path sits at or below `curve`, scanning
/// segments from the end. The crossing segment and bracket match the
/// forward scan bitwise when both land in the same contact era.
pub fn last_passage_creep(w: &TransformedPath, curve: &CurveSpec) -> Result<LastPassage, String> {
    require_nonincreasing(curve)?;
    let nodes = &w.line.nodes;
    let n = nodes.len();
    if n == 0 {
        return Ok(LastPassage::Indeterminate);
    }
    let fm = w.line.future_min();
    let (t_end, x_end) = nodes[n - 1];
    if x_end - curve.eval(t_end) <= 0.0 {
        return Ok(LastPassage::Indeterminate);
    }
    for i in (0..n - 1).rev() {
        let (t0, x0) = nodes[i];
        let (t1, _) = nodes[i + 1];
        if t0 == t1 {
            continue;
        }
        let g = |t: f64| x0 + w.drift * (t - t0) - curve.eval(t);
        if g(t0) > 0.0 {
            continue;
        }
        let (t, x) = if g(t1) >= 0.0 {
            let t = bisect_up(&g, t0, t1);
            (t, x0 + w.drift * (t - t0))
        } else {
            // Segment ends below the curve yet everything later is above:
            // the supremum is the segment's right limit.
            (t1, x0 + w.drift * (t1 - t0))
        };
        let at_future_infimum = x <= fm[i + 1];
        return Ok(LastPassage::At { t, x, at_future_infimum });
    }
    let at_future_infimum = nodes[0].1 <= fm.get(1).copied().unwrap_or(f64::INFINITY);
    Ok(LastPassage::At { t: nodes[0].0, x: nodes[0].1, at_future_infimum })
}
