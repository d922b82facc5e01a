//! First-passage detection and creep classification.
//!
//! The walker tracks `g(t) = Z_t - f(Y_t)` along a piecewise-linear segment
//! skeleton. Between jumps the drift makes `g` either monotone (curve
//! non-increasing) or concave (curve non-decreasing and convex), so the
//! first continuous contact is found by bracketed bisection with no grid and
//! no step-size tuning; jump crossings are classified from the exact pre-
//! and post-jump gaps. Jump signs are unrestricted: the same walker serves
//! subordinator pairs and the driftless two-sided noise of the
//! mean-reverting routes.

use serde::{Deserialize, Serialize};

use crate::path_engine::{BivariateStream, JumpEvent, JumpPath, SeedPolicy};
use crate::process_model::{CurveKind, CurveSpec, Direction, OuSpec};

/// Absolute time resolution of the contact bisection.
pub const TOL_ROOT: f64 = 1e-12;
/// Relative gap below which a post-jump state counts as exactly on the graph.
pub const TOL_GRAPH: f64 = 1e-9;

/// How (or whether) a path first crossed the curve. `y` and `z` are the
/// coordinates at the decision; for the mean-reverting walkers `y` repeats
/// the time and `z` is the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CrossingOutcome {
    /// Continuous contact with the graph.
    Creep { t: f64, y: f64, z: f64 },
    /// A jump took the path strictly across the curve.
    JumpOver { t: f64, y: f64, z: f64 },
    /// A jump landed on the graph within `TOL_GRAPH`.
    JumpOntoGraph { t: f64, y: f64, z: f64 },
    /// The path was on the graph within `TOL_GRAPH` just before a jump
    /// carried it across.
    JumpFromGraph { t: f64, y: f64, z: f64 },
    /// The path was killed before any crossing.
    Killed { t: f64 },
    /// No decision by the simulation horizon.
    Horizon,
}

impl CrossingOutcome {
    pub fn is_creep(&self) -> bool {
        matches!(self, CrossingOutcome::Creep { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            CrossingOutcome::Creep { .. } => "creep",
            CrossingOutcome::JumpOver { .. } => "jump_over",
            CrossingOutcome::JumpOntoGraph { .. } => "jump_onto_graph",
            CrossingOutcome::JumpFromGraph { .. } => "jump_from_graph",
            CrossingOutcome::Killed { .. } => "killed",
            CrossingOutcome::Horizon => "horizon",
        }
    }

    /// Decision time where one exists.
    pub fn time(&self) -> Option<f64> {
        match self {
            CrossingOutcome::Creep { t, .. }
            | CrossingOutcome::JumpOver { t, .. }
            | CrossingOutcome::JumpOntoGraph { t, .. }
            | CrossingOutcome::JumpFromGraph { t, .. }
            | CrossingOutcome::Killed { t } => Some(*t),
            CrossingOutcome::Horizon => None,
        }
    }
}

fn gap(curve: &CurveSpec, y: f64, z: f64) -> f64 {
    z - curve.eval(y)
}

fn on_graph(curve: &CurveSpec, y: f64, z: f64) -> bool {
    let f = curve.eval(y);
    // An infinite curve value (power curves at 0+) is unreachable by a
    // jump, and the relative window would degenerate to `inf <= inf`.
    f.is_finite() && (z - f).abs() <= TOL_GRAPH * f.abs().max(z.abs()).max(1.0)
}

/// First contact of the drift segment starting at `(t0, y0, z0)` with the
/// curve, restricted to `(t0, t1]`. `g(t0) < 0` is the caller's invariant.
fn segment_contact(
    curve: &CurveSpec,
    drift_y: f64,
    drift_z: f64,
    t0: f64,
    y0: f64,
    z0: f64,
    t1: f64,
) -> Option<f64> {
    let g = |t: f64| z0 + drift_z * (t - t0) - curve.eval(y0 + drift_y * (t - t0));
    match curve.direction() {
        // Non-increasing curve, non-decreasing coordinates: g is monotone
        // non-decreasing along the segment, so the end value decides.
        Direction::NonIncreasing | Direction::Constant => {
            if g(t1) < 0.0 {
                None
            } else {
                Some(bisect_up(&g, t0, t1))
            }
        }
        Direction::NonDecreasing => {
            if let CurveKind::Tabulated { ts, .. } = &curve.kind {
                // Piecewise-linear curve: g is linear between knot crossings.
                let mut lo = t0;
                let mut knot_times: Vec<f64> = Vec::new();
                if drift_y > 0.0 {
                    for &knot in ts.iter() {
                        let t = t0 + (knot - y0) / drift_y;
                        if t > t0 && t < t1 {
                            knot_times.push(t);
                        }
                    }
                }
                knot_times.push(t1);
                for hi in knot_times {
                    if g(hi) >= 0.0 {
                        return Some(bisect_up(&g, lo, hi));
                    }
                    lo = hi;
                }
                None
            } else {
                // Convex smooth curve: g is concave, so an interior maximum
                // (if any) sits where g' changes sign.
                concave_first_root(curve, drift_y, drift_z, t0, y0, t1, &g)
            }
        }
    }
}

fn concave_first_root(
    curve: &CurveSpec,
    drift_y: f64,
    drift_z: f64,
    t0: f64,
    y0: f64,
    t1: f64,
    g: &impl Fn(f64) -> f64,
) -> Option<f64> {
    if g(t1) >= 0.0 {
        // Concavity rules out a dip back below zero before t1, so the set
        // {g < 0} is an initial interval and plain bisection is exact.
        return Some(bisect_up(g, t0, t1));
    }
    let dg = |t: f64| {
        let fp = curve
            .derivative(y0 + drift_y * (t - t0))
            .expect("smooth curve kinds have derivatives");
        drift_z - fp * drift_y
    };
    if dg(t0) <= 0.0 || dg(t1) >= 0.0 {
        // Monotone on the whole segment with g(t1) < 0: no contact.
        return None;
    }
    // Interior maximum: g' is decreasing, bracket its root.
    let (mut lo, mut hi) = (t0, t1);
    while hi - lo > TOL_ROOT * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if dg(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_peak = 0.5 * (lo + hi);
    if g(t_peak) >= 0.0 {
        Some(bisect_up(g, t0, t_peak))
    } else {
        None
    }
}

/// Bisection for the boundary of the initial interval `{g < 0}` given
/// `g(lo) < 0 <= g(hi)`.
pub(crate) fn bisect_up(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > TOL_ROOT * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Walk one path against a monotone curve. `next_event` yields strictly
/// increasing jump times (`t = ∞` once exhausted); `lifetime` truncates the
/// path, `horizon` truncates the experiment.
pub fn first_passage_curve(
    drift_y: f64,
    drift_z: f64,
    lifetime: f64,
    horizon: f64,
    curve: &CurveSpec,
    mut next_event: impl FnMut() -> JumpEvent,
) -> CrossingOutcome {
    let end = horizon.min(lifetime);
    let (mut t, mut y, mut z) = (0.0_f64, 0.0_f64, 0.0_f64);
    if gap(curve, y, z) >= 0.0 {
        // Starting on or above the curve counts as immediate contact.
        return CrossingOutcome::Creep { t: 0.0, y, z };
    }
    loop {
        let ev = next_event();
        let seg_end = ev.t.min(end);
        if seg_end > t {
            if let Some(tc) = segment_contact(curve, drift_y, drift_z, t, y, z, seg_end) {
                return CrossingOutcome::Creep {
                    t: tc,
                    y: y + drift_y * (tc - t),
                    z: z + drift_z * (tc - t),
                };
            }
        }
        if ev.t > end {
            return if lifetime < horizon {
                CrossingOutcome::Killed { t: lifetime }
            } else {
                CrossingOutcome::Horizon
            };
        }
        // Advance the drift to the jump time, then apply the jump.
        y += drift_y * (ev.t - t);
        z += drift_z * (ev.t - t);
        t = ev.t;
        let pre_on_graph = on_graph(curve, y, z);
        y += ev.dy;
        z += ev.dz;
        if on_graph(curve, y, z) {
            return CrossingOutcome::JumpOntoGraph { t, y, z };
        }
        if gap(curve, y, z) > 0.0 {
            return if pre_on_graph {
                CrossingOutcome::JumpFromGraph { t, y, z }
            } else {
                CrossingOutcome::JumpOver { t, y, z }
            };
        }
    }
}

/// Passage of a freshly sampled bivariate path.
pub fn first_passage_stream(
    stream: &mut BivariateStream,
    curve: &CurveSpec,
    horizon: f64,
) -> CrossingOutcome {
    let (dy, dz) = stream.drifts();
    let lifetime = stream.lifetime();
    first_passage_curve(dy, dz, lifetime, horizon, curve, || stream.next_event())
}

/// Passage of a materialised path (replays the recorded events).
pub fn first_passage_path(path: &JumpPath, curve: &CurveSpec) -> CrossingOutcome {
    let mut iter = path.events.iter();
    first_passage_curve(
        path.drift_y,
        path.drift_z,
        path.killed_at.unwrap_or(f64::INFINITY),
        path.horizon,
        curve,
        || {
            iter.next().copied().unwrap_or(JumpEvent {
                t: f64::INFINITY,
                dy: 0.0,
                dz: 0.0,
            })
        },
    )
}

/// Level passage of a single subordinator `S_t = drift·t + jumps`, phrased
/// as the pair `(t, S_t)` against the constant curve at `level`.
pub fn first_passage_level(
    drift: f64,
    lifetime: f64,
    horizon: f64,
    level: f64,
    next_jump: impl FnMut() -> JumpEvent,
) -> CrossingOutcome {
    let curve = CurveSpec::new(CurveKind::Constant { level }).expect("positive level");
    first_passage_curve(1.0, drift, lifetime, horizon, &curve, next_jump)
}

/// Outcome of the gridded supremum walk: did the running maximum first touch
/// the curve while the walker itself was at the maximum?
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GridSupOutcome {
    CreepAtSup { t: f64 },
    ContactOffSup { t: f64 },
    Horizon,
}

/// Euler-free gridded check of creep at the supremum for a standard
/// Brownian walker: first grid time where the running maximum reaches the
/// curve, classified by whether the walker sits within `window` of its
/// maximum there. `window` of a few `√dt` separates "at the maximum" from
/// "maximum frozen earlier" up to discretisation noise.
pub fn supremum_creep_bm_grid(
    curve: &CurveSpec,
    dt: f64,
    horizon: f64,
    window: f64,
    policy: SeedPolicy,
    path: u64,
) -> GridSupOutcome {
    let mut stream = crate::path_engine::BmGridStream::new(dt, policy, path);
    let steps = (horizon / dt).ceil() as usize;
    let mut max = 0.0_f64;
    for k in 1..=steps {
        let w = stream.step();
        if w > max {
            max = w;
        }
        let t = k as f64 * dt;
        if max >= curve.eval(t) {
            return if max - w <= window {
                GridSupOutcome::CreepAtSup { t }
            } else {
                GridSupOutcome::ContactOffSup { t }
            };
        }
    }
    GridSupOutcome::Horizon
}

/// Setup-time check for the mean-reverting level question. The walkers
/// assume the start lies strictly below the level; a start above it is the
/// mirror problem (negate states and swap the noise scales).
pub fn validate_ou_level(spec: &OuSpec, level: f64) -> Result<(), String> {
    if !level.is_finite() {
        return Err(format!("level must be finite, got {level}"));
    }
    if level == 0.0 {
        return Err("level 0 is the attractor and is never crossed cleanly; \
             pick a nonzero level"
            .into());
    }
    if spec.start == level {
        return Err(format!("start {} already sits on the level", spec.start));
    }
    if spec.start > level {
        return Err(format!(
            "start {} lies above level {}: negate states and swap the noise \
             scales to phrase this as an upward passage",
            spec.start, level
        ));
    }
    Ok(())
}

/// Upward level passage of the mean-reverting process, decided directly on
/// the decay segments: between jumps the state moves monotonically toward 0,
/// so it reaches `level` continuously if and only if `level` lies between
/// the current state and 0.
pub fn ou_first_passage(
    spec: &OuSpec,
    level: f64,
    horizon: f64,
    policy: SeedPolicy,
    path: u64,
) -> CrossingOutcome {
    let mut rng = policy.rng(path, crate::path_engine::Channel::FlowY);
    let rate = spec.noise.truncated_rate();
    let gamma = spec.gamma;
    let mut t = 0.0_f64;
    let mut z = spec.start;
    loop {
        let t_next = t + crate::path_engine::exp_sample(&mut rng, rate);
        let seg_end = t_next.min(horizon);
        // Decay crossing: z e^{-γδ} = level has a root iff the level sits
        // strictly between z and 0.
        if z != 0.0 && level / z > 0.0 && (level / z) < 1.0 {
            let tc = t + (z / level).ln() / gamma;
            if tc <= seg_end {
                return CrossingOutcome::Creep {
                    t: tc,
                    y: tc,
                    z: level,
                };
            }
        }
        if t_next > horizon {
            return CrossingOutcome::Horizon;
        }
        let z_pre = z * (-gamma * (t_next - t)).exp();
        let dx = ou_noise_jump(&mut rng, spec);
        let z_post = z_pre + dx;
        t = t_next;
        z = z_post;
        let scale = z_post.abs().max(level.abs()).max(1.0);
        if (z_post - level).abs() <= TOL_GRAPH * scale {
            return CrossingOutcome::JumpOntoGraph { t, y: t, z: z_post };
        }
        if z_post > level {
            return if (z_pre - level).abs() <= TOL_GRAPH * z_pre.abs().max(level.abs()).max(1.0) {
                CrossingOutcome::JumpFromGraph { t, y: t, z: z_post }
            } else {
                CrossingOutcome::JumpOver { t, y: t, z: z_post }
            };
        }
    }
}

fn ou_noise_jump(rng: &mut rand_chacha::ChaCha8Rng, spec: &OuSpec) -> f64 {
    use rand::Rng;
    let u: f64 = rng.random();
    let magnitude =
        crate::path_engine::stable_jump_sample(rng, spec.noise.alpha, spec.noise.eps);
    if u < spec.noise.positive_fraction() {
        magnitude
    } else {
        -magnitude
    }
}

/// The same level question routed through the curve-crossing walker: on the
/// rescaled clock `s(t) = (e^{αγt} - 1)/(αγ)` the driving noise becomes a
/// driftless process whose first passage over
/// `f(s) = level·(αγs+1)^{1/α} - start` reproduces the level passage
/// exactly, including the truncation (a jump of size `j` at real time `t`
/// maps to a jump of size `j·e^{γt}` at clock `s(t)`).
pub fn ou_first_passage_via_curve(
    spec: &OuSpec,
    level: f64,
    horizon: f64,
    policy: SeedPolicy,
    path: u64,
) -> CrossingOutcome {
    let mut rng = policy.rng(path, crate::path_engine::Channel::FlowY);
    let rate = spec.noise.truncated_rate();
    let gamma = spec.gamma;
    let alpha = spec.noise.alpha;
    let ag = alpha * gamma;
    let curve = CurveSpec::new(CurveKind::MeanReversion {
        level,
        start: spec.start,
        alpha,
        gamma,
    })
    .expect("validated level");
    let clock = |t: f64| (ag * t).exp_m1() / ag;
    let unclock = |s: f64| (ag * s).ln_1p() / ag;
    let horizon_s = clock(horizon);
    let mut t_real = 0.0_f64;
    let outcome = first_passage_curve(1.0, 0.0, f64::INFINITY, horizon_s, &curve, || {
        t_real += crate::path_engine::exp_sample(&mut rng, rate);
        let dx = ou_noise_jump(&mut rng, spec);
        JumpEvent {
            t: clock(t_real),
            dy: 0.0,
            dz: dx * (gamma * t_real).exp(),
        }
    });
    // Map the decision back to the real clock and the original state space:
    // Z_t = e^{-γt}(start + X_s).
    let back = |s: f64, x: f64| {
        let t = unclock(s);
        (t, (-gamma * t).exp() * (spec.start + x))
    };
    match outcome {
        CrossingOutcome::Creep { t: s, z: x, .. } => {
            let (t, z) = back(s, x);
            CrossingOutcome::Creep { t, y: t, z }
        }
        CrossingOutcome::JumpOver { t: s, z: x, .. } => {
            let (t, z) = back(s, x);
            CrossingOutcome::JumpOver { t, y: t, z }
        }
        CrossingOutcome::JumpOntoGraph { t: s, z: x, .. } => {
            let (t, z) = back(s, x);
            CrossingOutcome::JumpOntoGraph { t, y: t, z }
        }
        CrossingOutcome::JumpFromGraph { t: s, z: x, .. } => {
            let (t, z) = back(s, x);
            CrossingOutcome::JumpFromGraph { t, y: t, z }
        }
        CrossingOutcome::Killed { t: s } => CrossingOutcome::Killed { t: unclock(s) },
        CrossingOutcome::Horizon => CrossingOutcome::Horizon,
    }
}
