//! Path sampling for the process specs.
//!
//! Randomness is organised so that results never depend on scheduling: path
//! `k` under master seed `m` owns four counter-mode streams derived from
//! `(m, k)` alone, one per draw channel. Any worker can simulate any path
//! and byte-identical output follows from merging per-path results in index
//! order.
//!
//! All samplers are exact for the truncated laws they target: truncated
//! stable jumps by tail inversion, gamma jumps by rejection with acceptance
//! probability `eps/x`, tempered ladder times by thinning. Nothing below the
//! truncation floor is ever folded into the drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::process_model::{
    BivariateSubordinatorSpec, Coupling, JumpLaw, JumpSizeDist, OuSpec, TwoSidedStableLaw,
};

/// Draw channels per path. Separating channels keeps the consumption order
/// of one flow from perturbing another when parameters change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Kill time and other one-off path-level draws.
    Lifetime = 0,
    /// First coordinate's jump flow (or the single flow when only one exists).
    FlowY = 1,
    /// Second coordinate's jump flow.
    FlowZ = 2,
    /// Grid increments and anything else.
    Aux = 3,
}

/// Deterministic mapping `(master, path, channel) -> rng`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub master: u64,
}

impl SeedPolicy {
    pub fn new(master: u64) -> Self {
        SeedPolicy { master }
    }

    pub fn rng(&self, path: u64, channel: Channel) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(path * 4 + channel as u64);
        rng
    }
}

/// `Exp(rate)` by inversion; `rate == 0` gives `∞`.
pub fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate == 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}

/// Size of a truncated stable jump: inversion of `P(J > x) = (eps/x)^alpha`.
pub fn stable_jump_sample(rng: &mut ChaCha8Rng, alpha: f64, eps: f64) -> f64 {
    let u: f64 = rng.random();
    eps * (1.0 - u).powf(-1.0 / alpha)
}

/// Size of a truncated gamma jump, exact rejection: propose `eps + Exp(rate)`
/// and accept with probability `eps/x`.
pub fn gamma_jump_sample(rng: &mut ChaCha8Rng, rate: f64, eps: f64) -> f64 {
    loop {
        let x = eps + exp_sample(rng, rate);
        let u: f64 = rng.random();
        if u * x < eps {
            return x;
        }
    }
}

pub fn jump_size_sample(dist: &JumpSizeDist, rng: &mut ChaCha8Rng) -> f64 {
    match *dist {
        JumpSizeDist::Exponential { rate } => exp_sample(rng, rate),
        JumpSizeDist::Uniform { lo, hi } => {
            let u: f64 = rng.random();
            lo + u * (hi - lo)
        }
        JumpSizeDist::Constant { value } => value,
    }
}

/// Standard normal pairs via Box-Muller with a one-value cache.
#[derive(Debug)]
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn new(rng: ChaCha8Rng) -> Self {
        NormalSource { rng, spare: None }
    }

    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = self.rng.random();
        let u2: f64 = self.rng.random();
        // 1 - u1 lies in (0, 1], so the log is finite.
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// One jump of a bivariate path. Exactly one of `dy`, `dz` is nonzero for
/// the named couplings; custom couplings may move both coordinates at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub dy: f64,
    pub dz: f64,
}

/// Single-coordinate jump flow: arrival gaps plus sizes on one rng.
#[derive(Debug)]
struct Flow {
    rng: ChaCha8Rng,
    law: JumpLaw,
    rate: f64,
    next_t: f64,
}

impl Flow {
    fn new(law: JumpLaw, mut rng: ChaCha8Rng) -> Self {
        let rate = law.truncated_rate();
        let next_t = exp_sample(&mut rng, rate);
        Flow {
            rng,
            law,
            rate,
            next_t,
        }
    }

    /// Time and size of the pending jump; advances to the one after.
    fn pop(&mut self) -> (f64, f64) {
        let t = self.next_t;
        let size = match &self.law {
            JumpLaw::None => 0.0,
            JumpLaw::CompoundPoisson { sizes, .. } => jump_size_sample(sizes, &mut self.rng),
            JumpLaw::Stable { alpha, eps, .. } => stable_jump_sample(&mut self.rng, *alpha, *eps),
            JumpLaw::Gamma { rate, eps, .. } => gamma_jump_sample(&mut self.rng, *rate, *eps),
            JumpLaw::TwoSidedStable(law) => two_sided_sample(&mut self.rng, law),
        };
        self.next_t = t + exp_sample(&mut self.rng, self.rate);
        (t, size)
    }
}

fn two_sided_sample(rng: &mut ChaCha8Rng, law: &TwoSidedStableLaw) -> f64 {
    let u: f64 = rng.random();
    let magnitude = stable_jump_sample(rng, law.alpha, law.eps);
    if u < law.positive_fraction() {
        magnitude
    } else {
        -magnitude
    }
}

/// Lazy merged event stream of one bivariate path. Pull events until a
/// decision; nothing past the decision is ever sampled, so cost scales with
/// the detector's stopping time rather than the horizon.
#[derive(Debug)]
pub struct BivariateStream {
    kind: StreamKind,
    lifetime: f64,
    drift_y: f64,
    drift_z: f64,
}

#[derive(Debug)]
enum StreamKind {
    Merged { y: Flow, z: Flow },
    ZOnly { z: Flow },
    Ladder(LadderFlow),
    Custom(CustomFlow),
}

/// Ladder-time jumps of a (possibly drifted) Brownian ladder pair: proposals
/// from the driftless `√λ` law thinned by `e^{-mu²J/2}`.
#[derive(Debug)]
struct LadderFlow {
    rng: ChaCha8Rng,
    proposal_rate: f64,
    theta: f64,
    eps: f64,
    next_t: f64,
}

impl LadderFlow {
    fn new(mu: f64, eps: f64, mut rng: ChaCha8Rng) -> Self {
        let proposal_rate = JumpLaw::Stable {
            alpha: 0.5,
            scale: 1.0,
            eps,
        }
        .truncated_rate();
        let next_t = exp_sample(&mut rng, proposal_rate);
        LadderFlow {
            rng,
            proposal_rate,
            theta: 0.5 * mu * mu,
            eps,
            next_t,
        }
    }

    fn pop(&mut self) -> (f64, f64) {
        loop {
            let t = self.next_t;
            let j = stable_jump_sample(&mut self.rng, 0.5, self.eps);
            self.next_t = t + exp_sample(&mut self.rng, self.proposal_rate);
            if self.theta == 0.0 {
                return (t, j);
            }
            let u: f64 = self.rng.random();
            if u < (-self.theta * j).exp() {
                return (t, j);
            }
            // Rejected proposals still consume clock time; thinning a
            // Poisson flow leaves a Poisson flow with the tempered density.
        }
    }
}

struct CustomFlow {
    rng: ChaCha8Rng,
    law: std::sync::Arc<dyn crate::process_model::JointJumpLaw>,
    next_t: f64,
}

impl std::fmt::Debug for CustomFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomFlow")
            .field("label", &self.law.label())
            .field("next_t", &self.next_t)
            .finish()
    }
}

impl BivariateStream {
    pub fn new(spec: &BivariateSubordinatorSpec, policy: SeedPolicy, path: u64) -> Self {
        let (drift_y, drift_z) = spec.drifts();
        let kill_rate = spec.kill_rate();
        let lifetime = if kill_rate > 0.0 {
            exp_sample(&mut policy.rng(path, Channel::Lifetime), kill_rate)
        } else {
            f64::INFINITY
        };
        let kind = match &spec.coupling {
            Coupling::Independent { y, z } => StreamKind::Merged {
                y: Flow::new(y.jumps.clone(), policy.rng(path, Channel::FlowY)),
                z: Flow::new(z.jumps.clone(), policy.rng(path, Channel::FlowZ)),
            },
            Coupling::TimeAndProcess { z } => StreamKind::ZOnly {
                z: Flow::new(z.jumps.clone(), policy.rng(path, Channel::FlowZ)),
            },
            Coupling::BmLadder { eps } => {
                StreamKind::Ladder(LadderFlow::new(0.0, *eps, policy.rng(path, Channel::FlowY)))
            }
            Coupling::BmLadderDrift { mu, eps } => {
                StreamKind::Ladder(LadderFlow::new(*mu, *eps, policy.rng(path, Channel::FlowY)))
            }
            Coupling::Custom(law) => {
                let mut rng = policy.rng(path, Channel::FlowZ);
                let next_t = exp_sample(&mut rng, law.rate());
                StreamKind::Custom(CustomFlow {
                    rng,
                    law: law.clone(),
                    next_t,
                })
            }
        };
        BivariateStream {
            kind,
            lifetime,
            drift_y,
            drift_z,
        }
    }

    pub fn drifts(&self) -> (f64, f64) {
        (self.drift_y, self.drift_z)
    }

    /// Kill time of this path (`∞` when conservative).
    pub fn lifetime(&self) -> f64 {
        self.lifetime
    }

    /// Next jump strictly after the previous one; `t` is `∞` when the path
    /// has no further jumps. Events at or past the lifetime are still
    /// produced; the caller decides what the kill time interrupts.
    pub fn next_event(&mut self) -> JumpEvent {
        match &mut self.kind {
            StreamKind::Merged { y, z } => {
                if y.next_t <= z.next_t {
                    if y.next_t.is_infinite() {
                        return JumpEvent {
                            t: f64::INFINITY,
                            dy: 0.0,
                            dz: 0.0,
                        };
                    }
                    let (t, dy) = y.pop();
                    JumpEvent { t, dy, dz: 0.0 }
                } else {
                    let (t, dz) = z.pop();
                    JumpEvent { t, dy: 0.0, dz }
                }
            }
            StreamKind::ZOnly { z } => {
                if z.next_t.is_infinite() {
                    return JumpEvent {
                        t: f64::INFINITY,
                        dy: 0.0,
                        dz: 0.0,
                    };
                }
                let (t, dz) = z.pop();
                JumpEvent { t, dy: 0.0, dz }
            }
            StreamKind::Ladder(flow) => {
                let (t, dy) = flow.pop();
                JumpEvent { t, dy, dz: 0.0 }
            }
            StreamKind::Custom(flow) => {
                if flow.next_t.is_infinite() {
                    return JumpEvent {
                        t: f64::INFINITY,
                        dy: 0.0,
                        dz: 0.0,
                    };
                }
                let t = flow.next_t;
                let (dy, dz) = flow.law.sample(&mut flow.rng);
                flow.next_t = t + exp_sample(&mut flow.rng, flow.law.rate());
                JumpEvent { t, dy, dz }
            }
        }
    }
}

/// Materialised bivariate path up to `horizon` (or the kill time, whichever
/// is first). `killed_at` is set when the kill time precedes the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    pub drift_y: f64,
    pub drift_z: f64,
    pub horizon: f64,
    pub killed_at: Option<f64>,
    pub events: Vec<JumpEvent>,
}

/// Header for the event dump shared by every path exporter.
pub const EVENT_CSV_HEADER: &str = "path_id,t,dy,dz";

/// One dump row. The default float formatting round-trips, so re-reading a
/// dump reproduces the events bit for bit.
pub fn event_csv_row(path_id: u64, t: f64, dy: f64, dz: f64) -> String {
    format!("{path_id},{t},{dy},{dz}\n")
}

impl JumpPath {
    /// Event rows in the dump format, without the header.
    pub fn to_event_csv(&self, path_id: u64) -> String {
        let mut out = String::new();
        for ev in &self.events {
            out.push_str(&event_csv_row(path_id, ev.t, ev.dy, ev.dz));
        }
        out
    }

    /// State `(Y_t, Z_t)` at `t`, counting events with time `<= t`.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let mut y = self.drift_y * t;
        let mut z = self.drift_z * t;
        for ev in &self.events {
            if ev.t > t {
                break;
            }
            y += ev.dy;
            z += ev.dz;
        }
        (y, z)
    }

    /// End of the observable window: kill time if present, else horizon.
    pub fn end(&self) -> f64 {
        self.killed_at.unwrap_or(self.horizon)
    }
}

pub fn sample_bivariate_path(
    spec: &BivariateSubordinatorSpec,
    policy: SeedPolicy,
    path: u64,
    horizon: f64,
) -> JumpPath {
    let mut stream = BivariateStream::new(spec, policy, path);
    let end = horizon.min(stream.lifetime());
    let mut events = Vec::new();
    loop {
        let ev = stream.next_event();
        if ev.t > end {
            break;
        }
        events.push(ev);
    }
    JumpPath {
        drift_y: stream.drift_y,
        drift_z: stream.drift_z,
        horizon,
        killed_at: (stream.lifetime() <= horizon).then_some(stream.lifetime()),
        events,
    }
}

/// Brownian values on a regular grid, `values[k] = W(k·dt)`, `values[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub dt: f64,
    pub values: Vec<f64>,
}

/// Streaming Brownian grid walk; `step` returns successive `W((k+1)·dt)`.
#[derive(Debug)]
pub struct BmGridStream {
    normals: NormalSource,
    sqrt_dt: f64,
    value: f64,
}

impl BmGridStream {
    pub fn new(dt: f64, policy: SeedPolicy, path: u64) -> Self {
        BmGridStream {
            normals: NormalSource::new(policy.rng(path, Channel::Aux)),
            sqrt_dt: dt.sqrt(),
            value: 0.0,
        }
    }

    pub fn step(&mut self) -> f64 {
        self.value += self.sqrt_dt * self.normals.next();
        self.value
    }
}

pub fn sample_bm_grid(dt: f64, steps: usize, policy: SeedPolicy, path: u64) -> GridPath {
    let mut stream = BmGridStream::new(dt, policy, path);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    for _ in 0..steps {
        values.push(stream.step());
    }
    GridPath { dt, values }
}

/// Driving-noise skeleton of the mean-reverting process on `[0, horizon]`:
/// signed jump sizes of the noise on the real-time clock. Between events the
/// state decays exponentially; the whole path is this finite list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuSkeleton {
    pub start: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub horizon: f64,
    /// `(t_i, dx_i)` sorted by time.
    pub events: Vec<(f64, f64)>,
}

pub fn sample_ou_skeleton(spec: &OuSpec, policy: SeedPolicy, path: u64, horizon: f64) -> OuSkeleton {
    let mut rng = policy.rng(path, Channel::FlowY);
    let rate = spec.noise.truncated_rate();
    let mut events = Vec::new();
    let mut t = exp_sample(&mut rng, rate);
    while t <= horizon {
        events.push((t, two_sided_sample(&mut rng, &spec.noise)));
        t += exp_sample(&mut rng, rate);
    }
    OuSkeleton {
        start: spec.start,
        gamma: spec.gamma,
        alpha: spec.noise.alpha,
        horizon,
        events,
    }
}

impl OuSkeleton {
    /// State just before the `i`-th event (decayed from the previous state).
    /// With `i = events.len()` this is the state at the horizon.
    pub fn state_before(&self, i: usize) -> f64 {
        let mut z = self.start;
        let mut prev_t = 0.0;
        for (k, &(t, dx)) in self.events.iter().enumerate() {
            if k == i {
                return z * (-self.gamma * (t - prev_t)).exp();
            }
            z = z * (-self.gamma * (t - prev_t)).exp() + dx;
            prev_t = t;
        }
        z * (-self.gamma * (self.horizon - prev_t)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::SubordinatorSpec;
    use approx::assert_relative_eq;

    fn policy() -> SeedPolicy {
        SeedPolicy::new(0x5eed_cafe)
    }

    #[test]
    fn streams_are_reproducible() {
        let spec = BivariateSubordinatorSpec::independent(
            SubordinatorSpec::gamma(1.0, 1.0, 1e-3, 0.5),
            SubordinatorSpec {
                drift: 0.0,
                kill_rate: 0.0,
                jumps: JumpLaw::CompoundPoisson {
                    rate: 2.0,
                    sizes: JumpSizeDist::Exponential { rate: 1.0 },
                },
            },
        );
        let a = sample_bivariate_path(&spec, policy(), 7, 5.0);
        let b = sample_bivariate_path(&spec, policy(), 7, 5.0);
        assert_eq!(a, b);
        let c = sample_bivariate_path(&spec, policy(), 8, 5.0);
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn materialised_path_matches_stream_prefix() {
        let spec =
            BivariateSubordinatorSpec::time_and_process(SubordinatorSpec::gamma(1.0, 1.0, 1e-2, 0.5));
        let path = sample_bivariate_path(&spec, policy(), 3, 4.0);
        let mut stream = BivariateStream::new(&spec, policy(), 3);
        for ev in &path.events {
            assert_eq!(*ev, stream.next_event());
        }
        assert!(stream.next_event().t > 4.0);
    }

    #[test]
    fn stable_jumps_respect_floor_and_tail() {
        let mut rng = policy().rng(0, Channel::FlowY);
        let eps = 1e-4;
        let n = 200_000;
        let mut above_4eps = 0u32;
        for _ in 0..n {
            let j = stable_jump_sample(&mut rng, 0.5, eps);
            assert!(j >= eps);
            if j > 4.0 * eps {
                above_4eps += 1;
            }
        }
        // P(J > 4 eps) = (1/4)^0.5 = 0.5.
        let frac = above_4eps as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25_f64 / n as f64).sqrt(), "{frac}");
    }

    #[test]
    fn gamma_rejection_matches_tail_function() {
        // Empirical P(J > x) against E1(rate x)/E1(rate eps) at a few probes.
        let mut rng = policy().rng(1, Channel::FlowZ);
        let (rate, eps) = (1.0, 1e-2);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| gamma_jump_sample(&mut rng, rate, eps)).collect();
        assert!(draws.iter().all(|&x| x >= eps));
        let total = crate::special::exp_integral_e1(rate * eps);
        for x in [0.05, 0.2, 1.0] {
            let expect = crate::special::exp_integral_e1(rate * x) / total;
            let got = draws.iter().filter(|&&j| j > x).count() as f64 / n as f64;
            let se = (expect * (1.0 - expect) / n as f64).sqrt();
            assert!((got - expect).abs() < 4.0 * se, "x={x}: {got} vs {expect}");
        }
    }

    #[test]
    fn ladder_thinning_reduces_rate_by_tempered_fraction() {
        // Accepted-rate ratio tempered/untempered = tempered tail / plain tail.
        let eps = 1e-2;
        let mu = 1.0_f64;
        let horizon = 200.0;
        let mut tempered = 0usize;
        let mut plain = 0usize;
        for path in 0..200 {
            let spec = BivariateSubordinatorSpec::bm_ladder_drift(mu, eps);
            tempered += sample_bivariate_path(&spec, policy(), path, horizon).events.len();
            let spec = BivariateSubordinatorSpec::bm_ladder(eps);
            plain += sample_bivariate_path(&spec, policy(), 10_000 + path, horizon).events.len();
        }
        let expect = crate::special::tempered_half_tail(eps, 0.5 * mu * mu)
            / crate::special::tempered_half_tail(eps, 0.0);
        let got = tempered as f64 / plain as f64;
        assert!((got / expect - 1.0).abs() < 0.05, "{got} vs {expect}");
    }

    #[test]
    fn kill_time_is_exponential() {
        let mut spec = SubordinatorSpec::pure_drift(1.0);
        spec.kill_rate = 2.0;
        let spec = BivariateSubordinatorSpec::time_and_process(spec);
        let n = 20_000;
        let mean = (0..n)
            .map(|k| BivariateStream::new(&spec, policy(), k).lifetime())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn grid_walk_unit_variance() {
        let n = 4_000;
        let dt = 1e-3;
        let steps = 1_000;
        let mut sum_sq = 0.0;
        for k in 0..n {
            let path = sample_bm_grid(dt, steps, policy(), k);
            assert_eq!(path.values.len(), steps + 1);
            let w1 = *path.values.last().unwrap();
            sum_sq += w1 * w1;
        }
        let var = sum_sq / n as f64;
        // Var of the sample variance of N(0,1) is 2/n.
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "{var}");
    }

    #[test]
    fn ou_skeleton_balances_signs_and_decays() {
        let spec = OuSpec {
            gamma: 1.0,
            start: -1.0,
            noise: TwoSidedStableLaw {
                alpha: 0.75,
                scale_pos: 1.0,
                scale_neg: 1.0,
                eps: 1e-2,
            },
        };
        let mut pos = 0usize;
        let mut total = 0usize;
        for k in 0..100 {
            let skel = sample_ou_skeleton(&spec, policy(), k, 10.0);
            pos += skel.events.iter().filter(|(_, dx)| *dx > 0.0).count();
            total += skel.events.len();
            // State before event 0 is pure decay of the start value.
            if let Some(&(t0, _)) = skel.events.first() {
                assert_relative_eq!(skel.state_before(0), -(-t0).exp_m1() - 1.0, epsilon = 1e-12);
            }
        }
        let frac = pos as f64 / total as f64;
        assert!((frac - 0.5).abs() < 4.0 * (0.25 / total as f64).sqrt(), "{frac}");
        // Rate sanity: mean event count near rate * horizon.
        let rate = spec.noise.truncated_rate();
        let mean = total as f64 / 100.0;
        assert!((mean / (rate * 10.0) - 1.0).abs() < 0.05, "{mean} vs {}", rate * 10.0);
    }

    #[test]
    fn state_at_accumulates_drift_and_jumps() {
        let path = JumpPath {
            drift_y: 1.0,
            drift_z: 0.5,
            horizon: 10.0,
            killed_at: None,
            events: vec![
                JumpEvent { t: 1.0, dy: 0.0, dz: 2.0 },
                JumpEvent { t: 3.0, dy: 4.0, dz: 0.0 },
            ],
        };
        assert_eq!(path.state_at(0.5), (0.5, 0.25));
        assert_eq!(path.state_at(2.0), (2.0, 3.0));
        assert_eq!(path.state_at(3.0), (7.0, 3.5));
    }
}
