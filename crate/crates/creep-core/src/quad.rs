//! Adaptive panel quadrature on finite and half-infinite intervals.
//!
//! Each panel is evaluated with a 7-point Gauss / 15-point Kronrod pair; the
//! panel with the largest error estimate is bisected until the summed error
//! estimate meets the requested absolute tolerance. Half-infinite integrals
//! are compactified with `t = a + s/(1-s)` after a numerical check that the
//! transformed integrand actually vanishes toward the far endpoint.
//!
//! All node evaluations are interior, so integrable endpoint singularities
//! (and curves that blow up at 0) never get evaluated at the endpoint itself.
//! Panel results are accumulated in left-to-right interval order, making the
//! result a pure function of the integrand and the options.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Kronrod abscissae on `[-1, 1]` (nonnegative half; the rule is symmetric).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_91,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_82,
];
/// Weights of the embedded 7-point Gauss rule (applied at XGK[1], [3], [5], [7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_38,
];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
    pub panels: usize,
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error(
        "tolerance not met after {panels} panels: value {value:.12e}, error bound {abs_error:.3e}"
    )]
    ToleranceNotMet {
        value: f64,
        abs_error: f64,
        panels: usize,
    },
    #[error("integrand returned a non-finite value at t = {at}")]
    NonFinite { at: f64 },
    #[error("integrand does not decay toward the upper limit: {detail}")]
    NotIntegrable { detail: String },
    #[error("bad interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error && self.a == other.a
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by left endpoint for determinism.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<Panel, QuadError> {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let mut fv = [0.0_f64; 15];
    for (j, &x) in XGK.iter().enumerate() {
        let (lo, hi) = (c - h * x, c + h * x);
        let (flo, fhi) = (f(lo), f(hi));
        if !flo.is_finite() {
            return Err(QuadError::NonFinite { at: lo });
        }
        if !fhi.is_finite() {
            return Err(QuadError::NonFinite { at: hi });
        }
        fv[j] = flo;
        fv[14 - j] = fhi;
    }
    // fv[7] holds f(c) twice through the loop above; fix the duplicate.
    let fc = fv[7];
    let mut resk = 0.0;
    let mut resabs = 0.0;
    for j in 0..7 {
        let s = fv[j] + fv[14 - j];
        resk += WGK[j] * s;
        resabs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
    }
    resk += WGK[7] * fc;
    resabs += WGK[7] * fc.abs();
    let mut resg = WG[3] * fc;
    for j in 0..3 {
        resg += WG[j] * (fv[2 * j + 1] + fv[13 - 2 * j]);
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - reskh).abs() + (fv[14 - j] - reskh).abs());
    }
    let value = resk * h;
    let mut error = ((resk - resg) * h).abs();
    let resasc = resasc * h.abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs * h.abs();
    if round > f64::MIN_POSITIVE {
        error = error.max(round);
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
    })
}

/// Integrate `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Quad, QuadError> {
    integrate_with(&f, a, b, tol, 4096)
}

pub fn integrate_with(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Quad, QuadError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::BadInterval { a, b });
    }
    if a == b {
        return Ok(Quad {
            value: 0.0,
            abs_error: 0.0,
            panels: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(gk15(f, a, b)?);
    let mut total_error: f64 = heap.peek().map(|p| p.error).unwrap_or(0.0);
    while total_error > tol && heap.len() < max_panels {
        let worst = heap.pop().expect("heap is nonempty while error > 0");
        if worst.b - worst.a < 64.0 * f64::EPSILON * worst.b.abs().max(1.0) {
            // The panel can no longer be split meaningfully; keep it.
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(f, worst.a, mid)?;
        let right = gk15(f, mid, worst.b)?;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = 0.0;
    let mut comp = 0.0;
    for p in &panels {
        // Kahan compensation keeps the sum independent of panel count.
        let y = p.value - comp;
        let t = value + y;
        comp = (t - value) - y;
        value = t;
    }
    let abs_error: f64 = panels.iter().map(|p| p.error).sum();
    let quad = Quad {
        value,
        abs_error,
        panels: panels.len(),
    };
    if abs_error > tol {
        return Err(QuadError::ToleranceNotMet {
            value,
            abs_error,
            panels: panels.len(),
        });
    }
    Ok(quad)
}

/// Integrate `f` over `(a, ∞)` to absolute tolerance `tol`.
///
/// Uses the compactification `t = a + s/(1-s)`; before integrating, the
/// transformed integrand is probed near `s = 1` and must stay finite and
/// non-increasing there, otherwise the integral is rejected as non-decaying.
pub fn integrate_to_inf(
    f: impl Fn(f64) -> f64,
    a: f64,
    tol: f64,
) -> Result<Quad, QuadError> {
    integrate_to_inf_with(&f, a, tol, 32_768)
}

pub fn integrate_to_inf_with(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Quad, QuadError> {
    let g = |s: f64| {
        let om = 1.0 - s;
        f(a + s / om) / (om * om)
    };
    let mut probes = [0.0_f64; 5];
    for (i, k) in [0.9, 0.99, 0.999, 1.0 - 1e-6, 1.0 - 1e-9].iter().enumerate() {
        let v = g(*k);
        if !v.is_finite() {
            return Err(QuadError::NotIntegrable {
                detail: format!("transformed integrand non-finite at s = {k}"),
            });
        }
        probes[i] = v.abs();
    }
    // A singular endpoint |g(s)| ~ (1-s)^{-p} is integrable exactly when the
    // tip mass |g(1-h)|·h vanishes as h -> 0; compare it at two scales so an
    // integrable p < 1 (|g| growing, mass shrinking) is kept while p >= 1
    // (tails like 1/t or slower in the original variable) is refused.
    let head = probes[..3].iter().cloned().fold(0.0_f64, f64::max);
    let tip_outer = probes[3] * 1e-6;
    let tip_inner = probes[4] * 1e-9;
    if tip_inner > 0.6 * tip_outer.max(1e-300) && tip_inner > 1e-14 * (1.0 + head) {
        return Err(QuadError::NotIntegrable {
            detail: format!(
                "tail decays too slowly: local mass near s = 1 is not vanishing \
                 ({:.3e} at h = 1e-6 vs {:.3e} at h = 1e-9)",
                tip_outer, tip_inner
            ),
        });
    }
    integrate_with(&g, 0.0, 1.0, tol, max_panels)
}

/// Tanh-sinh quadrature on a finite interval.
///
/// Node spacing halves per level until two successive levels agree within
/// `tol`. The double-exponential weight decay resolves integrable endpoint
/// singularities that defeat bisection (powers `(x-a)^{-p}` with `p`
/// approaching 1); interior singularities are not supported. Nodes closer to
/// an endpoint than one rounding ulp are dropped, and when the dropped side
/// still carried weight a residual estimate is added to the error bound.
pub fn integrate_de(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Quad, QuadError> {
    integrate_de_impl(&f, a, b, tol)
}

fn integrate_de_impl(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Quad, QuadError> {
    use std::f64::consts::FRAC_PI_2;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(QuadError::BadInterval { a, b });
    }
    let s = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    // One level: I(h) = s·h·Σ_k w(kh)·f(x(kh)) with x = c + s·tanh(π/2·sinh τ).
    // Returns (sum-scaled value, evals, residual guess for truncated tails).
    let sum_level = |h: f64| -> Result<(f64, usize, f64), QuadError> {
        let mid = FRAC_PI_2 * f(c);
        if !mid.is_finite() {
            return Err(QuadError::NonFinite { at: c });
        }
        let mut sum = mid;
        let mut evals = 1usize;
        let mut residual = 0.0_f64;
        for dir in [1.0_f64, -1.0] {
            let mut tiny_run = 0u32;
            // Last two (distance-to-endpoint, |f|) samples, for the edge
            // residual fit below.
            let mut d_last = 0.0_f64;
            let mut f_last = 0.0_f64;
            let mut d_prev = 0.0_f64;
            let mut f_prev = 0.0_f64;
            let mut k = 1u64;
            loop {
                let tau = dir * k as f64 * h;
                let q = FRAC_PI_2 * tau.sinh();
                // 1 - |tanh q| computed without cancellation.
                let delta = 2.0 / ((2.0 * q.abs()).exp() + 1.0);
                let x = if tau >= 0.0 { b - s * delta } else { a + s * delta };
                if x <= a || x >= b {
                    // Ran into the rounding edge of the endpoint (a zero
                    // endpoint never trips this: a + s·delta stays
                    // representable down to denormals). The sliver between the
                    // last node and the endpoint is invisible to every level,
                    // so estimate it by fitting |f| ~ C·d^{-p} to the last two
                    // samples: the sliver mass is f_last·d_last/(1-p).
                    if f_last > 0.0 && d_last > 0.0 {
                        let p_hat = if f_prev > 0.0 && d_prev > d_last {
                            ((f_last / f_prev).ln() / (d_prev / d_last).ln())
                                .clamp(0.0, 0.995)
                        } else {
                            0.5
                        };
                        residual += f_last * d_last / (1.0 - p_hat);
                    }
                    break;
                }
                let w = FRAC_PI_2 * tau.cosh() / q.cosh().powi(2);
                let fx = f(x);
                let term = w * fx;
                if !term.is_finite() {
                    return Err(QuadError::NonFinite { at: x });
                }
                sum += term;
                // Fit samples use the distance after rounding x, and skip
                // nodes that collapsed onto the previous representable x:
                // a plateau of duplicates would fake a flat integrand.
                let dist = if tau >= 0.0 { b - x } else { x - a };
                if dist != d_last {
                    d_prev = d_last;
                    f_prev = f_last;
                    d_last = dist;
                    f_last = fx.abs();
                }
                evals += 1;
                if term.abs() < 1e-18 * (1.0 + sum.abs()) {
                    tiny_run += 1;
                    if tiny_run >= 2 {
                        break;
                    }
                } else {
                    tiny_run = 0;
                }
                k += 1;
                if k > 100_000 {
                    break;
                }
            }
        }
        Ok((s * h * sum, evals, residual))
    };
    let mut h = 0.5_f64;
    let (mut prev, mut total_evals, _) = sum_level(h)?;
    let mut last_diff = f64::INFINITY;
    for level in 0..8 {
        h *= 0.5;
        let (cur, n, residual) = sum_level(h)?;
        total_evals += n;
        last_diff = (cur - prev).abs() + residual;
        if level >= 1 && last_diff <= tol {
            return Ok(Quad {
                value: cur,
                abs_error: last_diff.max(f64::EPSILON * cur.abs()),
                panels: total_evals,
            });
        }
        prev = cur;
    }
    Err(QuadError::ToleranceNotMet {
        value: prev,
        abs_error: last_diff,
        panels: total_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(q.value, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫_0^1 x^{-1/2} dx = 2, far beyond what bisection achieves.
        let q = integrate_de(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value - 2.0).abs() < 1e-11, "{}", q.value);
        // ∫_0^1 ln x dx = −1, log singularity.
        let q = integrate_de(|x: f64| x.ln(), 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value + 1.0).abs() < 1e-11, "{}", q.value);
        // Strong power singularity at a zero endpoint: ∫_0^1 x^{-0.8} = 5.
        // The node offsets reach denormals there, so this converges fully.
        let q = integrate_de(|x: f64| x.powf(-0.8), 0.0, 1.0, 1e-9).unwrap();
        assert!((q.value - 5.0).abs() < 1e-8, "{} ± {}", q.value, q.abs_error);
    }

    #[test]
    fn tanh_sinh_reports_nonzero_endpoint_limit_honestly() {
        // The same singularity against a nonzero endpoint cannot be resolved
        // past the rounding edge at distance ~1e-16; the sliver beyond it
        // holds (1e-16)^{0.2}/0.2 ≈ 3e-3 of mass. The reported error bound
        // must cover that deficit rather than claim convergence.
        match integrate_de(|x: f64| (1.0 - x).powf(-0.8), 0.0, 1.0, 1e-6) {
            Err(QuadError::ToleranceNotMet { value, abs_error, .. }) => {
                assert!((value - 5.0).abs() < 2.0 * abs_error, "{value} ± {abs_error}");
            }
            other => panic!("expected an honest tolerance failure, got {other:?}"),
        }
    }

    #[test]
    fn tanh_sinh_smooth_agrees_with_panels() {
        let f = |x: f64| (x * 1.7).sin() * (-x).exp();
        let de = integrate_de(f, 0.0, 3.0, 1e-12).unwrap();
        let gk = integrate(f, 0.0, 3.0, 1e-12).unwrap();
        assert!((de.value - gk.value).abs() < 1e-11);
    }

    #[test]
    fn sine_arch() {
        let q = integrate(|x| x.sin(), 0.0, PI, 1e-12).unwrap();
        assert_relative_eq!(q.value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // Bisection without extrapolation bottoms out near 1e-7 on an
        // integrable endpoint singularity; callers that need more remove the
        // singularity by substitution first.
        let q = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 5e-7).unwrap();
        assert_relative_eq!(q.value, 2.0, epsilon = 5e-7);
        assert!(q.abs_error <= 5e-7);
        match integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12) {
            Err(QuadError::ToleranceNotMet { value, .. }) => {
                assert_relative_eq!(value, 2.0, epsilon = 1e-6);
            }
            other => panic!("expected honest tolerance failure, got {other:?}"),
        }
    }

    #[test]
    fn exponential_tail() {
        let q = integrate_to_inf(|t| (-t).exp(), 0.0, 1e-10).unwrap();
        assert_relative_eq!(q.value, 1.0, epsilon = 1e-9);
        let q = integrate_to_inf(|t| (-t * t / 2.0).exp(), 0.0, 1e-10).unwrap();
        assert_relative_eq!(q.value, (PI / 2.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn power_tail() {
        // Algebraic decay t^{-5/2} from 1: integral = 2/3.
        let q = integrate_to_inf(|t| t.powf(-2.5), 1.0, 1e-9).unwrap();
        assert_relative_eq!(q.value, 2.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn non_decaying_integrand_rejected() {
        let err = integrate_to_inf(|_| 1.0, 0.0, 1e-8).unwrap_err();
        assert!(matches!(err, QuadError::NotIntegrable { .. }));
    }

    #[test]
    fn tolerance_failure_reports_estimate() {
        let err = integrate_with(&|x: f64| (50.0 * x).sin().abs(), 0.0, 20.0, 1e-13, 8);
        match err {
            Err(QuadError::ToleranceNotMet { value, panels, .. }) => {
                assert!(value.is_finite());
                assert!(panels <= 8);
            }
            other => panic!("expected tolerance failure, got {other:?}"),
        }
    }

    #[test]
    fn shifted_window() {
        let q = integrate(|x| x.exp(), 1.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(q.value, 2.0_f64.exp() - 1.0_f64.exp(), epsilon = 1e-12);
    }
}
