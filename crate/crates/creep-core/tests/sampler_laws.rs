//! Distribution-level checks of the path sampler: marginal transforms,
//! event counts, truncation floors, kill times, and grid moments.

use creep_core::path_engine::{
    gamma_jump_sample, jump_size_sample, sample_ou_skeleton, stable_jump_sample, BivariateStream,
    BmGridStream, Channel, SeedPolicy,
};
use creep_core::process_model::{
    BivariateSubordinatorSpec, JumpSizeDist, OuSpec, SubordinatorSpec, TwoSidedStableLaw,
};
use creep_core::quad;

const EPS: f64 = 1e-4;

/// Value of the random coordinate at time 1, accumulated without
/// materialising the event list.
fn z_at_unit_time(spec: &BivariateSubordinatorSpec, policy: SeedPolicy, path: u64) -> f64 {
    let mut stream = BivariateStream::new(spec, policy, path);
    let (_, dz) = stream.drifts();
    let mut z = dz;
    loop {
        let ev = stream.next_event();
        if ev.t > 1.0 {
            return z;
        }
        z += ev.dz;
    }
}

/// Laplace exponent of the truncated law, by quadrature of its jump density
/// `c·x^{-3/2}`: total truncated mass minus the surviving transform, so the
/// integrated tail decays exponentially.
fn truncated_exponent(scale: f64, eps: f64, lambda: f64) -> f64 {
    let c = scale * 0.5 / std::f64::consts::PI.sqrt();
    let total = c * 2.0 / eps.sqrt();
    total
        - quad::integrate_to_inf(|x| (-lambda * x).exp() * c * x.powf(-1.5), eps, 1e-10)
            .expect("exponent integral converges")
            .value
}

#[test]
fn laplace_transforms_match_both_half_stable_presets() {
    let n = 100_000u64;
    let policy = SeedPolicy::new(0x1a91ace);
    for (preset, scale) in [
        (SubordinatorSpec::stable_half_sqrt_two_lambda(EPS), std::f64::consts::SQRT_2),
        (SubordinatorSpec::stable_half_sqrt_lambda(EPS), 1.0),
    ] {
        let mass = preset.jumps.small_jump_mass_rate();
        let spec = BivariateSubordinatorSpec::time_and_process(preset);
        for lambda in [0.5, 1.0, 2.0] {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for k in 0..n {
                let v = (-lambda * z_at_unit_time(&spec, policy, k)).exp();
                sum += v;
                sum_sq += v * v;
            }
            let mean = sum / n as f64;
            let var = (sum_sq / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();

            // Sharp target: the transform of the law actually sampled.
            let exact = (-truncated_exponent(scale, EPS, lambda)).exp();
            assert!(
                (mean - exact).abs() <= 3.0 * se,
                "scale {scale} λ {lambda}: {mean} vs truncated {exact} (se {se})"
            );

            // Untruncated target, off by at most λ times the removed mass:
            // the truncation only shrinks the path.
            let ideal = (-scale * lambda.sqrt()).exp();
            assert!(
                mean >= ideal - 3.0 * se && mean <= ideal + lambda * mass + 3.0 * se,
                "scale {scale} λ {lambda}: {mean} vs ideal {ideal} + bias {}",
                lambda * mass
            );
        }
    }
}

#[test]
fn sampled_jump_sizes_respect_the_truncation_floor() {
    let policy = SeedPolicy::new(0xf100f);
    let mut rng = policy.rng(0, Channel::Aux);
    for _ in 0..250_000 {
        assert!(stable_jump_sample(&mut rng, 0.5, 1e-4) >= 1e-4);
        assert!(gamma_jump_sample(&mut rng, 1.0, 1e-3) >= 1e-3);
    }
    for dist in [
        JumpSizeDist::Exponential { rate: 2.0 },
        JumpSizeDist::Uniform { lo: 0.25, hi: 4.0 },
        JumpSizeDist::Constant { value: 0.5 },
    ] {
        for _ in 0..80_000 {
            assert!(jump_size_sample(&dist, &mut rng) > 0.0);
        }
    }
    // Signed two-sided noise: magnitudes sit above the floor.
    let ou = OuSpec {
        gamma: 1.0,
        start: -1.0,
        noise: TwoSidedStableLaw {
            alpha: 0.75,
            scale_pos: 0.5,
            scale_neg: 0.5,
            eps: 1e-2,
        },
    };
    let mut checked = 0usize;
    for k in 0..600 {
        let skel = sample_ou_skeleton(&ou, policy, k, 20.0);
        for &(_, dx) in &skel.events {
            assert!(dx.abs() >= 1e-2, "two-sided jump {dx} below the floor");
            checked += 1;
        }
    }
    assert!(checked > 100_000, "only {checked} two-sided jumps sampled");
}

#[test]
fn event_counts_are_poisson_with_the_truncated_rate() {
    let preset = SubordinatorSpec::stable_half_sqrt_two_lambda(EPS);
    let rate = preset.jumps.truncated_rate();
    let spec = BivariateSubordinatorSpec::time_and_process(preset);
    let horizon = 10.0;
    let expect = rate * horizon;
    let policy = SeedPolicy::new(0xc0457);
    let paths = 40u64;
    let mut total = 0u64;
    for k in 0..paths {
        let mut stream = BivariateStream::new(&spec, policy, k);
        let mut count = 0u64;
        while stream.next_event().t <= horizon {
            count += 1;
        }
        assert!(
            (count as f64 - expect).abs() <= 3.0 * expect.sqrt(),
            "path {k}: {count} events vs {expect}"
        );
        total += count;
    }
    let mean = total as f64 / paths as f64;
    assert!((mean - expect).abs() <= 3.0 * (expect / paths as f64).sqrt());
}

#[test]
fn kill_times_are_exponential_with_the_requested_rate() {
    let z = SubordinatorSpec {
        kill_rate: 1.0,
        ..SubordinatorSpec::pure_drift(1.0)
    };
    let spec = BivariateSubordinatorSpec::time_and_process(z);
    let policy = SeedPolicy::new(0x1<<20);
    let n = 100_000u64;
    let mut sum = 0.0;
    let mut before_one = 0u64;
    for k in 0..n {
        let zeta = BivariateStream::new(&spec, policy, k).lifetime();
        sum += zeta;
        if zeta < 1.0 {
            before_one += 1;
        }
    }
    let mean = sum / n as f64;
    assert!((mean - 1.0).abs() <= 0.01, "mean lifetime {mean}");
    let frac = before_one as f64 / n as f64;
    let p = 1.0 - (-1.0_f64).exp();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((frac - p).abs() <= 3.0 * se, "death fraction {frac} vs {p}");
}

#[test]
fn grid_walk_moments_match_the_brownian_closed_forms() {
    let policy = SeedPolicy::new(0x9e3779b9);

    // Terminal mean and variance are dt-exact: the summed increments are
    // one Gaussian regardless of the step.
    let n = 100_000u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        let mut stream = BmGridStream::new(0.01, policy, k);
        let mut w = 0.0;
        for _ in 0..100 {
            w = stream.step();
        }
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n as f64;
    let var = sum_sq / n as f64 - mean * mean;
    assert!(mean.abs() <= 3.0 / (n as f64).sqrt(), "terminal mean {mean}");
    assert!((var - 1.0).abs() <= 0.02, "terminal variance {var}");

    // The running maximum carries an O(√dt) discretisation deficit, so the
    // window below is only honest with a fine grid.
    let n = 20_000u64;
    let dt = 1e-4;
    let mut sum_max = 0.0;
    for k in 0..n {
        let mut stream = BmGridStream::new(dt, policy, k + 1_000_000);
        let mut max = 0.0_f64;
        for _ in 0..10_000 {
            max = max.max(stream.step());
        }
        sum_max += max;
    }
    let mean_max = sum_max / n as f64;
    let reflection = (2.0 / std::f64::consts::PI).sqrt();
    assert!(
        (mean_max - reflection).abs() <= 0.01,
        "running-max mean {mean_max} vs {reflection}"
    );
}

#[test]
fn consecutive_paths_are_uncorrelated() {
    let spec = BivariateSubordinatorSpec::time_and_process(SubordinatorSpec::gamma(
        1.0, 1.0, 1e-3, 0.0,
    ));
    let policy = SeedPolicy::new(0xdecaf);
    let n = 100_000usize;
    let values: Vec<f64> = (0..=n as u64)
        .map(|k| z_at_unit_time(&spec, policy, k))
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    let cov = (0..n)
        .map(|i| (values[i] - mean) * (values[i + 1] - mean))
        .sum::<f64>()
        / n as f64;
    let corr = cov / var;
    assert!(
        corr.abs() <= 3.0 / (n as f64).sqrt(),
        "lag-1 correlation {corr}"
    );
}
