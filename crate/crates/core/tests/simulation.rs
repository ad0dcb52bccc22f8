use dyadkde::estimator::density_curve;
use dyadkde::montecarlo::{coverage_experiment, generate_sample, linspace, true_density};
use dyadkde::stats::{chi2_1_critical, mean};
use dyadkde::{BandwidthRule, JackknifeEl, KernelSpec, Method, SimulationConfig};

#[test]
fn test_coverage_matches_interval_coverage() {
    // scoring ℓ(θ₀) ≤ c_α must agree with membership in the inverted interval
    for (beta, p) in [(1u8, 1.0), (0, 1.0), (1, 0.6)] {
        let config = SimulationConfig {
            beta,
            n: 30,
            p,
            reps: 50,
            base_seed: 21,
            bandwidth_rule: if p < 1.0 {
                BandwidthRule::RotIncomplete
            } else {
                BandwidthRule::RotComplete
            },
            ..SimulationConfig::default()
        };
        let theta = true_density(beta, config.x);
        let crit = chi2_1_critical(config.alpha);
        for rep in 0..config.reps as u64 {
            let s = generate_sample(&config, rep);
            let h = config.bandwidth_rule.bandwidth(&s).unwrap();
            let je = JackknifeEl::from_sample(&s, config.kernel, config.x, h).unwrap();
            for m in [Method::Jel, Method::Mjel] {
                let Ok(stat) = je.statistic(m, theta) else { continue };
                let by_test = stat.value() <= crit;
                let ci = je.invert(config.alpha, m).unwrap();
                assert_eq!(
                    by_test,
                    ci.contains(theta),
                    "beta {beta} p {p} rep {rep} {m:?}: stat {} ci [{}, {}]",
                    stat.value(),
                    ci.lower,
                    ci.upper
                );
            }
        }
    }
}

#[test]
fn pooled_edge_means_follow_design() {
    for (beta, want) in [(0u8, 0.0), (1, 1.0 / 9.0)] {
        let config = SimulationConfig {
            beta,
            n: 60,
            reps: 200,
            base_seed: 3,
            ..SimulationConfig::default()
        };
        let means: Vec<f64> = (0..config.reps as u64)
            .map(|r| mean(&generate_sample(&config, r).observed_values()))
            .collect();
        let m = mean(&means);
        // vertex effects make the per-replication mean noisy at order 1/n
        assert!((m - want).abs() < 0.02, "beta {beta}: {m} vs {want}");
    }
}

#[test]
fn estimated_density_integrates_to_one() {
    let config = SimulationConfig {
        n: 40,
        ..SimulationConfig::default()
    };
    let s = generate_sample(&config, 0);
    let h = BandwidthRule::RotComplete.bandwidth(&s).unwrap();
    let grid = linspace(-9.0, 9.0, 3601);
    let f = density_curve(&s, KernelSpec::EPANECHNIKOV, &grid, h).unwrap();
    let dx = grid[1] - grid[0];
    let mass: f64 = f.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum();
    assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
    assert!(f.iter().all(|&v| v >= 0.0));
}

#[test]
fn small_experiment_tallies_are_consistent() {
    let config = SimulationConfig {
        n: 25,
        reps: 120,
        base_seed: 8,
        ..SimulationConfig::default()
    };
    let r = coverage_experiment(&config).unwrap();
    for m in &r.methods {
        assert_eq!(m.covered + m.not_covered + m.failures, config.reps);
        assert!(m.infeasible <= m.failures);
        let c = m.covered as f64 / (m.covered + m.not_covered) as f64;
        assert_eq!(c, m.coverage);
    }
    // JEL never needs Γ_m, so it never fails on these designs
    assert_eq!(r.method(Method::Jel).unwrap().failures, 0);
}
