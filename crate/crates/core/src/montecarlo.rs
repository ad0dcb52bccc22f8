//! Simulation designs and coverage experiments.
//!
//! Edges follow `X_ij = β U_i U_j + U_ij` with `U_i = -1` w.p. 1/3 and `+1`
//! otherwise, `U_ij ~ N(0,1)`, and each edge observed independently with
//! probability `p`.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::el::ElRatio;
use crate::error::{Error, Result};
use crate::estimator::{density_curve, BandwidthRule};
use crate::inference::{JackknifeEl, Method};
use crate::kernel::KernelSpec;
use crate::rng::{replication_rng, StreamRole};
use crate::sample::{pair_count, DyadicSample};
use crate::stats;

/// Design point used throughout the coverage tables.
pub const DEFAULT_DESIGN_POINT: f64 = 1.675;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub beta: u8,
    pub n: usize,
    pub p: f64,
    pub reps: usize,
    pub alpha: f64,
    pub x: f64,
    pub kernel: KernelSpec,
    pub bandwidth_rule: BandwidthRule,
    pub base_seed: u64,
    pub methods: Vec<Method>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            beta: 1,
            n: 100,
            p: 1.0,
            reps: 1000,
            alpha: 0.05,
            x: DEFAULT_DESIGN_POINT,
            kernel: KernelSpec::EPANECHNIKOV,
            bandwidth_rule: BandwidthRule::RotComplete,
            base_seed: 0,
            methods: Method::ALL.to_vec(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.beta > 1 {
            return bad(format!("beta must be 0 or 1, got {}", self.beta));
        }
        if self.n < 4 {
            return bad(format!("n must be at least 4, got {}", self.n));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must lie in (0,1], got {}", self.p));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !self.x.is_finite() {
            return bad("design point must be finite".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if let BandwidthRule::Fixed(h) = self.bandwidth_rule {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonPositiveBandwidth(h));
            }
        }
        Ok(())
    }
}

/// Draws replication `rep_index` of the configured design.
///
/// Edge values do not depend on `p`, so designs differing only in `p`
/// share their latent draws.
pub fn generate_sample(config: &SimulationConfig, rep_index: u64) -> DyadicSample {
    let n = config.n;
    let seed = config.base_seed;
    let beta = f64::from(config.beta);

    let mut vertex_rng = replication_rng(seed, rep_index, StreamRole::VertexShock);
    let shocks: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = vertex_rng.random();
            if u < 1.0 / 3.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();

    let mut edge_rng = replication_rng(seed, rep_index, StreamRole::EdgeShock);
    let mut values = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            let e: f64 = edge_rng.sample(StandardNormal);
            values.push(beta * shocks[i] * shocks[j] + e);
        }
    }

    let mask = if config.p >= 1.0 {
        vec![true; values.len()]
    } else {
        let mut obs_rng = replication_rng(seed, rep_index, StreamRole::Observation);
        (0..values.len())
            .map(|_| obs_rng.random::<f64>() < config.p)
            .collect()
    };
    DyadicSample::with_mask(n, values, mask).expect("simulated values are finite")
}

/// Density of `X_12`: `(5/9)φ(x-1) + (4/9)φ(x+1)` for β = 1, `φ(x)` for β = 0.
pub fn true_density(beta: u8, x: f64) -> f64 {
    if beta == 0 {
        stats::normal_pdf(x)
    } else {
        5.0 / 9.0 * stats::normal_pdf(x - 1.0) + 4.0 / 9.0 * stats::normal_pdf(x + 1.0)
    }
}

/// Per-method tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub method: Method,
    pub covered: usize,
    pub not_covered: usize,
    /// Replications where the method could not be evaluated, excluded from
    /// the coverage ratio.
    pub failures: usize,
    /// Subset of `failures` where the EL problem was infeasible at the true
    /// value (statistic +∞).
    pub infeasible: usize,
    pub coverage: f64,
    pub mc_standard_error: f64,
    pub failure_kinds: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: SimulationConfig,
    pub theta_true: f64,
    pub critical_value: f64,
    pub mean_bandwidth: f64,
    pub methods: Vec<MethodCoverage>,
    /// Elapsed time; kept out of the serialized report so it stays reproducible.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl CoverageReport {
    pub fn method(&self, m: Method) -> Option<&MethodCoverage> {
        self.methods.iter().find(|c| c.method == m)
    }

    pub fn coverage(&self, m: Method) -> Option<f64> {
        self.method(m).map(|c| c.coverage)
    }
}

/// Failure kind for replications where 0 is outside the hull of the
/// pseudo-values at the true θ.
const INFEASIBLE: &str = "Infeasible";

#[derive(Debug, Clone)]
enum Outcome {
    Covered,
    NotCovered,
    Failed(&'static str),
}

fn score_el(r: Result<ElRatio>, crit: f64) -> Outcome {
    match r {
        Ok(ElRatio::Finite { statistic, .. }) if statistic <= crit => Outcome::Covered,
        Ok(ElRatio::Finite { .. }) => Outcome::NotCovered,
        Ok(ElRatio::Infeasible) => Outcome::Failed(INFEASIBLE),
        Err(e) => Outcome::Failed(e.name()),
    }
}

struct Replication {
    bandwidth: Option<f64>,
    outcomes: Vec<Outcome>,
}

fn run_replication(config: &SimulationConfig, rep: u64, theta: f64, crit: f64) -> Replication {
    let sample = generate_sample(config, rep);
    let all_failed = |e: Error| Replication {
        bandwidth: None,
        outcomes: vec![Outcome::Failed(e.name()); config.methods.len()],
    };
    let h = match config.bandwidth_rule.bandwidth(&sample) {
        Ok(h) => h,
        Err(e) => return all_failed(e),
    };
    let je = match JackknifeEl::from_sample(&sample, config.kernel, config.x, h) {
        Ok(je) => je,
        Err(e) => return all_failed(e),
    };
    let outcomes = config
        .methods
        .iter()
        .map(|m| match m {
            Method::Jel => score_el(je.jel(theta), crit),
            Method::Mjel => score_el(je.mjel(theta), crit),
            Method::Mjk => match je.mjk_interval(config.alpha) {
                Ok(ci) if ci.contains(theta) => Outcome::Covered,
                Ok(_) => Outcome::NotCovered,
                Err(e) => Outcome::Failed(e.name()),
            },
        })
        .collect();
    Replication {
        bandwidth: Some(h),
        outcomes,
    }
}

/// Runs `config.reps` replications and tallies coverage of the true density.
///
/// EL methods are scored by `ℓ(θ_true) ≤ c_α`, which is membership in the
/// inverted interval; mJK by direct interval membership. Replications where
/// Γ_m² ≤ 0 or the EL problem is infeasible at θ_true are excluded from the
/// ratio and tallied by kind. Runs on the current rayon pool; results do not
/// depend on its size.
pub fn coverage_experiment(config: &SimulationConfig) -> Result<CoverageReport> {
    config.validate()?;
    let start = Instant::now();
    let theta = true_density(config.beta, config.x);
    let crit = stats::chi2_1_critical(config.alpha);

    let reps: Vec<Replication> = (0..config.reps as u64)
        .into_par_iter()
        .map(|r| run_replication(config, r, theta, crit))
        .collect();

    let hs: Vec<f64> = reps.iter().filter_map(|r| r.bandwidth).collect();
    let mean_bandwidth = if hs.is_empty() { f64::NAN } else { stats::mean(&hs) };

    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let (mut covered, mut not_covered) = (0, 0);
            let mut kinds: Vec<(String, usize)> = Vec::new();
            for rep in &reps {
                match &rep.outcomes[k] {
                    Outcome::Covered => covered += 1,
                    Outcome::NotCovered => not_covered += 1,
                    Outcome::Failed(name) => match kinds.iter_mut().find(|(n, _)| n == name) {
                        Some((_, c)) => *c += 1,
                        None => kinds.push((name.to_string(), 1)),
                    },
                }
            }
            kinds.sort();
            let failures = kinds.iter().map(|(_, c)| c).sum();
            let infeasible = kinds
                .iter()
                .find(|(k, _)| k == INFEASIBLE)
                .map_or(0, |(_, c)| *c);
            let evaluated = covered + not_covered;
            let (coverage, se) = if evaluated == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let c = covered as f64 / evaluated as f64;
                (c, (c * (1.0 - c) / evaluated as f64).sqrt())
            };
            MethodCoverage {
                method,
                covered,
                not_covered,
                failures,
                infeasible,
                coverage,
                mc_standard_error: se,
                failure_kinds: kinds,
            }
        })
        .collect();

    Ok(CoverageReport {
        config: config.clone(),
        theta_true: theta,
        critical_value: crit,
        mean_bandwidth,
        methods,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Aligned table with one row per report and one column per method.
pub fn format_table(reports: &[CoverageReport]) -> String {
    let mut methods: Vec<Method> = reports
        .iter()
        .flat_map(|r| r.methods.iter().map(|m| m.method))
        .collect();
    methods.sort();
    methods.dedup();

    let mut out = String::new();
    if let Some(first) = reports.first() {
        let c = &first.config;
        let _ = writeln!(
            out,
            "beta={} p={} x={} alpha={} kernel={} bandwidth={} seed={}",
            c.beta, c.p, c.x, c.alpha, c.kernel, c.bandwidth_rule, c.base_seed
        );
    }
    let _ = write!(out, "{:<10}", "method:");
    for m in &methods {
        let _ = write!(out, "{:>18}", m.label());
    }
    let _ = writeln!(out, "{:>8}", "reps");
    for r in reports {
        let _ = write!(out, "{:<10}", format!("n={}", r.config.n));
        for m in &methods {
            let cell = match r.method(*m) {
                Some(mc) => format!("{:.3} ({:.4})", mc.coverage, mc.mc_standard_error),
                None => "-".to_string(),
            };
            let _ = write!(out, "{cell:>18}");
        }
        let _ = writeln!(out, "{:>8}", r.config.reps);
    }
    for r in reports {
        for mc in &r.methods {
            if mc.failures > 0 {
                let kinds: Vec<String> = mc
                    .failure_kinds
                    .iter()
                    .map(|(k, c)| format!("{k}={c}"))
                    .collect();
                let _ = writeln!(
                    out,
                    "n={} {}: excluded {} [{}]",
                    r.config.n,
                    mc.method,
                    mc.failures,
                    kinds.join(", ")
                );
            }
        }
    }
    out
}

/// `max_x |f̂(x) - f(x)|` over `grid` for one sample.
pub fn sup_error(
    sample: &DyadicSample,
    kernel: KernelSpec,
    h: f64,
    grid: &[f64],
    beta: u8,
) -> Result<f64> {
    let fhat = density_curve(sample, kernel, grid, h)?;
    Ok(grid
        .iter()
        .zip(fhat)
        .map(|(&x, f)| (f - true_density(beta, x)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupErrorRow {
    pub n: usize,
    pub median_sup_error: f64,
    pub reps: usize,
}

/// Median over replications of the sup-grid error, with the complete-data
/// rule-of-thumb bandwidth in each replication.
pub fn sup_error_experiment(
    beta: u8,
    n_list: &[usize],
    grid: &[f64],
    reps: usize,
    base_seed: u64,
) -> Result<Vec<SupErrorRow>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let config = SimulationConfig {
            beta,
            n,
            p: 1.0,
            reps,
            base_seed,
            ..SimulationConfig::default()
        };
        config.validate()?;
        let errors: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let s = generate_sample(&config, r);
                let h = BandwidthRule::RotComplete.bandwidth(&s)?;
                sup_error(&s, config.kernel, h, grid, beta)
            })
            .collect::<Result<_>>()?;
        rows.push(SupErrorRow {
            n,
            median_sup_error: stats::quantile(&errors, 0.5),
            reps,
        });
    }
    Ok(rows)
}

/// `count` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_density_values() {
        // 5/9 φ(0.675) + 4/9 φ(2.675), φ(1.675)
        assert!((true_density(1, 1.675) - 0.181_435_168_394_977_86).abs() < 1e-12);
        assert!((true_density(0, 1.675) - 0.098_101_655_864_097_82).abs() < 1e-12);
    }

    #[test]
    fn mixture_has_unit_mass() {
        let grid = linspace(-12.0, 12.0, 240_001);
        let dx = grid[1] - grid[0];
        for beta in [0, 1] {
            let mass: f64 = grid.iter().map(|&x| true_density(beta, x) * dx).sum();
            assert!((mass - 1.0).abs() < 1e-6, "beta={beta}: {mass}");
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let cfg = SimulationConfig { n: 12, p: 0.6, ..Default::default() };
        let a = generate_sample(&cfg, 9);
        let b = generate_sample(&cfg, 9);
        assert_eq!(a.to_edge_list(), b.to_edge_list());
        assert_eq!(a.mask(), b.mask());
        assert_ne!(generate_sample(&cfg, 10).to_edge_list(), a.to_edge_list());
    }

    #[test]
    fn values_shared_across_p() {
        let full = SimulationConfig { n: 15, p: 1.0, ..Default::default() };
        let half = SimulationConfig { p: 0.5, ..full.clone() };
        let a = generate_sample(&full, 2);
        let b = generate_sample(&half, 2);
        assert!(a.is_complete());
        assert!(!b.is_complete());
        for (i, j, v) in b.observed_edges() {
            assert_eq!(a.get(i, j), Some(v));
        }
    }

    #[test]
    fn sup_error_grid_monotone() {
        let cfg = SimulationConfig { n: 20, ..Default::default() };
        let s = generate_sample(&cfg, 0);
        let h = BandwidthRule::RotComplete.bandwidth(&s).unwrap();
        let fine = linspace(-2.0, 2.0, 101);
        let coarse: Vec<f64> = fine.iter().step_by(10).copied().collect();
        let e_fine = sup_error(&s, cfg.kernel, h, &fine, 1).unwrap();
        let e_coarse = sup_error(&s, cfg.kernel, h, &coarse, 1).unwrap();
        assert!(e_coarse <= e_fine);
    }

    #[test]
    fn validation() {
        let ok = SimulationConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SimulationConfig { beta: 2, ..ok.clone() },
            SimulationConfig { p: 0.0, ..ok.clone() },
            SimulationConfig { p: 1.5, ..ok.clone() },
            SimulationConfig { reps: 0, ..ok.clone() },
            SimulationConfig { alpha: 1.0, ..ok.clone() },
            SimulationConfig { n: 3, ..ok.clone() },
            SimulationConfig { methods: vec![], ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn small_experiment_tallies() {
        let cfg = SimulationConfig { n: 20, reps: 30, base_seed: 3, ..Default::default() };
        let r = coverage_experiment(&cfg).unwrap();
        for mc in &r.methods {
            assert_eq!(mc.covered + mc.not_covered + mc.failures, cfg.reps);
            assert!(mc.coverage.is_nan() || (0.0..=1.0).contains(&mc.coverage));
        }
        let again = coverage_experiment(&cfg).unwrap();
        assert_eq!(r.methods, again.methods);
    }
}
