//! Dyadic kernel density estimates and their leave-one-out / leave-two-out
//! counterparts, plus rule-of-thumb bandwidths.
//!
//! Every leave-out value comes from cached row sums:
//!
//! ```text
//! sum over pairs avoiding i     = total - row_sum[i]
//! sum over pairs avoiding i, j  = total - row_sum[i] - row_sum[j] + K_ij
//! ```
//!
//! so the whole family costs O(n²) once the kernel values are known.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::sample::{pair_count, pair_index, DyadicSample};
use crate::stats;

/// Kernel evaluations `K_ij = K((x - X_ij)/h)/h` for one design point and
/// bandwidth, with per-vertex row sums.
#[derive(Debug, Clone)]
pub struct KernelSums {
    pub x: f64,
    pub h: f64,
    n: usize,
    /// Upper-triangular; zero for unobserved pairs.
    k_pair: Vec<f64>,
    observed: Vec<bool>,
    pub row_sum: Vec<f64>,
    pub total: f64,
    pub n_observed: usize,
    pub p_hat: f64,
}

impl KernelSums {
    pub fn new(sample: &DyadicSample, kernel: KernelSpec, x: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::NonPositiveBandwidth(h));
        }
        if sample.n_observed() == 0 {
            return Err(Error::EmptyNetwork);
        }
        let n = sample.n();
        let mut k_pair = vec![0.0; sample.n_pairs()];
        let mut row_sum = vec![0.0; n];
        let mut total = 0.0;
        let inv_h = 1.0 / h;
        for (i, j, v) in sample.observed_edges() {
            let k = kernel.evaluate((x - v) * inv_h) * inv_h;
            if k != 0.0 {
                k_pair[pair_index(n, i, j)] = k;
                row_sum[i] += k;
                row_sum[j] += k;
                total += k;
            }
        }
        Ok(KernelSums {
            x,
            h,
            n,
            k_pair,
            observed: sample.mask().to_vec(),
            row_sum,
            total,
            n_observed: sample.n_observed(),
            p_hat: sample.observed_fraction(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `K_ij` for an observed 0-based pair, `None` otherwise.
    pub fn k_pair(&self, i: usize, j: usize) -> Option<f64> {
        if i == j || i >= self.n || j >= self.n {
            return None;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = pair_index(self.n, a, b);
        self.observed[k].then_some(self.k_pair[k])
    }

    /// Kernel values in upper-triangular order, zero where unobserved.
    pub fn pair_values(&self) -> &[f64] {
        &self.k_pair
    }

    pub fn is_complete(&self) -> bool {
        self.n_observed == self.k_pair.len()
    }
}

/// θ̂ = total / C(n,2) for a complete sample.
pub fn density_estimate(sums: &KernelSums) -> Result<f64> {
    if !sums.is_complete() {
        return Err(Error::IncompleteSampleRequiresIncompletePath(sums.p_hat));
    }
    Ok(sums.total / pair_count(sums.n) as f64)
}

/// θ̂_inc = total / N̂ with N̂ = p̂·C(n,2). Equals [`density_estimate`] on a full mask.
pub fn density_estimate_incomplete(sums: &KernelSums) -> f64 {
    sums.total / (sums.p_hat * pair_count(sums.n) as f64)
}

/// Point estimate via whichever path the sample's mask calls for.
pub fn point_estimate(sums: &KernelSums) -> f64 {
    if sums.is_complete() {
        sums.total / pair_count(sums.n) as f64
    } else {
        density_estimate_incomplete(sums)
    }
}

/// Divisors used for the full, leave-one-out and leave-two-out estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Denominators {
    pub full: f64,
    pub leave_one: f64,
    pub leave_two: f64,
}

/// Which family of denominators the leave-out estimates use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationPath {
    /// C(n,2), C(n-1,2), C(n-2,2).
    Complete,
    /// p̂·C(n,2), p̂·C(n-1,2), p̂·C(n-2,2).
    Incomplete,
}

#[derive(Debug, Clone)]
pub struct LeaveOutEstimates {
    n: usize,
    pub theta_hat: f64,
    pub theta_hat_i: Vec<f64>,
    /// Upper-triangular order, see [`pair_index`].
    pub theta_hat_ij: Vec<f64>,
    pub incomplete: bool,
    pub denominators: Denominators,
}

impl LeaveOutEstimates {
    /// Builds θ̂, θ̂^(i) and θ̂^(i,j) from cached sums.
    ///
    /// Incomplete samples divide by N̂ = p̂·C(n,2), N̂₁ = p̂·C(n-1,2) and
    /// N̂₂ = p̂·C(n-2,2), all scaled by the global p̂.
    pub fn new(sums: &KernelSums) -> Result<Self> {
        let path = if sums.is_complete() {
            EstimationPath::Complete
        } else {
            EstimationPath::Incomplete
        };
        Self::for_path(sums, path)
    }

    /// Forces a path. The incomplete path is valid for any mask; the complete
    /// path rejects samples with unobserved pairs.
    pub fn for_path(sums: &KernelSums, path: EstimationPath) -> Result<Self> {
        let n = sums.n;
        if n < 4 {
            return Err(Error::SampleTooSmall { needed: 4, got: n });
        }
        if sums.n_observed == 0 {
            return Err(Error::EmptyNetwork);
        }
        let incomplete = match path {
            EstimationPath::Complete if !sums.is_complete() => {
                return Err(Error::IncompleteSampleRequiresIncompletePath(sums.p_hat));
            }
            EstimationPath::Complete => false,
            EstimationPath::Incomplete => true,
        };
        let scale = if incomplete { sums.p_hat } else { 1.0 };
        let denominators = Denominators {
            full: scale * pair_count(n) as f64,
            leave_one: scale * pair_count(n - 1) as f64,
            leave_two: scale * pair_count(n - 2) as f64,
        };
        let total = sums.total;
        let theta_hat = total / denominators.full;
        let theta_hat_i: Vec<f64> = sums
            .row_sum
            .iter()
            .map(|r| (total - r).max(0.0) / denominators.leave_one)
            .collect();
        let mut theta_hat_ij = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            let ri = total - sums.row_sum[i];
            for j in (i + 1)..n {
                let s = ri - sums.row_sum[j] + sums.k_pair[pair_index(n, i, j)];
                theta_hat_ij.push(s.max(0.0) / denominators.leave_two);
            }
        }
        Ok(LeaveOutEstimates {
            n,
            theta_hat,
            theta_hat_i,
            theta_hat_ij,
            incomplete,
            denominators,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// θ̂^(i,j) for 0-based `i != j`.
    pub fn theta_hat_pair(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.theta_hat_ij[pair_index(self.n, a, b)]
    }
}

/// How the bandwidth is chosen for a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthRule {
    RotComplete,
    RotIncomplete,
    Fixed(f64),
}

impl BandwidthRule {
    /// Rule-of-thumb rule matching the sample's mask.
    pub fn auto_for(sample: &DyadicSample) -> Self {
        if sample.is_complete() {
            BandwidthRule::RotComplete
        } else {
            BandwidthRule::RotIncomplete
        }
    }

    pub fn bandwidth(&self, sample: &DyadicSample) -> Result<f64> {
        match *self {
            BandwidthRule::RotComplete => rot_bandwidth(sample),
            BandwidthRule::RotIncomplete => rot_bandwidth_incomplete(sample),
            BandwidthRule::Fixed(h) if h > 0.0 && h.is_finite() => Ok(h),
            BandwidthRule::Fixed(h) => Err(Error::NonPositiveBandwidth(h)),
        }
    }
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthRule::RotComplete => f.write_str("rot-complete"),
            BandwidthRule::RotIncomplete => f.write_str("rot-incomplete"),
            BandwidthRule::Fixed(h) => write!(f, "{h}"),
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rot-complete" | "rotcomplete" => Ok(BandwidthRule::RotComplete),
            "rot-incomplete" | "rotincomplete" => Ok(BandwidthRule::RotIncomplete),
            other => match other.parse::<f64>() {
                Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthRule::Fixed(h)),
                Ok(h) => Err(Error::NonPositiveBandwidth(h)),
                Err(_) => Err(Error::InvalidConfig(format!("unknown bandwidth rule '{other}'"))),
            },
        }
    }
}

fn spread_scale(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let scale = stats::sample_sd(values).min(iqr / 1.34);
    if !(scale > 0.0) {
        return Err(Error::ZeroSpreadSample);
    }
    Ok(scale)
}

/// Rule-of-thumb bandwidth for complete data:
/// `0.9 · min(σ̂, IQR/1.34) · (2 / (n(n-1)))^(2/9)`.
pub fn rot_bandwidth(sample: &DyadicSample) -> Result<f64> {
    if !sample.is_complete() {
        return Err(Error::IncompleteSampleRequiresIncompletePath(
            sample.observed_fraction(),
        ));
    }
    let scale = spread_scale(sample.pair_values())?;
    let n = sample.n() as f64;
    Ok(0.9 * scale * (2.0 / (n * (n - 1.0))).powf(2.0 / 9.0))
}

/// Rule-of-thumb bandwidth on observed edges with effective size p̂·n(n-1).
pub fn rot_bandwidth_incomplete(sample: &DyadicSample) -> Result<f64> {
    if sample.n_observed() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let scale = spread_scale(&sample.observed_values())?;
    let n = sample.n() as f64;
    let p = sample.observed_fraction();
    Ok(0.9 * scale * (2.0 / (p * n * (n - 1.0))).powf(2.0 / 9.0))
}

/// Point estimates at many design points with a shared bandwidth.
///
/// Uses a sorted copy of the observed values so each point only touches the
/// edges inside its kernel window. Incomplete samples divide by N̂.
pub fn density_curve(
    sample: &DyadicSample,
    kernel: KernelSpec,
    grid: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::NonPositiveBandwidth(h));
    }
    if sample.n_observed() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let mut sorted = sample.observed_values();
    sorted.sort_by(f64::total_cmp);
    let denom = if sample.is_complete() {
        sample.n_pairs() as f64
    } else {
        sample.observed_fraction() * sample.n_pairs() as f64
    };
    let r = kernel.support_radius() * h;
    Ok(grid
        .iter()
        .map(|&x| {
            let lo = sorted.partition_point(|&v| v < x - r);
            let hi = sorted.partition_point(|&v| v <= x + r);
            let s: f64 = sorted[lo..hi]
                .iter()
                .map(|&v| kernel.evaluate((x - v) / h))
                .sum();
            s / h / denom
        })
        .collect())
}
