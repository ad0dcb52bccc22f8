//! Jackknife empirical likelihood (JEL), modified JEL (mJEL) and the
//! modified-jackknife Wald interval (mJK) for the dyadic KDE.
//!
//! With `a_i = n θ̂ - (n-1) θ̂^(i)` the JEL pseudo-values are
//! `V_i(θ) = a_i - θ`, an affine map with slope -1 in θ. The leave-two-out
//! quantities
//!
//! ```text
//! Q_ij = (n-3)/(n-1) [ n S(θ) - (n-1){S^(i)(θ) + S^(j)(θ)} + (n-2) S^(i,j)(θ) ]
//! ```
//!
//! do not depend on θ, so they are computed once at θ = θ̂. The modified
//! variance is `Γ_m² = mean V_i(θ̂)² - (1/n) Σ_{i<j} Q_ij²`.
//!
//! Incomplete samples use the same algebra on the p̂-scaled leave-out
//! estimates; the path is chosen from the sample's mask.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::el::{el_log_ratio, ElRatio};
use crate::error::{Error, Result};
use crate::estimator::{EstimationPath, KernelSums, LeaveOutEstimates};
use crate::kernel::KernelSpec;
use crate::sample::DyadicSample;
use crate::stats;

/// Inference method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "JEL")]
    Jel,
    #[serde(rename = "mJEL")]
    Mjel,
    #[serde(rename = "mJK")]
    Mjk,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Jel, Method::Mjel, Method::Mjk];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Jel => "JEL",
            Method::Mjel => "mJEL",
            Method::Mjk => "mJK",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jel" => Ok(Method::Jel),
            "mjel" => Ok(Method::Mjel),
            "mjk" | "mjk-wald" => Ok(Method::Mjk),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// Pseudo-values and variance terms for one hypothesized θ.
#[derive(Debug, Clone)]
pub struct PseudoValueSet {
    pub theta: f64,
    pub theta_hat: f64,
    /// V_i(θ) (V̂_i(θ) on the incomplete path).
    pub v_at_theta: Vec<f64>,
    /// V_i(θ̂), which sums to zero.
    pub v_at_theta_hat: Vec<f64>,
    /// Q_ij in upper-triangular pair order.
    pub q: Vec<f64>,
    /// Γ² = mean V_i(θ)².
    pub gamma_sq: f64,
    /// Γ_m²; may be ≤ 0 in finite samples, which the modified methods reject.
    pub gamma_m_sq: f64,
    pub incomplete: bool,
}

impl PseudoValueSet {
    /// Γ_m, or an error when Γ_m² ≤ 0.
    pub fn gamma_m(&self) -> Result<f64> {
        checked_gamma_m(self.gamma_m_sq)
    }
}

fn checked_gamma_m(gamma_m_sq: f64) -> Result<f64> {
    if gamma_m_sq > 0.0 {
        Ok(gamma_m_sq.sqrt())
    } else {
        Err(Error::NonPositiveModifiedVariance(gamma_m_sq))
    }
}

/// Q_ij evaluated from the displayed S-form at an arbitrary θ.
pub fn q_values(lo: &LeaveOutEstimates, theta: f64) -> Vec<f64> {
    let n = lo.n();
    let nf = n as f64;
    let pre = (nf - 3.0) / (nf - 1.0);
    let s = lo.theta_hat - theta;
    let mut q = Vec::with_capacity(lo.theta_hat_ij.len());
    let mut k = 0;
    for i in 0..n {
        let si = lo.theta_hat_i[i] - theta;
        for j in (i + 1)..n {
            let sj = lo.theta_hat_i[j] - theta;
            let sij = lo.theta_hat_ij[k] - theta;
            q.push(pre * (nf * s - (nf - 1.0) * (si + sj) + (nf - 2.0) * sij));
            k += 1;
        }
    }
    q
}

/// Everything needed to evaluate JEL/mJEL statistics at any θ in O(n).
#[derive(Debug, Clone)]
pub struct JackknifeEl {
    lo: LeaveOutEstimates,
    /// a_i = n θ̂ - (n-1) θ̂^(i); V_i(θ) = a_i - θ.
    centers: Vec<f64>,
    v_hat: Vec<f64>,
    q: Vec<f64>,
    gamma_m_sq: f64,
}

impl JackknifeEl {
    pub fn new(lo: LeaveOutEstimates) -> Self {
        let nf = lo.n() as f64;
        let centers: Vec<f64> = lo
            .theta_hat_i
            .iter()
            .map(|ti| nf * lo.theta_hat - (nf - 1.0) * ti)
            .collect();
        let v_hat: Vec<f64> = centers.iter().map(|a| a - lo.theta_hat).collect();
        let q = q_values(&lo, lo.theta_hat);
        let mean_v_sq = v_hat.iter().map(|v| v * v).sum::<f64>() / nf;
        let q_sq = q.iter().map(|v| v * v).sum::<f64>() / nf;
        JackknifeEl {
            lo,
            centers,
            v_hat,
            q,
            gamma_m_sq: mean_v_sq - q_sq,
        }
    }

    /// Builds kernel sums and leave-out estimates, picking the path from the mask.
    pub fn from_sample(sample: &DyadicSample, kernel: KernelSpec, x: f64, h: f64) -> Result<Self> {
        let sums = KernelSums::new(sample, kernel, x, h)?;
        Ok(Self::new(LeaveOutEstimates::new(&sums)?))
    }

    pub fn from_sample_with_path(
        sample: &DyadicSample,
        kernel: KernelSpec,
        x: f64,
        h: f64,
        path: EstimationPath,
    ) -> Result<Self> {
        let sums = KernelSums::new(sample, kernel, x, h)?;
        Ok(Self::new(LeaveOutEstimates::for_path(&sums, path)?))
    }

    pub fn n(&self) -> usize {
        self.lo.n()
    }

    pub fn theta_hat(&self) -> f64 {
        self.lo.theta_hat
    }

    pub fn leave_out(&self) -> &LeaveOutEstimates {
        &self.lo
    }

    pub fn gamma_m_sq(&self) -> f64 {
        self.gamma_m_sq
    }

    pub fn gamma_m(&self) -> Result<f64> {
        checked_gamma_m(self.gamma_m_sq)
    }

    /// V_i(θ) for all i.
    pub fn v_at(&self, theta: f64) -> Vec<f64> {
        self.centers.iter().map(|a| a - theta).collect()
    }

    /// V_i(θ̂).
    pub fn v_at_theta_hat(&self) -> &[f64] {
        &self.v_hat
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Γ² at θ: mean of V_i(θ)².
    pub fn gamma_sq(&self, theta: f64) -> f64 {
        let nf = self.n() as f64;
        self.centers.iter().map(|a| (a - theta).powi(2)).sum::<f64>() / nf
    }

    pub fn pseudo_values(&self, theta: f64) -> PseudoValueSet {
        PseudoValueSet {
            theta,
            theta_hat: self.theta_hat(),
            v_at_theta: self.v_at(theta),
            v_at_theta_hat: self.v_hat.clone(),
            q: self.q.clone(),
            gamma_sq: self.gamma_sq(theta),
            gamma_m_sq: self.gamma_m_sq,
            incomplete: self.lo.incomplete,
        }
    }

    /// V^m_i(θ) = V_i(θ̂) - (Γ/Γ_m)(θ - θ̂).
    pub fn modified_v_at(&self, theta: f64) -> Result<Vec<f64>> {
        let gm = self.gamma_m()?;
        let shift = self.gamma_sq(theta).sqrt() / gm * (theta - self.theta_hat());
        Ok(self.v_hat.iter().map(|v| v - shift).collect())
    }

    /// ℓ(θ), or ℓ̂(θ) on the incomplete path.
    pub fn jel(&self, theta: f64) -> Result<ElRatio> {
        el_log_ratio(&self.v_at(theta))
    }

    /// ℓ^m(θ), or ℓ̂^m(θ) on the incomplete path.
    pub fn mjel(&self, theta: f64) -> Result<ElRatio> {
        el_log_ratio(&self.modified_v_at(theta)?)
    }

    /// EL statistic for `method`; mJK is not an EL method and is rejected.
    pub fn statistic(&self, method: Method, theta: f64) -> Result<ElRatio> {
        match method {
            Method::Jel => self.jel(theta),
            Method::Mjel => self.mjel(theta),
            Method::Mjk => Err(Error::InvalidConfig(
                "mJK has no likelihood statistic; use the Wald interval".into(),
            )),
        }
    }

    /// `θ̂ ± n^{-1/2} z_{α/2} Γ_m`.
    pub fn mjk_interval(&self, alpha: f64) -> Result<InferenceResult> {
        check_alpha(alpha)?;
        let gm = self.gamma_m()?;
        let z = stats::normal_critical(alpha);
        let half = z * gm / (self.n() as f64).sqrt();
        let th = self.theta_hat();
        Ok(InferenceResult {
            method: Method::Mjk,
            statistic: 0.0,
            theta_hat: th,
            lower: th - half,
            upper: th + half,
            alpha,
            critical_value: z,
        })
    }

    /// Confidence interval `{θ : ℓ(θ) ≤ c_α}` by bracketing and bisection on
    /// each side of θ̂. The lower end is clamped at zero.
    pub fn invert(&self, alpha: f64, method: Method) -> Result<InferenceResult> {
        check_alpha(alpha)?;
        if method == Method::Mjk {
            return self.mjk_interval(alpha);
        }
        if method == Method::Mjel {
            self.gamma_m()?;
        }
        let crit = stats::chi2_1_critical(alpha);
        let th = self.theta_hat();
        let stat = |t: f64| -> Result<f64> { Ok(self.statistic(method, t)?.value()) };
        let at_hat = stat(th)?;

        let spread = if self.gamma_m_sq > 0.0 {
            self.gamma_m_sq.sqrt()
        } else {
            // JEL only: fall back to the plain jackknife scale.
            self.gamma_sq(th).sqrt()
        };
        let step = (spread / (self.n() as f64).sqrt()).max(1e-3 * (1.0 + th.abs()));

        let upper = self.crossing(&stat, th, step, crit, Side::Upper)?;
        let lower = self.crossing(&stat, th, step, crit, Side::Lower)?;
        Ok(InferenceResult {
            method,
            statistic: at_hat,
            theta_hat: th,
            lower,
            upper,
            alpha,
            critical_value: crit,
        })
    }

    fn crossing(
        &self,
        stat: &impl Fn(f64) -> Result<f64>,
        th: f64,
        step: f64,
        crit: f64,
        side: Side,
    ) -> Result<f64> {
        let dir = match side {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        };
        let mut inside = th;
        let mut s = step;
        let mut outside = None;
        for _ in 0..=MAX_DOUBLINGS {
            let t = (th + dir * s).max(if side == Side::Lower { 0.0 } else { f64::MIN });
            if stat(t)? > crit {
                outside = Some(t);
                break;
            }
            if side == Side::Lower && t == 0.0 {
                // densities are nonnegative
                return Ok(0.0);
            }
            inside = t;
            s *= 2.0;
        }
        let Some(mut out) = outside else {
            return Err(Error::BracketFailure {
                side: side.name(),
                critical: crit,
            });
        };
        while (out - inside).abs() > BISECT_TOL {
            let mid = 0.5 * (inside + out);
            if stat(mid)? <= crit {
                inside = mid;
            } else {
                out = mid;
            }
        }
        Ok(inside)
    }
}

impl JackknifeEl {
    /// Number of times the statistic crosses `crit` on `points` evenly spaced
    /// values of θ in `[lo, hi]`. A single-crossing-per-side interval gives 2
    /// when both ends are outside the region.
    pub fn count_crossings(
        &self,
        method: Method,
        crit: f64,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Result<usize> {
        let mut prev: Option<bool> = None;
        let mut crossings = 0;
        for k in 0..points {
            let t = lo + (hi - lo) * k as f64 / (points.max(2) - 1) as f64;
            let inside = self.statistic(method, t)?.value() <= crit;
            if prev.is_some_and(|p| p != inside) {
                crossings += 1;
            }
            prev = Some(inside);
        }
        Ok(crossings)
    }
}

const MAX_DOUBLINGS: usize = 60;
const BISECT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

impl Side {
    fn name(&self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// A confidence interval and the quantities it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InferenceResult {
    pub method: Method,
    /// Statistic at θ̂: zero for the EL methods up to solver precision.
    pub statistic: f64,
    pub theta_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    /// c_α for EL methods, z_{α/2} for mJK.
    pub critical_value: f64,
}

impl InferenceResult {
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }
}

/// Pseudo-values for a leave-out family at θ.
pub fn pseudo_values(lo: &LeaveOutEstimates, theta: f64) -> PseudoValueSet {
    JackknifeEl::new(lo.clone()).pseudo_values(theta)
}

/// V^m(θ) from a pseudo-value set.
pub fn modified_pseudo_values(pv: &PseudoValueSet) -> Result<Vec<f64>> {
    let gm = pv.gamma_m()?;
    let shift = pv.gamma_sq.sqrt() / gm * (pv.theta - pv.theta_hat);
    Ok(pv.v_at_theta_hat.iter().map(|v| v - shift).collect())
}

pub fn jel_statistic(
    sample: &DyadicSample,
    kernel: KernelSpec,
    x: f64,
    h: f64,
    theta: f64,
) -> Result<ElRatio> {
    JackknifeEl::from_sample(sample, kernel, x, h)?.jel(theta)
}

pub fn mjel_statistic(
    sample: &DyadicSample,
    kernel: KernelSpec,
    x: f64,
    h: f64,
    theta: f64,
) -> Result<ElRatio> {
    JackknifeEl::from_sample(sample, kernel, x, h)?.mjel(theta)
}

pub fn mjk_wald_interval(
    sample: &DyadicSample,
    kernel: KernelSpec,
    x: f64,
    h: f64,
    alpha: f64,
) -> Result<InferenceResult> {
    JackknifeEl::from_sample(sample, kernel, x, h)?.mjk_interval(alpha)
}

pub fn invert_test(
    sample: &DyadicSample,
    kernel: KernelSpec,
    x: f64,
    h: f64,
    alpha: f64,
    method: Method,
) -> Result<InferenceResult> {
    JackknifeEl::from_sample(sample, kernel, x, h)?.invert(alpha, method)
}
