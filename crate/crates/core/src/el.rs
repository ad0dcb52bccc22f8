//! Empirical likelihood ratio for a zero mean, solved through its
//! one-dimensional Lagrangian dual.
//!
//! For pseudo-values v the statistic is `2 sup_λ Σ log(1 + λ v_i)`. The
//! supremum is attained at the root of
//!
//! ```text
//! g(λ) = Σ v_i / (1 + λ v_i)
//! ```
//!
//! on `(-1/max v, -1/min v)`, where g decreases strictly from +∞ to -∞.
//! A safeguarded Newton iteration keeps a sign bracket and falls back to
//! bisection whenever the Newton step leaves it.

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const EDGE_MARGIN: f64 = 1e-12;
const WIDTH_TOL: f64 = 1e-14;

/// Outcome of the dual solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElRatio {
    /// Zero is inside the convex hull of the pseudo-values.
    Finite { statistic: f64, lambda: f64 },
    /// Every nonzero pseudo-value has the same sign; no weights satisfy the
    /// mean constraint and the statistic is +∞.
    Infeasible,
}

impl ElRatio {
    /// Statistic value, `+∞` when infeasible.
    pub fn value(&self) -> f64 {
        match *self {
            ElRatio::Finite { statistic, .. } => statistic,
            ElRatio::Infeasible => f64::INFINITY,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            ElRatio::Finite { lambda, .. } => Some(lambda),
            ElRatio::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, ElRatio::Finite { .. })
    }
}

/// g(λ) = Σ v_i / (1 + λ v_i).
pub fn dual_gradient(v: &[f64], lambda: f64) -> f64 {
    v.iter().map(|&vi| vi / (1.0 + lambda * vi)).sum()
}

/// -2 log of the empirical likelihood ratio for mean zero.
pub fn el_log_ratio(v: &[f64]) -> Result<ElRatio> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (min, max) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if v.is_empty() || (min == 0.0 && max == 0.0) {
        return Ok(ElRatio::Finite { statistic: 0.0, lambda: 0.0 });
    }
    if min >= 0.0 || max <= 0.0 {
        return Ok(ElRatio::Infeasible);
    }

    // ℓ is invariant to rescaling v; work with max|v| = 1 and map λ back.
    let scale = max.max(-min);
    let w: Vec<f64> = v.iter().map(|&x| x / scale).collect();
    let abs_sum: f64 = v.iter().map(|x| x.abs()).sum();
    let abs_sum_w = abs_sum / scale;
    // |g_v(λ)| = |g_w(λ·scale)| · scale, so this also bounds the unscaled gradient.
    let tol = (1e-12 * (1.0 + abs_sum_w)).min(1e-10 * (1.0 + abs_sum) / scale);

    let lo_edge = -scale / max;
    let hi_edge = -scale / min;
    let margin = EDGE_MARGIN * (hi_edge - lo_edge);
    let (mut a, mut b) = (lo_edge + margin, hi_edge - margin);

    let mut lambda = 0.0;
    for _ in 0..MAX_ITER {
        let (mut g, mut dg) = (0.0, 0.0);
        for &wi in &w {
            let d = 1.0 / (1.0 + lambda * wi);
            let t = wi * d;
            g += t;
            dg -= t * t;
        }
        if g.abs() <= tol {
            break;
        }
        if g > 0.0 {
            a = lambda;
        } else {
            b = lambda;
        }
        if b - a <= WIDTH_TOL {
            break;
        }
        let newton = lambda - g / dg;
        lambda = if newton > a && newton < b && newton.is_finite() {
            newton
        } else {
            0.5 * (a + b)
        };
    }

    let statistic = 2.0 * w.iter().map(|&wi| (lambda * wi).ln_1p()).sum::<f64>();
    Ok(ElRatio::Finite {
        statistic: statistic.max(0.0),
        lambda: lambda / scale,
    })
}
