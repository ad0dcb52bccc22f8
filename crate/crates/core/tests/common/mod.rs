//! Naive reference implementations shared by the integration tests.
//!
//! Everything here recomputes from index sets with no cached sums, so it can
//! serve as an independent check on the optimized code paths.

#![allow(dead_code)]

use dyadkde::DyadicSample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Epanechnikov on [-1, 1], written out rather than taken from the crate.
pub fn epan(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

pub fn choose2(m: usize) -> f64 {
    (m * m.saturating_sub(1)) as f64 / 2.0
}

/// Observed (i, j, value) triples with 0-based i < j.
fn triples(s: &DyadicSample) -> Vec<(usize, usize, f64)> {
    let n = s.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(v) = s.get(i, j) {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Brute-force quantities for one sample, kernel Epanechnikov.
#[derive(Debug, Clone)]
pub struct Naive {
    pub n: usize,
    pub theta_hat: f64,
    pub theta_i: Vec<f64>,
    /// Full n×n table, diagonal unused.
    pub theta_ij: Vec<Vec<f64>>,
}

impl Naive {
    /// `incomplete` selects p̂-scaled denominators.
    pub fn new(s: &DyadicSample, x: f64, h: f64, incomplete: bool) -> Naive {
        let n = s.n();
        let edges = triples(s);
        let p_hat = edges.len() as f64 / choose2(n);
        let scale = if incomplete { p_hat } else { 1.0 };
        let k = |v: f64| epan((x - v) / h) / h;
        let sum_excluding = |skip: &[usize]| -> f64 {
            edges
                .iter()
                .filter(|(i, j, _)| !skip.contains(i) && !skip.contains(j))
                .map(|&(_, _, v)| k(v))
                .sum()
        };
        let theta_hat = sum_excluding(&[]) / (scale * choose2(n));
        let theta_i = (0..n)
            .map(|i| sum_excluding(&[i]) / (scale * choose2(n - 1)))
            .collect();
        let mut theta_ij = vec![vec![f64::NAN; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    theta_ij[i][j] = sum_excluding(&[i, j]) / (scale * choose2(n - 2));
                }
            }
        }
        Naive {
            n,
            theta_hat,
            theta_i,
            theta_ij,
        }
    }

    /// V_i(θ) = nS(θ) - (n-1)S^(i)(θ) with S^(·)(θ) = θ̂^(·) - θ.
    pub fn v(&self, theta: f64) -> Vec<f64> {
        let nf = self.n as f64;
        self.theta_i
            .iter()
            .map(|ti| nf * (self.theta_hat - theta) - (nf - 1.0) * (ti - theta))
            .collect()
    }

    /// Q_ij in upper-triangular order, from the S-form at `theta`.
    pub fn q(&self, theta: f64) -> Vec<f64> {
        let n = self.n;
        let nf = n as f64;
        let c = (nf - 3.0) / (nf - 1.0);
        let s = self.theta_hat - theta;
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let si = self.theta_i[i] - theta;
                let sj = self.theta_i[j] - theta;
                let sij = self.theta_ij[i][j] - theta;
                out.push(c * (nf * s - (nf - 1.0) * (si + sj) + (nf - 2.0) * sij));
            }
        }
        out
    }

    pub fn gamma_sq(&self, theta: f64) -> f64 {
        let v = self.v(theta);
        v.iter().map(|x| x * x).sum::<f64>() / self.n as f64
    }

    pub fn gamma_m_sq(&self) -> f64 {
        let q = self.q(self.theta_hat);
        self.gamma_sq(self.theta_hat) - q.iter().map(|x| x * x).sum::<f64>() / self.n as f64
    }
}

/// -2 Σ log(n w_i) maximized over the simplex subject to Σ w_i v_i = 0,
/// by equality-constrained Newton on the weights. `None` if 0 is outside
/// the convex hull of `v`.
pub fn primal_el(v: &[f64]) -> Option<f64> {
    let m = v.len();
    let mf = m as f64;
    let sp: f64 = v.iter().filter(|&&x| x > 0.0).sum();
    let sn: f64 = -v.iter().filter(|&&x| x < 0.0).sum::<f64>();
    if sp == 0.0 || sn == 0.0 {
        return None;
    }
    // strictly positive feasible start
    let base = 0.5 / mf;
    let drift = base * (sp - sn);
    let mut w: Vec<f64> = v
        .iter()
        .map(|&x| {
            if drift > 0.0 && x < 0.0 {
                base + drift / sn
            } else if drift < 0.0 && x > 0.0 {
                base - drift / sp
            } else {
                base
            }
        })
        .collect();
    let tot: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= tot);

    let obj = |w: &[f64]| -> f64 { -w.iter().map(|x| x.ln()).sum::<f64>() };
    for _ in 0..200 {
        // minimize -Σ log w subject to 1'w = 1, v'w = 0; H = diag(1/w²), g = -1/w
        let hinv: Vec<f64> = w.iter().map(|x| x * x).collect();
        let g: Vec<f64> = w.iter().map(|x| -1.0 / x).collect();
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..m {
            a11 += hinv[k];
            a12 += hinv[k] * v[k];
            a22 += hinv[k] * v[k] * v[k];
            b1 -= hinv[k] * g[k];
            b2 -= hinv[k] * g[k] * v[k];
        }
        let det = a11 * a22 - a12 * a12;
        let nu1 = (b1 * a22 - b2 * a12) / det;
        let nu2 = (a11 * b2 - a12 * b1) / det;
        let dw: Vec<f64> = (0..m)
            .map(|k| -hinv[k] * (g[k] + nu1 + nu2 * v[k]))
            .collect();
        let decrement: f64 = (0..m).map(|k| -g[k] * dw[k]).sum();
        if decrement < 1e-20 {
            break;
        }
        let f0 = obj(&w);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = (0..m).map(|k| w[k] + t * dw[k]).collect();
            if trial.iter().all(|&x| x > 0.0) && obj(&trial) <= f0 - 0.25 * t * decrement {
                w = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                break;
            }
        }
        if t < 1e-20 {
            break;
        }
    }
    Some(-2.0 * w.iter().map(|x| (mf * x).ln()).sum::<f64>())
}

/// Random complete or masked sample with the simulation's vertex structure.
/// Values cluster near zero so a design point in [-1, 1] sees many edges.
pub fn random_sample(r: &mut ChaCha8Rng, n: usize, p: f64) -> DyadicSample {
    let u: Vec<f64> = (0..n)
        .map(|_| if r.random::<f64>() < 1.0 / 3.0 { -1.0 } else { 1.0 })
        .collect();
    let beta = r.random::<f64>();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let e: f64 = StandardNormal.sample(r);
            values.push(beta * u[i] * u[j] * 0.5 + e);
            mask.push(p >= 1.0 || r.random::<f64>() < p);
        }
    }
    if mask.iter().all(|&b| b) {
        DyadicSample::complete(n, values).unwrap()
    } else {
        DyadicSample::with_mask(n, values, mask).unwrap()
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
        || (a - b).abs() <= tol * 1e-3
}
