//! Symmetric edge-valued networks with an observation mask.
//!
//! Vertex ids in [`EdgeRecord`] are 1-based, as they appear in edge-list
//! files. Every index-based accessor on [`DyadicSample`] is 0-based.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// One `(i, j, value)` row of an edge list, with 1-based vertex ids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl EdgeRecord {
    pub fn new(i: usize, j: usize, value: f64) -> Self {
        EdgeRecord { i, j, value }
    }
}

/// Summary used to collapse repeated records of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateStat {
    Mean,
    P95,
    Max,
}

impl FromStr for AggregateStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(AggregateStat::Mean),
            "p95" => Ok(AggregateStat::P95),
            "max" => Ok(AggregateStat::Max),
            other => Err(Error::InvalidConfig(format!("unknown aggregate '{other}'"))),
        }
    }
}

impl fmt::Display for AggregateStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregateStat::Mean => "mean",
            AggregateStat::P95 => "p95",
            AggregateStat::Max => "max",
        })
    }
}

/// Number of unordered pairs among `n` vertices, C(n, 2).
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of the 0-based pair `i < j` in row-major upper-triangular order.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Undirected network on `n` vertices with one real value per observed pair.
///
/// Unobserved pairs store `NaN`; the mask alone decides observation, so an
/// observed value of exactly zero is an ordinary data point.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSample {
    n: usize,
    values: Vec<f64>,
    observed: Vec<bool>,
    n_observed: usize,
}

impl DyadicSample {
    /// Complete sample from values in upper-triangular order (see [`pair_index`]).
    pub fn complete(n: usize, values: Vec<f64>) -> Result<Self> {
        let observed = vec![true; values.len()];
        Self::with_mask(n, values, observed)
    }

    /// Sample from upper-triangular values and mask; masked-out values are discarded.
    pub fn with_mask(n: usize, mut values: Vec<f64>, observed: Vec<bool>) -> Result<Self> {
        if n < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: n });
        }
        let m = pair_count(n);
        if values.len() != m || observed.len() != m {
            return Err(Error::InvalidConfig(format!(
                "expected {m} pair entries for n = {n}, got {} values and {} mask entries",
                values.len(),
                observed.len()
            )));
        }
        let mut n_observed = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let k = pair_index(n, i, j);
                if observed[k] {
                    if !values[k].is_finite() {
                        return Err(Error::NonFiniteValue(i + 1, j + 1));
                    }
                    n_observed += 1;
                } else {
                    values[k] = f64::NAN;
                }
            }
        }
        Ok(DyadicSample {
            n,
            values,
            observed,
            n_observed,
        })
    }

    /// Builds a sample from one record per unordered pair; unlisted pairs are unobserved.
    pub fn from_edge_list(records: &[EdgeRecord], n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: n });
        }
        let m = pair_count(n);
        let mut values = vec![f64::NAN; m];
        let mut observed = vec![false; m];
        for r in records {
            let (a, b) = checked_pair(r, n)?;
            let k = pair_index(n, a, b);
            if observed[k] {
                return Err(Error::DuplicateEdge(a + 1, b + 1));
            }
            if !r.value.is_finite() {
                return Err(Error::NonFiniteValue(a + 1, b + 1));
            }
            observed[k] = true;
            values[k] = r.value;
        }
        Self::with_mask(n, values, observed)
    }

    /// Collapses any number of records per pair, pooling both orientations,
    /// into one value per pair using `stat`.
    pub fn aggregate_multi_records(
        records: &[EdgeRecord],
        stat: AggregateStat,
        n: usize,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: n });
        }
        let mut groups: HashMap<usize, Vec<f64>> = HashMap::new();
        for r in records {
            let (a, b) = checked_pair(r, n)?;
            if !r.value.is_finite() {
                return Err(Error::NonFiniteValue(a + 1, b + 1));
            }
            groups.entry(pair_index(n, a, b)).or_default().push(r.value);
        }
        let m = pair_count(n);
        let mut values = vec![f64::NAN; m];
        let mut observed = vec![false; m];
        for (k, mut vs) in groups {
            vs.sort_by(f64::total_cmp);
            values[k] = match stat {
                AggregateStat::Mean => stats::mean(&vs),
                AggregateStat::P95 => stats::quantile_sorted(&vs, 0.95),
                AggregateStat::Max => vs[vs.len() - 1],
            };
            observed[k] = true;
        }
        Self::with_mask(n, values, observed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_pairs(&self) -> usize {
        self.values.len()
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    /// True when every one of the C(n,2) pairs is observed.
    pub fn is_complete(&self) -> bool {
        self.n_observed == self.values.len()
    }

    /// p̂ = (#observed) / C(n,2).
    pub fn observed_fraction(&self) -> f64 {
        self.n_observed as f64 / self.values.len() as f64
    }

    /// Value of the 0-based pair `{i, j}` if observed; symmetric in its arguments.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j || i >= self.n || j >= self.n {
            return None;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = pair_index(self.n, a, b);
        self.observed[k].then_some(self.values[k])
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some()
    }

    /// Raw upper-triangular storage; unobserved entries are `NaN`.
    pub fn pair_values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.observed
    }

    /// Observed `(i, j, value)` with 0-based `i < j`, in upper-triangular order.
    pub fn observed_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.values.iter().zip(&self.observed))
            .filter_map(|((i, j), (&v, &o))| o.then_some((i, j, v)))
    }

    /// Values of all observed pairs.
    pub fn observed_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.observed)
            .filter_map(|(&v, &o)| o.then_some(v))
            .collect()
    }

    /// Observed edges as 1-based records.
    pub fn to_edge_list(&self) -> Vec<EdgeRecord> {
        self.observed_edges()
            .map(|(i, j, v)| EdgeRecord::new(i + 1, j + 1, v))
            .collect()
    }
}

fn checked_pair(r: &EdgeRecord, n: usize) -> Result<(usize, usize)> {
    for v in [r.i, r.j] {
        if v == 0 || v > n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    if r.i == r.j {
        return Err(Error::SelfLoop(r.i));
    }
    let (a, b) = if r.i < r.j { (r.i, r.j) } else { (r.j, r.i) };
    Ok((a - 1, b - 1))
}
