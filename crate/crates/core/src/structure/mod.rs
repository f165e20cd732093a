//! Directed edge weights from pairwise F-information, maximum-weight
//! spanning arborescences and tree scoring.

mod arborescence;

use serde::{Deserialize, Serialize};

pub use arborescence::{brute_force_arborescence, max_arborescence, Arborescence, BRUTE_FORCE_MAX_NODES};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::empirical_f_information;
use crate::families::FamilyConfig;
use crate::parallel::{try_map_range, Execution};

/// `w[i][j]` is the estimated F-information from node `i` to node `j`,
/// stored row-major. The diagonal is unused and kept at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeightMatrix {
    m: usize,
    w: Vec<f64>,
}

impl EdgeWeightMatrix {
    pub fn new(m: usize, w: Vec<f64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("edge weights need at least 2 nodes"));
        }
        if w.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: w.len(),
            });
        }
        if (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| i * m + j)).any(|k| !w[k].is_finite()) {
            return Err(Error::NonFinite("edge weights"));
        }
        let mut w = w;
        for i in 0..m {
            w[i * m + i] = 0.0;
        }
        Ok(Self { m, w })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::invalid("edge-weight rows must form a square matrix"));
        }
        Self::new(m, rows.concat())
    }

    /// Builds the matrix by evaluating `weight(i, j)` for every ordered pair
    /// `i != j`. Pairs may run concurrently; the result does not depend on
    /// `exec`.
    pub fn from_fn<F>(m: usize, exec: Execution, weight: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync + Send,
    {
        if m < 2 {
            return Err(Error::invalid("edge weights need at least 2 nodes"));
        }
        let w = try_map_range(m * m, exec, |k| {
            let (i, j) = (k / m, k % m);
            if i == j {
                Ok(0.0)
            } else {
                weight(i, j)
            }
        })?;
        Self::new(m, w)
    }

    pub fn node_count(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.m + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.w.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Adds `c` to every off-diagonal entry.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.m, self.w.iter().map(|v| v + c).collect())
    }
}

/// Edge weights `w[i][j] = Î(X_i → X_j)` under the family `family_for(i, j)`,
/// using the in-sample estimate without clamping.
pub fn edge_weights<F>(dataset: &Dataset, family_for: F, exec: Execution) -> Result<EdgeWeightMatrix>
where
    F: Fn(usize, usize) -> FamilyConfig + Sync + Send,
{
    EdgeWeightMatrix::from_fn(dataset.num_variables(), exec, |i, j| {
        let config = family_for(i, j);
        empirical_f_information(&config, dataset.variable(i), dataset.variable(j), None, false)
            .map(|e| e.point_estimate)
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    #[default]
    Undirected,
    Directed,
}

/// Fraction of the `m − 1` edges of `found` that are absent from `truth`.
///
/// Undirected mode compares unordered node pairs; directed mode compares
/// parent maps, so a reversed edge counts as wrong.
pub fn wrong_edges_ratio(found: &Arborescence, truth: &Arborescence, mode: CompareMode) -> Result<f64> {
    let m = found.node_count();
    if truth.node_count() != m {
        return Err(Error::DimensionMismatch {
            expected: truth.node_count(),
            found: m,
        });
    }
    if m < 2 {
        return Err(Error::invalid("trees need at least 2 nodes"));
    }
    let key = |(p, c): (usize, usize)| match mode {
        CompareMode::Directed => (p, c),
        CompareMode::Undirected => (p.min(c), p.max(c)),
    };
    let truth_edges: std::collections::BTreeSet<_> = truth.edges().into_iter().map(key).collect();
    let wrong = found
        .edges()
        .into_iter()
        .filter(|e| !truth_edges.contains(&key(*e)))
        .count();
    Ok(wrong as f64 / (m - 1) as f64)
}

/// Per-edge sample sizes `(|D_j|, |D_ij|)` entering the structure bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSampleSizes {
    pub target: usize,
    pub pair: usize,
}

/// Lower-bound gap between the learned and optimal tree weights:
/// `2(m−1) · max_e (R + B √(2 log(1/δ)) (|D_j|^{-1/2} + |D_ij|^{-1/2}))`,
/// where `rademacher_terms` bounds `2R_ij + 2R_j` over all edges.
///
/// Requires `δ ∈ (0, 1/(2m(m−1)))`.
pub fn theorem2_gap(
    rademacher_terms: f64,
    b: f64,
    delta: f64,
    sample_sizes: &[EdgeSampleSizes],
    m: usize,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("the gap needs at least 2 nodes"));
    }
    let upper = 1.0 / (2.0 * m as f64 * (m - 1) as f64);
    if !(delta > 0.0 && delta < upper) {
        return Err(Error::invalid(format!("delta must lie in (0, {upper}), got {delta}")));
    }
    gap_unchecked(rademacher_terms, b, delta, sample_sizes, m)
}

fn gap_unchecked(
    rademacher_terms: f64,
    b: f64,
    delta: f64,
    sample_sizes: &[EdgeSampleSizes],
    m: usize,
) -> Result<f64> {
    if sample_sizes.is_empty() {
        return Err(Error::EmptySamples);
    }
    if sample_sizes.iter().any(|s| s.target == 0 || s.pair == 0) {
        return Err(Error::invalid("sample sizes must be positive"));
    }
    if !(rademacher_terms >= 0.0 && b > 0.0 && rademacher_terms.is_finite() && b.is_finite()) {
        return Err(Error::invalid("need R >= 0 and B > 0"));
    }
    let scale = b * (2.0 * (1.0 / delta).ln()).sqrt();
    let worst = sample_sizes
        .iter()
        .map(|s| (s.target as f64).powf(-0.5) + (s.pair as f64).powf(-0.5))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(2.0 * (m - 1) as f64 * (rademacher_terms + scale * worst))
}
