//! Pairwise distances, the cutoff radius, and the density-peak scores used to
//! rank candidate cluster centers.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::partition::{CenterKind, CenterSet};
use crate::scalar::{euclidean, total_cmp, Scalar};

pub const DEFAULT_DC_PERCENTILE: f64 = 0.02;

/// Dense symmetric distance matrix plus the cutoff radius `dc`.
///
/// Storage is `n * n` scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceIndex<T> {
    distances: Array2<T>,
    dc: T,
    percentile: Option<f64>,
}

impl<T: Scalar> DistanceIndex<T> {
    /// Index whose cutoff is the `percentile` position of the sorted distinct
    /// pairwise distances, see [`cutoff_position`].
    pub fn build(data: &Dataset<T>, percentile: f64) -> Result<Self> {
        if !(percentile > 0.0 && percentile < 1.0) {
            return Err(Error::InvalidArgument(format!("dc percentile {percentile} outside (0, 1)")));
        }
        let distances = pairwise_distances(data);
        let n = data.n();
        let mut pairs: Vec<T> = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push(distances[[i, j]]);
            }
        }
        let pos = cutoff_position(pairs.len(), percentile) - 1;
        let (_, &mut at, _) = pairs.select_nth_unstable_by(pos, |a, b| total_cmp(*a, *b));
        let dc = if at > T::zero() {
            at
        } else {
            // Duplicate points: promote to the smallest positive distance.
            pairs
                .iter()
                .copied()
                .filter(|&v| v > T::zero())
                .min_by(|a, b| total_cmp(*a, *b))
                .ok_or_else(|| Error::Degenerate("all points are identical".into()))?
        };
        Ok(Self { distances, dc, percentile: Some(percentile) })
    }

    /// Index with an explicit cutoff radius.
    pub fn with_cutoff(data: &Dataset<T>, dc: T) -> Result<Self> {
        if !(dc > T::zero() && dc.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff radius {dc} must be positive")));
        }
        Ok(Self { distances: pairwise_distances(data), dc, percentile: None })
    }

    pub fn n(&self) -> usize {
        self.distances.nrows()
    }

    pub fn dc(&self) -> T {
        self.dc
    }

    /// `None` when the cutoff was given explicitly.
    pub fn percentile(&self) -> Option<f64> {
        self.percentile
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        self.distances[[i, j]]
    }

    pub fn distances(&self) -> &Array2<T> {
        &self.distances
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.distances.row(i).to_slice().expect("distance matrix is in standard layout")
    }
}

/// 1-based position of the cutoff in the ascending list of `m` pair
/// distances: `ceil(percentile * m)` clamped to `[1, m]`. A relative slack of
/// 1e-9 absorbs products such as `0.02 * 44850` that land a rounding error
/// above an integer.
pub fn cutoff_position(m: usize, percentile: f64) -> usize {
    let raw = percentile * m as f64;
    let pos = (raw - 1e-9 * raw.max(1.0)).ceil();
    (pos.max(1.0) as usize).min(m.max(1))
}

fn pairwise_distances<T: Scalar>(data: &Dataset<T>) -> Array2<T> {
    let n = data.n();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = data.row(i);
            (0..n).map(|j| if i == j { T::zero() } else { euclidean(xi, data.row(j)) }).collect()
        })
        .collect();
    let mut out = Array2::from_shape_vec((n, n), rows.into_iter().flatten().collect()).expect("n * n distances");
    // Mirror the upper triangle so symmetry is exact.
    for i in 0..n {
        for j in 0..i {
            out[[i, j]] = out[[j, i]];
        }
    }
    out
}

/// Per-point local density `rho`, separation `delta`, and `gamma = rho * delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile<T> {
    pub rho: Vec<T>,
    pub delta: Vec<T>,
    pub gamma: Vec<T>,
    /// Point indices by descending gamma, ties by ascending index.
    pub order: Vec<usize>,
    pub dc: T,
}

/// Gaussian-kernel density and nearest-denser-point distance for every point.
///
/// The densest point takes its largest distance to any other point as `delta`.
pub fn density_profile<T: Scalar>(index: &DistanceIndex<T>) -> DensityProfile<T> {
    let n = index.n();
    let dc = index.dc();
    let rho: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            index
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| {
                    let r = d / dc;
                    (-(r * r)).exp()
                })
                .sum()
        })
        .collect();

    // Denser = higher rho, or equal rho and lower index. Walking points in that
    // order, each point's denser set is exactly the prefix before it.
    let mut by_density: Vec<usize> = (0..n).collect();
    by_density.sort_by(|&a, &b| total_cmp(rho[b], rho[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (r, &i) in by_density.iter().enumerate() {
        rank[i] = r;
    }
    let delta: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = index.row(i);
            if rank[i] == 0 {
                row.iter().copied().fold(T::zero(), T::max)
            } else {
                by_density[..rank[i]].iter().map(|&j| row[j]).fold(T::infinity(), T::min)
            }
        })
        .collect();

    let gamma: Vec<T> = rho.iter().zip(&delta).map(|(&r, &d)| r * d).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ascending index among equal gamma.
    order.sort_by(|&a, &b| total_cmp(gamma[b], gamma[a]));

    DensityProfile { rho, delta, gamma, order, dc }
}

/// The `k` points with the largest gamma, in gamma order.
pub fn density_centers<T: Scalar>(profile: &DensityProfile<T>, data: &Dataset<T>, k: usize) -> Result<CenterSet<T>> {
    let n = data.n();
    if profile.order.len() != n {
        return Err(Error::InvalidArgument(format!("profile covers {} points, dataset has {n}", profile.order.len())));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={n}")));
    }
    let picked = &profile.order[..k];
    let rows: Vec<Vec<T>> = picked.iter().map(|&i| data.row(i).to_vec()).collect();
    CenterSet::new(rows, CenterKind::Density, Some(picked.to_vec()))
}
