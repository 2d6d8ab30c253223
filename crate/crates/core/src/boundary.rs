//! Boundary degree: how lopsided a point's dc-neighborhood is.
//!
//! Each neighbor `x_j` of `x_i` contributes the neighborhood vector
//! `x_i - x_j`; summing them gives the local representative vector `H_i`, and
//! its p-norm (p = 1 by default) is the boundary degree. Interior points have
//! neighbors on all sides and a short `H_i`; points on the rim of a cluster, or
//! between clusters, do not.

use rayon::prelude::*;
use serde::Serialize;

use crate::datasets::Dataset;
use crate::density::DistanceIndex;
use crate::error::{Error, Result};
use crate::scalar::{total_cmp, Scalar};

pub const DEFAULT_LAMBDA: f64 = 0.10;

/// Raw per-point scores before any removal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryScores<T> {
    /// `+inf` for points with no neighbor inside `dc`.
    pub phi: Vec<T>,
    pub neighbor_counts: Vec<usize>,
    pub dc: T,
}

/// Boundary degree with the L1 norm.
pub fn boundary_degree<T: Scalar>(data: &Dataset<T>, index: &DistanceIndex<T>) -> Result<BoundaryScores<T>> {
    boundary_degree_with_norm(data, index, T::one())
}

/// Boundary degree with the Lp norm, `p >= 1`.
///
/// Neighborhoods are open balls: `j != i` with `d_ij < dc`.
pub fn boundary_degree_with_norm<T: Scalar>(
    data: &Dataset<T>,
    index: &DistanceIndex<T>,
    p: T,
) -> Result<BoundaryScores<T>> {
    if index.n() != data.n() {
        return Err(Error::InvalidArgument(format!(
            "distance index covers {} points, dataset has {}",
            index.n(),
            data.n()
        )));
    }
    if p.is_nan() || p < T::one() {
        return Err(Error::InvalidArgument(format!("norm exponent {p} must be >= 1")));
    }
    let dc = index.dc();
    let d = data.dim();
    let scored: Vec<(T, usize)> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let xi = data.row(i);
            // H_i = |N| * x_i - sum of neighbors, coordinate-wise.
            let mut neighbor_sum = vec![T::zero(); d];
            let mut count = 0usize;
            for (j, &dist) in index.row(i).iter().enumerate() {
                if j != i && dist < dc {
                    count += 1;
                    for (s, &v) in neighbor_sum.iter_mut().zip(data.row(j)) {
                        *s = *s + v;
                    }
                }
            }
            if count == 0 {
                return (T::infinity(), 0);
            }
            let m = T::of_usize(count);
            let components = xi.iter().zip(&neighbor_sum).map(|(&x, &s)| (m * x - s).abs());
            let phi =
                if p == T::one() { components.sum() } else { components.map(|c| c.powf(p)).sum::<T>().powf(p.recip()) };
            (phi, count)
        })
        .collect();
    let (phi, neighbor_counts) = scored.into_iter().unzip();
    Ok(BoundaryScores { phi, neighbor_counts, dc })
}

/// Scores plus the keep/remove decision for every original point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryProfile<T> {
    pub phi: Vec<T>,
    pub neighbor_counts: Vec<usize>,
    /// `true` = retained in the core subset.
    pub core_mask: Vec<bool>,
    pub lambda: f64,
    pub dc: T,
}

impl<T: Scalar> BoundaryProfile<T> {
    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn retained_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.core_mask[i]).collect()
    }

    pub fn removed_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.core_mask[i]).collect()
    }

    /// Original indices from most to least boundary-like.
    pub fn ranking(&self) -> Vec<usize> {
        removal_order(&self.phi, &self.neighbor_counts)
    }
}

/// `floor(n * lambda)`, with a 1e-9 slack so e.g. `0.29 * 100` yields 29.
pub fn removal_count(n: usize, lambda: f64) -> usize {
    let raw = n as f64 * lambda;
    (raw + 1e-9 * raw.max(1.0)).floor() as usize
}

/// Largest phi first; among equal phi, fewer neighbors first, then higher index.
fn removal_order<T: Scalar>(phi: &[T], counts: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| total_cmp(phi[b], phi[a]).then(counts[a].cmp(&counts[b])).then(b.cmp(&a)));
    order
}

/// Drops the `floor(n * lambda)` most boundary-like points. The returned
/// dataset keeps the original row order.
pub fn core_subset<T: Scalar>(
    data: &Dataset<T>,
    scores: &BoundaryScores<T>,
    lambda: f64,
) -> Result<(Dataset<T>, BoundaryProfile<T>)> {
    let n = data.n();
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1)")));
    }
    if scores.phi.len() != n || scores.neighbor_counts.len() != n {
        return Err(Error::InvalidArgument("boundary scores do not match the dataset".into()));
    }
    let remove = removal_count(n, lambda);
    if n - remove < 2 {
        return Err(Error::Degenerate(format!("removing {remove} of {n} points leaves fewer than 2")));
    }
    let mut core_mask = vec![true; n];
    for &i in removal_order(&scores.phi, &scores.neighbor_counts).iter().take(remove) {
        core_mask[i] = false;
    }
    let profile = BoundaryProfile {
        phi: scores.phi.clone(),
        neighbor_counts: scores.neighbor_counts.clone(),
        core_mask,
        lambda,
        dc: scores.dc,
    };
    let core = data.select(&profile.retained_indices())?;
    Ok((core, profile))
}

/// Projection of `h` onto the line spanned by `direction`:
/// `e (e^T e)^{-1} e^T h`.
pub fn project_onto_direction<T: Scalar>(direction: &[T], h: &[T]) -> Vec<T> {
    let gram: T = direction.iter().map(|&e| e * e).sum();
    let coefficient = gram.recip() * direction.iter().zip(h).map(|(&e, &v)| e * v).sum::<T>();
    direction.iter().map(|&e| e * coefficient).collect()
}

/// Checks that projecting the neighborhood vector `x_i - x_j` onto coordinate
/// axis `axis` gives `x_i[axis] - x_j[axis]` on that axis and zero elsewhere,
/// within 1e-12 (relative to the magnitude of the difference when it exceeds 1).
pub fn verify_projection_identity<T: Scalar>(xi: &[T], xj: &[T], axis: usize) -> bool {
    if xi.len() != xj.len() || axis >= xi.len() {
        return false;
    }
    let h: Vec<T> = xi.iter().zip(xj).map(|(&a, &b)| a - b).collect();
    let mut basis = vec![T::zero(); xi.len()];
    basis[axis] = T::one();
    let projected = project_onto_direction(&basis, &h);
    let expected = xi[axis] - xj[axis];
    let tol = T::of(1e-12) * expected.abs().max(T::one());
    projected.iter().enumerate().all(|(m, &v)| {
        let want = if m == axis { expected } else { T::zero() };
        (v - want).abs() <= tol
    })
}
