//! Minimum-loss complete matching between mean centers and density centers.
//!
//! The loss of a matching is the mean squared distance over its `k` pairs. The
//! optimum over all `k!` matchings is found as a linear assignment problem
//! (Hungarian method, O(k^3)).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{CenterKind, CenterSet};
use crate::scalar::{squared_distance, Scalar};

/// Largest `k` for which ties are canonicalized by full enumeration.
pub const ENUMERATION_LIMIT: usize = 7;

/// Dense `k x k` table; entry `(p, q)` is the squared distance between mean
/// center `p` and density center `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMatrix<T> {
    costs: Vec<Vec<T>>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(costs: Vec<Vec<T>>) -> Result<Self> {
        let k = costs.len();
        if k == 0 || costs.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("cost matrix must be square and non-empty".into()));
        }
        for (row, r) in costs.iter().enumerate() {
            for (column, v) in r.iter().enumerate() {
                if v.is_nan() {
                    return Err(Error::NanCost { row, column });
                }
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!("infinite cost at ({row}, {column})")));
                }
            }
        }
        Ok(Self { costs })
    }

    pub fn k(&self) -> usize {
        self.costs.len()
    }

    pub fn get(&self, row: usize, column: usize) -> T {
        self.costs[row][column]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.costs
    }
}

/// Squared distances between every mean center (rows) and every density
/// center (columns).
pub fn build_cost_matrix<T: Scalar>(mean_set: &CenterSet<T>, density_set: &CenterSet<T>) -> Result<CostMatrix<T>> {
    if mean_set.kind() != CenterKind::Mean || density_set.kind() != CenterKind::Density {
        return Err(Error::CenterMismatch(format!(
            "expected (mean, density) sets, got ({:?}, {:?})",
            mean_set.kind(),
            density_set.kind()
        )));
    }
    pairwise_costs(mean_set, density_set)
}

/// Like [`build_cost_matrix`] without the kind check; used when both sides are
/// mean centers.
pub fn pairwise_costs<T: Scalar>(rows: &CenterSet<T>, columns: &CenterSet<T>) -> Result<CostMatrix<T>> {
    if rows.k() != columns.k() {
        return Err(Error::CenterMismatch(format!("{} vs {} centers", rows.k(), columns.k())));
    }
    if rows.dim() != columns.dim() {
        return Err(Error::CenterMismatch(format!("dimension {} vs {}", rows.dim(), columns.dim())));
    }
    let costs =
        rows.centers().iter().map(|p| columns.centers().iter().map(|q| squared_distance(p, q)).collect()).collect();
    CostMatrix::new(costs)
}

/// An optimal pairing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingResult<T> {
    /// `assignment[p]` is the density center matched to mean center `p`.
    pub assignment: Vec<usize>,
    pub pair_costs: Vec<T>,
    /// Mean of `pair_costs`.
    pub loss: T,
}

/// Loss of `assignment`: pair costs summed in row order, divided by `k`.
pub fn matching_loss<T: Scalar>(costs: &CostMatrix<T>, assignment: &[usize]) -> T {
    let total: T = assignment.iter().enumerate().map(|(p, &q)| costs.get(p, q)).sum();
    total / T::of_usize(costs.k())
}

fn result_for<T: Scalar>(costs: &CostMatrix<T>, assignment: Vec<usize>) -> MatchingResult<T> {
    let pair_costs = assignment.iter().enumerate().map(|(p, &q)| costs.get(p, q)).collect();
    let loss = matching_loss(costs, &assignment);
    MatchingResult { assignment, pair_costs, loss }
}

/// Raw Hungarian solution (shortest augmenting paths with dual potentials).
/// Returns `assignment[row] = column`; ties are not canonicalized.
pub fn solve_assignment<T: Scalar>(costs: &CostMatrix<T>) -> Vec<usize> {
    let n = costs.k();
    let inf = T::infinity();
    // 1-based with a sentinel column 0.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = costs.get(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum-loss complete matching. Among matchings with equal loss the
/// lexicographically smallest assignment is returned: exactly, by ordered
/// enumeration, for `k <= ENUMERATION_LIMIT`, and by a lexicographically
/// descending 2-swap search above that.
pub fn min_cost_matching<T: Scalar>(costs: &CostMatrix<T>) -> Result<MatchingResult<T>> {
    let k = costs.k();
    let solved = solve_assignment(costs);
    let best = matching_loss(costs, &solved);
    let assignment = if k <= ENUMERATION_LIMIT {
        first_in_lex_order_within(costs, best).unwrap_or(solved)
    } else {
        descend_by_swaps(costs, solved)
    };
    Ok(result_for(costs, assignment))
}

/// First permutation in lexicographic order whose loss does not exceed `bound`.
fn first_in_lex_order_within<T: Scalar>(costs: &CostMatrix<T>, bound: T) -> Option<Vec<usize>> {
    let mut perm: Vec<usize> = (0..costs.k()).collect();
    loop {
        if matching_loss(costs, &perm) <= bound {
            return Some(perm);
        }
        if !next_permutation(&mut perm) {
            return None;
        }
    }
}

/// Applies any swap that makes the assignment lexicographically smaller
/// without raising the loss, until none remains.
fn descend_by_swaps<T: Scalar>(costs: &CostMatrix<T>, mut perm: Vec<usize>) -> Vec<usize> {
    let k = perm.len();
    let mut loss = matching_loss(costs, &perm);
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..k {
            for j in i + 1..k {
                if perm[j] >= perm[i] {
                    continue;
                }
                perm.swap(i, j);
                let swapped = matching_loss(costs, &perm);
                if swapped <= loss {
                    loss = swapped;
                    changed = true;
                } else {
                    perm.swap(i, j);
                }
            }
        }
    }
    perm
}

/// Advances to the next lexicographic permutation; false after the last one.
fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(i) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = perm.iter().rposition(|&x| x > perm[i]).expect("successor exists");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}
