//! Reference oracles for tests.
//!
//! These are deliberately literal, single-threaded re-derivations that share
//! no code with the production paths they check: distances are recomputed
//! here, permutations are enumerated here, and neighborhood vectors are built
//! one by one.

use serde::Serialize;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::matching::{CostMatrix, MatchingResult};
use crate::scalar::Scalar;

pub const MAX_ORACLE_K: usize = 8;
pub const MAX_ORACLE_N: usize = 200;

/// One oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub instance: String,
    pub expected: f64,
    pub actual: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub pass: bool,
}

impl OracleResult {
    /// Passes when the absolute error is within `abs_tol` or the relative
    /// error within `rel_tol`. Two infinities of the same sign agree.
    pub fn compare(instance: impl Into<String>, expected: f64, actual: f64, abs_tol: f64, rel_tol: f64) -> Self {
        let (abs_error, rel_error) = if expected == actual {
            (0.0, 0.0)
        } else {
            let abs = (expected - actual).abs();
            (abs, abs / expected.abs().max(f64::MIN_POSITIVE))
        };
        let pass = abs_error <= abs_tol || rel_error <= rel_tol;
        Self { instance: instance.into(), expected, actual, abs_error, rel_error, pass: pass && !abs_error.is_nan() }
    }
}

fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for m in 0..a.len() {
        let diff = a[m] - b[m];
        s = s + diff * diff;
    }
    s.sqrt()
}

/// Minimum-loss matching by enumerating all `k!` permutations in
/// lexicographic order; the first minimum found wins ties.
pub fn brute_force_matching<T: Scalar>(costs: &CostMatrix<T>) -> Result<MatchingResult<T>> {
    let k = costs.k();
    if k > MAX_ORACLE_K {
        return Err(Error::InvalidArgument(format!("oracle enumeration capped at k = {MAX_ORACLE_K}, got {k}")));
    }
    let loss_of = |perm: &[usize]| {
        let mut total = T::zero();
        for (p, &q) in perm.iter().enumerate() {
            total = total + costs.get(p, q);
        }
        total / T::of_usize(k)
    };
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut stack = Vec::with_capacity(k);
    let mut used = vec![false; k];
    enumerate(k, &mut stack, &mut used, &mut |perm| {
        let loss = loss_of(perm);
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, perm.to_vec()));
        }
    });
    let (loss, assignment) = best.expect("k >= 1");
    let pair_costs = assignment.iter().enumerate().map(|(p, &q)| costs.get(p, q)).collect();
    Ok(MatchingResult { assignment, pair_costs, loss })
}

// Depth-first generation visits permutations in lexicographic order.
fn enumerate(k: usize, stack: &mut Vec<usize>, used: &mut [bool], visit: &mut impl FnMut(&[usize])) {
    if stack.len() == k {
        visit(stack);
        return;
    }
    for q in 0..k {
        if !used[q] {
            used[q] = true;
            stack.push(q);
            enumerate(k, stack, used, visit);
            stack.pop();
            used[q] = false;
        }
    }
}

/// Boundary degree (L1) built from explicit neighborhood vectors
/// `h_ij = x_i - x_j` for every `j` with `0 < ... d_ij < dc`, `j != i`.
/// Points without neighbors get `+inf`.
pub fn brute_force_boundary<T: Scalar>(data: &Dataset<T>, dc: T) -> Result<Vec<T>> {
    let n = data.n();
    if n > MAX_ORACLE_N {
        return Err(Error::InvalidArgument(format!("oracle capped at n = {MAX_ORACLE_N}, got {n}")));
    }
    let d = data.dim();
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let xi = data.row(i);
        let mut vectors: Vec<Vec<T>> = Vec::new();
        for j in 0..n {
            if j != i && dist(xi, data.row(j)) < dc {
                let xj = data.row(j);
                vectors.push((0..d).map(|m| xi[m] - xj[m]).collect());
            }
        }
        if vectors.is_empty() {
            phi.push(T::infinity());
            continue;
        }
        let mut local = vec![T::zero(); d];
        for h in &vectors {
            for m in 0..d {
                local[m] = local[m] + h[m];
            }
        }
        let mut norm = T::zero();
        for v in local {
            norm = norm + v.abs();
        }
        phi.push(norm);
    }
    Ok(phi)
}

/// Nearest-denser-point distance by a direct scan. Point `j` is denser than
/// `i` when `rho[j] > rho[i]`, or the two are equal and `j < i`; a point with
/// no denser point takes its largest distance.
pub fn brute_force_delta<T: Scalar>(data: &Dataset<T>, rho: &[T]) -> Result<Vec<T>> {
    let n = data.n();
    if n > MAX_ORACLE_N {
        return Err(Error::InvalidArgument(format!("oracle capped at n = {MAX_ORACLE_N}, got {n}")));
    }
    if rho.len() != n {
        return Err(Error::InvalidArgument("rho length differs from n".into()));
    }
    let mut delta = Vec::with_capacity(n);
    for i in 0..n {
        let mut nearest: Option<T> = None;
        let mut farthest = T::zero();
        for j in 0..n {
            if j == i {
                continue;
            }
            let dij = dist(data.row(i), data.row(j));
            if dij > farthest {
                farthest = dij;
            }
            let higher = rho[j] > rho[i] || (rho[j] == rho[i] && j < i);
            if higher && nearest.is_none_or(|m| dij < m) {
                nearest = Some(dij);
            }
        }
        delta.push(nearest.unwrap_or(farthest));
    }
    Ok(delta)
}
