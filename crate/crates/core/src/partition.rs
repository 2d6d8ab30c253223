//! K-means mean centers: k-means++ seeding, Lloyd iterations, best of several
//! restarts.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{squared_distance, total_cmp, Scalar};
use crate::seed::rng_for;

/// Where a center set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterKind {
    Density,
    Mean,
}

/// `k` center coordinates of one kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterSet<T> {
    centers: Vec<Vec<T>>,
    kind: CenterKind,
    source_indices: Option<Vec<usize>>,
}

impl<T: Scalar> CenterSet<T> {
    pub fn new(centers: Vec<Vec<T>>, kind: CenterKind, source_indices: Option<Vec<usize>>) -> Result<Self> {
        let d = centers.first().map_or(0, Vec::len);
        if centers.is_empty() || d == 0 {
            return Err(Error::CenterMismatch("empty center set".into()));
        }
        if centers.iter().any(|c| c.len() != d) {
            return Err(Error::CenterMismatch("centers differ in dimension".into()));
        }
        if centers.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::CenterMismatch("NaN center coordinate".into()));
        }
        if let Some(src) = &source_indices {
            if kind != CenterKind::Density {
                return Err(Error::CenterMismatch("only density centers carry source indices".into()));
            }
            let mut sorted = src.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if src.len() != centers.len() || sorted.len() != src.len() {
                return Err(Error::CenterMismatch("source indices must be distinct, one per center".into()));
            }
        }
        Ok(Self { centers, kind, source_indices })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn kind(&self) -> CenterKind {
        self.kind
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    pub fn center(&self, i: usize) -> &[T] {
        &self.centers[i]
    }

    pub fn source_indices(&self) -> Option<&[usize]> {
        self.source_indices.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once no center moves farther than this.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 10, max_iters: 300, tol: 1e-6 }
    }
}

/// Outcome of one Lloyd run.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun<T> {
    /// Row-major `k * d`; each center is the mean of the points labeled with it.
    pub centers: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub sse: T,
    pub iterations: usize,
    /// Within-cluster SSE after every iteration.
    pub sse_trace: Vec<T>,
}

/// Best-of-restarts K-means fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<T> {
    pub centers: CenterSet<T>,
    pub labels: Vec<usize>,
    pub sse: T,
    pub best_restart: usize,
}

/// Number of distinct rows, counting no further than `cap`.
pub fn distinct_rows<T: Scalar>(data: &Dataset<T>, cap: usize) -> usize {
    let mut idx: Vec<usize> = (0..data.n()).collect();
    let cmp_rows = |a: usize, b: usize| -> Ordering {
        data.row(a)
            .iter()
            .zip(data.row(b))
            .map(|(x, y)| total_cmp(*x, *y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    idx.sort_by(|&a, &b| cmp_rows(a, b));
    let mut count = usize::from(!idx.is_empty());
    for w in idx.windows(2) {
        if count >= cap {
            break;
        }
        if cmp_rows(w[0], w[1]).is_ne() {
            count += 1;
        }
    }
    count
}

/// K-means with `config.restarts` greedy k-means++ initialisations; keeps the run with
/// the lowest SSE (ties: earliest restart). Restart `r` draws from the seed
/// substream `(seed, r)`.
pub fn kmeans<T: Scalar>(data: &Dataset<T>, k: usize, config: &KMeansConfig, seed: u64) -> Result<KMeansFit<T>> {
    let n = data.n();
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={n}")));
    }
    if config.restarts == 0 || config.max_iters == 0 || config.tol.is_nan() || config.tol < 0.0 {
        return Err(Error::InvalidArgument(format!("invalid k-means settings {config:?}")));
    }
    let distinct = distinct_rows(data, k);
    if distinct < k {
        return Err(Error::TooFewDistinct { k, distinct });
    }
    let runs: Vec<LloydRun<T>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, &[r as u64]);
            let init = plus_plus_init(data, k, &mut rng);
            lloyd(data, init, config.max_iters, T::of(config.tol))
        })
        .collect();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| total_cmp(a.sse, b.sse).then(ia.cmp(ib)))
        .expect("at least one restart");
    Ok(KMeansFit {
        centers: CenterSet::new(best.centers, CenterKind::Mean, None)?,
        labels: best.labels,
        sse: best.sse,
        best_restart,
    })
}

/// The mean center set for `k`.
pub fn kmeans_centers<T: Scalar>(
    data: &Dataset<T>,
    k: usize,
    config: &KMeansConfig,
    seed: u64,
) -> Result<CenterSet<T>> {
    kmeans(data, k, config, seed).map(|fit| fit.centers)
}

/// Greedy k-means++: the first center is drawn uniformly; every further center
/// is the best of `2 + floor(ln k)` candidates drawn with probability
/// proportional to squared distance to the nearest chosen center, "best"
/// meaning the lowest resulting total squared distance.
pub fn plus_plus_init<T: Scalar>(data: &Dataset<T>, k: usize, rng: &mut impl Rng) -> Vec<Vec<T>> {
    let n = data.n();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![data.row(rng.random_range(0..n)).to_vec()];
    let mut nearest: Vec<f64> = data.rows().map(|x| squared_distance(x, &centers[0]).as_f64()).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        if total.is_nan() || total <= 0.0 {
            centers.push(data.row(rng.random_range(0..n)).to_vec());
            continue;
        }
        let mut best: Option<(f64, Vec<f64>, usize)> = None;
        for _ in 0..trials {
            let pick = weighted_pick(&nearest, total, rng);
            let c = data.row(pick);
            let updated: Vec<f64> =
                nearest.iter().zip(data.rows()).map(|(&w, x)| w.min(squared_distance(x, c).as_f64())).collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|(p, _, _)| potential < *p) {
                best = Some((potential, updated, pick));
            }
        }
        let (_, updated, pick) = best.expect("at least two candidates");
        nearest = updated;
        centers.push(data.row(pick).to_vec());
    }
    centers
}

fn weighted_pick(weights: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    weights
        .iter()
        .position(|&w| {
            acc += w;
            acc > target
        })
        // Rounding can leave target just past the final sum.
        .unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).expect("positive weight"))
}

/// Lloyd iterations from `init`. An empty cluster takes over the point
/// farthest from its assigned center (among clusters with more than one
/// member), so every cluster stays non-empty when enough distinct points exist.
pub fn lloyd<T: Scalar>(data: &Dataset<T>, init: Vec<Vec<T>>, max_iters: usize, tol: T) -> LloydRun<T> {
    let n = data.n();
    let k = init.len();
    let d = data.dim();
    let mut centers = init;
    let mut labels = vec![0usize; n];
    let mut dist2 = vec![T::zero(); n];
    let mut sse_trace = Vec::new();
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        for (i, x) in data.rows().enumerate() {
            let (best, best_d) = centers
                .iter()
                .enumerate()
                .map(|(c, ctr)| (c, squared_distance(x, ctr)))
                .fold((0, T::infinity()), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            labels[i] = best;
            dist2[i] = best_d;
        }

        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let donor = (0..n).filter(|&i| counts[labels[i]] > 1).fold(None, |best: Option<usize>, i| match best {
                Some(b) if dist2[b] >= dist2[i] => Some(b),
                _ => Some(i),
            });
            if let Some(p) = donor {
                counts[labels[p]] -= 1;
                labels[p] = c;
                counts[c] = 1;
                dist2[p] = T::zero();
            }
        }

        let next = cluster_means(data, &labels, &centers, d);
        let shift = centers.iter().zip(&next).map(|(a, b)| squared_distance(a, b).sqrt()).fold(T::zero(), T::max);
        centers = next;
        sse_trace.push(sse(data, &labels, &centers));
        if shift < tol {
            break;
        }
    }

    let sse = *sse_trace.last().expect("at least one iteration");
    LloydRun { centers, labels, sse, iterations, sse_trace }
}

/// Means of each labeled group; a group with no members keeps its previous
/// center.
fn cluster_means<T: Scalar>(data: &Dataset<T>, labels: &[usize], previous: &[Vec<T>], d: usize) -> Vec<Vec<T>> {
    let k = previous.len();
    let mut sums = vec![vec![T::zero(); d]; k];
    let mut counts = vec![0usize; k];
    for (x, &l) in data.rows().zip(labels) {
        counts[l] += 1;
        for (s, &v) in sums[l].iter_mut().zip(x) {
            *s = *s + v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, c), prev)| {
            if c == 0 {
                prev.clone()
            } else {
                let c = T::of_usize(c);
                s.into_iter().map(|v| v / c).collect()
            }
        })
        .collect()
}

/// Within-cluster sum of squared distances.
pub fn sse<T: Scalar>(data: &Dataset<T>, labels: &[usize], centers: &[Vec<T>]) -> T {
    data.rows().zip(labels).map(|(x, &l)| squared_distance(x, &centers[l])).sum()
}
