//! End-to-end estimation: filter boundary points, then for every candidate k
//! match the k density centers against the k mean centers and keep the k with
//! the smallest matching loss.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{boundary_degree_with_norm, core_subset, BoundaryProfile, DEFAULT_LAMBDA};
use crate::datasets::Dataset;
use crate::density::{density_centers, density_profile, DensityProfile, DistanceIndex, DEFAULT_DC_PERCENTILE};
use crate::error::{Error, Result};
use crate::matching::{build_cost_matrix, min_cost_matching, pairwise_costs};
use crate::partition::{kmeans_centers, KMeansConfig};
use crate::scalar::{total_cmp, Scalar};
use crate::seed::{derive_seed, TAG_KMEANS, TAG_SECOND_KMEANS, TAG_TRIAL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub k_min: usize,
    /// `None` sweeps up to `floor(sqrt(n))` of the unfiltered dataset.
    pub k_max: Option<usize>,
    /// Fraction of points removed as boundary points.
    pub lambda: f64,
    pub dc_percentile: f64,
    pub kmeans: KMeansConfig,
    pub seed: u64,
    pub filtering_enabled: bool,
    /// Compare two independent K-means runs instead of mean vs density centers.
    pub mean_vs_mean: bool,
    /// Exponent of the boundary-degree norm.
    pub boundary_norm: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: None,
            lambda: DEFAULT_LAMBDA,
            dc_percentile: DEFAULT_DC_PERCENTILE,
            kmeans: KMeansConfig::default(),
            seed: 0,
            filtering_enabled: true,
            mean_vs_mean: false,
            boundary_norm: 1.0,
        }
    }
}

impl SweepConfig {
    /// `k_max` as used for a dataset of `n` points.
    pub fn resolved_k_max(&self, n: usize) -> usize {
        self.k_max.unwrap_or_else(|| (n as f64).sqrt().floor() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KLoss<T> {
    pub k: usize,
    pub loss: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedK {
    pub k: usize,
    pub reason: String,
}

/// The optimal matching found at one k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KDetail<T> {
    pub k: usize,
    pub mean_centers: Vec<Vec<T>>,
    /// Density centers, or the second mean-center run in mean-vs-mean mode.
    pub reference_centers: Vec<Vec<T>>,
    /// `assignment[p]` indexes `reference_centers` for mean center `p`.
    pub assignment: Vec<usize>,
    pub pair_costs: Vec<T>,
    pub loss: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySummary<T> {
    pub lambda: f64,
    pub dc: T,
    pub n: usize,
    pub removed: usize,
    pub removed_indices: Vec<usize>,
}

/// Wall-clock durations in milliseconds. Not part of the deterministic output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub filter_ms: f64,
    pub density_ms: f64,
    pub sweep_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport<T> {
    pub dataset: String,
    pub config: SweepConfig,
    pub seed: u64,
    pub n: usize,
    pub n_core: usize,
    pub dim: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub core_dc: T,
    pub losses: Vec<KLoss<T>>,
    pub skipped: Vec<SkippedK>,
    pub k_star: usize,
    #[serde(rename = "boundary")]
    pub boundary_summary: BoundarySummary<T>,
    pub details: Vec<KDetail<T>>,
    #[serde(skip)]
    pub boundary: BoundaryProfile<T>,
    #[serde(skip)]
    pub timings: Timings,
}

impl<T: Scalar> SweepReport<T> {
    pub fn loss_at(&self, k: usize) -> Option<T> {
        self.losses.iter().find(|l| l.k == k).map(|l| l.loss)
    }
}

/// Seed-independent stages (boundary filter, core-set density profile),
/// computed once and reused across seeds.
#[derive(Debug, Clone)]
pub struct PreparedSweep<T> {
    name: String,
    config: SweepConfig,
    n: usize,
    core: Dataset<T>,
    boundary: BoundaryProfile<T>,
    density: DensityProfile<T>,
    k_min: usize,
    k_max: usize,
    filter_ms: f64,
    density_ms: f64,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

impl<T: Scalar> PreparedSweep<T> {
    pub fn new(data: &Dataset<T>, config: &SweepConfig) -> Result<Self> {
        let n = data.n();
        if n < 4 {
            return Err(Error::InvalidDataset(format!("need at least 4 points, got {n}")));
        }
        let start = Instant::now();
        let index = DistanceIndex::build(data, config.dc_percentile)?;
        let scores = boundary_degree_with_norm(data, &index, T::of(config.boundary_norm))?;
        let lambda = if config.filtering_enabled { config.lambda } else { 0.0 };
        if !(0.0..1.0).contains(&config.lambda) {
            return Err(Error::InvalidArgument(format!("lambda {} outside [0, 1)", config.lambda)));
        }
        let (core, boundary) = core_subset(data, &scores, lambda)?;
        let filter_ms = ms(start);

        let k_min = config.k_min;
        let k_max = config.resolved_k_max(n);
        let n_core = core.n();
        if k_min < 2 || k_min > k_max || k_max > n_core {
            return Err(Error::InvalidArgument(format!(
                "k range [{k_min}, {k_max}] must satisfy 2 <= k_min <= k_max <= {n_core} (core size)"
            )));
        }

        let start = Instant::now();
        // Nothing removed: the full-data index is the core index.
        let core_index = if n_core == n { index } else { DistanceIndex::build(&core, config.dc_percentile)? };
        let density = density_profile(&core_index);
        let density_ms = ms(start);

        Ok(Self {
            name: data.name().to_string(),
            config: config.clone(),
            n,
            core,
            boundary,
            density,
            k_min,
            k_max,
            filter_ms,
            density_ms,
        })
    }

    pub fn core(&self) -> &Dataset<T> {
        &self.core
    }

    pub fn boundary(&self) -> &BoundaryProfile<T> {
        &self.boundary
    }

    pub fn density(&self) -> &DensityProfile<T> {
        &self.density
    }

    /// Runs the k loop with K-means substreams derived from `seed`.
    pub fn sweep(&self, seed: u64) -> Result<SweepReport<T>> {
        let start = Instant::now();
        let outcomes: Vec<(usize, Result<KDetail<T>>)> =
            (self.k_min..=self.k_max).into_par_iter().map(|k| (k, self.evaluate(k, seed))).collect();

        let mut losses = Vec::new();
        let mut skipped = Vec::new();
        let mut details = Vec::new();
        for (k, outcome) in outcomes {
            match outcome {
                Ok(detail) => {
                    log::info!("k = {k}: loss = {}", detail.loss);
                    losses.push(KLoss { k, loss: detail.loss });
                    details.push(detail);
                }
                Err(e @ Error::TooFewDistinct { .. }) => {
                    log::info!("k = {k}: skipped ({e})");
                    skipped.push(SkippedK { k, reason: e.to_string() });
                }
                Err(e) => return Err(e),
            }
        }
        // Ascending k with strict comparison: ties go to the smaller k.
        let k_star = losses
            .iter()
            .fold(None::<&KLoss<T>>, |best, cur| match best {
                Some(b) if total_cmp(cur.loss, b.loss).is_ge() => Some(b),
                _ => Some(cur),
            })
            .map(|l| l.k)
            .ok_or_else(|| Error::Degenerate(format!("no feasible k in [{}, {}]", self.k_min, self.k_max)))?;
        let sweep_ms = ms(start);

        let removed_indices = self.boundary.removed_indices();
        Ok(SweepReport {
            dataset: self.name.clone(),
            config: self.config.clone(),
            seed,
            n: self.n,
            n_core: self.core.n(),
            dim: self.core.dim(),
            k_min: self.k_min,
            k_max: self.k_max,
            core_dc: self.density.dc,
            losses,
            skipped,
            k_star,
            boundary_summary: BoundarySummary {
                lambda: if self.config.filtering_enabled { self.config.lambda } else { 0.0 },
                dc: self.boundary.dc,
                n: self.n,
                removed: removed_indices.len(),
                removed_indices,
            },
            details,
            boundary: self.boundary.clone(),
            timings: Timings {
                filter_ms: self.filter_ms,
                density_ms: self.density_ms,
                sweep_ms,
                total_ms: self.filter_ms + self.density_ms + sweep_ms,
            },
        })
    }

    fn evaluate(&self, k: usize, seed: u64) -> Result<KDetail<T>> {
        let kcfg = &self.config.kmeans;
        let means = kmeans_centers(&self.core, k, kcfg, derive_seed(seed, &[TAG_KMEANS, k as u64]))?;
        let (reference, costs) = if self.config.mean_vs_mean {
            let second = kmeans_centers(&self.core, k, kcfg, derive_seed(seed, &[TAG_SECOND_KMEANS, k as u64]))?;
            let costs = pairwise_costs(&means, &second)?;
            (second, costs)
        } else {
            let dens = density_centers(&self.density, &self.core, k)?;
            let costs = build_cost_matrix(&means, &dens)?;
            (dens, costs)
        };
        let matching = min_cost_matching(&costs)?;
        Ok(KDetail {
            k,
            mean_centers: means.centers().to_vec(),
            reference_centers: reference.centers().to_vec(),
            assignment: matching.assignment,
            pair_costs: matching.pair_costs,
            loss: matching.loss,
        })
    }
}

/// Estimates the number of clusters.
pub fn estimate<T: Scalar>(data: &Dataset<T>, config: &SweepConfig) -> Result<SweepReport<T>> {
    PreparedSweep::new(data, config)?.sweep(config.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialsReport {
    pub dataset: String,
    pub trials: usize,
    pub k_stars: Vec<usize>,
    /// Most frequent estimate (ties: smallest).
    pub nc: usize,
    /// Fraction of trials whose estimate equals `true_k`; `None` without labels.
    pub acc: Option<f64>,
    pub true_k: Option<usize>,
}

/// Seed used for trial `t`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, &[TAG_TRIAL, t as u64])
}

/// Repeats the sweep `trials` times with per-trial seeds.
pub fn run_trials<T: Scalar>(data: &Dataset<T>, config: &SweepConfig, trials: usize) -> Result<TrialsReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let prepared = PreparedSweep::new(data, config)?;
    let k_stars = (0..trials)
        .map(|t| prepared.sweep(trial_seed(config.seed, t)).map(|r| r.k_star))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_trials(data.name(), k_stars, data.true_k()))
}

pub fn summarize_trials(name: &str, k_stars: Vec<usize>, true_k: Option<usize>) -> TrialsReport {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in &k_stars {
        *counts.entry(k).or_insert(0) += 1;
    }
    // BTreeMap iterates ascending, so the first maximum is the smallest k.
    let nc = counts.iter().fold((0, 0), |best, (&k, &c)| if c > best.1 { (k, c) } else { best }).0;
    let acc = true_k.map(|t| k_stars.iter().filter(|&&k| k == t).count() as f64 / k_stars.len() as f64);
    TrialsReport { dataset: name.to_string(), trials: k_stars.len(), k_stars, nc, acc, true_k }
}
