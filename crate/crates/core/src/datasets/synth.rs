//! Seeded synthetic datasets: Gaussian mixtures and the robustness scenario
//! families (background noise, density imbalance, cluster count).

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{rng_for, TAG_GENERATE};

/// Label carried by background noise points.
pub const NOISE_LABEL: i64 = -1;

const PLACEMENT_TRIES: usize = 1_000;
const PLACEMENT_RESTARTS: usize = 200;

/// One isotropic Gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub center: Vec<f64>,
    pub spread: f64,
    pub count: usize,
}

/// Samples each component in order; component `i` gets label `i`.
pub fn generate_mixture<T: Scalar>(components: &[BlobSpec], name: &str, seed: u64) -> Result<Dataset<T>> {
    let mut rng = rng_for(seed, &[TAG_GENERATE, 1]);
    let (rows, labels) = sample_components(components, &mut rng)?;
    build(rows, labels, name)
}

fn sample_components(components: &[BlobSpec], rng: &mut impl Rng) -> Result<(Vec<Vec<f64>>, Vec<i64>)> {
    let d = components
        .first()
        .map(|c| c.center.len())
        .ok_or_else(|| Error::InvalidArgument("no mixture components".into()))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (label, c) in components.iter().enumerate() {
        if c.center.len() != d {
            return Err(Error::InvalidArgument("mixture components differ in dimension".into()));
        }
        let normal =
            Normal::new(0.0, c.spread).map_err(|e| Error::InvalidArgument(format!("spread {}: {e}", c.spread)))?;
        for _ in 0..c.count {
            rows.push(c.center.iter().map(|&m| m + normal.sample(rng)).collect());
            labels.push(label as i64);
        }
    }
    Ok((rows, labels))
}

fn build<T: Scalar>(rows: Vec<Vec<f64>>, labels: Vec<i64>, name: &str) -> Result<Dataset<T>> {
    let d = rows.first().map_or(0, Vec::len);
    let flat: Vec<T> = rows.into_iter().flatten().map(T::of).collect();
    let points = Array2::from_shape_vec((labels.len(), d), flat).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Dataset::new(points, Some(labels), name)
}

/// Draws `k` centers uniformly in a cube whose side grows with `k^(1/d)`,
/// rejecting any candidate closer than `separation` to an accepted center.
fn place_centers(k: usize, d: usize, separation: f64, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    let side = 2.0 * separation * (k as f64).powf(1.0 / d as f64);
    for _ in 0..PLACEMENT_RESTARTS {
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
        'place: for _ in 0..k {
            for _ in 0..PLACEMENT_TRIES {
                let cand: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * side).collect();
                let ok = centers
                    .iter()
                    .all(|c| c.iter().zip(&cand).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= separation);
                if ok {
                    centers.push(cand);
                    continue 'place;
                }
            }
            break;
        }
        if centers.len() == k {
            return Ok(centers);
        }
    }
    Err(Error::Placement { k, separation, attempts: PLACEMENT_RESTARTS * PLACEMENT_TRIES })
}

/// `k` isotropic Gaussian blobs of `per_cluster` points each, with generator
/// centers pairwise at least `separation` apart.
pub fn generate_blobs<T: Scalar>(
    k: usize,
    per_cluster: usize,
    d: usize,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    if k < 1 || per_cluster < 2 || d < 1 {
        return Err(Error::InvalidArgument(format!(
            "blobs need k >= 1, per_cluster >= 2, d >= 1 (got k={k}, per_cluster={per_cluster}, d={d})"
        )));
    }
    if !(spread > 0.0 && spread.is_finite()) || !(separation > 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "spread and separation must be positive (got {spread}, {separation})"
        )));
    }
    let mut rng = rng_for(seed, &[TAG_GENERATE, 2]);
    let centers = place_centers(k, d, separation, &mut rng)?;
    let specs: Vec<BlobSpec> =
        centers.into_iter().map(|center| BlobSpec { center, spread, count: per_cluster }).collect();
    let (rows, labels) = sample_components(&specs, &mut rng)?;
    build(rows, labels, &format!("blobs-k{k}-n{per_cluster}-d{d}"))
}

/// Gaussian clusters plus uniform background noise making up `noise_fraction`
/// of all points. Noise covers the bounding box of the clustered points
/// widened by `box_inflation` (0.2 = 20%) per axis and is labeled
/// [`NOISE_LABEL`].
pub fn generate_noisy_blobs<T: Scalar>(
    components: &[BlobSpec],
    noise_fraction: f64,
    box_inflation: f64,
    name: &str,
    seed: u64,
) -> Result<Dataset<T>> {
    if !(box_inflation >= 0.0 && box_inflation.is_finite()) {
        return Err(Error::InvalidArgument(format!("box inflation {box_inflation} must be >= 0")));
    }
    if !(0.0..1.0).contains(&noise_fraction) {
        return Err(Error::InvalidArgument(format!("noise fraction {noise_fraction} outside [0, 1)")));
    }
    let mut rng = rng_for(seed, &[TAG_GENERATE, 3]);
    let (mut rows, mut labels) = sample_components(components, &mut rng)?;
    let base = rows.len();
    let d = components[0].center.len();
    let noise = (base as f64 * noise_fraction / (1.0 - noise_fraction)).round() as usize;
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..d)
        .map(|j| {
            let lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            let pad = 0.5 * box_inflation * (hi - lo);
            (lo - pad, hi + pad)
        })
        .unzip();
    for _ in 0..noise {
        rows.push((0..d).map(|j| lo[j] + rng.random::<f64>() * (hi[j] - lo[j])).collect());
        labels.push(NOISE_LABEL);
    }
    build(rows, labels, name)
}

/// Three clusters of 1000, 300 and 200 points with spreads 1.0, 0.6 and 0.35:
/// unbalanced in both size and density.
pub fn generate_unbalanced<T: Scalar>(seed: u64) -> Result<Dataset<T>> {
    let specs = [
        BlobSpec { center: vec![0.0, 0.0], spread: 1.0, count: 1000 },
        BlobSpec { center: vec![9.0, 1.0], spread: 0.6, count: 300 },
        BlobSpec { center: vec![3.0, 8.0], spread: 0.35, count: 200 },
    ];
    generate_mixture(&specs, "unbalanced", seed)
}

/// Three clusters (spread 0.7, 150 points, on a triangle of side 7) plus 20%
/// uniform noise scattered over their bounding box inflated by 300%, so most
/// noise lies well away from the clusters.
pub fn generate_scattered_noise_blobs<T: Scalar>(seed: u64) -> Result<Dataset<T>> {
    let specs: Vec<BlobSpec> = [[0.0, 0.0], [7.0, 0.0], [3.5, 6.062]]
        .into_iter()
        .map(|c| BlobSpec { center: c.to_vec(), spread: 0.7, count: 150 })
        .collect();
    generate_noisy_blobs(&specs, 0.2, 3.0, "scattered-noise", seed)
}

/// Robustness scenario families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioFamily {
    /// Two clusters plus `level`% uniform background noise; levels 1..=90
    /// (benchmarked at 20, 30, 40, 50).
    Noise,
    /// Eight clusters whose sizes fall geometrically so that the largest is
    /// 1, 2, 4 or 8 times the smallest at levels 1..=4.
    Density,
    /// `level` equal blobs, level in {5, 10, 20, 40}.
    Count,
}

impl ScenarioFamily {
    pub const ALL: [ScenarioFamily; 3] = [Self::Noise, Self::Density, Self::Count];

    pub fn levels(self) -> &'static [u32] {
        match self {
            Self::Noise => &[20, 30, 40, 50],
            Self::Density => &[1, 2, 3, 4],
            Self::Count => &[5, 10, 20, 40],
        }
    }
}

impl FromStr for ScenarioFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "noise" => Ok(Self::Noise),
            "density" => Ok(Self::Density),
            "count" => Ok(Self::Count),
            other => Err(Error::InvalidArgument(format!("unknown scenario family '{other}'"))),
        }
    }
}

impl fmt::Display for ScenarioFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Noise => "noise",
            Self::Density => "density",
            Self::Count => "count",
        })
    }
}

const SCENARIO_SPREAD: f64 = 1.0;
const NOISE_BOX_INFLATION: f64 = 0.2;
const SCENARIO_SEPARATION: f64 = 7.0;

pub fn generate_scenario<T: Scalar>(family: ScenarioFamily, level: u32, seed: u64) -> Result<Dataset<T>> {
    let name = format!("{family}-{level}");
    match family {
        ScenarioFamily::Noise => {
            if !(1..=90).contains(&level) {
                return Err(Error::InvalidArgument(format!("noise level {level} outside 1..=90")));
            }
            let specs = [
                BlobSpec { center: vec![0.0, 0.0], spread: SCENARIO_SPREAD, count: 250 },
                BlobSpec { center: vec![10.0, 0.0], spread: SCENARIO_SPREAD, count: 250 },
            ];
            generate_noisy_blobs(&specs, f64::from(level) / 100.0, NOISE_BOX_INFLATION, &name, seed)
        }
        ScenarioFamily::Density => {
            let ratio = match level {
                1..=4 => f64::from(1u32 << (level - 1)),
                _ => return Err(Error::InvalidArgument(format!("density level {level} outside 1..=4"))),
            };
            const CLUSTERS: usize = 8;
            const LARGEST: f64 = 240.0;
            let mut rng = rng_for(seed, &[TAG_GENERATE, 4]);
            let centers = place_centers(CLUSTERS, 2, SCENARIO_SEPARATION, &mut rng)?;
            let specs: Vec<BlobSpec> = centers
                .into_iter()
                .enumerate()
                .map(|(i, center)| BlobSpec {
                    center,
                    spread: SCENARIO_SPREAD,
                    count: (LARGEST / ratio.powf(i as f64 / (CLUSTERS - 1) as f64)).round() as usize,
                })
                .collect();
            let (rows, labels) = sample_components(&specs, &mut rng)?;
            build(rows, labels, &name)
        }
        ScenarioFamily::Count => {
            if ![5, 10, 20, 40].contains(&level) {
                return Err(Error::InvalidArgument(format!("count level {level} not in {{5, 10, 20, 40}}")));
            }
            generate_blobs(level as usize, 50, 2, SCENARIO_SPREAD, SCENARIO_SEPARATION, seed).map(|d| d.with_name(name))
        }
    }
}
