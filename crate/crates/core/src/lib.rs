//! Estimate the number of clusters in unlabeled numeric data.
//!
//! Boundary points are filtered out first; then, for each candidate `k`, the
//! `k` density-peak centers are matched one-to-one against the `k` K-means
//! centers and the mean squared matched distance is recorded. The estimate is
//! the `k` with the smallest such loss.
//!
//! Every algorithm is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the precision.

pub mod boundary;
pub mod datasets;
pub mod density;
pub mod error;
pub mod harness;
pub mod matching;
pub mod partition;
pub mod scalar;
pub mod seed;
pub mod sweep;

pub use boundary::{boundary_degree, core_subset, verify_projection_identity, BoundaryProfile, BoundaryScores};
pub use datasets::{Dataset, Normalization, ScenarioFamily};
pub use density::{density_centers, density_profile, DensityProfile, DistanceIndex};
pub use error::{Error, Result};
pub use matching::{build_cost_matrix, min_cost_matching, CostMatrix, MatchingResult};
pub use partition::{kmeans_centers, CenterKind, CenterSet, KMeansConfig};
pub use scalar::Scalar;
pub use sweep::{estimate, run_trials, SweepConfig, SweepReport, TrialsReport};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type DistanceIndex64 = DistanceIndex<f64>;
pub type DistanceIndex32 = DistanceIndex<f32>;
pub type DensityProfile64 = DensityProfile<f64>;
pub type DensityProfile32 = DensityProfile<f32>;
pub type CenterSet64 = CenterSet<f64>;
pub type CenterSet32 = CenterSet<f32>;
pub type CostMatrix64 = CostMatrix<f64>;
pub type CostMatrix32 = CostMatrix<f32>;
pub type MatchingResult64 = MatchingResult<f64>;
pub type MatchingResult32 = MatchingResult<f32>;
pub type BoundaryProfile64 = BoundaryProfile<f64>;
pub type BoundaryProfile32 = BoundaryProfile<f32>;
pub type SweepReport64 = SweepReport<f64>;
pub type SweepReport32 = SweepReport<f32>;
