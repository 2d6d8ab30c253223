//! Numeric datasets: the in-memory type, CSV loading and the synthetic
//! generators used for validation.

mod csv_io;
mod synth;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use csv_io::{load_csv, read_csv, save_csv, write_csv, ColumnSelector};
pub use synth::{
    generate_blobs, generate_mixture, generate_noisy_blobs, generate_scattered_noise_blobs, generate_scenario,
    generate_unbalanced, BlobSpec, ScenarioFamily, NOISE_LABEL,
};

/// `n` points in `d` dimensions with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    points: Array2<T>,
    labels: Option<Vec<i64>>,
    name: String,
    true_k: Option<usize>,
}

impl<T: Scalar> Dataset<T> {
    /// Validates shape and finiteness. `true_k` is derived from the labels as
    /// the number of distinct non-negative ids; negative ids mark noise.
    pub fn new(points: Array2<T>, labels: Option<Vec<i64>>, name: impl Into<String>) -> Result<Self> {
        let (n, d) = points.dim();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 points, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidDataset("need at least 1 dimension".into()));
        }
        if let Some(((i, j), _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite coordinate at ({i}, {j})")));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidDataset(format!("{} labels for {n} points", l.len())));
            }
        }
        let true_k = labels.as_deref().map(count_clusters);
        Ok(Self { points: points.as_standard_layout().into_owned(), labels, name: name.into(), true_k })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<T>], labels: Option<Vec<i64>>, name: impl Into<String>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidDataset(format!("row {i} has {} coordinates, expected {d}", rows[i].len())));
        }
        let flat: Vec<T> = rows.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((rows.len(), d), flat).map_err(|e| Error::InvalidDataset(e.to_string()))?;
        Self::new(points, labels, name)
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<T> {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.points.row(i).to_slice().expect("points are stored in standard layout")
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.n()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, T> {
        self.points.column(j)
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn true_k(&self) -> Option<usize> {
        self.true_k
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rows at `indices`, in the given order, labels carried along.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut flat = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            flat.extend_from_slice(self.row(i));
        }
        let points =
            Array2::from_shape_vec((indices.len(), d), flat).map_err(|e| Error::InvalidDataset(e.to_string()))?;
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect());
        Self::new(points, labels, self.name.clone())
    }

    /// Applies `f` to every coordinate, keeping labels and name.
    pub fn map_points(&self, f: impl Fn(usize, usize, T) -> T) -> Result<Self> {
        let points = Array2::from_shape_fn(self.points.dim(), |(i, j)| f(i, j, self.points[[i, j]]));
        Self::new(points, self.labels.clone(), self.name.clone())
    }

    pub fn normalized(&self, mode: Normalization) -> Result<Self> {
        let d = self.dim();
        let n = T::of_usize(self.n());
        let params: Vec<(T, T)> = (0..d)
            .map(|j| {
                let col = self.column(j);
                match mode {
                    Normalization::None => (T::zero(), T::one()),
                    Normalization::MinMax => {
                        let lo = col.iter().copied().fold(T::infinity(), T::min);
                        let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
                        (lo, hi - lo)
                    }
                    Normalization::ZScore => {
                        let mean = col.iter().copied().sum::<T>() / n;
                        let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
                        (mean, var.sqrt())
                    }
                }
            })
            .collect();
        if mode == Normalization::None {
            return Ok(self.clone());
        }
        // Constant features map to 0.
        self.map_points(|_, j, x| {
            let (offset, scale) = params[j];
            if scale > T::zero() {
                (x - offset) / scale
            } else {
                T::zero()
            }
        })
    }
}

fn count_clusters(labels: &[i64]) -> usize {
    labels.iter().filter(|&&l| l >= 0).collect::<BTreeSet<_>>().len()
}

/// Per-feature rescaling applied after loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    /// Affine map of each feature onto [0, 1].
    MinMax,
    /// Zero mean, unit population variance.
    ZScore,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "minmax" => Ok(Self::MinMax),
            "zscore" => Ok(Self::ZScore),
            other => Err(Error::InvalidArgument(format!("unknown normalization '{other}'"))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::MinMax => "minmax",
            Self::ZScore => "zscore",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[[f64; 2]]) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows(&rows, None, "t").unwrap()
    }

    #[test]
    fn rejects_small_or_non_finite() {
        assert!(Dataset::from_rows(&[vec![0.0f64]], None, "x").is_err());
        assert!(Dataset::from_rows(&[vec![0.0f64], vec![f64::NAN]], None, "x").is_err());
        assert!(Dataset::from_rows(&[vec![0.0f64], vec![1.0]], Some(vec![0]), "x").is_err());
    }

    #[test]
    fn true_k_ignores_noise() {
        let d = Dataset::from_rows(&[vec![0.0f64], vec![1.0], vec![2.0]], Some(vec![0, -1, 3]), "x").unwrap();
        assert_eq!(d.true_k(), Some(2));
    }

    #[test]
    fn zscore_uses_population_variance() {
        let d = ds(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]]);
        let z = d.normalized(Normalization::ZScore).unwrap();
        for j in 0..2 {
            let col = z.column(j);
            let mean: f64 = col.sum() / 4.0;
            let var: f64 = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-15);
            assert!((var - 1.0).abs() < 1e-15);
        }
        // mean 1, population sd 1
        assert_eq!(z.row(0), &[-1.0, -1.0]);
    }

    #[test]
    fn constant_features_map_to_zero() {
        let d = ds(&[[5.0, 1.0], [5.0, 3.0]]);
        for mode in [Normalization::MinMax, Normalization::ZScore] {
            let z = d.normalized(mode).unwrap();
            assert_eq!(z.column(0).to_vec(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn select_keeps_order_and_labels() {
        let d = Dataset::from_rows(&[vec![0.0f64], vec![1.0], vec![2.0]], Some(vec![0, 1, 2]), "x").unwrap();
        let s = d.select(&[2, 0]).unwrap();
        assert_eq!(s.row(0), &[2.0]);
        assert_eq!(s.labels(), Some(&[2, 0][..]));
    }
}
