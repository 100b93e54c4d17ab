//! Tabular datasets: CSV ingestion, z-scoring, seeded splits, and a synthetic
//! conditional log-normal generator with known ground truth.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::LogNormalParams;
use crate::scalar::Scalar;

pub const ID_COLUMN: &str = "id";
pub const SPLIT_COLUMN: &str = "split";

/// Rectangular feature matrix (row-major) with an optional target vector.
///
/// An unlabeled dataset has an empty target vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    feature_names: Vec<String>,
    target_name: String,
    features: Vec<T>,
    targets: Vec<T>,
    row_ids: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        feature_names: Vec<String>,
        target_name: impl Into<String>,
        features: Vec<T>,
        targets: Vec<T>,
        row_ids: Vec<usize>,
    ) -> Result<Self> {
        let rows = row_ids.len();
        let expected = rows * feature_names.len();
        if features.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: features.len() });
        }
        if !targets.is_empty() && targets.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: targets.len() });
        }
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset value"));
        }
        Ok(Dataset { feature_names, target_name: target_name.into(), features, targets, row_ids })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.targets.is_empty() || self.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[T] {
        let d = self.n_features();
        &self.features[i * d..(i + 1) * d]
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset<T> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features());
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            features,
            targets: if self.targets.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| self.targets[i]).collect()
            },
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Row-wise concatenation of two datasets with identical columns.
    pub fn concat(&self, other: &Dataset<T>) -> Result<Dataset<T>> {
        if self.feature_names != other.feature_names || self.target_name != other.target_name {
            return Err(Error::invalid("cannot concatenate datasets with different columns"));
        }
        if self.is_labeled() != other.is_labeled() {
            return Err(Error::invalid("cannot concatenate labeled and unlabeled datasets"));
        }
        let mut out = self.clone();
        out.features.extend_from_slice(&other.features);
        out.targets.extend_from_slice(&other.targets);
        out.row_ids.extend_from_slice(&other.row_ids);
        Ok(out)
    }

    fn with_features(&self, features: Vec<T>) -> Dataset<T> {
        Dataset { features, ..self.clone() }
    }

    /// Writes `id,<features>,<target>[,split]`.
    pub fn write_csv<W: Write>(&self, out: W, split_labels: Option<&[&str]>) -> Result<()> {
        if let Some(labels) = split_labels {
            if labels.len() != self.n_rows() {
                return Err(Error::DimensionMismatch { expected: self.n_rows(), got: labels.len() });
            }
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = vec![ID_COLUMN];
        header.extend(self.feature_names.iter().map(String::as_str));
        if self.is_labeled() {
            header.push(&self.target_name);
        }
        if split_labels.is_some() {
            header.push(SPLIT_COLUMN);
        }
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![self.row_ids[i].to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            if self.is_labeled() {
                rec.push(self.targets[i].to_string());
            }
            if let Some(labels) = split_labels {
                rec.push(labels[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Which columns to read from a CSV table.
#[derive(Clone, Debug, Default)]
pub struct TableSpec {
    /// Feature columns; `None` selects every column except id, split and target.
    pub features: Option<Vec<String>>,
    /// Target column; `None` reads an unlabeled table.
    pub target: Option<String>,
    /// Divisor applied to target values (e.g. `1e6` for prices in millions).
    pub target_scale: Option<f64>,
}

/// Result of [`load_table`].
#[derive(Clone, Debug)]
pub struct LoadedTable<T> {
    pub dataset: Dataset<T>,
    pub total_rows: usize,
    pub dropped: usize,
    /// Contents of the `split` column, when present.
    pub split_labels: Option<Vec<String>>,
}

/// Reads a comma-separated table with a header row. Rows with a missing or
/// non-numeric value in any selected column are dropped and counted.
pub fn load_table<T: Scalar>(path: impl AsRef<Path>, spec: &TableSpec) -> Result<LoadedTable<T>> {
    let file = std::fs::File::open(path)?;
    read_table(file, spec)
}

pub fn read_table<T: Scalar, R: Read>(input: R, spec: &TableSpec) -> Result<LoadedTable<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let position: HashMap<&str, usize> =
        headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let find = |name: &str| {
        position.get(name).copied().ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let target_idx = spec.target.as_deref().map(find).transpose()?;
    let feature_names: Vec<String> = match &spec.features {
        Some(cols) => cols.clone(),
        None => headers
            .iter()
            .filter(|h| {
                h.as_str() != ID_COLUMN
                    && h.as_str() != SPLIT_COLUMN
                    && Some(h.as_str()) != spec.target.as_deref()
            })
            .cloned()
            .collect(),
    };
    let feature_idx: Vec<usize> = feature_names.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let id_idx = position.get(ID_COLUMN).copied();
    let split_idx = position.get(SPLIT_COLUMN).copied();
    let scale = spec.target_scale.unwrap_or(1.0);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("target scale must be positive"));
    }

    let parse = |s: Option<&str>| -> Option<f64> {
        let v: f64 = s?.trim().parse().ok()?;
        v.is_finite().then_some(v)
    };

    let (mut features, mut targets, mut row_ids) = (Vec::new(), Vec::new(), Vec::new());
    let mut splits = Vec::new();
    let (mut total, mut dropped) = (0, 0);
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        total += 1;
        let row: Option<Vec<f64>> = feature_idx.iter().map(|&i| parse(rec.get(i))).collect();
        let target = match target_idx {
            Some(i) => parse(rec.get(i)).map(Some),
            None => Some(None),
        };
        let (Some(row), Some(target)) = (row, target) else {
            dropped += 1;
            continue;
        };
        features.extend(row.into_iter().map(T::lit));
        if let Some(t) = target {
            targets.push(T::lit(t / scale));
        }
        let id = id_idx.and_then(|i| rec.get(i)?.trim().parse().ok()).unwrap_or(line);
        row_ids.push(id);
        if let Some(i) = split_idx {
            splits.push(rec.get(i).unwrap_or("").trim().to_string());
        }
    }
    if row_ids.is_empty() {
        return Err(Error::Empty("table has no complete rows"));
    }
    let target_name = spec.target.clone().unwrap_or_default();
    let dataset = Dataset::new(feature_names, target_name, features, targets, row_ids)?;
    Ok(LoadedTable {
        dataset,
        total_rows: total,
        dropped,
        split_labels: split_idx.map(|_| splits),
    })
}

/// Per-feature means and standard deviations (population, denominator `n`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NormStats<T> {
    pub means: Vec<T>,
    pub sds: Vec<T>,
}

impl<T: Scalar> NormStats<T> {
    /// Stats that leave features unchanged.
    pub fn identity(dim: usize) -> Self {
        NormStats { means: vec![T::zero(); dim], sds: vec![T::one(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.len() != self.sds.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), got: self.sds.len() });
        }
        if let Some(i) = self.sds.iter().position(|&s| !(s.is_finite() && s > T::zero())) {
            return Err(Error::ZeroVariance(format!("feature #{i}")));
        }
        Ok(())
    }

    pub fn apply_row(&self, row: &[T], out: &mut Vec<T>) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        out.clear();
        out.extend(row.iter().zip(&self.means).zip(&self.sds).map(|((&v, &m), &s)| (v - m) / s));
        Ok(())
    }

    pub fn apply(&self, d: &Dataset<T>) -> Result<Dataset<T>> {
        if d.n_features() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: d.n_features() });
        }
        let dim = self.dim().max(1);
        let features = d
            .features
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - self.means[i % dim]) / self.sds[i % dim])
            .collect();
        Ok(d.with_features(features))
    }

    pub fn invert(&self, d: &Dataset<T>) -> Result<Dataset<T>> {
        if d.n_features() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: d.n_features() });
        }
        let dim = self.dim().max(1);
        let features = d
            .features
            .iter()
            .enumerate()
            .map(|(i, &v)| v * self.sds[i % dim] + self.means[i % dim])
            .collect();
        Ok(d.with_features(features))
    }
}

/// Fits z-score statistics; errors naming any zero-variance column.
pub fn zscore_fit<T: Scalar>(d: &Dataset<T>) -> Result<NormStats<T>> {
    if d.is_empty() {
        return Err(Error::Empty("normalization fit set"));
    }
    let n = T::from_usize(d.n_rows()).unwrap();
    let mut means = Vec::with_capacity(d.n_features());
    let mut sds = Vec::with_capacity(d.n_features());
    for j in 0..d.n_features() {
        let col: Vec<T> = (0..d.n_rows()).map(|i| d.row(i)[j]).collect();
        let mean = crate::scalar::pairwise_sum(&col) / n;
        let sq: Vec<T> = col.iter().map(|&v| (v - mean) * (v - mean)).collect();
        let sd = (crate::scalar::pairwise_sum(&sq) / n).sqrt();
        if !(sd > T::zero()) {
            return Err(Error::ZeroVariance(d.feature_names[j].clone()));
        }
        means.push(mean);
        sds.push(sd);
    }
    Ok(NormStats { means, sds })
}

pub fn zscore_apply<T: Scalar>(d: &Dataset<T>, stats: &NormStats<T>) -> Result<Dataset<T>> {
    stats.apply(d)
}

/// Train / validation / test partition of a dataset.
#[derive(Clone, Debug)]
pub struct Split<T> {
    pub train: Dataset<T>,
    pub val: Dataset<T>,
    pub test: Dataset<T>,
}

/// Row counts for a three-way split: validation and test sizes are
/// `round(f * n)`, the remainder goes to training.
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> Result<[usize; 3]> {
    if fractions.iter().any(|f| !(f.is_finite() && *f > 0.0))
        || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::invalid(format!("split fractions must be positive and sum to 1, got {fractions:?}")));
    }
    if n < 3 {
        return Err(Error::invalid(format!("cannot split {n} rows three ways")));
    }
    let val = ((fractions[1] * n as f64).round() as usize).max(1);
    let test = ((fractions[2] * n as f64).round() as usize).max(1);
    if val + test >= n {
        return Err(Error::invalid(format!("split of {n} rows leaves no training rows")));
    }
    Ok([n - val - test, val, test])
}

/// Seeded uniform shuffle followed by contiguous allocation.
pub fn split_indices(n: usize, fractions: [f64; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    let [n_train, n_val, _] = split_sizes(n, fractions)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok([idx, val, test])
}

pub fn split_dataset<T: Scalar>(d: &Dataset<T>, fractions: [f64; 3], seed: u64) -> Result<Split<T>> {
    let [train, val, test] = split_indices(d.n_rows(), fractions, seed)?;
    Ok(Split { train: d.subset(&train), val: d.subset(&val), test: d.subset(&test) })
}

/// Rebuilds a split from per-row labels (`train`, `val`/`validation`, `test`).
pub fn split_from_labels<T: Scalar>(d: &Dataset<T>, labels: &[String]) -> Result<Split<T>> {
    if labels.len() != d.n_rows() {
        return Err(Error::DimensionMismatch { expected: d.n_rows(), got: labels.len() });
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (i, label) in labels.iter().enumerate() {
        let slot = match label.as_str() {
            "train" => 0,
            "val" | "validation" => 1,
            "test" => 2,
            other => return Err(Error::invalid(format!("unknown split label {other:?}"))),
        };
        parts[slot].push(i);
    }
    if parts[0].is_empty() || parts[1].is_empty() {
        return Err(Error::Empty("train or validation split"));
    }
    Ok(Split { train: d.subset(&parts[0]), val: d.subset(&parts[1]), test: d.subset(&parts[2]) })
}

impl<T: Scalar> Split<T> {
    /// Writes all rows in train/val/test order with a split-label column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let all = self.train.concat(&self.val)?.concat(&self.test)?;
        let labels: Vec<&str> = std::iter::repeat_n("train", self.train.n_rows())
            .chain(std::iter::repeat_n("val", self.val.n_rows()))
            .chain(std::iter::repeat_n("test", self.test.n_rows()))
            .collect();
        all.write_csv(out, Some(&labels))
    }
}

/// JSON manifest written next to a split table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub total_rows: usize,
    pub dropped_rows: usize,
    pub seed: u64,
    pub fractions: [f64; 3],
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
    pub normalization: String,
}

/// Synthetic conditional log-normal regression data.
#[derive(Clone, Debug)]
pub struct Synthetic<T> {
    pub dataset: Dataset<T>,
    /// `intercept + slopes . x` per row: the conditional log-scale location.
    pub log_location: Vec<T>,
    pub sigma: T,
}

impl<T: Scalar> Synthetic<T> {
    /// Conditional law of the target in row `i`.
    pub fn conditional_law(&self, i: usize) -> LogNormalParams<T> {
        LogNormalParams { mu: self.log_location[i], sigma: self.sigma }
    }

    /// Closed-form conditional `tau`-quantile of row `i`.
    pub fn true_quantile(&self, i: usize, tau: f64) -> T {
        use statrs::distribution::{ContinuousCDF, Normal};
        let z = Normal::standard().inverse_cdf(tau);
        (self.log_location[i] + self.sigma * T::lit(z)).exp()
    }
}

/// Features uniform on `[0, 1]^d`; target `exp(c0 + c[1..] . x + sigma z)`.
///
/// `coefficients` holds the intercept followed by `d` slopes.
pub fn synth_lognormal_regression<T: Scalar>(
    n: usize,
    d: usize,
    coefficients: &[T],
    sigma: T,
    seed: u64,
) -> Result<Synthetic<T>> {
    if coefficients.len() != d + 1 {
        return Err(Error::DimensionMismatch { expected: d + 1, got: coefficients.len() });
    }
    if !(sigma.is_finite() && sigma > T::zero()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::Empty("synthetic dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    let mut log_location = Vec::with_capacity(n);
    for _ in 0..n {
        let mut loc = coefficients[0];
        for &slope in &coefficients[1..] {
            let x = T::lit(rng.random::<f64>());
            loc += slope * x;
            features.push(x);
        }
        let z: f64 = rng.sample(StandardNormal);
        targets.push((loc + sigma * T::lit(z)).exp());
        log_location.push(loc);
    }
    let names = (1..=d).map(|j| format!("x{j}")).collect();
    let dataset = Dataset::new(names, "y", features, targets, (0..n).collect())?;
    Ok(Synthetic { dataset, log_location, sigma })
}
