//! Synthetic Gaussian mixtures, CSV ingestion and stratified splitting.

use crate::error::{Error, Result};
use crate::lssvm::Dataset;
use crate::model::{Class, LabelVector, MixtureModel};
use crate::rng;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Read;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovarianceKind {
    Identity,
    /// `Σᵢⱼ = ρ^|i−j|`.
    Toeplitz { rho: f64 },
}

impl CovarianceKind {
    pub fn matrix(&self, d: usize) -> DMatrix<f64> {
        match *self {
            CovarianceKind::Identity => DMatrix::identity(d, d),
            CovarianceKind::Toeplitz { rho } => {
                DMatrix::from_fn(d, d, |i, j| rho.powi(i.abs_diff(j) as i32))
            }
        }
    }
}

/// Two classes `N(∓mu_scale·e₁, Σ)` with equal sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub d: usize,
    pub n_per_class: usize,
    pub mu_scale: f64,
    pub covariance: CovarianceKind,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(d: usize, n_per_class: usize, covariance: CovarianceKind, seed: u64) -> Result<Self> {
        let spec = SyntheticSpec {
            d,
            n_per_class,
            mu_scale: 0.9,
            covariance,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_mu_scale(mut self, mu_scale: f64) -> Self {
        self.mu_scale = mu_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n_per_class == 0 {
            return Err(Error::InvalidConfig(
                "d and n_per_class must be positive".into(),
            ));
        }
        if !self.mu_scale.is_finite() {
            return Err(Error::InvalidConfig("mu_scale must be finite".into()));
        }
        if let CovarianceKind::Toeplitz { rho } = self.covariance {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "Toeplitz rho must lie in (0, 1), got {rho}"
                )));
            }
        }
        Ok(())
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        self.covariance.matrix(self.d)
    }

    /// The generating model.
    pub fn model(&self) -> Result<MixtureModel> {
        self.validate()?;
        let mut mu = DVector::zeros(self.d);
        mu[0] = self.mu_scale;
        MixtureModel::symmetric(mu, self.covariance_matrix())
    }
}

/// Symmetric square root through the eigendecomposition.
fn sqrt_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(s.clone());
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Draws `n_per_class` samples of class 1 followed by the same of class 2.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let model = spec.model()?;
    let root = match spec.covariance {
        CovarianceKind::Identity => None,
        CovarianceKind::Toeplitz { .. } => Some(sqrt_psd(&spec.covariance_matrix())),
    };
    let n = spec.n_per_class;
    let mut blocks = Vec::with_capacity(2);
    for cls in Class::BOTH {
        let mut r = rng::stream(spec.seed, "synthetic", &[cls.idx() as u64]);
        let z = DMatrix::from_fn(spec.d, n, |_, _| r.sample::<f64, _>(StandardNormal));
        let mut x = match &root {
            Some(s) => s * z,
            None => z,
        };
        for mut col in x.column_iter_mut() {
            col += model.mean(cls);
        }
        blocks.push(x);
    }
    Dataset::from_class_blocks(&blocks[0], &blocks[1])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub label_column: String,
    pub positive_label: String,
    pub negative_label: String,
    pub standardize: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: "label".into(),
            positive_label: "1".into(),
            negative_label: "-1".into(),
            standardize: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    /// Features left unscaled because they are constant over the file.
    pub constant_features: Vec<String>,
}

/// Reads a headed CSV with one sample per row. The positive label maps to
/// class 2 (+1), the negative label to class 1 (−1). Row order is kept.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<LoadedCsv> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, opts)
}

pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = headers
        .iter()
        .position(|h| *h == opts.label_column)
        .ok_or_else(|| {
            Error::InvalidData(format!("label column '{}' not found", opts.label_column))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::InvalidData("no feature columns".into()));
    }

    let d = feature_names.len();
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<i8> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::Csv {
                line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (i, field) in record.iter().enumerate() {
            let field = field.trim();
            if i == label_idx {
                let y = if field == opts.positive_label {
                    1
                } else if field == opts.negative_label {
                    -1
                } else {
                    return Err(Error::Csv {
                        line,
                        message: format!("unknown label '{field}'"),
                    });
                };
                labels.push(y);
            } else {
                let v: f64 = field.parse().map_err(|_| Error::Csv {
                    line,
                    message: format!("column '{}': cannot parse '{field}' as a number", headers[i]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        line,
                        message: format!("column '{}': non-finite value", headers[i]),
                    });
                }
                values.push(v);
            }
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::InvalidData("CSV has no data rows".into()));
    }
    // rows of the file become columns
    let mut features = DMatrix::from_column_slice(d, n, &values);
    let constant_features = if opts.standardize {
        standardize(&mut features)
            .into_iter()
            .map(|i| feature_names[i].clone())
            .collect()
    } else {
        Vec::new()
    };
    Ok(LoadedCsv {
        dataset: Dataset::new(features, LabelVector::new(labels)?)?,
        feature_names,
        constant_features,
    })
}

/// Scales each feature (row) to zero mean and unit population variance.
/// Constant features are left untouched and their indices returned.
pub fn standardize(features: &mut DMatrix<f64>) -> Vec<usize> {
    let n = features.ncols() as f64;
    let mut constant = Vec::new();
    for i in 0..features.nrows() {
        let mut row = features.row_mut(i);
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd <= 1e-12 * (1.0 + mean.abs()) {
            constant.push(i);
            continue;
        }
        for v in row.iter_mut() {
            *v = (*v - mean) / sd;
        }
    }
    constant
}

/// Writes a dataset in the format [`load_csv`] reads, labels as `-1`/`1`.
/// Values use the shortest representation that parses back exactly.
pub fn save_csv(
    data: &Dataset,
    path: impl AsRef<Path>,
    feature_names: Option<&[String]>,
    label_column: &str,
) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv(data, file, feature_names, label_column)
}

pub fn write_csv<W: std::io::Write>(
    data: &Dataset,
    writer: W,
    feature_names: Option<&[String]>,
    label_column: &str,
) -> Result<()> {
    let names: Vec<String> = match feature_names {
        Some(names) if names.len() == data.d() => names.to_vec(),
        Some(names) => {
            return Err(Error::DimensionMismatch {
                expected: data.d(),
                found: names.len(),
            })
        }
        None => (0..data.d()).map(|i| format!("x{i}")).collect(),
    };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = names;
    header.push(label_column.to_string());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(data.d() + 1);
    for j in 0..data.n() {
        row.clear();
        row.extend(data.features().column(j).iter().map(|v| v.to_string()));
        row.push(data.labels().as_slice()[j].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path.as_ref())?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Train/test index sets with per-class sizes `round(fraction·n_ℓ)`,
/// clamped so both sides keep at least one sample of each class.
pub fn stratified_split_indices(
    labels: &LabelVector,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut r = rng::stream(seed, "split", &[]);
    for cls in Class::BOTH {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels.class_of(i) == cls).collect();
        let n = idx.len();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "class {} has {n} samples; a split needs at least 2",
                cls.idx() + 1
            )));
        }
        let k = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
        idx.shuffle(&mut r);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_split_indices(data.labels(), fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}
