//! Domain types: the two-class Gaussian mixture, ensemble configuration and
//! label conventions.
//!
//! Class 1 carries label −1 and class 2 carries label +1. A score below the
//! threshold is assigned to class 1, and a tie goes to class 2.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// Relative eigenvalue floor below which a covariance is flagged.
const NEAR_SINGULAR_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    One,
    Two,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::One, Class::Two];

    /// Parses a 1-based class index.
    pub fn from_index(index: usize) -> Result<Class> {
        match index {
            1 => Ok(Class::One),
            2 => Ok(Class::Two),
            other => Err(Error::InvalidConfig(format!(
                "class index must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn from_label(label: i8) -> Result<Class> {
        match label {
            -1 => Ok(Class::One),
            1 => Ok(Class::Two),
            other => Err(Error::InvalidData(format!(
                "labels must be -1 or +1, got {other}"
            ))),
        }
    }

    pub fn label(self) -> i8 {
        match self {
            Class::One => -1,
            Class::Two => 1,
        }
    }

    /// Zero-based position, for indexing per-class arrays.
    pub fn idx(self) -> usize {
        match self {
            Class::One => 0,
            Class::Two => 1,
        }
    }

    pub fn other(self) -> Class {
        match self {
            Class::One => Class::Two,
            Class::Two => Class::One,
        }
    }
}

/// Two-class Gaussian mixture: means, covariances and priors.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureModel {
    mu: [DVector<f64>; 2],
    sigma: [DMatrix<f64>; 2],
    priors: [f64; 2],
    near_singular: [bool; 2],
}

impl MixtureModel {
    pub fn new(
        mu1: DVector<f64>,
        mu2: DVector<f64>,
        sigma1: DMatrix<f64>,
        sigma2: DMatrix<f64>,
        priors: [f64; 2],
    ) -> Result<Self> {
        let d = mu1.len();
        if d == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if mu2.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mu2.len(),
            });
        }
        for s in [&sigma1, &sigma2] {
            if s.nrows() != d || s.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: if s.nrows() != d { s.nrows() } else { s.ncols() },
                });
            }
        }
        if !(priors[0] > 0.0 && priors[1] > 0.0) {
            return Err(Error::InvalidModel(format!(
                "priors must be positive, got {priors:?}"
            )));
        }
        if (priors[0] + priors[1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "priors must sum to 1, got {priors:?}"
            )));
        }
        if mu1.iter().chain(mu2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("class means must be finite".into()));
        }
        let mut near_singular = [false; 2];
        for (k, s) in [&sigma1, &sigma2].into_iter().enumerate() {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "covariance {} has non-finite entries",
                    k + 1
                )));
            }
            let asym = max_asymmetry(s);
            if asym > SYMMETRY_TOL {
                return Err(Error::InvalidModel(format!(
                    "covariance {} is not symmetric (max asymmetry {asym:e})",
                    k + 1
                )));
            }
            let eig = SymmetricEigen::new(s.clone()).eigenvalues;
            let min = eig.min();
            let max = eig.max();
            if min < -PSD_TOL {
                return Err(Error::InvalidModel(format!(
                    "covariance {} is not positive semidefinite (min eigenvalue {min:e})",
                    k + 1
                )));
            }
            near_singular[k] = min <= NEAR_SINGULAR_REL * max.max(f64::MIN_POSITIVE);
        }
        Ok(MixtureModel {
            mu: [mu1, mu2],
            sigma: [sigma1, sigma2],
            priors,
            near_singular,
        })
    }

    /// Means ∓`mu`, common covariance `sigma`, equal priors.
    pub fn symmetric(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        Self::new(-&mu, mu, sigma.clone(), sigma, [0.5, 0.5])
    }

    pub fn dim(&self) -> usize {
        self.mu[0].len()
    }

    pub fn mean(&self, class: Class) -> &DVector<f64> {
        &self.mu[class.idx()]
    }

    pub fn covariance(&self, class: Class) -> &DMatrix<f64> {
        &self.sigma[class.idx()]
    }

    pub fn prior(&self, class: Class) -> f64 {
        self.priors[class.idx()]
    }

    pub fn priors(&self) -> [f64; 2] {
        self.priors
    }

    /// `M = [μ₁ | μ₂]`.
    pub fn means_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&[self.mu[0].clone(), self.mu[1].clone()])
    }

    /// `C = Σ + μμᵀ`.
    pub fn generalized_covariance(&self, class: Class) -> DMatrix<f64> {
        let mu = self.mean(class);
        let mut c = self.covariance(class).clone();
        c.ger(1.0, mu, mu, 1.0);
        c
    }

    pub fn is_near_singular(&self) -> bool {
        self.near_singular[0] || self.near_singular[1]
    }

    /// The same model with class roles exchanged.
    pub fn swap_classes(&self) -> Self {
        MixtureModel {
            mu: [self.mu[1].clone(), self.mu[0].clone()],
            sigma: [self.sigma[1].clone(), self.sigma[0].clone()],
            priors: [self.priors[1], self.priors[0]],
            near_singular: [self.near_singular[1], self.near_singular[0]],
        }
    }
}

pub(crate) fn max_asymmetry(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    worst
}

/// Size and regularization of one bootstrap ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    n_total: usize,
    d: usize,
    m: usize,
    lambda: f64,
    threshold: f64,
}

impl EnsembleConfig {
    pub fn new(n_total: usize, d: usize, m: usize, lambda: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("d must be positive".into()));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("m must be positive".into()));
        }
        if m > n_total {
            return Err(Error::InvalidConfig(format!(
                "m = {m} exceeds n = {n_total}"
            )));
        }
        if n_total / m < 2 {
            return Err(Error::InvalidConfig(format!(
                "subset size floor({n_total}/{m}) = {} is below 2",
                n_total / m
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(EnsembleConfig {
            n_total,
            d,
            m,
            lambda,
            threshold: 0.0,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Samples per subset, `floor(n / m)`.
    pub fn subset_size(&self) -> usize {
        self.n_total / self.m
    }

    /// `c₀ = d·m / n`.
    pub fn ratio(&self) -> f64 {
        (self.d * self.m) as f64 / self.n_total as f64
    }

    /// Whether `c₀ < 1`. Configurations outside this regime are still
    /// solvable because λ > 0 keeps every resolvent well defined.
    pub fn in_proportional_regime(&self) -> bool {
        self.ratio() < 1.0
    }
}

/// ±1 labels with per-class counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<i8>,
    counts: [usize; 2],
}

impl LabelVector {
    pub fn new(labels: Vec<i8>) -> Result<Self> {
        let mut counts = [0usize; 2];
        for &y in &labels {
            counts[Class::from_label(y)?.idx()] += 1;
        }
        Ok(LabelVector { labels, counts })
    }

    pub fn from_classes(classes: &[Class]) -> Self {
        let mut counts = [0usize; 2];
        let labels = classes
            .iter()
            .map(|c| {
                counts[c.idx()] += 1;
                c.label()
            })
            .collect();
        LabelVector { labels, counts }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.labels
    }

    pub fn class_of(&self, i: usize) -> Class {
        if self.labels[i] < 0 {
            Class::One
        } else {
            Class::Two
        }
    }

    pub fn count(&self, class: Class) -> usize {
        self.counts[class.idx()]
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.labels.len(), self.labels.iter().map(|&y| y as f64))
    }
}
