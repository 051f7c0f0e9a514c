//! Plug-in estimation of a mixture model from labeled data: bootstrap class
//! means and Ledoit–Wolf shrinkage covariances.

use crate::error::{Error, Result};
use crate::lssvm::Dataset;
use crate::model::{Class, MixtureModel};
use crate::rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub bootstrap_reps: usize,
    pub seed: u64,
    pub shrinkage_override: Option<f64>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            bootstrap_reps: 100,
            seed: 0,
            shrinkage_override: None,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_reps == 0 {
            return Err(Error::InvalidConfig("bootstrap_reps must be at least 1".into()));
        }
        if let Some(s) = self.shrinkage_override {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidConfig(format!(
                    "shrinkage override must lie in [0, 1], got {s}"
                )));
            }
        }
        Ok(())
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Average of `bootstrap_reps` with-replacement resample means.
///
/// Columns are put in a canonical order before resampling, so the result
/// does not depend on how the samples were shuffled.
pub fn bootstrap_mean(samples: &DMatrix<f64>, cfg: &EstimationConfig) -> Result<DVector<f64>> {
    cfg.validate()?;
    let n = samples.ncols();
    if n == 0 {
        return Err(Error::InvalidData("cannot estimate the mean of an empty class".into()));
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|j| samples.column(j).iter().copied().collect()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lexicographic(&cols[a], &cols[b]));

    // Each resample mean is linear in the draws, so the average over
    // replicates only needs the total draw count of every sample.
    let mut counts = vec![0u64; n];
    let mut rng = rng::stream(cfg.seed, "bootstrap", &[n as u64]);
    for _ in 0..cfg.bootstrap_reps * n {
        counts[rng.random_range(0..n)] += 1;
    }
    let total = (cfg.bootstrap_reps * n) as f64;
    let mut mean = DVector::zeros(samples.nrows());
    for (rank, &col) in order.iter().enumerate() {
        if counts[rank] > 0 {
            mean.axpy(counts[rank] as f64 / total, &samples.column(col), 1.0);
        }
    }
    Ok(mean)
}

/// Ledoit–Wolf shrinkage toward `(tr S / d) I`, with `S` the centered
/// sample covariance normalized by `n`. Returns the estimate and the
/// shrinkage intensity in `[0, 1]`.
pub fn ledoit_wolf(samples: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let (d, n) = samples.shape();
    if n < 2 {
        return Err(Error::InvalidData(format!(
            "covariance estimation needs at least 2 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let df = d as f64;
    let (x, s) = centered(samples);
    let mu = s.trace() / df;

    let beta_raw: f64 = x.column_iter().map(|c| c.norm_squared().powi(2)).sum();
    let delta_raw = s.norm_squared();
    let beta = (beta_raw / nf - delta_raw) / (df * nf);
    let delta = (delta_raw - 2.0 * mu * s.trace() + df * mu * mu) / df;
    let shrinkage = if delta > 0.0 {
        (beta.min(delta) / delta).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok((shrink(&s, shrinkage), shrinkage))
}

fn shrink(s: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let d = s.nrows();
    let mu = s.trace() / d as f64;
    let mut out = s * (1.0 - rho);
    for i in 0..d {
        out[(i, i)] += rho * mu;
    }
    out
}

/// An estimated model together with the shrinkage applied per class.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelEstimate {
    pub model: MixtureModel,
    pub shrinkage: [f64; 2],
}

/// Estimates means, covariances and empirical priors for both classes.
pub fn estimate_model(data: &Dataset, cfg: &EstimationConfig) -> Result<ModelEstimate> {
    cfg.validate()?;
    let mut means = Vec::with_capacity(2);
    let mut covs = Vec::with_capacity(2);
    let mut shrinkage = [0.0; 2];
    for cls in Class::BOTH {
        let block = data.class_block(cls);
        if block.ncols() < 2 {
            return Err(Error::InvalidData(format!(
                "class {} has {} samples; at least 2 are required",
                cls.idx() + 1,
                block.ncols()
            )));
        }
        let class_cfg = EstimationConfig {
            seed: rng::derive_seed(cfg.seed, "bootstrap-class", &[cls.idx() as u64]),
            ..*cfg
        };
        means.push(bootstrap_mean(&block, &class_cfg)?);
        let (cov, rho) = match cfg.shrinkage_override {
            Some(rho) => (shrink(&centered(&block).1, rho), rho),
            None => ledoit_wolf(&block)?,
        };
        covs.push(symmetrize(cov));
        shrinkage[cls.idx()] = rho;
    }
    let n = data.n() as f64;
    let priors = [
        data.labels().count(Class::One) as f64 / n,
        data.labels().count(Class::Two) as f64 / n,
    ];
    let (s2, s1) = (covs.pop().unwrap(), covs.pop().unwrap());
    let (m2, m1) = (means.pop().unwrap(), means.pop().unwrap());
    Ok(ModelEstimate {
        model: MixtureModel::new(m1, m2, s1, s2, priors)?,
        shrinkage,
    })
}

/// Centered samples and their covariance normalized by `n`.
fn centered(samples: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let mean = samples.column_mean();
    let mut x = samples.clone();
    for mut col in x.column_iter_mut() {
        col -= &mean;
    }
    let s = &x * x.transpose() / samples.ncols() as f64;
    (x, s)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}
