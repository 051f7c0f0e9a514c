//! Asymptotic score statistics of the averaged LSSVM ensemble.
//!
//! The pipeline is: fixed point for the resolvent at subset size `n_s`,
//! second-order quantities, per-class score mean and variance, the optimal
//! threshold and the resulting Gaussian misclassification rate.

pub mod decision;
pub mod fixed_point;
pub mod moments;
pub mod second_order;

pub use decision::{classification_error, optimal_threshold};
pub use fixed_point::{
    solve_at, solve_fixed_point, solve_fixed_point_with, subset_class_counts,
    DeterministicEquivalent, FixedPointOptions,
};
pub use moments::{mean_weight, theoretical_mean, theoretical_variance, variance_parts, VarianceParts};
pub use second_order::{second_order, SecondOrderQuantities};

use crate::error::{Error, Result};
use crate::model::{Class, EnsembleConfig, MixtureModel};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorePrediction {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub threshold: f64,
    pub error: f64,
    pub priors: [f64; 2],
    pub config: EnsembleConfig,
}

impl ScorePrediction {
    pub fn means(&self) -> [f64; 2] {
        [self.mean1, self.mean2]
    }

    pub fn variances(&self) -> [f64; 2] {
        [self.var1, self.var2]
    }

    pub fn mean(&self, class: Class) -> f64 {
        self.means()[class.idx()]
    }

    pub fn variance(&self, class: Class) -> f64 {
        self.variances()[class.idx()]
    }

    /// Error at an arbitrary threshold.
    pub fn error_at(&self, eta: f64) -> f64 {
        classification_error(self.means(), self.variances(), self.priors, eta)
    }
}

/// Everything that depends on `(n_s, λ)` but not on `m` itself.
#[derive(Clone, Debug)]
struct SubsetSolution {
    means: [f64; 2],
    parts: [VarianceParts; 2],
}

type CacheKey = (usize, usize, u64);

/// Predictor for one model, caching subset solutions across calls.
///
/// Different `m` values that share a subset size reuse the same fixed
/// point. The cache is safe to use from parallel workers; a solution is
/// computed from pure inputs, so a race only duplicates work.
#[derive(Debug)]
pub struct Predictor {
    model: MixtureModel,
    options: FixedPointOptions,
    cache: RwLock<HashMap<CacheKey, Arc<SubsetSolution>>>,
}

impl Predictor {
    pub fn new(model: MixtureModel) -> Self {
        Self::with_options(model, FixedPointOptions::default())
    }

    pub fn with_options(model: MixtureModel, options: FixedPointOptions) -> Self {
        Predictor {
            model,
            options,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn cached_solutions(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    fn subset_solution(&self, config: &EnsembleConfig) -> Result<Arc<SubsetSolution>> {
        let counts = subset_class_counts(self.model.priors(), config.subset_size());
        let key = (counts[0], counts[1], config.lambda().to_bits());
        if let Some(hit) = self.cache.read().ok().and_then(|c| c.get(&key).cloned()) {
            return Ok(hit);
        }
        let de = solve_at(&self.model, counts, config.lambda(), &self.options)?;
        let so = second_order(&de, &self.model)?;
        let solution = Arc::new(SubsetSolution {
            means: [
                theoretical_mean(&de, &self.model, Class::One),
                theoretical_mean(&de, &self.model, Class::Two),
            ],
            parts: [
                variance_parts(&de, &so, &self.model, Class::One),
                variance_parts(&de, &so, &self.model, Class::Two),
            ],
        });
        if let Ok(mut cache) = self.cache.write() {
            cache.insert(key, Arc::clone(&solution));
        }
        Ok(solution)
    }

    pub fn predict(&self, config: &EnsembleConfig) -> Result<ScorePrediction> {
        if self.model.dim() != config.d() {
            return Err(Error::DimensionMismatch {
                expected: config.d(),
                found: self.model.dim(),
            });
        }
        let sol = self.subset_solution(config)?;
        let mut vars = [0.0; 2];
        for (k, parts) in sol.parts.iter().enumerate() {
            let v = parts.ensemble(config.m());
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "assembled score variance for class {} is {v:e}",
                    k + 1
                )));
            }
            vars[k] = v;
        }
        let priors = self.model.priors();
        let threshold = optimal_threshold(sol.means, vars, priors);
        let error = classification_error(sol.means, vars, priors, threshold);
        Ok(ScorePrediction {
            mean1: sol.means[0],
            mean2: sol.means[1],
            var1: vars[0],
            var2: vars[1],
            threshold,
            error,
            priors,
            config: *config,
        })
    }
}

/// One-shot prediction without caching across calls.
pub fn predict(model: &MixtureModel, config: &EnsembleConfig) -> Result<ScorePrediction> {
    Predictor::new(model.clone()).predict(config)
}
