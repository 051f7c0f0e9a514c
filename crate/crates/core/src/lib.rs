//! Bagged least-squares SVM ensembles and their large-dimensional theory.
//!
//! The crate trains ensembles of ridge-regularized LSSVM classifiers on
//! disjoint subsets of the training data, predicts their test error from
//! first and second moments of the mixture model, and uses those predictions
//! to choose the number of subsets `m` and the regularization `λ`.

pub mod data;
pub mod error;
pub mod estimate;
pub mod isotropic;
pub mod lssvm;
pub mod model;
pub mod rmt;
pub mod rng;
pub mod selection;
pub mod stats;

pub use error::{Error, ErrorCategory, Result};
pub use lssvm::{
    empirical_error, ensemble_score, partition, train_ensemble, train_lssvm, Dataset,
    TrainedEnsemble,
};
pub use model::{Class, EnsembleConfig, LabelVector, MixtureModel};
pub use rmt::{predict, Predictor, ScorePrediction};
pub use selection::{
    benchmark, select_theoretical, theoretical_error_map, BenchmarkConfig, ErrorMap, SearchGrid,
    SelectionReport,
};
