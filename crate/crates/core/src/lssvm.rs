//! Closed-form LSSVM training, disjoint stratified partitioning and the
//! averaged ensemble.
//!
//! A single classifier is `ω = (1/n)(XXᵀ/n + λI)⁻¹Xy` with no bias term. When
//! a subset has fewer samples than features the equivalent dual form
//! `ω = (1/n)X(XᵀX/n + λI)⁻¹y` is solved instead; both are Cholesky solves.
//!
//! "Bootstrap" here means partitioning without replacement: subsets are
//! disjoint and equally sized, and the `n mod m` leftover samples are dropped.

use crate::error::{Error, Result};
use crate::model::{Class, EnsembleConfig, LabelVector};
use crate::rng;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;

/// Samples as columns plus their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: LabelVector,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: LabelVector) -> Result<Self> {
        if features.ncols() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                found: labels.len(),
            });
        }
        Ok(Dataset { features, labels })
    }

    /// Stacks a class-1 block and a class-2 block, each `d × n_ℓ`.
    pub fn from_class_blocks(class1: &DMatrix<f64>, class2: &DMatrix<f64>) -> Result<Self> {
        if class1.nrows() != class2.nrows() {
            return Err(Error::DimensionMismatch {
                expected: class1.nrows(),
                found: class2.nrows(),
            });
        }
        let (n1, n2) = (class1.ncols(), class2.ncols());
        let mut x = DMatrix::zeros(class1.nrows(), n1 + n2);
        x.columns_mut(0, n1).copy_from(class1);
        x.columns_mut(n1, n2).copy_from(class2);
        let mut classes = vec![Class::One; n1];
        classes.extend(std::iter::repeat_n(Class::Two, n2));
        Dataset::new(x, LabelVector::from_classes(&classes))
    }

    pub fn d(&self) -> usize {
        self.features.nrows()
    }

    pub fn n(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn class_indices(&self, class: Class) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.labels.class_of(i) == class)
            .collect()
    }

    /// Columns of one class as a `d × n_ℓ` matrix.
    pub fn class_block(&self, class: Class) -> DMatrix<f64> {
        self.features.select_columns(&self.class_indices(class))
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let labels = indices.iter().map(|&i| self.labels.as_slice()[i]).collect();
        Dataset {
            features: self.features.select_columns(indices),
            labels: LabelVector::new(labels).expect("labels already validated"),
        }
    }
}

/// Pre-factored pieces of one subset, reusable across λ values.
#[derive(Clone, Debug)]
pub struct LssvmSolver {
    x: DMatrix<f64>,
    y: DVector<f64>,
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    dual: bool,
}

impl LssvmSolver {
    pub fn new(data: &Dataset) -> Result<Self> {
        let n = data.n();
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "a subset needs at least 2 samples, got {n}"
            )));
        }
        let x = data.features().clone();
        let y = data.labels().to_vector();
        let nf = n as f64;
        let dual = n < data.d();
        let (gram, rhs) = if dual {
            (x.tr_mul(&x) / nf, y.clone())
        } else {
            (&x * x.transpose() / nf, &x * &y / nf)
        };
        Ok(LssvmSolver {
            x,
            y,
            gram,
            rhs,
            dual,
        })
    }

    pub fn uses_dual(&self) -> bool {
        self.dual
    }

    pub fn weights(&self, lambda: f64) -> Result<DVector<f64>> {
        let (d, n) = self.x.shape();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let fail = |reason: &str| Error::SolveFailed {
            reason: reason.to_string(),
            lambda,
            n,
            d,
        };
        let mut a = self.gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += lambda;
        }
        let chol = a
            .cholesky()
            .ok_or_else(|| fail("matrix is not positive definite"))?;
        let w = if self.dual {
            let alpha = chol.solve(&self.y);
            &self.x * alpha / n as f64
        } else {
            chol.solve(&self.rhs)
        };
        if w.iter().all(|v| v.is_finite()) {
            Ok(w)
        } else {
            Err(fail("non-finite weights"))
        }
    }
}

/// Trains a single LSSVM on `data`.
pub fn train_lssvm(data: &Dataset, lambda: f64) -> Result<DVector<f64>> {
    LssvmSolver::new(data)?.weights(lambda)
}

/// Stratified disjoint split of sample indices into `m` equal blocks.
///
/// Class-1 counts per block follow `floor((j+1)q) − floor(jq)` with
/// `q = n_s·n₁/n`, so every block is within one sample of the overall
/// proportion and the totals never exceed the available class samples.
pub fn partition_indices(labels: &LabelVector, m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if m == 0 || n / m.max(1) < 2 {
        return Err(Error::InvalidConfig(format!(
            "cannot split {n} samples into {m} subsets of at least 2"
        )));
    }
    let ns = n / m;
    let n1 = labels.count(Class::One);
    let q = ns as f64 * n1 as f64 / n as f64;
    let mut pools: [Vec<usize>; 2] = [Vec::with_capacity(n1), Vec::with_capacity(n - n1)];
    for i in 0..n {
        pools[labels.class_of(i).idx()].push(i);
    }
    let mut rng = rng::stream(seed, "partition", &[m as u64]);
    pools[0].shuffle(&mut rng);
    pools[1].shuffle(&mut rng);

    let mut cursor = [0usize; 2];
    let mut blocks = Vec::with_capacity(m);
    for j in 0..m {
        let a = ((j + 1) as f64 * q).floor() as usize - (j as f64 * q).floor() as usize;
        let b = ns - a;
        if cursor[0] + a > pools[0].len() || cursor[1] + b > pools[1].len() {
            return Err(Error::InvalidConfig(format!(
                "m = {m} is too large for a stratified split of {n} samples"
            )));
        }
        let mut block: Vec<usize> = pools[0][cursor[0]..cursor[0] + a].to_vec();
        block.extend_from_slice(&pools[1][cursor[1]..cursor[1] + b]);
        cursor[0] += a;
        cursor[1] += b;
        block.sort_unstable();
        blocks.push(block);
    }
    Ok(blocks)
}

pub fn partition(data: &Dataset, m: usize, seed: u64) -> Result<Vec<Dataset>> {
    Ok(partition_indices(data.labels(), m, seed)?
        .iter()
        .map(|idx| data.subset(idx))
        .collect())
}

/// `m` LSSVMs whose scores are averaged.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedEnsemble {
    weights: Vec<DVector<f64>>,
    mean_weight: DVector<f64>,
    config: EnsembleConfig,
}

impl TrainedEnsemble {
    pub fn new(weights: Vec<DVector<f64>>, config: EnsembleConfig) -> Result<Self> {
        if weights.len() != config.m() {
            return Err(Error::InvalidConfig(format!(
                "expected {} weight vectors, got {}",
                config.m(),
                weights.len()
            )));
        }
        for w in &weights {
            if w.len() != config.d() {
                return Err(Error::DimensionMismatch {
                    expected: config.d(),
                    found: w.len(),
                });
            }
            if !w.norm().is_finite() {
                return Err(Error::Numerical("non-finite weight vector".into()));
            }
        }
        let mut mean_weight = DVector::zeros(config.d());
        for w in &weights {
            mean_weight += w;
        }
        mean_weight /= weights.len() as f64;
        Ok(TrainedEnsemble {
            weights,
            mean_weight,
            config,
        })
    }

    pub fn weights(&self) -> &[DVector<f64>] {
        &self.weights
    }

    /// The average of the member weights; the ensemble score is linear, so
    /// `g(x) = ω̄ᵀx`.
    pub fn mean_weight(&self) -> &DVector<f64> {
        &self.mean_weight
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    /// Scores every column of `x` at once.
    pub fn scores(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.nrows() != self.config.d() {
            return Err(Error::DimensionMismatch {
                expected: self.config.d(),
                found: x.nrows(),
            });
        }
        Ok(x.tr_mul(&self.mean_weight))
    }
}

/// Mean of the per-classifier scores `ωᵢᵀx`.
pub fn ensemble_score(ensemble: &TrainedEnsemble, x: &DVector<f64>) -> Result<f64> {
    if x.len() != ensemble.config.d() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.config.d(),
            found: x.len(),
        });
    }
    let total: f64 = ensemble.weights.iter().map(|w| w.dot(x)).sum();
    Ok(total / ensemble.weights.len() as f64)
}

/// Fraction of misclassified samples given precomputed scores.
pub fn error_from_scores(scores: &DVector<f64>, labels: &LabelVector, threshold: f64) -> f64 {
    let wrong = scores
        .iter()
        .zip(labels.as_slice())
        .filter(|(&g, &y)| {
            let predicted = if g < threshold { -1 } else { 1 };
            predicted != y
        })
        .count();
    wrong as f64 / labels.len() as f64
}

pub fn empirical_error(ensemble: &TrainedEnsemble, test: &Dataset, threshold: f64) -> Result<f64> {
    if test.n() == 0 {
        return Err(Error::InvalidData("test set is empty".into()));
    }
    let scores = ensemble.scores(test.features())?;
    Ok(error_from_scores(&scores, test.labels(), threshold))
}

pub fn train_ensemble(data: &Dataset, config: &EnsembleConfig, seed: u64) -> Result<TrainedEnsemble> {
    if data.n() != config.n_total() {
        return Err(Error::InvalidConfig(format!(
            "config expects n = {}, data has {}",
            config.n_total(),
            data.n()
        )));
    }
    if data.d() != config.d() {
        return Err(Error::DimensionMismatch {
            expected: config.d(),
            found: data.d(),
        });
    }
    let subsets = partition(data, config.m(), seed)?;
    let weights = subsets
        .par_iter()
        .map(|s| train_lssvm(s, config.lambda()))
        .collect::<Result<Vec<_>>>()?;
    TrainedEnsemble::new(weights, *config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::collections::HashSet;

    fn random_dataset(d: usize, n1: usize, n2: usize, seed: u64) -> Dataset {
        let mut r = rng::stream(seed, "test-data", &[]);
        let mut x = DMatrix::zeros(d, n1 + n2);
        for j in 0..n1 + n2 {
            let shift = if j < n1 { -0.5 } else { 0.5 };
            for i in 0..d {
                let z: f64 = r.sample(StandardNormal);
                x[(i, j)] = z + if i == 0 { shift } else { 0.0 };
            }
        }
        let mut classes = vec![Class::One; n1];
        classes.extend(vec![Class::Two; n2]);
        Dataset::new(x, LabelVector::from_classes(&classes)).unwrap()
    }

    fn ensemble_of(weights: Vec<DVector<f64>>) -> TrainedEnsemble {
        let d = weights[0].len();
        let m = weights.len();
        let cfg = EnsembleConfig::new(2 * m.max(1), d, m, 1.0).unwrap();
        TrainedEnsemble::new(weights, cfg).unwrap()
    }

    #[test]
    fn scalar_closed_form() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let data = Dataset::new(x, LabelVector::new(vec![1, -1]).unwrap()).unwrap();
        let w = train_lssvm(&data, 1.0).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_inverse_oracle() {
        let data = random_dataset(4, 6, 6, 1);
        let lambda = 0.3;
        let n = data.n() as f64;
        let x = data.features();
        let y = data.labels().to_vector();
        let a = x * x.transpose() / n + DMatrix::identity(4, 4) * lambda;
        let oracle = a.try_inverse().unwrap() * x * &y / n;
        let w = train_lssvm(&data, lambda).unwrap();
        assert!((&w - &oracle).norm() <= 1e-10 * oracle.norm());
    }

    #[test]
    fn dual_and_primal_agree() {
        let data = random_dataset(30, 6, 6, 2);
        let solver = LssvmSolver::new(&data).unwrap();
        assert!(solver.uses_dual());
        let w = solver.weights(0.05).unwrap();
        let n = data.n() as f64;
        let x = data.features();
        let a = x * x.transpose() / n + DMatrix::identity(30, 30) * 0.05;
        let primal = a.cholesky().unwrap().solve(&(x * data.labels().to_vector() / n));
        assert!((&w - &primal).norm() <= 1e-10 * primal.norm());
    }

    #[test]
    fn zero_rhs_gives_zero_weights() {
        // Two identical samples with opposite labels cancel in Xy.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let data = Dataset::new(x, LabelVector::new(vec![-1, 1]).unwrap()).unwrap();
        let w = train_lssvm(&data, 0.5).unwrap();
        assert_eq!(w.norm(), 0.0);
    }

    #[test]
    fn rejects_bad_lambda_and_tiny_subsets() {
        let data = random_dataset(3, 2, 2, 3);
        assert!(train_lssvm(&data, 0.0).is_err());
        assert!(train_lssvm(&data, -1.0).is_err());
        assert!(train_lssvm(&data.subset(&[0]), 1.0).is_err());
    }

    #[test]
    fn residual_of_normal_equations_is_small() {
        let data = random_dataset(8, 20, 20, 4);
        for &lambda in &[1e-4, 1e-2, 1.0, 10.0] {
            let w = train_lssvm(&data, lambda).unwrap();
            let n = data.n() as f64;
            let x = data.features();
            let lhs = x * (x.transpose() * &w) / n + &w * lambda;
            let rhs = x * data.labels().to_vector() / n;
            assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + w.norm()));
        }
    }

    #[test]
    fn large_lambda_approaches_scaled_mean_difference() {
        let data = random_dataset(5, 15, 15, 5);
        let n = data.n() as f64;
        let xy = data.features() * data.labels().to_vector() / n;
        let residual = |lambda: f64| {
            let w = train_lssvm(&data, lambda).unwrap();
            (w - &xy / lambda).norm()
        };
        let r1 = residual(1e6);
        let r2 = residual(2e6);
        assert!(r1 / r2 >= 3.5, "ratio {}", r1 / r2);
    }

    #[test]
    fn partition_exact_division_is_balanced() {
        let data = random_dataset(2, 50, 50, 6);
        let parts = partition(&data, 5, 9).unwrap();
        assert_eq!(parts.len(), 5);
        for p in &parts {
            assert_eq!(p.n(), 20);
            assert_eq!(p.labels().count(Class::One), 10);
        }
    }

    #[test]
    fn partition_drops_remainder_without_reuse() {
        let data = random_dataset(2, 52, 51, 7);
        let blocks = partition_indices(data.labels(), 5, 11).unwrap();
        let mut seen = HashSet::new();
        for b in &blocks {
            assert_eq!(b.len(), 20);
            for &i in b {
                assert!(seen.insert(i), "index {i} reused");
            }
        }
        assert_eq!(seen.len(), 100);
        assert_eq!(blocks, partition_indices(data.labels(), 5, 11).unwrap());
        assert_ne!(blocks, partition_indices(data.labels(), 5, 12).unwrap());
    }

    #[test]
    fn partition_rejects_too_many_subsets() {
        let data = random_dataset(2, 3, 2, 8);
        assert!(partition(&data, 3, 0).is_err());
        assert!(partition(&data, 0, 0).is_err());
    }

    #[test]
    fn ensemble_score_examples() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let ens = ensemble_of(vec![e1.clone(), e1.clone(), e1.clone()]);
        assert_eq!(ensemble_score(&ens, &(&e1 * 2.0)).unwrap(), 2.0);
        let ens = ensemble_of(vec![e1.clone(), -&e1]);
        assert_eq!(ensemble_score(&ens, &(&e1 * 3.7)).unwrap(), 0.0);
        assert!(ensemble_score(&ens, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn ensemble_score_is_mean_of_member_scores() {
        let data = random_dataset(6, 20, 20, 9);
        let cfg = EnsembleConfig::new(40, 6, 4, 0.1).unwrap();
        let ens = train_ensemble(&data, &cfg, 3).unwrap();
        let x = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let oracle: f64 = ens.weights().iter().map(|w| w.dot(&x)).sum::<f64>() / 4.0;
        assert!((ensemble_score(&ens, &x).unwrap() - oracle).abs() < 1e-12);
        let batch = ens.scores(&DMatrix::from_columns(&[x])).unwrap();
        assert!((batch[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn error_examples_and_tie_rule() {
        let labels = LabelVector::new(vec![-1, -1, 1, 1]).unwrap();
        let exact = DVector::from_vec(vec![-1.0, -1.0, 1.0, 1.0]);
        assert_eq!(error_from_scores(&exact, &labels, 0.0), 0.0);
        assert_eq!(error_from_scores(&(-exact), &labels, 0.0), 1.0);
        // ties go to class 2, so every class-1 sample is wrong
        let zeros = DVector::zeros(4);
        assert_eq!(error_from_scores(&zeros, &labels, 0.0), 0.5);
        let labels = LabelVector::new(vec![-1, 1, 1, 1]).unwrap();
        assert_eq!(error_from_scores(&DVector::zeros(4), &labels, 0.0), 0.25);
    }

    #[test]
    fn empirical_error_rejects_empty_test() {
        let data = random_dataset(3, 4, 4, 10);
        let cfg = EnsembleConfig::new(8, 3, 2, 1.0).unwrap();
        let ens = train_ensemble(&data, &cfg, 0).unwrap();
        let empty = data.subset(&[]);
        assert!(empirical_error(&ens, &empty, 0.0).is_err());
    }

    #[test]
    fn single_member_ensemble_matches_direct_training() {
        let data = random_dataset(5, 10, 10, 11);
        let cfg = EnsembleConfig::new(20, 5, 1, 0.2).unwrap();
        let ens = train_ensemble(&data, &cfg, 42).unwrap();
        let direct = train_lssvm(&data, 0.2).unwrap();
        assert!((&ens.weights()[0] - &direct).norm() < 1e-12);
    }

    #[test]
    fn smallest_subsets_train_and_are_deterministic() {
        let data = random_dataset(4, 10, 10, 12);
        let cfg = EnsembleConfig::new(20, 4, 10, 0.5).unwrap();
        let a = train_ensemble(&data, &cfg, 5).unwrap();
        assert_eq!(a.weights().len(), 10);
        assert!(a.weights().iter().all(|w| w.iter().all(|v| v.is_finite())));
        let b = train_ensemble(&data, &cfg, 5).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn score_is_linear(alpha in -5.0f64..5.0, beta in -5.0f64..5.0, seed in 0u64..50) {
            let data = random_dataset(4, 6, 6, seed);
            let cfg = EnsembleConfig::new(12, 4, 2, 0.3).unwrap();
            let ens = train_ensemble(&data, &cfg, seed).unwrap();
            let x = data.features().column(0).into_owned();
            let z = data.features().column(7).into_owned();
            let lhs = ensemble_score(&ens, &(&x * alpha + &z * beta)).unwrap();
            let rhs = alpha * ensemble_score(&ens, &x).unwrap()
                + beta * ensemble_score(&ens, &z).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn partitions_are_disjoint_and_stratified(
            n1 in 2usize..60, n2 in 2usize..60, m in 1usize..12, seed in 0u64..1000,
        ) {
            let mut classes = vec![Class::One; n1];
            classes.extend(vec![Class::Two; n2]);
            let labels = LabelVector::from_classes(&classes);
            let n = n1 + n2;
            prop_assume!(n / m >= 2);
            let blocks = partition_indices(&labels, m, seed).unwrap();
            let ns = n / m;
            let expected = ns as f64 * n1 as f64 / n as f64;
            let mut seen = HashSet::new();
            for b in &blocks {
                prop_assert_eq!(b.len(), ns);
                let c1 = b.iter().filter(|&&i| labels.class_of(i) == Class::One).count();
                prop_assert!((c1 as f64 - expected).abs() <= 1.0);
                for &i in b {
                    prop_assert!(seen.insert(i));
                }
            }
        }
    }
}
