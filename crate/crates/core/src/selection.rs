//! Choosing `(m, λ)`: theoretical error maps and their argmin, plus grid
//! search and random search baselines on empirical validation error.

use crate::data::stratified_split;
use crate::error::{Error, Result};
use crate::estimate::{estimate_model, EstimationConfig};
use crate::lssvm::{error_from_scores, partition, Dataset, LssvmSolver};
use crate::model::{EnsembleConfig, MixtureModel};
use crate::rmt::Predictor;
use crate::rng;
use crate::stats;
use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const SELECTION_REPORT_SCHEMA: &str = include_str!("../schemas/selection_report.schema.json");
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// `points` values from `min` to `max`, evenly spaced in log scale.
pub fn log_spaced(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || points == 0 {
        return Err(Error::InvalidConfig(format!(
            "need 0 < min <= max and at least one point, got [{min}, {max}] with {points}"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.ln(), max.ln());
    let mut out: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    out[0] = min;
    out[points - 1] = max;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub m_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
}

impl SearchGrid {
    pub fn new(m_values: Vec<usize>, lambda_values: Vec<f64>) -> Result<Self> {
        if m_values.is_empty() || lambda_values.is_empty() {
            return Err(Error::InvalidConfig("grid axes must be nonempty".into()));
        }
        if m_values[0] == 0 || m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "m values must be positive and strictly ascending".into(),
            ));
        }
        if lambda_values.iter().any(|l| !(*l > 0.0 && l.is_finite()))
            || lambda_values.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(
                "lambda values must be positive, finite and strictly ascending".into(),
            ));
        }
        Ok(SearchGrid {
            m_values,
            lambda_values,
        })
    }

    pub fn from_ranges(m_min: usize, m_max: usize, lambda_min: f64, lambda_max: f64, points: usize) -> Result<Self> {
        if m_min == 0 || m_max < m_min {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= m_min <= m_max, got {m_min}..{m_max}"
            )));
        }
        Self::new((m_min..=m_max).collect(), log_spaced(lambda_min, lambda_max, points)?)
    }

    /// `m = 1..50` and 40 log-spaced `λ` in `[1e-4, 10]`.
    pub fn standard() -> Self {
        Self::from_ranges(1, 50, 1e-4, 10.0, 40).expect("valid default grid")
    }

    pub fn len(&self) -> usize {
        self.m_values.len() * self.lambda_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(m, λ)` pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.m_values
            .iter()
            .flat_map(|&m| self.lambda_values.iter().map(move |&l| (m, l)))
            .collect()
    }
}

/// Row-major `|m| × |λ|` map; absent cells are infeasible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMap {
    pub m_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
    pub errors: Vec<Option<f64>>,
}

impl ErrorMap {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.errors[i * self.lambda_values.len() + j]
    }

    /// Indices of the smallest entry; ties go to the smallest `m`, then `λ`.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let cols = self.lambda_values.len();
        let mut best: Option<(usize, f64)> = None;
        for (k, e) in self.errors.iter().enumerate() {
            if let Some(e) = *e {
                if best.is_none_or(|(_, b)| e < b) {
                    best = Some((k, e));
                }
            }
        }
        best.map(|(k, _)| (k / cols, k % cols))
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        (0..self.m_values.len()).map(|i| self.get(i, j)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub m: usize,
    pub lambda: f64,
    pub error: f64,
    pub m_index: usize,
    pub lambda_index: usize,
}

pub fn select_from_map(map: &ErrorMap) -> Result<Selection> {
    let (i, j) = map.argmin().ok_or(Error::InfeasibleGrid)?;
    Ok(Selection {
        m: map.m_values[i],
        lambda: map.lambda_values[j],
        error: map.get(i, j).expect("argmin cell is present"),
        m_index: i,
        lambda_index: j,
    })
}

/// Predicted error over the grid. Cells with `n/m < 2`, a failed solve, or
/// `d·m/n ≥ max_ratio` (when given) are absent.
pub fn theoretical_error_map(
    model: &MixtureModel,
    n_total: usize,
    grid: &SearchGrid,
    max_ratio: Option<f64>,
) -> Result<ErrorMap> {
    let predictor = Predictor::new(model.clone());
    let d = model.dim();
    let errors: Vec<Option<f64>> = grid
        .pairs()
        .par_iter()
        .map(|&(m, lambda)| {
            let cfg = EnsembleConfig::new(n_total, d, m, lambda).ok()?;
            if max_ratio.is_some_and(|r| cfg.ratio() >= r) {
                return None;
            }
            predictor.predict(&cfg).ok().map(|p| p.error)
        })
        .collect();
    if errors.iter().all(Option::is_none) {
        return Err(Error::InfeasibleGrid);
    }
    Ok(ErrorMap {
        m_values: grid.m_values.clone(),
        lambda_values: grid.lambda_values.clone(),
        errors,
    })
}

/// Argmin of the predicted error restricted to `d·m/n < 1`.
pub fn select_theoretical(model: &MixtureModel, n_total: usize, grid: &SearchGrid) -> Result<Selection> {
    select_from_map(&theoretical_error_map(model, n_total, grid, Some(1.0))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub std: f64,
    pub reps: usize,
}

impl ErrorStats {
    pub fn from_samples(xs: &[f64]) -> Self {
        ErrorStats {
            mean: stats::mean(xs),
            std: stats::std_dev(xs),
            reps: xs.len(),
        }
    }

    pub fn std_error(&self) -> f64 {
        self.std / (self.reps as f64).sqrt()
    }
}

/// Repeated stratified train/test evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub reps: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl EvalProtocol {
    pub fn new(reps: usize, train_fraction: f64, seed: u64) -> Self {
        EvalProtocol {
            reps,
            train_fraction,
            seed,
            threshold: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Test error of the averaged ensemble for several `λ` sharing one
/// partition of `train` into `m` blocks.
fn evaluate_partition(
    train: &Dataset,
    test: &Dataset,
    m: usize,
    lambdas: &[f64],
    seed: u64,
    threshold: f64,
) -> Vec<Option<f64>> {
    let none = || vec![None; lambdas.len()];
    if m == 0 || train.n() / m < 2 {
        return none();
    }
    let Ok(subsets) = partition(train, m, seed) else {
        return none();
    };
    let Ok(solvers) = subsets.iter().map(LssvmSolver::new).collect::<Result<Vec<_>>>() else {
        return none();
    };
    lambdas
        .iter()
        .map(|&lambda| {
            let mut w = DVector::zeros(train.d());
            for s in &solvers {
                w += s.weights(lambda).ok()?;
            }
            w /= m as f64;
            let scores = test.features().tr_mul(&w);
            Some(error_from_scores(&scores, test.labels(), threshold))
        })
        .collect()
}

/// Held-out error statistics for each requested `(m, λ)`.
///
/// Every pair sees the same `reps` stratified splits; within a repetition
/// all `λ` for one `m` share one partition. A pair is absent if any
/// repetition cannot be trained.
pub fn evaluate_pairs(data: &Dataset, pairs: &[(usize, f64)], protocol: &EvalProtocol) -> Result<Vec<Option<ErrorStats>>> {
    protocol.validate()?;
    let splits = (0..protocol.reps)
        .map(|r| {
            let seed = rng::derive_seed(protocol.seed, "splits", &[r as u64]);
            stratified_split(data, protocol.train_fraction, seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &(m, _)) in pairs.iter().enumerate() {
        groups.entry(m).or_default().push(k);
    }
    let tasks: Vec<(usize, usize)> = (0..protocol.reps)
        .flat_map(|r| groups.keys().map(move |&m| (r, m)))
        .collect();
    let results: Vec<Vec<Option<f64>>> = tasks
        .par_iter()
        .map(|&(r, m)| {
            let lambdas: Vec<f64> = groups[&m].iter().map(|&k| pairs[k].1).collect();
            let (train, test) = &splits[r];
            let seed = rng::derive_seed(protocol.seed, "partition", &[r as u64, m as u64]);
            evaluate_partition(train, test, m, &lambdas, seed, protocol.threshold)
        })
        .collect();

    let mut samples: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(protocol.reps); pairs.len()];
    for (&(_, m), errs) in tasks.iter().zip(&results) {
        for (&k, e) in groups[&m].iter().zip(errs) {
            samples[k].push(*e);
        }
    }
    Ok(samples
        .into_iter()
        .map(|s| {
            s.into_iter()
                .collect::<Option<Vec<f64>>>()
                .map(|v| ErrorStats::from_samples(&v))
        })
        .collect())
}

/// Empirical counterpart of [`ErrorMap`], with spread over repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMap {
    pub m_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
    pub cells: Vec<Option<ErrorStats>>,
}

impl EmpiricalMap {
    pub fn get(&self, i: usize, j: usize) -> Option<ErrorStats> {
        self.cells[i * self.lambda_values.len() + j]
    }

    pub fn means(&self) -> ErrorMap {
        ErrorMap {
            m_values: self.m_values.clone(),
            lambda_values: self.lambda_values.clone(),
            errors: self.cells.iter().map(|c| c.map(|s| s.mean)).collect(),
        }
    }
}

pub fn empirical_error_map(data: &Dataset, grid: &SearchGrid, protocol: &EvalProtocol) -> Result<EmpiricalMap> {
    let cells = evaluate_pairs(data, &grid.pairs(), protocol)?;
    if cells.iter().all(Option::is_none) {
        return Err(Error::InfeasibleGrid);
    }
    Ok(EmpiricalMap {
        m_values: grid.m_values.clone(),
        lambda_values: grid.lambda_values.clone(),
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub m: usize,
    pub lambda: f64,
    pub validation: ErrorStats,
    pub evaluations: usize,
}

fn best_pair(pairs: &[(usize, f64)], stats: &[Option<ErrorStats>]) -> Result<SearchOutcome> {
    let mut best: Option<(usize, f64, ErrorStats)> = None;
    for (&(m, lambda), s) in pairs.iter().zip(stats) {
        let Some(s) = *s else { continue };
        let better = match best {
            None => true,
            Some((bm, bl, bs)) => {
                s.mean < bs.mean || (s.mean == bs.mean && (m, lambda) < (bm, bl))
            }
        };
        if better {
            best = Some((m, lambda, s));
        }
    }
    let (m, lambda, validation) = best.ok_or(Error::InfeasibleGrid)?;
    Ok(SearchOutcome {
        m,
        lambda,
        validation,
        evaluations: pairs.len(),
    })
}

/// Exhaustive search of the grid on mean validation error.
pub fn grid_search(data: &Dataset, grid: &SearchGrid, reps: usize, split_fraction: f64, seed: u64) -> Result<SearchOutcome> {
    let pairs = grid.pairs();
    let stats = evaluate_pairs(data, &pairs, &EvalProtocol::new(reps, split_fraction, seed))?;
    best_pair(&pairs, &stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub m_min: usize,
    pub m_max: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SearchBounds {
    pub fn of_grid(grid: &SearchGrid) -> Self {
        SearchBounds {
            m_min: grid.m_values[0],
            m_max: *grid.m_values.last().expect("nonempty grid"),
            lambda_min: grid.lambda_values[0],
            lambda_max: *grid.lambda_values.last().expect("nonempty grid"),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m_min == 0 || self.m_max < self.m_min {
            return Err(Error::InvalidConfig("invalid m bounds".into()));
        }
        if !(self.lambda_min > 0.0 && self.lambda_max >= self.lambda_min && self.lambda_max.is_finite()) {
            return Err(Error::InvalidConfig("invalid lambda bounds".into()));
        }
        Ok(())
    }
}

/// The `budget` pairs random search draws for `seed`: `m` uniform on the
/// integer range, `λ` log-uniform.
pub fn random_candidates(bounds: &SearchBounds, budget: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    bounds.validate()?;
    if budget == 0 {
        return Err(Error::InvalidConfig("budget must be at least 1".into()));
    }
    let mut r = rng::stream(seed, "random-search", &[]);
    let (a, b) = (bounds.lambda_min.ln(), bounds.lambda_max.ln());
    Ok((0..budget)
        .map(|_| {
            let m = r.random_range(bounds.m_min..=bounds.m_max);
            let lambda = if a == b { bounds.lambda_min } else { r.random_range(a..b).exp() };
            (m, lambda)
        })
        .collect())
}

pub fn random_search(
    data: &Dataset,
    bounds: &SearchBounds,
    budget: usize,
    reps: usize,
    split_fraction: f64,
    seed: u64,
) -> Result<SearchOutcome> {
    let pairs = random_candidates(bounds, budget, seed)?;
    let stats = evaluate_pairs(data, &pairs, &EvalProtocol::new(reps, split_fraction, seed))?;
    best_pair(&pairs, &stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub seed: u64,
    /// Repetitions of validation splits and of held-out evaluation.
    pub reps: usize,
    /// Train share of each validation split used by the baselines.
    pub split_fraction: f64,
    /// Share of the data held out for the final comparison.
    pub holdout_fraction: f64,
    /// Random search budget; defaults to the grid size.
    pub budget: Option<usize>,
    pub bootstrap_reps: usize,
    pub shrinkage_override: Option<f64>,
    /// Theoretical cells with `d·m/n` at or above this are skipped.
    pub max_ratio: Option<f64>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            seed: 0,
            reps: 10,
            split_fraction: 0.8,
            holdout_fraction: 0.2,
            budget: None,
            bootstrap_reps: 100,
            shrinkage_override: None,
            max_ratio: Some(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub m: usize,
    pub lambda: f64,
    /// Predicted error for the theoretical strategy, mean validation error
    /// for the baselines.
    pub selection_error: f64,
    pub evaluations: usize,
    pub heldout: ErrorStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub baseline: String,
    /// `(ε̃ − ε)/ε`; positive when the theoretical choice does better.
    /// Absent when the theoretical held-out error is zero.
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub library_version: String,
    pub seed: u64,
    pub reps: usize,
    pub split_fraction: f64,
    pub holdout_fraction: f64,
    pub budget: usize,
    pub max_ratio: Option<f64>,
    pub n_selection: usize,
    pub n_holdout: usize,
    pub d: usize,
    pub threshold: f64,
    pub mean_estimator: String,
    pub bootstrap_reps: usize,
    pub covariance_estimator: String,
    pub shrinkage: [f64; 2],
}

/// Run-dependent values, excluded from [`SelectionReport::digest`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VolatileInfo {
    pub generated_at_unix: u64,
    pub wall_time_secs: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub best_m: usize,
    pub best_lambda: f64,
    pub best_predicted_error: f64,
    pub m_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
    /// Row-major `|m_values| × |lambda_values|`; `null` marks absent cells.
    pub error_map: Vec<Option<f64>>,
    pub theoretical: StrategyResult,
    pub baseline_results: Vec<StrategyResult>,
    pub improvement: Vec<Improvement>,
    pub metadata: ReportMetadata,
    pub volatile: VolatileInfo,
}

impl SelectionReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("serializing report: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidData(format!("parsing report: {e}")))
    }

    /// SHA-256 of the report with volatile fields cleared.
    pub fn digest(&self) -> String {
        let stable = SelectionReport {
            volatile: VolatileInfo::default(),
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&stable).expect("report serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn error_map(&self) -> ErrorMap {
        ErrorMap {
            m_values: self.m_values.clone(),
            lambda_values: self.lambda_values.clone(),
            errors: self.error_map.clone(),
        }
    }
}

/// Held-out error of each `(m, λ)` when trained on all of `train`, over
/// `reps` partitions shared by every pair.
pub fn heldout_errors(
    train: &Dataset,
    test: &Dataset,
    pairs: &[(usize, f64)],
    reps: usize,
    seed: u64,
) -> Result<Vec<ErrorStats>> {
    let per_rep: Vec<Vec<Option<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            pairs
                .iter()
                .map(|&(m, lambda)| {
                    let s = rng::derive_seed(seed, "eval", &[r as u64, m as u64]);
                    evaluate_partition(train, test, m, &[lambda], s, 0.0)[0]
                })
                .collect()
        })
        .collect();
    (0..pairs.len())
        .map(|k| {
            let xs = per_rep
                .iter()
                .map(|row| row[k])
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "pair m = {}, lambda = {} cannot be trained on {} samples",
                        pairs[k].0,
                        pairs[k].1,
                        train.n()
                    ))
                })?;
            Ok(ErrorStats::from_samples(&xs))
        })
        .collect()
}

/// Theoretical selection against grid and random search on a common
/// held-out split.
///
/// The data are split once into a selection set and a held-out set. The
/// theoretical strategy estimates the mixture from the selection set and
/// minimizes the predicted error; the baselines minimize validation error
/// over repeated splits of the selection set, sharing split seeds. Each
/// chosen pair is then retrained on the whole selection set `reps` times
/// and scored on the held-out set with the sign rule.
pub fn benchmark(data: &Dataset, grid: &SearchGrid, cfg: &BenchmarkConfig) -> Result<SelectionReport> {
    if !(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction must lie in (0, 1), got {}",
            cfg.holdout_fraction
        )));
    }
    let holdout_seed = rng::derive_seed(cfg.seed, "holdout", &[]);
    let (selection_set, holdout) = stratified_split(data, 1.0 - cfg.holdout_fraction, holdout_seed)?;
    let mut wall = BTreeMap::new();

    let start = Instant::now();
    let estimation = EstimationConfig {
        bootstrap_reps: cfg.bootstrap_reps,
        seed: rng::derive_seed(cfg.seed, "bootstrap", &[]),
        shrinkage_override: cfg.shrinkage_override,
    };
    let estimate = estimate_model(&selection_set, &estimation)?;
    let map = theoretical_error_map(&estimate.model, selection_set.n(), grid, cfg.max_ratio)?;
    let theory = select_from_map(&map)?;
    wall.insert("theoretical".to_string(), start.elapsed().as_secs_f64());

    let search_seed = rng::derive_seed(cfg.seed, "search", &[]);
    let start = Instant::now();
    let gs = grid_search(&selection_set, grid, cfg.reps, cfg.split_fraction, search_seed)?;
    wall.insert("grid-search".to_string(), start.elapsed().as_secs_f64());

    let budget = cfg.budget.unwrap_or(grid.len());
    let start = Instant::now();
    let rs = random_search(
        &selection_set,
        &SearchBounds::of_grid(grid),
        budget,
        cfg.reps,
        cfg.split_fraction,
        search_seed,
    )?;
    wall.insert("random-search".to_string(), start.elapsed().as_secs_f64());

    let pairs = [(theory.m, theory.lambda), (gs.m, gs.lambda), (rs.m, rs.lambda)];
    let eval_seed = rng::derive_seed(cfg.seed, "heldout", &[]);
    let held = heldout_errors(&selection_set, &holdout, &pairs, cfg.reps, eval_seed)?;

    let theoretical = StrategyResult {
        strategy: "theoretical".into(),
        m: theory.m,
        lambda: theory.lambda,
        selection_error: theory.error,
        evaluations: map.errors.iter().filter(|e| e.is_some()).count(),
        heldout: held[0],
    };
    let baseline_results = vec![
        StrategyResult {
            strategy: "grid-search".into(),
            m: gs.m,
            lambda: gs.lambda,
            selection_error: gs.validation.mean,
            evaluations: gs.evaluations,
            heldout: held[1],
        },
        StrategyResult {
            strategy: "random-search".into(),
            m: rs.m,
            lambda: rs.lambda,
            selection_error: rs.validation.mean,
            evaluations: rs.evaluations,
            heldout: held[2],
        },
    ];
    let improvement = baseline_results
        .iter()
        .map(|b| Improvement {
            baseline: b.strategy.clone(),
            value: improvement_ratio(b.heldout.mean, theoretical.heldout.mean),
        })
        .collect();

    let generated_at_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SelectionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        best_m: theory.m,
        best_lambda: theory.lambda,
        best_predicted_error: theory.error,
        m_values: map.m_values.clone(),
        lambda_values: map.lambda_values.clone(),
        error_map: map.errors.clone(),
        theoretical,
        baseline_results,
        improvement,
        metadata: ReportMetadata {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            reps: cfg.reps,
            split_fraction: cfg.split_fraction,
            holdout_fraction: cfg.holdout_fraction,
            budget,
            max_ratio: cfg.max_ratio,
            n_selection: selection_set.n(),
            n_holdout: holdout.n(),
            d: data.d(),
            threshold: 0.0,
            mean_estimator: "bootstrap average of resample means".into(),
            bootstrap_reps: cfg.bootstrap_reps,
            covariance_estimator: match cfg.shrinkage_override {
                Some(_) => "fixed shrinkage toward scaled identity".into(),
                None => "Ledoit-Wolf toward scaled identity".into(),
            },
            shrinkage: estimate.shrinkage,
        },
        volatile: VolatileInfo {
            generated_at_unix,
            wall_time_secs: wall,
        },
    })
}

/// `(baseline − theory)/theory`, absent when the theoretical error is zero.
pub fn improvement_ratio(baseline: f64, theory: f64) -> Option<f64> {
    (theory != 0.0).then(|| (baseline - theory) / theory)
}
