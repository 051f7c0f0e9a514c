use crate::error::{Error, Result};
use crate::model::{Class, EnsembleConfig, MixtureModel};
use nalgebra::{DMatrix, Matrix2, Vector2};

/// Solution of the coupled resolvent equations at subset size `n_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeterministicEquivalent {
    pub q_bar: DMatrix<f64>,
    pub delta: [f64; 2],
    pub subset_n: usize,
    pub subset_class_n: [usize; 2],
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl DeterministicEquivalent {
    /// Class fractions `n_ℓₛ / n_s` used as mixing weights.
    pub fn class_fractions(&self) -> [f64; 2] {
        let n = self.subset_n as f64;
        [
            self.subset_class_n[0] as f64 / n,
            self.subset_class_n[1] as f64 / n,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Take Newton steps on `δ − f(δ)` whenever they keep `δ` nonnegative,
    /// falling back to the damped iteration otherwise.
    pub accelerate: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-10,
            max_iter: 1000,
            accelerate: true,
        }
    }
}

/// Per-class subset counts `round(c_ℓ·n_s)`.
pub fn subset_class_counts(priors: [f64; 2], subset_n: usize) -> [usize; 2] {
    let n1 = ((priors[0] * subset_n as f64).round() as usize).min(subset_n);
    [n1, subset_n - n1]
}

pub fn solve_fixed_point(model: &MixtureModel, config: &EnsembleConfig) -> Result<DeterministicEquivalent> {
    solve_fixed_point_with(model, config, &FixedPointOptions::default())
}

pub fn solve_fixed_point_with(
    model: &MixtureModel,
    config: &EnsembleConfig,
    options: &FixedPointOptions,
) -> Result<DeterministicEquivalent> {
    if model.dim() != config.d() {
        return Err(Error::DimensionMismatch {
            expected: config.d(),
            found: model.dim(),
        });
    }
    let ns = config.subset_size();
    solve_at(
        model,
        subset_class_counts(model.priors(), ns),
        config.lambda(),
        options,
    )
}

/// Solves at explicit subset class counts.
pub fn solve_at(
    model: &MixtureModel,
    subset_class_n: [usize; 2],
    lambda: f64,
    options: &FixedPointOptions,
) -> Result<DeterministicEquivalent> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let ns = subset_class_n[0] + subset_class_n[1];
    if ns == 0 {
        return Err(Error::InvalidConfig("subset size must be positive".into()));
    }
    let d = model.dim();
    let nf = ns as f64;
    let w = [subset_class_n[0] as f64 / nf, subset_class_n[1] as f64 / nf];
    let c = [
        model.generalized_covariance(Class::One),
        model.generalized_covariance(Class::Two),
    ];

    let resolvent = |delta: &[f64; 2]| -> Result<DMatrix<f64>> {
        let mut inv = &c[0] * (w[0] / (1.0 + delta[0])) + &c[1] * (w[1] / (1.0 + delta[1]));
        for i in 0..d {
            inv[(i, i)] += lambda;
        }
        inv.cholesky()
            .map(|ch| ch.inverse())
            .ok_or_else(|| Error::SolveFailed {
                reason: "resolvent is not positive definite".into(),
                lambda,
                n: ns,
                d,
            })
    };

    let mut delta = [0.0f64; 2];
    let mut prev_residual = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for iteration in 0..options.max_iter {
        let q = resolvent(&delta)?;
        let f = [c[0].dot(&q) / nf, c[1].dot(&q) / nf];
        residual = (f[0] - delta[0]).abs().max((f[1] - delta[1]).abs());
        if !residual.is_finite() {
            break;
        }
        if residual <= options.tol {
            return Ok(DeterministicEquivalent {
                q_bar: q,
                delta,
                subset_n: ns,
                subset_class_n,
                lambda,
                iterations: iteration,
                residual,
            });
        }

        let newton = if options.accelerate && residual < prev_residual {
            newton_step(&c, &q, &delta, &f, w, nf)
        } else {
            None
        };
        delta = match newton {
            Some(next) => next,
            None => {
                let theta = if residual < prev_residual { 1.0 } else { 0.5 };
                [
                    (1.0 - theta) * delta[0] + theta * f[0],
                    (1.0 - theta) * delta[1] + theta * f[1],
                ]
            }
        };
        prev_residual = residual;
    }
    Err(Error::NoConvergence {
        iterations: options.max_iter,
        residual,
    })
}

fn newton_step(
    c: &[DMatrix<f64>; 2],
    q: &DMatrix<f64>,
    delta: &[f64; 2],
    f: &[f64; 2],
    w: [f64; 2],
    nf: f64,
) -> Option<[f64; 2]> {
    let cq = [&c[0] * q, &c[1] * q];
    let mut jac = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let tr = cq[a].dot(&cq[b].transpose()) / nf;
            jac[(a, b)] = tr * w[b] / (1.0 + delta[b]).powi(2);
        }
    }
    let g = Vector2::new(f[0] - delta[0], f[1] - delta[1]);
    let step = (jac - Matrix2::identity()).try_inverse()? * (-g);
    let next = [delta[0] + step[0], delta[1] + step[1]];
    (next.iter().all(|v| v.is_finite() && *v >= 0.0)).then_some(next)
}
