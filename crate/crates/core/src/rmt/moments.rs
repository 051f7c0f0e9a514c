use super::fixed_point::DeterministicEquivalent;
use super::second_order::SecondOrderQuantities;
use crate::error::{Error, Result};
use crate::model::{Class, EnsembleConfig, MixtureModel};
use nalgebra::{DMatrix, DVector};

const LABELS: [f64; 2] = [-1.0, 1.0];

/// `M_δ u` with `M_δ = [μ₁/(1+δ₁) | μ₂/(1+δ₂)]` and `u = (−c₁, c₂)`.
fn weighted_mean_direction(de: &DeterministicEquivalent, model: &MixtureModel) -> DVector<f64> {
    let w = de.class_fractions();
    let mut v = DVector::zeros(model.dim());
    for cls in Class::BOTH {
        let i = cls.idx();
        v.axpy(LABELS[i] * w[i] / (1.0 + de.delta[i]), model.mean(cls), 1.0);
    }
    v
}

/// Deterministic equivalent of one classifier's weight vector,
/// `ω̄ = Q̄ M 𝒟_δ 𝒟_c ỹ`.
pub fn mean_weight(de: &DeterministicEquivalent, model: &MixtureModel) -> DVector<f64> {
    &de.q_bar * weighted_mean_direction(de, model)
}

/// Asymptotic mean of the ensemble score on class `class`. Averaging does
/// not move the mean, so this is also the single-classifier mean.
pub fn theoretical_mean(de: &DeterministicEquivalent, model: &MixtureModel, class: Class) -> f64 {
    mean_weight(de, model).dot(model.mean(class))
}

/// Pieces of the score variance for one test class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceParts {
    /// `Σ_b c_b δ′_b / (1+δ_b)²`, the label-noise fluctuation.
    pub fluctuation: f64,
    /// `uᵀM_δᵀ K M_δ u`.
    pub mean_fluctuation: f64,
    /// `uᵀM_δ′ᵀ Q̄ M_δ u`, entering with factor −2.
    pub cross_correction: f64,
    /// Variance of a single classifier's score.
    pub v_single: f64,
    /// Covariance between two classifiers' scores through the shared test point.
    pub v_cross: f64,
}

impl VarianceParts {
    pub fn ensemble(&self, m: usize) -> f64 {
        let m = m as f64;
        self.v_single / m + (m - 1.0) / m * self.v_cross
    }
}

pub fn variance_parts(
    de: &DeterministicEquivalent,
    so: &SecondOrderQuantities,
    model: &MixtureModel,
    class: Class,
) -> VarianceParts {
    let l = class.idx();
    let w = de.class_fractions();
    let dp = so.delta_prime[l];
    let md_u = weighted_mean_direction(de, model);

    let fluctuation: f64 = (0..2)
        .map(|b| w[b] * dp[b] / (1.0 + de.delta[b]).powi(2))
        .sum();
    let mean_fluctuation = md_u.dot(&(&so.k[l] * &md_u));

    // M_δ′ u with columns δ′_b μ_b / (1+δ_b)²
    let mut mdp_u = DVector::zeros(model.dim());
    for cls in Class::BOTH {
        let b = cls.idx();
        mdp_u.axpy(LABELS[b] * w[b] * dp[b] / (1.0 + de.delta[b]).powi(2), model.mean(cls), 1.0);
    }
    let omega = &de.q_bar * &md_u;
    let cross_correction = mdp_u.dot(&omega);
    let v_single = fluctuation + mean_fluctuation - 2.0 * cross_correction;
    let v_cross = quad(model.covariance(class), &omega);
    VarianceParts {
        fluctuation,
        mean_fluctuation,
        cross_correction,
        v_single,
        v_cross,
    }
}

fn quad(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x))
}

/// Asymptotic variance of the ensemble score on class `class`,
/// `σ² = V_single/m + (m−1)/m · V_cross`.
pub fn theoretical_variance(
    de: &DeterministicEquivalent,
    so: &SecondOrderQuantities,
    model: &MixtureModel,
    config: &EnsembleConfig,
    class: Class,
) -> Result<f64> {
    let parts = variance_parts(de, so, model, class);
    let var = parts.ensemble(config.m());
    if var > 0.0 && var.is_finite() {
        Ok(var)
    } else {
        Err(Error::Numerical(format!(
            "assembled score variance for class {:?} is {var:e} (v_single {:e}, v_cross {:e})",
            class, parts.v_single, parts.v_cross
        )))
    }
}
