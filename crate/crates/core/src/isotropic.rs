//! Closed forms for the symmetric isotropic mixture `N(∓μ, I)` with equal
//! priors. Used as an analytic cross-check of the general engine.

use crate::error::{Error, Result};
use crate::model::{Class, EnsembleConfig, MixtureModel};
use crate::rmt::{self, FixedPointOptions};
use crate::stats::normal_cdf;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicParams {
    pub mu_sq: f64,
    pub c0: f64,
    pub lambda: f64,
    pub m: usize,
}

impl IsotropicParams {
    pub fn new(mu_sq: f64, c0: f64, lambda: f64, m: usize) -> Result<Self> {
        if !(mu_sq >= 0.0 && mu_sq.is_finite()) {
            return Err(Error::InvalidConfig(format!("mu_sq must be nonnegative, got {mu_sq}")));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidConfig(format!("c0 must be positive, got {c0}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("m must be positive".into()));
        }
        Ok(IsotropicParams {
            mu_sq,
            c0,
            lambda,
            m,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicDerived {
    pub delta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub d_test: f64,
    pub s_factor: f64,
    pub a_coeffs: [f64; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceTerms {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub term4: f64,
    pub total: f64,
}

/// Positive root of `δ = c₀(1+δ)/(1 + λ(1+δ))`.
pub fn closed_form_delta(c0: f64, lambda: f64) -> f64 {
    let b = 1.0 + lambda - c0;
    let root = (b * b + 4.0 * lambda * c0).sqrt();
    if b > 0.0 {
        // rationalized to avoid cancellation for small λ
        2.0 * c0 / (root + b)
    } else {
        (root - b) / (2.0 * lambda)
    }
}

pub fn derived(p: &IsotropicParams) -> Result<IsotropicDerived> {
    let delta = closed_form_delta(p.c0, p.lambda);
    let one_d = 1.0 + delta;
    let kappa = 1.0 / (1.0 / one_d + p.lambda);
    let gamma = kappa * kappa / (one_d + kappa * p.mu_sq);
    let pole = one_d * one_d - p.c0 * kappa * kappa;
    if pole.is_nan() || pole <= 0.0 {
        return Err(Error::Numerical(format!(
            "d_test pole: (1+δ)² − c₀κ² = {pole:e} (c₀ = {}, λ = {})",
            p.c0, p.lambda
        )));
    }
    let d_test = p.c0 * kappa * kappa * one_d * one_d / pole;
    let od2 = one_d * one_d;
    let od4 = od2 * od2;
    let s = 1.0 + d_test / od2;
    let a = [
        kappa * kappa * s / od2,
        -2.0 * gamma * kappa * s / od2 + kappa * kappa * d_test / od4,
        gamma * gamma * s / od2 - 2.0 * kappa * gamma * d_test / od4,
        gamma * gamma * d_test / od4,
    ];
    Ok(IsotropicDerived {
        delta,
        kappa,
        gamma,
        d_test,
        s_factor: s,
        a_coeffs: a,
    })
}

/// Class-2 score mean `μ²/(1+λ+λδ+μ²)`; class 1 is its negative.
pub fn isotropic_mean(p: &IsotropicParams) -> f64 {
    let delta = closed_form_delta(p.c0, p.lambda);
    p.mu_sq / (1.0 + p.lambda + p.lambda * delta + p.mu_sq)
}

/// Four-term score variance decomposition with an externally supplied `Δ₀`.
pub fn isotropic_variance_terms(p: &IsotropicParams, delta0: f64) -> Result<VarianceTerms> {
    let dv = derived(p)?;
    let m = p.m as f64;
    let mu2 = p.mu_sq;
    let one_d = 1.0 + dv.delta;
    let lead = (1.0 + p.lambda + p.lambda * dv.delta).powi(2) - p.c0;
    if lead.is_nan() || lead <= 0.0 {
        return Err(Error::Numerical(format!("variance pole: (1+λ+λδ)² − c₀ = {lead:e}")));
    }
    let term1 = p.c0 / (lead * m);
    let term2 = (0..4)
        .map(|i| dv.a_coeffs[i] * mu2.powi(i as i32 + 1))
        .sum::<f64>()
        / m;
    let term3 = -2.0 / m * delta0 * (dv.kappa * mu2 - dv.gamma * mu2 * mu2) / one_d.powi(3);
    let term4 = (m - 1.0) / m * cross_term(&dv, mu2);
    Ok(VarianceTerms {
        term1,
        term2,
        term3,
        term4,
        total: term1 + term2 + term3 + term4,
    })
}

/// `(κ²μ² − 2γκμ⁴ + γ²μ⁶)/(1+δ)²`, the large-m limit of the variance.
fn cross_term(dv: &IsotropicDerived, mu2: f64) -> f64 {
    let (k, g) = (dv.kappa, dv.gamma);
    (k * k * mu2 - 2.0 * g * k * mu2 * mu2 + g * g * mu2.powi(3)) / (1.0 + dv.delta).powi(2)
}

pub fn large_m_variance(p: &IsotropicParams) -> Result<f64> {
    Ok(cross_term(&derived(p)?, p.mu_sq))
}

/// Solves `total = term₁ + term₂ + term₃(Δ₀) + term₄` for `Δ₀`.
pub fn delta0_from_variance(p: &IsotropicParams, total: f64) -> Result<f64> {
    let base = isotropic_variance_terms(p, 0.0)?;
    let unit = isotropic_variance_terms(p, 1.0)?.term3;
    if unit == 0.0 {
        return Ok(0.0);
    }
    Ok((total - base.total) / unit)
}

/// Error of the sign rule, `Φ(−𝔪/σ)`, under balanced priors.
pub fn isotropic_error(p: &IsotropicParams, delta0: f64) -> Result<f64> {
    let var = isotropic_variance_terms(p, delta0)?.total;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::Numerical(format!("isotropic variance is {var:e}")));
    }
    Ok(normal_cdf(-isotropic_mean(p) / var.sqrt()))
}

/// Result of running the general engine on `N(∓μ, I_d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineComparison {
    pub params: IsotropicParams,
    pub mean: f64,
    pub variance: f64,
    /// `(1/n_s)tr(Σ K)` from the second-order quantities.
    pub delta_prime: f64,
    /// `Δ₀` implied by the engine variance.
    pub delta0: f64,
    pub error: f64,
}

/// Evaluates the general engine on the isotropic model and expresses the
/// result in closed-form terms. `c₀` is taken at subset level, `d/⌊n/m⌋`.
pub fn compose_with_engine(
    mu_sq: f64,
    d: usize,
    n_total: usize,
    m: usize,
    lambda: f64,
) -> Result<EngineComparison> {
    let mut mu = DVector::zeros(d);
    mu[0] = mu_sq.sqrt();
    let model = MixtureModel::symmetric(mu, DMatrix::identity(d, d))?;
    let config = EnsembleConfig::new(n_total, d, m, lambda)?;
    let de = rmt::solve_fixed_point_with(&model, &config, &FixedPointOptions::default())?;
    let so = rmt::second_order(&de, &model)?;
    let mean = rmt::theoretical_mean(&de, &model, Class::Two);
    let variance = rmt::theoretical_variance(&de, &so, &model, &config, Class::Two)?;
    let params = IsotropicParams::new(mu_sq, d as f64 / config.subset_size() as f64, lambda, m)?;
    let delta0 = delta0_from_variance(&params, variance)?;
    Ok(EngineComparison {
        params,
        mean,
        variance,
        delta_prime: so.delta_prime[1][1],
        delta0,
        error: normal_cdf(-mean / variance.sqrt()),
    })
}
