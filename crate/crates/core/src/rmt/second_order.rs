use super::fixed_point::DeterministicEquivalent;
use crate::error::{Error, Result};
use crate::model::{Class, MixtureModel};
use nalgebra::{DMatrix, Matrix2, Vector2};

/// Quantities describing the covariance of one LSSVM weight vector as seen
/// from a test point of class ℓ. Arrays indexed `[ℓ]` refer to the test
/// class; `delta_prime[ℓ][b]` is `(1/n_s)tr(Σ_b K_ℓ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderQuantities {
    pub k: [DMatrix<f64>; 2],
    pub d_vec: [[f64; 2]; 2],
    pub t_bar: [[f64; 2]; 2],
    pub v_tilde: Matrix2<f64>,
    pub a_tilde: Matrix2<f64>,
    pub delta_prime: [[f64; 2]; 2],
    pub spectral_radius: f64,
}

pub fn second_order(de: &DeterministicEquivalent, model: &MixtureModel) -> Result<SecondOrderQuantities> {
    if model.dim() != de.q_bar.nrows() {
        return Err(Error::DimensionMismatch {
            expected: de.q_bar.nrows(),
            found: model.dim(),
        });
    }
    let nf = de.subset_n as f64;
    let w = de.class_fractions();
    let q = &de.q_bar;
    let sigma = [model.covariance(Class::One), model.covariance(Class::Two)];
    let p = [q * sigma[0] * q, q * sigma[1] * q];

    let mut v = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            v[(a, b)] = sigma[a].dot(&p[b]) / nf;
        }
    }
    let scale = [
        w[0] / (1.0 + de.delta[0]).powi(2),
        w[1] / (1.0 + de.delta[1]).powi(2),
    ];
    let a_tilde = Matrix2::new(scale[0], 0.0, 0.0, scale[1]);
    let va = v * a_tilde;
    // VA is similar to a symmetric PSD matrix, so its eigenvalues are real.
    let tr = va.trace();
    let det = va.determinant();
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let spectral_radius = (tr / 2.0 + disc).abs().max((tr / 2.0 - disc).abs());
    if spectral_radius.is_nan() || spectral_radius >= 1.0 {
        return Err(Error::Unstable { spectral_radius });
    }
    let inv = (Matrix2::identity() - va)
        .try_inverse()
        .ok_or(Error::Unstable { spectral_radius })?;

    // Q̄C_bQ̄ = Q̄Σ_bQ̄ + (Q̄μ_b)(Q̄μ_b)ᵀ
    let qcq: Vec<DMatrix<f64>> = Class::BOTH
        .iter()
        .map(|&cls| {
            let qm = q * model.mean(cls);
            let mut out = p[cls.idx()].clone();
            out.ger(1.0, &qm, &qm, 1.0);
            out
        })
        .collect();

    let mut k: [DMatrix<f64>; 2] = [p[0].clone(), p[1].clone()];
    let mut d_vec = [[0.0; 2]; 2];
    let mut t_bar = [[0.0; 2]; 2];
    let mut delta_prime = [[0.0; 2]; 2];
    for l in 0..2 {
        let t = Vector2::new(v[(l, 0)], v[(l, 1)]);
        let dv = inv * t;
        t_bar[l] = [t[0], t[1]];
        d_vec[l] = [dv[0], dv[1]];
        for b in 0..2 {
            k[l] += &qcq[b] * (scale[b] * dv[b]);
        }
        for b in 0..2 {
            delta_prime[l][b] = sigma[b].dot(&k[l]) / nf;
        }
    }
    Ok(SecondOrderQuantities {
        k,
        d_vec,
        t_bar,
        v_tilde: v,
        a_tilde,
        delta_prime,
        spectral_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmt::fixed_point::{solve_at, FixedPointOptions};
    use nalgebra::DVector;

    fn solve(model: &MixtureModel, counts: [usize; 2], lambda: f64) -> (DeterministicEquivalent, SecondOrderQuantities) {
        let de = solve_at(model, counts, lambda, &FixedPointOptions::default()).unwrap();
        let so = second_order(&de, model).unwrap();
        (de, so)
    }

    #[test]
    fn shared_covariance_gives_symmetric_quantities() {
        let d = 20;
        let a = DMatrix::from_fn(d, d, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()));
        let mu = DVector::from_fn(d, |i, _| if i < 2 { 0.6 } else { 0.0 });
        let model = MixtureModel::symmetric(mu, a).unwrap();
        let (_, so) = solve(&model, [60, 60], 0.1);
        let v = so.v_tilde;
        for x in v.iter() {
            assert!((x - v[(0, 0)]).abs() < 1e-12);
        }
        assert!((so.d_vec[0][0] - so.d_vec[1][0]).abs() < 1e-12);
        assert!((so.d_vec[0][1] - so.d_vec[1][1]).abs() < 1e-12);
    }

    #[test]
    fn zero_covariance_limit() {
        let d = 6;
        let z = DMatrix::zeros(d, d);
        let mu = DVector::from_fn(d, |i, _| 0.3 * (i as f64 + 1.0));
        let model = MixtureModel::new(-&mu, mu, z.clone(), z, [0.5, 0.5]).unwrap();
        let (_, so) = solve(&model, [10, 10], 0.2);
        assert_eq!(so.v_tilde, Matrix2::zeros());
        assert_eq!(so.d_vec, [[0.0; 2]; 2]);
        assert_eq!(so.k[0].norm(), 0.0);
        assert_eq!(so.delta_prime, [[0.0; 2]; 2]);
    }

    #[test]
    fn k_is_symmetric_psd() {
        let d = 15;
        let s1 = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 + 0.1 * i as f64 } else { 0.0 });
        let s2 = DMatrix::identity(d, d) * 0.5;
        let mu1 = DVector::from_fn(d, |i, _| (i as f64).cos() * 0.3);
        let mu2 = DVector::from_fn(d, |i, _| (i as f64).sin() * 0.3);
        let model = MixtureModel::new(mu1, mu2, s1, s2, [0.3, 0.7]).unwrap();
        let (_, so) = solve(&model, [9, 21], 0.01);
        assert!(so.spectral_radius < 1.0);
        for k in &so.k {
            assert!(crate::model::max_asymmetry(k) < 1e-10);
            let eig = nalgebra::SymmetricEigen::new(k.clone()).eigenvalues;
            assert!(eig.min() > -1e-10);
        }
    }
}
