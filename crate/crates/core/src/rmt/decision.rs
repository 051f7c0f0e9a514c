use crate::stats::{normal_cdf, normal_sf};

/// Misclassification probability of the rule "class 1 iff g < η" when class
/// scores are `N(means[ℓ], vars[ℓ])`.
pub fn classification_error(means: [f64; 2], vars: [f64; 2], priors: [f64; 2], eta: f64) -> f64 {
    let s = [vars[0].sqrt(), vars[1].sqrt()];
    priors[0] * normal_sf((eta - means[0]) / s[0]) + priors[1] * normal_cdf((eta - means[1]) / s[1])
}

/// Threshold minimizing [`classification_error`].
///
/// Stationary points are where the prior-weighted score densities cross,
/// which is a quadratic in η. A root between the two means is preferred;
/// otherwise the real root with the lowest error is used, and a
/// golden-section search covers the case of no crossing at all. Equal
/// means return the common mean.
pub fn optimal_threshold(means: [f64; 2], vars: [f64; 2], priors: [f64; 2]) -> f64 {
    let [m1, m2] = means;
    if m1 == m2 {
        return m1;
    }
    let [v1, v2] = vars;
    let err = |eta: f64| classification_error(means, vars, priors, eta);
    let (lo, hi) = (m1.min(m2), m1.max(m2));

    let a = 0.5 / v2 - 0.5 / v1;
    let b = m1 / v1 - m2 / v2;
    let c = 0.5 * m2 * m2 / v2 - 0.5 * m1 * m1 / v1
        + (priors[0] * v2.sqrt() / (priors[1] * v1.sqrt())).ln();

    let mut roots = Vec::with_capacity(2);
    if a.abs() <= 1e-12 * (0.5 / v1 + 0.5 / v2) {
        if b != 0.0 {
            roots.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            // numerically stable pair of roots
            let sq = disc.sqrt();
            let qq = -0.5 * (b + b.signum() * sq);
            if qq != 0.0 {
                roots.push(qq / a);
                roots.push(c / qq);
            } else {
                roots.push(-b / (2.0 * a));
            }
        }
    }
    roots.retain(|r| r.is_finite());

    let best = |cands: &[f64]| {
        cands
            .iter()
            .copied()
            .min_by(|x, y| err(*x).total_cmp(&err(*y)))
    };
    let inside: Vec<f64> = roots.iter().copied().filter(|r| (lo..=hi).contains(r)).collect();
    if let Some(r) = best(&inside) {
        return r;
    }
    if let Some(r) = best(&roots) {
        return r;
    }
    let spread = 8.0 * v1.sqrt().max(v2.sqrt());
    golden_section(err, lo - spread, hi + spread)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_pdf;
    use proptest::prelude::*;

    #[test]
    fn error_examples() {
        let e = classification_error([-1.0, 1.0], [1.0, 1.0], [0.5, 0.5], 0.0);
        assert!((e - 0.158_655_253_931_457_07).abs() < 1e-14);
        for eta in [-3.0, 0.0, 0.4, 10.0] {
            let e = classification_error([0.2, 0.2], [0.7, 0.7], [0.5, 0.5], eta);
            assert!((e - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(optimal_threshold([-1.0, 1.0], [1.0, 1.0], [0.5, 0.5]), 0.0);
        let eta = optimal_threshold([-1.0, 1.0], [1.0, 1.0], [0.9, 0.1]);
        assert!((eta - 9f64.ln() / 2.0).abs() < 1e-12);
        assert_eq!(optimal_threshold([0.3, 0.3], [1.0, 2.0], [0.5, 0.5]), 0.3);
    }

    #[test]
    fn threshold_beats_dense_grid() {
        let cases = [
            ([-1.0, 1.0], [1.0, 1.0], [0.5, 0.5]),
            ([-0.3, 0.8], [0.2, 1.5], [0.4, 0.6]),
            ([0.1, 0.4], [0.05, 0.01], [0.7, 0.3]),
            ([-2.0, 0.5], [4.0, 0.1], [0.2, 0.8]),
        ];
        for (means, vars, priors) in cases {
            let eta = optimal_threshold(means, vars, priors);
            let best = classification_error(means, vars, priors, eta);
            let lo = means[0] - 3.0 * vars[0].sqrt();
            let hi = means[1] + 3.0 * vars[1].sqrt();
            for i in 0..=1000 {
                let g = lo + (hi - lo) * i as f64 / 1000.0;
                assert!(best <= classification_error(means, vars, priors, g) + 1e-14);
            }
        }
    }

    #[test]
    fn error_matches_numerical_integration() {
        let (means, vars, priors) = ([-0.4, 0.6], [0.3, 0.5], [0.45, 0.55]);
        let eta = optimal_threshold(means, vars, priors);
        // Simpson integration of each density over its misclassified side.
        let density = |x: f64, k: usize| normal_pdf((x - means[k]) / vars[k].sqrt()) / vars[k].sqrt();
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            let n = 20_000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + h * i as f64);
            }
            s * h / 3.0
        };
        let mass1 = simpson(&|x| density(x, 0), eta, means[0] + 40.0 * vars[0].sqrt());
        let mass2 = simpson(&|x| density(x, 1), means[1] - 40.0 * vars[1].sqrt(), eta);
        let numeric = priors[0] * mass1 + priors[1] * mass2;
        let closed = classification_error(means, vars, priors, eta);
        assert!((numeric - closed).abs() < 1e-10, "{numeric} vs {closed}");
    }

    proptest! {
        #[test]
        fn balanced_threshold_lies_between_means(
            m1 in -2.0f64..0.0, gap in 0.01f64..3.0, v1 in 0.05f64..2.0, v2 in 0.05f64..2.0,
        ) {
            // With very unequal spreads the error can still be falling at a
            // mean, and then the best single threshold sits outside them.
            let (s1, s2) = (v1.sqrt(), v2.sqrt());
            prop_assume!(s1 / s2 * (-gap * gap / (2.0 * v2)).exp() < 1.0);
            prop_assume!(s2 / s1 * (-gap * gap / (2.0 * v1)).exp() < 1.0);
            let means = [m1, m1 + gap];
            let eta = optimal_threshold(means, [v1, v2], [0.5, 0.5]);
            prop_assert!(eta > means[0] && eta < means[1]);
            let e = classification_error(means, [v1, v2], [0.5, 0.5], eta);
            prop_assert!((0.0..=0.5).contains(&e));
        }

        #[test]
        fn mirrored_problem_has_mirrored_threshold(
            m1 in -2.0f64..0.0, gap in 0.01f64..3.0, v1 in 0.05f64..2.0, v2 in 0.05f64..2.0,
            c1 in 0.2f64..0.8,
        ) {
            let means = [m1, m1 + gap];
            let priors = [c1, 1.0 - c1];
            let eta = optimal_threshold(means, [v1, v2], priors);
            let e = classification_error(means, [v1, v2], priors, eta);
            let mirrored = [-means[1], -means[0]];
            let eta_m = optimal_threshold(mirrored, [v2, v1], [priors[1], priors[0]]);
            let e_m = classification_error(mirrored, [v2, v1], [priors[1], priors[0]], eta_m);
            prop_assert!((e - e_m).abs() < 1e-12);
            if eta > means[0] && eta < means[1] {
                prop_assert!((eta + eta_m).abs() < 1e-9 * (1.0 + eta.abs()));
            }
        }
    }
}
