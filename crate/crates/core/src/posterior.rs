//! Bayes update over finitely many hypotheses, shared by both pricing models.

use crate::error::{Error, Result};

/// Normalized `prior_i * exp(ln_like_i)`, computed with log-sum-exp.
///
/// Hypotheses with zero prior or `-inf` log-likelihood get weight 0. Fails
/// with [`Error::ZeroLikelihood`] if every hypothesis is excluded.
pub fn posterior_weights(ln_like: &[f64], prior: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(ln_like.len(), prior.len());
    let ln_joint: Vec<f64> = ln_like
        .iter()
        .zip(prior)
        .map(|(l, p)| if *p > 0.0 { l + p.ln() } else { f64::NEG_INFINITY })
        .collect();
    if ln_joint.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("log-likelihood is NaN".into()));
    }
    let m = ln_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::ZeroLikelihood);
    }
    let unnorm: Vec<f64> = ln_joint.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|w| w / total).collect())
}

/// `Σ w_i g_i`.
pub fn expectation(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_likelihood_returns_prior() {
        let w = posterior_weights(&[-3.0, -3.0, -3.0], &[0.2, 0.3, 0.5]).unwrap();
        for (a, b) in w.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn extreme_log_likelihoods() {
        let w = posterior_weights(&[-1e4, -1e4 + 2f64.ln()], &[0.5, 0.5]).unwrap();
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
        let w = posterior_weights(&[f64::NEG_INFINITY, -5.0], &[0.5, 0.5]).unwrap();
        assert_eq!(w, vec![0.0, 1.0]);
        assert!(matches!(
            posterior_weights(&[f64::NEG_INFINITY; 2], &[0.5, 0.5]),
            Err(Error::ZeroLikelihood)
        ));
    }

    proptest! {
        #[test]
        fn weights_form_a_probability_vector(
            ln_like in proptest::collection::vec(-500.0f64..50.0, 1..8),
            raw in proptest::collection::vec(0.01f64..1.0, 8),
        ) {
            let prior: Vec<f64> = raw[..ln_like.len()].to_vec();
            let s: f64 = prior.iter().sum();
            let prior: Vec<f64> = prior.iter().map(|p| p / s).collect();
            let w = posterior_weights(&ln_like, &prior).unwrap();
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
