//! Uniform representation: one coordinate per reference sample.

use alloc::vec::Vec;

use super::features::DistanceSpec;
use crate::error::{ensure_dim, Error, Result};
use crate::math::{exp, log, log_sum_exp};

fn check_beta(beta: &[f64], modalities: usize) -> Result<()> {
    ensure_dim(modalities, beta.len())?;
    if beta.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::param("beta", "weights must be non-negative"));
    }
    if (beta.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param("beta", "weights must sum to 1"));
    }
    Ok(())
}

/// Coordinate `j` is `Σ_r β_r sim_r(x, s_j)`.
pub fn uniform_representation<T>(x: &T, samples: &[T], sims: &[DistanceSpec<T>], beta: &[f64]) -> Result<Vec<f64>> {
    check_beta(beta, sims.len())?;
    samples
        .iter()
        .map(|s| sims.iter().zip(beta).map(|(m, b)| Ok(b * m.distance(x, s)?)).sum())
        .collect()
}

/// Training expectations of `exp(-Σβ sim)` per reference sample, kept in log form.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformNormalizer {
    log_expectations: Vec<f64>,
}

impl UniformNormalizer {
    pub fn fit<T>(train: &[T], samples: &[T], sims: &[DistanceSpec<T>], beta: &[f64]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let reps = train
            .iter()
            .map(|t| uniform_representation(t, samples, sims, beta))
            .collect::<Result<Vec<_>>>()?;
        let ln_n = log(train.len() as f64);
        let log_expectations = (0..samples.len())
            .map(|j| {
                let neg: Vec<f64> = reps.iter().map(|r| -r[j]).collect();
                log_sum_exp(&neg) - ln_n
            })
            .collect();
        Ok(UniformNormalizer { log_expectations })
    }

    /// `exp(-Σβ sim(x, s_j)) / E_train[exp(-Σβ sim(·, s_j))]`.
    pub fn transform<T>(&self, x: &T, samples: &[T], sims: &[DistanceSpec<T>], beta: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.log_expectations.len(), samples.len())?;
        let raw = uniform_representation(x, samples, sims, beta)?;
        Ok(raw
            .iter()
            .zip(&self.log_expectations)
            .map(|(v, le)| exp(-v - le))
            .collect())
    }
}
