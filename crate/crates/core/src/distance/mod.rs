//! Per-modality distance functions.
//!
//! Everything here is a pure function; the similarity kernel treats all of
//! them as distances (larger means farther apart).

mod dtw;
mod set;
mod text;

pub use dtw::{dtw, dtw_squared};
pub use set::asym_set_distance;
pub use text::{weight_terms, CorpusStats, SparseTermVector, TermWeighting};

use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::math::{acos, acosh, log, sqrt};

/// Tolerance on `Σ p_i = 1` for [`Distribution`].
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

pub fn minkowski(a: &[f64], b: &[f64], norm: Norm) -> Result<f64> {
    ensure_dim(a.len(), b.len())?;
    Ok(match norm {
        Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Norm::L2 => sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()),
    })
}

/// A finite probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::param("probs", "entries must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::param("probs", alloc::format!("entries sum to {total}, not 1")));
        }
        Ok(Distribution(probs))
    }

    /// Normalizes non-negative weights to sum to one.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::param("weights", "total mass must be positive and finite"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Σ p_i ln(p_i / q_i)` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    kl_raw(p.probs(), q.probs())
}

pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> Result<f64> {
    ensure_dim(p.len(), q.len())?;
    let mut sum = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::NotAbsolutelyContinuous(i));
        }
        sum += pi * log(pi / qi);
    }
    Ok(sum.max(0.0))
}

/// Jensen-Shannon divergence in nats; symmetric and bounded by `ln 2`.
pub fn js_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    js_raw(p.probs(), q.probs())
}

/// JS divergence on raw slices that are already known to be distributions.
pub(crate) fn js_raw(p: &[f64], q: &[f64]) -> Result<f64> {
    ensure_dim(p.len(), q.len())?;
    let mut sum = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = 0.5 * (pi + qi);
        if pi > 0.0 {
            sum += 0.5 * pi * log(pi / m);
        }
        if qi > 0.0 {
            sum += 0.5 * qi * log(qi / m);
        }
    }
    Ok(sum.clamp(0.0, core::f64::consts::LN_2))
}

/// Fisher (great-circle) distance `2 arccos(Σ sqrt(p_i q_i))`, in `[0, π]`.
pub fn fisher_distance_discrete(p: &Distribution, q: &Distribution) -> Result<f64> {
    ensure_dim(p.len(), q.len())?;
    let bc: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| sqrt(a * b)).sum();
    Ok(2.0 * acos(bc.clamp(-1.0, 1.0)))
}

/// Fisher distance between univariate Gaussians `(mean, stdev)`, via the
/// Poincaré half-plane: `√2 · d_H((μ1/√2, σ1), (μ2/√2, σ2))`.
pub fn fisher_distance_gaussian1d(p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    let ((mu1, s1), (mu2, s2)) = (p, q);
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::param("sigma", "standard deviations must be positive"));
    }
    let dx = (mu1 - mu2) / core::f64::consts::SQRT_2;
    let dy = s1 - s2;
    let arg = 1.0 + (dx * dx + dy * dy) / (2.0 * s1 * s2);
    Ok(core::f64::consts::SQRT_2 * acosh(arg.max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski(&[0.0, 0.0], &[3.0, 4.0], Norm::L2).unwrap(), 5.0);
        assert_eq!(minkowski(&[1.0, 1.0], &[2.0, 3.0], Norm::L1).unwrap(), 3.0);
        assert_eq!(minkowski(&[1.5, -2.0], &[1.5, -2.0], Norm::L2).unwrap(), 0.0);
        assert!(minkowski(&[1.0], &[1.0, 2.0], Norm::L1).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert_eq!(Distribution::from_weights(&[1.0, 3.0]).unwrap().probs(), &[0.25, 0.75]);
    }

    #[test]
    fn divergences_of_identical_distributions_vanish() {
        let p = d(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert_eq!(js_divergence(&p, &p).unwrap(), 0.0);
        assert_eq!(fisher_distance_discrete(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports() {
        let (p, q) = (d(&[1.0, 0.0]), d(&[0.0, 1.0]));
        assert!((js_divergence(&p, &q).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((fisher_distance_discrete(&p, &q).unwrap() - core::f64::consts::PI).abs() < 1e-15);
        assert_eq!(kl_divergence(&p, &q), Err(Error::NotAbsolutelyContinuous(0)));
    }

    #[test]
    fn js_direct_formula() {
        // m = (0.7, 0.3)
        let expected = 0.5 * (0.5 * (0.5f64 / 0.7).ln() + 0.5 * (0.5f64 / 0.3).ln())
            + 0.5 * (0.9 * (0.9f64 / 0.7).ln() + 0.1 * (0.1f64 / 0.3).ln());
        let got = js_divergence(&d(&[0.5, 0.5]), &d(&[0.9, 0.1])).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn fisher_discrete_direct_formula() {
        let expected = 2.0 * (0.125f64.sqrt() + 0.375f64.sqrt()).acos();
        let got = fisher_distance_discrete(&d(&[0.5, 0.5]), &d(&[0.25, 0.75])).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn fisher_gaussian_examples() {
        assert_eq!(fisher_distance_gaussian1d((1.0, 2.0), (1.0, 2.0)).unwrap(), 0.0);
        let expected = 2f64.sqrt() * 1.25f64.acosh();
        let got = fisher_distance_gaussian1d((0.0, 1.0), (0.0, 2.0)).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!(fisher_distance_gaussian1d((0.0, 0.0), (0.0, 1.0)).is_err());
        assert!(fisher_distance_gaussian1d((0.0, 1.0), (0.0, -1.0)).is_err());
    }

    fn simplex(n: usize) -> impl Strategy<Value = Distribution> {
        proptest::collection::vec(0.0f64..1.0, n)
            .prop_filter("mass", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| Distribution::from_weights(&w).unwrap())
    }

    proptest! {
        #[test]
        fn js_is_symmetric_and_bounded(p in simplex(5), q in simplex(5)) {
            let a = js_divergence(&p, &q).unwrap();
            let b = js_divergence(&q, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert!((0.0..=core::f64::consts::LN_2).contains(&a));
        }

        #[test]
        fn fisher_discrete_triangle(p in simplex(4), q in simplex(4), r in simplex(4)) {
            let pq = fisher_distance_discrete(&p, &q).unwrap();
            let qr = fisher_distance_discrete(&q, &r).unwrap();
            let pr = fisher_distance_discrete(&p, &r).unwrap();
            prop_assert!(pr <= pq + qr + 1e-9);
        }

        #[test]
        fn fisher_gaussian_symmetric(m1 in -5.0f64..5.0, s1 in 0.1f64..4.0, m2 in -5.0f64..5.0, s2 in 0.1f64..4.0) {
            let a = fisher_distance_gaussian1d((m1, s1), (m2, s2)).unwrap();
            let b = fisher_distance_gaussian1d((m2, s2), (m1, s1)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
}
