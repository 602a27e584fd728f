//! Logistic regression by batch gradient ascent on the log-likelihood.
//!
//! The bias is folded in as a constant input `x_0 = 1`, so weight vectors
//! have `d + 1` entries with the bias first.

use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::math::{dot, log, sigmoid};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegConfig {
    pub eta: f64,
    pub epochs: usize,
    /// L2 penalty on the non-bias weights.
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            eta: 0.5,
            epochs: 2000,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    /// `[bias, w_1, …, w_d]`.
    pub weights: Vec<f64>,
}

impl LogRegModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.weights.len() - 1, x.len())?;
        Ok(self.weights[0] + dot(&self.weights[1..], x))
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.decision(x)?))
    }

    pub fn decisions(&self, xs: &Matrix) -> Result<Vec<f64>> {
        xs.iter_rows().map(|r| self.decision(r)).collect()
    }
}

fn linear(w: &[f64], x: &[f64]) -> f64 {
    w[0] + dot(&w[1..], x)
}

/// `Σ_t (y_t - p(x_t)) x_t` with `x_t0 = 1`.
pub fn logreg_gradient(w: &[f64], xs: &Matrix, y: &[bool]) -> Result<Vec<f64>> {
    ensure_dim(xs.cols() + 1, w.len())?;
    ensure_dim(xs.rows(), y.len())?;
    let mut g = alloc::vec![0.0; w.len()];
    for (x, &yt) in xs.iter_rows().zip(y) {
        let r = f64::from(u8::from(yt)) - sigmoid(linear(w, x));
        g[0] += r;
        for (gi, xi) in g[1..].iter_mut().zip(x) {
            *gi += r * xi;
        }
    }
    Ok(g)
}

/// `Σ_t [y_t ln p_t + (1 - y_t) ln(1 - p_t)]`, evaluated stably.
pub fn logreg_log_likelihood(w: &[f64], xs: &Matrix, y: &[bool]) -> Result<f64> {
    ensure_dim(xs.cols() + 1, w.len())?;
    ensure_dim(xs.rows(), y.len())?;
    // ln σ(z) = -ln(1 + e^{-z})
    let log_sig = |z: f64| -> f64 {
        if z >= 0.0 {
            -log(1.0 + crate::math::exp(-z))
        } else {
            z - log(1.0 + crate::math::exp(z))
        }
    };
    Ok(xs
        .iter_rows()
        .zip(y)
        .map(|(x, &yt)| {
            let z = linear(w, x);
            if yt {
                log_sig(z)
            } else {
                log_sig(-z)
            }
        })
        .sum())
}

/// Batch gradient ascent; each step moves by `η / T` times the gradient.
pub fn logreg_train(xs: &Matrix, y: &[bool], config: &LogRegConfig) -> Result<LogRegModel> {
    ensure_dim(xs.rows(), y.len())?;
    if xs.rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    if xs.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features"));
    }
    if !(y.contains(&true) && y.contains(&false)) {
        return Err(Error::SingleClass);
    }
    if !(config.eta > 0.0) || !(config.l2 >= 0.0) {
        return Err(Error::param("eta/l2", "eta must be positive and l2 non-negative"));
    }
    let t = xs.rows() as f64;
    let mut w = alloc::vec![0.0; xs.cols() + 1];
    for _ in 0..config.epochs {
        let g = logreg_gradient(&w, xs, y)?;
        for i in 0..w.len() {
            let penalty = if i == 0 { 0.0 } else { config.l2 * w[i] };
            w[i] += config.eta * (g[i] - penalty) / t;
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logistic regression weights"));
    }
    Ok(LogRegModel { weights: w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn gradient_at_zero() {
        let xs = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 1.0]]).unwrap();
        let y = [true, false, true];
        let g = logreg_gradient(&[0.0; 3], &xs, &y).unwrap();
        assert_eq!(g, vec![0.5, 0.5 * 1.0 + 0.5 * 3.0, 0.5 * 2.0 - 0.5 * 0.5 + 0.5]);
    }

    #[test]
    fn symmetric_data_has_no_bias() {
        let xs = Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![2.0], vec![-2.0], vec![-0.5], vec![0.5]]).unwrap();
        let y = [true, false, false, true, true, false];
        let m = logreg_train(&xs, &y, &LogRegConfig::default()).unwrap();
        assert!(m.weights[0].abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let xs = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(
            logreg_train(&xs, &[true, true], &LogRegConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn learns_a_threshold() {
        let xs = Matrix::from_rows(&[vec![-2.0], vec![-1.0], vec![-0.2], vec![0.3], vec![1.0], vec![2.5]]).unwrap();
        let y = [false, false, true, false, true, true];
        let m = logreg_train(
            &xs,
            &y,
            &LogRegConfig {
                l2: 0.1,
                ..LogRegConfig::default()
            },
        )
        .unwrap();
        assert!(m.probability(&[3.0]).unwrap() > 0.8);
        assert!(m.probability(&[-3.0]).unwrap() < 0.2);
    }

    #[test]
    fn rescaled_features_with_compensating_weights_share_the_loss() {
        let xs = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 0.1], vec![-1.0, 3.0]]).unwrap();
        let y = [true, false, false];
        let w = [0.2, -0.7, 1.1];
        let scaled = Matrix::from_vec(3, 2, xs.as_slice().iter().map(|v| 4.0 * v).collect()).unwrap();
        let ws = [0.2, -0.7 / 4.0, 1.1 / 4.0];
        let a = logreg_log_likelihood(&w, &xs, &y).unwrap();
        let b = logreg_log_likelihood(&ws, &scaled, &y).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            w in prop::collection::vec(-2.0f64..2.0, 3),
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, any::<bool>()), 1..12),
        ) {
            let xs = Matrix::from_rows(&pts.iter().map(|p| vec![p.0, p.1]).collect::<Vec<_>>()).unwrap();
            let y: Vec<bool> = pts.iter().map(|p| p.2).collect();
            let g = logreg_gradient(&w, &xs, &y).unwrap();
            let h = 1e-6;
            for i in 0..3 {
                let (mut a, mut b) = (w.clone(), w.clone());
                a[i] += h;
                b[i] -= h;
                let fd = (logreg_log_likelihood(&a, &xs, &y).unwrap() - logreg_log_likelihood(&b, &xs, &y).unwrap()) / (2.0 * h);
                prop_assert!((g[i] - fd).abs() <= 1e-5 * g[i].abs().max(fd.abs()).max(1.0));
            }
        }
    }
}
