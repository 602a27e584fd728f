//! 1-norm soft margin SVM trained by projected coordinate ascent on the dual.
//!
//! Each epoch sweeps the training points in order and applies
//! `α_i ← clip(α_i + η (1 - y_i Σ_t α_t y_t K_ti), 0, C_i)`.
//! There is no projection onto `Σ α_i y_i = 0`; a bias is obtained instead by
//! adding a constant feature, i.e. training on `K + 1`.

use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasMode {
    /// Decision function without offset.
    None,
    /// Train on `K + 1`; the bias becomes `Σ α_i y_i`.
    #[default]
    ConstantFeature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    /// Step size; `None` means `1 / max_i K_ii` on the effective kernel.
    pub eta: Option<f64>,
    pub max_epochs: usize,
    /// Stop once the largest per-epoch `|Δα_i|` is below this.
    pub tol: f64,
    pub bias: BiasMode,
    /// Multipliers of `C` for the negative and positive class.
    pub class_weights: Option<(f64, f64)>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            eta: None,
            max_epochs: 1000,
            tol: 1e-6,
            bias: BiasMode::ConstantFeature,
            class_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub support_indices: Vec<usize>,
    pub bias: f64,
    pub c: f64,
    pub bias_mode: BiasMode,
    pub epochs: usize,
    pub converged: bool,
}

fn check_labels(y: &[i8]) -> Result<()> {
    if let Some(bad) = y.iter().find(|v| **v != 1 && **v != -1) {
        return Err(Error::param("labels", alloc::format!("expected ±1, found {bad}")));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn offset(bias: BiasMode) -> f64 {
    match bias {
        BiasMode::None => 0.0,
        BiasMode::ConstantFeature => 1.0,
    }
}

/// `W(α) = Σ α_t - ½ Σ_ij α_i α_j y_i y_j K_ij` on the given kernel.
pub fn dual_objective(alphas: &[f64], y: &[i8], k: &Matrix) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * f64::from(y[i] * y[j]) * k.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

pub fn svm_train(k: &Matrix, y: &[i8], config: &SvmConfig) -> Result<SvmModel> {
    if !k.is_square() {
        return Err(Error::NotSquare {
            rows: k.rows(),
            cols: k.cols(),
        });
    }
    ensure_dim(k.rows(), y.len())?;
    if y.is_empty() {
        return Err(Error::Empty("training kernel"));
    }
    if k.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel"));
    }
    let scale = k.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    k.check_symmetric(1e-9 * scale)?;
    check_labels(y)?;
    if !(config.c > 0.0) || !config.c.is_finite() {
        return Err(Error::param("C", "must be positive and finite"));
    }

    let n = y.len();
    let b = offset(config.bias);
    let kk = |i: usize, j: usize| k.get(i, j) + b;
    let max_diag = (0..n).map(|i| kk(i, i)).fold(f64::NEG_INFINITY, f64::max);
    if (0..n).any(|i| kk(i, i) < -1e-12 * scale) {
        return Err(Error::param("kernel", "negative diagonal entry; kernel is not PSD"));
    }
    let eta = match config.eta {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(_) => return Err(Error::param("eta", "must be positive and finite")),
        None if max_diag > 0.0 => 1.0 / max_diag,
        None => return Err(Error::param("kernel", "diagonal is zero; set eta explicitly")),
    };
    let caps: Vec<f64> = y
        .iter()
        .map(|&yi| match config.class_weights {
            Some((neg, pos)) => config.c * if yi > 0 { pos } else { neg },
            None => config.c,
        })
        .collect();
    if caps.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::param("class_weights", "must be positive"));
    }

    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut alphas = alloc::vec![0.0; n];
    // margin[t] = Σ_s α_s y_s K_eff(s, t), updated whenever an α moves
    let mut margin = alloc::vec![0.0; n];
    let mut epochs = 0;
    let mut converged = false;
    while epochs < config.max_epochs {
        epochs += 1;
        let mut max_step = 0.0f64;
        for i in 0..n {
            let next = (alphas[i] + eta * (1.0 - yf[i] * margin[i])).clamp(0.0, caps[i]);
            let step = next - alphas[i];
            if step != 0.0 {
                max_step = max_step.max(step.abs());
                alphas[i] = next;
                let row = k.row(i);
                for (t, m) in margin.iter_mut().enumerate() {
                    *m += step * yf[i] * (row[t] + b);
                }
            }
        }
        if max_step < config.tol {
            converged = true;
            break;
        }
    }

    let bias = b * alphas.iter().zip(&yf).map(|(a, y)| a * y).sum::<f64>();
    Ok(SvmModel {
        support_indices: (0..n).filter(|&i| alphas[i] > 0.0).collect(),
        alphas,
        labels: y.to_vec(),
        bias,
        c: config.c,
        bias_mode: config.bias,
        epochs,
        converged,
    })
}

/// Scores `Σ_i α_i y_i K(x_i, x) + bias` for each row of a test×train kernel.
pub fn svm_decision(model: &SvmModel, k_test: &Matrix) -> Result<Vec<f64>> {
    ensure_dim(model.alphas.len(), k_test.cols())?;
    Ok(k_test
        .iter_rows()
        .map(|row| {
            model
                .support_indices
                .iter()
                .map(|&i| model.alphas[i] * f64::from(model.labels[i]) * row[i])
                .sum::<f64>()
                + model.bias
        })
        .collect())
}
