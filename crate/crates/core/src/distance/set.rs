use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};

/// Asymmetric set-to-set distance: the mean over `query` of the distance to
/// the closest element of `target`.
///
/// `weights`, when given, scale each coordinate of both vectors before the
/// base distance is applied.
pub fn asym_set_distance<V, F>(query: &[V], target: &[V], base: F, weights: Option<&[f64]>) -> Result<f64>
where
    V: AsRef<[f64]>,
    F: Fn(&[f64], &[f64]) -> Result<f64>,
{
    if query.is_empty() {
        return Err(Error::Empty("query set"));
    }
    if target.is_empty() {
        return Err(Error::Empty("target set"));
    }
    let dim = query[0].as_ref().len();
    for v in query.iter().chain(target) {
        ensure_dim(dim, v.as_ref().len())?;
    }
    let scale = |v: &[f64]| -> Vec<f64> {
        match weights {
            Some(w) => v.iter().zip(w).map(|(a, b)| a * b).collect(),
            None => v.to_vec(),
        }
    };
    if let Some(w) = weights {
        ensure_dim(dim, w.len())?;
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::param("weights", "must be non-negative"));
        }
    }
    let scaled_target: Vec<Vec<f64>> = target.iter().map(|t| scale(t.as_ref())).collect();
    let mut total = 0.0;
    for q in query {
        let q = scale(q.as_ref());
        let mut best = f64::INFINITY;
        for t in &scaled_target {
            best = best.min(base(&q, t)?);
        }
        total += best;
    }
    Ok(total / query.len() as f64)
}
