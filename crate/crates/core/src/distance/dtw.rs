use alloc::vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

/// Squared DTW cost: minimum over monotone alignments of the summed squared
/// differences along the warping path. Full band, `O(n·m)` time, two rows of
/// memory.
pub fn dtw_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("time series"));
    }
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![f64::INFINITY; m];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            let cost = (xi - yj) * (xi - yj);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { curr[j - 1] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            curr[j] = best + cost;
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Dynamic time warping distance, the square root of [`dtw_squared`].
///
/// For single-point series this is `|x1 - y1|`.
pub fn dtw(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("time series"));
    }
    dtw_squared(x, y).map(sqrt)
}
