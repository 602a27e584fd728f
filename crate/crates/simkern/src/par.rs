//! Order-preserving parallel maps. Each output element depends on one input
//! only, so results are identical for any thread count.

use rayon::prelude::*;
use simkern_core::math::dot;
use simkern_core::simkernel::{distance_row, DistanceSpec, Graph};
use simkern_core::Matrix;

use crate::error::Result;

pub fn try_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

fn stack(rows: Vec<Vec<f64>>, cols: usize) -> Result<Matrix> {
    let n = rows.len();
    Ok(Matrix::from_vec(n, cols, rows.concat())?)
}

/// Parallel counterpart of `simkernel::distance_rows`.
pub fn distance_rows<T: Sync>(
    instances: &[T],
    samples: &[T],
    reps: &[T],
    specs: &[DistanceSpec<T>],
    graph: Graph,
) -> Result<Matrix> {
    let cols = simkern_core::simkernel::column_count(graph, specs.len(), samples.len(), reps.len());
    let rows = try_map(instances, |x| Ok(distance_row(x, samples, reps, specs, graph)?))?;
    stack(rows, cols)
}

/// `F · F2ᵀ`, one output row per task.
pub fn kernel_matrix(f: &Matrix, f2: &Matrix) -> Result<Matrix> {
    if f.cols() != f2.cols() {
        return Err(simkern_core::Error::DimensionMismatch {
            expected: f.cols(),
            got: f2.cols(),
        }
        .into());
    }
    let idx: Vec<usize> = (0..f.rows()).collect();
    let rows = try_map(&idx, |&i| Ok(f2.iter_rows().map(|g| dot(f.row(i), g)).collect()))?;
    stack(rows, f2.rows())
}

/// `F · Fᵀ`; only the upper triangle is computed, then mirrored.
pub fn gram_matrix(f: &Matrix) -> Result<Matrix> {
    let n = f.rows();
    let idx: Vec<usize> = (0..n).collect();
    let upper = try_map(&idx, |&i| {
        Ok((i..n).map(|j| dot(f.row(i), f.row(j))).collect::<Vec<f64>>())
    })?;
    let mut k = Matrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            k.set(i, i + off, v);
            k.set(i + off, i, v);
        }
    }
    Ok(k)
}

/// Stacks equally long vectors produced in parallel.
pub fn map_rows<T, F>(items: &[T], cols: usize, f: F) -> Result<Matrix>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<f64>> + Sync + Send,
{
    stack(try_map(items, f)?, cols)
}
