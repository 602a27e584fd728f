use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::math::{fingerprint, sqrt};
use crate::matrix::Matrix;

type DistFn<T> = dyn Fn(&T, &T) -> Result<f64> + Send + Sync;

/// A named distance over whole instances, optionally scaled.
pub struct DistanceSpec<T> {
    name: String,
    func: Box<DistFn<T>>,
    scale: f64,
}

impl<T> DistanceSpec<T> {
    pub fn new(name: impl Into<String>, func: impl Fn(&T, &T) -> Result<f64> + Send + Sync + 'static) -> Self {
        DistanceSpec {
            name: name.into(),
            func: Box::new(func),
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn distance(&self, a: &T, b: &T) -> Result<f64> {
        let d = self.scale * (self.func)(a, b)?;
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonFinite("modality distance"))
        }
    }
}

impl<T> core::fmt::Debug for DistanceSpec<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DistanceSpec")
            .field("name", &self.name)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Graph {
    /// Columns `(sample i, modality k)` at index `i·K + k`.
    Pairwise,
    /// Columns `(sample i, representative j, modality k)` at index `(i·|R| + j)·K + k`.
    Class,
}

pub fn column_count(graph: Graph, modalities: usize, samples: usize, representatives: usize) -> usize {
    match graph {
        Graph::Pairwise => modalities * samples,
        Graph::Class => modalities * samples * representatives,
    }
}

fn check_shape<T>(graph: Graph, samples: &[T], reps: &[T], specs: &[DistanceSpec<T>]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Empty("distance specs"));
    }
    if samples.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    if graph == Graph::Class && reps.is_empty() {
        return Err(Error::Empty("class representatives"));
    }
    Ok(())
}

/// Raw column values for one instance.
///
/// In the class graph the value is `dist(x, s_i) + dist(x, r_j)`; the
/// `dist(s_i, r_j)` term is constant over instances and would be removed by
/// standardization anyway.
pub fn distance_row<T>(x: &T, samples: &[T], reps: &[T], specs: &[DistanceSpec<T>], graph: Graph) -> Result<Vec<f64>> {
    check_shape(graph, samples, reps, specs)?;
    let to_samples = samples
        .iter()
        .flat_map(|s| specs.iter().map(move |k| k.distance(x, s)))
        .collect::<Result<Vec<f64>>>()?;
    match graph {
        Graph::Pairwise => Ok(to_samples),
        Graph::Class => {
            let kk = specs.len();
            let to_reps = reps
                .iter()
                .flat_map(|r| specs.iter().map(move |k| k.distance(x, r)))
                .collect::<Result<Vec<f64>>>()?;
            let mut row = Vec::with_capacity(column_count(graph, kk, samples.len(), reps.len()));
            for i in 0..samples.len() {
                for j in 0..reps.len() {
                    for k in 0..kk {
                        row.push(to_samples[i * kk + k] + to_reps[j * kk + k]);
                    }
                }
            }
            Ok(row)
        }
    }
}

pub fn distance_rows<T>(
    instances: &[T],
    samples: &[T],
    reps: &[T],
    specs: &[DistanceSpec<T>],
    graph: Graph,
) -> Result<Matrix> {
    check_shape(graph, samples, reps, specs)?;
    let cols = column_count(graph, specs.len(), samples.len(), reps.len());
    let mut data = Vec::with_capacity(instances.len() * cols);
    for x in instances {
        data.extend(distance_row(x, samples, reps, specs, graph)?);
    }
    Matrix::from_vec(instances.len(), cols, data)
}

/// Per-column training moments of the raw distances.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    /// Population standard deviations, floored at `1e-9 (1 + |mean|)`.
    pub stdevs: Vec<f64>,
    /// Columns whose spread fell under the floor; their features are zero.
    pub degenerate: Vec<bool>,
}

impl StandardizationStats {
    pub fn columns(&self) -> usize {
        self.means.len()
    }

    pub fn degenerate_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.degenerate.iter().enumerate().filter(|(_, d)| **d).map(|(i, _)| i)
    }

    pub fn digest(&self) -> u64 {
        fingerprint(self.means.iter().chain(&self.stdevs).copied())
    }

    /// `(mean - dist) / stdev` per column.
    pub fn standardize_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() > self.columns() {
            return Err(Error::UnfittedColumn(self.columns()));
        }
        ensure_dim(self.columns(), raw.len())?;
        Ok(raw
            .iter()
            .enumerate()
            .map(|(c, d)| {
                if self.degenerate[c] {
                    0.0
                } else {
                    (self.means[c] - d) / self.stdevs[c]
                }
            })
            .collect())
    }

    pub fn apply(&self, raw: &Matrix) -> Result<Matrix> {
        let mut data = Vec::with_capacity(raw.rows() * raw.cols());
        for row in raw.iter_rows() {
            data.extend(self.standardize_row(row)?);
        }
        Matrix::from_vec(raw.rows(), raw.cols(), data)
    }
}

pub const STDEV_FLOOR_REL: f64 = 1e-9;

/// Fits column moments on training distances (rows = training instances).
pub fn fit_standardization(train: &Matrix) -> Result<StandardizationStats> {
    if train.rows() < 2 {
        return Err(Error::param("train", "at least two training instances are required"));
    }
    let n = train.rows() as f64;
    let mut means = Vec::with_capacity(train.cols());
    let mut stdevs = Vec::with_capacity(train.cols());
    let mut degenerate = Vec::with_capacity(train.cols());
    for c in 0..train.cols() {
        let col = train.column(c);
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training distances"));
        }
        let mean = col.iter().sum::<f64>() / n;
        let sd = sqrt(col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n);
        let floor = STDEV_FLOOR_REL * (1.0 + mean.abs());
        means.push(mean);
        stdevs.push(sd.max(floor));
        degenerate.push(sd < floor);
    }
    Ok(StandardizationStats {
        means,
        stdevs,
        degenerate,
    })
}

/// Standardized similarity features for `instances`.
pub fn similarity_features<T>(
    instances: &[T],
    samples: &[T],
    reps: &[T],
    specs: &[DistanceSpec<T>],
    stats: &StandardizationStats,
    graph: Graph,
) -> Result<Matrix> {
    stats.apply(&distance_rows(instances, samples, reps, specs, graph)?)
}

/// Linear Gram matrix `F · F2ᵀ` (or `F · Fᵀ`).
pub fn similarity_kernel_matrix(f: &Matrix, f2: Option<&Matrix>) -> Result<Matrix> {
    let g = f2.unwrap_or(f);
    ensure_dim(f.cols(), g.cols())?;
    let mut out = Matrix::zeros(f.rows(), g.rows());
    for i in 0..f.rows() {
        for j in 0..g.rows() {
            if f2.is_none() && j < i {
                out.set(i, j, out.get(j, i));
            } else {
                out.set(i, j, crate::math::dot(f.row(i), g.row(j)));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn abs_spec(name: &str) -> DistanceSpec<f64> {
        DistanceSpec::new(name, |a: &f64, b: &f64| Ok((a - b).abs()))
    }

    fn sq_spec() -> DistanceSpec<f64> {
        DistanceSpec::new("sq", |a: &f64, b: &f64| Ok((a - b) * (a - b)))
    }

    #[test]
    fn fit_hand_statistics() {
        let train = Matrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap();
        let st = fit_standardization(&train).unwrap();
        assert_eq!(st.means, vec![2.0]);
        assert_eq!(st.stdevs, vec![1.0]);
        assert!(fit_standardization(&Matrix::from_vec(1, 1, vec![1.0]).unwrap()).is_err());
        let flipped = Matrix::from_vec(2, 1, vec![3.0, 1.0]).unwrap();
        assert_eq!(fit_standardization(&flipped).unwrap(), st);
    }

    #[test]
    fn constant_column_is_flagged_and_zero() {
        let train = Matrix::from_vec(3, 2, vec![0.1, 1.0, 0.1, 2.0, 0.1, 3.0]).unwrap();
        let st = fit_standardization(&train).unwrap();
        assert_eq!(st.degenerate_columns().collect::<Vec<_>>(), vec![0]);
        assert!(st.stdevs[0] >= 1e-9);
        let f = st.apply(&Matrix::from_vec(1, 2, vec![5.0, 2.0]).unwrap()).unwrap();
        assert_eq!(f.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn unfitted_columns_error() {
        let st = fit_standardization(&Matrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap()).unwrap();
        let wide = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(st.apply(&wide), Err(Error::UnfittedColumn(1))));
    }

    #[test]
    fn column_layouts() {
        let specs = vec![abs_spec("a"), sq_spec()];
        let s = [0.0, 10.0];
        let r = [1.0, 2.0, 3.0];
        let row = distance_row(&4.0, &s, &[], &specs, Graph::Pairwise).unwrap();
        assert_eq!(row, vec![4.0, 16.0, 6.0, 36.0]);
        let row = distance_row(&4.0, &s, &r, &specs, Graph::Class).unwrap();
        assert_eq!(row.len(), 12);
        // (i=1, j=2, k=1) at (1·3 + 2)·2 + 1
        assert_eq!(row[11], 36.0 + 1.0);
        assert_eq!(row[0], 4.0 + 3.0);
        assert!(distance_row(&4.0, &s, &[], &specs, Graph::Class).is_err());
        assert!(distance_row(&4.0, &[], &[], &specs, Graph::Pairwise).is_err());
    }

    #[test]
    fn mean_distance_gives_zero_feature() {
        let specs = vec![abs_spec("a")];
        let train = [0.0, 2.0, 4.0];
        let s = [0.0];
        let st = fit_standardization(&distance_rows(&train, &s, &[], &specs, Graph::Pairwise).unwrap()).unwrap();
        let f = similarity_features(&[2.0], &s, &[], &specs, &st, Graph::Pairwise).unwrap();
        assert_eq!(f.as_slice(), &[0.0]);
        let ft = similarity_features(&train, &s, &[], &specs, &st, Graph::Pairwise).unwrap();
        let col = ft.column(0);
        assert!(crate::math::mean(&col).abs() < 1e-12);
        assert!((crate::math::variance(&col) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_examples() {
        let f = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0], vec![-1.0, 3.0]]).unwrap();
        let k = similarity_kernel_matrix(&f, None).unwrap();
        assert_eq!(k.get(0, 0), 5.0);
        assert_eq!(k.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(k.get(2, 0), k.get(0, 2));
        let t = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let kt = similarity_kernel_matrix(&t, Some(&f)).unwrap();
        assert_eq!(kt.as_slice(), &[3.0, 0.0, 2.0]);
        let bad = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(similarity_kernel_matrix(&bad, Some(&f)).is_err());
    }

    #[test]
    fn non_finite_distance_is_rejected() {
        let spec = DistanceSpec::new("nan", |_: &f64, _: &f64| Ok(f64::NAN));
        assert!(spec.distance(&0.0, &1.0).is_err());
        assert_eq!(abs_spec("x").with_scale(2.0).distance(&0.0, &3.0).unwrap(), 6.0);
    }

    proptest! {
        #[test]
        fn affine_distance_change_leaves_features(
            train in prop::collection::vec(-50.0f64..50.0, 4..12),
            test in prop::collection::vec(-50.0f64..50.0, 1..5),
            samples in prop::collection::vec(-50.0f64..50.0, 1..4),
            reps in prop::collection::vec(-50.0f64..50.0, 1..3),
            c in prop::sample::select(vec![0.5, 3.0]),
            m in prop::sample::select(vec![0.0, 7.0]),
            class in any::<bool>(),
        ) {
            let graph = if class { Graph::Class } else { Graph::Pairwise };
            let base = vec![abs_spec("a"), sq_spec()];
            let moved = vec![
                abs_spec("a"),
                DistanceSpec::new("sq'", move |a: &f64, b: &f64| Ok(c * (a - b) * (a - b) + m)),
            ];
            let feats = |specs: &[DistanceSpec<f64>]| {
                let st = fit_standardization(&distance_rows(&train, &samples, &reps, specs, graph).unwrap()).unwrap();
                similarity_features(&test, &samples, &reps, specs, &st, graph).unwrap()
            };
            let (a, b) = (feats(&base), feats(&moved));
            prop_assert_eq!(a.cols(), column_count(graph, 2, samples.len(), reps.len()));
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{} vs {}", x, y);
            }
        }

        #[test]
        fn rows_are_permutation_equivariant(
            xs in prop::collection::vec(-5.0f64..5.0, 2..8),
            rot in 0usize..8,
        ) {
            let specs = vec![abs_spec("a")];
            let s = [0.0, 1.5];
            let st = fit_standardization(&distance_rows(&xs, &s, &[], &specs, Graph::Pairwise).unwrap()).unwrap();
            let a = similarity_features(&xs, &s, &[], &specs, &st, Graph::Pairwise).unwrap();
            let mut ys = xs.clone();
            let r = rot % ys.len();
            ys.rotate_left(r);
            let b = similarity_features(&ys, &s, &[], &specs, &st, Graph::Pairwise).unwrap();
            for i in 0..xs.len() {
                prop_assert_eq!(a.row((i + r) % xs.len()), b.row(i));
            }
        }
    }
}
