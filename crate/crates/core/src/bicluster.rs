//! Information-theoretic co-clustering with a Jensen-Shannon row update.
//!
//! Rows are reassigned to `argmin_x̂ JS(p(Y|x) ‖ q(Y|x̂)) + w·D(x, x̂)` where
//! `q(y|x̂) = p(y) p(x̂,ŷ) / (p(x̂) p(ŷ))` and `D` is the mean external
//! distance from `x` to the members of `x̂`. The JS term is min-max scaled to
//! `[0, 1]` over the sweep, `D` by the range of the external distances.
//! Columns use the symmetric update without an external term.
//!
//! Prototypes are frozen for a whole sweep, so the JS scores of all rows can
//! be computed independently. `D` is the exception: it tracks the assignment
//! as rows move within the sweep. Replacing KL by JS means a sweep is no longer
//! guaranteed to raise the mutual information, so with `w = 0` a half-sweep
//! that would lower `I(X̂; Ŷ)` is discarded.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::js_raw;
use crate::error::{ensure_dim, Error, Result};
use crate::math::log;
use crate::matrix::Matrix;

/// Non-negative co-occurrence counts, rows = instances, columns = attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyMatrix {
    counts: Matrix,
}

impl ContingencyMatrix {
    pub fn new(counts: Matrix) -> Result<Self> {
        if counts.rows() == 0 || counts.cols() == 0 {
            return Err(Error::Empty("contingency matrix"));
        }
        if counts.as_slice().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("counts", "entries must be finite and non-negative"));
        }
        if counts.as_slice().iter().sum::<f64>() <= 0.0 {
            return Err(Error::param("counts", "total mass is zero"));
        }
        Ok(ContingencyMatrix { counts })
    }

    pub fn counts(&self) -> &Matrix {
        &self.counts
    }

    pub fn rows(&self) -> usize {
        self.counts.rows()
    }

    pub fn cols(&self) -> usize {
        self.counts.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoclusterConfig {
    pub row_clusters: usize,
    pub col_clusters: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Weight of the external row distance; `0` disables it.
    pub w: f64,
}

impl CoclusterConfig {
    pub fn new(row_clusters: usize, col_clusters: usize) -> Self {
        CoclusterConfig {
            row_clusters,
            col_clusters,
            seed: 0,
            max_iter: 100,
            w: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coclustering {
    /// Cluster of each row, relabeled by first occurrence.
    pub row_clusters: Vec<usize>,
    /// Cluster of each kept column, aligned with `kept_columns`.
    pub col_clusters: Vec<usize>,
    pub kept_columns: Vec<usize>,
    /// Columns with zero total count; they take no part in the clustering.
    pub dropped_columns: Vec<usize>,
    /// Compressed joint `p(x̂, ŷ)`, `k x ℓ`.
    pub joint: Matrix,
    /// `q(y | x̂)` over the kept columns, one row per row cluster.
    pub row_prototypes: Matrix,
    /// `I(X̂; Ŷ)` at initialization and after every iteration.
    pub mi_trace: Vec<f64>,
    /// Sum of the blended row objective in every row sweep.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Coclustering {
    pub fn final_mi(&self) -> f64 {
        *self.mi_trace.last().expect("trace starts with the initial value")
    }

    pub fn k(&self) -> usize {
        self.joint.rows()
    }

    pub fn l(&self) -> usize {
        self.joint.cols()
    }
}

/// `I = Σ p(a,b) ln(p(a,b) / (p(a) p(b)))` for a joint table.
pub fn mutual_information(joint: &Matrix) -> f64 {
    let pa: Vec<f64> = joint.iter_rows().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = (0..joint.cols()).map(|c| joint.column(c).iter().sum()).collect();
    let mut mi = 0.0;
    for a in 0..joint.rows() {
        for b in 0..joint.cols() {
            let p = joint.get(a, b);
            if p > 0.0 {
                mi += p * log(p / (pa[a] * pb[b]));
            }
        }
    }
    mi
}

/// Joint distribution with a cached view of both margins.
struct Joint {
    p: Matrix,
    px: Vec<f64>,
    py: Vec<f64>,
}

impl Joint {
    fn transpose(&self) -> Joint {
        Joint {
            p: self.p.transpose(),
            px: self.py.clone(),
            py: self.px.clone(),
        }
    }

    fn compress(&self, rows: &[usize], cols: &[usize], k: usize, l: usize) -> Matrix {
        let mut c = Matrix::zeros(k, l);
        for (x, &a) in rows.iter().enumerate() {
            for (y, &b) in cols.iter().enumerate() {
                c.set(a, b, c.get(a, b) + self.p.get(x, y));
            }
        }
        c
    }

    /// `q(y | x̂) = p(y) p(x̂, ŷ(y)) / (p(x̂) p(ŷ(y)))`.
    fn prototypes(&self, compressed: &Matrix, cols: &[usize]) -> Matrix {
        let pa: Vec<f64> = compressed.iter_rows().map(|r| r.iter().sum()).collect();
        let pb: Vec<f64> = (0..compressed.cols())
            .map(|c| compressed.column(c).iter().sum())
            .collect();
        let mut q = Matrix::zeros(compressed.rows(), cols.len());
        for a in 0..compressed.rows() {
            for (y, &b) in cols.iter().enumerate() {
                let denom = pa[a] * pb[b];
                if denom > 0.0 {
                    q.set(a, y, self.py[y] * compressed.get(a, b) / denom);
                }
            }
        }
        q
    }

    fn conditional(&self, x: usize) -> Vec<f64> {
        self.p.row(x).iter().map(|v| v / self.px[x]).collect()
    }
}

fn off_diagonal_range(m: &Matrix) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                lo = lo.min(m.get(i, j));
                hi = hi.max(m.get(i, j));
            }
        }
    }
    (lo, hi)
}

fn min_max_scale(values: &mut [f64]) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    for v in values.iter_mut() {
        *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
    }
}

/// One sweep over the rows of `joint`; returns the new assignment and
/// the summed objective of the chosen clusters.
fn sweep(
    joint: &Joint,
    rows: &[usize],
    cols: &[usize],
    k: usize,
    l: usize,
    external: Option<(&Matrix, f64)>,
) -> Result<(Vec<usize>, f64)> {
    let n = rows.len();
    let q = joint.prototypes(&joint.compress(rows, cols, k, l), cols);
    let mut js = Vec::with_capacity(n * k);
    for x in 0..n {
        let cond = joint.conditional(x);
        for a in 0..k {
            js.push(js_raw(&cond, q.row(a))?);
        }
    }
    let mut obj = js.clone();
    min_max_scale(&mut obj);

    let mut next = Vec::with_capacity(n);
    let mut loss = 0.0;
    let argmin = |row: &[f64]| (1..row.len()).fold(0, |b, a| if row[a] < row[b] { a } else { b });
    match external {
        None => {
            for x in 0..n {
                let row = &obj[x * k..(x + 1) * k];
                let best = argmin(row);
                loss += row[best];
                next.push(best);
            }
        }
        Some((ext, w)) => {
            // mean distances follow the live assignment; a frozen snapshot
            // makes symmetric groups swap labels forever
            let (lo, hi) = off_diagonal_range(ext);
            let range = hi - lo;
            next.extend_from_slice(rows);
            for x in 0..n {
                let mut sum = alloc::vec![0.0; k];
                let mut count = alloc::vec![0usize; k];
                for (other, &a) in next.iter().enumerate() {
                    if other != x {
                        sum[a] += ext.get(x, other);
                        count[a] += 1;
                    }
                }
                let row: Vec<f64> = (0..k)
                    .map(|a| {
                        let d = if count[a] > 0 && range > 0.0 {
                            (sum[a] / count[a] as f64 - lo) / range
                        } else {
                            0.0
                        };
                        obj[x * k + a] + w * d
                    })
                    .collect();
                let best = argmin(&row);
                loss += row[best];
                next[x] = best;
            }
        }
    }

    // refill empty clusters with the worst-fitting member of a shared cluster
    let mut sizes = alloc::vec![0usize; k];
    for &a in &next {
        sizes[a] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for x in 0..n {
            if sizes[next[x]] < 2 {
                continue;
            }
            if pick.map_or(true, |p| js[x * k + next[x]] > js[p * k + next[p]]) {
                pick = Some(x);
            }
        }
        if let Some(x) = pick {
            sizes[next[x]] -= 1;
            next[x] = empty;
            sizes[empty] = 1;
        }
    }
    Ok((next, loss))
}

fn balanced_init(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut assign = alloc::vec![0; n];
    for (slot, &i) in order.iter().enumerate() {
        assign[i] = slot % k;
    }
    assign
}

/// Relabels cluster ids in order of first occurrence; returns the old→new map.
fn canonical_map(assign: &[usize], k: usize) -> Vec<usize> {
    let mut map = alloc::vec![usize::MAX; k];
    let mut next = 0;
    for &a in assign {
        if map[a] == usize::MAX {
            map[a] = next;
            next += 1;
        }
    }
    for m in map.iter_mut() {
        if *m == usize::MAX {
            *m = next;
            next += 1;
        }
    }
    map
}

pub fn cocluster(
    matrix: &ContingencyMatrix,
    config: &CoclusterConfig,
    external: Option<&Matrix>,
) -> Result<Coclustering> {
    let (k, l) = (config.row_clusters, config.col_clusters);
    let n = matrix.rows();
    let counts = matrix.counts();
    if !(config.w >= 0.0) || !config.w.is_finite() {
        return Err(Error::param("w", "blend weight must be finite and non-negative"));
    }
    match (external, config.w > 0.0) {
        (Some(ext), true) => {
            if ext.rows() != n || ext.cols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: if ext.rows() != n { ext.rows() } else { ext.cols() },
                });
            }
            if ext.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("external distances"));
            }
        }
        (None, false) => {}
        _ => {
            return Err(Error::param(
                "external",
                "an external distance is needed exactly when w > 0",
            ))
        }
    }

    let col_mass: Vec<f64> = (0..counts.cols()).map(|c| counts.column(c).iter().sum()).collect();
    let kept_columns: Vec<usize> = (0..counts.cols()).filter(|&c| col_mass[c] > 0.0).collect();
    let dropped_columns: Vec<usize> = (0..counts.cols()).filter(|&c| col_mass[c] <= 0.0).collect();
    let m = kept_columns.len();
    if k == 0 || k > n {
        return Err(Error::param("k", alloc::format!("must lie in 1..={n}")));
    }
    if l == 0 || l > m {
        return Err(Error::param(
            "l",
            alloc::format!("must lie in 1..={m} (non-empty columns)"),
        ));
    }

    let total: f64 = col_mass.iter().sum();
    let mut p = Matrix::zeros(n, m);
    for x in 0..n {
        for (y, &c) in kept_columns.iter().enumerate() {
            p.set(x, y, counts.get(x, c) / total);
        }
    }
    let px: Vec<f64> = p.iter_rows().map(|r| r.iter().sum()).collect();
    if let Some(x) = px.iter().position(|v| *v <= 0.0) {
        return Err(Error::param("counts", alloc::format!("row {x} has zero mass")));
    }
    let py: Vec<f64> = (0..m).map(|y| p.column(y).iter().sum()).collect();
    let joint = Joint { p, px, py };
    let joint_t = joint.transpose();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = balanced_init(n, k, &mut rng);
    let mut cols = balanced_init(m, l, &mut rng);
    let mi_of = |r: &[usize], c: &[usize]| mutual_information(&joint.compress(r, c, k, l));
    let mut mi = mi_of(&rows, &cols);
    let mut mi_trace = alloc::vec![mi];
    let mut loss_trace = Vec::new();
    let guard = config.w == 0.0;
    let ext = external.map(|e| (e, config.w));

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let mut changed = false;

        let (next_rows, loss) = sweep(&joint, &rows, &cols, k, l, ext)?;
        loss_trace.push(loss);
        if next_rows != rows {
            let next_mi = mi_of(&next_rows, &cols);
            if !(guard && next_mi < mi) {
                rows = next_rows;
                mi = next_mi;
                changed = true;
            }
        }

        let (next_cols, _) = sweep(&joint_t, &cols, &rows, l, k, None)?;
        if next_cols != cols {
            let next_mi = mi_of(&rows, &next_cols);
            if !(guard && next_mi < mi) {
                cols = next_cols;
                mi = next_mi;
                changed = true;
            }
        }

        mi_trace.push(mi);
        if !changed {
            converged = true;
            break;
        }
    }

    let rmap = canonical_map(&rows, k);
    let cmap = canonical_map(&cols, l);
    let rows: Vec<usize> = rows.iter().map(|a| rmap[*a]).collect();
    let cols: Vec<usize> = cols.iter().map(|b| cmap[*b]).collect();
    let compressed = joint.compress(&rows, &cols, k, l);
    let row_prototypes = joint.prototypes(&compressed, &cols);
    Ok(Coclustering {
        row_clusters: rows,
        col_clusters: cols,
        kept_columns,
        dropped_columns,
        joint: compressed,
        row_prototypes,
        mi_trace,
        loss_trace,
        iterations,
        converged,
    })
}

/// Runs `restarts` seeds starting at `config.seed` and keeps the clustering
/// with the highest final mutual information (earliest seed on ties).
pub fn cocluster_restarts(
    matrix: &ContingencyMatrix,
    config: &CoclusterConfig,
    external: Option<&Matrix>,
    restarts: usize,
) -> Result<Coclustering> {
    let mut best: Option<Coclustering> = None;
    for r in 0..restarts.max(1) as u64 {
        let cfg = CoclusterConfig {
            seed: config.seed.wrapping_add(r),
            ..config.clone()
        };
        let c = cocluster(matrix, &cfg, external)?;
        if best.as_ref().map_or(true, |b| c.final_mi() > b.final_mi()) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// JS divergence from the column distribution of `x` (raw counts over the
/// original columns) to every row-cluster prototype.
pub fn cluster_distance_features(clustering: &Coclustering, x: &[f64]) -> Result<Vec<f64>> {
    let arity = clustering.kept_columns.len() + clustering.dropped_columns.len();
    ensure_dim(arity, x.len())?;
    if x.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::param("x", "counts must be finite and non-negative"));
    }
    let kept: Vec<f64> = clustering.kept_columns.iter().map(|&c| x[c]).collect();
    let mass: f64 = kept.iter().sum();
    if mass <= 0.0 {
        return Err(Error::param("x", "row has zero mass on the clustered columns"));
    }
    let cond: Vec<f64> = kept.iter().map(|v| v / mass).collect();
    clustering
        .row_prototypes
        .iter_rows()
        .map(|q| js_raw(&cond, q))
        .collect()
}
