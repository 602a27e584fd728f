//! Fisher vectors and kernels over diagonal Gaussian mixtures.
//!
//! The raw score `U_X` is the gradient of `Σ_t log p(x_t)` laid out as
//! `[ω | μ row-major | σ row-major]`. Each coordinate is divided by the square
//! root of the matching diagonal Fisher-information term:
//!
//! * weights: `T (1/ω_i + 1/ω_1)`
//! * means: `T ω_i / σ_id²`
//! * stdevs: `2 T ω_i / σ_id²`

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::gmm::{loglik_gradient, GaussianMixture};
use crate::math::{dot, fabs, pow, sqrt};

/// Post-normalization applied after the Fisher-information scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    None,
    /// `sign(v)|v|^α` per coordinate.
    Power(f64),
    /// Division by the Euclidean norm.
    L2,
    /// Power with the given exponent, then L2.
    Both(f64),
}

pub const DEFAULT_POWER: f64 = 0.5;

impl Default for Normalization {
    fn default() -> Self {
        Normalization::Both(DEFAULT_POWER)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherVector {
    pub values: Vec<f64>,
    /// Fingerprint of the generating model.
    pub provenance: u64,
}

impl FisherVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Appends an extra block (e.g. spatial clique scores) unweighted.
    pub fn with_block(mut self, block: &[f64]) -> Self {
        self.values.extend_from_slice(block);
        self
    }
}

/// Raw Fisher score `U_X = Σ_t ∇ log p(x_t)`.
pub fn fisher_score<V: AsRef<[f64]>>(model: &GaussianMixture, xs: &[V]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    Ok(loglik_gradient(model, xs)?.flatten())
}

/// Diagonal Fisher information for `t` samples in the canonical layout.
pub fn diagonal_information(model: &GaussianMixture, t: usize) -> Vec<f64> {
    let t = t as f64;
    let w = model.weights();
    let (n, d) = (model.n_components(), model.dim());
    let mut f = Vec::with_capacity(model.parameter_count());
    f.extend(w.iter().map(|wi| t * (1.0 / wi + 1.0 / w[0])));
    for i in 0..n {
        for j in 0..d {
            let s = model.stdevs().get(i, j);
            f.push(t * w[i] / (s * s));
        }
    }
    for i in 0..n {
        for j in 0..d {
            let s = model.stdevs().get(i, j);
            f.push(2.0 * t * w[i] / (s * s));
        }
    }
    f
}

pub fn normalize(values: &mut [f64], how: Normalization) -> Result<()> {
    let power = |values: &mut [f64], alpha: f64| -> Result<()> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", "power exponent must be positive"));
        }
        for v in values.iter_mut() {
            *v = v.signum() * pow(fabs(*v), alpha);
        }
        Ok(())
    };
    let l2 = |values: &mut [f64]| {
        let norm = sqrt(dot(values, values));
        // a zero vector stays zero
        if norm > 0.0 {
            for v in values.iter_mut() {
                *v /= norm;
            }
        }
    };
    match how {
        Normalization::None => {}
        Normalization::Power(a) => power(values, a)?,
        Normalization::L2 => l2(values),
        Normalization::Both(a) => {
            power(values, a)?;
            l2(values);
        }
    }
    Ok(())
}

/// `G_X = F^{-1/2} U_X` followed by the requested post-normalization.
pub fn fisher_vector<V: AsRef<[f64]>>(model: &GaussianMixture, xs: &[V], how: Normalization) -> Result<FisherVector> {
    let mut values = fisher_score(model, xs)?;
    let info = diagonal_information(model, xs.len());
    for (v, f) in values.iter_mut().zip(&info) {
        *v /= sqrt(*f);
    }
    normalize(&mut values, how)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fisher vector"));
    }
    Ok(FisherVector {
        values,
        provenance: model.fingerprint(),
    })
}

/// `K(X, Y) = G_X · G_Y`.
pub fn fisher_kernel(a: &FisherVector, b: &FisherVector) -> Result<f64> {
    if a.provenance != b.provenance {
        return Err(Error::ProvenanceMismatch(a.provenance, b.provenance));
    }
    ensure_dim(a.len(), b.len())?;
    Ok(dot(&a.values, &b.values))
}

/// Samples placed on a lattice, with the maximal cliques of its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSampleSet {
    samples: Vec<Vec<f64>>,
    cliques: Vec<Vec<usize>>,
    clique_size: usize,
}

impl LatticeSampleSet {
    pub fn new(samples: Vec<Vec<f64>>, cliques: Vec<Vec<usize>>) -> Result<Self> {
        let clique_size = cliques.first().map_or(2, Vec::len);
        let mut seen = BTreeSet::new();
        for (index, c) in cliques.iter().enumerate() {
            let bad = |reason| Err(Error::MalformedClique { index, reason });
            if c.len() != clique_size || c.is_empty() {
                return bad("cliques must share one size");
            }
            if c.iter().any(|&i| i >= samples.len()) {
                return bad("member index out of range");
            }
            let mut key = c.clone();
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return bad("repeated member");
            }
            if !seen.insert(key) {
                return bad("clique listed twice");
            }
        }
        Ok(LatticeSampleSet {
            samples,
            cliques,
            clique_size,
        })
    }

    /// A `rows x cols` grid with 4-neighbour pair cliques, samples row-major.
    pub fn grid(samples: Vec<Vec<f64>>, rows: usize, cols: usize) -> Result<Self> {
        ensure_dim(rows * cols, samples.len())?;
        let mut cliques = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    cliques.push(alloc::vec![i, i + 1]);
                }
                if r + 1 < rows {
                    cliques.push(alloc::vec![i, i + cols]);
                }
            }
        }
        Self::new(samples, cliques)
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn clique_size(&self) -> usize {
        self.clique_size
    }
}

/// Fraction of cliques whose members are hard-assigned to each label tuple.
///
/// The output has `N^c` entries; the tuple `(k_1, …, k_c)` sits at index
/// `Σ k_j N^(c-j)`, i.e. base-`N` with the first member most significant.
pub fn spatial_clique_scores(model: &GaussianMixture, lattice: &LatticeSampleSet) -> Result<Vec<f64>> {
    if lattice.cliques.is_empty() {
        return Err(Error::Empty("clique set"));
    }
    let n = model.n_components();
    let labels = lattice
        .samples
        .iter()
        .map(|x| model.hard_assign(x))
        .collect::<Result<Vec<_>>>()?;
    let width = n
        .checked_pow(lattice.clique_size as u32)
        .ok_or_else(|| Error::param("clique_size", "label tuple space too large"))?;
    let mut counts = alloc::vec![0usize; width];
    for c in &lattice.cliques {
        let idx = c.iter().fold(0, |acc, &m| acc * n + labels[m]);
        counts[idx] += 1;
    }
    let total = lattice.cliques.len() as f64;
    Ok(counts.into_iter().map(|k| k as f64 / total).collect())
}

/// GMM Fisher vector of the lattice samples with the clique block appended.
pub fn spatial_fisher_vector(
    model: &GaussianMixture,
    lattice: &LatticeSampleSet,
    how: Normalization,
) -> Result<FisherVector> {
    let fv = fisher_vector(model, &lattice.samples, how)?;
    Ok(fv.with_block(&spatial_clique_scores(model, lattice)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use alloc::vec;
    use proptest::prelude::*;

    fn model(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>, d: usize) -> GaussianMixture {
        let n = weights.len();
        GaussianMixture::new(
            weights,
            Matrix::from_vec(n, d, means).unwrap(),
            Matrix::from_vec(n, d, sds).unwrap(),
        )
        .unwrap()
    }

    fn two_by_three() -> GaussianMixture {
        model(
            vec![0.4, 0.6],
            vec![0.0, 1.0, -1.0, 2.0, 0.5, 0.0],
            vec![1.0, 0.7, 1.3, 0.9, 1.1, 2.0],
            3,
        )
    }

    #[test]
    fn dimension_is_2nd_plus_n() {
        let m = two_by_three();
        let fv = fisher_vector(&m, &[[0.1, 0.2, 0.3]], Normalization::None).unwrap();
        assert_eq!(fv.len(), 14);
    }

    #[test]
    fn hand_evaluated_mean_coordinate() {
        let m = model(vec![1.0], vec![0.0], vec![1.0], 1);
        let fv = fisher_vector(&m, &[[1.0]], Normalization::None).unwrap();
        // layout [ω, μ, σ]
        assert_eq!(fv.values[1], -1.0);
    }

    #[test]
    fn mean_block_zero_at_the_mean() {
        let m = model(vec![1.0], vec![2.0, -1.0], vec![1.0, 3.0], 2);
        let u = fisher_score(&m, &[[2.0, -1.0], [2.0, -1.0]]).unwrap();
        assert_eq!(&u[1..3], &[0.0, 0.0]);
        assert!(fisher_score(&m, &Vec::<Vec<f64>>::new()).is_err());
    }

    #[test]
    fn score_is_additive() {
        let m = two_by_three();
        let x = vec![vec![0.3, 0.1, -0.2], vec![1.0, 1.0, 1.0]];
        let y = vec![vec![-2.0, 0.0, 4.0]];
        let both: Vec<Vec<f64>> = x.iter().chain(&y).cloned().collect();
        let (ux, uy, uxy) = (
            fisher_score(&m, &x).unwrap(),
            fisher_score(&m, &y).unwrap(),
            fisher_score(&m, &both).unwrap(),
        );
        for i in 0..uxy.len() {
            assert!((ux[i] + uy[i] - uxy[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_output_is_unit_and_zero_stays_zero() {
        let m = two_by_three();
        let fv = fisher_vector(&m, &[[3.0, -1.0, 0.0]], Normalization::L2).unwrap();
        assert!((dot(&fv.values, &fv.values) - 1.0).abs() < 1e-12);
        let mut z = vec![0.0; 4];
        normalize(&mut z, Normalization::Both(0.5)).unwrap();
        assert_eq!(z, vec![0.0; 4]);
        assert!(normalize(&mut z, Normalization::Power(0.0)).is_err());
    }

    #[test]
    fn kernel_requires_same_model() {
        let a = fisher_vector(&two_by_three(), &[[0.0, 0.0, 0.0]], Normalization::None).unwrap();
        let other = model(vec![1.0], vec![0.0; 3], vec![1.0; 3], 3);
        let b = fisher_vector(&other, &[[0.0, 0.0, 0.0]], Normalization::None).unwrap();
        assert!(matches!(fisher_kernel(&a, &b), Err(Error::ProvenanceMismatch(..))));
        assert!(fisher_kernel(&a, &a).unwrap() >= 0.0);
        let doubled = FisherVector {
            values: a.values.iter().map(|v| 2.0 * v).collect(),
            provenance: a.provenance,
        };
        let k = fisher_kernel(&a, &a).unwrap();
        assert!((fisher_kernel(&doubled, &a).unwrap() - 2.0 * k).abs() < 1e-12 * k.max(1.0));
    }

    #[test]
    fn gram_matrix_is_psd() {
        use rand::{Rng, SeedableRng};
        let m = two_by_three();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let fvs: Vec<FisherVector> = (0..10)
            .map(|_| {
                let xs: Vec<Vec<f64>> = (0..5)
                    .map(|_| (0..3).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect())
                    .collect();
                fisher_vector(&m, &xs, Normalization::default()).unwrap()
            })
            .collect();
        let g = nalgebra::DMatrix::from_fn(10, 10, |i, j| fisher_kernel(&fvs[i], &fvs[j]).unwrap());
        assert_eq!(g, g.transpose());
        for ev in g.symmetric_eigenvalues().iter() {
            assert!(*ev >= -1e-8, "{ev}");
        }
    }

    #[test]
    fn clique_scores_examples() {
        let m = model(vec![0.5, 0.5], vec![0.0, 10.0], vec![1.0, 1.0], 1);
        let all_zero = LatticeSampleSet::grid(vec![vec![0.0]; 4], 2, 2).unwrap();
        assert_eq!(spatial_clique_scores(&m, &all_zero).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);

        let path = LatticeSampleSet::new(
            vec![vec![0.0], vec![10.0], vec![0.0], vec![10.0]],
            vec![vec![0, 1], vec![1, 2], vec![2, 3]],
        )
        .unwrap();
        let s = spatial_clique_scores(&m, &path).unwrap();
        // exhaustive oracle: count each (label_a, label_b) tuple directly
        let labels = [0, 1, 0, 1];
        let mut oracle = [0.0; 4];
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            oracle[labels[a] * 2 + labels[b]] += 1.0 / 3.0;
        }
        assert_eq!(s, oracle.to_vec());
        assert!((s[1] - 2.0 / 3.0).abs() < 1e-15 && (s[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_validation() {
        let xs = vec![vec![0.0]; 3];
        assert!(LatticeSampleSet::new(xs.clone(), vec![vec![0, 0]]).is_err());
        assert!(LatticeSampleSet::new(xs.clone(), vec![vec![0, 3]]).is_err());
        assert!(LatticeSampleSet::new(xs.clone(), vec![vec![0, 1], vec![1, 0]]).is_err());
        assert!(LatticeSampleSet::new(xs.clone(), vec![vec![0, 1], vec![1, 2, 0]]).is_err());
        let empty = LatticeSampleSet::new(xs, vec![]).unwrap();
        let m = model(vec![1.0], vec![0.0], vec![1.0], 1);
        assert!(spatial_clique_scores(&m, &empty).is_err());
    }

    #[test]
    fn spatial_vector_appends_block() {
        let m = model(vec![0.5, 0.5], vec![0.0, 10.0], vec![1.0, 1.0], 1);
        let lat = LatticeSampleSet::grid(vec![vec![0.0], vec![9.0], vec![1.0], vec![11.0]], 2, 2).unwrap();
        let fv = spatial_fisher_vector(&m, &lat, Normalization::default()).unwrap();
        assert_eq!(fv.len(), 6 + 4);
    }

    proptest! {
        #[test]
        fn duplicating_samples_is_invisible_after_power_l2(
            pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..6)
        ) {
            let m = two_by_three();
            let dup: Vec<Vec<f64>> = pts.iter().chain(&pts).cloned().collect();
            let a = fisher_vector(&m, &pts, Normalization::default()).unwrap();
            let b = fisher_vector(&m, &dup, Normalization::default()).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn clique_scores_sum_to_one_and_ignore_order(
            pts in prop::collection::vec(-5.0f64..15.0, 9),
            rot in 0usize..12,
        ) {
            let m = model(vec![0.3, 0.3, 0.4], vec![0.0, 5.0, 10.0], vec![1.0, 2.0, 1.0], 1);
            let lat = LatticeSampleSet::grid(pts.iter().map(|p| vec![*p]).collect(), 3, 3).unwrap();
            let s = spatial_clique_scores(&m, &lat).unwrap();
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mut cl = lat.cliques().to_vec();
            cl.rotate_left(rot);
            let shuffled = LatticeSampleSet::new(lat.samples().to_vec(), cl).unwrap();
            prop_assert_eq!(s, spatial_clique_scores(&m, &shuffled).unwrap());
        }

        #[test]
        fn score_matches_finite_differences(x in -2.0f64..2.0, y in -2.0f64..2.0) {
            // ω and σ blocks follow the derivative; the μ block is negated
            let w = [0.35, 0.65];
            let mu = [-0.5, 0.8];
            let sd = [0.9, 1.4];
            let xs = [[x], [y]];
            let ll = |w: [f64; 2], mu: [f64; 2], sd: [f64; 2]| {
                model(w.to_vec(), mu.to_vec(), sd.to_vec(), 1).log_likelihood(&xs).unwrap()
            };
            // the weights constructor enforces Σω = 1, so perturb via an unnormalized density
            let ll_w = |w: [f64; 2]| -> f64 {
                xs.iter().map(|p| {
                    (0..2).map(|i| w[i] * (-(p[0]-mu[i]).powi(2)/(2.0*sd[i]*sd[i])).exp()
                        / (sd[i] * (2.0*core::f64::consts::PI).sqrt())).sum::<f64>().ln()
                }).sum()
            };
            let u = fisher_score(&model(w.to_vec(), mu.to_vec(), sd.to_vec(), 1), &xs).unwrap();
            let h = 1e-5;
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-4 * a.abs().max(b.abs()).max(1.0);
            for i in 0..2 {
                let (mut p, mut q) = (w, w);
                p[i] += h; q[i] -= h;
                prop_assert!(close(u[i], (ll_w(p) - ll_w(q)) / (2.0 * h)));
                let (mut p, mut q) = (mu, mu);
                p[i] += h; q[i] -= h;
                prop_assert!(close(u[2 + i], -(ll(w, p, sd) - ll(w, q, sd)) / (2.0 * h)));
                let (mut p, mut q) = (sd, sd);
                p[i] += h; q[i] -= h;
                prop_assert!(close(u[4 + i], (ll(w, mu, p) - ll(w, mu, q)) / (2.0 * h)));
            }
        }
    }
}
