//! Diagonal-covariance Gaussian mixtures trained by expectation maximization.
//!
//! Component log-densities are combined with the max-shift (log-sum-exp)
//! so memberships and likelihoods stay finite for samples arbitrarily far
//! from every mean.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_dim, Error, Result};
use crate::math::{fingerprint, log, log_sum_exp, sqrt};
use crate::matrix::Matrix;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Matrix,
    stdevs: Matrix,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Matrix, stdevs: Matrix) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::Empty("mixture components"));
        }
        ensure_dim(n, means.rows())?;
        ensure_dim(n, stdevs.rows())?;
        ensure_dim(means.cols(), stdevs.cols())?;
        if means.cols() == 0 {
            return Err(Error::param("means", "dimension must be positive"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::param("weights", "must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::param("weights", alloc::format!("sum to {total}, not 1")));
        }
        if means.as_slice().iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("means"));
        }
        if stdevs.as_slice().iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::param("stdevs", "must be positive and finite"));
        }
        Ok(GaussianMixture { weights, means, stdevs })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.cols()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &Matrix {
        &self.means
    }

    pub fn stdevs(&self) -> &Matrix {
        &self.stdevs
    }

    /// Number of free parameters `N(1 + 2d)`, also the Fisher vector length.
    pub fn parameter_count(&self) -> usize {
        self.n_components() * (1 + 2 * self.dim())
    }

    /// Stable identifier derived from the parameter bits.
    pub fn fingerprint(&self) -> u64 {
        fingerprint(
            self.weights
                .iter()
                .chain(self.means.as_slice())
                .chain(self.stdevs.as_slice())
                .copied(),
        )
    }

    /// `m_i(x) = ln ω_i + ln g_i(x)` for every component.
    pub fn component_log_densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        let d = self.dim() as f64;
        Ok((0..self.n_components())
            .map(|i| {
                let mu = self.means.row(i);
                let sd = self.stdevs.row(i);
                let mut quad = 0.0;
                let mut log_det = 0.0;
                for j in 0..x.len() {
                    let z = (x[j] - mu[j]) / sd[j];
                    quad += z * z;
                    log_det += log(sd[j]);
                }
                log(self.weights[i]) - 0.5 * d * LN_2PI - log_det - 0.5 * quad
            })
            .collect())
    }

    /// `ln Σ_i ω_i g_i(x)`.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        Ok(log_sum_exp(&self.component_log_densities(x)?))
    }

    /// Total log-likelihood of a sample set.
    pub fn log_likelihood<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<f64> {
        xs.iter().map(|x| self.log_pdf(x.as_ref())).sum()
    }

    fn memberships_row(&self, x: &[f64], out: &mut [f64]) -> Result<f64> {
        let m = self.component_log_densities(x)?;
        let lse = log_sum_exp(&m);
        for (o, mi) in out.iter_mut().zip(&m) {
            *o = crate::math::exp(mi - lse);
        }
        Ok(lse)
    }

    /// Index of the component with the largest membership; lowest index wins ties.
    pub fn hard_assign(&self, x: &[f64]) -> Result<usize> {
        let m = self.component_log_densities(x)?;
        let mut best = 0;
        for i in 1..m.len() {
            if m[i] > m[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// `T x N` matrix of membership probabilities; each row sums to one.
pub fn memberships<V: AsRef<[f64]>>(model: &GaussianMixture, xs: &[V]) -> Result<Matrix> {
    if xs.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let mut out = Matrix::zeros(xs.len(), model.n_components());
    for (t, x) in xs.iter().enumerate() {
        model.memberships_row(x.as_ref(), out.row_mut(t))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub components: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop when the log-likelihood gain falls below `tol * max(1, |LL|)`.
    pub tol: f64,
}

impl EmConfig {
    pub fn new(components: usize) -> Self {
        EmConfig {
            components,
            seed: 0,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: GaussianMixture,
    /// Log-likelihood of the initial model followed by one entry per M-step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of starved components that were re-seeded.
    pub reseeds: usize,
}

impl EmFit {
    pub fn final_loglik(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial likelihood")
    }
}

/// Relative variance floor applied per coordinate during EM.
pub const VARIANCE_FLOOR_REL: f64 = 1e-4;
/// Absolute lower bound on the variance floor.
pub const VARIANCE_FLOOR_ABS: f64 = 1e-8;
const STARVED_FRACTION: f64 = 1e-8;

struct DataStats {
    var: Vec<f64>,
    floor: Vec<f64>,
}

fn data_stats<V: AsRef<[f64]>>(xs: &[V], d: usize) -> DataStats {
    let t = xs.len() as f64;
    let mut mean = alloc::vec![0.0; d];
    for x in xs {
        for (m, v) in mean.iter_mut().zip(x.as_ref()) {
            *m += v / t;
        }
    }
    let mut var = alloc::vec![0.0; d];
    for x in xs {
        for j in 0..d {
            let c = x.as_ref()[j] - mean[j];
            var[j] += c * c / t;
        }
    }
    let floor = var
        .iter()
        .map(|v| (VARIANCE_FLOOR_REL * v).max(VARIANCE_FLOOR_ABS))
        .collect();
    DataStats { var, floor }
}

/// k-means++ seeding of the initial means.
fn seed_means<V: AsRef<[f64]>>(xs: &[V], n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let d = xs[0].as_ref().len();
    let mut means = Matrix::zeros(n, d);
    let first = rng.random_range(0..xs.len());
    means.row_mut(0).copy_from_slice(xs[first].as_ref());
    let mut nearest: Vec<f64> = xs.iter().map(|x| sq_dist(x.as_ref(), means.row(0))).collect();
    for k in 1..n {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = xs.len() - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..xs.len())
        };
        means.row_mut(k).copy_from_slice(xs[pick].as_ref());
        for (i, x) in xs.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(x.as_ref(), means.row(k)));
        }
    }
    means
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// E-step: memberships and the total log-likelihood.
fn e_step<V: AsRef<[f64]>>(model: &GaussianMixture, xs: &[V], gamma: &mut Matrix) -> Result<f64> {
    let mut ll = 0.0;
    for (t, x) in xs.iter().enumerate() {
        ll += model.memberships_row(x.as_ref(), gamma.row_mut(t))?;
    }
    Ok(ll)
}

/// Fits a diagonal GMM by EM.
///
/// Means are seeded k-means++ style, standard deviations start at the global
/// per-coordinate spread and weights are uniform. Variances never drop below
/// `max(1e-4 · global variance, 1e-8)`. A component whose total membership
/// falls under `1e-8 · T` is re-seeded at the sample the model explains worst.
pub fn em_fit<V: AsRef<[f64]>>(xs: &[V], config: &EmConfig) -> Result<EmFit> {
    let n = config.components;
    if n == 0 {
        return Err(Error::param("components", "must be positive"));
    }
    if xs.len() < n {
        return Err(Error::param(
            "components",
            alloc::format!("{} samples cannot support {n} components", xs.len()),
        ));
    }
    let d = xs[0].as_ref().len();
    if d == 0 {
        return Err(Error::param("samples", "dimension must be positive"));
    }
    for x in xs {
        ensure_dim(d, x.as_ref().len())?;
        if x.as_ref().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("samples"));
        }
    }
    if !(config.tol >= 0.0) {
        return Err(Error::param("tol", "must be non-negative"));
    }

    let t_count = xs.len();
    let stats = data_stats(xs, d);
    let init_sd: Vec<f64> = stats
        .var
        .iter()
        .zip(&stats.floor)
        .map(|(v, f)| sqrt(v.max(*f)))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let means = seed_means(xs, n, &mut rng);
    let mut stdevs = Matrix::zeros(n, d);
    for i in 0..n {
        stdevs.row_mut(i).copy_from_slice(&init_sd);
    }
    let mut model = GaussianMixture {
        weights: alloc::vec![1.0 / n as f64; n],
        means,
        stdevs,
    };

    let mut gamma = Matrix::zeros(t_count, n);
    let mut ll = e_step(&model, xs, &mut gamma)?;
    let mut trace = alloc::vec![ll];
    let mut iterations = 0;
    let mut converged = false;
    let mut reseeds = 0;

    while iterations < config.max_iter {
        let mut next = model.clone();
        let mut starved = Vec::new();
        for i in 0..n {
            let mass: f64 = (0..t_count).map(|t| gamma.get(t, i)).sum();
            if mass < STARVED_FRACTION * t_count as f64 {
                starved.push(i);
                continue;
            }
            let mut mu = alloc::vec![0.0; d];
            for (t, x) in xs.iter().enumerate() {
                let g = gamma.get(t, i);
                for (m, v) in mu.iter_mut().zip(x.as_ref()) {
                    *m += g * v;
                }
            }
            for m in &mut mu {
                *m /= mass;
            }
            let mut var = alloc::vec![0.0; d];
            for (t, x) in xs.iter().enumerate() {
                let g = gamma.get(t, i);
                for j in 0..d {
                    let c = x.as_ref()[j] - mu[j];
                    var[j] += g * c * c;
                }
            }
            next.means.row_mut(i).copy_from_slice(&mu);
            for j in 0..d {
                next.stdevs.set(i, j, sqrt((var[j] / mass).max(stats.floor[j])));
            }
            next.weights[i] = mass / t_count as f64;
        }
        if !starved.is_empty() {
            let worst = worst_explained(&model, xs)?;
            for &i in &starved {
                next.means.row_mut(i).copy_from_slice(xs[worst].as_ref());
                next.stdevs.row_mut(i).copy_from_slice(&init_sd);
                next.weights[i] = 1.0 / t_count as f64;
                reseeds += 1;
            }
            let total: f64 = next.weights.iter().sum();
            for w in &mut next.weights {
                *w /= total;
            }
        }
        model = next;
        iterations += 1;
        let new_ll = e_step(&model, xs, &mut gamma)?;
        if !new_ll.is_finite() {
            return Err(Error::NonFinite("log-likelihood"));
        }
        trace.push(new_ll);
        let gain = new_ll - ll;
        ll = new_ll;
        if starved.is_empty() && gain < config.tol * ll.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(EmFit {
        model,
        trace,
        iterations,
        converged,
        reseeds,
    })
}

fn worst_explained<V: AsRef<[f64]>>(model: &GaussianMixture, xs: &[V]) -> Result<usize> {
    let mut worst = 0;
    let mut worst_ll = f64::INFINITY;
    for (t, x) in xs.iter().enumerate() {
        let ll = model.log_pdf(x.as_ref())?;
        if ll < worst_ll {
            worst_ll = ll;
            worst = t;
        }
    }
    Ok(worst)
}

/// Gradient of the log-likelihood split into the weight, mean and stdev blocks.
///
/// The mean block uses the `(μ - x) / σ²` orientation; it is the negated
/// partial derivative. Fisher kernels are unaffected because each block enters
/// both arguments of the (diagonal) kernel with the same sign.
#[derive(Debug, Clone, PartialEq)]
pub struct LoglikGradient {
    pub weights: Vec<f64>,
    pub means: Matrix,
    pub stdevs: Matrix,
}

impl LoglikGradient {
    /// Concatenation `[ω | μ row-major | σ row-major]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.weights.len() + 2 * self.means.as_slice().len());
        v.extend_from_slice(&self.weights);
        v.extend_from_slice(self.means.as_slice());
        v.extend_from_slice(self.stdevs.as_slice());
        v
    }
}

pub fn loglik_gradient<V: AsRef<[f64]>>(model: &GaussianMixture, xs: &[V]) -> Result<LoglikGradient> {
    let (n, d) = (model.n_components(), model.dim());
    let mut grad = LoglikGradient {
        weights: alloc::vec![0.0; n],
        means: Matrix::zeros(n, d),
        stdevs: Matrix::zeros(n, d),
    };
    let mut gamma = alloc::vec![0.0; n];
    for x in xs {
        let x = x.as_ref();
        model.memberships_row(x, &mut gamma)?;
        for i in 0..n {
            let g = gamma[i];
            grad.weights[i] += g / model.weights[i];
            let mu = model.means.row(i);
            let sd = model.stdevs.row(i);
            for j in 0..d {
                let diff = x[j] - mu[j];
                let s = sd[j];
                let gm = grad.means.get(i, j) + g * (mu[j] - x[j]) / (s * s);
                grad.means.set(i, j, gm);
                let gs = grad.stdevs.get(i, j) + g * (diff * diff / (s * s * s) - 1.0 / s);
                grad.stdevs.set(i, j, gs);
            }
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand_distr::{Distribution as _, Normal};

    fn model_1d(weights: &[f64], means: &[f64], sds: &[f64]) -> GaussianMixture {
        let n = weights.len();
        GaussianMixture::new(
            weights.to_vec(),
            Matrix::from_vec(n, 1, means.to_vec()).unwrap(),
            Matrix::from_vec(n, 1, sds.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn normal_density(x: f64, mu: f64, sd: f64) -> f64 {
        (-(x - mu) * (x - mu) / (2.0 * sd * sd)).exp() / (sd * (2.0 * core::f64::consts::PI).sqrt())
    }

    #[test]
    fn standard_normal_at_zero() {
        let m = model_1d(&[1.0], &[0.0], &[1.0]);
        let expected = (1.0 / (2.0 * core::f64::consts::PI).sqrt()).ln();
        assert!((m.log_pdf(&[0.0]).unwrap() - expected).abs() < 1e-14);
        assert!((expected + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn log_pdf_is_permutation_invariant() {
        let a = model_1d(&[0.3, 0.7], &[-1.0, 2.0], &[0.5, 1.5]);
        let b = model_1d(&[0.7, 0.3], &[2.0, -1.0], &[1.5, 0.5]);
        for x in [-3.0, 0.0, 0.7, 5.0] {
            assert!((a.log_pdf(&[x]).unwrap() - b.log_pdf(&[x]).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn far_samples_stay_finite() {
        let m = model_1d(&[0.5, 0.5], &[0.0, 1.0], &[0.01, 0.01]);
        let lp = m.log_pdf(&[1e4]).unwrap();
        assert!(lp.is_finite());
        let g = memberships(&m, &[[1e4], [-1e4]]).unwrap();
        for row in g.iter_rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().any(|&v| v > 0.0));
        }
    }

    #[test]
    fn membership_examples() {
        let single = model_1d(&[1.0], &[3.0], &[2.0]);
        assert!(memberships(&single, &[[0.0], [10.0]])
            .unwrap()
            .as_slice()
            .iter()
            .all(|&g| g == 1.0));

        let twins = model_1d(&[0.5, 0.5], &[1.0, 1.0], &[1.0, 1.0]);
        for &g in memberships(&twins, &[[0.0], [-4.0]]).unwrap().as_slice() {
            assert!((g - 0.5).abs() < 1e-15);
        }

        let sep = model_1d(&[0.5, 0.5], &[0.0, 10.0], &[1.0, 1.0]);
        let g = memberships(&sep, &[[0.0]]).unwrap();
        let a = 0.5 * normal_density(0.0, 0.0, 1.0);
        let b = 0.5 * normal_density(0.0, 10.0, 1.0);
        assert!((g.get(0, 0) - a / (a + b)).abs() < 1e-14);
        assert!(g.get(0, 0) > 0.999);
        assert!(memberships(&sep, &Vec::<Vec<f64>>::new()).is_err());
    }

    #[test]
    fn constructor_rejects_invalid_parameters() {
        let m = |w: Vec<f64>, s: f64| {
            GaussianMixture::new(
                w.clone(),
                Matrix::zeros(w.len(), 1),
                Matrix::from_vec(w.len(), 1, vec![s; w.len()]).unwrap(),
            )
        };
        assert!(m(vec![0.5, 0.6], 1.0).is_err());
        assert!(m(vec![1.0, 0.0], 1.0).is_err());
        assert!(m(vec![1.0], 0.0).is_err());
        assert!(m(vec![1.0], 1.0).is_ok());
        assert_eq!(m(vec![0.5, 0.5], 1.0).unwrap().parameter_count(), 6);
    }

    #[test]
    fn single_component_is_closed_form() {
        let xs = vec![vec![1.0, 2.0], vec![3.0, -2.0], vec![5.0, 3.0]];
        let fit = em_fit(
            &xs,
            &EmConfig {
                max_iter: 1,
                ..EmConfig::new(1)
            },
        )
        .unwrap();
        let m = &fit.model;
        assert_eq!(m.weights(), &[1.0]);
        assert!((m.means().get(0, 0) - 3.0).abs() < 1e-14);
        assert!((m.means().get(0, 1) - 1.0).abs() < 1e-14);
        let var0 = (4.0 + 0.0 + 4.0) / 3.0;
        let var1 = (1.0 + 9.0 + 4.0) / 3.0;
        assert!((m.stdevs().get(0, 0) - f64::sqrt(var0)).abs() < 1e-14);
        assert!((m.stdevs().get(0, 1) - f64::sqrt(var1)).abs() < 1e-14);
    }

    #[test]
    fn identical_points_hit_the_floor() {
        let xs = vec![vec![2.5]; 10];
        let fit = em_fit(&xs, &EmConfig::new(1)).unwrap();
        assert_eq!(fit.model.stdevs().get(0, 0), VARIANCE_FLOOR_ABS.sqrt());
        assert!(fit.final_loglik().is_finite());
    }

    #[test]
    fn separated_clusters_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut xs = Vec::new();
        for i in 0..300 {
            let c = if i < 100 { 0.0 } else { 100.0 };
            xs.push(vec![c + noise.sample(&mut rng)]);
        }
        // oracle: per-cluster sample statistics
        let mean_a = xs[..100].iter().map(|x| x[0]).sum::<f64>() / 100.0;
        let mean_b = xs[100..].iter().map(|x| x[0]).sum::<f64>() / 200.0;
        let fit = em_fit(
            &xs,
            &EmConfig {
                seed: 5,
                ..EmConfig::new(2)
            },
        )
        .unwrap();
        let m = &fit.model;
        let (lo, hi) = if m.means().get(0, 0) < m.means().get(1, 0) {
            (0, 1)
        } else {
            (1, 0)
        };
        assert!((m.means().get(lo, 0) - mean_a).abs() < 1e-6);
        assert!((m.means().get(hi, 0) - mean_b).abs() < 1e-6);
        assert!((m.means().get(lo, 0)).abs() < 0.5 && (m.means().get(hi, 0) - 100.0).abs() < 0.5);
        assert!((m.weights()[lo] - 1.0 / 3.0).abs() < 1e-6);
        assert!(fit.converged);
    }

    #[test]
    fn em_is_deterministic_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random::<f64>() * 4.0, rng.random::<f64>()])
            .collect();
        let cfg = EmConfig {
            seed: 9,
            ..EmConfig::new(3)
        };
        let a = em_fit(&xs, &cfg).unwrap();
        let b = em_fit(&xs, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.trace, b.trace);
        for w in a.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8);
        }
    }

    #[test]
    fn em_rejects_too_few_samples() {
        let xs = vec![vec![1.0], vec![2.0]];
        assert!(em_fit(&xs, &EmConfig::new(3)).is_err());
        assert!(em_fit(&xs, &EmConfig::new(0)).is_err());
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let xs = vec![vec![1.0, 0.0], vec![2.0, 4.0], vec![6.0, 2.0]];
        let fit = em_fit(
            &xs,
            &EmConfig {
                max_iter: 1,
                ..EmConfig::new(1)
            },
        )
        .unwrap();
        let g = loglik_gradient(&fit.model, &xs).unwrap();
        for v in g.means.as_slice().iter().chain(g.stdevs.as_slice()) {
            assert!(v.abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn mean_gradient_zero_at_the_mean() {
        let m = model_1d(&[0.4, 0.6], &[1.0, -2.0], &[1.0, 0.5]);
        let g = loglik_gradient(&m, &[[1.0]]).unwrap();
        assert_eq!(g.means.get(0, 0), 0.0);
        assert_ne!(g.means.get(1, 0), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = model_1d(&[0.3, 0.7], &[-1.0, 1.5], &[0.8, 1.2]);
        let xs = [[-1.2], [0.3], [2.0], [1.1]];
        let g = loglik_gradient(&m, &xs).unwrap();
        let ll = |w: &[f64], mu: &[f64], sd: &[f64]| -> f64 {
            xs.iter()
                .map(|x| {
                    w.iter()
                        .zip(mu)
                        .zip(sd)
                        .map(|((w, mu), sd)| w * normal_density(x[0], *mu, *sd))
                        .sum::<f64>()
                        .ln()
                })
                .sum()
        };
        let h = 1e-5;
        let (w, mu, sd) = ([0.3, 0.7], [-1.0, 1.5], [0.8, 1.2]);
        for i in 0..2 {
            let (mut wp, mut wm) = (w, w);
            wp[i] += h;
            wm[i] -= h;
            let fd = (ll(&wp, &mu, &sd) - ll(&wm, &mu, &sd)) / (2.0 * h);
            assert!((g.weights[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0));
            let (mut mp, mut mm) = (mu, mu);
            mp[i] += h;
            mm[i] -= h;
            let fd = (ll(&w, &mp, &sd) - ll(&w, &mm, &sd)) / (2.0 * h);
            // printed orientation is the negated derivative
            assert!((g.means.get(i, 0) + fd).abs() <= 1e-6 * fd.abs().max(1.0));
            let (mut sp, mut sm) = (sd, sd);
            sp[i] += h;
            sm[i] -= h;
            let fd = (ll(&w, &mu, &sp) - ll(&w, &mu, &sm)) / (2.0 * h);
            assert!((g.stdevs.get(i, 0) - fd).abs() <= 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn hard_assignment_prefers_lowest_index_on_ties() {
        let twins = model_1d(&[0.5, 0.5], &[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(twins.hard_assign(&[0.0]).unwrap(), 0);
    }
}
