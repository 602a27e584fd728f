//! Reference-set selection and modality weight search.

use alloc::vec::Vec;

use crate::error::{ensure_dim, Error, Result};
use crate::math::dot;
use crate::metrics::{roc_auc, LabeledScores};

/// Instances ranked by concept rarity, highest first.
///
/// The score of an instance is `Σ 1/freq(c)` over its positive concepts; ties
/// go to the lower instance index.
pub fn rarity_ranking(labels: &[Vec<bool>]) -> Result<Vec<usize>> {
    let freq = concept_frequencies(labels)?;
    let score = |row: &Vec<bool>| -> f64 {
        row.iter()
            .zip(&freq)
            .filter(|(pos, _)| **pos)
            .map(|(_, f)| 1.0 / *f as f64)
            .sum()
    };
    let scores: Vec<f64> = labels.iter().map(score).collect();
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order)
}

fn concept_frequencies(labels: &[Vec<bool>]) -> Result<Vec<usize>> {
    let first = labels.first().ok_or(Error::Empty("training set"))?;
    let mut freq = alloc::vec![0usize; first.len()];
    for row in labels {
        ensure_dim(freq.len(), row.len())?;
        for (f, &pos) in freq.iter_mut().zip(row) {
            *f += usize::from(pos);
        }
    }
    Ok(freq)
}

/// Shortest prefix of the rarity ranking in which every concept has at least
/// `min(⌈p·N⌉, freq)` positives, `N` being the number of training instances.
///
/// Instances are returned in ranking order.
pub fn select_reference_set(labels: &[Vec<bool>], p: f64) -> Result<Vec<usize>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", "must lie in (0, 1]"));
    }
    let freq = concept_frequencies(labels)?;
    if freq.iter().all(|&f| f == 0) {
        return Err(Error::NoPositives);
    }
    let quota = libm::ceil(p * labels.len() as f64) as usize;
    let target: Vec<usize> = freq.iter().map(|&f| f.min(quota)).collect();
    let mut have = alloc::vec![0usize; freq.len()];
    let mut missing = target.iter().filter(|&&t| t > 0).count();
    let mut chosen = Vec::new();
    for i in rarity_ranking(labels)? {
        if missing == 0 {
            break;
        }
        chosen.push(i);
        for (c, &pos) in labels[i].iter().enumerate() {
            if pos {
                have[c] += 1;
                if have[c] == target[c] {
                    missing -= 1;
                }
            }
        }
    }
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSearch {
    pub weights: Vec<f64>,
    pub auc: f64,
    /// Position of the winner in the candidate grid.
    pub index: usize,
    /// AUC of every candidate, in grid order.
    pub aucs: Vec<f64>,
}

/// Brute-force search for the modality weights that best separate
/// same-topic pairs from different-topic pairs.
///
/// Every pair is a vector of per-modality distances; a candidate scores a pair
/// by `-Σ w_k d_k`, so closer pairs rank as more likely same-topic.
pub fn search_modality_weights(
    same_topic: &[Vec<f64>],
    different_topic: &[Vec<f64>],
    grid: &[Vec<f64>],
) -> Result<WeightSearch> {
    if grid.is_empty() {
        return Err(Error::Empty("weight grid"));
    }
    if same_topic.is_empty() || different_topic.is_empty() {
        return Err(Error::Empty("pair class"));
    }
    let k = grid[0].len();
    for v in grid.iter().chain(same_topic).chain(different_topic) {
        ensure_dim(k, v.len())?;
    }
    let labels: Vec<bool> = same_topic
        .iter()
        .map(|_| true)
        .chain(different_topic.iter().map(|_| false))
        .collect();
    let mut aucs = Vec::with_capacity(grid.len());
    for w in grid {
        let scores = same_topic.iter().chain(different_topic).map(|d| -dot(w, d)).collect();
        aucs.push(roc_auc(&LabeledScores::new(scores, labels.clone())?)?);
    }
    let mut index = 0;
    for (i, a) in aucs.iter().enumerate() {
        if *a > aucs[index] {
            index = i;
        }
    }
    Ok(WeightSearch {
        weights: grid[index].clone(),
        auc: aucs[index],
        index,
        aucs,
    })
}

/// All weight vectors on the simplex with coordinates in steps of `1/steps`.
pub fn simplex_grid(modalities: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, prefix: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            rec(left - c, slots - 1, prefix, steps, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modalities > 0 && steps > 0 {
        rec(steps, modalities, &mut Vec::new(), steps, &mut out);
    }
    out
}
