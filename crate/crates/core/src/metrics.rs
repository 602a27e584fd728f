//! Classification and ranking quality measures.
//!
//! Conventions: an entry is predicted positive when `score > threshold`;
//! tied scores contribute one half per positive/negative pair to ROC AUC;
//! AP ranks by descending score and keeps input order among ties.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::log2;

/// Scores paired with binary labels (`true` = positive).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Empty("labeled scores"));
        }
        crate::error::ensure_dim(scores.len(), labels.len())?;
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::NonFinite("scores"));
        }
        Ok(LabeledScores { scores, labels })
    }

    pub fn from_pairs(pairs: &[(f64, bool)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    /// Indices ordered by descending score, stable among ties.
    fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn confusion_metrics(scores: &LabeledScores, threshold: f64) -> Result<ConfusionMetrics> {
    if !threshold.is_finite() {
        return Err(Error::NonFinite("threshold"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.scores.iter().zip(&scores.labels) {
        match (s > threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let precision = ratio_or_zero(tp as f64, (tp + fp) as f64);
    let recall = ratio_or_zero(tp as f64, (tp + fn_) as f64);
    Ok(ConfusionMetrics {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        accuracy: (tp + tn) as f64 / scores.len() as f64,
        precision,
        recall,
        f_measure: ratio_or_zero(2.0 * precision * recall, precision + recall),
    })
}

/// Area under the ROC curve as the Mann-Whitney statistic.
///
/// Pairs are counted in integers (two per win, one per tie) so the result is
/// exactly `wins / (P * N)` with ties worth one half.
pub fn roc_auc(scores: &LabeledScores) -> Result<f64> {
    let p = scores.positives();
    let n = scores.negatives();
    if p == 0 || n == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores.scores[a].total_cmp(&scores.scores[b]));

    // Sweep ascending groups of equal score; each positive beats every
    // negative seen in earlier groups and ties with those in its own group.
    let mut twice_wins: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut start = 0;
    while start < idx.len() {
        let score = scores.scores[idx[start]];
        let mut end = start;
        let (mut pos, mut neg) = (0u128, 0u128);
        while end < idx.len() && scores.scores[idx[end]] == score {
            if scores.labels[idx[end]] {
                pos += 1;
            } else {
                neg += 1;
            }
            end += 1;
        }
        twice_wins += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        start = end;
    }
    Ok(twice_wins as f64 / (2.0 * p as f64 * n as f64))
}

/// Average precision over the descending-score ranking.
pub fn average_precision(scores: &LabeledScores) -> Result<f64> {
    let p = scores.positives();
    if p == 0 {
        return Err(Error::NoPositives);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in scores.ranking().iter().enumerate() {
        if scores.labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / p as f64)
}

/// Discounted cumulative gain: `rel(1) + Σ_{t>=2} rel(t) / log2(t)`.
pub fn dcg(relevances: &[f64]) -> f64 {
    relevances
        .iter()
        .enumerate()
        .map(|(i, &r)| if i == 0 { r } else { r / log2((i + 1) as f64) })
        .sum()
}

/// Normalized DCG of relevances listed in ranked order.
pub fn ndcg(relevances_in_rank_order: &[f64]) -> Result<f64> {
    if relevances_in_rank_order.is_empty() {
        return Err(Error::Empty("relevance list"));
    }
    if relevances_in_rank_order.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::param("relevance", "grades must be finite and non-negative"));
    }
    let mut ideal = relevances_in_rank_order.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        return Err(Error::ZeroIdealGain);
    }
    Ok(dcg(relevances_in_rank_order) / idcg)
}

pub fn mean_absolute_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    crate::error::ensure_dim(predictions.len(), targets.len())?;
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t).abs()).sum();
    Ok(sum / predictions.len() as f64)
}

pub fn root_mean_squared_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    crate::error::ensure_dim(predictions.len(), targets.len())?;
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(crate::math::sqrt(sum / predictions.len() as f64))
}
