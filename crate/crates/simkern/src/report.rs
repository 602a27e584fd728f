//! Evaluation tables and the report document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use simkern_core::metrics::{
    average_precision, confusion_metrics, mean_absolute_error, roc_auc, root_mean_squared_error, LabeledScores,
};

use crate::config::Metric;
use crate::error::{Error, Result};

pub type MetricTable = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_concept: BTreeMap<String, MetricTable>,
    #[serde(rename = "macro")]
    pub macro_avg: MetricTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_digest: String,
    pub per_concept: BTreeMap<String, MetricTable>,
    #[serde(rename = "macro")]
    pub macro_avg: MetricTable,
    /// Wall-clock seconds per stage; only filled on request since it breaks
    /// byte-identical reruns.
    pub timings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub kind: String,
    pub graph: String,
    pub modalities: Vec<String>,
    pub samples: usize,
    pub reps: usize,
    pub columns: usize,
    pub degenerate_columns: usize,
    pub train: usize,
    pub test: usize,
}

/// Per-concept and macro-averaged metrics.
///
/// `predictions[i][c]` is the score of instance `i` for concept `c`, and
/// `targets` holds the truth in the same layout. Ranking and threshold metrics
/// read a target as positive when it is `> 0` and classify a score as positive
/// when it exceeds `threshold`; MAE and RMSE compare scores and targets as
/// numbers.
pub fn eval_report(
    predictions: &[Vec<f64>],
    targets: &[Vec<f64>],
    concepts: &[String],
    metrics: &[Metric],
    threshold: f64,
) -> Result<Evaluation> {
    if predictions.len() != targets.len() {
        return Err(Error::data(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::data("nothing to evaluate"));
    }
    if metrics.is_empty() {
        return Err(Error::config("no metrics requested"));
    }
    for (i, (p, t)) in predictions.iter().zip(targets).enumerate() {
        if p.len() != concepts.len() || t.len() != concepts.len() {
            return Err(Error::data(format!("row {i}: expected {} concepts", concepts.len())));
        }
    }
    let mut per_concept = BTreeMap::new();
    for (c, name) in concepts.iter().enumerate() {
        let scores: Vec<f64> = predictions.iter().map(|r| r[c]).collect();
        let truth: Vec<f64> = targets.iter().map(|r| r[c]).collect();
        let tag = |e: simkern_core::Error| Error::from(e).with_context(&format!("concept `{name}`"));
        let labeled = LabeledScores::new(scores.clone(), truth.iter().map(|&t| t > 0.0).collect()).map_err(tag)?;
        let confusion = confusion_metrics(&labeled, threshold).map_err(tag)?;
        let mut table = MetricTable::new();
        for &m in metrics {
            let v = match m {
                Metric::Auc => roc_auc(&labeled).map_err(tag)?,
                Metric::Ap => average_precision(&labeled).map_err(tag)?,
                Metric::Accuracy => confusion.accuracy,
                Metric::Precision => confusion.precision,
                Metric::Recall => confusion.recall,
                Metric::F1 => confusion.f_measure,
                Metric::Mae => mean_absolute_error(&scores, &truth).map_err(tag)?,
                Metric::Rmse => root_mean_squared_error(&scores, &truth).map_err(tag)?,
            };
            table.insert(m.name().to_owned(), v);
        }
        per_concept.insert(name.clone(), table);
    }
    let mut macro_avg = MetricTable::new();
    for &m in metrics {
        let sum: f64 = per_concept.values().map(|t: &MetricTable| t[m.name()]).sum();
        macro_avg.insert(m.name().to_owned(), sum / concepts.len() as f64);
    }
    Ok(Evaluation { per_concept, macro_avg })
}
