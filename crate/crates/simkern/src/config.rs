//! Experiment configuration for the `run` subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default = "default_graph")]
    pub graph: GraphKind,
    #[serde(default = "default_features")]
    pub features: FeatureKind,
    /// Reference set size |S| (random selection) or cap on the rarity prefix.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Class representatives |R|; class graph only.
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub learner: Learner,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub seed: u64,
    /// Directory receiving `report.json` and `predictions.csv`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    Sessions {
        #[serde(default)]
        synth: Option<SynthSpec>,
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        truncate_at: usize,
        /// Sessions shorter than this (before truncation) are discarded.
        #[serde(default = "default_min_reports")]
        min_reports: usize,
    },
    Dense {
        features: PathBuf,
        labels: PathBuf,
        modalities: Vec<ModalitySpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_drop: usize,
    pub n_normal: usize,
    #[serde(default = "default_min_len")]
    pub min_len: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalitySpec {
    pub name: String,
    /// Half-open column range `[start, end)` of the feature CSV.
    pub columns: [usize; 2],
    pub distance: DistanceKind,
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    L1,
    L2,
    /// Jensen-Shannon divergence of the row slice normalized to sum 1.
    Js,
    /// Fisher (Bhattacharyya angle) distance of the normalized row slice.
    Fisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Pairwise,
    Class,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Standardized distances to the reference set.
    Similarity,
    /// Z-scored raw vectors: session descriptors or the dense feature CSV.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase", deny_unknown_fields)]
pub enum Selection {
    #[default]
    Random,
    Rarity {
        p: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Learner {
    Svm {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "default_svm_epochs")]
        max_epochs: usize,
        /// Scale C per class by inverse class frequency.
        #[serde(default)]
        balanced: bool,
    },
    Logreg {
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_lr_epochs")]
        epochs: usize,
        #[serde(default)]
        l2: f64,
    },
}

impl Default for Learner {
    fn default() -> Self {
        Learner::Svm {
            c: 1.0,
            max_epochs: default_svm_epochs(),
            balanced: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    Ap,
    Accuracy,
    Precision,
    Recall,
    F1,
    Mae,
    Rmse,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Ap => "ap",
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Mae => "mae",
            Metric::Rmse => "rmse",
        }
    }
}

fn default_graph() -> GraphKind {
    GraphKind::Pairwise
}
fn default_features() -> FeatureKind {
    FeatureKind::Similarity
}
fn default_train_fraction() -> f64 {
    0.7
}
fn default_metrics() -> Vec<Metric> {
    vec![Metric::Auc, Metric::Ap]
}
fn default_min_reports() -> usize {
    15
}
fn default_min_len() -> usize {
    15
}
fn default_max_len() -> usize {
    60
}
fn default_svm_epochs() -> usize {
    1000
}
fn default_eta() -> f64 {
    0.5
}
fn default_lr_epochs() -> usize {
    2000
}
fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let cfg = cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Makes relative dataset paths relative to `base`.
    pub fn resolve_paths(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetConfig::Sessions { path, .. } => {
                if let Some(p) = path {
                    fix(p);
                }
            }
            DatasetConfig::Dense { features, labels, .. } => {
                fix(features);
                fix(labels);
            }
        }
        if let Some(p) = &mut self.output_dir {
            fix(p);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        if self.metrics.is_empty() {
            return Err(Error::config("metrics must not be empty"));
        }
        match &self.dataset {
            DatasetConfig::Sessions {
                synth,
                path,
                min_reports,
                truncate_at,
            } => {
                match (synth, path) {
                    (Some(_), Some(_)) | (None, None) => {
                        return Err(Error::config("sessions dataset needs exactly one of `synth` or `path`"))
                    }
                    (None, Some(p)) if !p.exists() => {
                        return Err(Error::config(format!("{}: file not found", p.display())))
                    }
                    _ => {}
                }
                if *min_reports < truncate_at + 2 {
                    return Err(Error::config("min_reports must exceed truncate_at by at least 2"));
                }
            }
            DatasetConfig::Dense {
                features,
                labels,
                modalities,
            } => {
                for p in [features, labels] {
                    if !p.exists() {
                        return Err(Error::config(format!("{}: file not found", p.display())));
                    }
                }
                if modalities.is_empty() {
                    return Err(Error::config("dense dataset declares no modalities"));
                }
                for m in modalities {
                    if m.columns[0] >= m.columns[1] {
                        return Err(Error::config(format!("modality `{}`: empty column range", m.name)));
                    }
                    if !(m.scale > 0.0) || !m.scale.is_finite() {
                        return Err(Error::config(format!("modality `{}`: scale must be positive", m.name)));
                    }
                }
            }
        }
        match &self.selection {
            Selection::Random if self.samples.is_none() && self.features == FeatureKind::Similarity => {
                return Err(Error::config("random selection needs `samples`"));
            }
            Selection::Rarity { p } if !(*p > 0.0 && *p <= 1.0) => {
                return Err(Error::config("selection.p must lie in (0, 1]"));
            }
            _ => {}
        }
        if self.samples == Some(0) {
            return Err(Error::config("samples must be positive"));
        }
        if self.graph == GraphKind::Class
            && self.features == FeatureKind::Similarity
            && !matches!(self.reps, Some(r) if r > 0)
        {
            return Err(Error::config("class graph needs a positive `reps`"));
        }
        match &self.learner {
            Learner::Svm { c, .. } if !(*c > 0.0) || !c.is_finite() => Err(Error::config("svm C must be positive")),
            Learner::Logreg { eta, l2, .. } if !(*eta > 0.0) || !(*l2 >= 0.0) => {
                Err(Error::config("logreg needs eta > 0 and l2 >= 0"))
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 over the canonical JSON of the config, seed included and
    /// output directory excluded.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(&ExperimentConfig {
            output_dir: None,
            ..self.clone()
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
