//! `run`: ingest, split, reference selection, features, learner, metrics.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use simkern_core::distance::{dtw, fisher_distance_discrete, js_divergence, minkowski, Distribution, Norm};
use simkern_core::learn::{logreg_train, svm_decision, svm_train, LogRegConfig, SvmConfig};
use simkern_core::selection::select_reference_set;
use simkern_core::session::{describe_session, generate_sessions, SessionRecord, SynthConfig, SERIES, SERIES_NAMES};
use simkern_core::simkernel::{fit_standardization, DistanceSpec, Graph, StandardizationStats};
use simkern_core::Matrix;

use crate::config::{
    DatasetConfig, DistanceKind, ExperimentConfig, FeatureKind, GraphKind, Learner, ModalitySpec, Selection,
};
use crate::error::{Error, Result, Stage};
use crate::formats::{self, sink};
use crate::par;
use crate::report::{eval_report, FeatureSummary, Report};

/// A session after truncation, with its descriptor precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionInstance {
    pub series: [Vec<f64>; SERIES],
    pub descriptor: Vec<f64>,
}

impl SessionInstance {
    pub fn new(s: &SessionRecord, truncate_at: usize) -> Result<Self> {
        let t = s.truncated(truncate_at)?;
        Ok(SessionInstance {
            series: t.all_series().clone(),
            descriptor: describe_session(s, truncate_at)?,
        })
    }
}

/// Six DTW modalities followed by the Euclidean descriptor distance.
pub fn session_specs() -> Vec<DistanceSpec<SessionInstance>> {
    let mut specs: Vec<DistanceSpec<SessionInstance>> = (0..SERIES)
        .map(|i| {
            DistanceSpec::new(
                format!("dtw_{}", SERIES_NAMES[i]),
                move |a: &SessionInstance, b: &SessionInstance| dtw(&a.series[i], &b.series[i]),
            )
        })
        .collect();
    specs.push(DistanceSpec::new(
        "descriptor_l2",
        |a: &SessionInstance, b: &SessionInstance| minkowski(&a.descriptor, &b.descriptor, Norm::L2),
    ));
    specs
}

pub fn modality_distance(kind: DistanceKind, a: &[f64], b: &[f64]) -> simkern_core::Result<f64> {
    match kind {
        DistanceKind::L1 => minkowski(a, b, Norm::L1),
        DistanceKind::L2 => minkowski(a, b, Norm::L2),
        DistanceKind::Js => js_divergence(&Distribution::from_weights(a)?, &Distribution::from_weights(b)?),
        DistanceKind::Fisher => {
            fisher_distance_discrete(&Distribution::from_weights(a)?, &Distribution::from_weights(b)?)
        }
    }
}

/// One spec per modality over slices of dense rows.
pub fn dense_specs(modalities: &[ModalitySpec], width: usize) -> Result<Vec<DistanceSpec<Vec<f64>>>> {
    modalities
        .iter()
        .map(|m| {
            let [lo, hi] = m.columns;
            if hi > width {
                return Err(Error::config(format!(
                    "modality `{}`: columns {lo}..{hi} exceed the {width} feature columns",
                    m.name
                )));
            }
            let kind = m.distance;
            Ok(DistanceSpec::new(m.name.clone(), move |a: &Vec<f64>, b: &Vec<f64>| {
                modality_distance(kind, &a[lo..hi], &b[lo..hi])
            })
            .with_scale(m.scale))
        })
        .collect()
}

pub fn graph_of(kind: GraphKind) -> Graph {
    match kind {
        GraphKind::Pairwise => Graph::Pairwise,
        GraphKind::Class => Graph::Class,
    }
}

/// Loaded instances with binary concept labels (`labels[i][c]`).
struct Dataset<T> {
    instances: Vec<T>,
    raw: Matrix,
    labels: Vec<Vec<bool>>,
    concepts: Vec<String>,
    specs: Vec<DistanceSpec<T>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: Report,
    pub concepts: Vec<String>,
    /// Dataset row index of every test instance.
    pub test_indices: Vec<usize>,
    /// Test scores, `scores[i][c]`.
    pub scores: Vec<Vec<f64>>,
    /// SHA-256 of the train and test feature matrices.
    pub feature_digest: String,
}

fn load_sessions(cfg: &ExperimentConfig) -> Result<Option<Dataset<SessionInstance>>> {
    let DatasetConfig::Sessions {
        synth,
        path,
        truncate_at,
        min_reports,
    } = &cfg.dataset
    else {
        return Ok(None);
    };
    let sessions = match (synth, path) {
        (Some(s), None) => generate_sessions(&SynthConfig {
            n_drop: s.n_drop,
            n_normal: s.n_normal,
            min_len: s.min_len,
            max_len: s.max_len,
            seed: cfg.seed,
        })?,
        (None, Some(p)) => formats::read_sessions_csv(p)?,
        _ => return Err(Error::config("sessions dataset needs exactly one of `synth` or `path`")),
    };
    let before = sessions.len();
    let sessions: Vec<SessionRecord> = sessions.into_iter().filter(|s| s.len() >= *min_reports).collect();
    if sessions.len() < before {
        log::warn!(
            "dropped {} sessions shorter than {min_reports} reports",
            before - sessions.len()
        );
    }
    let instances = par::try_map(&sessions, |s| SessionInstance::new(s, *truncate_at))?;
    let descriptors: Vec<Vec<f64>> = instances.iter().map(|i| i.descriptor.clone()).collect();
    Ok(Some(Dataset {
        raw: Matrix::from_rows(&descriptors)?,
        labels: sessions.iter().map(|s| vec![s.drop]).collect(),
        concepts: vec!["drop".to_owned()],
        specs: session_specs(),
        instances,
    }))
}

fn load_dense(cfg: &ExperimentConfig) -> Result<Option<Dataset<Vec<f64>>>> {
    let DatasetConfig::Dense {
        features,
        labels,
        modalities,
    } = &cfg.dataset
    else {
        return Ok(None);
    };
    let (_, raw) = formats::read_matrix_csv(features)?;
    let table = formats::read_labels_csv(labels)?;
    if table.rows.len() != raw.rows() {
        return Err(Error::data(format!(
            "{} feature rows but {} label rows",
            raw.rows(),
            table.rows.len()
        )));
    }
    Ok(Some(Dataset {
        instances: raw.iter_rows().map(<[f64]>::to_vec).collect(),
        specs: dense_specs(modalities, raw.cols())?,
        raw,
        labels: table.rows,
        concepts: table.concepts,
    }))
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut clock = Clock::new(opts.timings);
    if let Some(d) = load_sessions(cfg).stage("ingest")? {
        clock.lap("ingest");
        return execute(cfg, d, clock);
    }
    let d = load_dense(cfg).stage("ingest")?.expect("dataset is sessions or dense");
    clock.lap("ingest");
    execute(cfg, d, clock)
}

struct Clock {
    on: bool,
    last: Instant,
    laps: BTreeMap<String, f64>,
}

impl Clock {
    fn new(on: bool) -> Self {
        Clock {
            on,
            last: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        if self.on {
            let now = Instant::now();
            self.laps.insert(stage.to_owned(), (now - self.last).as_secs_f64());
            self.last = now;
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Seeded train/test split; both halves come back in ascending order.
pub fn split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng(seed, 1));
    let cut = ((n as f64 * train_fraction).round() as usize).clamp(1, n.saturating_sub(1));
    let (mut train, mut test) = (idx[..cut].to_vec(), idx[cut..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Positions (within `train`) of the reference set.
fn reference_set(cfg: &ExperimentConfig, train_labels: &[Vec<bool>]) -> Result<Vec<usize>> {
    let mut chosen = match &cfg.selection {
        Selection::Random => {
            let mut idx: Vec<usize> = (0..train_labels.len()).collect();
            idx.shuffle(&mut rng(cfg.seed, 2));
            idx
        }
        Selection::Rarity { p } => select_reference_set(train_labels, *p)?,
    };
    if let Some(s) = cfg.samples {
        if s > chosen.len() {
            return Err(Error::config(format!(
                "samples = {s} but only {} candidates are available",
                chosen.len()
            )));
        }
        chosen.truncate(s);
    }
    Ok(chosen)
}

/// Class representatives: half positives and half negatives of the first
/// concept where possible, drawn at random from the training set.
fn representatives(count: usize, train_labels: &[Vec<bool>], seed: u64) -> Result<Vec<usize>> {
    if count > train_labels.len() {
        return Err(Error::config(format!(
            "reps = {count} exceeds the {} training instances",
            train_labels.len()
        )));
    }
    let mut idx: Vec<usize> = (0..train_labels.len()).collect();
    idx.shuffle(&mut rng(seed, 3));
    let (pos, neg): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| train_labels[i][0]);
    let want_pos = count.div_ceil(2).min(pos.len());
    let want_neg = (count - want_pos).min(neg.len());
    let mut out: Vec<usize> = pos[..want_pos].iter().chain(&neg[..want_neg]).copied().collect();
    let extra = count - out.len();
    out.extend(pos[want_pos..].iter().take(extra));
    Ok(out)
}

fn digest(ms: &[&Matrix]) -> String {
    let mut h = Sha256::new();
    for m in ms {
        h.update((m.rows() as u64).to_le_bytes());
        h.update((m.cols() as u64).to_le_bytes());
        for v in m.as_slice() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn execute<T: Sync + Clone>(cfg: &ExperimentConfig, d: Dataset<T>, mut clock: Clock) -> Result<ExperimentOutput> {
    let n = d.instances.len();
    if n < 4 {
        return Err(Error::data(format!("{n} instances; at least 4 are needed")).with_context("ingest"));
    }
    let (train, test) = split(n, cfg.train_fraction, cfg.seed);
    let train_labels: Vec<Vec<bool>> = train.iter().map(|&i| d.labels[i].clone()).collect();
    for (c, name) in d.concepts.iter().enumerate() {
        let pos = train_labels.iter().filter(|r| r[c]).count();
        if pos == 0 || pos == train.len() {
            return Err(
                Error::data(format!("concept `{name}` has a single class in the training split")).with_context("split"),
            );
        }
    }
    let pick = |idx: &[usize]| -> Vec<T> { idx.iter().map(|&i| d.instances[i].clone()).collect() };
    let train_x = pick(&train);
    let test_x = pick(&test);
    clock.lap("split");

    let graph = graph_of(cfg.graph);
    let (f_train, f_test, summary) = match cfg.features {
        FeatureKind::Similarity => {
            let s_pos = reference_set(cfg, &train_labels).stage("selection")?;
            let samples: Vec<T> = s_pos.iter().map(|&p| train_x[p].clone()).collect();
            let reps: Vec<T> = match graph {
                Graph::Class => representatives(cfg.reps.unwrap_or(0), &train_labels, cfg.seed)
                    .stage("selection")?
                    .into_iter()
                    .map(|p| train_x[p].clone())
                    .collect(),
                Graph::Pairwise => Vec::new(),
            };
            clock.lap("selection");
            let d_train = par::distance_rows(&train_x, &samples, &reps, &d.specs, graph).stage("distances")?;
            let d_test = par::distance_rows(&test_x, &samples, &reps, &d.specs, graph).stage("distances")?;
            clock.lap("distances");
            let stats = fit_standardization(&d_train).stage("standardization")?;
            warn_degenerate(&stats);
            let summary = FeatureSummary {
                kind: "similarity".to_owned(),
                graph: format!("{:?}", cfg.graph).to_lowercase(),
                modalities: d.specs.iter().map(|s| s.name().to_owned()).collect(),
                samples: samples.len(),
                reps: reps.len(),
                columns: stats.columns(),
                degenerate_columns: stats.degenerate_columns().count(),
                train: train.len(),
                test: test.len(),
            };
            (
                stats.apply(&d_train).stage("standardization")?,
                stats.apply(&d_test).stage("standardization")?,
                summary,
            )
        }
        FeatureKind::Raw => {
            let r_train = d.raw.select_rows(&train);
            let r_test = d.raw.select_rows(&test);
            let stats = fit_standardization(&r_train).stage("standardization")?;
            warn_degenerate(&stats);
            let summary = FeatureSummary {
                kind: "raw".to_owned(),
                graph: "none".to_owned(),
                modalities: Vec::new(),
                samples: 0,
                reps: 0,
                columns: stats.columns(),
                degenerate_columns: stats.degenerate_columns().count(),
                train: train.len(),
                test: test.len(),
            };
            (
                stats.apply(&r_train).stage("standardization")?,
                stats.apply(&r_test).stage("standardization")?,
                summary,
            )
        }
    };
    clock.lap("features");
    let feature_digest = digest(&[&f_train, &f_test]);

    let mut scores = vec![Vec::with_capacity(d.concepts.len()); test.len()];
    match &cfg.learner {
        Learner::Svm {
            c,
            max_epochs,
            balanced,
        } => {
            let k_train = par::gram_matrix(&f_train).stage("kernel")?;
            let k_test = par::kernel_matrix(&f_test, &f_train).stage("kernel")?;
            clock.lap("kernel");
            for (ci, name) in d.concepts.iter().enumerate() {
                let y: Vec<i8> = train_labels.iter().map(|r| if r[ci] { 1 } else { -1 }).collect();
                let pos = y.iter().filter(|&&v| v > 0).count() as f64;
                let neg = y.len() as f64 - pos;
                let svm_cfg = SvmConfig {
                    c: *c,
                    max_epochs: *max_epochs,
                    class_weights: balanced.then(|| (y.len() as f64 / (2.0 * neg), y.len() as f64 / (2.0 * pos))),
                    ..SvmConfig::default()
                };
                let model = svm_train(&k_train, &y, &svm_cfg).stage("learner")?;
                if !model.converged {
                    log::warn!(
                        "svm for `{name}` stopped after {} epochs without converging",
                        model.epochs
                    );
                }
                for (row, s) in scores.iter_mut().zip(svm_decision(&model, &k_test).stage("predict")?) {
                    row.push(s);
                }
            }
        }
        Learner::Logreg { eta, epochs, l2 } => {
            let lr_cfg = LogRegConfig {
                eta: *eta,
                epochs: *epochs,
                l2: *l2,
            };
            for ci in 0..d.concepts.len() {
                let y: Vec<bool> = train_labels.iter().map(|r| r[ci]).collect();
                let model = logreg_train(&f_train, &y, &lr_cfg).stage("learner")?;
                for (row, s) in scores.iter_mut().zip(model.decisions(&f_test).stage("predict")?) {
                    row.push(s);
                }
            }
        }
    }
    clock.lap("learner");

    let targets: Vec<Vec<f64>> = test
        .iter()
        .map(|&i| d.labels[i].iter().map(|&b| f64::from(u8::from(b))).collect())
        .collect();
    let eval = eval_report(&scores, &targets, &d.concepts, &cfg.metrics, 0.0).stage("metrics")?;
    clock.lap("metrics");
    Ok(ExperimentOutput {
        report: Report {
            config_digest: cfg.digest(),
            per_concept: eval.per_concept,
            macro_avg: eval.macro_avg,
            timings: clock.laps,
            features: Some(summary),
        },
        concepts: d.concepts,
        test_indices: test,
        scores,
        feature_digest,
    })
}

fn warn_degenerate(stats: &StandardizationStats) {
    let n = stats.degenerate_columns().count();
    if n > 0 {
        log::warn!(
            "{n} of {} feature columns are constant on the training set; they are set to 0",
            stats.columns()
        );
    }
}

/// Writes `report.json` and `predictions.csv` into `dir`.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    formats::write_json(&mut *sink(Some(&dir.join("report.json")))?, &out.report)?;
    let mut w = csv::Writer::from_writer(sink(Some(&dir.join("predictions.csv")))?);
    let err = |e: csv::Error| Error::data(e.to_string());
    let mut header = vec!["instance".to_owned()];
    header.extend(out.concepts.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for (i, row) in out.test_indices.iter().zip(&out.scores) {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::data(e.to_string()))
}
