//! Command-line surface. `main` parses [`Cli`] and calls [`execute`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use simkern_core::bicluster::{cocluster_restarts, CoclusterConfig, ContingencyMatrix};
use simkern_core::distance::dtw;
use simkern_core::fisher::{fisher_vector, Normalization, DEFAULT_POWER};
use simkern_core::gmm::{em_fit, EmConfig};
use simkern_core::learn::{svm_decision, svm_train, BiasMode, SvmConfig};
use simkern_core::selection::{rarity_ranking, search_modality_weights, select_reference_set, simplex_grid};
use simkern_core::session::{generate_sessions, SynthConfig};
use simkern_core::simkernel::fit_standardization;
use simkern_core::Matrix;

use crate::config::{DistanceKind, ExperimentConfig, GraphKind, Metric, ModalitySpec};
use crate::error::{Error, Result, Stage};
use crate::formats::{self, sink, write_json, write_matrix, GmmFile, GmmMeta, MatrixFormat, SvmFile};
use crate::par;
use crate::pipeline::{self, dense_specs, graph_of, RunOptions};
use crate::report::eval_report;

#[derive(Debug, Parser)]
#[command(
    name = "simkern",
    version,
    about = "Multimodal similarity kernels, Fisher vectors and co-clustering"
)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (directory for `bicluster` and `run`); stdout when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a diagonal GMM by EM to the rows of a CSV.
    GmmTrain(GmmTrainArgs),
    /// Fisher vectors of row groups under a trained GMM.
    Fisher(FisherArgs),
    /// Standardized distances to a reference set.
    SimkernelFeatures(FeatureArgs),
    /// Train a kernel SVM for one concept.
    SvmTrain(SvmTrainArgs),
    /// Score a test-by-train kernel with a trained SVM.
    Predict(PredictArgs),
    /// Per-concept and macro metrics of a prediction table.
    Eval(EvalArgs),
    /// Information-theoretic co-clustering of a count matrix.
    Bicluster(BiclusterArgs),
    /// Pairwise DTW distances between series.
    Dtw(DtwArgs),
    /// Generate synthetic session records.
    SynthSessions(SynthArgs),
    /// Rarity-ranked reference set from a label table.
    SelectRefset(RefsetArgs),
    /// Grid search for modality weights separating pair classes.
    WeightSearch(WeightSearchArgs),
    /// Run a configured end-to-end experiment.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct GmmTrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short = 'n')]
    pub components: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    None,
    Power,
    L2,
    Both,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV whose first column `instance` groups rows into one set each.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = NormArg::Both)]
    pub normalization: NormArg,
    #[arg(long, default_value_t = DEFAULT_POWER)]
    pub alpha: f64,
    /// Emit the Fisher kernel Gram matrix instead of the vectors.
    #[arg(long)]
    pub kernel: bool,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    /// Training rows: reference samples and standardization come from here.
    #[arg(long)]
    pub train: PathBuf,
    /// Rows to featurize with the training statistics (default: the training rows).
    #[arg(long)]
    pub apply: Option<PathBuf>,
    /// Modality as `name:start:end:distance[:scale]` over columns `[start, end)`.
    #[arg(long = "modality", required = true)]
    pub modalities: Vec<String>,
    /// Reference set size, drawn at random from the training rows.
    #[arg(long)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = GraphKind::Pairwise)]
    pub graph: GraphKind,
    /// Class representatives for the class graph.
    #[arg(long, default_value_t = 0)]
    pub reps: usize,
    /// Emit the linear similarity kernel (rows: applied, cols: train) instead.
    #[arg(long)]
    pub kernel: bool,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
}

#[derive(Debug, Args)]
pub struct SvmTrainArgs {
    /// Square training kernel (CSV or .bin with sidecar).
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Label column; defaults to the first.
    #[arg(long)]
    pub concept: Option<String>,
    #[arg(long, short = 'c', default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub no_bias: bool,
    /// Scale C by inverse class frequency.
    #[arg(long)]
    pub balanced: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test-by-train kernel.
    #[arg(long)]
    pub kernel: PathBuf,
    /// Header of the score column.
    #[arg(long, default_value = "score")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score table; an `instance` column is ignored.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Targets with the same concept columns.
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Metric::Auc, Metric::Ap])]
    pub metrics: Vec<Metric>,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct BiclusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short = 'k')]
    pub row_clusters: usize,
    #[arg(long, short = 'l')]
    pub col_clusters: usize,
    /// Weight of the external row distance.
    #[arg(long, default_value_t = 0.0)]
    pub w: f64,
    /// Square row-by-row distance matrix used when `w > 0`.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct DtwArgs {
    /// One comma-separated series per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Second set of series; default compares `input` with itself.
    #[arg(long)]
    pub against: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub drops: usize,
    #[arg(long)]
    pub normals: usize,
    #[arg(long, default_value_t = 15)]
    pub min_len: usize,
    #[arg(long, default_value_t = 60)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct RefsetArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, short = 'p')]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct WeightSearchArgs {
    /// Per-modality distances of same-topic pairs, one pair per row.
    #[arg(long)]
    pub same: PathBuf,
    #[arg(long)]
    pub different: PathBuf,
    /// Candidate weight vectors, one per row; default is a simplex grid.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Record per-stage wall-clock times in the report.
    #[arg(long)]
    pub timings: bool,
}

/// Runs the parsed command on a pool of `--threads` workers.
pub fn execute(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::config("--threads must be positive"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::config(e.to_string()))?;
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.output.as_deref();
    match &cli.command {
        Command::GmmTrain(a) => gmm_train(a, seed, out).stage("gmm-train"),
        Command::Fisher(a) => fisher(a, out).stage("fisher"),
        Command::SimkernelFeatures(a) => features(a, seed, out).stage("simkernel-features"),
        Command::SvmTrain(a) => svm_train_cmd(a, out).stage("svm-train"),
        Command::Predict(a) => predict(a, out).stage("predict"),
        Command::Eval(a) => eval(a, out).stage("eval"),
        Command::Bicluster(a) => bicluster(a, seed, out).stage("bicluster"),
        Command::Dtw(a) => dtw_cmd(a, out).stage("dtw"),
        Command::SynthSessions(a) => synth(a, seed, out).stage("synth-sessions"),
        Command::SelectRefset(a) => refset(a, out).stage("select-refset"),
        Command::WeightSearch(a) => weight_search(a, out).stage("weight-search"),
        Command::Run(a) => run(a, cli.seed, out),
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    write_json(&mut *sink(out)?, value)
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn gmm_train(a: &GmmTrainArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let (_, x) = formats::read_matrix(&a.input)?;
    let fit = em_fit(
        &rows_of(&x),
        &EmConfig {
            components: a.components,
            seed,
            max_iter: a.max_iter,
            tol: a.tol,
        },
    )?;
    if !fit.converged {
        log::warn!("EM stopped after {} iterations without converging", fit.iterations);
    }
    if fit.reseeds > 0 {
        log::warn!("{} starved components were re-seeded", fit.reseeds);
    }
    let meta = GmmMeta {
        seed,
        iterations: fit.iterations,
        final_loglik: fit.final_loglik(),
    };
    emit(out, &GmmFile::from_model(&fit.model, meta))
}

fn normalization(a: &FisherArgs) -> Normalization {
    match a.normalization {
        NormArg::None => Normalization::None,
        NormArg::Power => Normalization::Power(a.alpha),
        NormArg::L2 => Normalization::L2,
        NormArg::Both => Normalization::Both(a.alpha),
    }
}

/// Groups rows by the leading `instance` column, in order of first appearance.
fn group_rows(header: &[String], m: &Matrix) -> Result<(Vec<String>, Vec<Vec<Vec<f64>>>)> {
    if header.first().map(String::as_str) != Some("instance") || m.cols() < 2 {
        return Err(Error::data(
            "first column must be `instance`, followed by the descriptor",
        ));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut index: BTreeMap<u64, usize> = BTreeMap::new();
    for row in m.iter_rows() {
        let id = row[0];
        if id < 0.0 || id.fract() != 0.0 {
            return Err(Error::data(format!("instance id {id} is not a non-negative integer")));
        }
        let g = *index.entry(id as u64).or_insert_with(|| {
            ids.push((id as u64).to_string());
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(row[1..].to_vec());
    }
    Ok((ids, groups))
}

fn fisher(a: &FisherArgs, out: Option<&Path>) -> Result<()> {
    let model: GmmFile = formats::read_json(&a.model)?;
    let model = model.to_model()?;
    let (header, m) = formats::read_matrix(&a.input)?;
    let (ids, groups) = group_rows(&header, &m)?;
    let how = normalization(a);
    let vectors = par::try_map(&groups, |g| Ok(fisher_vector(&model, g, how)?))?;
    let meta = serde_json::json!({ "instances": ids, "provenance": format!("{:016x}", model.fingerprint()) });
    if a.kernel {
        let f = Matrix::from_rows(&vectors.iter().map(|v| v.values.clone()).collect::<Vec<_>>())?;
        let k = par::gram_matrix(&f)?;
        write_matrix(out, &ids, &k, a.format, meta)
    } else {
        let len = vectors.first().map_or(0, |v| v.len());
        let header: Vec<String> = (0..len).map(|i| format!("fv_{i}")).collect();
        let f = Matrix::from_vec(vectors.len(), len, vectors.into_iter().flat_map(|v| v.values).collect())?;
        write_matrix(out, &header, &f, a.format, meta)
    }
}

/// Parses `name:start:end:distance[:scale]`.
pub fn parse_modality(s: &str) -> Result<ModalitySpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::config(format!("modality `{s}`: expected name:start:end:distance[:scale]"));
    if !(4..=5).contains(&parts.len()) {
        return Err(bad());
    }
    let start: usize = parts[1].parse().map_err(|_| bad())?;
    let end: usize = parts[2].parse().map_err(|_| bad())?;
    let distance = DistanceKind::from_str(parts[3], true).map_err(|_| bad())?;
    let scale = match parts.get(4) {
        Some(v) => v.parse().map_err(|_| bad())?,
        None => 1.0,
    };
    if start >= end || !(scale > 0.0) {
        return Err(bad());
    }
    Ok(ModalitySpec {
        name: parts[0].to_owned(),
        columns: [start, end],
        distance,
        scale,
    })
}

fn features(a: &FeatureArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let modalities = a
        .modalities
        .iter()
        .map(|m| parse_modality(m))
        .collect::<Result<Vec<_>>>()?;
    let (_, train) = formats::read_matrix(&a.train)?;
    let specs = dense_specs(&modalities, train.cols())?;
    let train_rows = rows_of(&train);
    if a.samples == 0 || a.samples > train_rows.len() {
        return Err(Error::config(format!("--samples must lie in 1..={}", train_rows.len())));
    }
    let graph = graph_of(a.graph);
    if a.graph == GraphKind::Class && (a.reps == 0 || a.reps > train_rows.len()) {
        return Err(Error::config("class graph needs --reps within the training size"));
    }
    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let samples: Vec<Vec<f64>> = order[..a.samples].iter().map(|&i| train_rows[i].clone()).collect();
    let reps: Vec<Vec<f64>> = match a.graph {
        GraphKind::Class => order
            .iter()
            .rev()
            .take(a.reps)
            .map(|&i| train_rows[i].clone())
            .collect(),
        GraphKind::Pairwise => Vec::new(),
    };
    let d_train = par::distance_rows(&train_rows, &samples, &reps, &specs, graph)?;
    let stats = fit_standardization(&d_train)?;
    let degenerate: Vec<usize> = stats.degenerate_columns().collect();
    if !degenerate.is_empty() {
        log::warn!("{} constant feature columns are set to 0", degenerate.len());
    }
    let f_train = stats.apply(&d_train)?;
    let f_out = match &a.apply {
        Some(p) => {
            let (_, x) = formats::read_matrix(p)?;
            if x.cols() != train.cols() {
                return Err(Error::data(format!(
                    "{}: expected {} columns",
                    p.display(),
                    train.cols()
                )));
            }
            stats.apply(&par::distance_rows(&rows_of(&x), &samples, &reps, &specs, graph)?)?
        }
        None => f_train.clone(),
    };
    let meta = serde_json::json!({
        "graph": a.graph,
        "modalities": modalities.iter().map(|m| &m.name).collect::<Vec<_>>(),
        "samples": order[..a.samples],
        "standardization": format!("{:016x}", stats.digest()),
        "degenerate_columns": degenerate,
    });
    if a.kernel {
        let k = par::kernel_matrix(&f_out, &f_train)?;
        let header: Vec<String> = (0..k.cols()).map(|j| format!("train_{j}")).collect();
        write_matrix(out, &header, &k, a.format, meta)
    } else {
        let names: Vec<&str> = specs.iter().map(|s| s.name()).collect();
        let mut header = Vec::with_capacity(f_out.cols());
        for i in 0..samples.len() {
            match a.graph {
                GraphKind::Pairwise => header.extend(names.iter().map(|k| format!("s{i}_{k}"))),
                GraphKind::Class => {
                    for j in 0..reps.len() {
                        header.extend(names.iter().map(|k| format!("s{i}_r{j}_{k}")));
                    }
                }
            }
        }
        write_matrix(out, &header, &f_out, a.format, meta)
    }
}

fn concept_column(table: &formats::LabelTable, name: Option<&str>) -> Result<usize> {
    match name {
        Some(n) => table.concept_index(n),
        None if !table.concepts.is_empty() => Ok(0),
        None => Err(Error::data("label table has no columns")),
    }
}

fn svm_train_cmd(a: &SvmTrainArgs, out: Option<&Path>) -> Result<()> {
    let (_, k) = formats::read_matrix(&a.kernel)?;
    let table = formats::read_labels_csv(&a.labels)?;
    let c = concept_column(&table, a.concept.as_deref())?;
    let y: Vec<i8> = table.column(c).iter().map(|&b| if b { 1 } else { -1 }).collect();
    let pos = y.iter().filter(|&&v| v > 0).count() as f64;
    let n = y.len() as f64;
    let cfg = SvmConfig {
        c: a.c,
        max_epochs: a.max_epochs,
        tol: a.tol,
        bias: if a.no_bias {
            BiasMode::None
        } else {
            BiasMode::ConstantFeature
        },
        class_weights: a.balanced.then(|| (n / (2.0 * (n - pos)), n / (2.0 * pos))),
        ..SvmConfig::default()
    };
    let model = svm_train(&k, &y, &cfg)?;
    if !model.converged {
        log::warn!("SVM stopped after {} epochs without converging", model.epochs);
    }
    emit(out, &SvmFile::from_model(&model, &a.kernel.display().to_string()))
}

fn predict(a: &PredictArgs, out: Option<&Path>) -> Result<()> {
    let model: SvmFile = formats::read_json(&a.model)?;
    let model = model.to_model()?;
    let (_, k) = formats::read_matrix(&a.kernel)?;
    let scores = svm_decision(&model, &k)?;
    let m = Matrix::from_vec(scores.len(), 1, scores)?;
    formats::write_matrix_csv(&mut *sink(out)?, std::slice::from_ref(&a.name), &m)
}

fn eval(a: &EvalArgs, out: Option<&Path>) -> Result<()> {
    let (ph, p) = formats::read_matrix(&a.predictions)?;
    let (th, t) = formats::read_matrix(&a.targets)?;
    let keep: Vec<usize> = (0..ph.len()).filter(|&i| ph[i] != "instance").collect();
    let concepts: Vec<String> = keep.iter().map(|&i| ph[i].clone()).collect();
    let cols: Vec<usize> = concepts
        .iter()
        .map(|c| {
            th.iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::data(format!("targets lack concept `{c}`")))
        })
        .collect::<Result<_>>()?;
    let preds: Vec<Vec<f64>> = p.iter_rows().map(|r| keep.iter().map(|&i| r[i]).collect()).collect();
    let targets: Vec<Vec<f64>> = t.iter_rows().map(|r| cols.iter().map(|&i| r[i]).collect()).collect();
    emit(out, &eval_report(&preds, &targets, &concepts, &a.metrics, a.threshold)?)
}

#[derive(Serialize)]
struct BiclusterMeta {
    k: usize,
    l: usize,
    w: f64,
    seed: u64,
    restarts: usize,
    iterations: usize,
    converged: bool,
    final_mi: f64,
    dropped_columns: Vec<usize>,
    mi_trace: Vec<f64>,
}

fn bicluster(a: &BiclusterArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let (_, counts) = formats::read_matrix(&a.input)?;
    let ext = a
        .external
        .as_ref()
        .map(|p| formats::read_matrix(p).map(|x| x.1))
        .transpose()?;
    if a.w > 0.0 && ext.is_none() {
        return Err(Error::config("--w > 0 needs --external"));
    }
    let cfg = CoclusterConfig {
        row_clusters: a.row_clusters,
        col_clusters: a.col_clusters,
        seed,
        max_iter: a.max_iter,
        w: a.w,
    };
    let c = cocluster_restarts(&ContingencyMatrix::new(counts)?, &cfg, ext.as_ref(), a.restarts)?;
    if !c.dropped_columns.is_empty() {
        log::warn!(
            "dropped {} all-zero columns: {:?}",
            c.dropped_columns.len(),
            c.dropped_columns
        );
    }
    let meta = BiclusterMeta {
        k: c.k(),
        l: c.l(),
        w: a.w,
        seed,
        restarts: a.restarts,
        iterations: c.iterations,
        converged: c.converged,
        final_mi: c.final_mi(),
        dropped_columns: c.dropped_columns.clone(),
        mi_trace: c.mi_trace.clone(),
    };
    let assignments = |ids: &[usize], clusters: &[usize], id: &str| -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::data(e.to_string());
        w.write_record([id, "cluster_id"]).map_err(err)?;
        for (i, c) in ids.iter().zip(clusters) {
            w.write_record([i.to_string(), c.to_string()]).map_err(err)?;
        }
        w.into_inner().map_err(|e| Error::data(e.to_string()))
    };
    let row_ids: Vec<usize> = (0..c.row_clusters.len()).collect();
    let rows = assignments(&row_ids, &c.row_clusters, "row_id")?;
    let cols = assignments(&c.kept_columns, &c.col_clusters, "col_id")?;
    match out {
        Some(dir) => {
            let write = |name: &str, bytes: &[u8]| -> Result<()> {
                let p = dir.join(name);
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
            };
            write("rows.csv", &rows)?;
            write("cols.csv", &cols)?;
            emit(Some(&dir.join("meta.json")), &meta)
        }
        None => emit(
            None,
            &serde_json::json!({
                "meta": meta,
                "row_clusters": c.row_clusters,
                "col_ids": c.kept_columns,
                "col_clusters": c.col_clusters,
            }),
        ),
    }
}

fn dtw_cmd(a: &DtwArgs, out: Option<&Path>) -> Result<()> {
    let xs = formats::read_series_lines(&a.input)?;
    let ys = match &a.against {
        Some(p) => formats::read_series_lines(p)?,
        None => xs.clone(),
    };
    let m = par::map_rows(&xs, ys.len(), |x| ys.iter().map(|y| Ok(dtw(x, y)?)).collect())?;
    let header: Vec<String> = (0..ys.len()).map(|j| format!("s{j}")).collect();
    formats::write_matrix_csv(&mut *sink(out)?, &header, &m)
}

fn synth(a: &SynthArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let sessions = generate_sessions(&SynthConfig {
        n_drop: a.drops,
        n_normal: a.normals,
        min_len: a.min_len,
        max_len: a.max_len,
        seed,
    })?;
    formats::write_sessions_csv(&mut *sink(out)?, &sessions)
}

fn refset(a: &RefsetArgs, out: Option<&Path>) -> Result<()> {
    let table = formats::read_labels_csv(&a.labels)?;
    let chosen = select_reference_set(&table.rows, a.p)?;
    let ranking = rarity_ranking(&table.rows)?;
    let rank_of: BTreeMap<usize, usize> = ranking.iter().enumerate().map(|(r, &i)| (i, r)).collect();
    let mut w = csv::Writer::from_writer(sink(out)?);
    let err = |e: csv::Error| Error::data(e.to_string());
    w.write_record(["instance", "rank"]).map_err(err)?;
    for i in chosen {
        w.write_record([i.to_string(), rank_of[&i].to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::data(e.to_string()))
}

fn weight_search(a: &WeightSearchArgs, out: Option<&Path>) -> Result<()> {
    let (names, same) = formats::read_matrix(&a.same)?;
    let (_, diff) = formats::read_matrix(&a.different)?;
    let grid = match &a.grid {
        Some(p) => rows_of(&formats::read_matrix(p)?.1),
        None => simplex_grid(same.cols(), a.steps),
    };
    let r = search_modality_weights(&rows_of(&same), &rows_of(&diff), &grid)?;
    emit(
        out,
        &serde_json::json!({
            "modalities": names,
            "weights": r.weights,
            "auc": r.auc,
            "index": r.index,
            "candidates": grid.len(),
        }),
    )
}

fn run(a: &RunArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config).stage("config")?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(dir) = out {
        cfg.output_dir = Some(dir.to_path_buf());
    }
    let result = pipeline::run_experiment(&cfg, RunOptions { timings: a.timings })?;
    match &cfg.output_dir {
        Some(dir) => pipeline::write_outputs(&result, dir).stage("report"),
        None => emit(None, &result.report).stage("report"),
    }
}
