//! On-disk formats: CSV matrices with a header row, flat binary matrices with
//! a JSON sidecar, label tables, sparse `term:count` lines, session CSVs and
//! the JSON model files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use simkern_core::distance::SparseTermVector;
use simkern_core::gmm::GaussianMixture;
use simkern_core::learn::{BiasMode, SvmModel};
use simkern_core::session::{SessionRecord, SERIES, SERIES_NAMES};
use simkern_core::Matrix;

use crate::error::{Error, Result};

/// Writer for a path, or stdout when no path is given.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let f = File::create(p).map_err(|e| Error::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::data(format!("{}:{line}: `{field}` is not a number", path.display())))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::data(format!("{}:{line}: non-finite value", path.display())))
    }
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::data(e.to_string()))?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::data(e.to_string()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

/// Dense matrix from a CSV with a header row of column names.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let mut rdr = csv_reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::io(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::io(path, e))?;
        if rec.len() != header.len() {
            return Err(Error::data(format!(
                "{}:{}: expected {} fields, found {}",
                path.display(),
                i + 2,
                header.len(),
                rec.len()
            )));
        }
        for f in rec.iter() {
            data.push(parse_f64(path, i + 2, f)?);
        }
        rows += 1;
    }
    let m = Matrix::from_vec(rows, header.len(), data)?;
    Ok((header, m))
}

pub fn write_matrix_csv(out: &mut dyn Write, header: &[String], m: &Matrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::data(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in m.iter_rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| Error::data(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Bin,
}

/// Sidecar describing a persisted matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub rows: usize,
    pub cols: usize,
    pub format: MatrixFormat,
    pub columns: Vec<String>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `m` and its sidecar (`<path>.json`). Without a path the matrix goes
/// to stdout as CSV and no sidecar is written.
pub fn write_matrix(
    path: Option<&Path>,
    header: &[String],
    m: &Matrix,
    format: MatrixFormat,
    meta: serde_json::Value,
) -> Result<()> {
    let mut out = sink(path)?;
    match (format, path) {
        (MatrixFormat::Bin, Some(_)) => {
            for v in m.as_slice() {
                out.write_all(&v.to_le_bytes())
                    .map_err(|e| Error::data(e.to_string()))?;
            }
            out.flush().map_err(|e| Error::data(e.to_string()))?;
        }
        _ => write_matrix_csv(&mut *out, header, m)?,
    }
    if let Some(p) = path {
        let side = MatrixSidecar {
            rows: m.rows(),
            cols: m.cols(),
            format,
            columns: header.to_vec(),
            meta,
        };
        write_json(&mut *sink(Some(&sidecar_path(p)))?, &side)?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix`]; `.bin` files need their sidecar.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Matrix)> {
    if path.extension().is_some_and(|e| e == "bin") {
        let side: MatrixSidecar = read_json(&sidecar_path(path))?;
        let mut bytes = Vec::new();
        open(path)?.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        if bytes.len() != side.rows * side.cols * 8 {
            return Err(Error::data(format!(
                "{}: expected {} values, file holds {} bytes",
                path.display(),
                side.rows * side.cols,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok((side.columns, Matrix::from_vec(side.rows, side.cols, data)?))
    } else {
        read_matrix_csv(path)
    }
}

/// Binary label table: one column per concept, values `1/0`, `1/-1` or
/// `true/false`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    pub concepts: Vec<String>,
    pub rows: Vec<Vec<bool>>,
}

impl LabelTable {
    pub fn concept_index(&self, name: &str) -> Result<usize> {
        self.concepts
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::config(format!("unknown concept `{name}`")))
    }

    pub fn column(&self, c: usize) -> Vec<bool> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

pub fn read_labels_csv(path: &Path) -> Result<LabelTable> {
    let mut rdr = csv_reader(path)?;
    let concepts: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::io(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::io(path, e))?;
        let row = rec
            .iter()
            .map(|f| match f {
                "1" | "+1" | "true" => Ok(true),
                "0" | "-1" | "false" => Ok(false),
                other => Err(Error::data(format!(
                    "{}:{}: bad label `{other}`",
                    path.display(),
                    i + 2
                ))),
            })
            .collect::<Result<Vec<bool>>>()?;
        if row.len() != concepts.len() {
            return Err(Error::data(format!("{}:{}: ragged label row", path.display(), i + 2)));
        }
        rows.push(row);
    }
    Ok(LabelTable { concepts, rows })
}

/// Whitespace separated `term:count` pairs, one document per line.
pub fn read_term_lines(path: &Path) -> Result<Vec<SparseTermVector>> {
    let mut docs = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut terms = Vec::new();
        for tok in line.split_whitespace() {
            let bad = || Error::data(format!("{}:{}: bad token `{tok}`", path.display(), i + 1));
            let (t, c) = tok.split_once(':').ok_or_else(bad)?;
            terms.push((t.parse::<u32>().map_err(|_| bad())?, parse_f64(path, i + 1, c)?));
        }
        docs.push(
            SparseTermVector::from_counts(terms)
                .map_err(|e| Error::data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(docs)
}

/// One comma-separated series per line; lengths may differ.
pub fn read_series_lines(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            line.split(',')
                .map(|f| parse_f64(path, i + 1, f.trim()))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(out)
}

const SESSION_HEADER: [&str; 9] = [
    "session_id",
    "t_index",
    "cqi_avg",
    "harqnack_dl",
    "harqnack_ul",
    "rlc_dl",
    "rlc_ul",
    "sinr_pusch",
    "label",
];

pub fn write_sessions_csv(out: &mut dyn Write, sessions: &[SessionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::data(e.to_string());
    w.write_record(SESSION_HEADER).map_err(err)?;
    for s in sessions {
        for t in 0..s.len() {
            let mut rec = vec![s.id.to_string(), t.to_string()];
            rec.extend((0..SERIES).map(|i| s.series(i)[t].to_string()));
            rec.push(if s.drop { "drop" } else { "normal" }.to_owned());
            w.write_record(&rec).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::data(e.to_string()))
}

/// Reads sessions grouped by `session_id` in order of first appearance.
/// Reports must arrive with consecutive `t_index` values starting at 0.
pub fn read_sessions_csv(path: &Path) -> Result<Vec<SessionRecord>> {
    let mut rdr = csv_reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::io(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != SESSION_HEADER {
        return Err(Error::data(format!(
            "{}: header must be {}",
            path.display(),
            SESSION_HEADER.join(",")
        )));
    }
    let mut sessions: Vec<(u64, [Vec<f64>; SERIES], bool)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::io(path, e))?;
        let bad = |what: &str| Error::data(format!("{}:{line}: {what}", path.display()));
        let id: u64 = rec[0].parse().map_err(|_| bad("bad session_id"))?;
        let t: usize = rec[1].parse().map_err(|_| bad("bad t_index"))?;
        let drop = match &rec[8] {
            "drop" | "1" => true,
            "normal" | "0" => false,
            _ => return Err(bad("label must be drop/normal or 1/0")),
        };
        if sessions.last().map(|s| s.0) != Some(id) {
            if sessions.iter().any(|s| s.0 == id) {
                return Err(bad("session rows are not contiguous"));
            }
            sessions.push((id, Default::default(), drop));
        }
        let s = sessions.last_mut().expect("pushed above");
        if s.1[0].len() != t {
            return Err(bad("t_index out of sequence"));
        }
        if s.2 != drop {
            return Err(bad("label changes within a session"));
        }
        for k in 0..SERIES {
            s.1[k].push(parse_f64(path, line, &rec[2 + k])?);
        }
    }
    sessions
        .into_iter()
        .map(|(id, series, drop)| {
            SessionRecord::new(id, series, drop)
                .map_err(|e| Error::data(format!("{}: session {id}: {e}", path.display())))
        })
        .collect()
}

pub fn session_series_names() -> &'static [&'static str; SERIES] {
    &SERIES_NAMES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmMeta {
    pub seed: u64,
    pub iterations: usize,
    pub final_loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmFile {
    pub n: usize,
    pub d: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub stdevs: Vec<Vec<f64>>,
    pub meta: GmmMeta,
}

impl GmmFile {
    pub fn from_model(model: &GaussianMixture, meta: GmmMeta) -> Self {
        let rows = |m: &Matrix| m.iter_rows().map(<[f64]>::to_vec).collect();
        GmmFile {
            n: model.n_components(),
            d: model.dim(),
            weights: model.weights().to_vec(),
            means: rows(model.means()),
            stdevs: rows(model.stdevs()),
            meta,
        }
    }

    pub fn to_model(&self) -> Result<GaussianMixture> {
        let means = Matrix::from_rows(&self.means)?;
        let stdevs = Matrix::from_rows(&self.stdevs)?;
        if means.rows() != self.n || means.cols() != self.d {
            return Err(Error::data("GMM file: means do not match n x d"));
        }
        Ok(GaussianMixture::new(self.weights.clone(), means, stdevs)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmMeta {
    pub bias: f64,
    pub bias_mode: String,
    pub epochs: usize,
    pub converged: bool,
    pub kernel: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmFile {
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub support_indices: Vec<usize>,
    #[serde(rename = "C")]
    pub c: f64,
    pub meta: SvmMeta,
}

impl SvmFile {
    pub fn from_model(m: &SvmModel, kernel: &str) -> Self {
        SvmFile {
            alphas: m.alphas.clone(),
            labels: m.labels.clone(),
            support_indices: m.support_indices.clone(),
            c: m.c,
            meta: SvmMeta {
                bias: m.bias,
                bias_mode: match m.bias_mode {
                    BiasMode::None => "none",
                    BiasMode::ConstantFeature => "constant-feature",
                }
                .to_owned(),
                epochs: m.epochs,
                converged: m.converged,
                kernel: kernel.to_owned(),
            },
        }
    }

    pub fn to_model(&self) -> Result<SvmModel> {
        let n = self.alphas.len();
        if self.labels.len() != n || self.support_indices.iter().any(|&i| i >= n) {
            return Err(Error::data("SVM file: inconsistent lengths"));
        }
        let bias_mode = match self.meta.bias_mode.as_str() {
            "none" => BiasMode::None,
            "constant-feature" => BiasMode::ConstantFeature,
            other => return Err(Error::data(format!("SVM file: unknown bias mode `{other}`"))),
        };
        Ok(SvmModel {
            alphas: self.alphas.clone(),
            labels: self.labels.clone(),
            support_indices: self.support_indices.clone(),
            bias: self.meta.bias,
            c: self.c,
            bias_mode,
            epochs: self.meta.epochs,
            converged: self.meta.converged,
        })
    }
}
