use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::log;

/// Sparse bag of words: sorted unique term ids with positive frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTermVector {
    terms: Vec<(u32, f64)>,
    length: f64,
}

impl SparseTermVector {
    /// Builds a vector from raw `(term, frequency)` pairs. Zero frequencies are
    /// dropped; `length` is the document length in terms.
    pub fn new(mut terms: Vec<(u32, f64)>, length: f64) -> Result<Self> {
        if terms.iter().any(|(_, f)| !f.is_finite() || *f < 0.0) {
            return Err(Error::param("frequency", "must be finite and non-negative"));
        }
        terms.retain(|(_, f)| *f > 0.0);
        terms.sort_by_key(|(t, _)| *t);
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::param("terms", "term ids must be unique"));
        }
        if !(length >= 0.0) {
            return Err(Error::param("length", "must be non-negative"));
        }
        Ok(SparseTermVector { terms, length })
    }

    /// Document length is the sum of frequencies.
    pub fn from_counts(terms: Vec<(u32, f64)>) -> Result<Self> {
        let length = terms.iter().map(|(_, f)| f).sum();
        Self::new(terms, length)
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn weight(&self, term: u32) -> f64 {
        self.terms
            .binary_search_by_key(&term, |(t, _)| *t)
            .map_or(0.0, |i| self.terms[i].1)
    }

    /// Dense copy over `0..dim`; terms beyond `dim` are ignored.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; dim];
        for &(t, w) in &self.terms {
            if (t as usize) < dim {
                out[t as usize] = w;
            }
        }
        out
    }
}

/// Corpus-level statistics: document count `H`, per-term document
/// frequency `h`, and mean document length.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    documents: usize,
    doc_freq: BTreeMap<u32, usize>,
    mean_length: f64,
}

impl CorpusStats {
    pub fn new(documents: usize, doc_freq: BTreeMap<u32, usize>, mean_length: f64) -> Result<Self> {
        if documents == 0 {
            return Err(Error::Empty("corpus"));
        }
        if !(mean_length > 0.0) {
            return Err(Error::param("mean_length", "must be positive"));
        }
        if doc_freq.values().any(|&h| h == 0 || h > documents) {
            return Err(Error::param("doc_freq", "must lie in 1..=documents"));
        }
        Ok(CorpusStats {
            documents,
            doc_freq,
            mean_length,
        })
    }

    pub fn from_documents(docs: &[SparseTermVector]) -> Result<Self> {
        let mut doc_freq = BTreeMap::new();
        for d in docs {
            for &(t, _) in d.terms() {
                *doc_freq.entry(t).or_insert(0usize) += 1;
            }
        }
        let mean = docs.iter().map(|d| d.length()).sum::<f64>() / docs.len().max(1) as f64;
        Self::new(docs.len(), doc_freq, mean)
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn mean_length(&self) -> f64 {
        self.mean_length
    }

    /// `ln((H - h + 0.5) / (h + 0.5))`; negative for terms in over half the corpus.
    pub fn idf(&self, term: u32) -> Result<f64> {
        let h = *self.doc_freq.get(&term).ok_or(Error::UnknownTerm(term))? as f64;
        let n = self.documents as f64;
        Ok(log((n - h + 0.5) / (h + 0.5)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermWeighting {
    Tf,
    TfIdf,
    Bm25 { k: f64, b: f64 },
}

impl TermWeighting {
    pub const BM25_DEFAULT: TermWeighting = TermWeighting::Bm25 { k: 1.2, b: 0.75 };
}

pub fn weight_terms(doc: &SparseTermVector, stats: &CorpusStats, scheme: TermWeighting) -> Result<SparseTermVector> {
    if let TermWeighting::Bm25 { k, b } = scheme {
        if !(k > 0.0) {
            return Err(Error::param("k", "must be positive"));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::param("b", "must lie in [0, 1]"));
        }
    }
    let mut out = Vec::with_capacity(doc.terms.len());
    for &(t, f) in &doc.terms {
        let w = match scheme {
            TermWeighting::Tf => {
                // still reject terms the corpus never saw
                stats.idf(t)?;
                f
            }
            TermWeighting::TfIdf => stats.idf(t)? * f,
            TermWeighting::Bm25 { k, b } => {
                let norm = 1.0 - b + b * doc.length / stats.mean_length;
                stats.idf(t)? * f * (k + 1.0) / (f + k * norm)
            }
        };
        out.push((t, w));
    }
    Ok(SparseTermVector {
        terms: out,
        length: doc.length,
    })
}
