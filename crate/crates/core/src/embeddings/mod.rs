//! Word embeddings: LSA-style truncated SVD of a word × document matrix, and
//! CBOW / skip-gram trained with negative sampling.

mod cooccurrence;
mod svd;
mod word2vec;

pub use cooccurrence::{build_cooccurrence, CooccurrenceMatrix};
pub use svd::{svd_embed, truncated_svd, TruncatedSvd, DEFAULT_OVERSAMPLE};
pub use word2vec::{
    build_negative_table, cbow_examples, skipgram_pairs, skipgram_examples, train_cbow,
    train_skipgram, NegativeTable, TrainConfig, TrainExample, TrainReport, Word2VecModel,
};

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Svd,
    Cbow,
    SkipGram,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Svd => "svd",
            Method::Cbow => "cbow",
            Method::SkipGram => "skipgram",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(Method::Svd),
            "cbow" => Ok(Method::Cbow),
            "skipgram" | "skip-gram" => Ok(Method::SkipGram),
            other => Err(Error::invalid(format!(
                "unknown embedding method {other:?} (expected svd, cbow or skipgram)"
            ))),
        }
    }
}

/// One `dim`-long vector per vocabulary word, rows in vocabulary index order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    method: Method,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, method: Method, words: Vec<String>, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if data.len() != words.len() * dim {
            return Err(Error::invalid(format!(
                "{} values for {} words of dimension {dim}",
                data.len(),
                words.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding contains non-finite values"));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate word {w:?} in embedding")));
            }
        }
        Ok(EmbeddingMatrix {
            dim,
            method,
            words,
            data,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.vector(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Header `R=<dim> method=<tag>`, then `word<TAB>v0<TAB>…` with nine
    /// significant digits per component.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("R={} method={}\n", self.dim, self.method);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for v in self.vector(i) {
                out.push('\t');
                out.push_str(&format!("{v:.8e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty embedding file".into()))?;
        let mut dim = None;
        let mut method = None;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("R=") {
                dim = v.parse::<usize>().ok();
            } else if let Some(v) = field.strip_prefix("method=") {
                method = Some(v.parse::<Method>()?);
            }
        }
        let (Some(dim), Some(method)) = (dim, method) else {
            return Err(Error::Format(format!("bad embedding header {header:?}")));
        };
        let mut words = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let mut cols = line.split('\t');
            let word = cols.next().unwrap_or_default();
            let before = data.len();
            for c in cols {
                data.push(c.parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: bad value {c:?}", lineno + 2))
                })?);
            }
            if data.len() - before != dim {
                return Err(Error::Format(format!(
                    "line {}: expected {dim} components",
                    lineno + 2
                )));
            }
            words.push(word.to_owned());
        }
        Self::new(dim, method, words, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!("cbow".parse::<Method>().unwrap(), Method::Cbow);
        assert_eq!("skipgram".parse::<Method>().unwrap(), Method::SkipGram);
        assert!("glove".parse::<Method>().is_err());
    }

    #[test]
    fn tsv_round_trip_within_tolerance() {
        let words = vec!["a".to_owned(), "<num>".to_owned()];
        let data = vec![0.123456789012, -3.5e-7, 12345.678901, 1.0 / 3.0];
        let emb = EmbeddingMatrix::new(2, Method::Svd, words, data.clone()).unwrap();
        let text = emb.to_tsv();
        assert!(text.starts_with("R=2 method=svd\n"));
        let back = EmbeddingMatrix::parse_tsv(&text).unwrap();
        assert_eq!(back.words(), emb.words());
        for (a, b) in back.as_slice().iter().zip(&data) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        let w = vec!["a".to_owned()];
        assert!(EmbeddingMatrix::new(1, Method::Cbow, w.clone(), vec![f64::NAN]).is_err());
        assert!(EmbeddingMatrix::new(2, Method::Cbow, w.clone(), vec![1.0]).is_err());
        assert!(EmbeddingMatrix::new(0, Method::Cbow, w, vec![]).is_err());
        assert!(EmbeddingMatrix::parse_tsv("R=2 method=cbow\na\t1\n").is_err());
    }
}
