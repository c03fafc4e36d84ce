use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::corpus::{Corpus, Vocabulary};
use crate::linalg::{DenseMatrix, LinearOperator};

/// Sparse word × document matrix with `log(1 + count)` entries, stored by
/// document column.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    n_words: usize,
    /// Per document: `(word index, weight)` sorted by word index.
    columns: Vec<Vec<(usize, f64)>>,
}

impl CooccurrenceMatrix {
    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn n_documents(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, word: usize, doc: usize) -> f64 {
        let col = &self.columns[doc];
        col.binary_search_by_key(&word, |&(w, _)| w)
            .map_or(0.0, |pos| col[pos].1)
    }

    pub fn column(&self, doc: usize) -> &[(usize, f64)] {
        &self.columns[doc]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_words, self.columns.len());
        for (d, col) in self.columns.iter().enumerate() {
            for &(w, v) in col {
                m.set(w, d, v);
            }
        }
        m
    }
}

pub fn build_cooccurrence(corpus: &Corpus, vocab: &Vocabulary) -> CooccurrenceMatrix {
    let columns = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
            for idx in vocab.encode(&doc.tokens) {
                *counts.entry(idx).or_default() += 1;
            }
            counts
                .into_iter()
                .map(|(w, c)| (w, (c as f64).ln_1p()))
                .collect()
        })
        .collect();
    CooccurrenceMatrix {
        n_words: vocab.len(),
        columns,
    }
}

impl LinearOperator for CooccurrenceMatrix {
    fn nrows(&self) -> usize {
        self.n_words
    }

    fn ncols(&self) -> usize {
        self.columns.len()
    }

    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        let l = x.cols();
        let mut out = DenseMatrix::zeros(self.n_words, l);
        for (d, col) in self.columns.iter().enumerate() {
            let xr = x.row(d);
            for &(w, v) in col {
                for (j, &xv) in xr.iter().enumerate() {
                    out.set(w, j, out.get(w, j) + v * xv);
                }
            }
        }
        out
    }

    fn apply_transpose(&self, y: &DenseMatrix) -> DenseMatrix {
        let l = y.cols();
        let rows: Vec<Vec<f64>> = self
            .columns
            .par_iter()
            .map(|col| {
                let mut acc = vec![0.0; l];
                for &(w, v) in col {
                    for (a, &yv) in acc.iter_mut().zip(y.row(w)) {
                        *a += v * yv;
                    }
                }
                acc
            })
            .collect();
        DenseMatrix::from_row_major(self.columns.len(), l, rows.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;

    fn corpus(docs: &[&str]) -> Corpus {
        Corpus::from_token_lists(docs.iter().enumerate().map(|(i, d)| {
            (
                format!("d{i}"),
                d.split_whitespace().map(str::to_owned).collect(),
            )
        }))
        .unwrap()
    }

    #[test]
    fn log_weighting() {
        let c = corpus(&["a a a", "b a"]);
        let v = build_vocabulary(&c, 1).unwrap();
        let m = build_cooccurrence(&c, &v);
        let (a, b) = (v.index_of("a").unwrap(), v.index_of("b").unwrap());
        assert!((m.get(a, 0) - 4f64.ln()).abs() < 1e-15);
        assert!((m.get(a, 0) - 1.3862943611198906).abs() < 1e-12);
        assert!((m.get(b, 1) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(m.get(b, 0), 0.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn operator_matches_dense() {
        let c = corpus(&["a b c a", "c c d", "e a b"]);
        let v = build_vocabulary(&c, 1).unwrap();
        let m = build_cooccurrence(&c, &v);
        let dense = m.to_dense();
        let x = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        let y = DenseMatrix::from_fn(5, 2, |i, j| (i + 3 * j) as f64 * 0.25);
        assert!(m.apply(&x).sub(&dense.matmul(&x)).frobenius_norm() < 1e-12);
        assert!(
            m.apply_transpose(&y)
                .sub(&dense.transpose().matmul(&y))
                .frobenius_norm()
                < 1e-12
        );
    }
}
