//! Concatenated n-gram vectors with multiplicities, binary persistence and
//! nested random subsets.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NGDS";
const VERSION: u32 = 1;

/// Unique n-gram vectors (length `n·dim`) with occurrence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramDataset {
    n: usize,
    dim: usize,
    data: Vec<f32>,
    multiplicity: Vec<u32>,
    pub provenance: String,
}

impl NgramDataset {
    pub fn new(
        n: usize,
        dim: usize,
        data: Vec<f32>,
        multiplicity: Vec<u32>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let width = n * dim;
        if width == 0 {
            return Err(Error::invalid("n and dim must be positive"));
        }
        if data.len() != multiplicity.len() * width {
            return Err(Error::invalid(format!(
                "{} values for {} points of width {width}",
                data.len(),
                multiplicity.len()
            )));
        }
        if multiplicity.contains(&0) {
            return Err(Error::invalid("multiplicities must be positive"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        Ok(NgramDataset {
            n,
            dim,
            data,
            multiplicity,
            provenance: provenance.into(),
        })
    }

    /// Wraps arbitrary points as a dataset with unit multiplicities (`n = 1`).
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("points have differing dimensions"));
        }
        let data = points.iter().flatten().map(|&v| v as f32).collect();
        Self::new(1, dim, data, vec![1; points.len()], "points")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn embedding_dim(&self) -> usize {
        self.dim
    }

    /// Point dimension `n·dim`.
    pub fn width(&self) -> usize {
        self.n * self.dim
    }

    pub fn len(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiplicity.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f32] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.width())
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn multiplicity(&self, i: usize) -> u32 {
        self.multiplicity[i]
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicity
    }

    pub fn total_occurrences(&self) -> u64 {
        self.multiplicity.iter().map(|&m| m as u64).sum()
    }

    /// Keeps the given points (in the given order).
    pub fn select(&self, indices: &[usize]) -> NgramDataset {
        let mut data = Vec::with_capacity(indices.len() * self.width());
        let mut multiplicity = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.point(i));
            multiplicity.push(self.multiplicity[i]);
        }
        NgramDataset {
            n: self.n,
            dim: self.dim,
            data,
            multiplicity,
            provenance: self.provenance.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.data.len() * 4 + self.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (i, m) in self.multiplicity.iter().enumerate() {
            for v in self.point(i) {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&m.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], provenance: &str) -> Result<Self> {
        let mut cur = bytes;
        let mut take = |k: usize| -> Result<&[u8]> {
            if cur.len() < k {
                return Err(Error::Format("truncated NGDS file".into()));
            }
            let (head, tail) = cur.split_at(k);
            cur = tail;
            Ok(head)
        };
        if take(4)? != MAGIC {
            return Err(Error::Format("bad magic, expected NGDS".into()));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let version = u32_at(take(4)?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported NGDS version {version}")));
        }
        let n = u32_at(take(4)?) as usize;
        let dim = u32_at(take(4)?) as usize;
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let width = n * dim;
        let mut data = Vec::with_capacity(count.saturating_mul(width).min(1 << 28));
        let mut multiplicity = Vec::with_capacity(count.min(1 << 26));
        for _ in 0..count {
            for chunk in take(width * 4)?.chunks_exact(4) {
                data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
            }
            multiplicity.push(u32_at(take(4)?));
        }
        if !cur.is_empty() {
            return Err(Error::Format("trailing bytes after NGDS payload".into()));
        }
        Self::new(n, dim, data, multiplicity, provenance)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let tag = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_bytes(&bytes, &tag).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Debug mirror: `point_index,multiplicity,x0,…`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let res = (|| -> std::io::Result<()> {
            let cols: Vec<String> = (0..self.width()).map(|j| format!("x{j}")).collect();
            writeln!(w, "point_index,multiplicity,{}", cols.join(","))?;
            for i in 0..self.len() {
                let vals: Vec<String> = self.point(i).iter().map(|v| v.to_string()).collect();
                writeln!(w, "{i},{},{}", self.multiplicity[i], vals.join(","))?;
            }
            w.flush()
        })();
        res.map_err(|e| Error::io(path, e))
    }
}

/// Slides a stride-1 window of `n` tokens over each document (out-of-
/// vocabulary tokens removed first), concatenates the word vectors and
/// deduplicates by exact bit pattern. Points keep first-occurrence order.
pub fn build_ngram_dataset(
    corpus: &Corpus,
    emb: &EmbeddingMatrix,
    n: usize,
) -> Result<NgramDataset> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let dim = emb.dim();
    let per_doc: Vec<Vec<Vec<f32>>> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let idx: Vec<usize> = doc.tokens.iter().filter_map(|t| emb.index_of(t)).collect();
            if idx.len() < n {
                return Vec::new();
            }
            idx.windows(n)
                .map(|gram| {
                    gram.iter()
                        .flat_map(|&w| emb.vector(w).iter().map(|&v| v as f32))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut data = Vec::new();
    let mut multiplicity: Vec<u32> = Vec::new();
    for gram in per_doc.into_iter().flatten() {
        let key: Vec<u32> = gram.iter().map(|v| v.to_bits()).collect();
        match seen.get(&key) {
            Some(&i) => multiplicity[i] += 1,
            None => {
                seen.insert(key, multiplicity.len());
                data.extend_from_slice(&gram);
                multiplicity.push(1);
            }
        }
    }
    let tag = if corpus.language_tag.is_empty() {
        "corpus".to_owned()
    } else {
        corpus.language_tag.clone()
    };
    NgramDataset::new(n, dim, data, multiplicity, tag)
}

/// `D₁ ⊂ D₂ ⊂ … ⊂ D_l` built as prefixes of one seeded shuffle.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetChain {
    pub sizes: Vec<usize>,
    pub seed: u64,
    order: Vec<usize>,
    members: Vec<NgramDataset>,
}

impl SubsetChain {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[NgramDataset] {
        &self.members
    }

    /// Indices (into the source dataset) of the points in `D_j`.
    pub fn indices(&self, j: usize) -> &[usize] {
        &self.order[..self.members[j].len()]
    }
}

pub fn nested_subsets(ds: &NgramDataset, sizes: &[usize], seed: u64) -> Result<SubsetChain> {
    if sizes.is_empty() {
        return Err(Error::invalid("subset sizes list is empty"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("subset sizes must be strictly increasing"));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let members = sizes
        .iter()
        .map(|&s| ds.select(&order[..s.min(ds.len())]))
        .collect();
    Ok(SubsetChain {
        sizes: sizes.to_vec(),
        seed,
        order,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::Method;

    fn toy_embedding() -> EmbeddingMatrix {
        EmbeddingMatrix::new(
            2,
            Method::Svd,
            vec!["a".into(), "b".into(), "c".into()],
            vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5],
        )
        .unwrap()
    }

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
    fn bigram_enumeration() {
        let ds = build_ngram_dataset(&corpus(&["a b a b"]), &toy_embedding(), 2).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.width(), 4);
        assert_eq!(ds.point(0), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(ds.point(1), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(ds.multiplicities(), &[2, 1]);
    }

    #[test]
    fn oov_removed_and_short_docs_skipped() {
        let ds = build_ngram_dataset(&corpus(&["a zzz b", "c", "b"]), &toy_embedding(), 2).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.total_occurrences(), 1);
    }

    #[test]
    fn unigrams_count_tokens() {
        let c = corpus(&["a b c a", "c c"]);
        let ds = build_ngram_dataset(&c, &toy_embedding(), 1).unwrap();
        assert_eq!(ds.total_occurrences(), 6);
        assert_eq!(ds.len(), 3);
    }

    #[test]
    fn binary_layout() {
        let ds = build_ngram_dataset(&corpus(&["a b"]), &toy_embedding(), 2).unwrap();
        let bytes = ds.to_bytes();
        assert_eq!(&bytes[..4], b"NGDS");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1);
        assert_eq!(bytes.len(), 24 + 4 * 4 + 4);
        assert_eq!(NgramDataset::from_bytes(&bytes, &ds.provenance).unwrap(), ds);
        assert!(NgramDataset::from_bytes(&bytes[..bytes.len() - 1], "x").is_err());
        assert!(NgramDataset::from_bytes(b"NOPE", "x").is_err());
    }

    #[test]
    fn nested_prefixes() {
        let ds = NgramDataset::from_points(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let chain = nested_subsets(&ds, &[2, 4], 5).unwrap();
        assert_eq!(chain.members()[0].len(), 2);
        assert_eq!(chain.members()[1].len(), 4);
        assert_eq!(chain.indices(0), &chain.indices(1)[..2]);
        assert_eq!(chain, nested_subsets(&ds, &[2, 4], 5).unwrap());

        let clamped = nested_subsets(&ds, &[10], 1).unwrap();
        assert_eq!(clamped.members()[0].len(), 4);

        assert!(nested_subsets(&ds, &[], 1).is_err());
        assert!(nested_subsets(&ds, &[3, 3], 1).is_err());
    }
}
