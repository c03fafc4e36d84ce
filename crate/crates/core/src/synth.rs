//! Synthetic fixtures: labelled Gaussian blobs and two kinds of artificial
//! text (a structured "human" Markov source and a repetitive "bot" source).

use std::collections::{BTreeSet, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document};
use crate::error::Result;
use crate::linalg::standard_normal;
use crate::ngram::NgramDataset;

/// Isotropic Gaussian blobs; returns the points and each point's blob id.
/// Points are emitted blob by blob.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    per_blob: usize,
    sigma: f64,
    seed: u64,
) -> Result<(NgramDataset, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(centers.len() * per_blob);
    let mut truth = Vec::with_capacity(points.capacity());
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            points.push(c.iter().map(|&x| x + sigma * standard_normal(&mut rng)).collect());
            truth.push(b);
        }
    }
    let mut ds = NgramDataset::from_points(&points)?;
    ds.provenance = format!("blobs:{seed}");
    Ok((ds, truth))
}

/// `count` centers on scaled coordinate axes: pairwise distance is
/// `scale·√2`.
pub fn axis_centers(count: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    assert!(count <= dim, "need dim ≥ count for axis centers");
    (0..count)
        .map(|c| (0..dim).map(|j| if j == c { scale } else { 0.0 }).collect())
        .collect()
}

pub fn synthetic_word(i: usize) -> String {
    format!("w{i:03}")
}

fn zipf_weights(vocab: usize, exponent: f64) -> Vec<f64> {
    (0..vocab).map(|r| 1.0 / ((r + 1) as f64).powf(exponent)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextShape {
    pub vocab: usize,
    pub documents: usize,
    pub tokens_per_doc: usize,
}

impl Default for TextShape {
    fn default() -> Self {
        TextShape {
            vocab: 500,
            documents: 200,
            tokens_per_doc: 2000,
        }
    }
}

const POOL: usize = 20;
const SUCCESSORS: usize = 4;
const SUCCESSOR_WEIGHTS: [f64; SUCCESSORS] = [0.4, 0.3, 0.2, 0.1];

fn corpus_of(prefix: &str, docs: Vec<Vec<usize>>) -> Result<Corpus> {
    let documents = docs
        .into_iter()
        .enumerate()
        .map(|(i, toks)| Document {
            id: format!("{prefix}{i:04}"),
            tokens: toks.into_iter().map(synthetic_word).collect(),
        })
        .collect();
    Corpus::new(documents, "synth", BTreeSet::new())
}

/// Order-2 Markov text. Each word `b` owns a pool of plausible followers
/// drawn from a Zipf distribution; a context `(a, b)` picks a few of them
/// with skewed weights. Pools and picks are derived from the seed and the
/// context, so the chain is a fixed function of the seed.
pub fn human_corpus(shape: TextShape, seed: u64) -> Result<Corpus> {
    let zipf = WeightedIndex::new(zipf_weights(shape.vocab, 1.0)).expect("vocab > 0");
    let pick = WeightedIndex::new(SUCCESSOR_WEIGHTS).unwrap();
    let keyed = |key: u64| {
        ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(key))
    };
    let pools: Vec<[usize; POOL]> = (0..shape.vocab)
        .map(|b| {
            let mut r = keyed(b as u64);
            std::array::from_fn(|_| zipf.sample(&mut r))
        })
        .collect();
    let mut table: HashMap<(usize, usize), [usize; SUCCESSORS]> = HashMap::new();
    let mut successors = |a: usize, b: usize| -> [usize; SUCCESSORS] {
        *table.entry((a, b)).or_insert_with(|| {
            let mut r = keyed(((a * shape.vocab + b) as u64) << 20);
            std::array::from_fn(|_| pools[b][r.gen_range(0..POOL)])
        })
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0001);
    let mut docs = Vec::with_capacity(shape.documents);
    for _ in 0..shape.documents {
        let mut toks = Vec::with_capacity(shape.tokens_per_doc);
        let (mut a, mut b) = (zipf.sample(&mut rng), zipf.sample(&mut rng));
        toks.extend([a, b]);
        while toks.len() < shape.tokens_per_doc {
            let next = successors(a, b)[pick.sample(&mut rng)];
            toks.push(next);
            (a, b) = (b, next);
        }
        toks.truncate(shape.tokens_per_doc);
        docs.push(toks);
    }
    corpus_of("h", docs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BotStyle {
    pub phrases: usize,
    /// Probability that the next emission is a whole stock phrase rather
    /// than a single unigram draw.
    pub phrase_rate: f64,
    pub min_phrase_len: usize,
    pub max_phrase_len: usize,
}

impl Default for BotStyle {
    fn default() -> Self {
        BotStyle {
            phrases: 20,
            phrase_rate: 0.3,
            min_phrase_len: 3,
            max_phrase_len: 6,
        }
    }
}

/// Unigram (order-0) text over the same Zipf vocabulary, with stock phrases
/// spliced in.
pub fn bot_corpus(shape: TextShape, style: BotStyle, seed: u64) -> Result<Corpus> {
    let zipf = WeightedIndex::new(zipf_weights(shape.vocab, 1.0)).expect("vocab > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB07_0002);
    let phrases: Vec<Vec<usize>> = (0..style.phrases)
        .map(|_| {
            let len = rng.gen_range(style.min_phrase_len..=style.max_phrase_len);
            (0..len).map(|_| zipf.sample(&mut rng)).collect()
        })
        .collect();
    let mut docs = Vec::with_capacity(shape.documents);
    for _ in 0..shape.documents {
        let mut toks = Vec::with_capacity(shape.tokens_per_doc + style.max_phrase_len);
        while toks.len() < shape.tokens_per_doc {
            if !phrases.is_empty() && rng.gen_bool(style.phrase_rate) {
                toks.extend_from_slice(&phrases[rng.gen_range(0..phrases.len())]);
            } else {
                toks.push(zipf.sample(&mut rng));
            }
        }
        toks.truncate(shape.tokens_per_doc);
        docs.push(toks);
    }
    corpus_of("b", docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_shape() {
        let (ds, truth) = gaussian_blobs(&axis_centers(3, 16, 1.0), 10, 0.05, 1).unwrap();
        assert_eq!(ds.len(), 30);
        assert_eq!(ds.width(), 16);
        assert_eq!(truth.iter().filter(|&&t| t == 2).count(), 10);
    }

    #[test]
    fn texts_are_deterministic_and_sized() {
        let shape = TextShape {
            vocab: 50,
            documents: 4,
            tokens_per_doc: 100,
        };
        let h = human_corpus(shape, 3).unwrap();
        assert_eq!(h, human_corpus(shape, 3).unwrap());
        assert_eq!(h.total_tokens(), 400);
        let b = bot_corpus(shape, BotStyle::default(), 3).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.documents().iter().all(|d| d.tokens.len() == 100));
    }

    #[test]
    fn human_text_is_low_entropy() {
        let shape = TextShape {
            vocab: 100,
            documents: 2,
            tokens_per_doc: 3000,
        };
        let h = human_corpus(shape, 5).unwrap();
        let mut ctx: HashMap<(&str, &str), BTreeSet<&str>> = HashMap::new();
        for d in h.documents() {
            for w in d.tokens.windows(3) {
                ctx.entry((&w[0], &w[1])).or_default().insert(&w[2]);
            }
        }
        assert!(ctx.values().all(|s| s.len() <= SUCCESSORS));
    }
}
