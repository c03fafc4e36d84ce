//! CBOW and skip-gram with negative sampling.
//!
//! Both models share one objective. An example is a set of input words, a
//! target word and a list of negative words; the hidden vector `h` is the mean
//! of the input vectors and the loss is
//! `-log σ(u_target·h) - Σ log σ(-u_neg·h)`.
//! CBOW uses the window as inputs and the centre word as target; skip-gram
//! uses the centre word as the single input and one context word as target.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingMatrix, Method};
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};

const NEGATIVE_EXPONENT: f64 = 0.75;
const MIN_RATE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Context half-width.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Learning rate at the start; decays linearly to 1e-4.
    pub initial_rate: f64,
    pub seed: u64,
    /// Frequent-word subsampling threshold; 0 disables it.
    pub subsample_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_rate: 0.025,
            seed: 1,
            subsample_threshold: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::invalid("window, negatives and epochs must be ≥ 1"));
        }
        if !(self.initial_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.subsample_threshold < 0.0 {
            return Err(Error::invalid("subsample threshold must be ≥ 0"));
        }
        Ok(())
    }
}

/// Unigram^0.75 sampling distribution over vocabulary indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeTable {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

pub fn build_negative_table(vocab: &Vocabulary) -> Result<NegativeTable> {
    NegativeTable::from_counts(vocab.counts())
}

impl NegativeTable {
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let weights: Vec<f64> = counts
            .iter()
            .map(|&c| (c as f64).powf(NEGATIVE_EXPONENT))
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("negative table needs a positive count"));
        }
        let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(NegativeTable {
            probabilities,
            cumulative,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let pos = self.cumulative.partition_point(|&c| c <= u);
        // skip zero-probability slots that share the boundary
        let mut idx = pos.min(self.cumulative.len() - 1);
        while self.probabilities[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        idx
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainExample {
    pub inputs: Vec<usize>,
    pub target: usize,
    pub negatives: Vec<usize>,
}

/// `(center, context)` pairs within `window` positions.
pub fn skipgram_pairs(tokens: &[usize], window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (t, &center) in tokens.iter().enumerate() {
        let lo = t.saturating_sub(window);
        let hi = (t + window).min(tokens.len() - 1);
        for (c, &ctx) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
            if c != t {
                pairs.push((center, ctx));
            }
        }
    }
    pairs
}

fn draw_negatives<R: Rng>(
    table: &NegativeTable,
    target: usize,
    count: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    for _ in 0..count {
        let n = table.sample(rng);
        if n != target {
            out.push(n);
        }
    }
}

pub fn cbow_examples<R: Rng>(
    docs: &[Vec<usize>],
    window: usize,
    negatives: usize,
    table: &NegativeTable,
    rng: &mut R,
) -> Vec<TrainExample> {
    let mut out = Vec::new();
    for doc in docs {
        for t in 0..doc.len() {
            let mut ex = TrainExample {
                inputs: context(doc, t, window),
                target: doc[t],
                negatives: Vec::new(),
            };
            if ex.inputs.is_empty() {
                continue;
            }
            draw_negatives(table, ex.target, negatives, rng, &mut ex.negatives);
            out.push(ex);
        }
    }
    out
}

pub fn skipgram_examples<R: Rng>(
    docs: &[Vec<usize>],
    window: usize,
    negatives: usize,
    table: &NegativeTable,
    rng: &mut R,
) -> Vec<TrainExample> {
    let mut out = Vec::new();
    for doc in docs {
        for (center, ctx) in skipgram_pairs(doc, window) {
            let mut ex = TrainExample {
                inputs: vec![center],
                target: ctx,
                negatives: Vec::new(),
            };
            draw_negatives(table, ex.target, negatives, rng, &mut ex.negatives);
            out.push(ex);
        }
    }
    out
}

fn context(doc: &[usize], t: usize, window: usize) -> Vec<usize> {
    let lo = t.saturating_sub(window);
    let hi = (t + window).min(doc.len() - 1);
    (lo..=hi).filter(|&c| c != t).map(|c| doc[c]).collect()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log σ(x)` without overflow.
#[inline]
fn neg_log_sigmoid(x: f64) -> f64 {
    (-x).max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Input (word) and output (context) vector tables, row-major `V × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Word2VecModel {
    dim: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl Word2VecModel {
    /// Inputs uniform in `(-0.5/dim, 0.5/dim)`, outputs zero.
    pub fn init<R: Rng>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        let half = 0.5 / dim as f64;
        let input = (0..vocab_size * dim)
            .map(|_| rng.gen_range(-half..half))
            .collect();
        Word2VecModel {
            dim,
            input,
            output: vec![0.0; vocab_size * dim],
        }
    }

    pub fn from_weights(dim: usize, input: Vec<f64>, output: Vec<f64>) -> Self {
        assert_eq!(input.len(), output.len());
        assert_eq!(input.len() % dim, 0);
        Word2VecModel { dim, input, output }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn hidden(&self, inputs: &[usize], h: &mut [f64]) {
        h.iter_mut().for_each(|x| *x = 0.0);
        for &w in inputs {
            for (a, v) in h.iter_mut().zip(self.in_row(w)) {
                *a += v;
            }
        }
        let inv = 1.0 / inputs.len() as f64;
        h.iter_mut().for_each(|x| *x *= inv);
    }

    fn in_row(&self, w: usize) -> &[f64] {
        &self.input[w * self.dim..(w + 1) * self.dim]
    }

    fn out_row(&self, w: usize) -> &[f64] {
        &self.output[w * self.dim..(w + 1) * self.dim]
    }

    pub fn example_loss(&self, ex: &TrainExample) -> f64 {
        let mut h = vec![0.0; self.dim];
        self.hidden(&ex.inputs, &mut h);
        let mut loss = neg_log_sigmoid(dot(self.out_row(ex.target), &h));
        for &n in &ex.negatives {
            loss += neg_log_sigmoid(-dot(self.out_row(n), &h));
        }
        loss
    }

    pub fn loss(&self, examples: &[TrainExample]) -> f64 {
        examples.iter().map(|ex| self.example_loss(ex)).sum()
    }

    /// Analytic gradient of [`Self::loss`] w.r.t. `(input, output)`.
    pub fn gradient(&self, examples: &[TrainExample]) -> (Vec<f64>, Vec<f64>) {
        let mut g_in = vec![0.0; self.input.len()];
        let mut g_out = vec![0.0; self.output.len()];
        let dim = self.dim;
        let mut h = vec![0.0; dim];
        let mut dh = vec![0.0; dim];
        for ex in examples {
            self.hidden(&ex.inputs, &mut h);
            dh.iter_mut().for_each(|x| *x = 0.0);
            let outs = std::iter::once((ex.target, 1.0)).chain(ex.negatives.iter().map(|&n| (n, 0.0)));
            for (w, label) in outs {
                let g = sigmoid(dot(self.out_row(w), &h)) - label;
                for k in 0..dim {
                    g_out[w * dim + k] += g * h[k];
                    dh[k] += g * self.output[w * dim + k];
                }
            }
            let inv = 1.0 / ex.inputs.len() as f64;
            for &c in &ex.inputs {
                for k in 0..dim {
                    g_in[c * dim + k] += dh[k] * inv;
                }
            }
        }
        (g_in, g_out)
    }

    /// One SGD step on a single example; returns the example's loss before
    /// the update.
    fn sgd_step(&mut self, ex: &TrainExample, rate: f64, h: &mut [f64], dh: &mut [f64]) -> f64 {
        let dim = self.dim;
        self.hidden(&ex.inputs, h);
        dh.iter_mut().for_each(|x| *x = 0.0);
        let mut loss = 0.0;
        let outs = std::iter::once((ex.target, 1.0)).chain(ex.negatives.iter().map(|&n| (n, 0.0)));
        for (w, label) in outs {
            let row = &mut self.output[w * dim..(w + 1) * dim];
            let score = dot(row, h);
            loss += if label > 0.0 {
                neg_log_sigmoid(score)
            } else {
                neg_log_sigmoid(-score)
            };
            let g = sigmoid(score) - label;
            for k in 0..dim {
                dh[k] += g * row[k];
                row[k] -= rate * g * h[k];
            }
        }
        let step = rate / ex.inputs.len() as f64;
        for &c in &ex.inputs {
            let row = &mut self.input[c * dim..(c + 1) * dim];
            for k in 0..dim {
                row[k] -= step * dh[k];
            }
        }
        loss
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean per-example loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub examples_per_epoch: Vec<usize>,
}

fn subsample<R: Rng>(
    docs: &[Vec<usize>],
    counts: &[u64],
    threshold: f64,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    if threshold <= 0.0 {
        return docs.to_vec();
    }
    let total: u64 = counts.iter().sum();
    let keep: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let f = c as f64 / total as f64;
            if f <= 0.0 {
                1.0
            } else {
                ((f / threshold).sqrt() + 1.0) * threshold / f
            }
        })
        .collect();
    docs.iter()
        .map(|d| {
            d.iter()
                .copied()
                .filter(|&w| keep[w] >= 1.0 || rng.gen::<f64>() < keep[w])
                .collect()
        })
        .collect()
}

/// Trains CBOW or skip-gram and returns the input-vector table plus the
/// per-epoch losses.
pub fn train(
    method: Method,
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    dim: usize,
) -> Result<(EmbeddingMatrix, TrainReport)> {
    cfg.validate()?;
    if dim == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    if vocab.len() < 2 {
        return Err(Error::invalid(
            "vocabulary needs at least 2 words for negative sampling",
        ));
    }
    let table = build_negative_table(vocab)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Word2VecModel::init(vocab.len(), dim, &mut rng);
    let docs: Vec<Vec<usize>> = corpus
        .documents()
        .iter()
        .map(|d| vocab.encode(&d.tokens))
        .collect();

    let positions: usize = docs.iter().map(Vec::len).sum();
    let total_steps = (positions * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut report = TrainReport::default();
    let mut h = vec![0.0; dim];
    let mut dh = vec![0.0; dim];
    let mut ex = TrainExample {
        inputs: Vec::new(),
        target: 0,
        negatives: Vec::new(),
    };

    for _epoch in 0..cfg.epochs {
        let epoch_docs = subsample(&docs, vocab.counts(), cfg.subsample_threshold, &mut rng);
        let mut loss_sum = 0.0;
        let mut n_examples = 0usize;
        for doc in &epoch_docs {
            for t in 0..doc.len() {
                let rate = (cfg.initial_rate
                    - (cfg.initial_rate - MIN_RATE) * processed as f64 / total_steps)
                    .max(MIN_RATE);
                processed += 1;
                match method {
                    Method::Cbow => {
                        ex.inputs = context(doc, t, cfg.window);
                        if ex.inputs.is_empty() {
                            continue;
                        }
                        ex.target = doc[t];
                        draw_negatives(&table, ex.target, cfg.negatives, &mut rng, &mut ex.negatives);
                        loss_sum += model.sgd_step(&ex, rate, &mut h, &mut dh);
                        n_examples += 1;
                    }
                    Method::SkipGram => {
                        let ctx = context(doc, t, cfg.window);
                        ex.inputs.clear();
                        ex.inputs.push(doc[t]);
                        for target in ctx {
                            ex.target = target;
                            draw_negatives(&table, target, cfg.negatives, &mut rng, &mut ex.negatives);
                            loss_sum += model.sgd_step(&ex, rate, &mut h, &mut dh);
                            n_examples += 1;
                        }
                    }
                    Method::Svd => unreachable!("svd is not trained by SGD"),
                }
            }
        }
        report
            .epoch_losses
            .push(if n_examples > 0 { loss_sum / n_examples as f64 } else { 0.0 });
        report.examples_per_epoch.push(n_examples);
    }
    let emb = EmbeddingMatrix::new(dim, method, vocab.words().to_vec(), model.input)?;
    Ok((emb, report))
}

pub fn train_cbow(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    dim: usize,
) -> Result<EmbeddingMatrix> {
    train(Method::Cbow, corpus, vocab, cfg, dim).map(|(e, _)| e)
}

pub fn train_skipgram(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    dim: usize,
) -> Result<EmbeddingMatrix> {
    train(Method::SkipGram, corpus, vocab, cfg, dim).map(|(e, _)| e)
}
