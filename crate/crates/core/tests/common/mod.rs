//! Naive reference implementations shared by the integration tests. None of
//! these call into the library's own numerics.
#![allow(dead_code)]

use rand::Rng;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sempath::corpus::{build_vocabulary, Corpus};
use sempath::embeddings::{
    build_negative_table, cbow_examples, skipgram_examples, TrainExample, Word2VecModel,
};
use sempath::linalg::DenseMatrix;
use sempath::ngram::NgramDataset;

pub fn dataset(points: &[Vec<f64>]) -> NgramDataset {
    NgramDataset::from_points(points).unwrap()
}

pub fn dataset_with(points: &[Vec<f64>], mult: &[u32]) -> NgramDataset {
    let dim = points[0].len();
    let data = points.iter().flatten().map(|&v| v as f32).collect();
    NgramDataset::new(1, dim, data, mult.to_vec(), "fixture").unwrap()
}

pub fn toy_corpus(docs: &[&str]) -> Corpus {
    Corpus::from_token_lists(docs.iter().enumerate().map(|(i, d)| {
        (
            format!("d{i:02}"),
            d.split_whitespace().map(str::to_owned).collect::<Vec<_>>(),
        )
    }))
    .unwrap()
}

/// Singular values (descending) from nalgebra's dense SVD.
pub fn dense_singular_values(a: &DenseMatrix) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Negative-sampling loss written out directly from the definition.
pub fn naive_w2v_loss(input: &[f64], output: &[f64], dim: usize, examples: &[TrainExample]) -> f64 {
    let row = |t: &[f64], w: usize| t[w * dim..(w + 1) * dim].to_vec();
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut total = 0.0;
    for ex in examples {
        let mut h = vec![0.0; dim];
        for &c in &ex.inputs {
            for (a, b) in h.iter_mut().zip(row(input, c)) {
                *a += b / ex.inputs.len() as f64;
            }
        }
        let score = |w: usize| row(output, w).iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
        total -= sig(score(ex.target)).ln();
        for &n in &ex.negatives {
            total -= (1.0 - sig(score(n))).ln();
        }
    }
    total
}

fn toy_training(skipgram: bool) -> (Word2VecModel, Vec<TrainExample>) {
    let corpus = toy_corpus(&["a b c a b d"]);
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let docs: Vec<Vec<usize>> = corpus
        .documents()
        .iter()
        .map(|d| vocab.encode(&d.tokens))
        .collect();
    let table = build_negative_table(&vocab).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let examples = if skipgram {
        skipgram_examples(&docs, 2, 3, &table, &mut rng)
    } else {
        cbow_examples(&docs, 2, 3, &table, &mut rng)
    };
    let dim = 4;
    let v = vocab.len();
    let input = (0..v * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let output = (0..v * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    (Word2VecModel::from_weights(dim, input, output), examples)
}

pub struct GradientCheck {
    /// `‖numeric − analytic‖ / ‖numeric‖`.
    pub relative: f64,
    pub scale: f64,
    /// Every entry within `1e-4 · max(|numeric|, 1e-2)`.
    pub entries_ok: bool,
    /// Library loss against the naive loss at the base point.
    pub loss_gap: f64,
}

/// Analytic gradient of the toy model against central differences of
/// [`naive_w2v_loss`] with step `1e-4`.
pub fn finite_difference_check(skipgram: bool) -> GradientCheck {
    let (model, examples) = toy_training(skipgram);
    let dim = model.dim();
    let (g_in, g_out) = model.gradient(&examples);
    let eps = 1e-4;
    let mut num = Vec::new();
    let mut ana = Vec::new();
    for (which, grad) in [(0, &g_in), (1, &g_out)] {
        for i in 0..grad.len() {
            let (mut plus, mut minus) = (model.clone(), model.clone());
            if which == 0 {
                plus.input[i] += eps;
                minus.input[i] -= eps;
            } else {
                plus.output[i] += eps;
                minus.output[i] -= eps;
            }
            let fd = (naive_w2v_loss(&plus.input, &plus.output, dim, &examples)
                - naive_w2v_loss(&minus.input, &minus.output, dim, &examples))
                / (2.0 * eps);
            num.push(fd);
            ana.push(grad[i]);
        }
    }
    let diff: f64 = num.iter().zip(&ana).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = num.iter().map(|a| a * a).sum::<f64>().sqrt();
    GradientCheck {
        relative: diff / scale,
        scale,
        entries_ok: num.iter().zip(&ana).all(|(a, b)| (a - b).abs() <= 1e-4 * a.abs().max(1e-2)),
        loss_gap: (model.loss(&examples) - naive_w2v_loss(&model.input, &model.output, dim, &examples)).abs(),
    }
}

pub fn euclid(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `k` nearest other points by full sort, ties to the smaller index.
pub fn brute_knn(data: &[f32], dim: usize, q: usize, k: usize) -> Vec<usize> {
    let n = data.len() / dim;
    let qp = &data[q * dim..(q + 1) * dim];
    let mut all: Vec<(f64, usize)> = (0..n)
        .filter(|&i| i != q)
        .map(|i| (euclid(qp, &data[i * dim..(i + 1) * dim]), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Points rounded through f32 (as the dataset stores them) with random
/// labels in `0..=clusters` (0 = noise).
pub fn random_labelled<R: Rng>(rng: &mut R, n: usize, dim: usize, clusters: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-3.0f32..3.0) as f64).collect())
        .collect();
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..=clusters)).collect();
    // make ids contiguous
    let mut used: Vec<usize> = labels.iter().copied().filter(|&l| l > 0).collect();
    used.sort_unstable();
    used.dedup();
    for l in labels.iter_mut().filter(|l| **l > 0) {
        *l = used.binary_search(l).unwrap() + 1;
    }
    (pts, labels)
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// CH through pairwise distances: `W = Σ_k Σ_{i,j∈k} d²/(2n_k)`,
/// `B = T − W` with `T` the same sum over all kept points. NaN when fewer
/// than two clusters.
pub fn naive_ch(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let kept: Vec<usize> = (0..points.len()).filter(|&i| labels[i] > 0).collect();
    let mut ids: Vec<usize> = kept.iter().map(|&i| labels[i]).collect();
    ids.sort_unstable();
    ids.dedup();
    let k = ids.len();
    if k < 2 {
        return f64::NAN;
    }
    let n = kept.len() as f64;
    let mut total = 0.0;
    for &i in &kept {
        for &j in &kept {
            total += sq(&points[i], &points[j]);
        }
    }
    total /= 2.0 * n;
    let mut within = 0.0;
    for &c in &ids {
        let m: Vec<usize> = kept.iter().copied().filter(|&i| labels[i] == c).collect();
        let mut s = 0.0;
        for &i in &m {
            for &j in &m {
                s += sq(&points[i], &points[j]);
            }
        }
        within += s / (2.0 * m.len() as f64);
    }
    if within == 0.0 {
        return f64::INFINITY;
    }
    ((total - within) / (k as f64 - 1.0)) / (within / (n - k as f64))
}

/// Eight metrics per cluster (ascending cluster id), straight from the
/// definitions.
pub fn naive_metrics(points: &[Vec<f64>], mult: &[u32], labels: &[usize]) -> Vec<[f64; 8]> {
    let nc = *labels.iter().max().unwrap();
    let groups: Vec<Vec<usize>> = (1..=nc)
        .map(|c| (0..points.len()).filter(|&i| labels[i] == c).collect())
        .filter(|g: &Vec<usize>| !g.is_empty())
        .collect();
    let uniq: Vec<f64> = groups.iter().map(|g| g.len() as f64).collect();
    let occ: Vec<f64> = groups.iter().map(|g| g.iter().map(|&i| mult[i] as f64).sum()).collect();
    let max_u = uniq.iter().cloned().fold(0.0, f64::max);
    let max_o = occ.iter().cloned().fold(0.0, f64::max);
    let sum_u: f64 = uniq.iter().sum();
    let sum_o: f64 = occ.iter().sum();
    groups
        .iter()
        .enumerate()
        .map(|(c, g)| {
            let mut row = [uniq[c] / max_u, uniq[c] / sum_u, occ[c] / max_o, occ[c] / sum_o, 0.0, 0.0, 0.0, 0.0];
            if g.len() > 1 {
                let dim = points[0].len();
                let centroid: Vec<f64> = (0..dim)
                    .map(|d| g.iter().map(|&i| points[i][d]).sum::<f64>() / g.len() as f64)
                    .collect();
                let dc: Vec<f64> = g.iter().map(|&i| sq(&points[i], &centroid).sqrt()).collect();
                row[4] = dc.iter().cloned().fold(0.0, f64::max);
                row[5] = dc.iter().sum::<f64>() / g.len() as f64;
                let mut pair_sum = 0.0;
                let mut pair_max = 0.0f64;
                for &i in g {
                    for &j in g {
                        if i != j {
                            let d = sq(&points[i], &points[j]).sqrt();
                            pair_sum += d;
                            pair_max = pair_max.max(d);
                        }
                    }
                }
                row[6] = pair_max;
                row[7] = pair_sum / (g.len() * (g.len() - 1)) as f64;
            }
            row
        })
        .collect()
}

/// `min(U_a, U_b)` by counting pairs `(x ∈ a, y ∈ b)` with `x > y`.
pub fn pair_count_u(a: &[f64], b: &[f64]) -> f64 {
    let ua = a.iter().map(|x| b.iter().filter(|&&y| *x > y).count()).sum::<usize>() as f64;
    ua.min((a.len() * b.len()) as f64 - ua)
}

/// Null distribution of `min(U_a, U_b)`: one entry per way of choosing
/// which `na` of the ranks `0..na+nb` belong to the first sample.
pub fn enumerated_null(na: usize, nb: usize) -> Vec<f64> {
    let n = na + nb;
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == na)
        .map(|mask| {
            let a: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i as f64).collect();
            let b: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| i as f64).collect();
            pair_count_u(&a, &b)
        })
        .collect()
}

/// Two-sided p as `P(min(U_a, U_b) ≤ observed)` under the null.
pub fn enumerated_p(null: &[f64], observed: f64) -> f64 {
    null.iter().filter(|&&u| u <= observed).count() as f64 / null.len() as f64
}

/// Holm by the textbook recipe: sort, step down, running max of scaled p.
pub fn naive_holm(p: &[f64], alpha: f64) -> (Vec<bool>, Vec<f64>) {
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap().then(a.cmp(&b)));
    let mut reject = vec![false; m];
    for (r, &i) in idx.iter().enumerate() {
        if p[i] > alpha / (m - r) as f64 {
            break;
        }
        reject[i] = true;
    }
    let mut adjusted = vec![0.0; m];
    for (r, &i) in idx.iter().enumerate() {
        let best = (0..=r).map(|s| (m - s) as f64 * p[idx[s]]).fold(0.0, f64::max);
        adjusted[i] = best.min(1.0);
    }
    (reject, adjusted)
}

/// Fraction of points whose label agrees with the truth under the best
/// one-to-one relabelling (exhaustive over permutations; few clusters).
pub fn best_permutation_accuracy(labels: &[usize], truth: &[usize], n_truth: usize) -> f64 {
    let kept: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] > 0).collect();
    if kept.is_empty() {
        return 0.0;
    }
    let nc = *labels.iter().max().unwrap();
    let mut best = 0usize;
    let mut perm: Vec<usize> = (0..nc.max(n_truth)).collect();
    permute(&mut perm, 0, &mut |p| {
        let hits = kept.iter().filter(|&&i| p[labels[i] - 1] == truth[i]).count();
        best = best.max(hits);
    });
    best as f64 / kept.len() as f64
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}
