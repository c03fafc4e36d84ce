use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CooccurrenceMatrix, EmbeddingMatrix, Method};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, orthonormalize_columns, DenseMatrix, LinearOperator};

/// Extra sketch columns beyond the target rank.
pub const DEFAULT_OVERSAMPLE: usize = 10;

/// Rank-`r` factors `a ≈ u · diag(s) · vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let r = self.s.len();
        let us = DenseMatrix::from_fn(self.u.rows(), r, |i, j| self.u.get(i, j) * self.s[j]);
        us.matmul(&self.v.transpose())
    }
}

/// Randomized subspace iteration: sketch with a Gaussian block, refine with
/// `power_iters` rounds of `A Aᵀ`, then take the exact SVD of the small
/// projected matrix. Singular vectors are sign-normalized so that the
/// largest-magnitude entry of each left vector is positive.
pub fn truncated_svd<A: LinearOperator>(
    a: &A,
    rank: usize,
    power_iters: usize,
    seed: u64,
) -> Result<TruncatedSvd> {
    let (m, n) = (a.nrows(), a.ncols());
    let min_dim = m.min(n);
    if rank == 0 || rank > min_dim {
        return Err(Error::invalid(format!(
            "rank {rank} must be in 1..={min_dim} for a {m}x{n} matrix"
        )));
    }
    let l = (rank + DEFAULT_OVERSAMPLE).min(min_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let omega = DenseMatrix::random_normal(n, l, &mut rng);
    let mut q = a.apply(&omega);
    orthonormalize_columns(&mut q, &mut rng);
    for _ in 0..power_iters {
        let mut z = a.apply_transpose(&q);
        orthonormalize_columns(&mut z, &mut rng);
        q = a.apply(&z);
        orthonormalize_columns(&mut q, &mut rng);
    }

    // Bᵀ = Aᵀ Q is n × l with n ≥ l; its SVD gives B's factors swapped.
    let bt = a.apply_transpose(&q);
    let (right, s, left_small) = jacobi_svd(&bt);
    let left = q.matmul(&left_small);

    let mut u = DenseMatrix::zeros(m, rank);
    let mut v = DenseMatrix::zeros(n, rank);
    for j in 0..rank {
        let col = left.column(j);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| {
                if x.abs() > best.1.abs() {
                    (i, x)
                } else {
                    best
                }
            })
            .1;
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            u.set(i, j, sign * left.get(i, j));
        }
        for i in 0..n {
            v.set(i, j, sign * right.get(i, j));
        }
    }
    Ok(TruncatedSvd {
        u,
        s: s[..rank].to_vec(),
        v,
    })
}

/// Word vectors are rows of `U_R · Σ_R^{1/2}`.
pub fn svd_embed(
    m: &CooccurrenceMatrix,
    vocab: &Vocabulary,
    dim: usize,
    power_iters: usize,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    if vocab.len() != m.n_words() {
        return Err(Error::invalid("vocabulary does not match co-occurrence matrix"));
    }
    let svd = truncated_svd(m, dim, power_iters, seed)?;
    let scale: Vec<f64> = svd.s.iter().map(|s| s.sqrt()).collect();
    let mut data = Vec::with_capacity(m.n_words() * dim);
    for i in 0..m.n_words() {
        data.extend((0..dim).map(|j| svd.u.get(i, j) * scale[j]));
    }
    EmbeddingMatrix::new(dim, Method::Svd, vocab.words().to_vec(), data)
}
