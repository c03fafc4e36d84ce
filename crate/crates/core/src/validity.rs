//! Calinski-Harabasz index, its noise-penalized variant, and the Wishart
//! hyperparameter grid search that maximizes it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ngram::NgramDataset;
use crate::wishart::{Clustering, WishartIndex, WishartParams};

/// CH over non-noise points: `[B/(K−1)] / [W/(N'−K)]`, every unique point
/// weighted once. Returns `+∞` when the within-cluster dispersion is zero.
pub fn calinski_harabasz(ds: &NgramDataset, labels: &[usize]) -> Result<f64> {
    if labels.len() != ds.len() {
        return Err(Error::invalid("labels do not match dataset"));
    }
    let width = ds.width();
    let nc = labels.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; nc + 1];
    let mut sums = vec![0.0f64; (nc + 1) * width];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        counts[l] += 1;
        for (s, &v) in sums[l * width..(l + 1) * width].iter_mut().zip(ds.point(i)) {
            *s += v as f64;
        }
    }
    let k = counts.iter().skip(1).filter(|&&c| c > 0).count();
    if k < 2 {
        return Err(Error::ChUndefined(k));
    }
    let n_kept: usize = counts.iter().skip(1).sum();

    let mut overall = vec![0.0f64; width];
    for l in 1..=nc {
        for (o, s) in overall.iter_mut().zip(&sums[l * width..(l + 1) * width]) {
            *o += s;
        }
    }
    overall.iter_mut().for_each(|o| *o /= n_kept as f64);
    let mut centroids = sums;
    for l in 1..=nc {
        if counts[l] > 0 {
            let c = counts[l] as f64;
            centroids[l * width..(l + 1) * width]
                .iter_mut()
                .for_each(|v| *v /= c);
        }
    }

    let mut between = 0.0;
    for l in 1..=nc {
        if counts[l] == 0 {
            continue;
        }
        let d2: f64 = centroids[l * width..(l + 1) * width]
            .iter()
            .zip(&overall)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        between += counts[l] as f64 * d2;
    }
    let mut within = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        within += ds
            .point(i)
            .iter()
            .zip(&centroids[l * width..(l + 1) * width])
            .map(|(&x, c)| (x as f64 - c) * (x as f64 - c))
            .sum::<f64>();
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n_kept - k) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityScore {
    pub ch: f64,
    pub ratio_not_noise: f64,
    pub t: f64,
    pub ch_adj: f64,
}

/// `ch · ratio_not_noise^T`.
pub fn ch_adjusted(ch: f64, clustering: &Clustering, t: f64) -> Result<ValidityScore> {
    score_from_ratio(ch, clustering.ratio_not_noise(), t)
}

pub fn score_from_ratio(ch: f64, ratio_not_noise: f64, t: f64) -> Result<ValidityScore> {
    if !(t >= 0.0) {
        return Err(Error::invalid("T must be ≥ 0"));
    }
    Ok(ValidityScore {
        ch,
        ratio_not_noise,
        t,
        ch_adj: ch * ratio_not_noise.powf(t),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub k: usize,
    pub h: f64,
    pub n_clusters: usize,
    pub ratio_not_noise: f64,
    /// `None` when the cell has fewer than two clusters or `k ≥ N`.
    pub score: Option<ValidityScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: WishartParams,
    pub best_score: ValidityScore,
    pub best_clustering: Clustering,
    pub grid: Vec<GridRow>,
}

impl TuneResult {
    /// `k,h,NC,ratio_not_noise,ch,ch_adj`; undefined scores are written as
    /// `NaN`.
    pub fn grid_csv(&self) -> String {
        grid_csv(&self.grid)
    }
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from("k,h,NC,ratio_not_noise,ch,ch_adj\n");
    for r in rows {
        let (ch, adj) = r.score.map_or((f64::NAN, f64::NAN), |s| (s.ch, s.ch_adj));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k, r.h, r.n_clusters, r.ratio_not_noise, ch, adj
        );
    }
    out
}

pub fn write_grid_csv(rows: &[GridRow], path: &Path) -> Result<()> {
    fs::write(path, grid_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Index of the row with the largest `ch_adj`; ties go to smaller `k`, then
/// smaller `h`. `+∞` beats every finite score.
pub fn select_best(rows: &[GridRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        let Some(s) = r.score else { continue };
        if s.ch_adj.is_nan() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = rows[b].score.unwrap().ch_adj;
                let better = s.ch_adj > cur
                    || (s.ch_adj == cur
                        && (r.k, r.h).partial_cmp(&(rows[b].k, rows[b].h))
                            == Some(std::cmp::Ordering::Less));
                if better {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Clusters `ds` at every `(k, h)` cell and keeps the cell maximizing
/// `ch_adj` with exponent `t`.
pub fn tune_wishart(
    ds: &NgramDataset,
    k_grid: &[usize],
    h_grid: &[f64],
    t: f64,
) -> Result<TuneResult> {
    if k_grid.is_empty() || h_grid.is_empty() {
        return Err(Error::invalid("grids must be non-empty"));
    }
    let cells: Vec<WishartParams> = k_grid
        .iter()
        .flat_map(|&k| h_grid.iter().map(move |&h| (k, h)))
        .map(|(k, h)| WishartParams::new(k, h))
        .collect::<Result<_>>()?;
    let n = ds.len();
    let usable_k = k_grid.iter().copied().filter(|&k| k < n).max();
    let index = match usable_k {
        Some(k_max) => Some(WishartIndex::new(ds, k_max)?),
        None => None,
    };

    let evaluated: Vec<(GridRow, Option<Clustering>)> = cells
        .par_iter()
        .map(|&params| {
            let Some(index) = index.as_ref().filter(|_| params.k < n) else {
                let row = GridRow {
                    k: params.k,
                    h: params.h,
                    n_clusters: 0,
                    ratio_not_noise: 0.0,
                    score: None,
                };
                return Ok((row, None));
            };
            let cl = index.cluster(params)?;
            let score = match calinski_harabasz(ds, &cl.labels) {
                Ok(ch) => Some(ch_adjusted(ch, &cl, t)?),
                Err(Error::ChUndefined(_)) => None,
                Err(e) => return Err(e),
            };
            let row = GridRow {
                k: params.k,
                h: params.h,
                n_clusters: cl.n_clusters(),
                ratio_not_noise: cl.ratio_not_noise(),
                score,
            };
            Ok((row, Some(cl)))
        })
        .collect::<Result<_>>()?;

    let grid: Vec<GridRow> = evaluated.iter().map(|(r, _)| r.clone()).collect();
    let best_idx = select_best(&grid).ok_or(Error::NoValidClustering)?;
    let (row, cl) = evaluated.into_iter().nth(best_idx).unwrap();
    Ok(TuneResult {
        best: WishartParams::new(row.k, row.h)?,
        best_score: row.score.unwrap(),
        best_clustering: cl.unwrap(),
        grid,
    })
}
