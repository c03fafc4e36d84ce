//! The eight per-cluster metrics compared between two clusterings.
//!
//! | id | value |
//! |----|-------|
//! | 1  | unique count / largest unique count |
//! | 2  | unique count / total unique count |
//! | 3  | occurrence count / largest occurrence count |
//! | 4  | occurrence count / total occurrence count |
//! | 5  | max distance to centroid |
//! | 6  | mean distance to centroid |
//! | 7  | max pairwise distance |
//! | 8  | mean pairwise distance (ordered pairs) |
//!
//! Noise is excluded; centroids and distances use unique points only.
//! Singleton clusters get 0 for metrics 5–8.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::dist;
use crate::ngram::NgramDataset;

pub const N_METRICS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub id: usize,
    pub unique: usize,
    pub occurrences: u64,
    pub centroid: Vec<f64>,
    pub members: Vec<usize>,
}

pub fn summarize_clusters(ds: &NgramDataset, labels: &[usize]) -> Result<Vec<ClusterSummary>> {
    if labels.len() != ds.len() {
        return Err(Error::invalid("labels do not match dataset"));
    }
    let nc = labels.iter().copied().max().unwrap_or(0);
    if nc == 0 {
        return Err(Error::NoClusters);
    }
    let mut members = vec![Vec::new(); nc];
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            members[l - 1].push(i);
        }
    }
    let width = ds.width();
    Ok(members
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(c, members)| {
            let mut centroid = vec![0.0; width];
            for &i in &members {
                for (s, &v) in centroid.iter_mut().zip(ds.point(i)) {
                    *s += v as f64;
                }
            }
            let inv = 1.0 / members.len() as f64;
            centroid.iter_mut().for_each(|v| *v *= inv);
            ClusterSummary {
                id: c + 1,
                unique: members.len(),
                occurrences: members.iter().map(|&i| ds.multiplicity(i) as u64).sum(),
                centroid,
                members,
            }
        })
        .collect())
}

/// One array per metric, each indexed like the summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricArrays {
    pub cluster_ids: Vec<usize>,
    pub values: [Vec<f64>; N_METRICS],
}

impl MetricArrays {
    pub fn n_clusters(&self) -> usize {
        self.cluster_ids.len()
    }

    /// Metric `id` in `1..=8`.
    pub fn metric(&self, id: usize) -> &[f64] {
        &self.values[id - 1]
    }

    /// `cluster_id,xi1,…,xi8`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster_id,xi1,xi2,xi3,xi4,xi5,xi6,xi7,xi8\n");
        for (row, id) in self.cluster_ids.iter().enumerate() {
            let _ = write!(out, "{id}");
            for m in &self.values {
                let _ = write!(out, ",{}", m[row]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn centroid_distances(ds: &NgramDataset, s: &ClusterSummary) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for &i in &s.members {
        let d: f64 = ds
            .point(i)
            .iter()
            .zip(&s.centroid)
            .map(|(&x, c)| (x as f64 - c) * (x as f64 - c))
            .sum::<f64>()
            .sqrt();
        max = max.max(d);
        sum += d;
    }
    (max, sum / s.unique as f64)
}

fn pairwise_distances(ds: &NgramDataset, s: &ClusterSummary) -> (f64, f64) {
    if s.unique < 2 {
        return (0.0, 0.0);
    }
    // per-row partials, reduced in row order so the sum is schedule-free
    let rows: Vec<(f64, f64)> = (0..s.unique)
        .into_par_iter()
        .map(|a| {
            let i = s.members[a];
            s.members[a + 1..].iter().fold((0.0f64, 0.0), |(mx, sm), &j| {
                let d = dist(ds.point(i), ds.point(j));
                (mx.max(d), sm + d)
            })
        })
        .collect();
    let (max, sum) = rows
        .into_iter()
        .fold((0.0f64, 0.0), |(mx, sm), (m, s)| (mx.max(m), sm + s));
    // each unordered pair stands for two ordered pairs
    let n = s.unique as f64;
    (max, 2.0 * sum / (n * (n - 1.0)))
}

pub fn metric_arrays(summaries: &[ClusterSummary], ds: &NgramDataset) -> Result<MetricArrays> {
    if summaries.is_empty() {
        return Err(Error::NoClusters);
    }
    let max_unique = summaries.iter().map(|s| s.unique).max().unwrap() as f64;
    let sum_unique: f64 = summaries.iter().map(|s| s.unique as f64).sum();
    let max_occ = summaries.iter().map(|s| s.occurrences).max().unwrap() as f64;
    let sum_occ: f64 = summaries.iter().map(|s| s.occurrences as f64).sum();

    let spreads: Vec<[f64; 4]> = summaries
        .par_iter()
        .map(|s| {
            if s.unique < 2 {
                return [0.0; 4];
            }
            let (cmax, cmean) = centroid_distances(ds, s);
            let (pmax, pmean) = pairwise_distances(ds, s);
            [cmax, cmean, pmax, pmean]
        })
        .collect();

    let mut values: [Vec<f64>; N_METRICS] = Default::default();
    for (s, spread) in summaries.iter().zip(&spreads) {
        values[0].push(s.unique as f64 / max_unique);
        values[1].push(s.unique as f64 / sum_unique);
        values[2].push(s.occurrences as f64 / max_occ);
        values[3].push(s.occurrences as f64 / sum_occ);
        for (m, v) in spread.iter().enumerate() {
            values[4 + m].push(*v);
        }
    }
    Ok(MetricArrays {
        cluster_ids: summaries.iter().map(|s| s.id).collect(),
        values,
    })
}

/// Summaries followed by metric arrays.
pub fn cluster_metrics(ds: &NgramDataset, labels: &[usize]) -> Result<MetricArrays> {
    metric_arrays(&summarize_clusters(ds, labels)?, ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(points: &[[f32; 2]], mult: &[u32]) -> NgramDataset {
        let data = points.iter().flatten().copied().collect();
        NgramDataset::new(1, 2, data, mult.to_vec(), "t").unwrap()
    }

    #[test]
    fn two_point_cluster() {
        let d = ds(&[[0.0, 0.0], [2.0, 0.0]], &[2, 1]);
        let s = summarize_clusters(&d, &[1, 1]).unwrap();
        assert_eq!(s[0].centroid, vec![1.0, 0.0]);
        assert_eq!((s[0].unique, s[0].occurrences), (2, 3));
        let m = metric_arrays(&s, &d).unwrap();
        for id in 1..=4 {
            assert_eq!(m.metric(id), &[1.0]);
        }
        assert_eq!(m.metric(5), &[1.0]);
        assert_eq!(m.metric(6), &[1.0]);
        assert_eq!(m.metric(7), &[2.0]);
        assert_eq!(m.metric(8), &[2.0]);
    }

    #[test]
    fn singletons_and_noise() {
        let d = ds(&[[0.0, 0.0], [5.0, 5.0], [9.0, 9.0]], &[1, 4, 1]);
        let m = cluster_metrics(&d, &[1, 0, 2]).unwrap();
        assert_eq!(m.cluster_ids, vec![1, 2]);
        for id in 5..=8 {
            assert_eq!(m.metric(id), &[0.0, 0.0]);
        }
        assert_eq!(m.metric(4), &[0.5, 0.5]);
        assert!(matches!(
            summarize_clusters(&d, &[0, 0, 0]),
            Err(Error::NoClusters)
        ));
    }

    #[test]
    fn csv_layout() {
        let d = ds(&[[0.0, 0.0], [2.0, 0.0]], &[1, 1]);
        let m = cluster_metrics(&d, &[1, 1]).unwrap();
        assert_eq!(
            m.to_csv(),
            "cluster_id,xi1,xi2,xi3,xi4,xi5,xi6,xi7,xi8\n1,1,1,1,1,1,1,2,2\n"
        );
    }
}
