//! Picking the smallest nested subset whose clustering is statistically
//! indistinguishable from the next larger one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::cluster_metrics;
use crate::ngram::{NgramDataset, SubsetChain};
use crate::stats::compare_with_provenance;
use crate::validity::tune_wishart;
use crate::wishart::{wishart_cluster, Clustering, WishartParams};

/// How each subset gets clustered.
#[derive(Debug, Clone, PartialEq)]
pub enum ClusterConfig {
    Fixed(WishartParams),
    Tuned {
        k_grid: Vec<usize>,
        h_grid: Vec<f64>,
        t: f64,
    },
}

impl ClusterConfig {
    pub fn cluster(&self, ds: &NgramDataset) -> Result<Clustering> {
        match self {
            ClusterConfig::Fixed(p) => wishart_cluster(ds, *p),
            ClusterConfig::Tuned { k_grid, h_grid, t } => {
                Ok(tune_wishart(ds, k_grid, h_grid, *t)?.best_clustering)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepComparison {
    pub size_a: usize,
    pub size_b: usize,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentativeSize {
    /// Requested size from the ladder.
    pub size: usize,
    /// Unique points actually in that subset.
    pub points: usize,
    /// No successive pair passed; the largest size was returned.
    pub warning: bool,
    pub steps: Vec<StepComparison>,
}

/// Smallest `s_j` for which `D_j` vs `D_{j+1}` has zero Holm rejections at
/// `alpha`. Subsets are clustered lazily and each at most once.
pub fn select_representative_size(
    chain: &SubsetChain,
    cfg: &ClusterConfig,
    alpha: f64,
) -> Result<RepresentativeSize> {
    if chain.len() < 2 {
        return Err(Error::invalid("subset chain needs at least two sizes"));
    }
    let members = chain.members();
    let metrics_of = |j: usize| -> Result<_> {
        let cl = cfg.cluster(&members[j])?;
        cluster_metrics(&members[j], &cl.labels)
    };

    let mut steps = Vec::new();
    let mut prev = metrics_of(0)?;
    for j in 0..chain.len() - 1 {
        let next = metrics_of(j + 1)?;
        let report = compare_with_provenance(
            &prev,
            &next,
            alpha,
            &format!("subset:{}", chain.sizes[j]),
            &format!("subset:{}", chain.sizes[j + 1]),
        )?;
        steps.push(StepComparison {
            size_a: chain.sizes[j],
            size_b: chain.sizes[j + 1],
            before: report.before,
            after: report.after,
        });
        if report.after == 0 {
            return Ok(RepresentativeSize {
                size: chain.sizes[j],
                points: members[j].len(),
                warning: false,
                steps,
            });
        }
        prev = next;
    }
    let last = chain.len() - 1;
    log::warn!("no subset pair passed; using the largest size");
    Ok(RepresentativeSize {
        size: chain.sizes[last],
        points: members[last].len(),
        warning: true,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::nested_subsets;

    #[test]
    fn identical_subsets_pick_smallest() {
        let pts: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 5.0, 5.1, 5.2]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let ds = NgramDataset::from_points(&pts).unwrap();
        let chain = nested_subsets(&ds, &[10, 20], 3).unwrap();
        let cfg = ClusterConfig::Fixed(WishartParams::new(1, 0.0).unwrap());
        let r = select_representative_size(&chain, &cfg, 0.05).unwrap();
        assert_eq!(r.size, 10);
        assert_eq!(r.points, 6);
        assert!(!r.warning);
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.steps[0].after, 0);
    }

    #[test]
    fn short_chain_rejected() {
        let ds = NgramDataset::from_points(&[vec![0.0], vec![1.0]]).unwrap();
        let chain = nested_subsets(&ds, &[2], 0).unwrap();
        let cfg = ClusterConfig::Fixed(WishartParams::new(1, 0.0).unwrap());
        assert!(select_representative_size(&chain, &cfg, 0.05).is_err());
    }
}
