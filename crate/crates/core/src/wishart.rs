//! Wishart mode-analysis clustering on k-NN density estimates.
//!
//! Points are introduced in order of increasing k-NN radius (decreasing
//! density). A point links to the already-introduced points inside its own
//! k-NN ball and then:
//!
//! * with no such neighbours it opens a new cluster;
//! * with neighbours in one cluster it joins it, unless that cluster is
//!   completed (then it is noise);
//! * with neighbours in several clusters it is noise if all of them are
//!   completed; if two or more of them are significant it is noise, the
//!   significant ones become completed and the insignificant live ones are
//!   dissolved into noise; otherwise the live clusters are merged into the
//!   significant one (or the oldest live one) together with the point.
//!
//! Noise behaves as a completed cluster that is never significant. A cluster
//! is significant when it holds at least `k` points and its density spread
//! `max p − min p` is at least `h`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::knn::{KdTree, KnnTable};
use crate::ngram::NgramDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WishartParams {
    pub k: usize,
    pub h: f64,
}

impl WishartParams {
    pub fn new(k: usize, h: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::invalid("h must be finite and ≥ 0"));
        }
        Ok(WishartParams { k, h })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `0` is noise, clusters are `1..=n_clusters` in creation order.
    pub labels: Vec<usize>,
    pub densities: Vec<f64>,
    pub radii: Vec<f64>,
    /// Completion flag of cluster `c` at index `c - 1`.
    pub completed: Vec<bool>,
    pub params: WishartParams,
}

impl Clustering {
    pub fn n_clusters(&self) -> usize {
        self.completed.len()
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 0).count()
    }

    pub fn ratio_not_noise(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        (self.labels.len() - self.n_noise()) as f64 / self.labels.len() as f64
    }

    /// `point_index,label,density,knn_radius`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point_index,label,density,knn_radius\n");
        for (i, ((l, p), r)) in self
            .labels
            .iter()
            .zip(&self.densities)
            .zip(&self.radii)
            .enumerate()
        {
            let _ = writeln!(out, "{i},{l},{p:e},{r:e}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Reads a clustering CSV. Completion flags and parameters are not part
    /// of the file; flags come back `false` and `params` as given.
    pub fn read_csv(path: &Path, params: WishartParams) -> Result<Clustering> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header.trim() != "point_index,label,density,knn_radius" {
            return Err(Error::Format(format!(
                "{}: unexpected clustering header {header:?}",
                path.display()
            )));
        }
        let mut labels = Vec::new();
        let mut densities = Vec::new();
        let mut radii = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let bad = || Error::Parse {
                path: path.to_owned(),
                line: lineno + 2,
                msg: "expected point_index,label,density,knn_radius".into(),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 || cols[0].parse::<usize>().ok() != Some(labels.len()) {
                return Err(bad());
            }
            labels.push(cols[1].parse::<usize>().map_err(|_| bad())?);
            densities.push(cols[2].parse::<f64>().map_err(|_| bad())?);
            radii.push(cols[3].parse::<f64>().map_err(|_| bad())?);
        }
        let nc = labels.iter().copied().max().unwrap_or(0);
        let used: BTreeSet<usize> = labels.iter().copied().filter(|&l| l > 0).collect();
        if used.len() != nc {
            return Err(Error::Format(format!(
                "{}: cluster ids are not contiguous 1..{nc}",
                path.display()
            )));
        }
        Ok(Clustering {
            labels,
            densities,
            radii,
            completed: vec![false; nc],
            params,
        })
    }
}

/// Volume of the `dim`-ball of radius `r`, in log space.
pub fn ln_ball_volume(r: f64, dim: usize) -> f64 {
    let d = dim as f64;
    0.5 * d * std::f64::consts::PI.ln() + d * r.ln() - ln_gamma(0.5 * d + 1.0)
}

/// k-NN density estimate `k / (N · V_dim(d))`.
pub fn density(d: f64, k: usize, n: usize, dim: usize) -> f64 {
    ((k as f64).ln() - (n as f64).ln() - ln_ball_volume(d, dim)).exp()
}

/// Spatial index and k-NN table shared by every clustering of one dataset.
pub struct WishartIndex<'a> {
    tree: KdTree<'a>,
    table: KnnTable,
    dim: usize,
    eps: f64,
}

impl<'a> WishartIndex<'a> {
    /// Prepares clustering for any `k ≤ k_max`.
    pub fn new(ds: &'a NgramDataset, k_max: usize) -> Result<Self> {
        let n = ds.len();
        if n < 2 {
            return Err(Error::TooFewPoints { k: k_max, n });
        }
        let dim = ds.width();
        let tree = KdTree::new(ds.as_slice(), dim);
        let table = KnnTable::build(&tree, k_max)?;
        // bounding-box diagonal bounds the diameter from above
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in ds.points() {
            for (j, &v) in p.iter().enumerate() {
                lo[j] = lo[j].min(v as f64);
                hi[j] = hi[j].max(v as f64);
            }
        }
        let diag = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        Ok(WishartIndex {
            tree,
            table,
            dim,
            eps: 1e-12 * diag,
        })
    }

    pub fn k_max(&self) -> usize {
        self.table.k()
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Clamped k-NN radii for `k`.
    pub fn radii(&self, k: usize) -> Vec<f64> {
        self.table
            .radii(k)
            .into_iter()
            .map(|d| d.max(self.eps).max(f64::MIN_POSITIVE))
            .collect()
    }

    pub fn cluster(&self, params: WishartParams) -> Result<Clustering> {
        let n = self.len();
        let k = params.k;
        if k == 0 || k >= n {
            return Err(Error::TooFewPoints { k, n });
        }
        if k > self.k_max() {
            return Err(Error::invalid(format!(
                "k = {k} exceeds the prepared neighbour count {}",
                self.k_max()
            )));
        }
        let radii = self.radii(k);
        let densities: Vec<f64> = radii.iter().map(|&d| density(d, k, n, self.dim)).collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]).then(a.cmp(&b)));
        let mut rank = vec![0usize; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let earlier: Vec<Vec<usize>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut nb = self.tree.within(self.tree.point(i), radii[i], Some(i));
                nb.retain(|&j| rank[j] < rank[i]);
                nb
            })
            .collect();

        let labels = propagate(&order, &earlier, &densities, params);
        Ok(finalize(labels, densities, radii, params))
    }
}

pub fn wishart_cluster(ds: &NgramDataset, params: WishartParams) -> Result<Clustering> {
    WishartIndex::new(ds, params.k)?.cluster(params)
}

const NOISE: usize = 0;
const UNSEEN: usize = usize::MAX;

struct Mode {
    members: Vec<usize>,
    completed: bool,
    p_min: f64,
    p_max: f64,
}

impl Mode {
    fn significant(&self, params: WishartParams) -> bool {
        self.members.len() >= params.k && self.p_max - self.p_min >= params.h
    }
}

/// Sequential label propagation. Returns raw labels (cluster slots in
/// creation order, with dead slots) together with each slot's completion.
fn propagate(
    order: &[usize],
    earlier: &[Vec<usize>],
    densities: &[f64],
    params: WishartParams,
) -> (Vec<usize>, Vec<Mode>) {
    let n = order.len();
    let mut label = vec![UNSEEN; n];
    let mut modes: Vec<Mode> = vec![Mode {
        members: Vec::new(),
        completed: true,
        p_min: 0.0,
        p_max: 0.0,
    }];

    for &i in order {
        let p = densities[i];
        if earlier[i].is_empty() {
            label[i] = modes.len();
            modes.push(Mode {
                members: vec![i],
                completed: false,
                p_min: p,
                p_max: p,
            });
            continue;
        }
        let touched: BTreeSet<usize> = earlier[i].iter().map(|&j| label[j]).collect();
        debug_assert!(!touched.contains(&UNSEEN));

        if touched.len() == 1 {
            let c = *touched.first().unwrap();
            if modes[c].completed {
                label[i] = NOISE;
            } else {
                join(&mut modes[c], i, p);
                label[i] = c;
            }
            continue;
        }

        if touched.iter().all(|&c| modes[c].completed) {
            label[i] = NOISE;
            continue;
        }
        let significant: Vec<usize> = touched
            .iter()
            .copied()
            .filter(|&c| c != NOISE && modes[c].significant(params))
            .collect();
        let live: Vec<usize> = touched
            .iter()
            .copied()
            .filter(|&c| !modes[c].completed)
            .collect();

        if significant.len() >= 2 {
            label[i] = NOISE;
            for &c in &significant {
                modes[c].completed = true;
            }
            for &c in &live {
                if !significant.contains(&c) {
                    for z in std::mem::take(&mut modes[c].members) {
                        label[z] = NOISE;
                    }
                    modes[c].completed = true;
                }
            }
        } else {
            let target = significant.first().copied().unwrap_or(live[0]);
            for &c in &live {
                if c == target {
                    continue;
                }
                let moved = std::mem::take(&mut modes[c].members);
                for &z in &moved {
                    label[z] = target;
                }
                let (lo, hi) = (modes[c].p_min, modes[c].p_max);
                modes[c].completed = true;
                let t = &mut modes[target];
                t.members.extend(moved);
                t.p_min = t.p_min.min(lo);
                t.p_max = t.p_max.max(hi);
            }
            join(&mut modes[target], i, p);
            label[i] = target;
        }
    }
    (label, modes)
}

fn join(mode: &mut Mode, i: usize, p: f64) {
    mode.members.push(i);
    mode.p_min = mode.p_min.min(p);
    mode.p_max = mode.p_max.max(p);
}

fn finalize(
    (raw, modes): (Vec<usize>, Vec<Mode>),
    densities: Vec<f64>,
    radii: Vec<f64>,
    params: WishartParams,
) -> Clustering {
    let mut remap = vec![NOISE; modes.len()];
    let mut completed = Vec::new();
    for (slot, mode) in modes.iter().enumerate().skip(1) {
        if !mode.members.is_empty() {
            completed.push(mode.completed);
            remap[slot] = completed.len();
        }
    }
    Clustering {
        labels: raw.into_iter().map(|l| remap[l]).collect(),
        densities,
        radii,
        completed,
        params,
    }
}
