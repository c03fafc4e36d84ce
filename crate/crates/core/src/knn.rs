//! Exact Euclidean k-nearest-neighbour and fixed-radius queries over a
//! flat `f32` point array, backed by a bucketed kd-tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};

const LEAF_SIZE: usize = 16;

/// Squared Euclidean distance accumulated in `f64`, dimension by dimension.
#[inline]
pub fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

#[inline]
pub fn dist(a: &[f32], b: &[f32]) -> f64 {
    sq_dist(a, b).sqrt()
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

pub struct KdTree<'a> {
    data: &'a [f32],
    dim: usize,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl<'a> KdTree<'a> {
    pub fn new(data: &'a [f32], dim: usize) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "bad point array");
        let n = data.len() / dim;
        let mut tree = KdTree {
            data,
            dim,
            perm: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of largest spread at the median
        let mut best = (0, -1.0f64);
        for axis in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in &self.perm[start..end] {
                let v = self.data[p * self.dim + axis] as f64;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best.1 {
                best = (axis, hi - lo);
            }
        }
        let axis = best.0;
        if best.1 <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let (data, dim) = (self.data, self.dim);
        let key = |p: &usize| data[*p * dim + axis];
        self.perm[start..end].select_nth_unstable_by(mid - start, |a, b| {
            key(a).total_cmp(&key(b)).then(a.cmp(b))
        });
        let value = key(&self.perm[mid]) as f64;
        self.nodes.push(Node::Leaf { start, end }); // placeholder
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points other than `exclude`, sorted by `(distance,
    /// index)`.
    pub fn knn(&self, query: &[f32], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.knn_rec(0, query, k, exclude, &mut heap);
        }
        let mut out: Vec<(f64, usize)> = heap
            .into_vec()
            .into_iter()
            .map(|Candidate(d2, i)| (d2.sqrt(), i))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    fn knn_rec(
        &self,
        node: usize,
        query: &[f32],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.perm[start..end] {
                    if Some(p) == exclude {
                        continue;
                    }
                    let cand = Candidate(sq_dist(query, self.point(p)), p);
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] as f64 - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, query, k, exclude, heap);
                let worst = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().unwrap().0
                };
                if diff * diff <= worst {
                    self.knn_rec(far, query, k, exclude, heap);
                }
            }
        }
    }

    /// Every point (other than `exclude`) within distance `radius`
    /// inclusive, in ascending index order.
    pub fn within(&self, query: &[f32], radius: f64, exclude: Option<usize>) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            self.within_rec(0, query, radius * radius, exclude, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn within_rec(
        &self,
        node: usize,
        query: &[f32],
        r2: f64,
        exclude: Option<usize>,
        out: &mut Vec<usize>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.perm[start..end] {
                    if Some(p) != exclude && sq_dist(query, self.point(p)) <= r2 {
                        out.push(p);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] as f64 - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.within_rec(near, query, r2, exclude, out);
                if diff * diff <= r2 {
                    self.within_rec(far, query, r2, exclude, out);
                }
            }
        }
    }
}

/// Sorted neighbour lists for every point, up to `k` entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnTable {
    k: usize,
    dists: Vec<f64>,
    indices: Vec<usize>,
}

impl KnnTable {
    pub fn build(tree: &KdTree<'_>, k: usize) -> Result<Self> {
        let n = tree.len();
        if k == 0 || k >= n {
            return Err(Error::TooFewPoints { k, n });
        }
        let rows: Vec<Vec<(f64, usize)>> = (0..n)
            .into_par_iter()
            .map(|i| tree.knn(tree.point(i), k, Some(i)))
            .collect();
        let mut dists = Vec::with_capacity(n * k);
        let mut indices = Vec::with_capacity(n * k);
        for row in rows {
            for (d, j) in row {
                dists.push(d);
                indices.push(j);
            }
        }
        Ok(KnnTable { k, dists, indices })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.dists.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }

    /// Distance from point `i` to its `j`-th nearest other point (1-based).
    pub fn kth_distance(&self, i: usize, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.k);
        self.dists[i * self.k + j - 1]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    /// `d_i` for every point at neighbour count `k ≤ self.k()`.
    pub fn radii(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.kth_distance(i, k)).collect()
    }
}

/// Distance from each point to its `k`-th nearest other point.
pub fn knn_radii(data: &[f32], dim: usize, k: usize) -> Result<Vec<f64>> {
    let tree = KdTree::new(data, dim);
    Ok(KnnTable::build(&tree, k)?.radii(k))
}
