//! Deterministic 2-D PCA view of a dataset for external plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::ngram::NgramDataset;

/// Top-two principal axes; each axis is signed so that its largest-magnitude
/// component (first one on ties) is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca2 {
    pub mean: Vec<f64>,
    pub axes: [Vec<f64>; 2],
    pub variances: [f64; 2],
}

impl Pca2 {
    pub fn fit(ds: &NgramDataset) -> Result<Self> {
        let n = ds.len();
        if n < 2 {
            return Err(Error::invalid("projection needs at least 2 points"));
        }
        let w = ds.width();
        let mut mean = vec![0.0; w];
        for p in ds.points() {
            for (m, &v) in mean.iter_mut().zip(p) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let mut cov = DenseMatrix::zeros(w, w);
        let mut centered = vec![0.0; w];
        for p in ds.points() {
            for (c, (&v, m)) in centered.iter_mut().zip(p.iter().zip(&mean)) {
                *c = v as f64 - m;
            }
            for i in 0..w {
                for j in i..w {
                    cov.set(i, j, cov.get(i, j) + centered[i] * centered[j]);
                }
            }
        }
        for i in 0..w {
            for j in i..w {
                let v = cov.get(i, j) / (n - 1) as f64;
                cov.set(i, j, v);
                cov.set(j, i, v);
            }
        }

        let (values, vectors) = symmetric_eigen(&cov);
        let axis = |c: usize| -> Vec<f64> {
            if c >= w {
                return vec![0.0; w];
            }
            let mut v = vectors.column(c);
            let lead = v
                .iter()
                .enumerate()
                .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        };
        let var = |c: usize| values.get(c).copied().unwrap_or(0.0).max(0.0);
        Ok(Pca2 {
            mean,
            axes: [axis(0), axis(1)],
            variances: [var(0), var(1)],
        })
    }

    pub fn project(&self, point: &[f32]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (o, axis) in out.iter_mut().zip(&self.axes) {
            *o = point
                .iter()
                .zip(&self.mean)
                .zip(axis)
                .map(|((&x, m), a)| (x as f64 - m) * a)
                .sum();
        }
        out
    }
}

pub fn pca_2d(ds: &NgramDataset) -> Result<Vec<[f64; 2]>> {
    let pca = Pca2::fit(ds)?;
    Ok(ds.points().map(|p| pca.project(p)).collect())
}

/// `x,y,label`, one row per unique point.
pub fn projection_csv(coords: &[[f64; 2]], labels: &[usize]) -> Result<String> {
    if coords.len() != labels.len() {
        return Err(Error::invalid("labels do not match projected points"));
    }
    let mut out = String::from("x,y,label\n");
    for ([x, y], l) in coords.iter().zip(labels) {
        let _ = writeln!(out, "{x:e},{y:e},{l}");
    }
    Ok(out)
}

pub fn write_projection(path: &Path, coords: &[[f64; 2]], labels: &[usize]) -> Result<()> {
    fs::write(path, projection_csv(coords, labels)?).map_err(|e| Error::io(path, e))
}
