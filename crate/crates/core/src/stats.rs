//! Two-sample Mann-Whitney U tests per metric with Holm-Bonferroni
//! correction across the metrics.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::metrics::{MetricArrays, N_METRICS};

/// Largest sample size (per side) for which the exact null distribution is
/// used when there are no ties.
pub const EXACT_MAX_N: usize = 8;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// `min(U_a, U_b)`.
    pub u: f64,
    pub u_a: f64,
    pub u_b: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the concatenation `a ++ b`, plus the tie-group
/// sizes.
fn midranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&i, &j| all[i].total_cmp(&all[j]).then(i.cmp(&j)));
    let mut ranks = vec![0.0; all.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && all[order[end]] == all[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Counts of arrangements giving each `U_a = 0..=n_a·n_b` under the null.
pub fn exact_u_counts(n_a: usize, n_b: usize) -> Vec<f64> {
    // grid[j] holds the count polynomial for (i a's, j b's)
    let mut grid: Vec<Vec<f64>> = (0..=n_b).map(|_| vec![1.0]).collect();
    for i in 1..=n_a {
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(n_b + 1);
        next.push(vec![1.0]);
        for j in 1..=n_b {
            // last element is an `a` (contributes j) or a `b`
            let mut poly = vec![0.0; i * j + 1];
            for (u, &c) in grid[j].iter().enumerate() {
                poly[u + j] += c;
            }
            for (u, &c) in next[j - 1].iter().enumerate() {
                poly[u] += c;
            }
            next.push(poly);
        }
        grid = next;
    }
    grid.pop().unwrap()
}

/// Exact two-sided p-value `min(1, 2·P(U ≤ u_min))` for tie-free samples.
pub fn exact_p_value(u_min: f64, n_a: usize, n_b: usize) -> f64 {
    let counts = exact_u_counts(n_a, n_b);
    let total: f64 = counts.iter().sum();
    let limit = u_min.floor() as usize;
    let tail: f64 = counts.iter().take(limit + 1).sum();
    (2.0 * tail / total).min(1.0)
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn normal_p_value(u_max: f64, n_a: usize, n_b: usize, ties: &[usize]) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    let n = na + nb;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>();
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return 1.0;
    }
    let z = (u_max - na * nb / 2.0 - 0.5) / var.sqrt();
    (erfc(z / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("Mann-Whitney U needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("Mann-Whitney U sample contains NaN"));
    }
    Ok(())
}

fn u_statistics(a: &[f64], b: &[f64]) -> (f64, f64, Vec<usize>) {
    let (ranks, ties) = midranks(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let r_a: f64 = ranks[..a.len()].iter().sum();
    let u_a = r_a - na * (na + 1.0) / 2.0;
    (u_a, na * nb - u_a, ties)
}

/// Two-sided Mann-Whitney U. Exact when both samples have at most
/// [`EXACT_MAX_N`] values and there are no ties, normal approximation
/// otherwise. All-identical values give `p = 1`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check_samples(a, b)?;
    let (u_a, u_b, ties) = u_statistics(a, b);
    let u = u_a.min(u_b);
    let has_ties = ties.iter().any(|&t| t > 1);
    if ties.len() == 1 {
        return Ok(MannWhitney {
            u,
            u_a,
            u_b,
            p: 1.0,
            exact: false,
        });
    }
    let exact = !has_ties && a.len() <= EXACT_MAX_N && b.len() <= EXACT_MAX_N;
    let p = if exact {
        exact_p_value(u, a.len(), b.len())
    } else {
        normal_p_value(u_a.max(u_b), a.len(), b.len(), &ties)
    };
    Ok(MannWhitney {
        u,
        u_a,
        u_b,
        p,
        exact,
    })
}

/// Exact-distribution test regardless of sample size; ties are rejected.
pub fn mann_whitney_u_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check_samples(a, b)?;
    let (u_a, u_b, ties) = u_statistics(a, b);
    if ties.iter().any(|&t| t > 1) {
        return Err(Error::invalid("exact Mann-Whitney U requires tie-free samples"));
    }
    let u = u_a.min(u_b);
    Ok(MannWhitney {
        u,
        u_a,
        u_b,
        p: exact_p_value(u, a.len(), b.len()),
        exact: true,
    })
}

/// Normal-approximation test regardless of sample size.
pub fn mann_whitney_u_asymptotic(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check_samples(a, b)?;
    let (u_a, u_b, ties) = u_statistics(a, b);
    Ok(MannWhitney {
        u: u_a.min(u_b),
        u_a,
        u_b,
        p: normal_p_value(u_a.max(u_b), a.len(), b.len(), &ties),
        exact: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Holm {
    pub reject: Vec<bool>,
    pub adjusted: Vec<f64>,
}

/// Holm's step-down procedure. Results are in input order.
pub fn holm_bonferroni(pvals: &[f64], alpha: f64) -> Result<Holm> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p-value {p} outside [0, 1]")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvals[i].total_cmp(&pvals[j]).then(i.cmp(&j)));

    let mut reject = vec![false; m];
    let mut adjusted = vec![0.0; m];
    let mut stepping = true;
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        let factor = (m - rank) as f64;
        if stepping && pvals[i] <= alpha / factor {
            reject[i] = true;
        } else {
            stepping = false;
        }
        running = running.max(factor * pvals[i]);
        adjusted[i] = running.min(1.0);
    }
    Ok(Holm { reject, adjusted })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub metric: usize,
    #[serde(rename = "U")]
    pub u: f64,
    pub p_raw: f64,
    pub p_holm: f64,
    pub reject_raw: bool,
    pub reject_holm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub tests: Vec<TestResult>,
    pub before: usize,
    pub after: usize,
    pub alpha: f64,
    pub n_clusters_a: usize,
    pub n_clusters_b: usize,
    /// Set when either side has fewer than two clusters.
    pub low_power: bool,
    pub provenance_a: String,
    pub provenance_b: String,
    pub summary: String,
}

impl ComparisonReport {
    /// Counts as `before-after`, e.g. `5-3`.
    pub fn summary_line(&self) -> String {
        format!("{}-{}", self.before, self.after)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub fn compare_clusterizations(
    a: &MetricArrays,
    b: &MetricArrays,
    alpha: f64,
) -> Result<ComparisonReport> {
    compare_with_provenance(a, b, alpha, "a", "b")
}

pub fn compare_with_provenance(
    a: &MetricArrays,
    b: &MetricArrays,
    alpha: f64,
    provenance_a: &str,
    provenance_b: &str,
) -> Result<ComparisonReport> {
    if a.n_clusters() == 0 || b.n_clusters() == 0 {
        return Err(Error::NoClusters);
    }
    let tests: Vec<MannWhitney> = (1..=N_METRICS)
        .map(|m| mann_whitney_u(a.metric(m), b.metric(m)))
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = tests.iter().map(|t| t.p).collect();
    let holm = holm_bonferroni(&raw, alpha)?;
    let results: Vec<TestResult> = tests
        .iter()
        .enumerate()
        .map(|(i, t)| TestResult {
            metric: i + 1,
            u: t.u,
            p_raw: t.p,
            p_holm: holm.adjusted[i],
            reject_raw: t.p <= alpha,
            reject_holm: holm.reject[i],
        })
        .collect();
    let before = results.iter().filter(|r| r.reject_raw).count();
    let after = results.iter().filter(|r| r.reject_holm).count();
    Ok(ComparisonReport {
        tests: results,
        before,
        after,
        alpha,
        n_clusters_a: a.n_clusters(),
        n_clusters_b: b.n_clusters(),
        low_power: a.n_clusters() < 2 || b.n_clusters() < 2,
        provenance_a: provenance_a.to_owned(),
        provenance_b: provenance_b.to_owned(),
        summary: format!("{before}-{after}"),
    })
}
