//! Positional OSPA and Monte Carlo aggregation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// OSPA cut-off `c` (m) and order `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaParams {
    pub cutoff: f64,
    pub order: f64,
}

impl OspaParams {
    pub fn new(cutoff: f64, order: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !(order >= 1.0) {
            return Err(Error::InvalidInput("OSPA needs c > 0 and p >= 1"));
        }
        Ok(Self { cutoff, order })
    }
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            cutoff: 50.0,
            order: 1.0,
        }
    }
}

/// Minimum-cost assignment of every row to a distinct column for an
/// `rows × cols` cost matrix with `rows <= cols` (row-major). Returns the
/// column of each row.
pub fn assignment(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols && cost.len() == rows * cols);
    if rows == 0 {
        return Vec::new();
    }
    // shortest augmenting path with potentials; index 0 is a sentinel
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
                if !used[j] {
                    let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

fn distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    math::hypot(a[0] - b[0], a[1] - b[1])
}

/// OSPA distance between two finite sets of 2-D positions.
pub fn ospa(est: &[[f64; 2]], truth: &[[f64; 2]], params: &OspaParams) -> f64 {
    let (small, large) = if est.len() <= truth.len() { (est, truth) } else { (truth, est) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    let c = params.cutoff;
    let p = params.order;
    let cost: Vec<f64> = small
        .iter()
        .flat_map(|a| large.iter().map(move |b| math::powf(distance(a, b).min(c), p)))
        .collect();
    let cols = assignment(&cost, m, n);
    let matched: f64 = cols.iter().enumerate().map(|(i, j)| cost[i * n + j]).sum();
    let total = matched + math::powf(c, p) * (n - m) as f64;
    math::powf(total / n as f64, 1.0 / p).min(c)
}

/// Per-step tracking outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub ospa: f64,
    pub est_card: f64,
    pub true_card: f64,
}

/// Mean and standard error of one quantity at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Cross-trial statistics at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAggregate {
    pub ospa: MeanSe,
    pub est_card: MeanSe,
    pub true_card: MeanSe,
}

/// Mean and standard error (sample standard deviation over `√n`, zero for a
/// single value), summed in input order.
pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    MeanSe {
        mean,
        se: math::sqrt(var / n),
    }
}

/// Pointwise statistics across trials of equal length.
pub fn mc_aggregate(per_trial: &[Vec<StepMetrics>]) -> Result<Vec<StepAggregate>> {
    let first = per_trial.first().ok_or(Error::InvalidInput("no trials to aggregate"))?;
    if per_trial.iter().any(|t| t.len() != first.len()) {
        return Err(Error::InvalidInput("trials have different lengths"));
    }
    Ok((0..first.len())
        .map(|k| {
            let col = |f: fn(&StepMetrics) -> f64| per_trial.iter().map(|t| f(&t[k])).collect::<Vec<_>>();
            StepAggregate {
                ospa: mean_se(&col(|s| s.ospa)),
                est_card: mean_se(&col(|s| s.est_card)),
                true_card: mean_se(&col(|s| s.true_card)),
            }
        })
        .collect())
}
