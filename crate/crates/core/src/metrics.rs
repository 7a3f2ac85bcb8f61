//! Evaluation metrics: GOSPA between point sets and location RMSE across
//! Monte Carlo runs.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("estimate and truth series differ in length ({estimates} vs {truths})")]
    LengthMismatch { estimates: usize, truths: usize },
    #[error("invalid GOSPA parameters")]
    InvalidParams,
}

/// GOSPA cutoff `c`, order `p` and cardinality factor `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GospaParams {
    pub cutoff: f64,
    pub order: f64,
    pub alpha: f64,
}

impl Default for GospaParams {
    fn default() -> Self {
        Self {
            cutoff: 20.0,
            order: 2.0,
            alpha: 2.0,
        }
    }
}

impl GospaParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.cutoff > 0.0 && self.order >= 1.0 && self.alpha > 0.0 && self.alpha <= 2.0 {
            Ok(())
        } else {
            Err(MetricsError::InvalidParams)
        }
    }

    /// Distance contributed by a single missed or false target,
    /// `(c^p / alpha)^(1/p)`.
    pub fn cardinality_unit(&self) -> f64 {
        (self.cutoff.powf(self.order) / self.alpha).powf(1.0 / self.order)
    }
}

/// GOSPA distance and its decomposition. For `alpha = 2`,
/// `distance^p = localization^p + missed^p + false_targets^p`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GospaResult {
    pub distance: f64,
    pub localization: f64,
    pub missed: f64,
    pub false_targets: f64,
    pub n_missed: usize,
    pub n_false: usize,
}

/// GOSPA between estimated and true position sets, with the optimal
/// assignment solved exactly.
pub fn gospa(estimates: &[Vec3], truths: &[Vec3], params: &GospaParams) -> GospaResult {
    let p = params.order;
    let c = params.cutoff;
    let cp = c.powf(p);
    let unit = cp / params.alpha;
    if estimates.is_empty() && truths.is_empty() {
        return GospaResult::default();
    }

    // rows are the smaller set
    let truths_are_rows = truths.len() <= estimates.len();
    let (rows, cols) = if truths_are_rows {
        (truths, estimates)
    } else {
        (estimates, truths)
    };
    let dist: Vec<f64> = rows
        .iter()
        .flat_map(|r| cols.iter().map(move |k| (r - k).norm()))
        .collect();
    let cost: Vec<f64> = dist.iter().map(|d| d.min(c).powf(p)).collect();
    let assignment = hungarian(&cost, rows.len(), cols.len());

    let mut total = unit * (cols.len() - rows.len()) as f64;
    let mut loc = 0.0;
    let mut localized = 0usize;
    for (i, &j) in assignment.iter().enumerate() {
        let d = dist[i * cols.len() + j];
        total += cost[i * cols.len() + j];
        if d < c {
            loc += d.powf(p);
            localized += 1;
        }
    }
    let n_missed = truths.len() - localized;
    let n_false = estimates.len() - localized;
    GospaResult {
        distance: total.powf(1.0 / p),
        localization: loc.powf(1.0 / p),
        missed: (unit * n_missed as f64).powf(1.0 / p),
        false_targets: (unit * n_false as f64).powf(1.0 / p),
        n_missed,
        n_false,
    }
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows <= cols`), row-major `cost`. Returns the column of each row.
pub fn hungarian(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols, "hungarian expects rows <= cols");
    assert_eq!(cost.len(), rows * cols);
    if rows == 0 {
        return Vec::new();
    }
    // potentials formulation with 1-based sentinel row/column 0
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
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
    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Per-step location RMSE across Monte Carlo runs. Each entry of the outer
/// slices is one run's trajectory.
pub fn rmse(estimates: &[Vec<Vec3>], truths: &[Vec<Vec3>]) -> Result<Vec<f64>, MetricsError> {
    if estimates.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            estimates: estimates.len(),
            truths: truths.len(),
        });
    }
    let steps = truths.first().map_or(0, Vec::len);
    for (e, t) in estimates.iter().zip(truths) {
        if e.len() != t.len() || t.len() != steps {
            return Err(MetricsError::LengthMismatch {
                estimates: e.len(),
                truths: t.len(),
            });
        }
    }
    let runs = truths.len() as f64;
    Ok((0..steps)
        .map(|k| {
            let sq: f64 = estimates
                .iter()
                .zip(truths)
                .map(|(e, t)| (e[k] - t[k]).norm_squared())
                .sum();
            (sq / runs).sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, 0.0)
    }

    #[test]
    fn empty_sets() {
        let r = gospa(&[], &[], &GospaParams::default());
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn single_truth_cases() {
        let params = GospaParams::default();
        let exact = gospa(&[pt(1.0, 2.0)], &[pt(1.0, 2.0)], &params);
        assert_eq!(exact.distance, 0.0);
        let missed = gospa(&[], &[pt(1.0, 2.0)], &params);
        assert_relative_eq!(missed.distance, (400.0f64 / 2.0).sqrt());
        assert_eq!(missed.n_missed, 1);
        assert_relative_eq!(params.cardinality_unit(), 200.0f64.sqrt());
    }

    #[test]
    fn far_estimate_counts_as_miss_and_false() {
        let params = GospaParams::default();
        let r = gospa(&[pt(100.0, 0.0)], &[pt(0.0, 0.0)], &params);
        assert_eq!((r.n_missed, r.n_false), (1, 1));
        assert_relative_eq!(r.distance, 20.0);
        assert_relative_eq!(r.localization, 0.0);
    }

    #[test]
    fn hungarian_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = hungarian(&cost, 3, 3);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
        let rect = [1.0, 9.0, 0.5, 9.0, 2.0, 9.0];
        assert_eq!(hungarian(&rect, 2, 3), vec![2, 1]);
    }

    #[test]
    fn rmse_examples() {
        let truth = vec![vec![pt(0.0, 0.0), pt(1.0, 1.0)]];
        assert_eq!(rmse(&truth, &truth).unwrap(), vec![0.0, 0.0]);
        let off = vec![vec![pt(3.0, 4.0), pt(4.0, 5.0)]];
        assert_eq!(rmse(&off, &truth).unwrap(), vec![5.0, 5.0]);
        let two_truth = vec![vec![pt(0.0, 0.0)], vec![pt(0.0, 0.0)]];
        let two_est = vec![vec![pt(1.0, 0.0)], vec![pt(0.0, 7.0)]];
        assert_relative_eq!(rmse(&two_est, &two_truth).unwrap()[0], 5.0);
        assert!(matches!(
            rmse(&two_est, &truth),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }
}
