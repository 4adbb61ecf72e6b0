//! Evaluation metrics and cross-run aggregation: raw mean-squared error,
//! Jaccard overlap of selected channel sets, and seed-stability statistics.
//! Stored values are always unscaled; the x100 presentation factor is
//! applied only when rendering tables.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Presentation scale used in rendered tables (MSE x 10^2).
pub const REPORT_SCALE: f64 = 100.0;

/// Raw mean-squared error with f64 accumulation. Scaling happens only at
/// presentation time.
pub fn mse<T: Scalar>(pred: &Matrix<T>, target: &Matrix<T>) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            "mse",
            format!("{:?}", target.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let mut sum = 0.0f64;
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = p.to_f64() - t.to_f64();
        sum += d * d;
    }
    Ok(sum / (pred.rows() * pred.cols()) as f64)
}

/// Jaccard index |A n B| / |A u B| of two channel selections. Two empty
/// selections are defined to be identical (index 1.0).
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let sa: BTreeSet<usize> = a.iter().copied().collect();
    let sb: BTreeSet<usize> = b.iter().copied().collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let intersection = sa.intersection(&sb).count() as f64;
    let union = sa.union(&sb).count() as f64;
    intersection / union
}

/// One evaluated run: method, budget, seed, its test error, and what it
/// selected.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub c: usize,
    pub seed: u64,
    pub test_mse: f64,
    pub selected: Vec<usize>,
    pub wall_time_secs: f64,
}

/// Across-seed stability: population standard deviation of the test error
/// and the mean Jaccard index over all unordered selection pairs. All runs
/// must share the same channel budget.
pub fn seed_stability(runs: &[RunSummary]) -> Result<(f64, f64)> {
    if runs.len() < 2 {
        return Err(Error::config("seed stability needs at least two runs"));
    }
    let c = runs[0].c;
    if runs.iter().any(|r| r.c != c) {
        return Err(Error::config("seed stability requires equal channel budgets"));
    }
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.test_mse).sum::<f64>() / n;
    let var = runs.iter().map(|r| (r.test_mse - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();

    let mut jac_sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..runs.len() {
        for j in (i + 1)..runs.len() {
            jac_sum += jaccard(&runs[i].selected, &runs[j].selected);
            pairs += 1;
        }
    }
    Ok((std, jac_sum / pairs as f64))
}

/// Aggregate over the seeds of one (method, C) cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub c: usize,
    pub seeds: usize,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub mean_jaccard: Option<f64>,
}

/// Per-run rows plus per-(method, C) aggregates, renderable as an aligned
/// table and serializable as the machine-readable report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<RunSummary>,
    pub aggregates: Vec<Aggregate>,
}

pub fn build_report(mut rows: Vec<RunSummary>) -> Report {
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(b.c.cmp(&a.c))
            .then(a.seed.cmp(&b.seed))
    });
    let mut aggregates = Vec::new();
    let mut groups: Vec<(String, usize, Vec<&RunSummary>)> = Vec::new();
    for row in &rows {
        match groups.last_mut() {
            Some((m, c, list)) if *m == row.method && *c == row.c => list.push(row),
            _ => groups.push((row.method.clone(), row.c, vec![row])),
        }
    }
    for (method, c, list) in groups {
        let n = list.len() as f64;
        let mean = list.iter().map(|r| r.test_mse).sum::<f64>() / n;
        let var = list.iter().map(|r| (r.test_mse - mean).powi(2)).sum::<f64>() / n;
        let mean_jaccard = if list.len() >= 2 {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for i in 0..list.len() {
                for j in (i + 1)..list.len() {
                    sum += jaccard(&list[i].selected, &list[j].selected);
                    pairs += 1;
                }
            }
            Some(sum / pairs as f64)
        } else {
            None
        };
        aggregates.push(Aggregate {
            method,
            c,
            seeds: list.len(),
            mean_mse: mean,
            std_mse: var.sqrt(),
            mean_jaccard,
        });
    }
    Report { rows, aggregates }
}

impl Report {
    /// Aligned plain-text table: one aggregate row per (method, C), errors
    /// scaled x100 for presentation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>6} {:>6} {:>14} {:>12} {:>10}\n",
            "method", "C", "seeds", "mse x100", "std x100", "jaccard"
        ));
        for a in &self.aggregates {
            let jac = a
                .mean_jaccard
                .map(|j| format!("{:.3}", j))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<16} {:>6} {:>6} {:>14.4} {:>12.4} {:>10}\n",
                a.method,
                a.c,
                a.seeds,
                a.mean_mse * REPORT_SCALE,
                a.std_mse * REPORT_SCALE,
                jac
            ));
        }
        out
    }
}
