//! Run-quality metrics: estimation-error curves and their area, conditional
//! AUROC for error detection, and cross-dataset aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probdist::{shannon_entropy, ProbVector};

/// Default conditioning threshold for [`conditional_auroc`].
pub const HIGH_CONFIDENCE: f64 = 0.7;

/// Budget fractions at every whole percent from 5% to 50%.
pub fn default_budget_grid() -> Vec<f64> {
    (5..=50).map(|p| p as f64 / 100.0).collect()
}

/// Sample count for budget fraction `b` over a pool of `n`: `⌈b·N⌉`, at least 1.
pub fn budget_count(b: f64, n: usize) -> usize {
    // Snap away representation error so that e.g. 0.07 * 100 gives 7, not 8.
    let raw = b * n as f64;
    let snapped = (raw * 1e9).round() / 1e9;
    (snapped.ceil() as usize).clamp(1, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub budgets: Vec<f64>,
    pub mean_sq_error: Vec<f64>,
    pub variance: Vec<f64>,
    pub runs: usize,
}

/// Mean squared error against `r_true` at every budget, plus the across-run
/// sample variance of the estimates. `estimates[run][budget]`.
pub fn estimation_error_curve(
    budgets: &[f64],
    estimates: &[Vec<f64>],
    r_true: f64,
) -> Result<ErrorCurve> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (run, e) in estimates.iter().enumerate() {
        if e.len() != budgets.len() {
            return Err(Error::GridMismatch { run });
        }
    }
    let r = estimates.len() as f64;
    let mut mse = Vec::with_capacity(budgets.len());
    let mut var = Vec::with_capacity(budgets.len());
    for j in 0..budgets.len() {
        let col = estimates.iter().map(|e| e[j]);
        mse.push(col.clone().map(|x| (x - r_true) * (x - r_true)).sum::<f64>() / r);
        let mean = col.clone().sum::<f64>() / r;
        var.push(if estimates.len() > 1 {
            col.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        });
    }
    Ok(ErrorCurve {
        budgets: budgets.to_vec(),
        mean_sq_error: mse,
        variance: var,
        runs: estimates.len(),
    })
}

/// Trapezoidal integral of the mean squared error over the budget axis,
/// divided by the budget span so a flat curve at `h` integrates to `h`.
pub fn auc_trapezoid(curve: &ErrorCurve) -> Result<f64> {
    trapezoid_mean(&curve.budgets, &curve.mean_sq_error)
}

pub fn trapezoid_mean(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::TooFewPoints(x.len()));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    let span = x[x.len() - 1] - x[0];
    if span <= 0.0 {
        return Err(Error::BadConfig("budget grid must be strictly increasing".into()));
    }
    let area: f64 = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) / 2.0)
        .sum();
    Ok(area / span)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub confidence: f64,
    pub uncertainty: f64,
    pub is_error: bool,
}

/// AUROC of `uncertainty` for separating errors from correct predictions,
/// restricted to records with `confidence ≥ threshold`. Ties earn half
/// credit. Computed from mid-ranks (Mann–Whitney U).
pub fn conditional_auroc(records: &[ErrorRecord], threshold: f64) -> Result<f64> {
    let mut subset: Vec<(f64, bool)> = records
        .iter()
        .filter(|r| r.confidence >= threshold)
        .map(|r| (r.uncertainty, r.is_error))
        .collect();
    let errors = subset.iter().filter(|r| r.1).count();
    let correct = subset.len() - errors;
    if errors == 0 || correct == 0 {
        return Err(Error::DegenerateSubset { errors, correct });
    }
    if let Some(bad) = subset.iter().find(|r| r.0.is_nan()) {
        return Err(Error::BadConfig(format!("NaN uncertainty score {:?}", bad.0)));
    }
    subset.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of doubled mid-ranks of the errors keeps everything integral.
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < subset.len() {
        let mut j = i;
        while j + 1 < subset.len() && subset[j + 1].0 == subset[i].0 {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share mid-rank (i + j + 2) / 2.
        let doubled_mid = (i + j + 2) as u64;
        let errs_in_group = subset[i..=j].iter().filter(|r| r.1).count() as u64;
        doubled_rank_sum += doubled_mid * errs_in_group;
        i = j + 1;
    }
    let (n1, n0) = (errors as u64, correct as u64);
    // 2U = 2·R1 − n1(n1+1)
    let doubled_u = doubled_rank_sum - n1 * (n1 + 1);
    Ok(doubled_u as f64 / (2 * n1 * n0) as f64)
}

/// Records for [`conditional_auroc`] where confidence is the max class
/// probability and uncertainty is the predictive entropy.
pub fn error_records(dists: &[ProbVector], is_error: &[bool]) -> Vec<ErrorRecord> {
    dists
        .iter()
        .zip(is_error)
        .map(|(d, &e)| ErrorRecord {
            confidence: d.max_prob(),
            uncertainty: shannon_entropy(d),
            is_error: e,
        })
        .collect()
}

/// `1 − mean loss` under 0/1 loss.
pub fn accuracy(zero_one_losses: &[f64]) -> Result<f64> {
    if zero_one_losses.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(1.0 - zero_one_losses.iter().sum::<f64>() / zero_one_losses.len() as f64)
}

/// Population standard deviation of per-sample predictive entropies.
pub fn entropy_sigma(dists: &[ProbVector]) -> Result<f64> {
    let h: Vec<f64> = dists.iter().map(shannon_entropy).collect();
    population_std(&h)
}

pub fn population_std(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyPool);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&v) = values.iter().find(|&&v| v.is_nan() || v <= 0.0 || !v.is_finite()) {
        return Err(Error::NonPositive(v));
    }
    Ok((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// Relative AUC reduction of `best` over `baseline`, in percent.
pub fn performance_gain(baseline_auc: f64, best_auc: f64) -> Result<f64> {
    if baseline_auc.is_nan() || baseline_auc <= 0.0 {
        return Err(Error::NonPositive(baseline_auc));
    }
    Ok((baseline_auc - best_auc) / baseline_auc * 100.0)
}
