//! Risk estimators: full-pool empirical risk, plain subset means, and the
//! levelled unbiased risk estimator (LURE) for without-replacement
//! acquisition with known per-step probabilities.
//!
//! LURE weights the `m`-th acquired loss by
//!
//! ```text
//! v_m = 1 + (N − M) / (N − m) · (1 / ((N − m + 1) · q_m) − 1)
//! ```
//!
//! which is identically 1 under uniform acquisition and when `M = N`.

use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionStep, AcquisitionTrace};
use crate::error::{Error, Result};
use crate::probdist::{ProbVector, LOG_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    FullEmpirical,
    SubsetMean,
    #[serde(rename = "LURE")]
    Lure,
    BiasedClusterMean,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::FullEmpirical => "FullEmpirical",
            EstimatorKind::SubsetMean => "SubsetMean",
            EstimatorKind::Lure => "LURE",
            EstimatorKind::BiasedClusterMean => "BiasedClusterMean",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        [
            EstimatorKind::FullEmpirical,
            EstimatorKind::SubsetMean,
            EstimatorKind::Lure,
            EstimatorKind::BiasedClusterMean,
        ]
        .into_iter()
        .find(|k| k.name().to_ascii_lowercase() == s)
        .ok_or_else(|| Error::BadConfig(format!("unknown estimator {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// 1 when the argmax prediction differs from the gold label.
    #[default]
    ZeroOne,
    /// `−ln p(gold)`, floored inside the log.
    CrossEntropy,
}

impl LossKind {
    pub fn loss(self, main: &ProbVector, gold: usize) -> f64 {
        match self {
            LossKind::ZeroOne => {
                if main.argmax() == gold {
                    0.0
                } else {
                    1.0
                }
            }
            LossKind::CrossEntropy => -main.probs()[gold].max(LOG_FLOOR).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledOutcome {
    pub sample: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub budget: usize,
    pub value: f64,
    pub estimator: EstimatorKind,
}

fn check_losses(losses: &[f64]) -> Result<()> {
    for (i, &l) in losses.iter().enumerate() {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::BadLoss(format!("#{i} = {l}")));
        }
    }
    Ok(())
}

fn mean(losses: &[f64]) -> f64 {
    losses.iter().sum::<f64>() / losses.len() as f64
}

/// Mean loss over the whole pool; the true risk `R_true`.
pub fn empirical_risk(losses: &[f64]) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::EmptyPool);
    }
    check_losses(losses)?;
    Ok(mean(losses))
}

/// Mean loss over an acquired subset.
pub fn subset_risk(losses: &[f64]) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_losses(losses)?;
    Ok(mean(losses))
}

/// LURE weights `v_1..v_M` for acquisition probabilities `q` over a pool of `n`.
pub fn lure_weights(q: &[f64], n: usize) -> Result<Vec<f64>> {
    let big_m = q.len();
    if big_m > n {
        return Err(Error::BudgetExceedsPool { budget: big_m, pool: n });
    }
    let (nf, mf) = (n as f64, big_m as f64);
    q.iter()
        .enumerate()
        .map(|(idx, &qm)| {
            let m = idx + 1;
            if !(qm > 0.0 && qm <= 1.0) {
                return Err(Error::BadProbability { step: m, value: qm });
            }
            if big_m == n {
                return Ok(1.0);
            }
            let mm = m as f64;
            Ok(1.0 + (nf - mf) / (nf - mm) * (1.0 / ((nf - mm + 1.0) * qm) - 1.0))
        })
        .collect()
}

/// LURE over explicit `(q_m, loss)` pairs, optionally capping each weight.
pub fn lure(q: &[f64], losses: &[f64], n: usize, weight_cap: Option<f64>) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptySubset);
    }
    if q.len() != losses.len() {
        return Err(Error::DimensionMismatch(q.len(), losses.len()));
    }
    check_losses(losses)?;
    let weights = lure_weights(q, n)?;
    let total: f64 = weights
        .iter()
        .zip(losses)
        .map(|(&v, &l)| weight_cap.map_or(v, |c| v.min(c)) * l)
        .sum();
    Ok(total / q.len() as f64)
}

/// LURE over the first `acquired_losses.len()` steps of `steps`.
pub fn lure_from_steps(steps: &[AcquisitionStep], acquired_losses: &[f64], n: usize) -> Result<f64> {
    if steps.len() < acquired_losses.len() {
        return Err(Error::DimensionMismatch(steps.len(), acquired_losses.len()));
    }
    let q: Vec<f64> = steps[..acquired_losses.len()].iter().map(|s| s.acq_prob).collect();
    lure(&q, acquired_losses, n, None)
}

/// LURE estimate for a whole trace. `acquired_losses[m]` is the loss of the
/// sample acquired at step `m + 1`.
pub fn lure_estimate(trace: &AcquisitionTrace, acquired_losses: &[f64]) -> Result<RiskEstimate> {
    if acquired_losses.len() != trace.steps.len() {
        return Err(Error::DimensionMismatch(trace.steps.len(), acquired_losses.len()));
    }
    Ok(RiskEstimate {
        budget: trace.steps.len(),
        value: lure_from_steps(&trace.steps, acquired_losses, trace.pool_size)?,
        estimator: EstimatorKind::Lure,
    })
}

/// Plain mean of the acquired losses, ignoring acquisition probabilities.
pub fn biased_mean_estimate(trace: &AcquisitionTrace, acquired_losses: &[f64]) -> Result<RiskEstimate> {
    if acquired_losses.len() != trace.steps.len() {
        return Err(Error::DimensionMismatch(trace.steps.len(), acquired_losses.len()));
    }
    Ok(RiskEstimate {
        budget: trace.steps.len(),
        value: subset_risk(acquired_losses)?,
        estimator: EstimatorKind::BiasedClusterMean,
    })
}

/// Estimate under `kind` at budget `m` (a prefix of `steps`). `pool_losses`
/// is indexed by pool position; only acquired entries are read, except by
/// [`EstimatorKind::FullEmpirical`].
pub fn estimate_at(
    kind: EstimatorKind,
    steps: &[AcquisitionStep],
    pool_losses: &[f64],
    m: usize,
) -> Result<RiskEstimate> {
    if m > steps.len() {
        return Err(Error::BudgetExceedsPool { budget: m, pool: steps.len() });
    }
    let acquired: Vec<f64> = steps[..m].iter().map(|s| pool_losses[s.sample]).collect();
    let value = match kind {
        EstimatorKind::FullEmpirical => empirical_risk(pool_losses)?,
        EstimatorKind::SubsetMean | EstimatorKind::BiasedClusterMean => subset_risk(&acquired)?,
        EstimatorKind::Lure => lure_from_steps(steps, &acquired, pool_losses.len())?,
    };
    Ok(RiskEstimate { budget: m, value, estimator: kind })
}
