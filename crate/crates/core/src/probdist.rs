//! Categorical distributions and the information measures built on them.
//!
//! All measures are in nats. Terms with zero probability mass contribute
//! nothing (`0 · ln 0 = 0`). Where a *predicted* probability sits inside a
//! logarithm it is floored at [`LOG_FLOOR`]; the distribution itself is never
//! altered by the floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|Σp − 1|` accepted by [`ProbVector::new`].
pub const PROB_TOL: f64 = 1e-9;

/// Floor applied to predicted probabilities before taking their logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// A validated probability vector over `K ≥ 2` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates `probs` as-is. Inputs whose sum is off by more than
    /// [`PROB_TOL`] are rejected; use [`ProbVector::normalize`] to repair.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(ProbVector(probs))
    }

    /// Divides `raw` by its sum.
    pub fn normalize(raw: &[f64]) -> Result<Self> {
        check_entries(raw)?;
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(ProbVector(raw.iter().map(|x| x / sum).collect()))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooShort(k));
        }
        Ok(ProbVector(vec![1.0 / k as f64; k]))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Number of classes.
    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// Index of the largest mass; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Largest class probability, used as the model's confidence.
    pub fn max_prob(&self) -> f64 {
        self.0[self.argmax()]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbVector::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

fn check_entries(raw: &[f64]) -> Result<()> {
    if raw.len() < 2 {
        return Err(Error::TooShort(raw.len()));
    }
    for (i, &x) in raw.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite(i));
        }
        if x < 0.0 {
            return Err(Error::Negative { index: i, value: x });
        }
    }
    Ok(())
}

fn same_k(a: &ProbVector, b: &ProbVector) -> Result<()> {
    if a.k() != b.k() {
        return Err(Error::DimensionMismatch(a.k(), b.k()));
    }
    Ok(())
}

fn floored_ln(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// `H(p) = −Σ p_i ln p_i`.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    -p.0
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `H(target, pred) = −Σ target_i ln pred_i`, with `pred` floored inside the log.
pub fn cross_entropy(target: &ProbVector, pred: &ProbVector) -> Result<f64> {
    cross_entropy_with_floor(target, pred, Some(LOG_FLOOR))
}

/// Cross-entropy with an explicit floor. `None` disables flooring, in which
/// case a hard zero in `pred` under positive target mass is an error.
pub fn cross_entropy_with_floor(
    target: &ProbVector,
    pred: &ProbVector,
    floor: Option<f64>,
) -> Result<f64> {
    same_k(target, pred)?;
    let mut acc = 0.0;
    for (i, (&t, &p)) in target.0.iter().zip(&pred.0).enumerate() {
        if t == 0.0 {
            continue;
        }
        let arg = match floor {
            Some(f) => p.max(f),
            None if p == 0.0 => return Err(Error::InfiniteResult(i)),
            None => p,
        };
        acc -= t * arg.ln();
    }
    Ok(acc)
}

/// `D_KL(p ‖ q) = Σ p_i ln(p_i / q_i)`; `q` floored inside the log.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    same_k(p, q)?;
    Ok(kl_raw(&p.0, &q.0))
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a.ln() - floored_ln(b)))
        .sum::<f64>()
        .max(0.0)
}

/// Jensen–Shannon divergence with mixture `M = (p + q) / 2`. Bounded by `ln 2`.
pub fn jsd2(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    same_k(p, q)?;
    let m: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| (a + b) / 2.0).collect();
    Ok(0.5 * (kl_raw(&p.0, &m) + kl_raw(&q.0, &m)))
}

/// Three-way Jensen–Shannon divergence with `M′ = (p + q + u) / 3`. Bounded by `ln 3`.
pub fn jsd3(p: &ProbVector, q: &ProbVector, u: &ProbVector) -> Result<f64> {
    same_k(p, q)?;
    same_k(p, u)?;
    let m: Vec<f64> = p
        .0
        .iter()
        .zip(&q.0)
        .zip(&u.0)
        .map(|((a, b), c)| (a + b + c) / 3.0)
        .collect();
    Ok((kl_raw(&p.0, &m) + kl_raw(&q.0, &m) + kl_raw(&u.0, &m)) / 3.0)
}

/// `q′_i = w1·q_i + w2/K`.
pub fn mixture(q: &ProbVector, w1: f64, w2: f64) -> Result<ProbVector> {
    check_weights(w1, w2)?;
    let k = q.k() as f64;
    Ok(ProbVector(q.0.iter().map(|&x| w1 * x + w2 / k).collect()))
}

pub(crate) fn check_weights(w1: f64, w2: f64) -> Result<()> {
    let ok = w1.is_finite()
        && w2.is_finite()
        && w1 >= 0.0
        && w2 >= 0.0
        && (w1 + w2 - 1.0).abs() <= PROB_TOL;
    if ok {
        Ok(())
    } else {
        Err(Error::BadWeights { w1, w2 })
    }
}

/// Variance of the self-information `−ln p_i` under `p`.
pub fn varentropy(p: &ProbVector) -> f64 {
    let h = shannon_entropy(p);
    p.0.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let d = -x.ln() - h;
            x * d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(ProbVector::normalize(&[2.0, 2.0]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(ProbVector::normalize(&[1.0, 0.0, 0.0]).unwrap().probs(), &[1.0, 0.0, 0.0]);
        assert_eq!(ProbVector::normalize(&[3.0, 1.0]).unwrap().probs(), &[0.75, 0.25]);
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(ProbVector::normalize(&[0.0, 0.0]), Err(Error::ZeroMass)));
        assert!(matches!(ProbVector::normalize(&[1.0, f64::NAN]), Err(Error::NonFinite(1))));
        assert!(matches!(ProbVector::normalize(&[f64::INFINITY, 1.0]), Err(Error::NonFinite(0))));
        assert!(matches!(ProbVector::normalize(&[1.0]), Err(Error::TooShort(1))));
        assert!(matches!(ProbVector::normalize(&[1.0, -1.0]), Err(Error::Negative { .. })));
    }

    #[test]
    fn normalize_is_idempotent() {
        let once = ProbVector::normalize(&[0.3, 0.2, 0.5]).unwrap();
        let twice = ProbVector::normalize(once.probs()).unwrap();
        for (a, b) in once.probs().iter().zip(twice.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn new_rejects_drift_beyond_tolerance() {
        assert!(matches!(ProbVector::new(vec![0.5, 0.6]), Err(Error::NotNormalized(_))));
        assert!(ProbVector::new(vec![0.5, 0.5 + 1e-10]).is_ok());
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(ProbVector::uniform(2).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(ProbVector::uniform(4).unwrap().probs(), &[0.25; 4]);
        assert_eq!(ProbVector::uniform(3).unwrap().probs(), &[1.0 / 3.0; 3]);
        assert!(matches!(ProbVector::uniform(1), Err(Error::TooShort(1))));
    }

    #[test]
    fn entropy_examples() {
        close(shannon_entropy(&pv(&[0.5, 0.5])), LN_2);
        close(shannon_entropy(&pv(&[1.0, 0.0])), 0.0);
        close(shannon_entropy(&pv(&[0.8, 0.2])), 0.500402423538188);
    }

    #[test]
    fn cross_entropy_examples() {
        close(cross_entropy(&pv(&[0.5, 0.5]), &pv(&[0.5, 0.5])).unwrap(), LN_2);
        close(
            cross_entropy(&ProbVector::uniform(2).unwrap(), &pv(&[0.9, 0.1])).unwrap(),
            1.203972804325936,
        );
        close(cross_entropy(&pv(&[1.0, 0.0]), &pv(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn cross_entropy_hard_zero() {
        let t = pv(&[0.5, 0.5]);
        let p = pv(&[1.0, 0.0]);
        let floored = cross_entropy(&t, &p).unwrap();
        close(floored, -0.5 * LOG_FLOOR.ln());
        assert!(matches!(
            cross_entropy_with_floor(&t, &p, None),
            Err(Error::InfiniteResult(1))
        ));
        assert!(matches!(
            cross_entropy(&t, &pv(&[0.2, 0.3, 0.5])),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn kl_examples() {
        let p = pv(&[0.3, 0.7]);
        close(kl_divergence(&p, &p).unwrap(), 0.0);
        close(kl_divergence(&pv(&[1.0, 0.0]), &pv(&[0.5, 0.5])).unwrap(), LN_2);
        close(
            kl_divergence(&pv(&[0.5, 0.5]), &pv(&[0.75, 0.25])).unwrap(),
            0.143841036225890,
        );
    }

    #[test]
    fn jsd_examples() {
        let p = pv(&[0.3, 0.7]);
        close(jsd2(&p, &p).unwrap(), 0.0);
        close(jsd2(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap(), LN_2);
        close(jsd2(&pv(&[0.8, 0.2]), &pv(&[0.2, 0.8])).unwrap(), 0.192744757021758);

        close(jsd3(&p, &p, &p).unwrap(), 0.0);
        close(
            jsd3(&pv(&[1.0, 0.0, 0.0]), &pv(&[0.0, 1.0, 0.0]), &pv(&[0.0, 0.0, 1.0])).unwrap(),
            3f64.ln(),
        );
        close(
            jsd3(&pv(&[0.7, 0.3]), &pv(&[0.5, 0.5]), &ProbVector::uniform(2).unwrap()).unwrap(),
            0.018512210738706,
        );
    }

    #[test]
    fn mixture_examples() {
        let q = pv(&[0.6, 0.4]);
        assert_eq!(mixture(&q, 0.0, 1.0).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(mixture(&q, 1.0, 0.0).unwrap().probs(), &[0.6, 0.4]);
        let m = mixture(&q, 0.5, 0.5).unwrap();
        close(m.probs()[0], 0.55);
        close(m.probs()[1], 0.45);
        assert!(matches!(mixture(&q, -0.1, 1.1), Err(Error::BadWeights { .. })));
        assert!(matches!(mixture(&q, 0.5, 0.6), Err(Error::BadWeights { .. })));
    }

    #[test]
    fn varentropy_examples() {
        for k in 2..8 {
            assert!(varentropy(&ProbVector::uniform(k).unwrap()) < 1e-24);
        }
        assert_eq!(varentropy(&pv(&[1.0, 0.0])), 0.0);
        close(varentropy(&pv(&[0.8, 0.2])), 0.307489928907649);
    }

    #[test]
    fn serde_validates() {
        let p: ProbVector = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(p.k(), 2);
        assert!(serde_json::from_str::<ProbVector>("[0.25, 0.25]").is_err());
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(pv(&[0.4, 0.4, 0.2]).argmax(), 0);
        assert_eq!(pv(&[0.2, 0.4, 0.4]).argmax(), 1);
    }
}
