use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pool::SampleRecord;
use crate::error::{Error, Result};
use crate::seed::{self, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Confidence tracks correctness: errors sit in a lower confidence band.
    Calibrated,
    /// A fixed share of errors are made with confidence ≥ 0.9.
    MiscalibratedOverconfident,
    /// Every prediction is the uniform distribution.
    UniformNoise,
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "calibrated" => Ok(ScenarioKind::Calibrated),
            "overconfident" | "miscalibrated" | "miscalibratedoverconfident" => {
                Ok(ScenarioKind::MiscalibratedOverconfident)
            }
            "uniform" | "uniformnoise" => Ok(ScenarioKind::UniformNoise),
            other => Err(Error::BadScenario(format!("unknown scenario {other:?}"))),
        }
    }
}

fn default_overconfident() -> f64 {
    0.6
}
fn default_dim() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub k: usize,
    pub error_rate: f64,
    pub seed: u64,
    /// Share of errors made with confidence in `[0.9, 0.99]` under
    /// [`ScenarioKind::MiscalibratedOverconfident`].
    #[serde(default = "default_overconfident")]
    pub overconfident_fraction: f64,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
}

impl SyntheticScenario {
    pub fn new(kind: ScenarioKind, n: usize, k: usize, error_rate: f64, seed: u64) -> Self {
        SyntheticScenario {
            kind,
            n,
            k,
            error_rate,
            seed,
            overconfident_fraction: default_overconfident(),
            embedding_dim: default_dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::BadScenario(format!("n = {} (need >= 2)", self.n)));
        }
        if self.k < 2 {
            return Err(Error::BadScenario(format!("k = {} (need >= 2)", self.k)));
        }
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(Error::BadScenario(format!("error_rate {} outside [0,1]", self.error_rate)));
        }
        if !(0.0..=1.0).contains(&self.overconfident_fraction) {
            return Err(Error::BadScenario(format!(
                "overconfident_fraction {} outside [0,1]",
                self.overconfident_fraction
            )));
        }
        if self.embedding_dim == 0 {
            return Err(Error::BadScenario("embedding_dim must be >= 1".into()));
        }
        Ok(())
    }
}

fn uniform_in(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * seed::unit(rng)
}

fn index_below(rng: &mut SeededRng, n: usize) -> usize {
    ((seed::unit(rng) * n as f64) as usize).min(n - 1)
}

/// A class other than `not`, uniformly.
fn other_class(rng: &mut SeededRng, k: usize, not: usize) -> usize {
    let j = index_below(rng, k - 1);
    if j >= not {
        j + 1
    } else {
        j
    }
}

/// Mass `confidence` on `top`, the rest spread randomly over other classes.
/// With `confidence > 0.5` the top class is the strict argmax.
fn peaked(rng: &mut SeededRng, k: usize, top: usize, confidence: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k - 1).map(|_| 0.1 + seed::unit(rng)).collect();
    let total: f64 = raw.iter().sum();
    let mut rest = raw.into_iter().map(|w| w / total * (1.0 - confidence));
    (0..k)
        .map(|c| if c == top { confidence } else { rest.next().unwrap() })
        .collect()
}

/// Deterministic synthetic pool.
pub fn generate_synthetic(scenario: &SyntheticScenario) -> Result<Vec<SampleRecord>> {
    scenario.validate()?;
    let (n, k) = (scenario.n, scenario.k);
    let mut rng = seed::rng_from_seed(scenario.seed);

    let centers: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..scenario.embedding_dim).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect())
        .collect();
    let kind_name = match scenario.kind {
        ScenarioKind::Calibrated => "calibrated",
        ScenarioKind::MiscalibratedOverconfident => "overconfident",
        ScenarioKind::UniformNoise => "uniform",
    };
    let options: Vec<String> = (0..k).map(|c| format!("class {c}")).collect();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let is_error = seed::unit(&mut rng) < scenario.error_rate;
        let (main, pred) = match scenario.kind {
            ScenarioKind::UniformNoise => (vec![1.0 / k as f64; k], 0),
            ScenarioKind::Calibrated => {
                let pred = index_below(&mut rng, k);
                let c = if is_error {
                    uniform_in(&mut rng, 0.55, 0.75)
                } else {
                    uniform_in(&mut rng, 0.75, 0.99)
                };
                (peaked(&mut rng, k, pred, c), pred)
            }
            ScenarioKind::MiscalibratedOverconfident => {
                let pred = index_below(&mut rng, k);
                let c = if !is_error {
                    uniform_in(&mut rng, 0.55, 0.99)
                } else if seed::unit(&mut rng) < scenario.overconfident_fraction {
                    uniform_in(&mut rng, 0.9, 0.99)
                } else {
                    uniform_in(&mut rng, 0.55, 0.9)
                };
                (peaked(&mut rng, k, pred, c), pred)
            }
        };
        let gold = if is_error { other_class(&mut rng, k, pred) } else { pred };

        // An independent, moderately reliable second model.
        let sur_top = if seed::unit(&mut rng) < 0.75 {
            gold
        } else {
            other_class(&mut rng, k, gold)
        };
        let sur_conf = uniform_in(&mut rng, 0.55, 0.95);
        let surrogate = peaked(&mut rng, k, sur_top, sur_conf);

        let center = &centers[i % centers.len()];
        let embedding: Vec<f64> = center
            .iter()
            .map(|x| x + uniform_in(&mut rng, -0.3, 0.3))
            .collect();

        let mut metadata = BTreeMap::new();
        metadata.insert("scenario".to_string(), kind_name.to_string());
        out.push(SampleRecord {
            id: format!("syn-{i:05}"),
            task: format!("synthetic-{kind_name}"),
            context: String::new(),
            question: format!("Synthetic item {i}"),
            options: options.clone(),
            gold_index: gold,
            main_probs: main,
            surrogate_probs: Some(surrogate),
            embedding: Some(embedding),
            metadata,
        });
    }
    Ok(out)
}
