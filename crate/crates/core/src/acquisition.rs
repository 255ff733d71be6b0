//! Acquisition functions, utility-to-PMF conversion and weighted sampling
//! without replacement.
//!
//! An acquisition run scores every candidate once, turns the scores into a
//! proportional PMF with a strictly positive floor, and then draws `M`
//! candidates sequentially. At step `m` the draw is proportional to the PMF
//! mass of the candidates still in the pool, and the renormalized probability
//! of the chosen candidate is recorded as `q_m` for the risk estimators.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probdist::{self, ProbVector, PROB_TOL};
use crate::sampler::WeightTree;
use crate::seed::{self, SeededRng};

pub const DEFAULT_PMF_FLOOR: f64 = 1e-6;
pub const DEFAULT_W1: f64 = 0.5;
pub const DEFAULT_W2: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionKind {
    Random,
    SelfEntropy,
    #[serde(rename = "UCB")]
    Ucb,
    #[serde(rename = "MultiLM_CE")]
    MultiLmCe,
    #[serde(rename = "UniformLM_CE")]
    UniformLmCe,
    #[serde(rename = "MultiLMUniform_CE")]
    MultiLmUniformCe,
    #[serde(rename = "MultiLM_JSD")]
    MultiLmJsd,
    #[serde(rename = "UniformLM_JSD")]
    UniformLmJsd,
    #[serde(rename = "MultiLMUniform_JSD")]
    MultiLmUniformJsd,
    #[serde(rename = "LMCluster")]
    LmCluster,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 10] = [
        FunctionKind::Random,
        FunctionKind::SelfEntropy,
        FunctionKind::Ucb,
        FunctionKind::MultiLmCe,
        FunctionKind::UniformLmCe,
        FunctionKind::MultiLmUniformCe,
        FunctionKind::MultiLmJsd,
        FunctionKind::UniformLmJsd,
        FunctionKind::MultiLmUniformJsd,
        FunctionKind::LmCluster,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::Random => "Random",
            FunctionKind::SelfEntropy => "SelfEntropy",
            FunctionKind::Ucb => "UCB",
            FunctionKind::MultiLmCe => "MultiLM_CE",
            FunctionKind::UniformLmCe => "UniformLM_CE",
            FunctionKind::MultiLmUniformCe => "MultiLMUniform_CE",
            FunctionKind::MultiLmJsd => "MultiLM_JSD",
            FunctionKind::UniformLmJsd => "UniformLM_JSD",
            FunctionKind::MultiLmUniformJsd => "MultiLMUniform_JSD",
            FunctionKind::LmCluster => "LMCluster",
        }
    }

    pub fn needs_surrogate(self) -> bool {
        matches!(
            self,
            FunctionKind::MultiLmCe
                | FunctionKind::MultiLmUniformCe
                | FunctionKind::MultiLmJsd
                | FunctionKind::MultiLmUniformJsd
        )
    }

    pub fn uses_mixture(self) -> bool {
        self == FunctionKind::MultiLmUniformCe
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionKind {
    type Err = Error;

    /// Case-insensitive; also accepts the names with an `Acq` suffix.
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        let wanted = wanted.strip_suffix("acq").unwrap_or(&wanted);
        FunctionKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == wanted)
            .ok_or_else(|| Error::BadConfig(format!("unknown acquisition function {s:?}")))
    }
}

fn default_w1() -> f64 {
    DEFAULT_W1
}
fn default_w2() -> f64 {
    DEFAULT_W2
}
fn default_floor() -> f64 {
    DEFAULT_PMF_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcqConfig {
    pub kind: FunctionKind,
    #[serde(default = "default_w1")]
    pub w1: f64,
    #[serde(default = "default_w2")]
    pub w2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucb_beta_override: Option<f64>,
    #[serde(default = "default_floor")]
    pub pmf_floor: f64,
    /// Cluster count for [`FunctionKind::LmCluster`]; `⌈√N⌉` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_k: Option<usize>,
}

impl AcqConfig {
    pub fn new(kind: FunctionKind) -> Self {
        AcqConfig {
            kind,
            w1: DEFAULT_W1,
            w2: DEFAULT_W2,
            ucb_beta_override: None,
            pmf_floor: DEFAULT_PMF_FLOOR,
            cluster_k: None,
        }
    }

    pub fn with_weights(mut self, w1: f64, w2: f64) -> Self {
        self.w1 = w1;
        self.w2 = w2;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.pmf_floor = floor;
        self
    }

    /// Checks the parts of the config that do not depend on the pool.
    pub fn validate(&self) -> Result<()> {
        if self.kind.uses_mixture() {
            probdist::check_weights(self.w1, self.w2)?;
        }
        if !(self.pmf_floor.is_finite() && self.pmf_floor > 0.0) {
            return Err(Error::BadConfig(format!(
                "pmf_floor must be positive, got {}",
                self.pmf_floor
            )));
        }
        if let Some(b) = self.ucb_beta_override {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::BadConfig(format!("ucb beta must be >= 0, got {b}")));
            }
        }
        if self.cluster_k == Some(0) {
            return Err(Error::BadConfig("cluster_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// One acquired sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionStep {
    /// 1-based step index `m`.
    pub step: usize,
    /// Index of the sample in its pool.
    pub sample: usize,
    /// Probability `q_m` of this pick among the samples remaining at step `m`.
    pub acq_prob: f64,
    /// Raw utility of the sample when it was selected.
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionTrace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<FunctionKind>,
    pub seed: u64,
    pub pool_size: usize,
    pub steps: Vec<AcquisitionStep>,
}

impl AcquisitionTrace {
    pub fn budget(&self) -> usize {
        self.steps.len()
    }

    pub fn samples(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.sample)
    }

    pub fn probs(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.acq_prob).collect()
    }
}

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

pub fn score_random() -> f64 {
    1.0
}

pub fn score_self_entropy(main: &ProbVector) -> f64 {
    probdist::shannon_entropy(main)
}

/// `β = √(ln(2 / n^(−9/2))) = √(ln 2 + 4.5 ln n)`.
pub fn ucb_beta(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::BadPoolSize(n));
    }
    Ok((std::f64::consts::LN_2 + 4.5 * (n as f64).ln()).sqrt())
}

/// Entropy plus `β` standard deviations of self-information.
pub fn score_ucb(main: &ProbVector, n: usize, config: &AcqConfig) -> Result<f64> {
    let beta = match config.ucb_beta_override {
        Some(b) => {
            if n < 2 {
                return Err(Error::BadPoolSize(n));
            }
            b
        }
        None => ucb_beta(n)?,
    };
    Ok(probdist::shannon_entropy(main) + beta * probdist::varentropy(main).sqrt())
}

pub fn score_multilm_ce(main: &ProbVector, surrogate: &ProbVector) -> Result<f64> {
    probdist::cross_entropy(surrogate, main)
}

pub fn score_uniformlm_ce(main: &ProbVector) -> f64 {
    let k = main.k() as f64;
    -main
        .probs()
        .iter()
        .map(|&p| p.max(probdist::LOG_FLOOR).ln() / k)
        .sum::<f64>()
}

pub fn score_multilm_uniform_ce(
    main: &ProbVector,
    surrogate: &ProbVector,
    config: &AcqConfig,
) -> Result<f64> {
    if main.k() != surrogate.k() {
        return Err(Error::DimensionMismatch(main.k(), surrogate.k()));
    }
    let target = probdist::mixture(surrogate, config.w1, config.w2)?;
    probdist::cross_entropy(&target, main)
}

pub fn score_multilm_jsd(main: &ProbVector, surrogate: &ProbVector) -> Result<f64> {
    probdist::jsd2(main, surrogate)
}

pub fn score_uniformlm_jsd(main: &ProbVector) -> f64 {
    let u = ProbVector::uniform(main.k()).expect("ProbVector has k >= 2");
    probdist::jsd2(main, &u).expect("same k")
}

pub fn score_multilm_uniform_jsd(main: &ProbVector, surrogate: &ProbVector) -> Result<f64> {
    let u = ProbVector::uniform(main.k())?;
    probdist::jsd3(main, surrogate, &u)
}

/// What a scorer needs to know about one candidate.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub main: &'a ProbVector,
    pub surrogate: Option<&'a ProbVector>,
}

/// Utility of one candidate under `config.kind`. `pool_size` feeds the UCB β.
/// [`FunctionKind::LmCluster`] scores by entropy within the chosen cluster.
pub fn score(candidate: Candidate<'_>, pool_size: usize, config: &AcqConfig) -> Result<f64> {
    let main = candidate.main;
    let surrogate = || {
        candidate
            .surrogate
            .ok_or_else(|| Error::MissingSurrogate(config.kind.name().to_string()))
    };
    match config.kind {
        FunctionKind::Random => Ok(score_random()),
        FunctionKind::SelfEntropy | FunctionKind::LmCluster => Ok(score_self_entropy(main)),
        FunctionKind::Ucb => score_ucb(main, pool_size, config),
        FunctionKind::MultiLmCe => score_multilm_ce(main, surrogate()?),
        FunctionKind::UniformLmCe => Ok(score_uniformlm_ce(main)),
        FunctionKind::MultiLmUniformCe => score_multilm_uniform_ce(main, surrogate()?, config),
        FunctionKind::MultiLmJsd => score_multilm_jsd(main, surrogate()?),
        FunctionKind::UniformLmJsd => Ok(score_uniformlm_jsd(main)),
        FunctionKind::MultiLmUniformJsd => score_multilm_uniform_jsd(main, surrogate()?),
    }
}

/// Scores a whole pool. Order of the output matches `candidates`.
pub fn score_pool(candidates: &[Candidate<'_>], config: &AcqConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let n = candidates.len();
    candidates
        .par_iter()
        .map(|c| score(*c, n, config))
        .collect()
}

// ---------------------------------------------------------------------------
// PMF and sampling
// ---------------------------------------------------------------------------

/// Proportional PMF over utilities with a strictly positive floor.
///
/// Negative utilities are shifted up by `|min|`. An all-zero vector maps to
/// the uniform PMF. Entries below `pmf_floor` after normalization are raised
/// to the floor and the vector is renormalized.
pub fn utilities_to_pmf(utilities: &[f64], config: &AcqConfig) -> Result<Vec<f64>> {
    pmf_with_floor(utilities, config.pmf_floor)
}

pub(crate) fn pmf_with_floor(utilities: &[f64], floor: f64) -> Result<Vec<f64>> {
    let n = utilities.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = utilities.iter().position(|u| !u.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if !(floor > 0.0 && floor < 1.0 / n as f64) && n > 1 {
        return Err(Error::BadConfig(format!(
            "pmf_floor {floor} must lie in (0, 1/N) for N = {n}"
        )));
    }
    let min = utilities.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let shifted: Vec<f64> = utilities.iter().map(|u| u + shift).collect();
    let sum: f64 = shifted.iter().sum();
    let base: Vec<f64> = if sum > 0.0 {
        shifted.iter().map(|u| u / sum).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    let floored: Vec<f64> = base.iter().map(|p| p.max(floor)).collect();
    let total: f64 = floored.iter().sum();
    Ok(floored.iter().map(|p| p / total).collect())
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, &p) in pmf.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite(i));
        }
        if p < 0.0 {
            return Err(Error::Negative { index: i, value: p });
        }
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

/// Draws `budget` indices sequentially without replacement.
///
/// At each step one uniform variate `u ∈ [0,1)` is consumed and the smallest
/// remaining index whose cumulative mass exceeds `u · (remaining mass)` is
/// taken. The recorded `utility` is the PMF mass of the chosen index.
pub fn draw_without_replacement(pmf: &[f64], budget: usize, seed: u64) -> Result<AcquisitionTrace> {
    check_pmf(pmf)?;
    let mut rng = seed::rng_from_seed(seed);
    let steps = draw_steps(pmf, pmf, budget, &mut rng)?;
    Ok(AcquisitionTrace {
        kind: None,
        seed,
        pool_size: pmf.len(),
        steps,
    })
}

pub(crate) fn draw_steps(
    pmf: &[f64],
    utilities: &[f64],
    budget: usize,
    rng: &mut SeededRng,
) -> Result<Vec<AcquisitionStep>> {
    let n = pmf.len();
    if budget == 0 || budget > n {
        return Err(Error::BudgetExceedsPool { budget, pool: n });
    }
    let mut tree = WeightTree::new(pmf);
    let mut steps = Vec::with_capacity(budget);
    for m in 1..=budget {
        let total = tree.total();
        let u = seed::unit(rng);
        let i = tree.find(u * total).ok_or(Error::Exhausted)?;
        let q = (tree.weight(i) / total).min(1.0);
        steps.push(AcquisitionStep {
            step: m,
            sample: i,
            acq_prob: q,
            utility: utilities[i],
        });
        tree.remove(i);
    }
    Ok(steps)
}

/// Scores, converts and draws in one go for any non-cluster function.
pub fn acquire(
    candidates: &[Candidate<'_>],
    config: &AcqConfig,
    budget: usize,
    seed: u64,
) -> Result<AcquisitionTrace> {
    let utilities = score_pool(candidates, config)?;
    let pmf = utilities_to_pmf(&utilities, config)?;
    let mut rng = seed::rng_from_seed(seed);
    let steps = draw_steps(&pmf, &utilities, budget, &mut rng)?;
    Ok(AcquisitionTrace {
        kind: Some(config.kind),
        seed,
        pool_size: candidates.len(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn function_names_round_trip() {
        for k in FunctionKind::ALL {
            assert_eq!(k.name().parse::<FunctionKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert_eq!("uniformlm_ceacq".parse::<FunctionKind>().unwrap(), FunctionKind::UniformLmCe);
        assert!("entropy".parse::<FunctionKind>().is_err());
    }

    #[test]
    fn self_entropy_examples() {
        close(score_self_entropy(&pv(&[0.5, 0.5])), LN_2, 1e-12);
        assert_eq!(score_self_entropy(&pv(&[1.0, 0.0])), 0.0);
        close(score_self_entropy(&pv(&[0.9, 0.1])), 0.325082973391448, 1e-12);
    }

    #[test]
    fn ucb_examples() {
        close(ucb_beta(100).unwrap(), 4.627787054036341, 1e-12);
        let cfg = AcqConfig::new(FunctionKind::Ucb);
        close(score_ucb(&ProbVector::uniform(2).unwrap(), 37, &cfg).unwrap(), LN_2, 1e-12);
        close(score_ucb(&pv(&[0.8, 0.2]), 100, &cfg).unwrap(), 3.066592462527872, 1e-9);
        assert!(matches!(score_ucb(&pv(&[0.8, 0.2]), 1, &cfg), Err(Error::BadPoolSize(1))));
        let cfg = AcqConfig {
            ucb_beta_override: Some(0.0),
            ..cfg
        };
        close(score_ucb(&pv(&[0.8, 0.2]), 100, &cfg).unwrap(), 0.500402423538188, 1e-12);
    }

    #[test]
    fn multilm_ce_examples() {
        let u = ProbVector::uniform(2).unwrap();
        close(score_multilm_ce(&u, &u).unwrap(), LN_2, 1e-12);
        close(score_multilm_ce(&pv(&[1.0, 0.0]), &pv(&[1.0, 0.0])).unwrap(), 0.0, 1e-12);
        close(score_multilm_ce(&pv(&[0.9, 0.1]), &u).unwrap(), 1.203972804325936, 1e-12);
    }

    #[test]
    fn uniformlm_ce_examples() {
        close(score_uniformlm_ce(&ProbVector::uniform(2).unwrap()), LN_2, 1e-12);
        close(score_uniformlm_ce(&pv(&[0.9, 0.1])), 1.203972804325936, 1e-12);
        close(score_uniformlm_ce(&ProbVector::uniform(4).unwrap()), 4f64.ln(), 1e-12);
    }

    #[test]
    fn multilm_uniform_ce_examples() {
        let main = pv(&[0.9, 0.1]);
        let sur = pv(&[0.6, 0.4]);
        let half = AcqConfig::new(FunctionKind::MultiLmUniformCe);
        close(
            score_multilm_uniform_ce(&main, &sur, &half).unwrap(),
            1.094111575459125,
            1e-12,
        );
        let w0 = half.clone().with_weights(0.0, 1.0);
        close(
            score_multilm_uniform_ce(&main, &sur, &w0).unwrap(),
            score_uniformlm_ce(&main),
            1e-12,
        );
        let w1 = half.clone().with_weights(1.0, 0.0);
        close(
            score_multilm_uniform_ce(&main, &sur, &w1).unwrap(),
            score_multilm_ce(&main, &sur).unwrap(),
            1e-12,
        );
        let bad = half.with_weights(0.7, 0.7);
        assert!(matches!(
            score_multilm_uniform_ce(&main, &sur, &bad),
            Err(Error::BadWeights { .. })
        ));
    }

    #[test]
    fn jsd_score_examples() {
        let p = pv(&[0.3, 0.7]);
        assert_eq!(score_multilm_jsd(&p, &p).unwrap(), 0.0);
        assert_eq!(score_uniformlm_jsd(&ProbVector::uniform(3).unwrap()), 0.0);
        close(
            score_multilm_uniform_jsd(&pv(&[0.7, 0.3]), &pv(&[0.5, 0.5])).unwrap(),
            0.018512210738706,
            1e-12,
        );
    }

    #[test]
    fn missing_surrogate_is_reported() {
        let main = pv(&[0.7, 0.3]);
        let c = Candidate { main: &main, surrogate: None };
        for kind in FunctionKind::ALL.into_iter().filter(|k| k.needs_surrogate()) {
            let err = score(c, 10, &AcqConfig::new(kind)).unwrap_err();
            assert!(matches!(err, Error::MissingSurrogate(_)), "{kind}");
        }
        for kind in FunctionKind::ALL.into_iter().filter(|k| !k.needs_surrogate()) {
            assert!(score(c, 10, &AcqConfig::new(kind)).is_ok(), "{kind}");
        }
    }

    #[test]
    fn random_scores_give_uniform_pmf() {
        let cfg = AcqConfig::new(FunctionKind::Random);
        let pmf = utilities_to_pmf(&[score_random(); 4], &cfg).unwrap();
        assert_eq!(pmf, vec![0.25; 4]);
        // Step 2 of a uniform draw over N=4 picks with probability 1/3.
        let trace = draw_without_replacement(&pmf, 2, 3).unwrap();
        close(trace.steps[1].acq_prob, 1.0 / 3.0, 1e-15);
    }

    #[test]
    fn pmf_examples() {
        let cfg = AcqConfig::new(FunctionKind::SelfEntropy);
        assert_eq!(utilities_to_pmf(&[1.0, 1.0, 1.0, 1.0], &cfg).unwrap(), vec![0.25; 4]);
        assert_eq!(utilities_to_pmf(&[2.0, 1.0, 1.0], &cfg).unwrap(), vec![0.5, 0.25, 0.25]);
        // Zeros are raised to the floor, then the vector is renormalized.
        let pmf = utilities_to_pmf(&[0.0, 0.0, 1.0], &cfg).unwrap();
        let expect_small = 1e-6 / (1.0 + 2e-6);
        close(pmf[0], expect_small, 1e-18);
        close(pmf[1], expect_small, 1e-18);
        close(pmf[2], 1.0 / (1.0 + 2e-6), 1e-15);
        close(pmf.iter().sum::<f64>(), 1.0, 1e-15);
    }

    #[test]
    fn pmf_guards() {
        let cfg = AcqConfig::new(FunctionKind::SelfEntropy);
        assert!(matches!(utilities_to_pmf(&[1.0, f64::NAN], &cfg), Err(Error::NonFinite(1))));
        assert!(matches!(utilities_to_pmf(&[], &cfg), Err(Error::EmptyInput)));
        assert_eq!(utilities_to_pmf(&[0.0, 0.0], &cfg).unwrap(), vec![0.5, 0.5]);
        // Negative inputs are shifted, never dropped.
        let pmf = utilities_to_pmf(&[-1.0, 0.0, 1.0], &cfg).unwrap();
        assert!(pmf[0] > 0.0 && pmf[0] < pmf[1] && pmf[1] < pmf[2]);
        let too_big = cfg.with_floor(0.5);
        assert!(matches!(utilities_to_pmf(&[1.0, 2.0, 3.0], &too_big), Err(Error::BadConfig(_))));
    }

    #[test]
    fn point_mass_draw() {
        let trace = draw_without_replacement(&[1.0, 0.0, 0.0], 1, 9).unwrap();
        assert_eq!(trace.steps[0].sample, 0);
        assert_eq!(trace.steps[0].acq_prob, 1.0);
        assert!(matches!(
            draw_without_replacement(&[0.5, 0.5], 3, 0),
            Err(Error::BudgetExceedsPool { budget: 3, pool: 2 })
        ));
        assert!(matches!(
            draw_without_replacement(&[1.0, 0.0, 0.0], 2, 0),
            Err(Error::Exhausted)
        ));
    }

    #[test]
    fn two_step_tree_probabilities() {
        // P(first = 0) = 0.5 and P(second = 0 | first = 1) = 2/3.
        let pmf = [0.5, 0.25, 0.25];
        let runs = 40_000u64;
        let mut first0 = 0u64;
        let mut first1 = 0u64;
        let mut first1_then0 = 0u64;
        for s in 0..runs {
            let t = draw_without_replacement(&pmf, 2, s).unwrap();
            match t.steps[0].sample {
                0 => {
                    first0 += 1;
                    close(t.steps[0].acq_prob, 0.5, 1e-15);
                }
                1 => {
                    first1 += 1;
                    if t.steps[1].sample == 0 {
                        first1_then0 += 1;
                        close(t.steps[1].acq_prob, 2.0 / 3.0, 1e-15);
                    }
                }
                _ => {}
            }
        }
        let p0 = first0 as f64 / runs as f64;
        let se0 = (0.25 / runs as f64).sqrt();
        assert!((p0 - 0.5).abs() < 4.0 * se0, "{p0}");
        let p = first1_then0 as f64 / first1 as f64;
        let se = ((2.0 / 9.0) / first1 as f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 4.0 * se, "{p}");
    }

    #[test]
    fn trace_is_deterministic() {
        let pmf = utilities_to_pmf(&[0.3, 1.2, 0.7, 2.0, 0.1], &AcqConfig::new(FunctionKind::SelfEntropy))
            .unwrap();
        let a = draw_without_replacement(&pmf, 5, 77).unwrap();
        let b = draw_without_replacement(&pmf, 5, 77).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let mut ids: Vec<_> = a.samples().collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    }
}
