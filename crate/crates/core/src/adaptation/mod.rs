//! Statement adaptation: multiple-choice items become true/false
//! verification items over a fixed two-class label space.
//!
//! An option is chosen per item by a probing strategy, merged with the
//! question into a declarative statement, and the label is whether the
//! chosen option is the gold answer. A scorer then supplies the model's
//! distribution over `{true, false}` for the statement.

mod remote;
pub mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::SampleRecord;
use crate::error::{Error, Result};
use crate::probdist::ProbVector;

pub use remote::{masses_from_response, ChatClient, Label, RemoteReformatter, ENV_API_KEY, ENV_ENDPOINT, NLV_LABELS};
pub use templates::{build_agnews_prompt, build_nlv_prompt, build_qa_prompt};

/// Labels of an adapted record, in class order.
pub const NLV_OPTIONS: [&str; 2] = ["true", "false"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// The model's top option.
    MostConf,
    /// The lowest-probability option.
    LeastConf,
    /// The second most probable option.
    RunnerUp,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::MostConf, Strategy::LeastConf, Strategy::RunnerUp];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::MostConf => "MostConf",
            Strategy::LeastConf => "LeastConf",
            Strategy::RunnerUp => "RunnerUp",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::BadConfig(format!("unknown strategy {s:?}")))
    }
}

/// Index picked by `strategy`. Ties go to the lowest index at every rank.
pub fn select_option(strategy: Strategy, dist: &ProbVector) -> Result<usize> {
    let p = dist.probs();
    if p.len() < 2 {
        return Err(Error::TooFewOptions(p.len()));
    }
    Ok(match strategy {
        Strategy::MostConf => dist.argmax(),
        Strategy::LeastConf => {
            let mut best = 0;
            for (i, &x) in p.iter().enumerate().skip(1) {
                if x < p[best] {
                    best = i;
                }
            }
            best
        }
        Strategy::RunnerUp => {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
            order[1]
        }
    })
}

pub fn derive_nlv_label(chosen_index: usize, gold_index: usize) -> bool {
    chosen_index == gold_index
}

/// Turns a question and option into a single declarative sentence.
pub trait Reformatter: Send + Sync {
    fn reformat(&self, question: &str, option: &str) -> Result<String>;
}

pub fn fallback_statement(question: &str, option: &str) -> String {
    format!("The answer to the question \"{question}\" is: {option}")
}

/// The reformatter's output when one is given, otherwise the fixed template.
pub fn render_statement(question: &str, option: &str, reformatter: Option<&dyn Reformatter>) -> Result<String> {
    match reformatter {
        None => Ok(fallback_statement(question, option)),
        Some(r) => {
            let s = r.reformat(question, option)?;
            if s.trim().is_empty() {
                return Err(Error::ReformatterFailure("empty statement".into()));
            }
            Ok(s)
        }
    }
}

/// Source of the model's `{true, false}` distribution for a statement.
pub trait NlvScorer: Send + Sync {
    fn nlv_dist(&self, context: &str, statement: &str) -> Result<ProbVector>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct McqaSample {
    pub id: String,
    pub task: String,
    pub context: String,
    pub question: String,
    pub options: Vec<String>,
    pub gold_index: usize,
    pub main_option_dist: ProbVector,
    pub embedding: Option<Vec<f64>>,
}

impl McqaSample {
    pub fn from_record(r: &SampleRecord) -> Result<Self> {
        if r.options.len() < 2 {
            return Err(Error::TooFewOptions(r.options.len()));
        }
        let dist = r.main_dist()?;
        if dist.k() != r.options.len() {
            return Err(Error::DimensionMismatch(dist.k(), r.options.len()));
        }
        Ok(McqaSample {
            id: r.id.clone(),
            task: r.task.clone(),
            context: r.context.clone(),
            question: r.question.clone(),
            options: r.options.clone(),
            gold_index: r.gold_index,
            main_option_dist: dist,
            embedding: r.embedding.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedStatement {
    pub source_id: String,
    pub strategy: Strategy,
    pub chosen_index: usize,
    pub statement: String,
    pub nlv_gold: bool,
    pub nlv_dist: Option<ProbVector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct AdaptOutcome {
    pub statements: Vec<AdaptedStatement>,
    /// Two-class records, in input order, for every scored statement.
    pub records: Vec<SampleRecord>,
    pub excluded: Vec<Exclusion>,
}

/// Statement for one sample, without scoring.
pub fn adapt_sample(
    sample: &McqaSample,
    strategy: Strategy,
    reformatter: Option<&dyn Reformatter>,
) -> Result<AdaptedStatement> {
    let chosen = select_option(strategy, &sample.main_option_dist)?;
    let option = &sample.options[chosen];
    let statement = match render_statement(&sample.question, option, reformatter) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{}: reformatting failed ({e}), using template", sample.id);
            fallback_statement(&sample.question, option)
        }
    };
    Ok(AdaptedStatement {
        source_id: sample.id.clone(),
        strategy,
        chosen_index: chosen,
        statement,
        nlv_gold: derive_nlv_label(chosen, sample.gold_index),
        nlv_dist: None,
    })
}

fn adapt_one(
    sample: &McqaSample,
    strategy: Strategy,
    scorer: &dyn NlvScorer,
    surrogate: Option<&dyn NlvScorer>,
    reformatter: Option<&dyn Reformatter>,
) -> Result<(AdaptedStatement, SampleRecord)> {
    let mut st = adapt_sample(sample, strategy, reformatter)?;
    let main = scorer.nlv_dist(&sample.context, &st.statement)?;
    if main.k() != 2 {
        return Err(Error::DimensionMismatch(main.k(), 2));
    }
    let sur = match surrogate {
        Some(s) => {
            let d = s.nlv_dist(&sample.context, &st.statement)?;
            if d.k() != 2 {
                return Err(Error::DimensionMismatch(d.k(), 2));
            }
            Some(d.into_inner())
        }
        None => None,
    };
    st.nlv_dist = Some(main.clone());

    let qa = &sample.main_option_dist;
    let mut metadata = BTreeMap::new();
    metadata.insert("source_id".into(), sample.id.clone());
    metadata.insert("strategy".into(), strategy.name().into());
    metadata.insert("chosen_index".into(), st.chosen_index.to_string());
    metadata.insert("qa_correct".into(), (qa.argmax() == sample.gold_index).to_string());
    metadata.insert("qa_confidence".into(), qa.max_prob().to_string());
    let task = if sample.task.is_empty() {
        "nlv".to_string()
    } else {
        format!("{}-nlv", sample.task)
    };
    let record = SampleRecord {
        id: sample.id.clone(),
        task,
        context: sample.context.clone(),
        question: st.statement.clone(),
        options: NLV_OPTIONS.iter().map(|s| s.to_string()).collect(),
        gold_index: if st.nlv_gold { 0 } else { 1 },
        main_probs: main.into_inner(),
        surrogate_probs: sur,
        embedding: sample.embedding.clone(),
        metadata,
    };
    Ok((st, record))
}

/// Adapts every sample; those that cannot be scored are excluded and
/// reported. Output order follows input order.
pub fn adapt_pool(
    samples: &[McqaSample],
    strategy: Strategy,
    scorer: &dyn NlvScorer,
    surrogate: Option<&dyn NlvScorer>,
    reformatter: Option<&dyn Reformatter>,
) -> AdaptOutcome {
    let results: Vec<Result<(AdaptedStatement, SampleRecord)>> = samples
        .par_iter()
        .map(|s| adapt_one(s, strategy, scorer, surrogate, reformatter))
        .collect();
    let mut out = AdaptOutcome::default();
    for (s, r) in samples.iter().zip(results) {
        match r {
            Ok((st, rec)) => {
                out.statements.push(st);
                out.records.push(rec);
            }
            Err(e) => {
                log::warn!("excluding {}: {e}", s.id);
                out.excluded.push(Exclusion { id: s.id.clone(), reason: e.to_string() });
            }
        }
    }
    out
}
