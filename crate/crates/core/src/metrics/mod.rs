//! Open-loop scores: action and move accuracy, caption metrics and control
//! signal errors, plus the prediction-file evaluator.

mod eval;
mod text;

use thiserror::Error;

pub use eval::{
    evaluate, read_predictions, write_predictions, ActionPayload, EvalConfig, MetricReport, PredictionItem,
    ResponsePayload, TaskReport, REPORT_SCHEMA,
};
pub use text::{
    bertscore, bleu4, cider_d, lcs_len, meteor_lite, rouge_l, tokenize, BertScore, BleuConfig, CiderConfig,
    EmbeddingProvider, OneHotProvider, Punctuation, TextPair, Tokenizer,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("empty prediction set")]
    Empty,
    #[error("empty references")]
    EmptyReferences,
    #[error("move label {0:?} is not in the move set")]
    UnknownMove(String),
    #[error("CIDEr-D needs at least 2 items, got {0}")]
    CorpusTooSmall(usize),
    #[error("length mismatch: {pred} predictions for {gold} gold values")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("unknown task kind {0:?}")]
    UnknownTask(String),
    #[error("prediction line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate prediction id {0:?}")]
    DuplicateId(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Fraction of items whose action name matches, and fraction whose name and
/// argument both match. A missing prediction counts as wrong; for gold
/// actions without an argument a name match counts as an argument match.
pub fn action_accuracy(pairs: &[(ActionPayload, Option<ActionPayload>)]) -> Result<(f64, f64), MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut act = 0usize;
    let mut arg = 0usize;
    for (gold, pred) in pairs {
        let Some(pred) = pred else { continue };
        if gold.p.eq_ignore_ascii_case(&pred.p) {
            act += 1;
            if gold.arg.is_none() || gold.arg == pred.arg {
                arg += 1;
            }
        }
    }
    let n = pairs.len() as f64;
    Ok((act as f64 / n, arg as f64 / n))
}

/// Exact-match fraction of dialogue moves. Every present label must belong
/// to `move_set`.
pub fn move_accuracy(pairs: &[(String, Option<String>)], move_set: &[String]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let known = |m: &str| move_set.iter().any(|x| x == m);
    let mut hits = 0usize;
    for (gold, pred) in pairs {
        if !known(gold) {
            return Err(MetricError::UnknownMove(gold.clone()));
        }
        if let Some(p) = pred {
            if !known(p) {
                return Err(MetricError::UnknownMove(p.clone()));
            }
            if p == gold {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.1, 0.5, 1.0, 5.0];

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ControlScores {
    pub rmse: f64,
    /// (threshold, fraction with |pred - gold| < threshold)
    pub accuracy: Vec<(f64, f64)>,
}

pub fn control_metrics(pred: &[f64], gold: &[f64], thresholds: &[f64]) -> Result<ControlScores, MetricError> {
    if pred.len() != gold.len() {
        return Err(MetricError::LengthMismatch { pred: pred.len(), gold: gold.len() });
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = pred.len() as f64;
    let mse = pred.iter().zip(gold).map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / n;
    let accuracy = thresholds
        .iter()
        .map(|&t| (t, pred.iter().zip(gold).filter(|(p, g)| (*p - *g).abs() < t).count() as f64 / n))
        .collect();
    Ok(ControlScores { rmse: mse.sqrt(), accuracy })
}
