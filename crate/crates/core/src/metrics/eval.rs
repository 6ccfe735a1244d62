//! Prediction files (`{id, task, gold, pred}` JSON lines) and the
//! per-task metric report.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::text::{
    bertscore, bleu4, cider_d, meteor_lite, rouge_l, BleuConfig, CiderConfig, OneHotProvider, TextPair, Tokenizer,
};
use super::{action_accuracy, control_metrics, move_accuracy, MetricError, DEFAULT_THRESHOLDS};
use crate::harness::DEFAULT_MOVE_SET;

pub const REPORT_SCHEMA: &str = "sdnloop-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionItem {
    pub id: String,
    pub task: String,
    pub gold: Value,
    pub pred: Value,
}

/// Action payload `{p, arg}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPayload {
    pub p: String,
    #[serde(default)]
    pub arg: Option<String>,
}

/// Response payload `{move, utterance}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponsePayload {
    #[serde(rename = "move", default)]
    pub dialogue_move: Option<String>,
    #[serde(default)]
    pub utterance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub tokenizer: Tokenizer,
    pub bleu: BleuConfig,
    pub rouge_beta2: f64,
    pub cider: CiderConfig,
    pub thresholds: Vec<f64>,
    pub move_set: Vec<String>,
    pub bertscore_idf: bool,
    /// Unit label echoed for control-signal scores.
    pub control_unit: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::default(),
            bleu: BleuConfig::default(),
            rouge_beta2: 1.2,
            cider: CiderConfig::default(),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            move_set: DEFAULT_MOVE_SET.iter().map(|s| s.to_string()).collect(),
            bertscore_idf: false,
            control_unit: "unspecified".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub n: usize,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub v: String,
    pub tasks: Vec<TaskReport>,
    pub config: EvalConfig,
}

impl MetricReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        for t in &self.tasks {
            let _ = writeln!(out, "{} (n = {})", t.task, t.n);
            for (k, v) in &t.scores {
                let _ = writeln!(out, "  {k:<14} {v:.4}");
            }
        }
        out
    }
}

/// One JSON object per line, readable by [`read_predictions`].
pub fn write_predictions(items: &[PredictionItem]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("prediction items serialize") + "\n").collect()
}

pub fn read_predictions(text: &str) -> Result<Vec<PredictionItem>, MetricError> {
    let mut items = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: PredictionItem =
            serde_json::from_str(line).map_err(|e| MetricError::Parse { line: i + 1, message: e.to_string() })?;
        if !ids.insert(item.id.clone()) {
            return Err(MetricError::DuplicateId(item.id));
        }
        items.push(item);
    }
    Ok(items)
}

fn parse<T: serde::de::DeserializeOwned>(item: &PredictionItem, v: &Value) -> Result<T, MetricError> {
    serde_json::from_value(v.clone()).map_err(|e| MetricError::Parse { line: 0, message: format!("{}: {e}", item.id) })
}

fn numbers(item: &PredictionItem, v: &Value) -> Result<Vec<f64>, MetricError> {
    match v {
        Value::Number(_) => Ok(vec![parse(item, v)?]),
        _ => parse(item, v),
    }
}

fn text_scores(pairs: &[TextPair], cfg: &EvalConfig, scores: &mut BTreeMap<String, f64>) -> Result<(), MetricError> {
    scores.insert("bleu4".into(), bleu4(pairs, &cfg.bleu)?);
    scores.insert("rouge_l".into(), rouge_l(pairs, cfg.rouge_beta2)?);
    if pairs.len() >= 2 {
        scores.insert("cider_d".into(), cider_d(pairs, &cfg.cider)?);
    }
    scores.insert("meteor_lite".into(), meteor_lite(pairs)?);
    let b = bertscore(pairs, &OneHotProvider::from_corpus(pairs), cfg.bertscore_idf)?;
    scores.insert("bertscore_p".into(), b.precision);
    scores.insert("bertscore_r".into(), b.recall);
    scores.insert("bertscore_f".into(), b.f1);
    Ok(())
}

fn evaluate_task(task: &str, items: &[&PredictionItem], cfg: &EvalConfig) -> Result<TaskReport, MetricError> {
    let mut scores = BTreeMap::new();
    match task {
        "NfD" => {
            let pairs = items
                .iter()
                .map(|i| Ok((parse::<ActionPayload>(i, &i.gold)?, parse::<Option<ActionPayload>>(i, &i.pred)?)))
                .collect::<Result<Vec<_>, MetricError>>()?;
            let (act, arg) = action_accuracy(&pairs)?;
            scores.insert("act_acc".into(), act);
            scores.insert("arg_acc".into(), arg);
        }
        "RfN" => {
            let mut moves = Vec::new();
            let mut texts = Vec::new();
            for i in items {
                let g: ResponsePayload = parse(i, &i.gold)?;
                let p: Option<ResponsePayload> = parse(i, &i.pred)?;
                let p = p.unwrap_or_default();
                if let Some(m) = g.dialogue_move {
                    moves.push((m, p.dialogue_move.clone()));
                }
                if let Some(u) = g.utterance {
                    texts.push(TextPair::new(p.utterance.as_deref().unwrap_or(""), &u, &cfg.tokenizer));
                }
            }
            if !moves.is_empty() {
                scores.insert("move_acc".into(), move_accuracy(&moves, &cfg.move_set)?);
            }
            if !texts.is_empty() {
                text_scores(&texts, cfg, &mut scores)?;
            }
        }
        "caption" => {
            let pairs = items
                .iter()
                .map(|i| {
                    let g: String = parse(i, &i.gold)?;
                    let p: Option<String> = parse(i, &i.pred)?;
                    Ok(TextPair::new(p.as_deref().unwrap_or(""), &g, &cfg.tokenizer))
                })
                .collect::<Result<Vec<_>, MetricError>>()?;
            text_scores(&pairs, cfg, &mut scores)?;
        }
        "control" => {
            let (mut gold, mut pred) = (Vec::new(), Vec::new());
            for i in items {
                let g = numbers(i, &i.gold)?;
                let p = numbers(i, &i.pred)?;
                if g.len() != p.len() {
                    return Err(MetricError::LengthMismatch { pred: p.len(), gold: g.len() });
                }
                gold.extend(g);
                pred.extend(p);
            }
            let c = control_metrics(&pred, &gold, &cfg.thresholds)?;
            scores.insert("rmse".into(), c.rmse);
            for (t, a) in c.accuracy {
                scores.insert(format!("acc@{t}"), a);
            }
        }
        other => return Err(MetricError::UnknownTask(other.to_string())),
    }
    Ok(TaskReport { task: task.to_string(), n: items.len(), scores })
}

/// Groups items by task and scores each group; tasks are reported in
/// sorted order.
pub fn evaluate(items: &[PredictionItem], cfg: &EvalConfig) -> Result<MetricReport, MetricError> {
    if items.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut groups: BTreeMap<&str, Vec<&PredictionItem>> = BTreeMap::new();
    for i in items {
        groups.entry(i.task.as_str()).or_default().push(i);
    }
    let tasks =
        groups.into_iter().map(|(task, items)| evaluate_task(task, &items, cfg)).collect::<Result<Vec<_>, _>>()?;
    Ok(MetricReport { v: REPORT_SCHEMA.to_string(), tasks, config: cfg.clone() })
}
