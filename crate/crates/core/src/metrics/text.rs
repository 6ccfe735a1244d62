//! Text-generation metrics over tokenized candidate/reference pairs.

use std::collections::HashMap;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Punctuation {
    /// Each punctuation character becomes its own token.
    Split,
    Drop,
    /// Punctuation stays attached to words.
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tokenizer {
    pub lowercase: bool,
    pub punctuation: Punctuation,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self { lowercase: true, punctuation: Punctuation::Split }
    }
}

pub fn tokenize(text: &str, cfg: &Tokenizer) -> Vec<String> {
    let text = if cfg.lowercase { text.to_lowercase() } else { text.to_string() };
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        if cfg.punctuation == Punctuation::Keep {
            out.push(word.to_string());
            continue;
        }
        let mut cur = String::new();
        for c in word.chars() {
            if c.is_ascii_punctuation() {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                if cfg.punctuation == Punctuation::Split {
                    out.push(c.to_string());
                }
            } else {
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// A tokenized candidate with one or more references.
#[derive(Debug, Clone, PartialEq)]
pub struct TextPair {
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl TextPair {
    pub fn new(candidate: &str, reference: &str, tok: &Tokenizer) -> Self {
        Self { candidate: tokenize(candidate, tok), references: vec![tokenize(reference, tok)] }
    }
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_n: usize,
    /// Added to the matched count of an order with no matches; `None`
    /// disables smoothing.
    pub epsilon: Option<f64>,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self { max_n: 4, epsilon: Some(0.1) }
    }
}

/// Corpus BLEU: clipped n-gram precisions pooled over the corpus, geometric
/// mean over orders 1..=max_n, and the brevity penalty against the closest
/// reference length.
pub fn bleu4(pairs: &[TextPair], cfg: &BleuConfig) -> Result<f64, MetricError> {
    if pairs.is_empty() || pairs.iter().any(|p| p.references.is_empty()) {
        return Err(MetricError::EmptyReferences);
    }
    let mut matched = vec![0usize; cfg.max_n];
    let mut total = vec![0usize; cfg.max_n];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for p in pairs {
        c_len += p.candidate.len();
        let closest = p
            .references
            .iter()
            .map(|r| r.len())
            .min_by_key(|&l| ((l as i64 - p.candidate.len() as i64).abs(), l))
            .expect("non-empty references");
        r_len += closest;
        for n in 1..=cfg.max_n {
            let cand = ngrams(&p.candidate, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in &p.references {
                for (g, c) in ngrams(r, n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            for (g, c) in &cand {
                matched[n - 1] += (*c).min(max_ref.get(g).copied().unwrap_or(0));
                total[n - 1] += c;
            }
        }
    }
    if r_len == 0 {
        return Err(MetricError::EmptyReferences);
    }
    if c_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 0..cfg.max_n {
        let p = if matched[n] > 0 {
            matched[n] as f64 / total[n] as f64
        } else {
            match cfg.epsilon {
                Some(eps) if total[n] > 0 => eps / total[n] as f64,
                _ => return Ok(0.0),
            }
        };
        log_sum += p.ln();
    }
    let bp = if c_len > r_len { 1.0 } else { (1.0 - r_len as f64 / c_len as f64).exp() };
    Ok(bp * (log_sum / cfg.max_n as f64).exp())
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Mean per-item ROUGE-L F-score, best reference per item.
pub fn rouge_l(pairs: &[TextPair], beta2: f64) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for p in pairs {
        let best = p
            .references
            .iter()
            .map(|r| {
                let l = lcs_len(&p.candidate, r) as f64;
                if l == 0.0 {
                    return 0.0;
                }
                let prec = l / p.candidate.len() as f64;
                let rec = l / r.len() as f64;
                (1.0 + beta2) * prec * rec / (rec + beta2 * prec)
            })
            .fold(0.0, f64::max);
        sum += best;
    }
    Ok(sum / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiderConfig {
    pub max_n: usize,
    pub sigma: f64,
    pub scale: f64,
}

impl Default for CiderConfig {
    fn default() -> Self {
        Self { max_n: 4, sigma: 6.0, scale: 10.0 }
    }
}

type TfIdf<'a> = Vec<HashMap<&'a [String], f64>>;

fn tfidf<'a>(
    tokens: &'a [String],
    df: &[HashMap<&[String], usize>],
    log_n: f64,
    max_n: usize,
) -> (TfIdf<'a>, Vec<f64>) {
    let mut vecs = Vec::with_capacity(max_n);
    let mut norms = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let mut v = HashMap::new();
        let mut norm = 0.0;
        for (g, tf) in ngrams(tokens, n) {
            let d = df[n - 1].get(g).copied().unwrap_or(0).max(1) as f64;
            let w = tf as f64 * (log_n - d.ln());
            norm += w * w;
            v.insert(g, w);
        }
        vecs.push(v);
        norms.push(norm.sqrt());
    }
    (vecs, norms)
}

/// CIDEr-D with document frequencies taken over the references of the
/// evaluation corpus. Lengths in the Gaussian penalty are token counts.
pub fn cider_d(pairs: &[TextPair], cfg: &CiderConfig) -> Result<f64, MetricError> {
    if pairs.len() < 2 {
        return Err(MetricError::CorpusTooSmall(pairs.len()));
    }
    if pairs.iter().any(|p| p.references.is_empty()) {
        return Err(MetricError::EmptyReferences);
    }
    let mut df: Vec<HashMap<&[String], usize>> = vec![HashMap::new(); cfg.max_n];
    for p in pairs {
        for n in 1..=cfg.max_n {
            let mut seen: std::collections::HashSet<&[String]> = std::collections::HashSet::new();
            for r in &p.references {
                seen.extend(ngrams(r, n).into_keys());
            }
            for g in seen {
                *df[n - 1].entry(g).or_insert(0) += 1;
            }
        }
    }
    let log_n = (pairs.len() as f64).ln();
    let mut total = 0.0;
    for p in pairs {
        let (cv, cn) = tfidf(&p.candidate, &df, log_n, cfg.max_n);
        let mut score = 0.0;
        for r in &p.references {
            let (rv, rn) = tfidf(r, &df, log_n, cfg.max_n);
            let delta = p.candidate.len() as f64 - r.len() as f64;
            let penalty = (-(delta * delta) / (2.0 * cfg.sigma * cfg.sigma)).exp();
            for n in 0..cfg.max_n {
                let mut val = 0.0;
                for (g, w) in &cv[n] {
                    if let Some(rw) = rv[n].get(g) {
                        val += w.min(*rw) * rw;
                    }
                }
                if cn[n] != 0.0 && rn[n] != 0.0 {
                    val /= cn[n] * rn[n];
                }
                score += val * penalty;
            }
        }
        total += score / cfg.max_n as f64 / p.references.len() as f64 * cfg.scale;
    }
    Ok(total / pairs.len() as f64)
}

/// Unigram alignment: exact matches first, then Porter-stem matches, each
/// candidate token taking the earliest free reference token.
fn meteor_align(cand: &[String], reference: &[String], stemmer: &Stemmer) -> Vec<Option<usize>> {
    let mut align = vec![None; cand.len()];
    let mut used = vec![false; reference.len()];
    for (i, c) in cand.iter().enumerate() {
        if let Some(j) = (0..reference.len()).find(|&j| !used[j] && reference[j] == *c) {
            align[i] = Some(j);
            used[j] = true;
        }
    }
    let cstem: Vec<String> = cand.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let rstem: Vec<String> = reference.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    for i in 0..cand.len() {
        if align[i].is_some() {
            continue;
        }
        if let Some(j) = (0..reference.len()).find(|&j| !used[j] && rstem[j] == cstem[i]) {
            align[i] = Some(j);
            used[j] = true;
        }
    }
    align
}

fn meteor_item(cand: &[String], reference: &[String], stemmer: &Stemmer) -> f64 {
    let align = meteor_align(cand, reference, stemmer);
    let m = align.iter().flatten().count();
    if m == 0 {
        return 0.0;
    }
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for a in &align {
        match (a, prev) {
            (Some(j), Some(p)) if *j == p + 1 => {}
            (Some(_), _) => chunks += 1,
            (None, _) => {}
        }
        prev = *a;
    }
    let p = m as f64 / cand.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    fmean * (1.0 - penalty)
}

/// METEOR without the synonym stage: mean of per-item scores, best
/// reference per item.
pub fn meteor_lite(pairs: &[TextPair]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let stemmer = Stemmer::create(Algorithm::English);
    let sum: f64 = pairs
        .iter()
        .map(|p| p.references.iter().map(|r| meteor_item(&p.candidate, r, &stemmer)).fold(0.0, f64::max))
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// Maps a token sequence to one vector per token, all of one dimension.
pub trait EmbeddingProvider {
    fn dimension(&self) -> usize;
    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricError>;
}

/// One-hot vectors over a fixed vocabulary.
#[derive(Debug, Clone, Default)]
pub struct OneHotProvider {
    vocab: HashMap<String, usize>,
}

impl OneHotProvider {
    pub fn from_corpus(pairs: &[TextPair]) -> Self {
        let mut vocab = HashMap::new();
        for p in pairs {
            for t in p.candidate.iter().chain(p.references.iter().flatten()) {
                let next = vocab.len();
                vocab.entry(t.clone()).or_insert(next);
            }
        }
        Self { vocab }
    }
}

impl EmbeddingProvider for OneHotProvider {
    fn dimension(&self) -> usize {
        self.vocab.len()
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricError> {
        tokens
            .iter()
            .map(|t| {
                let i =
                    self.vocab.get(t).ok_or_else(|| MetricError::Provider(format!("token {t:?} not in vocabulary")))?;
                let mut v = vec![0.0; self.vocab.len()];
                v[*i] = 1.0;
                Ok(v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn greedy(from: &[Vec<f64>], to: &[Vec<f64>], weights: &[f64]) -> f64 {
    let wsum: f64 = weights.iter().sum();
    if from.is_empty() || to.is_empty() || wsum == 0.0 {
        return 0.0;
    }
    from.iter()
        .zip(weights)
        .map(|(x, w)| w * to.iter().map(|y| cosine(x, y)).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / wsum
}

/// Greedy-matching BERTScore with injected embeddings, averaged over items
/// (best reference by F per item). With `idf`, token weights are
/// `-ln((df + 1) / (N + 1))` with document frequencies over references.
pub fn bertscore(pairs: &[TextPair], provider: &dyn EmbeddingProvider, idf: bool) -> Result<BertScore, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    if idf {
        for p in pairs {
            let seen: std::collections::HashSet<&str> = p.references.iter().flatten().map(String::as_str).collect();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
    }
    let n = pairs.len() as f64;
    let weight = |t: &String| {
        if idf {
            -((df.get(t.as_str()).copied().unwrap_or(0) as f64 + 1.0) / (n + 1.0)).ln()
        } else {
            1.0
        }
    };
    let dim = provider.dimension();
    let check = |vs: &Vec<Vec<f64>>| match vs.iter().find(|v| v.len() != dim) {
        Some(v) => Err(MetricError::Dimension { expected: dim, found: v.len() }),
        None => Ok(()),
    };
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    for p in pairs {
        let ce = provider.embed(&p.candidate)?;
        check(&ce)?;
        let cw: Vec<f64> = p.candidate.iter().map(weight).collect();
        let mut best = BertScore { precision: 0.0, recall: 0.0, f1: 0.0 };
        let mut first = true;
        for r in &p.references {
            let re = provider.embed(r)?;
            check(&re)?;
            let rw: Vec<f64> = r.iter().map(weight).collect();
            let prec = greedy(&ce, &re, &cw);
            let rec = greedy(&re, &ce, &rw);
            let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
            if first || f1 > best.f1 {
                best = BertScore { precision: prec, recall: rec, f1 };
                first = false;
            }
        }
        sp += best.precision;
        sr += best.recall;
        sf += best.f1;
    }
    Ok(BertScore { precision: sp / n, recall: sr / n, f1: sf / n })
}
