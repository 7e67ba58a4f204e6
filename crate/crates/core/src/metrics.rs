//! Per-gender P/R/F1, human agreement, prodrop rates and corpus BLEU.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::GenderLabel;
use crate::error::{Error, Result};
use crate::sent_align::SentencePair;

/// Harmonic mean, 0 when both inputs are 0. Works in any unit.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Prf { tp, fp, fn_, precision, recall, f1: f1(precision, recall) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenderPrf {
    pub masc: Prf,
    pub fem: Prf,
}

impl GenderPrf {
    pub fn get(&self, g: GenderLabel) -> &Prf {
        match g {
            GenderLabel::Masc => &self.masc,
            GenderLabel::Fem => &self.fem,
        }
    }
}

/// One-vs-rest counts per gender. An abstention is a miss for the gold
/// gender and a false positive for neither.
pub fn pronoun_prf(pairs: &[(GenderLabel, Option<GenderLabel>)]) -> Result<GenderPrf> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let counts = |g: GenderLabel| {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for &(gold, pred) in pairs {
            match (gold == g, pred == Some(g)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        Prf::from_counts(tp, fp, fn_)
    };
    Ok(GenderPrf { masc: counts(GenderLabel::Masc), fem: counts(GenderLabel::Fem) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HumanLabel {
    #[serde(rename = "MASC")]
    Masc,
    #[serde(rename = "FEM")]
    Fem,
    #[serde(rename = "UNCLEAR")]
    Unclear,
}

/// Pipeline label (rows: MASC, FEM) against human judgment (columns: MASC,
/// FEM, UNCLEAR).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 2],
}

impl ConfusionMatrix {
    pub fn from_rows(masc: [u64; 3], fem: [u64; 3]) -> Self {
        ConfusionMatrix { counts: [masc, fem] }
    }

    pub fn add(&mut self, pipeline: GenderLabel, human: HumanLabel) {
        let r = match pipeline {
            GenderLabel::Masc => 0,
            GenderLabel::Fem => 1,
        };
        let c = match human {
            HumanLabel::Masc => 0,
            HumanLabel::Fem => 1,
            HumanLabel::Unclear => 2,
        };
        self.counts[r][c] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn unclear(&self) -> u64 {
        self.counts[0][2] + self.counts[1][2]
    }

    pub fn diagonal(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Share of items the annotator could resolve.
    pub disambiguation_rate: f64,
    /// Share of resolved items where the annotator matched the pipeline.
    pub agreement_rate: f64,
}

pub fn agreement_stats(m: &ConfusionMatrix) -> Result<Agreement> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Invalid("empty confusion matrix".into()));
    }
    let resolved = total - m.unclear();
    if resolved == 0 {
        return Err(Error::Undefined("agreement rate: every item is unclear".into()));
    }
    Ok(Agreement {
        disambiguation_rate: resolved as f64 / total as f64,
        agreement_rate: m.diagonal() as f64 / resolved as f64,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub count: u64,
    pub dropped: u64,
    pub rate: f64,
}

impl RateRow {
    pub fn new(count: u64, dropped: u64) -> Self {
        RateRow { count, dropped, rate: ratio(dropped, count) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProdropRates {
    pub masc: RateRow,
    pub fem: RateRow,
}

/// Counts English `he`/`she` tokens and how many sit in a pair whose Spanish
/// side lacks `él`/`ella` respectively. Case-insensitive, accent-sensitive.
pub fn prodrop_rate_tokens<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<S>)]) -> ProdropRates {
    let (mut he, mut he_drop, mut she, mut she_drop) = (0, 0, 0, 0);
    for (es, en) in pairs {
        let has = |w: &str| es.iter().any(|t| t.as_ref().to_lowercase() == w);
        let (el, ella) = (has("él"), has("ella"));
        for t in en {
            match t.as_ref().to_lowercase().as_str() {
                "he" => {
                    he += 1;
                    he_drop += u64::from(!el);
                }
                "she" => {
                    she += 1;
                    she_drop += u64::from(!ella);
                }
                _ => {}
            }
        }
    }
    ProdropRates { masc: RateRow::new(he, he_drop), fem: RateRow::new(she, she_drop) }
}

pub fn prodrop_rate(pairs: &[SentencePair]) -> ProdropRates {
    let toks: Vec<(Vec<String>, Vec<String>)> =
        pairs.iter().map(|p| (p.es_sent.surfaces(), p.en_sent.surfaces())).collect();
    prodrop_rate_tokens(&toks)
}

fn ngram_counts<S: AsRef<str>>(toks: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuDetail {
    pub score: f64,
    /// Clipped matches and totals for n = 1..=4.
    pub matches: [u64; 4],
    pub totals: [u64; 4],
    pub hyp_len: u64,
    pub ref_len: u64,
    pub brevity_penalty: f64,
}

/// Corpus BLEU-4 against one reference per hypothesis, unsmoothed and case
/// sensitive, on caller-tokenized input. Returns a score in `[0, 100]`.
pub fn bleu_detail<S: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<S>]) -> Result<BleuDetail> {
    if hypotheses.len() != references.len() {
        return Err(Error::Invalid(format!("{} hypotheses but {} references", hypotheses.len(), references.len())));
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut matches = [0u64; 4];
    let mut totals = [0u64; 4];
    let (mut c, mut r) = (0u64, 0u64);
    for (h, rf) in hypotheses.iter().zip(references) {
        c += h.len() as u64;
        r += rf.len() as u64;
        for n in 1..=4 {
            let hc = ngram_counts(h, n);
            let rc = ngram_counts(rf, n);
            for (g, k) in &hc {
                matches[n - 1] += (*k).min(rc.get(g).copied().unwrap_or(0));
                totals[n - 1] += k;
            }
        }
    }
    let brevity_penalty = if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let score = if matches.contains(&0) {
        0.0
    } else {
        let log_mean: f64 = (0..4).map(|i| (matches[i] as f64 / totals[i] as f64).ln()).sum::<f64>() / 4.0;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuDetail { score, matches, totals, hyp_len: c, ref_len: r, brevity_penalty })
}

pub fn bleu<S: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<S>]) -> Result<f64> {
    bleu_detail(hypotheses, references).map(|d| d.score)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prf: Option<GenderPrf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstentions: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<Agreement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prodrop_rates: Option<ProdropRates>,
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

/// Aligned text table: one row per system, P/R/F1 for each gender.
pub fn prf_table(rows: &[(&str, GenderPrf)]) -> String {
    let name_w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0).max(6);
    let mut s = String::new();
    let _ = writeln!(s, "{:<name_w$}  {:>17}  {:>17}", "", "MASC", "FEM");
    let _ = writeln!(s, "{:<name_w$}  {:>5} {:>5} {:>5}  {:>5} {:>5} {:>5}", "System", "P", "R", "F1", "P", "R", "F1");
    for (name, prf) in rows {
        let (m, f) = (&prf.masc, &prf.fem);
        let _ = writeln!(
            s,
            "{:<name_w$}  {:>5} {:>5} {:>5}  {:>5} {:>5} {:>5}",
            name,
            pct(m.precision),
            pct(m.recall),
            pct(m.f1),
            pct(f.precision),
            pct(f.recall),
            pct(f.f1)
        );
    }
    s
}

impl EvalReport {
    pub fn to_text(&self, system: &str) -> String {
        let mut s = String::new();
        if let Some(prf) = self.prf {
            s.push_str(&prf_table(&[(system, prf)]));
        }
        if let Some(a) = self.abstentions {
            let _ = writeln!(s, "abstentions: {a}");
        }
        if let Some(a) = self.agreement {
            let _ = writeln!(
                s,
                "disambiguated: {}% ({:.0}%)  agreement: {}% ({:.0}%)",
                pct(a.disambiguation_rate),
                100.0 * a.disambiguation_rate,
                pct(a.agreement_rate),
                100.0 * a.agreement_rate
            );
        }
        if let Some(r) = self.prodrop_rates {
            let _ = writeln!(s, "{:<6} {:>7} {:>7} {:>6}", "", "count", "dropped", "rate");
            for (g, row) in [("he", r.masc), ("she", r.fem)] {
                let _ = writeln!(s, "{:<6} {:>7} {:>7} {:>5}%", g, row.count, row.dropped, pct(row.rate));
            }
        }
        if let Some(b) = self.bleu {
            let _ = writeln!(s, "BLEU: {b:.2}");
        }
        s
    }
}
