//! Pronoun-gender classifiers: probe construction, mask-fill decoding, an
//! antecedent heuristic and an HTTP client for externally served models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::GenderLabel;
use crate::error::{Error, Result};
use crate::extract::{fit_context, GenderLexicon, PronounExample, PronounKind, DEFAULT_BUDGET};
use crate::remote::{join_url, JsonClient, RemoteError, RetryPolicy};
use crate::text;

pub const MASK: &str = "***";
pub const T_OPEN: &str = "<t>";
pub const T_CLOSE: &str = "</t>";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkStyle {
    /// A mask placeholder in the dropped subject position.
    MaskToken,
    /// `<t> ... </t>` around the anchor token.
    #[default]
    TTags,
}

impl MarkStyle {
    pub fn name(self) -> &'static str {
        match self {
            MarkStyle::MaskToken => "mask_token",
            MarkStyle::TTags => "t_tags",
        }
    }
}

impl std::str::FromStr for MarkStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mask_token" | "mask" => Ok(MarkStyle::MaskToken),
            "t_tags" | "tags" => Ok(MarkStyle::TTags),
            other => Err(Error::Invalid(format!("unknown mark style {other:?}"))),
        }
    }
}

/// Classifier input: preceding context plus the marked target sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Probe {
    pub text: String,
    pub mark_style: MarkStyle,
    pub budget: usize,
    /// How many preceding sentences survived trimming.
    pub context_sentences: usize,
}

fn mark_target(example: &PronounExample, style: MarkStyle) -> Result<String> {
    let target = &example.target_sentence;
    let toks = text::tokenize(target);
    let anchor = toks.get(example.anchor_index).ok_or_else(|| {
        Error::Invalid(format!("{}: anchor {} outside target sentence", example.id, example.anchor_index))
    })?;
    let (start, end) = (anchor.char_span.start, anchor.char_span.end);
    match style {
        MarkStyle::TTags => Ok(format!("{}{T_OPEN} {} {T_CLOSE}{}", &target[..start], anchor.surface, &target[end..])),
        MarkStyle::MaskToken => {
            if example.kind != PronounKind::Prodrop {
                return Err(Error::Invalid("mask probes apply to dropped subjects only".into()));
            }
            let initial = toks[..example.anchor_index].iter().all(|t| text::is_punct_token(&t.surface));
            let verb = if initial { lowercase_first(&anchor.surface) } else { anchor.surface.clone() };
            Ok(format!("{}{MASK} {verb}{}", &target[..start], &target[end..]))
        }
    }
}

fn lowercase_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Builds the exact probe text sent to a classifier. Context is trimmed to
/// whole sentences, oldest first, so the unmarked text fits `budget`.
pub fn build_probe(example: &PronounExample, style: MarkStyle, budget: usize) -> Result<Probe> {
    let marked = mark_target(example, style)?;
    let context = fit_context(&example.context_sentences, &example.target_sentence, budget)?;
    let mut parts = context.clone();
    parts.push(marked);
    Ok(Probe { text: parts.join(" "), mark_style: style, budget, context_sentences: context.len() })
}

/// A gender decision or an abstention. Confidence is present exactly when a
/// label is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrediction")]
pub struct Prediction {
    label: Option<GenderLabel>,
    confidence: Option<f64>,
    source: String,
}

#[derive(Deserialize)]
struct RawPrediction {
    label: Option<GenderLabel>,
    confidence: Option<f64>,
    source: String,
}

impl TryFrom<RawPrediction> for Prediction {
    type Error = String;

    fn try_from(r: RawPrediction) -> std::result::Result<Self, String> {
        match (r.label, r.confidence) {
            (Some(l), Some(c)) if (0.0..=1.0).contains(&c) => Ok(Prediction::new(l, c, &r.source)),
            (None, None) => Ok(Prediction::abstain(&r.source)),
            _ => Err("label and confidence must both be present or both absent".into()),
        }
    }
}

impl Prediction {
    /// `confidence` is clamped to `[0, 1]`.
    pub fn new(label: GenderLabel, confidence: f64, source: &str) -> Self {
        Prediction { label: Some(label), confidence: Some(confidence.clamp(0.0, 1.0)), source: source.to_string() }
    }

    pub fn abstain(source: &str) -> Self {
        Prediction { label: None, confidence: None, source: source.to_string() }
    }

    pub fn label(&self) -> Option<GenderLabel> {
        self.label
    }

    pub fn confidence(&self) -> Option<f64> {
        self.confidence
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_abstain(&self) -> bool {
        self.label.is_none()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecodeOptions {
    pub top_k: usize,
    pub ignore_diacritics: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions { top_k: 10, ignore_diacritics: true }
    }
}

/// Reads a gender off a masked LM's k-best fills: the first of `él`/`ella`
/// within the top `k` wins. Confidence is that fill's share of the top-`k`
/// score mass.
pub fn decode_mask_fills<S: AsRef<str>>(kbest: &[(S, f64)], opts: DecodeOptions) -> Prediction {
    const SOURCE: &str = "mask-fill";
    let top = &kbest[..kbest.len().min(opts.top_k)];
    let total: f64 = top.iter().map(|(_, s)| s.max(0.0)).sum();
    let norm = |w: &str| {
        let w = w.trim().to_lowercase();
        if opts.ignore_diacritics {
            text::strip_diacritics(&w)
        } else {
            w
        }
    };
    let (masc, fem) = (norm("él"), norm("ella"));
    for (tok, score) in top {
        let w = norm(tok.as_ref());
        let label = if w == masc {
            GenderLabel::Masc
        } else if w == fem {
            GenderLabel::Fem
        } else {
            continue;
        };
        let conf = if total > 0.0 { score.max(0.0) / total } else { 0.0 };
        return Prediction::new(label, conf, SOURCE);
    }
    Prediction::abstain(SOURCE)
}

pub trait Classifier: Send + Sync {
    fn id(&self) -> &str;
    fn classify(&self, example: &PronounExample) -> Result<Prediction>;
}

/// Classifies every example in parallel; output order matches input order.
pub fn classify_batch(classifier: &dyn Classifier, examples: &[PronounExample]) -> Result<Vec<Prediction>> {
    examples.par_iter().map(|e| classifier.classify(e)).collect()
}

pub const HEURISTIC_CONFIDENCE: f64 = 0.9;

/// Labels by the gender of the nearest gendered word before the anchor,
/// searching the target sentence first and then the context, newest first.
pub struct HeuristicClassifier {
    lexicon: GenderLexicon,
}

impl HeuristicClassifier {
    pub fn new(lexicon: GenderLexicon) -> Self {
        HeuristicClassifier { lexicon }
    }

    pub fn nearest_gendered(&self, example: &PronounExample) -> Option<(String, GenderLabel)> {
        let target = text::tokenize(&example.target_sentence);
        let before = target.iter().take(example.anchor_index).rev();
        let context = example.context_sentences.iter().rev().flat_map(|s| {
            let mut t = text::tokenize(s);
            t.reverse();
            t
        });
        before.cloned().chain(context).find_map(|t| self.lexicon.gender(&t.surface).map(|g| (t.surface, g)))
    }
}

impl Classifier for HeuristicClassifier {
    fn id(&self) -> &str {
        "heuristic"
    }

    fn classify(&self, example: &PronounExample) -> Result<Prediction> {
        Ok(match self.nearest_gendered(example) {
            Some((_, g)) => Prediction::new(g, HEURISTIC_CONFIDENCE, self.id()),
            None => Prediction::abstain(self.id()),
        })
    }
}

/// Client for `POST {base}/classify {"text", "mark_style"}`. The service
/// answers `{"label", "confidence"}`, `{"abstain": true}` or a k-best list
/// `{"fills": [[token, score], ...]}` that is decoded locally. Timeouts and
/// exhausted 5xx retries abstain; malformed bodies and 4xx are errors.
pub struct RemoteClassifier {
    url: String,
    client: JsonClient,
    style: MarkStyle,
    budget: usize,
    decode: DecodeOptions,
}

impl RemoteClassifier {
    pub fn new(base_url: &str, style: MarkStyle, budget: usize, policy: RetryPolicy, max_in_flight: usize) -> Self {
        RemoteClassifier {
            url: join_url(base_url, "classify"),
            client: JsonClient::new(policy, max_in_flight),
            style,
            budget,
            decode: DecodeOptions::default(),
        }
    }

    pub fn with_decode(mut self, decode: DecodeOptions) -> Self {
        self.decode = decode;
        self
    }

    pub fn with_defaults(base_url: &str) -> Self {
        Self::new(base_url, MarkStyle::TTags, DEFAULT_BUDGET, RetryPolicy::default(), 8)
    }

    pub fn classify_probe(&self, probe: &Probe) -> Result<Prediction> {
        let body = json!({"text": probe.text, "mark_style": probe.mark_style.name()});
        let resp = match self.client.post(&self.url, &body) {
            Ok(v) => v,
            Err(RemoteError::Malformed(m)) => return Err(Error::MalformedResponse(m)),
            Err(RemoteError::Status(c)) if c < 500 => {
                return Err(Error::MalformedResponse(format!("classifier rejected probe with HTTP {c}")))
            }
            Err(e) => {
                log::warn!("classifier unavailable, abstaining: {e}");
                return Ok(Prediction::abstain("remote"));
            }
        };
        parse_response(&resp, self.decode)
    }
}

fn parse_response(v: &Value, decode: DecodeOptions) -> Result<Prediction> {
    let bad = || Error::MalformedResponse(format!("unexpected classifier response {v}"));
    let obj = v.as_object().ok_or_else(bad)?;
    if obj.get("abstain").and_then(Value::as_bool) == Some(true) {
        return Ok(Prediction::abstain("remote"));
    }
    if let Some(fills) = obj.get("fills") {
        let fills: Vec<(String, f64)> = serde_json::from_value(fills.clone()).map_err(|_| bad())?;
        return Ok(decode_mask_fills(&fills, decode));
    }
    match obj.get("label") {
        Some(Value::Null) => Ok(Prediction::abstain("remote")),
        Some(Value::String(l)) => {
            let label: GenderLabel = l.parse().map_err(|_| bad())?;
            let c = obj.get("confidence").and_then(Value::as_f64).ok_or_else(bad)?;
            if !(0.0..=1.0).contains(&c) {
                return Err(bad());
            }
            Ok(Prediction::new(label, c, "remote"))
        }
        _ => Err(bad()),
    }
}

impl Classifier for RemoteClassifier {
    fn id(&self) -> &str {
        "remote"
    }

    fn classify(&self, example: &PronounExample) -> Result<Prediction> {
        self.classify_probe(&build_probe(example, self.style, self.budget)?)
    }
}
