//! Dropped-subject and possessive pronoun detection on Spanish sentences, and
//! gender projection from the aligned English side.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{GenderLabel, Head, Sentence, Token};
use crate::error::{Error, Result};
use crate::sent_align::SentencePair;
use crate::text;
use crate::token_align::TokenAlignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PronounKind {
    Prodrop,
    Possessive,
}

impl PronounKind {
    pub fn name(self) -> &'static str {
        match self {
            PronounKind::Prodrop => "prodrop",
            PronounKind::Possessive => "possessive",
        }
    }
}

impl std::str::FromStr for PronounKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prodrop" => Ok(PronounKind::Prodrop),
            "possessive" => Ok(PronounKind::Possessive),
            other => Err(Error::Invalid(format!("unknown pronoun kind {other:?}"))),
        }
    }
}

/// A pronoun position in one Spanish sentence. `anchor` is the ROOT verb for
/// prodrop and the `su`/`sus` token for possessives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PronounSlot {
    pub sent_id: u32,
    pub kind: PronounKind,
    pub anchor: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Unannotated,
    NoEnglishPronoun,
    PronounAlignedElsewhere,
    Ambiguous,
    NonPersonPronoun,
    OtherPronoun,
    NotAPronoun,
    Unaligned,
    TargetTooLong,
}

impl DropReason {
    pub fn describe(self) -> &'static str {
        match self {
            DropReason::Unannotated => "skipped: unannotated",
            DropReason::NoEnglishPronoun => "no English he/she",
            DropReason::PronounAlignedElsewhere => "English pronoun aligned elsewhere",
            DropReason::Ambiguous => "ambiguous",
            DropReason::NonPersonPronoun => "non-person pronoun",
            DropReason::OtherPronoun => "not third person singular",
            DropReason::NotAPronoun => "not a pronoun",
            DropReason::Unaligned => "unaligned",
            DropReason::TargetTooLong => "target too long",
        }
    }
}

/// Slots found in one sentence. `skipped` is set when detection could not run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Detection {
    pub slots: Vec<PronounSlot>,
    pub skipped: Option<DropReason>,
}

fn is_nominal(t: &Token) -> bool {
    t.pos_is("NOUN") || t.pos_is("PROPN")
}

fn third_singular(t: &Token) -> bool {
    let person = t.feat("Person");
    let number = t.feat("Number");
    person.is_none_or(|p| p == "3") && number.is_none_or(|n| n == "Sing")
}

/// ROOT verbs with no `nsubj` dependent and no noun to their left.
pub fn detect_prodrop(sentence: &Sentence) -> Detection {
    if !sentence.is_annotated() {
        return Detection { slots: Vec::new(), skipped: Some(DropReason::Unannotated) };
    }
    let toks = &sentence.tokens;
    let slots = toks
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_root() && t.pos_is("VERB") && third_singular(t))
        .filter(|&(i, _)| {
            let has_subject = toks.iter().any(|d| {
                d.head == Some(Head::Token(i)) && d.dep_label.as_deref().is_some_and(|l| l.starts_with("nsubj"))
            });
            !has_subject && !toks[..i].iter().any(is_nominal)
        })
        .map(|(i, _)| PronounSlot { sent_id: sentence.sent_id, kind: PronounKind::Prodrop, anchor: i })
        .collect();
    Detection { slots, skipped: None }
}

fn is_possessive(t: &Token) -> bool {
    if !matches!(t.lower().as_str(), "su" | "sus") {
        return false;
    }
    if t.pos.is_none() && t.xpos.is_none() {
        return true;
    }
    t.pos_is("DET")
        || t.pos_is("PRON")
        || t.xpos.as_deref().is_some_and(|x| x.ends_with('$'))
        || t.feat("Poss") == Some("Yes")
}

/// Every `su`/`sus` token, filtered to possessive determiners when tagged.
pub fn detect_possessive(sentence: &Sentence) -> Vec<PronounSlot> {
    sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| is_possessive(t))
        .map(|(i, _)| PronounSlot { sent_id: sentence.sent_id, kind: PronounKind::Possessive, anchor: i })
        .collect()
}

// ---------------------------------------------------------------------------
// Built-in analyzer

const BUNDLED_VERBS: &str = include_str!("../data/lexicon/es_verbs.txt");
const BUNDLED_NOUNS: &str = include_str!("../data/lexicon/es_nouns.txt");
const BUNDLED_GENDERED: &str = include_str!("../data/lexicon/es_gendered.tsv");

const DEFAULT_VERB_FEATS: &str = "Mood=Ind|Number=Sing|Person=3|VerbForm=Fin";

const DETERMINERS: &[&str] = &[
    "el",
    "la",
    "los",
    "las",
    "un",
    "una",
    "unos",
    "unas",
    "este",
    "esta",
    "estos",
    "estas",
    "ese",
    "esa",
    "aquel",
    "aquella",
    "mi",
    "mis",
    "tu",
    "tus",
    "numerosas",
    "numerosos",
    "varias",
    "varios",
    "otro",
    "otra",
];
const ADPOSITIONS: &[&str] = &[
    "a", "al", "ante", "con", "contra", "de", "del", "desde", "durante", "en", "entre", "hacia", "hasta", "para",
    "por", "según", "sin", "sobre", "tras",
];
const CONJUNCTIONS: &[&str] = &["y", "e", "o", "u", "pero", "sino", "ni", "que", "como", "cuando", "donde"];
const PRONOUNS: &[(&str, &str)] = &[
    ("él", "Gender=Masc|Number=Sing|Person=3|PronType=Prs"),
    ("ella", "Gender=Fem|Number=Sing|Person=3|PronType=Prs"),
    ("ellos", "Gender=Masc|Number=Plur|Person=3|PronType=Prs"),
    ("ellas", "Gender=Fem|Number=Plur|Person=3|PronType=Prs"),
    ("yo", "Number=Sing|Person=1|PronType=Prs"),
    ("tú", "Number=Sing|Person=2|PronType=Prs"),
    ("nosotros", "Number=Plur|Person=1|PronType=Prs"),
    ("usted", "Number=Sing|Person=2|PronType=Prs"),
];

/// Words whose referent's gender they reveal: gendered nouns and given names.
#[derive(Clone, Debug, Default)]
pub struct GenderLexicon {
    words: HashMap<String, GenderLabel>,
}

impl GenderLexicon {
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED_GENDERED.as_bytes()).expect("bundled gender lexicon parses")
    }

    /// `word<TAB>MASC|FEM` lines; `#` starts a comment.
    pub fn from_reader<R: BufRead>(r: R) -> Result<Self> {
        let mut words = HashMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (w, g) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected word<TAB>gender".into() })?;
            let g: GenderLabel =
                g.parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad gender {g:?}") })?;
            words.insert(text::nfc(w).to_lowercase(), g);
        }
        Ok(GenderLexicon { words })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn insert(&mut self, word: &str, gender: GenderLabel) {
        self.words.insert(word.to_lowercase(), gender);
    }

    pub fn gender(&self, word: &str) -> Option<GenderLabel> {
        self.words.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Lexicon-driven tagger and flat dependency builder, enough to run the
/// detectors on plain text. Real corpora should arrive as CoNLL-U.
#[derive(Clone, Debug, Default)]
pub struct Analyzer {
    verbs: HashMap<String, String>,
    nouns: HashSet<String>,
}

fn word_lines(src: &str) -> impl Iterator<Item = &str> {
    src.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl Analyzer {
    pub fn bundled() -> Self {
        Self::from_sources(BUNDLED_VERBS, BUNDLED_NOUNS)
    }

    /// `verbs` lines are `form[<TAB>feats]`; `nouns` lines are bare forms.
    pub fn from_sources(verbs: &str, nouns: &str) -> Self {
        let verbs = word_lines(verbs)
            .map(|l| match l.split_once('\t') {
                Some((w, f)) => (text::nfc(w).to_lowercase(), f.trim().to_string()),
                None => (text::nfc(l).to_lowercase(), DEFAULT_VERB_FEATS.to_string()),
            })
            .collect();
        let nouns = word_lines(nouns).map(|w| text::nfc(w).to_lowercase()).collect();
        Analyzer { verbs, nouns }
    }

    pub fn load(verbs: &Path, nouns: &Path) -> Result<Self> {
        Ok(Self::from_sources(&std::fs::read_to_string(verbs)?, &std::fs::read_to_string(nouns)?))
    }

    fn tag(&self, t: &mut Token) {
        let low = t.lower();
        let capitalized = t.surface.chars().next().is_some_and(char::is_uppercase);
        let (pos, xpos, feats): (&str, Option<&str>, Option<String>) = if text::is_punct_token(&t.surface) {
            ("PUNCT", None, None)
        } else if t.surface.chars().all(|c| c.is_ascii_digit()) {
            ("NUM", None, None)
        } else if low == "su" || low == "sus" {
            let n = if low == "su" { "Sing" } else { "Plur" };
            ("DET", Some("PRP$"), Some(format!("Number={n}|Person=3|Poss=Yes|PronType=Prs")))
        } else if let Some((_, f)) = PRONOUNS.iter().find(|(w, _)| *w == low) {
            ("PRON", None, Some(f.to_string()))
        } else if let Some(f) = self.verbs.get(&low) {
            ("VERB", None, Some(f.clone()))
        } else if DETERMINERS.contains(&low.as_str()) {
            ("DET", None, None)
        } else if ADPOSITIONS.contains(&low.as_str()) {
            ("ADP", None, None)
        } else if CONJUNCTIONS.contains(&low.as_str()) {
            ("CCONJ", None, None)
        } else if self.nouns.contains(&low) {
            ("NOUN", None, None)
        } else if capitalized {
            // Names and unknown capitalized words; sentence-initial ones too,
            // so an unknown first word never licenses a dropped subject.
            ("PROPN", None, None)
        } else {
            ("X", None, None)
        };
        t.pos = Some(pos.to_string());
        t.xpos = xpos.map(str::to_string);
        t.feats = feats;
    }

    /// Tags every token and builds a one-level tree: the first verb is ROOT,
    /// the closest noun or pronoun before it is its `nsubj`, and every other
    /// token hangs off the root as `dep`. Annotated sentences are left alone.
    pub fn annotate(&self, sentence: &mut Sentence) {
        if sentence.is_annotated() || sentence.tokens.is_empty() {
            return;
        }
        for t in sentence.tokens.iter_mut() {
            self.tag(t);
        }
        let toks = &mut sentence.tokens;
        let root = toks.iter().position(|t| t.pos_is("VERB")).unwrap_or(0);
        let subject = toks[..root].iter().rposition(|t| t.pos_is("NOUN") || t.pos_is("PROPN") || t.pos_is("PRON"));
        for (i, t) in toks.iter_mut().enumerate() {
            if i == root {
                t.head = Some(Head::Root);
                t.dep_label = Some("root".into());
            } else {
                t.head = Some(Head::Token(root));
                t.dep_label = Some(if Some(i) == subject { "nsubj" } else { "dep" }.into());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Projection

/// One labeled pronoun position with its document context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PronounExample {
    pub id: String,
    pub kind: PronounKind,
    pub label: GenderLabel,
    /// Preceding sentences of the same document, oldest first.
    pub context_sentences: Vec<String>,
    pub target_sentence: String,
    /// Index into `tokenize(target_sentence)`.
    pub anchor_index: usize,
    pub doc_id: String,
    pub sent_id: u32,
    /// Lowercased English pronoun the label was copied from.
    pub witness: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub en_doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub en_sent_id: Option<u32>,
}

impl PronounExample {
    pub fn anchor_surface(&self) -> Option<String> {
        text::tokenize(&self.target_sentence).get(self.anchor_index).map(|t| t.surface.clone())
    }
}

pub fn example_id(doc_id: &str, sent_id: u32, anchor: usize, kind: PronounKind) -> String {
    format!("{doc_id}:{sent_id}:{anchor}:{}", kind.name())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub doc_id: String,
    pub sent_id: u32,
    pub kind: PronounKind,
    pub anchor: usize,
    pub reason: DropReason,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Projection {
    pub examples: Vec<PronounExample>,
    pub dropped: Vec<DropRecord>,
}

pub const DEFAULT_BUDGET: usize = 128;

pub fn subtoken_count(s: &str) -> usize {
    text::tokenize(s).len()
}

/// Keeps the newest preceding sentences whose combined length with the target
/// fits `budget`, dropping whole sentences oldest first.
pub fn fit_context(preceding: &[String], target: &str, budget: usize) -> Result<Vec<String>> {
    let needed = subtoken_count(target);
    if needed > budget {
        return Err(Error::TargetTooLong { needed, budget });
    }
    let mut left = budget - needed;
    let mut kept = Vec::new();
    for s in preceding.iter().rev() {
        let n = subtoken_count(s);
        if n > left {
            break;
        }
        left -= n;
        kept.push(s.clone());
    }
    kept.reverse();
    Ok(kept)
}

fn gender_of_possessive(w: &str) -> std::result::Result<GenderLabel, DropReason> {
    match w {
        "his" => Ok(GenderLabel::Masc),
        "her" => Ok(GenderLabel::Fem),
        "its" => Err(DropReason::NonPersonPronoun),
        "their" | "my" | "your" | "our" | "hers" | "theirs" | "he" | "she" | "it" | "they" | "him" => {
            Err(DropReason::OtherPronoun)
        }
        _ => Err(DropReason::NotAPronoun),
    }
}

fn nominative(w: &str) -> Option<GenderLabel> {
    match w {
        "he" => Some(GenderLabel::Masc),
        "she" => Some(GenderLabel::Fem),
        _ => None,
    }
}

fn project_slot(
    slot: &PronounSlot,
    en: &[String],
    es_len: usize,
    alignment: &TokenAlignment,
) -> std::result::Result<(GenderLabel, usize), DropReason> {
    match slot.kind {
        PronounKind::Possessive => {
            let j = alignment.en_for_es(slot.anchor).ok_or(DropReason::Unaligned)?;
            gender_of_possessive(&en[j]).map(|g| (g, j))
        }
        PronounKind::Prodrop => {
            let all: Vec<usize> = (0..en.len()).filter(|&j| nominative(&en[j]).is_some()).collect();
            if all.is_empty() {
                return Err(DropReason::NoEnglishPronoun);
            }
            let candidates: Vec<usize> =
                all.into_iter().filter(|&j| alignment.es_for_en(j).is_none_or(|i| i == slot.anchor)).collect();
            if candidates.is_empty() {
                return Err(DropReason::PronounAlignedElsewhere);
            }
            // Reference point: the verb's English link, else its relative position.
            let reference =
                alignment.en_for_es(slot.anchor).unwrap_or_else(|| (slot.anchor * en.len()) / es_len.max(1));
            let dist = |j: usize| j.abs_diff(reference);
            let best = candidates.iter().map(|&j| dist(j)).min().unwrap();
            let nearest: Vec<usize> = candidates.into_iter().filter(|&j| dist(j) == best).collect();
            if nearest.len() > 1 {
                return Err(DropReason::Ambiguous);
            }
            Ok((nominative(&en[nearest[0]]).unwrap(), nearest[0]))
        }
    }
}

/// Copies the gender of the aligned English pronoun onto each slot.
/// `preceding` holds the Spanish sentences before the target, oldest first.
pub fn project_gender(
    pair: &SentencePair,
    alignment: &TokenAlignment,
    slots: &[PronounSlot],
    preceding: &[String],
    budget: usize,
) -> Projection {
    let en = pair.en_sent.lower_surfaces();
    let es = &pair.es_sent;
    let target = es.text.clone();
    let retok = text::tokenize(&target);
    let mut out = Projection::default();
    for slot in slots {
        let drop = |reason| DropRecord {
            doc_id: pair.es_doc_id.clone(),
            sent_id: es.sent_id,
            kind: slot.kind,
            anchor: slot.anchor,
            reason,
        };
        let (label, j) = match project_slot(slot, &en, es.len(), alignment) {
            Ok(v) => v,
            Err(r) => {
                out.dropped.push(drop(r));
                continue;
            }
        };
        let context = match fit_context(preceding, &target, budget) {
            Ok(c) => c,
            Err(_) => {
                out.dropped.push(drop(DropReason::TargetTooLong));
                continue;
            }
        };
        let start = es.tokens[slot.anchor].char_span.start;
        let anchor_index = retok.iter().position(|t| t.char_span.start == start).unwrap_or(slot.anchor);
        out.examples.push(PronounExample {
            id: example_id(&pair.es_doc_id, es.sent_id, anchor_index, slot.kind),
            kind: slot.kind,
            label,
            context_sentences: context,
            target_sentence: target.clone(),
            anchor_index,
            doc_id: pair.es_doc_id.clone(),
            sent_id: es.sent_id,
            witness: en[j].clone(),
            en_doc_id: Some(pair.en_doc_id.clone()),
            en_sent_id: Some(pair.en_sent.sent_id),
        });
    }
    out
}

/// Runs both detectors on a sentence that may need annotating first.
pub fn detect_all(sentence: &Sentence) -> Detection {
    let mut d = detect_prodrop(sentence);
    d.slots.extend(detect_possessive(sentence));
    d
}

pub fn write_drop_log<W: Write>(records: &[DropRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
