//! One-to-one sentence matching inside a page pair.
//!
//! Each Spanish sentence is bridge-translated and compared with every English
//! sentence. A pair is admissible when its edit distance is at most half the
//! longer sentence and both sides share a noun or verb. Among admissible pairs
//! the matching maximizes the number of pairs and then minimizes total cost.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Sentence};
use crate::error::{Error, Result};
use crate::page_align::PagePair;
use crate::text;
use crate::translate::Bridge;

/// Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosClass {
    Noun,
    Verb,
    Other,
}

impl PosClass {
    pub fn from_tag(tag: &str) -> PosClass {
        let t = tag.trim().to_ascii_lowercase();
        if t == "noun" || t == "n" || t == "propn" || t.starts_with("nn") {
            PosClass::Noun
        } else if t == "verb" || t == "v" || t.starts_with("vb") {
            PosClass::Verb
        } else {
            PosClass::Other
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PosLexicon {
    entries: HashMap<String, PosClass>,
}

impl PosLexicon {
    pub fn from_reader<R: BufRead>(r: R) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (tok, tag) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected `token<TAB>tag`".into() })?;
            entries.insert(text::nfc(tok.trim()).to_lowercase(), PosClass::from_tag(tag));
        }
        Ok(PosLexicon { entries })
    }

    pub fn insert(&mut self, token: &str, class: PosClass) {
        self.entries.insert(token.to_lowercase(), class);
    }

    pub fn class(&self, token: &str) -> PosClass {
        self.entries.get(token).copied().unwrap_or(PosClass::Other)
    }
}

/// How "shares a noun or verb" is decided.
#[derive(Clone, Debug)]
pub enum ContentWords {
    Lexicon(PosLexicon),
    /// Without a POS lexicon: any shared token of length >= 3 that is not a
    /// stopword counts. A recall-oriented approximation, used only on request.
    Fallback {
        stopwords: HashSet<String>,
    },
}

impl ContentWords {
    pub fn default_stopwords() -> HashSet<String> {
        include_str!("../data/en_stopwords.txt")
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    }

    fn is_content(&self, tok: &str) -> bool {
        match self {
            ContentWords::Lexicon(lex) => matches!(lex.class(tok), PosClass::Noun | PosClass::Verb),
            ContentWords::Fallback { stopwords } => {
                tok.chars().count() >= 3 && !stopwords.contains(tok) && !text::is_punct_token(tok)
            }
        }
    }
}

/// Returns the shared lowercased noun/verb surfaces, in order of first
/// appearance in `b`. Empty means no shared content word.
pub fn shares_content_word<S: AsRef<str>>(a: &[S], b: &[S], test: &ContentWords) -> Vec<String> {
    let left: HashSet<String> = a.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in b {
        let t = t.as_ref().to_lowercase();
        if left.contains(&t) && test.is_content(&t) && seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Assignment

/// Minimum-cost assignment of every row of a rectangular matrix with
/// `rows <= cols`. Returns the column chosen for each row.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    debug_assert!(n <= m);
    const INF: i64 = i64::MAX / 4;
    // 1-based potentials; p[j] is the row matched to column j
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Exact matching over a partial cost matrix (`None` = inadmissible):
/// maximum number of pairs first, then minimum total cost.
pub fn assign_exact(costs: &[Vec<Option<u64>>]) -> Vec<(usize, usize)> {
    let n = costs.len();
    let m = costs.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let max_cost = costs.iter().flatten().flatten().copied().max().unwrap_or(0) as i64;
    // any admissible pair is cheaper than the sum of all admissible costs
    let big = (max_cost + 1) * (n.min(m) as i64 + 1);
    let transpose = n > m;
    let (rows, cols) = if transpose { (m, n) } else { (n, m) };
    let matrix: Vec<Vec<i64>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let (i, j) = if transpose { (c, r) } else { (r, c) };
                    costs[i][j].map_or(big, |x| x as i64)
                })
                .collect()
        })
        .collect();
    let mut out: Vec<(usize, usize)> = hungarian(&matrix)
        .into_iter()
        .enumerate()
        .map(|(r, c)| if transpose { (c, r) } else { (r, c) })
        .filter(|&(i, j)| costs[i][j].is_some())
        .collect();
    out.sort_unstable();
    out
}

/// Smallest-cost-first greedy matching; ties broken by (row, column).
pub fn assign_greedy(costs: &[Vec<Option<u64>>]) -> Vec<(usize, usize)> {
    let mut cands: Vec<(u64, usize, usize)> = costs
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter_map(move |(j, c)| c.map(|c| (c, i, j))))
        .collect();
    cands.sort_unstable();
    let m = costs.first().map_or(0, Vec::len);
    let mut row_used = vec![false; costs.len()];
    let mut col_used = vec![false; m];
    let mut out = Vec::new();
    for (_, i, j) in cands {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

// ---------------------------------------------------------------------------
// Sentence alignment

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditUnit {
    Token,
    Char,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignMethod {
    Exact,
    Greedy,
}

#[derive(Clone, Debug)]
pub struct SentAlignConfig {
    pub unit: EditUnit,
    /// Largest side length solved exactly; larger pages fall back to greedy.
    pub exact_limit: usize,
    /// A pair is admissible when its distance is at most
    /// `floor(max_cost_ratio * longer length)`.
    pub max_cost_ratio: f64,
    pub content: ContentWords,
}

impl SentAlignConfig {
    pub fn new(content: ContentWords) -> Self {
        SentAlignConfig { unit: EditUnit::Token, exact_limit: 200, max_cost_ratio: 0.5, content }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentencePair {
    pub es_doc_id: String,
    pub en_doc_id: String,
    pub es_sent: Sentence,
    pub en_sent: Sentence,
    /// Bridge translation of the Spanish sentence.
    pub bridge: String,
    pub cost: usize,
    pub shared_content: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedSentence {
    pub doc_id: String,
    pub sent_id: u32,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct SentenceAlignment {
    pub pairs: Vec<SentencePair>,
    pub method: AssignMethod,
    pub skipped: Vec<SkippedSentence>,
}

/// Cost of one candidate pair, or `None` when it violates a constraint.
/// Token inputs are lowercased surfaces.
pub fn pair_cost(
    bridge: &[String],
    english: &[String],
    unit: EditUnit,
    max_cost_ratio: f64,
    content: &ContentWords,
) -> Option<(usize, Vec<String>)> {
    let (cost, len) = match unit {
        EditUnit::Token => (edit_distance(bridge, english), bridge.len().max(english.len())),
        EditUnit::Char => {
            let a: Vec<char> = bridge.join(" ").chars().collect();
            let b: Vec<char> = english.join(" ").chars().collect();
            (edit_distance(&a, &b), a.len().max(b.len()))
        }
    };
    if cost > (len as f64 * max_cost_ratio).floor() as usize {
        return None;
    }
    let shared = shares_content_word(bridge, english, content);
    (!shared.is_empty()).then_some((cost, shared))
}

pub fn align_sentences(pair: &PagePair<'_>, bridge: &Bridge, cfg: &SentAlignConfig) -> SentenceAlignment {
    let mut skipped = Vec::new();
    let mut es_rows: Vec<(&Sentence, String, Vec<String>)> = Vec::new();
    for s in &pair.es_doc.sentences {
        match bridge.translate(s) {
            Ok(rec) => {
                let toks = text::tokenize(&rec.translation).into_iter().map(|t| t.surface.to_lowercase()).collect();
                es_rows.push((s, rec.translation, toks));
            }
            Err(e) => skipped.push(SkippedSentence {
                doc_id: pair.es_doc.doc_id.clone(),
                sent_id: s.sent_id,
                reason: e.to_string(),
            }),
        }
    }
    let en_rows: Vec<(&Sentence, Vec<String>)> =
        pair.en_doc.sentences.iter().map(|s| (s, s.lower_surfaces())).collect();

    let mut evidence: HashMap<(usize, usize), Vec<String>> = HashMap::new();
    let costs: Vec<Vec<Option<u64>>> = es_rows
        .iter()
        .enumerate()
        .map(|(i, (_, _, b))| {
            en_rows
                .iter()
                .enumerate()
                .map(|(j, (_, e))| {
                    pair_cost(b, e, cfg.unit, cfg.max_cost_ratio, &cfg.content).map(|(c, w)| {
                        evidence.insert((i, j), w);
                        c as u64
                    })
                })
                .collect()
        })
        .collect();

    let method =
        if es_rows.len().max(en_rows.len()) <= cfg.exact_limit { AssignMethod::Exact } else { AssignMethod::Greedy };
    let matched = match method {
        AssignMethod::Exact => assign_exact(&costs),
        AssignMethod::Greedy => assign_greedy(&costs),
    };
    let pairs = matched
        .into_iter()
        .map(|(i, j)| SentencePair {
            es_doc_id: pair.es_doc.doc_id.clone(),
            en_doc_id: pair.en_doc.doc_id.clone(),
            es_sent: es_rows[i].0.clone(),
            en_sent: en_rows[j].0.clone(),
            bridge: es_rows[i].1.clone(),
            cost: costs[i][j].unwrap() as usize,
            shared_content: evidence.remove(&(i, j)).unwrap_or_default(),
        })
        .collect();
    SentenceAlignment { pairs, method, skipped }
}

/// Aligns every page in parallel; output follows page order.
pub fn align_all(pages: &[PagePair<'_>], bridge: &Bridge, cfg: &SentAlignConfig) -> Vec<SentenceAlignment> {
    pages.par_iter().map(|p| align_sentences(p, bridge, cfg)).collect()
}

// ---------------------------------------------------------------------------
// JSONL serialization

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub es_doc_id: String,
    pub en_doc_id: String,
    pub es_sent_id: u32,
    pub en_sent_id: u32,
    pub cost: usize,
    pub witnesses: Vec<String>,
    pub method: AssignMethod,
    pub es_text: String,
    pub en_text: String,
    pub bridge: String,
}

pub fn write_pairs_jsonl<W: Write>(alignments: &[SentenceAlignment], mut w: W) -> Result<()> {
    for a in alignments {
        for p in &a.pairs {
            let rec = PairRecord {
                es_doc_id: p.es_doc_id.clone(),
                en_doc_id: p.en_doc_id.clone(),
                es_sent_id: p.es_sent.sent_id,
                en_sent_id: p.en_sent.sent_id,
                cost: p.cost,
                witnesses: p.shared_content.clone(),
                method: a.method,
                es_text: p.es_sent.text.clone(),
                en_text: p.en_sent.text.clone(),
                bridge: p.bridge.clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn read_pair_records<R: BufRead>(r: R) -> Result<Vec<PairRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record { record: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

/// Rebuilds sentence pairs from records, taking sentence bodies (with any
/// annotations) from the loaded corpora.
pub fn resolve_pair_records(records: &[PairRecord], es: &[Document], en: &[Document]) -> Result<Vec<SentencePair>> {
    let es: HashMap<&str, &Document> = es.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let en: HashMap<&str, &Document> = en.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let miss = |what: &str| Error::Record { record: i + 1, msg: format!("unknown {what}") };
            let es_doc = es.get(r.es_doc_id.as_str()).ok_or_else(|| miss("es document"))?;
            let en_doc = en.get(r.en_doc_id.as_str()).ok_or_else(|| miss("en document"))?;
            Ok(SentencePair {
                es_doc_id: r.es_doc_id.clone(),
                en_doc_id: r.en_doc_id.clone(),
                es_sent: es_doc.sentence(r.es_sent_id).ok_or_else(|| miss("es sentence"))?.clone(),
                en_sent: en_doc.sentence(r.en_sent_id).ok_or_else(|| miss("en sentence"))?.clone(),
                bridge: r.bridge.clone(),
                cost: r.cost,
                shared_content: r.witnesses.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Lang;
    use crate::translate::IdentityTranslator;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn naive_distance(a: &[String], b: &[String]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = naive_distance(ra, rb) + usize::from(x != y);
                sub.min(naive_distance(ra, b) + 1).min(naive_distance(a, rb) + 1)
            }
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(edit_distance(&toks("a b c"), &toks("a b c")), 0);
        assert_eq!(edit_distance(&toks("a b c"), &toks("a x c")), 1);
        assert_eq!(edit_distance(&toks(""), &toks("a b")), 2);
    }

    fn lexicon() -> ContentWords {
        let mut lex = PosLexicon::default();
        lex.insert("published", PosClass::Verb);
        lex.insert("anthologies", PosClass::Noun);
        lex.insert("the", PosClass::Other);
        ContentWords::Lexicon(lex)
    }

    #[test]
    fn shared_verb_is_witness() {
        let w = shares_content_word(&toks("he published poems"), &toks("she published anthologies"), &lexicon());
        assert_eq!(w, ["published"]);
    }

    #[test]
    fn no_overlap_no_witness() {
        assert!(shares_content_word(&toks("a b"), &toks("c d"), &lexicon()).is_empty());
    }

    #[test]
    fn stopword_overlap_is_not_content() {
        assert!(shares_content_word(&toks("the cat"), &toks("the dog"), &lexicon()).is_empty());
        let fallback = ContentWords::Fallback { stopwords: ContentWords::default_stopwords() };
        assert!(shares_content_word(&toks("the cat"), &toks("the dog"), &fallback).is_empty());
        assert_eq!(shares_content_word(&toks("the cat"), &toks("the cat"), &fallback), ["cat"]);
    }

    #[test]
    fn pos_tags_map_to_classes() {
        assert_eq!(PosClass::from_tag("NNS"), PosClass::Noun);
        assert_eq!(PosClass::from_tag("VBD"), PosClass::Verb);
        assert_eq!(PosClass::from_tag("verb"), PosClass::Verb);
        assert_eq!(PosClass::from_tag("DT"), PosClass::Other);
    }

    fn brute_force(costs: &[Vec<Option<u64>>]) -> (usize, u64) {
        fn go(i: usize, costs: &[Vec<Option<u64>>], used: &mut Vec<bool>, best: &mut (usize, u64), cur: (usize, u64)) {
            if i == costs.len() {
                if cur.0 > best.0 || (cur.0 == best.0 && cur.1 < best.1) {
                    *best = cur;
                }
                return;
            }
            go(i + 1, costs, used, best, cur);
            for j in 0..used.len() {
                if let (false, Some(c)) = (used[j], costs[i][j]) {
                    used[j] = true;
                    go(i + 1, costs, used, best, (cur.0 + 1, cur.1 + c));
                    used[j] = false;
                }
            }
        }
        let m = costs.first().map_or(0, Vec::len);
        let mut best = (0, 0);
        go(0, costs, &mut vec![false; m], &mut best, (0, 0));
        best
    }

    fn summarize(costs: &[Vec<Option<u64>>], m: &[(usize, usize)]) -> (usize, u64) {
        (m.len(), m.iter().map(|&(i, j)| costs[i][j].unwrap()).sum())
    }

    #[test]
    fn three_by_three_matches_permutation_search() {
        let costs =
            vec![vec![Some(4), Some(1), Some(3)], vec![Some(2), Some(0), Some(5)], vec![Some(3), Some(2), Some(2)]];
        let m = assign_exact(&costs);
        assert_eq!(summarize(&costs, &m), (3, 5));
        assert_eq!(summarize(&costs, &m), brute_force(&costs));
    }

    #[test]
    fn inadmissible_pairs_never_matched() {
        let costs = vec![vec![None, Some(1)], vec![None, Some(0)]];
        let m = assign_exact(&costs);
        assert_eq!(m, vec![(1, 1)]);
    }

    fn arb_costs() -> impl Strategy<Value = Vec<Vec<Option<u64>>>> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| {
            proptest::collection::vec(proptest::collection::vec(proptest::option::weighted(0.7, 0u64..20), m), n)
        })
    }

    proptest! {
        #[test]
        fn distance_matches_naive_recursion(
            a in proptest::collection::vec("[abc]", 0..8),
            b in proptest::collection::vec("[abc]", 0..8),
        ) {
            prop_assert_eq!(edit_distance(&a, &b), naive_distance(&a, &b));
            prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
            prop_assert_eq!(edit_distance(&a, &a), 0);
        }

        #[test]
        fn exact_assignment_is_optimal(costs in arb_costs()) {
            let m = assign_exact(&costs);
            prop_assert_eq!(summarize(&costs, &m), brute_force(&costs));
            let mut rows: Vec<_> = m.iter().map(|p| p.0).collect();
            let mut cols: Vec<_> = m.iter().map(|p| p.1).collect();
            rows.dedup(); cols.sort(); cols.dedup();
            prop_assert_eq!(rows.len(), m.len());
            prop_assert_eq!(cols.len(), m.len());
        }

        #[test]
        fn deleting_a_matched_column_loses_at_most_one_pair(costs in arb_costs(), pick in any::<usize>()) {
            let m = assign_exact(&costs);
            prop_assume!(!m.is_empty());
            let (_, col) = m[pick % m.len()];
            let reduced: Vec<Vec<Option<u64>>> = costs
                .iter()
                .map(|row| row.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, c)| *c).collect())
                .collect();
            let m2 = assign_exact(&reduced);
            prop_assert!(m2.len() <= m.len());
            prop_assert!(m2.len() + 1 >= m.len());
        }

        #[test]
        fn greedy_is_one_to_one(costs in arb_costs()) {
            let m = assign_greedy(&costs);
            let mut cols: Vec<_> = m.iter().map(|p| p.1).collect();
            cols.sort(); cols.dedup();
            prop_assert_eq!(cols.len(), m.len());
            for &(i, j) in &m { prop_assert!(costs[i][j].is_some()); }
        }
    }

    #[test]
    fn identical_pages_align_diagonally() {
        let texts = ["The cat sleeps.", "A dog barks loudly.", "Birds sing songs."];
        let es = Document::from_texts("es", Lang::Es, "T", &texts);
        let en = Document::from_texts("en", Lang::En, "T", &texts);
        let page = PagePair { es_doc: &es, en_doc: &en, match_key: "T".into() };
        let bridge = Bridge::new(Box::new(IdentityTranslator));
        let cfg = SentAlignConfig::new(ContentWords::Fallback { stopwords: ContentWords::default_stopwords() });
        let out = align_sentences(&page, &bridge, &cfg);
        assert_eq!(out.method, AssignMethod::Exact);
        assert_eq!(out.pairs.len(), 3);
        for (k, p) in out.pairs.iter().enumerate() {
            assert_eq!(p.es_sent.sent_id, k as u32);
            assert_eq!(p.en_sent.sent_id, k as u32);
            assert_eq!(p.cost, 0);
        }
    }

    #[test]
    fn greedy_used_beyond_limit() {
        let texts = ["The cat sleeps.", "A dog barks loudly."];
        let es = Document::from_texts("es", Lang::Es, "T", &texts);
        let en = Document::from_texts("en", Lang::En, "T", &texts);
        let page = PagePair { es_doc: &es, en_doc: &en, match_key: "T".into() };
        let bridge = Bridge::new(Box::new(IdentityTranslator));
        let mut cfg = SentAlignConfig::new(ContentWords::Fallback { stopwords: ContentWords::default_stopwords() });
        cfg.exact_limit = 1;
        let out = align_sentences(&page, &bridge, &cfg);
        assert_eq!(out.method, AssignMethod::Greedy);
        assert_eq!(out.pairs.len(), 2);
    }

    #[test]
    fn char_unit_bound() {
        let content = ContentWords::Fallback { stopwords: HashSet::new() };
        assert!(pair_cost(&toks("published poems"), &toks("published poem"), EditUnit::Char, 0.5, &content).is_some());
        assert!(pair_cost(&toks("abc"), &toks("abc xyz qrs tuv"), EditUnit::Char, 0.5, &content).is_none());
    }
}
