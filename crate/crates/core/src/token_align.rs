//! IBM Model 1 word alignment with bidirectional argmax intersection.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sent_align::SentencePair;

pub const NULL_TOKEN: &str = "<NULL>";
/// Probability assigned to pairs never seen together, and the lower clamp
/// applied during re-estimation.
pub const PROB_FLOOR: f64 = 1e-12;

/// Conditional translation probabilities `t(target | source)`.
/// Source id 0 is the NULL token.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationTable {
    src_words: Vec<String>,
    src_index: HashMap<String, u32>,
    tgt_words: Vec<String>,
    tgt_index: HashMap<String, u32>,
    /// Per source id: `(target id, probability)` sorted by target id.
    rows: Vec<Vec<(u32, f64)>>,
    pub iterations: usize,
    pub corpus_hash: String,
}

impl TranslationTable {
    pub fn prob(&self, src: &str, tgt: &str) -> f64 {
        match (self.src_index.get(src), self.tgt_index.get(tgt)) {
            (Some(&s), Some(&t)) => self.prob_ids(s, t),
            _ => PROB_FLOOR,
        }
    }

    fn prob_ids(&self, s: u32, t: u32) -> f64 {
        let row = &self.rows[s as usize];
        match row.binary_search_by_key(&t, |e| e.0) {
            Ok(k) => row[k].1,
            Err(_) => PROB_FLOOR,
        }
    }

    /// `(target, probability)` entries of one source row.
    pub fn row(&self, src: &str) -> Vec<(&str, f64)> {
        self.src_index
            .get(src)
            .map(|&s| self.rows[s as usize].iter().map(|&(t, p)| (self.tgt_words[t as usize].as_str(), p)).collect())
            .unwrap_or_default()
    }

    pub fn best_target(&self, src: &str) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (t, p) in self.row(src) {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((t, p));
            }
        }
        best.map(|b| b.0)
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.src_words.iter().map(String::as_str)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    fn ids<'a>(&self, src: &'a [String], tgt: &'a [String]) -> (Vec<Option<u32>>, Vec<Option<u32>>) {
        (
            src.iter().map(|w| self.src_index.get(w).copied()).collect(),
            tgt.iter().map(|w| self.tgt_index.get(w).copied()).collect(),
        )
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# ibm1\titerations={}\tcorpus_hash={}", self.iterations, self.corpus_hash)?;
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, p) in row {
                writeln!(w, "{}\t{}\t{}", self.src_words[s], self.tgt_words[t as usize], p)?;
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut b = TableBuilder::default();
        let mut iterations = 0;
        let mut corpus_hash = String::new();
        let mut entries: Vec<(u32, u32, f64)> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split('\t') {
                    if let Some(v) = field.trim().strip_prefix("iterations=") {
                        iterations =
                            v.parse().map_err(|_| Error::Parse { line: i + 1, msg: "bad iterations".into() })?;
                    } else if let Some(v) = field.trim().strip_prefix("corpus_hash=") {
                        corpus_hash = v.to_string();
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::Parse { line: i + 1, msg: "expected src<TAB>tgt<TAB>prob".into() });
            }
            let p: f64 = cols[2]
                .parse()
                .map_err(|_| Error::Parse { line: i + 1, msg: format!("bad probability {:?}", cols[2]) })?;
            let s = b.src(cols[0]);
            let t = b.tgt(cols[1]);
            entries.push((s, t, p));
        }
        let mut rows = vec![Vec::new(); b.src_words.len()];
        for (s, t, p) in entries {
            rows[s as usize].push((t, p));
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        Ok(TranslationTable {
            src_words: b.src_words,
            src_index: b.src_index,
            tgt_words: b.tgt_words,
            tgt_index: b.tgt_index,
            rows,
            iterations,
            corpus_hash,
        })
    }
}

#[derive(Default)]
struct TableBuilder {
    src_words: Vec<String>,
    src_index: HashMap<String, u32>,
    tgt_words: Vec<String>,
    tgt_index: HashMap<String, u32>,
}

impl TableBuilder {
    fn with_null() -> Self {
        let mut b = TableBuilder::default();
        b.src(NULL_TOKEN);
        b
    }

    fn src(&mut self, w: &str) -> u32 {
        intern(&mut self.src_words, &mut self.src_index, w)
    }

    fn tgt(&mut self, w: &str) -> u32 {
        intern(&mut self.tgt_words, &mut self.tgt_index, w)
    }
}

fn intern(words: &mut Vec<String>, index: &mut HashMap<String, u32>, w: &str) -> u32 {
    if let Some(&id) = index.get(w) {
        return id;
    }
    let id = words.len() as u32;
    words.push(w.to_string());
    index.insert(w.to_string(), id);
    id
}

pub fn corpus_hash(corpus: &[(Vec<String>, Vec<String>)]) -> String {
    let mut h = Sha256::new();
    for (s, t) in corpus {
        for w in s {
            h.update(w.as_bytes());
            h.update([0x1f]);
        }
        h.update([0x1d]);
        for w in t {
            h.update(w.as_bytes());
            h.update([0x1f]);
        }
        h.update([0x1e]);
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug)]
pub struct Ibm1Model {
    pub table: TranslationTable,
    /// Corpus log-likelihood before each iteration and after the last one.
    pub log_likelihood: Vec<f64>,
}

/// Which side of a sentence pair plays the conditioning (source) role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `t(en | es)`: each English token is generated by a Spanish one.
    EsToEn,
    /// `t(es | en)`.
    EnToEs,
}

/// Lowercased token sequences for one training direction.
pub fn bitext(pairs: &[SentencePair], dir: Direction) -> Vec<(Vec<String>, Vec<String>)> {
    pairs
        .iter()
        .map(|p| {
            let es = p.es_sent.lower_surfaces();
            let en = p.en_sent.lower_surfaces();
            match dir {
                Direction::EsToEn => (es, en),
                Direction::EnToEs => (en, es),
            }
        })
        .collect()
}

pub fn train_ibm1(pairs: &[SentencePair], dir: Direction, iterations: usize) -> Result<Ibm1Model> {
    train_ibm1_tokens(&bitext(pairs, dir), iterations)
}

struct Prepared {
    src_len: usize,
    tgt_len: usize,
    /// `cells[j * src_len + i]` is the flat table index of (src i, tgt j);
    /// source position 0 is NULL.
    cells: Vec<u32>,
}

fn chunk_size(n: usize) -> usize {
    n.div_ceil(32).max(256)
}

/// EM from a uniform start. Training is deterministic: the E-step is split
/// into chunks fixed by corpus size and merged in order.
pub fn train_ibm1_tokens(corpus: &[(Vec<String>, Vec<String>)], iterations: usize) -> Result<Ibm1Model> {
    if corpus.is_empty() || corpus.iter().all(|(_, t)| t.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    if iterations == 0 {
        return Err(Error::Invalid("iterations must be >= 1".into()));
    }
    let mut b = TableBuilder::with_null();
    let mut id_pairs: Vec<(Vec<u32>, Vec<u32>)> = Vec::with_capacity(corpus.len());
    for (s, t) in corpus {
        let mut sids = vec![0u32];
        sids.extend(s.iter().map(|w| b.src(w)));
        let tids: Vec<u32> = t.iter().map(|w| b.tgt(w)).collect();
        id_pairs.push((sids, tids));
    }
    let mut cooc: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); b.src_words.len()];
    for (s, t) in &id_pairs {
        for &si in s {
            cooc[si as usize].extend(t.iter().copied());
        }
    }
    let mut offsets = Vec::with_capacity(cooc.len() + 1);
    let mut row_targets: Vec<Vec<u32>> = Vec::with_capacity(cooc.len());
    let mut total = 0usize;
    for set in &cooc {
        offsets.push(total);
        total += set.len();
        row_targets.push(set.iter().copied().collect());
    }
    offsets.push(total);

    let prepared: Vec<Prepared> = id_pairs
        .iter()
        .map(|(s, t)| {
            let mut cells = Vec::with_capacity(s.len() * t.len());
            for &tj in t {
                for &si in s {
                    let row = &row_targets[si as usize];
                    let k = row.binary_search(&tj).expect("co-occurrence recorded");
                    cells.push((offsets[si as usize] + k) as u32);
                }
            }
            Prepared { src_len: s.len(), tgt_len: t.len(), cells }
        })
        .collect();

    let mut probs = vec![1.0 / b.tgt_words.len() as f64; total];
    let mut log_likelihood = Vec::with_capacity(iterations + 1);
    let size = chunk_size(prepared.len());

    for _ in 0..iterations {
        let partials: Vec<(Vec<f64>, f64)> = prepared
            .par_chunks(size)
            .map(|chunk| {
                let mut counts = vec![0.0; total];
                let mut ll = 0.0;
                for p in chunk {
                    for j in 0..p.tgt_len {
                        let cells = &p.cells[j * p.src_len..(j + 1) * p.src_len];
                        let denom: f64 = cells.iter().map(|&c| probs[c as usize]).sum();
                        ll += (denom / p.src_len as f64).ln();
                        for &c in cells {
                            counts[c as usize] += probs[c as usize] / denom;
                        }
                    }
                }
                (counts, ll)
            })
            .collect();
        let mut counts = vec![0.0; total];
        let mut ll = 0.0;
        for (c, l) in partials {
            for (acc, x) in counts.iter_mut().zip(c) {
                *acc += x;
            }
            ll += l;
        }
        log_likelihood.push(ll);

        for s in 0..row_targets.len() {
            let range = offsets[s]..offsets[s + 1];
            let z: f64 = counts[range.clone()].iter().sum();
            if z <= 0.0 {
                continue;
            }
            let mut clamped = false;
            for k in range.clone() {
                let p = counts[k] / z;
                probs[k] = if p < PROB_FLOOR {
                    clamped = true;
                    PROB_FLOOR
                } else {
                    p
                };
            }
            if clamped {
                let z2: f64 = probs[range.clone()].iter().sum();
                for k in range {
                    probs[k] /= z2;
                }
            }
        }
    }
    log_likelihood.push(
        prepared
            .par_chunks(size)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|p| {
                        (0..p.tgt_len)
                            .map(|j| {
                                let cells = &p.cells[j * p.src_len..(j + 1) * p.src_len];
                                let denom: f64 = cells.iter().map(|&c| probs[c as usize]).sum();
                                (denom / p.src_len as f64).ln()
                            })
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .sum(),
    );

    let rows = row_targets
        .iter()
        .enumerate()
        .map(|(s, targets)| targets.iter().enumerate().map(|(k, &t)| (t, probs[offsets[s] + k])).collect())
        .collect();
    Ok(Ibm1Model {
        table: TranslationTable {
            src_words: b.src_words,
            src_index: b.src_index,
            tgt_words: b.tgt_words,
            tgt_index: b.tgt_index,
            rows,
            iterations,
            corpus_hash: corpus_hash(corpus),
        },
        log_likelihood,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMethod {
    IntersectArgmax,
    Forced,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenAlignment {
    /// `(es index, en index)` links.
    pub links: BTreeSet<(usize, usize)>,
    pub method: AlignMethod,
}

impl TokenAlignment {
    /// Links supplied from outside the aligner, taken as-is.
    pub fn forced<I: IntoIterator<Item = (usize, usize)>>(links: I) -> Self {
        TokenAlignment { links: links.into_iter().collect(), method: AlignMethod::Forced }
    }

    pub fn en_for_es(&self, es: usize) -> Option<usize> {
        self.links.iter().find(|l| l.0 == es).map(|l| l.1)
    }

    pub fn es_for_en(&self, en: usize) -> Option<usize> {
        self.links.iter().find(|l| l.1 == en).map(|l| l.0)
    }
}

/// Viterbi alignment under Model 1: each target position picks the source
/// position maximizing `t(tgt | src)`. NULL (`None`) wins ties. Ties between
/// source positions go by occurrence rank: the k-th occurrence of a target
/// word takes the k-th tied candidate, or the last one if there are fewer.
pub fn viterbi(src: &[String], tgt: &[String], table: &TranslationTable) -> Vec<Option<usize>> {
    let (sids, tids) = table.ids(src, tgt);
    let mut seen: HashMap<&str, usize> = HashMap::new();
    tgt.iter()
        .zip(&tids)
        .map(|(word, &t)| {
            let rank = seen.entry(word.as_str()).or_insert(0);
            let r = *rank;
            *rank += 1;
            let t = t?;
            let null = table.prob_ids(0, t);
            let probs: Vec<f64> = sids.iter().map(|s| s.map_or(PROB_FLOOR, |s| table.prob_ids(s, t))).collect();
            let best = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if probs.is_empty() || null >= best {
                return None;
            }
            let tied: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] == best).collect();
            Some(tied[r.min(tied.len() - 1)])
        })
        .collect()
}

/// Intersects the es->en and en->es Viterbi alignments. `fwd` holds
/// `t(en | es)`, `rev` holds `t(es | en)`; tokens are compared lowercased.
pub fn align_token_seqs(
    es: &[String],
    en: &[String],
    fwd: &TranslationTable,
    rev: &TranslationTable,
) -> TokenAlignment {
    let es: Vec<String> = es.iter().map(|w| w.to_lowercase()).collect();
    let en: Vec<String> = en.iter().map(|w| w.to_lowercase()).collect();
    let en_to_es = viterbi(&es, &en, fwd);
    let es_to_en = viterbi(&en, &es, rev);
    let links = en_to_es
        .iter()
        .enumerate()
        .filter_map(|(j, i)| i.map(|i| (i, j)))
        .filter(|&(i, j)| es_to_en[i] == Some(j))
        .collect();
    TokenAlignment { links, method: AlignMethod::IntersectArgmax }
}

pub fn align_tokens(pair: &SentencePair, fwd: &TranslationTable, rev: &TranslationTable) -> TokenAlignment {
    align_token_seqs(&pair.es_sent.surfaces(), &pair.en_sent.surfaces(), fwd, rev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(pairs: &[(&str, &str)]) -> Vec<(Vec<String>, Vec<String>)> {
        pairs
            .iter()
            .map(|(s, t)| {
                (s.split_whitespace().map(str::to_string).collect(), t.split_whitespace().map(str::to_string).collect())
            })
            .collect()
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn la_casa_la_puerta() {
        let c = corpus(&[("la casa", "the house"), ("la puerta", "the door")]);
        let m = train_ibm1_tokens(&c, 10).unwrap();
        assert_eq!(m.table.best_target("la"), Some("the"));
        assert_eq!(m.table.best_target("casa"), Some("house"));
        assert_eq!(m.table.best_target("puerta"), Some("door"));
    }

    #[test]
    fn single_pair_dominated_after_one_iteration() {
        let m = train_ibm1_tokens(&corpus(&[("hola", "hello")]), 1).unwrap();
        assert!((m.table.prob("hola", "hello") - 1.0).abs() < 1e-12);
        assert!((m.table.prob(NULL_TOKEN, "hello") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(train_ibm1_tokens(&[], 3), Err(Error::EmptyCorpus)));
        assert!(matches!(train_ibm1_tokens(&corpus(&[("a", "")]), 3), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn unknown_pairs_get_floor() {
        let m = train_ibm1_tokens(&corpus(&[("la casa", "the house")]), 2).unwrap();
        assert_eq!(m.table.prob("perro", "dog"), PROB_FLOOR);
        assert_eq!(m.table.prob("la", "dog"), PROB_FLOOR);
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let c = corpus(&[("la casa", "the house"), ("la puerta", "the door"), ("una casa", "a house")]);
        let m = train_ibm1_tokens(&c, 5).unwrap();
        let mut buf = Vec::new();
        m.table.write_tsv(&mut buf).unwrap();
        let back = TranslationTable::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(back, m.table);
        assert_eq!(back.iterations, 5);
    }

    #[test]
    fn training_is_bit_identical() {
        let c = corpus(&[("la casa verde", "the green house"), ("la puerta", "the door"), ("una casa", "a house")]);
        let a = train_ibm1_tokens(&c, 7).unwrap();
        let b = train_ibm1_tokens(&c, 7).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.log_likelihood, b.log_likelihood);
    }

    #[test]
    fn diagonal_links_for_identity_tables() {
        let s = words("a b c d");
        let c = corpus(&[("a b", "a b"), ("b c", "b c"), ("c d", "c d"), ("d a", "d a"), ("a c", "a c")]);
        let fwd = train_ibm1_tokens(&c, 20).unwrap().table;
        let rev = train_ibm1_tokens(&c, 20).unwrap().table;
        let al = align_token_seqs(&s, &s, &fwd, &rev);
        assert_eq!(al.links, (0..4).map(|i| (i, i)).collect());
    }

    fn score(a: &[Option<usize>], src: &[String], tgt: &[String], table: &TranslationTable) -> f64 {
        a.iter()
            .zip(tgt)
            .map(|(ai, t)| match ai {
                None => table.prob(NULL_TOKEN, t),
                Some(i) => table.prob(&src[*i], t),
            })
            .map(f64::ln)
            .sum()
    }

    /// Best Model 1 score over every alignment function `tgt -> {NULL} ∪ src`.
    fn brute_force_best(src: &[String], tgt: &[String], table: &TranslationTable) -> f64 {
        let choices: Vec<Option<usize>> = std::iter::once(None).chain((0..src.len()).map(Some)).collect();
        let k = choices.len();
        let mut best = f64::NEG_INFINITY;
        for code in 0..k.pow(tgt.len() as u32) {
            let mut c = code;
            let mut a = Vec::with_capacity(tgt.len());
            for _ in 0..tgt.len() {
                a.push(choices[c % k]);
                c /= k;
            }
            best = best.max(score(&a, src, tgt, table));
        }
        best
    }

    #[test]
    fn four_token_pair_matches_exhaustive_search() {
        let c = corpus(&[
            ("ella publicó su libro", "she published her book"),
            ("él publicó su poema", "he published his poem"),
            ("su casa", "her house"),
            ("un libro", "a book"),
            ("publicó libros", "published books"),
            ("ella escribió", "she wrote"),
        ]);
        let rc: Vec<_> = c.iter().map(|(s, t)| (t.clone(), s.clone())).collect();
        let fwd = train_ibm1_tokens(&c, 15).unwrap().table;
        let rev = train_ibm1_tokens(&rc, 15).unwrap().table;
        let es = words("ella publicó su libro");
        let en = words("she published her book");
        let f = viterbi(&es, &en, &fwd);
        let r = viterbi(&en, &es, &rev);
        assert!((score(&f, &es, &en, &fwd) - brute_force_best(&es, &en, &fwd)).abs() < 1e-9);
        assert!((score(&r, &en, &es, &rev) - brute_force_best(&en, &es, &rev)).abs() < 1e-9);
        let expected: BTreeSet<(usize, usize)> =
            f.iter().enumerate().filter_map(|(j, i)| i.map(|i| (i, j))).filter(|&(i, j)| r[i] == Some(j)).collect();
        let got = align_token_seqs(&es, &en, &fwd, &rev);
        assert_eq!(got.links, expected);
        assert!(got.links.contains(&(2, 2)), "su-her link: {:?}", got.links);
    }

    #[test]
    fn repeated_words_link_in_order() {
        let c = corpus(&[
            ("su casa y su perro", "her house and her dog"),
            ("su casa", "her house"),
            ("su perro", "her dog"),
            ("casa y perro", "house and dog"),
        ]);
        let rc: Vec<_> = c.iter().map(|(s, t)| (t.clone(), s.clone())).collect();
        let fwd = train_ibm1_tokens(&c, 10).unwrap().table;
        let rev = train_ibm1_tokens(&rc, 10).unwrap().table;
        let got = align_token_seqs(&words("su casa y su perro"), &words("her house and her dog"), &fwd, &rev);
        assert!(got.links.contains(&(0, 0)) && got.links.contains(&(3, 3)), "{:?}", got.links);
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<(Vec<String>, Vec<String>)>> {
        let sent = proptest::collection::vec("[a-e]", 1..5);
        proptest::collection::vec((sent.clone(), sent), 1..6)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn em_is_monotone_and_normalized(c in arb_corpus(), iters in 1usize..8) {
            let m = train_ibm1_tokens(&c, iters).unwrap();
            for w in m.log_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{:?}", m.log_likelihood);
            }
            for s in m.table.row_sums() {
                prop_assert!((s - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn intersection_is_one_to_one(c in arb_corpus()) {
            let rc: Vec<_> = c.iter().map(|(s, t)| (t.clone(), s.clone())).collect();
            let fwd = train_ibm1_tokens(&c, 5).unwrap().table;
            let rev = train_ibm1_tokens(&rc, 5).unwrap().table;
            for (s, t) in &c {
                let al = align_token_seqs(s, t, &fwd, &rev);
                let mut es: Vec<_> = al.links.iter().map(|l| l.0).collect();
                let mut en: Vec<_> = al.links.iter().map(|l| l.1).collect();
                es.dedup();
                en.sort(); en.dedup();
                prop_assert_eq!(es.len(), al.links.len());
                prop_assert_eq!(en.len(), al.links.len());
            }
        }
    }
}
