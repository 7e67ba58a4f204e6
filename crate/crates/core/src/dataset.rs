//! Gender balancing, train/dev/test splitting and example serialization.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::GenderLabel;
use crate::error::{Error, Result};
use crate::extract::PronounExample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn name(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub examples: Vec<PronounExample>,
}

/// Downsamples the majority gender to the minority count. Survivors keep
/// their input order.
pub fn balance(examples: &[PronounExample], seed: u64) -> Result<Vec<PronounExample>> {
    let count = |g| examples.iter().filter(|e| e.label == g).count();
    let (masc, fem) = (count(GenderLabel::Masc), count(GenderLabel::Fem));
    if masc == 0 || fem == 0 {
        return Err(Error::CannotBalance(format!("{masc} MASC vs {fem} FEM examples")));
    }
    let (major, keep) = if masc >= fem { (GenderLabel::Masc, fem) } else { (GenderLabel::Fem, masc) };
    let major_idx: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].label == major).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> =
        rand::seq::index::sample(&mut rng, major_idx.len(), keep).into_iter().map(|k| major_idx[k]).collect();
    chosen.sort_unstable();
    let mut keep_mask = vec![false; examples.len()];
    for i in chosen {
        keep_mask[i] = true;
    }
    Ok(examples.iter().enumerate().filter(|&(i, e)| e.label != major || keep_mask[i]).map(|(_, e)| e.clone()).collect())
}

/// What stays together when splitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKey {
    Example,
    /// Every example of one Spanish document lands in the same split.
    #[default]
    Article,
}

/// Train/dev/test fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fractions(pub [f64; 3]);

impl Fractions {
    pub const DEFAULT: Fractions = Fractions([0.90, 0.05, 0.05]);

    fn ratio(parts: [u64; 3]) -> Fractions {
        let total = (parts[0] + parts[1] + parts[2]) as f64;
        Fractions(parts.map(|p| p as f64 / total))
    }

    /// Named presets: `default`, `paper-prodrop`, `paper-possessive`.
    pub fn preset(name: &str) -> Option<Fractions> {
        match name {
            "default" => Some(Self::DEFAULT),
            "paper-prodrop" => Some(Self::ratio([72_120, 2_968, 4_152])),
            "paper-possessive" => Some(Self::ratio([167_222, 8_862, 11_140])),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.0.iter().find(|f| !f.is_finite() || **f < 0.0) {
            return Err(Error::Invalid(format!("split fraction {f} is negative or not finite")));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Largest-remainder rounding of `fractions * n`; leftover units go to the
/// largest fractional parts, earlier splits first on ties.
pub fn split_sizes(n: usize, fractions: &Fractions) -> [usize; 3] {
    let quotas = fractions.0.map(|f| f * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        sizes[k] += 1;
    }
    sizes
}

/// Seeded shuffle then contiguous cut. Input is first ordered by id so the
/// result does not depend on input order. With article keying, whole
/// documents are cut and sizes track the targets as closely as the document
/// boundaries allow.
pub fn split(
    examples: &[PronounExample],
    fractions: &Fractions,
    seed: u64,
    key: SplitKey,
) -> Result<[DatasetSplit; 3]> {
    fractions.validate()?;
    let mut sorted: Vec<&PronounExample> = examples.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = split_sizes(sorted.len(), fractions);
    let mut buckets: [Vec<PronounExample>; 3] = Default::default();
    match key {
        SplitKey::Example => {
            sorted.shuffle(&mut rng);
            let mut it = sorted.into_iter();
            for (b, &n) in buckets.iter_mut().zip(&targets) {
                b.extend(it.by_ref().take(n).cloned());
            }
        }
        SplitKey::Article => {
            let mut groups: BTreeMap<&str, Vec<&PronounExample>> = BTreeMap::new();
            for e in sorted {
                groups.entry(e.doc_id.as_str()).or_default().push(e);
            }
            let mut groups: Vec<Vec<&PronounExample>> = groups.into_values().collect();
            groups.shuffle(&mut rng);
            let bounds = [targets[0], targets[0] + targets[1]];
            let mut seen = 0usize;
            for g in groups {
                // A document goes to the split containing its midpoint.
                let mid = seen + g.len() / 2;
                let k = bounds.iter().filter(|&&b| mid >= b).count();
                seen += g.len();
                buckets[k].extend(g.into_iter().cloned());
            }
        }
    }
    let [train, dev, test] = buckets;
    Ok([
        DatasetSplit { name: SplitName::Train, examples: train },
        DatasetSplit { name: SplitName::Dev, examples: dev },
        DatasetSplit { name: SplitName::Test, examples: test },
    ])
}

/// One JSON object per line, after an optional `# ` header line.
pub fn write_examples<W: Write>(examples: &[PronounExample], header: Option<&str>, mut w: W) -> Result<()> {
    if let Some(h) = header {
        writeln!(w, "# {h}")?;
    }
    for e in examples {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads JSONL examples, skipping blank and `#` lines. Errors carry the
/// 1-based line number as the record number.
pub fn read_examples<R: BufRead>(r: R) -> Result<Vec<PronounExample>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|err| Error::Record { record: i + 1, msg: err.to_string() })?;
        out.push(e);
    }
    Ok(out)
}

/// Drops exact duplicates by id, keeping the first.
pub fn dedup(examples: Vec<PronounExample>) -> Vec<PronounExample> {
    let mut seen = std::collections::HashSet::new();
    examples.into_iter().filter(|e| seen.insert(e.id.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::PronounKind;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn ex(i: usize, doc: usize, label: GenderLabel) -> PronounExample {
        PronounExample {
            id: format!("d{doc}:{i}:0:prodrop"),
            kind: PronounKind::Prodrop,
            label,
            context_sentences: vec![format!("ctx {i}")],
            target_sentence: format!("Adquirió fama {i}."),
            anchor_index: 0,
            doc_id: format!("d{doc}"),
            sent_id: i as u32,
            witness: if label == GenderLabel::Fem { "she" } else { "he" }.into(),
            en_doc_id: None,
            en_sent_id: None,
        }
    }

    fn labeled(masc: usize, fem: usize) -> Vec<PronounExample> {
        (0..masc)
            .map(|i| ex(i, i % 7, GenderLabel::Masc))
            .chain((masc..masc + fem).map(|i| ex(i, i % 7, GenderLabel::Fem)))
            .collect()
    }

    #[test]
    fn balance_downsamples_majority() {
        let out = balance(&labeled(100, 30), 7).unwrap();
        assert_eq!(out.iter().filter(|e| e.label == GenderLabel::Masc).count(), 30);
        assert_eq!(out.iter().filter(|e| e.label == GenderLabel::Fem).count(), 30);
        assert_eq!(balance(&labeled(100, 30), 7).unwrap(), out);
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let input = labeled(5, 5);
        assert_eq!(balance(&input, 1).unwrap(), input);
    }

    #[test]
    fn single_gender_cannot_be_balanced() {
        assert!(matches!(balance(&labeled(4, 0), 1), Err(Error::CannotBalance(_))));
    }

    #[test]
    fn paper_preset_sizes() {
        let f = Fractions::preset("paper-prodrop").unwrap();
        assert_eq!(split_sizes(79_240, &f), [72_120, 2_968, 4_152]);
        let f = Fractions::preset("paper-possessive").unwrap();
        assert_eq!(split_sizes(187_224, &f), [167_222, 8_862, 11_140]);
    }

    #[test]
    fn empty_input_gives_empty_splits() {
        let s = split(&[], &Fractions::DEFAULT, 0, SplitKey::Article).unwrap();
        assert!(s.iter().all(|d| d.examples.is_empty()));
    }

    #[test]
    fn negative_fraction_is_rejected() {
        assert!(split(&[], &Fractions([1.2, -0.2, 0.0]), 0, SplitKey::Example).is_err());
        assert!(split(&[], &Fractions([0.5, 0.2, 0.2]), 0, SplitKey::Example).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let input = labeled(2, 2);
        let mut buf = Vec::new();
        write_examples(&input, Some("manifest=abc"), &mut buf).unwrap();
        assert_eq!(read_examples(buf.as_slice()).unwrap(), input);
    }

    #[test]
    fn missing_label_names_the_record() {
        let mut buf = Vec::new();
        write_examples(&labeled(1, 0), None, &mut buf).unwrap();
        let good = String::from_utf8(buf).unwrap();
        let bad = good.replace("\"label\":\"MASC\",", "");
        let err = read_examples(format!("{good}{bad}").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Record { record: 2, .. }), "{err}");
    }

    #[test]
    fn fixture_records_parse() {
        let src = include_str!("../tests/data/examples3.jsonl");
        let got = read_examples(src.as_bytes()).unwrap();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].id, "es:britney:3:0:prodrop");
        assert_eq!(got[0].label, GenderLabel::Fem);
        assert_eq!(got[0].context_sentences.len(), 1);
        assert_eq!(got[1].kind, PronounKind::Possessive);
        assert_eq!(got[1].anchor_index, 4);
        assert_eq!(got[1].witness, "her");
        assert_eq!(got[2].label, GenderLabel::Masc);
        assert_eq!(got[2].en_sent_id, Some(4));
    }

    proptest! {
        #[test]
        fn splits_partition_input(masc in 0usize..40, fem in 0usize..40, seed in any::<u64>(), by_article in any::<bool>()) {
            let input = labeled(masc, fem);
            let key = if by_article { SplitKey::Article } else { SplitKey::Example };
            let s = split(&input, &Fractions::DEFAULT, seed, key).unwrap();
            let mut ids: Vec<&str> = s.iter().flat_map(|d| d.examples.iter().map(|e| e.id.as_str())).collect();
            prop_assert_eq!(ids.len(), input.len());
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), input.len());
            if by_article {
                let docs: Vec<HashSet<&str>> =
                    s.iter().map(|d| d.examples.iter().map(|e| e.doc_id.as_str()).collect()).collect();
                prop_assert!(docs[0].is_disjoint(&docs[1]) && docs[0].is_disjoint(&docs[2]) && docs[1].is_disjoint(&docs[2]));
            } else {
                let sizes = split_sizes(input.len(), &Fractions::DEFAULT);
                prop_assert_eq!([s[0].examples.len(), s[1].examples.len(), s[2].examples.len()], sizes);
            }
        }

        #[test]
        fn balance_equalizes_and_subsets(masc in 1usize..50, fem in 1usize..50, seed in any::<u64>()) {
            let input = labeled(masc, fem);
            let out = balance(&input, seed).unwrap();
            let m = out.iter().filter(|e| e.label == GenderLabel::Masc).count();
            prop_assert_eq!(m, masc.min(fem));
            prop_assert_eq!(out.len() - m, masc.min(fem));
            let ids: HashSet<&str> = input.iter().map(|e| e.id.as_str()).collect();
            prop_assert!(out.iter().all(|e| ids.contains(e.id.as_str())));
        }
    }
}
