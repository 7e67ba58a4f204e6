//! Stage runners over an output directory. Each stage reads the artifacts of
//! the ones before it, writes its own with a manifest stamp, and can be
//! skipped when its manifest is unchanged.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classify::{classify_batch, Classifier, HeuristicClassifier, Prediction, RemoteClassifier};
use crate::config::{ClassifyProvider, Config, TranslateProvider};
use crate::corpus::{self, Document, GenderLabel, Lang};
use crate::dataset::{self, DatasetSplit, SplitName};
use crate::error::{Error, Result};
use crate::explain::explain;
use crate::extract::{
    self, detect_all, project_gender, Analyzer, DropRecord, GenderLexicon, Projection, PronounExample, PronounKind,
};
use crate::inject::inject_tag;
use crate::manifest::Manifest;
use crate::metrics::{self, EvalReport};
use crate::page_align::{self, TitleOptions};
use crate::sent_align::{self, ContentWords, EditUnit, PosLexicon, SentAlignConfig, SentencePair};
use crate::token_align::{self, align_tokens, train_ibm1, Direction, TranslationTable};
use crate::translate::{build_translator, Bridge, ProviderSpec};

pub const TRANSLATE_URL_ENV: &str = "PIVOT_TRANSLATE_URL";
pub const CLASSIFY_URL_ENV: &str = "PIVOT_CLASSIFY_URL";

pub const PAGES: &str = "pages.tsv";
pub const PAIRS: &str = "pairs.jsonl";
pub const SENTENCE_SKIPS: &str = "sentence_skips.jsonl";
pub const TTABLE_FWD: &str = "ttable.es-en.tsv";
pub const TTABLE_REV: &str = "ttable.en-es.tsv";
pub const EXAMPLES: &str = "examples.jsonl";
pub const DROPPED: &str = "dropped.jsonl";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const EXPLANATIONS: &str = "explanations.jsonl";
pub const TAGGED: &str = "test.tagged.txt";

pub const KINDS: [PronounKind; 2] = [PronounKind::Prodrop, PronounKind::Possessive];
const SPLITS: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

pub fn split_file(kind: PronounKind, split: SplitName) -> String {
    format!("{}.{}.jsonl", kind.name(), split.name())
}

fn test_files() -> Vec<String> {
    KINDS.iter().map(|&k| split_file(k, SplitName::Test)).collect()
}

// ---------------------------------------------------------------------------
// Building blocks shared by the stages and by in-memory callers.

/// Tags every unannotated sentence; annotated ones are left alone.
pub fn analyze_documents(docs: &mut [Document], analyzer: &Analyzer) {
    for d in docs {
        for s in &mut d.sentences {
            if !s.is_annotated() {
                analyzer.annotate(s);
            }
        }
    }
}

pub fn analyzer(cfg: &Config) -> Result<Analyzer> {
    match (&cfg.extract.verbs, &cfg.extract.nouns) {
        (None, None) => Ok(Analyzer::bundled()),
        (Some(v), Some(n)) => Analyzer::load(v, n),
        _ => Err(Error::Config("extract.verbs and extract.nouns must be given together".into())),
    }
}

pub fn gender_lexicon(cfg: &Config) -> Result<GenderLexicon> {
    match &cfg.classify.gender_lexicon {
        Some(p) => GenderLexicon::load(p),
        None => Ok(GenderLexicon::bundled()),
    }
}

fn env_or(var: &str, configured: &Option<String>) -> Option<String> {
    std::env::var(var).ok().filter(|v| !v.is_empty()).or_else(|| configured.clone())
}

pub fn provider_spec(cfg: &Config) -> Result<ProviderSpec> {
    let t = &cfg.translate;
    Ok(match t.provider {
        TranslateProvider::Identity => ProviderSpec::Identity,
        TranslateProvider::Dictionary => ProviderSpec::Dictionary(
            t.dictionary
                .clone()
                .ok_or_else(|| Error::Config("translate.dictionary is required for the dictionary provider".into()))?,
        ),
        TranslateProvider::External => ProviderSpec::External {
            base_url: env_or(TRANSLATE_URL_ENV, &t.url)
                .ok_or_else(|| Error::Config(format!("translate.url or {TRANSLATE_URL_ENV} is required")))?,
            max_in_flight: t.max_in_flight,
            policy: t.policy(),
        },
    })
}

pub fn bridge(cfg: &Config) -> Result<Bridge> {
    let (inner, warnings) = build_translator(&provider_spec(cfg)?)?;
    for w in warnings {
        log::warn!("dictionary: {w}");
    }
    match &cfg.translate.cache_file {
        Some(p) => Bridge::with_cache_file(inner, p),
        None => Ok(Bridge::new(inner)),
    }
}

pub fn sent_align_config(cfg: &Config) -> Result<SentAlignConfig> {
    let s = &cfg.sent_align;
    let content = match &s.pos_lexicon {
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ContentWords::Lexicon(PosLexicon::from_reader(BufReader::new(f))?)
        }
        None => ContentWords::Fallback { stopwords: ContentWords::default_stopwords() },
    };
    let mut c = SentAlignConfig::new(content);
    c.unit = if s.unit == "char" { EditUnit::Char } else { EditUnit::Token };
    c.exact_limit = s.exact_limit;
    c.max_cost_ratio = s.max_cost_ratio;
    Ok(c)
}

pub fn classifier(cfg: &Config) -> Result<Box<dyn Classifier>> {
    let c = &cfg.classify;
    Ok(match c.provider {
        ClassifyProvider::Heuristic => Box::new(HeuristicClassifier::new(gender_lexicon(cfg)?)),
        ClassifyProvider::Remote => {
            let url = env_or(CLASSIFY_URL_ENV, &c.url)
                .ok_or_else(|| Error::Config(format!("classify.url or {CLASSIFY_URL_ENV} is required")))?;
            Box::new(
                RemoteClassifier::new(&url, c.mark_style, c.budget, c.policy(), c.max_in_flight)
                    .with_decode(c.decode()),
            )
        }
    })
}

/// Detects slots in every aligned Spanish sentence and projects English
/// pronoun genders onto them.
pub fn extract_pairs(
    es_docs: &[Document],
    pairs: &[SentencePair],
    fwd: &TranslationTable,
    rev: &TranslationTable,
    cfg: &Config,
) -> Projection {
    let by_id: BTreeMap<&str, &Document> = es_docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut out = Projection::default();
    for pair in pairs {
        let detection = detect_all(&pair.es_sent);
        if let Some(reason) = detection.skipped {
            out.dropped.push(DropRecord {
                doc_id: pair.es_doc_id.clone(),
                sent_id: pair.es_sent.sent_id,
                kind: PronounKind::Prodrop,
                anchor: 0,
                reason,
            });
        }
        if detection.slots.is_empty() {
            continue;
        }
        let preceding: Vec<String> = by_id
            .get(pair.es_doc_id.as_str())
            .and_then(|d| d.position(pair.es_sent.sent_id).map(|i| &d.sentences[..i]))
            .unwrap_or(&[])
            .iter()
            .map(|s| s.text.clone())
            .collect();
        let keep = preceding.len().saturating_sub(cfg.extract.max_context_sentences);
        let alignment = align_tokens(pair, fwd, rev);
        let p = project_gender(pair, &alignment, &detection.slots, &preceding[keep..], cfg.extract.budget);
        out.examples.extend(p.examples);
        out.dropped.extend(p.dropped);
    }
    out.examples = dataset::dedup(out.examples);
    out
}

/// Everything the extraction stages produce, held in memory.
pub struct Extraction {
    pub pairs: Vec<SentencePair>,
    pub fwd: TranslationTable,
    pub rev: TranslationTable,
    pub projection: Projection,
}

/// Page alignment through projection without touching the filesystem.
/// Spanish documents are annotated in place when the config asks for it.
pub fn extract_corpus(es: &mut [Document], en: &[Document], bridge: &Bridge, cfg: &Config) -> Result<Extraction> {
    if cfg.extract.analyze {
        analyze_documents(es, &analyzer(cfg)?);
    }
    let pages = page_align::align_pages(es, en, TitleOptions { loose: cfg.page_align.loose });
    let sa = sent_align_config(cfg)?;
    let pairs: Vec<SentencePair> =
        sent_align::align_all(&pages.pairs, bridge, &sa).into_iter().flat_map(|a| a.pairs).collect();
    let fwd = train_ibm1(&pairs, Direction::EsToEn, cfg.token_align.iterations)?.table;
    let rev = train_ibm1(&pairs, Direction::EnToEs, cfg.token_align.iterations)?.table;
    let projection = extract_pairs(es, &pairs, &fwd, &rev, cfg);
    Ok(Extraction { pairs, fwd, rev, projection })
}

/// Balances (when configured) and splits one pronoun kind.
pub fn build_splits(examples: &[PronounExample], kind: PronounKind, cfg: &Config) -> Result<[DatasetSplit; 3]> {
    let of_kind: Vec<PronounExample> = examples.iter().filter(|e| e.kind == kind).cloned().collect();
    let pool = if cfg.dataset.balance && !of_kind.is_empty() { dataset::balance(&of_kind, cfg.seed)? } else { of_kind };
    dataset::split(&pool, &cfg.dataset.fractions()?, cfg.seed, cfg.dataset.split_key)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub kind: PronounKind,
    pub gold: GenderLabel,
    pub prediction: Prediction,
}

/// Per-kind scores plus corpus-level prodrop rates.
pub fn evaluate_predictions(
    records: &[PredictionRecord],
    pairs: Option<&[SentencePair]>,
) -> Result<BTreeMap<String, EvalReport>> {
    let mut out = BTreeMap::new();
    for kind in KINDS {
        let rows: Vec<(GenderLabel, Option<GenderLabel>)> =
            records.iter().filter(|r| r.kind == kind).map(|r| (r.gold, r.prediction.label())).collect();
        if rows.is_empty() {
            continue;
        }
        let report = EvalReport {
            prf: Some(metrics::pronoun_prf(&rows)?),
            abstentions: Some(rows.iter().filter(|r| r.1.is_none()).count() as u64),
            ..Default::default()
        };
        out.insert(kind.name().to_string(), report);
    }
    if let Some(p) = pairs {
        if !p.is_empty() {
            let report = EvalReport { prodrop_rates: Some(metrics::prodrop_rate(p)), ..Default::default() };
            out.insert("corpus".to_string(), report);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Stage plumbing

pub struct Run<'a> {
    pub cfg: &'a Config,
    pub out_dir: PathBuf,
    /// Skip stages whose manifest and stamped outputs are already present.
    pub resume: bool,
}

/// The configuration as hashed into manifests: file locations are dropped,
/// since file contents enter as inputs.
pub fn config_fingerprint(cfg: &Config) -> String {
    let mut c = cfg.clone();
    c.paths = Default::default();
    c.jobs = 0;
    c.translate.dictionary = None;
    c.translate.cache_file = None;
    c.sent_align.pos_lexicon = None;
    c.extract.verbs = None;
    c.extract.nouns = None;
    c.classify.gender_lexicon = None;
    // Endpoints change nothing about the data when they answer the same way.
    c.translate.url = None;
    c.classify.url = None;
    c.to_toml()
}

fn required<'p>(p: &'p Option<PathBuf>, key: &str) -> Result<&'p Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("paths.{key} is not set")))
}

fn stamped(header: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# {header}")?;
    body(&mut buf)?;
    Ok(buf)
}

impl Run<'_> {
    pub fn new(cfg: &Config, out_dir: PathBuf) -> Run<'_> {
        Run { cfg, out_dir, resume: false }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn es_path(&self) -> Result<&Path> {
        required(&self.cfg.paths.es_corpus, "es_corpus")
    }

    fn en_path(&self) -> Result<&Path> {
        required(&self.cfg.paths.en_corpus, "en_corpus")
    }

    fn manifest(&self, stage: &str, inputs: &[(&str, PathBuf)], outputs: &[&str]) -> Result<Manifest> {
        let mut m = Manifest::new(stage, self.cfg.seed, &config_fingerprint(self.cfg));
        for (name, p) in inputs {
            m.input(name, p)?;
        }
        for o in outputs {
            m.output(o);
        }
        Ok(m)
    }

    fn corpus_inputs(&self) -> Result<Vec<(&'static str, PathBuf)>> {
        Ok(vec![("es_corpus", self.es_path()?.to_path_buf()), ("en_corpus", self.en_path()?.to_path_buf())])
    }

    fn lexicon_inputs(&self, v: &mut Vec<(&'static str, PathBuf)>) {
        let e = &self.cfg.extract;
        if let (Some(a), Some(b)) = (&e.verbs, &e.nouns) {
            v.push(("verbs", a.clone()));
            v.push(("nouns", b.clone()));
        }
    }

    /// Runs `body` unless the stage is current. Returns whether it ran.
    fn stage(&self, m: &Manifest, body: impl FnOnce(&str) -> Result<Vec<(String, Vec<u8>)>>) -> Result<bool> {
        std::fs::create_dir_all(&self.out_dir)?;
        if self.resume && m.is_current(&self.out_dir)? {
            log::info!("stage {}: up to date, skipped", m.stage);
            return Ok(false);
        }
        let files = body(&m.header())?;
        for (name, bytes) in files {
            std::fs::write(self.path(&name), bytes)?;
        }
        m.write(&self.out_dir)?;
        log::info!("stage {}: done ({})", m.stage, m.hash());
        Ok(true)
    }

    fn load_es(&self) -> Result<Vec<Document>> {
        corpus::load_corpus(self.es_path()?, Lang::Es)
    }

    fn load_en(&self) -> Result<Vec<Document>> {
        corpus::load_corpus(self.en_path()?, Lang::En)
    }

    fn read_text(&self, name: &str) -> Result<String> {
        std::fs::read_to_string(self.path(name))
            .map_err(|e| Error::Invalid(format!("{}: {e} (run the earlier stage first)", self.path(name).display())))
    }

    fn read_examples(&self, name: &str) -> Result<Vec<PronounExample>> {
        dataset::read_examples(self.read_text(name)?.as_bytes())
    }

    fn read_pairs(&self, es: &[Document], en: &[Document]) -> Result<Vec<SentencePair>> {
        let records = sent_align::read_pair_records(self.read_text(PAIRS)?.as_bytes())?;
        sent_align::resolve_pair_records(&records, es, en)
    }

    fn read_table(&self, name: &str) -> Result<TranslationTable> {
        TranslationTable::read_tsv(self.read_text(name)?.as_bytes())
    }

    fn read_predictions(&self) -> Result<Vec<PredictionRecord>> {
        let body = self.read_text(PREDICTIONS)?;
        body.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Record { record: i + 1, msg: e.to_string() }))
            .collect()
    }

    fn read_tests(&self) -> Result<Vec<PronounExample>> {
        let mut all = Vec::new();
        for f in test_files() {
            all.extend(self.read_examples(&f)?);
        }
        Ok(all)
    }

    fn out_inputs(&self, names: &[&'static str]) -> Vec<(&'static str, PathBuf)> {
        names.iter().map(|&n| (n, self.path(n))).collect()
    }

    // -----------------------------------------------------------------------

    pub fn align_pages(&self) -> Result<bool> {
        let m = self.manifest("align-pages", &self.corpus_inputs()?, &[PAGES])?;
        self.stage(&m, |header| {
            let (es, en) = (self.load_es()?, self.load_en()?);
            let pa = page_align::align_pages(&es, &en, TitleOptions { loose: self.cfg.page_align.loose });
            for w in &pa.warnings {
                log::warn!("page alignment: {}", serde_json::to_string(w)?);
            }
            log::info!("aligned {} of {} Spanish pages", pa.pairs.len(), es.len());
            let body = stamped(header, |b| page_align::write_pairs_tsv(&pa.pairs, b))?;
            Ok(vec![(PAGES.into(), body)])
        })
    }

    pub fn align_sentences(&self) -> Result<bool> {
        let mut inputs = self.corpus_inputs()?;
        inputs.extend(self.out_inputs(&[PAGES]));
        if let Some(d) = &self.cfg.translate.dictionary {
            if self.cfg.translate.provider == TranslateProvider::Dictionary {
                inputs.push(("dictionary", d.clone()));
            }
        }
        if let Some(p) = &self.cfg.sent_align.pos_lexicon {
            inputs.push(("pos_lexicon", p.clone()));
        }
        let m = self.manifest("align-sentences", &inputs, &[PAIRS, SENTENCE_SKIPS])?;
        self.stage(&m, |header| {
            let (es, en) = (self.load_es()?, self.load_en()?);
            let rows = page_align::read_pairs_tsv(self.read_text(PAGES)?.as_bytes())?;
            let pages = page_align::resolve_pairs(&rows, &es, &en)?;
            let bridge = bridge(self.cfg)?;
            let alignments = sent_align::align_all(&pages, &bridge, &sent_align_config(self.cfg)?);
            let n: usize = alignments.iter().map(|a| a.pairs.len()).sum();
            log::info!("aligned {n} sentence pairs");
            let pairs = stamped(header, |b| sent_align::write_pairs_jsonl(&alignments, b))?;
            let skips = stamped(header, |b| {
                for s in alignments.iter().flat_map(|a| &a.skipped) {
                    log::warn!("sentence {}:{} skipped: {}", s.doc_id, s.sent_id, s.reason);
                    serde_json::to_writer(&mut *b, s)?;
                    writeln!(b)?;
                }
                Ok(())
            })?;
            Ok(vec![(PAIRS.into(), pairs), (SENTENCE_SKIPS.into(), skips)])
        })
    }

    pub fn train_aligner(&self) -> Result<bool> {
        let mut inputs = self.corpus_inputs()?;
        inputs.extend(self.out_inputs(&[PAIRS]));
        let m = self.manifest("train-aligner", &inputs, &[TTABLE_FWD, TTABLE_REV])?;
        self.stage(&m, |header| {
            let (es, en) = (self.load_es()?, self.load_en()?);
            let pairs = self.read_pairs(&es, &en)?;
            let mut files = Vec::new();
            for (name, dir) in [(TTABLE_FWD, Direction::EsToEn), (TTABLE_REV, Direction::EnToEs)] {
                let model = token_align::train_ibm1(&pairs, dir, self.cfg.token_align.iterations)?;
                if let Some(ll) = model.log_likelihood.last() {
                    log::info!("{name}: final log-likelihood {ll:.4}");
                }
                files.push((name.to_string(), stamped(header, |b| model.table.write_tsv(b))?));
            }
            Ok(files)
        })
    }

    pub fn extract(&self) -> Result<bool> {
        let mut inputs = self.corpus_inputs()?;
        inputs.extend(self.out_inputs(&[PAIRS, TTABLE_FWD, TTABLE_REV]));
        self.lexicon_inputs(&mut inputs);
        let m = self.manifest("extract", &inputs, &[EXAMPLES, DROPPED])?;
        self.stage(&m, |header| {
            let (mut es, en) = (self.load_es()?, self.load_en()?);
            if self.cfg.extract.analyze {
                analyze_documents(&mut es, &analyzer(self.cfg)?);
            }
            let pairs = self.read_pairs(&es, &en)?;
            let (fwd, rev) = (self.read_table(TTABLE_FWD)?, self.read_table(TTABLE_REV)?);
            let p = extract_pairs(&es, &pairs, &fwd, &rev, self.cfg);
            log::info!("extracted {} examples, dropped {}", p.examples.len(), p.dropped.len());
            let mut ex = Vec::new();
            dataset::write_examples(&p.examples, Some(header), &mut ex)?;
            let dropped = stamped(header, |b| extract::write_drop_log(&p.dropped, b))?;
            Ok(vec![(EXAMPLES.into(), ex), (DROPPED.into(), dropped)])
        })
    }

    pub fn build_dataset(&self) -> Result<bool> {
        let outputs: Vec<String> = KINDS.iter().flat_map(|&k| SPLITS.iter().map(move |&s| split_file(k, s))).collect();
        let names: Vec<&str> = outputs.iter().map(String::as_str).collect();
        let m = self.manifest("build-dataset", &self.out_inputs(&[EXAMPLES]), &names)?;
        self.stage(&m, |header| {
            let examples = self.read_examples(EXAMPLES)?;
            let mut files = Vec::new();
            for kind in KINDS {
                let splits = build_splits(&examples, kind, self.cfg)?;
                for s in splits {
                    log::info!("{} {}: {} examples", kind.name(), s.name.name(), s.examples.len());
                    let mut buf = Vec::new();
                    dataset::write_examples(&s.examples, Some(header), &mut buf)?;
                    files.push((split_file(kind, s.name), buf));
                }
            }
            Ok(files)
        })
    }

    fn test_inputs(&self) -> Vec<(&'static str, PathBuf)> {
        KINDS
            .iter()
            .map(|&k| {
                let name = match k {
                    PronounKind::Prodrop => "prodrop_test",
                    PronounKind::Possessive => "possessive_test",
                };
                (name, self.path(&split_file(k, SplitName::Test)))
            })
            .collect()
    }

    pub fn classify(&self) -> Result<bool> {
        let mut inputs = self.test_inputs();
        if let Some(p) = &self.cfg.classify.gender_lexicon {
            inputs.push(("gender_lexicon", p.clone()));
        }
        let m = self.manifest("classify", &inputs, &[PREDICTIONS])?;
        self.stage(&m, |header| {
            let tests = self.read_tests()?;
            let c = classifier(self.cfg)?;
            let preds = classify_batch(c.as_ref(), &tests)?;
            let body = stamped(header, |b| {
                for (e, p) in tests.iter().zip(preds) {
                    let r = PredictionRecord { id: e.id.clone(), kind: e.kind, gold: e.label, prediction: p };
                    serde_json::to_writer(&mut *b, &r)?;
                    writeln!(b)?;
                }
                Ok(())
            })?;
            Ok(vec![(PREDICTIONS.into(), body)])
        })
    }

    pub fn evaluate(&self) -> Result<bool> {
        let mut inputs = self.corpus_inputs()?;
        inputs.extend(self.out_inputs(&[PREDICTIONS, PAIRS]));
        let m = self.manifest("evaluate", &inputs, &[REPORT_JSON, REPORT_TXT])?;
        self.stage(&m, |header| {
            let (es, en) = (self.load_es()?, self.load_en()?);
            let pairs = self.read_pairs(&es, &en)?;
            let reports = evaluate_predictions(&self.read_predictions()?, Some(&pairs))?;
            let mut j = serde_json::to_string_pretty(&json!({ "manifest": header, "reports": reports }))?;
            j.push('\n');
            let system = match self.cfg.classify.provider {
                ClassifyProvider::Heuristic => "heuristic",
                ClassifyProvider::Remote => "remote",
            };
            let mut txt = format!("# {header}\n");
            for (name, r) in &reports {
                let _ = writeln!(txt, "[{name}]");
                txt.push_str(&r.to_text(system));
            }
            Ok(vec![(REPORT_JSON.into(), j.into_bytes()), (REPORT_TXT.into(), txt.into_bytes())])
        })
    }

    pub fn explain(&self) -> Result<bool> {
        let mut inputs = self.test_inputs();
        if let Some(p) = &self.cfg.classify.gender_lexicon {
            inputs.push(("gender_lexicon", p.clone()));
        }
        let m = self.manifest("explain", &inputs, &[EXPLANATIONS])?;
        self.stage(&m, |header| {
            let tests = self.read_tests()?;
            let c = classifier(self.cfg)?;
            let opts = self.cfg.explain.options(self.cfg.seed);
            let body = stamped(header, |b| {
                let mut done = 0;
                for e in &tests {
                    if done == self.cfg.explain.max_examples {
                        break;
                    }
                    match explain(c.as_ref(), e, &opts) {
                        Ok(x) => {
                            let mut v = x.to_json();
                            v["id"] = json!(e.id);
                            serde_json::to_writer(&mut *b, &v)?;
                            writeln!(b)?;
                            done += 1;
                        }
                        Err(Error::NothingToExplain) => log::info!("{}: classifier abstains, not explained", e.id),
                        Err(err) => return Err(err),
                    }
                }
                Ok(())
            })?;
            Ok(vec![(EXPLANATIONS.into(), body)])
        })
    }

    /// Tags each test sentence with its first non-abstaining prediction, in
    /// inference mode.
    pub fn inject(&self) -> Result<bool> {
        let mut inputs = self.test_inputs();
        inputs.extend(self.out_inputs(&[PREDICTIONS]));
        let m = self.manifest("inject", &inputs, &[TAGGED])?;
        self.stage(&m, |header| {
            let tests = self.read_tests()?;
            let preds: BTreeMap<String, Prediction> =
                self.read_predictions()?.into_iter().map(|r| (r.id, r.prediction)).collect();
            let mut sentences: BTreeMap<(String, u32), (String, Option<Prediction>)> = BTreeMap::new();
            for e in &tests {
                let slot = sentences.entry((e.doc_id.clone(), e.sent_id)).or_insert((e.target_sentence.clone(), None));
                let p = preds.get(&e.id).cloned().unwrap_or_else(|| Prediction::abstain("missing"));
                if slot.1.as_ref().is_none_or(Prediction::is_abstain) {
                    slot.1 = Some(p);
                }
            }
            let opts = self.cfg.inject.options(self.cfg.seed);
            let body = stamped(header, |b| {
                for (i, (text, p)) in sentences.values().enumerate() {
                    let o = inject_tag(text, i as u64 + 1, true, p.as_ref(), self.cfg.inject.mode, &opts)?;
                    writeln!(b, "{}", o.text)?;
                }
                Ok(())
            })?;
            Ok(vec![(TAGGED.into(), body)])
        })
    }

    /// Every stage in order.
    pub fn pipeline(&self) -> Result<Vec<(&'static str, bool)>> {
        type Stage<'s, 'r> = fn(&'s Run<'r>) -> Result<bool>;
        let stages: [(&'static str, Stage<'_, '_>); 9] = [
            ("align-pages", Self::align_pages),
            ("align-sentences", Self::align_sentences),
            ("train-aligner", Self::train_aligner),
            ("extract", Self::extract),
            ("build-dataset", Self::build_dataset),
            ("classify", Self::classify),
            ("evaluate", Self::evaluate),
            ("explain", Self::explain),
            ("inject", Self::inject),
        ];
        stages.iter().map(|(name, f)| f(self).map(|ran| (*name, ran))).collect()
    }
}
