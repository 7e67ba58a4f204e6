//! C ABI over the pronoun-pivot library.
//!
//! Every fallible call returns a `PpStatus`; on failure the message is
//! available from `pp_last_error` on the same thread. Strings handed out
//! through `out` pointers are owned by the caller and released with
//! `pp_string_free`. Handles are released with their `_free` function.
//! Structured values cross the boundary as UTF-8 JSON.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;

use pronoun_pivot::classify::{
    decode_mask_fills, Classifier, DecodeOptions, HeuristicClassifier as CoreHeuristic, Prediction,
};
use pronoun_pivot::extract::{detect_all, Analyzer, GenderLexicon, PronounExample};
use pronoun_pivot::inject::{inject_tag, InjectMode, InjectOptions};
use pronoun_pivot::metrics::bleu;
use pronoun_pivot::text::tokenize;
use pronoun_pivot::token_align::{align_token_seqs, train_ibm1_tokens, TranslationTable as CoreTable};
use pronoun_pivot::translate::{load_dictionary, DictionaryTranslator as CoreDictionary, Translator};
use pronoun_pivot::{Error, GenderLabel, Sentence};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    InvalidArgument = 5,
    EmptyCorpus = 6,
    Remote = 7,
    Panic = 8,
}

/// Gender label for `pp_inject_tag`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpLabel {
    /// No prediction, or the classifier abstained.
    None = 0,
    Masc = 1,
    Fem = 2,
}

/// Noise settings for `pp_inject_tag`; see `pp_inject_options_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PpInjectOptions {
    pub flip_rate: f64,
    pub random_tag_rate: f64,
    pub flip_adds_tag: bool,
    pub seed: u64,
}

/// IBM Model 1 translation table.
pub struct PpTranslationTable(CoreTable);

/// Word-by-word dictionary translator.
pub struct PpDictionaryTranslator(CoreDictionary);

/// Nearest-gendered-word classifier.
pub struct PpHeuristicClassifier(CoreHeuristic);

struct Failure {
    status: PpStatus,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } | Error::Record { .. } | Error::Json(_) => PpStatus::Parse,
            Error::Io(_) => PpStatus::Io,
            Error::EmptyCorpus => PpStatus::EmptyCorpus,
            Error::Translate(_) | Error::MalformedResponse(_) => PpStatus::Remote,
            _ => PpStatus::InvalidArgument,
        };
        Failure { status, msg: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { status: PpStatus::Parse, msg: e.to_string() }
    }
}

fn fail(status: PpStatus, msg: impl Into<String>) -> Failure {
    Failure { status, msg: msg.into() }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> PpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.msg);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            PpStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(PpStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(PpStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(PpStatus::NullPointer, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut T, v: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(PpStatus::NullPointer, format!("{name} is null")));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| fail(PpStatus::InvalidArgument, "output contains a NUL byte"))?;
    put(out, c.into_raw(), "out")
}

unsafe fn put_handle<T>(out: *mut *mut T, v: T) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(v)), "out")
}

fn lower_tokens(s: &str) -> Vec<String> {
    tokenize(s).into_iter().map(|t| t.surface.to_lowercase()).collect()
}

fn analyzer() -> &'static Analyzer {
    static A: OnceLock<Analyzer> = OnceLock::new();
    A.get_or_init(Analyzer::bundled)
}

// ---------------------------------------------------------------------------
// Library-wide

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn pp_version() -> *const c_char {
    static V: OnceLock<CString> = OnceLock::new();
    V.get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap()).as_ptr()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn pp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn pp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Translation tables

/// Trains `t(target | source)` with EM. `corpus_json` is an array of
/// `[source_sentence, target_sentence]` pairs; both sides are tokenized and
/// lowercased.
#[no_mangle]
pub unsafe extern "C" fn pp_ttable_train(
    corpus_json: *const c_char,
    iterations: u32,
    out: *mut *mut PpTranslationTable,
) -> PpStatus {
    guard(|| {
        let pairs: Vec<(String, String)> = serde_json::from_str(read_str(corpus_json, "corpus_json")?)?;
        let corpus: Vec<(Vec<String>, Vec<String>)> =
            pairs.iter().map(|(s, t)| (lower_tokens(s), lower_tokens(t))).collect();
        let model = train_ibm1_tokens(&corpus, iterations as usize)?;
        put_handle(out, PpTranslationTable(model.table))
    })
}

/// Reads a table written by `pp_ttable_save` or the CLI.
#[no_mangle]
pub unsafe extern "C" fn pp_ttable_load(path: *const c_char, out: *mut *mut PpTranslationTable) -> PpStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let f = std::fs::File::open(path).map_err(|e| fail(PpStatus::Io, format!("{path}: {e}")))?;
        let t = CoreTable::read_tsv(std::io::BufReader::new(f))?;
        put_handle(out, PpTranslationTable(t))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_ttable_save(table: *const PpTranslationTable, path: *const c_char) -> PpStatus {
    guard(|| {
        let t = handle(table, "table")?;
        let path = read_str(path, "path")?;
        let f = std::fs::File::create(path).map_err(|e| fail(PpStatus::Io, format!("{path}: {e}")))?;
        t.0.write_tsv(std::io::BufWriter::new(f))?;
        Ok(())
    })
}

/// `t(target | source)`, floored for unseen pairs.
#[no_mangle]
pub unsafe extern "C" fn pp_ttable_prob(
    table: *const PpTranslationTable,
    source: *const c_char,
    target: *const c_char,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        let t = handle(table, "table")?;
        let p = t.0.prob(read_str(source, "source")?, read_str(target, "target")?);
        put(out, p, "out")
    })
}

/// Most probable target word for `source`; `*out` is NULL for unknown words.
#[no_mangle]
pub unsafe extern "C" fn pp_ttable_best_target(
    table: *const PpTranslationTable,
    source: *const c_char,
    out: *mut *mut c_char,
) -> PpStatus {
    guard(|| {
        let t = handle(table, "table")?;
        match t.0.best_target(read_str(source, "source")?) {
            Some(w) => put_string(out, w.to_string()),
            None => put(out, std::ptr::null_mut(), "out"),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_ttable_free(table: *mut PpTranslationTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Intersected Viterbi links between a Spanish and an English sentence, as a
/// JSON array of `[es_index, en_index]` over their tokens. `fwd` holds
/// `t(en | es)`, `rev` holds `t(es | en)`.
#[no_mangle]
pub unsafe extern "C" fn pp_align_tokens(
    fwd: *const PpTranslationTable,
    rev: *const PpTranslationTable,
    es_sentence: *const c_char,
    en_sentence: *const c_char,
    out: *mut *mut c_char,
) -> PpStatus {
    guard(|| {
        let (f, r) = (handle(fwd, "fwd")?, handle(rev, "rev")?);
        let es = lower_tokens(read_str(es_sentence, "es_sentence")?);
        let en = lower_tokens(read_str(en_sentence, "en_sentence")?);
        let links: Vec<(usize, usize)> = align_token_seqs(&es, &en, &f.0, &r.0).links.into_iter().collect();
        put_string(out, serde_json::to_string(&links)?)
    })
}

// ---------------------------------------------------------------------------
// Dictionary translator

/// Loads an `es<TAB>en` dictionary file.
#[no_mangle]
pub unsafe extern "C" fn pp_dictionary_load(path: *const c_char, out: *mut *mut PpDictionaryTranslator) -> PpStatus {
    guard(|| {
        let (d, _) = load_dictionary(Path::new(read_str(path, "path")?))?;
        put_handle(out, PpDictionaryTranslator(d))
    })
}

/// Parses `es<TAB>en` lines held in memory.
#[no_mangle]
pub unsafe extern "C" fn pp_dictionary_parse(tsv: *const c_char, out: *mut *mut PpDictionaryTranslator) -> PpStatus {
    guard(|| {
        let (d, _) = CoreDictionary::from_reader(read_str(tsv, "tsv")?.as_bytes())?;
        put_handle(out, PpDictionaryTranslator(d))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_dictionary_translate(
    dict: *const PpDictionaryTranslator,
    sentence: *const c_char,
    out: *mut *mut c_char,
) -> PpStatus {
    guard(|| {
        let d = handle(dict, "dict")?;
        put_string(out, d.0.translate_text(read_str(sentence, "sentence")?)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_dictionary_free(dict: *mut PpDictionaryTranslator) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

// ---------------------------------------------------------------------------
// Classification

/// Builds the heuristic classifier from a `word<TAB>MASC|FEM` lexicon file,
/// or from the bundled lexicon when `lexicon_path` is NULL.
#[no_mangle]
pub unsafe extern "C" fn pp_heuristic_new(
    lexicon_path: *const c_char,
    out: *mut *mut PpHeuristicClassifier,
) -> PpStatus {
    guard(|| {
        let lex = if lexicon_path.is_null() {
            GenderLexicon::bundled()
        } else {
            GenderLexicon::load(Path::new(read_str(lexicon_path, "lexicon_path")?))?
        };
        put_handle(out, PpHeuristicClassifier(CoreHeuristic::new(lex)))
    })
}

/// Classifies one example given as JSON (the `examples.jsonl` record
/// format). Writes the prediction as JSON: `{"label", "confidence", "source"}`.
#[no_mangle]
pub unsafe extern "C" fn pp_heuristic_classify(
    classifier: *const PpHeuristicClassifier,
    example_json: *const c_char,
    out: *mut *mut c_char,
) -> PpStatus {
    guard(|| {
        let c = handle(classifier, "classifier")?;
        let ex: PronounExample = serde_json::from_str(read_str(example_json, "example_json")?)?;
        let p = c.0.classify(&ex)?;
        put_string(out, serde_json::to_string(&p)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn pp_heuristic_free(classifier: *mut PpHeuristicClassifier) {
    if !classifier.is_null() {
        drop(Box::from_raw(classifier));
    }
}

/// Decodes masked-LM fills (`[[token, score], ...]`, best first) into a
/// prediction JSON.
#[no_mangle]
pub unsafe extern "C" fn pp_decode_mask_fills(
    fills_json: *const c_char,
    top_k: u32,
    ignore_diacritics: bool,
    out: *mut *mut c_char,
) -> PpStatus {
    guard(|| {
        let fills: Vec<(String, f64)> = serde_json::from_str(read_str(fills_json, "fills_json")?)?;
        let p = decode_mask_fills(&fills, DecodeOptions { top_k: top_k as usize, ignore_diacritics });
        put_string(out, serde_json::to_string(&p)?)
    })
}

// ---------------------------------------------------------------------------
// Sentence-level helpers

/// Pronoun slots in a plain Spanish sentence, annotated with the bundled
/// lexicons. JSON array of `{"sent_id", "kind", "anchor"}`.
#[no_mangle]
pub unsafe extern "C" fn pp_detect_pronouns(sentence: *const c_char, out: *mut *mut c_char) -> PpStatus {
    guard(|| {
        let mut s = Sentence::from_text(0, read_str(sentence, "sentence")?);
        analyzer().annotate(&mut s);
        put_string(out, serde_json::to_string(&detect_all(&s).slots)?)
    })
}

/// Defaults matching the library: flip 0.02, random tag 0.05.
#[no_mangle]
pub extern "C" fn pp_inject_options_default() -> PpInjectOptions {
    let d = InjectOptions::default();
    PpInjectOptions {
        flip_rate: d.flip_rate,
        random_tag_rate: d.random_tag_rate,
        flip_adds_tag: d.flip_adds_tag,
        seed: d.seed,
    }
}

/// Appends `<c> <TAG>` to `sentence` when it has a slot. `train` enables the
/// seeded noise in `options` (NULL for defaults).
#[no_mangle]
pub unsafe extern "C" fn pp_inject_tag(
    sentence: *const c_char,
    sent_id: u64,
    has_slot: bool,
    label: PpLabel,
    train: bool,
    options: *const PpInjectOptions,
    out: *mut *mut c_char,
) -> PpStatus {
    guard(|| {
        let o = options.as_ref().copied().unwrap_or_else(|| pp_inject_options_default());
        let opts = InjectOptions {
            flip_rate: o.flip_rate,
            random_tag_rate: o.random_tag_rate,
            flip_adds_tag: o.flip_adds_tag,
            seed: o.seed,
        };
        let pred = match label {
            PpLabel::None => Prediction::abstain("ffi"),
            PpLabel::Masc => Prediction::new(GenderLabel::Masc, 1.0, "ffi"),
            PpLabel::Fem => Prediction::new(GenderLabel::Fem, 1.0, "ffi"),
        };
        let mode = if train { InjectMode::Train } else { InjectMode::Infer };
        let r = inject_tag(read_str(sentence, "sentence")?, sent_id, has_slot, Some(&pred), mode, &opts)?;
        put_string(out, r.text)
    })
}

/// Corpus BLEU (0..100) of whitespace-tokenized hypotheses against one
/// reference each; both arguments are JSON arrays of strings.
#[no_mangle]
pub unsafe extern "C" fn pp_bleu(
    hypotheses_json: *const c_char,
    references_json: *const c_char,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        let split = |v: Vec<String>| -> Vec<Vec<String>> {
            v.iter().map(|s| s.split_whitespace().map(String::from).collect()).collect()
        };
        let h: Vec<String> = serde_json::from_str(read_str(hypotheses_json, "hypotheses_json")?)?;
        let r: Vec<String> = serde_json::from_str(read_str(references_json, "references_json")?)?;
        put(out, bleu(&split(h), &split(r))?, "out")
    })
}
