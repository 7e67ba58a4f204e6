//! Spanish->English bridge translation used to compare sentences monolingually.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::remote::{join_url, JsonClient, RetryPolicy};
use crate::text;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    External,
    Dictionary,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationRecord {
    pub source: String,
    pub translation: String,
    pub provider: Provider,
    pub cache_hit: bool,
}

pub trait Translator: Send + Sync {
    fn provider(&self) -> Provider;
    fn translate_text(&self, source: &str) -> Result<String>;
}

pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn provider(&self) -> Provider {
        Provider::Identity
    }

    fn translate_text(&self, source: &str) -> Result<String> {
        Ok(source.to_string())
    }
}

/// Token-by-token lookup; unknown tokens pass through unchanged.
#[derive(Clone, Debug, Default)]
pub struct DictionaryTranslator {
    entries: HashMap<String, String>,
}

impl DictionaryTranslator {
    pub fn new(entries: HashMap<String, String>) -> Self {
        DictionaryTranslator { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup<'a>(&'a self, token: &'a str) -> &'a str {
        if let Some(t) = self.entries.get(token) {
            return t;
        }
        self.entries.get(&token.to_lowercase()).map(String::as_str).unwrap_or(token)
    }

    /// Parses `es<TAB>en` lines. Duplicate keys keep the last entry and are
    /// reported in the returned warnings.
    pub fn from_reader<R: BufRead>(r: R) -> Result<(Self, Vec<String>)> {
        let mut entries = HashMap::new();
        let mut warnings = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = trimmed.split('\t');
            let (Some(src), Some(tgt), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse { line: i + 1, msg: "expected `source<TAB>target`".into() });
            };
            let (src, tgt) = (text::nfc(src.trim()), text::nfc(tgt.trim()));
            if src.is_empty() || tgt.is_empty() {
                return Err(Error::Parse { line: i + 1, msg: "empty dictionary field".into() });
            }
            if entries.insert(src.clone(), tgt).is_some() {
                warnings.push(format!("line {}: duplicate entry for {src:?}, last one wins", i + 1));
            }
        }
        Ok((DictionaryTranslator { entries }, warnings))
    }
}

pub fn load_dictionary(path: &Path) -> Result<(DictionaryTranslator, Vec<String>)> {
    let f = File::open(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    DictionaryTranslator::from_reader(BufReader::new(f))
}

impl Translator for DictionaryTranslator {
    fn provider(&self) -> Provider {
        Provider::Dictionary
    }

    fn translate_text(&self, source: &str) -> Result<String> {
        let toks = text::tokenize(source);
        let out: Vec<&str> = toks.iter().map(|t| self.lookup(&t.surface)).collect();
        Ok(text::join_tokens(&out))
    }
}

/// Client for `POST {base}/translate {"src": ..., "lang_pair": "es-en"}`
/// answering `{"translation": ...}`.
pub struct HttpTranslator {
    url: String,
    client: JsonClient,
}

impl HttpTranslator {
    pub fn new(base_url: &str, policy: RetryPolicy, max_in_flight: usize) -> Self {
        HttpTranslator { url: join_url(base_url, "translate"), client: JsonClient::new(policy, max_in_flight) }
    }
}

impl Translator for HttpTranslator {
    fn provider(&self) -> Provider {
        Provider::External
    }

    fn translate_text(&self, source: &str) -> Result<String> {
        let resp = self
            .client
            .post(&self.url, &json!({"src": source, "lang_pair": "es-en"}))
            .map_err(|e| Error::Translate(e.to_string()))?;
        match resp.get("translation").and_then(|v| v.as_str()) {
            Some(t) if !t.trim().is_empty() => Ok(t.to_string()),
            Some(_) => Err(Error::Translate("empty translation".into())),
            None => Err(Error::MalformedResponse(format!("missing `translation` in {resp}"))),
        }
    }
}

pub fn content_hash(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(o) => out.push(o),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// A translator behind a content-hash cache, optionally persisted to an
/// append-only `hash<TAB>source<TAB>translation` file.
pub struct Bridge {
    inner: Box<dyn Translator>,
    cache: RwLock<HashMap<String, String>>,
    log: Option<Mutex<BufWriter<File>>>,
}

impl Bridge {
    pub fn new(inner: Box<dyn Translator>) -> Self {
        Bridge { inner, cache: RwLock::new(HashMap::new()), log: None }
    }

    /// Loads prior entries from `path` (if it exists) and appends new ones.
    pub fn with_cache_file(inner: Box<dyn Translator>, path: &Path) -> Result<Self> {
        let mut cache = HashMap::new();
        if path.exists() {
            let f = BufReader::new(File::open(path)?);
            for (i, line) in f.lines().enumerate() {
                let line = line?;
                if line.is_empty() {
                    continue;
                }
                let cols: Vec<&str> = line.splitn(3, '\t').collect();
                if cols.len() != 3 {
                    return Err(Error::Parse { line: i + 1, msg: "bad cache line".into() });
                }
                // first translation recorded for a hash stays authoritative
                cache.entry(cols[0].to_string()).or_insert_with(|| unescape(cols[2]));
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Bridge { inner, cache: RwLock::new(cache), log: Some(Mutex::new(BufWriter::new(file))) })
    }

    pub fn provider(&self) -> Provider {
        self.inner.provider()
    }

    pub fn translate(&self, sentence: &Sentence) -> Result<TranslationRecord> {
        self.translate_str(&sentence.text)
    }

    pub fn translate_str(&self, source: &str) -> Result<TranslationRecord> {
        let key = content_hash(source);
        if let Some(t) = self.cache.read().unwrap().get(&key) {
            return Ok(TranslationRecord {
                source: source.to_string(),
                translation: t.clone(),
                provider: self.inner.provider(),
                cache_hit: true,
            });
        }
        let translation = self.inner.translate_text(source)?;
        let mut cache = self.cache.write().unwrap();
        // a concurrent caller may have filled the slot first; keep theirs
        let stored = cache.entry(key.clone()).or_insert_with(|| translation.clone()).clone();
        if stored == translation {
            if let Some(log) = &self.log {
                let mut w = log.lock().unwrap();
                writeln!(w, "{key}\t{}\t{}", escape(source), escape(&translation))?;
                w.flush()?;
            }
        }
        Ok(TranslationRecord {
            source: source.to_string(),
            translation: stored,
            provider: self.inner.provider(),
            cache_hit: false,
        })
    }
}

/// Chooses a provider from CLI/config values.
pub enum ProviderSpec {
    Identity,
    Dictionary(PathBuf),
    External { base_url: String, max_in_flight: usize, policy: RetryPolicy },
}

pub fn build_translator(spec: &ProviderSpec) -> Result<(Box<dyn Translator>, Vec<String>)> {
    Ok(match spec {
        ProviderSpec::Identity => (Box::new(IdentityTranslator), Vec::new()),
        ProviderSpec::Dictionary(p) => {
            let (d, w) = load_dictionary(p)?;
            (Box::new(d), w)
        }
        ProviderSpec::External { base_url, max_in_flight, policy } => {
            (Box::new(HttpTranslator::new(base_url, policy.clone(), *max_in_flight)), Vec::new())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::StubServer;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::time::Duration;

    fn dict(src: &str) -> DictionaryTranslator {
        DictionaryTranslator::from_reader(src.as_bytes()).unwrap().0
    }

    #[test]
    fn dictionary_lookup() {
        let d = dict("publicó\tpublished\n");
        assert_eq!(d.translate_text("publicó").unwrap(), "published");
        assert_eq!(d.translate_text("Publicó libros.").unwrap(), "published libros.");
    }

    #[test]
    fn identity_passes_through() {
        assert_eq!(IdentityTranslator.translate_text("hola").unwrap(), "hola");
    }

    #[test]
    fn empty_dictionary_is_identity() {
        let d = dict("");
        assert!(d.is_empty());
        assert_eq!(d.translate_text("hola mundo.").unwrap(), "hola mundo.");
    }

    #[test]
    fn malformed_dictionary_line() {
        let err = DictionaryTranslator::from_reader("a\tb\nbroken\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn duplicate_key_last_wins() {
        let (d, warnings) = DictionaryTranslator::from_reader("su\this\nsu\ther\n".as_bytes()).unwrap();
        assert_eq!(d.translate_text("su").unwrap(), "her");
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn cache_reports_hits() {
        let b = Bridge::new(Box::new(dict("hola\thello\n")));
        let first = b.translate_str("hola").unwrap();
        let second = b.translate_str("hola").unwrap();
        assert!(!first.cache_hit);
        assert!(second.cache_hit);
        assert_eq!(first.translation, second.translation);
        assert_eq!(second.provider, Provider::Dictionary);
    }

    #[test]
    fn cache_file_persists_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        {
            let b = Bridge::with_cache_file(Box::new(dict("hola\thello\n")), &path).unwrap();
            b.translate_str("hola\tamigo").unwrap();
        }
        // a different provider would disagree, but the cache answers first
        let b = Bridge::with_cache_file(Box::new(IdentityTranslator), &path).unwrap();
        let rec = b.translate_str("hola\tamigo").unwrap();
        assert!(rec.cache_hit);
        assert_eq!(rec.translation, "hello amigo");
    }

    #[test]
    fn external_provider_round_trip() {
        let server = StubServer::start(|path, body| {
            assert_eq!(path, "/translate");
            assert_eq!(body["lang_pair"], "es-en");
            let src = body["src"].as_str().unwrap().replace("hola", "hello");
            (200, json!({ "translation": src }).to_string())
        });
        let t = HttpTranslator::new(&server.url(), RetryPolicy::default(), 8);
        assert_eq!(t.translate_text("hola").unwrap(), "hello");
    }

    #[test]
    fn external_provider_retries_then_fails() {
        let calls = Arc::new(AtomicUsize::new(0));
        let seen = calls.clone();
        let server = StubServer::start(move |_, _| {
            seen.fetch_add(1, Ordering::SeqCst);
            (500, "oops".into())
        });
        let policy = RetryPolicy { max_retries: 2, base_backoff: Duration::from_millis(1), ..Default::default() };
        let t = HttpTranslator::new(&server.url(), policy, 2);
        assert!(matches!(t.translate_text("hola"), Err(Error::Translate(_))));
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn external_provider_recovers_after_transient_error() {
        let calls = Arc::new(AtomicUsize::new(0));
        let seen = calls.clone();
        let server = StubServer::start(move |_, _| {
            if seen.fetch_add(1, Ordering::SeqCst) == 0 {
                (503, String::new())
            } else {
                (200, r#"{"translation":"hello"}"#.into())
            }
        });
        let policy = RetryPolicy { base_backoff: Duration::from_millis(1), ..Default::default() };
        let t = HttpTranslator::new(&server.url(), policy, 2);
        assert_eq!(t.translate_text("hola").unwrap(), "hello");
    }
}
