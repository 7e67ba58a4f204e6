//! Run configuration: one TOML file with a section per stage. Every key is
//! optional and falls back to the documented default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::classify::{DecodeOptions, MarkStyle};
use crate::dataset::{Fractions, SplitKey};
use crate::error::{Error, Result};
use crate::explain::ExplainOptions;
use crate::inject::{InjectMode, InjectOptions};
use crate::remote::RetryPolicy;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    pub jobs: usize,
    pub paths: Paths,
    pub page_align: PageAlignSection,
    pub translate: TranslateSection,
    pub sent_align: SentAlignSection,
    pub token_align: TokenAlignSection,
    pub extract: ExtractSection,
    pub dataset: DatasetSection,
    pub classify: ClassifySection,
    pub inject: InjectSection,
    pub explain: ExplainSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub es_corpus: Option<PathBuf>,
    pub en_corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { es_corpus: None, en_corpus: None, out_dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageAlignSection {
    pub loose: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranslateProvider {
    #[default]
    Identity,
    Dictionary,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslateSection {
    pub provider: TranslateProvider,
    pub dictionary: Option<PathBuf>,
    pub url: Option<String>,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
    pub cache_file: Option<PathBuf>,
}

impl Default for TranslateSection {
    fn default() -> Self {
        TranslateSection {
            provider: TranslateProvider::Identity,
            dictionary: None,
            url: None,
            max_in_flight: 8,
            max_retries: 3,
            backoff_ms: 100,
            timeout_ms: 10_000,
            cache_file: None,
        }
    }
}

impl TranslateSection {
    pub fn policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_backoff: Duration::from_millis(self.backoff_ms),
            timeout: Duration::from_millis(self.timeout_ms),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentAlignSection {
    /// `token` or `char`.
    pub unit: String,
    pub exact_limit: usize,
    pub max_cost_ratio: f64,
    /// English `token<TAB>tag` file. Without it the stopword fallback decides
    /// which shared words count as content.
    pub pos_lexicon: Option<PathBuf>,
}

impl Default for SentAlignSection {
    fn default() -> Self {
        SentAlignSection { unit: "token".into(), exact_limit: 200, max_cost_ratio: 0.5, pos_lexicon: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenAlignSection {
    pub iterations: usize,
}

impl Default for TokenAlignSection {
    fn default() -> Self {
        TokenAlignSection { iterations: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub budget: usize,
    pub max_context_sentences: usize,
    /// Tag unannotated Spanish sentences with the bundled lexicon analyzer.
    /// When off they are skipped and logged.
    pub analyze: bool,
    pub verbs: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
}

impl Default for ExtractSection {
    fn default() -> Self {
        ExtractSection { budget: 128, max_context_sentences: 5, analyze: true, verbs: None, nouns: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub balance: bool,
    pub split_key: SplitKey,
    /// `default`, `paper-prodrop` or `paper-possessive`; ignored when
    /// `fractions` is set.
    pub preset: String,
    pub fractions: Option<[f64; 3]>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection { balance: true, split_key: SplitKey::Article, preset: "default".into(), fractions: None }
    }
}

impl DatasetSection {
    pub fn fractions(&self) -> Result<Fractions> {
        let f = match self.fractions {
            Some(f) => Fractions(f),
            None => Fractions::preset(&self.preset)
                .ok_or_else(|| Error::Config(format!("unknown split preset {:?}", self.preset)))?,
        };
        f.validate()?;
        Ok(f)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifyProvider {
    #[default]
    Heuristic,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub provider: ClassifyProvider,
    pub mark_style: MarkStyle,
    pub budget: usize,
    pub url: Option<String>,
    pub top_k: usize,
    pub ignore_diacritics: bool,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
    pub gender_lexicon: Option<PathBuf>,
}

impl Default for ClassifySection {
    fn default() -> Self {
        ClassifySection {
            provider: ClassifyProvider::Heuristic,
            mark_style: MarkStyle::TTags,
            budget: 128,
            url: None,
            top_k: 10,
            ignore_diacritics: true,
            max_in_flight: 8,
            max_retries: 3,
            backoff_ms: 100,
            timeout_ms: 10_000,
            gender_lexicon: None,
        }
    }
}

impl ClassifySection {
    pub fn policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_backoff: Duration::from_millis(self.backoff_ms),
            timeout: Duration::from_millis(self.timeout_ms),
        }
    }

    pub fn decode(&self) -> DecodeOptions {
        DecodeOptions { top_k: self.top_k, ignore_diacritics: self.ignore_diacritics }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectSection {
    pub mode: InjectMode,
    pub flip_rate: f64,
    pub random_tag_rate: f64,
    pub flip_adds_tag: bool,
}

impl Default for InjectSection {
    fn default() -> Self {
        let d = InjectOptions::default();
        InjectSection {
            mode: InjectMode::Infer,
            flip_rate: d.flip_rate,
            random_tag_rate: d.random_tag_rate,
            flip_adds_tag: d.flip_adds_tag,
        }
    }
}

impl InjectSection {
    pub fn options(&self, seed: u64) -> InjectOptions {
        InjectOptions {
            flip_rate: self.flip_rate,
            random_tag_rate: self.random_tag_rate,
            flip_adds_tag: self.flip_adds_tag,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub n_samples: usize,
    pub ridge_lambda: f64,
    /// Kernel width as a multiple of the square root of the token count.
    pub kernel_width: f64,
    /// How many test examples the pipeline explains.
    pub max_examples: usize,
}

impl Default for ExplainSection {
    fn default() -> Self {
        let d = ExplainOptions::default();
        ExplainSection {
            n_samples: d.n_samples,
            ridge_lambda: d.ridge_lambda,
            kernel_width: d.kernel_width,
            max_examples: 3,
        }
    }
}

impl ExplainSection {
    pub fn options(&self, seed: u64) -> ExplainOptions {
        ExplainOptions {
            n_samples: self.n_samples,
            ridge_lambda: self.ridge_lambda,
            kernel_width: self.kernel_width,
            seed,
        }
    }
}

impl Config {
    pub fn from_toml(src: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Config> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Config::from_toml(&src)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_opt = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                fix(p);
            }
        };
        fix_opt(&mut self.paths.es_corpus);
        fix_opt(&mut self.paths.en_corpus);
        fix(&mut self.paths.out_dir);
        fix_opt(&mut self.translate.dictionary);
        fix_opt(&mut self.translate.cache_file);
        fix_opt(&mut self.sent_align.pos_lexicon);
        fix_opt(&mut self.extract.verbs);
        fix_opt(&mut self.extract.nouns);
        fix_opt(&mut self.classify.gender_lexicon);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let unit_ok = matches!(self.sent_align.unit.as_str(), "token" | "char");
        if !unit_ok {
            return bad(format!("sent_align.unit must be token or char, got {:?}", self.sent_align.unit));
        }
        let r = self.sent_align.max_cost_ratio;
        if !(0.0..=1.0).contains(&r) {
            return bad(format!("sent_align.max_cost_ratio must be in [0, 1], got {r}"));
        }
        if self.token_align.iterations == 0 {
            return bad("token_align.iterations must be >= 1".into());
        }
        if self.extract.budget == 0 || self.classify.budget == 0 {
            return bad("budgets must be >= 1".into());
        }
        for (k, v) in
            [("inject.flip_rate", self.inject.flip_rate), ("inject.random_tag_rate", self.inject.random_tag_rate)]
        {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{k} must be in [0, 1], got {v}"));
            }
        }
        if self.explain.n_samples == 0 {
            return bad("explain.n_samples must be >= 1".into());
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.explain.ridge_lambda) || !positive(self.explain.kernel_width) {
            return bad("explain.ridge_lambda and explain.kernel_width must be > 0".into());
        }
        if self.classify.top_k == 0 {
            return bad("classify.top_k must be >= 1".into());
        }
        self.dataset.fractions()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.sent_align.max_cost_ratio, 0.5);
        assert_eq!(c.inject.flip_rate, 0.02);
        assert_eq!(c.inject.random_tag_rate, 0.05);
        assert_eq!(c.extract.budget, 128);
        assert_eq!(c.classify.top_k, 10);
        assert_eq!(c.explain.n_samples, 1000);
        assert_eq!(c.dataset.split_key, SplitKey::Article);
    }

    #[test]
    fn sections_override() {
        let c = Config::from_toml(
            "seed = 7\n[translate]\nprovider = \"dictionary\"\ndictionary = \"d.tsv\"\n[dataset]\npreset = \"paper-prodrop\"\nsplit_key = \"example\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.translate.provider, TranslateProvider::Dictionary);
        assert_eq!(c.dataset.split_key, SplitKey::Example);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(Config::from_toml("[inject]\nflip = 0.1\n").is_err());
        assert!(Config::from_toml("[inject]\nflip_rate = 1.5\n").is_err());
        assert!(Config::from_toml("[dataset]\nfractions = [0.5, 0.5, 0.5]\n").is_err());
        assert!(Config::from_toml("[dataset]\npreset = \"nope\"\n").is_err());
        assert!(Config::from_toml("[sent_align]\nunit = \"word\"\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = Config { seed: 42, ..Default::default() };
        c.paths.es_corpus = Some("es.txt".into());
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "[paths]\nes_corpus = \"es.txt\"\n").unwrap();
        let c = Config::load(&p).unwrap();
        assert_eq!(c.paths.es_corpus.unwrap(), dir.path().join("es.txt"));
        assert_eq!(c.paths.out_dir, dir.path().join("out"));
    }
}
