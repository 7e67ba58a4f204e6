//! Pairing Spanish and English documents by title.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::corpus::{Document, Lang};
use crate::error::{Error, Result};
use crate::text;

#[derive(Clone, Copy, Debug, Default)]
pub struct TitleOptions {
    /// Fold case before matching. Off by default: exact titles only.
    pub loose: bool,
}

pub fn normalize_title(title: &str, opts: TitleOptions) -> String {
    let t = text::normalize_whitespace(&text::nfc(title));
    if opts.loose {
        t.to_lowercase()
    } else {
        t
    }
}

#[derive(Clone, Debug)]
pub struct PagePair<'a> {
    pub es_doc: &'a Document,
    pub en_doc: &'a Document,
    pub match_key: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum PageWarning {
    DuplicateTitle { lang: String, match_key: String, count: usize },
    WrongLanguage { doc_id: String, expected: String, found: String },
    EmptyTitle { doc_id: String },
}

#[derive(Debug, Default)]
pub struct PageAlignment<'a> {
    pub pairs: Vec<PagePair<'a>>,
    pub warnings: Vec<PageWarning>,
}

fn index_side<'a>(
    docs: &'a [Document],
    lang: Lang,
    opts: TitleOptions,
    warnings: &mut Vec<PageWarning>,
) -> BTreeMap<String, Vec<&'a Document>> {
    let mut by_key: BTreeMap<String, Vec<&Document>> = BTreeMap::new();
    for d in docs {
        if d.lang != lang {
            warnings.push(PageWarning::WrongLanguage {
                doc_id: d.doc_id.clone(),
                expected: lang.to_string(),
                found: d.lang.to_string(),
            });
            continue;
        }
        let key = normalize_title(&d.title, opts);
        if key.is_empty() {
            warnings.push(PageWarning::EmptyTitle { doc_id: d.doc_id.clone() });
            continue;
        }
        by_key.entry(key).or_default().push(d);
    }
    by_key.retain(|key, ds| {
        if ds.len() > 1 {
            warnings.push(PageWarning::DuplicateTitle {
                lang: lang.to_string(),
                match_key: key.clone(),
                count: ds.len(),
            });
            false
        } else {
            true
        }
    });
    by_key
}

/// Pairs documents whose normalized titles match. Titles duplicated within one
/// side are dropped and reported. Output is ordered by match key.
pub fn align_pages<'a>(es_docs: &'a [Document], en_docs: &'a [Document], opts: TitleOptions) -> PageAlignment<'a> {
    let mut warnings = Vec::new();
    let es = index_side(es_docs, Lang::Es, opts, &mut warnings);
    let en = index_side(en_docs, Lang::En, opts, &mut warnings);
    let pairs = es
        .into_iter()
        .filter_map(|(key, es_d)| {
            en.get(&key).map(|en_d| PagePair { es_doc: es_d[0], en_doc: en_d[0], match_key: key })
        })
        .collect();
    PageAlignment { pairs, warnings }
}

pub const PAIRS_HEADER: &str = "match_key\tes_doc_id\ten_doc_id";

pub fn write_pairs_tsv<W: Write>(pairs: &[PagePair<'_>], mut w: W) -> Result<()> {
    writeln!(w, "{PAIRS_HEADER}")?;
    for p in pairs {
        writeln!(w, "{}\t{}\t{}", p.match_key, p.es_doc.doc_id, p.en_doc.doc_id)?;
    }
    Ok(())
}

/// One row of the pairs manifest: `(match_key, es_doc_id, en_doc_id)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageRow {
    pub match_key: String,
    pub es_doc_id: String,
    pub en_doc_id: String,
}

pub fn read_pairs_tsv<R: BufRead>(r: R) -> Result<Vec<PageRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') || line == PAIRS_HEADER {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse { line: i + 1, msg: format!("expected 3 columns, found {}", cols.len()) });
        }
        rows.push(PageRow {
            match_key: cols[0].to_string(),
            es_doc_id: cols[1].to_string(),
            en_doc_id: cols[2].to_string(),
        });
    }
    Ok(rows)
}

/// Re-resolves manifest rows against loaded corpora.
pub fn resolve_pairs<'a>(
    rows: &[PageRow],
    es_docs: &'a [Document],
    en_docs: &'a [Document],
) -> Result<Vec<PagePair<'a>>> {
    let es: BTreeMap<&str, &Document> = es_docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let en: BTreeMap<&str, &Document> = en_docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    rows.iter()
        .map(|r| {
            let es_doc = es
                .get(r.es_doc_id.as_str())
                .ok_or_else(|| Error::Invalid(format!("unknown es doc {}", r.es_doc_id)))?;
            let en_doc = en
                .get(r.en_doc_id.as_str())
                .ok_or_else(|| Error::Invalid(format!("unknown en doc {}", r.en_doc_id)))?;
            Ok(PagePair { es_doc, en_doc, match_key: r.match_key.clone() })
        })
        .collect()
}
