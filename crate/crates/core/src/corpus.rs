//! Text data model and corpus readers/writers (CoNLL-U and plain text).

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

pub use crate::text::{detokenize, tokenize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lang {
    Es,
    En,
    Other(String),
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "es" => Ok(Lang::Es),
            "en" => Ok(Lang::En),
            _ if s.len() == 2 && s.chars().all(|c| c.is_ascii_lowercase()) => Ok(Lang::Other(s)),
            _ => Err(Error::Invalid(format!("not an ISO 639-1 code: {s:?}"))),
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lang::Es => f.write_str("es"),
            Lang::En => f.write_str("en"),
            Lang::Other(s) => f.write_str(s),
        }
    }
}

/// Half-open byte range into the owning sentence's text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    Root,
    Token(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub surface: String,
    pub char_span: Span,
    pub pos: Option<String>,
    pub xpos: Option<String>,
    pub feats: Option<String>,
    pub dep_label: Option<String>,
    /// Zero-based index of the governing token.
    pub head: Option<Head>,
    pub lemma: Option<String>,
}

impl Token {
    pub fn new(surface: &str, char_span: Span) -> Self {
        Token {
            surface: surface.to_string(),
            char_span,
            pos: None,
            xpos: None,
            feats: None,
            dep_label: None,
            head: None,
            lemma: None,
        }
    }

    pub fn lower(&self) -> String {
        self.surface.to_lowercase()
    }

    pub fn is_root(&self) -> bool {
        self.head == Some(Head::Root)
    }

    pub fn pos_is(&self, tag: &str) -> bool {
        self.pos.as_deref() == Some(tag)
    }

    /// Looks up `key` in a `Key=Value|Key=Value` feature string.
    pub fn feat(&self, key: &str) -> Option<&str> {
        self.feats.as_deref()?.split('|').find_map(|kv| {
            let (k, v) = kv.split_once('=')?;
            (k == key).then_some(v)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub sent_id: u32,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// NFC-normalizes `text` and tokenizes it.
    pub fn from_text(sent_id: u32, text: &str) -> Self {
        let text = text::nfc(text);
        let tokens = tokenize(&text);
        Sentence { sent_id, text, tokens }
    }

    pub fn is_annotated(&self) -> bool {
        self.tokens.iter().any(|t| t.dep_label.is_some())
    }

    pub fn surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.clone()).collect()
    }

    pub fn lower_surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(Token::lower).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub lang: Lang,
    pub title: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(doc_id: &str, lang: Lang, title: &str, sentences: Vec<Sentence>) -> Result<Self> {
        if sentences.windows(2).any(|w| w[0].sent_id >= w[1].sent_id) {
            return Err(Error::Invalid(format!("document {doc_id}: sentence ids must be strictly increasing")));
        }
        Ok(Document { doc_id: doc_id.to_string(), lang, title: title.to_string(), sentences })
    }

    /// Builds a document from raw sentence strings numbered from zero.
    pub fn from_texts<S: AsRef<str>>(doc_id: &str, lang: Lang, title: &str, texts: &[S]) -> Self {
        let sentences = texts.iter().enumerate().map(|(i, t)| Sentence::from_text(i as u32, t.as_ref())).collect();
        Document { doc_id: doc_id.to_string(), lang, title: title.to_string(), sentences }
    }

    pub fn sentence(&self, sent_id: u32) -> Option<&Sentence> {
        self.sentences.binary_search_by_key(&sent_id, |s| s.sent_id).ok().map(|i| &self.sentences[i])
    }

    pub fn position(&self, sent_id: u32) -> Option<usize> {
        self.sentences.binary_search_by_key(&sent_id, |s| s.sent_id).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenderLabel {
    #[serde(rename = "MASC")]
    Masc,
    #[serde(rename = "FEM")]
    Fem,
}

impl GenderLabel {
    pub const ALL: [GenderLabel; 2] = [GenderLabel::Masc, GenderLabel::Fem];

    pub fn name(self) -> &'static str {
        match self {
            GenderLabel::Masc => "MASC",
            GenderLabel::Fem => "FEM",
        }
    }

    /// The bracketed form appended to MT input, `<MASC>` or `<FEM>`.
    pub fn tag(self) -> &'static str {
        match self {
            GenderLabel::Masc => "<MASC>",
            GenderLabel::Fem => "<FEM>",
        }
    }

    pub fn other(self) -> GenderLabel {
        match self {
            GenderLabel::Masc => GenderLabel::Fem,
            GenderLabel::Fem => GenderLabel::Masc,
        }
    }
}

impl fmt::Display for GenderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GenderLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "MASC" | "<MASC>" | "masc" | "M" | "he" | "his" => Ok(GenderLabel::Masc),
            "FEM" | "<FEM>" | "fem" | "F" | "she" | "her" => Ok(GenderLabel::Fem),
            other => Err(Error::Invalid(format!("unknown gender label {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// CoNLL-U

fn parse_field(s: &str) -> Option<String> {
    (s != "_").then(|| s.to_string())
}

struct PendingDoc {
    doc_id: String,
    title: String,
    lang: Lang,
    sentences: Vec<Sentence>,
}

/// Reads a CoNLL-U stream. Documents start at `# newdoc id = ...`; optional
/// `# title = ...` and `# lang = ...` comments describe the open document.
pub fn parse_conllu<R: BufRead>(reader: R, default_lang: Lang) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut doc: Option<PendingDoc> = None;
    let mut rows: Vec<(Token, Option<bool>)> = Vec::new();
    let mut sent_text: Option<String> = None;
    let mut sent_id: Option<u32> = None;

    fn open(doc: &mut Option<PendingDoc>, docs: &mut Vec<Document>, id: &str, lang: &Lang) {
        if let Some(d) = doc.take() {
            docs.push(finish_doc(d));
        }
        *doc = Some(PendingDoc {
            doc_id: id.to_string(),
            title: String::new(),
            lang: lang.clone(),
            sentences: Vec::new(),
        });
    }

    let flush = |doc: &mut Option<PendingDoc>,
                 docs: &mut Vec<Document>,
                 rows: &mut Vec<(Token, Option<bool>)>,
                 sent_text: &mut Option<String>,
                 sent_id: &mut Option<u32>| {
        if rows.is_empty() {
            *sent_text = None;
            *sent_id = None;
            return;
        }
        if doc.is_none() {
            let n = docs.len();
            open(doc, docs, &format!("doc-{n}"), &default_lang);
        }
        let d = doc.as_mut().expect("document opened above");
        let next = d.sentences.last().map_or(0, |s| s.sent_id + 1);
        let id = match *sent_id {
            Some(i) if i >= next => i,
            _ => next,
        };
        let sentence = build_sentence(id, sent_text.take(), std::mem::take(rows));
        d.sentences.push(sentence);
        *sent_id = None;
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            flush(&mut doc, &mut docs, &mut rows, &mut sent_text, &mut sent_id);
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            let (key, value) = match comment.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (comment, ""),
            };
            match key {
                "newdoc id" | "newdoc" | "doc_id" => {
                    flush(&mut doc, &mut docs, &mut rows, &mut sent_text, &mut sent_id);
                    let id = if value.is_empty() {
                        format!("doc-{}", docs.len() + usize::from(doc.is_some()))
                    } else {
                        value.to_string()
                    };
                    open(&mut doc, &mut docs, &id, &default_lang);
                }
                "title" => {
                    if doc.is_none() {
                        let id = format!("doc-{}", docs.len());
                        open(&mut doc, &mut docs, &id, &default_lang);
                    }
                    doc.as_mut().unwrap().title = text::nfc(value);
                }
                "lang" => {
                    let lang: Lang = value
                        .parse()
                        .map_err(|_| Error::Parse { line: line_no, msg: format!("bad language code {value:?}") })?;
                    if doc.is_none() {
                        let id = format!("doc-{}", docs.len());
                        open(&mut doc, &mut docs, &id, &default_lang);
                    }
                    doc.as_mut().unwrap().lang = lang;
                }
                "text" => sent_text = Some(text::nfc(value)),
                "sent_id" => sent_id = value.parse().ok(),
                _ => {}
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() < 8 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            // multiword ranges and empty nodes carry no token of their own
            continue;
        }
        let index: usize =
            id.parse().map_err(|_| Error::Parse { line: line_no, msg: format!("non-integer token id {id:?}") })?;
        if index != rows.len() + 1 {
            return Err(Error::Parse { line: line_no, msg: format!("token id {index} out of sequence") });
        }
        let head = match cols[6] {
            "_" => None,
            h => match h.parse::<usize>() {
                Ok(0) => Some(Head::Root),
                Ok(k) => Some(Head::Token(k - 1)),
                Err(_) => return Err(Error::Parse { line: line_no, msg: format!("non-integer head {h:?}") }),
            },
        };
        let space_after = cols.get(9).map(|misc| !misc.split('|').any(|kv| kv == "SpaceAfter=No"));
        let mut token = Token::new(&text::nfc(cols[1]), Span::new(0, 0));
        token.lemma = parse_field(cols[2]);
        token.pos = parse_field(cols[3]);
        token.xpos = parse_field(cols[4]);
        token.feats = parse_field(cols[5]);
        token.head = head;
        token.dep_label = parse_field(cols[7]);
        rows.push((token, space_after));
    }
    flush(&mut doc, &mut docs, &mut rows, &mut sent_text, &mut sent_id);
    if let Some(d) = doc.take() {
        docs.push(finish_doc(d));
    }
    for d in &docs {
        for s in &d.sentences {
            for t in &s.tokens {
                if let Some(Head::Token(h)) = t.head {
                    if h >= s.tokens.len() {
                        return Err(Error::Invalid(format!(
                            "document {} sentence {}: head {} out of range",
                            d.doc_id,
                            s.sent_id,
                            h + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(docs)
}

fn finish_doc(d: PendingDoc) -> Document {
    Document { doc_id: d.doc_id, lang: d.lang, title: d.title, sentences: d.sentences }
}

/// Places token spans inside the `# text` line when every form can be found
/// in order; otherwise text is rebuilt from the forms.
fn build_sentence(sent_id: u32, text: Option<String>, rows: Vec<(Token, Option<bool>)>) -> Sentence {
    if let Some(text) = text {
        let mut cursor = 0;
        let mut spans = Vec::with_capacity(rows.len());
        for (tok, _) in &rows {
            match text[cursor..].find(tok.surface.as_str()) {
                Some(off) => {
                    let start = cursor + off;
                    let end = start + tok.surface.len();
                    spans.push(Span::new(start, end));
                    cursor = end;
                }
                None => break,
            }
        }
        if spans.len() == rows.len() {
            let tokens = rows
                .into_iter()
                .zip(spans)
                .map(|((mut t, _), span)| {
                    t.char_span = span;
                    t
                })
                .collect();
            return Sentence { sent_id, text, tokens };
        }
    }
    let mut text = String::new();
    let mut tokens = Vec::with_capacity(rows.len());
    let mut pending_space = false;
    for (mut tok, space_after) in rows {
        if pending_space {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(&tok.surface);
        tok.char_span = Span::new(start, text.len());
        tokens.push(tok);
        pending_space = space_after.unwrap_or(true);
    }
    Sentence { sent_id, text, tokens }
}

fn field(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or("_")
}

pub fn write_conllu<W: Write>(docs: &[Document], mut w: W) -> Result<()> {
    for d in docs {
        writeln!(w, "# newdoc id = {}", d.doc_id)?;
        writeln!(w, "# title = {}", d.title)?;
        writeln!(w, "# lang = {}", d.lang)?;
        for s in &d.sentences {
            writeln!(w, "# sent_id = {}", s.sent_id)?;
            writeln!(w, "# text = {}", s.text)?;
            for (i, t) in s.tokens.iter().enumerate() {
                let head = match t.head {
                    None => "_".to_string(),
                    Some(Head::Root) => "0".to_string(),
                    Some(Head::Token(h)) => (h + 1).to_string(),
                };
                let glued = s.tokens.get(i + 1).is_some_and(|n| n.char_span.start == t.char_span.end);
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t{}",
                    i + 1,
                    t.surface,
                    field(&t.lemma),
                    field(&t.pos),
                    field(&t.xpos),
                    field(&t.feats),
                    head,
                    field(&t.dep_label),
                    if glued { "SpaceAfter=No" } else { "_" }
                )?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Plain text: one sentence per line, `# doc_id=` / `# title=` / `# lang=` headers.

pub fn parse_plain<R: BufRead>(reader: R, default_lang: Lang) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut lines_in_doc: Vec<String> = Vec::new();
    let mut current: Option<(String, String, Lang)> = None;

    let finish = |cur: Option<(String, String, Lang)>, lines: &mut Vec<String>, docs: &mut Vec<Document>| {
        if let Some((id, title, lang)) = cur {
            docs.push(Document::from_texts(&id, lang, &title, lines));
        }
        lines.clear();
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "doc_id" => {
                    finish(current.take(), &mut lines_in_doc, &mut docs);
                    current = Some((value.to_string(), String::new(), default_lang.clone()));
                }
                "title" | "lang" => {
                    let cur = current
                        .get_or_insert_with(|| (format!("doc-{}", docs.len()), String::new(), default_lang.clone()));
                    if key == "title" {
                        cur.1 = text::nfc(value);
                    } else {
                        cur.2 = value.parse().map_err(|_| Error::Parse {
                            line: lineno + 1,
                            msg: format!("bad language code {value:?}"),
                        })?;
                    }
                }
                _ => {}
            }
            continue;
        }
        if current.is_none() {
            current = Some((format!("doc-{}", docs.len()), String::new(), default_lang.clone()));
        }
        lines_in_doc.push(trimmed.to_string());
    }
    finish(current.take(), &mut lines_in_doc, &mut docs);
    Ok(docs)
}

pub fn write_plain<W: Write>(docs: &[Document], mut w: W) -> Result<()> {
    for d in docs {
        writeln!(w, "# doc_id={}", d.doc_id)?;
        writeln!(w, "# title={}", d.title)?;
        writeln!(w, "# lang={}", d.lang)?;
        for s in &d.sentences {
            writeln!(w, "{}", s.text)?;
        }
    }
    Ok(())
}

/// Loads a corpus file, picking the reader by extension (`.conllu` or text).
pub fn load_corpus(path: &std::path::Path, default_lang: Lang) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    if path.extension().is_some_and(|e| e == "conllu") {
        parse_conllu(reader, default_lang)
    } else {
        parse_plain(reader, default_lang)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str = "# newdoc id = es-britney
# title = Britney Spears
# lang = es
# sent_id = 0
# text = Ella canta.
1\tElla\tél\tPRON\t_\tGender=Fem|Number=Sing|Person=3\t2\tnsubj\t_\t_
2\tcanta\tcantar\tVERB\t_\tNumber=Sing|Person=3\t0\troot\t_\tSpaceAfter=No
3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

# sent_id = 1
# text = Adquirió fama.
1\tAdquirió\tadquirir\tVERB\t_\tMood=Ind|Number=Sing|Person=3\t0\troot\t_\t_
2\tfama\tfama\tNOUN\t_\t_\t1\tobj\t_\tSpaceAfter=No
3\t.\t.\tPUNCT\t_\t_\t1\tpunct\t_\t_

";

    #[test]
    fn empty_stream_yields_no_documents() {
        assert!(parse_conllu("".as_bytes(), Lang::Es).unwrap().is_empty());
    }

    #[test]
    fn fixture_fields_populated() {
        let docs = parse_conllu(FIXTURE.as_bytes(), Lang::En).unwrap();
        assert_eq!(docs.len(), 1);
        let d = &docs[0];
        assert_eq!(d.doc_id, "es-britney");
        assert_eq!(d.title, "Britney Spears");
        assert_eq!(d.lang, Lang::Es);
        assert_eq!(d.sentences.len(), 2);

        let s0 = &d.sentences[0];
        assert_eq!(s0.text, "Ella canta.");
        assert_eq!(s0.tokens[0].surface, "Ella");
        assert_eq!(s0.tokens[0].pos.as_deref(), Some("PRON"));
        assert_eq!(s0.tokens[0].dep_label.as_deref(), Some("nsubj"));
        assert_eq!(s0.tokens[0].head, Some(Head::Token(1)));
        assert_eq!(s0.tokens[1].head, Some(Head::Root));
        assert_eq!(s0.tokens[1].lemma.as_deref(), Some("cantar"));
        assert_eq!(s0.tokens[1].feat("Person"), Some("3"));
        assert_eq!(s0.tokens[2].char_span, Span::new(10, 11));

        let s1 = &d.sentences[1];
        assert_eq!(s1.sent_id, 1);
        assert_eq!(s1.tokens[0].surface, "Adquirió");
        assert_eq!(s1.tokens[1].dep_label.as_deref(), Some("obj"));
        assert!(s1.is_annotated());
    }

    #[test]
    fn non_integer_head_reports_line() {
        let bad = "# newdoc id = d\n1\tHola\t_\tINTJ\t_\t_\tx\troot\t_\t_\n";
        match parse_conllu(bad.as_bytes(), Lang::Es) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn short_row_is_rejected() {
        let bad = "1\tHola\t_\n";
        assert!(matches!(parse_conllu(bad.as_bytes(), Lang::Es), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn multiword_rows_are_skipped() {
        let input = "# text = del libro\n1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n1\tde\tde\tADP\t_\t_\t3\tcase\t_\t_\n2\tel\tel\tDET\t_\t_\t3\tdet\t_\t_\n3\tlibro\tlibro\tNOUN\t_\t_\t0\troot\t_\t_\n";
        let docs = parse_conllu(input.as_bytes(), Lang::Es).unwrap();
        let s = &docs[0].sentences[0];
        assert_eq!(s.surfaces(), ["de", "el", "libro"]);
        // forms are not literally in the text, so text is rebuilt
        assert_eq!(s.text, "de el libro");
    }

    #[test]
    fn plain_text_headers() {
        let input = "# doc_id=es-1\n# title=Mitsuko Shiga\nMitsuko Shiga fue una poeta.\n\nPublicó libros.\n# doc_id=es-2\n# title=Otro\nHola.\n";
        let docs = parse_plain(input.as_bytes(), Lang::Es).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].title, "Mitsuko Shiga");
        assert_eq!(docs[0].sentences.len(), 2);
        assert_eq!(docs[0].sentences[1].sent_id, 1);
        assert_eq!(docs[1].doc_id, "es-2");
        assert_eq!(docs[1].lang, Lang::Es);
    }

    #[test]
    fn document_rejects_unordered_ids() {
        let s = vec![Sentence::from_text(3, "a"), Sentence::from_text(1, "b")];
        assert!(Document::new("d", Lang::Es, "t", s).is_err());
    }

    #[test]
    fn gender_label_forms() {
        assert_eq!(GenderLabel::Fem.to_string(), "<FEM>");
        assert_eq!("<MASC>".parse::<GenderLabel>().unwrap(), GenderLabel::Masc);
        assert_eq!(serde_json::to_string(&GenderLabel::Fem).unwrap(), "\"FEM\"");
    }

    fn arb_token() -> impl Strategy<Value = (String, Option<String>, Option<String>, Option<String>)> {
        (
            "[a-zé]{1,6}",
            proptest::option::of(prop_oneof![Just("VERB".to_string()), Just("NOUN".to_string())]),
            proptest::option::of(prop_oneof![Just("nsubj".to_string()), Just("obj".to_string())]),
            proptest::option::of("[a-z]{1,5}"),
        )
    }

    proptest! {
        #[test]
        fn conllu_round_trip(sents in proptest::collection::vec(proptest::collection::vec(arb_token(), 1..6), 1..4)) {
            let sentences: Vec<Sentence> = sents.iter().enumerate().map(|(i, toks)| {
                let words: Vec<&str> = toks.iter().map(|t| t.0.as_str()).collect();
                let mut s = Sentence::from_text(i as u32, &words.join(" "));
                for (j, t) in s.tokens.iter_mut().enumerate() {
                    t.pos = toks[j].1.clone();
                    t.dep_label = toks[j].2.clone();
                    t.lemma = toks[j].3.clone();
                    t.head = Some(if j == 0 { Head::Root } else { Head::Token(0) });
                }
                s
            }).collect();
            let doc = Document::new("d1", Lang::Es, "A title", sentences).unwrap();
            let mut buf = Vec::new();
            write_conllu(std::slice::from_ref(&doc), &mut buf).unwrap();
            let back = parse_conllu(buf.as_slice(), Lang::En).unwrap();
            prop_assert_eq!(back, vec![doc]);
        }
    }
}
