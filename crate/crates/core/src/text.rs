//! Tokenization and string normalization shared by every stage.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Span, Token};

/// Characters split off word boundaries as standalone tokens.
pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '¿' | '¡' | '«' | '»' | '“' | '”' | '‘' | '’' | '„' | '—' | '–' | '…' | '·' | '‹' | '›')
}

fn is_opening(c: char) -> bool {
    matches!(c, '(' | '[' | '{' | '¿' | '¡' | '«' | '“' | '‘' | '„' | '‹')
}

fn is_closing(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']' | '}' | '»' | '”' | '’' | '…' | '%' | '›')
}

pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Collapses every whitespace run to one space and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes combining marks after canonical decomposition (`él` -> `el`).
pub fn strip_diacritics(text: &str) -> String {
    text.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
}

/// Splits on whitespace and peels leading/trailing punctuation into single
/// character tokens. Spans are byte offsets into `text`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                split_chunk(text, s, i, &mut tokens);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        split_chunk(text, s, text.len(), &mut tokens);
    }
    tokens
}

fn split_chunk(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &text[start..end];
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let mut lo = 0;
    while lo < chars.len() && is_punct(chars[lo].1) {
        lo += 1;
    }
    if lo == chars.len() {
        for (off, c) in chars {
            push(text, start + off, start + off + c.len_utf8(), out);
        }
        return;
    }
    let mut hi = chars.len();
    while hi > lo && is_punct(chars[hi - 1].1) {
        hi -= 1;
    }
    for &(off, c) in &chars[..lo] {
        push(text, start + off, start + off + c.len_utf8(), out);
    }
    let word_start = start + chars[lo].0;
    let word_end = if hi == chars.len() { end } else { start + chars[hi].0 };
    push(text, word_start, word_end, out);
    for &(off, c) in &chars[hi..] {
        push(text, start + off, start + off + c.len_utf8(), out);
    }
}

fn push(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    out.push(Token::new(&text[start..end], Span::new(start, end)));
}

/// Rebuilds text from spanned tokens: one space wherever the source had a gap.
///
/// `detokenize(&tokenize(s)) == normalize_whitespace(s)` for every `s`.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut prev_end: Option<usize> = None;
    for t in tokens {
        if let Some(p) = prev_end {
            if t.char_span.start > p {
                out.push(' ');
            }
        }
        out.push_str(&t.surface);
        prev_end = Some(t.char_span.end);
    }
    out
}

/// Joins bare surfaces with conventional spacing around punctuation.
///
/// Tokenizing the result yields the same surfaces whenever the input came
/// from [`tokenize`].
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut prev_opening = true;
    for t in tokens {
        let t = t.as_ref();
        let mut chars = t.chars();
        let first = chars.next();
        let single = first.is_some() && chars.next().is_none();
        let closing = single && first.is_some_and(is_closing);
        if !out.is_empty() && !prev_opening && !closing {
            out.push(' ');
        }
        out.push_str(t);
        prev_opening = single && first.is_some_and(is_opening);
    }
    out
}

pub fn lower(s: &str) -> String {
    s.to_lowercase()
}

pub fn is_punct_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_punct)
}
