//! Sentence segmentation with Indic delimiters and non-breaking prefixes.
//!
//! Sentences are only split after a token that ends in a terminal delimiter
//! (`.`, `?`, `!`, `…`, `।`, `॥`), optionally followed by closing quotes or
//! brackets. A lone trailing period does not split when the word before it
//! is a configured non-breaking prefix, an initial, a dotted acronym, or a
//! list number at the start of a sentence.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::lang::{LanguageCode, Script, DEFAULT_LANGUAGES};

const NUMERIC_ONLY_MARKER: &str = "#NUMERIC_ONLY#";

pub fn is_terminal_delimiter(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | '…' | '।' | '॥')
}

fn is_closer(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '”' | '’' | '»' | '›'
    )
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '{' | '“' | '‘' | '«' | '‹')
}

fn is_mark(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::NonspacingMark
            | GeneralCategory::SpacingMark
            | GeneralCategory::EnclosingMark
    )
}

fn is_visible(c: char) -> bool {
    !c.is_whitespace()
        && !matches!(
            get_general_category(c),
            GeneralCategory::Format | GeneralCategory::Control
        )
}

fn is_digit_like(c: char) -> bool {
    c.is_numeric()
}

/// Non-breaking prefixes for one language, in the line-oriented format used
/// by the shipped defaults: one prefix per line, `#` starts a comment, and a
/// trailing `#NUMERIC_ONLY#` restricts the prefix to cases where the next
/// token starts with a digit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NonBreakingPrefixes {
    always: BTreeSet<String>,
    numeric_only: BTreeSet<String>,
}

impl NonBreakingPrefixes {
    pub fn parse(source: &str) -> Self {
        let mut out = Self::default();
        for line in source.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(prefix) = line.strip_suffix(NUMERIC_ONLY_MARKER) {
                out.numeric_only.insert(prefix.trim().to_string());
            } else {
                out.always.insert(line.to_string());
            }
        }
        out
    }

    /// Shipped list for `lang`, or an empty list for unknown languages.
    pub fn builtin(lang: &str) -> Self {
        builtin_source(lang).map(Self::parse).unwrap_or_default()
    }

    pub fn insert(&mut self, prefix: &str) {
        self.always.insert(prefix.to_string());
    }

    pub fn insert_numeric_only(&mut self, prefix: &str) {
        self.numeric_only.insert(prefix.to_string());
    }

    pub fn len(&self) -> usize {
        self.always.len() + self.numeric_only.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn protects(&self, word: &str, next: Option<&str>) -> bool {
        if self.always.contains(word) {
            return true;
        }
        self.numeric_only.contains(word)
            && next
                .and_then(|n| n.chars().find(|c| !is_opener(*c)))
                .is_some_and(is_digit_like)
    }
}

fn builtin_source(lang: &str) -> Option<&'static str> {
    Some(match lang {
        "en" => include_str!("../data/nonbreaking_prefixes/en.txt"),
        "as" => include_str!("../data/nonbreaking_prefixes/as.txt"),
        "bn" => include_str!("../data/nonbreaking_prefixes/bn.txt"),
        "gu" => include_str!("../data/nonbreaking_prefixes/gu.txt"),
        "hi" => include_str!("../data/nonbreaking_prefixes/hi.txt"),
        "kn" => include_str!("../data/nonbreaking_prefixes/kn.txt"),
        "ml" => include_str!("../data/nonbreaking_prefixes/ml.txt"),
        "mr" => include_str!("../data/nonbreaking_prefixes/mr.txt"),
        "or" => include_str!("../data/nonbreaking_prefixes/or.txt"),
        "pa" => include_str!("../data/nonbreaking_prefixes/pa.txt"),
        "ta" => include_str!("../data/nonbreaking_prefixes/ta.txt"),
        "te" => include_str!("../data/nonbreaking_prefixes/te.txt"),
        _ => return None,
    })
}

/// A word made of one letter plus combining marks: `J`, `के`, `மு`.
fn is_initial(word: &str) -> bool {
    let mut chars = word.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !first.is_alphabetic() || is_mark(first) {
        return false;
    }
    let cased = Script::of(first).is_some_and(Script::is_cased) || first.is_lowercase();
    if cased && !first.is_uppercase() {
        return false;
    }
    chars.all(is_mark)
}

/// `U.S`, `e.g`, `i.e`: internal periods between letters.
fn is_dotted_acronym(word: &str) -> bool {
    word.contains('.') && word.chars().any(char::is_alphabetic)
}

/// Decides whether a sentence ends after `token`.
fn ends_sentence(
    token: &str,
    first_in_sentence: bool,
    next: Option<&str>,
    prefixes: &NonBreakingPrefixes,
) -> bool {
    let trimmed = token.trim_end_matches(is_closer);
    if !trimmed.chars().next_back().is_some_and(is_terminal_delimiter) {
        return false;
    }
    let body = trimmed.trim_end_matches(is_terminal_delimiter);
    if &trimmed[body.len()..] != "." {
        return true;
    }
    let word = body.trim_start_matches(|c: char| is_opener(c) || c == '-');
    if word.is_empty() {
        return true;
    }
    if prefixes.protects(word, next) || is_initial(word) || is_dotted_acronym(word) {
        return false;
    }
    // "1. Introduction": a bare number opening a sentence is a list marker.
    !(first_in_sentence && word.chars().all(is_digit_like))
}

/// Splits `text` into sentences with whitespace collapsed to single spaces.
pub fn segment_sentences(text: &str, prefixes: &NonBreakingPrefixes) -> Vec<String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut first = true;
    for (i, token) in tokens.iter().enumerate() {
        if !first {
            current.push(' ');
        }
        current.push_str(token);
        if ends_sentence(token, first, tokens.get(i + 1).copied(), prefixes) {
            push_sentence(&mut sentences, core::mem::take(&mut current));
            first = true;
        } else {
            first = false;
        }
    }
    push_sentence(&mut sentences, current);
    sentences
}

fn push_sentence(out: &mut Vec<String>, sentence: String) {
    if sentence.chars().any(is_visible) {
        out.push(sentence);
    }
}

/// Trims and collapses every whitespace run to a single space.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

fn ends_with_delimiter(text: &str) -> bool {
    text.trim_end()
        .trim_end_matches(is_closer)
        .chars()
        .next_back()
        .is_some_and(is_terminal_delimiter)
}

/// Whether `next` continues a sentence left open at the end of `prev`.
///
/// For Latin-script languages the next page must not open with a capital or
/// an opening quote; Indic scripts have no case, so a missing delimiter is
/// enough.
pub fn is_continuation(prev: &str, next: &str, lang: &LanguageCode) -> bool {
    let prev = prev.trim();
    let next = next.trim();
    if prev.is_empty() || next.is_empty() || ends_with_delimiter(prev) {
        return false;
    }
    match lang.script() {
        Some(Script::Latin) | None => {
            let first = next.chars().next().expect("nonempty");
            !(is_opener(first) || first.is_uppercase())
        }
        Some(_) => true,
    }
}

/// Groups pages into runs of text joined across continuation boundaries.
/// Boundaries that are not continuations separate runs, so no sentence spans
/// them.
pub fn page_runs(pages: &[String], lang: &LanguageCode) -> Vec<String> {
    let mut runs: Vec<String> = Vec::new();
    let mut last_page: Option<&str> = None;
    for page in pages {
        let page = page.trim();
        if page.is_empty() {
            continue;
        }
        match (last_page, runs.last_mut()) {
            (Some(prev), Some(run)) if is_continuation(prev, page, lang) => {
                run.push(' ');
                run.push_str(page);
            }
            _ => runs.push(page.to_string()),
        }
        last_page = Some(page);
    }
    runs
}

/// Joins OCR pages into one text, merging sentences broken across pages.
pub fn merge_page_fragments(pages: &[String], lang: &LanguageCode) -> String {
    page_runs(pages, lang).join(" ")
}

/// Per-language segmentation settings.
#[derive(Debug, Clone, Default)]
pub struct Segmenter {
    prefixes: BTreeMap<String, NonBreakingPrefixes>,
}

impl Segmenter {
    /// Segmenter with the shipped prefix lists for all default languages.
    pub fn with_defaults() -> Self {
        let prefixes = DEFAULT_LANGUAGES
            .iter()
            .map(|l| (l.to_string(), NonBreakingPrefixes::builtin(l)))
            .collect();
        Self { prefixes }
    }

    pub fn set_prefixes(&mut self, lang: &LanguageCode, prefixes: NonBreakingPrefixes) {
        self.prefixes.insert(lang.as_str().to_string(), prefixes);
    }

    pub fn prefixes(&self, lang: &LanguageCode) -> Option<&NonBreakingPrefixes> {
        self.prefixes.get(lang.as_str())
    }

    pub fn segment(&self, text: &str, lang: &LanguageCode) -> Vec<String> {
        static EMPTY: NonBreakingPrefixes = NonBreakingPrefixes {
            always: BTreeSet::new(),
            numeric_only: BTreeSet::new(),
        };
        segment_sentences(text, self.prefixes(lang).unwrap_or(&EMPTY))
    }

    /// Segments OCR pages, treating non-continuation page breaks as hard
    /// sentence boundaries.
    pub fn segment_pages(&self, pages: &[String], lang: &LanguageCode) -> Vec<String> {
        page_runs(pages, lang)
            .iter()
            .flat_map(|run| self.segment(run, lang))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lang(tag: &str) -> LanguageCode {
        LanguageCode::new(tag).unwrap()
    }

    fn seg(text: &str, tag: &str) -> Vec<String> {
        Segmenter::with_defaults().segment(text, &lang(tag))
    }

    #[test]
    fn hindi_danda() {
        assert_eq!(
            seg("राम घर गया। वह सो गया।", "hi"),
            vec!["राम घर गया।", "वह सो गया।"]
        );
    }

    #[test]
    fn single_sentence() {
        assert_eq!(seg("Hello world.", "en"), vec!["Hello world."]);
    }

    #[test]
    fn honorific_does_not_split() {
        assert_eq!(
            seg("Dr. Rao arrived. He spoke.", "en"),
            vec!["Dr. Rao arrived.", "He spoke."]
        );
    }

    #[test]
    fn empty_and_blank_input() {
        assert!(seg("", "en").is_empty());
        assert!(seg(" \n\t ", "hi").is_empty());
        // zero-width noise only
        assert!(seg("\u{200b}", "hi").is_empty());
    }

    #[test]
    fn whitespace_is_collapsed() {
        assert_eq!(
            seg("  One\tsentence\n here!  Two? ", "en"),
            vec!["One sentence here!", "Two?"]
        );
    }

    #[test]
    fn initials_acronyms_and_lists() {
        assert_eq!(
            seg("J. K. Rowling wrote it. The U.S. economy grew. 2. Next point.", "en"),
            vec!["J. K. Rowling wrote it.", "The U.S. economy grew.", "2. Next point."]
        );
        assert_eq!(seg("I was there at 5. Then left.", "en").len(), 2);
    }

    #[test]
    fn numeric_only_prefix() {
        assert_eq!(seg("See No. 5 in the list.", "en").len(), 1);
        assert_eq!(seg("I said No. He agreed.", "en").len(), 2);
    }

    #[test]
    fn closing_quotes_and_runs() {
        assert_eq!(
            seg("He said \"stop!\" Then \"go.\" Wait... what?!", "en"),
            vec!["He said \"stop!\"", "Then \"go.\"", "Wait...", "what?!"]
        );
    }

    #[test]
    fn no_split_without_following_space() {
        assert_eq!(seg("Pi is 3.14 roughly.", "en"), vec!["Pi is 3.14 roughly."]);
    }

    #[test]
    fn indic_prefixes_and_initials() {
        assert_eq!(
            seg("डॉ. शर्मा आए। वे बोले॥ के. राव भी आए।", "hi"),
            vec!["डॉ. शर्मा आए।", "वे बोले॥", "के. राव भी आए।"]
        );
        assert_eq!(
            seg("திரு. ராஜா வந்தார். அவர் பேசினார்.", "ta"),
            vec!["திரு. ராஜா வந்தார்.", "அவர் பேசினார்."]
        );
    }

    #[test]
    fn custom_prefix_list() {
        let p = NonBreakingPrefixes::parse("# c\nAbc\nFoo #NUMERIC_ONLY#\n\n");
        assert_eq!(p.len(), 2);
        assert_eq!(segment_sentences("x Abc. y.", &p), vec!["x Abc. y."]);
        assert_eq!(segment_sentences("x Foo. 3 y.", &p), vec!["x Foo. 3 y."]);
        assert_eq!(segment_sentences("x Foo. y.", &p).len(), 2);
    }

    #[test]
    fn builtin_lists_exist_for_all_defaults() {
        for tag in DEFAULT_LANGUAGES {
            assert!(!NonBreakingPrefixes::builtin(tag).is_empty(), "{tag}");
        }
        assert!(NonBreakingPrefixes::builtin("xx").is_empty());
    }

    fn pages(p: &[&str]) -> Vec<String> {
        p.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn merge_continuation() {
        let en = lang("en");
        assert_eq!(
            merge_page_fragments(&pages(&["The budget was", "approved today."]), &en),
            "The budget was approved today."
        );
        assert_eq!(
            merge_page_fragments(&pages(&["Done.", "Next item."]), &en),
            "Done. Next item."
        );
        assert_eq!(merge_page_fragments(&pages(&[""]), &en), "");
    }

    #[test]
    fn page_breaks_without_continuation_are_hard_boundaries() {
        let en = lang("en");
        let s = Segmenter::with_defaults();
        assert_eq!(
            s.segment_pages(&pages(&["Table of contents", "Chapter one."]), &en),
            vec!["Table of contents", "Chapter one."]
        );
        assert_eq!(
            s.segment_pages(&pages(&["The budget was", "approved today."]), &en),
            vec!["The budget was approved today."]
        );
        // Indic: missing delimiter alone is a continuation.
        let hi = lang("hi");
        assert_eq!(
            s.segment_pages(&pages(&["बजट आज", "पारित हुआ।"]), &hi),
            vec!["बजट आज पारित हुआ।"]
        );
        assert!(!is_continuation("Said", "\"Quote", &en));
    }
}
