//! Language tags and the scripts they are written in.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use core::fmt;

use crate::error::{Error, Result};

/// English plus the eleven Indic languages shipped with default resources.
pub const DEFAULT_LANGUAGES: [&str; 12] = [
    "en", "as", "bn", "gu", "hi", "kn", "ml", "mr", "or", "pa", "ta", "te",
];

/// Pivot language for English-centric corpora.
pub const ENGLISH: &str = "en";

/// A lowercase language tag such as `hi` or `en`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub struct LanguageCode(String);

impl LanguageCode {
    /// Validates the tag shape: nonempty, lowercase ASCII letters only.
    pub fn new(tag: &str) -> Result<Self> {
        if tag.is_empty() || !tag.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(Error::InvalidLanguage(tag.to_string()));
        }
        Ok(Self(tag.to_string()))
    }

    pub fn english() -> Self {
        Self(ENGLISH.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_english(&self) -> bool {
        self.0 == ENGLISH
    }

    /// Script the language is normally written in, if known.
    pub fn script(&self) -> Option<Script> {
        Script::for_language(&self.0)
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        LanguageCode::new(&value)
    }
}

impl From<LanguageCode> for String {
    fn from(value: LanguageCode) -> Self {
        value.0
    }
}

/// The set of languages a run is allowed to touch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageSet(BTreeSet<LanguageCode>);

impl LanguageSet {
    pub fn new<I, S>(tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = tags
            .into_iter()
            .map(|t| LanguageCode::new(t.as_ref()))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(Self(set))
    }

    /// Resolves a tag against the set.
    pub fn resolve(&self, tag: &str) -> Result<LanguageCode> {
        let code = LanguageCode::new(tag)?;
        if self.0.contains(&code) {
            Ok(code)
        } else {
            Err(Error::UnregisteredLanguage(tag.to_string()))
        }
    }

    pub fn contains(&self, code: &LanguageCode) -> bool {
        self.0.contains(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LanguageCode> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for LanguageSet {
    fn default() -> Self {
        Self::new(DEFAULT_LANGUAGES).expect("default tags are valid")
    }
}

/// Writing systems relevant to the shipped languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Script {
    Latin,
    Devanagari,
    Bengali,
    Gurmukhi,
    Gujarati,
    Oriya,
    Tamil,
    Telugu,
    Kannada,
    Malayalam,
}

impl Script {
    pub fn for_language(tag: &str) -> Option<Script> {
        Some(match tag {
            "en" => Script::Latin,
            "hi" | "mr" => Script::Devanagari,
            "as" | "bn" => Script::Bengali,
            "pa" => Script::Gurmukhi,
            "gu" => Script::Gujarati,
            "or" => Script::Oriya,
            "ta" => Script::Tamil,
            "te" => Script::Telugu,
            "kn" => Script::Kannada,
            "ml" => Script::Malayalam,
            _ => return None,
        })
    }

    /// Script of a single character; `None` for digits, punctuation and
    /// anything outside the supported blocks.
    pub fn of(c: char) -> Option<Script> {
        let cp = c as u32;
        Some(match cp {
            0x41..=0x5A | 0x61..=0x7A | 0xC0..=0x24F => {
                if c.is_alphabetic() {
                    Script::Latin
                } else {
                    return None;
                }
            }
            // Danda and double danda are shared by all Indic scripts.
            0x0964 | 0x0965 => return None,
            0x0900..=0x097F | 0xA8E0..=0xA8FF => Script::Devanagari,
            0x0980..=0x09FF => Script::Bengali,
            0x0A00..=0x0A7F => Script::Gurmukhi,
            0x0A80..=0x0AFF => Script::Gujarati,
            0x0B00..=0x0B7F => Script::Oriya,
            0x0B80..=0x0BFF => Script::Tamil,
            0x0C00..=0x0C7F => Script::Telugu,
            0x0C80..=0x0CFF => Script::Kannada,
            0x0D00..=0x0D7F => Script::Malayalam,
            _ => return None,
        })
    }

    /// Scripts with upper/lower case distinctions.
    pub fn is_cased(self) -> bool {
        matches!(self, Script::Latin)
    }
}
