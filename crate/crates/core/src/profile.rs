//! Per-language normalization rules and alphabets.
//!
//! A [`LanguageProfile`] decides which characters count as letters and how
//! raw text is normalized before initial letters are extracted: canonical
//! composition (NFC), optional folding of combining diacritics down to base
//! letters, then lowercasing. Profiles are data-driven so the built-ins can
//! be overridden from a file.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use smallvec::SmallVec;
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("unknown language tag {0:?} (built-ins: en, fr, ru)")]
    UnknownTag(String),
    #[error("profile alphabet is empty")]
    EmptyAlphabet,
    #[error("alphabet character {0:?} is not stable under the profile's own normalization")]
    UnstableAlphabetChar(char),
    #[error("profile file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("profile line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Alphabet plus normalization rules for one language.
#[derive(Debug, Clone)]
pub struct LanguageProfile {
    tag: String,
    alphabet: BTreeSet<char>,
    fold_diacritics: bool,
}

impl LanguageProfile {
    pub fn new(
        tag: impl Into<String>,
        alphabet: impl IntoIterator<Item = char>,
        fold_diacritics: bool,
    ) -> Result<Self, ProfileError> {
        let profile = LanguageProfile {
            tag: tag.into(),
            alphabet: alphabet.into_iter().collect(),
            fold_diacritics,
        };
        if profile.alphabet.is_empty() {
            return Err(ProfileError::EmptyAlphabet);
        }
        // Every alphabet letter must be a fixed point of normalization,
        // otherwise normalized output could fall outside the alphabet.
        for &c in &profile.alphabet {
            let mut out = SmallVec::<[char; 4]>::new();
            profile.normalize_char(c, &mut out);
            if out.as_slice() != [c] {
                return Err(ProfileError::UnstableAlphabetChar(c));
            }
        }
        Ok(profile)
    }

    /// Built-in profiles: `en`/`english`, `fr`/`french`, `ru`/`russian`.
    ///
    /// English and French fold diacritics to base letters; Russian keeps
    /// characters as composed.
    pub fn builtin(tag: &str) -> Result<Self, ProfileError> {
        match tag.to_ascii_lowercase().as_str() {
            "en" | "english" => Self::new("en", 'a'..='z', true),
            "fr" | "french" => Self::new("fr", 'a'..='z', true),
            "ru" | "russian" => {
                let mut alphabet: Vec<char> = ('а'..='я').collect();
                alphabet.push('ё');
                Self::new("ru", alphabet, false)
            }
            other => Err(ProfileError::UnknownTag(other.to_string())),
        }
    }

    /// Load a profile from a `key=value` file.
    ///
    /// Recognized keys: `tag`, `alphabet` (the letters, concatenated),
    /// `fold_diacritics` (`true`/`false`). Lines starting with `#` and blank
    /// lines are ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ProfileError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut tag: Option<String> = None;
        let mut alphabet: Option<Vec<char>> = None;
        let mut fold: Option<bool> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ProfileError::Parse {
                line: lineno,
                message: "expected key=value".to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let duplicate = |name: &str| ProfileError::Parse {
                line: lineno,
                message: format!("duplicate key {name:?}"),
            };
            match key {
                "tag" => {
                    if tag.replace(value.to_string()).is_some() {
                        return Err(duplicate("tag"));
                    }
                }
                "alphabet" => {
                    if alphabet.replace(value.chars().collect()).is_some() {
                        return Err(duplicate("alphabet"));
                    }
                }
                "fold_diacritics" => {
                    let parsed = match value {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(ProfileError::Parse {
                                line: lineno,
                                message: format!("fold_diacritics must be true or false, got {value:?}"),
                            })
                        }
                    };
                    if fold.replace(parsed).is_some() {
                        return Err(duplicate("fold_diacritics"));
                    }
                }
                other => {
                    return Err(ProfileError::Parse {
                        line: lineno,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let alphabet = alphabet.ok_or(ProfileError::EmptyAlphabet)?;
        Self::new(
            tag.unwrap_or_else(|| "custom".to_string()),
            alphabet,
            fold.unwrap_or(false),
        )
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet.len()
    }

    /// Alphabet characters, in deterministic (sorted) order.
    pub fn alphabet(&self) -> impl Iterator<Item = char> + '_ {
        self.alphabet.iter().copied()
    }

    pub fn contains(&self, c: char) -> bool {
        self.alphabet.contains(&c)
    }

    /// Normalize one (already NFC-composed) character: optionally strip
    /// combining diacritics down to the base letter, then lowercase.
    fn normalize_char(&self, c: char, out: &mut SmallVec<[char; 4]>) {
        if self.fold_diacritics {
            for d in c.nfd() {
                if !is_combining_mark(d) {
                    out.extend(d.to_lowercase());
                }
            }
        } else {
            out.extend(c.to_lowercase());
        }
    }

    /// Full normalization of a string: NFC, then per-character folding and
    /// lowercasing. Idempotent.
    pub fn normalize(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut buf = SmallVec::<[char; 4]>::new();
        for c in text.nfc() {
            buf.clear();
            self.normalize_char(c, &mut buf);
            out.extend(buf.iter());
        }
        out
    }

    /// First character of `text` that is a letter of this profile's alphabet
    /// after normalization. Characters outside the alphabet (digits,
    /// punctuation, markup residue, foreign scripts) are skipped.
    pub fn first_letter(&self, text: &str) -> Option<char> {
        let mut buf = SmallVec::<[char; 4]>::new();
        for c in text.nfc() {
            buf.clear();
            self.normalize_char(c, &mut buf);
            for &n in &buf {
                if self.alphabet.contains(&n) {
                    return Some(n);
                }
            }
        }
        None
    }
}

impl fmt::Display for LanguageProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} letters)", self.tag, self.alphabet.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_english() {
        let p = LanguageProfile::builtin("en").unwrap();
        assert_eq!(p.alphabet_len(), 26);
        assert!(p.contains('a') && p.contains('z'));
        assert!(!p.contains('é'));
    }

    #[test]
    fn french_folds_diacritics() {
        let p = LanguageProfile::builtin("fr").unwrap();
        assert_eq!(p.first_letter("Étoile"), Some('e'));
        assert_eq!(p.normalize("Çà"), "ca");
    }

    #[test]
    fn russian_keeps_composed_letters() {
        let p = LanguageProfile::builtin("ru").unwrap();
        assert_eq!(p.first_letter("Йод"), Some('й'));
        assert_eq!(p.first_letter("Ёлка"), Some('ё'));
    }

    #[test]
    fn first_letter_skips_non_alphabet_prefix() {
        let p = LanguageProfile::builtin("en").unwrap();
        assert_eq!(p.first_letter("  1. Of the things"), Some('o'));
        assert_eq!(p.first_letter("---"), None);
        assert_eq!(p.first_letter(""), None);
    }

    #[test]
    fn combining_sequence_is_composed_before_folding() {
        let p = LanguageProfile::builtin("fr").unwrap();
        // "e" followed by U+0301 composes to é, which folds back to e.
        assert_eq!(p.first_letter("e\u{0301}té"), Some('e'));
    }

    #[test]
    fn unknown_tag_is_an_error() {
        assert!(matches!(
            LanguageProfile::builtin("xx"),
            Err(ProfileError::UnknownTag(_))
        ));
    }

    #[test]
    fn unstable_alphabet_char_rejected() {
        // Uppercase letters are not fixed points of lowercasing.
        assert!(matches!(
            LanguageProfile::new("bad", ['A', 'b'], false),
            Err(ProfileError::UnstableAlphabetChar('A'))
        ));
        // 'й' decomposes under folding, so a folding profile must reject it.
        assert!(matches!(
            LanguageProfile::new("bad", ['й'], true),
            Err(ProfileError::UnstableAlphabetChar('й'))
        ));
    }

    #[test]
    fn parse_profile_file() {
        let p = LanguageProfile::parse("# test\ntag=el\nalphabet=αβγ\nfold_diacritics=true\n").unwrap();
        assert_eq!(p.tag(), "el");
        assert_eq!(p.alphabet_len(), 3);
        assert!(LanguageProfile::parse("alphabet=ab\nalphabet=cd").is_err());
        assert!(LanguageProfile::parse("nonsense").is_err());
        assert!(LanguageProfile::parse("tag=x").is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{0,40}", fold in proptest::bool::ANY) {
            let p = LanguageProfile::new("t", 'a'..='z', fold).unwrap();
            let once = p.normalize(&s);
            prop_assert_eq!(p.normalize(&once), once);
        }

        #[test]
        fn normalization_idempotent_on_latin_cyrillic(s in "[a-zA-ZÀ-ÿа-яА-ЯёЁ ,.-]{0,40}") {
            for tag in ["en", "fr", "ru"] {
                let p = LanguageProfile::builtin(tag).unwrap();
                let once = p.normalize(&s);
                prop_assert_eq!(p.normalize(&once), once);
            }
        }
    }
}
