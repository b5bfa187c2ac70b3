//! Arabic text normalization and whitespace tokenization.
//!
//! Documents and prompts go through [`preprocess_document`], so the two
//! sides of a similarity comparison always see identical token streams.

use serde::{Deserialize, Serialize};

/// Which normalization steps run. Every step is on by default. The config is
/// stored inside trained models so prompts are processed like the training
/// corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub strip_diacritics: bool,
    pub normalize_alef: bool,
    pub normalize_yaa: bool,
    pub normalize_taa_marbuta: bool,
    pub remove_tatweel: bool,
    pub strip_punct: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            strip_diacritics: true,
            normalize_alef: true,
            normalize_yaa: true,
            normalize_taa_marbuta: true,
            remove_tatweel: true,
            strip_punct: true,
        }
    }
}

impl NormalizationConfig {
    /// Every step disabled; only whitespace is collapsed.
    pub fn none() -> Self {
        NormalizationConfig {
            strip_diacritics: false,
            normalize_alef: false,
            normalize_yaa: false,
            normalize_taa_marbuta: false,
            remove_tatweel: false,
            strip_punct: false,
        }
    }

    /// Flag bytes in field order, as stored in model files.
    pub fn to_bytes(self) -> [u8; 6] {
        [
            self.strip_diacritics,
            self.normalize_alef,
            self.normalize_yaa,
            self.normalize_taa_marbuta,
            self.remove_tatweel,
            self.strip_punct,
        ]
        .map(u8::from)
    }

    /// Inverse of [`to_bytes`](Self::to_bytes); each byte must be 0 or 1.
    pub fn from_bytes(bytes: [u8; 6]) -> Option<Self> {
        let mut flags = [false; 6];
        for (flag, byte) in flags.iter_mut().zip(bytes) {
            *flag = match byte {
                0 => false,
                1 => true,
                _ => return None,
            };
        }
        let [strip_diacritics, normalize_alef, normalize_yaa, normalize_taa_marbuta, remove_tatweel, strip_punct] =
            flags;
        Some(NormalizationConfig {
            strip_diacritics,
            normalize_alef,
            normalize_yaa,
            normalize_taa_marbuta,
            remove_tatweel,
            strip_punct,
        })
    }
}

/// Tashkeel and related combining marks: U+064B..=U+065F and the
/// superscript alef U+0670.
pub fn is_arabic_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}')
}

pub const TATWEEL: char = '\u{0640}';

/// ASCII punctuation plus the Arabic and general punctuation seen in tafsir
/// text (comma, semicolon, question mark, percent and decimal signs, full
/// stop, guillemets, dashes and quotes, ornate parentheses).
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{060C}'
                | '\u{061B}'
                | '\u{061E}'
                | '\u{061F}'
                | '\u{066A}'..='\u{066D}'
                | '\u{06D4}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2010}'..='\u{2027}'
                | '\u{2030}'..='\u{205E}'
                | '\u{FD3E}'
                | '\u{FD3F}'
        )
}

pub fn normalize_arabic(text: &str, cfg: &NormalizationConfig) -> String {
    let mut out = String::with_capacity(text.len());
    // Set once a non-space char has been written and a separator is owed.
    let mut pending_space = false;
    for c in text.chars() {
        if cfg.strip_diacritics && is_arabic_diacritic(c) {
            continue;
        }
        if cfg.remove_tatweel && c == TATWEEL {
            continue;
        }
        let mapped = match c {
            '\u{0623}' | '\u{0625}' | '\u{0622}' if cfg.normalize_alef => '\u{0627}',
            '\u{0649}' if cfg.normalize_yaa => '\u{064A}',
            '\u{0629}' if cfg.normalize_taa_marbuta => '\u{0647}',
            c if cfg.strip_punct && is_punctuation(c) => ' ',
            c => c,
        };
        if mapped.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(mapped);
    }
    out
}

/// Ordered, non-empty, whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<'a> FromIterator<&'a str> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        tokenize_iter(iter)
    }
}

fn tokenize_iter<'a>(parts: impl IntoIterator<Item = &'a str>) -> TokenSequence {
    TokenSequence(
        parts
            .into_iter()
            .flat_map(str::split_whitespace)
            .map(str::to_string)
            .collect(),
    )
}

pub fn tokenize(text: &str) -> TokenSequence {
    tokenize_iter([text])
}

/// Normalization followed by tokenization; the single pipeline used for
/// corpus documents and user prompts alike.
pub fn preprocess_document(raw: &str, cfg: &NormalizationConfig) -> TokenSequence {
    tokenize(&normalize_arabic(raw, cfg))
}
