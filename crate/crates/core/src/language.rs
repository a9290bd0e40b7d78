//! Per-language word lists shared by the pipeline, IR and mapper.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Vi,
    En,
}

const VI_CATEGORIES: &[&str] =
    &["What", "When", "Where", "Who", "HowWhy", "YesNo", "Many", "ManyClass", "List", "Entity"];
const EN_CATEGORIES: &[&str] =
    &["QU-who-what", "QU-whichClass", "QU-listClass", "QU-howmany", "QU-yesno", "YesNo"];

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::Vi => "vi",
            Language::En => "en",
        }
    }

    /// Type name of the token layer.
    pub fn base_type(self) -> &'static str {
        match self {
            Language::Vi => "TokenVn",
            Language::En => "Token",
        }
    }

    pub fn categories(self) -> &'static [&'static str] {
        match self {
            Language::Vi => VI_CATEGORIES,
            Language::En => EN_CATEGORIES,
        }
    }

    /// Leading words dropped from Term1/Term2 text: question words, list
    /// verbs, determiners and quantifiers.
    pub fn term_prefixes(self) -> &'static [&'static str] {
        match self {
            Language::Vi => &[
                "liệt kê", "chỉ ra", "cho biết", "kể ra", "danh sách", "tìm", "tất cả", "các", "những", "mọi",
                "số lượng", "bao nhiêu", "cái", "chiếc",
            ],
            Language::En => &[
                "how many", "how much", "which", "what", "who", "whom", "whose", "list", "show", "give", "find",
                "name", "tell", "all", "the", "a", "an", "some", "every", "each", "any",
            ],
        }
    }

    pub fn term_suffixes(self) -> &'static [&'static str] {
        match self {
            Language::Vi => &["nào", "gì"],
            Language::En => &[],
        }
    }

    /// Quantifiers and determiners ignored before similarity scoring.
    pub fn determiners(self) -> &'static [&'static str] {
        match self {
            Language::Vi => &["tất cả", "các", "những", "mọi"],
            Language::En => &["all", "the", "a", "an", "some"],
        }
    }

    pub fn prepositions(self) -> &'static [&'static str] {
        match self {
            Language::Vi => &["ở", "bởi", "của", "với", "tại", "cho", "trong", "về", "từ", "đến", "vào"],
            Language::En => &["in", "on", "with", "to", "by", "of", "for", "at", "from", "about", "into"],
        }
    }

    pub fn auxiliaries(self) -> &'static [&'static str] {
        match self {
            Language::Vi => &["được", "bị"],
            Language::En => &["is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did"],
        }
    }

    pub fn is_count_category(self, category: &str) -> bool {
        matches!(category, "Many" | "ManyClass" | "QU-howmany")
    }

    pub fn is_yes_no_category(self, category: &str) -> bool {
        matches!(category, "YesNo" | "QU-yesno")
    }
}

/// A numeral written with digits or as a small number word.
pub fn parse_number(text: &str, lang: Language) -> Option<f64> {
    let t = text.trim().to_lowercase();
    if let Ok(v) = t.replace(',', ".").parse::<f64>() {
        return Some(v);
    }
    let words: &[&str] = match lang {
        Language::Vi => &["không", "một", "hai", "ba", "bốn", "năm", "sáu", "bảy", "tám", "chín", "mười"],
        Language::En => &[
            "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
        ],
    };
    words.iter().position(|w| *w == t).map(|i| i as f64)
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vi" => Ok(Language::Vi),
            "en" => Ok(Language::En),
            other => Err(format!("unsupported language `{other}` (expected vi or en)")),
        }
    }
}

fn starts_with_word(hay: &str, word: &str) -> Option<usize> {
    let lower = hay.to_lowercase();
    if !lower.starts_with(word) {
        return None;
    }
    let rest = &lower[word.len()..];
    if rest.is_empty() || rest.starts_with(' ') {
        Some(word.chars().count())
    } else {
        None
    }
}

fn ends_with_word(hay: &str, word: &str) -> Option<usize> {
    let lower = hay.to_lowercase();
    if !lower.ends_with(word) {
        return None;
    }
    let head = &lower[..lower.len() - word.len()];
    if head.is_empty() || head.ends_with(' ') {
        Some(word.chars().count())
    } else {
        None
    }
}

/// Repeatedly remove any of `prefixes` and `suffixes` (whole words,
/// case-insensitive) from whitespace-normalized `text`. Keeps the original
/// casing of what remains.
pub fn strip_words(text: &str, prefixes: &[&str], suffixes: &[&str]) -> String {
    let mut cur: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
    loop {
        let mut changed = false;
        for p in prefixes {
            if let Some(n) = starts_with_word(&cur, p) {
                cur = cur.chars().skip(n).collect::<String>().trim_start().to_string();
                changed = true;
            }
        }
        for s in suffixes {
            if let Some(n) = ends_with_word(&cur, s) {
                let keep = cur.chars().count() - n;
                cur = cur.chars().take(keep).collect::<String>().trim_end().to_string();
                changed = true;
            }
        }
        if !changed || cur.is_empty() {
            return cur;
        }
    }
}
