//! Lexicon files: one entry per line, `surface<TAB>kind<TAB>value`.
//!
//! `kind` is `pos` (value is a part-of-speech tag), `question-word` (value is
//! a question category), `comparison` (value is the comparison phrase class)
//! or `special`. Multi-word `pos` surfaces double as a word list for
//! segmentation. Lines starting with `#` are comments.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::ontology::fold;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("lexicon line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitKind {
    QuestionWord,
    Comparison,
    Special,
}

impl UnitKind {
    pub fn name(self) -> &'static str {
        match self {
            UnitKind::QuestionWord => "question-word",
            UnitKind::Comparison => "comparison",
            UnitKind::Special => "special",
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "question-word" => Ok(UnitKind::QuestionWord),
            "comparison" => Ok(UnitKind::Comparison),
            "special" => Ok(UnitKind::Special),
            other => Err(format!("unknown entry kind `{other}`")),
        }
    }
}

/// A lexical unit: a (possibly multi-token) word with a semantic label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unit {
    pub kind: UnitKind,
    pub value: String,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    tags: HashMap<String, String>,
    words: HashSet<String>,
    max_word: usize,
    units: HashMap<String, Unit>,
    max_unit: usize,
}

fn syllables(s: &str) -> usize {
    s.split_whitespace().count()
}

impl Lexicon {
    pub fn parse(source: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        lex.extend_from(source)?;
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path)
            .map_err(|e| LexiconError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Lexicon::parse(&text)
    }

    /// Add the entries of another lexicon file; later entries win.
    pub fn extend_from(&mut self, source: &str) -> Result<(), LexiconError> {
        for (n, raw) in source.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |message: String| LexiconError::Line { line: n + 1, message };
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            }
            let surface = fold(&fields[0].replace('_', " "));
            let value = fields[2].trim();
            if surface.is_empty() || value.is_empty() {
                return Err(err("empty surface or value".into()));
            }
            match fields[1].trim() {
                "pos" => {
                    let n = syllables(&surface);
                    if n > 1 {
                        self.words.insert(surface.clone());
                        self.max_word = self.max_word.max(n);
                    }
                    self.tags.insert(surface, value.to_string());
                }
                kind => {
                    let kind = kind.parse().map_err(err)?;
                    self.max_unit = self.max_unit.max(syllables(&surface));
                    self.units.insert(surface, Unit { kind, value: value.to_string() });
                }
            }
        }
        Ok(())
    }

    pub fn tag(&self, surface: &str) -> Option<&str> {
        self.tags.get(&fold(surface)).map(String::as_str)
    }

    pub fn is_word(&self, surface: &str) -> bool {
        self.words.contains(&fold(surface))
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word
    }

    pub fn unit(&self, surface: &str) -> Option<&Unit> {
        self.units.get(&fold(surface))
    }

    pub fn max_unit_len(&self) -> usize {
        self.max_unit
    }

    pub fn len(&self) -> usize {
        self.tags.len() + self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries() {
        let lex = Lexicon::parse("# comment\nsinh viên\tpos\tNc\nkhi nào\tquestion-word\tWhen\nlớn_hơn\tcomparison\tgt\n\n")
            .unwrap();
        assert_eq!(lex.tag("Sinh  Viên"), Some("Nc"));
        assert!(lex.is_word("sinh viên"));
        assert_eq!(lex.max_word_len(), 2);
        assert_eq!(lex.unit("khi nào").unwrap().value, "When");
        assert_eq!(lex.unit("lớn hơn").unwrap().kind, UnitKind::Comparison);
        assert_eq!(lex.max_unit_len(), 2);
    }

    #[test]
    fn reports_bad_lines() {
        let err = Lexicon::parse("ok\tpos\tNN\nbroken line\n").unwrap_err();
        assert_eq!(err, LexiconError::Line { line: 2, message: "expected 3 tab-separated fields, found 1".into() });
        assert!(Lexicon::parse("x\tweird\tNN").is_err());
    }
}
