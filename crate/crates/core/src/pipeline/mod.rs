//! Question analysis: tokenization, tagging, lexical units, noun phrases,
//! question phrases and relation phrases, posted as annotations.
//!
//! The stages work on a linear token sequence and only the final step writes
//! to the [`Document`], so the annotation set is append-only from the start.

mod chunk;
mod lexicon;

use std::collections::HashSet;

use crate::annotation::{Document, Features, Span};
use crate::language::Language;
use crate::ontology::{fold, Ontology};

pub use chunk::{Chunk, PhraseType};
pub use lexicon::{Lexicon, LexiconError, Unit, UnitKind};

/// One token of the linear sequence. Offsets are in chars.
#[derive(Debug, Clone, PartialEq)]
pub struct Tok {
    pub text: String,
    pub span: Span,
    pub tag: Option<String>,
    pub unit: Option<Unit>,
}

impl Tok {
    pub fn tag(&self) -> &str {
        self.tag.as_deref().unwrap_or("")
    }

    pub fn lower(&self) -> String {
        fold(&self.text)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '\''
}

/// Split plain text into words and single punctuation marks. For Vietnamese,
/// adjacent syllables that form a lexicon word are merged (longest first).
pub fn tokenize(text: &str, lang: Language, lexicon: &Lexicon) -> (Document, Vec<Tok>) {
    let doc = Document::new(text);
    let chars: Vec<char> = text.chars().collect();
    let mut raw = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if is_word_char(chars[i]) {
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
        } else {
            i += 1;
        }
        let span = Span::new(start, i);
        raw.push(Tok { text: doc.slice(span).to_string(), span, tag: None, unit: None });
    }
    let toks = if lang == Language::Vi { segment(&doc, raw, lexicon) } else { raw };
    (doc, toks)
}

fn joined(doc: &Document, toks: &[Tok]) -> String {
    let span = toks[0].span.union(&toks[toks.len() - 1].span);
    doc.slice(span).to_string()
}

fn merge(doc: &Document, toks: &[Tok]) -> Tok {
    let span = toks[0].span.union(&toks[toks.len() - 1].span);
    Tok { text: doc.slice(span).to_string(), span, tag: toks[0].tag.clone(), unit: None }
}

fn segment(doc: &Document, raw: Vec<Tok>, lexicon: &Lexicon) -> Vec<Tok> {
    let max = lexicon.max_word_len();
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let longest = (2..=max.min(raw.len() - i))
            .rev()
            .find(|&n| lexicon.is_word(&joined(doc, &raw[i..i + n])));
        match longest {
            Some(n) => {
                out.push(merge(doc, &raw[i..i + n]));
                i += n;
            }
            None => {
                out.push(raw[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// True when every whitespace-separated item looks like `word/TAG`.
pub fn looks_pretagged(input: &str) -> bool {
    let mut any = false;
    for item in input.split_whitespace() {
        match item.rsplit_once('/') {
            Some((w, t)) if !w.is_empty() && !t.is_empty() => any = true,
            _ => return false,
        }
    }
    any
}

/// Parse `word/TAG word/TAG ...`; `_` inside a word joins syllables and
/// becomes a space in the document text.
pub fn parse_pretagged(input: &str) -> Result<(Document, Vec<Tok>), String> {
    let mut words = Vec::new();
    for item in input.split_whitespace() {
        let (w, t) = item
            .rsplit_once('/')
            .filter(|(w, t)| !w.is_empty() && !t.is_empty())
            .ok_or_else(|| format!("`{item}` is not of the form word/TAG"))?;
        words.push((w.replace('_', " "), t.to_string()));
    }
    if words.is_empty() {
        return Err("empty input".into());
    }
    let text = words.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>().join(" ");
    let doc = Document::new(&text);
    let mut toks = Vec::with_capacity(words.len());
    let mut offset = 0;
    for (w, t) in words {
        let n = w.chars().count();
        toks.push(Tok { text: w, span: Span::new(offset, offset + n), tag: Some(t), unit: None });
        offset += n + 1;
    }
    Ok((doc, toks))
}

fn guess_tag(text: &str, lang: Language) -> &'static str {
    let first = text.chars().next().unwrap_or(' ');
    if text.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') && first.is_ascii_digit() {
        return match lang {
            Language::Vi => "Nn",
            Language::En => "CD",
        };
    }
    if !first.is_alphanumeric() {
        return match lang {
            Language::Vi => "CH",
            Language::En => ".",
        };
    }
    match lang {
        Language::Vi => {
            if first.is_uppercase() {
                "Np"
            } else {
                "Nc"
            }
        }
        Language::En => {
            let lower = text.to_lowercase();
            if first.is_uppercase() {
                "NNP"
            } else if lower.ends_with("ly") {
                "RB"
            } else if lower.ends_with("ing") {
                "VBG"
            } else if lower.ends_with("ed") {
                "VBN"
            } else if lower.ends_with('s') && !lower.ends_with("ss") {
                "NNS"
            } else {
                "NN"
            }
        }
    }
}

/// Assign tags: pre-tags are kept, then the lexicon, then surface heuristics.
pub fn pos_tag(toks: &mut [Tok], lang: Language, lexicon: &Lexicon) {
    for t in toks.iter_mut() {
        if t.tag.is_none() {
            let tag = lexicon.tag(&t.text).map(str::to_string).unwrap_or_else(|| guess_tag(&t.text, lang).to_string());
            t.tag = Some(tag);
        }
    }
}

/// Merge token runs that spell a lexical unit (longest first) and attach the
/// unit label. A merged token keeps the tag of its first part.
pub fn mark_lexical_units(doc: &Document, toks: Vec<Tok>, lexicon: &Lexicon) -> Vec<Tok> {
    let max = lexicon.max_unit_len();
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        // Token counts and syllable counts differ after segmentation, so try
        // every run that could fit.
        let found = (1..=max.min(toks.len() - i))
            .rev()
            .find_map(|n| lexicon.unit(&joined(doc, &toks[i..i + n])).map(|u| (n, u.clone())));
        match found {
            Some((n, unit)) => {
                let mut tok = if n == 1 { toks[i].clone() } else { merge(doc, &toks[i..i + n]) };
                tok.unit = Some(unit);
                out.push(tok);
                i += n;
            }
            None => {
                out.push(toks[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Known concept labels, used to type two-noun phrases.
#[derive(Debug, Clone, Default)]
pub struct PhraseDictionary {
    entries: HashSet<String>,
}

impl PhraseDictionary {
    pub fn from_ontology(ont: &Ontology) -> Self {
        let mut dict = PhraseDictionary::default();
        for c in ont.concepts() {
            dict.insert(&c.name);
            for s in &c.synonyms {
                dict.insert(s);
            }
        }
        dict
    }

    pub fn insert(&mut self, label: &str) {
        self.entries.insert(fold(label));
    }

    pub fn contains(&self, phrase: &str, lang: Language) -> bool {
        let folded = fold(phrase);
        if self.entries.contains(&folded) {
            return true;
        }
        let stripped = crate::language::strip_words(&folded, lang.determiners(), &[]);
        !stripped.is_empty() && self.entries.contains(&stripped)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Everything needed to turn a question into an annotated document.
#[derive(Debug, Clone)]
pub struct Pipeline {
    lang: Language,
    lexicon: Lexicon,
    dictionary: PhraseDictionary,
}

/// Token-level view of an analysis, mostly for display and tests.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub document: Document,
    pub tokens: Vec<Tok>,
    pub noun_phrases: Vec<Chunk>,
    pub question_phrases: Vec<Chunk>,
    pub relations: Vec<Chunk>,
}

impl Pipeline {
    pub fn new(lang: Language, lexicon: Lexicon, dictionary: PhraseDictionary) -> Self {
        Pipeline { lang, lexicon, dictionary }
    }

    pub fn language(&self) -> Language {
        self.lang
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Analyze a question. Pre-tagged input (`word/TAG ...`) is detected
    /// automatically unless `pretagged` forces the choice.
    pub fn analyze(&self, question: &str, pretagged: Option<bool>) -> Result<Analysis, String> {
        let tagged = pretagged.unwrap_or_else(|| looks_pretagged(question));
        let (doc, mut toks) = if tagged {
            parse_pretagged(question)?
        } else {
            if question.trim().is_empty() {
                return Err("empty question".into());
            }
            tokenize(question, self.lang, &self.lexicon)
        };
        pos_tag(&mut toks, self.lang, &self.lexicon);
        let toks = mark_lexical_units(&doc, toks, &self.lexicon);
        let nps = chunk::noun_phrases(&toks, self.lang, &self.dictionary);
        let qps = chunk::question_phrases(&toks, &nps, self.lang);
        let rels = chunk::relations(&toks, &nps, &qps, self.lang);
        let mut analysis =
            Analysis { document: doc, tokens: toks, noun_phrases: nps, question_phrases: qps, relations: rels };
        self.post(&mut analysis);
        Ok(analysis)
    }

    pub fn document(&self, question: &str, pretagged: Option<bool>) -> Result<Document, String> {
        self.analyze(question, pretagged).map(|a| a.document)
    }

    fn post(&self, a: &mut Analysis) {
        let span_of = |toks: &[Tok], c: &Chunk| toks[c.start].span.union(&toks[c.end - 1].span);
        let doc = &mut a.document;
        let base = self.lang.base_type();
        for t in &a.tokens {
            let mut f = Features::new();
            f.insert("category".into(), t.tag().to_string());
            if let Some(u) = &t.unit {
                f.insert("kind".into(), u.kind.name().into());
                f.insert(u.kind.name().into(), u.value.clone());
            }
            doc.add(base, t.span, f).expect("token span within text");
        }
        for c in &a.noun_phrases {
            let mut f = Features::new();
            if let Some(t) = c.phrase_type {
                f.insert("type".into(), t.name().into());
            }
            doc.add("NounPhrase", span_of(&a.tokens, c), f).expect("chunk span");
        }
        for c in &a.question_phrases {
            let mut f = Features::new();
            f.insert("category".into(), c.category.clone().unwrap_or_default());
            doc.add("QuestionPhrase", span_of(&a.tokens, c), f).expect("chunk span");
        }
        for c in &a.relations {
            doc.add("Relation", span_of(&a.tokens, c), Features::new()).expect("chunk span");
        }
        if self.lang == Language::En {
            for t in a.tokens.iter().filter(|t| t.unit.is_none()) {
                let tag = t.tag();
                let kind = if chunk::en_noun(tag) {
                    "Noun"
                } else if tag.starts_with("VB") {
                    "Verb"
                } else if tag == "IN" || tag == "TO" {
                    "Preps"
                } else {
                    continue;
                };
                doc.add(kind, t.span, Features::new()).expect("token span within text");
            }
        }
    }
}

impl Analysis {
    fn chunk_text(&self, c: &Chunk) -> String {
        self.document.slice(self.tokens[c.start].span.union(&self.tokens[c.end - 1].span)).to_string()
    }

    /// Bracketed rendering: `[QP Which projects] [Rel sponsored by] ...`,
    /// one bracket per top-level chunk, plain tokens elsewhere.
    pub fn bracketed(&self) -> String {
        let mut tops: Vec<(&str, &Chunk)> = Vec::new();
        for (label, set) in [("QP", &self.question_phrases), ("Rel", &self.relations), ("NP", &self.noun_phrases)] {
            for c in set.iter() {
                let covered = tops.iter().any(|(_, o)| o.start <= c.start && c.end <= o.end);
                if !covered {
                    tops.push((label, c));
                }
            }
        }
        tops.sort_by_key(|(_, c)| c.start);
        let mut out = Vec::new();
        let mut i = 0;
        for (label, c) in tops {
            while i < c.start {
                out.push(self.tokens[i].text.clone());
                i += 1;
            }
            if c.start < i {
                continue;
            }
            out.push(format!("[{label} {}]", self.chunk_text(c)));
            i = c.end;
        }
        while i < self.tokens.len() {
            out.push(self.tokens[i].text.clone());
            i += 1;
        }
        out.join(" ")
    }
}
