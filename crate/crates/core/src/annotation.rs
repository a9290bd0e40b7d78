//! Typed, feature-bearing spans over an immutable text.
//!
//! Offsets count Unicode scalar values, so a span over "Hà Nội" is `(0, 6)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type AnnotationId = u32;
pub type Features = BTreeMap<String, String>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("span ({start}, {end}) out of range for text of length {len}")]
    Range { start: usize, end: usize, len: usize },
    #[error("annotation type name must not be empty")]
    EmptyType,
    #[error("unknown annotation id {0}")]
    UnknownId(AnnotationId),
    #[error("duplicate annotation id {0}")]
    DuplicateId(AnnotationId),
    #[error("malformed document json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn union(&self, other: &Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub id: AnnotationId,
    pub type_name: String,
    pub span: Span,
    pub features: Features,
}

impl Annotation {
    /// `None` when the feature is absent, `Some("")` when present but empty.
    pub fn feature(&self, name: &str) -> Option<&str> {
        self.features.get(name).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    text: String,
    /// Byte offset of every char boundary, plus the text length at the end.
    boundaries: Vec<usize>,
    whitespace: Vec<bool>,
    annotations: Vec<Annotation>,
    next_id: AnnotationId,
}

impl Document {
    pub fn new(text: &str) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        boundaries.push(text.len());
        let whitespace = text.chars().map(char::is_whitespace).collect();
        Document { text: text.to_string(), boundaries, whitespace, annotations: Vec::new(), next_id: 0 }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Length in Unicode scalar values.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First offset at or after `offset` that is not whitespace.
    pub fn skip_space(&self, offset: usize) -> usize {
        let mut i = offset;
        while i < self.whitespace.len() && self.whitespace[i] {
            i += 1;
        }
        i
    }

    pub fn full_span(&self) -> Span {
        Span::new(0, self.len())
    }

    pub fn slice(&self, span: Span) -> &str {
        let start = self.boundaries[span.start.min(self.len())];
        let end = self.boundaries[span.end.min(self.len())];
        &self.text[start..end]
    }

    fn check_span(&self, span: Span) -> Result<(), AnnotationError> {
        if span.start > span.end || span.end > self.len() {
            return Err(AnnotationError::Range { start: span.start, end: span.end, len: self.len() });
        }
        Ok(())
    }

    pub fn add(
        &mut self,
        type_name: &str,
        span: Span,
        features: Features,
    ) -> Result<AnnotationId, AnnotationError> {
        if type_name.is_empty() {
            return Err(AnnotationError::EmptyType);
        }
        self.check_span(span)?;
        let id = self.next_id;
        self.next_id += 1;
        self.annotations.push(Annotation { id, type_name: type_name.to_string(), span, features });
        Ok(id)
    }

    pub fn get(&self, id: AnnotationId) -> Option<&Annotation> {
        match self.annotations.binary_search_by_key(&id, |a| a.id) {
            Ok(i) => Some(&self.annotations[i]),
            Err(_) => None,
        }
    }

    pub fn set_feature(&mut self, id: AnnotationId, name: &str, value: &str) -> Result<(), AnnotationError> {
        let i = self
            .annotations
            .binary_search_by_key(&id, |a| a.id)
            .map_err(|_| AnnotationError::UnknownId(id))?;
        self.annotations[i].features.insert(name.to_string(), value.to_string());
        Ok(())
    }

    pub fn covered_text(&self, id: AnnotationId) -> Result<&str, AnnotationError> {
        let ann = self.get(id).ok_or(AnnotationError::UnknownId(id))?;
        Ok(self.slice(ann.span))
    }

    /// Annotations in insertion (id) order.
    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Every annotation of `type_name`, ordered by (start asc, end desc, id asc).
    pub fn of_type(&self, type_name: &str) -> Vec<&Annotation> {
        let mut found: Vec<&Annotation> =
            self.annotations.iter().filter(|a| a.type_name == type_name).collect();
        sort_by_position(&mut found);
        found
    }

    /// Annotations of `type_name` starting exactly at `start`, in retrieval order.
    pub fn starting_at(&self, type_name: &str, start: usize) -> Vec<&Annotation> {
        let mut found: Vec<&Annotation> = self
            .annotations
            .iter()
            .filter(|a| a.span.start == start && a.type_name == type_name)
            .collect();
        sort_by_position(&mut found);
        found
    }

    /// Annotations of `type_name` lying inside `outer` (an equal span qualifies),
    /// optionally filtered by one feature value.
    pub fn find_within(
        &self,
        outer: Span,
        type_name: &str,
        feature: Option<(&str, &str)>,
    ) -> Vec<AnnotationId> {
        let mut found: Vec<&Annotation> = self
            .annotations
            .iter()
            .filter(|a| a.type_name == type_name && outer.contains(&a.span))
            .filter(|a| match feature {
                Some((name, value)) => feature_matches(self, a, name, value),
                None => true,
            })
            .collect();
        sort_by_position(&mut found);
        found.into_iter().map(|a| a.id).collect()
    }

    /// Sorted distinct start offsets of all annotations.
    pub fn start_offsets(&self) -> Vec<usize> {
        let mut starts: Vec<usize> = self.annotations.iter().map(|a| a.span.start).collect();
        starts.sort_unstable();
        starts.dedup();
        starts
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(DocumentRepr::from(self)).expect("document serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, AnnotationError> {
        let repr: DocumentRepr =
            serde_json::from_value(value.clone()).map_err(|e| AnnotationError::Json(e.to_string()))?;
        Document::try_from(repr)
    }

    pub fn from_json_str(source: &str) -> Result<Self, AnnotationError> {
        let repr: DocumentRepr =
            serde_json::from_str(source).map_err(|e| AnnotationError::Json(e.to_string()))?;
        Document::try_from(repr)
    }
}

fn sort_by_position(found: &mut [&Annotation]) {
    found.sort_by(|a, b| {
        a.span
            .start
            .cmp(&b.span.start)
            .then(b.span.end.cmp(&a.span.end))
            .then(a.id.cmp(&b.id))
    });
}

/// Collapse whitespace runs and lowercase.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Feature test used by patterns and constraints. `string` reads covered text.
pub fn feature_matches(doc: &Document, ann: &Annotation, name: &str, value: &str) -> bool {
    if name == "string" {
        return normalize_text(doc.slice(ann.span)) == normalize_text(value);
    }
    ann.feature(name) == Some(value)
}

#[derive(Serialize, Deserialize)]
struct AnnotationRepr {
    id: AnnotationId,
    #[serde(rename = "type")]
    type_name: String,
    start: usize,
    end: usize,
    #[serde(default)]
    features: Features,
}

#[derive(Serialize, Deserialize)]
struct DocumentRepr {
    text: String,
    #[serde(default)]
    annotations: Vec<AnnotationRepr>,
}

impl From<&Document> for DocumentRepr {
    fn from(doc: &Document) -> Self {
        DocumentRepr {
            text: doc.text.clone(),
            annotations: doc
                .annotations
                .iter()
                .map(|a| AnnotationRepr {
                    id: a.id,
                    type_name: a.type_name.clone(),
                    start: a.span.start,
                    end: a.span.end,
                    features: a.features.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<DocumentRepr> for Document {
    type Error = AnnotationError;

    fn try_from(repr: DocumentRepr) -> Result<Self, Self::Error> {
        let mut doc = Document::new(&repr.text);
        let mut anns = repr.annotations;
        anns.sort_by_key(|a| a.id);
        for pair in anns.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(AnnotationError::DuplicateId(pair[0].id));
            }
        }
        for a in anns {
            if a.type_name.is_empty() {
                return Err(AnnotationError::EmptyType);
            }
            let span = Span::new(a.start, a.end);
            doc.check_span(span)?;
            doc.next_id = a.id + 1;
            doc.annotations.push(Annotation { id: a.id, type_name: a.type_name, span, features: a.features });
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feats(pairs: &[(&str, &str)]) -> Features {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn empty_and_unicode_documents() {
        let d = Document::new("");
        assert_eq!(d.len(), 0);
        assert!(d.annotations().is_empty());
        let d = Document::new("Who are the partners ?");
        assert_eq!(d.len(), 22);
        let d = Document::new("Hà Nội");
        assert_eq!(d.text(), "Hà Nội");
        assert_eq!(d.len(), 6);
        assert_eq!(d.slice(Span::new(3, 6)), "Nội");
    }

    #[test]
    fn add_lookup_and_errors() {
        let text = "Who are the researchers in semantic web research area ?";
        let mut d = Document::new(text);
        let start = text.find("semantic").unwrap();
        let id = d.add("NounPhrase", Span::new(start, start + 26), Features::new()).unwrap();
        assert_eq!(d.covered_text(id).unwrap(), "semantic web research area");
        assert_eq!(d.of_type("NounPhrase")[0].id, id);
        assert!(matches!(d.add("X", Span::new(5, 3), Features::new()), Err(AnnotationError::Range { .. })));
        assert_eq!(d.add("", Span::new(0, 1), Features::new()), Err(AnnotationError::EmptyType));
        let a = d.add("T", Span::new(0, 3), Features::new()).unwrap();
        let b = d.add("T", Span::new(0, 3), Features::new()).unwrap();
        assert_ne!(a, b);
        assert_eq!(d.covered_text(99), Err(AnnotationError::UnknownId(99)));
    }

    #[test]
    fn covered_text_edges() {
        let mut d = Document::new("AKT project");
        let z = d.add("Z", Span::new(4, 4), Features::new()).unwrap();
        let w = d.add("W", d.full_span(), Features::new()).unwrap();
        assert_eq!(d.covered_text(z).unwrap(), "");
        assert_eq!(d.covered_text(w).unwrap(), "AKT project");
    }

    #[test]
    fn absent_feature_differs_from_empty() {
        let mut d = Document::new("abc");
        let id = d.add("T", Span::new(0, 3), feats(&[("k", "")])).unwrap();
        let ann = d.get(id).unwrap();
        assert_eq!(ann.feature("k"), Some(""));
        assert_eq!(ann.feature("missing"), None);
    }

    #[test]
    fn find_within_includes_coextensive_and_filters() {
        let mut d = Document::new("Which projects are about ontologies ?");
        let qp = Span::new(0, 14);
        let hit = d.add("QuestionPhrase", qp, feats(&[("category", "QU-whichClass")])).unwrap();
        d.add("QuestionPhrase", Span::new(15, 18), feats(&[("category", "QU-who-what")])).unwrap();
        assert_eq!(d.find_within(qp, "QuestionPhrase", Some(("category", "QU-whichClass"))), vec![hit]);
        assert!(d.find_within(d.full_span(), "Absent", None).is_empty());
        assert_eq!(d.find_within(d.full_span(), "QuestionPhrase", None).len(), 2);
    }

    #[test]
    fn retrieval_order_is_start_then_longer_then_id() {
        let mut d = Document::new("abcdef");
        let short = d.add("T", Span::new(0, 2), Features::new()).unwrap();
        let long = d.add("T", Span::new(0, 4), Features::new()).unwrap();
        let later = d.add("T", Span::new(1, 2), Features::new()).unwrap();
        let dup = d.add("T", Span::new(0, 4), Features::new()).unwrap();
        let order: Vec<AnnotationId> = d.of_type("T").iter().map(|a| a.id).collect();
        assert_eq!(order, vec![long, dup, short, later]);
        let back = Document::from_json(&d.to_json()).unwrap();
        let order2: Vec<AnnotationId> = back.of_type("T").iter().map(|a| a.id).collect();
        assert_eq!(order, order2);
    }

    #[test]
    fn json_round_trip_and_duplicates() {
        let mut d = Document::new("Hà Nội ?");
        d.add("TokenVn", Span::new(0, 6), feats(&[("category", "Np")])).unwrap();
        let back = Document::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        let bad = serde_json::json!({"text": "ab", "annotations": [
            {"id": 1, "type": "T", "start": 0, "end": 1, "features": {}},
            {"id": 1, "type": "T", "start": 1, "end": 2, "features": {}}]});
        assert_eq!(Document::from_json(&bad), Err(AnnotationError::DuplicateId(1)));
    }

    #[test]
    fn string_pseudo_feature_folds_case_and_space() {
        let mut d = Document::new("Liệt  Kê x");
        let id = d.add("TokenVn", Span::new(0, 8), Features::new()).unwrap();
        assert!(feature_matches(&d, d.get(id).unwrap(), "string", "liệt kê"));
    }

    proptest! {
        #[test]
        fn covered_text_round_trip(text in "\\PC{0,24}", a in 0usize..30, b in 0usize..30) {
            let mut d = Document::new(&text);
            let n = d.len();
            let (s, e) = (a.min(b), a.max(b));
            let res = d.add("T", Span::new(s, e), Features::new());
            if e <= n {
                let id = res.unwrap();
                let expected: String = text.chars().skip(s).take(e - s).collect();
                prop_assert_eq!(d.covered_text(id).unwrap(), expected.as_str());
                prop_assert!(d.find_within(d.full_span(), "T", None).contains(&id));
            } else {
                prop_assert!(res.is_err());
            }
        }
    }
}
