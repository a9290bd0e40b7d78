//! Maps query-tuple terms and relations onto ontology elements by exact
//! name, synonym, or normalized edit-distance similarity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{IntermediateRepresentation, QueryTuple, QuestionStructure};
use crate::language::{parse_number, strip_words, Language};
use crate::ontology::{fold, Assertion, Element, ElementKind, Ontology, OntologyError};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max_len` over case-folded, whitespace-normalized text.
pub fn similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (fold(a), fold(b));
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 1.0;
    }
    1.0 - edit_distance(&a, &b) as f64 / max as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MappingResult {
    Exact { name: String },
    /// Sorted by score descending, then shorter name, then name.
    Candidates { candidates: Vec<(String, f64)> },
    NoMatch,
}

fn rank(a: &(String, f64), b: &(String, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1)
        .then(a.0.chars().count().cmp(&b.0.chars().count()))
        .then(a.0.cmp(&b.0))
}

fn variants(term: &str, kind: ElementKind, lang: Language) -> Vec<String> {
    let mut out = vec![term.split_whitespace().collect::<Vec<_>>().join(" ")];
    let bare = strip_words(term, lang.determiners(), &[]);
    out.push(bare.clone());
    if kind == ElementKind::Relation {
        out.push(strip_words(&bare, lang.auxiliaries(), &[]));
        out.push(strip_words(&bare, lang.auxiliaries(), lang.prepositions()));
    }
    out.retain(|v| !v.is_empty());
    out.dedup();
    out
}

/// Map `term` to elements of `kind`, optionally restricted to `within`.
pub fn map_term_within(
    term: &str,
    kind: ElementKind,
    ont: &Ontology,
    threshold: f64,
    lang: Language,
    within: Option<&BTreeSet<String>>,
) -> MappingResult {
    let allowed = |name: &str| within.is_none_or(|w| w.contains(name));
    let forms = variants(term, kind, lang);
    for v in &forms {
        let mut hits: Vec<&str> = ont.lookup(kind, v).into_iter().filter(|n| allowed(n)).collect();
        if !hits.is_empty() {
            hits.sort_by(|a, b| a.chars().count().cmp(&b.chars().count()).then(a.cmp(b)));
            return MappingResult::Exact { name: hits[0].to_string() };
        }
    }
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for (name, label) in ont.labels(kind) {
        if !allowed(name) {
            continue;
        }
        let score = forms.iter().map(|v| similarity(v, label)).fold(0.0, f64::max);
        let slot = best.entry(name).or_insert(0.0);
        *slot = slot.max(score);
    }
    let mut candidates: Vec<(String, f64)> =
        best.into_iter().filter(|(_, s)| *s >= threshold).map(|(n, s)| (n.to_string(), s)).collect();
    if candidates.is_empty() {
        return MappingResult::NoMatch;
    }
    candidates.sort_by(rank);
    MappingResult::Candidates { candidates }
}

pub fn map_term(term: &str, kind: ElementKind, ont: &Ontology, threshold: f64, lang: Language) -> MappingResult {
    map_term_within(term, kind, ont, threshold, lang, None)
}

/// An ontology-resolved query tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OntologyTuple {
    pub sub: QuestionStructure,
    pub category: String,
    pub term1: Option<Element>,
    pub relation: Option<String>,
    pub term2: Option<Element>,
    pub term3: Option<String>,
    /// A numeric Term1 of a comparison tuple, kept literal.
    pub operand: Option<String>,
    /// How each slot was resolved.
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingChoice {
    pub choice_id: String,
    pub tuple: usize,
    pub slot: String,
    pub term: String,
    pub candidates: Vec<String>,
    pub context: String,
}

/// Selections made so far, keyed by choice id.
pub type ChoiceLog = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("tuple {tuple}: cannot map {slot} `{term}` onto the ontology")]
    NoMatch { tuple: usize, slot: String, term: String },
    #[error("`{selection}` is not one of the offered candidates for {choice_id}")]
    InvalidChoice { choice_id: String, selection: String },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum MapOutcome<T> {
    Mapped { value: T },
    Pending { choice: PendingChoice },
}

pub fn choice_id(tuple: usize, slot: &str) -> String {
    format!("t{tuple}.{slot}")
}

/// Record `selection` for `pending`, rejecting names that were not offered.
pub fn resolve_choice(pending: &PendingChoice, selection: &str, log: &mut ChoiceLog) -> Result<(), MappingError> {
    if !pending.candidates.iter().any(|c| c == selection) {
        return Err(MappingError::InvalidChoice {
            choice_id: pending.choice_id.clone(),
            selection: selection.to_string(),
        });
    }
    log.insert(pending.choice_id.clone(), selection.to_string());
    Ok(())
}

struct Ctx<'a> {
    ont: &'a Ontology,
    threshold: f64,
    lang: Language,
    log: &'a ChoiceLog,
    tuple: usize,
    context: String,
}

enum Step<T> {
    Done(T),
    Ask(PendingChoice),
}

impl Ctx<'_> {
    fn choose(&self, slot: &str, term: &str, candidates: Vec<String>) -> Result<Step<String>, MappingError> {
        if candidates.len() == 1 {
            return Ok(Step::Done(candidates[0].clone()));
        }
        let id = choice_id(self.tuple, slot);
        match self.log.get(&id) {
            Some(sel) if candidates.contains(sel) => Ok(Step::Done(sel.clone())),
            Some(sel) => Err(MappingError::InvalidChoice { choice_id: id, selection: sel.clone() }),
            None => Ok(Step::Ask(PendingChoice {
                choice_id: id,
                tuple: self.tuple,
                slot: slot.to_string(),
                term: term.to_string(),
                candidates,
                context: self.context.clone(),
            })),
        }
    }

    /// Map a term trying `order` kinds: exact hits win over similarity.
    fn term(
        &self,
        slot: &str,
        term: &str,
        order: [ElementKind; 2],
        notes: &mut Vec<String>,
    ) -> Result<Step<Element>, MappingError> {
        let results: Vec<(ElementKind, MappingResult)> =
            order.iter().map(|k| (*k, map_term(term, *k, self.ont, self.threshold, self.lang))).collect();
        if let Some((kind, MappingResult::Exact { name })) =
            results.iter().find(|(_, r)| matches!(r, MappingResult::Exact { .. }))
        {
            notes.push(format!("{slot} `{term}` -> {kind:?} `{name}` (exact)").to_lowercase());
            return Ok(Step::Done(Element { kind: *kind, name: name.clone() }));
        }
        for (kind, r) in &results {
            if let MappingResult::Candidates { candidates } = r {
                let names = candidates.iter().map(|(n, _)| n.clone()).collect();
                return Ok(match self.choose(slot, term, names)? {
                    Step::Done(name) => {
                        notes.push(format!("{slot} `{term}` -> {kind:?} `{name}` (similarity)").to_lowercase());
                        Step::Done(Element { kind: *kind, name })
                    }
                    Step::Ask(p) => Step::Ask(p),
                });
            }
        }
        Err(MappingError::NoMatch { tuple: self.tuple, slot: slot.to_string(), term: term.to_string() })
    }
}

/// Relations with some assertion compatible with the mapped side(s).
fn potential_relations(
    ont: &Ontology,
    t1: Option<&Element>,
    t2: Option<&Element>,
) -> Result<BTreeSet<String>, OntologyError> {
    let extension = |e: &Element| -> Result<BTreeSet<String>, OntologyError> {
        match e.kind {
            ElementKind::Concept => ont.instances_of(&e.name, true),
            _ => Ok(BTreeSet::from([e.name.clone()])),
        }
    };
    let subjects = t1.map(extension).transpose()?;
    let objects = t2.map(extension).transpose()?;
    let forward = |a: &&Assertion| {
        subjects.as_ref().is_none_or(|s| s.contains(&a.s)) && objects.as_ref().is_none_or(|o| o.contains(&a.o))
    };
    // Stored the other way round; only meaningful when Term1 is given.
    let backward = |a: &&Assertion| {
        subjects.as_ref().is_some_and(|s| s.contains(&a.o)) && objects.as_ref().is_none_or(|o| o.contains(&a.s))
    };
    Ok(ont.assertions().iter().filter(|a| forward(a) || backward(a)).map(|a| a.r.clone()).collect())
}

pub fn map_query_tuple(
    t: &QueryTuple,
    index: usize,
    ont: &Ontology,
    threshold: f64,
    lang: Language,
    log: &ChoiceLog,
) -> Result<MapOutcome<OntologyTuple>, MappingError> {
    let ctx = Ctx { ont, threshold, lang, log, tuple: index, context: t.to_string() };
    let mut notes = Vec::new();
    macro_rules! step {
        ($e:expr) => {
            match $e? {
                Step::Done(v) => v,
                Step::Ask(choice) => return Ok(MapOutcome::Pending { choice }),
            }
        };
    }
    use ElementKind::{Concept, Instance};
    let numeric_sub = matches!(t.sub, QuestionStructure::Compare | QuestionStructure::ThreeTerm);
    let operand = t.t1.clone().filter(|s| numeric_sub && parse_number(s, lang).is_some());
    let term1 = match &t.t1 {
        Some(_) if operand.is_some() => None,
        Some(s) => Some(step!(ctx.term("t1", s, [Concept, Instance], &mut notes))),
        None => None,
    };
    let term2 = match &t.t2 {
        Some(s) => Some(step!(ctx.term("t2", s, [Instance, Concept], &mut notes))),
        None => None,
    };
    let potential = potential_relations(ont, term1.as_ref(), term2.as_ref())?;
    let relation = match &t.rel {
        Some(text) => {
            // Relations linking the two terms narrow the search; an attribute
            // that links neither (a compared value) falls back to all relations.
            let scoped = if potential.is_empty() { None } else { Some(&potential) };
            let mut found = map_term_within(text, ElementKind::Relation, ont, threshold, lang, scoped);
            if scoped.is_some() && found == MappingResult::NoMatch {
                found = map_term_within(text, ElementKind::Relation, ont, threshold, lang, None);
            }
            match found {
                MappingResult::Exact { name } => {
                    notes.push(format!("rel `{text}` -> relation `{name}` (exact)"));
                    Some(name)
                }
                MappingResult::Candidates { candidates } => {
                    let names = candidates.into_iter().map(|(n, _)| n).collect();
                    let name = step!(ctx.choose("rel", text, names));
                    notes.push(format!("rel `{text}` -> relation `{name}` (similarity)"));
                    Some(name)
                }
                MappingResult::NoMatch => {
                    return Err(MappingError::NoMatch { tuple: index, slot: "rel".into(), term: text.clone() })
                }
            }
        }
        None if term1.is_some() && term2.is_some() && !potential.is_empty() => {
            let name = step!(ctx.choose("rel", "?", potential.into_iter().collect()));
            notes.push(format!("rel ? -> relation `{name}` (potential relation)"));
            Some(name)
        }
        None => None,
    };
    Ok(MapOutcome::Mapped {
        value: OntologyTuple {
            sub: t.sub,
            category: t.cat.clone(),
            term1,
            relation,
            term2,
            term3: t.t3.clone(),
            operand,
            provenance: notes,
        },
    })
}

/// Map every tuple of `ir`, stopping at the first pending choice.
pub fn map_ir(
    ir: &IntermediateRepresentation,
    ont: &Ontology,
    threshold: f64,
    lang: Language,
    log: &ChoiceLog,
) -> Result<MapOutcome<Vec<OntologyTuple>>, MappingError> {
    let mut out = Vec::new();
    for (i, t) in ir.tuples.iter().enumerate() {
        match map_query_tuple(t, i, ont, threshold, lang, log)? {
            MapOutcome::Mapped { value } => out.push(value),
            MapOutcome::Pending { choice } => return Ok(MapOutcome::Pending { choice }),
        }
    }
    Ok(MapOutcome::Mapped { value: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ont() -> Ontology {
        Ontology::from_json_str(
            r#"{
            "concepts": [{"name": "sinh viên"}, {"name": "lớp"}, {"name": "bộ môn"}],
            "relations": [{"name": "học", "kind": "object"}, {"name": "thuộc", "kind": "object"}],
            "instances": [
                {"name": "lớp K50 khoa học máy tính", "concepts": ["lớp"]},
                {"name": "bộ môn khoa học máy tính", "synonyms": ["khoa học máy tính"], "concepts": ["bộ môn"]},
                {"name": "An", "concepts": ["sinh viên"]}
            ],
            "assertions": [
                {"s": "An", "r": "học", "o": "lớp K50 khoa học máy tính"},
                {"s": "lớp K50 khoa học máy tính", "r": "thuộc", "o": "bộ môn khoa học máy tính"}
            ]}"#,
        )
        .unwrap()
    }

    fn tuple(t1: &str, rel: Option<&str>, t2: &str) -> QueryTuple {
        QueryTuple {
            sub: QuestionStructure::Normal,
            cat: "List".into(),
            t1: Some(t1.into()),
            rel: rel.map(Into::into),
            t2: Some(t2.into()),
            t3: None,
        }
    }

    #[test]
    fn similarity_values() {
        assert_eq!(similarity("học", "học"), 1.0);
        assert_eq!(similarity("enroll", "enrolled"), 0.75);
        assert_eq!(similarity("hometown", "home"), 0.5);
        assert_eq!(similarity("", ""), 1.0);
        assert_eq!(similarity("ABC", " abc "), 1.0);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn term_mapping() {
        let o = ont();
        let lang = Language::Vi;
        assert_eq!(
            map_term("sinh viên", ElementKind::Concept, &o, 0.8, lang),
            MappingResult::Exact { name: "sinh viên".into() }
        );
        assert_eq!(
            map_term("tất cả các sinh viên", ElementKind::Concept, &o, 0.8, lang),
            MappingResult::Exact { name: "sinh viên".into() }
        );
        let MappingResult::Candidates { candidates } =
            map_term("lớp khoa học máy tính", ElementKind::Instance, &o, 0.8, lang)
        else {
            panic!("expected candidates")
        };
        let names: Vec<&str> = candidates.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["lớp K50 khoa học máy tính", "bộ môn khoa học máy tính"]);
        assert!(candidates.iter().all(|(_, s)| *s >= 0.8));
        assert_eq!(map_term("blorp", ElementKind::Instance, &o, 0.8, lang), MappingResult::NoMatch);
    }

    #[test]
    fn tuple_mapping_with_choices() {
        let o = ont();
        let lang = Language::Vi;
        let mut log = ChoiceLog::new();
        let t = tuple("sinh viên", Some("học"), "lớp khoa học máy tính");
        let MapOutcome::Pending { choice } = map_query_tuple(&t, 0, &o, 0.8, lang, &log).unwrap() else {
            panic!("expected a pending choice")
        };
        assert_eq!(choice.choice_id, "t0.t2");
        assert_eq!(choice.candidates.len(), 2);
        assert!(resolve_choice(&choice, "nowhere", &mut log).is_err());
        resolve_choice(&choice, "lớp K50 khoa học máy tính", &mut log).unwrap();
        let MapOutcome::Mapped { value } = map_query_tuple(&t, 0, &o, 0.8, lang, &log).unwrap() else {
            panic!("expected a mapped tuple")
        };
        assert_eq!(value.term1, Some(Element::concept("sinh viên")));
        assert_eq!(value.relation.as_deref(), Some("học"));
        assert_eq!(value.term2, Some(Element::instance("lớp K50 khoa học máy tính")));

        let unknown = tuple("sinh viên", Some("học"), "blorp");
        assert!(matches!(
            map_query_tuple(&unknown, 0, &o, 0.8, lang, &log),
            Err(MappingError::NoMatch { slot, .. }) if slot == "t2"
        ));

        // Unknown relation with a single potential relation is selected.
        let unkn = tuple("sinh viên", None, "lớp K50 khoa học máy tính");
        let MapOutcome::Mapped { value } = map_query_tuple(&unkn, 0, &o, 0.8, lang, &log).unwrap() else {
            panic!()
        };
        assert_eq!(value.relation.as_deref(), Some("học"));
    }
}
