//! Evaluates ontology tuples and composes answers by question structure.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::ir::QuestionStructure;
use crate::language::{parse_number, Language};
use crate::mapper::OntologyTuple;
use crate::ontology::{fold, Element, ElementKind, Ontology, OntologyError, RelationKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnswerError {
    #[error("unsupported comparison `{0}`")]
    Unsupported(String),
    #[error("cannot read a comparison from `{0}`")]
    BadComparison(String),
    #[error("{structure} expects {expected} tuple(s), got {found}")]
    Arity { structure: QuestionStructure, expected: &'static str, found: usize },
    #[error("tuple {tuple}: {message}")]
    Incomplete { tuple: usize, message: String },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum TupleAnswer {
    Instances(BTreeSet<String>),
    Values(BTreeSet<String>),
    Boolean(bool),
    Count(usize),
    /// Separate answers of independent sub-questions.
    Combined(Vec<TupleAnswer>),
}

impl TupleAnswer {
    pub fn as_set(&self) -> Option<&BTreeSet<String>> {
        match self {
            TupleAnswer::Instances(s) | TupleAnswer::Values(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompareOp {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    /// Superlatives: keep the candidates with the extreme value.
    Max,
    Min,
}

impl CompareOp {
    pub fn holds(self, left: f64, right: f64) -> bool {
        match self {
            CompareOp::Gt => left > right,
            CompareOp::Ge => left >= right,
            CompareOp::Lt => left < right,
            CompareOp::Le => left <= right,
            CompareOp::Eq => left == right,
            CompareOp::Max | CompareOp::Min => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub op: CompareOp,
    pub value: Option<f64>,
}

const VI_OPS: &[(&str, CompareOp)] = &[
    ("lớn hơn hoặc bằng", CompareOp::Ge),
    ("nhỏ hơn hoặc bằng", CompareOp::Le),
    ("nhiều hơn", CompareOp::Gt),
    ("lớn hơn", CompareOp::Gt),
    ("cao hơn", CompareOp::Gt),
    ("trên", CompareOp::Gt),
    ("ít hơn", CompareOp::Lt),
    ("nhỏ hơn", CompareOp::Lt),
    ("thấp hơn", CompareOp::Lt),
    ("dưới", CompareOp::Lt),
    ("bằng", CompareOp::Eq),
    ("là", CompareOp::Eq),
];
const VI_SUPERLATIVES: &[(&str, CompareOp)] = &[
    ("cao nhất", CompareOp::Max),
    ("thấp nhất", CompareOp::Min),
    ("lớn nhất", CompareOp::Max),
    ("nhỏ nhất", CompareOp::Min),
    ("nhiều nhất", CompareOp::Max),
    ("ít nhất", CompareOp::Min),
];
const EN_OPS: &[(&str, CompareOp)] = &[
    ("more than", CompareOp::Gt),
    ("greater than", CompareOp::Gt),
    ("higher than", CompareOp::Gt),
    ("over", CompareOp::Gt),
    ("at least", CompareOp::Ge),
    ("less than", CompareOp::Lt),
    ("fewer than", CompareOp::Lt),
    ("lower than", CompareOp::Lt),
    ("under", CompareOp::Lt),
    ("at most", CompareOp::Le),
    ("exactly", CompareOp::Eq),
    ("equal to", CompareOp::Eq),
];
const EN_SUPERLATIVES: &[(&str, CompareOp)] = &[
    ("highest", CompareOp::Max),
    ("lowest", CompareOp::Min),
    ("most", CompareOp::Max),
    ("least", CompareOp::Min),
    ("largest", CompareOp::Max),
    ("smallest", CompareOp::Min),
    ("biggest", CompareOp::Max),
];
/// Superlatives whose ordering depends on the relation, not the value.
const EN_UNRANKED: &[&str] = &["oldest", "youngest", "best", "worst"];

/// Read a comparison payload such as "more than three" or "lớn hơn".
pub fn parse_comparison(text: &str, lang: Language) -> Result<Comparison, AnswerError> {
    let t = fold(text);
    let (ops, sups) = match lang {
        Language::Vi => (VI_OPS, VI_SUPERLATIVES),
        Language::En => (EN_OPS, EN_SUPERLATIVES),
    };
    let has_word = |w: &str| t == w || t.starts_with(&format!("{w} ")) || t.ends_with(&format!(" {w}"));
    if lang == Language::En && EN_UNRANKED.iter().any(|w| has_word(w)) {
        return Err(AnswerError::Unsupported(text.trim().to_string()));
    }
    for (phrase, op) in ops {
        if let Some(rest) = t.strip_prefix(phrase) {
            if rest.is_empty() || rest.starts_with(' ') {
                let rest = rest.trim();
                let value = if rest.is_empty() {
                    None
                } else {
                    Some(parse_number(rest, lang).ok_or_else(|| AnswerError::BadComparison(text.to_string()))?)
                };
                return Ok(Comparison { op: *op, value });
            }
        }
    }
    if let Some((_, op)) = sups.iter().find(|(w, _)| has_word(w)) {
        return Ok(Comparison { op: *op, value: None });
    }
    Err(AnswerError::BadComparison(text.to_string()))
}

fn extension(ont: &Ontology, e: &Element) -> Result<BTreeSet<String>, AnswerError> {
    Ok(match e.kind {
        ElementKind::Concept => ont.instances_of(&e.name, true)?,
        _ => BTreeSet::from([e.name.clone()]),
    })
}

/// Subjects s with an assertion (s, r, o), each constraint optional. When
/// the subject side is typed, assertions stated the other way round, (o, r,
/// s), also count: "which university does X attend" is stored as (X, r, u).
fn select(
    ont: &Ontology,
    subjects: Option<&BTreeSet<String>>,
    relation: Option<&str>,
    objects: Option<&BTreeSet<String>>,
) -> BTreeSet<String> {
    let rel_ok = |r: &String| relation.is_none_or(|x| r == x);
    let mut out: BTreeSet<String> = ont
        .assertions()
        .iter()
        .filter(|a| subjects.is_none_or(|s| s.contains(&a.s)))
        .filter(|a| rel_ok(&a.r))
        .filter(|a| objects.is_none_or(|o| o.contains(&a.o)))
        .map(|a| a.s.clone())
        .collect();
    if let Some(subjects) = subjects {
        out.extend(
            ont.assertions()
                .iter()
                .filter(|a| subjects.contains(&a.o) && rel_ok(&a.r))
                .filter(|a| objects.is_none_or(|o| o.contains(&a.s)))
                .map(|a| a.o.clone()),
        );
    }
    out
}

fn count_of(answer: &TupleAnswer) -> Option<f64> {
    match answer {
        TupleAnswer::Count(n) => Some(*n as f64),
        TupleAnswer::Instances(s) | TupleAnswer::Values(s) => {
            if s.len() == 1 {
                s.iter().next().and_then(|v| v.parse().ok())
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Evaluate one tuple. `substitute` is the answer of a Clause's second
/// tuple standing in for the missing Term2.
pub fn answer_tuple_with(
    ot: &OntologyTuple,
    index: usize,
    ont: &Ontology,
    lang: Language,
    substitute: Option<&TupleAnswer>,
) -> Result<TupleAnswer, AnswerError> {
    let subjects = ot.term1.as_ref().map(|e| extension(ont, e)).transpose()?;
    let objects = match substitute.and_then(TupleAnswer::as_set) {
        Some(s) if ot.sub != QuestionStructure::Compare => Some(s.clone()),
        _ => ot.term2.as_ref().map(|e| extension(ont, e)).transpose()?,
    };
    let relation = ot.relation.as_deref();
    match ot.sub {
        QuestionStructure::Definition => {
            let target = ot.term2.as_ref().ok_or_else(|| AnswerError::Incomplete {
                tuple: index,
                message: "a definition needs Term2".into(),
            })?;
            Ok(match target.kind {
                ElementKind::Instance => TupleAnswer::Values(
                    ont.instance(&target.name)
                        .map(|x| x.concepts.iter().cloned().collect())
                        .unwrap_or_default(),
                ),
                _ => TupleAnswer::Instances(ont.instances_of(&target.name, true)?),
            })
        }
        QuestionStructure::Compare => {
            let payload = ot.term3.as_deref().ok_or_else(|| AnswerError::Incomplete {
                tuple: index,
                message: "a comparison needs Term3".into(),
            })?;
            let cmp = parse_comparison(payload, lang)?;
            let superlative = matches!(cmp.op, CompareOp::Max | CompareOp::Min);
            let bound = cmp.value.or_else(|| ot.operand.as_deref().and_then(|o| parse_number(o, lang)));
            if let Some(n) = substitute.and_then(count_of).filter(|_| !superlative) {
                let bound = bound.ok_or_else(|| AnswerError::BadComparison(payload.to_string()))?;
                return Ok(TupleAnswer::Boolean(cmp.op.holds(n, bound)));
            }
            let bound = match bound {
                Some(b) => b,
                None if superlative => 0.0,
                None => return Err(AnswerError::BadComparison(payload.to_string())),
            };
            let candidates = match substitute.and_then(TupleAnswer::as_set) {
                Some(s) => s.clone(),
                None => {
                    let base = subjects.clone().ok_or_else(|| AnswerError::Incomplete {
                        tuple: index,
                        message: "nothing to compare".into(),
                    })?;
                    match &objects {
                        Some(o) => select(ont, Some(&base), None, Some(o)),
                        None => base,
                    }
                }
            };
            let rel = relation.ok_or_else(|| AnswerError::Incomplete {
                tuple: index,
                message: "a comparison needs the compared relation".into(),
            })?;
            if superlative {
                let mut scored = Vec::new();
                for s in candidates {
                    let values: Vec<f64> = ont.values_of(&s, rel)?.iter().filter_map(|a| a.numeric()).collect();
                    let best = if cmp.op == CompareOp::Max {
                        values.into_iter().reduce(f64::max)
                    } else {
                        values.into_iter().reduce(f64::min)
                    };
                    if let Some(v) = best {
                        scored.push((s, v));
                    }
                }
                let pick = if cmp.op == CompareOp::Max { f64::max } else { f64::min };
                let Some(extreme) = scored.iter().map(|(_, v)| *v).reduce(pick) else {
                    return Ok(TupleAnswer::Instances(BTreeSet::new()));
                };
                return Ok(TupleAnswer::Instances(
                    scored.into_iter().filter(|(_, v)| *v == extreme).map(|(s, _)| s).collect(),
                ));
            }
            let mut out = BTreeSet::new();
            for s in candidates {
                if ont.values_of(&s, rel)?.iter().any(|a| a.numeric().is_some_and(|v| cmp.op.holds(v, bound))) {
                    out.insert(s);
                }
            }
            Ok(TupleAnswer::Instances(out))
        }
        QuestionStructure::ThreeTerm => {
            let base = select(ont, subjects.as_ref(), relation, objects.as_ref());
            let t3 = ot.term3.as_deref().ok_or_else(|| AnswerError::Incomplete {
                tuple: index,
                message: "Term3 is missing".into(),
            })?;
            if let Some(n) = parse_number(t3, lang) {
                return Ok(TupleAnswer::Boolean(base.len() as f64 == n));
            }
            let third: BTreeSet<String> = ont.lookup(ElementKind::Instance, t3).into_iter().map(String::from).collect();
            Ok(TupleAnswer::Instances(select(ont, Some(&base), None, Some(&third))))
        }
        _ => {
            if let (Some(ElementKind::Instance), None, Some(rel)) =
                (ot.term1.as_ref().map(|e| e.kind), &objects, relation)
            {
                let subject = &ot.term1.as_ref().expect("matched").name;
                if ont.relation(rel).is_some_and(|r| r.kind == RelationKind::Datatype) {
                    return Ok(TupleAnswer::Values(
                        ont.values_of(subject, rel)?.iter().map(|a| a.o.clone()).collect(),
                    ));
                }
            }
            Ok(TupleAnswer::Instances(select(ont, subjects.as_ref(), relation, objects.as_ref())))
        }
    }
}

pub fn answer_tuple(ot: &OntologyTuple, ont: &Ontology, lang: Language) -> Result<TupleAnswer, AnswerError> {
    answer_tuple_with(ot, 0, ont, lang, None)
}

fn arity(structure: QuestionStructure, n: usize) -> Result<(), AnswerError> {
    let ok = if structure.is_simple() { n == 1 } else { n >= 2 };
    if ok {
        Ok(())
    } else {
        Err(AnswerError::Arity { structure, expected: if structure.is_simple() { "1" } else { "2+" }, found: n })
    }
}

fn sets(parts: &[TupleAnswer]) -> Vec<&BTreeSet<String>> {
    parts.iter().filter_map(TupleAnswer::as_set).collect()
}

/// Shape a tuple answer by its category: counts become `Count`.
pub fn by_category(category: &str, lang: Language, answer: TupleAnswer) -> TupleAnswer {
    match (&answer, lang.is_count_category(category)) {
        (TupleAnswer::Instances(s) | TupleAnswer::Values(s), true) => TupleAnswer::Count(s.len()),
        _ => answer,
    }
}

/// Combine sub-question answers by the question structure.
pub fn compose(
    structure: QuestionStructure,
    parts: Vec<TupleAnswer>,
    tuples: &[OntologyTuple],
    ont: &Ontology,
) -> Result<TupleAnswer, AnswerError> {
    arity(structure, parts.len())?;
    let all_sets = || {
        let s = sets(&parts);
        (s.len() == parts.len()).then_some(s)
    };
    let kind_of = |set: BTreeSet<String>| {
        if parts.iter().all(|p| matches!(p, TupleAnswer::Instances(_))) {
            TupleAnswer::Instances(set)
        } else {
            TupleAnswer::Values(set)
        }
    };
    match structure {
        QuestionStructure::And | QuestionStructure::AffirmMoreTuples => {
            let s = all_sets().ok_or_else(|| AnswerError::Incomplete {
                tuple: 0,
                message: "sub-answers are not sets".into(),
            })?;
            let mut acc = s[0].clone();
            for other in &s[1..] {
                acc = acc.intersection(other).cloned().collect();
            }
            if structure == QuestionStructure::AffirmMoreTuples {
                Ok(TupleAnswer::Boolean(!acc.is_empty()))
            } else {
                Ok(kind_of(acc))
            }
        }
        QuestionStructure::Or => {
            let s = all_sets().ok_or_else(|| AnswerError::Incomplete {
                tuple: 0,
                message: "sub-answers are not sets".into(),
            })?;
            Ok(kind_of(s.into_iter().flatten().cloned().collect()))
        }
        QuestionStructure::Combine => Ok(TupleAnswer::Combined(parts)),
        QuestionStructure::Affirm => {
            let part = parts.into_iter().next().expect("arity checked");
            let linked = match &part {
                TupleAnswer::Boolean(b) => *b,
                TupleAnswer::Count(n) => *n > 0,
                other => other.as_set().is_some_and(|s| !s.is_empty()),
            };
            let t = &tuples[0];
            let member = match (&t.term1, &t.term2) {
                (Some(c), Some(x)) if c.kind == ElementKind::Concept && x.kind == ElementKind::Instance => {
                    ont.is_member(&x.name, &c.name)?
                }
                _ => false,
            };
            Ok(TupleAnswer::Boolean(linked || member))
        }
        QuestionStructure::Affirm3Term => {
            let part = parts.into_iter().next().expect("arity checked");
            Ok(match part {
                TupleAnswer::Boolean(b) => TupleAnswer::Boolean(b),
                other => TupleAnswer::Boolean(other.as_set().is_some_and(|s| !s.is_empty())),
            })
        }
        _ => Ok(parts.into_iter().next().expect("arity checked")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    /// One of "list", "count", "bool", "values".
    pub kind: String,
    pub items: Vec<String>,
    pub text: String,
    pub provenance: Vec<OntologyTuple>,
}

/// Render a result for the question category.
pub fn render(category: &str, lang: Language, result: &TupleAnswer) -> Answer {
    let yes_no = |b: bool| {
        match (lang, b) {
            (Language::Vi, true) => "có",
            (Language::Vi, false) => "không",
            (Language::En, true) => "yes",
            (Language::En, false) => "no",
        }
        .to_string()
    };
    let answer = |kind: &str, items: Vec<String>, text: String| Answer {
        kind: kind.to_string(),
        items,
        text,
        provenance: vec![],
    };
    match result {
        TupleAnswer::Boolean(b) => answer("bool", vec![], yes_no(*b)),
        TupleAnswer::Count(n) => answer("count", vec![], n.to_string()),
        TupleAnswer::Instances(s) | TupleAnswer::Values(s) => {
            if lang.is_count_category(category) {
                answer("count", vec![], s.len().to_string())
            } else if lang.is_yes_no_category(category) {
                answer("bool", vec![], yes_no(!s.is_empty()))
            } else {
                let items: Vec<String> = s.iter().cloned().collect();
                let kind = if matches!(result, TupleAnswer::Values(_)) { "values" } else { "list" };
                answer(kind, items.clone(), items.join("\n"))
            }
        }
        TupleAnswer::Combined(parts) => {
            let mut items = Vec::new();
            for (i, p) in parts.iter().enumerate() {
                let sub = render(category, lang, p);
                if sub.items.is_empty() {
                    items.push(format!("{}. {}", i + 1, sub.text));
                } else {
                    items.extend(sub.items.iter().map(|x| format!("{}. {x}", i + 1)));
                }
            }
            answer("list", items.clone(), items.join("\n"))
        }
    }
}

/// Answer a whole mapped question.
pub fn answer_question(
    structure: QuestionStructure,
    tuples: &[OntologyTuple],
    ont: &Ontology,
    lang: Language,
) -> Result<Answer, AnswerError> {
    arity(structure, tuples.len())?;
    let category = tuples[0].category.clone();
    let result = if structure == QuestionStructure::Clause {
        let second = answer_tuple_with(&tuples[1], 1, ont, lang, None)?;
        let second = by_category(&tuples[1].category, lang, second);
        answer_tuple_with(&tuples[0], 0, ont, lang, Some(&second))?
    } else {
        let mut parts = Vec::new();
        for (i, t) in tuples.iter().enumerate() {
            let sub = if structure == QuestionStructure::Compare { QuestionStructure::Compare } else { t.sub };
            let eval = OntologyTuple { sub, ..t.clone() };
            let part = answer_tuple_with(&eval, i, ont, lang, None)?;
            parts.push(if structure == QuestionStructure::Combine { by_category(&t.category, lang, part) } else { part });
        }
        compose(structure, parts, tuples, ont)?
    };
    let mut answer = render(&category, lang, &result);
    answer.provenance = tuples.to_vec();
    Ok(answer)
}
