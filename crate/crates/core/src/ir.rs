//! Question structures, query tuples and the conclusion templates that build
//! them from a fired rule's annotations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::annotation::{normalize_text, Document};
use crate::language::{strip_words, Language};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuestionStructure {
    Normal,
    UnknTerm,
    UnknRel,
    Definition,
    Compare,
    ThreeTerm,
    Clause,
    Combine,
    And,
    Or,
    AffirmMoreTuples,
    Affirm,
    Affirm3Term,
}

impl QuestionStructure {
    pub const ALL: [QuestionStructure; 13] = [
        QuestionStructure::Normal,
        QuestionStructure::UnknTerm,
        QuestionStructure::UnknRel,
        QuestionStructure::Definition,
        QuestionStructure::Compare,
        QuestionStructure::ThreeTerm,
        QuestionStructure::Clause,
        QuestionStructure::Combine,
        QuestionStructure::And,
        QuestionStructure::Or,
        QuestionStructure::AffirmMoreTuples,
        QuestionStructure::Affirm,
        QuestionStructure::Affirm3Term,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuestionStructure::Normal => "Normal",
            QuestionStructure::UnknTerm => "UnknTerm",
            QuestionStructure::UnknRel => "UnknRel",
            QuestionStructure::Definition => "Definition",
            QuestionStructure::Compare => "Compare",
            QuestionStructure::ThreeTerm => "ThreeTerm",
            QuestionStructure::Clause => "Clause",
            QuestionStructure::Combine => "Combine",
            QuestionStructure::And => "And",
            QuestionStructure::Or => "Or",
            QuestionStructure::AffirmMoreTuples => "Affirm_MoreTuples",
            QuestionStructure::Affirm => "Affirm",
            QuestionStructure::Affirm3Term => "Affirm_3Term",
        }
    }

    /// Structures carrying exactly one tuple.
    pub fn is_simple(self) -> bool {
        !matches!(
            self,
            QuestionStructure::Clause
                | QuestionStructure::Combine
                | QuestionStructure::And
                | QuestionStructure::Or
                | QuestionStructure::AffirmMoreTuples
        )
    }
}

impl fmt::Display for QuestionStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuestionStructure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuestionStructure::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| format!("unknown question structure `{s}`"))
    }
}

impl Serialize for QuestionStructure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for QuestionStructure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTuple {
    pub sub: QuestionStructure,
    pub cat: String,
    pub t1: Option<String>,
    pub rel: Option<String>,
    pub t2: Option<String>,
    pub t3: Option<String>,
}

impl fmt::Display for QueryTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &Option<String>| s.clone().unwrap_or_else(|| "?".into());
        write!(
            f,
            "({}, {}, {}, {}, {}, {})",
            self.sub,
            self.cat,
            show(&self.t1),
            show(&self.rel),
            show(&self.t2),
            show(&self.t3)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntermediateRepresentation {
    pub structure: QuestionStructure,
    pub tuples: Vec<QueryTuple>,
}

impl fmt::Display for IntermediateRepresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.structure)?;
        for t in &self.tuples {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

fn tuple_violations(t: &QueryTuple, i: usize, out: &mut Vec<String>) {
    let mut need_absent = |present: bool, slot: &str, why: QuestionStructure| {
        if present {
            out.push(format!("tuple {i}: {why} tuple must not have {slot}"));
        }
    };
    match t.sub {
        QuestionStructure::Normal => need_absent(t.t3.is_some(), "term3", t.sub),
        QuestionStructure::UnknTerm => {
            need_absent(t.t1.is_some(), "term1", t.sub);
            need_absent(t.t3.is_some(), "term3", t.sub);
        }
        QuestionStructure::UnknRel => {
            need_absent(t.rel.is_some(), "relation", t.sub);
            need_absent(t.t3.is_some(), "term3", t.sub);
        }
        QuestionStructure::Definition => {
            need_absent(t.t1.is_some(), "term1", t.sub);
            need_absent(t.rel.is_some(), "relation", t.sub);
            need_absent(t.t3.is_some(), "term3", t.sub);
            if t.t2.is_none() {
                out.push(format!("tuple {i}: Definition tuple needs term2"));
            }
        }
        QuestionStructure::ThreeTerm | QuestionStructure::Compare if t.t3.is_none() => {
            out.push(format!("tuple {i}: {} tuple needs term3", t.sub));
        }
        _ => {}
    }
}

/// Tuple-count and slot-presence checks for the declared structure.
pub fn validate_ir(ir: &IntermediateRepresentation) -> Vec<String> {
    let mut out = Vec::new();
    let n = ir.tuples.len();
    if n == 0 {
        out.push("representation has no tuples".to_string());
        return out;
    }
    if ir.structure.is_simple() && n != 1 {
        out.push(format!("{} needs exactly 1 tuple, found {n}", ir.structure));
    }
    if !ir.structure.is_simple() && n < 2 {
        out.push(format!("{} needs at least 2 tuples, found {n}", ir.structure));
    }
    let simple = matches!(
        ir.structure,
        QuestionStructure::Normal
            | QuestionStructure::UnknTerm
            | QuestionStructure::UnknRel
            | QuestionStructure::Definition
            | QuestionStructure::ThreeTerm
    );
    for (i, t) in ir.tuples.iter().enumerate() {
        match ir.structure {
            _ if simple => {
                if t.sub != ir.structure {
                    out.push(format!("tuple {i}: sub-structure {} differs from {}", t.sub, ir.structure));
                }
                tuple_violations(t, i, &mut out);
            }
            QuestionStructure::Compare => {
                if t.t3.is_none() {
                    out.push(format!("tuple {i}: Compare question needs a comparison in term3"));
                }
            }
            QuestionStructure::Affirm => {
                if !matches!(t.sub, QuestionStructure::Normal | QuestionStructure::UnknRel | QuestionStructure::UnknTerm)
                {
                    out.push(format!("tuple {i}: Affirm tuple has sub-structure {}", t.sub));
                }
                tuple_violations(t, i, &mut out);
            }
            QuestionStructure::Affirm3Term => {
                if t.t3.is_none() {
                    out.push(format!("tuple {i}: Affirm_3Term tuple needs term3"));
                }
            }
            _ => tuple_violations(t, i, &mut out),
        }
    }
    out
}

/// [`validate_ir`] plus the category registry of `lang`.
pub fn validate_ir_for(ir: &IntermediateRepresentation, lang: Language) -> Vec<String> {
    let mut out = validate_ir(ir);
    for (i, t) in ir.tuples.iter().enumerate() {
        if !lang.categories().contains(&t.cat.as_str()) {
            out.push(format!("tuple {i}: category `{}` is not registered for {lang}", t.cat));
        }
    }
    out
}

/// One slot of a tuple template.
///
/// Text form: `?`, `"literal"`, `Type` (covered text), `Type.feature`
/// (feature of a posted annotation), `Subject.Colocated.feature`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Absent,
    Literal(String),
    CoveredText(String),
    StructureFeature { annotation: String, feature: String },
    FeatureOf { subject: String, colocated: String, feature: String },
}

impl Slot {
    /// Annotation type names this slot reads.
    pub fn referenced_types(&self) -> Vec<&str> {
        match self {
            Slot::Absent | Slot::Literal(_) => vec![],
            Slot::CoveredText(t) => vec![t],
            Slot::StructureFeature { annotation, .. } => vec![annotation],
            Slot::FeatureOf { subject, .. } => vec![subject],
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Absent => f.write_str("?"),
            Slot::Literal(s) => write!(f, "\"{s}\""),
            Slot::CoveredText(t) => f.write_str(t),
            Slot::StructureFeature { annotation, feature } => write!(f, "{annotation}.{feature}"),
            Slot::FeatureOf { subject, colocated, feature } => write!(f, "{subject}.{colocated}.{feature}"),
        }
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "?" {
            return Ok(Slot::Absent);
        }
        if let Some(inner) = s.strip_prefix('"').and_then(|x| x.strip_suffix('"')) {
            return Ok(Slot::Literal(inner.to_string()));
        }
        let parts: Vec<&str> = s.split('.').collect();
        let ident = |p: &str| !p.is_empty() && p.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !parts.iter().all(|p| ident(p)) {
            return Err(format!("malformed template slot `{s}`"));
        }
        match parts.as_slice() {
            [t] => Ok(Slot::CoveredText(t.to_string())),
            [a, f] => Ok(Slot::StructureFeature { annotation: a.to_string(), feature: f.to_string() }),
            [s, c, f] => Ok(Slot::FeatureOf { subject: s.to_string(), colocated: c.to_string(), feature: f.to_string() }),
            _ => Err(format!("malformed template slot `{s}`")),
        }
    }
}

impl Serialize for Slot {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Slots in tuple order: sub-structure, category, term1, relation, term2, term3.
pub type TupleTemplate = [Slot; 6];

pub const SLOT_NAMES: [&str; 6] = ["sub", "cat", "t1", "rel", "t2", "t3"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConclusionTemplate {
    pub structure: QuestionStructure,
    pub tuples: Vec<TupleTemplate>,
}

impl ConclusionTemplate {
    pub fn referenced_types(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.tuples.iter().flat_map(|t| t.iter().flat_map(Slot::referenced_types)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiationError {
    #[error("tuple {tuple} slot {slot}: no `{type_name}` annotation on the document")]
    MissingAnnotation { tuple: usize, slot: &'static str, type_name: String },
    #[error("tuple {tuple} slot {slot}: feature `{feature}` missing on `{type_name}`")]
    MissingFeature { tuple: usize, slot: &'static str, type_name: String, feature: String },
    #[error("tuple {tuple}: `{value}` is not a question structure")]
    BadStructure { tuple: usize, value: String },
    #[error("tuple {tuple}: the question category slot is empty")]
    MissingCategory { tuple: usize },
}

fn read_slot(
    slot: &Slot,
    doc: &Document,
    tuple: usize,
    index: usize,
) -> Result<Option<String>, InstantiationError> {
    let name = SLOT_NAMES[index];
    let first = |type_name: &str| {
        doc.of_type(type_name).into_iter().next().ok_or_else(|| InstantiationError::MissingAnnotation {
            tuple,
            slot: name,
            type_name: type_name.to_string(),
        })
    };
    match slot {
        Slot::Absent => Ok(None),
        Slot::Literal(s) => Ok(Some(s.clone())),
        Slot::CoveredText(t) => Ok(Some(doc.slice(first(t)?.span).to_string())),
        Slot::StructureFeature { annotation, feature } => {
            let ann = first(annotation)?;
            ann.feature(feature).map(|v| Some(v.to_string())).ok_or_else(|| InstantiationError::MissingFeature {
                tuple,
                slot: name,
                type_name: annotation.clone(),
                feature: feature.clone(),
            })
        }
        Slot::FeatureOf { subject, colocated, feature } => {
            let subj = first(subject)?;
            let coloc = doc
                .find_within(subj.span, colocated, None)
                .into_iter()
                .filter_map(|id| doc.get(id))
                .find(|a| a.span == subj.span)
                .ok_or_else(|| InstantiationError::MissingAnnotation {
                    tuple,
                    slot: name,
                    type_name: format!("{colocated} over {subject}"),
                })?;
            coloc.feature(feature).map(|v| Some(v.to_string())).ok_or_else(|| InstantiationError::MissingFeature {
                tuple,
                slot: name,
                type_name: colocated.clone(),
                feature: feature.clone(),
            })
        }
    }
}

/// Term text as it appears in a tuple: covered text without leading
/// question words and determiners; kept whole if nothing would remain.
pub fn term_text(raw: &str, lang: Language) -> String {
    let stripped = strip_words(raw, lang.term_prefixes(), lang.term_suffixes());
    if stripped.is_empty() {
        raw.split_whitespace().collect::<Vec<_>>().join(" ")
    } else {
        stripped
    }
}

pub fn instantiate(
    template: &ConclusionTemplate,
    doc: &Document,
    lang: Language,
) -> Result<IntermediateRepresentation, InstantiationError> {
    let mut tuples = Vec::new();
    for (ti, slots) in template.tuples.iter().enumerate() {
        let mut values: Vec<Option<String>> = Vec::with_capacity(6);
        for (si, slot) in slots.iter().enumerate() {
            let mut v = read_slot(slot, doc, ti, si)?;
            if matches!(slot, Slot::CoveredText(_)) && (si == 2 || si == 4) {
                v = v.map(|s| term_text(&s, lang));
            }
            values.push(v);
        }
        let sub_text = values[0].clone().unwrap_or_else(|| template.structure.name().to_string());
        let sub = sub_text
            .parse()
            .map_err(|_| InstantiationError::BadStructure { tuple: ti, value: sub_text.clone() })?;
        let cat = values[1].clone().ok_or(InstantiationError::MissingCategory { tuple: ti })?;
        tuples.push(QueryTuple {
            sub,
            cat,
            t1: values[2].clone(),
            rel: values[3].clone(),
            t2: values[4].clone(),
            t3: values[5].clone(),
        });
    }
    Ok(IntermediateRepresentation { structure: template.structure, tuples })
}

fn strip_relation(text: &str, lang: Language) -> String {
    strip_words(&normalize_text(text), lang.auxiliaries(), lang.prepositions())
}

fn slot_equivalent(expected: &Option<String>, actual: &Option<String>, relation: bool, lang: Language) -> bool {
    match (expected, actual) {
        (None, None) => true,
        (Some(e), Some(a)) => {
            if relation {
                strip_relation(e, lang) == strip_relation(a, lang)
            } else {
                normalize_text(e) == normalize_text(a)
            }
        }
        _ => false,
    }
}

/// Compare an expected and an actual representation. Text is compared
/// case-insensitively after whitespace normalization; relations also ignore
/// a trailing preposition and a leading auxiliary. Returns a description of
/// the first difference.
pub fn compare_ir(
    expected: &IntermediateRepresentation,
    actual: &IntermediateRepresentation,
    lang: Language,
) -> Result<(), String> {
    if expected.structure != actual.structure {
        return Err(format!("structure: expected {}, got {}", expected.structure, actual.structure));
    }
    if expected.tuples.len() != actual.tuples.len() {
        return Err(format!("tuple count: expected {}, got {}", expected.tuples.len(), actual.tuples.len()));
    }
    for (i, (e, a)) in expected.tuples.iter().zip(&actual.tuples).enumerate() {
        let same = e.sub == a.sub
            && e.cat == a.cat
            && slot_equivalent(&e.t1, &a.t1, false, lang)
            && slot_equivalent(&e.rel, &a.rel, true, lang)
            && slot_equivalent(&e.t2, &a.t2, false, lang)
            && slot_equivalent(&e.t3, &a.t3, false, lang);
        if !same {
            return Err(format!("tuple {i}: expected {e}, got {a}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{Features, Span};

    fn tuple(sub: QuestionStructure, cat: &str, s: [Option<&str>; 4]) -> QueryTuple {
        let o = |x: Option<&str>| x.map(str::to_string);
        QueryTuple { sub, cat: cat.into(), t1: o(s[0]), rel: o(s[1]), t2: o(s[2]), t3: o(s[3]) }
    }

    #[test]
    fn structures_round_trip_names() {
        assert_eq!(QuestionStructure::ALL.len(), 13);
        for q in QuestionStructure::ALL {
            assert_eq!(q.name().parse::<QuestionStructure>(), Ok(q));
        }
        assert!("Sideways".parse::<QuestionStructure>().is_err());
    }

    #[test]
    fn validate_counts_and_slots() {
        use QuestionStructure::*;
        let normal = IntermediateRepresentation {
            structure: Normal,
            tuples: vec![tuple(Normal, "List", [Some("a"), Some("r"), Some("b"), None])],
        };
        assert!(validate_ir(&normal).is_empty());
        let and_one = IntermediateRepresentation { structure: And, tuples: normal.tuples.clone() };
        assert_eq!(validate_ir(&and_one).len(), 1);
        let r80 = IntermediateRepresentation {
            structure: And,
            tuples: vec![
                tuple(Normal, "QU-listClass", [Some("drugs"), Some("lead to"), Some("strokes"), None]),
                tuple(Normal, "QU-listClass", [Some("drugs"), Some("lead to"), Some("arthrosis"), None]),
            ],
        };
        assert!(validate_ir(&r80).is_empty());
        assert!(validate_ir_for(&r80, Language::En).is_empty());
        assert_eq!(validate_ir_for(&r80, Language::Vi).len(), 2);
        let bad = IntermediateRepresentation {
            structure: UnknTerm,
            tuples: vec![tuple(UnknTerm, "Who", [Some("x"), Some("r"), Some("b"), None])],
        };
        assert_eq!(validate_ir(&bad).len(), 1);
    }

    #[test]
    fn slot_syntax() {
        let cases = ["?", "\"Normal\"", "RDR1_NP", "RDR1_.category1", "RDR1_QP.QuestionPhrase.category"];
        for c in cases {
            let slot: Slot = c.parse().unwrap();
            assert_eq!(slot.to_string(), c);
        }
        assert!("a..b".parse::<Slot>().is_err());
        assert!("a.b.c.d".parse::<Slot>().is_err());
    }

    #[test]
    fn instantiate_r1_template() {
        let text = "Who are the researchers in semantic web research area ?";
        let mut d = Document::new(text);
        let f = |k: &str, v: &str| -> Features { [(k.to_string(), v.to_string())].into_iter().collect() };
        d.add("QuestionPhrase", Span::new(0, 3), f("category", "QU-who-what")).unwrap();
        d.add("RDR1_", Span::new(0, 53), f("category1", "UnknTerm")).unwrap();
        d.add("RDR1_QP", Span::new(0, 3), Features::new()).unwrap();
        d.add("RDR1_Rel", Span::new(4, 26), Features::new()).unwrap();
        d.add("RDR1_NP", Span::new(27, 53), Features::new()).unwrap();
        let template: ConclusionTemplate = serde_json::from_value(serde_json::json!({
            "structure": "UnknTerm",
            "tuples": [["RDR1_.category1", "RDR1_QP.QuestionPhrase.category", "?", "RDR1_Rel", "RDR1_NP", "?"]]
        }))
        .unwrap();
        let ir = instantiate(&template, &d, Language::En).unwrap();
        assert_eq!(
            ir.tuples[0],
            tuple(
                QuestionStructure::UnknTerm,
                "QU-who-what",
                [None, Some("are the researchers in"), Some("semantic web research area"), None]
            )
        );
        assert!(validate_ir(&ir).is_empty());

        let missing: ConclusionTemplate = serde_json::from_value(serde_json::json!({
            "structure": "Normal", "tuples": [["RDR9_.category1", "\"List\"", "?", "?", "?", "?"]]
        }))
        .unwrap();
        assert!(matches!(
            instantiate(&missing, &d, Language::En),
            Err(InstantiationError::MissingAnnotation { slot: "sub", .. })
        ));
    }

    #[test]
    fn comparator_allowances() {
        use QuestionStructure::*;
        let ir = |rel: &str, t2: &str| IntermediateRepresentation {
            structure: Normal,
            tuples: vec![tuple(Normal, "QU-who-what", [Some("partners"), Some(rel), Some(t2), None])],
        };
        let lang = Language::En;
        assert!(compare_ir(&ir("involved", "AKT project"), &ir("involved in", "AKT  project"), lang).is_ok());
        assert!(compare_ir(&ir("related to", "x"), &ir("are related to", "x"), lang).is_ok());
        assert!(compare_ir(&ir("involved", "AKT project"), &ir("involved in", "KMi"), lang).is_err());
        let vi = |rel: &str| IntermediateRepresentation {
            structure: Normal,
            tuples: vec![tuple(Normal, "List", [Some("sinh viên"), Some(rel), Some("Hà Nội"), None])],
        };
        assert!(compare_ir(&vi("có quê"), &vi("có quê ở"), Language::Vi).is_ok());
    }

    #[test]
    fn ir_json_shape() {
        let ir = IntermediateRepresentation {
            structure: QuestionStructure::Affirm3Term,
            tuples: vec![tuple(QuestionStructure::ThreeTerm, "ManyClass", [Some("a"), Some("b"), Some("c"), Some("45")])],
        };
        let v = serde_json::to_value(&ir).unwrap();
        assert_eq!(v["structure"], "Affirm_3Term");
        assert_eq!(v["tuples"][0]["sub"], "ThreeTerm");
        assert_eq!(v["tuples"][0]["t3"], "45");
        let back: IntermediateRepresentation = serde_json::from_value(v).unwrap();
        assert_eq!(back, ir);
    }
}
