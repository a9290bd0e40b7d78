//! JAPE-like rule language: condition patterns over annotation sequences,
//! postings applied on a match, and `hasAnno` containment constraints.
//!
//! ```text
//! (({QuestionPhrase}):qp ({Relation}):rel ({NounPhrase}):np):left
//!     --> :left.RDR1_={category1="UnknTerm"}, :qp.RDR1_QP={}
//! ```

mod matcher;
mod parser;

use std::fmt;

pub use matcher::{apply_postings, check_extra, find_match, match_rule, Bindings, Match, MatchResult};
pub use parser::{parse_extra, parse_rule, ParseError, RuleError};

use crate::annotation::Features;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Optional,
    OneOrMore,
    ZeroOrMore,
}

impl Quantifier {
    pub fn symbol(self) -> char {
        match self {
            Quantifier::Optional => '?',
            Quantifier::OneOrMore => '+',
            Quantifier::ZeroOrMore => '*',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTest {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeExpr {
    pub type_name: String,
    pub feature: Option<FeatureTest>,
}

/// `{A | B.f == "x"}`: succeeds on any annotation satisfying one alternative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationTest {
    pub alternatives: Vec<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternNode {
    Test(AnnotationTest),
    Sequence(Vec<PatternNode>),
    Alternation(Vec<PatternNode>),
    Group { inner: Box<PatternNode>, label: Option<String> },
    Quantified { inner: Box<PatternNode>, quantifier: Quantifier },
}

impl PatternNode {
    pub fn node_count(&self) -> usize {
        match self {
            PatternNode::Test(_) => 1,
            PatternNode::Sequence(items) | PatternNode::Alternation(items) => {
                1 + items.iter().map(PatternNode::node_count).sum::<usize>()
            }
            PatternNode::Group { inner, .. } | PatternNode::Quantified { inner, .. } => 1 + inner.node_count(),
        }
    }

    pub fn labels(&self, out: &mut Vec<String>) {
        match self {
            PatternNode::Test(_) => {}
            PatternNode::Sequence(items) | PatternNode::Alternation(items) => {
                items.iter().for_each(|n| n.labels(out))
            }
            PatternNode::Group { inner, label } => {
                if let Some(l) = label {
                    out.push(l.clone());
                }
                inner.labels(out);
            }
            PatternNode::Quantified { inner, .. } => inner.labels(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionPattern {
    pub root: PatternNode,
}

impl ConditionPattern {
    /// Label of the outermost group.
    pub fn outer_label(&self) -> Option<&str> {
        let mut node = &self.root;
        loop {
            match node {
                PatternNode::Group { label: Some(l), .. } => return Some(l),
                PatternNode::Group { inner, label: None } => node = inner,
                PatternNode::Quantified { inner, .. } => node = inner,
                _ => return None,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    pub label: String,
    pub type_name: String,
    pub features: Features,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PostingSpec {
    pub postings: Vec<Posting>,
}

impl PostingSpec {
    pub fn type_for_label(&self, label: &str) -> Option<&str> {
        self.postings.iter().find(|p| p.label == label).map(|p| p.type_name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub source: String,
    pub condition: ConditionPattern,
    pub postings: PostingSpec,
}

/// `Subject.hasAnno == Contained[.feature == value]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtraConstraint {
    pub subject_type: String,
    pub contained_type: String,
    pub feature: Option<FeatureTest>,
}

fn write_str_lit(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.type_name)?;
        if let Some(t) = &self.feature {
            write!(f, ".{} == ", t.name)?;
            write_str_lit(f, &t.value)?;
        }
        Ok(())
    }
}

impl fmt::Display for PatternNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternNode::Test(t) => {
                f.write_str("{")?;
                for (i, alt) in t.alternatives.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{alt}")?;
                }
                f.write_str("}")
            }
            PatternNode::Sequence(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write_item(f, item)?;
                }
                Ok(())
            }
            PatternNode::Alternation(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match item {
                        PatternNode::Alternation(_) => write!(f, "({item})")?,
                        _ => write!(f, "{item}")?,
                    }
                }
                Ok(())
            }
            PatternNode::Group { inner, label } => {
                write!(f, "({inner})")?;
                if let Some(l) = label {
                    write!(f, ":{l}")?;
                }
                Ok(())
            }
            PatternNode::Quantified { inner, quantifier } => {
                write_item(f, inner)?;
                write!(f, "{}", quantifier.symbol())
            }
        }
    }
}

/// Items inside sequences and alternations that are themselves sequences or
/// alternations need an unlabeled group around them to re-parse identically.
fn write_item(f: &mut fmt::Formatter<'_>, node: &PatternNode) -> fmt::Result {
    match node {
        PatternNode::Sequence(_) | PatternNode::Alternation(_) => write!(f, "({node})"),
        other => write!(f, "{other}"),
    }
}

impl fmt::Display for Posting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ":{}.{}={{", self.label, self.type_name)?;
        for (i, (k, v)) in self.features.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}=")?;
            write_str_lit(f, v)?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for ExtraConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.hasAnno == {}", self.subject_type, self.contained_type)?;
        if let Some(t) = &self.feature {
            write!(f, ".{} == {}", t.name, t.value)?;
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --> ", self.condition.root)?;
        for (i, p) in self.postings.postings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}
