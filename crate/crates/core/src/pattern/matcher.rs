//! Backtracking matcher.
//!
//! A rule matches when its condition matches a run of annotations anywhere in
//! the document, each one starting where the previous ended (whitespace
//! between them is skipped). Among start offsets the leftmost wins; from that
//! start the match reaching furthest wins, ties going to the first found in
//! backtracking order (longer candidates first, then lower ids; greedy
//! quantifiers).

use std::collections::{BTreeMap, HashSet};

use super::{AnnotationTest, ConditionPattern, ExtraConstraint, PatternNode, PostingSpec, Quantifier, Rule};
use crate::annotation::{feature_matches, Annotation, AnnotationId, Document, Span};

pub type Bindings = BTreeMap<String, Span>;

/// A successful match before postings are applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub span: Span,
    pub bindings: Bindings,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub span: Span,
    pub bindings: Bindings,
    pub posted: Vec<AnnotationId>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    cursor: usize,
    bindings: Bindings,
}

struct Run<'d> {
    doc: &'d Document,
}

impl<'d> Run<'d> {
    fn candidates(&self, test: &AnnotationTest, cursor: usize) -> Vec<&'d Annotation> {
        let mut found: Vec<&Annotation> = Vec::new();
        for alt in &test.alternatives {
            for ann in self.doc.starting_at(&alt.type_name, self.doc.skip_space(cursor)) {
                let ok = match &alt.feature {
                    Some(t) => feature_matches(self.doc, ann, &t.name, &t.value),
                    None => true,
                };
                if ok && !found.iter().any(|f| f.id == ann.id) {
                    found.push(ann);
                }
            }
        }
        found.sort_by(|a, b| b.span.end.cmp(&a.span.end).then(a.id.cmp(&b.id)));
        found
    }

    /// All ways `node` can match from `state`, in priority order.
    fn run(&self, node: &PatternNode, state: &State) -> Vec<State> {
        match node {
            PatternNode::Test(test) => self
                .candidates(test, state.cursor)
                .into_iter()
                .map(|ann| State { cursor: ann.span.end, bindings: state.bindings.clone() })
                .collect(),
            PatternNode::Sequence(items) => {
                let mut states = vec![state.clone()];
                for item in items {
                    let mut next = Vec::new();
                    for st in &states {
                        next.extend(self.run(item, st));
                    }
                    states = dedup(next);
                    if states.is_empty() {
                        break;
                    }
                }
                states
            }
            PatternNode::Alternation(branches) => {
                dedup(branches.iter().flat_map(|b| self.run(b, state)).collect())
            }
            PatternNode::Group { inner, label } => {
                let mut out = self.run(inner, state);
                if let Some(label) = label {
                    let start = self.doc.skip_space(state.cursor);
                    for st in out.iter_mut().filter(|st| st.cursor > state.cursor) {
                        let span = Span::new(start.min(st.cursor), st.cursor);
                        let merged = match st.bindings.get(label) {
                            Some(prev) => prev.union(&span),
                            None => span,
                        };
                        st.bindings.insert(label.clone(), merged);
                    }
                }
                out
            }
            PatternNode::Quantified { inner, quantifier } => match quantifier {
                Quantifier::Optional => {
                    let mut out = self.run(inner, state);
                    out.push(state.clone());
                    dedup(out)
                }
                Quantifier::ZeroOrMore => dedup(self.star(inner, state)),
                Quantifier::OneOrMore => {
                    let mut out = Vec::new();
                    for first in self.run(inner, state) {
                        if first.cursor == state.cursor {
                            out.push(first);
                        } else {
                            out.extend(self.star(inner, &first));
                        }
                    }
                    dedup(out)
                }
            },
        }
    }

    /// Greedy repetition: more iterations first, then stopping here. An
    /// iteration that does not advance the cursor is not repeated.
    fn star(&self, inner: &PatternNode, state: &State) -> Vec<State> {
        let mut out = Vec::new();
        for next in self.run(inner, state) {
            if next.cursor > state.cursor {
                out.extend(self.star(inner, &next));
            }
        }
        out.push(state.clone());
        out
    }
}

fn dedup(states: Vec<State>) -> Vec<State> {
    let mut seen = HashSet::new();
    states.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

/// Locate the selected match of `pattern` without modifying the document.
pub fn find_match(doc: &Document, pattern: &ConditionPattern) -> Option<Match> {
    let run = Run { doc };
    for start in doc.start_offsets() {
        let init = State { cursor: start, bindings: Bindings::new() };
        let mut best: Option<State> = None;
        for st in run.run(&pattern.root, &init) {
            if st.cursor <= start {
                continue;
            }
            if best.as_ref().is_none_or(|b| st.cursor > b.cursor) {
                best = Some(st);
            }
        }
        if let Some(st) = best {
            return Some(Match { span: Span::new(start, st.cursor), bindings: st.bindings });
        }
    }
    None
}

/// Post one annotation per posting whose label was bound.
pub fn apply_postings(doc: &mut Document, postings: &PostingSpec, found: &Match) -> Vec<AnnotationId> {
    let mut posted = Vec::new();
    for p in &postings.postings {
        if let Some(span) = found.bindings.get(&p.label) {
            let id = doc
                .add(&p.type_name, *span, p.features.clone())
                .expect("bound spans come from existing annotations");
            posted.push(id);
        }
    }
    posted
}

/// Match and, on success, apply the rule's postings. A failed match leaves
/// the document untouched.
pub fn match_rule(doc: &mut Document, rule: &Rule) -> Option<MatchResult> {
    let found = find_match(doc, &rule.condition)?;
    let posted = apply_postings(doc, &rule.postings, &found);
    Some(MatchResult { span: found.span, bindings: found.bindings, posted })
}

/// True iff some subject-type annotation inside the matched region contains
/// a contained-type annotation passing the feature test.
pub fn check_extra(doc: &Document, result: &MatchResult, constraint: &ExtraConstraint) -> bool {
    let feature = constraint.feature.as_ref();
    doc.find_within(result.span, &constraint.subject_type, None).into_iter().any(|sid| {
        let subject = doc.get(sid).expect("id from find_within");
        doc.find_within(subject.span, &constraint.contained_type, None).into_iter().any(|cid| {
            let contained = doc.get(cid).expect("id from find_within");
            feature.is_none_or(|t| feature_matches(doc, contained, &t.name, &t.value))
        })
    })
}
