//! Single Classification Ripple Down Rules over annotated questions.
//!
//! Evaluation starts at the default node, which always fires. A node that
//! fires posts its annotations and hands the case to its except child;
//! otherwise the case moves to its false child. The conclusion comes from the
//! last node that fired.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::Document;
use crate::ir::{instantiate, ConclusionTemplate, InstantiationError, IntermediateRepresentation, QuestionStructure};
use crate::language::Language;
use crate::pattern::{apply_postings, check_extra, find_match, parse_extra, parse_rule, ExtraConstraint, MatchResult, Rule, RuleError};

pub type NodeId = u32;

pub const KB_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("node {node}: {source}")]
    Rule { node: NodeId, source: RuleError },
    #[error("node {node}: {message}")]
    Malformed { node: NodeId, message: String },
    #[error("malformed knowledge base file: {0}")]
    Json(String),
    #[error("unsupported knowledge base version {0}")]
    Version(u32),
    #[error("invalid knowledge base: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Rejected(String),
    #[error("rule also fires on the cornerstone of node {node}: {cornerstone}")]
    Conflict { node: NodeId, cornerstone: String },
    #[error("attachment slot of node {0} is already occupied")]
    SlotOccupied(NodeId),
    #[error("node id {0} is already in use")]
    IdInUse(NodeId),
    #[error("node {node}: {source}")]
    Instantiation { node: NodeId, source: InstantiationError },
    #[error("evaluation did not terminate within {0} steps")]
    Runaway(usize),
    #[error("cannot rebuild cornerstone case: {0}")]
    Case(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extra {
    pub source: String,
    pub constraint: ExtraConstraint,
}

impl Extra {
    pub fn parse(source: &str) -> Result<Self, RuleError> {
        Ok(Extra { source: source.to_string(), constraint: parse_extra(source)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleNode {
    pub id: NodeId,
    /// `None` for the default node, whose condition always holds.
    pub rule: Option<Rule>,
    pub extra: Vec<Extra>,
    pub conclusion: Option<ConclusionTemplate>,
    pub except_child: Option<NodeId>,
    pub false_child: Option<NodeId>,
    pub cornerstone: Option<String>,
}

impl RuleNode {
    pub fn default_node(id: NodeId) -> Self {
        RuleNode {
            id,
            rule: None,
            extra: vec![],
            conclusion: None,
            except_child: None,
            false_child: None,
            cornerstone: None,
        }
    }

    pub fn rule_text(&self) -> &str {
        self.rule.as_ref().map(|r| r.source.as_str()).unwrap_or("")
    }

    /// Returns the case with this node's postings applied when the node fires.
    pub fn fire(&self, doc: &Document) -> Option<Document> {
        let Some(rule) = &self.rule else {
            return Some(doc.clone());
        };
        fire_rule(rule, &self.extra, doc)
    }
}

fn fire_rule(rule: &Rule, extra: &[Extra], doc: &Document) -> Option<Document> {
    let found = find_match(doc, &rule.condition)?;
    let mut trial = doc.clone();
    let posted = apply_postings(&mut trial, &rule.postings, &found);
    let result = MatchResult { span: found.span, bindings: found.bindings, posted };
    extra.iter().all(|e| check_extra(&trial, &result, &e.constraint)).then_some(trial)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvaluationResult {
    pub path: Vec<NodeId>,
    /// Parallel to `path`: whether each visited node fired.
    pub fired: Vec<bool>,
    pub last_fired: NodeId,
    pub conclusion: Option<IntermediateRepresentation>,
}

impl EvaluationResult {
    pub fn last(&self) -> (NodeId, bool) {
        (*self.path.last().expect("path starts at the root"), *self.fired.last().expect("parallel to path"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Except,
    False,
}

/// A rule proposed by a knowledge engineer for a misclassified case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDraft {
    pub rule_text: String,
    #[serde(default)]
    pub extra: Vec<String>,
    pub conclusion: ConclusionTemplate,
    /// Requested node id; the next free id is used otherwise.
    #[serde(default)]
    pub id: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Insertion {
    pub node_id: NodeId,
    pub parent: NodeId,
    pub edge: Edge,
    pub after: EvaluationResult,
    /// Nodes whose cornerstones were re-evaluated against the new rule.
    pub checked_cornerstones: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    language: Language,
    root: NodeId,
    nodes: BTreeMap<NodeId, RuleNode>,
}

impl KnowledgeBase {
    pub fn new(language: Language) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(0, RuleNode::default_node(0));
        KnowledgeBase { language, root: 0, nodes }
    }

    /// Assemble a tree without checking it; see [`KnowledgeBase::validate`].
    pub fn from_nodes(language: Language, root: NodeId, nodes: Vec<RuleNode>) -> Self {
        KnowledgeBase { language, root, nodes: nodes.into_iter().map(|n| (n.id, n)).collect() }
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Option<&RuleNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &RuleNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn next_id(&self) -> NodeId {
        self.nodes.keys().next_back().map_or(0, |k| k + 1)
    }

    /// Walk the tree; the document accumulates the postings of fired nodes.
    pub fn evaluate(&self, doc: &mut Document) -> Result<EvaluationResult, KbError> {
        let limit = self.nodes.len();
        let mut path = Vec::new();
        let mut fired = Vec::new();
        let mut last_fired = self.root;
        let mut current = Some(self.root);
        while let Some(id) = current {
            if path.len() >= limit {
                return Err(KbError::Runaway(limit));
            }
            let node = self.nodes.get(&id).ok_or_else(|| KbError::Malformed {
                node: id,
                message: "edge points to a missing node".into(),
            })?;
            path.push(id);
            match node.fire(doc) {
                Some(next_doc) => {
                    *doc = next_doc;
                    fired.push(true);
                    last_fired = id;
                    current = node.except_child;
                }
                None => {
                    fired.push(false);
                    current = node.false_child;
                }
            }
        }
        let conclusion = match &self.nodes[&last_fired].conclusion {
            Some(t) => Some(
                instantiate(t, doc, self.language)
                    .map_err(|source| KbError::Instantiation { node: last_fired, source })?,
            ),
            None => None,
        };
        Ok(EvaluationResult { path, fired, last_fired, conclusion })
    }

    /// Attach `draft` as an exception for `case` at the end of its evaluation
    /// path. `case_builder` turns stored cornerstones back into annotated
    /// documents so the new rule can be checked against them.
    pub fn add_exception(
        &mut self,
        case: &Document,
        cornerstone: &str,
        draft: &RuleDraft,
        case_builder: &dyn Fn(&str) -> Result<Document, String>,
    ) -> Result<Insertion, KbError> {
        let new_id = match draft.id {
            Some(id) if self.nodes.contains_key(&id) => return Err(KbError::IdInUse(id)),
            Some(id) => id,
            None => self.next_id(),
        };
        let rule = parse_rule(&draft.rule_text).map_err(|source| KbError::Rule { node: new_id, source })?;
        let extra = draft
            .extra
            .iter()
            .map(|e| Extra::parse(e))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| KbError::Rule { node: new_id, source })?;

        let mut evaluated = case.clone();
        let before = self.evaluate(&mut evaluated)?;
        let (parent, parent_fired) = before.last();
        let edge = if parent_fired { Edge::Except } else { Edge::False };
        let slot = match edge {
            Edge::Except => self.nodes[&parent].except_child,
            Edge::False => self.nodes[&parent].false_child,
        };
        if slot.is_some() {
            return Err(KbError::SlotOccupied(parent));
        }

        let Some(after_doc) = fire_rule(&rule, &extra, &evaluated) else {
            let reason = if find_match(&evaluated, &rule.condition).is_none() {
                "the rule condition does not match the case".to_string()
            } else {
                let failing: Vec<&str> = {
                    let found = find_match(&evaluated, &rule.condition).expect("checked above");
                    let mut trial = evaluated.clone();
                    let posted = apply_postings(&mut trial, &rule.postings, &found);
                    let result = MatchResult { span: found.span, bindings: found.bindings, posted };
                    extra
                        .iter()
                        .filter(|e| !check_extra(&trial, &result, &e.constraint))
                        .map(|e| e.source.as_str())
                        .collect()
                };
                format!("extra constraint fails on the case: {}", failing.join(", "))
            };
            return Err(KbError::Rejected(reason));
        };

        let mut available: BTreeSet<&str> =
            rule.postings.postings.iter().map(|p| p.type_name.as_str()).collect();
        for (id, f) in before.path.iter().zip(&before.fired) {
            if *f {
                if let Some(r) = &self.nodes[id].rule {
                    available.extend(r.postings.postings.iter().map(|p| p.type_name.as_str()));
                }
            }
        }
        let missing: Vec<&str> =
            draft.conclusion.referenced_types().into_iter().filter(|t| !available.contains(t)).collect();
        if !missing.is_empty() {
            return Err(KbError::Rejected(format!(
                "conclusion refers to annotations not posted by this rule or a fired ancestor: {}",
                missing.join(", ")
            )));
        }
        instantiate(&draft.conclusion, &after_doc, self.language)
            .map_err(|source| KbError::Instantiation { node: new_id, source })?;

        let mut checked = Vec::new();
        for node in self.nodes.values() {
            let Some(text) = &node.cornerstone else { continue };
            let mut doc = case_builder(text).map_err(KbError::Case)?;
            let result = self.evaluate(&mut doc)?;
            if result.last() != (parent, parent_fired) {
                continue;
            }
            checked.push(node.id);
            if fire_rule(&rule, &extra, &doc).is_some() {
                return Err(KbError::Conflict { node: node.id, cornerstone: text.clone() });
            }
        }

        let node = RuleNode {
            id: new_id,
            rule: Some(rule),
            extra,
            conclusion: Some(draft.conclusion.clone()),
            except_child: None,
            false_child: None,
            cornerstone: Some(cornerstone.to_string()),
        };
        self.nodes.insert(new_id, node);
        let parent_node = self.nodes.get_mut(&parent).expect("parent on path");
        match edge {
            Edge::Except => parent_node.except_child = Some(new_id),
            Edge::False => parent_node.false_child = Some(new_id),
        }
        let mut again = case.clone();
        let after = self.evaluate(&mut again)?;
        Ok(Insertion { node_id: new_id, parent, edge, after, checked_cornerstones: checked })
    }

    /// Structural violations; empty when the tree is well formed.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let Some(root) = self.nodes.get(&self.root) else {
            out.push(format!("root node {} is missing", self.root));
            return out;
        };
        if root.rule.is_some() || !root.extra.is_empty() {
            out.push("default node must have the always-true condition".into());
        }
        if root.conclusion.is_some() {
            out.push("default node must have a null conclusion".into());
        }
        let mut parents: BTreeMap<NodeId, usize> = BTreeMap::new();
        for node in self.nodes.values() {
            if node.except_child.is_some() && node.except_child == node.false_child {
                out.push(format!("children of node {} are not distinct", node.id));
            }
            for (kind, child) in [("except", node.except_child), ("false", node.false_child)] {
                if let Some(c) = child {
                    if !self.nodes.contains_key(&c) {
                        out.push(format!("dangling {kind} edge from {} to {c}", node.id));
                    } else {
                        *parents.entry(c).or_default() += 1;
                    }
                }
            }
            if node.id != self.root && node.rule.is_none() {
                out.push(format!("node {} has no rule", node.id));
            }
        }
        for id in self.nodes.keys() {
            let count = parents.get(id).copied().unwrap_or(0);
            if *id == self.root {
                if count > 0 {
                    out.push(format!("default node {id} is an exception of another node"));
                }
            } else if count == 0 {
                out.push(format!("node {id} is a second root"));
            } else if count > 1 {
                out.push(format!("node {id} has multiple parents"));
            }
        }
        // Cycle and reachability check by iterative walk from the root.
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                out.push(format!("cycle at node {id}"));
                continue;
            }
            if let Some(n) = self.nodes.get(&id) {
                for c in [n.false_child, n.except_child].into_iter().flatten() {
                    if self.nodes.contains_key(&c) {
                        stack.push(c);
                    }
                }
            }
        }
        for id in self.nodes.keys() {
            if !seen.contains(id) {
                out.push(format!("node {id} is unreachable from the root"));
            }
        }
        out
    }

    /// Exception depth of every node: root 0, except child = parent + 1,
    /// false child = same layer as its sibling.
    pub fn layers(&self) -> BTreeMap<NodeId, usize> {
        let mut out = BTreeMap::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, layer)) = stack.pop() {
            if out.insert(id, layer).is_some() {
                continue;
            }
            if let Some(n) = self.nodes.get(&id) {
                if let Some(c) = n.except_child {
                    stack.push((c, layer + 1));
                }
                if let Some(c) = n.false_child {
                    stack.push((c, layer));
                }
            }
        }
        out
    }

    /// Number of rules per exception layer (layer 1 and deeper).
    pub fn layer_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for layer in self.layers().into_values().filter(|l| *l > 0) {
            *hist.entry(layer).or_default() += 1;
        }
        hist
    }

    /// Number of rules per concluded question structure.
    pub fn structure_histogram(&self) -> BTreeMap<QuestionStructure, usize> {
        let mut hist = BTreeMap::new();
        for c in self.nodes.values().filter_map(|n| n.conclusion.as_ref()) {
            *hist.entry(c.structure).or_default() += 1;
        }
        hist
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(KbFile::from(self)).expect("knowledge base serializes")
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&KbFile::from(self)).expect("knowledge base serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(source: &str) -> Result<Self, KbError> {
        let file: KbFile = serde_json::from_str(source).map_err(|e| KbError::Json(e.to_string()))?;
        let kb = KnowledgeBase::try_from(file)?;
        let violations = kb.validate();
        if !violations.is_empty() {
            return Err(KbError::Invalid(violations));
        }
        Ok(kb)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = fs::read_to_string(path)
            .map_err(|e| KbError::Io { path: path.display().to_string(), message: e.to_string() })?;
        KnowledgeBase::from_json_str(&text)
    }

    /// Write to a sibling temporary file, then rename over `path`.
    pub fn persist(&self, path: &Path) -> Result<(), KbError> {
        let io = |e: std::io::Error| KbError::Io { path: path.display().to_string(), message: e.to_string() };
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json_string()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    id: NodeId,
    rule_text: String,
    #[serde(default)]
    extra: Vec<String>,
    conclusion: Option<ConclusionTemplate>,
    except: Option<NodeId>,
    #[serde(rename = "false")]
    false_: Option<NodeId>,
    cornerstone: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct KbFile {
    version: u32,
    language: Language,
    root: NodeId,
    nodes: Vec<NodeFile>,
}

impl From<&KnowledgeBase> for KbFile {
    fn from(kb: &KnowledgeBase) -> Self {
        KbFile {
            version: KB_VERSION,
            language: kb.language,
            root: kb.root,
            nodes: kb
                .nodes
                .values()
                .map(|n| NodeFile {
                    id: n.id,
                    rule_text: n.rule_text().to_string(),
                    extra: n.extra.iter().map(|e| e.source.clone()).collect(),
                    conclusion: n.conclusion.clone(),
                    except: n.except_child,
                    false_: n.false_child,
                    cornerstone: n.cornerstone.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<KbFile> for KnowledgeBase {
    type Error = KbError;

    fn try_from(file: KbFile) -> Result<Self, KbError> {
        if file.version != KB_VERSION {
            return Err(KbError::Version(file.version));
        }
        let mut nodes = BTreeMap::new();
        let mut duplicates = Vec::new();
        for n in file.nodes {
            let rule = if n.rule_text.trim().is_empty() {
                None
            } else {
                Some(parse_rule(&n.rule_text).map_err(|source| KbError::Rule { node: n.id, source })?)
            };
            let extra = n
                .extra
                .iter()
                .map(|e| Extra::parse(e))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| KbError::Rule { node: n.id, source })?;
            let node = RuleNode {
                id: n.id,
                rule,
                extra,
                conclusion: n.conclusion,
                except_child: n.except,
                false_child: n.false_,
                cornerstone: n.cornerstone,
            };
            if nodes.insert(n.id, node).is_some() {
                duplicates.push(format!("duplicate node id {}", n.id));
            }
        }
        if !duplicates.is_empty() {
            return Err(KbError::Invalid(duplicates));
        }
        Ok(KnowledgeBase { language: file.language, root: file.root, nodes })
    }
}
