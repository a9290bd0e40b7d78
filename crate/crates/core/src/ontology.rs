//! In-memory ontology: concepts with a parent hierarchy, instances, relation
//! definitions and assertions. Immutable after loading.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("malformed ontology file: {0}")]
    Json(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("{entity} refers to undeclared {kind} `{name}`")]
    Dangling { entity: String, kind: &'static str, name: String },
    #[error("instance `{0}` belongs to no concept")]
    NoConcept(String),
    #[error("concept hierarchy has a cycle through `{0}`")]
    Cycle(String),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown ontology element `{0}`")]
    UnknownElement(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    pub concepts: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Object,
    Datatype,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub s: String,
    pub r: String,
    pub o: String,
}

impl Assertion {
    pub fn numeric(&self) -> Option<f64> {
        self.o.trim().parse().ok()
    }
}

/// Kinds of ontology elements a term can be mapped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Concept,
    Instance,
    Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub name: String,
}

impl Element {
    pub fn concept(name: &str) -> Self {
        Element { kind: ElementKind::Concept, name: name.to_string() }
    }

    pub fn instance(name: &str) -> Self {
        Element { kind: ElementKind::Instance, name: name.to_string() }
    }

    pub fn relation(name: &str) -> Self {
        Element { kind: ElementKind::Relation, name: name.to_string() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct OntologyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default)]
    concepts: Vec<Concept>,
    #[serde(default)]
    relations: Vec<RelationDef>,
    #[serde(default)]
    instances: Vec<Instance>,
    #[serde(default)]
    assertions: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OntologySummary {
    pub description: Option<String>,
    pub concepts: usize,
    pub instances: usize,
    pub relations: usize,
    pub assertions: usize,
    pub concept_names: Vec<String>,
    pub relation_names: Vec<String>,
}

/// Case-fold and collapse whitespace; the key used by every name index.
pub fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Parse a synonym list: `name<TAB>synonym<TAB>synonym...` per line, `#`
/// starts a comment.
pub fn parse_synonyms(text: &str) -> Result<Vec<(String, Vec<String>)>, OntologyError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
        let name = fields.next().expect("non-empty line").to_string();
        let syns: Vec<String> = fields.map(String::from).collect();
        if syns.is_empty() {
            return Err(OntologyError::Json(format!("synonym line {}: no synonyms for `{name}`", n + 1)));
        }
        out.push((name, syns));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct Ontology {
    file: OntologyFile,
    concepts: BTreeMap<String, usize>,
    instances: BTreeMap<String, usize>,
    relations: BTreeMap<String, usize>,
    children: BTreeMap<String, Vec<String>>,
    /// Folded name or synonym -> elements carrying it.
    labels: HashMap<(ElementKind, String), BTreeSet<String>>,
}

impl Ontology {
    pub fn empty() -> Self {
        Ontology::default()
    }

    pub fn from_json_str(source: &str) -> Result<Self, OntologyError> {
        let file: OntologyFile = serde_json::from_str(source).map_err(|e| OntologyError::Json(e.to_string()))?;
        Ontology::build(file)
    }

    pub fn load(path: &Path) -> Result<Self, OntologyError> {
        let text = fs::read_to_string(path)
            .map_err(|e| OntologyError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Ontology::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.file).expect("ontology serializes");
        s.push('\n');
        s
    }

    fn build(file: OntologyFile) -> Result<Self, OntologyError> {
        let mut ont = Ontology { file, ..Ontology::default() };
        for (i, c) in ont.file.concepts.iter().enumerate() {
            if ont.concepts.insert(c.name.clone(), i).is_some() {
                return Err(OntologyError::Duplicate { kind: "concept", name: c.name.clone() });
            }
        }
        for (i, r) in ont.file.relations.iter().enumerate() {
            if ont.relations.insert(r.name.clone(), i).is_some() {
                return Err(OntologyError::Duplicate { kind: "relation", name: r.name.clone() });
            }
        }
        for (i, x) in ont.file.instances.iter().enumerate() {
            if ont.instances.insert(x.name.clone(), i).is_some() {
                return Err(OntologyError::Duplicate { kind: "instance", name: x.name.clone() });
            }
        }
        for c in &ont.file.concepts {
            if let Some(p) = &c.parent {
                if !ont.concepts.contains_key(p) {
                    return Err(OntologyError::Dangling {
                        entity: format!("concept `{}`", c.name),
                        kind: "concept",
                        name: p.clone(),
                    });
                }
                ont.children.entry(p.clone()).or_default().push(c.name.clone());
            }
        }
        for c in &ont.file.concepts {
            let mut seen = BTreeSet::new();
            let mut cur = Some(&c.name);
            while let Some(name) = cur {
                if !seen.insert(name) {
                    return Err(OntologyError::Cycle(c.name.clone()));
                }
                cur = ont.file.concepts[ont.concepts[name]].parent.as_ref();
            }
        }
        for x in &ont.file.instances {
            if x.concepts.is_empty() {
                return Err(OntologyError::NoConcept(x.name.clone()));
            }
            for c in &x.concepts {
                if !ont.concepts.contains_key(c) {
                    return Err(OntologyError::Dangling {
                        entity: format!("instance `{}`", x.name),
                        kind: "concept",
                        name: c.clone(),
                    });
                }
            }
        }
        for a in &ont.file.assertions {
            let entity = format!("assertion ({}, {}, {})", a.s, a.r, a.o);
            if !ont.instances.contains_key(&a.s) {
                return Err(OntologyError::Dangling { entity, kind: "instance", name: a.s.clone() });
            }
            let Some(&ri) = ont.relations.get(&a.r) else {
                return Err(OntologyError::Dangling { entity, kind: "relation", name: a.r.clone() });
            };
            if ont.file.relations[ri].kind == RelationKind::Object && !ont.instances.contains_key(&a.o) {
                return Err(OntologyError::Dangling { entity, kind: "instance", name: a.o.clone() });
            }
        }
        let mut labels: HashMap<(ElementKind, String), BTreeSet<String>> = HashMap::new();
        let mut index = |kind, name: &String, synonyms: &Vec<String>| {
            for label in std::iter::once(name).chain(synonyms) {
                labels.entry((kind, fold(label))).or_default().insert(name.clone());
            }
        };
        for c in &ont.file.concepts {
            index(ElementKind::Concept, &c.name, &c.synonyms);
        }
        for x in &ont.file.instances {
            index(ElementKind::Instance, &x.name, &x.synonyms);
        }
        for r in &ont.file.relations {
            index(ElementKind::Relation, &r.name, &r.synonyms);
        }
        ont.labels = labels;
        Ok(ont)
    }

    /// Attach extra labels to named elements. Every named element must exist.
    pub fn with_synonyms(self, entries: &[(String, Vec<String>)]) -> Result<Self, OntologyError> {
        let mut file = self.file;
        for (name, syns) in entries {
            let target = if let Some(&i) = self.concepts.get(name) {
                &mut file.concepts[i].synonyms
            } else if let Some(&i) = self.instances.get(name) {
                &mut file.instances[i].synonyms
            } else if let Some(&i) = self.relations.get(name) {
                &mut file.relations[i].synonyms
            } else {
                return Err(OntologyError::UnknownElement(name.clone()));
            };
            for syn in syns {
                if !target.contains(syn) {
                    target.push(syn.clone());
                }
            }
        }
        Ontology::build(file)
    }

    pub fn description(&self) -> Option<&str> {
        self.file.description.as_deref()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.file.concepts
    }

    pub fn instances(&self) -> &[Instance] {
        &self.file.instances
    }

    pub fn relations(&self) -> &[RelationDef] {
        &self.file.relations
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.file.assertions
    }

    pub fn concept(&self, name: &str) -> Option<&Concept> {
        self.concepts.get(name).map(|&i| &self.file.concepts[i])
    }

    pub fn instance(&self, name: &str) -> Option<&Instance> {
        self.instances.get(name).map(|&i| &self.file.instances[i])
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.get(name).map(|&i| &self.file.relations[i])
    }

    pub fn contains(&self, element: &Element) -> bool {
        match element.kind {
            ElementKind::Concept => self.concepts.contains_key(&element.name),
            ElementKind::Instance => self.instances.contains_key(&element.name),
            ElementKind::Relation => self.relations.contains_key(&element.name),
        }
    }

    /// Names and synonyms of every element of `kind`, as (element, label).
    pub fn labels(&self, kind: ElementKind) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        match kind {
            ElementKind::Concept => {
                for c in &self.file.concepts {
                    out.push((c.name.as_str(), c.name.as_str()));
                    out.extend(c.synonyms.iter().map(|s| (c.name.as_str(), s.as_str())));
                }
            }
            ElementKind::Instance => {
                for x in &self.file.instances {
                    out.push((x.name.as_str(), x.name.as_str()));
                    out.extend(x.synonyms.iter().map(|s| (x.name.as_str(), s.as_str())));
                }
            }
            ElementKind::Relation => {
                for r in &self.file.relations {
                    out.push((r.name.as_str(), r.name.as_str()));
                    out.extend(r.synonyms.iter().map(|s| (r.name.as_str(), s.as_str())));
                }
            }
        }
        out
    }

    /// Elements of `kind` whose name or a synonym equals `text` after folding.
    pub fn lookup(&self, kind: ElementKind, text: &str) -> Vec<&str> {
        self.labels
            .get(&(kind, fold(text)))
            .map(|s| s.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// The concept and its descendants.
    pub fn descendants(&self, concept: &str) -> Result<BTreeSet<String>, OntologyError> {
        if !self.concepts.contains_key(concept) {
            return Err(OntologyError::UnknownConcept(concept.to_string()));
        }
        let mut out = BTreeSet::new();
        let mut stack = vec![concept.to_string()];
        while let Some(c) = stack.pop() {
            if out.insert(c.clone()) {
                stack.extend(self.children.get(&c).into_iter().flatten().cloned());
            }
        }
        Ok(out)
    }

    pub fn instances_of(&self, concept: &str, transitive: bool) -> Result<BTreeSet<String>, OntologyError> {
        let targets = if transitive {
            self.descendants(concept)?
        } else if self.concepts.contains_key(concept) {
            BTreeSet::from([concept.to_string()])
        } else {
            return Err(OntologyError::UnknownConcept(concept.to_string()));
        };
        Ok(self
            .file
            .instances
            .iter()
            .filter(|x| x.concepts.iter().any(|c| targets.contains(c)))
            .map(|x| x.name.clone())
            .collect())
    }

    /// Whether `instance` belongs to `concept` or one of its descendants.
    pub fn is_member(&self, instance: &str, concept: &str) -> Result<bool, OntologyError> {
        let x = self.instance(instance).ok_or_else(|| OntologyError::UnknownInstance(instance.to_string()))?;
        let targets = self.descendants(concept)?;
        Ok(x.concepts.iter().any(|c| targets.contains(c)))
    }

    /// Instances an element stands for: itself, or the members of a concept.
    fn extension(&self, element: &Element) -> Result<BTreeSet<String>, OntologyError> {
        match element.kind {
            ElementKind::Instance if self.instances.contains_key(&element.name) => {
                Ok(BTreeSet::from([element.name.clone()]))
            }
            ElementKind::Instance => Err(OntologyError::UnknownInstance(element.name.clone())),
            ElementKind::Concept => self.instances_of(&element.name, true),
            ElementKind::Relation => Err(OntologyError::UnknownElement(element.name.clone())),
        }
    }

    /// Relations with an assertion whose subject is compatible with `a` and
    /// whose object is compatible with `b`.
    pub fn relations_between(&self, a: &Element, b: &Element) -> Result<BTreeSet<String>, OntologyError> {
        let subjects = self.extension(a)?;
        let objects = self.extension(b)?;
        Ok(self
            .file
            .assertions
            .iter()
            .filter(|x| subjects.contains(&x.s) && objects.contains(&x.o))
            .map(|x| x.r.clone())
            .collect())
    }

    fn check_relation(&self, relation: &str) -> Result<(), OntologyError> {
        if self.relations.contains_key(relation) {
            Ok(())
        } else {
            Err(OntologyError::UnknownRelation(relation.to_string()))
        }
    }

    pub fn query_assertions(
        &self,
        subject_concept: &str,
        relation: &str,
        object: &str,
    ) -> Result<BTreeSet<String>, OntologyError> {
        let members = self.instances_of(subject_concept, true)?;
        self.check_relation(relation)?;
        if !self.instances.contains_key(object) {
            return Err(OntologyError::UnknownInstance(object.to_string()));
        }
        Ok(self
            .file
            .assertions
            .iter()
            .filter(|x| x.r == relation && x.o == object && members.contains(&x.s))
            .map(|x| x.s.clone())
            .collect())
    }

    /// Subjects of `relation` whose object is `object`, whatever their concept.
    pub fn subjects_of(&self, relation: &str, object: &str) -> Result<BTreeSet<String>, OntologyError> {
        self.check_relation(relation)?;
        Ok(self
            .file
            .assertions
            .iter()
            .filter(|x| x.r == relation && x.o == object)
            .map(|x| x.s.clone())
            .collect())
    }

    /// Objects or literal values of `relation` for `subject`.
    pub fn values_of(&self, subject: &str, relation: &str) -> Result<Vec<&Assertion>, OntologyError> {
        self.check_relation(relation)?;
        if !self.instances.contains_key(subject) {
            return Err(OntologyError::UnknownInstance(subject.to_string()));
        }
        Ok(self.file.assertions.iter().filter(|x| x.r == relation && x.s == subject).collect())
    }

    pub fn summary(&self) -> OntologySummary {
        OntologySummary {
            description: self.file.description.clone(),
            concepts: self.file.concepts.len(),
            instances: self.file.instances.len(),
            relations: self.file.relations.len(),
            assertions: self.file.assertions.len(),
            concept_names: self.file.concepts.iter().map(|c| c.name.clone()).collect(),
            relation_names: self.file.relations.iter().map(|r| r.name.clone()).collect(),
        }
    }
}
