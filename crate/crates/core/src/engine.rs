//! The question answering engine: configuration, the analysis pipeline, the
//! rule tree, ontology mapping, answer extraction and clarification sessions.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{answer_question, Answer, AnswerError};
use crate::ir::{compare_ir, IntermediateRepresentation};
use crate::language::Language;
use crate::mapper::{map_ir, resolve_choice, ChoiceLog, MapOutcome, MappingError, OntologyTuple, PendingChoice};
use crate::ontology::{parse_synonyms, Ontology, OntologyError, OntologySummary};
use crate::pipeline::{Lexicon, LexiconError, Pipeline, PhraseDictionary};
use crate::scrdr::{EvaluationResult, Insertion, KbError, KnowledgeBase, NodeId, RuleDraft};

fn default_threshold() -> f64 {
    crate::mapper::DEFAULT_THRESHOLD
}

fn default_ttl() -> u64 {
    900
}

/// Engine configuration. Relative paths are resolved against the directory
/// of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub language: Language,
    pub kb: PathBuf,
    pub ontology: PathBuf,
    #[serde(default)]
    pub lexicons: Vec<PathBuf>,
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_ttl")]
    pub session_ttl_secs: u64,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = fs::read_to_string(path).map_err(|e| EngineError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Config =
            serde_json::from_str(&text).map_err(|e| EngineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut config.kb);
        fix(&mut config.ontology);
        config.lexicons.iter_mut().for_each(fix);
        if let Some(s) = config.synonyms.as_mut() {
            fix(s);
        }
        if !(0.0..=1.0).contains(&config.threshold) {
            return Err(EngineError::Config(format!("threshold {} is outside [0, 1]", config.threshold)));
        }
        Ok(config)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("cannot analyze question: {0}")]
    Analysis(String),
    #[error("the knowledge base gives no conclusion for this question (last fired node {last_fired})")]
    NoConclusion { last_fired: NodeId },
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Answer(#[from] AnswerError),
    #[error("unknown or expired session `{0}`")]
    UnknownSession(String),
    #[error("session `{session}` is waiting for `{expected}`, not `{given}`")]
    WrongChoice { session: String, expected: String, given: String },
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("replay step {step} (`{question}`): {message}")]
    Replay { step: usize, question: String, message: String },
}

impl EngineError {
    /// True for problems with the request rather than with the installation.
    pub fn is_input_error(&self) -> bool {
        match self {
            EngineError::Config(_) | EngineError::Lexicon(_) | EngineError::Ontology(_) | EngineError::Corpus { .. }
            | EngineError::Replay { .. } => false,
            EngineError::Kb(e) => !matches!(
                e,
                KbError::Io { .. } | KbError::Json(_) | KbError::Version(_) | KbError::Invalid(_) | KbError::Runaway(_)
            ),
            _ => true,
        }
    }
}

/// Analysis of one question: annotations, path and representation.
#[derive(Debug, Clone, Serialize)]
pub struct Analyzed {
    pub question: String,
    pub text: String,
    pub bracketed: String,
    pub evaluation: EvaluationResult,
    /// Annotated document after evaluation, including rule postings.
    pub document: serde_json::Value,
}

impl Analyzed {
    pub fn ir(&self) -> Option<&IntermediateRepresentation> {
        self.evaluation.conclusion.as_ref()
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum AnswerOutcome {
    Answered {
        answer: Answer,
        ir: IntermediateRepresentation,
        tuples: Vec<OntologyTuple>,
        path: Vec<NodeId>,
    },
    Pending {
        session: String,
        choice: PendingChoice,
        ir: IntermediateRepresentation,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct KbStats {
    pub nodes: usize,
    pub max_depth: usize,
    /// Rule nodes per layer (distance from the default node).
    pub layers: BTreeMap<usize, usize>,
    /// Rule nodes per question structure of their conclusion.
    pub structures: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CorpusItem {
    #[serde(default)]
    pub id: Option<String>,
    pub question: String,
    #[serde(default)]
    pub pretagged: Option<String>,
    #[serde(default)]
    pub expected: Option<IntermediateRepresentation>,
}

impl CorpusItem {
    /// The text to analyze: the pre-tagged form when present.
    pub fn input(&self) -> &str {
        self.pretagged.as_deref().unwrap_or(&self.question)
    }
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusItem>, EngineError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| EngineError::Corpus { line: i + 1, message: e.to_string() })?;
        out.push(item);
    }
    Ok(out)
}

/// One knowledge acquisition step: a case and the rule added for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcquisitionStep {
    pub question: String,
    #[serde(flatten)]
    pub draft: RuleDraft,
}

pub fn parse_script(text: &str) -> Result<Vec<AcquisitionStep>, EngineError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let step = serde_json::from_str(line).map_err(|e| EngineError::Corpus { line: i + 1, message: e.to_string() })?;
        out.push(step);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalCase {
    pub id: String,
    pub question: String,
    pub ir: Option<IntermediateRepresentation>,
    pub path: Vec<NodeId>,
    /// `None` when the item has no expected representation.
    pub correct: Option<bool>,
    pub detail: Option<String>,
    pub micros: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub total: usize,
    pub scored: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub cases: Vec<EvalCase>,
    pub stats: KbStats,
}

struct Session {
    ir: IntermediateRepresentation,
    path: Vec<NodeId>,
    log: ChoiceLog,
    pending: PendingChoice,
    touched: Instant,
}

pub struct Engine {
    config: Option<Config>,
    pipeline: Pipeline,
    ontology: Ontology,
    threshold: f64,
    ttl: Duration,
    kb: RwLock<KnowledgeBase>,
    sessions: Mutex<HashMap<String, Session>>,
}

impl Engine {
    /// Build from already loaded parts; nothing is persisted.
    pub fn new(pipeline: Pipeline, ontology: Ontology, kb: KnowledgeBase, threshold: f64) -> Self {
        Engine {
            config: None,
            pipeline,
            ontology,
            threshold,
            ttl: Duration::from_secs(default_ttl()),
            kb: RwLock::new(kb),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    /// Load every resource named by `config`. A missing knowledge base file
    /// starts an empty tree that is written on the first accepted rule.
    pub fn from_config(config: Config) -> Result<Self, EngineError> {
        let lang = config.language;
        let mut lexicon = Lexicon::default();
        for path in &config.lexicons {
            let text = fs::read_to_string(path)
                .map_err(|e| LexiconError::Io { path: path.display().to_string(), message: e.to_string() })?;
            lexicon.extend_from(&text)?;
        }
        let mut ontology = Ontology::load(&config.ontology)?;
        if let Some(path) = &config.synonyms {
            let text = fs::read_to_string(path)
                .map_err(|e| OntologyError::Io { path: path.display().to_string(), message: e.to_string() })?;
            ontology = ontology.with_synonyms(&parse_synonyms(&text)?)?;
        }
        let kb = if config.kb.exists() { KnowledgeBase::load(&config.kb)? } else { KnowledgeBase::new(lang) };
        if kb.language() != lang {
            return Err(EngineError::Config(format!(
                "knowledge base language {} does not match configured language {lang}",
                kb.language()
            )));
        }
        let pipeline = Pipeline::new(lang, lexicon, PhraseDictionary::from_ontology(&ontology));
        let mut engine = Engine::new(pipeline, ontology, kb, config.threshold);
        engine.ttl = Duration::from_secs(config.session_ttl_secs);
        engine.config = Some(config);
        Ok(engine)
    }

    pub fn load(config_path: &Path) -> Result<Self, EngineError> {
        Engine::from_config(Config::load(config_path)?)
    }

    pub fn language(&self) -> Language {
        self.pipeline.language()
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn knowledge_base(&self) -> KnowledgeBase {
        self.kb.read().clone()
    }

    pub fn analyze(&self, question: &str, pretagged: Option<bool>) -> Result<Analyzed, EngineError> {
        let analysis = self.pipeline.analyze(question, pretagged).map_err(EngineError::Analysis)?;
        let bracketed = analysis.bracketed();
        let mut doc = analysis.document;
        let evaluation = self.kb.read().evaluate(&mut doc)?;
        Ok(Analyzed {
            question: question.to_string(),
            text: doc.text().to_string(),
            bracketed,
            evaluation,
            document: doc.to_json(),
        })
    }

    pub fn answer(&self, question: &str, pretagged: Option<bool>) -> Result<AnswerOutcome, EngineError> {
        let analyzed = self.analyze(question, pretagged)?;
        let Some(ir) = analyzed.evaluation.conclusion.clone() else {
            return Err(EngineError::NoConclusion { last_fired: analyzed.evaluation.last_fired });
        };
        self.resolve(ir, analyzed.evaluation.path, ChoiceLog::new(), None)
    }

    fn resolve(
        &self,
        ir: IntermediateRepresentation,
        path: Vec<NodeId>,
        log: ChoiceLog,
        session: Option<String>,
    ) -> Result<AnswerOutcome, EngineError> {
        let lang = self.language();
        match map_ir(&ir, &self.ontology, self.threshold, lang, &log)? {
            MapOutcome::Mapped { value } => {
                if let Some(id) = &session {
                    self.sessions.lock().remove(id);
                }
                let answer = answer_question(ir.structure, &value, &self.ontology, lang)?;
                Ok(AnswerOutcome::Answered { answer, ir, tuples: value, path })
            }
            MapOutcome::Pending { choice } => {
                let id = session.unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
                let mut sessions = self.sessions.lock();
                sessions.insert(
                    id.clone(),
                    Session { ir: ir.clone(), path, log, pending: choice.clone(), touched: Instant::now() },
                );
                Ok(AnswerOutcome::Pending { session: id, choice, ir })
            }
        }
    }

    /// Answer a pending clarification and continue mapping.
    pub fn choose(&self, session: &str, choice_id: &str, selection: &str) -> Result<AnswerOutcome, EngineError> {
        let (ir, path, log) = {
            let mut sessions = self.sessions.lock();
            let ttl = self.ttl;
            sessions.retain(|_, s| s.touched.elapsed() <= ttl);
            let s = sessions.get_mut(session).ok_or_else(|| EngineError::UnknownSession(session.to_string()))?;
            if s.pending.choice_id != choice_id {
                return Err(EngineError::WrongChoice {
                    session: session.to_string(),
                    expected: s.pending.choice_id.clone(),
                    given: choice_id.to_string(),
                });
            }
            resolve_choice(&s.pending, selection, &mut s.log)?;
            s.touched = Instant::now();
            (s.ir.clone(), s.path.clone(), s.log.clone())
        };
        self.resolve(ir, path, log, Some(session.to_string()))
    }

    pub fn open_sessions(&self) -> usize {
        self.sessions.lock().len()
    }

    /// Evaluate a stored cornerstone (or any question) into a fresh document.
    fn case_document(&self, question: &str) -> Result<crate::annotation::Document, String> {
        self.pipeline.document(question, None)
    }

    /// Add an exception rule for `question`. With `dry_run` the tree is left
    /// unchanged; otherwise the knowledge base file is rewritten.
    pub fn add_rule(
        &self,
        question: &str,
        pretagged: Option<bool>,
        draft: &RuleDraft,
        dry_run: bool,
    ) -> Result<Insertion, EngineError> {
        let case = self.pipeline.document(question, pretagged).map_err(EngineError::Analysis)?;
        let builder = |q: &str| self.case_document(q);
        if dry_run {
            let mut trial = self.kb.read().clone();
            return Ok(trial.add_exception(&case, question, draft, &builder)?);
        }
        let mut kb = self.kb.write();
        let mut next = kb.clone();
        let insertion = next.add_exception(&case, question, draft, &builder)?;
        if let Some(config) = &self.config {
            next.persist(&config.kb)?;
        }
        *kb = next;
        Ok(insertion)
    }

    /// Build a fresh tree by replaying acquisition steps in order. The
    /// engine's own tree is not touched.
    pub fn replay(&self, steps: &[AcquisitionStep]) -> Result<KnowledgeBase, EngineError> {
        let mut kb = KnowledgeBase::new(self.language());
        let builder = |q: &str| self.case_document(q);
        for (i, step) in steps.iter().enumerate() {
            let fail = |message: String| EngineError::Replay { step: i + 1, question: step.question.clone(), message };
            let case = self.pipeline.document(&step.question, None).map_err(fail)?;
            kb.add_exception(&case, &step.question, &step.draft, &builder).map_err(|e| fail(e.to_string()))?;
        }
        Ok(kb)
    }

    pub fn kb_stats(&self) -> KbStats {
        stats_of(&self.kb.read())
    }

    pub fn ontology_summary(&self) -> OntologySummary {
        self.ontology.summary()
    }

    /// Run every corpus item through analysis and compare representations.
    pub fn evaluate_corpus(&self, items: &[CorpusItem]) -> EvalReport {
        let lang = self.language();
        let mut cases = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let id = item.id.clone().unwrap_or_else(|| format!("q{}", i + 1));
            let started = Instant::now();
            let result = self.analyze(item.input(), None);
            let micros = started.elapsed().as_micros();
            let case = match result {
                Ok(a) => {
                    let ir = a.evaluation.conclusion.clone();
                    let verdict = item.expected.as_ref().map(|exp| match &ir {
                        Some(got) => compare_ir(exp, got, lang),
                        None => Err("no conclusion".to_string()),
                    });
                    EvalCase {
                        id,
                        question: item.question.clone(),
                        ir,
                        path: a.evaluation.path,
                        correct: verdict.as_ref().map(Result::is_ok),
                        detail: verdict.and_then(Result::err),
                        micros,
                    }
                }
                Err(e) => EvalCase {
                    id,
                    question: item.question.clone(),
                    ir: None,
                    path: vec![],
                    correct: item.expected.as_ref().map(|_| false),
                    detail: Some(e.to_string()),
                    micros,
                },
            };
            cases.push(case);
        }
        let scored = cases.iter().filter(|c| c.correct.is_some()).count();
        let correct = cases.iter().filter(|c| c.correct == Some(true)).count();
        EvalReport {
            total: cases.len(),
            scored,
            correct,
            accuracy: if scored == 0 { 0.0 } else { correct as f64 / scored as f64 },
            cases,
            stats: self.kb_stats(),
        }
    }
}

pub fn stats_of(kb: &KnowledgeBase) -> KbStats {
    let layers = kb.layer_histogram();
    KbStats {
        nodes: kb.len(),
        max_depth: layers.keys().next_back().copied().unwrap_or(0),
        layers,
        structures: kb.structure_histogram().into_iter().map(|(k, v)| (k.name().to_string(), v)).collect(),
    }
}
