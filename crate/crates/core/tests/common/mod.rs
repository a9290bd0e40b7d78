#![allow(dead_code)]

pub mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdrqa::annotation::{Document, Features, Span};
use rdrqa::engine::{parse_corpus, parse_script, stats_of, AnswerOutcome, Engine};
use rdrqa::ir::IntermediateRepresentation;
use rdrqa::language::Language;
use rdrqa::mapper::similarity;
use rdrqa::pattern::find_match;
use rdrqa::pattern::ConditionPattern;
use rdrqa::scrdr::{KbError, KnowledgeBase, NodeId, RuleDraft};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn config_path(name: &str) -> PathBuf {
    data_dir().join("config").join(format!("{name}.json"))
}

pub fn engine(name: &str) -> Engine {
    Engine::load(&config_path(name)).unwrap_or_else(|e| panic!("loading {name}: {e}"))
}

pub fn read_data(rel: &str) -> String {
    std::fs::read_to_string(data_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub const PARTNERS: &str = "Who/WP are/VBP the/DT partners/NNS involved/VBN in/IN AKT/NNP project/NN ?/.";
pub const MOTTA: &str = "In/IN which/WDT projects/NNS is/VBZ enrico/NNP motta/NNP working/VBG on/IN ?/.";

// Every check returns a one-line summary on success and a reason on failure.
pub type Check = Result<String, String>;

/// Representation suite: exact structure and tuple match, each under a second.
pub fn check_ir_suite() -> Check {
    let mut total = 0;
    let mut slowest = 0u128;
    for (config, corpus) in [("vi", "corpus/vi_ir.jsonl"), ("en", "corpus/en_ir.jsonl")] {
        let engine = engine(config);
        let items = parse_corpus(&read_data(corpus)).map_err(|e| e.to_string())?;
        let report = engine.evaluate_corpus(&items);
        for case in &report.cases {
            if case.correct != Some(true) {
                return Err(format!("{}: {}", case.id, case.detail.clone().unwrap_or_default()));
            }
            if case.micros >= 1_000_000 {
                return Err(format!("{} took {} us", case.id, case.micros));
            }
            slowest = slowest.max(case.micros);
        }
        total += report.total;
    }
    if total < 13 {
        return Err(format!("only {total} questions in the suite"));
    }
    Ok(format!("{total}/{total} exact, slowest {:.1} ms", slowest as f64 / 1000.0))
}

/// Evaluation paths through the nine-node English tree.
pub fn check_paths() -> Check {
    let engine = engine("en_nine");
    let mut parts = Vec::new();
    for (q, path, last) in [(PARTNERS, vec![0, 1, 2, 3, 5, 40, 42, 43, 45], 40), (MOTTA, vec![0, 1, 2], 2)] {
        let a = engine.analyze(q, None).map_err(|e| e.to_string())?;
        if a.evaluation.path != path || a.evaluation.last_fired != last {
            return Err(format!("`{q}`: path {:?} last fired {}", a.evaluation.path, a.evaluation.last_fired));
        }
        let shown: Vec<String> = path.iter().map(|n| n.to_string()).collect();
        parts.push(format!("{} (last {last})", shown.join("-")));
    }
    Ok(parts.join(", "))
}

/// Letter documents: "abc" has A over (0,1), B over (1,2), C over (2,3).
pub fn letters(s: &str) -> Result<Document, String> {
    let mut d = Document::new(s);
    for (i, c) in s.chars().enumerate() {
        d.add(&c.to_ascii_uppercase().to_string(), Span::new(i, i + 1), Features::new()).map_err(|e| e.to_string())?;
    }
    Ok(d)
}

fn random_word(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| ['a', 'b', 'c'][rng.gen_range(0..3)]).collect()
}

fn letter_rule(rng: &mut ChaCha8Rng, case: &str, id: NodeId) -> String {
    let chars: Vec<char> = case.chars().collect();
    let i = rng.gen_range(0..chars.len());
    let j = rng.gen_range(i + 1..=chars.len().min(i + 3));
    let items: Vec<String> = chars[i..j]
        .iter()
        .map(|c| match rng.gen_range(0..4) {
            0 => "{A | B | C}".to_string(),
            1 => format!("{{{}}}+", c.to_ascii_uppercase()),
            _ => format!("{{{}}}", c.to_ascii_uppercase()),
        })
        .collect();
    format!("({}):m --> :m.R{id}={{}}", items.join(" "))
}

fn letter_draft(rule: String, id: NodeId) -> RuleDraft {
    serde_json::from_value(serde_json::json!({
        "rule_text": rule,
        "conclusion": {"structure": "Normal", "tuples": [["\"Normal\"", "\"List\"", format!("R{id}"), "\"r\"", format!("\"n{id}\""), "?"]]},
        "id": id,
    }))
    .expect("draft shape")
}

/// Randomized insertions: after every accepted rule the new case reaches it,
/// every earlier cornerstone keeps its conclusion, and the tree validates.
/// Rejected rules leave the tree unchanged.
pub fn check_insertions(trials: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut accepted, mut conflicts) = (0, 0);
    let mut trial = 0;
    while trial < trials {
        let mut kb = KnowledgeBase::new(Language::En);
        let mut expected: BTreeMap<NodeId, IntermediateRepresentation> = BTreeMap::new();
        for _ in 0..rng.gen_range(3..12) {
            if trial == trials {
                break;
            }
            trial += 1;
            let case = random_word(&mut rng, 2, 6);
            let id = trial as NodeId;
            let draft = letter_draft(letter_rule(&mut rng, &case, id), id);
            let before = kb.clone();
            let doc = letters(&case)?;
            match kb.add_exception(&doc, &case, &draft, &letters) {
                Ok(ins) => {
                    accepted += 1;
                    if ins.after.last_fired != id {
                        return Err(format!("trial {trial}: `{case}` ends at {} not {id}", ins.after.last_fired));
                    }
                    let ir = ins.after.conclusion.clone().ok_or("new rule gave no conclusion")?;
                    expected.insert(id, ir);
                }
                Err(KbError::Conflict { .. } | KbError::SlotOccupied(_)) => {
                    conflicts += 1;
                    if kb != before {
                        return Err(format!("trial {trial}: rejected insertion changed the tree"));
                    }
                }
                Err(e) => return Err(format!("trial {trial}: unexpected error {e}")),
            }
            let problems = kb.validate();
            if !problems.is_empty() {
                return Err(format!("trial {trial}: {}", problems.join("; ")));
            }
            for node in kb.nodes() {
                let Some(c) = &node.cornerstone else { continue };
                let r = kb.evaluate(&mut letters(c)?).map_err(|e| e.to_string())?;
                if r.last_fired != node.id || r.conclusion.as_ref() != expected.get(&node.id) {
                    return Err(format!("trial {trial}: cornerstone `{c}` of {} now ends at {}", node.id, r.last_fired));
                }
            }
        }
    }
    if accepted < trials / 4 {
        return Err(format!("only {accepted} of {trials} insertions were accepted"));
    }
    Ok(format!("{trials} trials, {accepted} accepted, {conflicts} rejected, all cornerstones stable"))
}

/// Backtracking matcher against exhaustive enumeration.
pub fn check_matcher(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matched = 0;
    for n in 0..cases {
        let doc = oracles::random_document(&mut rng, 6);
        let root = oracles::random_pattern(&mut rng, 5);
        let pattern = ConditionPattern { root };
        let got = find_match(&doc, &pattern).map(|m| m.span);
        let want = oracles::brute_match(&doc, &pattern.root);
        if got != want {
            return Err(format!("case {n}: pattern {:?} on {:?}: matcher {got:?}, oracle {want:?}", pattern.root, doc.annotations()));
        }
        matched += usize::from(got.is_some());
    }
    Ok(format!("{cases} cases agree ({matched} with a match)"))
}

/// Similarity against a memoized recursive edit distance.
pub fn check_similarity(pairs: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..pairs {
        let a = oracles::random_unicode(&mut rng);
        let b = if rng.gen_bool(0.3) { oracles::mutate(&mut rng, &a) } else { oracles::random_unicode(&mut rng) };
        let want = oracles::similarity_oracle(&a, &b);
        let got = similarity(&a, &b);
        if (got - want).abs() > 1e-12 {
            return Err(format!("pair {n}: {a:?} vs {b:?}: {got} vs {want}"));
        }
    }
    let enroll = similarity("enroll", "enrolled");
    if (enroll - 0.75).abs() > 1e-12 {
        return Err(format!("enroll/enrolled scored {enroll}"));
    }
    Ok(format!("{pairs} pairs agree, enroll/enrolled = {enroll}"))
}

fn answer_items(outcome: &AnswerOutcome) -> Result<BTreeSet<String>, String> {
    match outcome {
        AnswerOutcome::Answered { answer, .. } => Ok(answer.items.iter().cloned().collect()),
        AnswerOutcome::Pending { choice, .. } => Err(format!("unexpected clarification for `{}`", choice.term)),
    }
}

/// Structure semantics against set computations on random ontologies, the
/// two-clause list question against a brute-forced intersection, and the
/// ambiguous class name offering exactly two candidates.
pub fn check_answers(trials: usize, seed: u64) -> Check {
    let informative = oracles::answer_semantics(trials, seed)?;

    let vi = engine("vi");
    let q = "Liệt kê tất cả sinh viên học lớp K50 khoa học máy tính mà có quê ở Hà Nội";
    let got = answer_items(&vi.answer(q, None).map_err(|e| e.to_string())?)?;
    let ont = vi.ontology();
    let holds = |s: &str, r: &str, o: &str| ont.assertions().iter().any(|a| a.s == s && a.r == r && a.o == o);
    let want: BTreeSet<String> = ont
        .instances()
        .iter()
        .filter(|i| i.concepts.iter().any(|c| c == "sinh viên"))
        .filter(|i| holds(&i.name, "học", "lớp K50 khoa học máy tính") && holds(&i.name, "có quê", "Hà Nội"))
        .map(|i| i.name.clone())
        .collect();
    if got != want || want.is_empty() {
        return Err(format!("clause list answer {got:?}, brute force {want:?}"));
    }

    let q = "Liệt kê tất cả các sinh viên học lớp khoa học máy tính";
    let AnswerOutcome::Pending { choice, .. } = vi.answer(q, None).map_err(|e| e.to_string())? else {
        return Err("ambiguous class name was answered without asking".into());
    };
    if choice.candidates.len() != 2 {
        return Err(format!("ambiguity offers {:?}", choice.candidates));
    }
    Ok(format!(
        "{trials} random structure cases ({informative} non-empty), clause list = {} students, ambiguity offers 2",
        want.len()
    ))
}

type Outcomes = Vec<(Vec<NodeId>, Option<IntermediateRepresentation>)>;

fn paths_and_irs(engine: &Engine, corpus: &str) -> Result<Outcomes, String> {
    let items = parse_corpus(&read_data(corpus)).map_err(|e| e.to_string())?;
    items
        .iter()
        .map(|item| {
            let a = engine.analyze(item.input(), None).map_err(|e| e.to_string())?;
            Ok((a.evaluation.path, a.evaluation.conclusion))
        })
        .collect()
}

/// A copy of a bundled configuration that reads the tree from `kb` and
/// everything else from the bundled data directory.
pub fn relocated_config(name: &str, kb: &Path, dir: &Path) -> PathBuf {
    let mut config: serde_json::Value = serde_json::from_str(&read_data(&format!("config/{name}.json"))).unwrap();
    let base = data_dir().join("config");
    for key in ["ontology", "synonyms"] {
        config[key] = serde_json::json!(base.join(config[key].as_str().unwrap()));
    }
    config["lexicons"] = serde_json::json!(config["lexicons"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| base.join(p.as_str().unwrap()))
        .collect::<Vec<_>>());
    config["kb"] = serde_json::json!(kb);
    let file = dir.join(format!("{name}_config.json"));
    std::fs::write(&file, config.to_string()).unwrap();
    file
}

/// An engine over a private copy of a bundled tree, for tests that add rules.
pub fn scratch_engine(name: &str) -> (tempfile::TempDir, Engine) {
    let dir = tempfile::tempdir().unwrap();
    let config: serde_json::Value = serde_json::from_str(&read_data(&format!("config/{name}.json"))).unwrap();
    let kb = dir.path().join("kb.json");
    std::fs::copy(data_dir().join("config").join(config["kb"].as_str().unwrap()), &kb).unwrap();
    let engine = Engine::load(&relocated_config(name, &kb, dir.path())).unwrap();
    (dir, engine)
}

/// Persist and reload each shipped tree; paths and representations survive,
/// replaying the acquisition scripts reproduces the files, and the
/// histograms are reported.
pub fn check_persistence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut nodes = 0;
    for (name, corpus, script) in [
        ("vi", "corpus/vi_ir.jsonl", "kb/vi_script.jsonl"),
        ("en", "corpus/en_ir.jsonl", "kb/en_script.jsonl"),
    ] {
        let original = engine(name);
        let kb = original.knowledge_base();
        let replayed = original.replay(&parse_script(&read_data(script)).map_err(|e| e.to_string())?);
        if replayed.as_ref().map_err(|e| e.to_string())? != &kb {
            return Err(format!("replaying {script} does not reproduce the {name} tree"));
        }
        let copy = dir.path().join(format!("{name}.json"));
        kb.persist(&copy).map_err(|e| e.to_string())?;
        let reloaded = KnowledgeBase::load(&copy).map_err(|e| e.to_string())?;
        if reloaded != kb {
            return Err(format!("{name} tree differs after a round trip"));
        }
        let config_file = relocated_config(name, &copy, dir.path());
        let restored = Engine::load(&config_file).map_err(|e| e.to_string())?;
        if paths_and_irs(&original, corpus)? != paths_and_irs(&restored, corpus)? {
            return Err(format!("{name} paths or representations changed after reload"));
        }
        let stats = stats_of(&reloaded);
        let report = restored.evaluate_corpus(&[]);
        if stats.layers.is_empty() || stats.structures.is_empty() || report.stats.layers != stats.layers {
            return Err(format!("{name} histograms missing"));
        }
        nodes += stats.nodes;
    }
    Ok(format!("{nodes} nodes round-tripped, replay reproduces both trees, histograms reported"))
}
