//! Independent reference implementations used to cross-check the engine.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdrqa::annotation::{Annotation, Document, Features, Span};
use rdrqa::answer::answer_question;
use rdrqa::ir::QuestionStructure;
use rdrqa::language::Language;
use rdrqa::mapper::OntologyTuple;
use rdrqa::ontology::{Element, ElementKind, Ontology};
use rdrqa::pattern::{AnnotationTest, FeatureTest, PatternNode, Quantifier, TypeExpr};

const TYPES: [&str; 3] = ["A", "B", "C"];

/// Five two-letter tokens and up to `max` annotations over token runs.
pub fn random_document(rng: &mut ChaCha8Rng, max: usize) -> Document {
    let mut doc = Document::new("aa bb cc dd ee");
    for _ in 0..rng.gen_range(1..=max) {
        let i = rng.gen_range(0..5);
        let j = rng.gen_range(i..5.min(i + 3));
        let mut f = Features::new();
        if rng.gen_bool(0.5) {
            f.insert("f".into(), ["x", "y"].choose(rng).unwrap().to_string());
        }
        doc.add(TYPES.choose(rng).unwrap(), Span::new(3 * i, 3 * j + 2), f).unwrap();
    }
    doc
}

fn random_test(rng: &mut ChaCha8Rng) -> PatternNode {
    let alternatives = (0..rng.gen_range(1..=2))
        .map(|_| TypeExpr {
            type_name: TYPES.choose(rng).unwrap().to_string(),
            feature: rng
                .gen_bool(0.3)
                .then(|| FeatureTest { name: "f".into(), value: ["x", "y"].choose(rng).unwrap().to_string() }),
        })
        .collect();
    PatternNode::Test(AnnotationTest { alternatives })
}

/// A random pattern tree of at most `budget` nodes.
pub fn random_pattern(rng: &mut ChaCha8Rng, budget: usize) -> PatternNode {
    let choice = if budget >= 3 { rng.gen_range(0..5) } else if budget == 2 { rng.gen_range(0..3) } else { 0 };
    match choice {
        1 => {
            let quantifier = [Quantifier::Optional, Quantifier::OneOrMore, Quantifier::ZeroOrMore].choose(rng).unwrap();
            let size = rng.gen_range(1..budget);
            let inner = random_pattern(rng, size);
            PatternNode::Quantified { inner: Box::new(inner), quantifier: *quantifier }
        }
        2 => {
            let label = rng.gen_bool(0.5).then(|| "g".to_string());
            let size = rng.gen_range(1..budget);
            PatternNode::Group { inner: Box::new(random_pattern(rng, size)), label }
        }
        3 | 4 => {
            let left = rng.gen_range(1..budget - 1);
            let right = rng.gen_range(1..=budget - 1 - left);
            let items = vec![random_pattern(rng, left), random_pattern(rng, right)];
            if choice == 3 {
                PatternNode::Sequence(items)
            } else {
                PatternNode::Alternation(items)
            }
        }
        _ => random_test(rng),
    }
}

type Seqs = BTreeSet<Vec<usize>>;

/// Every sequence of tests the pattern can consume, up to `limit` long, as
/// indices into `tests`.
fn expand<'p>(node: &'p PatternNode, limit: usize, tests: &mut Vec<&'p AnnotationTest>) -> Seqs {
    let concat = |a: &Seqs, b: &Seqs| {
        let mut out = Seqs::new();
        for x in a {
            for y in b {
                if x.len() + y.len() <= limit {
                    out.insert(x.iter().chain(y).copied().collect());
                }
            }
        }
        out
    };
    match node {
        PatternNode::Test(t) => {
            tests.push(t);
            Seqs::from([vec![tests.len() - 1]])
        }
        PatternNode::Sequence(items) => {
            let mut acc = Seqs::from([vec![]]);
            for item in items {
                acc = concat(&acc, &expand(item, limit, tests));
            }
            acc
        }
        PatternNode::Alternation(items) => items.iter().flat_map(|i| expand(i, limit, tests)).collect(),
        PatternNode::Group { inner, .. } => expand(inner, limit, tests),
        PatternNode::Quantified { inner, quantifier } => {
            let one = expand(inner, limit, tests);
            let mut acc = one.clone();
            if *quantifier != Quantifier::OneOrMore {
                acc.insert(vec![]);
            }
            if *quantifier != Quantifier::Optional {
                loop {
                    let next: Seqs = concat(&acc, &one).union(&acc).cloned().collect();
                    if next.len() == acc.len() {
                        break;
                    }
                    acc = next;
                }
            }
            acc
        }
    }
}

fn passes(ann: &Annotation, test: &AnnotationTest) -> bool {
    test.alternatives.iter().any(|alt| {
        ann.type_name == alt.type_name
            && alt.feature.as_ref().is_none_or(|f| ann.features.get(&f.name) == Some(&f.value))
    })
}

fn first_non_space(doc: &Document, mut at: usize) -> usize {
    let chars: Vec<char> = doc.text().chars().collect();
    while at < chars.len() && chars[at].is_whitespace() {
        at += 1;
    }
    at
}

fn chain_ends(doc: &Document, tests: &[&AnnotationTest], seq: &[usize], at: usize, out: &mut BTreeSet<usize>) {
    let Some((&test, rest)) = seq.split_first() else {
        out.insert(at);
        return;
    };
    let from = first_non_space(doc, at);
    for ann in doc.annotations() {
        if ann.span.start == from && passes(ann, tests[test]) {
            chain_ends(doc, tests, rest, ann.span.end, out);
        }
    }
}

/// Leftmost start with a non-empty match, furthest end from there.
pub fn brute_match(doc: &Document, root: &PatternNode) -> Option<Span> {
    let limit = doc.annotations().len();
    let mut tests = Vec::new();
    let language = expand(root, limit, &mut tests);
    let starts: BTreeSet<usize> = doc.annotations().iter().map(|a| a.span.start).collect();
    for start in starts {
        let mut ends = BTreeSet::new();
        for seq in &language {
            chain_ends(doc, &tests, seq, start, &mut ends);
        }
        if let Some(&end) = ends.iter().filter(|&&e| e > start).max() {
            return Some(Span::new(start, end));
        }
    }
    None
}

const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'A', 'B', 'z', 'ă', 'â', 'đ', 'Đ', 'ê', 'ô', 'ơ', 'ư', 'á', 'ạ', 'ấ', 'ộ', 'Ữ', 'Σ', 'σ', 'ς', 'ß', 'İ',
    '漢', '字', '😀', '🎉', '\u{301}', ' ',
];

pub fn random_unicode(rng: &mut ChaCha8Rng) -> String {
    (0..rng.gen_range(0..12)).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

/// A few random insertions, deletions and substitutions.
pub fn mutate(rng: &mut ChaCha8Rng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    for _ in 0..rng.gen_range(1..=3) {
        let c = *ALPHABET.choose(rng).unwrap();
        match rng.gen_range(0..3) {
            0 => chars.insert(rng.gen_range(0..=chars.len()), c),
            1 if !chars.is_empty() => {
                chars.remove(rng.gen_range(0..chars.len()));
            }
            _ if !chars.is_empty() => {
                let i = rng.gen_range(0..chars.len());
                chars[i] = c;
            }
            _ => chars.push(c),
        }
    }
    chars.into_iter().collect()
}

fn lev(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if i == a.len() {
        return b.len() - j;
    }
    if j == b.len() {
        return a.len() - i;
    }
    if let Some(&d) = memo.get(&(i, j)) {
        return d;
    }
    let d = if a[i] == b[j] {
        lev(a, b, i + 1, j + 1, memo)
    } else {
        1 + lev(a, b, i + 1, j, memo).min(lev(a, b, i, j + 1, memo)).min(lev(a, b, i + 1, j + 1, memo))
    };
    memo.insert((i, j), d);
    d
}

pub fn similarity_oracle(a: &str, b: &str) -> f64 {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase().chars().collect::<Vec<_>>();
    let (a, b) = (norm(a), norm(b));
    let max = a.len().max(b.len());
    if max == 0 {
        return 1.0;
    }
    1.0 - lev(&a, &b, 0, 0, &mut HashMap::new()) as f64 / max as f64
}

struct World {
    ont: Ontology,
    parents: HashMap<String, String>,
    membership: Vec<(String, String)>,
    triples: Vec<(String, String, String)>,
}

fn random_world(rng: &mut ChaCha8Rng) -> World {
    let concepts = ["k0", "k1", "k2", "k3"];
    let parents = HashMap::from([("k2".to_string(), "k0".to_string()), ("k3".to_string(), "k2".to_string())]);
    let instances: Vec<String> = (0..8).map(|i| format!("e{i}")).collect();
    let membership: Vec<(String, String)> =
        instances.iter().map(|i| (i.clone(), concepts.choose(rng).unwrap().to_string())).collect();
    let mut triples = Vec::new();
    for _ in 0..rng.gen_range(4..14) {
        let t = (
            instances.choose(rng).unwrap().clone(),
            ["r0", "r1"].choose(rng).unwrap().to_string(),
            instances.choose(rng).unwrap().clone(),
        );
        if !triples.contains(&t) {
            triples.push(t);
        }
    }
    let json = serde_json::json!({
        "concepts": concepts.iter().map(|c| match parents.get(*c) {
            Some(p) => serde_json::json!({"name": c, "parent": p}),
            None => serde_json::json!({"name": c}),
        }).collect::<Vec<_>>(),
        "relations": [{"name": "r0", "kind": "object"}, {"name": "r1", "kind": "object"}],
        "instances": membership.iter().map(|(i, c)| serde_json::json!({"name": i, "concepts": [c]})).collect::<Vec<_>>(),
        "assertions": triples.iter().map(|(s, r, o)| serde_json::json!({"s": s, "r": r, "o": o})).collect::<Vec<_>>(),
    });
    let ont = Ontology::from_json_str(&json.to_string()).expect("random ontology is well formed");
    World { ont, parents, membership, triples }
}

impl World {
    fn is_a(&self, concept: &str, target: &str) -> bool {
        let mut c = Some(concept.to_string());
        while let Some(cur) = c {
            if cur == target {
                return true;
            }
            c = self.parents.get(&cur).cloned();
        }
        false
    }

    fn extension(&self, e: &Element) -> BTreeSet<String> {
        match e.kind {
            ElementKind::Concept => {
                self.membership.iter().filter(|(_, c)| self.is_a(c, &e.name)).map(|(i, _)| i.clone()).collect()
            }
            _ => BTreeSet::from([e.name.clone()]),
        }
    }

    /// Names x such that some triple links x as described, reading triples
    /// both ways when the subject side is typed.
    fn tuple_set(&self, t: &OntologyTuple, objects: Option<&BTreeSet<String>>) -> BTreeSet<String> {
        let subjects = t.term1.as_ref().map(|e| self.extension(e));
        let objects = objects.cloned().or_else(|| t.term2.as_ref().map(|e| self.extension(e)));
        let names: BTreeSet<&String> = self.triples.iter().flat_map(|(s, _, o)| [s, o]).collect();
        let mut out = BTreeSet::new();
        for x in names {
            let rel_ok = |r: &String| t.relation.as_ref().is_none_or(|want| want == r);
            let forward = self.triples.iter().any(|(s, r, o)| {
                s == x
                    && subjects.as_ref().is_none_or(|set| set.contains(x))
                    && rel_ok(r)
                    && objects.as_ref().is_none_or(|set| set.contains(o))
            });
            let backward = subjects.as_ref().is_some_and(|set| {
                set.contains(x)
                    && self.triples.iter().any(|(s, r, o)| {
                        o == x && rel_ok(r) && objects.as_ref().is_none_or(|objs| objs.contains(s))
                    })
            });
            if forward || backward {
                out.insert(x.clone());
            }
        }
        out
    }
}

fn random_tuple(rng: &mut ChaCha8Rng, category: &str) -> OntologyTuple {
    let concept = |rng: &mut ChaCha8Rng| Element::concept(["k0", "k1", "k2", "k3"].choose(rng).unwrap());
    let term1 = rng.gen_bool(0.7).then(|| concept(rng));
    let relation = rng.gen_bool(0.7).then(|| ["r0", "r1"].choose(rng).unwrap().to_string());
    let term2 = match rng.gen_range(0..3) {
        0 => None,
        1 => Some(concept(rng)),
        _ => Some(Element::instance(&format!("e{}", rng.gen_range(0..8)))),
    };
    let sub = match (&term1, &relation) {
        (None, _) => QuestionStructure::UnknTerm,
        (_, None) => QuestionStructure::UnknRel,
        _ => QuestionStructure::Normal,
    };
    OntologyTuple {
        sub,
        category: category.into(),
        term1,
        relation,
        term2,
        term3: None,
        operand: None,
        provenance: vec![],
    }
}

/// And, Or, Clause and Affirm answers on random ontologies equal the set
/// computations above. Returns how many cases had a non-empty or "yes" answer.
pub fn answer_semantics(trials: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut informative = 0;
    let lang = Language::En;
    for n in 0..trials {
        let world = random_world(&mut rng);
        let structure = [QuestionStructure::And, QuestionStructure::Or, QuestionStructure::Clause, QuestionStructure::Affirm]
            [n % 4];
        let (category, count) = match structure {
            QuestionStructure::Affirm => ("YesNo", 1),
            QuestionStructure::Clause => ("QU-listClass", 2),
            _ => ("QU-listClass", rng.gen_range(2..=3)),
        };
        let tuples: Vec<OntologyTuple> = (0..count).map(|_| random_tuple(&mut rng, category)).collect();
        let got = answer_question(structure, &tuples, &world.ont, lang).map_err(|e| format!("case {n}: {e}"))?;
        let sets: Vec<BTreeSet<String>> = tuples.iter().map(|t| world.tuple_set(t, None)).collect();
        let want: Vec<String> = match structure {
            QuestionStructure::And => {
                let mut acc = sets[0].clone();
                for s in &sets[1..] {
                    acc = acc.intersection(s).cloned().collect();
                }
                acc.into_iter().collect()
            }
            QuestionStructure::Or => sets.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect(),
            QuestionStructure::Clause => world.tuple_set(&tuples[0], Some(&sets[1])).into_iter().collect(),
            _ => {
                let t = &tuples[0];
                let member = match (&t.term1, &t.term2) {
                    (Some(c), Some(x)) if c.kind == ElementKind::Concept && x.kind == ElementKind::Instance => {
                        world.extension(c).contains(&x.name)
                    }
                    _ => false,
                };
                let yes = !sets[0].is_empty() || member;
                vec![if yes { "yes" } else { "no" }.to_string()]
            }
        };
        let got_items = if structure == QuestionStructure::Affirm { vec![got.text.clone()] } else { got.items.clone() };
        if got_items != want {
            return Err(format!("case {n} ({structure}): engine {got_items:?}, oracle {want:?} for {tuples:?}"));
        }
        informative += usize::from(!want.is_empty() && want != ["no"]);
    }
    if informative * 4 < trials {
        return Err(format!("only {informative} of {trials} random cases had a non-empty answer"));
    }
    Ok(informative)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
