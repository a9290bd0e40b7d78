//! Chunkers over the token sequence: noun phrases, question phrases and
//! relation phrases. All chunkers are leftmost, longest-match, non-overlapping.

use serde::Serialize;

use super::{PhraseDictionary, Tok};
use crate::language::Language;
use crate::pipeline::UnitKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhraseType {
    Concept,
    Entity,
}

impl PhraseType {
    pub fn name(self) -> &'static str {
        match self {
            PhraseType::Concept => "Concept",
            PhraseType::Entity => "Entity",
        }
    }
}

/// A token range `start..end` with an optional label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
    pub phrase_type: Option<PhraseType>,
    pub category: Option<String>,
}

impl Chunk {
    fn plain(start: usize, end: usize) -> Self {
        Chunk { start, end, phrase_type: None, category: None }
    }

    fn question(start: usize, end: usize, category: &str) -> Self {
        Chunk { start, end, phrase_type: None, category: Some(category.to_string()) }
    }
}

#[derive(Clone, Copy)]
enum Q {
    One,
    Opt,
    Plus,
    Star,
}

type Step<'a> = &'a dyn Fn(usize) -> Vec<usize>;

/// Every end position reachable by matching `elems` from `i`.
fn ends(elems: &[(Step, Q)], i: usize) -> Vec<usize> {
    let Some(((step, q), rest)) = elems.split_first() else {
        return vec![i];
    };
    let mut out = Vec::new();
    match q {
        Q::One => {
            for e in step(i) {
                out.extend(ends(rest, e));
            }
        }
        Q::Opt => {
            out.extend(ends(rest, i));
            for e in step(i) {
                out.extend(ends(rest, e));
            }
        }
        Q::Plus | Q::Star => {
            if matches!(q, Q::Star) {
                out.extend(ends(rest, i));
            }
            let mut frontier = step(i);
            let mut seen = Vec::new();
            while let Some(e) = frontier.pop() {
                if seen.contains(&e) {
                    continue;
                }
                seen.push(e);
                out.extend(ends(rest, e));
                frontier.extend(step(e).into_iter().filter(|&n| n > e));
            }
        }
    }
    out
}

fn longest(elems: &[(Step, Q)], i: usize) -> Option<usize> {
    ends(elems, i).into_iter().filter(|&e| e > i).max()
}

fn tok_step<'a>(toks: &'a [Tok], pred: impl Fn(&Tok) -> bool + 'a) -> impl Fn(usize) -> Vec<usize> + 'a {
    move |i| if i < toks.len() && pred(&toks[i]) { vec![i + 1] } else { Vec::new() }
}

pub(crate) fn en_noun(tag: &str) -> bool {
    matches!(tag, "NN" | "NNS" | "NNP" | "NNPS")
}

fn vi_np_grammar(toks: &[Tok], i: usize) -> Option<usize> {
    let free = |t: &Tok| t.unit.is_none();
    let has = |tags: &'static [&'static str]| move |t: &Tok| free(t) && tags.contains(&t.tag());
    let word = |words: &'static [&'static str]| move |t: &Tok| free(t) && words.contains(&t.lower().as_str());
    let pn = tok_step(toks, has(&["Pn"]));
    let num = tok_step(toks, has(&["Nu", "Nn"]));
    let cai = tok_step(toks, word(&["cái", "chiếc"]));
    let nt = tok_step(toks, has(&["Nt"]));
    let head = tok_step(toks, has(&["Nc", "Ng", "Nu", "Na", "Np"]));
    let adj = tok_step(toks, has(&["Aa", "An"]));
    let dem = tok_step(toks, word(&["này", "kia", "ấy", "đó"]));
    let elems: [(Step, Q); 7] = [
        (&pn, Q::Opt),
        (&num, Q::Opt),
        (&cai, Q::Opt),
        (&nt, Q::Opt),
        (&head, Q::Plus),
        (&adj, Q::Opt),
        (&dem, Q::Opt),
    ];
    longest(&elems, i)
}

fn en_np_grammar(toks: &[Tok], i: usize) -> Option<usize> {
    let free = |t: &Tok| t.unit.is_none();
    let pdt = tok_step(toks, move |t| free(t) && t.tag() == "PDT");
    let dt = tok_step(toks, move |t| free(t) && t.tag() == "DT");
    let jj = tok_step(toks, move |t| free(t) && t.tag() == "JJ");
    let head = tok_step(toks, move |t| free(t) && (en_noun(t.tag()) || t.tag() == "CD"));
    let elems: [(Step, Q); 4] = [(&pdt, Q::Opt), (&dt, Q::Opt), (&jj, Q::Star), (&head, Q::Plus)];
    longest(&elems, i)
}

fn classify(toks: &[Tok], lang: Language, dict: &PhraseDictionary, text: &str) -> PhraseType {
    let (nouns, proper): (&[&str], &[&str]) = match lang {
        Language::Vi => (&["Nc", "Ng", "Nu", "Na", "Nt"], &["Np"]),
        Language::En => (&["NN", "NNS"], &["NNP", "NNPS"]),
    };
    let singles = toks.iter().filter(|t| nouns.contains(&t.tag())).count();
    let has_proper = toks.iter().any(|t| proper.contains(&t.tag()));
    if has_proper || singles >= 3 {
        PhraseType::Entity
    } else if singles == 1 || dict.contains(text, lang) {
        PhraseType::Concept
    } else {
        PhraseType::Entity
    }
}

pub fn noun_phrases(toks: &[Tok], lang: Language, dict: &PhraseDictionary) -> Vec<Chunk> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let end = match lang {
            Language::Vi => vi_np_grammar(toks, i),
            Language::En => en_np_grammar(toks, i),
        };
        match end {
            Some(end) => {
                let text = toks[i..end].iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
                let ty = classify(&toks[i..end], lang, dict, &text);
                out.push(Chunk { start: i, end, phrase_type: Some(ty), category: None });
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

const EN_YES_NO_AUX: &[&str] =
    &["is", "are", "was", "were", "do", "does", "did", "can", "could", "has", "have", "had", "will", "would"];

pub fn question_phrases(toks: &[Tok], nps: &[Chunk], lang: Language) -> Vec<Chunk> {
    let np_at = |i: usize| nps.iter().find(|c| c.start == i);
    let np_ending = |i: usize| nps.iter().find(|c| c.end == i);
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        let Some(unit) = t.unit.as_ref().filter(|u| u.kind == UnitKind::QuestionWord) else {
            if lang == Language::En && i == 0 {
                let aux = EN_YES_NO_AUX.contains(&t.lower().as_str());
                if aux && (t.tag().starts_with("VB") || t.tag() == "MD") {
                    out.push(Chunk::question(0, 1, "QU-yesno"));
                }
            }
            continue;
        };
        let cat = unit.value.as_str();
        let chunk = match (lang, cat) {
            (Language::Vi, "List") => match np_at(i + 1) {
                Some(np) => Chunk::question(i, np.end, "List"),
                None => Chunk::question(i, i + 1, "List"),
            },
            (Language::Vi, "Many") => match np_at(i + 1) {
                Some(np) => Chunk::question(i, np.end, "ManyClass"),
                None => Chunk::question(i, i + 1, "Many"),
            },
            (Language::Vi, "Entity") => match np_ending(i) {
                Some(np) => Chunk::question(np.start, i + 1, "Entity"),
                None => Chunk::question(i, i + 1, "Entity"),
            },
            (Language::En, "QU-whichClass") => match np_at(i + 1) {
                Some(np) => Chunk::question(i, np.end, "QU-whichClass"),
                None => Chunk::question(i, i + 1, "QU-who-what"),
            },
            (Language::En, "QU-listClass" | "QU-howmany") => match np_at(i + 1) {
                Some(np) => Chunk::question(i, np.end, cat),
                None => Chunk::question(i, i + 1, cat),
            },
            _ => Chunk::question(i, i + 1, cat),
        };
        out.push(chunk);
    }
    out.sort_by_key(|c| c.start);
    out
}

pub fn relations(toks: &[Tok], nps: &[Chunk], qps: &[Chunk], lang: Language) -> Vec<Chunk> {
    let in_qp = |i: usize| qps.iter().any(|c| c.start <= i && i < c.end);
    let eligible: Vec<bool> = (0..toks.len()).map(|i| toks[i].unit.is_none() && !in_qp(i)).collect();
    let ok = |i: usize| i < toks.len() && eligible[i];
    let is_verb = |t: &Tok| match lang {
        Language::Vi => t.tag().starts_with('V') && t.tag() != "Vc",
        Language::En => t.tag().starts_with("VB"),
    };
    let is_prep = |t: &Tok| match lang {
        Language::Vi => matches!(t.tag(), "Cm" | "E"),
        Language::En => matches!(t.tag(), "IN" | "TO"),
    };
    let is_adj = |t: &Tok| match lang {
        Language::Vi => matches!(t.tag(), "A" | "Aa" | "An"),
        Language::En => matches!(t.tag(), "JJ" | "JJR" | "JJS"),
    };
    let is_co = |t: &Tok| lang == Language::Vi && t.lower() == "có";

    let verb = |i: usize| if ok(i) && is_verb(&toks[i]) { vec![i + 1] } else { Vec::new() };
    let prep = |i: usize| if ok(i) && is_prep(&toks[i]) { vec![i + 1] } else { Vec::new() };
    let adj = |i: usize| if ok(i) && is_adj(&toks[i]) { vec![i + 1] } else { Vec::new() };
    let co = |i: usize| if ok(i) && is_co(&toks[i]) { vec![i + 1] } else { Vec::new() };
    let co_or_verb = |i: usize| if ok(i) && (is_co(&toks[i]) || is_verb(&toks[i])) { vec![i + 1] } else { Vec::new() };
    let la = |i: usize| if ok(i) && toks[i].lower() == "là" { vec![i + 1] } else { Vec::new() };
    let concept_np = |i: usize| {
        nps.iter()
            .filter(|c| c.start == i && c.phrase_type == Some(PhraseType::Concept) && (c.start..c.end).all(ok))
            .map(|c| c.end)
            .collect::<Vec<_>>()
    };
    let prep_verb = |i: usize| {
        let mut out = prep(i);
        if let Some(&e) = out.first() {
            out.extend(verb(e));
        }
        out
    };
    let np_or_adj = |i: usize| {
        let mut out = concept_np(i);
        out.extend(adj(i));
        out
    };

    let p1: [(Step, Q); 4] = [(&verb, Q::Plus), (&concept_np, Q::One), (&prep, Q::One), (&verb, Q::Opt)];
    let p2: [(Step, Q); 2] = [(&verb, Q::Plus), (&prep_verb, Q::Opt)];
    let p3: [(Step, Q); 4] = [(&co_or_verb, Q::Plus), (&adj, Q::One), (&prep, Q::One), (&verb, Q::Opt)];
    let p4: [(Step, Q); 3] = [(&co, Q::One), (&np_or_adj, Q::One), (&la, Q::One)];
    let patterns: Vec<&[(Step, Q)]> = match lang {
        Language::Vi => vec![&p1, &p2, &p3, &p4],
        Language::En => vec![&p1, &p2, &p3],
    };

    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        match patterns.iter().filter_map(|p| longest(p, i)).max() {
            Some(end) => {
                out.push(Chunk::plain(i, end));
                i = end;
            }
            None => i += 1,
        }
    }
    out
}
