use std::fmt;

use thiserror::Error;

use super::{
    AnnotationTest, ConditionPattern, ExtraConstraint, FeatureTest, PatternNode, Posting, PostingSpec,
    Quantifier, Rule, TypeExpr,
};
use crate::annotation::Features;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: expected one of [{}], found {}",
            self.line,
            self.column,
            self.expected.join(", "),
            self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("syntax error at {0}")]
    Syntax(ParseError),
    #[error("label `{0}` is declared more than once")]
    DuplicateLabel(String),
    #[error("posting refers to unknown label `{0}`")]
    UnknownLabel(String),
    #[error("the condition needs a labeled outermost group")]
    MissingOuterLabel,
    #[error("malformed extra constraint `{0}`")]
    Extra(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Colon,
    Dot,
    Pipe,
    Comma,
    Assign,
    EqEq,
    Arrow,
    Quant(Quantifier),
    Ident(String),
    Str(String),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Assign => "`=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::Arrow => "`-->`".into(),
            Tok::Quant(q) => format!("`{}`", q.symbol()),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(source: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, expected: &[&str], found: String| ParseError {
        line,
        column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (start_line, start_col) = (line, col);
        let mut advance = 1;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '|' => Tok::Pipe,
            ',' => Tok::Comma,
            '?' => Tok::Quant(Quantifier::Optional),
            '+' => Tok::Quant(Quantifier::OneOrMore),
            '*' => Tok::Quant(Quantifier::ZeroOrMore),
            '⇢' | '→' => Tok::Arrow,
            '=' => {
                if chars.get(i + 1) == Some(&'=') {
                    advance = 2;
                    Tok::EqEq
                } else {
                    Tok::Assign
                }
            }
            '-' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    advance = 3;
                    Tok::Arrow
                } else {
                    return Err(err(line, col, &["`-->`"], format!("`{c}`")));
                }
            }
            '"' | '“' | '”' => {
                let close: &[char] = if c == '"' { &['"'] } else { &['”', '“'] };
                let mut value = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => return Err(err(line, col, &["closing quote"], "end of input".into())),
                        Some('\\') if c == '"' => {
                            if let Some(&next) = chars.get(j + 1) {
                                value.push(next);
                                j += 2;
                            } else {
                                return Err(err(line, col, &["escaped character"], "end of input".into()));
                            }
                        }
                        Some(ch) if close.contains(ch) => break,
                        Some('\n') => return Err(err(line, col, &["closing quote"], "newline".into())),
                        Some(&ch) => {
                            value.push(ch);
                            j += 1;
                        }
                    }
                }
                advance = j + 1 - i;
                Tok::Str(value)
            }
            c if is_ident_char(c) => {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                advance = j - i;
                Tok::Ident(chars[i..j].iter().collect())
            }
            other => {
                return Err(err(line, col, &["`(`", "`{`", "identifier", "string"], format!("`{other}`")))
            }
        };
        out.push(Lexed { tok, line: start_line, column: start_col });
        i += advance;
        col += advance;
    }
    out.push(Lexed { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let at = &self.toks[self.pos];
        Err(ParseError {
            line: at.line,
            column: at.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: at.tok.describe(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&["string"]),
        }
    }

    fn quantifier(&mut self) -> Option<Quantifier> {
        if let Tok::Quant(q) = *self.peek() {
            self.bump();
            Some(q)
        } else {
            None
        }
    }

    fn group(&mut self) -> Result<PatternNode, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let inner = self.alt()?;
        self.expect(Tok::RParen, "`)`")?;
        let label = if *self.peek() == Tok::Colon {
            self.bump();
            Some(self.ident()?)
        } else {
            None
        };
        let node = PatternNode::Group { inner: Box::new(inner), label };
        Ok(match self.quantifier() {
            Some(q) => PatternNode::Quantified { inner: Box::new(node), quantifier: q },
            None => node,
        })
    }

    fn alt(&mut self) -> Result<PatternNode, ParseError> {
        let mut branches = vec![self.seq()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            branches.push(self.seq()?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { PatternNode::Alternation(branches) })
    }

    fn seq(&mut self) -> Result<PatternNode, ParseError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::LBrace => {
                    let test = self.test()?;
                    items.push(match self.quantifier() {
                        Some(q) => PatternNode::Quantified { inner: Box::new(test), quantifier: q },
                        None => test,
                    });
                }
                Tok::LParen => items.push(self.group()?),
                _ => break,
            }
        }
        match items.len() {
            0 => self.fail(&["`{`", "`(`"]),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(PatternNode::Sequence(items)),
        }
    }

    fn test(&mut self) -> Result<PatternNode, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut alternatives = vec![self.type_expr()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            alternatives.push(self.type_expr()?);
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(PatternNode::Test(AnnotationTest { alternatives }))
    }

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        let type_name = self.ident()?;
        let feature = if *self.peek() == Tok::Dot {
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::EqEq, "`==`")?;
            let value = self.string()?;
            Some(FeatureTest { name, value })
        } else {
            None
        };
        Ok(TypeExpr { type_name, feature })
    }

    fn posting(&mut self) -> Result<Posting, ParseError> {
        self.expect(Tok::Colon, "`:`")?;
        let label = self.ident()?;
        self.expect(Tok::Dot, "`.`")?;
        let type_name = self.ident()?;
        self.expect(Tok::Assign, "`=`")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut features = Features::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let name = self.ident()?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.string()?;
                features.insert(name, value);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(Posting { label, type_name, features })
    }
}

/// Parse `condition --> posting, ...` into a checked [`Rule`].
pub fn parse_rule(source: &str) -> Result<Rule, RuleError> {
    let toks = lex(source).map_err(RuleError::Syntax)?;
    let mut p = Parser { toks, pos: 0 };
    let root = p.group().map_err(RuleError::Syntax)?;
    p.expect(Tok::Arrow, "`-->`").map_err(RuleError::Syntax)?;
    let mut postings = vec![p.posting().map_err(RuleError::Syntax)?];
    while *p.peek() == Tok::Comma {
        p.bump();
        postings.push(p.posting().map_err(RuleError::Syntax)?);
    }
    if *p.peek() != Tok::End {
        return Err(RuleError::Syntax(p.fail::<()>(&["`,`", "end of input"]).unwrap_err()));
    }
    let condition = ConditionPattern { root };
    if condition.outer_label().is_none() {
        return Err(RuleError::MissingOuterLabel);
    }
    let mut labels = Vec::new();
    condition.root.labels(&mut labels);
    let mut seen = std::collections::BTreeSet::new();
    for l in &labels {
        if !seen.insert(l.as_str()) {
            return Err(RuleError::DuplicateLabel(l.clone()));
        }
    }
    for posting in &postings {
        if !seen.contains(posting.label.as_str()) {
            return Err(RuleError::UnknownLabel(posting.label.clone()));
        }
    }
    Ok(Rule { source: source.to_string(), condition, postings: PostingSpec { postings } })
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_ident_char)
}

/// Parse `Subject.hasAnno == Contained[.feature == value]`; the value may be
/// bare or quoted.
pub fn parse_extra(source: &str) -> Result<ExtraConstraint, RuleError> {
    let bad = || RuleError::Extra(source.to_string());
    let (subject, rest) = source.split_once(".hasAnno").ok_or_else(bad)?;
    let subject = subject.trim();
    let rest = rest.trim_start().strip_prefix("==").ok_or_else(bad)?.trim();
    let (contained_part, value) = match rest.split_once("==") {
        Some((lhs, rhs)) => (lhs.trim(), Some(rhs.trim())),
        None => (rest, None),
    };
    let (contained_type, feature) = match value {
        Some(v) => {
            let (ty, name) = contained_part.split_once('.').ok_or_else(bad)?;
            let v = v
                .strip_prefix('"')
                .and_then(|x| x.strip_suffix('"'))
                .or_else(|| v.strip_prefix('“').and_then(|x| x.strip_suffix('”')))
                .unwrap_or(v);
            if !is_ident(name.trim()) || v.is_empty() {
                return Err(bad());
            }
            (ty.trim(), Some(FeatureTest { name: name.trim().to_string(), value: v.to_string() }))
        }
        None => (contained_part, None),
    };
    if !is_ident(subject) || !is_ident(contained_type) {
        return Err(bad());
    }
    Ok(ExtraConstraint {
        subject_type: subject.to_string(),
        contained_type: contained_type.to_string(),
        feature,
    })
}
