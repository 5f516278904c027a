//! Text formats.
//!
//! ```text
//! q(x) :- R(x,y), R(y,z).          query
//! R(a,b). R(b,c).                  instance (one or more facts per line)
//! tuple: (a)                       distinguished tuple of an example
//! +example / -example              section headers of a labeled collection
//! ```
//!
//! Query arguments must be variables: identifiers starting with a lowercase
//! letter or `_`. Anything else in argument position is a constant and is
//! rejected. Instance values may be identifiers, numbers, quoted strings or
//! product values such as `⟨a,b⟩`.

use std::collections::HashMap;

use super::{
    strip_comment, DataExample, Fact, Instance, InstanceBuilder, LabeledExampleSet, Name, Schema,
};
use crate::error::{Error, Result};
use crate::model::Cq;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    /// number, quoted string or product value: never a variable
    Literal(String),
    LParen,
    RParen,
    Comma,
    Implies,
    Dot,
    Colon,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_variable(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_lowercase() || c == '_')
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let line = self.line;
            match c {
                '\n' => {
                    self.line += 1;
                    self.chars.next();
                }
                c if c.is_whitespace() => {
                    self.chars.next();
                }
                '#' | '%' => {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.chars.next();
                    }
                }
                '(' => {
                    self.chars.next();
                    out.push((Tok::LParen, line));
                }
                ')' => {
                    self.chars.next();
                    out.push((Tok::RParen, line));
                }
                ',' => {
                    self.chars.next();
                    out.push((Tok::Comma, line));
                }
                '.' => {
                    self.chars.next();
                    out.push((Tok::Dot, line));
                }
                ':' => {
                    self.chars.next();
                    if self.chars.peek() == Some(&'-') {
                        self.chars.next();
                        out.push((Tok::Implies, line));
                    } else {
                        out.push((Tok::Colon, line));
                    }
                }
                '"' => {
                    self.chars.next();
                    let mut s = String::new();
                    loop {
                        match self.chars.next() {
                            Some('"') => break,
                            Some('\n') | None => {
                                return Err(Error::syntax(line, "unterminated string"))
                            }
                            Some(c) => s.push(c),
                        }
                    }
                    out.push((Tok::Literal(s), line));
                }
                '⟨' => {
                    let mut s = String::new();
                    let mut depth = 0usize;
                    loop {
                        match self.chars.next() {
                            Some(c @ '⟨') => {
                                depth += 1;
                                s.push(c);
                            }
                            Some(c @ '⟩') => {
                                depth -= 1;
                                s.push(c);
                                if depth == 0 {
                                    break;
                                }
                            }
                            Some('\n') | None => {
                                return Err(Error::syntax(line, "unterminated `⟨`"))
                            }
                            Some(c) => s.push(c),
                        }
                    }
                    out.push((Tok::Literal(s), line));
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let mut s = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '′' {
                            s.push(c);
                            self.chars.next();
                        } else {
                            break;
                        }
                    }
                    if s.starts_with(|c: char| c.is_ascii_digit()) {
                        out.push((Tok::Literal(s), line));
                    } else {
                        out.push((Tok::Ident(s), line));
                    }
                }
                other => {
                    return Err(Error::syntax(line, format!("unexpected character `{other}`")))
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn new(toks: Vec<(Tok, usize)>, last_line: usize) -> Self {
        Parser {
            toks,
            pos: 0,
            last_line,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, l)| *l)
            .unwrap_or(self.last_line)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let line = self.line();
        match self.next() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(Error::syntax(line, format!("expected {what}, found {t:?}"))),
            None => Err(Error::syntax(line, format!("expected {what}, found end of input"))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// `Name ( term, … )` with raw terms; callers classify them.
    fn atom(&mut self) -> Result<(String, Vec<Tok>, usize)> {
        let line = self.line();
        let name = match self.next() {
            Some(Tok::Ident(n)) if is_identifier(&n) => n,
            Some(t) => return Err(Error::syntax(line, format!("expected relation name, found {t:?}"))),
            None => return Err(Error::syntax(line, "expected relation name")),
        };
        let args = self.term_list()?;
        Ok((name, args, line))
    }

    fn term_list(&mut self) -> Result<Vec<Tok>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.next();
            return Ok(args);
        }
        loop {
            let line = self.line();
            match self.next() {
                Some(t @ (Tok::Ident(_) | Tok::Literal(_))) => args.push(t),
                Some(t) => return Err(Error::syntax(line, format!("expected term, found {t:?}"))),
                None => return Err(Error::syntax(line, "unterminated argument list")),
            }
            let line = self.line();
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => return Err(Error::syntax(line, "expected `,` or `)`")),
            }
        }
        Ok(args)
    }
}

fn term_text(t: &Tok) -> &str {
    match t {
        Tok::Ident(s) | Tok::Literal(s) => s,
        _ => unreachable!("terms are identifiers or literals"),
    }
}

fn variable(t: &Tok) -> Result<&str> {
    match t {
        Tok::Ident(s) if is_variable(s) => Ok(s),
        other => Err(Error::ConstantNotSupported(term_text(other).to_string())),
    }
}

/// Parses `name(v1,…,vk) :- A1, …, An .` and checks safety.
pub fn parse_cq(text: &str) -> Result<Cq> {
    parse_cq_inner(text, None)
}

/// Like [`parse_cq`], additionally checking relations against `schema`.
pub fn parse_cq_with_schema(text: &str, schema: &Schema) -> Result<Cq> {
    parse_cq_inner(text, Some(schema))
}

fn parse_cq_inner(text: &str, schema: Option<&Schema>) -> Result<Cq> {
    let last = text.lines().count().max(1);
    let mut p = Parser::new(Lexer::new(text, 1).tokens()?, last);
    let line = p.line();
    match p.next() {
        Some(Tok::Ident(n)) if is_identifier(&n) => {}
        _ => return Err(Error::syntax(line, "expected query name")),
    }
    let head = p.term_list()?;
    let mut b = InstanceBuilder::default();
    let head_vars: Vec<String> = head
        .iter()
        .map(|t| variable(t).map(str::to_string))
        .collect::<Result<_>>()?;
    for v in &head_vars {
        b.value(v);
    }
    let mut seen_schema = Schema::new();
    match p.next() {
        Some(Tok::Implies) => {}
        Some(Tok::Dot) | None if head_vars.is_empty() => {
            // `q().` is the empty Boolean query
            if !p.at_end() {
                return Err(Error::syntax(p.line(), "trailing input after query"));
            }
            return Cq::from_example(DataExample::new(b.build(), Vec::new()));
        }
        _ => return Err(Error::syntax(line, "expected `:-`")),
    }
    let mut body: Vec<(String, Vec<String>)> = Vec::new();
    while !matches!(p.peek(), None | Some(Tok::Dot)) {
        let (rel, args, line) = p.atom()?;
        let args: Vec<String> = args
            .iter()
            .map(|t| variable(t).map(str::to_string))
            .collect::<Result<_>>()?;
        if args.is_empty() {
            return Err(Error::NullaryRelation(rel));
        }
        if let Some(s) = schema {
            match s.arity(&rel) {
                None => return Err(Error::UnknownRelation(rel)),
                Some(a) if a != args.len() => {
                    return Err(Error::ArityMismatch(format!(
                        "line {line}: `{rel}` has arity {a}, used with {}",
                        args.len()
                    )))
                }
                _ => {}
            }
        }
        seen_schema.insert(&rel, args.len())?;
        body.push((rel, args));
        match p.peek() {
            Some(Tok::Comma) => {
                p.next();
            }
            Some(Tok::Dot) | None => break,
            _ => return Err(Error::syntax(p.line(), "expected `,` or `.` after atom")),
        }
    }
    if p.peek() == Some(&Tok::Dot) {
        p.next();
    }
    if !p.at_end() {
        return Err(Error::syntax(p.line(), "trailing input after query"));
    }
    for (rel, args) in &body {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        b.fact(rel, &refs)?;
    }
    let instance = b.build();
    let tuple = head_vars
        .iter()
        .map(|v| instance.value_index(v).expect("head variable registered"))
        .collect();
    Cq::from_example(DataExample::new(instance, tuple))
}

/// Parses facts into `builder`, stopping at a `tuple:` line (returned).
fn parse_facts_into(
    text: &str,
    first_line: usize,
    b: &mut InstanceBuilder,
) -> Result<Option<(Vec<String>, usize)>> {
    let mut tuple = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = first_line + i;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("tuple") {
            if tuple.is_some() {
                return Err(Error::syntax(lineno, "duplicate `tuple:` line"));
            }
            let mut p = Parser::new(Lexer::new(rest, lineno).tokens()?, lineno);
            p.expect(Tok::Colon, "`:` after `tuple`")?;
            let terms = if p.at_end() { Vec::new() } else { p.term_list()? };
            if !p.at_end() {
                return Err(Error::syntax(lineno, "trailing input after tuple"));
            }
            tuple = Some((terms.iter().map(|t| term_text(t).to_string()).collect(), lineno));
            continue;
        }
        if tuple.is_some() {
            return Err(Error::syntax(lineno, "facts after the `tuple:` line"));
        }
        let mut p = Parser::new(Lexer::new(line, lineno).tokens()?, lineno);
        while !p.at_end() {
            let (rel, args, line) = p.atom()?;
            if args.is_empty() {
                return Err(Error::NullaryRelation(rel));
            }
            let args: Vec<&str> = args.iter().map(term_text).collect();
            b.fact(&rel, &args).map_err(|e| match e {
                Error::ArityMismatch(m) => Error::ArityMismatch(format!("line {line}: {m}")),
                e => e,
            })?;
            match p.next() {
                Some(Tok::Dot) | None => {}
                Some(Tok::Comma) => {}
                Some(t) => return Err(Error::syntax(line, format!("expected `.` after fact, found {t:?}"))),
            }
        }
    }
    Ok(tuple)
}

/// Parses newline-separated facts `R(a,b).`
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut b = InstanceBuilder::default();
    if let Some((_, line)) = parse_facts_into(text, 1, &mut b)? {
        return Err(Error::syntax(line, "unexpected `tuple:` line in an instance"));
    }
    Ok(b.build())
}

/// Parses a fact block followed by an optional `tuple: (a, b)` line.
/// A missing tuple line denotes a Boolean example.
pub fn parse_example(text: &str) -> Result<DataExample> {
    parse_example_at(text, 1)
}

fn parse_example_at(text: &str, first_line: usize) -> Result<DataExample> {
    let mut b = InstanceBuilder::default();
    let tuple = parse_facts_into(text, first_line, &mut b)?;
    let instance = b.build();
    match tuple {
        None => Ok(DataExample::new(instance, Vec::new())),
        Some((names, line)) => {
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            DataExample::with_tuple(instance, &refs).map_err(|e| match e {
                Error::SchemaMismatch(m) => Error::syntax(line, m),
                e => e,
            })
        }
    }
}

/// Parses sections headed by `+example` / `-example`.
pub fn parse_labeled(text: &str) -> Result<LabeledExampleSet> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut current: Option<(bool, usize, String)> = None;
    let mut flush = |cur: Option<(bool, usize, String)>| -> Result<()> {
        if let Some((positive, start, body)) = cur {
            let e = parse_example_at(&body, start)?;
            if positive {
                positives.push(e);
            } else {
                negatives.push(e);
            }
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = strip_comment(raw).trim();
        let header = match trimmed {
            "+example" => Some(true),
            "-example" => Some(false),
            _ => None,
        };
        if let Some(positive) = header {
            flush(current.take())?;
            current = Some((positive, lineno + 1, String::new()));
            continue;
        }
        match current.as_mut() {
            Some((_, _, body)) => {
                body.push_str(raw);
                body.push('\n');
            }
            None if trimmed.is_empty() => {}
            None => return Err(Error::syntax(lineno, "expected `+example` or `-example`")),
        }
    }
    flush(current.take())?;
    // schema consistency across examples
    let set = LabeledExampleSet::new(positives, negatives)?;
    Ok(set)
}

/// Parses JSON-style fact lists `[["R","a","b"], …]` into an instance.
pub(crate) fn instance_from_rows(rows: &[Vec<String>]) -> Result<Instance> {
    let mut b = InstanceBuilder::default();
    for row in rows {
        let (rel, args) = row
            .split_first()
            .ok_or_else(|| Error::syntax(0, "empty fact row"))?;
        if args.is_empty() {
            return Err(Error::NullaryRelation(rel.clone()));
        }
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        b.fact(rel, &refs)?;
    }
    Ok(b.build())
}

#[allow(dead_code)]
pub(crate) fn names_to_index(values: &[Name]) -> HashMap<&str, u32> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (&**v, i as u32))
        .collect()
}

#[allow(dead_code)]
fn _fact_type_check(_: Fact) {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path_query() {
        let q = parse_cq("q(x) :- R(x,y), R(y,z).").unwrap();
        assert_eq!(q.arity(), 1);
        assert_eq!(q.size(), 2);
        assert_eq!(q.var_name(q.head()[0]), "x");
    }

    #[test]
    fn duplicate_atoms_are_merged() {
        let q = parse_cq("q(x) :- R(x,y), R(x,y), R(x,y).").unwrap();
        assert_eq!(q.size(), 1);
    }

    #[test]
    fn constants_are_rejected() {
        let err = parse_cq("q(x) :- Ship(x,y,South), Ship(x,y,North).").unwrap_err();
        assert_eq!(err, Error::ConstantNotSupported("South".into()));
        let err = parse_cq("q(x) :- R(x, 2025).").unwrap_err();
        assert!(matches!(err, Error::ConstantNotSupported(_)));
    }

    #[test]
    fn unsafe_head_is_rejected() {
        assert_eq!(
            parse_cq("q(x) :- S(y).").unwrap_err(),
            Error::SafetyViolation("x".into())
        );
    }

    #[test]
    fn schema_checks() {
        let s = Schema::new().with("R", 2).unwrap();
        assert!(matches!(
            parse_cq_with_schema("q(x) :- S(x).", &s),
            Err(Error::UnknownRelation(_))
        ));
        assert!(matches!(
            parse_cq_with_schema("q(x) :- R(x).", &s),
            Err(Error::ArityMismatch(_))
        ));
        assert!(matches!(
            parse_cq("q(x) :- R(x), R(x,y)."),
            Err(Error::ArityMismatch(_))
        ));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        match parse_cq("q(x) :-\n R(x,y\n") {
            Err(Error::Syntax { line, .. }) => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_cq("q(x) R(x)."), Err(Error::Syntax { .. })));
    }

    #[test]
    fn boolean_queries() {
        let q = parse_cq("q() :- R(x,x).").unwrap();
        assert!(q.is_boolean());
        let empty = parse_cq("q().").unwrap();
        assert_eq!(empty, Cq::empty_boolean());
        let empty2 = parse_cq("q() :- .").unwrap();
        assert_eq!(empty2.size(), 0);
    }

    #[test]
    fn nullary_relations_are_rejected() {
        assert!(matches!(parse_cq("q() :- R()."), Err(Error::NullaryRelation(_))));
    }

    #[test]
    fn example_and_labeled_parsing() {
        let e = parse_example("R(a,b). R(b,c).\nR(c,a).\ntuple: (a)\n").unwrap();
        assert_eq!(e.facts().len(), 3);
        assert_eq!(e.tuple_names(), vec!["a"]);

        let b = parse_example("R(a,a).").unwrap();
        assert_eq!(b.arity(), 0);

        let bad = parse_example("R(a,b).\ntuple: (c)");
        assert!(matches!(bad, Err(Error::Syntax { line: 2, .. })));

        let set = parse_labeled(
            "# comment\n+example\nR(a,b).\ntuple: (a)\n-example\nR(a,a).\ntuple: (a)\n",
        )
        .unwrap();
        assert_eq!(set.positives().len(), 1);
        assert_eq!(set.negatives().len(), 1);

        let mixed = parse_labeled("+example\nP(a).\ntuple: (a)\n-example\nR(a,a).\n");
        assert!(matches!(mixed, Err(Error::ArityMismatch(_))));
    }

    #[test]
    fn instance_values() {
        let i = parse_instance("Ship(bolt, 2025, North).\nP(⟨a,b⟩). Q(\"hello world\").").unwrap();
        assert_eq!(i.len(), 3);
        assert!(i.value_index("⟨a,b⟩").is_some());
        assert!(i.value_index("2025").is_some());
        assert!(i.value_index("hello world").is_some());
    }
}
