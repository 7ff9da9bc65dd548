//! The formula language: propositions, Boolean connectives, possible-worlds
//! knowledge `K[i]` and the human's bounded knowledge `Khat`.
//!
//! Concrete syntax, loosest to tightest binding:
//!
//! ```text
//! formula := impl
//! impl    := disj ("->" impl)?
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := "!" unary | "K[" ident "]" unary | "Khat" unary | "(" formula ")" | ident
//! ident   := [a-z_][a-zA-Z0-9_.]*
//! ```
//!
//! `|` and `->` are sugar: the parser rewrites them into `!` and `&`, so the
//! AST only has five node kinds and structural equality is formula identity.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// A formula after desugaring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// Possible-worlds knowledge of the named agent.
    Knows(String, Box<Formula>),
    /// Bounded knowledge of the human agent.
    BKnows(Box<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    /// `a | b`, encoded as `!(!a & !b)`.
    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `a -> b`, encoded as `!(a & !b)`.
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn knows(agent: impl Into<String>, f: Formula) -> Self {
        Formula::Knows(agent.into(), Box::new(f))
    }

    pub fn bknows(f: Formula) -> Self {
        Formula::BKnows(Box::new(f))
    }

    /// Left-nested conjunction of the given formulas; `None` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        items.into_iter().reduce(Formula::and)
    }

    pub fn contains_bknows(&self) -> bool {
        match self {
            Formula::Prop(_) => false,
            Formula::Not(f) | Formula::Knows(_, f) => f.contains_bknows(),
            Formula::And(a, b) => a.contains_bknows() || b.contains_bknows(),
            Formula::BKnows(_) => true,
        }
    }

    /// True when neither `K[i]` nor `Khat` occurs.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::Prop(_) => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::And(a, b) => a.is_propositional() && b.is_propositional(),
            Formula::Knows(..) | Formula::BKnows(_) => false,
        }
    }

    /// Nesting depth; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Prop(_) => 0,
            Formula::Not(f) | Formula::Knows(_, f) | Formula::BKnows(f) => 1 + f.depth(),
            Formula::And(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Proposition names in first-occurrence order.
    pub fn propositions(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Formula::Prop(p) => {
                if !out.contains(&p.as_str()) {
                    out.push(p);
                }
            }
            Formula::Not(f) | Formula::Knows(_, f) | Formula::BKnows(f) => f.collect_props(out),
            Formula::And(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    /// Agent names used by `K[i]`, in first-occurrence order.
    pub fn agents(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_agents(&mut out);
        out
    }

    fn collect_agents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Formula::Prop(_) => {}
            Formula::Knows(i, f) => {
                if !out.contains(&i.as_str()) {
                    out.push(i);
                }
                f.collect_agents(out);
            }
            Formula::Not(f) | Formula::BKnows(f) => f.collect_agents(out),
            Formula::And(a, b) => {
                a.collect_agents(out);
                b.collect_agents(out);
            }
        }
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Prop(_) => vec![],
            Formula::Not(f) | Formula::Knows(_, f) | Formula::BKnows(f) => vec![f],
            Formula::And(a, b) => vec![a, b],
        }
    }
}

/// Post-order list of distinct subformulas: children precede parents and
/// every subformula appears once, at its first completion.
pub fn subformulas(f: &Formula) -> Vec<Formula> {
    fn walk(f: &Formula, seen: &mut HashSet<Formula>, out: &mut Vec<Formula>) {
        for child in f.children() {
            walk(child, seen, out);
        }
        if seen.insert(f.clone()) {
            out.push(f.clone());
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    walk(f, &mut seen, &mut out);
    out
}

/// `true` for strings matching `[a-z_][a-zA-Z0-9_.]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c == '_' => chars.all(is_ident_continue),
        _ => false,
    }
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

/// A proposition or its negation: an element of the literal set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub prop: String,
    pub negated: bool,
}

impl Literal {
    pub fn pos(prop: impl Into<String>) -> Self {
        Literal {
            prop: prop.into(),
            negated: false,
        }
    }

    pub fn neg(prop: impl Into<String>) -> Self {
        Literal {
            prop: prop.into(),
            negated: true,
        }
    }

    pub fn complement(&self) -> Literal {
        Literal {
            prop: self.prop.clone(),
            negated: !self.negated,
        }
    }

    pub fn to_formula(&self) -> Formula {
        let p = Formula::prop(self.prop.clone());
        if self.negated {
            Formula::not(p)
        } else {
            p
        }
    }

    pub fn from_formula(f: &Formula) -> Option<Literal> {
        match f {
            Formula::Prop(p) => Some(Literal::pos(p.clone())),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Prop(p) => Some(Literal::neg(p.clone())),
                _ => None,
            },
            _ => None,
        }
    }

    /// Parses `p` or `!p`.
    pub fn parse(text: &str) -> Result<Literal, ParseError> {
        let f = parse_formula(text)?;
        Literal::from_formula(&f).ok_or(ParseError {
            column: 1,
            kind: ParseErrorKind::NotALiteral,
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!{}", self.prop)
        } else {
            f.write_str(&self.prop)
        }
    }
}

/// A mental-model deduction `l1 & ... & lk -> Khat phi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Implication {
    pub antecedents: Vec<Literal>,
    /// The formula `phi`; the deduction yields `Khat phi`.
    pub conclusion: Formula,
}

impl Implication {
    pub fn new(antecedents: Vec<Literal>, conclusion: Formula) -> Self {
        Implication {
            antecedents,
            conclusion,
        }
    }

    /// Parses `l1 & ... & lk -> Khat phi`. The conclusion must be written
    /// with an explicit `Khat`.
    pub fn parse(text: &str) -> Result<Implication, ParseError> {
        let f = parse_formula(text)?;
        let shape_error = ParseError {
            column: 1,
            kind: ParseErrorKind::NotAnImplication,
        };
        // `a -> Khat phi` desugars to `!(a & !Khat phi)`.
        let Formula::Not(inner) = &f else {
            return Err(shape_error);
        };
        let Formula::And(lhs, rhs) = inner.as_ref() else {
            return Err(shape_error);
        };
        let Formula::Not(rhs) = rhs.as_ref() else {
            return Err(shape_error);
        };
        let Formula::BKnows(conclusion) = rhs.as_ref() else {
            return Err(shape_error);
        };
        let mut antecedents = Vec::new();
        let mut stack = vec![lhs.as_ref()];
        while let Some(node) = stack.pop() {
            match node {
                Formula::And(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                other => antecedents.push(Literal::from_formula(other).ok_or(shape_error.clone())?),
            }
        }
        Ok(Implication::new(antecedents, (**conclusion).clone()))
    }

    /// The propositional side condition `l1 & ... & lk -> phi` that has to be
    /// valid for the deduction to be sound.
    pub fn validity_formula(&self) -> Formula {
        let lhs = Formula::conjunction(self.antecedents.iter().map(Literal::to_formula))
            .expect("implication with no antecedents");
        Formula::implies(lhs, self.conclusion.clone())
    }

    /// The bounded-knowledge formula produced when the deduction fires.
    pub fn output(&self) -> Formula {
        Formula::bknows(self.conclusion.clone())
    }
}

impl fmt::Display for Implication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, lit) in self.antecedents.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{lit}")?;
        }
        f.write_str(" -> ")?;
        write_formula(f, &Formula::bknows(self.conclusion.clone()), Level::Unary)
    }
}

// ---------------------------------------------------------------------------
// Printer

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Conj,
    Unary,
}

fn write_formula(out: &mut fmt::Formatter<'_>, f: &Formula, level: Level) -> fmt::Result {
    match f {
        Formula::Prop(p) => out.write_str(p),
        Formula::Not(inner) => {
            out.write_str("!")?;
            write_formula(out, inner, Level::Unary)
        }
        Formula::Knows(agent, inner) => {
            write!(out, "K[{agent}]")?;
            write_operand(out, inner)
        }
        Formula::BKnows(inner) => {
            out.write_str("Khat")?;
            write_operand(out, inner)
        }
        Formula::And(a, b) => {
            if level == Level::Unary {
                out.write_str("(")?;
            }
            write_formula(out, a, Level::Conj)?;
            out.write_str(" & ")?;
            write_formula(out, b, Level::Unary)?;
            if level == Level::Unary {
                out.write_str(")")?;
            }
            Ok(())
        }
    }
}

/// Operand of a prefix modal operator: a space before atoms and prefix
/// operators, nothing before a parenthesised conjunction.
fn write_operand(out: &mut fmt::Formatter<'_>, f: &Formula) -> fmt::Result {
    if !matches!(f, Formula::And(..)) {
        out.write_str(" ")?;
    }
    write_formula(out, f, Level::Unary)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, Level::Conj)
    }
}

/// Canonical text; `parse_formula(&print_formula(f))` returns `f`.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {kind}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown operator '{0}'")]
    UnknownOperator(String),
    #[error("unbalanced parentheses")]
    UnbalancedParens,
    #[error("unexpected {0}")]
    Unexpected(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected a literal (`p` or `!p`)")]
    NotALiteral,
    #[error("expected `l1 & ... & lk -> Khat phi`")]
    NotAnImplication,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bang,
    Amp,
    Bar,
    Arrow,
    LParen,
    RParen,
    KOpen,
    RBracket,
    Khat,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Bang => f.write_str("'!'"),
            Tok::Amp => f.write_str("'&'"),
            Tok::Bar => f.write_str("'|'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::KOpen => f.write_str("'K['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Khat => f.write_str("'Khat'"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ']' => Some(Tok::RBracket),
            _ => None,
        };
        if let Some(tok) = single {
            toks.push((tok, column));
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push((Tok::Arrow, column));
            i += 2;
        } else if c == 'K' && chars.get(i + 1) == Some(&'[') {
            toks.push((Tok::KOpen, column));
            i += 2;
        } else if c == 'K' && chars[i + 1..].starts_with(&['h', 'a', 't']) {
            let end = i + 4;
            if chars.get(end).copied().is_some_and(is_ident_continue) {
                let word: String = chars[i..]
                    .iter()
                    .take_while(|c| is_ident_continue(**c))
                    .collect();
                return Err(ParseError {
                    column,
                    kind: ParseErrorKind::UnknownOperator(word),
                });
            }
            toks.push((Tok::Khat, column));
            i = end;
        } else if c.is_ascii_lowercase() || c == '_' {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), column));
        } else {
            let word: String = if c.is_ascii_alphanumeric() {
                chars[i..]
                    .iter()
                    .take_while(|c| is_ident_continue(**c))
                    .collect()
            } else {
                c.to_string()
            };
            return Err(ParseError {
                column,
                kind: ParseErrorKind::UnknownOperator(word),
            });
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_column)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            None => ParseError {
                column: self.end_column,
                kind: ParseErrorKind::UnexpectedEnd,
            },
            Some(Tok::RParen) => ParseError {
                column: self.column(),
                kind: ParseErrorKind::UnbalancedParens,
            },
            Some(t) => ParseError {
                column: self.column(),
                kind: ParseErrorKind::Unexpected(t.to_string()),
            },
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while self.peek() == Some(&Tok::Bar) {
            self.bump();
            let rhs = self.conjunction()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Khat) => {
                self.bump();
                Ok(Formula::bknows(self.unary()?))
            }
            Some(Tok::KOpen) => {
                self.bump();
                let agent = match self.peek() {
                    Some(Tok::Ident(name)) => name.clone(),
                    _ => return Err(self.unexpected()),
                };
                self.bump();
                if self.peek() != Some(&Tok::RBracket) {
                    return Err(self.unexpected());
                }
                self.bump();
                Ok(Formula::knows(agent, self.unary()?))
            }
            Some(Tok::LParen) => {
                let open = self.column();
                self.bump();
                let inner = self.implication()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.bump();
                        Ok(inner)
                    }
                    None => Err(ParseError {
                        column: open,
                        kind: ParseErrorKind::UnbalancedParens,
                    }),
                    Some(_) => Err(self.unexpected()),
                }
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.bump();
                Ok(Formula::Prop(name))
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses a formula, desugaring `|` and `->`.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end_column: text.chars().count() + 1,
    };
    let f = parser.implication()?;
    if parser.peek().is_some() {
        return Err(parser.unexpected());
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
