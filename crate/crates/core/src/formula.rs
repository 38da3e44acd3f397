//! Modal formula language: atoms, the formula tree, a recursive-descent
//! parser and a minimal-parenthesis renderer.
//!
//! Concrete syntax (see `docs/formula.ebnf`):
//!
//! | token  | meaning        |
//! |--------|----------------|
//! | `~`    | negation       |
//! | `&`    | conjunction    |
//! | `\|`   | disjunction    |
//! | `->`   | implication    |
//! | `<->`  | biconditional  |
//! | `<>`   | possibly       |
//! | `[]`   | necessarily    |
//!
//! Binding strength, tightest first: unary operators, `&`, `|`, `->`, `<->`.
//! `&`, `|` and `->` associate to the right, `<->` to the left. Atoms are
//! written `VAR=VAL`; a bare `VAR` stands for `VAR=true`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Value given to an atom written without `=VAL`.
pub const BARE_VALUE: &str = "true";

/// An observation statement `variable = value`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    variable: String,
    value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtomError {
    #[error("invalid variable name {0:?}: expected [A-Za-z][A-Za-z0-9_]*")]
    Variable(String),
    #[error("invalid value {0:?}: expected [A-Za-z0-9_]+")]
    Value(String),
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(is_word_char)
}

fn is_value(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_word_char)
}

impl Atom {
    pub fn new(variable: impl Into<String>, value: impl Into<String>) -> Result<Self, AtomError> {
        let variable = variable.into();
        let value = value.into();
        if !is_variable(&variable) {
            return Err(AtomError::Variable(variable));
        }
        if !is_value(&value) {
            return Err(AtomError::Value(value));
        }
        Ok(Atom { variable, value })
    }

    /// Shorthand for `VAR=true`.
    pub fn bare(variable: impl Into<String>) -> Result<Self, AtomError> {
        Atom::new(variable, BARE_VALUE)
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value == BARE_VALUE {
            f.write_str(&self.variable)
        } else {
            write!(f, "{}={}", self.variable, self.value)
        }
    }
}

/// A modal formula. Every leaf is an [`Atom`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Diamond(Box<Formula>),
    Box(Box<Formula>),
}

impl Formula {
    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    /// Builds `variable=value`, panicking on malformed names. Intended for
    /// literals and for values that were already validated elsewhere.
    pub fn eq(variable: &str, value: &str) -> Self {
        Formula::Atom(Atom::new(variable, value).expect("well-formed atom"))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    pub fn diamond(f: Formula) -> Self {
        Formula::Diamond(Box::new(f))
    }

    pub fn boxed(f: Formula) -> Self {
        Formula::Box(Box::new(f))
    }

    /// Right-nested conjunction; `None` for an empty input.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(items: I) -> Option<Formula> {
        fold_right(items, Formula::and)
    }

    /// Right-nested disjunction; `None` for an empty input.
    pub fn disjunction<I: IntoIterator<Item = Formula>>(items: I) -> Option<Formula> {
        fold_right(items, Formula::or)
    }

    /// Largest nesting depth of modal operators.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(f) => f.modal_depth(),
            Formula::Diamond(f) | Formula::Box(f) => 1 + f.modal_depth(),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => l.modal_depth().max(r.modal_depth()),
        }
    }

    pub fn is_propositional(&self) -> bool {
        self.modal_depth() == 0
    }

    /// All atoms occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<&Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a Atom>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a);
            }
            Formula::Not(f) | Formula::Diamond(f) | Formula::Box(f) => f.collect_atoms(out),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Evaluates a modality-free formula under an atom oracle. Modal
    /// subformulas are rejected with `None`.
    pub fn eval_propositional(&self, truth: &dyn Fn(&Atom) -> bool) -> Option<bool> {
        Some(match self {
            Formula::Atom(a) => truth(a),
            Formula::Not(f) => !f.eval_propositional(truth)?,
            Formula::And(l, r) => l.eval_propositional(truth)? && r.eval_propositional(truth)?,
            Formula::Or(l, r) => l.eval_propositional(truth)? || r.eval_propositional(truth)?,
            Formula::Implies(l, r) => {
                !l.eval_propositional(truth)? || r.eval_propositional(truth)?
            }
            Formula::Iff(l, r) => l.eval_propositional(truth)? == r.eval_propositional(truth)?,
            Formula::Diamond(_) | Formula::Box(_) => return None,
        })
    }
}

fn fold_right<I, F>(items: I, join: F) -> Option<Formula>
where
    I: IntoIterator<Item = Formula>,
    F: Fn(Formula, Formula) -> Formula,
{
    let items: Vec<Formula> = items.into_iter().collect();
    items.into_iter().rev().reduce(|acc, f| join(f, acc))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl std::str::FromStr for Formula {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Rendering

const PREC_IFF: u8 = 1;
const PREC_IMPLIES: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_UNARY: u8 = 5;
const PREC_ATOM: u8 = 6;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Atom(_) => PREC_ATOM,
        Formula::Not(_) | Formula::Diamond(_) | Formula::Box(_) => PREC_UNARY,
        Formula::And(..) => PREC_AND,
        Formula::Or(..) => PREC_OR,
        Formula::Implies(..) => PREC_IMPLIES,
        Formula::Iff(..) => PREC_IFF,
    }
}

/// Renders with the fewest parentheses that still reparse to the same tree.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

fn write_child(f: &Formula, min_prec: u8, out: &mut String) {
    if precedence(f) < min_prec {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    } else {
        write_formula(f, out);
    }
}

fn write_binary(l: &Formula, op: &str, r: &Formula, prec: u8, right_assoc: bool, out: &mut String) {
    let (lmin, rmin) = if right_assoc {
        (prec + 1, prec)
    } else {
        (prec, prec + 1)
    };
    write_child(l, lmin, out);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    write_child(r, rmin, out);
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom(a) => out.push_str(&a.to_string()),
        Formula::Not(c) => {
            out.push('~');
            write_child(c, PREC_UNARY, out);
        }
        Formula::Diamond(c) => {
            out.push_str("<>");
            write_child(c, PREC_UNARY, out);
        }
        Formula::Box(c) => {
            out.push_str("[]");
            write_child(c, PREC_UNARY, out);
        }
        Formula::And(l, r) => write_binary(l, "&", r, PREC_AND, true, out),
        Formula::Or(l, r) => write_binary(l, "|", r, PREC_OR, true, out),
        Formula::Implies(l, r) => write_binary(l, "->", r, PREC_IMPLIES, true, out),
        Formula::Iff(l, r) => write_binary(l, "<->", r, PREC_IFF, false, out),
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Not,
    And,
    Or,
    Implies,
    Iff,
    Diamond,
    Box,
    LParen,
    RParen,
    Eq,
    Word(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Not => "'~'".into(),
            Tok::And => "'&'".into(),
            Tok::Or => "'|'".into(),
            Tok::Implies => "'->'".into(),
            Tok::Iff => "'<->'".into(),
            Tok::Diamond => "'<>'".into(),
            Tok::Box => "'[]'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eq => "'='".into(),
            Tok::Word(w) => format!("{w:?}"),
            Tok::Eof => "end of input".into(),
        }
    }
}

/// Malformed formula text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: found {found}, expected one of {}", .expected.iter().cloned().collect::<Vec<_>>().join(", "))]
pub struct SyntaxError {
    pub offset: usize,
    pub found: String,
    pub expected: BTreeSet<String>,
}

impl SyntaxError {
    fn new(offset: usize, found: String, expected: &[&str]) -> Self {
        SyntaxError {
            offset,
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }
}

const EXPECT_OPERAND: &[&str] = &["variable", "'~'", "'<>'", "'[]'", "'('"];
const EXPECT_OPERATOR: &[&str] = &["'&'", "'|'", "'->'", "'<->'", "')'", "end of input"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let rest = &text[i..];
        let (tok, len) = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' => (Tok::Not, 1),
            b'&' => (Tok::And, 1),
            b'|' => (Tok::Or, 1),
            b'(' => (Tok::LParen, 1),
            b')' => (Tok::RParen, 1),
            b'=' => (Tok::Eq, 1),
            _ if rest.starts_with("->") => (Tok::Implies, 2),
            _ if rest.starts_with("<->") => (Tok::Iff, 3),
            _ if rest.starts_with("<>") => (Tok::Diamond, 2),
            _ if rest.starts_with("[]") => (Tok::Box, 2),
            _ if c.is_ascii_alphanumeric() || c == b'_' => {
                let len = rest
                    .find(|ch: char| !is_word_char(ch))
                    .unwrap_or(rest.len());
                (Tok::Word(rest[..len].to_string()), len)
            }
            _ => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(SyntaxError::new(
                    start,
                    format!("{ch:?}"),
                    &[
                        "variable", "value", "'~'", "'&'", "'|'", "'->'", "'<->'", "'<>'", "'[]'",
                        "'('", "')'", "'='",
                    ],
                ));
            }
        };
        toks.push((start, tok));
        i += len;
    }
    toks.push((text.len(), Tok::Eof));
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError::new(self.offset(), self.peek().describe(), expected)
    }

    // iff := implies ('<->' implies)*
    fn iff(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    // implies := or ('->' implies)?
    fn implies(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    // or := and ('|' or)?
    fn or(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.and()?;
        if *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.or()?;
            return Ok(Formula::or(lhs, rhs));
        }
        Ok(lhs)
    }

    // and := unary ('&' and)?
    fn and(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.unary()?;
        if *self.peek() == Tok::And {
            self.bump();
            let rhs = self.and()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    // unary := ('~' | '<>' | '[]') unary | primary
    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Diamond => {
                self.bump();
                Ok(Formula::diamond(self.unary()?))
            }
            Tok::Box => {
                self.bump();
                Ok(Formula::boxed(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    // primary := '(' iff ')' | VAR ('=' VAL)?
    fn primary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["')'", "'&'", "'|'", "'->'", "'<->'"]));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Word(var) if is_variable(&var) => {
                self.bump();
                if *self.peek() != Tok::Eq {
                    return Ok(Formula::Atom(Atom {
                        variable: var,
                        value: BARE_VALUE.into(),
                    }));
                }
                self.bump();
                match self.peek().clone() {
                    Tok::Word(val) => {
                        self.bump();
                        Ok(Formula::Atom(Atom {
                            variable: var,
                            value: val,
                        }))
                    }
                    _ => Err(self.error(&["value"])),
                }
            }
            _ => Err(self.error(EXPECT_OPERAND)),
        }
    }
}

/// Parses formula text. Either the whole input is a formula or a
/// [`SyntaxError`] is returned.
pub fn parse(text: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(EXPECT_OPERATOR));
    }
    Ok(f)
}

/// Parses text that must consist of a single atom.
pub fn parse_atom(text: &str) -> Result<Atom, SyntaxError> {
    match parse(text)? {
        Formula::Atom(a) => Ok(a),
        _ => Err(SyntaxError::new(0, format!("{text:?}"), &["atom VAR=VAL"])),
    }
}
