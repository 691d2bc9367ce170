//! Terms of the probabilistic lambda-calculus, concrete syntax, substitution,
//! single-hole contexts and frame stacks.
//!
//! Terms are kept in named form; a canonical nameless (de Bruijn) form backs
//! alpha-equality, ordering and map keys.

use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

/// A term: variable, abstraction, application, or fair binary choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Lam(String, Rc<Term>),
    App(Rc<Term>, Rc<Term>),
    Choice(Rc<Term>, Rc<Term>),
}

pub type T = Rc<Term>;

pub fn var(name: &str) -> T {
    Rc::new(Term::Var(name.to_string()))
}

pub fn lam(binder: &str, body: T) -> T {
    Rc::new(Term::Lam(binder.to_string(), body))
}

pub fn app(fun: T, arg: T) -> T {
    Rc::new(Term::App(fun, arg))
}

pub fn choice(left: T, right: T) -> T {
    Rc::new(Term::Choice(left, right))
}

impl Term {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut acc);
        acc
    }

    fn collect_free(&self, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    acc.insert(x.clone());
                }
            }
            Term::Lam(x, b) => {
                bound.push(x.clone());
                b.collect_free(bound, acc);
                bound.pop();
            }
            Term::App(f, a) => {
                f.collect_free(bound, acc);
                a.collect_free(bound, acc);
            }
            Term::Choice(l, r) => {
                l.collect_free(bound, acc);
                r.collect_free(bound, acc);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// A value is a closed abstraction.
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Lam(..)) && self.is_closed()
    }

    /// True when the term contains no choice operator.
    pub fn is_pure(&self) -> bool {
        match self {
            Term::Var(_) => true,
            Term::Lam(_, b) => b.is_pure(),
            Term::App(f, a) => f.is_pure() && a.is_pure(),
            Term::Choice(..) => false,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(f, a) | Term::Choice(f, a) => 1 + f.size() + a.size(),
        }
    }
}

/// Deterministic fresh name: `base` stripped of digits, then the least unused
/// numeric suffix.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem: String = {
        let trimmed = base.trim_end_matches(|c: char| c.is_ascii_digit());
        if trimmed.is_empty() { "x" } else { trimmed }.to_string()
    };
    if !avoid.contains(&stem) {
        return stem;
    }
    let mut i: u64 = 1;
    loop {
        let cand = format!("{stem}{i}");
        if !avoid.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Capture-avoiding substitution of `n` for the free occurrences of `x` in `m`.
pub fn substitute(m: &T, x: &str, n: &T) -> T {
    match m.as_ref() {
        Term::Var(y) => {
            if y == x {
                n.clone()
            } else {
                m.clone()
            }
        }
        Term::Lam(y, b) => {
            if y == x {
                m.clone()
            } else if b.free_vars().contains(x) {
                let n_free = n.free_vars();
                if n_free.contains(y) {
                    // binder would capture a free variable of n: rename first
                    let mut avoid = n_free;
                    avoid.extend(b.free_vars());
                    avoid.insert(x.to_string());
                    let y2 = fresh_name(y, &avoid);
                    let renamed = substitute(b, y, &var(&y2));
                    lam(&y2, substitute(&renamed, x, n))
                } else {
                    lam(y, substitute(b, x, n))
                }
            } else {
                m.clone()
            }
        }
        Term::App(f, a) => app(substitute(f, x, n), substitute(a, x, n)),
        Term::Choice(l, r) => choice(substitute(l, x, n), substitute(r, x, n)),
    }
}

/// Simultaneous substitution; avoids chained-capture artifacts when several
/// variables are instantiated at once.
pub fn substitute_all(m: &T, subst: &[(String, T)]) -> T {
    let mut out = m.clone();
    for (x, n) in subst {
        out = substitute(&out, x, n);
    }
    out
}

// ---------------------------------------------------------------------------
// Canonical nameless form
// ---------------------------------------------------------------------------

/// Nameless (de Bruijn) skeleton used for alpha-equality, hashing and ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Nameless {
    Bound(u32),
    Free(String),
    Lam(Box<Nameless>),
    App(Box<Nameless>, Box<Nameless>),
    Choice(Box<Nameless>, Box<Nameless>),
}

fn to_nameless(t: &Term, env: &mut Vec<String>) -> Nameless {
    match t {
        Term::Var(x) => match env.iter().rev().position(|b| b == x) {
            Some(i) => Nameless::Bound(i as u32),
            None => Nameless::Free(x.clone()),
        },
        Term::Lam(x, b) => {
            env.push(x.clone());
            let inner = to_nameless(b, env);
            env.pop();
            Nameless::Lam(Box::new(inner))
        }
        Term::App(f, a) => Nameless::App(
            Box::new(to_nameless(f, env)),
            Box::new(to_nameless(a, env)),
        ),
        Term::Choice(l, r) => Nameless::Choice(
            Box::new(to_nameless(l, env)),
            Box::new(to_nameless(r, env)),
        ),
    }
}

/// A term paired with its canonical nameless form. Equality, ordering and
/// hashing all go through the nameless form, so alpha-variants collide.
#[derive(Debug, Clone)]
pub struct CanonTerm {
    nameless: Nameless,
    repr: T,
}

impl CanonTerm {
    pub fn new(t: &T) -> Self {
        CanonTerm {
            nameless: to_nameless(t, &mut Vec::new()),
            repr: t.clone(),
        }
    }

    pub fn term(&self) -> &T {
        &self.repr
    }

    pub fn nameless(&self) -> &Nameless {
        &self.nameless
    }
}

impl PartialEq for CanonTerm {
    fn eq(&self, other: &Self) -> bool {
        self.nameless == other.nameless
    }
}
impl Eq for CanonTerm {}
impl PartialOrd for CanonTerm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for CanonTerm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.nameless.cmp(&other.nameless)
    }
}
impl std::hash::Hash for CanonTerm {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.nameless.hash(state);
    }
}

pub fn alpha_eq(m: &T, n: &T) -> bool {
    to_nameless(m, &mut Vec::new()) == to_nameless(n, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

// Precedence: lambda body extends maximally right, choice is lowest and
// right-associative, application binds tightest and is left-associative.
fn fmt_term(t: &Term, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    match t {
        Term::Var(x) => write!(f, "{x}"),
        Term::Lam(x, b) => {
            if prec > 0 {
                write!(f, "(")?;
            }
            write!(f, "\\{x}. ")?;
            fmt_term(b, f, 0)?;
            if prec > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::Choice(l, r) => {
            if prec > 1 {
                write!(f, "(")?;
            }
            fmt_term(l, f, 2)?;
            write!(f, " (+) ")?;
            fmt_term(r, f, 1)?;
            if prec > 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::App(fun, arg) => {
            if prec > 2 {
                write!(f, "(")?;
            }
            fmt_term(fun, f, 2)?;
            write!(f, " ")?;
            fmt_term(arg, f, 3)?;
            if prec > 2 {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, f, 0)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: unbound name `{name}`")]
    Unbound { line: u32, col: u32, name: String },
    #[error("definition `{name}` is not closed (free: {free})")]
    OpenDefinition { name: String, free: String },
    #[error("duplicate definition `{name}`")]
    DuplicateDefinition { name: String },
    #[error("context must contain exactly one hole, found {found}")]
    HoleCount { found: usize },
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Lambda,
    Dot,
    LParen,
    RParen,
    OPlus,
    Hole,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Semicolon,
    Fraction(String),
    Eof,
}

struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek_byte()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek_byte() {
                Some(b' ') | Some(b'\t') | Some(b'\r') | Some(b'\n') => {
                    self.bump();
                }
                Some(b'#') => {
                    while let Some(b) = self.peek_byte() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, SyntaxError> {
        self.skip_ws();
        let (line, col) = (self.line, self.col);
        let mk = |tok| Token { tok, line, col };
        let b = match self.peek_byte() {
            None => return Ok(mk(Tok::Eof)),
            Some(b) => b,
        };
        match b {
            b'\\' => {
                self.bump();
                Ok(mk(Tok::Lambda))
            }
            b'.' => {
                self.bump();
                Ok(mk(Tok::Dot))
            }
            b')' => {
                self.bump();
                Ok(mk(Tok::RParen))
            }
            b'{' => {
                self.bump();
                Ok(mk(Tok::LBrace))
            }
            b'}' => {
                self.bump();
                Ok(mk(Tok::RBrace))
            }
            b':' => {
                self.bump();
                Ok(mk(Tok::Colon))
            }
            b',' => {
                self.bump();
                Ok(mk(Tok::Comma))
            }
            b';' => {
                self.bump();
                Ok(mk(Tok::Semicolon))
            }
            b'_' if !self
                .src
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') =>
            {
                self.bump();
                Ok(mk(Tok::Hole))
            }
            b'(' => {
                // `(+)` is the choice operator, anything else opens a group
                if self.src.get(self.pos + 1) == Some(&b'+')
                    && self.src.get(self.pos + 2) == Some(&b')')
                {
                    self.bump();
                    self.bump();
                    self.bump();
                    Ok(mk(Tok::OPlus))
                } else {
                    self.bump();
                    Ok(mk(Tok::LParen))
                }
            }
            b'0'..=b'9' => {
                let mut s = String::new();
                while let Some(c) = self.peek_byte() {
                    if c.is_ascii_digit() || c == b'/' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(mk(Tok::Fraction(s)))
            }
            _ => {
                // UTF-8 lambda and oplus
                if self.src[self.pos..].starts_with("\u{03bb}".as_bytes()) {
                    for _ in 0.."\u{03bb}".len() {
                        self.bump();
                    }
                    return Ok(mk(Tok::Lambda));
                }
                if self.src[self.pos..].starts_with("\u{2295}".as_bytes()) {
                    for _ in 0.."\u{2295}".len() {
                        self.bump();
                    }
                    return Ok(mk(Tok::OPlus));
                }
                if b.is_ascii_alphabetic() || b == b'_' {
                    let mut s = String::new();
                    while let Some(c) = self.peek_byte() {
                        if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                            s.push(c as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Ok(mk(Tok::Ident(s)))
                } else {
                    Err(SyntaxError::Parse {
                        line,
                        col,
                        msg: format!("unexpected character `{}`", b as char),
                    })
                }
            }
        }
    }
}

pub struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Option<Token>,
    env: &'a NamedEnv,
    /// bound variables in scope
    scope: Vec<String>,
    /// when set, `_` parses as a hole variable of this name
    hole_name: Option<String>,
    holes_seen: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, env: &'a NamedEnv) -> Self {
        Parser {
            lexer: Lexer::new(src),
            lookahead: None,
            env,
            scope: Vec::new(),
            hole_name: None,
            holes_seen: 0,
        }
    }

    fn peek(&mut self) -> Result<&Token, SyntaxError> {
        if self.lookahead.is_none() {
            self.lookahead = Some(self.lexer.next_token()?);
        }
        Ok(self.lookahead.as_ref().unwrap())
    }

    fn advance(&mut self) -> Result<Token, SyntaxError> {
        self.peek()?;
        Ok(self.lookahead.take().unwrap())
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, SyntaxError> {
        let t = self.advance()?;
        if t.tok == tok {
            Ok(t)
        } else {
            Err(SyntaxError::Parse {
                line: t.line,
                col: t.col,
                msg: format!("expected {what}"),
            })
        }
    }

    fn parse_term(&mut self) -> Result<T, SyntaxError> {
        let t = self.peek()?;
        if t.tok == Tok::Lambda {
            self.advance()?;
            let mut binders = Vec::new();
            loop {
                let t = self.advance()?;
                match t.tok {
                    Tok::Ident(x) => binders.push(x),
                    Tok::Dot if !binders.is_empty() => break,
                    _ => {
                        return Err(SyntaxError::Parse {
                            line: t.line,
                            col: t.col,
                            msg: "expected binder or `.`".to_string(),
                        })
                    }
                }
            }
            for b in &binders {
                self.scope.push(b.clone());
            }
            let body = self.parse_term()?;
            for _ in &binders {
                self.scope.pop();
            }
            let mut out = body;
            for b in binders.iter().rev() {
                out = lam(b, out);
            }
            Ok(out)
        } else {
            self.parse_choice()
        }
    }

    fn parse_choice(&mut self) -> Result<T, SyntaxError> {
        let left = self.parse_app()?;
        if self.peek()?.tok == Tok::OPlus {
            self.advance()?;
            // right-associative: the rest of the choice chain
            let right = self.parse_choice_or_lambda()?;
            Ok(choice(left, right))
        } else {
            Ok(left)
        }
    }

    // a lambda is allowed directly to the right of (+)
    fn parse_choice_or_lambda(&mut self) -> Result<T, SyntaxError> {
        if self.peek()?.tok == Tok::Lambda {
            self.parse_term()
        } else {
            self.parse_choice()
        }
    }

    fn parse_app(&mut self) -> Result<T, SyntaxError> {
        let mut out = self.parse_atom()?;
        loop {
            let t = self.peek()?;
            let starts_atom = matches!(t.tok, Tok::Ident(_) | Tok::LParen | Tok::Hole)
                || t.tok == Tok::Lambda;
            if !starts_atom {
                break;
            }
            if t.tok == Tok::Lambda {
                // application argument may be a parenthesized-free lambda only
                // at the end: `x \y. y` parses as x applied to the lambda
                let arg = self.parse_term()?;
                out = app(out, arg);
                break;
            }
            let arg = self.parse_atom()?;
            out = app(out, arg);
        }
        Ok(out)
    }

    fn parse_atom(&mut self) -> Result<T, SyntaxError> {
        let t = self.advance()?;
        match t.tok {
            Tok::Ident(name) => {
                if self.scope.iter().any(|b| *b == name) {
                    return Ok(var(&name));
                }
                if let Some(def) = self.env.lookup(&name) {
                    return Ok(def);
                }
                // uppercase-initial free identifiers are treated as macro
                // names and must resolve; lowercase ones are free variables
                if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    Err(SyntaxError::Unbound {
                        line: t.line,
                        col: t.col,
                        name,
                    })
                } else {
                    Ok(var(&name))
                }
            }
            Tok::Hole => match &self.hole_name {
                Some(h) => {
                    self.holes_seen += 1;
                    Ok(var(h))
                }
                None => Err(SyntaxError::Parse {
                    line: t.line,
                    col: t.col,
                    msg: "hole `_` not allowed here".to_string(),
                }),
            },
            Tok::LParen => {
                let inner = self.parse_term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(SyntaxError::Parse {
                line: t.line,
                col: t.col,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn finish(&mut self) -> Result<(), SyntaxError> {
        let t = self.peek()?;
        if t.tok == Tok::Eof {
            Ok(())
        } else {
            Err(SyntaxError::Parse {
                line: t.line,
                col: t.col,
                msg: "trailing input".to_string(),
            })
        }
    }
}

/// Parse a term; free uppercase-initial identifiers resolve through `env`.
pub fn parse_term(text: &str, env: &NamedEnv) -> Result<T, SyntaxError> {
    let mut p = Parser::new(text, env);
    let t = p.parse_term()?;
    p.finish()?;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Named environment and prelude
// ---------------------------------------------------------------------------

/// Ordered, non-recursive macro table. Each definition may use only earlier
/// names, and must be closed.
#[derive(Debug, Clone, Default)]
pub struct NamedEnv {
    defs: Vec<(String, T)>,
}

impl NamedEnv {
    pub fn new() -> Self {
        NamedEnv::default()
    }

    pub fn lookup(&self, name: &str) -> Option<T> {
        self.defs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
    }

    pub fn define(&mut self, name: &str, term: T) -> Result<(), SyntaxError> {
        if self.lookup(name).is_some() {
            return Err(SyntaxError::DuplicateDefinition {
                name: name.to_string(),
            });
        }
        let free = term.free_vars();
        if !free.is_empty() {
            return Err(SyntaxError::OpenDefinition {
                name: name.to_string(),
                free: free.into_iter().collect::<Vec<_>>().join(", "),
            });
        }
        self.defs.push((name.to_string(), term));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|(n, _)| n.as_str())
    }

    /// Parse a definitions file: lines of `ident = term`, `#` comments.
    pub fn extend_from_defs(&mut self, text: &str) -> Result<(), SyntaxError> {
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((name, rhs)) = line.split_once('=') else {
                return Err(SyntaxError::Parse {
                    line: 0,
                    col: 0,
                    msg: format!("definition line without `=`: {line}"),
                });
            };
            let name = name.trim();
            let term = parse_term(rhs, self)?;
            self.define(name, term)?;
        }
        Ok(())
    }
}

/// The standard prelude: identity, projector, the divergent term, the
/// order-infinity unsolvable, and the permutators of degree 1..=9.
pub fn prelude() -> NamedEnv {
    let mut env = NamedEnv::new();
    let i = lam("x", var("x"));
    let k = lam("x", lam("y", var("x")));
    let delta = lam("x", app(var("x"), var("x")));
    let omega = app(delta.clone(), delta.clone());
    let xi_half = lam("x", lam("y", app(var("x"), var("x"))));
    let xi = app(xi_half.clone(), xi_half);
    env.define("I", i).unwrap();
    env.define("K", k).unwrap();
    env.define("DELTA", delta).unwrap();
    env.define("OMEGA", omega.clone()).unwrap();
    env.define("XI", xi).unwrap();
    for n in 1..=9u32 {
        env.define(&format!("Q{n}"), raw_bohm_permutator(n)).unwrap();
        env.define(&format!("UQ{n}"), choice(omega.clone(), raw_bohm_permutator(n)))
            .unwrap();
    }
    env
}

/// `\x1...xn. xn x1 x2 ... x(n-1)`; degree must be >= 1.
pub(crate) fn raw_bohm_permutator(n: u32) -> T {
    assert!(n >= 1);
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut body = var(&names[(n - 1) as usize]);
    for name in names.iter().take((n - 1) as usize) {
        body = app(body, var(name));
    }
    let mut out = body;
    for name in names.iter().rev() {
        out = lam(name, out);
    }
    out
}

// ---------------------------------------------------------------------------
// Single-hole contexts
// ---------------------------------------------------------------------------

/// A syntax tree with exactly one hole. Plugging may capture variables.
#[derive(Debug, Clone)]
pub enum Context {
    Hole,
    Lam(String, Box<Context>),
    AppL(Box<Context>, T),
    AppR(T, Box<Context>),
    ChoiceL(Box<Context>, T),
    ChoiceR(T, Box<Context>),
}

/// Structural hole replacement; binders in the context capture.
pub fn plug_context(c: &Context, m: &T) -> T {
    match c {
        Context::Hole => m.clone(),
        Context::Lam(x, inner) => lam(x, plug_context(inner, m)),
        Context::AppL(inner, r) => app(plug_context(inner, m), r.clone()),
        Context::AppR(l, inner) => app(l.clone(), plug_context(inner, m)),
        Context::ChoiceL(inner, r) => choice(plug_context(inner, m), r.clone()),
        Context::ChoiceR(l, inner) => choice(l.clone(), plug_context(inner, m)),
    }
}

/// Parse a single-hole context written with `_` for the hole.
pub fn parse_context(text: &str, env: &NamedEnv) -> Result<Context, SyntaxError> {
    let tpl = parse_template(text, env)?;
    let holes = count_holes(&tpl);
    if holes != 1 {
        return Err(SyntaxError::HoleCount { found: holes });
    }
    Ok(template_to_context(&tpl))
}

const HOLE_VAR: &str = "\u{0}hole";

/// Parse a term template in which `_` marks holes (any number of them);
/// internally holes are a reserved free variable.
pub fn parse_template(text: &str, env: &NamedEnv) -> Result<T, SyntaxError> {
    let mut p = Parser::new(text, env);
    p.hole_name = Some(HOLE_VAR.to_string());
    let t = p.parse_term()?;
    p.finish()?;
    Ok(t)
}

pub fn count_holes(tpl: &Term) -> usize {
    match tpl {
        Term::Var(x) => usize::from(x == HOLE_VAR),
        Term::Lam(_, b) => count_holes(b),
        Term::App(f, a) | Term::Choice(f, a) => count_holes(f) + count_holes(a),
    }
}

fn template_to_context(tpl: &Term) -> Context {
    match tpl {
        Term::Var(x) if x == HOLE_VAR => Context::Hole,
        Term::Var(_) => unreachable!("no hole below"),
        Term::Lam(x, b) => Context::Lam(x.clone(), Box::new(template_to_context(b))),
        Term::App(f, a) => {
            if count_holes(f) == 1 {
                Context::AppL(Box::new(template_to_context(f)), a.clone())
            } else {
                Context::AppR(f.clone(), Box::new(template_to_context(a)))
            }
        }
        Term::Choice(l, r) => {
            if count_holes(l) == 1 {
                Context::ChoiceL(Box::new(template_to_context(l)), r.clone())
            } else {
                Context::ChoiceR(l.clone(), Box::new(template_to_context(r)))
            }
        }
    }
}

/// Fill the holes of a multi-hole template left-to-right with `fills`.
/// Holes capture nothing here beyond what the template's binders capture.
pub fn plug_template(tpl: &T, fills: &[T]) -> T {
    fn go(t: &T, fills: &[T], next: &mut usize) -> T {
        match t.as_ref() {
            Term::Var(x) if x == HOLE_VAR => {
                let f = fills[*next].clone();
                *next += 1;
                f
            }
            Term::Var(_) => t.clone(),
            Term::Lam(x, b) => lam(x, go(b, fills, next)),
            Term::App(f, a) => {
                let nf = go(f, fills, next);
                let na = go(a, fills, next);
                app(nf, na)
            }
            Term::Choice(l, r) => {
                let nl = go(l, fills, next);
                let nr = go(r, fills, next);
                choice(nl, nr)
            }
        }
    }
    let mut next = 0;
    let out = go(tpl, fills, &mut next);
    assert_eq!(next, fills.len(), "fill count must match hole count");
    out
}

// ---------------------------------------------------------------------------
// Frame stacks
// ---------------------------------------------------------------------------

/// A stack of argument terms; the head is the innermost pending argument.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameStack {
    frames: Vec<T>,
}

impl FrameStack {
    pub fn nil() -> Self {
        FrameStack { frames: Vec::new() }
    }

    pub fn from_frames(frames: Vec<T>) -> Self {
        FrameStack { frames }
    }

    pub fn push(&self, arg: T) -> Self {
        let mut frames = Vec::with_capacity(self.frames.len() + 1);
        frames.push(arg);
        frames.extend(self.frames.iter().cloned());
        FrameStack { frames }
    }

    pub fn pop(&self) -> Option<(T, FrameStack)> {
        let (head, rest) = self.frames.split_first()?;
        Some((
            head.clone(),
            FrameStack {
                frames: rest.to_vec(),
            },
        ))
    }

    pub fn is_nil(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[T] {
        &self.frames
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        for t in &self.frames {
            acc.extend(t.free_vars());
        }
        acc
    }

    /// Parse `;`-separated argument terms, leftmost = top of stack.
    pub fn parse(text: &str, env: &NamedEnv) -> Result<Self, SyntaxError> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "nil" {
            return Ok(FrameStack::nil());
        }
        let mut frames = Vec::new();
        for part in trimmed.split(';') {
            frames.push(parse_term(part, env)?);
        }
        Ok(FrameStack { frames })
    }
}

impl fmt::Display for FrameStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frames.is_empty() {
            return write!(f, "nil");
        }
        let parts: Vec<String> = self.frames.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(" ; "))
    }
}

/// `nil[M] = M`, `(N::S)[M] = S[M N]`.
pub fn plug_stack(s: &FrameStack, m: &T) -> T {
    let mut out = m.clone();
    let mut rest = s.clone();
    while let Some((arg, tail)) = rest.pop() {
        out = app(out, arg);
        rest = tail;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> T {
        parse_term(s, &prelude()).unwrap()
    }

    #[test]
    fn parses_identity() {
        let t = p("\\x. x");
        assert!(alpha_eq(&t, &lam("y", var("y"))));
    }

    #[test]
    fn parses_running_example_with_prelude() {
        let t = p("I (+) (K (+) OMEGA)");
        let env = prelude();
        let expect = choice(
            env.lookup("I").unwrap(),
            choice(env.lookup("K").unwrap(), env.lookup("OMEGA").unwrap()),
        );
        assert!(alpha_eq(&t, &expect));
    }

    #[test]
    fn parses_omega_shape() {
        let t = p("(\\x. x x) (\\x. x x)");
        let env = prelude();
        assert!(alpha_eq(&t, &env.lookup("OMEGA").unwrap()));
    }

    #[test]
    fn choice_is_right_associative_and_loose() {
        let t = p("a b (+) c (+) d");
        let expect = choice(
            app(var("a"), var("b")),
            choice(var("c"), var("d")),
        );
        assert!(alpha_eq(&t, &expect));
    }

    #[test]
    fn application_left_associative() {
        let t = p("a b c");
        assert!(alpha_eq(&t, &app(app(var("a"), var("b")), var("c"))));
    }

    #[test]
    fn lambda_body_extends_right() {
        let t = p("\\x. x (+) x");
        assert!(alpha_eq(&t, &lam("x", choice(var("x"), var("x")))));
    }

    #[test]
    fn multi_binder_sugar() {
        assert!(alpha_eq(&p("\\x y. x"), &p("\\x. \\y. x")));
    }

    #[test]
    fn unbound_uppercase_errors() {
        let err = parse_term("FOO", &prelude()).unwrap_err();
        assert!(matches!(err, SyntaxError::Unbound { .. }));
    }

    #[test]
    fn parse_error_carries_position() {
        let err = parse_term("\\x. (x", &prelude()).unwrap_err();
        match err {
            SyntaxError::Parse { line, col, .. } => {
                assert_eq!(line, 1);
                assert!(col >= 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let samples = [
            "\\x. x",
            "I (+) (K (+) OMEGA)",
            "(\\x. x x) (\\x. x x)",
            "\\x. \\y. x (+) y",
            "(\\x. \\y. x) (+) (\\x. \\y. y)",
            "x (I (+) OMEGA)",
            "\\x. x (\\y. x XI OMEGA y) XI",
        ];
        for s in samples {
            let t = p(s);
            let t2 = p(&t.to_string());
            assert!(alpha_eq(&t, &t2), "round trip failed for {s}");
        }
    }

    #[test]
    fn subst_basic() {
        // (x y)[x := \z. z] = (\z. z) y
        let m = app(var("x"), var("y"));
        let r = substitute(&m, "x", &lam("z", var("z")));
        assert!(alpha_eq(&r, &app(lam("z", var("z")), var("y"))));
    }

    #[test]
    fn subst_renames_on_capture() {
        // (\y. x)[x := y] = \y1. y
        let m = lam("y", var("x"));
        let r = substitute(&m, "x", &var("y"));
        match r.as_ref() {
            Term::Lam(b, body) => {
                assert_ne!(b, "y");
                assert!(alpha_eq(body, &var("y")));
                assert_eq!(b, "y1");
            }
            _ => panic!("expected lambda"),
        }
    }

    #[test]
    fn subst_through_choice() {
        let env = prelude();
        let omega = env.lookup("OMEGA").unwrap();
        let m = choice(var("x"), var("x"));
        let r = substitute(&m, "x", &omega);
        assert!(alpha_eq(&r, &choice(omega.clone(), omega)));
    }

    #[test]
    fn subst_identity_when_not_free() {
        let m = p("\\x. x");
        let r = substitute(&m, "z", &p("K"));
        assert!(alpha_eq(&m, &r));
    }

    #[test]
    fn alpha_examples() {
        assert!(alpha_eq(&p("\\x. x"), &p("\\y. y")));
        assert!(!alpha_eq(&p("\\x. \\y. x"), &p("\\x. \\y. y")));
        // choice is not syntactically commutative
        assert!(!alpha_eq(&p("I (+) K"), &p("K (+) I")));
    }

    #[test]
    fn plug_context_examples() {
        let env = prelude();
        // hole
        let m = p("I");
        assert!(alpha_eq(&plug_context(&Context::Hole, &m), &m));
        // (\x. [.]) plugged with x captures
        let c = Context::Lam("x".to_string(), Box::new(Context::Hole));
        let r = plug_context(&c, &var("x"));
        assert!(alpha_eq(&r, &p("\\x. x")));
        // ([.] (I (+) OMEGA)) plugged with \x. x x
        let c = parse_context("_ (I (+) OMEGA)", &env).unwrap();
        let r = plug_context(&c, &p("\\x. x x"));
        assert!(alpha_eq(&r, &p("(\\x. x x) (I (+) OMEGA)")));
    }

    #[test]
    fn context_hole_count_enforced() {
        let env = prelude();
        assert!(matches!(
            parse_context("_ _", &env),
            Err(SyntaxError::HoleCount { found: 2 })
        ));
        assert!(matches!(
            parse_context("I", &env),
            Err(SyntaxError::HoleCount { found: 0 })
        ));
    }

    #[test]
    fn plug_stack_examples() {
        let env = prelude();
        let omega = env.lookup("OMEGA").unwrap();
        assert!(alpha_eq(&plug_stack(&FrameStack::nil(), &omega), &omega));
        let s = FrameStack::nil().push(p("K"));
        assert!(alpha_eq(&plug_stack(&s, &p("I")), &p("I K")));
        // (A::B::nil)[M] = (M A) B
        let s = FrameStack::from_frames(vec![var("a"), var("b")]);
        let r = plug_stack(&s, &var("m"));
        assert!(alpha_eq(&r, &app(app(var("m"), var("a")), var("b"))));
    }

    #[test]
    fn stack_parse_leftmost_top() {
        let env = prelude();
        let s = FrameStack::parse("I ; K", &env).unwrap();
        let r = plug_stack(&s, &var("m"));
        assert!(alpha_eq(&r, &app(app(var("m"), p("I")), p("K"))));
    }

    #[test]
    fn substitution_free_var_bound() {
        // FV(M[N/x]) subset of (FV(M) minus x) union FV(N)
        let m = p("\\y. x y z");
        let n = p("\\w. w q");
        let r = substitute(&m, "x", &n);
        let mut allowed: BTreeSet<String> = m.free_vars();
        allowed.remove("x");
        allowed.extend(n.free_vars());
        assert!(r.free_vars().is_subset(&allowed));
    }

    #[test]
    fn defs_file_round_trip() {
        let mut env = prelude();
        env.extend_from_defs("# comment\nTWICE = \\f. \\x. f (f x)\nFOUR = TWICE TWICE\n")
            .unwrap();
        assert!(env.lookup("FOUR").is_some());
        let err = env
            .clone()
            .extend_from_defs("BAD = x y")
            .unwrap_err();
        assert!(matches!(err, SyntaxError::OpenDefinition { .. }));
    }
}
