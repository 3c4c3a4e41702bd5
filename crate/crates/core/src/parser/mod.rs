//! The `.pec` text format.
//!
//! ```text
//! fluent Lamp takes-values {off, on}
//! action Flip
//! instants 0..3
//! initially-one-of {({Lamp=off}, 1)}
//! Flip causes-one-of {({Lamp=on}, 0.9), ({}, 0.1)}
//! Flip performed-at 1 with-prob 0.8 if-holds {Lamp=off}
//! ```
//!
//! Statements are line oriented; a newline inside braces or parentheses
//! does not end the statement. `#` starts a comment.

mod lexer;
mod render;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::domain::{CProposition, Domain, FluentDecl, IProposition, Outcome, PProposition, PartialFluentState};
use lexer::{Token, TokenKind};

pub use render::{render_cprop, render_domain, render_pprop};

/// Upper bound on the number of instants an `a..b` range may declare.
pub const MAX_RANGE_INSTANTS: u64 = 1 << 20;

pub(crate) const KEYWORDS: &[&str] = &[
    "fluent",
    "action",
    "instants",
    "takes-values",
    "initially-one-of",
    "causes-one-of",
    "performed-at",
    "with-prob",
    "with-probs",
    "if-holds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        Self { line, column, length }
    }

    /// Whether this span overlaps the character range `[column, column + len)`
    /// on `line`.
    pub fn covers(&self, line: usize, column: usize, len: usize) -> bool {
        self.line == line && self.column < column + len.max(1) && column < self.column + self.length.max(1)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, message: impl Into<String>, expected: Vec<String>) -> Self {
        Self {
            span,
            message: message.into(),
            expected,
        }
    }

    /// Multi-line diagnostic with the offending source line and a caret.
    pub fn render(&self, source: &str, file: &str) -> String {
        let mut out = format!("{file}:{}: error: {self}\n", self.span);
        if let Some(text) = source.lines().nth(self.span.line.saturating_sub(1)) {
            let pad: String = text
                .chars()
                .take(self.span.column.saturating_sub(1))
                .map(|c| if c == '\t' { '\t' } else { ' ' })
                .collect();
            out.push_str(&format!("  | {text}\n  | {pad}{}\n", "^".repeat(self.span.length.max(1))));
        }
        out
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

/// Parse raw bytes; invalid UTF-8 is reported as a parse error.
pub fn parse_domain_bytes(bytes: &[u8]) -> Result<Domain, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_domain(text),
        Err(e) => {
            let prefix = &bytes[..e.valid_up_to()];
            let text = String::from_utf8_lossy(prefix);
            let line = text.matches('\n').count() + 1;
            let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(ParseError::new(
                SourceSpan::new(line, column, 1),
                "invalid UTF-8",
                vec![],
            ))
        }
    }
}

/// Parse `.pec` source text. Declaration order in the source is kept for
/// fluents, values, actions, instants and propositions.
pub fn parse_domain(source: &str) -> Result<Domain, ParseError> {
    let tokens = lexer::tokenize(source)?;
    Parser::new(tokens).domain()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    domain: Domain,
    fluent_names: HashSet<String>,
    action_names: HashSet<String>,
    saw_instants: bool,
    saw_initial: bool,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Self {
            tokens,
            pos: 0,
            domain: Domain::default(),
            fluent_names: HashSet::new(),
            action_names: HashSet::new(),
            saw_instants: false,
            saw_initial: false,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let tok = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        ParseError::new(
            tok.span,
            format!("unexpected {}", tok.kind.describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Token> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Word(w) if w == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<Token> {
        if self.is_keyword(kw) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    /// A non-keyword word.
    fn ident(&mut self, what: &str) -> PResult<(String, Token)> {
        match &self.peek().kind {
            TokenKind::Word(w) if !KEYWORDS.contains(&w.as_str()) => {
                let w = w.clone();
                Ok((w, self.bump()))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    /// A value or instant label: identifier or integer literal.
    fn label(&mut self, what: &str) -> PResult<(String, Token)> {
        match &self.peek().kind {
            TokenKind::Number(n) if !n.contains('.') => {
                let n = n.clone();
                Ok((n, self.bump()))
            }
            _ => self.ident(what),
        }
    }

    fn end_of_statement(&mut self) -> PResult<()> {
        match self.peek().kind {
            TokenKind::Newline => {
                self.bump();
                Ok(())
            }
            TokenKind::Eof => Ok(()),
            _ => Err(self.unexpected(&["end of line"])),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().kind == TokenKind::Newline {
            self.bump();
        }
    }

    fn domain(mut self) -> PResult<Domain> {
        self.skip_newlines();
        if self.peek().kind == TokenKind::Eof {
            return Err(ParseError::new(
                self.peek().span,
                "expected declaration",
                vec!["declaration".into()],
            ));
        }
        while self.peek().kind != TokenKind::Eof {
            self.statement()?;
            self.skip_newlines();
        }
        let eof = self.peek().span;
        if !self.saw_instants {
            return Err(ParseError::new(eof, "missing `instants` declaration", vec![]));
        }
        if !self.saw_initial {
            return Err(ParseError::new(eof, "missing `initially-one-of` proposition", vec![]));
        }
        Ok(self.domain)
    }

    fn statement(&mut self) -> PResult<()> {
        let word = match &self.peek().kind {
            TokenKind::Word(w) => w.clone(),
            _ => {
                return Err(ParseError::new(
                    self.peek().span,
                    format!("unexpected {}, expected declaration", self.peek().kind.describe()),
                    vec!["declaration".into()],
                ))
            }
        };
        match word.as_str() {
            "fluent" => self.fluent_decl()?,
            "action" => self.action_decl()?,
            "instants" => self.instants_decl()?,
            "initially-one-of" => self.initial()?,
            w if KEYWORDS.contains(&w) => {
                return Err(ParseError::new(
                    self.peek().span,
                    format!("`{w}` cannot start a statement"),
                    vec!["declaration".into()],
                ))
            }
            _ => {
                if matches!(&self.peek_at(1).kind, TokenKind::Word(w) if w == "performed-at") {
                    self.pprop()?;
                } else {
                    self.cprop()?;
                }
            }
        }
        self.end_of_statement()
    }

    fn fluent_decl(&mut self) -> PResult<()> {
        self.keyword("fluent")?;
        let (name, tok) = self.ident("fluent name")?;
        if !self.fluent_names.insert(name.clone()) {
            return Err(ParseError::new(tok.span, format!("duplicate fluent `{name}`"), vec![]));
        }
        self.keyword("takes-values")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut values: Vec<String> = Vec::new();
        loop {
            let (v, tok) = self.label("value")?;
            if values.contains(&v) {
                return Err(ParseError::new(
                    tok.span,
                    format!("duplicate value `{v}` for fluent `{name}`"),
                    vec![],
                ));
            }
            values.push(v);
            match self.peek().kind {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RBrace => {
                    self.bump();
                    break;
                }
                _ => return Err(self.unexpected(&["`,`", "`}`"])),
            }
        }
        self.domain.fluents.push(FluentDecl { name, values });
        Ok(())
    }

    fn action_decl(&mut self) -> PResult<()> {
        self.keyword("action")?;
        let (name, tok) = self.ident("action name")?;
        if !self.action_names.insert(name.clone()) {
            return Err(ParseError::new(tok.span, format!("duplicate action `{name}`"), vec![]));
        }
        self.domain.actions.push(name);
        Ok(())
    }

    fn integer(&mut self) -> PResult<u64> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Number(n) if !n.contains('.') => {
                let v = n
                    .parse::<u64>()
                    .map_err(|_| ParseError::new(tok.span, "integer out of range", vec![]))?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn instants_decl(&mut self) -> PResult<()> {
        let kw = self.keyword("instants")?;
        if self.saw_instants {
            return Err(ParseError::new(kw.span, "duplicate `instants` declaration", vec![]));
        }
        self.saw_instants = true;
        if self.peek().kind == TokenKind::LBrace {
            self.bump();
            let mut labels: Vec<String> = Vec::new();
            loop {
                let (l, tok) = self.label("instant label")?;
                if labels.contains(&l) {
                    return Err(ParseError::new(tok.span, format!("duplicate instant `{l}`"), vec![]));
                }
                labels.push(l);
                match self.peek().kind {
                    TokenKind::Comma => {
                        self.bump();
                    }
                    TokenKind::RBrace => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected(&["`,`", "`}`"])),
                }
            }
            self.domain.instants = labels;
        } else {
            let start_span = self.peek().span;
            let lo = self.integer()?;
            self.expect(TokenKind::DotDot, "`..`")?;
            let hi_span = self.peek().span;
            let hi = self.integer()?;
            if hi < lo {
                return Err(ParseError::new(hi_span, format!("empty instant range {lo}..{hi}"), vec![]));
            }
            if hi - lo >= MAX_RANGE_INSTANTS {
                return Err(ParseError::new(start_span, "instant range too large", vec![]));
            }
            self.domain.instants = (lo..=hi).map(|i| i.to_string()).collect();
        }
        Ok(())
    }

    fn probability(&mut self) -> PResult<f64> {
        let tok = self.peek().clone();
        let TokenKind::Number(num) = &tok.kind else {
            return Err(self.unexpected(&["probability"]));
        };
        self.bump();
        let value: f64 = num
            .parse()
            .map_err(|_| ParseError::new(tok.span, "malformed number", vec![]))?;
        if self.peek().kind != TokenKind::Slash {
            return Ok(value);
        }
        self.bump();
        let dtok = self.peek().clone();
        let TokenKind::Number(den) = &dtok.kind else {
            return Err(self.unexpected(&["denominator"]));
        };
        self.bump();
        let den: f64 = den
            .parse()
            .map_err(|_| ParseError::new(dtok.span, "malformed number", vec![]))?;
        if den == 0.0 {
            return Err(ParseError::new(dtok.span, "zero denominator", vec![]));
        }
        Ok(value / den)
    }

    /// `{ F=V, ... }`, possibly empty.
    fn assignments(&mut self) -> PResult<PartialFluentState> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut state = PartialFluentState::new();
        if self.peek().kind == TokenKind::RBrace {
            self.bump();
            return Ok(state);
        }
        loop {
            let (f, tok) = self.ident("fluent name")?;
            self.expect(TokenKind::Eq, "`=`")?;
            let (v, _) = self.label("value")?;
            if state.get(&f).is_some() {
                return Err(ParseError::new(tok.span, format!("fluent `{f}` assigned twice"), vec![]));
            }
            state.assign(f, v);
            match self.peek().kind {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RBrace => {
                    self.bump();
                    return Ok(state);
                }
                _ => return Err(self.unexpected(&["`,`", "`}`"])),
            }
        }
    }

    /// `{ ({..}, p), ... }`
    fn outcomes(&mut self) -> PResult<Vec<Outcome>> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut outcomes = Vec::new();
        loop {
            self.expect(TokenKind::LParen, "`(`")?;
            let state = self.assignments()?;
            self.expect(TokenKind::Comma, "`,`")?;
            let p = self.probability()?;
            self.expect(TokenKind::RParen, "`)`")?;
            outcomes.push(Outcome::new(state, p));
            match self.peek().kind {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RBrace => {
                    self.bump();
                    return Ok(outcomes);
                }
                _ => return Err(self.unexpected(&["`,`", "`}`"])),
            }
        }
    }

    fn initial(&mut self) -> PResult<()> {
        let kw = self.keyword("initially-one-of")?;
        if self.saw_initial {
            return Err(ParseError::new(kw.span, "duplicate `initially-one-of` proposition", vec![]));
        }
        self.saw_initial = true;
        let outcomes = self.outcomes()?;
        self.domain.iprop = IProposition { outcomes };
        Ok(())
    }

    fn cprop(&mut self) -> PResult<()> {
        let mut body_actions = BTreeSet::new();
        let mut body_conditions = PartialFluentState::new();
        loop {
            let (name, tok) = self.ident("action or fluent")?;
            if self.peek().kind == TokenKind::Eq {
                self.bump();
                let (v, _) = self.label("value")?;
                if body_conditions.get(&name).is_some() {
                    return Err(ParseError::new(tok.span, format!("fluent `{name}` assigned twice"), vec![]));
                }
                body_conditions.assign(name, v);
            } else if !body_actions.insert(name.clone()) {
                return Err(ParseError::new(tok.span, format!("action `{name}` repeated in body"), vec![]));
            }
            if self.peek().kind == TokenKind::Amp {
                self.bump();
                continue;
            }
            if self.is_keyword("causes-one-of") {
                self.bump();
                break;
            }
            return Err(self.unexpected(&["`&`", "`causes-one-of`"]));
        }
        let outcomes = self.outcomes()?;
        self.domain.cprops.push(CProposition {
            body_actions,
            body_conditions,
            outcomes,
        });
        Ok(())
    }

    fn pprop(&mut self) -> PResult<()> {
        let (action, _) = self.ident("action name")?;
        self.keyword("performed-at")?;
        let (instant, _) = self.label("instant")?;
        if self.is_keyword("with-probs") {
            self.bump();
        } else {
            self.keyword("with-prob")?;
        }
        let probability = self.probability()?;
        let condition = if self.is_keyword("if-holds") {
            self.bump();
            self.assignments()?
        } else {
            PartialFluentState::new()
        };
        self.domain.pprops.push(PProposition {
            action,
            instant,
            probability,
            condition,
        });
        Ok(())
    }
}
