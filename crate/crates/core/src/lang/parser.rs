//! Recursive-descent parser for `.cal` files.
//!
//! ```text
//! domain block = {a, b, c};
//! static adj(1, 2);
//! fluent on(X: block, Y: block) if X != Y;
//! action move(block, block);
//! caused -clear(Y) if on(X, Y).
//! caused on(X, Y) if true after move(X, Y).
//! initially -on(a, b).
//! concurrency 1..2.
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::lexer::{is_variable, tokenize, Pos, Tok};
use crate::formula::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    /// Head of a law is not a literal.
    Fragment,
    /// Action atom where only fluents are allowed, or clashing names.
    Scope,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Fragment => "fragment violation",
            ParseErrorKind::Scope => "scope error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub pos: Pos,
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::Syntax,
            message: message.into(),
            pos,
        }
    }
}

pub(crate) struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        let toks = tokenize(src).map_err(|e| {
            ParseError::syntax(e.pos, format!("unexpected character `{}`", e.found))
        })?;
        Ok(Parser { toks, at: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::syntax(self.pos(), msg))
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected {t}, found {}", self.peek()))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {t}")),
        }
    }

    pub(crate) fn number(&mut self) -> Result<usize, ParseError> {
        let pos = self.pos();
        let s = self.ident()?;
        s.parse()
            .map_err(|_| ParseError::syntax(pos, format!("expected a number, found `{s}`")))
    }

    fn constant(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        let s = self.ident()?;
        if is_variable(&s) {
            return Err(ParseError::syntax(
                pos,
                format!("expected a constant, found variable `{s}`"),
            ));
        }
        Ok(s)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let s = self.ident()?;
        Ok(if is_variable(&s) {
            Term::Var(s)
        } else {
            Term::Const(s)
        })
    }

    fn terms(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut out = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                out.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen)?;
        }
        Ok(out)
    }

    pub(crate) fn formula(&mut self) -> Result<SFormula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<SFormula, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Bar) {
            parts.push(self.conjunction()?);
        }
        Ok(Formula::or(parts))
    }

    pub(crate) fn conjunction(&mut self) -> Result<SFormula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> Result<SFormula, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(&Tok::RParen)?;
            return Ok(f);
        }
        let pos = self.pos();
        let name = self.ident()?;
        if matches!(self.peek(), Tok::Eq | Tok::Neq) {
            let neq = self.bump() == Tok::Neq;
            let lhs = if is_variable(&name) {
                Term::Var(name)
            } else {
                Term::Const(name)
            };
            let rhs = self.term()?;
            return Ok(Formula::Atom(if neq {
                SAtom::Neq(lhs, rhs)
            } else {
                SAtom::Eq(lhs, rhs)
            }));
        }
        if is_variable(&name) {
            return Err(ParseError::syntax(
                pos,
                format!("variable `{name}` used as a formula"),
            ));
        }
        match name.as_str() {
            "true" => return Ok(Formula::True),
            "false" => return Ok(Formula::False),
            _ => {}
        }
        let args = self.terms()?;
        Ok(Formula::Atom(SAtom::Pred(AtomRef { name, args, pos })))
    }

    fn literal_head(&mut self) -> Result<Literal, ParseError> {
        let pos = self.pos();
        let f = self.formula()?;
        match f {
            Formula::Atom(SAtom::Pred(atom)) => Ok(Literal {
                positive: true,
                atom,
            }),
            Formula::Not(inner) => match *inner {
                Formula::Atom(SAtom::Pred(atom)) => Ok(Literal {
                    positive: false,
                    atom,
                }),
                other => fragment(pos, &Formula::not(other)),
            },
            other => fragment(pos, &other),
        }
    }

    fn end_decl(&mut self) -> Result<(), ParseError> {
        if self.eat(&Tok::Semi) || self.eat(&Tok::Dot) {
            Ok(())
        } else {
            self.err(format!("expected `;`, found {}", self.peek()))
        }
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let pos = self.pos();
        let name = self.constant()?;
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                let first = self.ident()?;
                if self.eat(&Tok::Colon) {
                    if !is_variable(&first) {
                        return self.err(format!("parameter name `{first}` must be a variable"));
                    }
                    params.push(Param {
                        var: Some(first),
                        ty: self.constant()?,
                    });
                } else {
                    if is_variable(&first) {
                        return self.err(format!("expected a type, found variable `{first}`"));
                    }
                    params.push(Param {
                        var: None,
                        ty: first,
                    });
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen)?;
        }
        let guard = if self.eat_keyword("if") {
            Some(self.formula()?)
        } else {
            None
        };
        self.end_decl()?;
        Ok(Decl {
            name,
            params,
            guard,
            pos,
        })
    }
}

fn fragment<T>(pos: Pos, f: &SFormula) -> Result<T, ParseError> {
    Err(ParseError {
        kind: ParseErrorKind::Fragment,
        message: format!("law heads must be literals, found `{f}`"),
        pos,
    })
}

/// Parses a `.cal` document.
pub fn parse(src: &str) -> Result<ActionDescription, ParseError> {
    let mut p = Parser::new(src)?;
    let mut ad = ActionDescription::default();
    while !p.at_eof() {
        let pos = p.pos();
        let kw = p.ident()?;
        match kw.as_str() {
            "domain" => {
                let name = p.constant()?;
                p.expect(&Tok::Eq)?;
                p.expect(&Tok::LBrace)?;
                let mut consts = Vec::new();
                if !p.eat(&Tok::RBrace) {
                    loop {
                        consts.push(p.constant()?);
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    p.expect(&Tok::RBrace)?;
                }
                p.end_decl()?;
                if ad.header.domains.insert(name.clone(), consts).is_some() {
                    return Err(ParseError::syntax(pos, format!("domain `{name}` declared twice")));
                }
            }
            "static" => {
                let name = p.constant()?;
                let mut args = Vec::new();
                if p.eat(&Tok::LParen) {
                    loop {
                        args.push(p.constant()?);
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    p.expect(&Tok::RParen)?;
                }
                p.end_decl()?;
                ad.header.statics.entry(name).or_default().push(args);
            }
            "fluent" => {
                let d = p.decl()?;
                ad.header.fluents.push(d);
            }
            "action" => {
                let d = p.decl()?;
                ad.header.actions.push(d);
            }
            "concurrency" => {
                let a = p.number()?;
                let (min, max) = if p.eat(&Tok::DotDot) {
                    (a, p.number()?)
                } else {
                    (1.min(a), a)
                };
                if min > max {
                    return Err(ParseError::syntax(pos, "empty concurrency range"));
                }
                p.expect(&Tok::Dot)?;
                ad.header.concurrency = Some(Concurrency { min, max });
            }
            "initially" => {
                let f = p.formula()?;
                p.expect(&Tok::Dot)?;
                ad.initially.push((f, pos));
            }
            "caused" => {
                let head = p.literal_head()?;
                let cond = if p.eat_keyword("if") {
                    p.formula()?
                } else {
                    Formula::True
                };
                let law = if p.eat_keyword("after") {
                    let after = p.formula()?;
                    Law::Dynamic(DynamicLaw {
                        head,
                        condition: cond,
                        after,
                        pos,
                    })
                } else {
                    Law::Static(StaticLaw {
                        head,
                        body: cond,
                        pos,
                    })
                };
                p.expect(&Tok::Dot)?;
                ad.laws.push(law);
            }
            other => {
                return Err(ParseError::syntax(
                    pos,
                    format!("expected a declaration or law, found `{other}`"),
                ))
            }
        }
    }
    check_scope(&ad)?;
    Ok(ad)
}

fn check_scope(ad: &ActionDescription) -> Result<(), ParseError> {
    let actions: std::collections::HashSet<&str> =
        ad.header.actions.iter().map(|d| d.name.as_str()).collect();
    for f in &ad.header.fluents {
        if actions.contains(f.name.as_str()) {
            return Err(ParseError {
                kind: ParseErrorKind::Scope,
                message: format!("`{}` is declared both as fluent and action", f.name),
                pos: f.pos,
            });
        }
    }
    let no_actions = |f: &SFormula, what: &str| -> Result<(), ParseError> {
        for a in f.atoms() {
            if let SAtom::Pred(atom) = a {
                if actions.contains(atom.name.as_str()) {
                    return Err(ParseError {
                        kind: ParseErrorKind::Scope,
                        message: format!("action `{}` may not appear in {what}", atom.name),
                        pos: atom.pos,
                    });
                }
            }
        }
        Ok(())
    };
    for law in &ad.laws {
        let head = match law {
            Law::Static(l) => {
                no_actions(&l.body, "the body of a static law")?;
                &l.head
            }
            Law::Dynamic(l) => {
                no_actions(&l.condition, "the if-part of a dynamic law")?;
                &l.head
            }
        };
        if actions.contains(head.atom.name.as_str()) {
            return Err(ParseError {
                kind: ParseErrorKind::Scope,
                message: format!("action `{}` may not appear in a law head", head.atom.name),
                pos: head.atom.pos,
            });
        }
    }
    for (f, _) in &ad.initially {
        no_actions(f, "an initially statement")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(name: &str) -> AtomRef {
        AtomRef {
            name: name.into(),
            args: vec![],
            pos: Pos::default(),
        }
    }

    fn strip(f: &SFormula) -> SFormula {
        f.map_atoms(&mut |a| {
            Formula::Atom(match a {
                SAtom::Pred(r) => SAtom::Pred(AtomRef {
                    pos: Pos::default(),
                    ..r.clone()
                }),
                other => other.clone(),
            })
        })
    }

    #[test]
    fn static_law() {
        let ad = parse("fluent p; fluent q;\ncaused p if q.").unwrap();
        let Law::Static(l) = &ad.laws[0] else {
            panic!("expected static law")
        };
        assert!(l.head.positive);
        assert_eq!(l.head.atom.name, "p");
        assert_eq!(strip(&l.body), Formula::Atom(SAtom::Pred(atom("q"))));
    }

    #[test]
    fn dynamic_law_with_negated_head() {
        let ad = parse("fluent p; action a;\ncaused -p if true after a.").unwrap();
        let Law::Dynamic(l) = &ad.laws[0] else {
            panic!("expected dynamic law")
        };
        assert!(!l.head.positive);
        assert_eq!(l.condition, Formula::True);
        assert_eq!(strip(&l.after), Formula::Atom(SAtom::Pred(atom("a"))));
    }

    #[test]
    fn non_literal_head_is_fragment_violation() {
        let err = parse("fluent p; fluent q; fluent r;\ncaused (p & q) if r.").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Fragment);
        assert_eq!(err.pos.line, 2);
    }

    #[test]
    fn action_in_static_body_is_scope_error() {
        let err = parse("fluent p; action a;\ncaused p if a.").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Scope);
        assert_eq!(err.pos, Pos { line: 2, col: 13 });
    }

    #[test]
    fn syntax_error_position() {
        let err = parse("fluent p;\ncaused p if q").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!(err.pos.line, 2);
    }

    #[test]
    fn declarations_and_guards() {
        let src = "domain block = {a, b};\nstatic big(a);\n\
                   fluent on(X: block, Y: block) if X != Y;\naction move(block);\nconcurrency 0..2.";
        let ad = parse(src).unwrap();
        assert_eq!(ad.header.domains["block"], vec!["a", "b"]);
        assert_eq!(ad.header.statics["big"], vec![vec!["a".to_string()]]);
        assert_eq!(ad.header.fluents[0].to_string(), "on(X: block, Y: block) if X != Y");
        assert_eq!(ad.header.concurrency, Some(Concurrency { min: 0, max: 2 }));
        let again = parse(&ad.to_string()).unwrap();
        assert_eq!(again.header, ad.header);
    }
}
