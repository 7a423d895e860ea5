//! Syntax tree of `.cal` action descriptions.

use std::collections::BTreeMap;
use std::fmt;

use super::lexer::Pos;
use crate::formula::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(s) | Term::Const(s) => f.write_str(s),
        }
    }
}

/// `name(t1,...,tk)`, possibly with variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomRef {
    pub name: String,
    pub args: Vec<Term>,
    pub pos: Pos,
}

impl AtomRef {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for AtomRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Atoms of schematic formulas.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SAtom {
    Pred(AtomRef),
    Eq(Term, Term),
    Neq(Term, Term),
}

impl fmt::Display for SAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SAtom::Pred(a) => write!(f, "{a}"),
            SAtom::Eq(a, b) => write!(f, "{a} = {b}"),
            SAtom::Neq(a, b) => write!(f, "{a} != {b}"),
        }
    }
}

pub type SFormula = Formula<SAtom>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub positive: bool,
    pub atom: AtomRef,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "-")?;
        }
        write!(f, "{}", self.atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub var: Option<String>,
    pub ty: String,
}

/// A fluent or action schema declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub params: Vec<Param>,
    pub guard: Option<SFormula>,
    pub pos: Pos,
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            write!(f, "(")?;
            for (i, p) in self.params.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                match &p.var {
                    Some(v) => write!(f, "{v}: {}", p.ty)?,
                    None => write!(f, "{}", p.ty)?,
                }
            }
            write!(f, ")")?;
        }
        if let Some(g) = &self.guard {
            write!(f, " if {g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticLaw {
    pub head: Literal,
    pub body: SFormula,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicLaw {
    pub head: Literal,
    pub condition: SFormula,
    pub after: SFormula,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Law {
    Static(StaticLaw),
    Dynamic(DynamicLaw),
}

impl Law {
    pub fn pos(&self) -> Pos {
        match self {
            Law::Static(l) => l.pos,
            Law::Dynamic(l) => l.pos,
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Static(l) => write!(f, "caused {} if {}.", l.head, l.body),
            Law::Dynamic(l) => write!(
                f,
                "caused {} if {} after {}.",
                l.head, l.condition, l.after
            ),
        }
    }
}

/// Range of label sizes `|A|` considered when building transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Concurrency {
    pub min: usize,
    pub max: usize,
}

impl Default for Concurrency {
    fn default() -> Self {
        Concurrency { min: 1, max: 1 }
    }
}

/// Everything except the causal laws: types, static relations and the
/// fluent/action schemas.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    pub domains: BTreeMap<String, Vec<String>>,
    pub statics: BTreeMap<String, Vec<Vec<String>>>,
    pub fluents: Vec<Decl>,
    pub actions: Vec<Decl>,
    pub concurrency: Option<Concurrency>,
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, consts) in &self.domains {
            writeln!(f, "domain {name} = {{{}}};", consts.join(", "))?;
        }
        for (rel, tuples) in &self.statics {
            for t in tuples {
                if t.is_empty() {
                    writeln!(f, "static {rel};")?;
                } else {
                    writeln!(f, "static {rel}({});", t.join(","))?;
                }
            }
        }
        for d in &self.fluents {
            writeln!(f, "fluent {d};")?;
        }
        for d in &self.actions {
            writeln!(f, "action {d};")?;
        }
        if let Some(c) = self.concurrency {
            writeln!(f, "concurrency {}..{}.", c.min, c.max)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionDescription {
    pub header: Header,
    pub laws: Vec<Law>,
    pub initially: Vec<(SFormula, Pos)>,
}

impl fmt::Display for ActionDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.header)?;
        for law in &self.laws {
            writeln!(f, "{law}")?;
        }
        for (init, _) in &self.initially {
            writeln!(f, "initially {init}.")?;
        }
        Ok(())
    }
}
