//! Propositional formulas, generic over the atom type.
//!
//! The same tree is used for schematic formulas in source files, ground
//! formulas over fluent and action indices, and formulas over equalized
//! signatures.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<A> {
    True,
    False,
    Atom(A),
    Not(Box<Formula<A>>),
    And(Vec<Formula<A>>),
    Or(Vec<Formula<A>>),
    Implies(Box<Formula<A>>, Box<Formula<A>>),
}

impl<A> Formula<A> {
    pub fn atom(a: A) -> Self {
        Formula::Atom(a)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula<A>) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: Vec<Formula<A>>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::And(parts),
        }
    }

    pub fn or(parts: Vec<Formula<A>>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn implies(lhs: Formula<A>, rhs: Formula<A>) -> Self {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    /// Two-valued evaluation under a total assignment of the atoms.
    pub fn eval(&self, val: &impl Fn(&A) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => val(a),
            Formula::Not(f) => !f.eval(val),
            Formula::And(fs) => fs.iter().all(|f| f.eval(val)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(val)),
            Formula::Implies(l, r) => !l.eval(val) || r.eval(val),
        }
    }

    /// Kleene three-valued evaluation; `None` means undetermined under the
    /// partial assignment.
    pub fn eval3(&self, val: &impl Fn(&A) -> Option<bool>) -> Option<bool> {
        match self {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Atom(a) => val(a),
            Formula::Not(f) => f.eval3(val).map(|b| !b),
            Formula::And(fs) => {
                let mut unknown = false;
                for f in fs {
                    match f.eval3(val) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(true)
                }
            }
            Formula::Or(fs) => {
                let mut unknown = false;
                for f in fs {
                    match f.eval3(val) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
            Formula::Implies(l, r) => match (l.eval3(val), r.eval3(val)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
        }
    }

    pub fn try_map_atoms<B, E>(
        &self,
        f: &mut impl FnMut(&A) -> Result<Formula<B>, E>,
    ) -> Result<Formula<B>, E> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => f(a)?,
            Formula::Not(g) => Formula::Not(Box::new(g.try_map_atoms(f)?)),
            Formula::And(gs) => Formula::And(
                gs.iter()
                    .map(|g| g.try_map_atoms(f))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(gs) => Formula::Or(
                gs.iter()
                    .map(|g| g.try_map_atoms(f))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Implies(l, r) => Formula::Implies(
                Box::new(l.try_map_atoms(f)?),
                Box::new(r.try_map_atoms(f)?),
            ),
        })
    }

    pub fn map_atoms<B>(&self, f: &mut impl FnMut(&A) -> Formula<B>) -> Formula<B> {
        let r: Result<_, std::convert::Infallible> = self.try_map_atoms(&mut |a| Ok(f(a)));
        match r {
            Ok(v) => v,
            Err(e) => match e {},
        }
    }

    pub fn for_each_atom(&self, f: &mut impl FnMut(&A)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => f(a),
            Formula::Not(g) => g.for_each_atom(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.for_each_atom(f)),
            Formula::Implies(l, r) => {
                l.for_each_atom(f);
                r.for_each_atom(f);
            }
        }
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        collect_atoms(self, &mut out);
        out
    }

    /// Constant folding of `true`/`false` subterms.
    pub fn simplify(self) -> Self {
        match self {
            Formula::Not(f) => match f.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                g => Formula::Not(Box::new(g)),
            },
            Formula::And(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for f in fs {
                    match f.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        g => out.push(g),
                    }
                }
                Formula::and(out)
            }
            Formula::Or(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for f in fs {
                    match f.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        g => out.push(g),
                    }
                }
                Formula::or(out)
            }
            Formula::Implies(l, r) => match (l.simplify(), r.simplify()) {
                (Formula::False, _) | (_, Formula::True) => Formula::True,
                (Formula::True, g) => g,
                (g, Formula::False) => Formula::Not(Box::new(g)).simplify(),
                (a, b) => Formula::Implies(Box::new(a), Box::new(b)),
            },
            f => f,
        }
    }
}

fn collect_atoms<'a, A>(f: &'a Formula<A>, out: &mut Vec<&'a A>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom(a) => out.push(a),
        Formula::Not(g) => collect_atoms(g, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_atoms(g, out)),
        Formula::Implies(l, r) => {
            collect_atoms(l, out);
            collect_atoms(r, out);
        }
    }
}

// Binding strength used by Display: `->` < `|` < `&` < `-`.
fn prec<A>(f: &Formula<A>) -> u8 {
    match f {
        Formula::Implies(..) => 1,
        Formula::Or(_) => 2,
        Formula::And(_) => 3,
        _ => 4,
    }
}

fn write_sub<A: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    sub: &Formula<A>,
    min: u8,
) -> fmt::Result {
    if prec(sub) < min {
        write!(f, "({sub})")
    } else {
        write!(f, "{sub}")
    }
}

impl<A: fmt::Display> fmt::Display for Formula<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => {
                write!(f, "-")?;
                write_sub(f, g, 4)
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let (sep, p) = if matches!(self, Formula::And(_)) {
                    (" & ", 3)
                } else {
                    (" | ", 2)
                };
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    // Nested n-ary nodes of the same kind are parenthesized so
                    // that reparsing gives back the same tree shape.
                    write_sub(f, g, p + 1)?;
                }
                Ok(())
            }
            Formula::Implies(l, r) => {
                write_sub(f, l, 2)?;
                write!(f, " -> ")?;
                write_sub(f, r, 1)
            }
        }
    }
}
