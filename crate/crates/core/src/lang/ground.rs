//! Instantiation of schematic descriptions over their finite domains.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::lexer::Pos;
use crate::formula::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("{pos}: unknown type `{ty}`")]
    UnknownType { ty: String, pos: Pos },
    #[error("{pos}: variable `{var}` is not bound to a finite domain")]
    Unbounded { var: String, pos: Pos },
    #[error("{pos}: `{name}` is neither a fluent, an action nor a static relation")]
    UnknownPredicate { name: String, pos: Pos },
    #[error("{pos}: `{name}` expects {expected} arguments, found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        pos: Pos,
    },
    #[error("{pos}: `{name}` is declared with conflicting kinds")]
    NameClash { name: String, pos: Pos },
    #[error("{pos}: declaration guards may only use static relations and (in)equalities")]
    DynamicGuard { pos: Pos },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GAtom {
    Fluent(usize),
    Action(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GLit {
    pub fluent: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GStaticLaw {
    pub head: GLit,
    pub body: Formula<GAtom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GDynamicLaw {
    pub head: GLit,
    pub condition: Formula<GAtom>,
    pub after: Formula<GAtom>,
}

/// A variable-free description. Fluent and action names are sorted;
/// formulas refer to them by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundDescription {
    pub header: Header,
    pub fluents: Vec<String>,
    pub actions: Vec<String>,
    pub static_laws: Vec<GStaticLaw>,
    pub dynamic_laws: Vec<GDynamicLaw>,
    pub initially: Vec<Formula<GAtom>>,
    pub concurrency: Concurrency,
}

impl GroundDescription {
    pub fn fluent_index(&self, name: &str) -> Option<usize> {
        self.fluents.binary_search_by(|f| f.as_str().cmp(name)).ok()
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.binary_search_by(|f| f.as_str().cmp(name)).ok()
    }

    fn show_atom<'a>(&'a self) -> impl Fn(&GAtom) -> Formula<&'a str> + 'a {
        move |a| {
            Formula::Atom(match a {
                GAtom::Fluent(i) => self.fluents[*i].as_str(),
                GAtom::Action(i) => self.actions[*i].as_str(),
            })
        }
    }

    fn show_lit(&self, l: GLit) -> String {
        format!(
            "{}{}",
            if l.positive { "" } else { "-" },
            self.fluents[l.fluent]
        )
    }
}

impl fmt::Display for GroundDescription {
    /// Re-parseable `.cal` text whose laws are all ground.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = self.show_atom();
        let mut header = self.header.clone();
        header.concurrency = Some(self.concurrency);
        write!(f, "{header}")?;
        writeln!(f, "% {} ground fluents, {} ground actions", self.fluents.len(), self.actions.len())?;
        for l in &self.static_laws {
            writeln!(
                f,
                "caused {} if {}.",
                self.show_lit(l.head),
                l.body.map_atoms(&mut |a| show(a))
            )?;
        }
        for l in &self.dynamic_laws {
            writeln!(
                f,
                "caused {} if {} after {}.",
                self.show_lit(l.head),
                l.condition.map_atoms(&mut |a| show(a)),
                l.after.map_atoms(&mut |a| show(a))
            )?;
        }
        for i in &self.initially {
            writeln!(f, "initially {}.", i.map_atoms(&mut |a| show(a)))?;
        }
        Ok(())
    }
}

pub fn ground_name(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(","))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Fluent,
    Action,
    Static,
}

struct Ctx<'a> {
    header: &'a Header,
    kinds: HashMap<&'a str, (Kind, usize)>,
    schema_types: HashMap<&'a str, Vec<&'a str>>,
    static_sets: HashMap<&'a str, BTreeSet<Vec<String>>>,
    fluent_ids: HashMap<String, usize>,
    action_ids: HashMap<String, usize>,
}

type Binding = BTreeMap<String, String>;

impl<'a> Ctx<'a> {
    fn resolve_term(&self, t: &Term, b: &Binding) -> String {
        match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => b[v].clone(),
        }
    }

    fn check_atom(&self, atom: &AtomRef) -> Result<Kind, GroundError> {
        let Some(&(kind, arity)) = self.kinds.get(atom.name.as_str()) else {
            return Err(GroundError::UnknownPredicate {
                name: atom.name.clone(),
                pos: atom.pos,
            });
        };
        if arity != atom.args.len() {
            return Err(GroundError::Arity {
                name: atom.name.clone(),
                expected: arity,
                found: atom.args.len(),
                pos: atom.pos,
            });
        }
        Ok(kind)
    }

    fn ground_formula(&self, f: &SFormula, b: &Binding) -> Formula<GAtom> {
        f.map_atoms(&mut |a| match a {
            SAtom::Eq(l, r) => bool_formula(self.resolve_term(l, b) == self.resolve_term(r, b)),
            SAtom::Neq(l, r) => bool_formula(self.resolve_term(l, b) != self.resolve_term(r, b)),
            SAtom::Pred(atom) => {
                let args: Vec<String> = atom.args.iter().map(|t| self.resolve_term(t, b)).collect();
                match self.kinds[atom.name.as_str()].0 {
                    Kind::Static => bool_formula(self.static_sets[atom.name.as_str()].contains(&args)),
                    // Instances excluded by a declaration guard are constantly false.
                    Kind::Fluent => self
                        .fluent_ids
                        .get(&ground_name(&atom.name, &args))
                        .map_or(Formula::False, |&i| Formula::Atom(GAtom::Fluent(i))),
                    Kind::Action => self
                        .action_ids
                        .get(&ground_name(&atom.name, &args))
                        .map_or(Formula::False, |&i| Formula::Atom(GAtom::Action(i))),
                }
            }
        })
        .simplify()
    }

    /// Domains of the variables in `atoms`, inferred from argument positions.
    fn infer_domains(
        &self,
        atoms: &[&SAtom],
        law_pos: Pos,
    ) -> Result<Vec<(String, Vec<String>)>, GroundError> {
        let mut typed: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut from_static: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut all_vars: BTreeSet<String> = BTreeSet::new();
        for a in atoms {
            match a {
                SAtom::Eq(l, r) | SAtom::Neq(l, r) => {
                    for t in [l, r] {
                        if let Term::Var(v) = t {
                            all_vars.insert(v.clone());
                        }
                    }
                }
                SAtom::Pred(atom) => {
                    let kind = self.check_atom(atom)?;
                    for (i, t) in atom.args.iter().enumerate() {
                        let Term::Var(v) = t else { continue };
                        all_vars.insert(v.clone());
                        if kind == Kind::Static {
                            let col = self.static_sets[atom.name.as_str()]
                                .iter()
                                .map(|tuple| tuple[i].clone());
                            from_static.entry(v.clone()).or_default().extend(col);
                        } else if !typed.contains_key(v) {
                            let ty = self.schema_types[atom.name.as_str()][i];
                            typed.insert(v.clone(), self.header.domains[ty].clone());
                        }
                    }
                }
            }
        }
        all_vars
            .into_iter()
            .map(|v| {
                if let Some(d) = typed.remove(&v) {
                    Ok((v, d))
                } else if let Some(d) = from_static.remove(&v) {
                    Ok((v, d.into_iter().collect()))
                } else {
                    Err(GroundError::Unbounded { var: v, pos: law_pos })
                }
            })
            .collect()
    }
}

fn bool_formula(b: bool) -> Formula<GAtom> {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

/// Calls `f` for every assignment of the variables, in lexicographic order
/// of variable names and declaration order of the constants.
fn for_each_binding(
    domains: &[(String, Vec<String>)],
    f: &mut impl FnMut(&Binding) -> Result<(), GroundError>,
) -> Result<(), GroundError> {
    fn go(
        domains: &[(String, Vec<String>)],
        k: usize,
        b: &mut Binding,
        f: &mut impl FnMut(&Binding) -> Result<(), GroundError>,
    ) -> Result<(), GroundError> {
        if k == domains.len() {
            return f(b);
        }
        let (var, dom) = &domains[k];
        for c in dom {
            b.insert(var.clone(), c.clone());
            go(domains, k + 1, b, f)?;
        }
        b.remove(var);
        Ok(())
    }
    go(domains, 0, &mut Binding::new(), f)
}

fn instantiate_decls(
    header: &Header,
    decls: &[Decl],
    static_sets: &HashMap<&str, BTreeSet<Vec<String>>>,
) -> Result<BTreeSet<String>, GroundError> {
    let mut out = BTreeSet::new();
    for d in decls {
        let mut doms = Vec::new();
        for (i, p) in d.params.iter().enumerate() {
            let dom = header.domains.get(&p.ty).ok_or_else(|| GroundError::UnknownType {
                ty: p.ty.clone(),
                pos: d.pos,
            })?;
            doms.push((p.var.clone().unwrap_or_else(|| format!("#{i}")), dom.clone()));
        }
        let mut combos: Vec<Vec<String>> = vec![vec![]];
        for (_, dom) in &doms {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    dom.iter().map(move |x| {
                        let mut c = c.clone();
                        c.push(x.clone());
                        c
                    })
                })
                .collect();
        }
        for args in combos {
            let keep = match &d.guard {
                None => true,
                Some(g) => {
                    let b: Binding = doms
                        .iter()
                        .map(|(v, _)| v.clone())
                        .zip(args.iter().cloned())
                        .collect();
                    let bad = std::cell::Cell::new(false);
                    let val = g.eval(&|a: &SAtom| match a {
                        SAtom::Eq(l, r) | SAtom::Neq(l, r) => {
                            let get = |t: &Term| match t {
                                Term::Const(c) => c.clone(),
                                Term::Var(v) => b.get(v).cloned().unwrap_or_default(),
                            };
                            (get(l) == get(r)) == matches!(a, SAtom::Eq(..))
                        }
                        SAtom::Pred(atom) => match static_sets.get(atom.name.as_str()) {
                            Some(set) => {
                                let t: Vec<String> = atom
                                    .args
                                    .iter()
                                    .map(|t| match t {
                                        Term::Const(c) => c.clone(),
                                        Term::Var(v) => b.get(v).cloned().unwrap_or_default(),
                                    })
                                    .collect();
                                set.contains(&t)
                            }
                            None => {
                                bad.set(true);
                                false
                            }
                        },
                    });
                    if bad.get() {
                        return Err(GroundError::DynamicGuard { pos: d.pos });
                    }
                    val
                }
            };
            if keep {
                out.insert(ground_name(&d.name, &args));
            }
        }
    }
    Ok(out)
}

/// Grounds every law over the Cartesian product of its variables' domains.
/// Guards over static relations and (in)equalities are decided here and
/// instances whose conditions become `false` are dropped.
pub fn ground(ad: &ActionDescription) -> Result<GroundDescription, GroundError> {
    let header = &ad.header;
    let mut kinds: HashMap<&str, (Kind, usize)> = HashMap::new();
    let mut schema_types: HashMap<&str, Vec<&str>> = HashMap::new();
    for (kind, decls) in [(Kind::Fluent, &header.fluents), (Kind::Action, &header.actions)] {
        for d in decls {
            let entry = (kind, d.params.len());
            if let Some(prev) = kinds.insert(&d.name, entry) {
                if prev != entry {
                    return Err(GroundError::NameClash {
                        name: d.name.clone(),
                        pos: d.pos,
                    });
                }
            }
            schema_types.insert(&d.name, d.params.iter().map(|p| p.ty.as_str()).collect());
        }
    }
    let mut static_sets: HashMap<&str, BTreeSet<Vec<String>>> = HashMap::new();
    for (rel, tuples) in &header.statics {
        let arity = tuples.first().map_or(0, Vec::len);
        if kinds.contains_key(rel.as_str()) || tuples.iter().any(|t| t.len() != arity) {
            return Err(GroundError::NameClash {
                name: rel.clone(),
                pos: Pos::default(),
            });
        }
        kinds.insert(rel, (Kind::Static, arity));
        static_sets.insert(rel, tuples.iter().cloned().collect());
    }

    let fluents: Vec<String> = instantiate_decls(header, &header.fluents, &static_sets)?
        .into_iter()
        .collect();
    let actions: Vec<String> = instantiate_decls(header, &header.actions, &static_sets)?
        .into_iter()
        .collect();
    let ctx = Ctx {
        header,
        kinds,
        schema_types,
        static_sets,
        fluent_ids: fluents.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect(),
        action_ids: actions.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect(),
    };

    let mut static_laws = Vec::new();
    let mut dynamic_laws = Vec::new();
    for law in &ad.laws {
        let (head, parts): (&Literal, Vec<&SFormula>) = match law {
            Law::Static(l) => (&l.head, vec![&l.body]),
            Law::Dynamic(l) => (&l.head, vec![&l.condition, &l.after]),
        };
        let head_atom = SAtom::Pred(head.atom.clone());
        let mut atoms: Vec<&SAtom> = vec![&head_atom];
        for p in &parts {
            atoms.extend(p.atoms());
        }
        if ctx.check_atom(&head.atom)? != Kind::Fluent {
            return Err(GroundError::NameClash {
                name: head.atom.name.clone(),
                pos: head.atom.pos,
            });
        }
        let domains = ctx.infer_domains(&atoms, law.pos())?;
        for_each_binding(&domains, &mut |b| {
            let args: Vec<String> = head.atom.args.iter().map(|t| ctx.resolve_term(t, b)).collect();
            let Some(&fluent) = ctx.fluent_ids.get(&ground_name(&head.atom.name, &args)) else {
                return Ok(());
            };
            let head = GLit {
                fluent,
                positive: head.positive,
            };
            let grounded: Vec<Formula<GAtom>> =
                parts.iter().map(|p| ctx.ground_formula(p, b)).collect();
            if grounded.contains(&Formula::False) {
                return Ok(());
            }
            let mut it = grounded.into_iter();
            match law {
                Law::Static(_) => static_laws.push(GStaticLaw {
                    head,
                    body: it.next().unwrap(),
                }),
                Law::Dynamic(_) => dynamic_laws.push(GDynamicLaw {
                    head,
                    condition: it.next().unwrap(),
                    after: it.next().unwrap(),
                }),
            }
            Ok(())
        })?;
    }

    let mut initially = Vec::new();
    for (f, pos) in &ad.initially {
        let atoms = f.atoms();
        let domains = ctx.infer_domains(&atoms, *pos)?;
        let mut parts = Vec::new();
        for_each_binding(&domains, &mut |b| {
            parts.push(ctx.ground_formula(f, b));
            Ok(())
        })?;
        initially.push(Formula::and(parts).simplify());
    }

    Ok(GroundDescription {
        header: header.clone(),
        fluents,
        actions,
        static_laws,
        dynamic_laws,
        initially,
        concurrency: header.concurrency.unwrap_or_default(),
    })
}
