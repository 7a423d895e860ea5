//! Classification functions and equalized transition systems.
//!
//! An equalized state is identified with its pre-image under the
//! classification. Lifted transitions are existential: `ŝ'` is an
//! `a`-successor of `ŝ` when some member of `ŝ'` is an `a`-successor of
//! some member of `ŝ`. A distinguished error state sits outside the
//! partition; it absorbs every action and satisfies no formula.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::ts::{ActionId, State, StateId, TransitionSystem};

pub type EId = usize;

pub const DEFAULT_VIOLATION_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EqError {
    #[error("classification table has no entry for state {0}")]
    NotTotal(String),
    #[error("unknown fluent `{0}`")]
    UnknownFluent(String),
    #[error("unknown name `{0}` (neither a fluent nor an auxiliary fluent)")]
    UnknownName(String),
    #[error("auxiliary fluent `{0}` defined twice")]
    DuplicateAux(String),
}

/// Selects fluents by name, optionally constraining arguments; `_` or an
/// uppercase variable matches anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentPattern {
    pub name: String,
    pub args: Option<Vec<Option<String>>>,
}

impl FluentPattern {
    pub fn parse(text: &str) -> Self {
        let text = text.trim();
        match text.split_once('(') {
            None => FluentPattern {
                name: text.to_string(),
                args: None,
            },
            Some((name, rest)) => {
                let inner = rest.trim_end_matches(')');
                let args = inner
                    .split(',')
                    .map(|a| {
                        let a = a.trim();
                        if a == "_" || a.chars().next().is_some_and(char::is_uppercase) {
                            None
                        } else {
                            Some(a.to_string())
                        }
                    })
                    .collect();
                FluentPattern {
                    name: name.trim().to_string(),
                    args: Some(args),
                }
            }
        }
    }

    pub fn matches(&self, fluent: &str) -> bool {
        let (name, args): (&str, Vec<&str>) = match fluent.split_once('(') {
            None => (fluent, vec![]),
            Some((n, rest)) => (n, rest.trim_end_matches(')').split(',').collect()),
        };
        if name != self.name {
            return false;
        }
        match &self.args {
            None => true,
            Some(pat) => {
                pat.len() == args.len()
                    && pat
                        .iter()
                        .zip(&args)
                        .all(|(p, a)| p.as_deref().is_none_or(|p| p == *a))
            }
        }
    }
}

impl fmt::Display for FluentPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(args) = &self.args {
            let parts: Vec<&str> = args.iter().map(|a| a.as_deref().unwrap_or("_")).collect();
            write!(f, "({})", parts.join(","))?;
        }
        Ok(())
    }
}

/// A total map `h : S → Ω_h`.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    /// Keep the values of the matched fluents; every other fluent is
    /// unknown.
    Type1 { retain: Vec<FluentPattern> },
    /// Cluster by the values of auxiliary fluents, each defined by a
    /// formula over the concrete fluents.
    Type2 { aux: Vec<(String, Formula<String>)> },
    /// Explicit table from states to cluster names.
    Custom { table: HashMap<State, String> },
}

impl Classification {
    pub fn identity() -> Self {
        Classification::Type1 {
            retain: vec![FluentPattern {
                name: String::new(),
                args: None,
            }],
        }
    }

    pub fn constant() -> Self {
        Classification::Type1 { retain: vec![] }
    }
}

/// A cluster identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Profile {
    /// Values of the retained fluents; `None` is the unknown value `u`
    /// and is used for every other fluent.
    Type1(Vec<Option<bool>>),
    Type2(Vec<bool>),
    Custom(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigAtom {
    Fluent(usize),
    Aux(usize),
}

/// A classification resolved against a fluent signature.
#[derive(Debug, Clone)]
pub struct CompiledClassification {
    kind: Compiled,
    fluents: Vec<String>,
    aux_names: Vec<String>,
}

#[derive(Debug, Clone)]
enum Compiled {
    Type1 { retained: Vec<bool> },
    Type2 { defs: Vec<Formula<usize>> },
    Custom { table: HashMap<State, String> },
}

impl CompiledClassification {
    pub fn new(c: &Classification, fluents: &[String]) -> Result<Self, EqError> {
        let lookup = |n: &str| -> Result<usize, EqError> {
            fluents
                .binary_search_by(|f| f.as_str().cmp(n))
                .map_err(|_| EqError::UnknownFluent(n.to_string()))
        };
        let (kind, aux_names) = match c {
            Classification::Type1 { retain } => {
                let retained = fluents
                    .iter()
                    .map(|f| {
                        retain
                            .iter()
                            .any(|p| p.name.is_empty() || p.matches(f))
                    })
                    .collect();
                (Compiled::Type1 { retained }, vec![])
            }
            Classification::Type2 { aux } => {
                let mut names = Vec::new();
                let mut defs = Vec::new();
                for (name, def) in aux {
                    if names.contains(name) {
                        return Err(EqError::DuplicateAux(name.clone()));
                    }
                    names.push(name.clone());
                    defs.push(def.try_map_atoms(&mut |n| lookup(n).map(Formula::Atom))?);
                }
                (Compiled::Type2 { defs }, names)
            }
            Classification::Custom { table } => (
                Compiled::Custom {
                    table: table.clone(),
                },
                vec![],
            ),
        };
        Ok(CompiledClassification {
            kind,
            fluents: fluents.to_vec(),
            aux_names,
        })
    }

    /// `h(s)`.
    pub fn classify(&self, s: &State) -> Result<Profile, EqError> {
        Ok(match &self.kind {
            Compiled::Type1 { retained } => Profile::Type1(
                retained
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| r.then(|| s.get(i)))
                    .collect(),
            ),
            Compiled::Type2 { defs } => {
                Profile::Type2(defs.iter().map(|d| d.eval(&|&i| s.get(i))).collect())
            }
            Compiled::Custom { table } => Profile::Custom(
                table
                    .get(s)
                    .cloned()
                    .ok_or_else(|| EqError::NotTotal(s.bitstring()))?,
            ),
        })
    }

    pub fn aux_names(&self) -> &[String] {
        &self.aux_names
    }

    pub fn is_type1_retained(&self, fluent: usize) -> Option<bool> {
        match &self.kind {
            Compiled::Type1 { retained } => Some(retained[fluent]),
            _ => None,
        }
    }

    /// Resolves names to fluents first, then to auxiliary fluents.
    pub fn compile_formula(&self, f: &Formula<String>) -> Result<Formula<SigAtom>, EqError> {
        f.try_map_atoms(&mut |n| {
            if let Ok(i) = self.fluents.binary_search_by(|x| x.as_str().cmp(n)) {
                Ok(Formula::Atom(SigAtom::Fluent(i)))
            } else if let Some(i) = self.aux_names.iter().position(|x| x == n) {
                Ok(Formula::Atom(SigAtom::Aux(i)))
            } else {
                Err(EqError::UnknownName(n.clone()))
            }
        })
    }

    pub fn eval(&self, f: &Formula<SigAtom>, s: &State) -> bool {
        f.eval(&|a| match a {
            SigAtom::Fluent(i) => s.get(*i),
            SigAtom::Aux(i) => match &self.kind {
                Compiled::Type2 { defs } => defs[*i].eval(&|&j| s.get(j)),
                _ => unreachable!("aux atoms only compile against type-2 classifications"),
            },
        })
    }

    pub fn describe(&self, p: &Profile) -> String {
        match p {
            Profile::Type1(vals) => {
                let parts: Vec<String> = vals
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| {
                        v.map(|b| format!("{}={}", self.fluents[i], if b { "t" } else { "f" }))
                    })
                    .collect();
                format!("[{}]", parts.join(", "))
            }
            Profile::Type2(vals) => {
                let parts: Vec<&str> = vals
                    .iter()
                    .zip(&self.aux_names)
                    .filter(|(v, _)| **v)
                    .map(|(_, n)| n.as_str())
                    .collect();
                format!("{{{}}}", parts.join(", "))
            }
            Profile::Custom(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualizedState {
    pub profile: Profile,
    pub members: Vec<StateId>,
}

/// `⟨Ŝ, Ŝ₀, Φ̂⟩` plus the error sink, which has id `len()`.
#[derive(Debug, Clone)]
pub struct EqualizedSystem {
    ts: Arc<TransitionSystem>,
    class: Arc<CompiledClassification>,
    estates: Vec<EqualizedState>,
    of_state: Vec<EId>,
    initial: Vec<EId>,
    lifted: Vec<Vec<Vec<EId>>>,
    err_loop: [EId; 1],
}

impl EqualizedSystem {
    pub fn build(ts: Arc<TransitionSystem>, c: &Classification) -> Result<Self, EqError> {
        let class = Arc::new(CompiledClassification::new(c, ts.fluents())?);
        Self::with_compiled(ts, class)
    }

    pub fn with_compiled(
        ts: Arc<TransitionSystem>,
        class: Arc<CompiledClassification>,
    ) -> Result<Self, EqError> {
        let profiles: Vec<Profile> = ts
            .states()
            .par_iter()
            .map(|s| class.classify(s))
            .collect::<Result<_, _>>()?;
        let mut groups: BTreeMap<Profile, Vec<StateId>> = BTreeMap::new();
        for (sid, p) in profiles.into_iter().enumerate() {
            groups.entry(p).or_default().push(sid);
        }
        let estates: Vec<EqualizedState> = groups
            .into_iter()
            .map(|(profile, members)| EqualizedState { profile, members })
            .collect();
        let mut of_state = vec![0; ts.states().len()];
        for (e, es) in estates.iter().enumerate() {
            for &s in &es.members {
                of_state[s] = e;
            }
        }
        let initial = estates
            .iter()
            .enumerate()
            .filter(|(_, es)| es.members.iter().any(|&s| ts.is_initial(s)))
            .map(|(e, _)| e)
            .collect();
        let n_actions = ts.actions().len();
        let lifted = estates
            .par_iter()
            .map(|es| {
                (0..n_actions)
                    .map(|a| {
                        let set: BTreeSet<EId> = es
                            .members
                            .iter()
                            .flat_map(|&s| ts.succ_ids(s, a).iter().map(|&t| of_state[t]))
                            .collect();
                        set.into_iter().collect()
                    })
                    .collect()
            })
            .collect();
        let err_loop = [estates.len()];
        Ok(EqualizedSystem {
            ts,
            class,
            err_loop,
            estates,
            of_state,
            initial,
            lifted,
        })
    }

    pub fn ts(&self) -> &TransitionSystem {
        &self.ts
    }

    pub fn ts_arc(&self) -> &Arc<TransitionSystem> {
        &self.ts
    }

    pub fn classification(&self) -> &CompiledClassification {
        &self.class
    }

    pub fn len(&self) -> usize {
        self.estates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estates.is_empty()
    }

    pub fn err(&self) -> EId {
        self.estates.len()
    }

    pub fn estates(&self) -> &[EqualizedState] {
        &self.estates
    }

    pub fn estate(&self, e: EId) -> &EqualizedState {
        &self.estates[e]
    }

    pub fn initial(&self) -> &[EId] {
        &self.initial
    }

    pub fn is_initial(&self, e: EId) -> bool {
        self.initial.binary_search(&e).is_ok()
    }

    /// `h(s)` as a cluster id.
    pub fn class_of(&self, s: StateId) -> EId {
        self.of_state[s]
    }

    pub fn num_actions(&self) -> usize {
        self.ts.actions().len()
    }

    /// `Φ̂(ŝ, a)`; the error state loops on every action.
    pub fn lifted(&self, e: EId, a: ActionId) -> &[EId] {
        if e == self.err() {
            &self.err_loop
        } else {
            &self.lifted[e][a]
        }
    }

    pub fn profile_of(&self, e: EId) -> String {
        if e == self.err() {
            "ERR".to_string()
        } else {
            self.class.describe(&self.estates[e].profile)
        }
    }

    pub fn compile(&self, f: &Formula<String>) -> Result<Formula<SigAtom>, EqError> {
        self.class.compile_formula(f)
    }

    /// `ŝ ⊨ g` iff every member satisfies `g`; the error state satisfies
    /// nothing.
    pub fn satisfies(&self, e: EId, g: &Formula<SigAtom>) -> bool {
        if e == self.err() {
            return false;
        }
        self.estates[e]
            .members
            .iter()
            .all(|&s| self.class.eval(g, self.ts.state(s)))
    }

    pub fn find_profile(&self, p: &Profile) -> Option<EId> {
        self.estates
            .binary_search_by(|es| es.profile.cmp(p))
            .ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EStateEntry {
    pub id: EId,
    pub profile: String,
    pub size: usize,
    pub initial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftedEdge {
    pub from: EId,
    pub action: String,
    pub to: EId,
}

/// Serializable view of `⟨Ŝ, Ŝ₀, Φ̂⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualizedDocument {
    pub actions: Vec<String>,
    pub states: Vec<EStateEntry>,
    pub error_state: EId,
    pub transitions: Vec<LiftedEdge>,
}

impl EqualizedSystem {
    pub fn to_document(&self) -> EqualizedDocument {
        let actions: Vec<String> = self.ts.actions().iter().map(|a| a.to_string()).collect();
        let states = (0..self.len())
            .map(|e| EStateEntry {
                id: e,
                profile: self.profile_of(e),
                size: self.estates[e].members.len(),
                initial: self.is_initial(e),
            })
            .collect();
        let mut transitions = Vec::new();
        for e in 0..self.len() {
            for (a, name) in actions.iter().enumerate() {
                for &t in &self.lifted[e][a] {
                    transitions.push(LiftedEdge {
                        from: e,
                        action: name.clone(),
                        to: t,
                    });
                }
            }
        }
        EqualizedDocument {
            actions,
            states,
            error_state: self.err(),
            transitions,
        }
    }
}

/// A lifted edge `ŝ -a-> ŝ'` together with the member that breaks a
/// properness condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProperViolation {
    pub from: EId,
    pub action: ActionId,
    pub to: EId,
    pub witness: StateId,
}

/// Condition (1): every member of a lifted successor has a concrete
/// predecessor in the source cluster.
pub fn check_proper(esys: &EqualizedSystem, cap: usize) -> Vec<ProperViolation> {
    let ts = esys.ts();
    let per_state: Vec<Vec<ProperViolation>> = (0..esys.len())
        .into_par_iter()
        .map(|e| {
            let mut out = Vec::new();
            for a in 0..esys.num_actions() {
                let mut reached: BTreeSet<StateId> = BTreeSet::new();
                for &s in &esys.estate(e).members {
                    reached.extend(ts.succ_ids(s, a));
                }
                for &t in &esys.lifted[e][a] {
                    for &m in &esys.estate(t).members {
                        if !reached.contains(&m) {
                            out.push(ProperViolation {
                                from: e,
                                action: a,
                                to: t,
                                witness: m,
                            });
                        }
                    }
                }
            }
            out
        })
        .collect();
    per_state.into_iter().flatten().take(cap).collect()
}

/// Condition (2): every member of the source cluster has a concrete
/// successor inside each lifted successor.
pub fn check_strong_proper(esys: &EqualizedSystem, cap: usize) -> Vec<ProperViolation> {
    let ts = esys.ts();
    let per_state: Vec<Vec<ProperViolation>> = (0..esys.len())
        .into_par_iter()
        .map(|e| {
            let mut out = Vec::new();
            for a in 0..esys.num_actions() {
                for &t in &esys.lifted[e][a] {
                    for &s in &esys.estate(e).members {
                        if !ts.succ_ids(s, a).iter().any(|&x| esys.class_of(x) == t) {
                            out.push(ProperViolation {
                                from: e,
                                action: a,
                                to: t,
                                witness: s,
                            });
                        }
                    }
                }
            }
            out
        })
        .collect();
    per_state.into_iter().flatten().take(cap).collect()
}

/// True iff no cluster mixes initial and non-initial states.
pub fn check_initial_clustering(esys: &EqualizedSystem) -> bool {
    let ts = esys.ts();
    esys.initial
        .iter()
        .all(|&e| esys.estate(e).members.iter().all(|&s| ts.is_initial(s)))
}
