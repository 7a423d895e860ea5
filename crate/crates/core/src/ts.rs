//! Explicit transition systems over propositional fluents.
//!
//! States are total valuations stored as bit vectors indexed by the
//! lexicographically sorted fluent list. State ids are positions in the
//! canonically sorted state vector, so iteration order, hashing and every
//! report derived from it are reproducible.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateId = usize;
pub type ActionId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TsError {
    #[error("state {0} is not part of the transition system")]
    UnknownState(String),
    #[error("action label {0} is not part of the transition system")]
    UnknownAction(String),
    #[error("state has width {found}, signature has {expected} fluents")]
    WidthMismatch { expected: usize, found: usize },
    #[error("malformed transition system: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// A total valuation of the fluents of a signature.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    len: usize,
    words: Box<[u64]>,
}

impl State {
    pub fn all_false(len: usize) -> Self {
        State {
            len,
            words: vec![0; len.div_ceil(64).max(1)].into_boxed_slice(),
        }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = State::all_false(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// Parses a `0`/`1` string; position `i` is fluent `i`.
    pub fn from_bitstring(text: &str) -> Option<Self> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(State::from_bits(bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn bitstring(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn true_fluents(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }
}

impl Ord for State {
    // Lexicographic on the bitstring: fluent 0 is the most significant.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            self.words
                .iter()
                .map(|w| w.reverse_bits())
                .cmp(other.words.iter().map(|w| w.reverse_bits()))
        })
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State({})", self.bitstring())
    }
}

/// A transition label: a canonically sorted set of elementary action names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionLabel(Vec<String>);

impl ActionLabel {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut v: Vec<String> = names.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        ActionLabel(v)
    }

    pub fn single(name: impl Into<String>) -> Self {
        ActionLabel(vec![name.into()])
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "{{{}}}", self.0.join(","))
        }
    }
}

/// `s0 -a1-> s1 -a2-> ... sn`; zero steps is a valid trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub start: StateId,
    pub steps: Vec<(ActionId, StateId)>,
}

impl Trajectory {
    pub fn end(&self) -> StateId {
        self.steps.last().map_or(self.start, |&(_, s)| s)
    }

    pub fn actions(&self) -> Vec<ActionId> {
        self.steps.iter().map(|&(a, _)| a).collect()
    }

    /// True iff every step is a transition of `ts`.
    pub fn replays_in(&self, ts: &TransitionSystem) -> bool {
        let mut cur = self.start;
        for &(a, next) in &self.steps {
            if a >= ts.actions.len() || ts.succ_ids(cur, a).binary_search(&next).is_err() {
                return false;
            }
            cur = next;
        }
        true
    }
}

/// `⟨S, S₀, A, Φ⟩` with Φ stored explicitly.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    fluents: Vec<String>,
    states: Vec<State>,
    index: HashMap<State, StateId>,
    initial: Vec<StateId>,
    actions: Vec<ActionLabel>,
    action_index: HashMap<ActionLabel, ActionId>,
    succ: Vec<Vec<Vec<StateId>>>,
}

impl TransitionSystem {
    /// Builds a system from value-level parts. States, actions and the
    /// fluent list are sorted into canonical order; transition endpoints
    /// and initial states must be members of `states`.
    pub fn new(
        fluents: Vec<String>,
        states: Vec<State>,
        initial: Vec<State>,
        actions: Vec<ActionLabel>,
        transitions: Vec<(State, ActionLabel, State)>,
    ) -> Result<Self, TsError> {
        let mut violations = Vec::new();
        let mut sorted_fluents = fluents.clone();
        sorted_fluents.sort();
        sorted_fluents.dedup();
        if sorted_fluents != fluents {
            violations.push(Violation::FluentOrder);
        }
        let width = fluents.len();
        let mut states = states;
        states.sort();
        states.dedup();
        for s in &states {
            if s.len() != width {
                return Err(TsError::WidthMismatch {
                    expected: width,
                    found: s.len(),
                });
            }
        }
        let index: HashMap<State, StateId> =
            states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut actions = actions;
        actions.sort();
        actions.dedup();
        let action_index: HashMap<ActionLabel, ActionId> =
            actions.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();

        let mut init_ids = Vec::new();
        for (k, s) in initial.iter().enumerate() {
            match index.get(s) {
                Some(&i) => init_ids.push(i),
                None => violations.push(Violation::InitialNotInStates { position: k }),
            }
        }
        init_ids.sort_unstable();
        init_ids.dedup();

        let mut succ = vec![vec![Vec::new(); actions.len()]; states.len()];
        for (k, (from, label, to)) in transitions.iter().enumerate() {
            let (Some(&f), Some(&t)) = (index.get(from), index.get(to)) else {
                violations.push(Violation::DanglingEndpoint { transition: k });
                continue;
            };
            let Some(&a) = action_index.get(label) else {
                violations.push(Violation::UnknownLabel { transition: k });
                continue;
            };
            succ[f][a].push(t);
        }
        if !violations.is_empty() {
            return Err(TsError::Invalid(violations));
        }
        for row in &mut succ {
            for v in row.iter_mut() {
                v.sort_unstable();
                v.dedup();
            }
        }
        Ok(TransitionSystem {
            fluents,
            states,
            index,
            initial: init_ids,
            actions,
            action_index,
            succ,
        })
    }

    pub fn fluents(&self) -> &[String] {
        &self.fluents
    }

    pub fn fluent_index(&self, name: &str) -> Option<usize> {
        self.fluents.binary_search_by(|f| f.as_str().cmp(name)).ok()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id]
    }

    pub fn state_id(&self, s: &State) -> Option<StateId> {
        self.index.get(s).copied()
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, id: StateId) -> bool {
        self.initial.binary_search(&id).is_ok()
    }

    pub fn actions(&self) -> &[ActionLabel] {
        &self.actions
    }

    pub fn action_id(&self, a: &ActionLabel) -> Option<ActionId> {
        self.action_index.get(a).copied()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().flatten().map(Vec::len).sum()
    }

    /// Φ at the id level; sorted, empty iff the action is not executable.
    pub fn succ_ids(&self, s: StateId, a: ActionId) -> &[StateId] {
        &self.succ[s][a]
    }

    fn resolve(&self, s: &State, a: &ActionLabel) -> Result<(StateId, ActionId), TsError> {
        let sid = self
            .state_id(s)
            .ok_or_else(|| TsError::UnknownState(s.bitstring()))?;
        let aid = self
            .action_id(a)
            .ok_or_else(|| TsError::UnknownAction(a.to_string()))?;
        Ok((sid, aid))
    }

    /// Φ(s, a).
    pub fn successors(&self, s: &State, a: &ActionLabel) -> Result<Vec<State>, TsError> {
        let (sid, aid) = self.resolve(s, a)?;
        Ok(self.succ[sid][aid]
            .iter()
            .map(|&t| self.states[t].clone())
            .collect())
    }

    /// All states reachable from `s` by executing `sigma` step by step.
    pub fn execute(&self, s: &State, sigma: &[ActionLabel]) -> Result<Vec<State>, TsError> {
        let sid = self
            .state_id(s)
            .ok_or_else(|| TsError::UnknownState(s.bitstring()))?;
        let ids = sigma
            .iter()
            .map(|a| {
                self.action_id(a)
                    .ok_or_else(|| TsError::UnknownAction(a.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .execute_ids(sid, &ids)
            .into_iter()
            .map(|t| self.states[t].clone())
            .collect())
    }

    pub fn execute_ids(&self, s: StateId, sigma: &[ActionId]) -> BTreeSet<StateId> {
        let mut cur = BTreeSet::from([s]);
        for &a in sigma {
            cur = cur
                .iter()
                .flat_map(|&x| self.succ[x][a].iter().copied())
                .collect();
            if cur.is_empty() {
                break;
            }
        }
        cur
    }

    /// Shortest trajectory from `s` to `target` by breadth-first search;
    /// ties go to the canonically smaller action, then the smaller state.
    pub fn trajectory_exists(&self, s: StateId, target: StateId) -> Option<Trajectory> {
        let mut parent: HashMap<StateId, (StateId, ActionId)> = HashMap::new();
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(x) = queue.pop_front() {
            if x == target {
                let mut steps = Vec::new();
                let mut cur = x;
                while cur != s {
                    let (p, a) = parent[&cur];
                    steps.push((a, cur));
                    cur = p;
                }
                steps.reverse();
                return Some(Trajectory { start: s, steps });
            }
            for a in 0..self.actions.len() {
                for &y in &self.succ[x][a] {
                    if !seen[y] {
                        seen[y] = true;
                        parent.insert(y, (x, a));
                        queue.push_back(y);
                    }
                }
            }
        }
        None
    }

    /// Names of the fluents true in state `id`.
    pub fn describe(&self, id: StateId) -> Vec<&str> {
        self.states[id]
            .true_fluents()
            .map(|i| self.fluents[i].as_str())
            .collect()
    }

    pub fn to_document(&self) -> TsDocument {
        let mut transitions = Vec::new();
        for (f, row) in self.succ.iter().enumerate() {
            for (a, targets) in row.iter().enumerate() {
                for &t in targets {
                    transitions.push(TransitionEntry {
                        from: f,
                        label: self.actions[a].names().to_vec(),
                        to: t,
                    });
                }
            }
        }
        TsDocument {
            fluents: self.fluents.clone(),
            actions: self.actions.iter().map(|a| a.names().to_vec()).collect(),
            states: self.states.iter().map(State::bitstring).collect(),
            initial: self.initial.clone(),
            transitions,
        }
    }

    pub fn from_document(doc: &TsDocument) -> Result<Self, TsError> {
        let violations = validate(doc);
        if !violations.is_empty() {
            return Err(TsError::Invalid(violations));
        }
        let states: Vec<State> = doc
            .states
            .iter()
            .map(|b| State::from_bitstring(b).expect("validated"))
            .collect();
        let initial = doc.initial.iter().map(|&i| states[i].clone()).collect();
        let actions = doc.actions.iter().map(|a| ActionLabel::new(a.clone())).collect();
        let transitions = doc
            .transitions
            .iter()
            .map(|t| {
                (
                    states[t.from].clone(),
                    ActionLabel::new(t.label.clone()),
                    states[t.to].clone(),
                )
            })
            .collect();
        TransitionSystem::new(doc.fluents.clone(), states, initial, actions, transitions)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("serializable")
    }
}

/// Interchange form of an explicit transition system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsDocument {
    pub fluents: Vec<String>,
    pub actions: Vec<Vec<String>>,
    pub states: Vec<String>,
    pub initial: Vec<usize>,
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub from: usize,
    pub label: Vec<String>,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    FluentOrder,
    DuplicateFluent(String),
    BadBitstring { state: usize },
    DuplicateState { state: usize },
    InitialNotInStates { position: usize },
    UnknownLabel { transition: usize },
    LabelNotDeclared { transition: usize, name: String },
    DanglingEndpoint { transition: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FluentOrder => write!(f, "fluents are not in sorted order"),
            Violation::DuplicateFluent(n) => write!(f, "fluent {n} declared twice"),
            Violation::BadBitstring { state } => {
                write!(f, "state {state} is not a bitstring over the fluents")
            }
            Violation::DuplicateState { state } => write!(f, "state {state} is a duplicate"),
            Violation::InitialNotInStates { position } => {
                write!(f, "initial entry {position} does not name a state")
            }
            Violation::UnknownLabel { transition } => {
                write!(f, "transition {transition} uses an undeclared label")
            }
            Violation::LabelNotDeclared { transition, name } => {
                write!(f, "transition {transition} uses undeclared action {name}")
            }
            Violation::DanglingEndpoint { transition } => {
                write!(f, "transition {transition} has an endpoint outside the states")
            }
        }
    }
}

/// Checks the structural invariants of an interchange document.
pub fn validate(doc: &TsDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut sorted = doc.fluents.clone();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            out.push(Violation::DuplicateFluent(w[0].clone()));
        }
    }
    if sorted != doc.fluents {
        out.push(Violation::FluentOrder);
    }
    let mut seen = std::collections::HashSet::new();
    for (i, b) in doc.states.iter().enumerate() {
        if b.len() != doc.fluents.len() || State::from_bitstring(b).is_none() {
            out.push(Violation::BadBitstring { state: i });
        } else if !seen.insert(b.as_str()) {
            out.push(Violation::DuplicateState { state: i });
        }
    }
    for (k, &i) in doc.initial.iter().enumerate() {
        if i >= doc.states.len() {
            out.push(Violation::InitialNotInStates { position: k });
        }
    }
    let labels: std::collections::HashSet<ActionLabel> = doc
        .actions
        .iter()
        .map(|a| ActionLabel::new(a.clone()))
        .collect();
    let names: std::collections::HashSet<&String> = doc.actions.iter().flatten().collect();
    for (k, t) in doc.transitions.iter().enumerate() {
        if t.from >= doc.states.len() || t.to >= doc.states.len() {
            out.push(Violation::DanglingEndpoint { transition: k });
        }
        if let Some(n) = t.label.iter().find(|n| !names.contains(n)) {
            out.push(Violation::LabelNotDeclared {
                transition: k,
                name: n.clone(),
            });
        } else if !labels.contains(&ActionLabel::new(t.label.clone())) {
            out.push(Violation::UnknownLabel { transition: k });
        }
    }
    out
}
