//! Transition semantics of ground literal-head descriptions.
//!
//! States are the interpretations closed under the static laws. A triple
//! `⟨s, A, s'⟩` is a transition when `s'` is the only interpretation that
//! satisfies the heads of all static laws whose body holds in `s'` and of
//! all dynamic laws whose condition holds in `s'` and whose after-part
//! holds in `s ∪ A`. With literal heads that set of heads pins down `s'`
//! exactly when it assigns every fluent, consistently, the value it has in
//! `s'`; candidates are produced by a backtracking search that prunes on
//! violated heads as soon as a law's body is decided.

use rayon::prelude::*;
use thiserror::Error;

use super::ground::{GAtom, GLit, GroundDescription};
use crate::formula::Formula;
use crate::ts::{ActionLabel, State, TransitionSystem, TsError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("state space exceeds the cap of {cap} states ({explored} found before stopping)")]
    StateBudget { cap: usize, explored: usize },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error(transparent)]
    Ts(#[from] TsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub max_states: usize,
    /// Overrides the description's own `concurrency` directive.
    pub concurrency: Option<super::ast::Concurrency>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_states: 100_000,
            concurrency: None,
        }
    }
}

/// A law reduced to `head if body`, with `body` over fluents only.
#[derive(Debug, Clone)]
struct Rule<'a> {
    head: GLit,
    body: &'a Formula<GAtom>,
    /// Largest fluent index in the body, i.e. the search depth at which
    /// the body becomes decidable.
    ready: usize,
}

fn eval_in(f: &Formula<GAtom>, s: &State, actions: &[usize]) -> bool {
    f.eval(&|a| match a {
        GAtom::Fluent(i) => s.get(*i),
        GAtom::Action(i) => actions.contains(i),
    })
}

/// Pre-indexed view of a ground description.
pub struct Semantics<'a> {
    gd: &'a GroundDescription,
    statics: Vec<Rule<'a>>,
    /// Search order over fluents: a fluent defined by static laws comes
    /// after the fluents its definition reads, so its laws prune early.
    order: Vec<usize>,
    rank: Vec<usize>,
}

/// Kahn's algorithm over the edges `body fluent -> head fluent` of static
/// laws whose head does not occur in its own body. Cycles are broken by
/// taking the smallest remaining fluent.
fn search_order(gd: &GroundDescription) -> Vec<usize> {
    let n = gd.fluents.len();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for l in &gd.static_laws {
        let h = l.head.fluent;
        let mut body: Vec<usize> = l
            .body
            .atoms()
            .into_iter()
            .filter_map(|a| match a {
                GAtom::Fluent(i) => Some(*i),
                GAtom::Action(_) => None,
            })
            .collect();
        body.sort_unstable();
        body.dedup();
        if body.contains(&h) {
            continue;
        }
        for b in body {
            out_edges[b].push(h);
            indeg[h] += 1;
        }
    }
    let mut done = vec![false; n];
    let mut ready: std::collections::BTreeSet<usize> =
        (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = match ready.pop_first() {
            Some(i) => i,
            None => (0..n).find(|&i| !done[i]).expect("nodes remain"),
        };
        if done[next] {
            continue;
        }
        done[next] = true;
        order.push(next);
        for &h in &out_edges[next] {
            indeg[h] = indeg[h].saturating_sub(1);
            if indeg[h] == 0 && !done[h] {
                ready.insert(h);
            }
        }
    }
    order
}

impl<'a> Semantics<'a> {
    pub fn new(gd: &'a GroundDescription) -> Self {
        let order = search_order(gd);
        let mut rank = vec![0; order.len()];
        for (p, &f) in order.iter().enumerate() {
            rank[f] = p;
        }
        let mut sem = Semantics {
            gd,
            statics: Vec::new(),
            order,
            rank,
        };
        sem.statics = gd
            .static_laws
            .iter()
            .map(|l| Rule {
                head: l.head,
                body: &l.body,
                ready: sem.ready(&l.body, l.head),
            })
            .collect();
        sem
    }

    fn ready(&self, body: &Formula<GAtom>, head: GLit) -> usize {
        body.atoms()
            .into_iter()
            .filter_map(|a| match a {
                GAtom::Fluent(i) => Some(self.rank[*i]),
                GAtom::Action(_) => None,
            })
            .max()
            .unwrap_or(0)
            .max(self.rank[head.fluent])
    }

    pub fn description(&self) -> &GroundDescription {
        self.gd
    }

    /// Depth-first enumeration of total valuations, pruned whenever a rule
    /// that has become decidable fails. `rules_at[d]` are checked once the
    /// `d`-th fluent of the search order is assigned. `leaf` may reject a
    /// complete valuation. Results come out in search order, not sorted.
    fn search(
        &self,
        rules_at: &[Vec<&Rule<'_>>],
        allowed: &[[bool; 2]],
        cap: usize,
        leaf: &mut dyn FnMut(&State) -> bool,
        out: &mut Vec<State>,
    ) -> Result<(), SemanticsError> {
        let n = self.gd.fluents.len();
        let mut s = State::all_false(n);
        if n == 0 {
            if rules_at.iter().flatten().all(|r| rule_holds(r, &s)) && leaf(&s) {
                out.push(s);
            }
            return Ok(());
        }
        // Explicit stack of (depth, next value to try).
        let mut stack: Vec<u8> = vec![0];
        while let Some(&v) = stack.last() {
            let d = stack.len() - 1;
            if v > 1 {
                stack.pop();
                if let Some(last) = stack.last_mut() {
                    *last += 1;
                }
                continue;
            }
            let value = v == 1;
            let f = self.order[d];
            if !allowed[f][value as usize] {
                *stack.last_mut().unwrap() += 1;
                continue;
            }
            s.set(f, value);
            let ok = rules_at[d].iter().all(|r| rule_holds(r, &s));
            if ok && d + 1 == n {
                if leaf(&s) {
                    if out.len() == cap {
                        return Err(SemanticsError::StateBudget {
                            cap,
                            explored: out.len(),
                        });
                    }
                    out.push(s.clone());
                }
                *stack.last_mut().unwrap() += 1;
            } else if ok {
                stack.push(0);
            } else {
                *stack.last_mut().unwrap() += 1;
            }
        }
        Ok(())
    }

    fn bucket<'r>(&self, rules: &'r [Rule<'r>]) -> Vec<Vec<&'r Rule<'r>>> {
        let n = self.gd.fluents.len().max(1);
        let mut at = vec![Vec::new(); n];
        for r in rules {
            at[r.ready.min(n - 1)].push(r);
        }
        at
    }

    /// All interpretations closed under the static laws, in canonical order.
    pub fn legal_states(&self, cap: usize) -> Result<Vec<State>, SemanticsError> {
        let rules_at = self.bucket(&self.statics);
        let allowed = vec![[true, true]; self.gd.fluents.len()];
        let mut out = Vec::new();
        self.search(&rules_at, &allowed, cap, &mut |_| true, &mut out)?;
        out.sort();
        Ok(out)
    }

    /// Successors of `s` under the elementary actions `label` (indices into
    /// the description's action list), computed directly from the laws.
    pub fn transitions_of(&self, s: &State, label: &[usize]) -> Vec<State> {
        self.transitions_with(s, label, &self.dynamic_for(label))
    }

    /// Dynamic laws whose after-part is not false under `label` whatever
    /// the fluents are.
    pub fn dynamic_for(&self, label: &[usize]) -> Vec<usize> {
        (0..self.gd.dynamic_laws.len())
            .filter(|&i| {
                self.gd.dynamic_laws[i].after.eval3(&|a| match a {
                    GAtom::Fluent(_) => None,
                    GAtom::Action(j) => Some(label.contains(j)),
                }) != Some(false)
            })
            .collect()
    }

    fn transitions_with(&self, s: &State, label: &[usize], laws: &[usize]) -> Vec<State> {
        let n = self.gd.fluents.len();
        let mut rules: Vec<Rule<'_>> = self.statics.clone();
        for l in laws.iter().map(|&i| &self.gd.dynamic_laws[i]) {
            if eval_in(&l.after, s, label) {
                rules.push(Rule {
                    head: l.head,
                    body: &l.condition,
                    ready: self.ready(&l.condition, l.head),
                });
            }
        }
        // A value can only survive the uniqueness test if some law could
        // force it.
        let mut allowed = vec![[false, false]; n];
        for r in &rules {
            allowed[r.head.fluent][r.head.positive as usize] = true;
        }
        let rules_at = self.bucket(&rules);
        let mut leaf = |cand: &State| {
            let mut forced = vec![false; n];
            for r in &rules {
                if r.body.eval(&|a| match a {
                    GAtom::Fluent(i) => cand.get(*i),
                    GAtom::Action(_) => false,
                }) {
                    forced[r.head.fluent] = true;
                }
            }
            forced.iter().all(|&f| f)
        };
        let mut out = Vec::new();
        self.search(&rules_at, &allowed, usize::MAX, &mut leaf, &mut out)
            .expect("uncapped search");
        out.sort();
        out
    }

    /// Transition labels: all subsets of the actions whose size lies in
    /// the concurrency range, each as sorted action indices.
    pub fn labels(&self, opts: &BuildOptions) -> Vec<Vec<usize>> {
        let c = opts.concurrency.unwrap_or(self.gd.concurrency);
        let m = self.gd.actions.len();
        let mut out = Vec::new();
        fn subsets(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..m {
                cur.push(i);
                subsets(i + 1, m, left - 1, cur, out);
                cur.pop();
            }
        }
        for k in c.min..=c.max.min(m) {
            subsets(0, m, k, &mut Vec::new(), &mut out);
        }
        out
    }

    pub fn label_of(&self, ids: &[usize]) -> ActionLabel {
        ActionLabel::new(ids.iter().map(|&i| self.gd.actions[i].clone()))
    }

    pub fn label_ids(&self, label: &ActionLabel) -> Result<Vec<usize>, SemanticsError> {
        label
            .names()
            .iter()
            .map(|n| {
                self.gd
                    .action_index(n)
                    .ok_or_else(|| SemanticsError::UnknownAction(n.clone()))
            })
            .collect()
    }

    pub fn is_initial(&self, s: &State) -> bool {
        self.gd.initially.iter().all(|f| eval_in(f, s, &[]))
    }
}

fn rule_holds(r: &Rule<'_>, s: &State) -> bool {
    let body = r.body.eval(&|a| match a {
        GAtom::Fluent(i) => s.get(*i),
        GAtom::Action(_) => false,
    });
    !body || s.get(r.head.fluent) == r.head.positive
}

/// The explicit transition system described by `gd`.
pub fn build_transition_system(
    gd: &GroundDescription,
    opts: &BuildOptions,
) -> Result<TransitionSystem, SemanticsError> {
    let sem = Semantics::new(gd);
    let states = sem.legal_states(opts.max_states)?;
    let labels = sem.labels(opts);
    let relevant: Vec<Vec<usize>> = labels.iter().map(|l| sem.dynamic_for(l)).collect();
    let initial: Vec<State> = states.iter().filter(|s| sem.is_initial(s)).cloned().collect();
    let transitions: Vec<(State, ActionLabel, State)> = states
        .par_iter()
        .flat_map_iter(|s| {
            let sem = &sem;
            labels.iter().zip(&relevant).flat_map(move |(l, laws)| {
                let label = sem.label_of(l);
                sem.transitions_with(s, l, laws)
                    .into_iter()
                    .map(move |t| (s.clone(), label.clone(), t))
            })
        })
        .collect();
    let actions = labels.iter().map(|l| sem.label_of(l)).collect();
    Ok(TransitionSystem::new(
        gd.fluents.clone(),
        states,
        initial,
        actions,
        transitions,
    )?)
}

/// Lazy evaluation of one `(s, A)` pair.
pub fn transitions_of(
    gd: &GroundDescription,
    s: &State,
    label: &ActionLabel,
) -> Result<Vec<State>, SemanticsError> {
    let sem = Semantics::new(gd);
    let ids = sem.label_ids(label)?;
    Ok(sem.transitions_of(s, &ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{ground, parse};

    fn gd(src: &str) -> GroundDescription {
        ground(&parse(src).unwrap()).unwrap()
    }

    const TOGGLE: &str = "fluent p; action a;\n\
        caused p if true after a & -p.\n\
        caused -p if true after a & p.\n\
        caused p if p after p & -a.\n\
        caused -p if -p after -p & -a.\n\
        concurrency 0..1.";

    #[test]
    fn empty_description_admits_all_interpretations() {
        let g = gd("fluent p;");
        let ts = build_transition_system(&g, &BuildOptions::default()).unwrap();
        assert_eq!(ts.states().len(), 2);
        assert_eq!(ts.num_transitions(), 0);
    }

    #[test]
    fn static_law_excludes_states() {
        let g = gd("fluent p; fluent q; caused p if q.");
        let ts = build_transition_system(&g, &BuildOptions::default()).unwrap();
        let bits: Vec<String> = ts.states().iter().map(State::bitstring).collect();
        // fluent order p, q: {q, -p} = "01" is excluded
        assert_eq!(bits, ["00", "10", "11"]);
    }

    #[test]
    fn toggle_alternates() {
        let g = gd(TOGGLE);
        let p = State::from_bitstring("1").unwrap();
        let np = State::from_bitstring("0").unwrap();
        let a = ActionLabel::single("a");
        assert_eq!(transitions_of(&g, &p, &a).unwrap(), vec![np.clone()]);
        assert_eq!(transitions_of(&g, &np, &a).unwrap(), vec![p.clone()]);
        // the empty label is inert here
        assert_eq!(transitions_of(&g, &p, &ActionLabel::new(Vec::<String>::new())).unwrap(), vec![p]);
    }

    #[test]
    fn inapplicable_action_has_no_successor() {
        let g = gd("fluent p; action a;\n\
                    caused p if true after a.\ncaused -p if true after a.");
        let s = State::from_bitstring("0").unwrap();
        assert!(transitions_of(&g, &s, &ActionLabel::single("a")).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let g = gd("fluent p; fluent q; fluent r;");
        let err = build_transition_system(
            &g,
            &BuildOptions {
                max_states: 5,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, SemanticsError::StateBudget { cap: 5, .. }));
    }

    #[test]
    fn label_enumeration_respects_cap() {
        let g = gd("action a; action b; action c; concurrency 0..2.");
        let sem = Semantics::new(&g);
        assert_eq!(sem.labels(&BuildOptions::default()).len(), 1 + 3 + 3);
    }
}
