//! Deciding whether a policy works, reachability, concretization and
//! planner audits.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::equalize::{EId, EqualizedSystem};
use crate::policy::{
    conformant_image, phi_b, res_trace, witness, Plan, Planner, PlannerError, Policy, ReachMode,
    TargetId,
};
use crate::ts::{StateId, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalSemantics {
    /// Runs end in the first goal state.
    #[default]
    Stop,
    /// Goal states keep executing the policy.
    Loop,
}

/// `Φ_B` restricted to the states reachable from the start set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyGraph {
    pub succ: BTreeMap<EId, BTreeSet<EId>>,
}

impl PolicyGraph {
    pub fn states(&self) -> impl Iterator<Item = EId> + '_ {
        self.succ.keys().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.values().map(BTreeSet::len).sum()
    }

    pub fn successors(&self, e: EId) -> Option<&BTreeSet<EId>> {
        self.succ.get(&e)
    }
}

/// Breadth-first exploration of `Φ_B`; each frontier layer is expanded in
/// parallel and merged in id order. With stop semantics, goal states are
/// recorded without successors.
pub fn explore(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    starts: &[EId],
    semantics: GoalSemantics,
) -> Result<PolicyGraph, PlannerError> {
    let mut graph = PolicyGraph::default();
    let mut frontier: Vec<EId> = starts.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut seen: BTreeSet<EId> = frontier.iter().copied().collect();
    while !frontier.is_empty() {
        let images: Vec<Result<BTreeSet<EId>, PlannerError>> = frontier
            .par_iter()
            .map(|&e| {
                if semantics == GoalSemantics::Stop && policy.goal().holds(e) {
                    Ok(BTreeSet::new())
                } else {
                    phi_b(esys, policy, planner, e)
                }
            })
            .collect();
        let mut next = BTreeSet::new();
        for (&e, image) in frontier.iter().zip(images) {
            let image = image?;
            for &t in &image {
                if seen.insert(t) {
                    next.insert(t);
                }
            }
            graph.succ.insert(e, image);
        }
        frontier = next.into_iter().collect();
    }
    Ok(graph)
}

/// `ℛ^∞` from `Ŝ₀`.
pub fn reachable_set(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
) -> Result<BTreeSet<EId>, PlannerError> {
    reachable_from(esys, policy, planner, esys.initial())
}

pub fn reachable_from(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    starts: &[EId],
) -> Result<BTreeSet<EId>, PlannerError> {
    Ok(explore(esys, policy, planner, starts, GoalSemantics::Loop)?
        .states()
        .collect())
}

pub fn state_reachable(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    e: EId,
) -> Result<bool, PlannerError> {
    Ok(reachable_set(esys, policy, planner)?.contains(&e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Terminal {
    /// `states[index]` is the first goal state.
    GoalHit { index: usize },
    /// The last state steps back to `states[cycle_start]`.
    Lasso { cycle_start: usize },
    /// The last state has no policy successor.
    DeadEnd,
    /// No lifted path at all leads from the first state to the goal.
    GoalUnreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Run {
    pub states: Vec<EId>,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Stats {
    pub reachable: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub works: bool,
    pub counterexample: Option<Run>,
    pub stats: Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyOptions {
    pub semantics: GoalSemantics,
    pub require_goal_reachable: bool,
}

/// States from which a goal state is reachable in the lifted graph
/// `∪_a Φ̂`, ignoring the policy.
pub fn goal_reachable_lifted(esys: &EqualizedSystem, policy: &Policy) -> Vec<bool> {
    let n = esys.len();
    let mut pred: Vec<Vec<EId>> = vec![Vec::new(); n];
    for e in 0..n {
        for a in 0..esys.num_actions() {
            for &t in esys.lifted(e, a) {
                pred[t].push(e);
            }
        }
    }
    let mut ok = vec![false; n];
    let mut queue: VecDeque<EId> = (0..n).filter(|&e| policy.goal().holds(e)).collect();
    for &e in &queue {
        ok[e] = true;
    }
    while let Some(e) = queue.pop_front() {
        for &p in &pred[e] {
            if !ok[p] {
                ok[p] = true;
                queue.push_back(p);
            }
        }
    }
    ok
}

/// Every maximal run from every initial state reaches the goal iff no
/// initial non-goal state reaches a goal-free cycle or a goal-free state
/// without successors. The counterexample is the first one met by a
/// depth-first search visiting initial states and successors in id order.
pub fn policy_works(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    opts: &VerifyOptions,
) -> Result<(Verdict, PolicyGraph), PlannerError> {
    let graph = explore(esys, policy, planner, esys.initial(), opts.semantics)?;
    let stats = Stats {
        reachable: graph.succ.len(),
        edges: graph.num_edges(),
    };
    if opts.require_goal_reachable {
        let ok = goal_reachable_lifted(esys, policy);
        if let Some(&e) = esys.initial().iter().find(|&&e| !ok[e]) {
            let run = Run {
                states: vec![e],
                terminal: Terminal::GoalUnreachable,
            };
            return Ok((
                Verdict {
                    works: false,
                    counterexample: Some(run),
                    stats,
                },
                graph,
            ));
        }
    }
    let goal = |e: EId| policy.goal().holds(e);
    // 0 = unvisited, 1 = on the stack, 2 = finished without counterexample
    let mut color: BTreeMap<EId, u8> = BTreeMap::new();
    for &init in esys.initial() {
        if goal(init) || color.get(&init) == Some(&2) {
            continue;
        }
        let mut path: Vec<EId> = vec![init];
        let mut iters: Vec<std::collections::btree_set::Iter<'_, EId>> = Vec::new();
        color.insert(init, 1);
        let succ_of = |e: EId| graph.succ.get(&e).expect("explored");
        if succ_of(init).is_empty() {
            let run = Run {
                states: path,
                terminal: Terminal::DeadEnd,
            };
            return Ok((Verdict { works: false, counterexample: Some(run), stats }, graph));
        }
        iters.push(succ_of(init).iter());
        while let Some(it) = iters.last_mut() {
            match it.next() {
                None => {
                    iters.pop();
                    let done = path.pop().unwrap();
                    color.insert(done, 2);
                }
                Some(&t) => {
                    if goal(t) {
                        continue;
                    }
                    match color.get(&t).copied().unwrap_or(0) {
                        2 => continue,
                        1 => {
                            let cycle_start = path.iter().position(|&x| x == t).unwrap();
                            let run = Run {
                                states: path,
                                terminal: Terminal::Lasso { cycle_start },
                            };
                            return Ok((
                                Verdict { works: false, counterexample: Some(run), stats },
                                graph,
                            ));
                        }
                        _ => {
                            path.push(t);
                            color.insert(t, 1);
                            let s = succ_of(t);
                            if s.is_empty() {
                                let run = Run {
                                    states: path,
                                    terminal: Terminal::DeadEnd,
                                };
                                return Ok((
                                    Verdict { works: false, counterexample: Some(run), stats },
                                    graph,
                                ));
                            }
                            iters.push(s.iter());
                        }
                    }
                }
            }
        }
    }
    Ok((
        Verdict {
            works: true,
            counterexample: None,
            stats,
        },
        graph,
    ))
}

/// Shortest path in the policy graph from `from` to a goal state.
pub fn goal_path(graph: &PolicyGraph, policy: &Policy, from: EId) -> Option<Vec<EId>> {
    let mut parent: BTreeMap<EId, EId> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(e) = queue.pop_front() {
        if policy.goal().holds(e) {
            let mut path = vec![e];
            let mut cur = e;
            while let Some(&p) = parent.get(&cur) {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &t in graph.successors(e).into_iter().flatten() {
            if seen.insert(t) {
                parent.insert(t, e);
                queue.push_back(t);
            }
        }
    }
    None
}

/// One policy step with the plan that realizes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub from: EId,
    pub to: EId,
    pub target: TargetId,
    pub plan: Plan,
}

/// Witness plans for consecutive states of `states`.
pub fn explain(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    states: &[EId],
) -> Result<Vec<Option<Step>>, PlannerError> {
    states
        .windows(2)
        .map(|w| {
            Ok(witness(esys, policy, planner, w[0], w[1])?.map(|(target, plan)| Step {
                from: w[0],
                to: w[1],
                target,
                plan,
            }))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConcretizeError {
    #[error("state {state} has no predecessor under the plan's step {step}; the classification is not proper here")]
    NotProper { state: StateId, step: usize },
    #[error("state {0} is not in the target cluster")]
    WrongCluster(StateId),
}

/// Walks `plan` backwards from the concrete `s2 ∈ ŝ₂`, choosing at every
/// step the smallest predecessor in the smallest cluster that the forward
/// execution from `ŝ₁` can occupy there.
pub fn concretize(
    esys: &EqualizedSystem,
    e1: EId,
    plan: &[usize],
    s2: StateId,
) -> Result<Trajectory, ConcretizeError> {
    let trace = res_trace(esys, e1, plan);
    if !trace.last().unwrap().contains(&esys.class_of(s2)) {
        return Err(ConcretizeError::WrongCluster(s2));
    }
    let ts = esys.ts();
    let mut cur = s2;
    let mut steps = Vec::with_capacity(plan.len());
    for k in (0..plan.len()).rev() {
        let a = plan[k];
        let target = esys.class_of(cur);
        let mut found = None;
        'outer: for &c in &trace[k] {
            if c == esys.err() || !esys.lifted(c, a).contains(&target) {
                continue;
            }
            for &p in &esys.estate(c).members {
                if ts.succ_ids(p, a).contains(&cur) {
                    found = Some(p);
                    break 'outer;
                }
            }
        }
        let p = found.ok_or(ConcretizeError::NotProper { state: cur, step: k })?;
        steps.push((a, cur));
        cur = p;
    }
    steps.reverse();
    Ok(Trajectory { start: cur, steps })
}

/// Concretizes a whole policy path, chaining edges backwards from the
/// smallest member of the last state.
pub fn concretize_path(
    esys: &EqualizedSystem,
    steps: &[Step],
) -> Result<Trajectory, ConcretizeError> {
    let last = steps.last().expect("nonempty path");
    let mut cur = esys.estate(last.to).members[0];
    let mut all = Vec::new();
    for step in steps.iter().rev() {
        let t = concretize(esys, step.from, &step.plan, cur)?;
        cur = t.start;
        let mut s = t.steps;
        s.extend(all);
        all = s;
    }
    Ok(Trajectory {
        start: cur,
        steps: all,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AuditViolation {
    UnsoundPlan {
        state: EId,
        target: String,
        plan: Plan,
        /// 1: some prefix runs into the error state; 2: a terminal state
        /// misses the target.
        condition: u8,
        /// Length of the failing prefix (condition 1) or the terminal set
        /// (condition 2).
        prefix: usize,
        terminal: Vec<EId>,
    },
    MissingPlan {
        state: EId,
        successor: EId,
        target: String,
        plan: Plan,
    },
    PlannerFailure {
        state: EId,
        target: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub subject: String,
    pub violations: Vec<AuditViolation>,
    pub exhaustive: bool,
    pub checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Every item when there are at most `limit`, else `count` seeded
    /// samples.
    Auto { limit: usize, count: usize, seed: u64 },
    Exhaustive,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::Auto {
            limit: 4096,
            count: 512,
            seed: 0,
        }
    }
}

fn sample<T: Clone>(items: Vec<T>, s: Sampling) -> (Vec<T>, bool) {
    match s {
        Sampling::Exhaustive => (items, true),
        Sampling::Auto { limit, .. } if items.len() <= limit => (items, true),
        Sampling::Auto { count, seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = (0..items.len()).collect();
            idx.shuffle(&mut rng);
            idx.truncate(count);
            idx.sort_unstable();
            (idx.into_iter().map(|i| items[i].clone()).collect(), false)
        }
    }
}

/// Replays every plan the planner returns for `(ŝ, g)` pairs ranging over
/// all clusters and all targets of the policy.
pub fn audit_reach_soundness(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    sampling: Sampling,
) -> AuditReport {
    let pairs: Vec<(EId, TargetId)> = (0..esys.len())
        .flat_map(|e| (0..policy.targets().len()).map(move |t| (e, t)))
        .collect();
    let (pairs, exhaustive) = sample(pairs, sampling);
    let bound = policy.plan_bound();
    let per_pair: Vec<Vec<AuditViolation>> = pairs
        .par_iter()
        .map(|&(e, t)| {
            let target = policy.target(t);
            let plans = match planner.plans(esys, e, target, bound) {
                Ok(p) => p,
                Err(reason) => {
                    return vec![AuditViolation::PlannerFailure {
                        state: e,
                        target: target.text.clone(),
                        reason,
                    }]
                }
            };
            let mut out = Vec::new();
            for plan in plans {
                let trace = res_trace(esys, e, &plan);
                if let Some(k) = trace.iter().position(|r| r.contains(&esys.err())) {
                    out.push(AuditViolation::UnsoundPlan {
                        state: e,
                        target: target.text.clone(),
                        plan,
                        condition: 1,
                        prefix: k,
                        terminal: trace[k].iter().copied().collect(),
                    });
                } else {
                    let last = trace.last().unwrap();
                    if !last.iter().all(|&x| target.holds(x)) {
                        out.push(AuditViolation::UnsoundPlan {
                            state: e,
                            target: target.text.clone(),
                            prefix: plan.len(),
                            plan,
                            condition: 2,
                            terminal: last.iter().copied().collect(),
                        });
                    }
                }
            }
            out
        })
        .collect();
    AuditReport {
        subject: planner.name(),
        checked: pairs.len(),
        violations: per_pair.into_iter().flatten().collect(),
        exhaustive,
    }
}

/// Compares the audited planner's policy step against the edges certified
/// by conformant plans of length at most `bound`.
pub fn audit_reach_completeness(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    bound: usize,
    sampling: Sampling,
) -> AuditReport {
    let states: Vec<EId> = (0..esys.len()).collect();
    let (states, exhaustive) = sample(states, sampling);
    let reference = crate::policy::Reach0::default();
    let per_state: Vec<Vec<AuditViolation>> = states
        .par_iter()
        .map(|&e| {
            let mut got = BTreeSet::new();
            let mut out = Vec::new();
            for t in policy.eval_targets(esys, e) {
                let target = policy.target(t);
                match planner.image(esys, e, target, policy.plan_bound()) {
                    Ok(img) => got.extend(img),
                    Err(reason) => out.push(AuditViolation::PlannerFailure {
                        state: e,
                        target: target.text.clone(),
                        reason,
                    }),
                }
            }
            let mut reported = BTreeSet::new();
            for t in policy.eval_targets(esys, e) {
                let target = policy.target(t);
                let certified = conformant_image(esys, e, target, bound, ReachMode::All);
                for s2 in certified {
                    if got.contains(&s2) || !reported.insert(s2) {
                        continue;
                    }
                    let plan = reference
                        .witness(esys, e, target, bound, s2)
                        .ok()
                        .flatten()
                        .expect("certified edge has a witness");
                    out.push(AuditViolation::MissingPlan {
                        state: e,
                        successor: s2,
                        target: target.text.clone(),
                        plan,
                    });
                }
            }
            out
        })
        .collect();
    AuditReport {
        subject: planner.name(),
        checked: states.len(),
        violations: per_state.into_iter().flatten().collect(),
        exhaustive,
    }
}
