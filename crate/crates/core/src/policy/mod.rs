//! Target-driven policies over equalized systems.
//!
//! A policy evaluates its rules on an equalized state, looks up the set of
//! satisfied placeholders in the target mapping, asks a planner for
//! conformant plans towards each target and executes them. The union of
//! the reachable results is the policy step `Φ_B(ŝ)`.

pub mod planner;
pub mod scn;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ops::ControlFlow;

use rayon::prelude::*;
use thiserror::Error;

use crate::equalize::{EId, EqError, EqualizedSystem, SigAtom};
use crate::formula::Formula;
use crate::ts::ActionId;

pub use planner::{
    planner_from_spec, ExecPlanner, MutantKind, MutantPlanner, Planner, PlannerError, Reach0,
};
pub use scn::{parse_scenario, PolicySpec, ScenarioSpec};

pub type Plan = Vec<ActionId>;
pub type TargetId = usize;

/// Largest plan bound accepted from configuration.
pub const MAX_PLAN_BOUND: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Eq(#[from] EqError),
    #[error("`{0}` is not a rule")]
    UnknownPlaceholder(String),
    #[error("plan bound {bound} exceeds the maximum of {max}")]
    BoundTooLarge { bound: usize, max: usize },
    #[error("more than {cap} conformant plans")]
    PlanCap { cap: usize },
}

/// A goal formula together with its truth value on every cluster.
#[derive(Debug, Clone)]
pub struct Target {
    pub text: String,
    pub formula: Formula<SigAtom>,
    holds: Vec<bool>,
}

impl Target {
    pub fn new(esys: &EqualizedSystem, text: impl Into<String>, formula: Formula<SigAtom>) -> Self {
        let holds = (0..esys.len())
            .into_par_iter()
            .map(|e| esys.satisfies(e, &formula))
            .collect();
        Target {
            text: text.into(),
            formula,
            holds,
        }
    }

    /// `ŝ ⊨ g`; false for the error state.
    pub fn holds(&self, e: EId) -> bool {
        self.holds.get(e).copied().unwrap_or(false)
    }

    pub fn satisfying(&self) -> Vec<EId> {
        (0..self.holds.len()).filter(|&e| self.holds[e]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Policy {
    rule_names: Vec<String>,
    rule_holds: Vec<Target>,
    map: BTreeMap<Vec<usize>, Vec<TargetId>>,
    otherwise: Option<Vec<TargetId>>,
    targets: Vec<Target>,
    goal: Target,
    plan_bound: usize,
}

/// Rules, mapping and goal with formulas already resolved.
/// A formula with the text it was written as.
pub type Labeled = (String, Formula<SigAtom>);

pub struct CompiledSpec {
    pub rules: Vec<Labeled>,
    pub map: Vec<(Vec<String>, Vec<Labeled>)>,
    pub otherwise: Option<Vec<Labeled>>,
    pub goal: Labeled,
    pub plan_bound: Option<usize>,
}

impl Policy {
    pub fn compile(esys: &EqualizedSystem, spec: &PolicySpec) -> Result<Self, PolicyError> {
        let named = |f: &Formula<String>| -> Result<(String, Formula<SigAtom>), PolicyError> {
            Ok((f.to_string(), esys.compile(f)?))
        };
        let rules = spec
            .rules
            .iter()
            .map(|(n, f)| Ok((n.clone(), esys.compile(f)?)))
            .collect::<Result<Vec<_>, PolicyError>>()?;
        let map = spec
            .map
            .iter()
            .map(|(k, ts)| Ok((k.clone(), ts.iter().map(named).collect::<Result<_, _>>()?)))
            .collect::<Result<Vec<_>, PolicyError>>()?;
        let otherwise = spec
            .otherwise
            .as_ref()
            .map(|ts| ts.iter().map(named).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        Self::from_compiled(
            esys,
            CompiledSpec {
                rules,
                map,
                otherwise,
                goal: named(&spec.goal)?,
                plan_bound: spec.plan_bound,
            },
        )
    }

    pub fn from_compiled(esys: &EqualizedSystem, spec: CompiledSpec) -> Result<Self, PolicyError> {
        let plan_bound = match spec.plan_bound {
            Some(b) if b > MAX_PLAN_BOUND => {
                return Err(PolicyError::BoundTooLarge {
                    bound: b,
                    max: MAX_PLAN_BOUND,
                })
            }
            Some(b) => b,
            None => esys.len().min(MAX_PLAN_BOUND),
        };
        let rule_names: Vec<String> = spec.rules.iter().map(|(n, _)| n.clone()).collect();
        let rule_holds = spec
            .rules
            .into_iter()
            .map(|(n, f)| Target::new(esys, n, f))
            .collect();
        let mut targets: Vec<Target> = Vec::new();
        let mut intern = |(text, f): (String, Formula<SigAtom>)| -> TargetId {
            if let Some(i) = targets.iter().position(|t| t.text == text) {
                return i;
            }
            targets.push(Target::new(esys, text, f));
            targets.len() - 1
        };
        let mut map = BTreeMap::new();
        for (key, ts) in spec.map {
            let mut ids = Vec::new();
            for k in &key {
                let i = rule_names
                    .iter()
                    .position(|n| n == k)
                    .ok_or_else(|| PolicyError::UnknownPlaceholder(k.clone()))?;
                ids.push(i);
            }
            ids.sort_unstable();
            ids.dedup();
            let mut tids: Vec<TargetId> = ts.into_iter().map(&mut intern).collect();
            tids.sort_unstable();
            tids.dedup();
            map.insert(ids, tids);
        }
        let otherwise = spec.otherwise.map(|ts| {
            let mut tids: Vec<TargetId> = ts.into_iter().map(&mut intern).collect();
            tids.sort_unstable();
            tids.dedup();
            tids
        });
        let goal = Target::new(esys, spec.goal.0, spec.goal.1);
        Ok(Policy {
            rule_names,
            rule_holds,
            map,
            otherwise,
            targets,
            goal,
            plan_bound,
        })
    }

    pub fn plan_bound(&self) -> usize {
        self.plan_bound
    }

    pub fn set_plan_bound(&mut self, bound: usize) -> Result<(), PolicyError> {
        if bound > MAX_PLAN_BOUND {
            return Err(PolicyError::BoundTooLarge {
                bound,
                max: MAX_PLAN_BOUND,
            });
        }
        self.plan_bound = bound;
        Ok(())
    }

    pub fn goal(&self) -> &Target {
        &self.goal
    }

    pub fn target(&self, id: TargetId) -> &Target {
        &self.targets[id]
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn rule_names(&self) -> &[String] {
        &self.rule_names
    }

    /// Indices of the rules whose formula `ŝ` satisfies.
    pub fn placeholders(&self, e: EId) -> Vec<usize> {
        (0..self.rule_holds.len())
            .filter(|&i| self.rule_holds[i].holds(e))
            .collect()
    }

    /// `𝓑(ŝ)`: the mapping applied to the satisfied placeholders, falling
    /// back to `otherwise`; empty when neither applies or `ŝ` is the error
    /// state.
    pub fn eval_targets(&self, esys: &EqualizedSystem, e: EId) -> Vec<TargetId> {
        if e == esys.err() {
            return Vec::new();
        }
        let key = self.placeholders(e);
        self.map
            .get(&key)
            .or(self.otherwise.as_ref())
            .cloned()
            .unwrap_or_default()
    }
}

/// One plan step from a set of clusters; failing clusters go to the error
/// state.
pub fn step(esys: &EqualizedSystem, from: &BTreeSet<EId>, a: ActionId) -> BTreeSet<EId> {
    let mut out = BTreeSet::new();
    for &e in from {
        let succ = esys.lifted(e, a);
        if succ.is_empty() {
            out.insert(esys.err());
        } else {
            out.extend(succ.iter().copied());
        }
    }
    out
}

/// `Res(ŝ, σ)`.
pub fn res(esys: &EqualizedSystem, e: EId, plan: &[ActionId]) -> BTreeSet<EId> {
    let mut cur = BTreeSet::from([e]);
    for &a in plan {
        cur = step(esys, &cur, a);
    }
    cur
}

/// `Res` of every prefix of `σ`, starting with the empty one.
pub fn res_trace(esys: &EqualizedSystem, e: EId, plan: &[ActionId]) -> Vec<BTreeSet<EId>> {
    let mut out = vec![BTreeSet::from([e])];
    for &a in plan {
        let next = step(esys, out.last().unwrap(), a);
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReachMode {
    /// Every conformant plan within the bound.
    #[default]
    All,
    /// Only the conformant plans of minimal length.
    Shortest,
}

/// Visits conformant plans from `from` to `target` in length-then-
/// lexicographic order, together with their result sets.
/// Called with each conformant plan and the states it ends in.
pub type Visit<'a> = &'a mut dyn FnMut(&[ActionId], &BTreeSet<EId>) -> ControlFlow<()>;

pub fn for_each_conformant(
    esys: &EqualizedSystem,
    from: EId,
    target: &Target,
    bound: usize,
    mode: ReachMode,
    visit: Visit<'_>,
) {
    fn dfs(
        esys: &EqualizedSystem,
        belief: &BTreeSet<EId>,
        left: usize,
        target: &Target,
        plan: &mut Vec<ActionId>,
        found: &mut bool,
        visit: Visit<'_>,
    ) -> ControlFlow<()> {
        if left == 0 {
            if belief.iter().all(|&e| target.holds(e)) {
                *found = true;
                return visit(plan, belief);
            }
            return ControlFlow::Continue(());
        }
        for a in 0..esys.num_actions() {
            let next = step(esys, belief, a);
            if next.contains(&esys.err()) {
                continue;
            }
            plan.push(a);
            let flow = dfs(esys, &next, left - 1, target, plan, found, visit);
            plan.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }
    let start = BTreeSet::from([from]);
    for len in 0..=bound {
        let mut found = false;
        if dfs(esys, &start, len, target, &mut Vec::new(), &mut found, visit).is_break() {
            return;
        }
        if found && mode == ReachMode::Shortest {
            return;
        }
    }
}

/// `Reach₀(ŝ, g)` restricted to plans of length at most `bound`.
pub fn reach0(
    esys: &EqualizedSystem,
    from: EId,
    target: &Target,
    bound: usize,
    mode: ReachMode,
    max_plans: usize,
) -> Result<Vec<Plan>, PolicyError> {
    if bound > MAX_PLAN_BOUND {
        return Err(PolicyError::BoundTooLarge {
            bound,
            max: MAX_PLAN_BOUND,
        });
    }
    let mut out = Vec::new();
    let mut over = false;
    for_each_conformant(esys, from, target, bound, mode, &mut |p, _| {
        if out.len() == max_plans {
            over = true;
            return ControlFlow::Break(());
        }
        out.push(p.to_vec());
        ControlFlow::Continue(())
    });
    if over {
        return Err(PolicyError::PlanCap { cap: max_plans });
    }
    Ok(out)
}

/// Union of `Res(ŝ, σ)` over all conformant `σ` within the bound, computed
/// by breadth-first search over result sets instead of over plans.
pub fn conformant_image(
    esys: &EqualizedSystem,
    from: EId,
    target: &Target,
    bound: usize,
    mode: ReachMode,
) -> BTreeSet<EId> {
    let start = BTreeSet::from([from]);
    let mut seen: HashSet<BTreeSet<EId>> = HashSet::from([start.clone()]);
    let mut layer = vec![start];
    let mut image = BTreeSet::new();
    for depth in 0..=bound {
        let mut found = false;
        for b in &layer {
            if b.iter().all(|&e| target.holds(e)) {
                image.extend(b.iter().copied());
                found = true;
            }
        }
        if (found && mode == ReachMode::Shortest) || depth == bound {
            break;
        }
        let mut next = Vec::new();
        for b in &layer {
            for a in 0..esys.num_actions() {
                let nb = step(esys, b, a);
                if !nb.contains(&esys.err()) && seen.insert(nb.clone()) {
                    next.push(nb);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layer = next;
    }
    image
}

/// `Φ_B(ŝ)`.
pub fn phi_b(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    e: EId,
) -> Result<BTreeSet<EId>, PlannerError> {
    let mut out = BTreeSet::new();
    for t in policy.eval_targets(esys, e) {
        let target = policy.target(t);
        let image = planner
            .image(esys, e, target, policy.plan_bound())
            .map_err(|reason| PlannerError::new(planner, e, target, reason))?;
        out.extend(image);
    }
    Ok(out)
}

/// A plan realizing `to ∈ Φ_B(from)`: the first target in mapping order
/// and, within it, the first plan in the planner's order whose result
/// contains `to`.
pub fn witness(
    esys: &EqualizedSystem,
    policy: &Policy,
    planner: &dyn Planner,
    from: EId,
    to: EId,
) -> Result<Option<(TargetId, Plan)>, PlannerError> {
    for t in policy.eval_targets(esys, from) {
        let target = policy.target(t);
        let plan = planner
            .witness(esys, from, target, policy.plan_bound(), to)
            .map_err(|reason| PlannerError::new(planner, from, target, reason))?;
        if let Some(p) = plan {
            return Ok(Some((t, p)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equalize::{Classification, EqualizedSystem};
    use crate::ts::{ActionLabel, State, TransitionSystem};
    use std::collections::HashMap;
    use std::sync::Arc;

    fn st(b: &str) -> State {
        State::from_bitstring(b).unwrap()
    }

    /// 1000 -a-> 0100 | 0010 ; 0100 -b-> 0001 ; 0010 has no b-successor.
    fn fork() -> EqualizedSystem {
        let a = ActionLabel::single("a");
        let b = ActionLabel::single("b");
        let ts = TransitionSystem::new(
            vec!["p1".into(), "p2".into(), "p3".into(), "p4".into()],
            vec![st("1000"), st("0100"), st("0010"), st("0001")],
            vec![st("1000")],
            vec![a.clone(), b.clone()],
            vec![
                (st("1000"), a.clone(), st("0100")),
                (st("1000"), a.clone(), st("0010")),
                (st("0100"), b.clone(), st("0001")),
                (st("0010"), a, st("0001")),
            ],
        )
        .unwrap();
        EqualizedSystem::build(Arc::new(ts), &Classification::identity()).unwrap()
    }

    fn id(esys: &EqualizedSystem, bits: &str) -> EId {
        esys.class_of(esys.ts().state_id(&st(bits)).unwrap())
    }

    fn target(esys: &EqualizedSystem, fluent: &str) -> Target {
        let f = esys.compile(&Formula::atom(fluent.to_string())).unwrap();
        Target::new(esys, fluent, f)
    }

    #[test]
    fn res_cases() {
        let esys = fork();
        let s1 = id(&esys, "1000");
        assert_eq!(res(&esys, s1, &[]), BTreeSet::from([s1]));
        assert_eq!(res(&esys, s1, &[1]), BTreeSet::from([esys.err()]));
        let got = res(&esys, s1, &[0, 1]);
        assert_eq!(got, BTreeSet::from([id(&esys, "0001"), esys.err()]));
        assert_eq!(res(&esys, esys.err(), &[0]), BTreeSet::from([esys.err()]));
    }

    #[test]
    fn reach0_cases() {
        let esys = fork();
        let s1 = id(&esys, "1000");
        let g = target(&esys, "p1");
        assert_eq!(reach0(&esys, s1, &g, 3, ReachMode::All, 100).unwrap()[0], Vec::<usize>::new());
        let g4 = target(&esys, "p4");
        assert!(reach0(&esys, s1, &g4, 1, ReachMode::All, 100).unwrap().is_empty());
        // ⟨a,b⟩ fails on the p3 branch, ⟨a,a⟩ fails on the p2 branch.
        assert!(reach0(&esys, s1, &g4, 2, ReachMode::All, 100).unwrap().is_empty());
        let g23 = Target::new(
            &esys,
            "p2 | p3",
            esys.compile(&Formula::or(vec![Formula::atom("p2".into()), Formula::atom("p3".into())]))
                .unwrap(),
        );
        assert_eq!(reach0(&esys, s1, &g23, 2, ReachMode::All, 100).unwrap(), vec![vec![0]]);
        assert_eq!(
            conformant_image(&esys, s1, &g23, 2, ReachMode::All),
            BTreeSet::from([id(&esys, "0100"), id(&esys, "0010")])
        );
    }

    #[test]
    fn eval_targets_without_mapping_is_empty() {
        let esys = fork();
        let spec = parse_scenario("rule r: p4. map {r} -> { p4 }. goal p4.").unwrap();
        let policy = Policy::compile(&esys, &spec.policy).unwrap();
        assert!(policy.eval_targets(&esys, id(&esys, "1000")).is_empty());
        assert_eq!(policy.eval_targets(&esys, id(&esys, "0001")).len(), 1);
        assert!(policy.eval_targets(&esys, esys.err()).is_empty());
    }

    #[test]
    fn custom_classification_policy() {
        let esys = fork();
        let table: HashMap<State, String> = [("1000", "x"), ("0100", "y"), ("0010", "y"), ("0001", "z")]
            .iter()
            .map(|(b, n)| (st(b), n.to_string()))
            .collect();
        let merged =
            EqualizedSystem::build(esys.ts_arc().clone(), &Classification::Custom { table }).unwrap();
        assert_eq!(merged.len(), 3);
        // From y, `a` is executable on one member and leads to z.
        let y = merged.class_of(merged.ts().state_id(&st("0100")).unwrap());
        let g = target(&merged, "p4");
        assert_eq!(reach0(&merged, y, &g, 1, ReachMode::All, 10).unwrap().len(), 2);
    }
}
