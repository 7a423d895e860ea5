//! The lifted relation and conformant plans, recomputed without the library.

use std::collections::BTreeSet;

use eqts::equalize::{EId, EqualizedSystem};
use eqts::policy::{Plan, Policy, Target};

/// The lifted relation recomputed from the concrete system: `ŝ'` follows
/// `ŝ` under `a` when some member of `ŝ` has an `a`-successor in `ŝ'`.
pub struct Lifted {
    pub err: EId,
    pub succ: Vec<Vec<BTreeSet<EId>>>,
}

impl Lifted {
    pub fn of(esys: &EqualizedSystem) -> Self {
        let ts = esys.ts();
        let actions = ts.actions().len();
        let mut succ = vec![vec![BTreeSet::new(); actions]; esys.len()];
        for s in 0..ts.states().len() {
            for a in 0..actions {
                for &t in ts.succ_ids(s, a) {
                    succ[esys.class_of(s)][a].insert(esys.class_of(t));
                }
            }
        }
        Lifted {
            err: esys.len(),
            succ,
        }
    }

    pub fn res(&self, from: EId, plan: &[usize]) -> Vec<BTreeSet<EId>> {
        let mut trace = vec![BTreeSet::from([from])];
        for &a in plan {
            let mut next = BTreeSet::new();
            for &e in trace.last().unwrap() {
                if e == self.err || self.succ[e][a].is_empty() {
                    next.insert(self.err);
                } else {
                    next.extend(self.succ[e][a].iter().copied());
                }
            }
            trace.push(next);
        }
        trace
    }
}

/// Every action sequence of length at most `bound`, in length-then-
/// lexicographic order, that never hits the error state and ends inside
/// the target.
pub fn exhaustive(l: &Lifted, actions: usize, from: EId, target: &Target, bound: usize) -> Vec<Plan> {
    let mut out = Vec::new();
    for len in 0..=bound {
        let total = actions.pow(len as u32);
        for code in 0..total {
            let mut plan = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                plan.push(c % actions);
                c /= actions;
            }
            plan.reverse();
            let trace = l.res(from, &plan);
            if trace.iter().any(|r| r.contains(&l.err)) {
                continue;
            }
            if trace.last().unwrap().iter().all(|&e| target.holds(e)) {
                out.push(plan);
            }
        }
    }
    out
}

/// Keeps the enumeration small enough for every fixture.
pub fn audit_bound(esys: &EqualizedSystem, policy: &Policy) -> usize {
    let actions = esys.num_actions().max(2) as f64;
    let by_size = (200_000f64.ln() / actions.ln()).floor() as usize;
    policy.plan_bound().min(6).min(by_size)
}
