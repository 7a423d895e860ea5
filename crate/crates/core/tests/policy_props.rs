mod common;

use common::lifted::{audit_bound, exhaustive, Lifted};

use std::collections::BTreeSet;

use eqts::equalize::{EId, EqualizedSystem};
use eqts::policy::{
    conformant_image, phi_b, reach0, res, Plan, Planner, Policy, PolicySpec, ReachMode, Reach0,
    Target,
};
use eqts::formula::Formula;
use proptest::prelude::*;

#[test]
fn reach0_is_sound_and_complete_on_every_fixture() {
    for (name, l) in common::all() {
        let esys = &l.esys;
        assert!(esys.len() <= 1 << 10);
        let lifted = Lifted::of(esys);
        let bound = audit_bound(esys, &l.policy);
        let mut targets: Vec<&Target> = l.policy.targets().iter().collect();
        targets.push(l.policy.goal());
        for e in 0..esys.len() {
            for t in &targets {
                let want = exhaustive(&lifted, esys.num_actions(), e, t, bound);
                let got = reach0(esys, e, t, bound, ReachMode::All, usize::MAX).unwrap();
                assert_eq!(got, want, "{name}: #{e} -> {}", t.text);
                let shortest = reach0(esys, e, t, bound, ReachMode::Shortest, usize::MAX).unwrap();
                let min = want.iter().map(Vec::len).min();
                let want_short: Vec<Plan> =
                    want.iter().filter(|p| Some(p.len()) == min).cloned().collect();
                assert_eq!(shortest, want_short, "{name}: shortest #{e} -> {}", t.text);
                let image: BTreeSet<EId> =
                    want.iter().flat_map(|p| res(esys, e, p)).collect();
                assert_eq!(conformant_image(esys, e, t, bound, ReachMode::All), image);
            }
        }
    }
}

#[test]
fn res_agrees_with_the_recomputed_lifting() {
    for (name, l) in common::all() {
        let lifted = Lifted::of(&l.esys);
        let n = l.esys.num_actions();
        for e in 0..l.esys.len() {
            for a in 0..n {
                for b in 0..n {
                    let want = lifted.res(e, &[a, b]).pop().unwrap();
                    assert_eq!(res(&l.esys, e, &[a, b]), want, "{name}");
                }
            }
        }
    }
}

#[test]
fn reach0_small_cases() {
    let l = common::bundle("grid_c");
    let esys = &l.esys;
    for e in 0..esys.len() {
        for t in l.policy.targets() {
            let plans = reach0(esys, e, t, 4, ReachMode::All, usize::MAX).unwrap();
            // the empty plan is returned exactly when the target already holds
            assert_eq!(plans.first().is_some_and(Vec::is_empty), t.holds(e));
        }
    }
    assert!(reach0(esys, 0, l.policy.goal(), 65, ReachMode::All, 10).is_err());
}

/// Length-one plans only.
struct OneStep;

impl Planner for OneStep {
    fn name(&self) -> String {
        "one-step".into()
    }

    fn plans(&self, esys: &EqualizedSystem, from: EId, target: &Target, bound: usize) -> Result<Vec<Plan>, String> {
        Ok(Reach0::default()
            .plans(esys, from, target, bound)?
            .into_iter()
            .filter(|p| p.len() == 1)
            .collect())
    }
}

#[test]
fn pick_some_action_reproduces_the_lifted_relation() {
    for (name, l) in common::all() {
        let spec = PolicySpec {
            rules: Vec::new(),
            map: Vec::new(),
            otherwise: Some(vec![Formula::True]),
            goal: Formula::False,
            plan_bound: Some(1),
        };
        let policy = Policy::compile(&l.esys, &spec).unwrap();
        for e in 0..l.esys.len() {
            let want: BTreeSet<EId> = (0..l.esys.num_actions())
                .flat_map(|a| l.esys.lifted(e, a).iter().copied())
                .collect();
            assert_eq!(phi_b(&l.esys, &policy, &OneStep, e).unwrap(), want, "{name} #{e}");
        }
    }
}

fn profile(esys: &EqualizedSystem, e: EId) -> String {
    esys.profile_of(e)
}

#[test]
fn grid_c_branches_at_the_far_corner() {
    let l = common::bundle("grid_c");
    let esys = &l.esys;
    let at = |x: u32, y: u32| {
        (0..esys.len())
            .find(|&e| {
                esys.estate(e)
                    .members
                    .iter()
                    .all(|&s| esys.ts().describe(s).contains(&format!("robotAt({x},{y})").as_str()))
            })
            .unwrap()
    };
    let from = at(3, 1);
    let next = phi_b(esys, &l.policy, &Reach0::default(), from).unwrap();
    let names: BTreeSet<String> = next.iter().map(|&e| profile(esys, e)).collect();
    assert_eq!(next, BTreeSet::from([at(1, 1), at(3, 3)]), "{names:?}");
    // one successor sees the person, the other does not
    let sees: Vec<bool> = next.iter().map(|&e| profile(esys, e).contains("person")).collect();
    assert!(sees.contains(&true) && sees.contains(&false));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn res_composes(e in 0usize..32, p in prop::collection::vec(0usize..64, 0..4), q in prop::collection::vec(0usize..64, 0..4)) {
        let l = common::bundle("grid_b");
        let esys = &l.esys;
        let n = esys.num_actions();
        let e = e % esys.len();
        let p: Vec<usize> = p.into_iter().map(|a| a % n).collect();
        let q: Vec<usize> = q.into_iter().map(|a| a % n).collect();
        let whole = res(esys, e, &[p.clone(), q.clone()].concat());
        let mut parts = BTreeSet::new();
        for x in res(esys, e, &p) {
            if x == esys.err() {
                parts.insert(x);
            } else {
                parts.extend(res(esys, x, &q));
            }
        }
        prop_assert_eq!(whole, parts);
    }
}
