//! Random literal-head descriptions against the brute-force oracle.

mod common;

use std::collections::BTreeSet;

use common::cal_oracle::{build, desc, observed, oracle};
use eqts::lang;
use eqts::ts::{ActionLabel, State};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn builder_matches_triple_enumeration(d in desc()) {
        let ts = build(&d);
        let (states, triples) = oracle(&d);
        let (got_states, got) = observed(&ts);
        prop_assert_eq!(got_states, states);
        prop_assert_eq!(got, triples);
    }

    #[test]
    fn lazy_successors_agree_with_the_explicit_system(d in desc()) {
        let ts = build(&d);
        let gd = lang::ground(&lang::parse(&d.source()).unwrap()).unwrap();
        for s in ts.states() {
            for a in ts.actions() {
                let lazy = lang::transitions_of(&gd, s, a).unwrap();
                prop_assert_eq!(lazy, ts.successors(s, a).unwrap());
            }
        }
    }

    #[test]
    fn execution_composes(d in desc(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..4)) {
        let ts = build(&d);
        prop_assume!(!ts.states().is_empty() && !ts.actions().is_empty());
        let sigma: Vec<ActionLabel> = picks.iter().map(|i| i.get(ts.actions()).clone()).collect();
        for s in ts.states() {
            let whole: BTreeSet<State> = ts.execute(s, &sigma).unwrap().into_iter().collect();
            let mut cur: BTreeSet<State> = BTreeSet::from([s.clone()]);
            for a in &sigma {
                cur = cur.iter().flat_map(|x| ts.successors(x, a).unwrap()).collect();
            }
            prop_assert_eq!(whole, cur);
        }
    }
}
