mod common;

use std::collections::BTreeSet;

use eqts::equalize::check_proper;
use eqts::lang::BuildOptions;
use eqts::pipeline;
use eqts::policy::{phi_b, Reach0};
use eqts::scenarios::blocks::{counts, from_counts, partitions, policy_step, tuple_of};
use eqts::scenarios::grid::{figure1, oracle, OracleOutcome};
use eqts::scenarios::{gen_blocksworld, gen_grid, GridInstance};
use eqts::ts::validate;
use eqts::verify::{policy_works, Terminal, VerifyOptions};
use proptest::prelude::*;

fn verdict_kind(inst: &GridInstance) -> &'static str {
    let b = gen_grid(inst).unwrap();
    let l = pipeline::load(&b.cal, &b.scn, &BuildOptions::default()).unwrap();
    assert!(validate(&l.ts().to_document()).is_empty());
    assert!(check_proper(&l.esys, 1).is_empty(), "{}", inst.to_layout());
    let (v, _) = policy_works(&l.esys, &l.policy, &Reach0::default(), &VerifyOptions::default()).unwrap();
    match v.counterexample.map(|r| r.terminal) {
        None => "works",
        Some(Terminal::Lasso { .. }) => "lasso",
        Some(Terminal::DeadEnd) => "dead-end",
        Some(other) => panic!("{other:?}"),
    }
}

fn oracle_kind(inst: &GridInstance) -> &'static str {
    match oracle(inst) {
        OracleOutcome::Works => "works",
        OracleOutcome::Lasso { .. } => "lasso",
        OracleOutcome::DeadEnd { .. } => "dead-end",
    }
}

#[test]
fn figure_one_layouts_agree_with_the_grid_oracle() {
    for (which, want) in [('a', "works"), ('b', "lasso"), ('c', "lasso")] {
        let inst = figure1(which).unwrap();
        assert_eq!(oracle_kind(&inst), want);
        assert_eq!(verdict_kind(&inst), want);
    }
}

#[test]
fn figure_one_start_sees_the_far_corner() {
    let inst = figure1('a').unwrap();
    assert_eq!(inst.start, (1, 1));
    assert_eq!(inst.policy_targets((1, 1)), vec![(3, 1)]);
}

fn layout(n: usize) -> impl Strategy<Value = GridInstance> {
    let cells = n * n;
    (
        prop::collection::vec(prop::bool::weighted(0.25), cells),
        0..cells,
        0..cells,
    )
        .prop_filter_map("invalid layout", move |(walls, p, r)| {
            let cell = |i: usize| (i % n + 1, i / n + 1);
            let obstacles = (0..cells)
                .filter(|&i| walls[i] && i != p && i != r)
                .map(cell)
                .collect();
            let inst = GridInstance {
                n,
                obstacles,
                person: cell(p),
                start: cell(r),
                metric: Default::default(),
            };
            inst.validate().ok().map(|_| inst)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_grids_agree_with_the_oracle(inst in prop_oneof![layout(3), layout(4)]) {
        prop_assert_eq!(verdict_kind(&inst), oracle_kind(&inst), "{}", inst.to_layout());
    }

    #[test]
    fn layouts_round_trip(inst in layout(4)) {
        prop_assert_eq!(GridInstance::parse_layout(&inst.to_layout()).unwrap(), inst);
    }
}

/// Labeled configurations of `n` blocks: ordered stacks over a set
/// partition, counted as `n! · C(n-1, k-1) / k!` summed over `k` stacks.
fn labeled_configurations(n: usize) -> usize {
    let fact = |k: usize| (1..=k).product::<usize>();
    let binom = |a: usize, b: usize| fact(a) / (fact(b) * fact(a - b));
    (1..=n).map(|k| fact(n) * binom(n - 1, k - 1) / fact(k)).sum()
}

#[test]
fn blocksworld_clusters_are_height_profiles() {
    for n in 2..=4 {
        let b = gen_blocksworld(n).unwrap();
        let l = pipeline::load(&b.cal, &b.scn, &BuildOptions::default()).unwrap();
        assert_eq!(l.ts().states().len(), labeled_configurations(n));
        assert_eq!(l.esys.len(), partitions(n).len());
        let tuples: BTreeSet<Vec<usize>> =
            (0..l.esys.len()).map(|e| tuple_of(&l.esys, e).unwrap()).collect();
        let want: BTreeSet<Vec<usize>> = partitions(n).iter().map(|p| counts(n, p)).collect();
        assert_eq!(tuples, want);
    }
}

#[test]
fn blocksworld_policy_follows_the_two_phases() {
    for n in 2..=4 {
        let b = gen_blocksworld(n).unwrap();
        let l = pipeline::load(&b.cal, &b.scn, &BuildOptions::default()).unwrap();
        for e in 0..l.esys.len() {
            let t = tuple_of(&l.esys, e).unwrap();
            let next: Vec<Vec<usize>> = phi_b(&l.esys, &l.policy, &Reach0::default(), e)
                .unwrap()
                .into_iter()
                .map(|x| tuple_of(&l.esys, x).unwrap())
                .collect();
            let want: Vec<Vec<usize>> = policy_step(&from_counts(&t))
                .map(|p| counts(n, &p))
                .into_iter()
                .collect();
            assert_eq!(next, want, "n={n} from {t:?}");
        }
        let (v, _) = policy_works(&l.esys, &l.policy, &Reach0::default(), &VerifyOptions::default()).unwrap();
        assert!(v.works, "n={n}");
    }
}

#[test]
fn policy_step_by_hand() {
    assert_eq!(policy_step(&[2, 2]), Some(vec![2, 1, 1]));
    assert_eq!(policy_step(&[1, 1, 1, 1]), Some(vec![2, 1, 1]));
    assert_eq!(policy_step(&[2, 1, 1]), Some(vec![3, 1]));
    assert_eq!(policy_step(&[3, 1]), Some(vec![4]));
    assert_eq!(policy_step(&[4]), None);
}
