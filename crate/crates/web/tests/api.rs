use eqts::scenarios::grid::{figure1, oracle, OracleOutcome};
use eqts_web::{blocks_report, grid_report, summary};

#[test]
fn grid_verdicts_follow_the_cell_oracle() {
    for which in ['a', 'b', 'c'] {
        let inst = figure1(which).unwrap();
        let r = grid_report(&inst.to_layout()).unwrap();
        let want = match oracle(&inst) {
            OracleOutcome::Works => "works",
            OracleOutcome::Lasso { .. } => "lasso",
            OracleOutcome::DeadEnd { .. } => "dead-end",
        };
        assert_eq!(r.verdict, want, "{which}");
        assert_eq!(r.run.is_empty(), want == "works");
        if let Some(&first) = r.run.first() {
            assert_eq!(first, inst.start);
        }
        // every drawn edge is a move the policy asks for
        for (from, to) in &r.edges {
            assert!(inst.policy_targets(*from).contains(to) || *to == inst.person, "{which}: {from:?} -> {to:?}");
        }
    }
}

#[test]
fn bad_layouts_are_errors() {
    assert!(grid_report("R..\n...").is_err());
    assert!(grid_report("").is_err());
}

#[test]
fn blocks_graph_for_four() {
    let r = blocks_report(4).unwrap();
    assert_eq!(r.states.len(), 5);
    assert_eq!(r.states.iter().map(|s| s.members).sum::<usize>(), 73);
    assert_eq!(r.edges.len(), 4);
    assert!(r.works);
    assert_eq!(r.states.iter().filter(|s| s.goal).count(), 1);
    assert!(blocks_report(9).is_err());
}

#[test]
fn summary_counts_a_toggle() {
    let s = summary("fluent p;\naction flip;\ncaused p after flip & -p.\ncaused -p after flip & p.\n").unwrap();
    assert_eq!((s.fluents, s.actions, s.states, s.transitions), (1, 1, 2, 2));
    assert!(summary("fluent p;\ncaused p if .\n").is_err());
}
