//! One line per acceptance criterion, then a single assertion over all of
//! them so a red line fails the suite.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::io::Write as _;
use std::process::Command;
use std::time::{Duration, Instant};

use common::cal_oracle::{build, desc, observed, oracle};
use common::lifted::{audit_bound, exhaustive, Lifted};
use eqts::equalize::{check_initial_clustering, check_proper, check_strong_proper, Classification, EId, EqualizedSystem};
use eqts::pipeline::Loaded;
use eqts::policy::{phi_b, reach0, MutantKind, MutantPlanner, Planner, Reach0, ReachMode, Target};
use eqts::scenarios::blocks::tuple_of;
use eqts::verify::{
    audit_reach_completeness, audit_reach_soundness, concretize_path, explain, goal_path,
    policy_works, AuditViolation, Sampling, Terminal, VerifyOptions,
};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    check(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(format!("{detail} ({took:.2?} < {limit:?})"))
}

fn works(l: &Loaded) -> Result<bool, String> {
    let (v, _) = policy_works(&l.esys, &l.policy, &Reach0::default(), &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    Ok(v.works)
}

/// 5 height profiles and the stacking policy graph over them.
fn blocksworld_graph() -> Outcome {
    timed(Duration::from_secs(5), || {
        let l = common::bundle("blocks4");
        let esys = &l.esys;
        let tuple = |e: EId| tuple_of(esys, e).unwrap();
        check(esys.len() == 5, || format!("{} equalized states", esys.len()))?;
        let mut edges = BTreeSet::new();
        for e in 0..esys.len() {
            for t in phi_b(esys, &l.policy, &Reach0::default(), e).map_err(|e| e.to_string())? {
                edges.insert((tuple(e), tuple(t)));
            }
        }
        let want: BTreeSet<(Vec<usize>, Vec<usize>)> = [
            ([0, 2, 0, 0], [2, 1, 0, 0]),
            ([4, 0, 0, 0], [2, 1, 0, 0]),
            ([2, 1, 0, 0], [1, 0, 1, 0]),
            ([1, 0, 1, 0], [0, 0, 0, 1]),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_vec(), b.to_vec()))
        .collect();
        check(edges == want, || format!("edges {edges:?}"))?;
        let goals: Vec<Vec<usize>> = (0..esys.len())
            .filter(|&e| l.policy.goal().holds(e))
            .map(tuple)
            .collect();
        check(goals == [vec![0, 0, 0, 1]], || format!("goal clusters {goals:?}"))?;
        let inits: BTreeSet<Vec<usize>> = esys.initial().iter().map(|&e| tuple(e)).collect();
        check(inits.len() == 4, || format!("initial partitions {inits:?}"))?;
        check(works(&l)?, || "policy does not work".into())?;
        Ok(format!("5 states, {} edges, works from {} initial partitions", edges.len(), inits.len()))
    })
}

fn profile_count() -> Outcome {
    let l = common::bundle("blocks4");
    let e = (0..l.esys.len())
        .find(|&e| tuple_of(&l.esys, e).unwrap() == [1, 0, 1, 0])
        .ok_or("no <1,0,1,0> cluster")?;
    let n = l.esys.estate(e).members.len();
    check(n == 24, || format!("{n} members"))?;
    Ok("<1,0,1,0> has 24 members".into())
}

/// Does some state on the lasso's cycle have more than one policy successor?
fn branching_cycle(l: &Loaded, states: &[EId], cycle_start: usize) -> bool {
    states[cycle_start..]
        .iter()
        .any(|&e| phi_b(&l.esys, &l.policy, &Reach0::default(), e).unwrap().len() > 1)
}

fn grid_trichotomy() -> Outcome {
    timed(Duration::from_secs(30), || {
        let mut seen = Vec::new();
        for (name, l) in common::grids() {
            let planner = Reach0::default();
            let (v, _) = policy_works(&l.esys, &l.policy, &planner, &VerifyOptions::default())
                .map_err(|e| e.to_string())?;
            let kind = match &v.counterexample {
                None => "works".to_string(),
                Some(run) => {
                    let phi = |e| phi_b(&l.esys, &l.policy, &planner, e).unwrap();
                    for w in run.states.windows(2) {
                        check(phi(w[0]).contains(&w[1]), || format!("{name}: run does not replay"))?;
                    }
                    check(l.esys.is_initial(run.states[0]), || format!("{name}: run not initial"))?;
                    match run.terminal {
                        Terminal::Lasso { cycle_start } => {
                            let last = *run.states.last().unwrap();
                            check(phi(last).contains(&run.states[cycle_start]), || {
                                format!("{name}: cycle does not close")
                            })?;
                            if branching_cycle(&l, &run.states, cycle_start) {
                                "lasso-branching".into()
                            } else {
                                "lasso".into()
                            }
                        }
                        ref other => format!("{other:?}"),
                    }
                }
            };
            seen.push(kind);
        }
        check(seen == ["works", "lasso", "lasso-branching"], || format!("verdicts {seen:?}"))?;
        Ok(format!("a/b/c = {}", seen.join(" / ")))
    })
}

fn semantics_oracle() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = desc();
    let cases = 64;
    let mut nonempty = 0;
    for i in 0..cases {
        let d = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let want = oracle(&d);
        check(observed(&build(&d)) == want, || format!("case {i} differs:\n{}", d.source()))?;
        if !want.1.is_empty() {
            nonempty += 1;
        }
    }
    Ok(format!("{cases} descriptions, {nonempty} with transitions, 0 discrepancies"))
}

fn reach0_conformance() -> Outcome {
    let mut queries = 0;
    let mut plans = 0;
    for (name, l) in common::all() {
        let esys = &l.esys;
        check(esys.len() <= 1 << 10, || format!("{name} too large"))?;
        let lifted = Lifted::of(esys);
        let bound = audit_bound(esys, &l.policy);
        let mut targets: Vec<&Target> = l.policy.targets().iter().collect();
        targets.push(l.policy.goal());
        for e in 0..esys.len() {
            for t in &targets {
                let want = exhaustive(&lifted, esys.num_actions(), e, t, bound);
                let got = reach0(esys, e, t, bound, ReachMode::All, usize::MAX).map_err(|e| e.to_string())?;
                check(got == want, || format!("{name}: #{e} -> {}", t.text))?;
                queries += 1;
                plans += got.len();
            }
        }
        let planner = Reach0::default();
        let s = audit_reach_soundness(esys, &l.policy, &planner, Sampling::Exhaustive);
        let c = audit_reach_completeness(esys, &l.policy, &planner, l.policy.plan_bound(), Sampling::Exhaustive);
        check(s.violations.is_empty() && c.violations.is_empty(), || format!("{name}: audit violations"))?;
    }
    Ok(format!("{queries} queries, {plans} plans, 0 discrepancies"))
}

fn classes(vs: &[AuditViolation]) -> BTreeSet<&'static str> {
    vs.iter()
        .map(|v| match v {
            AuditViolation::UnsoundPlan { condition: 1, .. } => "cond-i",
            AuditViolation::UnsoundPlan { .. } => "cond-ii",
            AuditViolation::MissingPlan { .. } => "completeness",
            AuditViolation::PlannerFailure { .. } => "failure",
        })
        .collect()
}

fn mutant_audits() -> Outcome {
    let l = common::bundle("grid_a");
    let audit = |p: &dyn Planner| {
        let s = audit_reach_soundness(&l.esys, &l.policy, p, Sampling::Exhaustive);
        let c = audit_reach_completeness(&l.esys, &l.policy, p, l.policy.plan_bound(), Sampling::Exhaustive);
        let mut all = classes(&s.violations);
        all.extend(classes(&c.violations));
        all
    };
    check(audit(&Reach0::default()).is_empty(), || "reach0 flagged".into())?;
    for (kind, want) in [
        (MutantKind::Truncate, "cond-ii"),
        (MutantKind::Prepend, "cond-i"),
        (MutantKind::Drop, "completeness"),
    ] {
        let got = audit(&MutantPlanner::new(kind));
        check(got == BTreeSet::from([want]), || format!("{kind:?} flagged {got:?}"))?;
    }
    Ok("truncate -> (ii), prepend -> (i), drop -> completeness, reach0 clean".into())
}

fn properness() -> Outcome {
    for (name, l) in common::all() {
        let id = EqualizedSystem::build(l.esys.ts_arc().clone(), &Classification::identity())
            .map_err(|e| e.to_string())?;
        check(check_proper(&id, 100).is_empty() && check_strong_proper(&id, 100).is_empty(), || {
            format!("{name}: identity classification improper")
        })?;
    }
    let merge = common::explicit("merge3.json", "merge3.scn");
    let s3 = merge.esys.ts().states().iter().position(|s| s.bitstring() == "001").unwrap();
    let v: Vec<_> = check_proper(&merge.esys, 100)
        .into_iter()
        .map(|v| (merge.esys.profile_of(v.from), v.action, merge.esys.profile_of(v.to), v.witness))
        .collect();
    check(v == [("start".into(), 0, "end".into(), s3)], || format!("merge violations {v:?}"))?;
    let exec = common::explicit("merge3.json", "execmerge.scn");
    check(check_proper(&exec.esys, 100).is_empty(), || "execmerge fails (1)".into())?;
    let v: Vec<_> = check_strong_proper(&exec.esys, 100)
        .into_iter()
        .map(|v| (exec.esys.profile_of(v.from), v.action, v.witness))
        .collect();
    check(v == [("start".into(), 0, s3)], || format!("execmerge violations {v:?}"))?;
    Ok("identity clean, merge (1) at 001, executability merge (2) at 001".into())
}

fn concretization() -> Outcome {
    let mut covered = Vec::new();
    let mut paths = 0;
    for (name, l) in common::all() {
        let esys = &l.esys;
        if !check_proper(esys, 1).is_empty() || !check_initial_clustering(esys) {
            continue;
        }
        let planner = Reach0::default();
        let (v, graph) = policy_works(esys, &l.policy, &planner, &VerifyOptions::default())
            .map_err(|e| e.to_string())?;
        if !v.works {
            continue;
        }
        for &init in esys.initial() {
            let path = goal_path(&graph, &l.policy, init).ok_or(format!("{name}: no goal path"))?;
            let steps: Vec<_> = explain(esys, &l.policy, &planner, &path)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|s| s.ok_or(format!("{name}: step without a plan")))
                .collect::<Result<_, _>>()?;
            let traj = concretize_path(esys, &steps).map_err(|e| e.to_string())?;
            let ts = esys.ts();
            check(traj.replays_in(ts) && ts.is_initial(traj.start), || format!("{name}: bad trajectory"))?;
            check(l.policy.goal().holds(esys.class_of(traj.end())), || format!("{name}: misses the goal"))?;
            paths += 1;
        }
        covered.push(name);
    }
    check(!covered.is_empty(), || "no proper working fixture".into())?;
    Ok(format!("{paths} goal paths replayed on {}", covered.join(", ")))
}

fn determinism() -> Outcome {
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_eqts"))
            .args(["verify", "--jobs", jobs])
            .arg(common::fixture("grid_c.cal"))
            .arg(common::fixture("grid_c.scn"))
            .env_remove("EQTS_MAX_STATES")
            .output()
            .map_err(|e| e.to_string())
    };
    let one = run("1")?;
    check(!one.stdout.is_empty(), || "empty output".into())?;
    for jobs in ["1", "1", "8", "8"] {
        let other = run(jobs)?;
        check(other.stdout == one.stdout && other.status == one.status, || {
            format!("--jobs {jobs} differs")
        })?;
    }
    Ok(format!("5 runs byte-identical ({} bytes)", one.stdout.len()))
}

/// Written past the test harness's capture so the lines show up in
/// ordinary `cargo test` output.
fn report(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("blocksworld n=4 policy graph", blocksworld_graph),
        ("blocksworld profile count", profile_count),
        ("grid trichotomy", grid_trichotomy),
        ("semantics oracle", semantics_oracle),
        ("reach0 conformance", reach0_conformance),
        ("mutant audits", mutant_audits),
        ("properness", properness),
        ("concretization", concretization),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => report(format!("criterion {}: PASS {name}: {detail}", i + 1)),
            Err(why) => {
                report(format!("criterion {}: FAIL {name}: {why}", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
