use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn eqts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqts"))
        .args(args)
        .env_remove("EQTS_MAX_STATES")
        .output()
        .expect("run eqts")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs the four stages one file at a time and returns the final verdict.
fn staged(dir: &Path, cal: &Path, scn: &Path) -> Output {
    let step = |args: &[&str], file: &str| {
        let out = eqts(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let p = dir.join(file);
        std::fs::write(&p, &out.stdout).unwrap();
        p
    };
    let g = step(&["ground", path_str(cal)], "g.cal");
    let ts = step(&["build", path_str(&g)], "ts.json");
    let eq = step(&["equalize", path_str(&ts), path_str(scn)], "eq.json");
    eqts(&["verify", path_str(&eq)])
}

#[test]
fn staged_runs_match_one_shot_runs() {
    let dir = tempfile::tempdir().unwrap();
    for stem in ["grid_a", "grid_b", "grid_c", "blocks4"] {
        let cal = fixture(&format!("{stem}.cal"));
        let scn = fixture(&format!("{stem}.scn"));
        let one = eqts(&["verify", path_str(&cal), path_str(&scn)]);
        let many = staged(dir.path(), &cal, &scn);
        assert_eq!(code(&one), code(&many), "{stem}");
        assert_eq!(one.stdout, many.stdout, "{stem}");
    }
}

#[test]
fn verify_exit_codes_follow_the_verdict() {
    for (stem, want) in [("grid_a", 0), ("grid_b", 2), ("grid_c", 2), ("blocks4", 0)] {
        let out = eqts(&["verify", path_str(&fixture(&format!("{stem}.cal"))), path_str(&fixture(&format!("{stem}.scn")))]);
        assert_eq!(code(&out), want, "{stem}");
    }
}

#[test]
fn layouts_verify_directly() {
    let out = eqts(&["verify", "--format", "text", path_str(&fixture("grid_b.layout"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("verdict: lasso"));
}

#[test]
fn outputs_are_reproducible_and_independent_of_threads() {
    let cal = fixture("blocks4.cal");
    let scn = fixture("blocks4.scn");
    for cmd in ["build", "equalize", "verify", "audit"] {
        let base = eqts(&[cmd, "--jobs", "1", path_str(&cal), path_str(&scn)]);
        assert!(matches!(code(&base), 0 | 4), "{cmd}");
        let again = eqts(&[cmd, "--jobs", "1", path_str(&cal), path_str(&scn)]);
        let wide = eqts(&[cmd, "--jobs", "8", path_str(&cal), path_str(&scn)]);
        assert_eq!(base.stdout, again.stdout, "{cmd}");
        assert_eq!(base.stdout, wide.stdout, "{cmd}");
    }
}

#[test]
fn the_state_cap_is_a_resource_error() {
    let out = eqts(&["verify", "--max-states", "5", path_str(&fixture("blocks4.cal")), path_str(&fixture("blocks4.scn"))]);
    assert_eq!(code(&out), 5);
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cal");
    std::fs::write(&bad, "fluent p;\ncaused p if .\n").unwrap();
    assert_eq!(code(&eqts(&["build", path_str(&bad)])), 1);
    assert_eq!(code(&eqts(&["build", path_str(&dir.path().join("missing.cal"))])), 1);
    assert_eq!(code(&eqts(&["verify", path_str(&fixture("grid_a.cal"))])), 1);
}

#[test]
fn audits_flag_a_broken_planner() {
    let layout = fixture("grid_a.layout");
    assert_eq!(code(&eqts(&["audit", "--planner", "reach0", path_str(&layout)])), 0);
    for kind in ["truncate", "prepend", "drop"] {
        let out = eqts(&["audit", "--planner", &format!("mutant:{kind}"), path_str(&layout)]);
        assert_eq!(code(&out), 4, "{kind}");
    }
}

#[test]
fn ground_lists_every_stacking_fluent() {
    let out = eqts(&["ground", "--format", "json", path_str(&fixture("blocks4.cal"))]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let on = v["fluents"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f.as_str().unwrap().starts_with("on("))
        .count();
    assert_eq!(on, 12);
}

#[test]
fn simulation_reaches_the_goal_when_the_policy_works() {
    let args = |seed: &str| {
        eqts(&["simulate", "--random-plans", "--seed", seed, path_str(&fixture("blocks4.cal")), path_str(&fixture("blocks4.scn"))])
    };
    let a = args("7");
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, args("7").stdout);
}

#[test]
fn gen_writes_a_loadable_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = eqts(&["gen", "grid", "--figure", "c", "--out", path_str(dir.path()), "--stem", "c"]);
    assert_eq!(code(&out), 0);
    for ext in ["cal", "scn", "layout"] {
        let generated = std::fs::read_to_string(dir.path().join(format!("c.{ext}"))).unwrap();
        let shipped = std::fs::read_to_string(fixture(&format!("grid_c.{ext}"))).unwrap();
        assert_eq!(generated, shipped, "{ext}");
    }
}
