#![allow(dead_code)]

pub mod cal_oracle;
pub mod lifted;

use std::path::PathBuf;
use std::sync::Arc;

use eqts::lang::BuildOptions;
use eqts::pipeline::{self, Loaded};
use eqts::ts::{TransitionSystem, TsDocument};

pub fn fixture(name: &str) -> PathBuf {
    // relative to either crate that includes this module
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// A `.cal` + `.scn` bundle.
pub fn bundle(stem: &str) -> Loaded {
    pipeline::load(
        &read(&format!("{stem}.cal")),
        &read(&format!("{stem}.scn")),
        &BuildOptions::default(),
    )
    .unwrap()
}

/// An explicit system with a scenario.
pub fn explicit(ts: &str, scn: &str) -> Loaded {
    let doc: TsDocument = serde_json::from_str(&read(ts)).unwrap();
    let ts = TransitionSystem::from_document(&doc).unwrap();
    let spec = pipeline::scenario_source(&read(scn), scn).unwrap();
    pipeline::load_with_ts(None, Arc::new(ts), spec).unwrap()
}

pub fn grids() -> Vec<(&'static str, Loaded)> {
    ["grid_a", "grid_b", "grid_c"]
        .into_iter()
        .map(|s| (s, bundle(s)))
        .collect()
}

pub fn all() -> Vec<(&'static str, Loaded)> {
    let mut out = grids();
    out.push(("blocks4", bundle("blocks4")));
    out.push(("merge3", explicit("merge3.json", "merge3.scn")));
    out.push(("execmerge", explicit("merge3.json", "execmerge.scn")));
    out
}
