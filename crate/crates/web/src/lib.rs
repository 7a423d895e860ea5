//! Browser bindings. Every export takes plain text and returns JSON.

use std::collections::BTreeSet;

use eqts::equalize::{EId, EqualizedSystem};
use eqts::lang::{self, BuildOptions};
use eqts::pipeline::{self, Loaded};
use eqts::policy::{phi_b, Reach0};
use eqts::scenarios::blocks::tuple_of;
use eqts::scenarios::{gen_blocksworld, gen_grid, GridInstance};
use eqts::verify::{policy_works, Terminal, VerifyOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps pasted descriptions from freezing the tab.
const MAX_STATES: usize = 20_000;

type Cell = (usize, usize);

#[derive(Debug, Serialize)]
pub struct GridReport {
    pub n: usize,
    pub obstacles: Vec<Cell>,
    pub person: Cell,
    pub start: Cell,
    pub verdict: &'static str,
    /// Policy moves between robot positions, one per abstract step.
    pub edges: Vec<(Cell, Cell)>,
    /// Counterexample run as robot positions.
    pub run: Vec<Cell>,
    pub cycle_start: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct BlocksState {
    pub profile: Vec<usize>,
    pub members: usize,
    pub initial: bool,
    pub goal: bool,
}

#[derive(Debug, Serialize)]
pub struct BlocksReport {
    pub n: usize,
    pub states: Vec<BlocksState>,
    pub edges: Vec<(usize, usize)>,
    pub works: bool,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub fluents: usize,
    pub actions: usize,
    pub states: usize,
    pub initial: usize,
    pub transitions: usize,
    pub sample: Vec<String>,
}

fn robot_at(esys: &EqualizedSystem, e: EId) -> Option<Cell> {
    let s = *esys.estate(e).members.first()?;
    esys.ts().describe(s).into_iter().find_map(|f| {
        let (x, y) = f.strip_prefix("robotAt(")?.strip_suffix(')')?.split_once(',')?;
        Some((x.parse().ok()?, y.parse().ok()?))
    })
}

fn policy_edges(l: &Loaded) -> Result<Vec<(EId, EId)>, String> {
    let mut edges = Vec::new();
    for e in 0..l.esys.len() {
        if l.policy.goal().holds(e) {
            continue;
        }
        for t in phi_b(&l.esys, &l.policy, &Reach0::default(), e).map_err(|e| e.to_string())? {
            edges.push((e, t));
        }
    }
    Ok(edges)
}

pub fn grid_report(layout: &str) -> Result<GridReport, String> {
    let inst = GridInstance::parse_layout(layout).map_err(|e| e.to_string())?;
    let bundle = gen_grid(&inst).map_err(|e| e.to_string())?;
    let l = pipeline::load(&bundle.cal, &bundle.scn, &BuildOptions::default()).map_err(|e| e.to_string())?;
    let (v, _) = policy_works(&l.esys, &l.policy, &Reach0::default(), &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    let at = |e| robot_at(&l.esys, e).ok_or_else(|| format!("cluster {e} has no robot position"));
    let edges = policy_edges(&l)?
        .into_iter()
        .map(|(a, b)| Ok((at(a)?, at(b)?)))
        .collect::<Result<Vec<_>, String>>()?;
    let (verdict, run, cycle_start) = match v.counterexample {
        None => ("works", Vec::new(), None),
        Some(r) => {
            let cells = r.states.iter().map(|&e| at(e)).collect::<Result<Vec<_>, _>>()?;
            match r.terminal {
                Terminal::Lasso { cycle_start } => ("lasso", cells, Some(cycle_start)),
                Terminal::DeadEnd => ("dead-end", cells, None),
                _ => ("fails", cells, None),
            }
        }
    };
    Ok(GridReport {
        n: inst.n,
        obstacles: inst.obstacles.iter().copied().collect(),
        person: inst.person,
        start: inst.start,
        verdict,
        edges,
        run,
        cycle_start,
    })
}

pub fn blocks_report(n: usize) -> Result<BlocksReport, String> {
    if !(2..=5).contains(&n) {
        return Err("choose between 2 and 5 blocks".into());
    }
    let bundle = gen_blocksworld(n).map_err(|e| e.to_string())?;
    let l = pipeline::load(&bundle.cal, &bundle.scn, &BuildOptions::default()).map_err(|e| e.to_string())?;
    let esys = &l.esys;
    let initial: BTreeSet<EId> = esys.initial().iter().copied().collect();
    let states = (0..esys.len())
        .map(|e| {
            Ok(BlocksState {
                profile: tuple_of(esys, e).ok_or("cluster without a height profile")?,
                members: esys.estate(e).members.len(),
                initial: initial.contains(&e),
                goal: l.policy.goal().holds(e),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let (v, _) = policy_works(esys, &l.policy, &Reach0::default(), &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    Ok(BlocksReport {
        n,
        states,
        edges: policy_edges(&l)?,
        works: v.works,
    })
}

pub fn summary(cal: &str) -> Result<Summary, String> {
    let gd = pipeline::ground_source(cal, "input.cal").map_err(|e| e.to_string())?;
    let opts = BuildOptions {
        max_states: MAX_STATES,
        ..BuildOptions::default()
    };
    let ts = lang::build_transition_system(&gd, &opts).map_err(|e| e.to_string())?;
    let sample = (0..ts.states().len().min(8))
        .map(|s| format!("{{{}}}", ts.describe(s).join(", ")))
        .collect();
    Ok(Summary {
        fluents: ts.fluents().len(),
        actions: ts.actions().len(),
        states: ts.states().len(),
        initial: ts.initial().len(),
        transitions: ts.num_transitions(),
        sample,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Verifies the search policy on a layout (`#` wall, `P` person, `R` robot).
#[wasm_bindgen(js_name = verifyGrid)]
pub fn verify_grid(layout: &str) -> Result<String, JsError> {
    to_js(grid_report(layout))
}

/// Height-profile states and policy edges of the stacking policy.
#[wasm_bindgen(js_name = blocksGraph)]
pub fn blocks_graph(n: usize) -> Result<String, JsError> {
    to_js(blocks_report(n))
}

/// Builds the transition system of an action description.
#[wasm_bindgen(js_name = summarize)]
pub fn summarize(cal: &str) -> Result<String, JsError> {
    to_js(summary(cal))
}
