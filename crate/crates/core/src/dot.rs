//! Graphviz renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::equalize::EqualizedSystem;
use crate::policy::Policy;
use crate::ts::TransitionSystem;
use crate::verify::PolicyGraph;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn label_list(mut names: Vec<String>) -> String {
    const MAX: usize = 4;
    let extra = names.len().saturating_sub(MAX);
    names.truncate(MAX);
    let mut s = names.join(", ");
    if extra > 0 {
        write!(s, " +{extra}").unwrap();
    }
    s
}

pub fn ts_dot(ts: &TransitionSystem) -> String {
    let mut out = String::from("digraph ts {\n  rankdir=LR;\n");
    for (i, _) in ts.states().iter().enumerate() {
        let shape = if ts.is_initial(i) { "doublecircle" } else { "circle" };
        let label = ts.describe(i).join("\\n");
        writeln!(out, "  s{i} [shape={shape}, label={}];", quote(&label)).unwrap();
    }
    for s in 0..ts.states().len() {
        let mut edges: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (a, label) in ts.actions().iter().enumerate() {
            for &t in ts.succ_ids(s, a) {
                edges.entry(t).or_default().push(label.to_string());
            }
        }
        for (t, names) in edges {
            writeln!(out, "  s{s} -> s{t} [label={}];", quote(&label_list(names))).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// Clusters with their lifted transitions.
pub fn equalized_dot(esys: &EqualizedSystem) -> String {
    let mut out = String::from("digraph equalized {\n  rankdir=LR;\n");
    for e in 0..esys.len() {
        let shape = if esys.is_initial(e) { "doublecircle" } else { "box" };
        let label = format!("{}\\n{} state(s)", esys.profile_of(e), esys.estate(e).members.len());
        writeln!(out, "  e{e} [shape={shape}, label={}];", quote(&label)).unwrap();
    }
    for e in 0..esys.len() {
        let mut edges: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for a in 0..esys.num_actions() {
            for &t in esys.lifted(e, a) {
                edges.entry(t).or_default().push(esys.ts().actions()[a].to_string());
            }
        }
        for (t, names) in edges {
            writeln!(out, "  e{e} -> e{t} [label={}];", quote(&label_list(names))).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// The explored part of `Φ_B`; goal states are drawn bold.
pub fn policy_dot(esys: &EqualizedSystem, policy: &Policy, graph: &PolicyGraph) -> String {
    let mut out = String::from("digraph policy {\n  rankdir=LR;\n");
    for e in graph.states() {
        let shape = if esys.is_initial(e) { "doublecircle" } else { "box" };
        let style = if policy.goal().holds(e) { ", style=bold" } else { "" };
        writeln!(
            out,
            "  e{e} [shape={shape}{style}, label={}];",
            quote(&esys.profile_of(e))
        )
        .unwrap();
    }
    for e in graph.states() {
        for &t in graph.successors(e).into_iter().flatten() {
            writeln!(out, "  e{e} -> e{t};").unwrap();
        }
    }
    out.push_str("}\n");
    out
}
