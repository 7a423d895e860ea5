//! Structured and human-readable renderings of verdicts and audits.

use std::fmt::Write as _;

use serde::Serialize;

use crate::equalize::{EId, EqualizedSystem};
use crate::policy::{Planner, PlannerError, Policy};
use crate::verify::{explain, AuditReport, AuditViolation, Stats, Terminal, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateRef {
    pub id: EId,
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeRef {
    pub from: EId,
    pub to: EId,
    pub target: Option<String>,
    pub plan: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterexampleReport {
    pub states: Vec<StateRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_start: Option<usize>,
    pub edges: Vec<EdgeRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictReport {
    pub verdict: &'static str,
    pub works: bool,
    pub planner: String,
    pub counterexample: Option<CounterexampleReport>,
    pub stats: Stats,
}

pub fn state_ref(esys: &EqualizedSystem, e: EId) -> StateRef {
    StateRef {
        id: e,
        profile: esys.profile_of(e),
    }
}

pub fn plan_names(esys: &EqualizedSystem, plan: &[usize]) -> Vec<String> {
    plan.iter()
        .map(|&a| esys.ts().actions()[a].to_string())
        .collect()
}

impl VerdictReport {
    pub fn build(
        esys: &EqualizedSystem,
        policy: &Policy,
        planner: &dyn Planner,
        verdict: &Verdict,
    ) -> Result<Self, PlannerError> {
        let (kind, counterexample) = match &verdict.counterexample {
            None => ("works", None),
            Some(run) => {
                let mut states = run.states.clone();
                let (kind, cycle_start) = match run.terminal {
                    Terminal::Lasso { cycle_start } => {
                        // Close the loop so that every edge is listed.
                        states.push(states[cycle_start]);
                        ("lasso", Some(cycle_start))
                    }
                    Terminal::DeadEnd => ("dead-end", None),
                    Terminal::GoalUnreachable => ("goal-unreachable", None),
                    Terminal::GoalHit { .. } => ("works", None),
                };
                let edges = explain(esys, policy, planner, &states)?
                    .into_iter()
                    .zip(states.windows(2))
                    .map(|(step, w)| EdgeRef {
                        from: w[0],
                        to: w[1],
                        target: step.as_ref().map(|s| policy.target(s.target).text.clone()),
                        plan: step.map(|s| plan_names(esys, &s.plan)).unwrap_or_default(),
                    })
                    .collect();
                let states = run.states.iter().map(|&e| state_ref(esys, e)).collect();
                (
                    kind,
                    Some(CounterexampleReport {
                        states,
                        cycle_start,
                        edges,
                    }),
                )
            }
        };
        Ok(VerdictReport {
            verdict: kind,
            works: verdict.works,
            planner: planner.name(),
            counterexample,
            stats: verdict.stats,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        writeln!(w, "verdict: {}", self.verdict).unwrap();
        writeln!(
            w,
            "reachable states: {}, policy edges: {}",
            self.stats.reachable, self.stats.edges
        )
        .unwrap();
        if let Some(cx) = &self.counterexample {
            writeln!(w, "counterexample:").unwrap();
            for (i, s) in cx.states.iter().enumerate() {
                let mark = if cx.cycle_start == Some(i) { " <- loop start" } else { "" };
                writeln!(w, "  [{i}] #{} {}{mark}", s.id, s.profile).unwrap();
                if let Some(e) = cx.edges.get(i) {
                    let target = e.target.as_deref().unwrap_or("?");
                    writeln!(w, "      target {target}, plan <{}>", e.plan.join(", ")).unwrap();
                }
            }
            match self.verdict {
                "lasso" => writeln!(w, "  the last state returns to the loop start").unwrap(),
                "dead-end" => writeln!(w, "  the last state has no policy successor").unwrap(),
                "goal-unreachable" => {
                    writeln!(w, "  no lifted path leads from this state to the goal").unwrap()
                }
                _ => {}
            }
        }
        out
    }
}

pub fn audit_text(esys: &EqualizedSystem, report: &AuditReport, title: &str) -> String {
    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        "{title} audit of {}: {} violation(s) over {} {} item(s)",
        report.subject,
        report.violations.len(),
        if report.exhaustive { "all" } else { "sampled" },
        report.checked
    )
    .unwrap();
    for v in &report.violations {
        match v {
            AuditViolation::UnsoundPlan {
                state,
                target,
                plan,
                condition,
                terminal,
                ..
            } => writeln!(
                w,
                "  unsound plan <{}> from #{state} for `{target}`: condition ({}) fails, reaching {:?}",
                plan_names(esys, plan).join(", "),
                if *condition == 1 { "i" } else { "ii" },
                terminal
            )
            .unwrap(),
            AuditViolation::MissingPlan {
                state,
                successor,
                target,
                plan,
            } => writeln!(
                w,
                "  missing edge #{state} -> #{successor} for `{target}`, certified by <{}>",
                plan_names(esys, plan).join(", ")
            )
            .unwrap(),
            AuditViolation::PlannerFailure {
                state,
                target,
                reason,
            } => writeln!(w, "  planner failed at #{state} for `{target}`: {reason}").unwrap(),
        }
    }
    out
}
