//! Planner bindings: the built-in `Reach₀`, deliberately broken variants
//! for auditing, and external planners run as subprocesses.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{conformant_image, for_each_conformant, reach0, res, Plan, ReachMode, Target};
use crate::equalize::{EId, EqualizedDocument, EqualizedSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("planner `{planner}` failed at state {state} for target `{target}`: {reason}")]
pub struct PlannerError {
    pub planner: String,
    pub state: EId,
    pub target: String,
    pub reason: String,
}

impl PlannerError {
    pub fn new(planner: &dyn Planner, state: EId, target: &Target, reason: String) -> Self {
        PlannerError {
            planner: planner.name(),
            state,
            target: target.text.clone(),
            reason,
        }
    }
}

/// `Reach(ŝ, g)`: any procedure returning a finite set of plans. Nothing
/// is assumed about soundness or completeness.
pub trait Planner: Send + Sync {
    fn name(&self) -> String;

    fn plans(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
    ) -> Result<Vec<Plan>, String>;

    /// Union of `Res` over the returned plans.
    fn image(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
    ) -> Result<BTreeSet<EId>, String> {
        let mut out = BTreeSet::new();
        for p in self.plans(esys, from, target, bound)? {
            out.extend(res(esys, from, &p));
        }
        Ok(out)
    }

    /// First returned plan whose result contains `to`.
    fn witness(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
        to: EId,
    ) -> Result<Option<Plan>, String> {
        Ok(self
            .plans(esys, from, target, bound)?
            .into_iter()
            .find(|p| res(esys, from, p).contains(&to)))
    }
}

/// The maximal planner: every conformant plan within the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reach0 {
    pub mode: ReachMode,
    pub max_plans: usize,
}

impl Default for Reach0 {
    fn default() -> Self {
        Reach0 {
            mode: ReachMode::All,
            max_plans: 100_000,
        }
    }
}

impl Planner for Reach0 {
    fn name(&self) -> String {
        match self.mode {
            ReachMode::All => "builtin".into(),
            ReachMode::Shortest => "builtin-shortest".into(),
        }
    }

    fn plans(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
    ) -> Result<Vec<Plan>, String> {
        reach0(esys, from, target, bound, self.mode, self.max_plans).map_err(|e| e.to_string())
    }

    fn image(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
    ) -> Result<BTreeSet<EId>, String> {
        Ok(conformant_image(esys, from, target, bound, self.mode))
    }

    fn witness(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
        to: EId,
    ) -> Result<Option<Plan>, String> {
        let mut found = None;
        for_each_conformant(esys, from, target, bound, self.mode, &mut |p, r| {
            if r.contains(&to) {
                found = Some(p.to_vec());
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        Ok(found)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutantKind {
    /// Adds a copy of each plan without its last action.
    Truncate,
    /// Adds a copy of each plan prefixed by an action that is not
    /// executable in the start state.
    Prepend,
    /// Keeps only plans of length at most one.
    Drop,
    /// Returns no plans at all.
    Empty,
}

impl MutantKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "truncate" => MutantKind::Truncate,
            "prepend" => MutantKind::Prepend,
            "drop" => MutantKind::Drop,
            "empty" => MutantKind::Empty,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MutantKind::Truncate => "truncate",
            MutantKind::Prepend => "prepend",
            MutantKind::Drop => "drop",
            MutantKind::Empty => "empty",
        }
    }
}

/// `Reach₀` with a deliberate defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MutantPlanner {
    pub kind: MutantKind,
    pub base: Reach0,
}

impl MutantPlanner {
    pub fn new(kind: MutantKind) -> Self {
        MutantPlanner {
            kind,
            base: Reach0::default(),
        }
    }
}

impl Planner for MutantPlanner {
    fn name(&self) -> String {
        format!("mutant:{}", self.kind.as_str())
    }

    fn plans(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
    ) -> Result<Vec<Plan>, String> {
        let plans = self.base.plans(esys, from, target, bound)?;
        Ok(match self.kind {
            MutantKind::Empty => Vec::new(),
            MutantKind::Drop => plans.into_iter().filter(|p| p.len() <= 1).collect(),
            MutantKind::Truncate => {
                let mut out = plans.clone();
                for p in plans.into_iter().filter(|p| !p.is_empty()) {
                    let short = p[..p.len() - 1].to_vec();
                    if !out.contains(&short) {
                        out.push(short);
                    }
                }
                out
            }
            MutantKind::Prepend => {
                let dead = (0..esys.num_actions()).find(|&a| esys.lifted(from, a).is_empty());
                let mut out = plans.clone();
                if let Some(a) = dead {
                    for p in plans {
                        let mut q = vec![a];
                        q.extend(p);
                        out.push(q);
                    }
                }
                out
            }
        })
    }
}

#[derive(Debug, Serialize)]
struct Request<'a> {
    system: &'a EqualizedDocument,
    state: EId,
    target: &'a str,
    target_states: Vec<EId>,
    bound: usize,
}

#[derive(Debug, Deserialize)]
struct Response {
    plans: Vec<Vec<String>>,
}

/// An external planner: one JSON request on stdin, one JSON response on
/// stdout, per `(ŝ, g)` query.
#[derive(Debug, Clone)]
pub struct ExecPlanner {
    pub program: PathBuf,
    pub timeout: Duration,
}

impl ExecPlanner {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExecPlanner {
            program: program.into(),
            timeout: Duration::from_secs(10),
        }
    }

    fn run(&self, input: Vec<u8>) -> Result<Vec<u8>, String> {
        let mut child = Command::new(&self.program)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot start {}: {e}", self.program.display()))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            // A planner may exit without reading its input.
            let _ = stdin.write_all(&input);
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let start = Instant::now();
        let status = loop {
            match child.try_wait().map_err(|e| e.to_string())? {
                Some(status) => break status,
                None if start.elapsed() > self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(format!("timed out after {:?}", self.timeout));
                }
                None => std::thread::sleep(Duration::from_millis(2)),
            }
        };
        let _ = writer.join();
        let out = reader
            .join()
            .map_err(|_| "reader thread panicked".to_string())?
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("exited with {status}"));
        }
        Ok(out)
    }
}

impl Planner for ExecPlanner {
    fn name(&self) -> String {
        format!("exec:{}", self.program.display())
    }

    fn plans(
        &self,
        esys: &EqualizedSystem,
        from: EId,
        target: &Target,
        bound: usize,
    ) -> Result<Vec<Plan>, String> {
        let doc = esys.to_document();
        let req = Request {
            system: &doc,
            state: from,
            target: &target.text,
            target_states: target.satisfying(),
            bound,
        };
        let input = serde_json::to_vec(&req).map_err(|e| e.to_string())?;
        let output = self.run(input)?;
        let resp: Response =
            serde_json::from_slice(&output).map_err(|e| format!("malformed response: {e}"))?;
        resp.plans
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .map(|name| {
                        doc.actions
                            .iter()
                            .position(|a| *a == name)
                            .ok_or_else(|| format!("unknown action `{name}` in response"))
                    })
                    .collect()
            })
            .collect()
    }
}

/// `builtin` (alias `reach0`), `builtin-shortest`, `mutant:<kind>` or
/// `exec:<path>`.
pub fn planner_from_spec(spec: &str, timeout: Duration) -> Result<Box<dyn Planner>, String> {
    match spec {
        "builtin" | "reach0" => Ok(Box::new(Reach0::default())),
        "builtin-shortest" => Ok(Box::new(Reach0 {
            mode: ReachMode::Shortest,
            ..Reach0::default()
        })),
        _ => {
            if let Some(path) = spec.strip_prefix("exec:") {
                Ok(Box::new(ExecPlanner {
                    program: path.into(),
                    timeout,
                }))
            } else if let Some(kind) = spec.strip_prefix("mutant:") {
                MutantKind::parse(kind)
                    .map(|k| Box::new(MutantPlanner::new(k)) as Box<dyn Planner>)
                    .ok_or_else(|| format!("unknown mutant `{kind}`"))
            } else {
                Err(format!("unknown planner `{spec}`"))
            }
        }
    }
}
