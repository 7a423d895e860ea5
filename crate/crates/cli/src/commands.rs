use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use eqts::dot::{equalized_dot, policy_dot, ts_dot};
use eqts::equalize::{check_initial_clustering, check_proper, check_strong_proper, EqualizedSystem, DEFAULT_VIOLATION_CAP};
use eqts::pipeline::{self, Loaded, PipelineError};
use eqts::policy::{planner_from_spec, Planner, Reach0, ReachMode};
use eqts::report::{audit_text, plan_names, state_ref, StateRef, VerdictReport};
use eqts::scenarios::grid::{figure1, Metric};
use eqts::scenarios::{gen_blocksworld, gen_grid, GridInstance};
use eqts::verify::{
    audit_reach_completeness, audit_reach_soundness, explore, policy_works, GoalSemantics,
    Sampling, VerifyOptions,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::input::{Caps, EqualizeBundle, Inputs, Properness};
use crate::{CliError, Format, GenCommand, Outcome, PolicyArgs, Semantics, Stage};

pub struct Ctx {
    pub format: Option<Format>,
    pub caps: Caps,
    pub seed: u64,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn ok(stdout: String) -> Result<Outcome, CliError> {
    Ok(Outcome { stdout, code: 0 })
}

fn no_dot(cmd: &str) -> CliError {
    CliError::Usage(format!("`{cmd}` has no dot output"))
}

pub fn ground(ctx: &Ctx, inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    let gd = Inputs::read(inputs)?.ground()?;
    match ctx.format.unwrap_or(Format::Text) {
        Format::Text => ok(gd.to_string()),
        Format::Json => {
            #[derive(Serialize)]
            struct Dump<'a> {
                fluents: &'a [String],
                actions: &'a [String],
                static_laws: usize,
                dynamic_laws: usize,
                description: String,
            }
            ok(json(&Dump {
                fluents: &gd.fluents,
                actions: &gd.actions,
                static_laws: gd.static_laws.len(),
                dynamic_laws: gd.dynamic_laws.len(),
                description: gd.to_string(),
            }))
        }
        Format::Dot => Err(no_dot("ground")),
    }
}

pub fn build(ctx: &Ctx, inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    let (_, ts) = Inputs::read(inputs)?.transition_system(ctx.caps)?;
    match ctx.format.unwrap_or(Format::Json) {
        Format::Json => ok(ts.to_json() + "\n"),
        Format::Dot => ok(ts_dot(&ts)),
        Format::Text => ok(format!(
            "{} states ({} initial), {} action labels, {} transitions\n",
            ts.states().len(),
            ts.initial().len(),
            ts.actions().len(),
            ts.num_transitions()
        )),
    }
}

pub fn equalize(ctx: &Ctx, inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    let inp = Inputs::read(inputs)?;
    let (_, ts) = inp.transition_system(ctx.caps)?;
    let (name, scenario) = inp.scenario_text()?;
    let spec = pipeline::scenario_source(&scenario, &name)?;
    let esys = EqualizedSystem::build(Arc::new(ts), &spec.classification).map_err(PipelineError::from)?;
    let properness = Properness {
        condition1: check_proper(&esys, DEFAULT_VIOLATION_CAP),
        condition2: check_strong_proper(&esys, DEFAULT_VIOLATION_CAP),
        initial_clustering: check_initial_clustering(&esys),
    };
    match ctx.format.unwrap_or(Format::Json) {
        Format::Json => ok(json(&EqualizeBundle {
            transition_system: esys.ts().to_document(),
            scenario,
            equalized: esys.to_document(),
            properness,
        })),
        Format::Dot => ok(equalized_dot(&esys)),
        Format::Text => {
            let mut out = String::new();
            let w = &mut out;
            writeln!(w, "{} concrete states in {} clusters", esys.ts().states().len(), esys.len()).unwrap();
            for e in 0..esys.len() {
                let mark = if esys.is_initial(e) { " (initial)" } else { "" };
                writeln!(w, "  #{e} {} : {} state(s){mark}", esys.profile_of(e), esys.estate(e).members.len()).unwrap();
            }
            for (label, vs) in [("(1)", &properness.condition1), ("(2)", &properness.condition2)] {
                writeln!(w, "condition {label}: {} violation(s)", vs.len()).unwrap();
                for v in vs {
                    writeln!(
                        w,
                        "  #{} -{}-> #{}, witness state {}",
                        v.from,
                        esys.ts().actions()[v.action],
                        v.to,
                        v.witness
                    )
                    .unwrap();
                }
            }
            writeln!(w, "initial clustering: {}", properness.initial_clustering).unwrap();
            ok(out)
        }
    }
}

fn make_planner(pa: &PolicyArgs) -> Result<Box<dyn Planner>, CliError> {
    let mode = match pa.planner.as_str() {
        "builtin" | "reach0" => Some(ReachMode::All),
        "builtin-shortest" => Some(ReachMode::Shortest),
        _ => None,
    };
    if let Some(mode) = mode {
        return Ok(Box::new(Reach0 {
            mode,
            max_plans: pa.max_plans,
        }));
    }
    planner_from_spec(&pa.planner, Duration::from_secs(pa.planner_timeout)).map_err(CliError::Usage)
}

fn load(ctx: &Ctx, inputs: &[PathBuf], pa: &PolicyArgs) -> Result<Loaded, CliError> {
    let mut l = Inputs::read(inputs)?.load(ctx.caps)?;
    if let Some(b) = pa.plan_bound {
        l.policy.set_plan_bound(b).map_err(PipelineError::from)?;
    }
    Ok(l)
}

fn semantics(pa: &PolicyArgs) -> GoalSemantics {
    match pa.goal_semantics {
        Semantics::Stop => GoalSemantics::Stop,
        Semantics::Loop => GoalSemantics::Loop,
    }
}

pub fn verify(ctx: &Ctx, inputs: &[PathBuf], pa: &PolicyArgs) -> Result<Outcome, CliError> {
    let l = load(ctx, inputs, pa)?;
    let planner = make_planner(pa)?;
    let opts = VerifyOptions {
        semantics: semantics(pa),
        require_goal_reachable: pa.require_goal_reachable,
    };
    let (verdict, graph) = policy_works(&l.esys, &l.policy, planner.as_ref(), &opts)?;
    let report = VerdictReport::build(&l.esys, &l.policy, planner.as_ref(), &verdict)?;
    let code = match report.verdict {
        "works" => 0,
        "lasso" => 2,
        _ => 3,
    };
    let stdout = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => json(&report),
        Format::Text => report.to_text(),
        Format::Dot => policy_dot(&l.esys, &l.policy, &graph),
    };
    Ok(Outcome { stdout, code })
}

pub fn audit(
    ctx: &Ctx,
    inputs: &[PathBuf],
    pa: &PolicyArgs,
    exhaustive: bool,
    samples: usize,
    reference_bound: Option<usize>,
) -> Result<Outcome, CliError> {
    let l = load(ctx, inputs, pa)?;
    let planner = make_planner(pa)?;
    let sampling = if exhaustive {
        Sampling::Exhaustive
    } else {
        Sampling::Auto {
            limit: 4096,
            count: samples.max(1),
            seed: ctx.seed,
        }
    };
    let bound = reference_bound.unwrap_or(l.policy.plan_bound());
    let soundness = audit_reach_soundness(&l.esys, &l.policy, planner.as_ref(), sampling);
    let completeness = audit_reach_completeness(&l.esys, &l.policy, planner.as_ref(), bound, sampling);
    let code = if soundness.violations.is_empty() && completeness.violations.is_empty() {
        0
    } else {
        4
    };
    let stdout = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => {
            #[derive(Serialize)]
            struct Both<'a> {
                soundness: &'a eqts::verify::AuditReport,
                completeness: &'a eqts::verify::AuditReport,
            }
            json(&Both {
                soundness: &soundness,
                completeness: &completeness,
            })
        }
        Format::Text => {
            audit_text(&l.esys, &soundness, "soundness") + &audit_text(&l.esys, &completeness, "completeness")
        }
        Format::Dot => return Err(no_dot("audit")),
    };
    Ok(Outcome { stdout, code })
}

#[derive(Serialize)]
struct SimStep {
    cluster: StateRef,
    target: String,
    plan: Vec<String>,
    /// Concrete states visited while executing the plan, as true fluents.
    states: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct Simulation {
    start: Vec<String>,
    steps: Vec<SimStep>,
    outcome: &'static str,
}

pub fn simulate(
    ctx: &Ctx,
    inputs: &[PathBuf],
    pa: &PolicyArgs,
    max_steps: usize,
    random_plans: bool,
) -> Result<Outcome, CliError> {
    let l = load(ctx, inputs, pa)?;
    let planner = make_planner(pa)?;
    let (esys, policy) = (&l.esys, &l.policy);
    let ts = esys.ts();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let describe = |s: usize| ts.describe(s).into_iter().map(String::from).collect::<Vec<_>>();
    let Some(&start) = ts.initial().choose(&mut rng) else {
        return Err(CliError::Usage("the system has no initial state".into()));
    };
    let mut s = start;
    let mut steps = Vec::new();
    let mut outcome = "step-limit";
    for _ in 0..max_steps {
        let e = esys.class_of(s);
        if policy.goal().holds(e) {
            outcome = "goal";
            break;
        }
        let mut chosen = None;
        for t in policy.eval_targets(esys, e) {
            let target = policy.target(t);
            let plans = planner
                .plans(esys, e, target, policy.plan_bound())
                .map_err(|reason| eqts::policy::PlannerError::new(planner.as_ref(), e, target, reason))?;
            let plan = if random_plans {
                plans.choose(&mut rng).cloned()
            } else {
                plans.into_iter().next()
            };
            if let Some(p) = plan {
                chosen = Some((t, p));
                break;
            }
        }
        let Some((t, plan)) = chosen else {
            outcome = "no-plan";
            break;
        };
        let mut visited = Vec::new();
        let mut blocked = false;
        for &a in &plan {
            match ts.succ_ids(s, a).choose(&mut rng) {
                Some(&next) => {
                    s = next;
                    visited.push(describe(s));
                }
                None => {
                    blocked = true;
                    break;
                }
            }
        }
        steps.push(SimStep {
            cluster: state_ref(esys, e),
            target: policy.target(t).text.clone(),
            plan: plan_names(esys, &plan),
            states: visited,
        });
        if blocked {
            outcome = "blocked";
            break;
        }
    }
    if outcome == "step-limit" && policy.goal().holds(esys.class_of(s)) {
        outcome = "goal";
    }
    let sim = Simulation {
        start: describe(start),
        steps,
        outcome,
    };
    let stdout = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => json(&sim),
        Format::Text => {
            let mut out = format!("start {{{}}}\n", sim.start.join(", "));
            for st in &sim.steps {
                writeln!(
                    out,
                    "#{} {}: target {}, plan <{}>",
                    st.cluster.id,
                    st.cluster.profile,
                    st.target,
                    st.plan.join(", ")
                )
                .unwrap();
                if let Some(last) = st.states.last() {
                    writeln!(out, "  now {{{}}}", last.join(", ")).unwrap();
                }
            }
            writeln!(out, "outcome: {}", sim.outcome).unwrap();
            out
        }
        Format::Dot => return Err(no_dot("simulate")),
    };
    Ok(Outcome {
        stdout,
        code: if outcome == "goal" { 0 } else { 3 },
    })
}

pub fn export(ctx: &Ctx, inputs: &[PathBuf], pa: &PolicyArgs, what: Stage) -> Result<Outcome, CliError> {
    let format = ctx.format.unwrap_or(Format::Dot);
    if format == Format::Text {
        return Err(CliError::Usage("export writes dot or json".into()));
    }
    let dot = format == Format::Dot;
    match what {
        Stage::Ts => {
            let (_, ts) = Inputs::read(inputs)?.transition_system(ctx.caps)?;
            ok(if dot { ts_dot(&ts) } else { ts.to_json() + "\n" })
        }
        Stage::Equalized => {
            let l = load(ctx, inputs, pa)?;
            ok(if dot { equalized_dot(&l.esys) } else { json(&l.esys.to_document()) })
        }
        Stage::Policy => {
            let l = load(ctx, inputs, pa)?;
            let planner = make_planner(pa)?;
            let graph = explore(&l.esys, &l.policy, planner.as_ref(), l.esys.initial(), semantics(pa))?;
            if dot {
                ok(policy_dot(&l.esys, &l.policy, &graph))
            } else {
                let edges: BTreeMap<String, Vec<usize>> = graph
                    .succ
                    .iter()
                    .map(|(e, s)| (e.to_string(), s.iter().copied().collect()))
                    .collect();
                ok(json(&edges))
            }
        }
    }
}

pub fn gen(which: &GenCommand) -> Result<Outcome, CliError> {
    let (bundle, out, stem) = match which {
        GenCommand::Blocks { n, out, stem } => {
            let b = gen_blocksworld(*n).map_err(|e| CliError::Usage(e.to_string()))?;
            (b, out, stem.clone().unwrap_or_else(|| format!("blocks{n}")))
        }
        GenCommand::Grid {
            layout,
            figure,
            euclidean,
            out,
            stem,
        } => {
            let (mut inst, default_stem) = match (layout, figure) {
                (Some(p), None) => {
                    let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                        path: p.display().to_string(),
                        source,
                    })?;
                    let inst = GridInstance::parse_layout(&text).map_err(|e| CliError::Usage(e.to_string()))?;
                    let stem = p.file_stem().map_or("grid".into(), |s| s.to_string_lossy().into_owned());
                    (inst, stem)
                }
                (None, Some(f)) => (
                    figure1(*f).ok_or_else(|| CliError::Usage(format!("no shipped grid `{f}`")))?,
                    format!("grid_{f}"),
                ),
                _ => return Err(CliError::Usage("give --layout or --figure".into())),
            };
            if *euclidean {
                inst.metric = Metric::Euclidean;
            }
            let b = gen_grid(&inst).map_err(|e| CliError::Usage(e.to_string()))?;
            (b, out, stem.clone().unwrap_or(default_stem))
        }
    };
    bundle.write_to(out, &stem).map_err(|source| CliError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let mut listing = format!("{}\n{}\n", out.join(format!("{stem}.cal")).display(), out.join(format!("{stem}.scn")).display());
    if bundle.layout.is_some() {
        listing += &format!("{}\n", out.join(format!("{stem}.layout")).display());
    }
    ok(listing)
}
