//! `.cal` + `.scn` text to a ready-to-verify policy.

use std::sync::Arc;

use thiserror::Error;

use crate::equalize::{EqError, EqualizedSystem};
use crate::lang::{self, BuildOptions, GroundDescription};
use crate::policy::{parse_scenario, Policy, PolicyError, ScenarioSpec};
use crate::ts::TransitionSystem;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{file}: {err}")]
    Parse { file: String, err: lang::ParseError },
    #[error(transparent)]
    Ground(#[from] lang::GroundError),
    #[error(transparent)]
    Semantics(#[from] lang::SemanticsError),
    #[error(transparent)]
    Equalize(#[from] EqError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl PipelineError {
    /// True for failures caused by resource caps rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            PipelineError::Semantics(lang::SemanticsError::StateBudget { .. })
                | PipelineError::Policy(PolicyError::BoundTooLarge { .. } | PolicyError::PlanCap { .. })
        )
    }
}

pub struct Loaded {
    /// Absent when the transition system was read from a document.
    pub ground: Option<GroundDescription>,
    pub scenario: ScenarioSpec,
    pub esys: EqualizedSystem,
    pub policy: Policy,
}

impl Loaded {
    pub fn ts(&self) -> &TransitionSystem {
        self.esys.ts()
    }
}

pub fn ground_source(cal: &str, file: &str) -> Result<GroundDescription, PipelineError> {
    let ad = lang::parse(cal).map_err(|err| PipelineError::Parse {
        file: file.to_string(),
        err,
    })?;
    Ok(lang::ground(&ad)?)
}

pub fn scenario_source(scn: &str, file: &str) -> Result<ScenarioSpec, PipelineError> {
    parse_scenario(scn).map_err(|err| PipelineError::Parse {
        file: file.to_string(),
        err,
    })
}

/// Builds on an existing transition system.
pub fn load_with_ts(
    ground: Option<GroundDescription>,
    ts: Arc<TransitionSystem>,
    scenario: ScenarioSpec,
) -> Result<Loaded, PipelineError> {
    let esys = EqualizedSystem::build(ts, &scenario.classification)?;
    let policy = Policy::compile(&esys, &scenario.policy)?;
    Ok(Loaded {
        ground,
        scenario,
        esys,
        policy,
    })
}

pub fn load(cal: &str, scn: &str, opts: &BuildOptions) -> Result<Loaded, PipelineError> {
    let ground = ground_source(cal, "description")?;
    let scenario = scenario_source(scn, "scenario")?;
    let ts = lang::build_transition_system(&ground, opts)?;
    load_with_ts(Some(ground), Arc::new(ts), scenario)
}
