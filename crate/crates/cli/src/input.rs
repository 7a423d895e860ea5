//! Resolving command-line input files into a loaded system.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use eqts::equalize::{EqualizedDocument, ProperViolation};
use eqts::lang::ast::Concurrency;
use eqts::lang::{self, BuildOptions, GroundDescription};
use eqts::pipeline::{self, Loaded};
use eqts::scenarios::{gen_grid, GridInstance};
use eqts::ts::{TransitionSystem, TsDocument};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// What `equalize` writes; later stages read back the system and the
/// scenario.
#[derive(Debug, Serialize)]
pub struct EqualizeBundle {
    pub transition_system: TsDocument,
    pub scenario: String,
    pub equalized: EqualizedDocument,
    pub properness: Properness,
}

#[derive(Debug, Serialize)]
pub struct Properness {
    pub condition1: Vec<ProperViolation>,
    pub condition2: Vec<ProperViolation>,
    pub initial_clustering: bool,
}

#[derive(Deserialize)]
struct BundleHead {
    transition_system: TsDocument,
    scenario: String,
}

#[derive(Default)]
pub struct Inputs {
    cal: Option<(String, String)>,
    scn: Option<(String, String)>,
    ts_doc: Option<TsDocument>,
    layout: Option<(String, GridInstance)>,
}

#[derive(Debug, Clone, Copy)]
pub struct Caps {
    pub max_states: usize,
    pub concurrency_cap: Option<usize>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn set<T>(slot: &mut Option<T>, value: T, what: &str) -> Result<(), CliError> {
    if slot.replace(value).is_some() {
        return Err(CliError::Usage(format!("more than one {what} given")));
    }
    Ok(())
}

impl Inputs {
    pub fn read(paths: &[PathBuf]) -> Result<Self, CliError> {
        let mut inp = Inputs::default();
        for p in paths {
            let name = p.display().to_string();
            let text = read(p)?;
            match p.extension().and_then(|e| e.to_str()) {
                Some("cal") => set(&mut inp.cal, (name, text), "description")?,
                Some("scn") => set(&mut inp.scn, (name, text), "scenario")?,
                Some("layout") => {
                    let g = GridInstance::parse_layout(&text)
                        .map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
                    set(&mut inp.layout, (name, g), "layout")?
                }
                Some("json") => {
                    let v: serde_json::Value = serde_json::from_str(&text)
                        .map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
                    if v.get("transition_system").is_some() {
                        let b: BundleHead = serde_json::from_value(v)
                            .map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
                        set(&mut inp.ts_doc, b.transition_system, "transition system")?;
                        // an explicit .scn wins over the bundled one
                        if inp.scn.is_none() {
                            inp.scn = Some((name, b.scenario));
                        }
                    } else {
                        let doc: TsDocument = serde_json::from_value(v)
                            .map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
                        set(&mut inp.ts_doc, doc, "transition system")?
                    }
                }
                _ => {
                    return Err(CliError::Usage(format!(
                        "{name}: expected a .cal, .scn, .layout or .json file"
                    )))
                }
            }
        }
        Ok(inp)
    }

    /// The description text, generating it from a layout if needed.
    fn description(&self) -> Result<Option<(String, String)>, CliError> {
        if let Some(c) = &self.cal {
            return Ok(Some(c.clone()));
        }
        if let Some((name, g)) = &self.layout {
            let b = gen_grid(g).map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
            return Ok(Some((name.clone(), b.cal)));
        }
        Ok(None)
    }

    pub fn ground(&self) -> Result<GroundDescription, CliError> {
        let (name, text) = self
            .description()?
            .ok_or_else(|| CliError::Usage("no action description (.cal or .layout) given".into()))?;
        Ok(pipeline::ground_source(&text, &name)?)
    }

    pub fn transition_system(
        &self,
        caps: Caps,
    ) -> Result<(Option<GroundDescription>, TransitionSystem), CliError> {
        if let Some(doc) = &self.ts_doc {
            if self.cal.is_some() || self.layout.is_some() {
                return Err(CliError::Usage(
                    "give either a transition system or a description, not both".into(),
                ));
            }
            let ts = TransitionSystem::from_document(doc)
                .map_err(|e| CliError::Usage(format!("transition system: {e}")))?;
            if ts.states().len() > caps.max_states {
                return Err(CliError::Resource(format!(
                    "the transition system has {} states, over the cap of {}",
                    ts.states().len(),
                    caps.max_states
                )));
            }
            return Ok((None, ts));
        }
        let gd = self.ground()?;
        let opts = BuildOptions {
            max_states: caps.max_states,
            concurrency: caps.concurrency_cap.map(|cap| {
                let max = gd.concurrency.max.min(cap);
                Concurrency {
                    min: gd.concurrency.min.min(max),
                    max,
                }
            }),
        };
        let ts = lang::build_transition_system(&gd, &opts).map_err(pipeline::PipelineError::from)?;
        Ok((Some(gd), ts))
    }

    pub fn scenario_text(&self) -> Result<(String, String), CliError> {
        if let Some(s) = &self.scn {
            return Ok(s.clone());
        }
        if let Some((name, g)) = &self.layout {
            let b = gen_grid(g).map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
            return Ok((name.clone(), b.scn));
        }
        Err(CliError::Usage("no scenario (.scn) given".into()))
    }

    pub fn load(&self, caps: Caps) -> Result<Loaded, CliError> {
        let (gd, ts) = self.transition_system(caps)?;
        let (name, text) = self.scenario_text()?;
        let spec = pipeline::scenario_source(&text, &name)?;
        Ok(pipeline::load_with_ts(gd, Arc::new(ts), spec)?)
    }
}
