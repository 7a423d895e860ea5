//! Verification of reactive agent policies over equalized transition
//! systems.
//!
//! Pipeline: a `.cal` action description is parsed and grounded
//! ([`lang`]), turned into an explicit [`ts::TransitionSystem`], clustered
//! by a classification ([`equalize`]), and a policy given as target rules
//! plus a conformant planner ([`policy`]) is checked for always reaching
//! its main goal ([`verify`]).

pub mod dot;
pub mod equalize;
pub mod formula;
pub mod lang;
pub mod pipeline;
pub mod policy;
pub mod report;
pub mod scenarios;
pub mod verify;
pub mod ts;
