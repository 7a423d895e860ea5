//! Literal-head fragment of action language C: parsing, grounding and
//! transition semantics.

pub mod ast;
pub mod ground;
pub mod lexer;
pub mod parser;
pub mod semantics;

pub use ast::ActionDescription;
pub use ground::{ground, GAtom, GLit, GroundDescription, GroundError};
pub use lexer::Pos;
pub use parser::{parse, ParseError, ParseErrorKind};
pub use semantics::{build_transition_system, transitions_of, BuildOptions, SemanticsError};
