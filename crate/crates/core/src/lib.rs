//! Packed semantic construction over shared parse forests.
//!
//! Given a parse forest and constraint-based semantic rules, [`packer::pack`]
//! builds a single packed representation: a conjunctive solved form for the
//! root, a goal name, and an environment of named (possibly disjunctive)
//! definitions. The cost is polynomial in sentence length even when the
//! number of readings is exponential.

pub mod constraint;
pub mod forest;
pub mod parser;
pub mod packer;
pub mod semgrammar;
pub mod unfolder;
pub mod term;

mod syntax;

pub use syntax::SyntaxError;
