//! Finite first-order structures, formulas, and Tarski evaluation.
//!
//! Structures live on domains `{0, .., n-1}` with explicit relation tables.
//! Formulas are parsed against a structure's signature; partitioned formulas
//! split their free variables into an object tuple and a parameter tuple so
//! the type-space machinery can swap the two sides.

mod eval;
mod formula;
mod parser;
mod structure;

pub use eval::{eval_instance, evaluate, evaluate_phi_formula, EvalError};
pub use formula::{free_variables, Formula, PartitionedFormula, PhiFormula, Term};
pub use parser::{parse_formula, ParseError};
pub use structure::{FiniteStructure, Signature, StructureError};
