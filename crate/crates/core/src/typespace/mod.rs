//! Type spaces over finite structures.
//!
//! The trace of an object tuple records which formula instances it
//! satisfies; a type space is the finite set of distinct traces, each
//! represented by an atom. Realized atoms point at base tuples. Limit atoms
//! carry an extension rule instead: order cuts insert a point beside a base
//! element (successive realizations approach the cut, which reproduces
//! coheir behavior), graph atoms attach a fresh vertex with a fixed
//! adjacency pattern, and custom rules can do anything deterministic.

mod atom;
mod checks;
mod context;
mod space;
mod trace;

pub use atom::{AtomRule, TypeAtom};
pub use checks::{atom_finitely_satisfiable_in, fragment_battery, tuples_over, FsReport};
pub use context::{
    validate_graph, validate_order, CutSide, ExtensionContext, RealizationRecord, TheoryKind,
    TypeError,
};
pub use space::TypeSpace;
pub use trace::{trace_matrix, BitMatrix, TraceMatrix};
