//! Specification-based testing for a small contract-annotated language.
//!
//! Programs declare functions and methods with `requires`/`ensures`
//! clauses and constrained types with `where` invariants. The engine maps
//! every parameter type to a finite, integer-indexed domain, enumerates or
//! uniformly samples that domain, discards inputs that violate type
//! invariants or preconditions, runs the remaining inputs through an
//! interpreter and reports any fault or postcondition violation together
//! with a concrete counterexample.

pub mod cli;
pub mod domains;
pub mod harness;
pub mod interp;
pub mod mutate;
pub mod sampler;
pub mod syntax;
