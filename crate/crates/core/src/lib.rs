//! Impossibility theorems from population ethics as computable objects.
//!
//! * [`domain`]: exact-rational populations and social welfare functions.
//! * [`axioms`]: adequacy conditions as instance checkers, bounded SWF audits,
//!   and cycle assembly.
//! * [`constraint_graph`]: impossibility cycles, partial orders, and minimal
//!   sets of constraints that must be weakened to incomparability.
//! * [`belief`]: pairwise belief matrices, distributions over total orders,
//!   path-coherence bounds, exact polytope feasibility and the minimax
//!   violation bound for cyclic constraints.
//! * [`decision`]: margin, quantilized and partial-order decision rules.
//! * [`cli`]: scenario files, analysis commands and JSON reports.
//! * [`rational`]: parsing and printing of exact rationals.
//! * [`simplex`]: a small two-phase simplex solver, exact or floating point.

pub mod axioms;
pub mod belief;
pub mod cli;
pub mod constraint_graph;
pub mod decision;
pub mod domain;
pub mod rational;
pub mod simplex;
