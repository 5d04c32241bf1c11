//! Energy-aware delivery planning for tow trains feeding an assembly line.
//!
//! A tow train leaves the supermarket once per period, visits workstations
//! in their fixed route order and returns. Kinematics give an energy cost
//! per kilogram for every leg ([`energy`]); the mass-flow formulation
//! ([`model`]) makes total energy linear in the kilograms moved along each
//! arc, and a branch-and-bound solver ([`solver`]) finds the cheapest plan
//! that keeps every station stocked. [`oracle`] and [`validate`] are
//! independent checks on that pipeline.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arcs;
pub mod cli;
pub mod energy;
pub mod fmt;
pub mod instance;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod solution;
pub mod solver;
pub mod validate;
