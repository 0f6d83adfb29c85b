//! Signal temporal logic, ASAP rewards and actor-critic recovery training.

// Negated float comparisons are deliberate: they reject NaN along with
// out-of-range values. Index loops mirror the math they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod env;
pub mod eval;
pub mod nn;
pub mod reward;
pub mod rl;
pub mod rng;
pub mod stl;
pub mod trainer;
