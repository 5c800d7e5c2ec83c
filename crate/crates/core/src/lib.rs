//! Stop-and-Stare influence maximization.
//!
//! Seeds are chosen by greedy max-coverage over reverse-reachable (RR) sets.
//! [`ssa`] doubles its pool until the greedy solution's coverage estimate is
//! confirmed by an independent stopping-rule estimator; [`dssa`] splits one
//! stream into halves and derives its precision parameters from the data.
//! Both return a `(1 - 1/e - eps)`-approximate seed set with probability at
//! least `1 - delta` under the independent cascade and linear threshold
//! models.

pub mod bounds;
pub mod coverage;
pub mod dssa;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod run;
pub mod sampling;
pub mod ssa;
pub mod tvm;

pub use coverage::RRCollection;
pub use error::{Error, Result};
pub use graph::{Graph, GraphBuilder, NodeId};
pub use run::{SeedResult, StopReason, StopStareConfig};
pub use sampling::{Model, RRSet, RrSource};
pub use tvm::{Algo, TargetWeights};
