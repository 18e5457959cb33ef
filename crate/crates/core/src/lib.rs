//! Multi-objective scheduling of hybrid flow shops in which any stage may be
//! a parallel-batching stage.
//!
//! The crate minimizes makespan and total energy consumption with a
//! decomposition-based evolutionary algorithm ([`moead::solve`]) that combines
//! knowledge-based initialization, critical-path local search on a
//! batch-aware disjunctive graph, Q-learning control of the search budget and
//! an adaptive population/weight update.
//!
//! Energy-valued quantities are generic over [`Scalar`] (`f32` or `f64`);
//! the aliases at the crate root fix them to `f64`.

pub mod error;
pub mod graph;
pub mod init;
pub mod metrics;
pub mod model;
pub mod moead;
pub mod neighborhood;
pub mod oracle;
pub mod pareto;
pub mod scalar;
pub mod schedule;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Instance64 = model::Instance<f64>;
pub type Instance32 = model::Instance<f32>;
pub type Objectives64 = schedule::Objectives<f64>;
pub type Solution64 = schedule::Solution<f64>;
