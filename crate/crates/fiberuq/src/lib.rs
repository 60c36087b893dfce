//! Multilevel polynomial surrogates for fiber orientation under uncertain
//! melt temperature and fiber length, with statistics and error-bound checks.

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod fiber;
pub mod ode;
pub mod poly;
pub mod problem;
pub mod rheology;
pub mod stats;
pub mod tensor;

pub use config::ProblemConfig;
pub use problem::FiberProblem;
