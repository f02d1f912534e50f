//! Markov chains on regular trees, factor-of-i.i.d. Glauber dynamics,
//! entropy inequalities for typical processes, and the finite-graph
//! experiments (random regular graphs, local statistics, coverings) that
//! accompany them.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod covering;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod glauber;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod local_stats;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Kernel = kernel::TransitionKernel<f64>;
pub type Kernel32 = kernel::TransitionKernel<f32>;
pub type Joint = tree::JointLaw<f64>;
pub type Glauber = glauber::GlauberEngine<f64>;
