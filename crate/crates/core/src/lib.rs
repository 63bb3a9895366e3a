//! Exact oracles and stochastic algorithms for AMSGrad-type reinforcement
//! learning on finite MDPs.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and a seed: tabular MDP ground truth ([`mdp`]),
//! seeded Markovian sampling ([`sampler`]), the AMSGrad update and its
//! weighted ball projection ([`amsgrad`]), policy gradient with the
//! geometric-horizon Q estimator ([`pg`]), linear TD ([`td`]) and the
//! log-log rate fitting used to read convergence shapes ([`report`]).
//!
//! IO, configuration files, parallel replication and the command line live
//! in the companion `markov-adam` crate.
#![no_std]
// NaN must fail range checks
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod amsgrad;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod math;
pub mod mdp;
pub mod pg;
pub mod policy;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod td;

pub use amsgrad::{AmsGradState, DomainBall, MomentConvention, Schedule};
pub use error::{Error, Result};
pub use mdp::{MixingProfile, PolicyTable, StateDist, TabularMdp};
pub use policy::SoftmaxPolicy;
pub use report::{Checkpoint, ConvergenceReport, MetricKind, RateFit};
pub use rng::Rng;
pub use sampler::{Kernel, Transition};
pub use td::LinearFeatures;
