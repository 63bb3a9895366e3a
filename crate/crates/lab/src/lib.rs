//! Experiment harness, verification suite and command line around
//! `markov-adam-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod diagnose;
pub mod fixture;
pub mod harness;
pub mod oracle;
pub mod verify;
