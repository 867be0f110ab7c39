//! Erasure-coded registers over crash-prone read-modify-write base objects.
//!
//! The crate provides a systematic Reed-Solomon codec, base-object state
//! machines, client protocols for a safe register and a regular register,
//! a deterministic simulator with pluggable schedulers, and checkers for
//! the consistency, liveness and storage properties of recorded runs.

pub mod base_object;
pub mod checker;
pub mod client;
pub mod codec;
pub mod regular_register;
pub mod safe_register;
pub mod sim;
pub mod storage;
pub mod types;
