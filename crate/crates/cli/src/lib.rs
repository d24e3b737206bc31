//! Library surface of the `res-scope` CLI: argument/config resolution,
//! report emission, and command dispatch, exposed for integration tests.

pub mod config;
pub mod emit;
pub mod run;
