//! Workload generation, oracle checks, benchmarking and self-test for
//! `batch-ist`.

pub mod bench;
pub mod checks;
pub mod harness;
pub mod selftest;
