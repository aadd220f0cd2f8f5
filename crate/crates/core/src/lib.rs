//! Execution engine, cost/latency simulator and experiment harness for
//! LLM-based algorithms expressed as computational graphs.
//!
//! The crate is organised around the parallel-decomposition pattern: an input
//! is divided into `k` sub-tasks of size `m`, each sub-task is solved by one LLM
//! call, and a final node aggregates the partial answers.
//!
//! - [`graph`] builds and executes computational graphs of LLM and non-LLM nodes.
//! - [`backend`] provides the LLM abstraction: a parameterised mock that models
//!   the failure modes of real models, and an HTTP chat-completion client.
//! - [`cost`] evaluates prefill/decode cost functions and latency under a
//!   bounded degree of parallelism.
//! - [`metrics`] computes the task-specific error metrics.
//! - [`tasks`] holds the four algorithms (counting, sorting, retrieval, RAG)
//!   together with their instance generators.
//! - [`harness`] runs seeded parameter sweeps and writes CSV.

pub mod backend;
pub mod cost;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod seed;
pub mod tasks;

pub use error::{Error, Result};
