//! Computational graphs of LLM nodes and non-LLM nodes.
//!
//! An LLM node wraps exactly one model call: a prompter formats the node's
//! inputs into a prompt, the backend answers, and a parser turns the response
//! back into a [`Value`]. Non-LLM nodes run an ordinary pure function.

mod build;
mod exec;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::GenerationParams;

pub use build::{build_parallel_decomposition, ComputationGraph, Edge, GraphBuilder};
pub use exec::{execute, ExecError, Execution, ExecutionTrace};
pub use validate::Violation;

/// Identifier of a node, unique within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node#{}", self.0)
    }
}

/// Final answer of a retrieval-style task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnswerRecord {
    /// A single committed answer.
    Passcode(String),
    /// An `h`-way tie from majority voting, sorted lexicographically.
    Candidates(Vec<String>),
    /// The model declined to answer ("I don't know").
    Unknown,
}

pub const DONT_KNOW: &str = "I don't know";

impl fmt::Display for AnswerRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerRecord::Passcode(p) => f.write_str(p),
            AnswerRecord::Candidates(c) => write!(f, "[{}]", c.join(", ")),
            AnswerRecord::Unknown => f.write_str(DONT_KNOW),
        }
    }
}

/// Values flowing along graph edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Text(String),
    Int(i64),
    Real(f64),
    Reals(Vec<f64>),
    Texts(Vec<String>),
    Answer(AnswerRecord),
}

impl Value {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_reals(&self) -> Option<&[f64]> {
        match self {
            Value::Reals(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_texts(&self) -> Option<&[String]> {
        match self {
            Value::Texts(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_answer(&self) -> Option<&AnswerRecord> {
        match self {
            Value::Answer(a) => Some(a),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Text(_) => "text",
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Reals(_) => "list-of-reals",
            Value::Texts(_) => "list-of-text",
            Value::Answer(_) => "answer-record",
        }
    }
}

pub type PromptFn = Arc<dyn Fn(&[Value]) -> Result<String, String> + Send + Sync>;
pub type ParseFn = Arc<dyn Fn(&str) -> Result<Value, String> + Send + Sync>;
pub type ComputeFn = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;

/// What an LLM node does when its parser rejects the response.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseFallback {
    FailExecution,
    Substitute(Value),
}

#[derive(Clone)]
pub struct LlmNode {
    pub arity: usize,
    pub stage: String,
    pub prompter: PromptFn,
    pub parser: ParseFn,
    pub fallback: ParseFallback,
    pub params: GenerationParams,
}

#[derive(Clone)]
pub struct ComputeNode {
    pub arity: usize,
    pub compute: ComputeFn,
}

#[derive(Clone)]
pub enum NodeKind {
    Llm(LlmNode),
    Compute(ComputeNode),
}

impl NodeKind {
    pub fn llm<P, Q>(
        arity: usize,
        stage: impl Into<String>,
        prompter: P,
        parser: Q,
        fallback: ParseFallback,
    ) -> Self
    where
        P: Fn(&[Value]) -> Result<String, String> + Send + Sync + 'static,
        Q: Fn(&str) -> Result<Value, String> + Send + Sync + 'static,
    {
        NodeKind::Llm(LlmNode {
            arity,
            stage: stage.into(),
            prompter: Arc::new(prompter),
            parser: Arc::new(parser),
            fallback,
            params: GenerationParams::default(),
        })
    }

    pub fn compute<F>(arity: usize, f: F) -> Self
    where
        F: Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    {
        NodeKind::Compute(ComputeNode {
            arity,
            compute: Arc::new(f),
        })
    }

    /// Non-LLM node passing its single input through unchanged.
    pub fn identity() -> Self {
        NodeKind::compute(1, |xs| Ok(xs[0].clone()))
    }

    pub fn arity(&self) -> usize {
        match self {
            NodeKind::Llm(n) => n.arity,
            NodeKind::Compute(n) => n.arity,
        }
    }

    pub fn is_llm(&self) -> bool {
        matches!(self, NodeKind::Llm(_))
    }
}

impl fmt::Debug for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Llm(n) => f
                .debug_struct("Llm")
                .field("arity", &n.arity)
                .field("stage", &n.stage)
                .field("fallback", &n.fallback)
                .finish_non_exhaustive(),
            NodeKind::Compute(n) => f
                .debug_struct("Compute")
                .field("arity", &n.arity)
                .finish_non_exhaustive(),
        }
    }
}
