//! The four decomposition algorithms, their instances and helpers.

pub mod counting;
pub mod haystack;
pub mod instance;
pub mod merge;
pub mod plan;
pub mod prompts;
pub mod rag;
pub mod retrieval;
pub mod sorting;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ComputeFn, ExecutionTrace, NodeId, Value};
use crate::metrics;
use plan::{DecompositionKind, DecompositionPlan};

pub use instance::{generate_instance, Instance, InstanceOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Counting,
    Sorting,
    Retrieval,
    Rag,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Counting, TaskKind::Sorting, TaskKind::Retrieval, TaskKind::Rag];

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Counting => "counting",
            TaskKind::Sorting => "sorting",
            TaskKind::Retrieval => "retrieval",
            TaskKind::Rag => "rag",
        }
    }

    pub fn decomposition(&self) -> DecompositionKind {
        match self {
            TaskKind::Counting | TaskKind::Sorting => DecompositionKind::Disjoint,
            TaskKind::Retrieval | TaskKind::Rag => DecompositionKind::OverlappingHalf,
        }
    }

    /// Error columns reported for this task, in CSV order.
    pub fn metric_columns(&self) -> &'static [&'static str] {
        match self {
            TaskKind::Counting => &[metrics::ERR_ABS, metrics::ERR_NORM],
            TaskKind::Sorting => &[
                metrics::ERR_EXACT,
                metrics::ERR_NONMONO,
                metrics::ERR_LENMIS,
                metrics::ERR_LINF,
                metrics::ERR_L1,
            ],
            TaskKind::Retrieval => &[metrics::ERR_RETRIEVAL],
            TaskKind::Rag => &[metrics::ERR_EXACT, metrics::ERR_DIGITS],
        }
    }

    /// Generated length of one sub-task call as a function of `m`, up to
    /// constants: one token for a number or passcode, `m` for a sorted list.
    pub fn decode_len(&self, m: usize) -> f64 {
        match self {
            TaskKind::Sorting => m as f64,
            _ => 1.0,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown task `{s}`; expected counting, sorting, retrieval or rag")))
    }
}

/// Answer of a solver together with the plan it used and the full trace.
#[derive(Debug, Clone)]
pub struct Solution<A> {
    pub answer: A,
    pub plan: DecompositionPlan,
    pub trace: ExecutionTrace,
    /// Parsed output of each sub-task, in segment order.
    pub subtask_outputs: Vec<Value>,
}

/// Stage name of sub-task LLM nodes.
pub const STAGE_SUBTASK: &str = "subtask";
/// Stage name of aggregation LLM nodes.
pub const STAGE_AGGREGATE: &str = "aggregate";

fn subtask_outputs(trace: &ExecutionTrace, k: usize) -> Vec<Value> {
    (1..=k as u32).filter_map(|i| trace.values.get(&NodeId(i)).cloned()).collect()
}

/// Divider node cutting a text input along `plan`.
fn text_divider(plan: &DecompositionPlan) -> ComputeFn {
    let plan = plan.clone();
    Arc::new(move |xs: &[Value]| {
        let text = xs[0].as_text().ok_or("divider expects text")?;
        if text.len() != plan.n || !text.is_ascii() {
            return Err(format!("divider expects {} ASCII characters, got {}", plan.n, text.len()));
        }
        Ok(Value::Texts(plan.split_str(text).into_iter().map(String::from).collect()))
    })
}

fn segment(xs: &[Value], i: usize) -> std::result::Result<&str, String> {
    xs[0]
        .as_texts()
        .and_then(|s| s.get(i))
        .map(String::as_str)
        .ok_or_else(|| format!("divider output lacks segment {i}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names_round_trip() {
        for t in TaskKind::ALL {
            assert_eq!(t.name().parse::<TaskKind>().unwrap(), t);
        }
        assert!("summarize".parse::<TaskKind>().is_err());
    }
}
