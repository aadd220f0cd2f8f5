//! Digit counting by summing sub-task counts.

use std::sync::LazyLock;

use regex::Regex;

use super::plan::{plan_decomposition, DecompositionKind};
use super::{prompts, subtask_outputs, text_divider, Solution, STAGE_SUBTASK};
use crate::backend::LlmBackend;
use crate::error::{Error, Result};
use crate::graph::{build_parallel_decomposition, execute, NodeKind, ParseFallback, Value};
use crate::tasks::instance::CountingInstance;

static ANSWER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)answer\s*:\s*(-?\d+)").expect("valid regex"));
static INT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+").expect("valid regex"));

/// Integer after `Answer:` when present, else the first integer.
pub fn parse_count(response: &str) -> std::result::Result<i64, String> {
    let m = ANSWER_RE
        .captures(response)
        .and_then(|c| c.get(1))
        .or_else(|| INT_RE.find(response))
        .ok_or_else(|| format!("no integer in `{response}`"))?;
    m.as_str().parse().map_err(|e| format!("bad count `{}`: {e}", m.as_str()))
}

pub fn solve_counting(
    instance: &CountingInstance,
    m: usize,
    backend: &dyn LlmBackend,
    seed: u64,
) -> Result<Solution<i64>> {
    let plan = plan_decomposition(instance.text.len(), m, DecompositionKind::Disjoint)?;
    let graph = build_parallel_decomposition(
        plan.k,
        text_divider(&plan),
        |i| {
            NodeKind::llm(
                1,
                STAGE_SUBTASK,
                move |xs| Ok(prompts::count(super::segment(xs, i)?)),
                |r| parse_count(r).map(Value::Int),
                ParseFallback::Substitute(Value::Int(0)),
            )
        },
        NodeKind::compute(plan.k, |xs| {
            xs.iter()
                .map(|x| x.as_int().ok_or_else(|| format!("sum expects integers, got {}", x.type_name())))
                .sum::<std::result::Result<i64, String>>()
                .map(Value::Int)
        }),
    )?;
    let exec = execute(&graph, &[Value::Text(instance.text.clone())], backend, seed)?;
    let answer = exec.outputs[0]
        .as_int()
        .ok_or_else(|| Error::invalid("counting graph produced a non-integer"))?;
    Ok(Solution {
        answer,
        subtask_outputs: subtask_outputs(&exec.trace, plan.k),
        plan,
        trace: exec.trace,
    })
}
