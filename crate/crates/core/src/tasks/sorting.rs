//! Sorting by sub-list sorting followed by symbolic merging.

use std::sync::Arc;

use super::merge::{merge_many, MergeMode};
use super::plan::{plan_decomposition, DecompositionKind};
use super::{prompts, subtask_outputs, Solution, STAGE_SUBTASK};
use crate::backend::LlmBackend;
use crate::error::{Error, Result};
use crate::graph::{build_parallel_decomposition, execute, NodeKind, ParseFallback, Value};
use crate::tasks::instance::SortingInstance;

/// `[a, b, c]` using the shortest representation that reads back exactly.
pub fn format_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Reads the first bracketed list in `s`.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let open = s.find('[').ok_or("no list found")?;
    let close = open + s[open..].find(']').ok_or("unterminated list")?;
    let inner = s[open + 1..close].trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad list element `{}`: {e}", t.trim())))
        .collect()
}

pub fn solve_sorting(
    instance: &SortingInstance,
    m: usize,
    backend: &dyn LlmBackend,
    merge_mode: MergeMode,
    seed: u64,
) -> Result<Solution<Vec<f64>>> {
    let plan = plan_decomposition(instance.values.len(), m, DecompositionKind::Disjoint)?;
    let divider_plan = plan.clone();
    let divide = Arc::new(move |xs: &[Value]| {
        let values = xs[0].as_reals().ok_or("divider expects a list")?;
        Ok(Value::Texts(divider_plan.split_slice(values).into_iter().map(format_list).collect()))
    });
    let graph = build_parallel_decomposition(
        plan.k,
        divide,
        |i| {
            NodeKind::llm(
                1,
                STAGE_SUBTASK,
                move |xs| Ok(prompts::sort(&parse_list(super::segment(xs, i)?)?)),
                |r| parse_list(r).map(Value::Reals),
                ParseFallback::Substitute(Value::Reals(Vec::new())),
            )
        },
        NodeKind::compute(plan.k, move |xs| {
            let lists = xs
                .iter()
                .map(|x| x.as_reals().map(<[f64]>::to_vec).ok_or("merge expects lists"))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(Value::Reals(merge_many(lists, merge_mode)))
        }),
    )?;
    let exec = execute(&graph, &[Value::Reals(instance.values.clone())], backend, seed)?;
    let answer = exec.outputs[0]
        .as_reals()
        .map(<[f64]>::to_vec)
        .ok_or_else(|| Error::invalid("sorting graph produced a non-list"))?;
    Ok(Solution {
        answer,
        subtask_outputs: subtask_outputs(&exec.trace, plan.k),
        plan,
        trace: exec.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::tasks::instance::generate_sorting;

    #[test]
    fn list_format_round_trips() {
        let xs = vec![0.07, 0.5, 1.0, 0.0, -0.01, 0.123456789];
        assert_eq!(parse_list(&format_list(&xs)).unwrap(), xs);
        assert_eq!(parse_list("Sure: [] done").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_list("[0.1,0.2]").unwrap(), vec![0.1, 0.2]);
        assert!(parse_list("no list").is_err());
        assert!(parse_list("[0.1, x]").is_err());
    }

    #[test]
    fn exact_mock_sorts_exactly_for_both_modes() {
        let inst = generate_sorting(50, 4);
        for mode in [MergeMode::Incremental, MergeMode::Hierarchical] {
            for m in [1, 7, 25, 50] {
                let s = solve_sorting(&inst, m, &MockBackend::exact(), mode, 9).unwrap();
                assert_eq!(s.answer, inst.truth);
                assert_eq!(s.trace.exchanges.len(), 50usize.div_ceil(m));
            }
        }
    }

    #[test]
    fn single_segment_is_the_mock_output() {
        let inst = generate_sorting(30, 1);
        let s = solve_sorting(&inst, 30, &MockBackend::exact(), MergeMode::Hierarchical, 2).unwrap();
        assert_eq!(s.subtask_outputs, vec![Value::Reals(s.answer.clone())]);
    }
}
