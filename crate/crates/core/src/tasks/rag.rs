//! Multi-needle retrieval: per-chunk sentence extraction followed by one
//! aggregation call.

use super::plan::{plan_decomposition, DecompositionKind};
use super::retrieval::check_overlap;
use super::{haystack, prompts, subtask_outputs, text_divider, Solution, STAGE_AGGREGATE, STAGE_SUBTASK};
use crate::backend::LlmBackend;
use crate::error::{Error, Result};
use crate::graph::{build_parallel_decomposition, execute, NodeKind, ParseFallback, Value};
use crate::tasks::instance::RagInstance;

/// Digit sentences quoted in a retrieval response; `None` means no sentence.
pub fn parse_rag_retrieval(response: &str) -> std::result::Result<Vec<String>, String> {
    Ok(haystack::digit_sentences(response).into_iter().map(|s| s.sentence).collect())
}

/// First run of six characters from `0-9?`.
pub fn parse_rag_answer(response: &str) -> std::result::Result<String, String> {
    let chars: Vec<char> = response.chars().collect();
    chars
        .windows(haystack::PASSCODE_LEN)
        .find(|w| w.iter().all(|c| c.is_ascii_digit() || *c == '?'))
        .map(|w| w.iter().collect())
        .ok_or_else(|| format!("no passcode in `{response}`"))
}

/// Sentences from all chunks in chunk order, without repeats.
fn gather(xs: &[Value]) -> std::result::Result<Vec<String>, String> {
    let mut out: Vec<String> = Vec::new();
    for x in xs {
        for s in x.as_texts().ok_or("aggregation expects sentence lists")? {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
    }
    Ok(out)
}

pub fn solve_rag(instance: &RagInstance, m: usize, backend: &dyn LlmBackend, seed: u64) -> Result<Solution<String>> {
    let plan = plan_decomposition(instance.text.len(), m, DecompositionKind::OverlappingHalf)?;
    check_overlap(&plan, instance.needle_len())?;
    let question = haystack::rag_question(&instance.target_object);
    let aggregate_question = question.clone();
    let graph = build_parallel_decomposition(
        plan.k,
        text_divider(&plan),
        |i| {
            let question = question.clone();
            NodeKind::llm(
                1,
                STAGE_SUBTASK,
                move |xs| Ok(prompts::rag_retrieve(super::segment(xs, i)?, &question)),
                |r| parse_rag_retrieval(r).map(Value::Texts),
                ParseFallback::Substitute(Value::Texts(Vec::new())),
            )
        },
        NodeKind::llm(
            plan.k,
            STAGE_AGGREGATE,
            move |xs| Ok(prompts::rag_aggregate(&gather(xs)?, &aggregate_question)),
            |r| parse_rag_answer(r).map(Value::Text),
            ParseFallback::Substitute(Value::Text("?".repeat(haystack::PASSCODE_LEN))),
        ),
    )?;
    let exec = execute(&graph, &[Value::Text(instance.text.clone())], backend, seed)?;
    let answer = exec.outputs[0]
        .as_text()
        .map(String::from)
        .ok_or_else(|| Error::invalid("rag graph produced a non-text answer"))?;
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
    use crate::backend::{MockBackend, MockProfile, RateCurve};
    use crate::tasks::instance::generate_rag;

    #[test]
    fn parsers() {
        assert_eq!(parse_rag_retrieval("None").unwrap(), Vec::<String>::new());
        let s = "The 1-th digit of the passcode to the red door is 4.";
        assert_eq!(parse_rag_retrieval(&format!("{s}\nnoise")).unwrap(), vec![s.to_string()]);
        assert_eq!(parse_rag_answer("Passcode: 12?4?6").unwrap(), "12?4?6");
        assert!(parse_rag_answer("12345").is_err());
    }

    #[test]
    fn exact_mock_recovers_passcode() {
        for seed in 0..10 {
            let inst = generate_rag(4000, seed).unwrap();
            for m in [300, 1000, 4000] {
                let s = solve_rag(&inst, m, &MockBackend::exact(), seed).unwrap();
                assert_eq!(s.answer, inst.truth, "seed {seed} m {m}");
                let agg = s.trace.exchanges.last().unwrap();
                assert_eq!(s.trace.stage_of(agg), STAGE_AGGREGATE);
            }
        }
    }

    #[test]
    fn blind_retriever_gives_all_unknown() {
        let mut p = MockProfile::exact();
        p.retrieval_p1 = RateCurve::Constant { value: 1.0 };
        let inst = generate_rag(2000, 1).unwrap();
        let s = solve_rag(&inst, 400, &MockBackend::new(p), 3).unwrap();
        assert_eq!(s.answer, "??????");
        let agg = s.trace.exchanges.last().unwrap();
        assert!(!agg.prompt_text.contains("-th digit"));
    }
}
