//! Needle-in-a-haystack retrieval over half-overlapping chunks with majority
//! voting.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::plan::{plan_decomposition, DecompositionKind, DecompositionPlan};
use super::{haystack, prompts, subtask_outputs, text_divider, Solution, STAGE_SUBTASK};
use crate::backend::LlmBackend;
use crate::error::{Error, Result};
use crate::graph::{build_parallel_decomposition, execute, AnswerRecord, NodeKind, ParseFallback, Value};
use crate::tasks::instance::HaystackInstance;

static PASSCODE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{6}\b").expect("valid regex"));

/// `I don't know` (any case, straight or curly apostrophe) or the first
/// six-digit number.
pub fn parse_retrieval(response: &str) -> std::result::Result<AnswerRecord, String> {
    let lower = response.to_lowercase().replace('\u{2019}', "'");
    if lower.contains("don't know") || lower.contains("do not know") {
        return Ok(AnswerRecord::Unknown);
    }
    PASSCODE_RE
        .find(response)
        .map(|m| AnswerRecord::Passcode(m.as_str().to_string()))
        .ok_or_else(|| format!("no passcode in `{response}`"))
}

/// Most frequent committed answer. Abstentions do not vote; an `h`-way tie
/// returns the `h` candidates in lexicographic order; no votes at all means
/// "I don't know".
pub fn majority_vote(answers: &[AnswerRecord]) -> AnswerRecord {
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for a in answers {
        match a {
            AnswerRecord::Passcode(p) => *votes.entry(p).or_default() += 1,
            AnswerRecord::Candidates(c) => {
                for p in c {
                    *votes.entry(p).or_default() += 1;
                }
            }
            AnswerRecord::Unknown => {}
        }
    }
    let Some(&top) = votes.values().max() else {
        return AnswerRecord::Unknown;
    };
    let mut winners: Vec<String> = votes
        .into_iter()
        .filter(|&(_, c)| c == top)
        .map(|(p, _)| p.to_string())
        .collect();
    if winners.len() == 1 {
        AnswerRecord::Passcode(winners.remove(0))
    } else {
        AnswerRecord::Candidates(winners)
    }
}

/// Half-overlapping chunks must be able to hold a whole needle.
pub(crate) fn check_overlap(plan: &DecompositionPlan, needle_len: usize) -> Result<()> {
    if plan.k > 1 && plan.m / 2 < needle_len {
        return Err(Error::invalid(format!(
            "chunk size m = {} is below twice the needle length {needle_len}",
            plan.m
        )));
    }
    Ok(())
}

pub fn solve_retrieval(
    instance: &HaystackInstance,
    m: usize,
    backend: &dyn LlmBackend,
    seed: u64,
) -> Result<Solution<AnswerRecord>> {
    let plan = plan_decomposition(instance.text.len(), m, DecompositionKind::OverlappingHalf)?;
    check_overlap(&plan, instance.needle_len())?;
    let question = haystack::question(&instance.target_object);
    let graph = build_parallel_decomposition(
        plan.k,
        text_divider(&plan),
        |i| {
            let question = question.clone();
            NodeKind::llm(
                1,
                STAGE_SUBTASK,
                move |xs| Ok(prompts::retrieve(super::segment(xs, i)?, &question)),
                |r| parse_retrieval(r).map(Value::Answer),
                ParseFallback::Substitute(Value::Answer(AnswerRecord::Unknown)),
            )
        },
        NodeKind::compute(plan.k, |xs| {
            let answers = xs
                .iter()
                .map(|x| x.as_answer().cloned().ok_or("vote expects answers"))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(Value::Answer(majority_vote(&answers)))
        }),
    )?;
    let exec = execute(&graph, &[Value::Text(instance.text.clone())], backend, seed)?;
    let answer = exec.outputs[0]
        .as_answer()
        .cloned()
        .ok_or_else(|| Error::invalid("retrieval graph produced a non-answer"))?;
    Ok(Solution {
        answer,
        subtask_outputs: subtask_outputs(&exec.trace, plan.k),
        plan,
        trace: exec.trace,
    })
}
