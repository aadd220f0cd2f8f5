use std::collections::BTreeMap;

use super::validate::Violation;
use super::{ComputationGraph, NodeId, NodeKind, ParseFallback, Value};
use crate::backend::{BackendError, ChatExchange, LlmBackend};
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("graph is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("graph takes {expected} inputs, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("backend failure in {node}: {source}")]
    Backend {
        node: NodeId,
        #[source]
        source: BackendError,
    },
    #[error("could not parse response of {node}: {message}")]
    Parse { node: NodeId, message: String },
    #[error("{node} failed: {message}")]
    Compute { node: NodeId, message: String },
}

impl ExecError {
    pub fn is_backend(&self) -> bool {
        matches!(self, ExecError::Backend { .. })
    }
}

/// Record of one graph execution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionTrace {
    /// One exchange per executed LLM node, sorted by node id.
    pub exchanges: Vec<ChatExchange>,
    /// Value produced by every node.
    pub values: BTreeMap<NodeId, Value>,
    /// Stage label of every LLM node.
    pub stages: BTreeMap<NodeId, String>,
    /// Parser failures that were replaced by the node's default value.
    pub parse_errors: BTreeMap<NodeId, String>,
}

impl ExecutionTrace {
    pub fn prompt_tokens_total(&self) -> u64 {
        self.exchanges.iter().map(|e| e.prompt_tokens).sum()
    }

    pub fn completion_tokens_total(&self) -> u64 {
        self.exchanges.iter().map(|e| e.completion_tokens).sum()
    }

    pub fn stage_of(&self, exchange: &ChatExchange) -> &str {
        exchange
            .node_id
            .and_then(|id| self.stages.get(&id))
            .map(String::as_str)
            .unwrap_or("")
    }

    /// Exchanges grouped by stage, stages ordered by first appearance.
    pub fn by_stage(&self) -> Vec<(&str, Vec<&ChatExchange>)> {
        let mut groups: Vec<(&str, Vec<&ChatExchange>)> = Vec::new();
        for ex in &self.exchanges {
            let stage = self.stage_of(ex);
            match groups.iter_mut().find(|(s, _)| *s == stage) {
                Some((_, v)) => v.push(ex),
                None => groups.push((stage, vec![ex])),
            }
        }
        groups
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub outputs: Vec<Value>,
    pub trace: ExecutionTrace,
}

/// Seed handed to the backend for the LLM call in `node`.
pub fn node_seed(global: u64, node: NodeId) -> u64 {
    seed::combine(global, &[seed::mix64(u64::from(node.0))])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) enum Schedule {
    #[cfg_attr(all(feature = "parallel", not(test)), allow(dead_code))]
    #[cfg_attr(not(feature = "parallel"), default)]
    Ascending,
    #[cfg_attr(not(test), allow(dead_code))]
    Descending,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Evaluates `graph` in topological order.
///
/// Ready nodes are released in waves; within a wave nodes may run
/// concurrently, but every LLM call draws its randomness from a seed derived
/// from `(seed, node id)`, so outputs and trace are identical for identical
/// arguments regardless of scheduling.
pub fn execute(
    graph: &ComputationGraph,
    inputs: &[Value],
    backend: &dyn LlmBackend,
    seed: u64,
) -> Result<Execution, ExecError> {
    run(graph, inputs, backend, seed, Schedule::default())
}

#[derive(Clone, Copy)]
enum Source {
    Input(usize),
    Node(NodeId),
}

struct Outcome {
    value: Value,
    exchange: Option<ChatExchange>,
    parse_error: Option<String>,
}

pub(crate) fn run(
    graph: &ComputationGraph,
    inputs: &[Value],
    backend: &dyn LlmBackend,
    seed: u64,
    schedule: Schedule,
) -> Result<Execution, ExecError> {
    graph.validate().map_err(ExecError::Invalid)?;
    if inputs.len() != graph.inputs.len() {
        return Err(ExecError::InputArity {
            expected: graph.inputs.len(),
            got: inputs.len(),
        });
    }

    let mut sources: BTreeMap<NodeId, Vec<Option<Source>>> = graph
        .nodes
        .iter()
        .map(|(&id, k)| (id, vec![None; k.arity()]))
        .collect();
    for (i, &(node, slot)) in graph.inputs.iter().enumerate() {
        sources.get_mut(&node).unwrap()[slot] = Some(Source::Input(i));
    }
    let mut pending: BTreeMap<NodeId, usize> = graph.nodes.keys().map(|&id| (id, 0)).collect();
    for e in &graph.edges {
        sources.get_mut(&e.target).unwrap()[e.slot] = Some(Source::Node(e.source));
        *pending.get_mut(&e.target).unwrap() += 1;
    }
    let adjacency = graph.adjacency();

    let mut values: BTreeMap<NodeId, Value> = BTreeMap::new();
    let mut trace = ExecutionTrace::default();
    let mut ready: Vec<NodeId> = pending.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();

    while !ready.is_empty() {
        let jobs: Vec<(NodeId, Vec<Value>)> = ready
            .iter()
            .map(|&id| {
                let args = sources[&id]
                    .iter()
                    .map(|s| match s.expect("validated graph has every slot connected") {
                        Source::Input(i) => inputs[i].clone(),
                        Source::Node(src) => values[&src].clone(),
                    })
                    .collect();
                (id, args)
            })
            .collect();

        let eval = |(id, args): &(NodeId, Vec<Value>)| {
            evaluate(*id, &graph.nodes[id], args, backend, seed).map(|o| (*id, o))
        };
        let outcomes: Vec<(NodeId, Outcome)> = match schedule {
            Schedule::Ascending => jobs.iter().map(eval).collect::<Result<_, _>>()?,
            Schedule::Descending => {
                let mut v = jobs.iter().rev().map(eval).collect::<Result<Vec<_>, _>>()?;
                v.reverse();
                v
            }
            #[cfg(feature = "parallel")]
            Schedule::Parallel => {
                use rayon::prelude::*;
                if jobs.len() > 1 {
                    jobs.par_iter().map(eval).collect::<Result<_, _>>()?
                } else {
                    jobs.iter().map(eval).collect::<Result<_, _>>()?
                }
            }
        };

        let mut next = Vec::new();
        for (id, outcome) in outcomes {
            if let NodeKind::Llm(n) = &graph.nodes[&id] {
                trace.stages.insert(id, n.stage.clone());
            }
            if let Some(ex) = outcome.exchange {
                trace.exchanges.push(ex);
            }
            if let Some(msg) = outcome.parse_error {
                trace.parse_errors.insert(id, msg);
            }
            values.insert(id, outcome.value);
            for &succ in adjacency.get(&id).into_iter().flatten() {
                let d = pending.get_mut(&succ).unwrap();
                *d -= 1;
                if *d == 0 {
                    next.push(succ);
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        ready = next;
    }

    trace.exchanges.sort_by_key(|e| e.node_id);
    let outputs = graph.outputs.iter().map(|id| values[id].clone()).collect();
    trace.values = values;
    Ok(Execution { outputs, trace })
}

fn evaluate(
    id: NodeId,
    kind: &NodeKind,
    args: &[Value],
    backend: &dyn LlmBackend,
    seed: u64,
) -> Result<Outcome, ExecError> {
    match kind {
        NodeKind::Compute(n) => {
            let value = (n.compute)(args).map_err(|message| ExecError::Compute { node: id, message })?;
            Ok(Outcome {
                value,
                exchange: None,
                parse_error: None,
            })
        }
        NodeKind::Llm(n) => {
            let prompt = (n.prompter)(args).map_err(|message| ExecError::Compute { node: id, message })?;
            let mut exchange = backend
                .chat(&prompt, &n.params, node_seed(seed, id))
                .map_err(|source| ExecError::Backend { node: id, source })?;
            exchange.node_id = Some(id);
            let (value, parse_error) = match (n.parser)(&exchange.response_text) {
                Ok(v) => (v, None),
                Err(message) => match &n.fallback {
                    ParseFallback::FailExecution => return Err(ExecError::Parse { node: id, message }),
                    ParseFallback::Substitute(v) => (v.clone(), Some(message)),
                },
            };
            Ok(Outcome {
                value,
                exchange: Some(exchange),
                parse_error,
            })
        }
    }
}
