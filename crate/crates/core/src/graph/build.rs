use std::collections::BTreeMap;

use super::{ComputeFn, NodeId, NodeKind};
use crate::error::{Error, Result};

/// Data-flow edge: the value of `source` feeds input slot `slot` of `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub slot: usize,
}

/// An LLM-based algorithm as a DAG of typed nodes.
///
/// Graph inputs are bound to `(node, slot)` pairs; the designated output nodes
/// produce the final values. Graphs are immutable once built.
#[derive(Debug, Clone, Default)]
pub struct ComputationGraph {
    pub(super) nodes: BTreeMap<NodeId, NodeKind>,
    pub(super) edges: Vec<Edge>,
    pub(super) inputs: Vec<(NodeId, usize)>,
    pub(super) outputs: Vec<NodeId>,
}

impl ComputationGraph {
    pub fn node(&self, id: NodeId) -> Option<&NodeKind> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeKind)> {
        self.nodes.iter().map(|(id, k)| (*id, k))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn input_bindings(&self) -> &[(NodeId, usize)] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn llm_node_count(&self) -> usize {
        self.nodes.values().filter(|k| k.is_llm()).count()
    }
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    graph: ComputationGraph,
    next_id: u32,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, kind: NodeKind) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.graph.nodes.insert(id, kind);
        id
    }

    pub fn connect(&mut self, source: NodeId, target: NodeId, slot: usize) -> &mut Self {
        self.graph.edges.push(Edge {
            source,
            target,
            slot,
        });
        self
    }

    /// Binds the next graph input to `(node, slot)` and returns its index.
    pub fn bind_input(&mut self, node: NodeId, slot: usize) -> usize {
        self.graph.inputs.push((node, slot));
        self.graph.inputs.len() - 1
    }

    pub fn mark_output(&mut self, node: NodeId) -> &mut Self {
        self.graph.outputs.push(node);
        self
    }

    pub fn build(self) -> ComputationGraph {
        self.graph
    }
}

/// Builds the divide / `k` parallel sub-tasks / aggregate pattern.
///
/// Node ids are assigned in order: the divider is `0`, sub-task `i` is `i + 1`
/// and the aggregator is `k + 1`. The divider receives graph input 0; sub-task
/// `i` reads the divider's output and feeds slot `i` of the aggregator, which
/// is the sole output.
pub fn build_parallel_decomposition<F>(
    k: usize,
    divide: ComputeFn,
    mut subtask: F,
    aggregate: NodeKind,
) -> Result<ComputationGraph>
where
    F: FnMut(usize) -> NodeKind,
{
    if k == 0 {
        return Err(Error::invalid("parallel decomposition needs k >= 1"));
    }
    if aggregate.arity() != k {
        return Err(Error::invalid(format!(
            "aggregate node takes {} inputs, expected k = {k}",
            aggregate.arity()
        )));
    }
    let mut b = GraphBuilder::new();
    let divider = b.add_node(NodeKind::Compute(super::ComputeNode {
        arity: 1,
        compute: divide,
    }));
    b.bind_input(divider, 0);
    let subtasks: Vec<NodeId> = (0..k)
        .map(|i| {
            let node = subtask(i);
            if node.arity() != 1 {
                return Err(Error::invalid(format!(
                    "sub-task node {i} takes {} inputs, expected 1",
                    node.arity()
                )));
            }
            Ok(b.add_node(node))
        })
        .collect::<Result<_>>()?;
    let agg = b.add_node(aggregate);
    for (i, &s) in subtasks.iter().enumerate() {
        b.connect(divider, s, 0);
        b.connect(s, agg, i);
    }
    b.mark_output(agg);
    Ok(b.build())
}
