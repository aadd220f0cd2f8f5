use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::{ComputationGraph, NodeId};

/// A structural problem found by [`ComputationGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Nodes that lie on (or downstream of) a directed cycle.
    Cycle { nodes: Vec<NodeId> },
    DanglingSlot { node: NodeId, slot: usize },
    DuplicateSlot { node: NodeId, slot: usize },
    SlotOutOfRange { node: NodeId, slot: usize, arity: usize },
    UnknownNode { node: NodeId },
    Unreachable { node: NodeId },
    NoOutputs,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { nodes } => {
                let ids: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
                write!(f, "cycle through {}", ids.join(", "))
            }
            Violation::DanglingSlot { node, slot } => write!(f, "{node} slot {slot} is not connected"),
            Violation::DuplicateSlot { node, slot } => {
                write!(f, "{node} slot {slot} is connected more than once")
            }
            Violation::SlotOutOfRange { node, slot, arity } => {
                write!(f, "{node} has {arity} slots, edge targets slot {slot}")
            }
            Violation::UnknownNode { node } => write!(f, "reference to unknown {node}"),
            Violation::Unreachable { node } => write!(f, "{node} is not reachable from any input"),
            Violation::NoOutputs => f.write_str("graph has no output nodes"),
        }
    }
}

impl ComputationGraph {
    /// Checks the graph and returns every violation found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();

        if self.outputs.is_empty() {
            out.push(Violation::NoOutputs);
        }
        for &o in &self.outputs {
            if !self.nodes.contains_key(&o) {
                out.push(Violation::UnknownNode { node: o });
            }
        }

        // slot connectivity
        let mut fill: BTreeMap<(NodeId, usize), usize> = BTreeMap::new();
        let connections = self
            .edges
            .iter()
            .map(|e| (e.target, e.slot))
            .chain(self.inputs.iter().copied());
        for (node, slot) in connections {
            match self.nodes.get(&node) {
                None => out.push(Violation::UnknownNode { node }),
                Some(kind) if slot >= kind.arity() => out.push(Violation::SlotOutOfRange {
                    node,
                    slot,
                    arity: kind.arity(),
                }),
                Some(_) => *fill.entry((node, slot)).or_default() += 1,
            }
        }
        for e in &self.edges {
            if !self.nodes.contains_key(&e.source) {
                out.push(Violation::UnknownNode { node: e.source });
            }
        }
        for (&id, kind) in &self.nodes {
            for slot in 0..kind.arity() {
                match fill.get(&(id, slot)).copied().unwrap_or(0) {
                    0 => out.push(Violation::DanglingSlot { node: id, slot }),
                    1 => {}
                    _ => out.push(Violation::DuplicateSlot { node: id, slot }),
                }
            }
        }

        // cycles: whatever Kahn's algorithm cannot remove
        let adjacency = self.adjacency();
        let mut indeg: BTreeMap<NodeId, usize> = self.nodes.keys().map(|&id| (id, 0)).collect();
        for e in self.known_edges() {
            *indeg.get_mut(&e.1).unwrap() += 1;
        }
        let mut queue: VecDeque<NodeId> =
            indeg.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        let mut removed = BTreeSet::new();
        while let Some(id) = queue.pop_front() {
            removed.insert(id);
            for &next in adjacency.get(&id).into_iter().flatten() {
                let d = indeg.get_mut(&next).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
        if removed.len() < self.nodes.len() {
            let nodes = self.nodes.keys().filter(|id| !removed.contains(id)).copied().collect();
            out.push(Violation::Cycle { nodes });
        }

        // reachability from sources (input-bound or zero-arity nodes)
        let mut seen: BTreeSet<NodeId> = self
            .nodes
            .iter()
            .filter(|(id, k)| k.arity() == 0 || self.inputs.iter().any(|(n, _)| n == *id))
            .map(|(&id, _)| id)
            .collect();
        let mut stack: Vec<NodeId> = seen.iter().copied().collect();
        while let Some(id) = stack.pop() {
            for &next in adjacency.get(&id).into_iter().flatten() {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        for &id in self.nodes.keys() {
            if !seen.contains(&id) {
                out.push(Violation::Unreachable { node: id });
            }
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    fn known_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges
            .iter()
            .filter(|e| self.nodes.contains_key(&e.source) && self.nodes.contains_key(&e.target))
            .map(|e| (e.source, e.target))
    }

    pub(super) fn adjacency(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (s, t) in self.known_edges() {
            adj.entry(s).or_default().push(t);
        }
        adj
    }
}
