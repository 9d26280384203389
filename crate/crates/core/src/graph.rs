//! Cell graph and essential/critical classification.
//!
//! Every cell is a node and every fanout branch of a net is a directed edge.
//! A node is *cyclic* if it lies on a directed cycle, and *critical* if it is
//! cyclic or has a directed path into a cyclic node; an edge is critical
//! when it feeds a critical node. Everything is essential.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::blif::{CellId, CellKind, Edge, MappedNetlist};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGraph {
    nodes: usize,
    edges: Vec<Edge>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl CellGraph {
    /// Builds the graph from explicit edges; duplicate `(src, dst, pin)`
    /// triples are collapsed.
    pub fn from_edges(nodes: usize, edges: impl IntoIterator<Item = Edge>) -> CellGraph {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        edges.sort();
        edges.dedup();
        let mut succ = vec![Vec::new(); nodes];
        let mut pred = vec![Vec::new(); nodes];
        for e in &edges {
            succ[e.src.0].push(e.dst.0);
            pred[e.dst.0].push(e.src.0);
        }
        CellGraph {
            nodes,
            edges,
            succ,
            pred,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn successors(&self, v: CellId) -> &[usize] {
        &self.succ[v.0]
    }

    pub fn predecessors(&self, v: CellId) -> &[usize] {
        &self.pred[v.0]
    }

    /// Nodes without in-edges.
    pub fn primary_inputs(&self) -> Vec<CellId> {
        (0..self.nodes).filter(|&v| self.pred[v].is_empty()).map(CellId).collect()
    }

    /// Nodes without out-edges.
    pub fn primary_outputs(&self) -> Vec<CellId> {
        (0..self.nodes).filter(|&v| self.succ[v].is_empty()).map(CellId).collect()
    }
}

/// One node per cell, one edge per net fanout branch. Flip-flop clocks are
/// implicit in the mapped netlist and contribute no edges.
pub fn build_graph(n: &MappedNetlist) -> CellGraph {
    CellGraph::from_edges(n.cells.len(), n.edges())
}

/// Iterative Tarjan; returns the component index of every node.
fn strongly_connected(g: &CellGraph) -> (Vec<usize>, Vec<usize>) {
    const UNSEEN: usize = usize::MAX;
    let n = g.nodes;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut comp_size = Vec::new();
    let mut next = 0usize;
    // (node, next successor position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < g.succ[v].len() {
                let w = g.succ[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let id = comp_size.len();
                let mut size = 0;
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = id;
                    size += 1;
                    if w == v {
                        break;
                    }
                }
                comp_size.push(size);
            }
        }
    }
    (comp, comp_size)
}

/// Nodes on at least one directed cycle: members of non-trivial SCCs plus
/// nodes with a self-loop.
pub fn find_cyclic_set(g: &CellGraph) -> Vec<bool> {
    let (comp, size) = strongly_connected(g);
    let mut k: Vec<bool> = (0..g.nodes).map(|v| size[comp[v]] >= 2).collect();
    for e in &g.edges {
        if e.src == e.dst {
            k[e.src.0] = true;
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    /// Membership in K (nodes on a cycle).
    pub cyclic: Vec<bool>,
    pub critical_nodes: Vec<bool>,
    /// Parallel to [`CellGraph::edges`].
    pub critical_edges: Vec<bool>,
    pub edges: Vec<Edge>,
}

impl Classification {
    pub fn node_count(&self) -> usize {
        self.critical_nodes.len()
    }

    pub fn cyclic_count(&self) -> usize {
        self.cyclic.iter().filter(|&&b| b).count()
    }

    pub fn critical_node_count(&self) -> usize {
        self.critical_nodes.iter().filter(|&&b| b).count()
    }

    pub fn critical_edge_count(&self) -> usize {
        self.critical_edges.iter().filter(|&&b| b).count()
    }

    pub fn is_critical(&self, v: CellId) -> bool {
        self.critical_nodes[v.0]
    }

    pub fn is_edge_critical(&self, e: &Edge) -> bool {
        self.critical_nodes[e.dst.0]
    }
}

/// Critical nodes are K plus everything with a path into K, found by a
/// reverse breadth-first search from K.
pub fn classify(g: &CellGraph) -> Classification {
    let cyclic = find_cyclic_set(g);
    let mut critical = cyclic.clone();
    let mut queue: VecDeque<usize> = (0..g.nodes).filter(|&v| cyclic[v]).collect();
    while let Some(v) = queue.pop_front() {
        for &u in &g.pred[v] {
            if !critical[u] {
                critical[u] = true;
                queue.push_back(u);
            }
        }
    }
    let critical_edges = g.edges.iter().map(|e| critical[e.dst.0]).collect();
    Classification {
        cyclic,
        critical_nodes: critical,
        critical_edges,
        edges: g.edges.clone(),
    }
}

/// Critical nodes that no primary-input-rooted path reaches. These are
/// critical under the "feeds a cycle" rule but would not be under a strict
/// "critical paths start at a primary input" reading.
pub fn critical_unreachable_from_pi(g: &CellGraph, c: &Classification) -> Vec<CellId> {
    let mut seen = vec![false; g.nodes];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for v in g.primary_inputs() {
        seen[v.0] = true;
        queue.push_back(v.0);
    }
    while let Some(v) = queue.pop_front() {
        for &w in &g.succ[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..g.nodes)
        .filter(|&v| c.critical_nodes[v] && !seen[v])
        .map(CellId)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFlags {
    pub name: String,
    pub kind: String,
    pub cyclic: bool,
    pub critical: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkFlags {
    pub cell: String,
    pub pin: usize,
    pub critical: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetFlags {
    pub driver: String,
    pub critical: bool,
    pub sinks: Vec<SinkFlags>,
}

/// JSON-facing summary of a classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub design: String,
    pub cyclic_nodes: usize,
    pub critical_nodes: usize,
    pub essential_nodes: usize,
    pub critical_edges: usize,
    pub essential_edges: usize,
    /// Critical nodes with no path from a primary input.
    pub critical_not_pi_rooted: usize,
    pub cells: Vec<CellFlags>,
    pub nets: Vec<NetFlags>,
}

fn kind_name(k: &CellKind) -> &'static str {
    match k {
        CellKind::InputPad => "input",
        CellKind::OutputPad => "output",
        CellKind::Lut { .. } => "lut",
        CellKind::FlipFlop { .. } => "ff",
        CellKind::Const0 => "const0",
        CellKind::Const1 => "const1",
    }
}

pub fn classify_report(n: &MappedNetlist, g: &CellGraph, c: &Classification) -> ClassifyReport {
    let cells = n
        .cells
        .iter()
        .enumerate()
        .map(|(i, cell)| CellFlags {
            name: cell.name.clone(),
            kind: kind_name(&cell.kind).into(),
            cyclic: c.cyclic[i],
            critical: c.critical_nodes[i],
        })
        .collect();
    let mut nets: Vec<NetFlags> = Vec::new();
    for (driver, fanout) in n.fanouts().into_iter().enumerate() {
        if fanout.is_empty() {
            continue;
        }
        let sinks: Vec<SinkFlags> = fanout
            .iter()
            .map(|&(dst, pin)| SinkFlags {
                cell: n.cell(dst).name.clone(),
                pin,
                critical: c.critical_nodes[dst.0],
            })
            .collect();
        nets.push(NetFlags {
            driver: n.cells[driver].name.clone(),
            critical: sinks.iter().any(|s| s.critical),
            sinks,
        });
    }
    ClassifyReport {
        design: n.name.clone(),
        cyclic_nodes: c.cyclic_count(),
        critical_nodes: c.critical_node_count(),
        essential_nodes: c.node_count(),
        critical_edges: c.critical_edge_count(),
        essential_edges: c.edges.len(),
        critical_not_pi_rooted: critical_unreachable_from_pi(g, c).len(),
        cells,
        nets,
    }
}
