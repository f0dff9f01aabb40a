//! Mixed causal graphs.
//!
//! A [`CausalGraph`] holds directed and undirected edges over an ordered set of
//! named variables, so the same type carries a fully oriented DAG, a CPDAG
//! returned by discovery, and the partially oriented states in between while a
//! domain expert edits the structure. Operations that only make sense on a DAG
//! check [`CausalGraph::require_dag`] first.

mod dsep;
mod export;
mod knowledge;
mod paths;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

pub use dsep::is_d_separated;
pub use export::{parse_dot, parse_json, ExportFormat, GraphJson};
pub use knowledge::{apply_knowledge, meek_closure, KnowledgeConstraints};
pub use paths::{classify_paths, NodeRole, PathDiagnostic};

/// Index of a node inside one [`CausalGraph`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("self-loop on {0}")]
    SelfLoop(String),
    #[error("edge {0} already present")]
    EdgeExists(String),
    #[error("graph not fully oriented; apply knowledge first")]
    NotOriented,
    #[error("graph contains a directed cycle through {0}")]
    Cycle(String),
    #[error("node sets must be disjoint ({0} appears twice)")]
    NotDisjoint(String),
    #[error("constraint contradiction on edge {0}")]
    Contradiction(String),
    #[error("required edge {0} is not an adjacency of the graph")]
    RequiredNotAdjacent(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Directed/undirected mixed graph over named variables.
///
/// Undirected pairs are stored once in each endpoint's `neighbors` set; a pair
/// of nodes is joined by at most one edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    parents: Vec<BTreeSet<NodeId>>,
    children: Vec<BTreeSet<NodeId>>,
    neighbors: Vec<BTreeSet<NodeId>>,
    /// Presentation-only marks on directed edges ("atomic direct effects").
    bold: BTreeSet<(NodeId, NodeId)>,
}

impl CausalGraph {
    pub fn new<I, S>(names: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut g = CausalGraph {
            names: Vec::new(),
            index: BTreeMap::new(),
            parents: Vec::new(),
            children: Vec::new(),
            neighbors: Vec::new(),
            bold: BTreeSet::new(),
        };
        for name in names {
            g.add_node(name)?;
        }
        Ok(g)
    }

    /// A copy with the same nodes and no edges.
    pub fn empty_like(&self) -> Self {
        let p = self.len();
        CausalGraph {
            names: self.names.clone(),
            index: self.index.clone(),
            parents: alloc::vec![BTreeSet::new(); p],
            children: alloc::vec![BTreeSet::new(); p],
            neighbors: alloc::vec![BTreeSet::new(); p],
            bold: BTreeSet::new(),
        }
    }

    pub fn add_node(&mut self, name: impl Into<String>) -> Result<NodeId, GraphError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(GraphError::DuplicateNode(name));
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.parents.push(BTreeSet::new());
        self.children.push(BTreeSet::new());
        self.neighbors.push(BTreeSet::new());
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Result<NodeId, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn ids<'a, I>(&self, names: I) -> Result<BTreeSet<NodeId>, GraphError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        names.into_iter().map(|n| self.id(n)).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub(crate) fn edge_label(&self, a: NodeId, b: NodeId) -> String {
        alloc::format!("{} -> {}", self.names[a], self.names[b])
    }

    pub(crate) fn pair_label(&self, a: NodeId, b: NodeId) -> String {
        alloc::format!("{} -- {}", self.names[a], self.names[b])
    }

    pub fn add_directed(&mut self, from: NodeId, to: NodeId) -> Result<(), GraphError> {
        if from == to {
            return Err(GraphError::SelfLoop(self.names[from].clone()));
        }
        if self.adjacent(from, to) {
            return Err(GraphError::EdgeExists(self.edge_label(from, to)));
        }
        self.children[from].insert(to);
        self.parents[to].insert(from);
        Ok(())
    }

    pub fn add_undirected(&mut self, a: NodeId, b: NodeId) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(self.names[a].clone()));
        }
        if self.adjacent(a, b) {
            return Err(GraphError::EdgeExists(self.pair_label(a, b)));
        }
        self.neighbors[a].insert(b);
        self.neighbors[b].insert(a);
        Ok(())
    }

    /// Convenience for building graphs from names.
    pub fn add_edge_by_name(&mut self, from: &str, to: &str) -> Result<(), GraphError> {
        let (a, b) = (self.id(from)?, self.id(to)?);
        self.add_directed(a, b)
    }

    pub fn add_undirected_by_name(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        let (a, b) = (self.id(a)?, self.id(b)?);
        self.add_undirected(a, b)
    }

    /// Removes whatever edge joins `a` and `b`; returns whether one existed.
    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        let mut removed = false;
        if self.children[a].remove(&b) {
            self.parents[b].remove(&a);
            removed = true;
        }
        if self.children[b].remove(&a) {
            self.parents[a].remove(&b);
            removed = true;
        }
        if self.neighbors[a].remove(&b) {
            self.neighbors[b].remove(&a);
            removed = true;
        }
        self.bold.remove(&(a, b));
        self.bold.remove(&(b, a));
        removed
    }

    /// Turns `a -- b` (or `b -> a`) into `a -> b`.
    pub fn orient(&mut self, a: NodeId, b: NodeId) {
        self.remove_edge(a, b);
        self.children[a].insert(b);
        self.parents[b].insert(a);
    }

    pub fn has_directed(&self, a: NodeId, b: NodeId) -> bool {
        self.children[a].contains(&b)
    }

    pub fn has_undirected(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors[a].contains(&b)
    }

    pub fn has_directed_by_name(&self, a: &str, b: &str) -> bool {
        match (self.id(a), self.id(b)) {
            (Ok(a), Ok(b)) => self.has_directed(a, b),
            _ => false,
        }
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.children[a].contains(&b)
            || self.parents[a].contains(&b)
            || self.neighbors[a].contains(&b)
    }

    pub fn parents(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.parents[v]
    }

    pub fn children(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.children[v]
    }

    /// Undirected neighbours.
    pub fn neighbors(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.neighbors[v]
    }

    /// All nodes sharing any edge with `v`.
    pub fn adjacents(&self, v: NodeId) -> BTreeSet<NodeId> {
        let mut out = self.parents[v].clone();
        out.extend(self.children[v].iter().copied());
        out.extend(self.neighbors[v].iter().copied());
        out
    }

    pub fn directed_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (a, ch) in self.children.iter().enumerate() {
            out.extend(ch.iter().map(|&b| (a, b)));
        }
        out
    }

    /// Undirected edges as `(a, b)` with `a < b`.
    pub fn undirected_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (a, nb) in self.neighbors.iter().enumerate() {
            out.extend(nb.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.directed_edges().len() + self.undirected_edges().len()
    }

    /// Unordered adjacencies as `(a, b)` with `a < b`.
    pub fn skeleton(&self) -> BTreeSet<(NodeId, NodeId)> {
        let mut out = BTreeSet::new();
        for (a, b) in self.directed_edges() {
            out.insert((a.min(b), a.max(b)));
        }
        out.extend(self.undirected_edges());
        out
    }

    /// Skeleton as sorted name pairs, independent of node order.
    pub fn skeleton_names(&self) -> BTreeSet<(String, String)> {
        self.skeleton()
            .into_iter()
            .map(|(a, b)| {
                let (x, y) = (self.names[a].clone(), self.names[b].clone());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect()
    }

    pub fn set_bold(&mut self, a: NodeId, b: NodeId, bold: bool) {
        if bold {
            self.bold.insert((a, b));
        } else {
            self.bold.remove(&(a, b));
        }
    }

    pub fn bold_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.bold
    }

    pub fn is_fully_directed(&self) -> bool {
        self.neighbors.iter().all(BTreeSet::is_empty)
    }

    /// Topological order of the directed part (undirected edges ignored).
    pub fn topological_order(&self) -> Result<Vec<NodeId>, GraphError> {
        let p = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(BTreeSet::len).collect();
        let mut queue: VecDeque<NodeId> = (0..p).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() == p {
            Ok(order)
        } else {
            let stuck = (0..p).find(|&v| indeg[v] > 0).unwrap_or(0);
            Err(GraphError::Cycle(self.names[stuck].clone()))
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Errors unless the graph is a fully oriented, acyclic DAG.
    pub fn require_dag(&self) -> Result<(), GraphError> {
        if !self.is_fully_directed() {
            return Err(GraphError::NotOriented);
        }
        self.topological_order().map(|_| ())
    }

    /// Strict descendants of the set (members excluded unless reachable from another member).
    pub fn descendants(&self, from: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        self.reach(from, |v| &self.children[v])
    }

    /// Strict ancestors of the set.
    pub fn ancestors(&self, from: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        self.reach(from, |v| &self.parents[v])
    }

    fn reach<'a, F>(&'a self, from: &BTreeSet<NodeId>, step: F) -> BTreeSet<NodeId>
    where
        F: Fn(NodeId) -> &'a BTreeSet<NodeId>,
    {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<NodeId> = from.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &w in step(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Whether a directed path `from ⇝ to` of length ≥ 1 exists.
    pub fn has_directed_path(&self, from: NodeId, to: NodeId) -> bool {
        self.descendants(&BTreeSet::from([from])).contains(&to)
    }

    /// Same edges, nodes compared by name; node order may differ.
    pub fn same_structure(&self, other: &CausalGraph) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let named = |g: &CausalGraph| -> (BTreeSet<(String, String)>, BTreeSet<(String, String)>) {
            let d = g
                .directed_edges()
                .into_iter()
                .map(|(a, b)| (g.names[a].clone(), g.names[b].clone()))
                .collect();
            let u = g
                .undirected_edges()
                .into_iter()
                .map(|(a, b)| {
                    let (x, y) = (g.names[a].clone(), g.names[b].clone());
                    if x <= y {
                        (x, y)
                    } else {
                        (y, x)
                    }
                })
                .collect();
            (d, u)
        };
        let nodes_a: BTreeSet<&String> = self.names.iter().collect();
        let nodes_b: BTreeSet<&String> = other.names.iter().collect();
        nodes_a == nodes_b && named(self) == named(other)
    }

    /// Number of unordered pairs adjacent in exactly one of the two skeletons.
    pub fn skeleton_distance(&self, other: &CausalGraph) -> usize {
        let a = self.skeleton_names();
        let b = other.skeleton_names();
        a.symmetric_difference(&b).count()
    }
}
