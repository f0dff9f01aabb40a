use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CausalGraph, GraphError, NodeId};

/// Background knowledge supplied by a domain expert.
///
/// Removing an adjacency is expressed by forbidding both of its orientations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeConstraints {
    #[serde(default)]
    pub required: BTreeSet<(String, String)>,
    #[serde(default)]
    pub forbidden: BTreeSet<(String, String)>,
    /// Ordered partition; an edge may only point from an earlier tier to the
    /// same or a later one. Nodes outside every tier are unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiers: Option<Vec<Vec<String>>>,
}

impl KnowledgeConstraints {
    pub fn is_empty(&self) -> bool {
        self.required.is_empty() && self.forbidden.is_empty() && self.tiers.is_none()
    }

    pub fn require(mut self, from: &str, to: &str) -> Self {
        self.required.insert((from.into(), to.into()));
        self
    }

    pub fn forbid(mut self, from: &str, to: &str) -> Self {
        self.forbidden.insert((from.into(), to.into()));
        self
    }

    /// Forbids both orientations, i.e. removes the adjacency.
    pub fn remove_adjacency(self, a: &str, b: &str) -> Self {
        self.forbid(a, b).forbid(b, a)
    }
}

struct Resolved {
    required: BTreeSet<(NodeId, NodeId)>,
    forbidden: BTreeSet<(NodeId, NodeId)>,
    tier: BTreeMap<NodeId, usize>,
}

impl Resolved {
    fn allows(&self, a: NodeId, b: NodeId) -> bool {
        if self.forbidden.contains(&(a, b)) {
            return false;
        }
        match (self.tier.get(&a), self.tier.get(&b)) {
            (Some(ta), Some(tb)) => ta <= tb,
            _ => true,
        }
    }
}

fn resolve(g: &CausalGraph, k: &KnowledgeConstraints) -> Result<Resolved, GraphError> {
    let pair = |(a, b): &(String, String)| -> Result<(NodeId, NodeId), GraphError> {
        Ok((g.id(a)?, g.id(b)?))
    };
    let required = k.required.iter().map(pair).collect::<Result<BTreeSet<_>, _>>()?;
    let forbidden = k.forbidden.iter().map(pair).collect::<Result<BTreeSet<_>, _>>()?;
    let mut tier = BTreeMap::new();
    if let Some(tiers) = &k.tiers {
        for (i, members) in tiers.iter().enumerate() {
            for name in members {
                if tier.insert(g.id(name)?, i).is_some() {
                    return Err(GraphError::DuplicateNode(name.clone()));
                }
            }
        }
    }
    let r = Resolved {
        required,
        forbidden,
        tier,
    };
    for &(a, b) in &r.required {
        if r.required.contains(&(b, a)) {
            return Err(GraphError::Contradiction(g.pair_label(a, b)));
        }
        if !r.allows(a, b) {
            return Err(GraphError::Contradiction(g.edge_label(a, b)));
        }
        if !g.adjacent(a, b) {
            return Err(GraphError::RequiredNotAdjacent(g.edge_label(a, b)));
        }
    }
    Ok(r)
}

/// Applies expert constraints to a (partially) oriented graph and closes the
/// result under Meek's orientation rules.
///
/// Adjacencies whose two orientations are both disallowed are removed. Any
/// constraint that conflicts with an already directed edge, or that forces a
/// directed cycle, is reported with the offending edge.
pub fn apply_knowledge(g: &CausalGraph, k: &KnowledgeConstraints) -> Result<CausalGraph, GraphError> {
    let r = resolve(g, k)?;
    let mut out = g.clone();

    for (a, b) in g.skeleton() {
        let (ab, ba) = (r.allows(a, b), r.allows(b, a));
        let (req_ab, req_ba) = (r.required.contains(&(a, b)), r.required.contains(&(b, a)));
        if !ab && !ba {
            out.remove_edge(a, b);
            continue;
        }
        if g.has_directed(a, b) || g.has_directed(b, a) {
            let (from, to) = if g.has_directed(a, b) { (a, b) } else { (b, a) };
            let (fits, reversed_required) = if from == a { (ab, req_ba) } else { (ba, req_ab) };
            if !fits || reversed_required {
                return Err(GraphError::Contradiction(g.edge_label(from, to)));
            }
            continue;
        }
        if req_ab || !ba {
            out.orient(a, b);
        } else if req_ba || !ab {
            out.orient(b, a);
        }
    }

    if let Err(GraphError::Cycle(_)) = out.topological_order() {
        return Err(GraphError::Contradiction(cycle_edge(&out)));
    }
    meek_closure(&mut out, |a, b| r.allows(a, b))?;
    if out.topological_order().is_err() {
        return Err(GraphError::Contradiction(cycle_edge(&out)));
    }
    Ok(out)
}

/// Names one directed edge lying on a cycle.
fn cycle_edge(g: &CausalGraph) -> String {
    for (a, b) in g.directed_edges() {
        if g.has_directed_path(b, a) {
            return g.edge_label(a, b);
        }
    }
    String::from("<unknown>")
}

/// Orients undirected edges with Meek rules R1–R4 until nothing changes.
///
/// `allowed(a, b)` vetoes orientations; a rule that would force a vetoed
/// orientation is a contradiction.
pub fn meek_closure<F>(g: &mut CausalGraph, allowed: F) -> Result<(), GraphError>
where
    F: Fn(NodeId, NodeId) -> bool,
{
    loop {
        let mut changed = false;
        for (u, v) in g.undirected_edges() {
            for (a, b) in [(u, v), (v, u)] {
                if !g.has_undirected(a, b) {
                    continue;
                }
                if meek_forces(g, a, b) {
                    if !allowed(a, b) {
                        return Err(GraphError::Contradiction(g.edge_label(a, b)));
                    }
                    g.orient(a, b);
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Whether any Meek rule orients the undirected edge `a -- b` as `a -> b`.
fn meek_forces(g: &CausalGraph, a: NodeId, b: NodeId) -> bool {
    // R1: c -> a -- b, c and b non-adjacent
    if g.parents(a).iter().any(|&c| !g.adjacent(c, b)) {
        return true;
    }
    // R2: a -> c -> b
    if g.children(a).iter().any(|&c| g.has_directed(c, b)) {
        return true;
    }
    // R3: a -- c -> b, a -- d -> b, c and d non-adjacent
    let mids: Vec<NodeId> = g
        .neighbors(a)
        .iter()
        .copied()
        .filter(|&c| c != b && g.has_directed(c, b))
        .collect();
    for (i, &c) in mids.iter().enumerate() {
        if mids[i + 1..].iter().any(|&d| !g.adjacent(c, d)) {
            return true;
        }
    }
    // R4: a -- c -> d -> b, c and b non-adjacent, a adjacent to d
    for &c in g.neighbors(a) {
        if c == b || g.adjacent(c, b) {
            continue;
        }
        if g
            .children(c)
            .iter()
            .any(|&d| g.has_directed(d, b) && g.adjacent(a, d))
        {
            return true;
        }
    }
    false
}
