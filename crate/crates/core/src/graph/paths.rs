use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CausalGraph, GraphError, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    /// `a -> v -> b` or `a <- v <- b`
    Chain,
    /// `a <- v -> b`
    Fork,
    /// `a -> v <- b`
    Collider,
}

/// One simple path between treatment and outcome with its blocking status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDiagnostic {
    pub nodes: Vec<String>,
    /// Role of each interior node, aligned with `nodes[1..len-1]`.
    pub roles: Vec<NodeRole>,
    pub conditioning: Vec<String>,
    pub open: bool,
    /// First edge points into the start node.
    pub is_backdoor: bool,
    /// Every edge points from start towards end.
    pub is_causal: bool,
}

/// Enumerates every simple path between `x` and `y` in a DAG and classifies it
/// given the conditioning set `zs`.
///
/// Paths are returned shortest first, ties broken by node names.
pub fn classify_paths(
    g: &CausalGraph,
    x: NodeId,
    y: NodeId,
    zs: &BTreeSet<NodeId>,
) -> Result<Vec<PathDiagnostic>, GraphError> {
    g.require_dag()?;
    if x >= g.len() || y >= g.len() {
        return Err(GraphError::UnknownNode(alloc::format!("#{}", x.max(y))));
    }
    if x == y {
        return Err(GraphError::NotDisjoint(g.name(x).into()));
    }
    let mut z_and_descendant_hits = BTreeSet::new();
    // a collider is open when it or one of its descendants is conditioned on,
    // i.e. when it is in zs or an ancestor of zs
    z_and_descendant_hits.extend(zs.iter().copied());
    z_and_descendant_hits.extend(g.ancestors(zs));

    let conditioning: Vec<String> = zs.iter().map(|&v| String::from(g.name(v))).collect();
    let mut out = Vec::new();
    for path in simple_paths(g, x, y) {
        let mut roles = Vec::with_capacity(path.len().saturating_sub(2));
        let mut open = true;
        for w in path.windows(3) {
            let (a, v, b) = (w[0], w[1], w[2]);
            let into_from_a = g.has_directed(a, v);
            let into_from_b = g.has_directed(b, v);
            let role = match (into_from_a, into_from_b) {
                (true, true) => NodeRole::Collider,
                (false, false) => NodeRole::Fork,
                _ => NodeRole::Chain,
            };
            let passes = match role {
                NodeRole::Collider => z_and_descendant_hits.contains(&v),
                _ => !zs.contains(&v),
            };
            open &= passes;
            roles.push(role);
        }
        let is_backdoor = g.has_directed(path[1], path[0]);
        let is_causal = path.windows(2).all(|w| g.has_directed(w[0], w[1]));
        out.push(PathDiagnostic {
            nodes: path.iter().map(|&v| String::from(g.name(v))).collect(),
            roles,
            conditioning: conditioning.clone(),
            open,
            is_backdoor,
            is_causal,
        });
    }
    out.sort_by(|a, b| a.nodes.len().cmp(&b.nodes.len()).then_with(|| a.nodes.cmp(&b.nodes)));
    Ok(out)
}

/// All simple paths in the skeleton from `x` to `y`.
pub(crate) fn simple_paths(g: &CausalGraph, x: NodeId, y: NodeId) -> Vec<Vec<NodeId>> {
    let adj: Vec<Vec<NodeId>> = (0..g.len()).map(|v| g.adjacents(v).into_iter().collect()).collect();
    let mut out = Vec::new();
    let mut path = alloc::vec![x];
    let mut on_path = alloc::vec![false; g.len()];
    on_path[x] = true;
    // explicit stack of neighbour cursors
    let mut cursor = alloc::vec![0usize];
    while let Some(&v) = path.last() {
        let i = *cursor.last().unwrap();
        if v == y {
            out.push(path.clone());
            path.pop();
            cursor.pop();
            on_path[v] = false;
            continue;
        }
        if i < adj[v].len() {
            *cursor.last_mut().unwrap() += 1;
            let w = adj[v][i];
            if !on_path[w] {
                on_path[w] = true;
                path.push(w);
                cursor.push(0);
            }
        } else {
            path.pop();
            cursor.pop();
            on_path[v] = false;
        }
    }
    out
}
