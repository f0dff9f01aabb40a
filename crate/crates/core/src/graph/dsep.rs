use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{CausalGraph, GraphError, NodeId};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Arrival {
    /// Reached from a child, travelling against edge direction.
    FromChild,
    /// Reached from a parent, travelling along edge direction.
    FromParent,
}

/// Tests whether `xs` and `ys` are d-separated by `zs` in a DAG.
///
/// Reachability over active trails: a non-collider passes the trail on iff it
/// is not in `zs`; a collider passes it on iff it is in `zs` or has a
/// descendant there.
pub fn is_d_separated(
    g: &CausalGraph,
    xs: &BTreeSet<NodeId>,
    ys: &BTreeSet<NodeId>,
    zs: &BTreeSet<NodeId>,
) -> Result<bool, GraphError> {
    g.require_dag()?;
    check_disjoint(g, xs, ys, zs)?;
    let reached = reachable(g, xs, zs, true);
    Ok(ys.iter().all(|y| !reached.contains(y)))
}

pub(super) fn check_disjoint(
    g: &CausalGraph,
    xs: &BTreeSet<NodeId>,
    ys: &BTreeSet<NodeId>,
    zs: &BTreeSet<NodeId>,
) -> Result<(), GraphError> {
    for &v in xs.iter().chain(ys.iter()).chain(zs.iter()) {
        if v >= g.len() {
            return Err(GraphError::UnknownNode(alloc::format!("#{v}")));
        }
    }
    let overlap = xs
        .intersection(ys)
        .chain(xs.intersection(zs))
        .chain(ys.intersection(zs))
        .next();
    match overlap {
        Some(&v) => Err(GraphError::NotDisjoint(g.name(v).into())),
        None => Ok(()),
    }
}

/// Nodes reachable from `sources` along trails active given `zs`.
///
/// With `leave_via_children == false` the walk may only leave a source through
/// its parents, which restricts it to back-door trails.
pub(crate) fn reachable(
    g: &CausalGraph,
    sources: &BTreeSet<NodeId>,
    zs: &BTreeSet<NodeId>,
    leave_via_children: bool,
) -> BTreeSet<NodeId> {
    let mut z_and_ancestors = g.ancestors(zs);
    z_and_ancestors.extend(zs.iter().copied());

    let mut visited: BTreeSet<(NodeId, Arrival)> = BTreeSet::new();
    let mut reached = BTreeSet::new();
    let mut stack: Vec<(NodeId, Arrival)> = Vec::new();

    for &s in sources {
        visited.insert((s, Arrival::FromChild));
        for &p in g.parents(s) {
            stack.push((p, Arrival::FromChild));
        }
        if leave_via_children {
            visited.insert((s, Arrival::FromParent));
            for &c in g.children(s) {
                stack.push((c, Arrival::FromParent));
            }
        }
    }

    while let Some((v, arrival)) = stack.pop() {
        if !visited.insert((v, arrival)) {
            continue;
        }
        if sources.contains(&v) {
            continue;
        }
        let observed = zs.contains(&v);
        if !observed {
            reached.insert(v);
        }
        match arrival {
            Arrival::FromChild if !observed => {
                for &p in g.parents(v) {
                    stack.push((p, Arrival::FromChild));
                }
                for &c in g.children(v) {
                    stack.push((c, Arrival::FromParent));
                }
            }
            Arrival::FromChild => {}
            Arrival::FromParent => {
                if !observed {
                    for &c in g.children(v) {
                        stack.push((c, Arrival::FromParent));
                    }
                }
                if z_and_ancestors.contains(&v) {
                    for &p in g.parents(v) {
                        stack.push((p, Arrival::FromChild));
                    }
                }
            }
        }
    }
    reached
}
