//! Back-door identification of total effects on a DAG.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{classify_paths, CausalGraph, GraphError, NodeId, PathDiagnostic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentifyError {
    #[error("treatment and outcome must differ ({0})")]
    SameNode(String),
    #[error("adjustment set must not contain {0}")]
    AdjustsEndpoint(String),
    #[error("identification supports at most 64 nodes, graph has {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Diagnostics beyond this many paths are dropped (and flagged).
pub const MAX_DIAGNOSTIC_PATHS: usize = 2000;

/// Everything needed to adjust for one treatment/outcome pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimand {
    pub treatment: String,
    pub outcome: String,
    /// Inclusion-minimal back-door sets, smallest first.
    pub minimal_adjustment_sets: Vec<Vec<String>>,
    /// The minimal sets of smallest cardinality.
    pub minimum_adjustment_sets: Vec<Vec<String>>,
    /// Descendants of the treatment; never valid adjustment variables.
    pub forbidden_nodes: Vec<String>,
    /// No directed path from treatment to outcome: the effect is zero.
    pub null_effect: bool,
    /// Simple treatment–outcome paths classified under the first minimal set.
    pub diagnostics: Vec<PathDiagnostic>,
    #[serde(default)]
    pub diagnostics_truncated: bool,
    pub expression: String,
}

impl Estimand {
    /// The set used by estimators: the first (smallest) minimal set.
    pub fn adjustment_set(&self) -> &[String] {
        self.minimal_adjustment_sets.first().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Bit-parallel view of a DAG for fast repeated validity checks.
struct Bits {
    parents: Vec<u64>,
    children: Vec<u64>,
}

impl Bits {
    fn new(g: &CausalGraph) -> Result<Self, IdentifyError> {
        if g.len() > 64 {
            return Err(IdentifyError::TooLarge(g.len()));
        }
        let mask = |s: &BTreeSet<NodeId>| s.iter().fold(0u64, |m, &v| m | (1 << v));
        Ok(Bits {
            parents: (0..g.len()).map(|v| mask(g.parents(v))).collect(),
            children: (0..g.len()).map(|v| mask(g.children(v))).collect(),
        })
    }

    fn closure(&self, start: u64, step: &[u64]) -> u64 {
        let mut seen = start;
        let mut frontier = start;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= step[v];
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen
    }

    /// Nodes reachable from `x` along back-door trails active given `z`.
    fn backdoor_reach(&self, x: usize, z: u64) -> u64 {
        let anc_z = self.closure(z, &self.parents);
        let x_bit = 1u64 << x;
        // up: arrived from a child; down: arrived from a parent
        let mut up = x_bit;
        let mut down = x_bit;
        let mut stack: Vec<(usize, bool)> = Vec::new();
        let push = |m: u64, is_up: bool, stack: &mut Vec<(usize, bool)>| {
            let mut m = m;
            while m != 0 {
                let v = m.trailing_zeros() as usize;
                m &= m - 1;
                stack.push((v, is_up));
            }
        };
        push(self.parents[x], true, &mut stack);
        let mut reached = 0u64;
        while let Some((v, is_up)) = stack.pop() {
            let bit = 1u64 << v;
            let seen = if is_up { &mut up } else { &mut down };
            if *seen & bit != 0 {
                continue;
            }
            *seen |= bit;
            let in_z = z & bit != 0;
            if !in_z {
                reached |= bit;
            }
            if is_up {
                if !in_z {
                    push(self.parents[v], true, &mut stack);
                    push(self.children[v], false, &mut stack);
                }
            } else {
                if !in_z {
                    push(self.children[v], false, &mut stack);
                }
                if anc_z & bit != 0 {
                    push(self.parents[v], true, &mut stack);
                }
            }
        }
        reached
    }

    fn valid(&self, x: usize, y: usize, z: u64, desc_x: u64) -> bool {
        z & desc_x == 0 && self.backdoor_reach(x, z) & (1 << y) == 0
    }
}

fn check_pair(g: &CausalGraph, x: NodeId, y: NodeId) -> Result<(), IdentifyError> {
    g.require_dag()?;
    for v in [x, y] {
        if v >= g.len() {
            return Err(GraphError::UnknownNode(format!("#{v}")).into());
        }
    }
    if x == y {
        return Err(IdentifyError::SameNode(g.name(x).into()));
    }
    Ok(())
}

/// Back-door criterion: `z` has no descendant of `x` and blocks every path
/// between `x` and `y` that starts with an arrow into `x`.
pub fn is_valid_adjustment(
    g: &CausalGraph,
    x: NodeId,
    y: NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<bool, IdentifyError> {
    check_pair(g, x, y)?;
    for v in [x, y] {
        if z.contains(&v) {
            return Err(IdentifyError::AdjustsEndpoint(g.name(v).into()));
        }
    }
    if let Some(&v) = z.iter().find(|&&v| v >= g.len()) {
        return Err(GraphError::UnknownNode(format!("#{v}")).into());
    }
    let bits = Bits::new(g)?;
    let desc = bits.closure(1 << x, &bits.children) & !(1 << x);
    let zm = z.iter().fold(0u64, |m, &v| m | (1 << v));
    Ok(bits.valid(x, y, zm, desc))
}

/// All inclusion-minimal back-door sets for `x → y`, sorted by size and then
/// by node names. The second value is the null-effect flag; when it is set
/// the list is empty.
///
/// Candidates are restricted to ancestors of `{x, y}` that are not
/// descendants of `x`.
pub fn minimal_adjustment_sets(
    g: &CausalGraph,
    x: NodeId,
    y: NodeId,
) -> Result<(Vec<BTreeSet<NodeId>>, bool), IdentifyError> {
    check_pair(g, x, y)?;
    if !g.has_directed_path(x, y) {
        return Ok((Vec::new(), true));
    }
    let bits = Bits::new(g)?;
    let desc = bits.closure(1 << x, &bits.children) & !(1 << x);
    let anc = bits.closure((1 << x) | (1 << y), &bits.parents);
    let mut candidates: Vec<NodeId> = (0..g.len())
        .filter(|&v| v != x && v != y && anc & (1 << v) != 0 && desc & (1 << v) == 0)
        .collect();
    candidates.sort_by(|a, b| g.name(*a).cmp(g.name(*b)));
    let k = candidates.len();

    let to_mask = |sub: u64| {
        let mut m = 0u64;
        let mut s = sub;
        while s != 0 {
            let i = s.trailing_zeros() as usize;
            s &= s - 1;
            m |= 1 << candidates[i];
        }
        m
    };

    // masks over candidate positions, grouped by size
    let mut found: Vec<u64> = Vec::new();
    for size in 0..=k {
        for sub in Combinations::new(k, size) {
            if found.iter().any(|&f| f & sub == f) {
                continue;
            }
            if bits.valid(x, y, to_mask(sub), desc) {
                found.push(sub);
            }
        }
        // once the empty set works nothing else is minimal
        if found.first() == Some(&0) {
            break;
        }
    }
    let mut sets: Vec<BTreeSet<NodeId>> = found
        .into_iter()
        .map(|sub| (0..k).filter(|i| sub & (1 << i) != 0).map(|i| candidates[i]).collect())
        .collect();
    sets.sort_by(|a, b| {
        let names = |s: &BTreeSet<NodeId>| {
            let mut v: Vec<&str> = s.iter().map(|&n| g.name(n)).collect();
            v.sort();
            v
        };
        a.len().cmp(&b.len()).then_with(|| names(a).cmp(&names(b)))
    });
    Ok((sets, false))
}

/// Fixed-size subsets of `0..n` as bitmasks in increasing numeric order
/// (Gosper's hack).
struct Combinations {
    n: usize,
    next: Option<u64>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let next = if k > n || n > 63 { None } else { Some((1u64 << k) - 1) };
        Combinations { n, next }
    }
}

impl Iterator for Combinations {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < (1u64 << self.n)).then_some(nxt)
        };
        Some(cur)
    }
}

/// Minimal sets, forbidden nodes and path diagnostics for `treatment → outcome`.
pub fn identify_estimand(g: &CausalGraph, treatment: &str, outcome: &str) -> Result<Estimand, IdentifyError> {
    let x = g.id(treatment)?;
    let y = g.id(outcome)?;
    let (sets, null_effect) = minimal_adjustment_sets(g, x, y)?;
    let names = |s: &BTreeSet<NodeId>| -> Vec<String> {
        let mut v: Vec<String> = s.iter().map(|&n| String::from(g.name(n))).collect();
        v.sort();
        v
    };
    let forbidden = g.descendants(&BTreeSet::from([x]));
    let chosen = sets.first().cloned().unwrap_or_default();
    let mut diagnostics = classify_paths(g, x, y, &chosen)?;
    let truncated = diagnostics.len() > MAX_DIAGNOSTIC_PATHS;
    diagnostics.truncate(MAX_DIAGNOSTIC_PATHS);

    let expression = if null_effect {
        format!("E[{outcome} | do({treatment})] = E[{outcome}]")
    } else if chosen.is_empty() {
        format!("E[{outcome} | do({treatment})] = E[{outcome} | {treatment}]")
    } else {
        let z = names(&chosen).join(", ");
        format!("E[{outcome} | do({treatment})] = E_{{{z}}}[ E[{outcome} | {treatment}, {z}] ]")
    };

    let smallest = sets.first().map_or(0, BTreeSet::len);
    Ok(Estimand {
        treatment: treatment.into(),
        outcome: outcome.into(),
        minimal_adjustment_sets: sets.iter().map(names).collect(),
        minimum_adjustment_sets: sets.iter().filter(|s| s.len() == smallest).map(names).collect(),
        forbidden_nodes: names(&forbidden),
        null_effect,
        diagnostics,
        diagnostics_truncated: truncated,
        expression,
    })
}
