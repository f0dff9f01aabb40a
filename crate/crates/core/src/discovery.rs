//! Score-based structure learning: linear-Gaussian BIC and Greedy Equivalence
//! Search over CPDAGs.
//!
//! Local scores are computed from the sample covariance matrix: for a target
//! `y` and parents `X`, the least-squares residual variance with intercept is
//! `S_yy - S_yX S_XX⁻¹ S_Xy`. The search follows Chickering's two-phase
//! scheme: repeatedly apply the best valid Insert operator, then the best
//! valid Delete operator, re-canonicalising the equivalence class after every
//! step.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::graph::{meek_closure, CausalGraph, GraphError, NodeId};
use crate::linalg::solve_spd;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscoveryError {
    #[error("need at least two variables, got {0}")]
    TooFewVariables(usize),
    #[error("need more rows than parents + 2 (n = {n}, parents = {parents})")]
    TooFewRows { n: usize, parents: usize },
    #[error("target {0} listed among its own parents")]
    TargetInParents(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("column {0} has zero variance")]
    ConstantColumn(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Data(#[from] crate::dataset::DatasetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GesConfig {
    /// Scales the BIC complexity term.
    pub penalty_multiplier: f64,
    pub max_parents: usize,
    /// Score on z-scored columns.
    pub standardize: bool,
    /// Lower bound on the residual variance inside the log-likelihood.
    pub variance_floor: f64,
}

impl Default for GesConfig {
    fn default() -> Self {
        GesConfig {
            penalty_multiplier: 1.0,
            max_parents: 12,
            standardize: true,
            variance_floor: 1e-12,
        }
    }
}

impl GesConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if !(self.penalty_multiplier >= 0.0 && self.penalty_multiplier.is_finite()) {
            return Err(DiscoveryError::InvalidConfig("penalty_multiplier must be ≥ 0".into()));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor <= 1e-6) {
            return Err(DiscoveryError::InvalidConfig("variance_floor must lie in (0, 1e-6]".into()));
        }
        Ok(())
    }
}

/// Memo of local scores keyed by `(target, sorted parents)`.
#[derive(Debug, Clone, Default)]
pub struct ScoreCache {
    map: BTreeMap<(usize, Vec<usize>), f64>,
    pub hits: u64,
    pub misses: u64,
}

impl ScoreCache {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Decomposable BIC over one dataset.
#[derive(Debug, Clone)]
pub struct BicScorer {
    n: usize,
    p: usize,
    names: Vec<String>,
    /// Biased (1/n) covariance, row-major `p × p`.
    cov: Vec<f64>,
    config: GesConfig,
    cache: ScoreCache,
}

impl BicScorer {
    pub fn new(ds: &Dataset, config: &GesConfig) -> Result<Self, DiscoveryError> {
        config.validate()?;
        let (n, p) = (ds.n(), ds.p());
        let mut means = alloc::vec![0.0; p];
        for row in ds.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n.max(1) as f64;
        }
        let mut cov = alloc::vec![0.0; p * p];
        let mut centred = alloc::vec![0.0; p];
        for row in ds.rows() {
            for j in 0..p {
                centred[j] = row[j] - means[j];
            }
            for a in 0..p {
                for b in a..p {
                    cov[a * p + b] += centred[a] * centred[b];
                }
            }
        }
        for a in 0..p {
            for b in a..p {
                let v = cov[a * p + b] / n.max(1) as f64;
                cov[a * p + b] = v;
                cov[b * p + a] = v;
            }
        }
        if config.standardize {
            let sd: Vec<f64> = (0..p).map(|i| libm::sqrt(cov[i * p + i])).collect();
            for (i, s) in sd.iter().enumerate() {
                if !(*s > 0.0) {
                    return Err(DiscoveryError::ConstantColumn(ds.columns()[i].name.clone()));
                }
            }
            for a in 0..p {
                for b in 0..p {
                    cov[a * p + b] /= sd[a] * sd[b];
                }
            }
        }
        Ok(BicScorer {
            n,
            p,
            names: ds.names(),
            cov,
            config: config.clone(),
            cache: ScoreCache::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    /// Residual variance of `target` regressed on `parents` (with intercept).
    fn residual_variance(&self, target: usize, parents: &[usize]) -> f64 {
        let p = self.p;
        let k = parents.len();
        let syy = self.cov[target * p + target];
        if k == 0 {
            return syy;
        }
        let mut sxx = alloc::vec![0.0; k * k];
        let mut sxy = alloc::vec![0.0; k];
        for (i, &a) in parents.iter().enumerate() {
            sxy[i] = self.cov[a * p + target];
            for (j, &b) in parents.iter().enumerate() {
                sxx[i * k + j] = self.cov[a * p + b];
            }
        }
        let (beta, _) = solve_spd(&sxx, &sxy, k);
        syy - beta.iter().zip(&sxy).map(|(b, c)| b * c).sum::<f64>()
    }

    /// `−(n/2)·ln(max(RSS/n, floor)) − λ·((|parents|+1)/2)·ln(n)`.
    pub fn local(&mut self, target: usize, parents: &BTreeSet<usize>) -> Result<f64, DiscoveryError> {
        if parents.contains(&target) {
            return Err(DiscoveryError::TargetInParents(self.names[target].clone()));
        }
        let k = parents.len();
        if self.n <= k + 2 {
            return Err(DiscoveryError::TooFewRows {
                n: self.n,
                parents: k,
            });
        }
        let key = (target, parents.iter().copied().collect::<Vec<_>>());
        if let Some(&s) = self.cache.map.get(&key) {
            self.cache.hits += 1;
            return Ok(s);
        }
        self.cache.misses += 1;
        let var = self.residual_variance(target, &key.1);
        let n = self.n as f64;
        let score = -(n / 2.0) * libm::log(var.max(self.config.variance_floor))
            - self.config.penalty_multiplier * ((k as f64 + 1.0) / 2.0) * libm::log(n);
        self.cache.map.insert(key, score);
        Ok(score)
    }

    /// Sum of local scores of a DAG.
    pub fn graph_score(&mut self, g: &CausalGraph) -> Result<f64, DiscoveryError> {
        g.require_dag()?;
        let mut total = 0.0;
        for v in 0..g.len() {
            total += self.local(v, g.parents(v))?;
        }
        Ok(total)
    }
}

/// BIC of `target` given `parents`, by column name.
pub fn local_bic(ds: &Dataset, target: &str, parents: &[&str], config: &GesConfig) -> Result<f64, DiscoveryError> {
    let t = ds.column_index(target)?;
    let pa = parents
        .iter()
        .map(|p| ds.column_index(p))
        .collect::<Result<BTreeSet<_>, _>>()?;
    BicScorer::new(ds, config)?.local(t, &pa)
}

/// Completed PDAG of a DAG: skeleton, v-structures, then Meek closure.
pub fn cpdag_of_dag(dag: &CausalGraph) -> Result<CausalGraph, DiscoveryError> {
    dag.require_dag()?;
    let mut out = dag.empty_like();
    for (a, b) in dag.skeleton() {
        out.add_undirected(a, b)?;
    }
    for v in 0..dag.len() {
        let parents: Vec<NodeId> = dag.parents(v).iter().copied().collect();
        for (i, &a) in parents.iter().enumerate() {
            for &b in &parents[i + 1..] {
                if !dag.adjacent(a, b) {
                    out.orient(a, v);
                    out.orient(b, v);
                }
            }
        }
    }
    meek_closure(&mut out, |_, _| true)?;
    Ok(out)
}

/// A DAG in the class represented by a PDAG (Dor–Tarsi), if one exists.
pub fn consistent_extension(pdag: &CausalGraph) -> Option<CausalGraph> {
    let mut work = pdag.clone();
    let mut dag = pdag.clone();
    let mut alive: BTreeSet<NodeId> = (0..pdag.len()).collect();
    while !alive.is_empty() {
        let pick = alive.iter().copied().find(|&v| {
            if !work.children(v).is_empty() {
                return false;
            }
            let adj = work.adjacents(v);
            work.neighbors(v)
                .iter()
                .all(|&u| adj.iter().all(|&w| w == u || work.adjacent(u, w)))
        })?;
        for u in work.neighbors(pick).clone() {
            dag.orient(u, pick);
        }
        for u in work.adjacents(pick) {
            work.remove_edge(u, pick);
        }
        alive.remove(&pick);
    }
    Some(dag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Forward,
    Backward,
}

/// One accepted search step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    pub phase: Phase,
    /// `insert` or `delete`.
    pub operator: String,
    pub from: String,
    pub to: String,
    /// `T` for insert, `H` for delete.
    pub subset: Vec<String>,
    pub delta: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub graph: CausalGraph,
    pub operators: Vec<OperatorRecord>,
    /// Total score after each accepted operator, starting with the empty graph.
    pub score_trajectory: Vec<f64>,
    pub final_score: f64,
    pub n: usize,
    pub p: usize,
    pub config: GesConfig,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

struct Candidate {
    delta: f64,
    from: NodeId,
    to: NodeId,
    subset: Vec<NodeId>,
}

fn is_clique(g: &CausalGraph, nodes: &[NodeId]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(i, &a)| nodes[i + 1..].iter().all(|&b| g.adjacent(a, b)))
}

/// Whether a semi-directed path `from ⇝ to` exists that avoids `blocked`.
fn semi_directed_path(g: &CausalGraph, from: NodeId, to: NodeId, blocked: &BTreeSet<NodeId>) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut stack = alloc::vec![from];
    while let Some(u) = stack.pop() {
        for &w in g.children(u).iter().chain(g.neighbors(u).iter()) {
            if w == to {
                return true;
            }
            if !blocked.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    false
}

fn subsets(items: &[NodeId]) -> impl Iterator<Item = Vec<NodeId>> + '_ {
    let count = 1u64 << items.len();
    (0..count).map(move |mask| {
        items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &v)| v)
            .collect()
    })
}

/// Largest neighbour set whose subsets are enumerated exhaustively.
const MAX_SUBSET_BASE: usize = 16;

struct Search<'a> {
    scorer: &'a mut BicScorer,
    order: Vec<NodeId>,
    max_parents: usize,
}

impl Search<'_> {
    fn best_insert(&mut self, g: &CausalGraph) -> Result<Option<Candidate>, DiscoveryError> {
        let mut best: Option<Candidate> = None;
        for &x in &self.order {
            for &y in &self.order {
                if x == y || g.adjacent(x, y) {
                    continue;
                }
                let adj_x = g.adjacents(x);
                let na: Vec<NodeId> = g.neighbors(y).iter().copied().filter(|v| adj_x.contains(v)).collect();
                let mut t0: Vec<NodeId> =
                    g.neighbors(y).iter().copied().filter(|v| !adj_x.contains(v)).collect();
                t0.sort_by(|a, b| g.name(*a).cmp(g.name(*b)));
                t0.truncate(MAX_SUBSET_BASE);
                for t in subsets(&t0) {
                    let mut cond: BTreeSet<NodeId> = na.iter().copied().collect();
                    cond.extend(t.iter().copied());
                    let cond_vec: Vec<NodeId> = cond.iter().copied().collect();
                    if !is_clique(g, &cond_vec) {
                        continue;
                    }
                    let mut base = g.parents(y).clone();
                    base.extend(cond.iter().copied());
                    if base.len() + 1 > self.max_parents {
                        continue;
                    }
                    if semi_directed_path(g, y, x, &cond) {
                        continue;
                    }
                    let mut with = base.clone();
                    with.insert(x);
                    let delta = self.scorer.local(y, &with)? - self.scorer.local(y, &base)?;
                    if best.as_ref().map_or(true, |b| delta > b.delta) {
                        best = Some(Candidate {
                            delta,
                            from: x,
                            to: y,
                            subset: t,
                        });
                    }
                }
            }
        }
        Ok(best)
    }

    fn best_delete(&mut self, g: &CausalGraph) -> Result<Option<Candidate>, DiscoveryError> {
        let mut best: Option<Candidate> = None;
        for &x in &self.order {
            for &y in &self.order {
                if !(g.has_directed(x, y) || g.has_undirected(x, y)) {
                    continue;
                }
                let adj_x = g.adjacents(x);
                let mut na: Vec<NodeId> = g.neighbors(y).iter().copied().filter(|v| adj_x.contains(v)).collect();
                na.sort_by(|a, b| g.name(*a).cmp(g.name(*b)));
                na.truncate(MAX_SUBSET_BASE);
                for h in subsets(&na) {
                    let rest: Vec<NodeId> = na.iter().copied().filter(|v| !h.contains(v)).collect();
                    if !is_clique(g, &rest) {
                        continue;
                    }
                    let mut without = g.parents(y).clone();
                    without.remove(&x);
                    without.extend(rest.iter().copied());
                    let mut with = without.clone();
                    with.insert(x);
                    let delta = self.scorer.local(y, &without)? - self.scorer.local(y, &with)?;
                    if best.as_ref().map_or(true, |b| delta > b.delta) {
                        best = Some(Candidate {
                            delta,
                            from: x,
                            to: y,
                            subset: h,
                        });
                    }
                }
            }
        }
        Ok(best)
    }
}

fn recanonicalise(g: &CausalGraph) -> Result<CausalGraph, DiscoveryError> {
    let dag = consistent_extension(g).ok_or_else(|| {
        DiscoveryError::Graph(GraphError::Contradiction(String::from("no consistent extension")))
    })?;
    cpdag_of_dag(&dag)
}

/// Greedy Equivalence Search over all columns of `ds`.
pub fn ges_discover(ds: &Dataset, config: &GesConfig) -> Result<DiscoveryReport, DiscoveryError> {
    let p = ds.p();
    if p < 2 {
        return Err(DiscoveryError::TooFewVariables(p));
    }
    if ds.n() < 10 * p {
        log::warn!("GES on {} rows for {} variables; at least {} recommended", ds.n(), p, 10 * p);
    }
    let mut scorer = BicScorer::new(ds, config)?;
    let mut g = CausalGraph::new(ds.names())?;
    let mut order: Vec<NodeId> = (0..p).collect();
    order.sort_by(|a, b| g.name(*a).cmp(g.name(*b)));

    let mut score = 0.0;
    for v in 0..p {
        score += scorer.local(v, &BTreeSet::new())?;
    }
    let mut trajectory = alloc::vec![score];
    let mut operators = Vec::new();
    let max_parents = config.max_parents;

    for phase in [Phase::Forward, Phase::Backward] {
        loop {
            let mut search = Search {
                scorer: &mut scorer,
                order: order.clone(),
                max_parents,
            };
            let best = match phase {
                Phase::Forward => search.best_insert(&g)?,
                Phase::Backward => search.best_delete(&g)?,
            };
            let Some(c) = best.filter(|c| c.delta > 0.0) else {
                break;
            };
            match phase {
                Phase::Forward => {
                    g.add_directed(c.from, c.to)?;
                    for &t in &c.subset {
                        g.orient(t, c.to);
                    }
                }
                Phase::Backward => {
                    g.remove_edge(c.from, c.to);
                    for &h in &c.subset {
                        g.orient(c.to, h);
                        if g.has_undirected(c.from, h) {
                            g.orient(c.from, h);
                        }
                    }
                }
            }
            g = recanonicalise(&g)?;
            score += c.delta;
            trajectory.push(score);
            operators.push(OperatorRecord {
                phase,
                operator: String::from(if phase == Phase::Forward { "insert" } else { "delete" }),
                from: g.name(c.from).into(),
                to: g.name(c.to).into(),
                subset: c.subset.iter().map(|&v| String::from(g.name(v))).collect(),
                delta: c.delta,
                score,
            });
        }
    }

    Ok(DiscoveryReport {
        graph: g,
        operators,
        score_trajectory: trajectory,
        final_score: score,
        n: ds.n(),
        p,
        config: config.clone(),
        cache_hits: scorer.cache.hits,
        cache_misses: scorer.cache.misses,
    })
}
