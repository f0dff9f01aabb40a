//! Interventional effect estimation on a fitted structural causal model.
//!
//! Every node with parents gets a least-squares equation on (optionally
//! degree-2 expanded) z-scored parent values; nodes without parents are
//! resampled from the training rows. `do()` fixes a node and ignores its
//! equation; conditions pin pre-treatment nodes. Effects are computed on
//! paired draws so both arms share every random input.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::graph::{CausalGraph, GraphError, NodeId};
use crate::linalg::{least_squares, LinearFit};
use crate::rng::{self, purpose};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("graph node {0} is not a dataset column")]
    MissingColumn(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("post-treatment conditioning: {condition} is a descendant of {treatment}")]
    PostTreatment { condition: String, treatment: String },
    #[error("{0} is both intervened on and conditioned")]
    PinnedTwice(String),
    #[error("conditions must not include the {role} {name}")]
    ConditionOnEndpoint { role: &'static str, name: String },
    #[error("{name} = {value} lies outside [{min}, {max}]")]
    OutOfBounds { name: String, value: f64, min: f64, max: f64 },
    #[error("{0} must not be empty for this estimator")]
    MissingConditions(&'static str),
    #[error("ATE takes no conditions; use CATE")]
    UnexpectedConditions,
    #[error("n_samples must be positive")]
    NoSamples,
    #[error("cannot fit on an empty dataset")]
    EmptyData,
    #[error("non-finite value {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Data(#[from] DatasetError),
}

/// Feature map applied to a node's z-scored parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expansion {
    Linear,
    /// Parents, squares and pairwise products.
    #[default]
    Interactions2,
}

impl Expansion {
    pub fn feature_count(self, k: usize) -> usize {
        match self {
            Expansion::Linear => k,
            Expansion::Interactions2 => k + k * (k + 1) / 2,
        }
    }

    fn expand(self, z: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(z);
        if self == Expansion::Interactions2 {
            for i in 0..z.len() {
                for j in i..z.len() {
                    out.push(z[i] * z[j]);
                }
            }
        }
    }
}

impl core::str::FromStr for Expansion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Expansion::Linear),
            "interactions2" => Ok(Expansion::Interactions2),
            other => Err(alloc::format!("unknown expansion {other} (linear | interactions2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct NodeModel {
    parents: Vec<NodeId>,
    means: Vec<f64>,
    scales: Vec<f64>,
    fit: LinearFit,
    residuals: Vec<f64>,
    r_squared: f64,
}

impl NodeModel {
    fn predict(&self, values: &[f64], expansion: Expansion, buf: &mut (Vec<f64>, Vec<f64>)) -> f64 {
        let (z, feats) = buf;
        z.clear();
        for (i, &p) in self.parents.iter().enumerate() {
            z.push((values[p] - self.means[i]) / self.scales[i]);
        }
        expansion.expand(z, feats);
        self.fit.predict(feats)
    }
}

/// Fit quality of one structural equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFitSummary {
    pub node: String,
    pub parents: Vec<String>,
    pub features: usize,
    pub r_squared: f64,
    pub residual_std: f64,
    pub damped: bool,
}

/// A DAG with one regression per endogenous node and empirical marginals for
/// the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedScm {
    graph: CausalGraph,
    expansion: Expansion,
    order: Vec<NodeId>,
    models: Vec<Option<NodeModel>>,
    /// Training rows restricted to graph nodes, row-major `n × |graph|`.
    rows: Vec<f64>,
    n: usize,
    bounds: Vec<Option<(f64, f64)>>,
    training: Dataset,
}

/// Fits every structural equation of `dag` on `ds`.
pub fn fit_scm(ds: &Dataset, dag: &CausalGraph, expansion: Expansion) -> Result<FittedScm, EstimationError> {
    dag.require_dag()?;
    if ds.n() == 0 {
        return Err(EstimationError::EmptyData);
    }
    let p = dag.len();
    let cols: Vec<usize> = dag
        .names()
        .iter()
        .map(|name| ds.column_index(name).map_err(|_| EstimationError::MissingColumn(name.clone())))
        .collect::<Result<_, _>>()?;
    let n = ds.n();
    let mut rows = Vec::with_capacity(n * p);
    for r in 0..n {
        for &c in &cols {
            rows.push(ds.value(r, c));
        }
    }
    let bounds = cols.iter().map(|&c| ds.columns()[c].bounds).collect();

    let mut models = Vec::with_capacity(p);
    let mut buf = (Vec::new(), Vec::new());
    for v in 0..p {
        let parents: Vec<NodeId> = dag.parents(v).iter().copied().collect();
        if parents.is_empty() {
            models.push(None);
            continue;
        }
        let k = parents.len();
        let mut means = alloc::vec![0.0; k];
        let mut scales = alloc::vec![1.0; k];
        for (i, &u) in parents.iter().enumerate() {
            let col: Vec<f64> = (0..n).map(|r| rows[r * p + u]).collect();
            means[i] = stats::mean(&col);
            let sd = stats::std_dev(&col);
            if sd > 0.0 {
                scales[i] = sd;
            }
        }
        let f = expansion.feature_count(k);
        let mut x = Vec::with_capacity(n * f);
        let mut y = Vec::with_capacity(n);
        for r in 0..n {
            let row = &rows[r * p..(r + 1) * p];
            let (z, feats) = &mut buf;
            z.clear();
            z.extend(parents.iter().enumerate().map(|(i, &u)| (row[u] - means[i]) / scales[i]));
            expansion.expand(z, feats);
            x.extend_from_slice(feats);
            y.push(row[v]);
        }
        let fit = least_squares(&x, &y, f);
        if fit.damped {
            log::warn!("ridge-damped fit for {} ({} features)", dag.name(v), f);
        }
        let model = NodeModel {
            parents,
            means,
            scales,
            fit,
            residuals: Vec::new(),
            r_squared: 0.0,
        };
        let pred: Vec<f64> = (0..n)
            .map(|r| model.predict(&rows[r * p..(r + 1) * p], expansion, &mut buf))
            .collect();
        let residuals: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let r_squared = stats::r_squared(&y, &pred);
        models.push(Some(NodeModel {
            residuals,
            r_squared,
            ..model
        }));
    }
    Ok(FittedScm {
        graph: dag.clone(),
        expansion,
        order: dag.topological_order()?,
        models,
        rows,
        n,
        bounds,
        training: ds.clone(),
    })
}

/// Rows drawn by [`simulate_do`], columns in graph order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

/// Shared random inputs for one simulated unit.
struct UnitDraw {
    row: usize,
    /// Residual index per node; empty when simulating without noise.
    residual: Vec<usize>,
}

impl FittedScm {
    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn expansion(&self) -> Expansion {
        self.expansion
    }

    pub fn training_rows(&self) -> usize {
        self.n
    }

    pub fn is_exogenous(&self, name: &str) -> Result<bool, EstimationError> {
        Ok(self.models[self.node(name)?].is_none())
    }

    fn node(&self, name: &str) -> Result<NodeId, EstimationError> {
        self.graph.id(name).map_err(|_| EstimationError::UnknownNode(name.into()))
    }

    pub fn fit_summary(&self) -> Vec<NodeFitSummary> {
        self.models
            .iter()
            .enumerate()
            .filter_map(|(v, m)| {
                let m = m.as_ref()?;
                Some(NodeFitSummary {
                    node: self.graph.name(v).into(),
                    parents: m.parents.iter().map(|&u| String::from(self.graph.name(u))).collect(),
                    features: m.fit.coefficients.len(),
                    r_squared: m.r_squared,
                    residual_std: stats::std_dev(&m.residuals),
                    damped: m.fit.damped,
                })
            })
            .collect()
    }

    /// In-sample R² of a node's equation; `None` for exogenous nodes.
    pub fn node_r_squared(&self, name: &str) -> Result<Option<f64>, EstimationError> {
        Ok(self.models[self.node(name)?].as_ref().map(|m| m.r_squared))
    }

    fn check_bounds(&self, v: NodeId, value: f64) -> Result<(), EstimationError> {
        if !value.is_finite() {
            return Err(EstimationError::NonFinite("pinned value"));
        }
        if let Some((min, max)) = self.bounds[v] {
            if value < min || value > max {
                return Err(EstimationError::OutOfBounds {
                    name: self.graph.name(v).into(),
                    value,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    /// Resolves and checks `do` and `conditions`; returns pins by node id.
    fn pins(
        &self,
        interventions: &BTreeMap<String, f64>,
        conditions: &BTreeMap<String, f64>,
    ) -> Result<(BTreeMap<NodeId, f64>, BTreeMap<NodeId, f64>), EstimationError> {
        let mut d = BTreeMap::new();
        for (name, &v) in interventions {
            let id = self.node(name)?;
            self.check_bounds(id, v)?;
            d.insert(id, v);
        }
        let mut c = BTreeMap::new();
        for (name, &v) in conditions {
            let id = self.node(name)?;
            if d.contains_key(&id) {
                return Err(EstimationError::PinnedTwice(name.clone()));
            }
            self.check_bounds(id, v)?;
            c.insert(id, v);
        }
        for &t in d.keys() {
            let desc = self.graph.descendants(&BTreeSet::from([t]));
            if let Some(&bad) = c.keys().find(|v| desc.contains(v)) {
                return Err(EstimationError::PostTreatment {
                    condition: self.graph.name(bad).into(),
                    treatment: self.graph.name(t).into(),
                });
            }
        }
        for (&v, _) in &c {
            if self.models[v].is_some() {
                log::warn!(
                    "condition on {} which has parents in the graph; it is pinned, its ancestors are not updated",
                    self.graph.name(v)
                );
            }
        }
        Ok((d, c))
    }

    fn draw_units(&self, n: usize, seed: u64, noise: bool) -> Vec<UnitDraw> {
        let mut rows = rng::stream(seed, purpose::COVARIATES);
        let mut res = rng::stream(seed, purpose::RESIDUALS);
        (0..n)
            .map(|_| UnitDraw {
                row: rows.random_range(0..self.n),
                residual: if noise {
                    (0..self.graph.len()).map(|_| res.random_range(0..self.n)).collect()
                } else {
                    Vec::new()
                },
            })
            .collect()
    }

    /// Ancestral pass for one unit with `pins` fixed.
    fn evaluate(&self, draw: &UnitDraw, pins: &BTreeMap<NodeId, f64>, out: &mut [f64], buf: &mut (Vec<f64>, Vec<f64>)) {
        let p = self.graph.len();
        let source = &self.rows[draw.row * p..(draw.row + 1) * p];
        for &v in &self.order {
            out[v] = if let Some(&x) = pins.get(&v) {
                x
            } else {
                match &self.models[v] {
                    None => source[v],
                    Some(m) => {
                        let noise = draw.residual.get(v).map_or(0.0, |&i| m.residuals[i]);
                        m.predict(out, self.expansion, buf) + noise
                    }
                }
            };
        }
    }

    fn refit(&self, ds: &Dataset) -> Result<FittedScm, EstimationError> {
        fit_scm(ds, &self.graph, self.expansion)
    }
}

/// Ancestral sampling under `do(interventions)` with `conditions` pinned.
pub fn simulate_do(
    scm: &FittedScm,
    interventions: &BTreeMap<String, f64>,
    conditions: &BTreeMap<String, f64>,
    n: usize,
    seed: u64,
    noise: bool,
) -> Result<SampleMatrix, EstimationError> {
    if n == 0 {
        return Err(EstimationError::NoSamples);
    }
    let (mut pins, c) = scm.pins(interventions, conditions)?;
    pins.extend(c);
    let mut buf = (Vec::new(), Vec::new());
    let rows = scm
        .draw_units(n, seed, noise)
        .iter()
        .map(|d| {
            let mut out = alloc::vec![0.0; scm.graph.len()];
            scm.evaluate(d, &pins, &mut out, &mut buf);
            out
        })
        .collect();
    Ok(SampleMatrix {
        columns: scm.graph.names().to_vec(),
        rows,
    })
}

fn default_samples() -> usize {
    2000
}

fn default_bootstrap() -> usize {
    30
}

/// A what-if query: move `treatment` from `control_value` to
/// `treatment_value` and watch `outcome`, optionally within a stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub treatment: String,
    pub control_value: f64,
    pub treatment_value: f64,
    pub outcome: String,
    #[serde(default)]
    pub conditions: BTreeMap<String, f64>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Bootstrap refits used for the standard error; 0 reports the Monte
    /// Carlo error of the unit effects only.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Add resampled residuals to every structural equation.
    #[serde(default)]
    pub noise: bool,
}

impl Scenario {
    pub fn new(treatment: &str, control_value: f64, treatment_value: f64, outcome: &str) -> Self {
        Scenario {
            treatment: treatment.into(),
            control_value,
            treatment_value,
            outcome: outcome.into(),
            conditions: BTreeMap::new(),
            n_samples: default_samples(),
            seed: 0,
            bootstrap: default_bootstrap(),
            noise: false,
        }
    }

    pub fn condition(mut self, name: &str, value: f64) -> Self {
        self.conditions.insert(name.into(), value);
        self
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        if self.n_samples == 0 {
            return Err(EstimationError::NoSamples);
        }
        if !(self.control_value.is_finite() && self.treatment_value.is_finite()) {
            return Err(EstimationError::NonFinite("treatment value"));
        }
        for (role, name) in [("treatment", &self.treatment), ("outcome", &self.outcome)] {
            if self.conditions.contains_key(name) {
                return Err(EstimationError::ConditionOnEndpoint {
                    role,
                    name: name.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub const HISTOGRAM_BINS: usize = 40;
pub const CDF_POINTS: usize = 101;

impl Histogram {
    pub fn of(sorted: &[f64], bins: usize) -> Self {
        let (mut lo, mut hi) = stats::min_max(sorted);
        if sorted.is_empty() {
            lo = 0.0;
            hi = 0.0;
        }
        if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = alloc::vec![0; bins];
        for &v in sorted {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Histogram { edges, counts }
    }
}

/// Point of the empirical cumulative distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub method: String,
    pub treatment: String,
    pub outcome: String,
    pub control_value: f64,
    pub treatment_value: f64,
    pub conditions: BTreeMap<String, f64>,
    pub seed: u64,
    /// Mean of `unit_effects`.
    pub tau: f64,
    pub standard_error: f64,
    pub n: usize,
    /// Per-unit `ŷᵗ − ŷᶜ`, sorted ascending.
    pub unit_effects: Vec<f64>,
    pub p5: f64,
    pub p95: f64,
    pub cumulative: Vec<CdfPoint>,
    pub histogram: Histogram,
}

impl EffectEstimate {
    /// Summarises unit effects; `standard_error` defaults to the Monte Carlo
    /// error of their mean.
    pub fn from_unit_effects(method: &str, scenario: &Scenario, effects: &[f64], standard_error: Option<f64>) -> Self {
        let sorted = stats::sorted(effects);
        let n = sorted.len();
        let tau = stats::mean(&sorted);
        let mc = if n > 1 {
            stats::std_dev(&sorted) / libm::sqrt(n as f64)
        } else {
            0.0
        };
        let cumulative = (0..CDF_POINTS)
            .map(|i| {
                let q = i as f64 / (CDF_POINTS - 1) as f64;
                CdfPoint {
                    value: stats::quantile_sorted(&sorted, q),
                    fraction: q,
                }
            })
            .collect();
        EffectEstimate {
            method: method.into(),
            treatment: scenario.treatment.clone(),
            outcome: scenario.outcome.clone(),
            control_value: scenario.control_value,
            treatment_value: scenario.treatment_value,
            conditions: scenario.conditions.clone(),
            seed: scenario.seed,
            tau,
            standard_error: standard_error.unwrap_or(mc),
            n,
            p5: stats::quantile_sorted(&sorted, 0.05),
            p95: stats::quantile_sorted(&sorted, 0.95),
            cumulative,
            histogram: Histogram::of(&sorted, HISTOGRAM_BINS),
            unit_effects: sorted,
        }
    }
}

fn paired_effects(scm: &FittedScm, sc: &Scenario, seed: u64) -> Result<Vec<f64>, EstimationError> {
    let t = scm.node(&sc.treatment)?;
    let y = scm.node(&sc.outcome)?;
    let interventions = BTreeMap::from([(sc.treatment.clone(), sc.control_value)]);
    let (_, cond) = scm.pins(&interventions, &sc.conditions)?;
    scm.check_bounds(t, sc.treatment_value)?;

    let mut control = cond.clone();
    control.insert(t, sc.control_value);
    let mut treated = cond;
    treated.insert(t, sc.treatment_value);

    let p = scm.graph.len();
    let (mut a, mut b) = (alloc::vec![0.0; p], alloc::vec![0.0; p]);
    let mut buf = (Vec::new(), Vec::new());
    Ok(scm
        .draw_units(sc.n_samples, seed, sc.noise)
        .iter()
        .map(|d| {
            scm.evaluate(d, &treated, &mut a, &mut buf);
            scm.evaluate(d, &control, &mut b, &mut buf);
            a[y] - b[y]
        })
        .collect())
}

fn estimate(scm: &FittedScm, sc: &Scenario) -> Result<EffectEstimate, EstimationError> {
    sc.validate()?;
    let effects = paired_effects(scm, sc, sc.seed)?;
    let se = if sc.bootstrap >= 2 {
        let mut rng = rng::stream(sc.seed, purpose::BOOTSTRAP);
        let n = scm.training.n();
        let mut taus = Vec::with_capacity(sc.bootstrap);
        for b in 0..sc.bootstrap {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let refit = scm.refit(&scm.training.select_rows(&idx))?;
            let e = paired_effects(&refit, sc, sc.seed.wrapping_add(b as u64 + 1))?;
            taus.push(stats::mean(&e));
        }
        Some(stats::std_dev(&taus))
    } else {
        None
    };
    Ok(EffectEstimate::from_unit_effects("scm-do", sc, &effects, se))
}

/// Population effect: all non-intervened inputs from their marginals.
pub fn estimate_ate(scm: &FittedScm, sc: &Scenario) -> Result<EffectEstimate, EstimationError> {
    if !sc.conditions.is_empty() {
        return Err(EstimationError::UnexpectedConditions);
    }
    estimate(scm, sc)
}

/// Effect within the stratum fixed by `sc.conditions`.
pub fn estimate_cate(scm: &FittedScm, sc: &Scenario) -> Result<EffectEstimate, EstimationError> {
    if sc.conditions.is_empty() {
        return Err(EstimationError::MissingConditions("conditions"));
    }
    estimate(scm, sc)
}

/// ATE or CATE depending on whether the scenario has conditions.
pub fn estimate_effect(scm: &FittedScm, sc: &Scenario) -> Result<EffectEstimate, EstimationError> {
    estimate(scm, sc)
}
