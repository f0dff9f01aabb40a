//! Predictive baseline: gradient-boosted least-squares regression trees over
//! every non-target column, and the naive what-if procedure that samples
//! inputs independently.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::estimation::{EffectEstimate, Scenario};
use crate::rng::{self, purpose};
use crate::stats;

/// Smallest training set accepted by [`fit_baseline`].
pub const MIN_ROWS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("baseline needs at least {MIN_ROWS} rows, got {0}")]
    TooFewRows(usize),
    #[error("need 2 ≤ k ≤ n folds (k = {k}, n = {n})")]
    BadFolds { k: usize, n: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParams(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("model predicts {model}, scenario asks for {asked}")]
    WrongTarget { model: String, asked: String },
    #[error("n_samples must be positive")]
    NoSamples,
    #[error(transparent)]
    Data(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate thresholds per feature (at most 255).
    pub max_bins: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            rounds: 300,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 5,
            max_bins: 255,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: &str| Err(BaselineError::InvalidParams(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.max_depth == 0 || self.max_depth > 16 {
            return bad("max_depth must lie in 1..=16");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if !(2..=255).contains(&self.max_bins) {
            return bad("max_bins must lie in 2..=255");
        }
        Ok(())
    }
}

/// One node of a tree; leaves have `feature == None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<usize>,
    /// Go left when `x[feature] <= threshold`.
    #[serde(default)]
    pub threshold: f64,
    #[serde(default)]
    pub left: usize,
    #[serde(default)]
    pub right: usize,
    #[serde(default)]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            match node.feature {
                None => return node.value,
                Some(f) => i = if x[f] <= node.threshold { node.left } else { node.right },
            }
        }
    }
}

/// A fitted boosted ensemble. Serializes to plain JSON split records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub target: String,
    pub features: Vec<String>,
    /// Observed `(min, max)` of each feature in the training data.
    pub feature_ranges: Vec<(f64, f64)>,
    pub base: f64,
    pub params: BoostParams,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    /// Prediction for one feature vector in [`TreeEnsemble::features`] order.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.params.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Predictions for every row of `ds`, matching features by name.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>, BaselineError> {
        let idx: Vec<usize> = self
            .features
            .iter()
            .map(|f| ds.column_index(f).map_err(|_| BaselineError::UnknownColumn(f.clone())))
            .collect::<Result<_, _>>()?;
        let mut x = alloc::vec![0.0; idx.len()];
        Ok(ds
            .rows()
            .map(|row| {
                for (slot, &c) in x.iter_mut().zip(&idx) {
                    *slot = row[c];
                }
                self.predict(&x)
            })
            .collect())
    }

    fn feature(&self, name: &str) -> Result<usize, BaselineError> {
        self.features
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| BaselineError::UnknownColumn(name.into()))
    }
}

/// Quantile-based cut points; a value goes to bin `b` when it is at most
/// `cuts[b]` and above `cuts[b - 1]`.
fn cut_points(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = stats::sorted(values);
    sorted.dedup();
    if sorted.len() <= 1 {
        return Vec::new();
    }
    if sorted.len() <= max_bins {
        return sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let mut cuts: Vec<f64> = (1..max_bins)
        .map(|i| {
            let pos = i * (sorted.len() - 1) / max_bins;
            0.5 * (sorted[pos] + sorted[pos + 1])
        })
        .collect();
    cuts.dedup();
    cuts
}

fn bin_of(cuts: &[f64], v: f64) -> u8 {
    cuts.partition_point(|&c| c < v) as u8
}

struct Binned {
    /// Column-major bin codes.
    codes: Vec<Vec<u8>>,
    cuts: Vec<Vec<f64>>,
}

struct Grower<'a> {
    binned: &'a Binned,
    params: &'a BoostParams,
    grad: &'a [f64],
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = idx.iter().map(|&i| self.grad[i]).sum::<f64>() / idx.len().max(1) as f64;
        self.nodes.push(TreeNode {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        });
        self.nodes.len() - 1
    }

    /// Best `(gain, feature, bin)` over all histogram splits.
    fn best_split(&self, idx: &[usize]) -> Option<(f64, usize, usize)> {
        let total: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let n = idx.len() as f64;
        let parent = total * total / n;
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<(f64, usize, usize)> = None;
        let mut sums = [0.0f64; 256];
        let mut counts = [0usize; 256];
        for (f, codes) in self.binned.codes.iter().enumerate() {
            let bins = self.binned.cuts[f].len() + 1;
            if bins < 2 {
                continue;
            }
            sums[..bins].fill(0.0);
            counts[..bins].fill(0);
            for &i in idx {
                let b = codes[i] as usize;
                sums[b] += self.grad[i];
                counts[b] += 1;
            }
            let (mut gl, mut nl) = (0.0, 0usize);
            for b in 0..bins - 1 {
                gl += sums[b];
                nl += counts[b];
                let nr = idx.len() - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let gr = total - gl;
                let gain = gl * gl / nl as f64 + gr * gr / nr as f64 - parent;
                if gain > 1e-12 && best.map_or(true, |(g, _, _)| gain > g) {
                    best = Some((gain, f, b));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        if depth >= self.params.max_depth || idx.len() < 2 * self.params.min_samples_leaf {
            return self.leaf(&idx);
        }
        let Some((_, f, b)) = self.best_split(&idx) else {
            return self.leaf(&idx);
        };
        let codes = &self.binned.codes[f];
        let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| codes[i] as usize <= b);
        let me = self.nodes.len();
        self.nodes.push(TreeNode {
            feature: Some(f),
            threshold: self.binned.cuts[f][b],
            left: 0,
            right: 0,
            value: 0.0,
        });
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[me].left = l;
        self.nodes[me].right = r;
        me
    }
}

fn train(ds: &Dataset, target: &str, params: &BoostParams) -> Result<TreeEnsemble, BaselineError> {
    params.validate()?;
    let t = ds.column_index(target)?;
    let feature_cols: Vec<usize> = (0..ds.p()).filter(|&c| c != t).collect();
    let y = ds.column(t);
    let columns: Vec<Vec<f64>> = feature_cols.iter().map(|&c| ds.column(c)).collect();
    let cuts: Vec<Vec<f64>> = columns.iter().map(|col| cut_points(col, params.max_bins)).collect();
    let codes = columns
        .iter()
        .zip(&cuts)
        .map(|(col, cuts)| col.iter().map(|&v| bin_of(cuts, v)).collect())
        .collect();
    let binned = Binned { codes, cuts };

    let base = stats::mean(&y);
    let mut pred = alloc::vec![base; y.len()];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut grad = alloc::vec![0.0; y.len()];
    let rows: Vec<Vec<f64>> = (0..ds.n()).map(|r| feature_cols.iter().map(|&c| ds.value(r, c)).collect()).collect();
    for _ in 0..params.rounds {
        for i in 0..y.len() {
            grad[i] = y[i] - pred[i];
        }
        let mut grower = Grower {
            binned: &binned,
            params,
            grad: &grad,
            nodes: Vec::new(),
        };
        grower.grow((0..y.len()).collect(), 0);
        let tree = Tree { nodes: grower.nodes };
        for (p, row) in pred.iter_mut().zip(&rows) {
            *p += params.learning_rate * tree.predict(row);
        }
        trees.push(tree);
    }
    Ok(TreeEnsemble {
        target: target.into(),
        features: feature_cols.iter().map(|&c| ds.columns()[c].name.clone()).collect(),
        feature_ranges: columns.iter().map(|c| stats::min_max(c)).collect(),
        base,
        params: params.clone(),
        trees,
    })
}

/// Boosted trees predicting `target` from every other column.
pub fn fit_baseline(ds: &Dataset, target: &str, params: &BoostParams) -> Result<TreeEnsemble, BaselineError> {
    if ds.n() < MIN_ROWS {
        return Err(BaselineError::TooFewRows(ds.n()));
    }
    train(ds, target, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    /// Mean of per-fold MAPE, percent.
    pub mape: f64,
    /// Mean of per-fold R².
    pub r_squared: f64,
    pub fold_mape: Vec<f64>,
    pub fold_r_squared: Vec<f64>,
    /// R² of all out-of-fold predictions pooled.
    pub pooled_r_squared: f64,
}

/// `k`-fold cross-validation with a seeded shuffle of rows into folds.
///
/// Fold models are trained without the [`MIN_ROWS`] floor so that
/// leave-one-out on small data still runs.
pub fn cross_validate(
    ds: &Dataset,
    target: &str,
    k: usize,
    params: &BoostParams,
    seed: u64,
) -> Result<CvReport, BaselineError> {
    let n = ds.n();
    if k < 2 || k > n {
        return Err(BaselineError::BadFolds { k, n });
    }
    let t = ds.column_index(target)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, purpose::FOLDS));
    let y = ds.column(t);
    let mut oof = alloc::vec![0.0; n];
    let (mut fold_mape, mut fold_r2) = (Vec::new(), Vec::new());
    for fold in 0..k {
        let test: Vec<usize> = order.iter().copied().skip(fold).step_by(k).collect();
        let trainset: Vec<usize> = order
            .iter()
            .enumerate()
            .filter(|(i, _)| i % k != fold)
            .map(|(_, &r)| r)
            .collect();
        let model = train(&ds.select_rows(&trainset), target, params)?;
        let pred = model.predict_dataset(&ds.select_rows(&test))?;
        let truth: Vec<f64> = test.iter().map(|&r| y[r]).collect();
        fold_mape.push(stats::mape(&truth, &pred));
        fold_r2.push(stats::r_squared(&truth, &pred));
        for (&r, p) in test.iter().zip(pred) {
            oof[r] = p;
        }
    }
    Ok(CvReport {
        folds: k,
        mape: stats::mean(&fold_mape),
        r_squared: stats::mean(&fold_r2),
        fold_mape,
        fold_r_squared: fold_r2,
        pooled_r_squared: stats::r_squared(&y, &oof),
    })
}

/// What-if answered by the predictive model alone: every input that the
/// scenario does not pin is drawn independently and uniformly over its
/// observed range, derived columns included, and the prediction difference
/// between the two treatment values is averaged.
pub fn naive_whatif(model: &TreeEnsemble, sc: &Scenario) -> Result<EffectEstimate, BaselineError> {
    if sc.outcome != model.target {
        return Err(BaselineError::WrongTarget {
            model: model.target.clone(),
            asked: sc.outcome.clone(),
        });
    }
    if sc.n_samples == 0 {
        return Err(BaselineError::NoSamples);
    }
    let t = model.feature(&sc.treatment)?;
    let pinned: BTreeMap<usize, f64> = sc
        .conditions
        .iter()
        .map(|(name, &v)| Ok((model.feature(name)?, v)))
        .collect::<Result<_, BaselineError>>()?;
    let mut rng = rng::stream(sc.seed, purpose::NAIVE);
    let p = model.features.len();
    let mut effects = Vec::with_capacity(sc.n_samples);
    let mut x = alloc::vec![0.0; p];
    for _ in 0..sc.n_samples {
        for (f, slot) in x.iter_mut().enumerate() {
            let (lo, hi) = model.feature_ranges[f];
            *slot = match pinned.get(&f) {
                Some(&v) => v,
                None if hi > lo => rng.random_range(lo..=hi),
                None => lo,
            };
        }
        x[t] = sc.treatment_value;
        let yt = model.predict(&x);
        x[t] = sc.control_value;
        let yc = model.predict(&x);
        effects.push(yt - yc);
    }
    Ok(EffectEstimate::from_unit_effects("naive-iid", sc, &effects, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnDesc;

    fn table(rows: Vec<Vec<f64>>) -> Dataset {
        let cols = ["a", "b", "y"].iter().map(|n| ColumnDesc::derived(n, "-")).collect();
        Dataset::new(cols, rows, None).unwrap()
    }

    fn linear_rows(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let a = (i % 37) as f64 / 37.0;
                let b = ((i * 7) % 53) as f64 / 53.0;
                alloc::vec![a, b, 3.0 * a - 2.0 * b + 1.0]
            })
            .collect()
    }

    #[test]
    fn cut_points_and_bins() {
        let cuts = cut_points(&[1.0, 2.0, 2.0, 3.0], 255);
        assert_eq!(cuts, [1.5, 2.5]);
        assert_eq!(bin_of(&cuts, 1.0), 0);
        assert_eq!(bin_of(&cuts, 2.0), 1);
        assert_eq!(bin_of(&cuts, 9.0), 2);
        let many: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert!(cut_points(&many, 255).len() <= 254);
        assert!(cut_points(&[5.0, 5.0], 255).is_empty());
    }

    #[test]
    fn fits_linear_target() {
        let ds = table(linear_rows(400));
        let model = fit_baseline(&ds, "y", &BoostParams::default()).unwrap();
        let pred = model.predict_dataset(&ds).unwrap();
        assert!(stats::r_squared(&ds.column(2), &pred) > 0.99);
        let again = fit_baseline(&ds, "y", &BoostParams::default()).unwrap();
        assert_eq!(model, again);
    }

    #[test]
    fn constant_target_predicts_constant() {
        let rows = (0..60).map(|i| alloc::vec![i as f64, 1.0, 4.0]).collect();
        let ds = table(rows);
        let model = fit_baseline(&ds, "y", &BoostParams::default()).unwrap();
        assert!(model.predict_dataset(&ds).unwrap().iter().all(|&p| p == 4.0));
    }

    #[test]
    fn refuses_small_data() {
        let ds = table(linear_rows(49));
        assert_eq!(
            fit_baseline(&ds, "y", &BoostParams::default()).unwrap_err(),
            BaselineError::TooFewRows(49)
        );
    }

    #[test]
    fn leave_one_out_runs() {
        let ds = table(linear_rows(12));
        let params = BoostParams {
            rounds: 20,
            min_samples_leaf: 1,
            ..BoostParams::default()
        };
        let cv = cross_validate(&ds, "y", 12, &params, 1).unwrap();
        assert_eq!(cv.fold_mape.len(), 12);
        assert!(cross_validate(&ds, "y", 13, &params, 1).is_err());
        assert!(cross_validate(&ds, "y", 1, &params, 1).is_err());
    }

    #[test]
    fn naive_identity_and_errors() {
        let ds = table(linear_rows(200));
        let model = fit_baseline(&ds, "y", &BoostParams::default()).unwrap();
        let sc = Scenario::new("a", 0.5, 0.5, "y");
        assert_eq!(naive_whatif(&model, &sc).unwrap().tau, 0.0);
        let sc = Scenario::new("a", 0.2, 0.8, "y");
        assert!(naive_whatif(&model, &sc).unwrap().tau > 1.0);
        let bad = Scenario::new("zzz", 0.2, 0.8, "y");
        assert!(matches!(naive_whatif(&model, &bad), Err(BaselineError::UnknownColumn(_))));
        let json = serde_json::to_string(&model).unwrap();
        let back: TreeEnsemble = serde_json::from_str(&json).unwrap();
        assert_eq!(back.predict(&[0.3, 0.4]), model.predict(&[0.3, 0.4]));
    }
}
