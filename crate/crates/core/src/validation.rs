//! Side-by-side comparison of the causal estimate, the naive predictive
//! what-if and paired oracle runs for one scenario.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{naive_whatif, BaselineError, TreeEnsemble};
use crate::dataset::{columns as col, sample_configs_pinned, DatasetError, ParameterSpec};
use crate::estimation::{estimate_effect, EffectEstimate, EstimationError, FittedScm, Scenario};
use crate::oracle::{paired_effect, OracleConstants, OracleError};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("{0} is not a sampled design parameter; the oracle cannot pin it")]
    NotSampled(String),
    #[error("oracle outcome is {expected}, scenario asks for {found}")]
    WrongOutcome { expected: &'static str, found: String },
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Floor height 3 m → 3.2 m for a three-storey, 300 m² footprint with every
/// facade at 30 % glazing, roof and ground-floor u-values of 0.2 and
/// permeability 7.5; the remaining parameters are unknown.
pub fn reference_scenario() -> Scenario {
    Scenario::new(col::HEIGHT, 3.0, 3.2, col::HEATING_LOAD)
        .condition(col::GROUND_FLOOR_AREA, 300.0)
        .condition(col::NUMBER_OF_FLOORS, 3.0)
        .condition(col::WWR_NORTH, 0.3)
        .condition(col::WWR_EAST, 0.3)
        .condition(col::WWR_SOUTH, 0.3)
        .condition(col::WWR_WEST, 0.3)
        .condition(col::U_ROOF, 0.2)
        .condition(col::U_GROUND_FLOOR, 0.2)
        .condition(col::PERMEABILITY, 7.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub standard_error: f64,
    pub p5: f64,
    pub p95: f64,
    pub n: usize,
}

impl From<&EffectEstimate> for Summary {
    fn from(e: &EffectEstimate) -> Self {
        Summary {
            mean: e.tau,
            standard_error: e.standard_error,
            p5: e.p5,
            p95: e.p95,
            n: e.n,
        }
    }
}

/// Mean paired oracle effect over configurations drawn with the scenario's
/// conditions pinned and everything else uniform over the schema.
pub fn oracle_effect(
    schema: &[ParameterSpec],
    sc: &Scenario,
    n_configs: usize,
    seed: u64,
    k: &OracleConstants,
) -> Result<(Summary, Vec<f64>), ValidationError> {
    if sc.outcome != col::HEATING_LOAD {
        return Err(ValidationError::WrongOutcome {
            expected: col::HEATING_LOAD,
            found: sc.outcome.clone(),
        });
    }
    for name in core::iter::once(&sc.treatment).chain(sc.conditions.keys()) {
        if !schema.iter().any(|s| &s.name == name) {
            return Err(ValidationError::NotSampled(name.clone()));
        }
    }
    let configs = sample_configs_pinned(schema, n_configs, seed, &sc.conditions)?;
    let effects = configs
        .iter()
        .map(|cfg| paired_effect(cfg, &sc.treatment, sc.control_value, sc.treatment_value, k))
        .collect::<Result<Vec<_>, _>>()?;
    let sorted = stats::sorted(&effects);
    let n = sorted.len();
    Ok((
        Summary {
            mean: stats::mean(&sorted),
            standard_error: stats::std_dev(&sorted) / libm::sqrt(n as f64),
            p5: stats::quantile_sorted(&sorted, 0.05),
            p95: stats::quantile_sorted(&sorted, 0.95),
            n,
        },
        sorted,
    ))
}

/// Causal, naive and oracle answers to one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario: Scenario,
    pub causal: Summary,
    pub naive: Summary,
    pub oracle: Summary,
    /// `|causal − oracle| / |oracle|`
    pub causal_relative_error: f64,
    pub naive_relative_error: f64,
}

impl ValidationReport {
    /// Plain-text table with one column per method.
    pub fn table(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{:>14}{:>14}{:>14}", "", "causal", "naive", "oracle");
        let rows: [(&str, fn(&Summary) -> f64); 4] = [
            ("mean effect", |s| s.mean),
            ("standard error", |s| s.standard_error),
            ("5th percentile", |s| s.p5),
            ("95th percentile", |s| s.p95),
        ];
        for (label, f) in rows {
            let _ = writeln!(
                out,
                "{:<22}{:>14.2}{:>14.2}{:>14.2}",
                label,
                f(&self.causal),
                f(&self.naive),
                f(&self.oracle)
            );
        }
        let _ = writeln!(
            out,
            "{:<22}{:>13.1}%{:>13.1}%{:>14}",
            "relative error",
            100.0 * self.causal_relative_error,
            100.0 * self.naive_relative_error,
            "-"
        );
        out
    }
}

pub fn relative_error(estimate: f64, truth: f64) -> f64 {
    libm::fabs(estimate - truth) / libm::fabs(truth)
}

pub fn validate_scenario(
    scm: &FittedScm,
    model: &TreeEnsemble,
    schema: &[ParameterSpec],
    sc: &Scenario,
    oracle_samples: usize,
    oracle_seed: u64,
    k: &OracleConstants,
) -> Result<ValidationReport, ValidationError> {
    let (oracle, _) = oracle_effect(schema, sc, oracle_samples, oracle_seed, k)?;
    let causal = estimate_effect(scm, sc)?;
    let naive = naive_whatif(model, sc)?;
    Ok(ValidationReport {
        scenario: sc.clone(),
        causal_relative_error: relative_error(causal.tau, oracle.mean),
        naive_relative_error: relative_error(naive.tau, oracle.mean),
        causal: Summary::from(&causal),
        naive: Summary::from(&naive),
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::default_schema;

    #[test]
    fn oracle_truth_is_positive_and_deterministic() {
        let sc = reference_scenario();
        let k = OracleConstants::default();
        let (a, effects) = oracle_effect(&default_schema(), &sc, 200, 7, &k).unwrap();
        let (b, _) = oracle_effect(&default_schema(), &sc, 200, 7, &k).unwrap();
        assert_eq!(a, b);
        assert!(a.mean > 0.0);
        assert_eq!(effects.len(), 200);
        assert!(a.p5 <= a.mean && a.mean <= a.p95);
    }

    #[test]
    fn oracle_rejects_derived_conditions() {
        let sc = reference_scenario().condition(col::VOLUME, 2700.0);
        let err = oracle_effect(&default_schema(), &sc, 10, 1, &OracleConstants::default()).unwrap_err();
        assert_eq!(err, ValidationError::NotSampled(col::VOLUME.into()));
    }

    #[test]
    fn relative_error_is_symmetric_in_sign() {
        assert_eq!(relative_error(90.0, 100.0), relative_error(110.0, 100.0));
    }
}
