//! Design-space schema, configuration sampling and labelled datasets.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{self, BuildingConfig, OracleConstants, OracleError};
use crate::rng::{self, purpose};

/// Column names shared by the schema, the oracle and the default graph.
pub mod columns {
    pub const GROUND_FLOOR_AREA: &str = "Ground_Floor_Area";
    pub const HEIGHT: &str = "Height";
    pub const NUMBER_OF_FLOORS: &str = "Number_of_Floors";
    pub const U_WALL: &str = "u_Value_Wall";
    pub const U_INTERNAL_WALL: &str = "u_Value_Internal_Wall";
    pub const U_GROUND_FLOOR: &str = "u_Value_Ground_Floor";
    pub const U_ROOF: &str = "u_Value_Roof";
    pub const U_INTERNAL_FLOOR: &str = "u_Value_Internal_Floor";
    pub const U_WINDOWS: &str = "u_Value_Windows";
    pub const G_WINDOWS: &str = "g_Value_Windows";
    pub const PERMEABILITY: &str = "Permeability";
    pub const WWR_NORTH: &str = "WWR_North";
    pub const WWR_EAST: &str = "WWR_East";
    pub const WWR_SOUTH: &str = "WWR_South";
    pub const WWR_WEST: &str = "WWR_West";
    pub const EQUIPMENT_GAIN: &str = "Building_Equipment_Heat_Gain";
    pub const OCCUPANCY: &str = "Building_Occupancy";

    pub const VOLUME: &str = "Volume";
    pub const EXTERNAL_WALL_AREA: &str = "External_Wall_Area";
    pub const WINDOW_AREA: &str = "Window_Area";
    pub const WWR: &str = "WWR";

    pub const HEATING_LOAD: &str = "Heating_Load";

    pub const SAMPLED: [&str; 17] = [
        GROUND_FLOOR_AREA,
        HEIGHT,
        NUMBER_OF_FLOORS,
        U_WALL,
        U_INTERNAL_WALL,
        U_GROUND_FLOOR,
        U_ROOF,
        U_INTERNAL_FLOOR,
        U_WINDOWS,
        G_WINDOWS,
        PERMEABILITY,
        WWR_NORTH,
        WWR_EAST,
        WWR_SOUTH,
        WWR_WEST,
        EQUIPMENT_GAIN,
        OCCUPANCY,
    ];

    pub const DERIVED: [&str; 4] = [VOLUME, EXTERNAL_WALL_AREA, WINDOW_AREA, WWR];
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("noise {0} outside [0, 0.05]")]
    NoiseOutOfRange(f64),
    #[error("invalid parameter spec {name}: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("row {row} has {found} values, schema has {expected} columns")]
    RowWidth {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("column {column}, row {row}: value {value} outside [{min}, {max}]")]
    OutOfBounds {
        column: String,
        row: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("column {column}, row {row}: value is not a finite number")]
    NonFinite { column: String, row: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Continuous,
    Integer,
}

/// One sampled design parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub unit: String,
    pub min: f64,
    pub max: f64,
    pub kind: ParamKind,
}

impl ParameterSpec {
    pub fn new(name: &str, unit: &str, min: f64, max: f64, kind: ParamKind) -> Self {
        ParameterSpec {
            name: name.into(),
            unit: unit.into(),
            min,
            max,
            kind,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |reason: &str| DatasetError::InvalidSpec {
            name: self.name.clone(),
            reason: reason.into(),
        };
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if self.min >= self.max {
            return Err(bad("min must be below max"));
        }
        if self.kind == ParamKind::Integer
            && (libm::trunc(self.min) != self.min || libm::trunc(self.max) != self.max)
        {
            return Err(bad("integer parameter needs integral bounds"));
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// The building design space: seventeen independently sampled parameters.
pub fn default_schema() -> Vec<ParameterSpec> {
    use columns::*;
    use ParamKind::{Continuous as C, Integer as I};
    let u = "W/m²K";
    alloc::vec![
        ParameterSpec::new(GROUND_FLOOR_AREA, "m²", 250.0, 800.0, C),
        ParameterSpec::new(HEIGHT, "m", 3.0, 4.0, C),
        ParameterSpec::new(NUMBER_OF_FLOORS, "-", 2.0, 5.0, I),
        ParameterSpec::new(U_WALL, u, 0.15, 0.25, C),
        ParameterSpec::new(U_INTERNAL_WALL, u, 0.4, 0.6, C),
        ParameterSpec::new(U_GROUND_FLOOR, u, 0.15, 0.25, C),
        ParameterSpec::new(U_ROOF, u, 0.15, 0.25, C),
        ParameterSpec::new(U_INTERNAL_FLOOR, u, 0.4, 0.6, C),
        ParameterSpec::new(U_WINDOWS, u, 0.7, 1.0, C),
        ParameterSpec::new(G_WINDOWS, "-", 0.3, 0.6, C),
        ParameterSpec::new(PERMEABILITY, "m³/m²h", 6.0, 9.0, C),
        ParameterSpec::new(WWR_NORTH, "-", 0.1, 0.5, C),
        ParameterSpec::new(WWR_EAST, "-", 0.1, 0.5, C),
        ParameterSpec::new(WWR_SOUTH, "-", 0.1, 0.5, C),
        ParameterSpec::new(WWR_WEST, "-", 0.1, 0.5, C),
        ParameterSpec::new(EQUIPMENT_GAIN, "W/m²", 10.0, 14.0, C),
        ParameterSpec::new(OCCUPANCY, "Person/m²", 16.0, 24.0, C),
    ]
}

pub fn validate_schema(schema: &[ParameterSpec]) -> Result<(), DatasetError> {
    let mut seen = BTreeMap::new();
    for spec in schema {
        spec.validate()?;
        if seen.insert(spec.name.as_str(), ()).is_some() {
            return Err(DatasetError::InvalidSpec {
                name: spec.name.clone(),
                reason: "duplicate name".into(),
            });
        }
    }
    Ok(())
}

/// Draws `n` configurations, every parameter independently uniform over its
/// bounds (uniform over the integers for integer parameters). The latent
/// facade shape factor is drawn last for each row.
pub fn sample_configs(
    schema: &[ParameterSpec],
    n: usize,
    seed: u64,
) -> Result<Vec<BuildingConfig>, DatasetError> {
    sample_configs_pinned(schema, n, seed, &BTreeMap::new())
}

/// As [`sample_configs`], then overwrites the `pinned` parameters.
///
/// The random stream is consumed identically whatever is pinned.
pub fn sample_configs_pinned(
    schema: &[ParameterSpec],
    n: usize,
    seed: u64,
    pinned: &BTreeMap<String, f64>,
) -> Result<Vec<BuildingConfig>, DatasetError> {
    if n == 0 {
        return Err(DatasetError::EmptySample);
    }
    validate_schema(schema)?;
    for required in columns::SAMPLED {
        if !schema.iter().any(|s| s.name == required) {
            return Err(DatasetError::MissingColumn(required.into()));
        }
    }
    for name in pinned.keys() {
        if !schema.iter().any(|s| &s.name == name) {
            return Err(DatasetError::UnknownColumn(name.clone()));
        }
    }
    let mut rng = rng::stream(seed, purpose::CONFIGS);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut cfg = BuildingConfig::default();
        for spec in schema {
            let v = match spec.kind {
                ParamKind::Continuous => rng.random_range(spec.min..=spec.max),
                ParamKind::Integer => rng.random_range(spec.min as i64..=spec.max as i64) as f64,
            };
            cfg.set(&spec.name, v)?;
        }
        let (lo, hi) = oracle::SHAPE_FACTOR_RANGE;
        cfg.shape_factor = rng.random_range(lo..=hi);
        for (name, &v) in pinned {
            cfg.set(name, v)?;
        }
        out.push(cfg);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Sampled,
    Derived,
    Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDesc {
    pub name: String,
    pub unit: String,
    pub role: ColumnRole,
    /// Sampling bounds, present for sampled columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
}

impl ColumnDesc {
    pub fn sampled(spec: &ParameterSpec) -> Self {
        ColumnDesc {
            name: spec.name.clone(),
            unit: spec.unit.clone(),
            role: ColumnRole::Sampled,
            bounds: Some((spec.min, spec.max)),
        }
    }

    pub fn derived(name: &str, unit: &str) -> Self {
        ColumnDesc {
            name: name.into(),
            unit: unit.into(),
            role: ColumnRole::Derived,
            bounds: None,
        }
    }

    pub fn outcome(name: &str, unit: &str) -> Self {
        ColumnDesc {
            name: name.into(),
            unit: unit.into(),
            role: ColumnRole::Outcome,
            bounds: None,
        }
    }
}

/// Column layout of a generated building dataset for `schema`.
pub fn building_columns(schema: &[ParameterSpec]) -> Vec<ColumnDesc> {
    let mut cols: Vec<ColumnDesc> = schema.iter().map(ColumnDesc::sampled).collect();
    cols.push(ColumnDesc::derived(columns::VOLUME, "m³"));
    cols.push(ColumnDesc::derived(columns::EXTERNAL_WALL_AREA, "m²"));
    cols.push(ColumnDesc::derived(columns::WINDOW_AREA, "m²"));
    cols.push(ColumnDesc::derived(columns::WWR, "-"));
    cols.push(ColumnDesc::outcome(columns::HEATING_LOAD, "kWh/year"));
    cols
}

/// Immutable numeric table with a column schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<ColumnDesc>,
    /// Row-major `n × p`.
    values: Vec<f64>,
    n: usize,
    /// Generator seed, if the data was generated.
    pub seed: Option<u64>,
}

impl Dataset {
    /// Builds a dataset, checking widths, finiteness and sampled bounds.
    pub fn new(columns: Vec<ColumnDesc>, rows: Vec<Vec<f64>>, seed: Option<u64>) -> Result<Self, DatasetError> {
        let p = columns.len();
        let mut seen = BTreeMap::new();
        for c in &columns {
            if seen.insert(c.name.as_str(), ()).is_some() {
                return Err(DatasetError::InvalidSpec {
                    name: c.name.clone(),
                    reason: "duplicate column".into(),
                });
            }
        }
        let n = rows.len();
        let mut values = Vec::with_capacity(n * p);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(DatasetError::RowWidth {
                    row: r + 1,
                    found: row.len(),
                    expected: p,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                let col = &columns[c];
                if !v.is_finite() {
                    return Err(DatasetError::NonFinite {
                        column: col.name.clone(),
                        row: r + 1,
                    });
                }
                if let (ColumnRole::Sampled, Some((lo, hi))) = (col.role, col.bounds) {
                    if v < lo || v > hi {
                        return Err(DatasetError::OutOfBounds {
                            column: col.name.clone(),
                            row: r + 1,
                            value: v,
                            min: lo,
                            max: hi,
                        });
                    }
                }
            }
            values.extend(row);
        }
        Ok(Dataset {
            columns,
            values,
            n,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnDesc] {
        &self.columns
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, DatasetError> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| DatasetError::UnknownColumn(name.to_string()))
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let p = self.p();
        &self.values[r * p..(r + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p().max(1)).take(self.n)
    }

    pub fn value(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.p() + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.value(r, c)).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>, DatasetError> {
        Ok(self.column(self.column_index(name)?))
    }

    /// Rows at the given indices, same schema.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(idx.len() * self.p());
        for &r in idx {
            values.extend_from_slice(self.row(r));
        }
        Dataset {
            columns: self.columns.clone(),
            values,
            n: idx.len(),
            seed: self.seed,
        }
    }

    pub fn summary(&self) -> Vec<ColumnSummary> {
        self.columns
            .iter()
            .enumerate()
            .map(|(c, desc)| {
                let col = self.column(c);
                let (min, max) = crate::stats::min_max(&col);
                ColumnSummary {
                    name: desc.name.clone(),
                    mean: crate::stats::mean(&col),
                    std: crate::stats::std_dev(&col),
                    min,
                    max,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Samples configurations and labels them with the heating-load oracle.
///
/// Derived geometry columns receive multiplicative Gaussian jitter with
/// relative standard deviation `noise`; the outcome is computed from the
/// exact geometry.
pub fn generate_dataset(
    schema: &[ParameterSpec],
    n: usize,
    seed: u64,
    noise: f64,
) -> Result<Dataset, DatasetError> {
    generate_dataset_with(schema, n, seed, noise, &OracleConstants::default())
}

pub fn generate_dataset_with(
    schema: &[ParameterSpec],
    n: usize,
    seed: u64,
    noise: f64,
    constants: &OracleConstants,
) -> Result<Dataset, DatasetError> {
    if !(0.0..=0.05).contains(&noise) {
        return Err(DatasetError::NoiseOutOfRange(noise));
    }
    let configs = sample_configs(schema, n, seed)?;
    let mut jitter = rng::stream(seed, purpose::JITTER);
    let mut rows = Vec::with_capacity(n);
    for cfg in &configs {
        let geo = oracle::derive_geometry(cfg)?;
        let load = oracle::heating_load_with(cfg, constants)?;
        let mut row: Vec<f64> = schema
            .iter()
            .map(|s| cfg.get(&s.name).expect("schema validated by sampler"))
            .collect();
        for exact in [geo.volume, geo.external_wall_area, geo.window_area, geo.wwr] {
            let z: f64 = StandardNormal.sample(&mut jitter);
            row.push(exact * (1.0 + noise * z));
        }
        row.push(load);
        rows.push(row);
    }
    Dataset::new(building_columns(schema), rows, Some(seed))
}
