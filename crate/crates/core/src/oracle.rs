//! Steady-state heating-load model used as the ground-truth simulator.
//!
//! Annual demand is a monthly-method style balance: transmission and
//! ventilation losses over the heating degree-hours, minus utilised solar and
//! internal gains, clamped at zero. The formula is written so that every
//! variable the reference causal graph lists as a cause of `Heating_Load`
//! enters it, and the internal-wall and internal-floor u-values never do.

use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::columns as col;
use crate::graph::CausalGraph;

/// Bounds of the latent facade irregularity coefficient
/// (perimeter = factor · √ground-floor-area).
pub const SHAPE_FACTOR_RANGE: (f64, f64) = (3.6, 4.8);

/// `Building_Occupancy` is sampled over 16–24 with unit "Person/m²", which is
/// not a plausible occupant density; the model reads it as floor area per
/// person (m²/person).
pub const OCCUPANCY_IS_AREA_PER_PERSON: bool = true;

/// Specific heat capacity of air per volume, Wh/(m³·K).
const AIR_HEAT_CAPACITY: f64 = 0.34;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{field} = {value} is outside the physical domain")]
    Domain { field: String, value: f64 },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("invalid oracle constants: {0}")]
    InvalidConstants(String),
}

/// Climate and usage constants of the surrogate. Overridable from JSON; any
/// field left out keeps its default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConstants {
    /// Heating degree-hours, K·h/year.
    pub degree_hours: f64,
    /// Divides the envelope permeability (m³/m²h at 50 Pa) into an effective air-change rate.
    pub permeability_divisor: f64,
    /// Solar irradiation on a south facade over the heating season, kWh/(m²·year).
    pub irradiation_south: f64,
    pub irradiation_east_west: f64,
    pub irradiation_north: f64,
    /// Sensible heat output per occupant, W/person.
    pub occupant_output: f64,
    /// Lighting gain, W/m² (held fixed; not a design parameter).
    pub light_heat_gain: f64,
    /// Gain utilisation factor, in (0, 1].
    pub gain_utilisation: f64,
    /// Equivalent full-load hours of internal gains during the heating season, h/year.
    pub gain_hours: f64,
}

impl Default for OracleConstants {
    fn default() -> Self {
        OracleConstants {
            degree_hours: 84_000.0,
            permeability_divisor: 20.0,
            irradiation_south: 400.0,
            irradiation_east_west: 250.0,
            irradiation_north: 100.0,
            occupant_output: 70.0,
            light_heat_gain: 8.0,
            gain_utilisation: 0.7,
            gain_hours: 1_000.0,
        }
    }
}

impl OracleConstants {
    pub fn validate(&self) -> Result<(), OracleError> {
        let fields = [
            ("degree_hours", self.degree_hours),
            ("permeability_divisor", self.permeability_divisor),
            ("irradiation_south", self.irradiation_south),
            ("irradiation_east_west", self.irradiation_east_west),
            ("irradiation_north", self.irradiation_north),
            ("occupant_output", self.occupant_output),
            ("light_heat_gain", self.light_heat_gain),
            ("gain_utilisation", self.gain_utilisation),
            ("gain_hours", self.gain_hours),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(OracleError::InvalidConstants(alloc::format!(
                    "{name} must be strictly positive"
                )));
            }
        }
        if self.gain_utilisation > 1.0 {
            return Err(OracleError::InvalidConstants(
                "gain_utilisation must not exceed 1".into(),
            ));
        }
        if !(self.irradiation_south > self.irradiation_east_west
            && self.irradiation_south > self.irradiation_north)
        {
            return Err(OracleError::InvalidConstants(
                "south irradiation must be the largest".into(),
            ));
        }
        Ok(())
    }
}

/// One point of the design space plus the latent facade shape factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingConfig {
    pub ground_floor_area: f64,
    pub height: f64,
    pub number_of_floors: f64,
    pub u_wall: f64,
    pub u_internal_wall: f64,
    pub u_ground_floor: f64,
    pub u_roof: f64,
    pub u_internal_floor: f64,
    pub u_windows: f64,
    pub g_windows: f64,
    pub permeability: f64,
    pub wwr_north: f64,
    pub wwr_east: f64,
    pub wwr_south: f64,
    pub wwr_west: f64,
    pub equipment_gain: f64,
    pub occupancy: f64,
    pub shape_factor: f64,
}

impl Default for BuildingConfig {
    /// Centre of the default design space.
    fn default() -> Self {
        BuildingConfig {
            ground_floor_area: 525.0,
            height: 3.5,
            number_of_floors: 3.0,
            u_wall: 0.2,
            u_internal_wall: 0.5,
            u_ground_floor: 0.2,
            u_roof: 0.2,
            u_internal_floor: 0.5,
            u_windows: 0.85,
            g_windows: 0.45,
            permeability: 7.5,
            wwr_north: 0.3,
            wwr_east: 0.3,
            wwr_south: 0.3,
            wwr_west: 0.3,
            equipment_gain: 12.0,
            occupancy: 20.0,
            shape_factor: 4.2,
        }
    }
}

macro_rules! config_fields {
    ($($column:path => $field:ident),* $(,)?) => {
        impl BuildingConfig {
            fn slot(&mut self, name: &str) -> Option<&mut f64> {
                match name {
                    $($column => Some(&mut self.$field),)*
                    "shape_factor" => Some(&mut self.shape_factor),
                    _ => None,
                }
            }

            /// Value of a sampled column (or `shape_factor`).
            pub fn get(&self, name: &str) -> Result<f64, OracleError> {
                match name {
                    $($column => Ok(self.$field),)*
                    "shape_factor" => Ok(self.shape_factor),
                    _ => Err(OracleError::UnknownColumn(name.to_string())),
                }
            }
        }
    };
}

config_fields! {
    col::GROUND_FLOOR_AREA => ground_floor_area,
    col::HEIGHT => height,
    col::NUMBER_OF_FLOORS => number_of_floors,
    col::U_WALL => u_wall,
    col::U_INTERNAL_WALL => u_internal_wall,
    col::U_GROUND_FLOOR => u_ground_floor,
    col::U_ROOF => u_roof,
    col::U_INTERNAL_FLOOR => u_internal_floor,
    col::U_WINDOWS => u_windows,
    col::G_WINDOWS => g_windows,
    col::PERMEABILITY => permeability,
    col::WWR_NORTH => wwr_north,
    col::WWR_EAST => wwr_east,
    col::WWR_SOUTH => wwr_south,
    col::WWR_WEST => wwr_west,
    col::EQUIPMENT_GAIN => equipment_gain,
    col::OCCUPANCY => occupancy,
}

impl BuildingConfig {
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), OracleError> {
        let slot = self
            .slot(name)
            .ok_or_else(|| OracleError::UnknownColumn(name.to_string()))?;
        *slot = value;
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self, OracleError> {
        self.set(name, value)?;
        Ok(self)
    }

    /// Physical-domain check (not the sampling bounds).
    pub fn validate(&self) -> Result<(), OracleError> {
        let positive = [
            (col::GROUND_FLOOR_AREA, self.ground_floor_area),
            (col::HEIGHT, self.height),
            (col::NUMBER_OF_FLOORS, self.number_of_floors),
            (col::OCCUPANCY, self.occupancy),
            ("shape_factor", self.shape_factor),
        ];
        let non_negative = [
            (col::U_WALL, self.u_wall),
            (col::U_INTERNAL_WALL, self.u_internal_wall),
            (col::U_GROUND_FLOOR, self.u_ground_floor),
            (col::U_ROOF, self.u_roof),
            (col::U_INTERNAL_FLOOR, self.u_internal_floor),
            (col::U_WINDOWS, self.u_windows),
            (col::PERMEABILITY, self.permeability),
            (col::EQUIPMENT_GAIN, self.equipment_gain),
        ];
        let fractions = [
            (col::G_WINDOWS, self.g_windows),
            (col::WWR_NORTH, self.wwr_north),
            (col::WWR_EAST, self.wwr_east),
            (col::WWR_SOUTH, self.wwr_south),
            (col::WWR_WEST, self.wwr_west),
        ];
        let domain = |field: &str, value: f64| OracleError::Domain {
            field: field.into(),
            value,
        };
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(field, v));
            }
        }
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(field, v));
            }
        }
        for (field, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(field, v));
            }
        }
        Ok(())
    }
}

/// Geometry implied by a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub volume: f64,
    pub gross_wall: f64,
    pub window_area: f64,
    pub external_wall_area: f64,
    pub wwr: f64,
}

pub fn derive_geometry(cfg: &BuildingConfig) -> Result<Geometry, OracleError> {
    cfg.validate()?;
    let volume = cfg.ground_floor_area * cfg.height * cfg.number_of_floors;
    let gross_wall =
        cfg.shape_factor * libm::sqrt(cfg.ground_floor_area) * cfg.height * cfg.number_of_floors;
    let wwr = (cfg.wwr_north + cfg.wwr_east + cfg.wwr_south + cfg.wwr_west) / 4.0;
    let window_area = wwr * gross_wall;
    Ok(Geometry {
        volume,
        gross_wall,
        window_area,
        external_wall_area: gross_wall - window_area,
        wwr,
    })
}

/// Terms of the annual heat balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatBalance {
    /// Transmission coefficient, W/K.
    pub transmission: f64,
    /// Ventilation/infiltration coefficient, W/K.
    pub ventilation: f64,
    /// Solar gains through glazing, kWh/year.
    pub solar_gains: f64,
    /// Internal gains, kWh/year.
    pub internal_gains: f64,
    /// Heating demand before the zero clamp, kWh/year.
    pub unclamped: f64,
}

impl HeatBalance {
    pub fn load(&self) -> f64 {
        self.unclamped.max(0.0)
    }
}

pub fn heat_balance(cfg: &BuildingConfig, k: &OracleConstants) -> Result<HeatBalance, OracleError> {
    k.validate()?;
    let geo = derive_geometry(cfg)?;
    let transmission = cfg.u_wall * geo.external_wall_area
        + cfg.u_windows * geo.window_area
        + cfg.u_roof * cfg.ground_floor_area
        + cfg.u_ground_floor * cfg.ground_floor_area;
    let air_changes = cfg.permeability / k.permeability_divisor;
    let ventilation = AIR_HEAT_CAPACITY * air_changes * geo.volume;

    let facade = geo.gross_wall / 4.0;
    let solar_gains = cfg.g_windows
        * facade
        * (cfg.wwr_south * k.irradiation_south
            + (cfg.wwr_east + cfg.wwr_west) * k.irradiation_east_west
            + cfg.wwr_north * k.irradiation_north);

    let persons_per_m2 = if OCCUPANCY_IS_AREA_PER_PERSON {
        1.0 / cfg.occupancy
    } else {
        cfg.occupancy
    };
    let floor_area = cfg.ground_floor_area * cfg.number_of_floors;
    let internal_w_per_m2 = k.light_heat_gain + cfg.equipment_gain + k.occupant_output * persons_per_m2;
    let internal_gains = internal_w_per_m2 * floor_area * k.gain_hours / 1000.0;

    let losses = (transmission + ventilation) * k.degree_hours / 1000.0;
    let unclamped = losses - k.gain_utilisation * (solar_gains + internal_gains);
    Ok(HeatBalance {
        transmission,
        ventilation,
        solar_gains,
        internal_gains,
        unclamped,
    })
}

/// Annual heating demand in kWh/year with default constants.
pub fn heating_load(cfg: &BuildingConfig) -> Result<f64, OracleError> {
    heating_load_with(cfg, &OracleConstants::default())
}

pub fn heating_load_with(cfg: &BuildingConfig, k: &OracleConstants) -> Result<f64, OracleError> {
    Ok(heat_balance(cfg, k)?.load())
}

/// Unit-level effect of moving one sampled parameter from `control` to
/// `treated` with everything else held fixed.
pub fn paired_effect(
    cfg: &BuildingConfig,
    treatment: &str,
    control: f64,
    treated: f64,
    k: &OracleConstants,
) -> Result<f64, OracleError> {
    let c = cfg.clone().with(treatment, control)?;
    let t = cfg.clone().with(treatment, treated)?;
    Ok(heating_load_with(&t, k)? - heating_load_with(&c, k)?)
}

/// The pruned reference structure of the building design space.
pub fn ground_truth_dag() -> CausalGraph {
    let mut names: alloc::vec::Vec<&str> = col::SAMPLED.to_vec();
    names.extend(col::DERIVED);
    names.push(col::HEATING_LOAD);
    let mut g = CausalGraph::new(names).expect("unique column names");
    let mut edge = |a: &str, b: &str| g.add_edge_by_name(a, b).expect("valid reference edge");

    for geo in [col::GROUND_FLOOR_AREA, col::HEIGHT, col::NUMBER_OF_FLOORS] {
        for effect in [col::VOLUME, col::HEATING_LOAD, col::EXTERNAL_WALL_AREA, col::WINDOW_AREA] {
            edge(geo, effect);
        }
    }
    edge(col::WWR, col::EXTERNAL_WALL_AREA);
    edge(col::WWR, col::WINDOW_AREA);
    for dir in [col::WWR_WEST, col::WWR_EAST, col::WWR_SOUTH, col::WWR_NORTH] {
        edge(dir, col::WWR);
    }
    edge(col::WWR_SOUTH, col::HEATING_LOAD);
    edge(col::WWR_NORTH, col::HEATING_LOAD);
    for cause in [
        col::VOLUME,
        col::EXTERNAL_WALL_AREA,
        col::WINDOW_AREA,
        col::U_WALL,
        col::U_GROUND_FLOOR,
        col::U_ROOF,
        col::U_WINDOWS,
        col::G_WINDOWS,
        col::PERMEABILITY,
        col::EQUIPMENT_GAIN,
        col::OCCUPANCY,
    ] {
        edge(cause, col::HEATING_LOAD);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{default_schema, sample_configs};
    use alloc::collections::BTreeSet;
    use alloc::vec::Vec;

    fn reference_config() -> BuildingConfig {
        let mut cfg = BuildingConfig {
            ground_floor_area: 300.0,
            height: 3.0,
            number_of_floors: 3.0,
            u_ground_floor: 0.2,
            u_roof: 0.2,
            permeability: 7.5,
            ..BuildingConfig::default()
        };
        for dir in [col::WWR_NORTH, col::WWR_EAST, col::WWR_SOUTH, col::WWR_WEST] {
            cfg.set(dir, 0.3).unwrap();
        }
        cfg
    }

    #[test]
    fn geometry_examples() {
        let cfg = BuildingConfig {
            ground_floor_area: 300.0,
            height: 3.0,
            number_of_floors: 3.0,
            wwr_north: 0.1,
            wwr_east: 0.2,
            wwr_south: 0.3,
            wwr_west: 0.4,
            ..BuildingConfig::default()
        };
        let g = derive_geometry(&cfg).unwrap();
        assert_eq!(g.volume, 2700.0);
        assert!((g.wwr - 0.25).abs() < 1e-15);
        assert!((g.window_area + g.external_wall_area - g.gross_wall).abs() < 1e-9);

        let closed = BuildingConfig {
            wwr_north: 0.0,
            wwr_east: 0.0,
            wwr_south: 0.0,
            wwr_west: 0.0,
            ..cfg
        };
        let g = derive_geometry(&closed).unwrap();
        assert_eq!(g.window_area, 0.0);
        assert_eq!(g.external_wall_area, g.gross_wall);
    }

    #[test]
    fn domain_errors() {
        let bad = BuildingConfig {
            height: 0.0,
            ..BuildingConfig::default()
        };
        assert!(matches!(derive_geometry(&bad), Err(OracleError::Domain { .. })));
        assert!(heating_load(&bad).is_err());
        let k = OracleConstants {
            irradiation_north: 500.0,
            ..OracleConstants::default()
        };
        assert!(k.validate().is_err());
    }

    #[test]
    fn internal_u_values_do_not_matter() {
        let base = BuildingConfig::default();
        let a = heating_load(&base).unwrap();
        let b = heating_load(&base.clone().with(col::U_INTERNAL_WALL, 0.6).unwrap()).unwrap();
        assert_eq!(a, b);
        let k = OracleConstants::default();
        assert_eq!(paired_effect(&base, col::U_INTERNAL_FLOOR, 0.4, 0.6, &k).unwrap(), 0.0);
    }

    #[test]
    fn paired_effect_identity_and_unknown_column() {
        let k = OracleConstants::default();
        let cfg = BuildingConfig::default();
        assert_eq!(paired_effect(&cfg, col::HEIGHT, 3.3, 3.3, &k).unwrap(), 0.0);
        assert!(matches!(
            paired_effect(&cfg, "Volume", 1.0, 2.0, &k),
            Err(OracleError::UnknownColumn(_))
        ));
    }

    #[test]
    fn wall_u_value_finite_difference_is_positive() {
        let k = OracleConstants::default();
        for cfg in sample_configs(&default_schema(), 20, 11).unwrap() {
            let h = 1e-4;
            let d = paired_effect(&cfg, col::U_WALL, cfg.u_wall, cfg.u_wall + h, &k).unwrap() / h;
            let geo = derive_geometry(&cfg).unwrap();
            let analytic = geo.external_wall_area * k.degree_hours / 1000.0;
            assert!(d > 0.0);
            assert!((d - analytic).abs() / analytic < 1e-6);
        }
    }

    #[test]
    fn height_increase_raises_load() {
        let k = OracleConstants::default();
        let d = paired_effect(&reference_config(), col::HEIGHT, 3.0, 3.2, &k).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn default_design_space_never_clamps() {
        let k = OracleConstants::default();
        for cfg in sample_configs(&default_schema(), 2000, 5).unwrap() {
            let hb = heat_balance(&cfg, &k).unwrap();
            assert!(hb.unclamped > 0.0);
        }
    }

    #[test]
    fn monotone_in_each_parameter() {
        let k = OracleConstants::default();
        let increasing = [
            col::U_WALL,
            col::U_GROUND_FLOOR,
            col::U_ROOF,
            col::U_WINDOWS,
            col::PERMEABILITY,
            col::OCCUPANCY,
        ];
        let decreasing = [col::G_WINDOWS, col::EQUIPMENT_GAIN];
        for cfg in sample_configs(&default_schema(), 30, 2).unwrap() {
            let base = heat_balance(&cfg, &k).unwrap().unclamped;
            for name in increasing {
                let v = cfg.get(name).unwrap();
                let up = heat_balance(&cfg.clone().with(name, v * 1.05).unwrap(), &k).unwrap();
                assert!(up.unclamped >= base, "{name}");
            }
            for name in decreasing {
                let v = cfg.get(name).unwrap();
                let up = heat_balance(&cfg.clone().with(name, v * 1.05).unwrap(), &k).unwrap();
                assert!(up.unclamped <= base, "{name}");
            }
        }
    }

    #[test]
    fn sensitive_inputs_are_the_ancestors_of_the_load() {
        let k = OracleConstants::default();
        let dag = ground_truth_dag();
        let load = dag.id(col::HEATING_LOAD).unwrap();
        let ancestors: BTreeSet<&str> = dag
            .ancestors(&BTreeSet::from([load]))
            .into_iter()
            .map(|v| dag.name(v))
            .collect();
        let configs = sample_configs(&default_schema(), 10, 99).unwrap();
        for name in col::SAMPLED {
            let sensitive = configs.iter().any(|cfg| {
                let v = cfg.get(name).unwrap();
                paired_effect(cfg, name, v, v * 1.01, &k).unwrap().abs() > 1e-9
            });
            assert_eq!(sensitive, ancestors.contains(name), "{name}");
        }
    }

    /// The load written only in terms of its parents in the reference graph.
    fn load_from_parents(cfg: &BuildingConfig, geo: &Geometry, k: &OracleConstants) -> f64 {
        let gross = geo.external_wall_area + geo.window_area;
        let transmission = cfg.u_wall * geo.external_wall_area
            + cfg.u_windows * geo.window_area
            + (cfg.u_roof + cfg.u_ground_floor) * cfg.ground_floor_area;
        let ventilation = AIR_HEAT_CAPACITY * cfg.permeability / k.permeability_divisor * geo.volume;
        let solar = cfg.g_windows
            * (k.irradiation_east_west * geo.window_area
                + (k.irradiation_south - k.irradiation_east_west) * cfg.wwr_south * gross / 4.0
                + (k.irradiation_north - k.irradiation_east_west) * cfg.wwr_north * gross / 4.0);
        let internal = (k.light_heat_gain + cfg.equipment_gain + k.occupant_output / cfg.occupancy)
            * cfg.ground_floor_area
            * cfg.number_of_floors
            * k.gain_hours
            / 1000.0;
        ((transmission + ventilation) * k.degree_hours / 1000.0
            - k.gain_utilisation * (solar + internal))
            .max(0.0)
    }

    #[test]
    fn load_depends_on_graph_parents_only() {
        let k = OracleConstants::default();
        for cfg in sample_configs(&default_schema(), 50, 4).unwrap() {
            let geo = derive_geometry(&cfg).unwrap();
            let direct = heating_load_with(&cfg, &k).unwrap();
            let via_parents = load_from_parents(&cfg, &geo, &k);
            assert!((direct - via_parents).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn reference_graph_shape() {
        let g = ground_truth_dag();
        g.require_dag().unwrap();
        assert_eq!(g.len(), 22);
        assert!(g.has_directed_by_name(col::HEIGHT, col::VOLUME));
        assert!(!g.has_directed_by_name(col::VOLUME, col::HEIGHT));
        let (e, w) = (g.id(col::EXTERNAL_WALL_AREA).unwrap(), g.id(col::WINDOW_AREA).unwrap());
        assert!(!g.adjacent(e, w));
        for iso in [col::U_INTERNAL_WALL, col::U_INTERNAL_FLOOR] {
            assert!(g.adjacents(g.id(iso).unwrap()).is_empty());
        }
        let load = g.id(col::HEATING_LOAD).unwrap();
        let parents: Vec<&str> = g.parents(load).iter().map(|&v| g.name(v)).collect();
        assert_eq!(parents.len(), 16);
    }
}
