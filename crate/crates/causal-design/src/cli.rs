//! Subcommands mapping the four pipeline steps (discover, prune, identify,
//! estimate) onto files, plus data generation, validation and the server.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use causal_design_core::baseline::{fit_baseline, BoostParams};
use causal_design_core::dataset::{columns as col, default_schema, generate_dataset};
use causal_design_core::discovery::{ges_discover, GesConfig};
use causal_design_core::estimation::{estimate_effect, fit_scm, Expansion, Scenario};
use causal_design_core::graph::apply_knowledge;
use causal_design_core::identify::identify_estimand;
use causal_design_core::oracle::{ground_truth_dag, OracleConstants};
use causal_design_core::validation::{reference_scenario, validate_scenario};
use causal_design_core::{CausalGraph, Dataset, KnowledgeConstraints};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::io::{self, IoError};
use crate::names;
use crate::service;
use crate::store::SessionStore;

#[derive(Debug, Parser)]
#[command(name = "causal-design", version, about = "Causal what-if analysis for parametric building design")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample designs, label them with the heating-load model, write CSV.
    Generate(GenerateArgs),
    /// Learn a CPDAG from a CSV dataset.
    Discover(DiscoverArgs),
    /// Apply expert constraints to a graph.
    Prune(PruneArgs),
    /// Find back-door adjustment sets for a treatment/outcome pair.
    Identify(IdentifyArgs),
    /// Estimate an intervention effect by sampling the fitted causal model.
    Estimate(EstimateArgs),
    /// Compare causal, naive and oracle answers to one scenario.
    Validate(ValidateArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative standard deviation of the derived-column jitter.
    #[arg(long, default_value_t = 0.005)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the parameter schema as JSON.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Multiplier on the BIC complexity penalty.
    #[arg(long, default_value_t = 1.0)]
    pub penalty: f64,
    #[arg(long, default_value_t = 12)]
    pub max_parents: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Operator log, score trajectory and cache statistics.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// JSON `{required: [[a, b]], forbidden: [[a, b]], tiers: [[..]]}`.
    #[arg(long)]
    pub constraints: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub treatment: String,
    #[arg(long)]
    pub outcome: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub treatment: String,
    #[arg(long)]
    pub control: f64,
    #[arg(long)]
    pub treat: f64,
    #[arg(long, default_value = col::HEATING_LOAD)]
    pub outcome: String,
    /// Pinned parameter, `NAME=VALUE`; repeatable.
    #[arg(long = "condition", value_name = "NAME=VALUE")]
    pub conditions: Vec<String>,
    #[arg(long, default_value = "interactions2")]
    pub expansion: Expansion,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bootstrap refits for the standard error.
    #[arg(long, default_value_t = 30)]
    pub bootstrap: usize,
    /// Add resampled residuals to each structural equation.
    #[arg(long)]
    pub residual_noise: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Scenario JSON; the floor-height scenario when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub oracle_samples: usize,
    /// Seeds the generated training data and the oracle draws.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Training rows to generate when no `--data` is given.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.005)]
    pub noise: f64,
    /// Train on this CSV instead of generating data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Causal graph; the reference structure when omitted.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value = "interactions2")]
    pub expansion: Expansion,
    /// Full report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Mirror the session store to this JSON file.
    #[arg(long)]
    pub persist: Option<PathBuf>,
    /// Only this origin may call the API from a browser; any when omitted.
    #[arg(long)]
    pub cors_origin: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: flags, files or their content. Exit code 2.
    #[error("{0}")]
    Invalid(String),
    /// Exit code 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn write_failed(e: IoError) -> CliError {
    CliError::Internal(e.to_string())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    io::read_json(path).map_err(invalid)
}

fn load_graph(path: &Path) -> Result<CausalGraph, CliError> {
    read_json(path)
}

fn load_data(path: &Path) -> Result<Dataset, CliError> {
    io::load_csv(path, &default_schema()).map_err(invalid)
}

/// Writes JSON to `path`, or to `out` when no path is given.
fn emit<T: Serialize, W: Write>(value: &T, path: Option<&Path>, out: &mut W) -> Result<(), CliError> {
    match path {
        Some(p) => io::write_json(p, value).map_err(write_failed),
        None => out
            .write_all(io::to_json(value).as_bytes())
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn resolve(token: &str, names: &[String]) -> Result<String, CliError> {
    names::resolve(token, names).map(str::to_string).map_err(CliError::Invalid)
}

/// Builds the scenario from `estimate` flags, resolving abbreviated names.
pub fn scenario_from_args(a: &EstimateArgs, names: &[String]) -> Result<Scenario, CliError> {
    let mut sc = Scenario::new(
        &resolve(&a.treatment, names)?,
        a.control,
        a.treat,
        &resolve(&a.outcome, names)?,
    );
    for c in &a.conditions {
        let (name, value) = names::parse_assignment(c, names).map_err(CliError::Invalid)?;
        if sc.conditions.insert(name.to_string(), value).is_some() {
            return Err(CliError::Invalid(format!("condition {name} given twice")));
        }
    }
    sc.n_samples = a.samples;
    sc.seed = a.seed;
    sc.bootstrap = a.bootstrap;
    sc.noise = a.residual_noise;
    Ok(sc)
}

pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => {
            let schema = default_schema();
            let ds = generate_dataset(&schema, a.n, a.seed, a.noise).map_err(invalid)?;
            io::save_csv(&ds, &a.out).map_err(write_failed)?;
            if let Some(p) = &a.schema {
                io::write_json(p, &schema).map_err(write_failed)?;
            }
            log::info!("wrote {} rows × {} columns to {}", ds.n(), ds.p(), a.out.display());
            Ok(())
        }
        Command::Discover(a) => {
            let ds = load_data(&a.data)?;
            let cfg = GesConfig {
                penalty_multiplier: a.penalty,
                max_parents: a.max_parents,
                ..GesConfig::default()
            };
            let report = ges_discover(&ds, &cfg).map_err(invalid)?;
            io::write_json(&a.out, &report.graph).map_err(write_failed)?;
            if let Some(p) = &a.report {
                io::write_json(p, &report).map_err(write_failed)?;
            }
            log::info!(
                "{} operators, {} edges, score {:.3}",
                report.operators.len(),
                report.graph.edge_count(),
                report.final_score
            );
            Ok(())
        }
        Command::Prune(a) => {
            let g = load_graph(&a.graph)?;
            let k: KnowledgeConstraints = read_json(&a.constraints)?;
            let pruned = apply_knowledge(&g, &k).map_err(invalid)?;
            io::write_json(&a.out, &pruned).map_err(write_failed)
        }
        Command::Identify(a) => {
            let g = load_graph(&a.graph)?;
            let names = g.names().to_vec();
            let est = identify_estimand(&g, &resolve(&a.treatment, &names)?, &resolve(&a.outcome, &names)?)
                .map_err(invalid)?;
            emit(&est, a.out.as_deref(), out)
        }
        Command::Estimate(a) => {
            let g = load_graph(&a.graph)?;
            let ds = load_data(&a.data)?;
            let sc = scenario_from_args(&a, &ds.names())?;
            let scm = fit_scm(&ds, &g, a.expansion).map_err(invalid)?;
            let est = estimate_effect(&scm, &sc).map_err(invalid)?;
            emit(&est, a.out.as_deref(), out)
        }
        Command::Validate(a) => {
            let schema = default_schema();
            let sc: Scenario = match &a.scenario {
                Some(p) => read_json(p)?,
                None => reference_scenario(),
            };
            let ds = match &a.data {
                Some(p) => load_data(p)?,
                None => generate_dataset(&schema, a.n, a.seed, a.noise).map_err(invalid)?,
            };
            let g = match &a.graph {
                Some(p) => load_graph(p)?,
                None => ground_truth_dag(),
            };
            let scm = fit_scm(&ds, &g, a.expansion).map_err(invalid)?;
            let model = fit_baseline(&ds, &sc.outcome, &BoostParams::default()).map_err(invalid)?;
            let report = validate_scenario(
                &scm,
                &model,
                &schema,
                &sc,
                a.oracle_samples,
                a.seed,
                &OracleConstants::default(),
            )
            .map_err(invalid)?;
            let text = format!(
                "{}: {} → {} on {}\n{}",
                sc.treatment,
                sc.control_value,
                sc.treatment_value,
                sc.outcome,
                report.table()
            );
            out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))?;
            if let Some(p) = &a.out {
                io::write_json(p, &report).map_err(write_failed)?;
            }
            Ok(())
        }
        Command::Serve(a) => {
            let store = match a.persist {
                Some(p) => SessionStore::persistent(p).map_err(invalid)?,
                None => SessionStore::in_memory(),
            };
            let origin = a
                .cors_origin
                .map(|o| o.parse().map_err(|_| CliError::Invalid(format!("bad --cors-origin {o}"))))
                .transpose()?;
            let addr = SocketAddr::new(a.host, a.port);
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            rt.block_on(service::serve(addr, Arc::new(store), origin))
                .map_err(|e| CliError::Internal(format!("server on {addr}: {e}")))
        }
    }
}

