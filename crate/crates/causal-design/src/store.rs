//! Versioned in-memory store behind the HTTP service.
//!
//! Datasets and graph versions are immutable once inserted; editing a graph
//! inserts a new version that points at its parent. Fitted models are a
//! cache and are never persisted.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use causal_design_core::baseline::TreeEnsemble;
use causal_design_core::discovery::DiscoveryReport;
use causal_design_core::estimation::{Expansion, FittedScm};
use causal_design_core::{CausalGraph, Dataset, KnowledgeConstraints, ParameterSpec};
use serde::{Deserialize, Serialize};

use crate::io::{self, IoError};

/// How a dataset entered the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Origin {
    Generated { n: usize, seed: u64, noise: f64 },
    Uploaded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub dataset: Dataset,
    pub schema: Vec<ParameterSpec>,
    pub origin: Origin,
}

/// Where a graph version came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Discovered { report: Box<DiscoveryReport> },
    Constrained { parent: String, constraints: KnowledgeConstraints },
    Uploaded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphEntry {
    pub dataset_id: String,
    pub graph: CausalGraph,
    pub provenance: Provenance,
}

impl GraphEntry {
    pub fn parent(&self) -> Option<&str> {
        match &self.provenance {
            Provenance::Constrained { parent, .. } => Some(parent),
            Provenance::Discovered { .. } | Provenance::Uploaded => None,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Snapshot {
    next_id: u64,
    datasets: BTreeMap<String, Arc<DatasetEntry>>,
    graphs: BTreeMap<String, Arc<GraphEntry>>,
}

#[derive(Default)]
struct Models {
    scm: BTreeMap<(String, Expansion), Arc<FittedScm>>,
    baseline: BTreeMap<String, Arc<TreeEnsemble>>,
}

/// Thread-safe store. Readers clone `Arc`s out of the lock and work on
/// immutable snapshots; inserts are serialized by the write lock.
pub struct SessionStore {
    state: RwLock<Snapshot>,
    models: Mutex<Models>,
    persist: Option<PathBuf>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore {
            state: RwLock::new(Snapshot::default()),
            models: Mutex::new(Models::default()),
            persist: None,
        }
    }

    /// Store mirrored to a JSON file; an existing file is loaded first.
    pub fn persistent(path: PathBuf) -> Result<Self, IoError> {
        let snapshot = if path.exists() {
            io::read_json(&path)?
        } else {
            Snapshot::default()
        };
        Ok(SessionStore {
            state: RwLock::new(snapshot),
            models: Mutex::new(Models::default()),
            persist: Some(path),
        })
    }

    fn next_id(s: &mut Snapshot, prefix: char) -> String {
        s.next_id += 1;
        format!("{prefix}{}", s.next_id)
    }

    fn save(&self, s: &Snapshot) {
        let Some(path) = &self.persist else { return };
        let tmp = path.with_extension("tmp");
        let result = io::write_text(&tmp, &serde_json::to_string(s).expect("store serializes"))
            .and_then(|_| {
                std::fs::rename(&tmp, path).map_err(|source| IoError::File {
                    path: path.clone(),
                    source,
                })
            });
        if let Err(e) = result {
            log::error!("could not persist store: {e}");
        }
    }

    pub fn insert_dataset(&self, entry: DatasetEntry) -> String {
        let mut s = self.state.write().expect("store lock");
        let id = Self::next_id(&mut s, 'd');
        s.datasets.insert(id.clone(), Arc::new(entry));
        self.save(&s);
        id
    }

    pub fn insert_graph(&self, entry: GraphEntry) -> String {
        let mut s = self.state.write().expect("store lock");
        let id = Self::next_id(&mut s, 'g');
        s.graphs.insert(id.clone(), Arc::new(entry));
        self.save(&s);
        id
    }

    pub fn dataset(&self, id: &str) -> Option<Arc<DatasetEntry>> {
        self.state.read().expect("store lock").datasets.get(id).cloned()
    }

    pub fn graph(&self, id: &str) -> Option<Arc<GraphEntry>> {
        self.state.read().expect("store lock").graphs.get(id).cloned()
    }

    /// `(graph id, entry)` pairs in insertion order.
    pub fn graphs(&self) -> Vec<(String, Arc<GraphEntry>)> {
        let s = self.state.read().expect("store lock");
        let mut v: Vec<_> = s.graphs.iter().map(|(k, g)| (k.clone(), g.clone())).collect();
        v.sort_by_key(|(k, _)| k[1..].parse::<u64>().unwrap_or(u64::MAX));
        v
    }

    pub fn cached_scm(&self, graph_id: &str, expansion: Expansion) -> Option<Arc<FittedScm>> {
        let m = self.models.lock().expect("model lock");
        m.scm.get(&(graph_id.to_string(), expansion)).cloned()
    }

    pub fn cache_scm(&self, graph_id: &str, expansion: Expansion, scm: Arc<FittedScm>) {
        let mut m = self.models.lock().expect("model lock");
        m.scm.insert((graph_id.to_string(), expansion), scm);
    }

    pub fn cached_baseline(&self, dataset_id: &str) -> Option<Arc<TreeEnsemble>> {
        self.models.lock().expect("model lock").baseline.get(dataset_id).cloned()
    }

    pub fn cache_baseline(&self, dataset_id: &str, model: Arc<TreeEnsemble>) {
        let mut m = self.models.lock().expect("model lock");
        m.baseline.insert(dataset_id.to_string(), model);
    }
}
