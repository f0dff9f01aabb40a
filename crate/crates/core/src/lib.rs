//! Causal inference for parametric building design spaces.
//!
//! The crate covers the whole what-if pipeline on in-memory data: a design
//! space schema and a steady-state heating-load model that produces labelled
//! data ([`dataset`], [`oracle`]), score-based structure discovery
//! ([`discovery`]), expert editing of the discovered graph ([`graph`]),
//! back-door identification ([`identify`]), interventional effect estimation
//! ([`estimation`]) and a purely predictive boosted-tree baseline
//! ([`baseline`]). [`validation`] ties these together against paired oracle
//! runs.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and the
//! HTTP service live in the `causal-design` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod dataset;
pub mod discovery;
pub mod estimation;
pub mod graph;
pub mod identify;
pub mod linalg;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod synthetic;
pub mod validation;

pub use dataset::{ColumnDesc, ColumnRole, Dataset, DatasetError, ParamKind, ParameterSpec};
pub use graph::{CausalGraph, GraphError, KnowledgeConstraints, NodeId, PathDiagnostic};
