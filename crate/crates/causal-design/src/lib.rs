//! File formats, command line and HTTP service around
//! [`causal_design_core`].

pub mod cli;
pub mod io;
pub mod names;
pub mod service;
pub mod store;

pub use causal_design_core as core;
