//! File formats and command-line pipelines around the `gamecx` core.
//!
//! Every output carries a provenance record: CSV files start with `#`
//! comment lines holding the config hash and seed, JSON documents have a
//! `provenance` field, and the games file (a bare JSON array) gets a
//! `.provenance.json` sidecar.

pub mod commands;
pub mod error;
pub mod io;
pub mod parallel;
pub mod provenance;
