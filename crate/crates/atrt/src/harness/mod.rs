//! Phantoms, configuration, file formats, experiments and the acceptance checks.

pub mod acceptance;
pub mod config;
pub mod experiment;
pub mod io;
pub mod phantom;
pub mod plot;
