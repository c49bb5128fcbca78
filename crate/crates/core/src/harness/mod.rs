//! Configuration, I/O and the subcommands behind the `phonon-hop` binary.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod verify;

pub use config::RunConfig;
