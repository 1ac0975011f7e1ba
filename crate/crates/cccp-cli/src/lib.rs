//! Command implementations behind the `cccp` binary, split out as a library
//! so the integration tests can drive them directly.

pub mod bench;
pub mod cli;
pub mod gen;
pub mod manifest;
pub mod svg;
