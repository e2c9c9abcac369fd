//! Library surface of the scenario runner; the `econodyn` binary is a thin
//! wrapper over these modules.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
