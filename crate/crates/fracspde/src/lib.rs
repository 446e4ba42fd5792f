//! Command-line harness around [`fracspde_core`]: JSON configuration,
//! parallel rate studies, CSV/JSON output and self-check suites.

pub mod commands;
pub mod config;
pub mod output;
pub mod study;
pub mod verify;

pub use fracspde_core as core;
