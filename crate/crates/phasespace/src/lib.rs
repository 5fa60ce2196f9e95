//! Runner, config format, binary grid files and CSV output for
//! `phasespace-core`.

pub mod config;
pub mod csvout;
pub mod error;
pub mod gridfile;
pub mod oracles;
pub mod runner;

pub use config::{parse_config, ConfigError, RunConfig};
pub use error::RunError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
