//! Driver for the nsfg solver: configuration, the coupled time loop,
//! artifacts, parameter sweeps and property suites.

pub mod check;
pub mod config;
pub mod output;
pub mod report;
pub mod sim;
pub mod sweep;

pub use config::{ConfigError, RunConfig};
pub use output::{run_to_dir, RunArtifacts, RunManifest};
pub use sim::{simulate, Outcome, Row, RunError, Termination};
pub use sweep::{sweep, Axis, SweepSummary};
