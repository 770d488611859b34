//! Scenario files, the built-in registry, the verification pipeline and simulation output on
//! top of `geored-core`.

pub mod format;
pub mod pipeline;
pub mod registry;
pub mod scenario;
pub mod simulate;

pub use format::LoadError;
pub use pipeline::{run_pipeline, RunReport, Stage, StageStatus};
pub use registry::registry;
pub use scenario::{load_scenario, parse_scenario, Scenario};
