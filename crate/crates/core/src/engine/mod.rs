pub mod config;
pub mod cost;
pub mod merge;
pub mod metrics;
pub mod sim;
pub mod trace;

pub use trace::migration_target;
