//! CSV results, locality statistics and strategy comparison.

pub mod compare;
pub mod csv;
pub mod locality;

pub use self::compare::compare_strategies;
pub use self::csv::{read_metrics_csv, write_metrics_csv, MetricsRow, METRICS_HEADER};
pub use self::locality::{locality_report, r_micro, r_sub, LocalityConfig, LocalityRow, RootCounting};
