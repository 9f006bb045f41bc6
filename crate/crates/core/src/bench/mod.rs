//! Traffic generation, trials, throughput search and the metric engines.

pub mod matrix;
pub mod metrics;
pub mod search;
pub mod sweep;
pub mod traffic;
pub mod trial;

pub use matrix::{run_matrix, MatrixConfig};
pub use metrics::{delay_stats, ipdv_stats, loss_ratio, DelayStats, EmptyError, IpdvStats, MetricsReport};
pub use search::{rfc2544_throughput, SearchConfig};
pub use sweep::{load_sweep, LoadSweep, SweepConfig, SweepPoint};
pub use traffic::{generate_stream, Fill, FrameSchedule, HeaderKind, SpecError, TrafficSpec};
pub use trial::{run_trial, BenchError, Sample, Scenario, TrialOptions, TrialResult, TunnelSetup};
