//! Zero-loss (or threshold-loss) throughput search.
//!
//! Rates are probed on the grid `k * resolution_bps`, `k = 1..=K` with
//! `K = floor(line_rate / resolution)`, so the result is always a grid point.

use serde::{Deserialize, Serialize};

use crate::bench::metrics::loss_ratio;
use crate::bench::traffic::TrafficSpec;
use crate::bench::trial::{run_trial, BenchError, Scenario, TrialOptions, TunnelSetup, DEFAULT_SETTLE_S};
use crate::sim::LinkParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub resolution_bps: f64,
    pub loss_threshold: f64,
    pub trial_duration_s: f64,
    #[serde(default = "default_line_rate")]
    pub line_rate_bps: f64,
    #[serde(default = "default_settle")]
    pub settle_s: f64,
}

fn default_line_rate() -> f64 {
    100e6
}

fn default_settle() -> f64 {
    DEFAULT_SETTLE_S
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            resolution_bps: 10e3,
            loss_threshold: 0.0,
            trial_duration_s: 2.0,
            line_rate_bps: default_line_rate(),
            settle_s: default_settle(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::SearchConfig(m.to_string()));
        if !(self.resolution_bps > 0.0) {
            return bad("resolution_bps must be positive");
        }
        if !(0.0..1.0).contains(&self.loss_threshold) {
            return bad("loss_threshold must be in [0, 1)");
        }
        if !(self.trial_duration_s > 0.0) {
            return bad("trial_duration_s must be positive");
        }
        if self.grid_len() < 1 {
            return bad("line_rate_bps must be at least one resolution step");
        }
        if !(self.settle_s >= 0.0) {
            return bad("settle_s must be non-negative");
        }
        Ok(())
    }

    pub fn grid_len(&self) -> u64 {
        (self.line_rate_bps / self.resolution_bps * (1.0 + 1e-12)).floor() as u64
    }

    pub fn rate(&self, k: u64) -> f64 {
        k as f64 * self.resolution_bps
    }
}

/// Whether one trial at `offered_bps` meets the loss threshold.
pub fn probe(
    scenario: Scenario,
    link: &LinkParams,
    template: &TrafficSpec,
    tunnel: Option<&TunnelSetup>,
    search: &SearchConfig,
    offered_bps: f64,
) -> Result<bool, BenchError> {
    let spec = TrafficSpec { offered_bps, duration_s: search.trial_duration_s, ..template.clone() };
    let opts = TrialOptions {
        settle_s: search.settle_s,
        abort_loss_above: Some(search.loss_threshold),
        record_events: false,
    };
    let result = run_trial(scenario, link, &spec, tunnel, &opts)?;
    Ok(!result.aborted && loss_ratio(&result) <= search.loss_threshold)
}

pub fn rfc2544_throughput(
    scenario: Scenario,
    link: &LinkParams,
    template: &TrafficSpec,
    tunnel: Option<&TunnelSetup>,
    search: &SearchConfig,
) -> Result<f64, BenchError> {
    search.validate()?;
    let (mut lo, mut hi) = (0u64, search.grid_len() + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(scenario, link, template, tunnel, search, search.rate(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0 {
        return Err(BenchError::Search { min_bps: search.rate(1) });
    }
    Ok(search.rate(lo))
}
