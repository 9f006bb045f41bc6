//! Loss, delay and IPDV against offered load, relative to the measured
//! throughput of the same path.

use serde::{Deserialize, Serialize};

use crate::bench::matrix::repetition;
use crate::bench::metrics::{delay_stats, ipdv_stats, loss_ratio};
use crate::bench::search::{rfc2544_throughput, SearchConfig};
use crate::bench::traffic::{HeaderKind, TrafficSpec};
use crate::bench::trial::{run_trial, BenchError, Scenario, TrialOptions, TunnelSetup};
use crate::sim::LinkParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Offered load as a fraction of `LoadSweep::throughput_bps`.
    pub load: f64,
    pub offered_bps: f64,
    pub loss_ratio: f64,
    pub delay_avg_s: f64,
    pub ipdv_mean_abs_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSweep {
    pub scenario: Scenario,
    pub header_kind: HeaderKind,
    pub frame_bytes: u32,
    pub throughput_bps: f64,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub loads: Vec<f64>,
    pub seeds: u32,
    pub base_seed: u64,
}

/// Throughput is searched on repetition 0; every load point averages
/// `seeds` trials. Points where fewer than two frames arrive report zero
/// delay and IPDV.
pub fn load_sweep(
    scenario: Scenario,
    link: &LinkParams,
    template: &TrafficSpec,
    tunnel: Option<&TunnelSetup>,
    search: &SearchConfig,
    sweep: &SweepConfig,
) -> Result<LoadSweep, BenchError> {
    let (link0, fill0) = repetition(link, template.fill, sweep.base_seed, 0);
    let throughput = rfc2544_throughput(scenario, &link0, &TrafficSpec { fill: fill0, ..template.clone() }, tunnel, search)?;
    let opts = TrialOptions { settle_s: search.settle_s, ..TrialOptions::default() };
    let mut points = Vec::with_capacity(sweep.loads.len());
    for &load in &sweep.loads {
        let offered_bps = load * throughput;
        let (mut loss, mut delay, mut ipdv) = (0.0, 0.0, 0.0);
        let n = sweep.seeds.max(1);
        for rep in 0..n {
            let (link_r, fill) = repetition(link, template.fill, sweep.base_seed, rep);
            let spec = TrafficSpec { offered_bps, duration_s: search.trial_duration_s, fill, ..template.clone() };
            let trial = run_trial(scenario, &link_r, &spec, tunnel, &opts)?;
            loss += loss_ratio(&trial);
            delay += delay_stats(&trial).map_or(0.0, |d| d.avg_s);
            ipdv += ipdv_stats(&trial).map_or(0.0, |v| v.mean_abs_s);
        }
        let n = f64::from(n);
        points.push(SweepPoint { load, offered_bps, loss_ratio: loss / n, delay_avg_s: delay / n, ipdv_mean_abs_s: ipdv / n });
    }
    Ok(LoadSweep { scenario, header_kind: template.header_kind, frame_bytes: template.frame_bytes, throughput_bps: throughput, points })
}
