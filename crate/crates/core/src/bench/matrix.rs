//! Throughput search plus loaded-path metrics for every (frame size,
//! scenario) cell, averaged over seeded repetitions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::metrics::MetricsReport;
use crate::bench::search::{rfc2544_throughput, SearchConfig};
use crate::bench::traffic::{Fill, HeaderKind, TrafficSpec};
use crate::bench::trial::{mix_seed, run_trial, BenchError, Scenario, TrialOptions, TunnelSetup};
use crate::report::{ComparisonTable, TableRow};
use crate::sim::LinkParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub frame_sizes: Vec<u32>,
    pub scenarios: Vec<Scenario>,
    pub header_kind: HeaderKind,
    pub fill: Fill,
    pub seeds: u32,
    pub base_seed: u64,
    pub search: SearchConfig,
    /// Fraction of the found throughput at which delay, loss and IPDV are taken.
    pub measure_load: f64,
    pub preset: String,
}

impl MatrixConfig {
    pub fn new(frame_sizes: Vec<u32>, scenarios: Vec<Scenario>, header_kind: HeaderKind) -> Self {
        Self {
            frame_sizes,
            scenarios,
            header_kind,
            fill: Fill::Zeros,
            seeds: 20,
            base_seed: 0,
            search: SearchConfig::default(),
            measure_load: 0.9,
            preset: "custom".into(),
        }
    }
}

/// Channel and fill as seen by repetition `rep`.
pub fn repetition(link: &LinkParams, fill: Fill, base_seed: u64, rep: u32) -> (LinkParams, Fill) {
    let mut link = link.clone();
    link.seed = mix_seed(link.seed ^ base_seed, u64::from(rep));
    let fill = match fill {
        Fill::Random { seed } => Fill::Random { seed: mix_seed(seed ^ base_seed, u64::from(rep)) },
        other => other,
    };
    (link, fill)
}

/// Throughput, then one trial at `measure_load` of it.
pub fn measure_cell(
    scenario: Scenario,
    link: &LinkParams,
    template: &TrafficSpec,
    tunnel: Option<&TunnelSetup>,
    search: &SearchConfig,
    measure_load: f64,
) -> Result<MetricsReport, BenchError> {
    let throughput = rfc2544_throughput(scenario, link, template, tunnel, search)?;
    let at = measure_load * throughput;
    let spec = TrafficSpec { offered_bps: at, duration_s: search.trial_duration_s, ..template.clone() };
    let opts = TrialOptions { settle_s: search.settle_s, ..TrialOptions::default() };
    let trial = run_trial(scenario, link, &spec, tunnel, &opts)?;
    Ok(MetricsReport::from_trial(throughput, at, &trial)?)
}

pub fn run_matrix(cfg: &MatrixConfig, link: &LinkParams, tunnel: Option<&TunnelSetup>) -> Result<ComparisonTable, BenchError> {
    let mut sizes = cfg.frame_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let jobs: Vec<(u32, Scenario, u32)> = sizes
        .iter()
        .flat_map(|&f| cfg.scenarios.iter().flat_map(move |&s| (0..cfg.seeds).map(move |r| (f, s, r))))
        .collect();
    let reports: Vec<MetricsReport> = jobs
        .par_iter()
        .map(|&(frame_bytes, scenario, rep)| {
            let (link, fill) = repetition(link, cfg.fill, cfg.base_seed, rep);
            let template = TrafficSpec {
                header_kind: cfg.header_kind,
                frame_bytes,
                offered_bps: cfg.search.line_rate_bps,
                duration_s: cfg.search.trial_duration_s,
                fill,
            };
            measure_cell(scenario, &link, &template, tunnel, &cfg.search, cfg.measure_load)
        })
        .collect::<Result<_, _>>()?;
    let mut table = ComparisonTable::new(cfg.header_kind, cfg.seeds, cfg.preset.clone());
    let per_cell = cfg.seeds.max(1) as usize;
    let mut chunks = reports.chunks(per_cell);
    for &frame_bytes in &sizes {
        let mut row = TableRow::new(frame_bytes);
        for &scenario in &cfg.scenarios {
            if let Some(mean) = chunks.next().and_then(MetricsReport::mean) {
                row.set_throughput(scenario, mean.throughput_bps);
                row.metrics.insert(scenario, mean);
            }
        }
        table.rows.push(row);
    }
    Ok(table)
}
