//! One-way delay, loss and delay-variation over a trial's samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::trial::TrialResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("not enough delivered frames for this statistic")]
pub struct EmptyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub min_s: f64,
    pub avg_s: f64,
    pub max_s: f64,
    pub p99_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpdvStats {
    pub mean_abs_s: f64,
    pub p99_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub throughput_bps: f64,
    /// Offered load the delay, loss and IPDV figures were taken at.
    pub measured_at_bps: f64,
    pub delay_min_s: f64,
    pub delay_avg_s: f64,
    pub delay_max_s: f64,
    pub delay_p99_s: f64,
    pub loss_ratio: f64,
    pub ipdv_mean_abs_s: f64,
    pub ipdv_p99_s: f64,
}

impl MetricsReport {
    pub fn from_trial(throughput_bps: f64, measured_at_bps: f64, trial: &TrialResult) -> Result<Self, EmptyError> {
        let d = delay_stats(trial)?;
        let v = ipdv_stats(trial)?;
        Ok(Self {
            throughput_bps,
            measured_at_bps,
            delay_min_s: d.min_s,
            delay_avg_s: d.avg_s,
            delay_max_s: d.max_s,
            delay_p99_s: d.p99_s,
            loss_ratio: loss_ratio(trial),
            ipdv_mean_abs_s: v.mean_abs_s,
            ipdv_p99_s: v.p99_s,
        })
    }

    /// Field-wise arithmetic mean.
    pub fn mean(reports: &[MetricsReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(Self {
            throughput_bps: avg(|r| r.throughput_bps),
            measured_at_bps: avg(|r| r.measured_at_bps),
            delay_min_s: avg(|r| r.delay_min_s),
            delay_avg_s: avg(|r| r.delay_avg_s),
            delay_max_s: avg(|r| r.delay_max_s),
            delay_p99_s: avg(|r| r.delay_p99_s),
            loss_ratio: avg(|r| r.loss_ratio),
            ipdv_mean_abs_s: avg(|r| r.ipdv_mean_abs_s),
            ipdv_p99_s: avg(|r| r.ipdv_p99_s),
        })
    }
}

/// Nearest-rank percentile of an ascending slice.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn delay_stats(result: &TrialResult) -> Result<DelayStats, EmptyError> {
    if result.samples.is_empty() {
        return Err(EmptyError);
    }
    let d = sorted(result.samples.iter().map(|s| s.delay()).collect());
    Ok(DelayStats {
        min_s: d[0],
        avg_s: d.iter().sum::<f64>() / d.len() as f64,
        max_s: d[d.len() - 1],
        p99_s: nearest_rank(&d, 99.0),
    })
}

pub fn loss_ratio(result: &TrialResult) -> f64 {
    if result.tx_count == 0 {
        return 0.0;
    }
    (result.tx_count - result.rx_count) as f64 / result.tx_count as f64
}

/// Consecutive delivered frames in sent order form the selected pairs.
pub fn ipdv_stats(result: &TrialResult) -> Result<IpdvStats, EmptyError> {
    if result.samples.len() < 2 {
        return Err(EmptyError);
    }
    let v = sorted(result.samples.windows(2).map(|w| (w[1].delay() - w[0].delay()).abs()).collect());
    Ok(IpdvStats { mean_abs_s: v.iter().sum::<f64>() / v.len() as f64, p99_s: nearest_rank(&v, 99.0) })
}
