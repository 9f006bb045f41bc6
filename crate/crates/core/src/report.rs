//! Comparison tables, the throughput-loss table and their text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::metrics::MetricsReport;
use crate::bench::sweep::LoadSweep;
use crate::bench::traffic::HeaderKind;
use crate::bench::trial::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub frame_bytes: u32,
    pub baseline_bps: Option<f64>,
    pub vpn_bps: Option<f64>,
    pub vpn_comp_bps: Option<f64>,
    /// Delay/loss/IPDV per scenario, when measured.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<Scenario, MetricsReport>,
}

impl TableRow {
    pub fn new(frame_bytes: u32) -> Self {
        Self { frame_bytes, baseline_bps: None, vpn_bps: None, vpn_comp_bps: None, metrics: BTreeMap::new() }
    }

    pub fn throughput(&self, scenario: Scenario) -> Option<f64> {
        match scenario {
            Scenario::Baseline => self.baseline_bps,
            Scenario::Tunnel => self.vpn_bps,
            Scenario::TunnelComp => self.vpn_comp_bps,
        }
    }

    pub fn set_throughput(&mut self, scenario: Scenario, bps: f64) {
        let slot = match scenario {
            Scenario::Baseline => &mut self.baseline_bps,
            Scenario::Tunnel => &mut self.vpn_bps,
            Scenario::TunnelComp => &mut self.vpn_comp_bps,
        };
        *slot = Some(bps);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub header_kind: HeaderKind,
    pub seeds: u32,
    pub preset: String,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("table: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0} table has no {1} column at {2} bytes")]
    MissingColumn(&'static str, &'static str, u32),
}

impl ComparisonTable {
    pub fn new(header_kind: HeaderKind, seeds: u32, preset: impl Into<String>) -> Self {
        Self { header_kind, seeds, preset: preset.into(), rows: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.rows.windows(2).any(|w| w[0].frame_bytes >= w[1].frame_bytes) {
            return Err(ReportError::Invalid("rows must be unique and ascending by frame size".into()));
        }
        for r in &self.rows {
            for v in [r.baseline_bps, r.vpn_bps, r.vpn_comp_bps].into_iter().flatten() {
                if !(v > 0.0) {
                    return Err(ReportError::Invalid(format!("non-positive throughput at {} bytes", r.frame_bytes)));
                }
            }
        }
        Ok(())
    }

    pub fn row(&self, frame_bytes: u32) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.frame_bytes == frame_bytes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let t: Self = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }
}

fn mbps3(bps: Option<f64>) -> String {
    bps.map(|v| format!("{:.3}", v / 1e6)).unwrap_or_default()
}

pub fn table_csv(t: &ComparisonTable) -> String {
    let mut out = String::from("frame_bytes,baseline_mbps,vpn_mbps,vpn_comp_mbps\n");
    for r in &t.rows {
        let _ = writeln!(out, "{},{},{},{}", r.frame_bytes, mbps3(r.baseline_bps), mbps3(r.vpn_bps), mbps3(r.vpn_comp_bps));
    }
    out
}

fn pad_table(title: &str, head: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = format!("{title}\n");
    let line = |cells: Vec<&str>| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
    };
    out += &line(head.to_vec());
    out.push('\n');
    out += &"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len().saturating_sub(1)));
    out.push('\n');
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
        out.push('\n');
    }
    out
}

fn kind_title(kind: HeaderKind) -> &'static str {
    match kind {
        HeaderKind::UdpLike => "UDP",
        HeaderKind::TcpLike => "TCP",
    }
}

pub fn table_text(t: &ComparisonTable) -> String {
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| vec![r.frame_bytes.to_string(), mbps3(r.baseline_bps), mbps3(r.vpn_bps), mbps3(r.vpn_comp_bps)])
        .collect();
    pad_table(
        &format!("{} average throughput (Mbps), preset {}, {} seeds", kind_title(t.header_kind), t.preset, t.seeds),
        &["Frame size", "Without VPN", "VPN", "VPN + compression"],
        &rows,
    )
}

/// Throughput against frame size, one column per scenario.
pub fn throughput_tsv(t: &ComparisonTable) -> String {
    let mut out = format!("# {} throughput_mbps\nframe_bytes\tbaseline\ttunnel\ttunnel_comp\n", t.header_kind.name());
    for r in &t.rows {
        let cell = |v: Option<f64>| v.map(|x| format!("{:.6}", x / 1e6)).unwrap_or_else(|| "NA".into());
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.frame_bytes, cell(r.baseline_bps), cell(r.vpn_bps), cell(r.vpn_comp_bps));
    }
    out
}

/// Average one-way delay against frame size, one column per scenario.
pub fn latency_tsv(t: &ComparisonTable) -> String {
    let mut out = format!("# {} delay_avg_ms\nframe_bytes\tbaseline\ttunnel\ttunnel_comp\n", t.header_kind.name());
    for r in &t.rows {
        let cells: Vec<String> = Scenario::ALL
            .iter()
            .map(|s| r.metrics.get(s).map(|m| format!("{:.6}", m.delay_avg_s * 1e3)).unwrap_or_else(|| "NA".into()))
            .collect();
        let _ = writeln!(out, "{}\t{}", r.frame_bytes, cells.join("\t"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossRow {
    pub frame_bytes: u32,
    pub loss_mbps: Decimal,
    pub loss_pct: Decimal,
}

fn decimal(v: f64) -> Decimal {
    Decimal::from_str(&v.to_string()).expect("finite f64 renders as a decimal")
}

fn half_up(d: Decimal, dp: u32) -> Decimal {
    d.round_dp_with_strategy(dp, RoundingStrategy::MidpointAwayFromZero)
}

/// Throughputs are taken at the 3-decimal Mbps precision of the comparison
/// tables; the loss is rounded to 2 decimals first and the percentage is
/// computed from that rounded loss.
pub fn loss_row(frame_bytes: u32, baseline_bps: f64, vpn_bps: f64) -> LossRow {
    let base = half_up(decimal(baseline_bps / 1e6), 3);
    let vpn = half_up(decimal(vpn_bps / 1e6), 3);
    let loss_mbps = half_up(base - vpn, 2);
    let loss_pct = if base.is_zero() { Decimal::ZERO } else { half_up(Decimal::ONE_HUNDRED * loss_mbps / base, 2) };
    LossRow { frame_bytes, loss_mbps, loss_pct }
}

pub fn loss_table(t: &ComparisonTable) -> Result<Vec<LossRow>, ReportError> {
    t.rows
        .iter()
        .map(|r| {
            let kind = t.header_kind.name();
            let base = r.baseline_bps.ok_or(ReportError::MissingColumn(kind, "baseline", r.frame_bytes))?;
            let vpn = r.vpn_bps.ok_or(ReportError::MissingColumn(kind, "vpn", r.frame_bytes))?;
            Ok(loss_row(r.frame_bytes, base, vpn))
        })
        .collect()
}

/// Loss csv merged by frame size; a side without a row leaves its cells empty.
pub fn loss_csv(udp: &[LossRow], tcp: &[LossRow]) -> String {
    let mut out = String::from("frame_bytes,udp_loss_mbps,udp_loss_pct,tcp_loss_mbps,tcp_loss_pct\n");
    for (frame, u, t) in merge_loss(udp, tcp) {
        let cells = |r: Option<&LossRow>| {
            r.map(|r| format!("{:.2},{:.2}", r.loss_mbps, r.loss_pct)).unwrap_or_else(|| ",".into())
        };
        let _ = writeln!(out, "{frame},{},{}", cells(u), cells(t));
    }
    out
}

fn merge_loss<'a>(udp: &'a [LossRow], tcp: &'a [LossRow]) -> Vec<(u32, Option<&'a LossRow>, Option<&'a LossRow>)> {
    let mut frames: Vec<u32> = udp.iter().chain(tcp).map(|r| r.frame_bytes).collect();
    frames.sort_unstable();
    frames.dedup();
    frames
        .into_iter()
        .map(|f| (f, udp.iter().find(|r| r.frame_bytes == f), tcp.iter().find(|r| r.frame_bytes == f)))
        .collect()
}

pub fn loss_text(udp: &[LossRow], tcp: &[LossRow]) -> String {
    let rows: Vec<Vec<String>> = merge_loss(udp, tcp)
        .into_iter()
        .map(|(f, u, t)| {
            let m = |r: Option<&LossRow>| r.map(|r| format!("{:.2}", r.loss_mbps)).unwrap_or_default();
            let p = |r: Option<&LossRow>| r.map(|r| format!("{:.2}", r.loss_pct)).unwrap_or_default();
            vec![f.to_string(), m(u), p(u), m(t), p(t)]
        })
        .collect();
    pad_table(
        "Loss in throughput with the tunnel, no compression",
        &["Frame size", "UDP loss (Mbps)", "UDP loss %", "TCP loss (Mbps)", "TCP loss %"],
        &rows,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    Loss,
    Ipdv,
    Delay,
}

/// One column per scenario sweep, rows keyed by load fraction.
pub fn sweep_tsv(sweeps: &[LoadSweep], metric: SweepMetric) -> String {
    let label = match metric {
        SweepMetric::Loss => "loss_ratio",
        SweepMetric::Ipdv => "ipdv_mean_abs_us",
        SweepMetric::Delay => "delay_avg_ms",
    };
    let mut out = format!("# {label}\nload");
    for s in sweeps {
        let _ = write!(out, "\t{}_{}_{}", s.scenario.name(), s.header_kind.name(), s.frame_bytes);
    }
    out.push('\n');
    let Some(first) = sweeps.first() else {
        return out;
    };
    for (i, p) in first.points.iter().enumerate() {
        let _ = write!(out, "{:.3}", p.load);
        for s in sweeps {
            let v = s.points.get(i).map(|q| match metric {
                SweepMetric::Loss => q.loss_ratio,
                SweepMetric::Ipdv => q.ipdv_mean_abs_s * 1e6,
                SweepMetric::Delay => q.delay_avg_s * 1e3,
            });
            let _ = write!(out, "\t{}", v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "NA".into()));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    TextTable,
    PlotTsv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" | "text_table" => Ok(Format::TextTable),
            "tsv" | "plot_tsv" => Ok(Format::PlotTsv),
            other => Err(format!("unknown format {other:?} (csv, json, text_table, plot_tsv)")),
        }
    }
}

pub fn render_table(t: &ComparisonTable, format: Format) -> String {
    match format {
        Format::Csv => table_csv(t),
        Format::Json => t.to_json(),
        Format::TextTable => table_text(t),
        Format::PlotTsv => throughput_tsv(t),
    }
}

pub fn emit_table(t: &ComparisonTable, format: Format, path: &Path) -> Result<(), ReportError> {
    std::fs::write(path, render_table(t, format))?;
    Ok(())
}
