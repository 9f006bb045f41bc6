//! Scenario files (JSON, `schema_version` 1) and result directories.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::matrix::{run_matrix, MatrixConfig};
use crate::bench::search::SearchConfig;
use crate::bench::sweep::{load_sweep, LoadSweep, SweepConfig};
use crate::bench::traffic::{Fill, HeaderKind, TrafficSpec};
use crate::bench::trial::{key_from_seed, BenchError, Scenario, TunnelSetup};
use crate::codec::{KeyFileError, StaticKey};
use crate::report::{self, ComparisonTable, ReportError, SweepMetric};
use crate::sim::{EndpointModel, LinkError, LinkParams};
use crate::tunnel::config::{ConfigError, TunnelConfig, LAPTOP1_CONFIG};

pub const SCHEMA_VERSION: u32 = 1;
pub const PAPER2011_SCENARIO: &str = include_str!("../scenarios/paper2011.json");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("unknown preset {0:?}")]
    Preset(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("tunnel config: {0}")]
    Config(#[from] ConfigError),
    #[error("key file: {0}")]
    Key(#[from] KeyFileError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A runtime failure while executing or post-processing a scenario.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Layout(String),
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })
}

/// Output of `bench calibrate`: a fitted channel and, optionally, endpoint costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetFile {
    pub link: LinkParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkSpec {
    Preset { preset: String },
    File { file: PathBuf },
    Params(LinkParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndpointSpec {
    Preset { preset: String },
    File { file: PathBuf },
    Params(EndpointModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelSpec {
    #[serde(default)]
    pub config_text: Option<String>,
    #[serde(default)]
    pub config_file: Option<PathBuf>,
    #[serde(default)]
    pub key_file: Option<PathBuf>,
    #[serde(default)]
    pub key_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub frame_bytes: u32,
    pub loads: Vec<f64>,
    pub seeds: u32,
    #[serde(default)]
    pub header_kind: Option<HeaderKind>,
    /// Channel used for the sweep instead of the scenario's main link.
    #[serde(default)]
    pub link: Option<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub link: LinkSpec,
    #[serde(default)]
    pub endpoint: Option<EndpointSpec>,
    #[serde(default)]
    pub tunnel: Option<TunnelSpec>,
    pub header_kinds: Vec<HeaderKind>,
    pub frame_sizes: Vec<u32>,
    pub scenarios: Vec<Scenario>,
    pub fill: Fill,
    pub seeds: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default = "default_measure_load")]
    pub measure_load: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_measure_load() -> f64 {
    0.9
}

/// A scenario with every reference resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub file: ScenarioFile,
    pub preset: String,
    pub link: LinkParams,
    pub tunnel: Option<TunnelSetup>,
    pub sweep_link: Option<LinkParams>,
}

fn resolve_link(spec: &LinkSpec, base: &Path) -> Result<(String, LinkParams), ScenarioError> {
    let (name, link) = match spec {
        LinkSpec::Preset { preset } if preset == "paper2011" => (preset.clone(), LinkParams::paper2011()),
        LinkSpec::Preset { preset } => return Err(ScenarioError::Preset(preset.clone())),
        LinkSpec::File { file } => {
            let path = base.join(file);
            let p: PresetFile = serde_json::from_str(&read(&path)?)?;
            (file.display().to_string(), p.link)
        }
        LinkSpec::Params(p) => ("custom".to_string(), p.clone()),
    };
    link.validate()?;
    Ok((name, link))
}

fn resolve_endpoint(spec: Option<&EndpointSpec>, base: &Path) -> Result<EndpointModel, ScenarioError> {
    match spec {
        None => Ok(EndpointModel::paper2011()),
        Some(EndpointSpec::Preset { preset }) if preset == "paper2011" => Ok(EndpointModel::paper2011()),
        Some(EndpointSpec::Preset { preset }) if preset == "free" => Ok(EndpointModel::free()),
        Some(EndpointSpec::Preset { preset }) => Err(ScenarioError::Preset(preset.clone())),
        Some(EndpointSpec::File { file }) => {
            let path = base.join(file);
            let p: PresetFile = serde_json::from_str(&read(&path)?)?;
            p.endpoint.ok_or_else(|| ScenarioError::Invalid(format!("{} has no endpoint section", path.display())))
        }
        Some(EndpointSpec::Params(m)) => Ok(m.clone()),
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let version = serde_json::from_str::<serde_json::Value>(text)?
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ScenarioError::Invalid("missing schema_version".into()))?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(ScenarioError::Schema(version as u32));
        }
        let file: Self = serde_json::from_str(text)?;
        file.check()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::parse(&read(path)?)
    }

    pub fn paper2011() -> Self {
        Self::parse(PAPER2011_SCENARIO).expect("bundled scenario is valid")
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.header_kinds.is_empty() || self.frame_sizes.is_empty() || self.scenarios.is_empty() {
            return bad("header_kinds, frame_sizes and scenarios must be non-empty".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if !(self.measure_load > 0.0 && self.measure_load <= 1.0) {
            return bad(format!("measure_load {} outside (0, 1]", self.measure_load));
        }
        for &f in &self.frame_sizes {
            let probe = TrafficSpec { header_kind: HeaderKind::UdpLike, frame_bytes: f, offered_bps: 1.0, duration_s: 1.0, fill: self.fill };
            probe.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        }
        self.search.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if let Some(s) = &self.sweep {
            if s.loads.is_empty() || s.loads.iter().any(|l| !(*l > 0.0)) || s.seeds == 0 {
                return bad("sweep needs positive loads and at least one seed".into());
            }
        }
        Ok(())
    }

    /// Resolves presets and files relative to `base` (the scenario's directory).
    pub fn resolve(&self, base: &Path) -> Result<Resolved, ScenarioError> {
        let (preset, link) = resolve_link(&self.link, base)?;
        let needs_tunnel = self.scenarios.iter().any(|s| s.is_tunnel());
        let tunnel = if needs_tunnel {
            let spec = self.tunnel.clone().unwrap_or(TunnelSpec { config_text: None, config_file: None, key_file: None, key_seed: Some(0) });
            let text = match (&spec.config_text, &spec.config_file) {
                (Some(t), None) => t.clone(),
                (None, Some(f)) => read(&base.join(f))?,
                (None, None) => LAPTOP1_CONFIG.to_string(),
                (Some(_), Some(_)) => return Err(ScenarioError::Invalid("give config_text or config_file, not both".into())),
            };
            let config = TunnelConfig::parse(&text)?;
            let key = match (&spec.key_file, spec.key_seed) {
                (Some(f), None) => StaticKey::parse_key_file(&read(&base.join(f))?)?,
                (None, seed) => key_from_seed(seed.unwrap_or(0)),
                (Some(_), Some(_)) => return Err(ScenarioError::Invalid("give key_file or key_seed, not both".into())),
            };
            Some(TunnelSetup::new(key, config, resolve_endpoint(self.endpoint.as_ref(), base)?))
        } else {
            None
        };
        let sweep_link = match self.sweep.as_ref().and_then(|s| s.link.as_ref()) {
            Some(spec) => Some(resolve_link(spec, base)?.1),
            None => None,
        };
        Ok(Resolved { file: self.clone(), preset, link, tunnel, sweep_link })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub scenario: String,
    pub preset: String,
    pub seeds: u32,
    pub base_seed: u64,
    pub header_kinds: Vec<HeaderKind>,
    pub frame_sizes: Vec<u32>,
    pub scenarios: Vec<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Results {
    pub manifest: Manifest,
    pub tables: Vec<ComparisonTable>,
    pub sweeps: Vec<LoadSweep>,
}

impl Results {
    pub fn table(&self, kind: HeaderKind) -> Option<&ComparisonTable> {
        self.tables.iter().find(|t| t.header_kind == kind)
    }

    /// Loss table as csv; a header kind without baseline and tunnel columns is left out.
    pub fn loss_csv(&self) -> Result<String, ReportError> {
        let udp = self.table(HeaderKind::UdpLike).map(report::loss_table).transpose()?.unwrap_or_default();
        let tcp = self.table(HeaderKind::TcpLike).map(report::loss_table).transpose()?.unwrap_or_default();
        Ok(report::loss_csv(&udp, &tcp))
    }

    pub fn loss_text(&self) -> Result<String, ReportError> {
        let udp = self.table(HeaderKind::UdpLike).map(report::loss_table).transpose()?.unwrap_or_default();
        let tcp = self.table(HeaderKind::TcpLike).map(report::loss_table).transpose()?.unwrap_or_default();
        Ok(report::loss_text(&udp, &tcp))
    }

    fn has_loss_columns(&self) -> bool {
        self.tables.iter().any(|t| t.rows.iter().all(|r| r.baseline_bps.is_some() && r.vpn_bps.is_some()))
    }
}

pub fn run_scenario(resolved: &Resolved) -> Result<Results, RunError> {
    let f = &resolved.file;
    let mut tables = Vec::new();
    for &kind in &f.header_kinds {
        let cfg = MatrixConfig {
            frame_sizes: f.frame_sizes.clone(),
            scenarios: f.scenarios.clone(),
            header_kind: kind,
            fill: f.fill,
            seeds: f.seeds,
            base_seed: f.base_seed,
            search: f.search.clone(),
            measure_load: f.measure_load,
            preset: resolved.preset.clone(),
        };
        tables.push(run_matrix(&cfg, &resolved.link, resolved.tunnel.as_ref())?);
    }
    let mut sweeps = Vec::new();
    if let Some(s) = &f.sweep {
        let link = resolved.sweep_link.as_ref().unwrap_or(&resolved.link);
        let cfg = SweepConfig { loads: s.loads.clone(), seeds: s.seeds, base_seed: f.base_seed };
        let kind = s.header_kind.unwrap_or(f.header_kinds[0]);
        for &scenario in &f.scenarios {
            let template = TrafficSpec {
                header_kind: kind,
                frame_bytes: s.frame_bytes,
                offered_bps: f.search.line_rate_bps,
                duration_s: f.search.trial_duration_s,
                fill: f.fill,
            };
            sweeps.push(load_sweep(scenario, link, &template, resolved.tunnel.as_ref(), &f.search, &cfg)?);
        }
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        scenario: f.name.clone(),
        preset: resolved.preset.clone(),
        seeds: f.seeds,
        base_seed: f.base_seed,
        header_kinds: f.header_kinds.clone(),
        frame_sizes: f.frame_sizes.clone(),
        scenarios: f.scenarios.clone(),
        link: Some(resolved.link.clone()),
        endpoint: resolved.tunnel.as_ref().map(|t| t.model.clone()),
        search: Some(f.search.clone()),
        files: Vec::new(),
    };
    Ok(Results { manifest, tables, sweeps })
}

const MANIFEST: &str = "manifest.json";
const SWEEPS: &str = "sweeps.json";

fn write(dir: &Path, name: &str, content: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| RunError::Io { path, source })
}

/// Writes every artefact; contents depend only on the results.
pub fn write_results(results: &Results, dir: &Path) -> Result<Vec<String>, RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    let mut files: Vec<(String, String)> = Vec::new();
    for t in &results.tables {
        let k = t.header_kind.name();
        files.push((format!("{k}.json"), t.to_json()));
        files.push((format!("{k}.csv"), report::table_csv(t)));
        files.push((format!("{k}.txt"), report::table_text(t)));
        files.push((format!("throughput_{k}.tsv"), report::throughput_tsv(t)));
        if t.rows.iter().any(|r| !r.metrics.is_empty()) {
            files.push((format!("latency_{k}.tsv"), report::latency_tsv(t)));
        }
    }
    if results.has_loss_columns() {
        files.push(("loss.csv".into(), results.loss_csv()?));
        files.push(("loss.txt".into(), results.loss_text()?));
    }
    if !results.sweeps.is_empty() {
        files.push((SWEEPS.into(), serde_json::to_string_pretty(&results.sweeps).expect("sweeps serialize") + "\n"));
        files.push(("loss_vs_load.tsv".into(), report::sweep_tsv(&results.sweeps, SweepMetric::Loss)));
        files.push(("ipdv_vs_load.tsv".into(), report::sweep_tsv(&results.sweeps, SweepMetric::Ipdv)));
        files.push(("delay_vs_load.tsv".into(), report::sweep_tsv(&results.sweeps, SweepMetric::Delay)));
    }
    let mut manifest = results.manifest.clone();
    manifest.files = files.iter().map(|f| f.0.clone()).collect();
    for (name, content) in &files {
        write(dir, name, content)?;
    }
    write(dir, MANIFEST, &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
    Ok(manifest.files)
}

pub fn read_results(dir: &Path) -> Result<Results, RunError> {
    let load = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|source| RunError::Io { path, source })
    };
    let manifest: Manifest = serde_json::from_str(&load(MANIFEST)?).map_err(ReportError::from)?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(RunError::Layout(format!("unsupported schema_version {}", manifest.schema_version)));
    }
    let mut tables = Vec::new();
    for kind in &manifest.header_kinds {
        let t = ComparisonTable::from_json(&load(&format!("{}.json", kind.name()))?)?;
        if t.header_kind != *kind {
            return Err(RunError::Layout(format!("{}.json holds a {} table", kind.name(), t.header_kind.name())));
        }
        tables.push(t);
    }
    let sweeps = if manifest.files.iter().any(|f| f == SWEEPS) {
        serde_json::from_str(&load(SWEEPS)?).map_err(ReportError::from)?
    } else {
        Vec::new()
    };
    Ok(Results { manifest, tables, sweeps })
}
