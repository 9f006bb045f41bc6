//! Python bindings: the sealed-packet codec, compressor, replay window,
//! tunnel endpoint and the simulated benchmark entry points.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use vtunnel::bench::metrics::{delay_stats, ipdv_stats, loss_ratio};
use vtunnel::bench::trial::key_from_seed;
use vtunnel::bench::{self, Fill, HeaderKind, Scenario, SearchConfig, TrafficSpec, TrialOptions, TunnelSetup};
use vtunnel::codec::{self, MsgType, PlainRecord};
use vtunnel::compress::{self, CompFlag};
use vtunnel::replay::{self, ReplayVerdict};
use vtunnel::report;
use vtunnel::sim::{self, EndpointModel};
use vtunnel::tunnel::{self, Delivery, KeepaliveAction, TunnelConfig, LAPTOP1_CONFIG};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn flag(compressed: bool) -> CompFlag {
    if compressed {
        CompFlag::Compressed
    } else {
        CompFlag::Raw
    }
}

fn scenario(name: &str) -> PyResult<Scenario> {
    Scenario::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| value_err(format!("unknown scenario {name:?}")))
}

fn header_kind(name: &str) -> PyResult<HeaderKind> {
    [HeaderKind::UdpLike, HeaderKind::TcpLike]
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| value_err(format!("unknown header kind {name:?}")))
}

fn iv_or_random(iv: Option<&[u8]>, rng: &mut ChaCha20Rng) -> PyResult<codec::Iv> {
    match iv {
        Some(b) => b.try_into().map_err(|_| value_err("iv must be 16 bytes")),
        None => Ok(codec::fresh_iv(rng)),
    }
}

#[pyclass(name = "StaticKey", module = "vtunnel", from_py_object)]
#[derive(Clone)]
struct PyStaticKey(codec::StaticKey);

#[pymethods]
impl PyStaticKey {
    #[new]
    fn new(cipher_key: &[u8], auth_key: &[u8]) -> PyResult<Self> {
        let c = cipher_key.try_into().map_err(|_| value_err("cipher key must be 16 bytes"))?;
        let a = auth_key.try_into().map_err(|_| value_err("auth key must be 20 bytes"))?;
        Ok(Self(codec::StaticKey::new(c, a)))
    }

    /// Deterministic key from a seed; omit the seed for a random one.
    #[staticmethod]
    #[pyo3(signature = (seed=None))]
    fn generate(seed: Option<u64>) -> Self {
        match seed {
            Some(s) => Self(key_from_seed(s)),
            None => Self(codec::StaticKey::generate(&mut ChaCha20Rng::from_os_rng())),
        }
    }

    #[staticmethod]
    fn from_key_file(text: &str) -> PyResult<Self> {
        codec::StaticKey::parse_key_file(text).map(Self).map_err(value_err)
    }

    fn to_key_file(&self) -> String {
        self.0.to_key_file()
    }

    #[getter]
    fn cipher_key(&self) -> Vec<u8> {
        self.0.cipher_key().to_vec()
    }

    #[getter]
    fn auth_key(&self) -> Vec<u8> {
        self.0.auth_key().to_vec()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

/// Seals one record. A ping ignores `body` and `compressed`.
#[pyfunction]
#[pyo3(signature = (key, seq, body, iv, compressed=false, ping=false))]
fn seal(key: &PyStaticKey, seq: u32, body: &[u8], iv: &[u8], compressed: bool, ping: bool) -> PyResult<Vec<u8>> {
    let iv: codec::Iv = iv.try_into().map_err(|_| value_err("iv must be 16 bytes"))?;
    let record = if ping { PlainRecord::ping(seq) } else { PlainRecord::data(seq, flag(compressed), body.to_vec()) };
    codec::seal(&record, &key.0, &iv).map(|p| p.to_bytes()).map_err(value_err)
}

/// Authenticates and decrypts a packet: (msg_type, seq, compressed, body).
#[pyfunction]
fn open(key: &PyStaticKey, packet: &[u8]) -> PyResult<(&'static str, u32, bool, Vec<u8>)> {
    let r = codec::open(packet, &key.0).map_err(value_err)?;
    let kind = if r.msg_type == MsgType::Ping { "ping" } else { "data" };
    Ok((kind, r.seq, r.comp_flag == CompFlag::Compressed, r.body))
}

#[pyfunction]
fn sealed_len(body_len: usize) -> usize {
    codec::sealed_len(body_len)
}

/// (compressed, bytes); the compressed form only when strictly smaller.
#[pyfunction]
fn compress_body(body: &[u8]) -> (bool, Vec<u8>) {
    let c = compress::compress_body(body);
    (c.flag == CompFlag::Compressed, c.bytes)
}

#[pyfunction]
#[pyo3(signature = (compressed, data, cap=tunnel::TUN_MTU))]
fn decompress_body(compressed: bool, data: &[u8], cap: usize) -> PyResult<Vec<u8>> {
    compress::decompress_body(flag(compressed), data, cap).map_err(value_err)
}

#[pyclass(name = "ReplayState", module = "vtunnel")]
struct PyReplayState(replay::ReplayState);

#[pymethods]
impl PyReplayState {
    #[new]
    fn new() -> Self {
        Self(replay::ReplayState::new())
    }

    /// "accept", "duplicate" or "stale"; only accepted numbers update the window.
    fn check(&mut self, seq: u32) -> &'static str {
        match self.0.check_and_update(seq) {
            ReplayVerdict::Accept => "accept",
            ReplayVerdict::Duplicate => "duplicate",
            ReplayVerdict::Stale => "stale",
        }
    }

    #[getter]
    fn highest_seq(&self) -> u32 {
        self.0.highest_seq()
    }
}

#[pyclass(name = "Endpoint", module = "vtunnel")]
struct PyEndpoint {
    inner: tunnel::Endpoint,
    key: codec::StaticKey,
    rng: ChaCha20Rng,
}

#[pymethods]
impl PyEndpoint {
    #[new]
    #[pyo3(signature = (key, config=LAPTOP1_CONFIG, now=0.0, seed=0))]
    fn new(key: &PyStaticKey, config: &str, now: f64, seed: u64) -> PyResult<Self> {
        let cfg = TunnelConfig::parse(config).map_err(value_err)?;
        Ok(Self { inner: tunnel::Endpoint::new(cfg, key.0.clone(), now), key: key.0.clone(), rng: ChaCha20Rng::seed_from_u64(seed) })
    }

    /// Fresh endpoint for the far side: addresses swapped, remote set to `local_addr`.
    #[pyo3(signature = (local_addr, now=0.0, seed=1))]
    fn mirrored(&self, local_addr: &str, now: f64, seed: u64) -> Self {
        let cfg = self.inner.config().mirrored(local_addr);
        Self { inner: tunnel::Endpoint::new(cfg, self.key.clone(), now), key: self.key.clone(), rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    #[getter]
    fn compression(&self) -> bool {
        self.inner.config().compression
    }

    #[pyo3(signature = (payload, now, iv=None))]
    fn encapsulate(&mut self, payload: &[u8], now: f64, iv: Option<&[u8]>) -> PyResult<Vec<u8>> {
        let iv = iv_or_random(iv, &mut self.rng)?;
        self.inner.encapsulate(payload, &iv, now).map(|e| e.wire).map_err(value_err)
    }

    #[pyo3(signature = (now, iv=None))]
    fn ping(&mut self, now: f64, iv: Option<&[u8]>) -> PyResult<Vec<u8>> {
        let iv = iv_or_random(iv, &mut self.rng)?;
        self.inner.ping(&iv, now).map_err(value_err)
    }

    /// The delivered payload, or None for a ping. Rejected packets raise.
    fn decapsulate(&mut self, wire: &[u8], now: f64) -> PyResult<Option<Vec<u8>>> {
        match self.inner.decapsulate(wire, now).map_err(value_err)? {
            Delivery::Payload(p) => Ok(Some(p)),
            Delivery::Ping => Ok(None),
        }
    }

    fn tick(&mut self, now: f64) -> Vec<&'static str> {
        self.inner
            .tick(now)
            .into_iter()
            .map(|a| match a {
                KeepaliveAction::SendPing => "send_ping",
                KeepaliveAction::DeclareTimeout => "declare_timeout",
            })
            .collect()
    }

    #[getter]
    fn peer_alive(&self) -> bool {
        self.inner.state().peer_status == tunnel::PeerStatus::Alive
    }
}

#[pyclass(name = "LinkParams", module = "vtunnel", from_py_object)]
#[derive(Clone)]
struct PyLinkParams(sim::LinkParams);

#[pymethods]
impl PyLinkParams {
    #[staticmethod]
    fn paper2011() -> Self {
        Self(sim::LinkParams::paper2011())
    }

    #[staticmethod]
    #[pyo3(signature = (capacity_bps, fixed_overhead_s, queue_cap=50))]
    fn analytic(capacity_bps: f64, fixed_overhead_s: f64, queue_cap: usize) -> PyResult<Self> {
        let p = sim::LinkParams::analytic(capacity_bps, fixed_overhead_s, queue_cap);
        p.validate().map_err(value_err)?;
        Ok(Self(p))
    }

    #[getter]
    fn capacity_bps(&self) -> f64 {
        self.0.capacity_bps
    }

    #[getter]
    fn fixed_overhead_s(&self) -> f64 {
        self.0.fixed_overhead_s
    }

    #[getter]
    fn queue_cap(&self) -> usize {
        self.0.queue_cap
    }

    fn service_time(&self, frame_bytes: usize) -> f64 {
        self.0.nominal_service_time(frame_bytes)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Fits capacity and per-frame overhead to (frame_bytes, bps) targets.
#[pyfunction]
fn calibrate_link(targets: Vec<(u32, f64)>) -> PyResult<PyLinkParams> {
    sim::calibrate_link(&targets).map(PyLinkParams).map_err(value_err)
}

fn template(kind: &str, frame_bytes: u32, offered_bps: f64, duration_s: f64, random_fill: Option<u64>) -> PyResult<TrafficSpec> {
    Ok(TrafficSpec {
        header_kind: header_kind(kind)?,
        frame_bytes,
        offered_bps,
        duration_s,
        fill: random_fill.map_or(Fill::Zeros, |seed| Fill::Random { seed }),
    })
}

fn setup(key_seed: u64) -> TunnelSetup {
    TunnelSetup::new(key_from_seed(key_seed), TunnelConfig::parse(LAPTOP1_CONFIG).expect("bundled config"), EndpointModel::paper2011())
}

/// One trial on the simulated link; returns counts and delay statistics.
#[pyfunction]
#[pyo3(signature = (scenario_name, link, frame_bytes, offered_bps, duration_s=2.0, header="udp_like", random_fill=None, key_seed=0))]
#[allow(clippy::too_many_arguments)]
fn run_trial<'py>(
    py: Python<'py>,
    scenario_name: &str,
    link: &PyLinkParams,
    frame_bytes: u32,
    offered_bps: f64,
    duration_s: f64,
    header: &str,
    random_fill: Option<u64>,
    key_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = template(header, frame_bytes, offered_bps, duration_s, random_fill)?;
    let s = scenario(scenario_name)?;
    let r = bench::run_trial(s, &link.0, &spec, Some(&setup(key_seed)), &TrialOptions::default()).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("tx_count", r.tx_count)?;
    d.set_item("rx_count", r.rx_count)?;
    d.set_item("loss_ratio", loss_ratio(&r))?;
    if let Ok(ds) = delay_stats(&r) {
        d.set_item("delay_min_s", ds.min_s)?;
        d.set_item("delay_avg_s", ds.avg_s)?;
        d.set_item("delay_max_s", ds.max_s)?;
        d.set_item("delay_p99_s", ds.p99_s)?;
    }
    if let Ok(ip) = ipdv_stats(&r) {
        d.set_item("ipdv_mean_abs_s", ip.mean_abs_s)?;
    }
    Ok(d)
}

/// Highest zero-loss rate on the search grid.
#[pyfunction]
#[pyo3(signature = (scenario_name, link, frame_bytes, header="udp_like", resolution_bps=10e3, trial_duration_s=2.0, line_rate_bps=100e6, loss_threshold=0.0, key_seed=0))]
#[allow(clippy::too_many_arguments)]
fn rfc2544_throughput(
    scenario_name: &str,
    link: &PyLinkParams,
    frame_bytes: u32,
    header: &str,
    resolution_bps: f64,
    trial_duration_s: f64,
    line_rate_bps: f64,
    loss_threshold: f64,
    key_seed: u64,
) -> PyResult<f64> {
    let search = SearchConfig { resolution_bps, loss_threshold, trial_duration_s, line_rate_bps, ..SearchConfig::default() };
    let spec = template(header, frame_bytes, line_rate_bps, trial_duration_s, None)?;
    bench::rfc2544_throughput(scenario(scenario_name)?, &link.0, &spec, Some(&setup(key_seed)), &search).map_err(value_err)
}

/// (loss_mbps, loss_pct) as decimal strings with two places.
#[pyfunction]
fn loss_row(frame_bytes: u32, baseline_bps: f64, vpn_bps: f64) -> (String, String) {
    let r = report::loss_row(frame_bytes, baseline_bps, vpn_bps);
    (format!("{:.2}", r.loss_mbps), format!("{:.2}", r.loss_pct))
}

#[pymodule]
#[pyo3(name = "vtunnel")]
fn vtunnel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStaticKey>()?;
    m.add_class::<PyReplayState>()?;
    m.add_class::<PyEndpoint>()?;
    m.add_class::<PyLinkParams>()?;
    m.add_function(wrap_pyfunction!(seal, m)?)?;
    m.add_function(wrap_pyfunction!(open, m)?)?;
    m.add_function(wrap_pyfunction!(sealed_len, m)?)?;
    m.add_function(wrap_pyfunction!(compress_body, m)?)?;
    m.add_function(wrap_pyfunction!(decompress_body, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_link, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(rfc2544_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(loss_row, m)?)?;
    m.add("MIN_WIRE_LEN", codec::MIN_WIRE_LEN)?;
    m.add("REPLAY_WINDOW", replay::WINDOW_SIZE)?;
    Ok(())
}
