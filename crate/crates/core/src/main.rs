use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vtunnel::bench::{run_trial, HeaderKind, Scenario, TrafficSpec, TrialOptions, TunnelSetup};
use vtunnel::bench::metrics::{delay_stats, loss_ratio};
use vtunnel::bench::traffic::Fill;
use vtunnel::codec::StaticKey;
use vtunnel::report::{self, Format};
use vtunnel::scenario::{self, PresetFile, ScenarioFile};
use vtunnel::sim::{calibrate_endpoint, calibrate_link, EndpointModel, LinkParams};
use vtunnel::tunnel::runner::{Runner, Transport};
use vtunnel::tunnel::{Endpoint, Proto, TunnelConfig};

#[derive(Parser)]
#[command(name = "vtunnel", version, about = "Static-key VPN tunnel with a simulated benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fresh 72-hex-digit key file.
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
    #[command(subcommand)]
    Tunnel(TunnelCmd),
    #[command(subcommand)]
    Bench(BenchCmd),
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Subcommand)]
enum TunnelCmd {
    /// Run one endpoint.
    Run(TunnelRun),
}

#[derive(Clone, Copy, ValueEnum)]
enum IoMode {
    Sim,
    Os,
}

#[derive(Args)]
struct TunnelRun {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "sim")]
    io: IoMode,
    /// Virtual seconds of traffic (sim only).
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Offered load in bits per second (sim only).
    #[arg(long, default_value_t = 1e6)]
    rate: f64,
    #[arg(long, default_value_t = 1024)]
    frame_bytes: u32,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Execute a scenario file (or the bundled `paper2011`) and persist results.
    Run {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit channel (and optionally endpoint) parameters to measured throughputs.
    Calibrate {
        /// csv rows: frame_bytes,throughput_mbps[,tunnel_mbps]
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Throughput tables.
    Table(ReportArgs),
    /// Throughput lost to the tunnel without compression.
    Loss(ReportArgs),
    /// Plot data (tab-separated).
    Plot(ReportArgs),
}

enum Failure {
    /// Bad configuration, scenario or input file.
    Config(String),
    Runtime(String),
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse_from(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Keygen { out } => {
            let key = StaticKey::generate(&mut rand::rng());
            std::fs::write(&out, key.to_key_file()).map_err(|e| runtime_err(format!("{}: {e}", out.display())))
        }
        Command::Tunnel(TunnelCmd::Run(args)) => tunnel_run(&args),
        Command::Bench(BenchCmd::Run { scenario, out }) => bench_run(&scenario, &out),
        Command::Bench(BenchCmd::Calibrate { targets, out }) => calibrate(&targets, &out),
        Command::Report(cmd) => report_cmd(cmd),
    }
}

fn load_tunnel(path: &Path) -> Result<(TunnelConfig, StaticKey), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let cfg = TunnelConfig::parse(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let key_path = path.parent().unwrap_or(Path::new(".")).join(&cfg.secret_path);
    let key_text = std::fs::read_to_string(&key_path).map_err(|e| config_err(format!("{}: {e}", key_path.display())))?;
    let key = StaticKey::parse_key_file(&key_text).map_err(|e| config_err(format!("{}: {e}", key_path.display())))?;
    Ok((cfg, key))
}

fn tunnel_run(args: &TunnelRun) -> Result<(), Failure> {
    let (cfg, key) = load_tunnel(&args.config)?;
    match args.io {
        IoMode::Sim => {
            let scenario = if cfg.compression { Scenario::TunnelComp } else { Scenario::Tunnel };
            let header_kind = match cfg.proto {
                Proto::Udp => HeaderKind::UdpLike,
                Proto::Tcp => HeaderKind::TcpLike,
            };
            let spec = TrafficSpec {
                header_kind,
                frame_bytes: args.frame_bytes,
                offered_bps: args.rate,
                duration_s: args.duration,
                fill: Fill::Increment,
            };
            spec.validate().map_err(config_err)?;
            let setup = TunnelSetup::new(key, cfg.clone(), EndpointModel::paper2011());
            let trial = run_trial(scenario, &LinkParams::paper2011(), &spec, Some(&setup), &TrialOptions::default())
                .map_err(runtime_err)?;
            let addr = |a: Option<std::net::Ipv4Addr>| a.map_or("-".to_string(), |a| a.to_string());
            println!(
                "endpoint {} ({}, port {}): {} -> {}, compression {}",
                cfg.dev_name,
                if cfg.proto == Proto::Udp { "udp" } else { "tcp" },
                cfg.port,
                addr(cfg.vpn_local),
                addr(cfg.vpn_remote),
                if cfg.compression { "on" } else { "off" }
            );
            let delay = delay_stats(&trial).map(|d| format!("{:.3} ms", d.avg_s * 1e3)).unwrap_or_else(|_| "n/a".into());
            println!(
                "sent {} delivered {} loss {:.4} mean delay {} keepalive timeouts {}",
                trial.tx_count,
                trial.rx_count,
                loss_ratio(&trial),
                delay,
                trial.timeouts
            );
            Ok(())
        }
        IoMode::Os => tunnel_os(cfg, key),
    }
}

#[cfg(target_os = "linux")]
fn tunnel_os(cfg: TunnelConfig, key: StaticKey) -> Result<(), Failure> {
    let peer: SocketAddr = (cfg.remote_addr.as_str(), cfg.port)
        .to_socket_addrs()
        .map_err(|e| config_err(format!("remote {}: {e}", cfg.remote_addr)))?
        .next()
        .ok_or_else(|| config_err(format!("remote {} does not resolve", cfg.remote_addr)))?;
    let bind = SocketAddr::from(([0, 0, 0, 0], cfg.port));
    let transport = match cfg.proto {
        Proto::Udp => Transport::udp(bind, peer),
        Proto::Tcp => Transport::tcp(bind, peer),
    }
    .map_err(runtime_err)?;
    let dev = vtunnel::tunnel::io::TunDevice::open(&cfg.dev_name).map_err(|e| runtime_err(format!("{}: {e}", cfg.dev_name)))?;
    let endpoint = Endpoint::new(cfg, key, 0.0);
    let stop = AtomicBool::new(false);
    let stats = Runner::new(endpoint, transport, dev, rand::rng()).run(&stop, None).map_err(runtime_err)?;
    println!("{stats:?}");
    Ok(())
}

#[cfg(not(target_os = "linux"))]
fn tunnel_os(_cfg: TunnelConfig, _key: StaticKey) -> Result<(), Failure> {
    Err(runtime_err("the os packet binding is only available on Linux"))
}

fn bench_run(scenario: &str, out: &Path) -> Result<(), Failure> {
    let path = Path::new(scenario);
    let (file, base) = if scenario == "paper2011" && !path.exists() {
        (ScenarioFile::paper2011(), PathBuf::from("."))
    } else {
        let file = ScenarioFile::load(path).map_err(config_err)?;
        (file, path.parent().unwrap_or(Path::new(".")).to_path_buf())
    };
    let resolved = file.resolve(&base).map_err(config_err)?;
    let results = scenario::run_scenario(&resolved).map_err(runtime_err)?;
    let files = scenario::write_results(&results, out).map_err(runtime_err)?;
    for t in &results.tables {
        print!("{}", report::table_text(t));
    }
    println!("wrote {} files to {}", files.len() + 1, out.display());
    Ok(())
}

type Targets = Vec<(u32, f64)>;

/// Baseline targets and, when a third column is present, tunnel targets.
fn parse_targets(text: &str) -> Result<(Targets, Targets), String> {
    let (mut base, mut tunnel) = (Vec::new(), Vec::new());
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let Ok(frame) = cells[0].parse::<u32>() else {
            if n == 0 {
                continue; // header row
            }
            return Err(format!("line {}: bad frame size {:?}", n + 1, cells[0]));
        };
        let mbps = |i: usize| -> Result<Option<f64>, String> {
            match cells.get(i) {
                None | Some(&"") => Ok(None),
                Some(c) => c.parse::<f64>().map(Some).map_err(|_| format!("line {}: bad rate {c:?}", n + 1)),
            }
        };
        let b = mbps(1)?.ok_or_else(|| format!("line {}: missing throughput", n + 1))?;
        base.push((frame, b * 1e6));
        if let Some(t) = mbps(2)? {
            tunnel.push((frame, t * 1e6));
        }
    }
    Ok((base, tunnel))
}

fn calibrate(targets: &Path, out: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(targets).map_err(|e| config_err(format!("{}: {e}", targets.display())))?;
    let (base, tunnel) = parse_targets(&text).map_err(config_err)?;
    let link = calibrate_link(&base).map_err(config_err)?;
    let endpoint = if tunnel.is_empty() { None } else { Some(calibrate_endpoint(&link, &tunnel).map_err(config_err)?) };
    println!(
        "capacity {:.0} bps, fixed overhead {:.3} us",
        link.capacity_bps,
        link.fixed_overhead_s * 1e6
    );
    if let Some(e) = &endpoint {
        println!("seal/open {:.3} us + {:.6} us/byte", e.seal.fixed_s * 1e6, e.seal.per_byte_s * 1e6);
    }
    let preset = PresetFile { link, endpoint };
    let json = serde_json::to_string_pretty(&preset).expect("preset serializes") + "\n";
    std::fs::write(out, json).map_err(|e| runtime_err(format!("{}: {e}", out.display())))
}

fn report_cmd(cmd: ReportCmd) -> Result<(), Failure> {
    let (args, kind) = match &cmd {
        ReportCmd::Table(a) => (a, "table"),
        ReportCmd::Loss(a) => (a, "loss"),
        ReportCmd::Plot(a) => (a, "plot"),
    };
    let results = scenario::read_results(&args.input).map_err(runtime_err)?;
    let text = match (kind, args.format.unwrap_or(if kind == "plot" { Format::PlotTsv } else { Format::Csv })) {
        ("table", Format::Json) => {
            serde_json::to_string_pretty(&results.tables).expect("tables serialize") + "\n"
        }
        ("table", f) => results.tables.iter().map(|t| report::render_table(t, f)).collect::<Vec<_>>().join("\n"),
        ("loss", Format::Csv) => results.loss_csv().map_err(runtime_err)?,
        ("loss", Format::TextTable) => results.loss_text().map_err(runtime_err)?,
        ("loss", Format::Json) => {
            let rows: Vec<_> = results
                .tables
                .iter()
                .map(|t| report::loss_table(t).map(|r| (t.header_kind, r)))
                .collect::<Result<_, _>>()
                .map_err(runtime_err)?;
            serde_json::to_string_pretty(&rows).expect("loss rows serialize") + "\n"
        }
        ("plot", Format::PlotTsv) => {
            let mut parts: Vec<String> = Vec::new();
            for t in &results.tables {
                parts.push(report::throughput_tsv(t));
                if t.rows.iter().any(|r| !r.metrics.is_empty()) {
                    parts.push(report::latency_tsv(t));
                }
            }
            if !results.sweeps.is_empty() {
                for m in [report::SweepMetric::Loss, report::SweepMetric::Ipdv, report::SweepMetric::Delay] {
                    parts.push(report::sweep_tsv(&results.sweeps, m));
                }
            }
            parts.join("\n")
        }
        (k, _) => return Err(config_err(format!("report {k} does not support that --format"))),
    };
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| runtime_err(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
