//! Acceptance suite. Each test prints one `criterion N [PASS|FAIL]` line.

mod support;

use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{exclusive, report};
use vtunnel::bench::search::probe;
use vtunnel::bench::{
    load_sweep, rfc2544_throughput, run_matrix, Fill, HeaderKind, MatrixConfig, Scenario, SearchConfig, SweepConfig,
    TrafficSpec, TunnelSetup,
};
use vtunnel::codec::{self, PlainRecord, StaticKey, PING_MAGIC};
use vtunnel::compress::CompFlag;
use vtunnel::replay::{ReplayState, ReplayVerdict};
use vtunnel::report::{loss_row, ComparisonTable, TableRow};
use vtunnel::scenario::{self, ScenarioFile};
use vtunnel::sim::{calibrate_link, LinkParams};
use vtunnel::tunnel::{Endpoint, KeepaliveAction, TunnelConfig, TunnelError, LAPTOP1_CONFIG};

const SIZES: [u32; 4] = [512, 1024, 1280, 1518];
// published throughput tables, Mbps: (baseline, tunnel, tunnel + compression)
const UDP_TABLE: [(f64, f64, f64); 4] =
    [(3.847, 3.627, 5.429), (5.429, 4.574, 11.238), (6.062, 5.389, 13.915), (6.906, 6.062, 16.09)];
const TCP_TABLE: [(f64, f64, f64); 4] =
    [(3.135, 2.601, 4.796), (4.796, 4.065, 10.929), (5.429, 4.961, 12.936), (6.062, 5.62, 16.09)];
// published loss table: (Mbps, %) for UDP then TCP
const LOSS_TABLE: [(&str, &str); 8] = [
    ("0.22", "5.72"),
    ("0.86", "15.84"),
    ("0.67", "11.05"),
    ("0.84", "12.16"),
    ("0.53", "16.91"),
    ("0.73", "15.22"),
    ("0.47", "8.66"),
    ("0.44", "7.26"),
];

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn mbps(bps: f64) -> f64 {
    bps / 1e6
}

#[test]
fn criterion_01_loss_table_exact() {
    let _g = exclusive();
    let t0 = Instant::now();
    let mut got = Vec::new();
    for table in [UDP_TABLE, TCP_TABLE] {
        for (i, &(base, vpn, _)) in table.iter().enumerate() {
            let r = loss_row(SIZES[i], base * 1e6, vpn * 1e6);
            got.push((format!("{:.2}", r.loss_mbps), format!("{:.2}", r.loss_pct)));
        }
    }
    let expected: Vec<(String, String)> = LOSS_TABLE.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let rows_match = got == expected;

    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let results = scenario::read_results(std::path::Path::new(&format!("{fixtures}/published_tables"))).unwrap();
    let golden = std::fs::read_to_string(format!("{fixtures}/published_loss.csv")).unwrap();
    let fixture_match = results.loss_csv().unwrap() == golden;

    let elapsed = t0.elapsed();
    let pass = rows_match && fixture_match && within(elapsed, 1.0);
    report(1, "loss table exact", pass, &format!("rows {got:?}, golden csv identical {fixture_match}, {elapsed:.2?}"));
    assert!(pass);
}

fn targets(table: &[(f64, f64, f64); 4]) -> Vec<(u32, f64)> {
    SIZES.iter().zip(table).map(|(&f, r)| (f, r.0 * 1e6)).collect()
}

#[test]
fn criterion_02_calibrated_baseline() {
    let _g = exclusive();
    let t0 = Instant::now();
    let link = calibrate_link(&targets(&UDP_TABLE)).unwrap();
    let fit_ok = (11e6..=12e6).contains(&link.capacity_bps) && (650e-6..=750e-6).contains(&link.fixed_overhead_s);
    let preset = LinkParams::paper2011();
    let pinned = (link.capacity_bps / preset.capacity_bps - 1.0).abs() < 1e-9
        && (link.fixed_overhead_s / preset.fixed_overhead_s - 1.0).abs() < 1e-9;
    let cfg = MatrixConfig::new(SIZES.to_vec(), vec![Scenario::Baseline], HeaderKind::UdpLike);
    let table = run_matrix(&cfg, &link, None).unwrap();
    let mut detail = Vec::new();
    let mut in_band = true;
    for (row, published) in table.rows.iter().zip(UDP_TABLE) {
        let got = mbps(row.baseline_bps.unwrap());
        let dev = got / published.0 - 1.0;
        in_band &= dev.abs() <= 0.07;
        detail.push(format!("{}B {got:.3} ({:+.1}%)", row.frame_bytes, 100.0 * dev));
    }
    let elapsed = t0.elapsed();
    let pass = fit_ok && pinned && in_band && table.rows.len() == 4 && within(elapsed, 30.0);
    report(
        2,
        "calibrated baseline within 7%",
        pass,
        &format!(
            "C {:.0} bps, overhead {:.1} us; {}; {elapsed:.2?}",
            link.capacity_bps,
            link.fixed_overhead_s * 1e6,
            detail.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_tunnel_overhead_band() {
    let _g = exclusive();
    let t0 = Instant::now();
    let link = LinkParams::paper2011();
    let setup = TunnelSetup::paper2011(3);
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in [HeaderKind::UdpLike, HeaderKind::TcpLike] {
        let cfg = MatrixConfig::new(SIZES.to_vec(), vec![Scenario::Baseline, Scenario::Tunnel], kind);
        let table = run_matrix(&cfg, &link, Some(&setup)).unwrap();
        for row in &table.rows {
            let reduction = 1.0 - row.vpn_bps.unwrap() / row.baseline_bps.unwrap();
            pass &= (0.05..=0.17).contains(&reduction);
            detail.push(format!("{} {}B {:.1}%", kind.name(), row.frame_bytes, 100.0 * reduction));
        }
    }
    let elapsed = t0.elapsed();
    pass &= within(elapsed, 60.0);
    report(3, "tunnel reduction in [5%, 17%]", pass, &format!("{}; {elapsed:.2?}", detail.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_04_compression_ordering() {
    let _g = exclusive();
    let t0 = Instant::now();
    let link = LinkParams::paper2011();
    let setup = TunnelSetup::paper2011(4);
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in [HeaderKind::UdpLike, HeaderKind::TcpLike] {
        let cfg = MatrixConfig::new(SIZES.to_vec(), vec![Scenario::Baseline, Scenario::TunnelComp], kind);
        let zero = run_matrix(&cfg, &link, Some(&setup)).unwrap();
        for row in &zero.rows {
            let (b, c) = (row.baseline_bps.unwrap(), row.vpn_comp_bps.unwrap());
            pass &= c > b;
            detail.push(format!("zeros {} {}B comp {:.2} > base {:.2}", kind.name(), row.frame_bytes, mbps(c), mbps(b)));
        }
        let mut cfg = MatrixConfig::new(SIZES.to_vec(), vec![Scenario::Tunnel, Scenario::TunnelComp], kind);
        cfg.fill = Fill::Random { seed: 44 };
        let random = run_matrix(&cfg, &link, Some(&setup)).unwrap();
        for row in &random.rows {
            let (t, c) = (row.vpn_bps.unwrap(), row.vpn_comp_bps.unwrap());
            let gap = 1.0 - c / t;
            pass &= c <= t && gap <= 0.02;
            detail.push(format!("random {} {}B comp {:.1}% below", kind.name(), row.frame_bytes, 100.0 * gap));
        }
    }
    let elapsed = t0.elapsed();
    pass &= within(elapsed, 60.0);
    report(4, "compression gain ordering", pass, &format!("{}; {elapsed:.2?}", detail.join(", ")));
    assert!(pass);
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

#[test]
fn criterion_05_trend_suite() {
    let _g = exclusive();
    let t0 = Instant::now();
    let link = LinkParams::paper2011();
    let setup = TunnelSetup::paper2011(5);
    let mut checks: Vec<(String, bool)> = Vec::new();

    for kind in [HeaderKind::UdpLike, HeaderKind::TcpLike] {
        let cfg = MatrixConfig::new(SIZES.to_vec(), Scenario::ALL.to_vec(), kind);
        let table = run_matrix(&cfg, &link, Some(&setup)).unwrap();
        for s in Scenario::ALL {
            let tp: Vec<f64> = table.rows.iter().map(|r| r.throughput(s).unwrap()).collect();
            checks.push((format!("{} {} throughput rises with size", kind.name(), s.name()), increasing(&tp)));
            let lat: Vec<f64> = table.rows.iter().map(|r| r.metrics[&s].delay_avg_s).collect();
            checks.push((format!("{} {} latency rises with size", kind.name(), s.name()), increasing(&lat)));
        }
        let ordered = table.rows.iter().all(|r| {
            let d = |s: Scenario| r.metrics[&s].delay_avg_s;
            d(Scenario::Tunnel) > d(Scenario::TunnelComp) && d(Scenario::TunnelComp) > d(Scenario::Baseline)
        });
        checks.push((format!("{} latency no_comp > comp > baseline", kind.name()), ordered));
    }

    // loss knee, on the plain channel and on the jittery contention channel
    let bundled = ScenarioFile::paper2011();
    let resolved = bundled.resolve(std::path::Path::new(".")).unwrap();
    let jittery = resolved.sweep_link.clone().unwrap();
    let search = SearchConfig::default();
    let loads = [0.3, 0.5, 0.7, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0];
    for (name, l) in [("plain", &link), ("jittery", &jittery)] {
        for s in [Scenario::Baseline, Scenario::Tunnel] {
            let template = TrafficSpec {
                header_kind: HeaderKind::UdpLike,
                frame_bytes: 1518,
                offered_bps: search.line_rate_bps,
                duration_s: search.trial_duration_s,
                fill: Fill::Zeros,
            };
            let sweep = load_sweep(s, l, &template, Some(&setup), &search, &SweepConfig { loads: loads.to_vec(), seeds: 5, base_seed: 9 }).unwrap();
            let mut worst: f64 = 0.0;
            let mut ok = true;
            for p in &sweep.points {
                if p.load <= 1.0 {
                    ok &= p.loss_ratio <= 1e-3;
                } else {
                    let err = (p.loss_ratio - (1.0 - 1.0 / p.load)).abs();
                    worst = worst.max(err);
                    ok &= err <= 0.02;
                }
            }
            checks.push((format!("{name} {} loss knee (worst {:.4})", s.name(), worst), ok));
        }
    }

    // IPDV against load with jitter
    assert!(jittery.jitter_s > 0.0);
    for s in Scenario::ALL {
        let template = TrafficSpec {
            header_kind: HeaderKind::UdpLike,
            frame_bytes: 1518,
            offered_bps: search.line_rate_bps,
            duration_s: search.trial_duration_s,
            fill: Fill::Zeros,
        };
        let sweep = load_sweep(s, &jittery, &template, Some(&setup), &search, &SweepConfig { loads: vec![0.3, 0.9], seeds: 5, base_seed: 10 }).unwrap();
        let (lo, hi) = (sweep.points[0].ipdv_mean_abs_s, sweep.points[1].ipdv_mean_abs_s);
        checks.push((format!("{} ipdv {:.1}us@90% > {:.1}us@30%", s.name(), hi * 1e6, lo * 1e6), hi > lo));
    }

    let elapsed = t0.elapsed();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
    let pass = failed.is_empty() && within(elapsed, 120.0);
    let detail = if failed.is_empty() {
        format!("{} checks hold; {elapsed:.2?}", checks.len())
    } else {
        format!("failed: {}; {elapsed:.2?}", failed.join(", "))
    };
    for c in &checks {
        println!("    {} {}", if c.1 { "ok  " } else { "FAIL" }, c.0);
    }
    report(5, "trend suite", pass, &detail);
    assert!(pass);
}

fn random_record(rng: &mut ChaCha8Rng) -> PlainRecord {
    let seq = rng.random_range(1..=u32::MAX);
    if rng.random_ratio(1, 10) {
        return PlainRecord::ping(seq);
    }
    let len = rng.random_range(0..=1600);
    let mut body = vec![0u8; len];
    rng.fill_bytes(&mut body);
    let flag = if rng.random_bool(0.5) { CompFlag::Raw } else { CompFlag::Compressed };
    PlainRecord::data(seq, flag, body)
}

fn all_flips_rejected(wire: &[u8], key: &StaticKey, positions: impl Iterator<Item = usize>) -> (usize, usize) {
    let mut tried = 0;
    let mut rejected = 0;
    let mut buf = wire.to_vec();
    for bit in positions {
        buf[bit / 8] ^= 1 << (bit % 8);
        tried += 1;
        if codec::open(&buf, key) == Err(codec::CodecError::Auth) {
            rejected += 1;
        }
        buf[bit / 8] ^= 1 << (bit % 8);
    }
    (tried, rejected)
}

#[test]
fn criterion_06_crypto_correctness() {
    let _g = exclusive();
    let t0 = Instant::now();
    let oracle = support::RefAes128::new(&support::FIPS197_KEY);
    let aes_ok = oracle.encrypt_block(&support::FIPS197_PLAIN) == support::FIPS197_CIPHER
        && codec::aes128_encrypt_block(&support::FIPS197_KEY, &support::FIPS197_PLAIN) == support::FIPS197_CIPHER;

    let cases = support::rfc2202_cases();
    let hmac_ok = cases.iter().all(|(k, d, digest)| {
        support::hmac_sha1(k, d).as_slice() == digest.as_slice() && codec::hmac_sha1(k, d).as_slice() == digest.as_slice()
    });

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let key = StaticKey::generate(&mut rand_chacha::ChaCha20Rng::seed_from_u64(6));
    let iv = codec::fresh_iv(&mut rand_chacha::ChaCha20Rng::seed_from_u64(7));
    let small = codec::seal(&PlainRecord::data(1, CompFlag::Raw, vec![7; 9]), &key, &iv).unwrap().to_bytes();
    assert_eq!(small.len(), 52);
    let (t_small, r_small) = all_flips_rejected(&small, &key, 0..small.len() * 8);
    let large = codec::seal(&PlainRecord::data(2, CompFlag::Raw, vec![1; 1500]), &key, &iv).unwrap().to_bytes();
    let sampled: Vec<usize> = (0..1000).map(|_| rng.random_range(0..large.len() * 8)).collect();
    let (t_large, r_large) = all_flips_rejected(&large, &key, sampled.into_iter());
    let tamper_ok = t_small == 416 && r_small == t_small && t_large == 1000 && r_large == t_large;

    let mut roundtrip_ok = true;
    let mut oracle_ok = true;
    for _ in 0..10_000 {
        let rec = random_record(&mut rng);
        let iv = codec::fresh_iv(&mut rng_iv(&mut rng));
        let wire = codec::seal(&rec, &key, &iv).unwrap().to_bytes();
        roundtrip_ok &= codec::open(&wire, &key).as_ref() == Ok(&rec);
        let reference = support::reference_seal(
            key.cipher_key(),
            key.auth_key(),
            &iv,
            rec.msg_type.to_byte(),
            rec.seq,
            rec.comp_flag.to_byte(),
            &rec.body,
        );
        oracle_ok &= wire == reference;
    }
    let elapsed = t0.elapsed();
    let pass = aes_ok && hmac_ok && tamper_ok && roundtrip_ok && oracle_ok && within(elapsed, 30.0);
    report(
        6,
        "crypto correctness",
        pass,
        &format!(
            "aes {aes_ok}, hmac 7/7 {hmac_ok}, flips {r_small}/{t_small} + {r_large}/{t_large}, \
             roundtrip {roundtrip_ok}, matches reference {oracle_ok}; {elapsed:.2?}"
        ),
    );
    assert!(pass);
    assert_eq!(PING_MAGIC, [0x2a; 16]);
}

fn rng_iv(rng: &mut ChaCha8Rng) -> rand_chacha::ChaCha20Rng {
    rand_chacha::ChaCha20Rng::seed_from_u64(rng.next_u64())
}

fn verdict_matches(v: ReplayVerdict, o: support::OracleVerdict) -> bool {
    matches!(
        (v, o),
        (ReplayVerdict::Accept, support::OracleVerdict::Accept)
            | (ReplayVerdict::Duplicate, support::OracleVerdict::Duplicate)
            | (ReplayVerdict::Stale, support::OracleVerdict::Stale)
    )
}

#[test]
fn criterion_07_replay_oracle() {
    let _g = exclusive();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0u32;
    let mut checks = 0u32;
    for _ in 0..100 {
        let (mut state, mut oracle) = (ReplayState::new(), support::HorizonOracle::default());
        let mut top: i64 = 0;
        for _ in 0..1000 {
            let seq = if rng.random_bool(0.5) {
                rng.random_range(0..=500u32)
            } else {
                (top + rng.random_range(-80..=12)).clamp(0, 500) as u32
            };
            top = top.max(i64::from(seq));
            checks += 1;
            if !verdict_matches(state.check_and_update(seq), oracle.check(seq)) {
                mismatches += 1;
            }
        }
    }
    let mut state = ReplayState::new();
    let worked: Vec<ReplayVerdict> = [1, 5, 3, 3, 5, 100, 36, 37].iter().map(|&s| state.check_and_update(s)).collect();
    use ReplayVerdict::*;
    let worked_ok = worked == [Accept, Accept, Accept, Duplicate, Duplicate, Accept, Stale, Accept];
    let elapsed = t0.elapsed();
    let pass = mismatches == 0 && checks == 100_000 && worked_ok && within(elapsed, 10.0);
    report(7, "replay oracle equivalence", pass, &format!("{checks} checks, {mismatches} mismatches, worked {worked:?}; {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_08_rfc2544_search() {
    let _g = exclusive();
    let t0 = Instant::now();
    // (overhead s, capacity bps, frame bytes, line rate bps)
    let links = [(0.0, 1e6, 1000u32, 2e6), (2e-3, 2e6, 512, 2e6), (700e-6, 11.5e6, 1518, 10e6)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (oh, cap, frame, line) in links {
        let link = LinkParams::analytic(cap, oh, 50);
        let search = SearchConfig { trial_duration_s: 20.0, line_rate_bps: line, ..SearchConfig::default() };
        let template = TrafficSpec {
            header_kind: HeaderKind::UdpLike,
            frame_bytes: frame,
            offered_bps: line,
            duration_s: search.trial_duration_s,
            fill: Fill::Zeros,
        };
        let found = rfc2544_throughput(Scenario::Baseline, &link, &template, None, &search).unwrap();
        let closed = support::closed_form_rate(oh, cap, frame);
        let mut best = 0.0;
        for k in 1..=search.grid_len() {
            let rate = search.rate(k);
            if probe(Scenario::Baseline, &link, &template, None, &search, rate).unwrap() {
                best = rate;
            }
        }
        let near = (found - closed).abs() <= search.resolution_bps;
        pass &= near && found == best;
        detail.push(format!("closed {closed:.0} found {found:.0} scan {best:.0}"));
    }
    let elapsed = t0.elapsed();
    pass &= within(elapsed, 60.0);
    report(8, "rfc2544 search", pass, &format!("{}; {elapsed:.2?}", detail.join(", ")));
    assert!(pass);
}

fn dir_contents(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_09_determinism() {
    let _g = exclusive();
    let t0 = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let resolved = ScenarioFile::paper2011().resolve(std::path::Path::new(".")).unwrap();
    let mut dirs = Vec::new();
    for run in ["a", "b"] {
        let results = scenario::run_scenario(&resolved).unwrap();
        let dir = tmp.path().join(run);
        scenario::write_results(&results, &dir).unwrap();
        dirs.push(dir_contents(&dir));
    }
    let identical = dirs[0] == dirs[1] && !dirs[0].is_empty();
    let elapsed = t0.elapsed();
    // twice the 30 s budget of criterion 2
    let pass = identical && within(elapsed, 60.0);
    report(9, "determinism", pass, &format!("{} files identical {identical}; two runs {elapsed:.2?}", dirs[0].len()));
    assert!(pass);
}

fn keepalive_endpoint() -> (Endpoint, StaticKey) {
    let cfg = TunnelConfig::parse(LAPTOP1_CONFIG).unwrap();
    let ka = cfg.keepalive.unwrap();
    assert_eq!((ka.ping_s, ka.timeout_s), (5, 20));
    let key = StaticKey::new([3; 16], [4; 20]);
    (Endpoint::new(cfg, key.clone(), 0.0), key)
}

#[test]
fn criterion_10_keepalive() {
    let _g = exclusive();
    let t0 = Instant::now();
    let step = 0.25;
    let (mut ep, key) = keepalive_endpoint();
    let mut peer = Endpoint::new(ep.config().mirrored("10.0.0.1"), key, 0.0);
    let mut pings = Vec::new();
    let mut timeouts = Vec::new();
    let mut tampered_rejected = 0;
    let mut replay_rejected = false;
    let mut iv_rng = rand_chacha::ChaCha20Rng::seed_from_u64(10);
    let genuine = peer.encapsulate(b"hello", &codec::fresh_iv(&mut iv_rng), 0.0).unwrap().wire;
    for i in 1..=120 {
        let now = f64::from(i) * step;
        if (8.0..=26.0).contains(&now) {
            let mut forged = peer.encapsulate(b"x", &codec::fresh_iv(&mut iv_rng), now).unwrap().wire;
            forged[30] ^= 0x01;
            tampered_rejected += ep.decapsulate(&forged, now).is_err() as u32;
            // the genuine packet refreshes liveness once; its replay does not
            if now == 8.0 {
                ep.decapsulate(&genuine, now).unwrap();
            }
            if now == 15.0 {
                replay_rejected = matches!(ep.decapsulate(&genuine, now), Err(TunnelError::Replay(_)));
            }
        }
        for action in ep.tick(now) {
            match action {
                KeepaliveAction::SendPing => {
                    pings.push(now);
                    ep.ping(&codec::fresh_iv(&mut iv_rng), now).unwrap();
                }
                KeepaliveAction::DeclareTimeout => timeouts.push(now),
            }
        }
    }
    // silence runs from the genuine packet at 8 s
    let first_window: Vec<f64> = pings.iter().copied().filter(|&t| t < 10.0).collect();
    let ping_ok = first_window == [5.0] && pings.windows(2).all(|w| (w[1] - w[0] - 5.0).abs() < 1e-9);
    let timeout_ok = timeouts == [28.25];
    let elapsed = t0.elapsed();
    let pass = ping_ok && timeout_ok && tampered_rejected == 73 && replay_rejected && within(elapsed, 5.0);
    report(
        10,
        "keepalive conformance",
        pass,
        &format!("pings at {pings:?}, timeouts at {timeouts:?}, {tampered_rejected} forged rejected; {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn published_tables_are_self_consistent() {
    // the fixture files carry exactly the constants above
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/published_tables");
    for (name, table) in [("udp_like", UDP_TABLE), ("tcp_like", TCP_TABLE)] {
        let t = ComparisonTable::from_json(&std::fs::read_to_string(format!("{fixtures}/{name}.json")).unwrap()).unwrap();
        let rows: Vec<TableRow> = t.rows.clone();
        for (row, (f, expect)) in rows.iter().zip(SIZES.iter().zip(table)) {
            assert_eq!(row.frame_bytes, *f);
            assert_eq!(row.baseline_bps, Some((expect.0 * 1e6).round()));
            assert_eq!(row.vpn_bps, Some((expect.1 * 1e6).round()));
            assert_eq!(row.vpn_comp_bps, Some((expect.2 * 1e6).round()));
        }
    }
}
