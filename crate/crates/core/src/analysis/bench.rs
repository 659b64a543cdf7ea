//! Desk-scale benchmark cells written as CSV rows.

use std::io::{Read, Write};
use std::time::{Duration, Instant};

use super::AnalysisError;
use crate::cgrid::{generate_grid, ColumnWidths};
use crate::keygen::{derive_lte_key, form_key_sequence};
use crate::protocol::{Entity, OpCounts, Protocol};
use crate::simnet::{collect_metrics, parse_kv, LinkKind, Testbed, TestbedConfig};

pub const CSV_HEADER: [&str; 7] = ["protocol", "subscribers", "grid_n", "metric", "unit", "value", "deterministic"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub protocols: Vec<Protocol>,
    pub subscribers: Vec<usize>,
    pub grid_sizes: Vec<usize>,
    /// Sessions per subscriber in every cell.
    pub iterations: usize,
    /// Repetitions behind each key generation timing.
    pub keygen_reps: usize,
    pub seed: u64,
    /// Optional subscriber densities; each adds `density · area_km2`
    /// subscribers to the axis.
    pub densities_per_km2: Vec<f64>,
    pub area_km2: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            protocols: vec![Protocol::EpsAka, Protocol::IpgAka],
            subscribers: vec![1, 10],
            grid_sizes: vec![5, 7, 9],
            iterations: 3,
            keygen_reps: 30,
            seed: 0,
            densities_per_km2: Vec::new(),
            area_km2: 1.0,
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, AnalysisError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| AnalysisError::ConfigInvalid(format!("{key}: {s:?}"))))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, AnalysisError> {
    v.parse().map_err(|_| AnalysisError::ConfigInvalid(format!("{key}: {v:?}")))
}

impl BenchConfig {
    /// `key=value` lines; list values are comma separated.
    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let kv = parse_kv(text).map_err(|e| AnalysisError::ConfigInvalid(e.to_string()))?;
        let mut cfg = Self::default();
        for (k, v) in kv {
            match k.as_str() {
                "protocols" => cfg.protocols = list(&k, &v)?,
                "subscribers" => cfg.subscribers = list(&k, &v)?,
                "grid_sizes" => cfg.grid_sizes = list(&k, &v)?,
                "iterations" => cfg.iterations = one(&k, &v)?,
                "keygen_reps" => cfg.keygen_reps = one(&k, &v)?,
                "seed" => cfg.seed = one(&k, &v)?,
                "densities_per_km2" => cfg.densities_per_km2 = list(&k, &v)?,
                "area_km2" => cfg.area_km2 = one(&k, &v)?,
                _ => return Err(AnalysisError::ConfigInvalid(format!("unknown key {k}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: &str| Err(AnalysisError::ConfigInvalid(m.into()));
        if self.protocols.is_empty() || self.grid_sizes.is_empty() {
            return bad("protocols and grid_sizes must be non-empty");
        }
        if self.subscriber_axis().is_empty() || self.subscriber_axis().contains(&0) {
            return bad("subscriber counts must be positive");
        }
        if self.iterations == 0 || self.keygen_reps == 0 {
            return bad("iterations and keygen_reps must be positive");
        }
        if !(self.area_km2.is_finite() && self.area_km2 > 0.0) || self.densities_per_km2.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return bad("densities and area must be positive");
        }
        for &n in &self.grid_sizes {
            ColumnWidths::standard(n).map_err(|e| AnalysisError::ConfigInvalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn subscriber_axis(&self) -> Vec<usize> {
        let mut axis = self.subscribers.clone();
        axis.extend(self.densities_per_km2.iter().map(|d| (d * self.area_km2).round() as usize));
        axis.sort_unstable();
        axis.dedup();
        axis
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub protocol: Protocol,
    pub subscribers: usize,
    /// 0 for the baseline, which has no grid.
    pub grid_n: usize,
    pub metric: String,
    pub unit: String,
    pub value: f64,
    /// False for wall-clock rows.
    pub deterministic: bool,
}

fn micros(d: Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

/// Median wall time of grid generation, sequence formation and one key
/// derivation at dimension `n`.
pub fn keygen_time(n: usize, reps: usize, seed: u64) -> Result<Duration, AnalysisError> {
    let widths = ColumnWidths::standard(n)?;
    let mut times = Vec::with_capacity(reps);
    for r in 0..reps as u64 {
        let t = Instant::now();
        let grid = generate_grid(n, &widths, seed.wrapping_add(r))?;
        let ks = form_key_sequence(&grid, seed ^ r).map_err(|e| AnalysisError::BadParams(e.to_string()))?;
        let key = derive_lte_key(&grid, &ks, seed, r).map_err(|e| AnalysisError::BadParams(e.to_string()))?;
        std::hint::black_box(key);
        times.push(t.elapsed());
    }
    times.sort_unstable();
    Ok(times[times.len() / 2])
}

fn cell_seed(seed: u64, protocol: Protocol, subscribers: usize, n: usize) -> u64 {
    let p = match protocol {
        Protocol::IpgAka => 1u64,
        Protocol::EpsAka => 2,
    };
    seed ^ (p << 56) ^ ((subscribers as u64) << 16) ^ n as u64
}

fn run_cell(cfg: &BenchConfig, protocol: Protocol, subscribers: usize, n: usize) -> Result<Vec<BenchRow>, AnalysisError> {
    let grid_n = if protocol == Protocol::IpgAka { n } else { 0 };
    let mut tb_cfg = TestbedConfig::new(protocol, cell_seed(cfg.seed, protocol, subscribers, grid_n));
    tb_cfg.subscribers = subscribers;
    tb_cfg.grid_n = if grid_n == 0 { 5 } else { grid_n };
    let mut tb = Testbed::new(tb_cfg).map_err(|e| AnalysisError::BadParams(e.to_string()))?;

    let (mut sessions, mut authenticated, mut messages, mut air, mut core) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut wall = Duration::ZERO;
    for _ in 0..cfg.iterations {
        for i in 0..subscribers {
            let r = tb.run(i);
            sessions += 1;
            authenticated += u64::from(r.authenticated());
            messages += r.message_count() as u64;
            for t in &r.trace {
                match t.link {
                    LinkKind::Air => air += t.bytes.len() as u64,
                    LinkKind::Core => core += t.bytes.len() as u64,
                }
            }
            wall += r.wall;
        }
    }
    let mut ue_ops = OpCounts::default();
    for ue in &tb.ues {
        ue_ops += ue.ops();
    }
    let metrics = collect_metrics(&tb.net, &[(Entity::Ue, ue_ops), (Entity::Mme, tb.mme.ops()), (Entity::Hss, tb.hss.ops())]);

    let mut rows = Vec::new();
    let mut push = |metric: String, unit: &str, value: f64, deterministic: bool| {
        rows.push(BenchRow { protocol, subscribers, grid_n, metric, unit: unit.into(), value, deterministic });
    };
    let per = |total: u64| total as f64 / sessions as f64;
    push("sessions".into(), "count", sessions as f64, true);
    push("authenticated".into(), "count", authenticated as f64, true);
    push("messages_per_session".into(), "count", per(messages), true);
    push("air_bytes_per_session".into(), "bytes", per(air), true);
    push("core_bytes_per_session".into(), "bytes", per(core), true);
    push("auth_time".into(), "us", micros(wall) / sessions as f64, false);
    for e in [Entity::Ue, Entity::Mme, Entity::Hss] {
        let m = metrics.entity(e);
        let name = e.to_string().to_lowercase();
        push(format!("{name}_bytes_received"), "bytes", m.bytes_received as f64, true);
        push(format!("{name}_bytes_sent"), "bytes", m.bytes_sent as f64, true);
        push(format!("{name}_modexp"), "count", m.ops.modexp as f64, true);
        push(format!("{name}_key_derivations"), "count", m.ops.key_derivations as f64, true);
        push(format!("{name}_av_builds"), "count", m.ops.av_builds as f64, true);
        push(format!("{name}_signatures"), "count", m.ops.signatures as f64, true);
        push(format!("{name}_signature_checks"), "count", m.ops.signature_checks as f64, true);
        push(format!("{name}_busy"), "us", micros(m.busy), false);
    }
    if grid_n != 0 {
        push("key_generation_time".into(), "us", micros(keygen_time(grid_n, cfg.keygen_reps, cfg.seed)?), false);
    }
    Ok(rows)
}

/// One cell per protocol, subscriber count and grid size; the baseline has
/// no grid and gets one cell per subscriber count.
pub fn run_benchmarks(cfg: &BenchConfig) -> Result<Vec<BenchRow>, AnalysisError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &protocol in &cfg.protocols {
        for s in cfg.subscriber_axis() {
            match protocol {
                Protocol::EpsAka => rows.extend(run_cell(cfg, protocol, s, 0)?),
                Protocol::IpgAka => {
                    for &n in &cfg.grid_sizes {
                        rows.extend(run_cell(cfg, protocol, s, n)?);
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), AnalysisError> {
    let io = |e: csv::Error| AnalysisError::ConfigInvalid(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.protocol.to_string(),
            r.subscribers.to_string(),
            r.grid_n.to_string(),
            r.metric.clone(),
            r.unit.clone(),
            r.value.to_string(),
            r.deterministic.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| AnalysisError::ConfigInvalid(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>, AnalysisError> {
    let bad = |m: String| AnalysisError::ConfigInvalid(m);
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(bad("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("missing column {}", CSV_HEADER[i])));
        let num = |i: usize| field(i)?.parse::<usize>().map_err(|e| bad(e.to_string()));
        rows.push(BenchRow {
            protocol: field(0)?.parse().map_err(|_| bad(format!("protocol {:?}", field(0))))?,
            subscribers: num(1)?,
            grid_n: num(2)?,
            metric: field(3)?.to_owned(),
            unit: field(4)?.to_owned(),
            value: field(5)?.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            deterministic: field(6)?.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig { subscribers: vec![2], grid_sizes: vec![5], iterations: 2, keygen_reps: 3, ..BenchConfig::default() }
    }

    fn value(rows: &[BenchRow], p: Protocol, metric: &str) -> f64 {
        rows.iter().find(|r| r.protocol == p && r.metric == metric).unwrap().value
    }

    #[test]
    fn config_parsing_and_validation() {
        let cfg = BenchConfig::parse("protocols=ipg\nsubscribers=1,5\ngrid_sizes=5,7\niterations=2\ndensities_per_km2=10\narea_km2=0.5\n").unwrap();
        assert_eq!(cfg.protocols, vec![Protocol::IpgAka]);
        assert_eq!(cfg.subscriber_axis(), vec![1, 5]);
        for text in ["grid_sizes=4", "subscribers=0", "iterations=0", "colour=1", "protocols=", "area_km2=-1"] {
            assert!(matches!(BenchConfig::parse(text), Err(AnalysisError::ConfigInvalid(_))), "{text}");
        }
    }

    #[test]
    fn rows_cover_every_cell_and_counts_are_deterministic() {
        let a = run_benchmarks(&small()).unwrap();
        let b = run_benchmarks(&small()).unwrap();
        let det = |rows: &[BenchRow]| rows.iter().filter(|r| r.deterministic).cloned().collect::<Vec<_>>();
        assert_eq!(det(&a), det(&b));
        assert_eq!(value(&a, Protocol::IpgAka, "authenticated"), 4.0);
        assert_eq!(value(&a, Protocol::IpgAka, "messages_per_session"), 7.0);
        assert_eq!(value(&a, Protocol::EpsAka, "messages_per_session"), 5.0);
        assert!(value(&a, Protocol::IpgAka, "air_bytes_per_session") > value(&a, Protocol::EpsAka, "air_bytes_per_session"));
        assert!(a.iter().any(|r| r.metric == "key_generation_time" && !r.deterministic));
    }

    #[test]
    fn csv_round_trip() {
        let rows = run_benchmarks(&small()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert!(buf.starts_with(b"protocol,subscribers,grid_n,metric,unit,value,deterministic\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
        assert!(read_csv(&b"a,b\n1,2\n"[..]).is_err());
    }
}
