//! `key=value` scenario files. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{LinkConfig, NetConfig, Scenario};
use crate::protocol::Protocol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {value:?}")]
    BadValue { key: String, value: String },
}

pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub latency_ms: u64,
    pub jitter_ms: u64,
    pub drop_pct: f64,
    pub scenario: Option<Scenario>,
    pub protocol: Protocol,
    pub sessions: usize,
    pub subscribers: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            latency_ms: 5,
            jitter_ms: 0,
            drop_pct: 0.0,
            scenario: None,
            protocol: Protocol::IpgAka,
            sessions: 1,
            subscribers: 1,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: value.into() })
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (k, v) in parse_kv(text)? {
            match k.as_str() {
                "seed" => cfg.seed = parse(&k, &v)?,
                "latency_ms" => cfg.latency_ms = parse(&k, &v)?,
                "jitter_ms" => cfg.jitter_ms = parse(&k, &v)?,
                "drop_pct" => {
                    cfg.drop_pct = parse(&k, &v)?;
                    if !(0.0..=100.0).contains(&cfg.drop_pct) {
                        return Err(ConfigError::BadValue { key: k, value: v });
                    }
                }
                "scenario" => cfg.scenario = Some(parse(&k, &v)?),
                "protocol" => cfg.protocol = parse(&k, &v)?,
                "sessions" => cfg.sessions = parse(&k, &v)?,
                "subscribers" => cfg.subscribers = parse(&k, &v)?,
                _ => return Err(ConfigError::UnknownKey(k)),
            }
        }
        Ok(cfg)
    }

    /// Air and core links share the configured latency model.
    pub fn net(&self) -> NetConfig {
        let link = LinkConfig { latency: self.latency_ms, jitter: self.jitter_ms, drop_pct: self.drop_pct };
        NetConfig { seed: self.seed, air: link, core: link }
    }
}
