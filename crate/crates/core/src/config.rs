//! Scenario configuration in flat `Section.key = value` form.
//!
//! ```text
//! Scenario.duration = 43200
//! Scenario.map = grid:11x11@100
//! Group1.count = 40
//! Group1.router = maxprop
//! Traffic.intervalMin = 25
//! ```
//!
//! Byte quantities accept `k`, `M` and `G` suffixes (powers of 1000).
//! `Scenario.map` is either a WKT file path or `grid:<cols>x<rows>@<spacing>`.
//! A group with `speedMin = speedMax = 0` stays at its spawn waypoint.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::map::{parse_wkt_map, MapError, MapGraph};
use crate::messaging::{HostRange, MessagingError, TrafficConfig};
use crate::ml::{GbdtModel, ModelError};
use crate::routing::{RouterKind, RouterSettings};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: cannot use `{value}`: {msg}")]
    BadValue {
        key: String,
        value: String,
        msg: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("file `{}` does not exist", .0.display())]
    MissingFile(PathBuf),
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("model `{}`: {source}", path.display())]
    Model { path: PathBuf, source: ModelError },
    #[error("traffic: {0}")]
    Traffic(#[from] MessagingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn bad(key: &str, value: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    File(PathBuf),
    Grid {
        cols: usize,
        rows: usize,
        spacing: f64,
    },
}

impl MapSource {
    fn parse(key: &str, value: &str) -> Result<Self, ConfigError> {
        let Some(spec) = value.strip_prefix("grid:") else {
            return Ok(MapSource::File(PathBuf::from(value)));
        };
        let err = || bad(key, value, "expected grid:<cols>x<rows>@<spacing>");
        let (dims, spacing) = spec.split_once('@').ok_or_else(err)?;
        let (cols, rows) = dims.split_once('x').ok_or_else(err)?;
        let source = MapSource::Grid {
            cols: cols.trim().parse().map_err(|_| err())?,
            rows: rows.trim().parse().map_err(|_| err())?,
            spacing: spacing.trim().parse().map_err(|_| err())?,
        };
        Ok(source)
    }

    fn to_value(&self) -> String {
        match self {
            MapSource::File(p) => p.display().to_string(),
            MapSource::Grid {
                cols,
                rows,
                spacing,
            } => format!("grid:{cols}x{rows}@{spacing}"),
        }
    }

    pub fn load(&self) -> Result<MapGraph, ConfigError> {
        match self {
            MapSource::File(p) => Ok(parse_wkt_map(&std::fs::read_to_string(p)?)?),
            MapSource::Grid {
                cols,
                rows,
                spacing,
            } => Ok(MapGraph::grid(*cols, *rows, *spacing)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupConfig {
    pub count: u32,
    pub speed: (f64, f64),
    pub pause: (f64, f64),
    pub range: f64,
    pub bitrate: f64,
    pub buffer_size: u64,
    pub router: RouterKind,
    pub snw_copies: u32,
    pub hop_threshold: usize,
    pub ml_threshold: f64,
    pub model_path: Option<PathBuf>,
}

impl GroupConfig {
    fn with_defaults(count: u32, router: RouterKind) -> Self {
        Self {
            count,
            speed: (0.5, 1.5),
            pause: (0.0, 120.0),
            range: 100.0,
            bitrate: 250_000.0,
            buffer_size: 5_000_000,
            router,
            snw_copies: 8,
            hop_threshold: 3,
            ml_threshold: 0.5,
            model_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSpec {
    pub interval: (f64, f64),
    pub size: (u64, u64),
    /// `None` means every host.
    pub src_hosts: Option<HostRange>,
    pub dst_hosts: Option<HostRange>,
    pub start: f64,
    /// `None` means the end of the scenario.
    pub stop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration: f64,
    pub step: f64,
    pub map: MapSource,
    pub ttl: f64,
    pub seed: u64,
    pub collect: bool,
    pub groups: Vec<GroupConfig>,
    pub traffic: TrafficSpec,
}

/// Raw `key -> value` pairs, in key order.
pub type RawConfig = BTreeMap<String, String>;

pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        raw.insert(k.to_string(), v.to_string());
    }
    Ok(raw)
}

/// Parses and validates a config. Relative paths resolve against the
/// current directory.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    ScenarioConfig::from_raw(&parse_raw(text)?, None)
}

/// Reads a config file; relative paths inside it resolve against its
/// directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let raw = parse_raw(&std::fs::read_to_string(path)?)?;
    ScenarioConfig::from_raw(&raw, path.parent())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| bad(key, v, "expected a number"))?;
    if !x.is_finite() {
        return Err(bad(key, v, "must be finite"));
    }
    Ok(x)
}

/// Number with an optional k/M/G suffix; may be negative so that
/// validation can report it as an invariant violation.
fn parse_quantity(key: &str, v: &str) -> Result<f64, ConfigError> {
    let (num, mult) = match v.chars().last() {
        Some('k') => (&v[..v.len() - 1], 1e3),
        Some('M') => (&v[..v.len() - 1], 1e6),
        Some('G') => (&v[..v.len() - 1], 1e9),
        _ => (v, 1.0),
    };
    Ok(parse_f64(key, num.trim())? * mult)
}

fn parse_bytes(key: &str, v: &str) -> Result<u64, ConfigError> {
    let q = parse_quantity(key, v)?;
    if q <= 0.0 || q.fract() != 0.0 {
        return Err(bad(key, v, "must be a positive whole number of bytes"));
    }
    Ok(q as u64)
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| bad(key, v, "expected a non-negative integer"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "expected true or false")),
    }
}

fn parse_host_range(key: &str, v: &str) -> Result<HostRange, ConfigError> {
    let err = || bad(key, v, "expected <first>-<last> or a single host id");
    match v.split_once('-') {
        Some((a, b)) => {
            let r = HostRange::new(
                a.trim().parse().map_err(|_| err())?,
                b.trim().parse().map_err(|_| err())?,
            );
            if r.first > r.last {
                return Err(err());
            }
            Ok(r)
        }
        None => {
            let h = v.parse().map_err(|_| err())?;
            Ok(HostRange::new(h, h))
        }
    }
}

const SCENARIO_KEYS: [&str; 7] = ["name", "duration", "step", "map", "ttl", "seed", "collect"];
const GROUP_KEYS: [&str; 13] = [
    "count",
    "speedMin",
    "speedMax",
    "pauseMin",
    "pauseMax",
    "range",
    "bitrate",
    "bufferSize",
    "router",
    "snwCopies",
    "hopThreshold",
    "mlThreshold",
    "modelPath",
];
const TRAFFIC_KEYS: [&str; 8] = [
    "intervalMin",
    "intervalMax",
    "sizeMin",
    "sizeMax",
    "srcHosts",
    "dstHosts",
    "start",
    "stop",
];

/// Splits `GroupK.field` into (K, field).
fn group_key(key: &str) -> Option<(usize, &str)> {
    let rest = key.strip_prefix("Group")?;
    let (num, field) = rest.split_once('.')?;
    let k: usize = num.parse().ok()?;
    (k >= 1).then_some((k, field))
}

fn check_key(key: &str) -> Result<(), ConfigError> {
    let known = if let Some(f) = key.strip_prefix("Scenario.") {
        SCENARIO_KEYS.contains(&f)
    } else if let Some(f) = key.strip_prefix("Traffic.") {
        TRAFFIC_KEYS.contains(&f)
    } else if let Some((_, f)) = group_key(key) {
        GROUP_KEYS.contains(&f)
    } else {
        false
    };
    if known {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey(key.to_string()))
    }
}

impl ScenarioConfig {
    /// Builds and validates a config from raw pairs. `base_dir` anchors
    /// relative file paths.
    pub fn from_raw(raw: &RawConfig, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        for key in raw.keys() {
            check_key(key)?;
        }
        let get = |k: &str| raw.get(k).map(String::as_str);
        let req = |k: &str| get(k).ok_or_else(|| ConfigError::MissingKey(k.to_string()));
        let rebase = |p: PathBuf| match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        };

        let duration = parse_f64("Scenario.duration", req("Scenario.duration")?)?;
        let map = match MapSource::parse("Scenario.map", req("Scenario.map")?)? {
            MapSource::File(p) => MapSource::File(rebase(p)),
            g => g,
        };
        let opt_f64 = |k: &str, d: f64| get(k).map_or(Ok(d), |v| parse_f64(k, v));

        let mut group_ids: Vec<usize> = raw
            .keys()
            .filter_map(|k| group_key(k))
            .map(|(g, _)| g)
            .collect();
        group_ids.dedup();
        group_ids.sort_unstable();
        group_ids.dedup();
        if group_ids.is_empty() {
            return Err(ConfigError::MissingKey("Group1.count".into()));
        }
        if group_ids != (1..=group_ids.len()).collect::<Vec<_>>() {
            return Err(ConfigError::Invalid(
                "groups must be numbered Group1..GroupN without gaps".into(),
            ));
        }
        let mut groups = Vec::new();
        for g in group_ids {
            let key = |f: &str| format!("Group{g}.{f}");
            let gget = |f: &str| raw.get(&key(f)).map(String::as_str);
            let count_key = key("count");
            let count = parse_int(
                &count_key,
                gget("count").ok_or(ConfigError::MissingKey(count_key.clone()))?,
            )?;
            let router_key = key("router");
            let router_val = gget("router").ok_or(ConfigError::MissingKey(router_key.clone()))?;
            let router: RouterKind = router_val
                .parse()
                .map_err(|e: String| bad(&router_key, router_val, e))?;
            let mut grp = GroupConfig::with_defaults(count, router);
            let f = |name: &str, d: f64| gget(name).map_or(Ok(d), |v| parse_f64(&key(name), v));
            grp.speed = (f("speedMin", grp.speed.0)?, f("speedMax", grp.speed.1)?);
            grp.pause = (f("pauseMin", grp.pause.0)?, f("pauseMax", grp.pause.1)?);
            grp.range = f("range", grp.range)?;
            if let Some(v) = gget("bitrate") {
                grp.bitrate = parse_quantity(&key("bitrate"), v)?;
            }
            if let Some(v) = gget("bufferSize") {
                grp.buffer_size = parse_bytes(&key("bufferSize"), v)?;
            }
            if let Some(v) = gget("snwCopies") {
                grp.snw_copies = parse_int(&key("snwCopies"), v)?;
            }
            if let Some(v) = gget("hopThreshold") {
                grp.hop_threshold = parse_int(&key("hopThreshold"), v)?;
            }
            grp.ml_threshold = f("mlThreshold", grp.ml_threshold)?;
            grp.model_path = gget("modelPath")
                .filter(|v| !v.is_empty())
                .map(|v| rebase(PathBuf::from(v)));
            groups.push(grp);
        }

        if !raw.keys().any(|k| k.starts_with("Traffic.")) {
            return Err(ConfigError::MissingKey("Traffic.*".into()));
        }
        let size_of = |k: &str, d: u64| get(k).map_or(Ok(d), |v| parse_bytes(k, v));
        let hosts_of = |k: &str| get(k).map(|v| parse_host_range(k, v)).transpose();
        let traffic = TrafficSpec {
            interval: (
                opt_f64("Traffic.intervalMin", 25.0)?,
                opt_f64("Traffic.intervalMax", 35.0)?,
            ),
            size: (
                size_of("Traffic.sizeMin", 500_000)?,
                size_of("Traffic.sizeMax", 1_000_000)?,
            ),
            src_hosts: hosts_of("Traffic.srcHosts")?,
            dst_hosts: hosts_of("Traffic.dstHosts")?,
            start: opt_f64("Traffic.start", 0.0)?,
            stop: get("Traffic.stop")
                .map(|v| parse_f64("Traffic.stop", v))
                .transpose()?,
        };

        let cfg = ScenarioConfig {
            name: get("Scenario.name").unwrap_or("scenario").to_string(),
            duration,
            step: opt_f64("Scenario.step", 1.0)?,
            map,
            ttl: opt_f64("Scenario.ttl", 3600.0)?,
            seed: get("Scenario.seed").map_or(Ok(0), |v| parse_int("Scenario.seed", v))?,
            collect: get("Scenario.collect")
                .map_or(Ok(false), |v| parse_bool("Scenario.collect", v))?,
            groups,
            traffic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn host_count(&self) -> u32 {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn all_hosts(&self) -> HostRange {
        HostRange::new(0, self.host_count().saturating_sub(1))
    }

    /// Traffic parameters with host ranges and stop time filled in.
    pub fn traffic_config(&self) -> TrafficConfig {
        TrafficConfig {
            interval: self.traffic.interval,
            size: self.traffic.size,
            src_hosts: self.traffic.src_hosts.unwrap_or_else(|| self.all_hosts()),
            dst_hosts: self.traffic.dst_hosts.unwrap_or_else(|| self.all_hosts()),
            start: self.traffic.start,
            stop: self.traffic.stop.unwrap_or(self.duration),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |s: String| Err(ConfigError::Invalid(s));
        if !(self.duration > 0.0) {
            return invalid("Scenario.duration must be > 0".into());
        }
        if !(self.step > 0.0) {
            return invalid("Scenario.step must be > 0".into());
        }
        if !(self.ttl > 0.0) {
            return invalid("Scenario.ttl must be > 0".into());
        }
        if self.host_count() < 2 {
            return invalid("scenario needs at least 2 hosts".into());
        }
        if self.name.contains(',') {
            return invalid("Scenario.name must not contain commas".into());
        }
        for (i, g) in self.groups.iter().enumerate() {
            let k = i + 1;
            let stationary = g.speed == (0.0, 0.0);
            if !stationary && !(g.speed.0 > 0.0 && g.speed.0 <= g.speed.1) {
                return invalid(format!(
                    "Group{k}: speed range must satisfy 0 < speedMin <= speedMax (or both 0 for fixed hosts)"
                ));
            }
            if !(g.pause.0 >= 0.0 && g.pause.0 <= g.pause.1) {
                return invalid(format!(
                    "Group{k}: pause range must satisfy 0 <= pauseMin <= pauseMax"
                ));
            }
            if !(g.range > 0.0) {
                return invalid(format!("Group{k}.range must be > 0"));
            }
            if !(g.bitrate > 0.0) {
                return invalid(format!("Group{k}.bitrate must be > 0"));
            }
            if g.snw_copies < 1 {
                return invalid(format!("Group{k}.snwCopies must be >= 1"));
            }
            if !(0.0..=1.0).contains(&g.ml_threshold) {
                return invalid(format!("Group{k}.mlThreshold must be in [0, 1]"));
            }
            if let Some(p) = &g.model_path {
                if !p.exists() {
                    return Err(ConfigError::MissingFile(p.clone()));
                }
            }
        }
        if let MapSource::File(p) = &self.map {
            if !p.exists() {
                return Err(ConfigError::MissingFile(p.clone()));
            }
        }
        let traffic = self.traffic_config();
        let last = self.host_count() - 1;
        if traffic.src_hosts.last > last || traffic.dst_hosts.last > last {
            return invalid(format!(
                "traffic host ranges exceed the {} configured hosts",
                last + 1
            ));
        }
        traffic.validate()?;
        Ok(())
    }

    /// Emits every key explicitly; parsing the result yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("Scenario.name", self.name.clone());
        kv("Scenario.duration", self.duration.to_string());
        kv("Scenario.step", self.step.to_string());
        kv("Scenario.map", self.map.to_value());
        kv("Scenario.ttl", self.ttl.to_string());
        kv("Scenario.seed", self.seed.to_string());
        kv("Scenario.collect", self.collect.to_string());
        for (i, g) in self.groups.iter().enumerate() {
            let p = format!("Group{}.", i + 1);
            kv(&format!("{p}count"), g.count.to_string());
            kv(&format!("{p}speedMin"), g.speed.0.to_string());
            kv(&format!("{p}speedMax"), g.speed.1.to_string());
            kv(&format!("{p}pauseMin"), g.pause.0.to_string());
            kv(&format!("{p}pauseMax"), g.pause.1.to_string());
            kv(&format!("{p}range"), g.range.to_string());
            kv(&format!("{p}bitrate"), g.bitrate.to_string());
            kv(&format!("{p}bufferSize"), g.buffer_size.to_string());
            kv(&format!("{p}router"), g.router.to_string());
            kv(&format!("{p}snwCopies"), g.snw_copies.to_string());
            kv(&format!("{p}hopThreshold"), g.hop_threshold.to_string());
            kv(&format!("{p}mlThreshold"), g.ml_threshold.to_string());
            if let Some(m) = &g.model_path {
                kv(&format!("{p}modelPath"), m.display().to_string());
            }
        }
        let t = &self.traffic;
        kv("Traffic.intervalMin", t.interval.0.to_string());
        kv("Traffic.intervalMax", t.interval.1.to_string());
        kv("Traffic.sizeMin", t.size.0.to_string());
        kv("Traffic.sizeMax", t.size.1.to_string());
        if let Some(r) = t.src_hosts {
            kv("Traffic.srcHosts", r.to_string());
        }
        if let Some(r) = t.dst_hosts {
            kv("Traffic.dstHosts", r.to_string());
        }
        kv("Traffic.start", t.start.to_string());
        if let Some(s) = t.stop {
            kv("Traffic.stop", s.to_string());
        }
        out
    }

    /// Copy with every group switched to `router`.
    pub fn with_router(&self, router: RouterKind) -> Self {
        let mut cfg = self.clone();
        for g in &mut cfg.groups {
            g.router = router;
        }
        cfg
    }

    /// Copy with every group's model path set (used by the learned gate).
    pub fn with_model(&self, path: &Path) -> Self {
        let mut cfg = self.clone();
        for g in &mut cfg.groups {
            g.model_path = Some(path.to_path_buf());
        }
        cfg
    }

    /// Label of the router mix, e.g. `maxprop` or `epidemic+snw`.
    pub fn router_label(&self) -> String {
        let mut names: Vec<&str> = Vec::new();
        for g in &self.groups {
            if !names.contains(&g.router.as_str()) {
                names.push(g.router.as_str());
            }
        }
        names.join("+")
    }
}

/// A validated config with its map and models loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub map: Arc<MapGraph>,
    /// Per group: the loaded gate model, if the group uses one.
    pub models: Vec<Option<Arc<GbdtModel>>>,
}

impl Scenario {
    pub fn resolve(config: ScenarioConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let map = Arc::new(config.map.load()?);
        if map.len() < 2 {
            return Err(ConfigError::Map(MapError::TooSmall));
        }
        let mut cache: BTreeMap<PathBuf, Arc<GbdtModel>> = BTreeMap::new();
        let mut models = Vec::new();
        for (i, g) in config.groups.iter().enumerate() {
            let model = match (&g.model_path, g.router) {
                (Some(p), RouterKind::MlMaxProp) => {
                    if !cache.contains_key(p) {
                        let m = GbdtModel::load(p).map_err(|source| ConfigError::Model {
                            path: p.clone(),
                            source,
                        })?;
                        cache.insert(p.clone(), Arc::new(m));
                    }
                    Some(Arc::clone(&cache[p]))
                }
                (None, RouterKind::MlMaxProp) => {
                    log::warn!(
                        "Group{}: mlmaxprop without a model path; the gate admits every offer",
                        i + 1
                    );
                    None
                }
                _ => None,
            };
            models.push(model);
        }
        Ok(Self {
            config,
            map,
            models,
        })
    }

    pub fn router_settings(&self, group: usize) -> RouterSettings {
        let g = &self.config.groups[group];
        RouterSettings {
            kind: g.router,
            snw_copies: g.snw_copies,
            hop_threshold: g.hop_threshold,
            ml_threshold: g.ml_threshold,
            model: self.models[group].clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
Scenario.duration = 600
Scenario.map = grid:3x3@50
Group1.count = 4
Group1.router = epidemic
Traffic.intervalMin = 30
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.step, 1.0);
        assert_eq!(c.seed, 0);
        assert!(!c.collect);
        assert_eq!(c.ttl, 3600.0);
        let g = &c.groups[0];
        assert_eq!((g.ml_threshold, g.snw_copies, g.hop_threshold), (0.5, 8, 3));
        assert_eq!(g.buffer_size, 5_000_000);
        assert_eq!(c.traffic.interval, (30.0, 35.0));
        assert_eq!(c.traffic_config().dst_hosts, HostRange::new(0, 3));
        assert_eq!(c.traffic_config().stop, 600.0);
    }

    #[test]
    fn negative_buffer_is_rejected() {
        let text = format!("{MINIMAL}Group1.bufferSize = -5\n");
        assert!(
            matches!(parse_config(&text), Err(ConfigError::BadValue { key, .. }) if key == "Group1.bufferSize")
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("{MINIMAL}unknownKey = 3\n");
        match parse_config(&text) {
            Err(ConfigError::UnknownKey(k)) => assert_eq!(k, "unknownKey"),
            other => panic!("unexpected {other:?}"),
        }
        let text = format!("{MINIMAL}Group1.colour = red\n");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::UnknownKey(_))
        ));
    }

    #[test]
    fn missing_required_keys() {
        for drop in ["Scenario.duration", "Scenario.map", "Group1", "Traffic."] {
            let text: String = MINIMAL
                .lines()
                .filter(|l| !l.starts_with(drop))
                .map(|l| format!("{l}\n"))
                .collect();
            assert!(
                matches!(parse_config(&text), Err(ConfigError::MissingKey(_))),
                "{drop}"
            );
        }
    }

    #[test]
    fn type_mismatch_and_invariants() {
        let cases = [
            "Scenario.duration = soon\n",
            "Scenario.collect = maybe\n",
            "Group1.router = prophet\n",
            "Group1.speedMin = 0\n",
            "Group1.count = 1\n",
            "Scenario.ttl = 0\n",
            "Traffic.srcHosts = 0-9\n",
            "Scenario.map = missing-file.wkt\n",
            "Group2.router = snw\n",
        ];
        for c in cases {
            assert!(parse_config(&format!("{MINIMAL}{c}")).is_err(), "{c}");
        }
    }

    #[test]
    fn size_suffixes() {
        let text = format!(
            "{MINIMAL}Group1.bufferSize = 2M\nGroup1.bitrate = 250k\nTraffic.sizeMax = 1.5M\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.groups[0].buffer_size, 2_000_000);
        assert_eq!(c.groups[0].bitrate, 250_000.0);
        assert_eq!(c.traffic.size.1, 1_500_000);
    }

    #[test]
    fn text_round_trip() {
        let text = format!(
            "{MINIMAL}Group2.count = 3\nGroup2.router = mlmaxprop\nGroup2.mlThreshold = 0.35\nTraffic.srcHosts = 0-2\nTraffic.stop = 500\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn resolve_builds_grid() {
        let s = Scenario::resolve(parse_config(MINIMAL).unwrap()).unwrap();
        assert_eq!(s.map.len(), 9);
        assert_eq!(s.models, vec![None]);
    }
}
