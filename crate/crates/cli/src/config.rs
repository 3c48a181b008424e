//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use schreier_liouville::measures::DEFAULT_PRUNE;
use schreier_liouville::numerics::{ExactWeight, Weight};
use schreier_liouville::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Thompson,
    LamplighterZ,
    LamplighterF2,
}

impl FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thompson" => Ok(GroupKind::Thompson),
            "lamplighter-z" => Ok(GroupKind::LamplighterZ),
            "lamplighter-f2" => Ok(GroupKind::LamplighterF2),
            _ => Err(Error::Config(format!("unknown group {s:?}"))),
        }
    }
}

impl GroupKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupKind::Thompson => "thompson",
            GroupKind::LamplighterZ => "lamplighter-z",
            GroupKind::LamplighterF2 => "lamplighter-f2",
        }
    }

    fn default_grid(self) -> u32 {
        match self {
            GroupKind::Thompson => 20,
            GroupKind::LamplighterZ => 2000,
            GroupKind::LamplighterF2 => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Scheduled family mixture with asserted bounds.
    Standard,
    /// Lazy uniform walk on `S ∪ S⁻¹`; report only.
    Contrast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub group: GroupKind,
    pub preset: Preset,
    pub basepoint: Option<String>,
    /// Ratio `ρ` of the geometric weights `c_j = (1 − ρ)ρ^j`.
    pub ratio: ExactWeight,
    pub truncation: usize,
    /// Largest step count a run may take.
    pub horizon: u32,
    pub mode: Mode,
    pub prune: f64,
    /// Largest family index available to the scheduler.
    pub n_grid: u32,
    pub workers: usize,
    pub svg: bool,
    pub cheeger_radius: u32,
}

const KEYS: &[&str] = &[
    "schema",
    "group",
    "preset",
    "basepoint",
    "weights",
    "J",
    "horizon",
    "mode",
    "prune",
    "n-grid",
    "workers",
    "svg",
    "cheeger-radius",
];

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config(format!("bad value {raw:?} for {key}")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key {k:?}", i + 1)));
            }
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k:?}", i + 1)));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);

        if let Some(s) = get("schema") {
            let s: u32 = value("schema", s)?;
            if s != SCHEMA_VERSION {
                return Err(Error::Config(format!("schema {s} is not supported (expected {SCHEMA_VERSION})")));
            }
        }
        let group: GroupKind = get("group").ok_or_else(|| Error::Config("missing key group".into()))?.parse()?;
        let preset = match get("preset").unwrap_or("standard") {
            "standard" => Preset::Standard,
            "contrast" => Preset::Contrast,
            p => return Err(Error::Config(format!("unknown preset {p:?}"))),
        };
        let mode = match get("mode").unwrap_or("exact") {
            "exact" => Mode::Exact,
            "float" => Mode::Float,
            m => return Err(Error::Config(format!("unknown mode {m:?}"))),
        };
        let w = get("weights").unwrap_or("geometric(1/2)");
        let inner = w
            .strip_prefix("geometric(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Config(format!("weights must read geometric(p/q), got {w:?}")))?;
        let ratio: ExactWeight = value("weights", inner)?;
        if ratio.is_zero() || ratio >= ExactWeight::ratio(1, 1) {
            return Err(Error::Config(format!("geometric ratio must lie in (0, 1), got {inner}")));
        }
        let truncation: usize = value("J", get("J").unwrap_or("3"))?;
        let horizon: u32 = match (get("horizon"), preset) {
            (Some(h), _) => value("horizon", h)?,
            (None, Preset::Standard) => 4096,
            (None, Preset::Contrast) => 16,
        };
        let prune: f64 = value("prune", get("prune").unwrap_or(&DEFAULT_PRUNE.to_string()))?;
        if !(0.0..1.0).contains(&prune) {
            return Err(Error::Config(format!("prune threshold {prune} out of range")));
        }
        let n_grid = match get("n-grid") {
            Some(s) => value("n-grid", s)?,
            None => group.default_grid(),
        };
        let workers: usize = value("workers", get("workers").unwrap_or("1"))?;
        if workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        let svg = match get("svg").unwrap_or("false") {
            "true" => true,
            "false" => false,
            s => return Err(Error::Config(format!("svg must be true or false, got {s:?}"))),
        };
        let cheeger_radius: u32 = value("cheeger-radius", get("cheeger-radius").unwrap_or("2"))?;
        Ok(Config {
            group,
            preset,
            basepoint: get("basepoint").map(str::to_string),
            ratio,
            truncation,
            horizon,
            mode,
            prune,
            n_grid,
            workers,
            svg,
            cheeger_radius,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Resolved settings. The worker count is left out so that runs differing only
    /// in parallelism produce identical manifests.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "schema = {SCHEMA_VERSION}");
        let _ = writeln!(s, "group = {}", self.group.as_str());
        let _ = writeln!(s, "preset = {}", if self.preset == Preset::Standard { "standard" } else { "contrast" });
        let _ = writeln!(s, "basepoint = {}", self.basepoint.as_deref().unwrap_or("default"));
        let _ = writeln!(s, "weights = geometric({})", self.ratio);
        let _ = writeln!(s, "J = {}", self.truncation);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "mode = {}", if self.mode == Mode::Exact { "exact" } else { "float" });
        let _ = writeln!(s, "prune = {:e}", self.prune);
        let _ = writeln!(s, "n-grid = {}", self.n_grid);
        let _ = writeln!(s, "svg = {}", self.svg);
        let _ = writeln!(s, "cheeger-radius = {}", self.cheeger_radius);
        s
    }
}

/// Reads a `key = value` manifest back into a map.
pub fn read_manifest(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
