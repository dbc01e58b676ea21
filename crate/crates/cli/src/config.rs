//! Plan assembly: command-line flags over an optional flat config file.
//!
//! The config format is `key=value` lines under `[section]` headers,
//! where a section is a subcommand name or `global`. Unknown sections,
//! keys, or flags are rejected. Flags override file values.

use std::collections::BTreeMap;
use std::fmt;

pub const DEFAULT_BUDGET: u64 = 1 << 24;
pub const BUDGET_FLOOR: u64 = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Entropy,
    Mixing,
    Ergodic,
    Binom,
    Selftest,
}

impl Subcommand {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "entropy" => Some(Self::Entropy),
            "mixing" => Some(Self::Mixing),
            "ergodic" => Some(Self::Ergodic),
            "binom" => Some(Self::Binom),
            "selftest" => Some(Self::Selftest),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::Mixing => "mixing",
            Self::Ergodic => "ergodic",
            Self::Binom => "binom",
            Self::Selftest => "selftest",
        }
    }

    /// Keys this subcommand accepts beyond the global ones.
    fn own_keys(&self) -> &'static [&'static str] {
        match self {
            Self::Entropy => &["M", "seq", "structure"],
            Self::Mixing => &["B", "C", "beta", "b", "kmax"],
            Self::Ergodic => &["B", "dir", "N", "seeds", "stride", "tolerance"],
            Self::Binom => &["k", "N", "nmax", "seeds", "variant", "tolerance", "dump-s"],
            Self::Selftest => &[],
        }
    }
}

pub const GLOBAL_KEYS: &[&str] = &["rule", "seed", "budget", "out", "format", "log-base"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Nats,
    Bits,
    BaseA,
}

impl LogBase {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Nats => "e",
            Self::Bits => "2",
            Self::BaseA => "a",
        }
    }
}

/// A config error carrying the offending key, reported on exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

type ConfigResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError(msg.into()))
}

/// Fully resolved plan: raw string values keyed by flag name, plus the
/// resolved globals every run uses.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub subcommand: Subcommand,
    pub values: BTreeMap<String, String>,
    pub seed: u64,
    pub budget: u64,
    pub out: String,
    pub format: OutputFormat,
    pub log_base: LogBase,
}

impl ExperimentPlan {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> ConfigResult<&str> {
        self.get(key)
            .ok_or_else(|| ConfigError(format!("missing required key `{key}`")))
    }

    pub fn parse_u64(&self, key: &str) -> ConfigResult<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: bad integer {v:?}"))),
        }
    }

    pub fn parse_f64(&self, key: &str) -> ConfigResult<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: bad real {v:?}"))),
        }
    }
}

fn parse_config_file(path: &str, sub: Subcommand) -> ConfigResult<BTreeMap<String, String>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return err(format!("cannot read config {path:?}: {e}")),
    };
    let mut section: Option<String> = None;
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if name != "global" && Subcommand::parse(name).is_none() {
                return err(format!("line {}: unknown section `{name}`", lineno + 1));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("line {}: expected key=value", lineno + 1));
        };
        let key = key.trim();
        let value = value.trim();
        let Some(section) = section.as_deref() else {
            return err(format!("line {}: key `{key}` before any section", lineno + 1));
        };
        let relevant = section == "global" || section == sub.name();
        if !relevant {
            continue;
        }
        let allowed: bool = if section == "global" {
            GLOBAL_KEYS.contains(&key)
        } else {
            sub.own_keys().contains(&key) || GLOBAL_KEYS.contains(&key)
        };
        if !allowed {
            return err(format!("line {}: unknown key `{key}`", lineno + 1));
        }
        out.insert(key.to_string(), value.to_string());
    }
    Ok(out)
}

/// Parse argv into a plan. `args` excludes the program name.
pub fn parse_plan(args: &[String]) -> ConfigResult<ExperimentPlan> {
    let Some(subname) = args.first() else {
        return err("usage: dirca <entropy|mixing|ergodic|binom|selftest> [--flags]");
    };
    let Some(subcommand) = Subcommand::parse(subname) else {
        return err(format!("unknown subcommand `{subname}`"));
    };

    // flags, allowing `--key value` and `--key=value`
    let mut flags: BTreeMap<String, String> = BTreeMap::new();
    let mut i = 1;
    while i < args.len() {
        let arg = &args[i];
        let Some(stripped) = arg.strip_prefix("--") else {
            return err(format!("unexpected argument `{arg}`"));
        };
        let (key, value) = match stripped.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let key = stripped.to_string();
                i += 1;
                let Some(value) = args.get(i) else {
                    return err(format!("flag `--{key}` needs a value"));
                };
                (key, value.clone())
            }
        };
        let known = key == "config"
            || GLOBAL_KEYS.contains(&key.as_str())
            || subcommand.own_keys().contains(&key.as_str());
        if !known {
            return err(format!("unknown flag `--{key}`"));
        }
        flags.insert(key, value);
        i += 1;
    }

    let mut values = match flags.get("config") {
        Some(path) => parse_config_file(path, subcommand)?,
        None => BTreeMap::new(),
    };
    for (k, v) in &flags {
        if k != "config" {
            values.insert(k.clone(), v.clone());
        }
    }

    // resolved globals
    let seed = match values.get("seed") {
        Some(v) => v
            .parse::<u64>()
            .map_err(|_| ConfigError(format!("key `seed`: bad integer {v:?}")))?,
        None => match std::env::var("DIRCA_SEED") {
            Ok(v) => v
                .parse::<u64>()
                .map_err(|_| ConfigError(format!("DIRCA_SEED: bad integer {v:?}")))?,
            Err(_) => 0,
        },
    };
    let budget = match values.get("budget") {
        Some(v) => v
            .parse::<u64>()
            .map_err(|_| ConfigError(format!("key `budget`: bad integer {v:?}")))?,
        None => DEFAULT_BUDGET,
    };
    if budget < BUDGET_FLOOR {
        return err(format!("budget {budget} below the floor {BUDGET_FLOOR}"));
    }
    let out = values.get("out").cloned().unwrap_or_else(|| "-".to_string());
    let format = match values.get("format").map(|s| s.as_str()) {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => return err(format!("key `format`: expected csv|json, got {other:?}")),
    };
    let log_base = match values.get("log-base").map(|s| s.as_str()) {
        None | Some("e") => LogBase::Nats,
        Some("2") => LogBase::Bits,
        Some("a") => LogBase::BaseA,
        Some(other) => return err(format!("key `log-base`: expected e|2|a, got {other:?}")),
    };

    Ok(ExperimentPlan {
        subcommand,
        values,
        seed,
        budget,
        out,
        format,
        log_base,
    })
}
