//! Resolved run configuration: command-line flags merged over an optional JSON config file.
//!
//! The JSON form is a flat object whose keys are the long flag names (`candidate-multiple`,
//! `lr0`, ...) plus `command`. A `run.json` written by any command is itself a valid config.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use fvdlens::distortion::{Family, Mode};
use fvdlens::Error;

pub const DEFAULT_EXTRACTOR: &str = "toy-v1-128";
pub const DEFAULT_OUTPUT: &str = "fvdlens-out";
pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Table => "txt",
            Format::Csv => "csv",
        }
    }
}

/// Severity levels, written `1..5` (inclusive) or `1,3,5`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Levels(pub Vec<usize>);

impl Default for Levels {
    fn default() -> Self {
        Levels((1..=5).collect())
    }
}

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid levels {s:?}; expected e.g. 1..5 or 1,3,5");
        let levels: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
            let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            (a..=b).collect()
        } else {
            s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
        };
        if levels.is_empty() {
            return Err(bad());
        }
        Ok(Levels(levels))
    }
}

impl fmt::Display for Levels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Comma-separated chunk offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Offsets(pub Vec<usize>);

impl FromStr for Offsets {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| format!("invalid offset {p:?}")))
            .collect::<Result<_, _>>()
            .map(Offsets)
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GlobalArgs {
    /// Root seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; falls back to FVDLENS_THREADS, then to all cores.
    #[arg(long, global = true, env = "FVDLENS_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = DEFAULT_OUTPUT)]
    pub output: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ComputeArgs {
    /// Reference features (`.fvdf`) or clip directory.
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    pub reference: PathBuf,
    /// Generated features (`.fvdf`) or clip directory.
    #[arg(long)]
    pub gen: PathBuf,
    /// Extractor for clip directories.
    #[arg(long, default_value = DEFAULT_EXTRACTOR)]
    pub extractor: String,
    /// Treat every frame as a sample (FID) instead of every clip (FVD).
    #[arg(long)]
    #[serde(default)]
    pub frames: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DistortArgs {
    /// Clip directory to corrupt.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Severity level, 1-based.
    #[arg(long)]
    pub severity: usize,
    #[arg(long, value_parser = parse_mode, default_value = "spatial")]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FreezeArgs {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = DEFAULT_EXTRACTOR)]
    pub extractor: String,
    /// One row per frame instead of one per clip.
    #[arg(long)]
    #[serde(default)]
    pub frames: bool,
    /// Store the payload as f32 instead of f64.
    #[arg(long)]
    #[serde(default)]
    pub f32: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SensitivityArgs {
    /// Clean reference clips.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    #[arg(long, default_value_t = Levels::default())]
    pub levels: Levels,
    /// Clip-level extractor for FVD.
    #[arg(long, default_value = DEFAULT_EXTRACTOR)]
    pub extractor: String,
    /// Frame-level extractor for FID; defaults to `--extractor`.
    #[arg(long)]
    pub frame_extractor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ProbeArgs {
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long, default_value = DEFAULT_EXTRACTOR)]
    pub extractor: String,
    /// Freeze candidate clips (repeat their first frame) before extraction.
    #[arg(long)]
    #[serde(default)]
    pub freeze: bool,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub decay_factor: f64,
    #[arg(long, default_value_t = 100)]
    pub decay_every: usize,
    #[arg(long, default_value_t = 2048)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 8)]
    pub candidate_multiple: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ChunksArgs {
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub gen: PathBuf,
    #[arg(long, default_value = DEFAULT_EXTRACTOR)]
    pub extractor: String,
    #[arg(long, default_value_t = 16)]
    pub chunk_length: usize,
    #[arg(long, default_value_t = 64)]
    pub stride: usize,
    /// Explicit chunk start offsets, e.g. `0,64,128`; overrides `--stride`.
    #[arg(long)]
    pub offsets: Option<Offsets>,
    /// Also evaluate all frames at once.
    #[arg(long)]
    #[serde(default)]
    pub full_length: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandArgs {
    Compute(ComputeArgs),
    Distort(DistortArgs),
    Freeze(FreezeArgs),
    Extract(ExtractArgs),
    Sensitivity(SensitivityArgs),
    Probe(ProbeArgs),
    Chunks(ChunksArgs),
}

impl CommandArgs {
    pub fn name(&self) -> &'static str {
        match self {
            CommandArgs::Compute(_) => "compute",
            CommandArgs::Distort(_) => "distort",
            CommandArgs::Freeze(_) => "freeze",
            CommandArgs::Extract(_) => "extract",
            CommandArgs::Sensitivity(_) => "sensitivity",
            CommandArgs::Probe(_) => "probe",
            CommandArgs::Chunks(_) => "chunks",
        }
    }

    fn to_map(&self) -> Map<String, Value> {
        let v = match self {
            CommandArgs::Compute(a) => serde_json::to_value(a),
            CommandArgs::Distort(a) => serde_json::to_value(a),
            CommandArgs::Freeze(a) => serde_json::to_value(a),
            CommandArgs::Extract(a) => serde_json::to_value(a),
            CommandArgs::Sensitivity(a) => serde_json::to_value(a),
            CommandArgs::Probe(a) => serde_json::to_value(a),
            CommandArgs::Chunks(a) => serde_json::to_value(a),
        };
        match v.expect("argument structs serialize") {
            Value::Object(m) => m,
            _ => unreachable!("argument structs serialize to objects"),
        }
    }

    fn from_map(command: &str, map: Map<String, Value>) -> Result<Self, Error> {
        let v = Value::Object(map);
        Ok(match command {
            "compute" => CommandArgs::Compute(serde_json::from_value(v)?),
            "distort" => CommandArgs::Distort(serde_json::from_value(v)?),
            "freeze" => CommandArgs::Freeze(serde_json::from_value(v)?),
            "extract" => CommandArgs::Extract(serde_json::from_value(v)?),
            "sensitivity" => CommandArgs::Sensitivity(serde_json::from_value(v)?),
            "probe" => CommandArgs::Probe(serde_json::from_value(v)?),
            "chunks" => CommandArgs::Chunks(serde_json::from_value(v)?),
            other => return Err(Error::InvalidConfig(format!("unknown command {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub global: GlobalArgs,
    pub command: CommandArgs,
}

const GLOBAL_KEYS: [&str; 4] = ["seed", "threads", "output", "format"];

impl RunConfig {
    /// Flat JSON object: `command`, global keys, then command keys.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("command".into(), Value::String(self.command.name().into()));
        if let Value::Object(g) = serde_json::to_value(&self.global).expect("globals serialize") {
            map.extend(g);
        }
        map.extend(self.command.to_map());
        Value::Object(map)
    }

    pub fn from_json(value: Value) -> Result<Self, Error> {
        let Value::Object(mut map) = value else {
            return Err(Error::InvalidConfig("config must be a JSON object".into()));
        };
        let command = match map.remove("command") {
            Some(Value::String(c)) => c,
            _ => return Err(Error::InvalidConfig("config needs a string \"command\" key".into())),
        };
        let mut global = Map::new();
        for key in GLOBAL_KEYS {
            if let Some(v) = map.remove(key) {
                global.insert(key.into(), v);
            }
        }
        let defaults = serde_json::to_value(default_globals()).expect("globals serialize");
        if let Value::Object(d) = defaults {
            for (k, v) in d {
                global.entry(k).or_insert(v);
            }
        }
        Ok(Self {
            global: serde_json::from_value(Value::Object(global))?,
            command: CommandArgs::from_map(&command, map)?,
        })
    }

    pub fn read(path: &Path) -> Result<Value, Error> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn default_globals() -> GlobalArgs {
    GlobalArgs {
        seed: 0,
        threads: None,
        output: PathBuf::from(DEFAULT_OUTPUT),
        format: Format::Json,
    }
}

fn explicit(matches: &ArgMatches, id: &str) -> bool {
    matches.ids().any(|i| i.as_str() == id)
        && matches!(
        matches.value_source(id),
        Some(ValueSource::CommandLine) | Some(ValueSource::EnvVariable)
    )
}

/// Overlays explicitly given flags onto `config`; flags left at their defaults only fill gaps.
///
/// `matches` tells which values were typed (or came from the environment) rather than defaulted.
/// Without a subcommand on the command line, the command comes from the config alone.
pub fn merge(
    config: Value,
    global: &GlobalArgs,
    command: Option<&CommandArgs>,
    matches: &ArgMatches,
) -> Result<RunConfig, Error> {
    let Value::Object(mut base) = config else {
        return Err(Error::InvalidConfig("config must be a JSON object".into()));
    };
    if let (Some(command), Some(Value::String(c))) = (command, base.get("command")) {
        if c != command.name() {
            return Err(Error::InvalidConfig(format!(
                "config is for command {c:?}, not {:?}",
                command.name()
            )));
        }
    }
    let sub = command.and_then(|c| matches.subcommand_matches(c.name()));
    let given = |id: &str| explicit(matches, id) || sub.is_some_and(|m| explicit(m, id));
    let mut overlay = |map: Map<String, Value>| {
        for (key, value) in map {
            let id = if key == "ref" { "reference".to_string() } else { key.replace('-', "_") };
            if given(&id) || !base.contains_key(&key) {
                base.insert(key, value);
            }
        }
    };
    if let Value::Object(g) = serde_json::to_value(global)? {
        overlay(g);
    }
    if let Some(command) = command {
        overlay(command.to_map());
    }
    if let Some(command) = command {
        base.insert("command".into(), Value::String(command.name().into()));
    }
    RunConfig::from_json(Value::Object(base))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_parse() {
        assert_eq!("1..5".parse::<Levels>().unwrap(), Levels::default());
        assert_eq!("2,4".parse::<Levels>().unwrap(), Levels(vec![2, 4]));
        assert!("a..b".parse::<Levels>().is_err());
        assert_eq!(Levels(vec![1, 3]).to_string(), "1,3");
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let cfg = RunConfig {
            global: default_globals(),
            command: CommandArgs::Freeze(FreezeArgs { input: "clips".into() }),
        };
        let v = cfg.to_json();
        assert_eq!(v["command"], "freeze");
        assert_eq!(RunConfig::from_json(v.clone()).unwrap(), cfg);
        let mut bad = v.clone();
        bad["bogus"] = Value::Bool(true);
        assert!(RunConfig::from_json(bad).is_err());
        let mut missing = v;
        missing.as_object_mut().unwrap().remove("command");
        assert!(RunConfig::from_json(missing).is_err());
    }
}
