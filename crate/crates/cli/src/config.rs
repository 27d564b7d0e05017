//! Command-line flags, the optional `key = value` config file, and the
//! validated [`RunConfig`] built from both (flags win).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use honeycomb_bath::lattice::Site;

use crate::error::CliError;

/// A whole comma-separated list is one flag value; the alias keeps clap from
/// treating the field as a repeated flag.
type FloatList = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Dynamics,
    SelfEnergy,
    Poles,
    TwoEmitter,
    Sweep,
    Losses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "fig1b")]
    Fig1b,
    #[value(name = "fig2a")]
    Fig2a,
    #[value(name = "fig3")]
    Fig3,
    #[value(name = "fig4a")]
    Fig4a,
    #[value(name = "fig4bc")]
    Fig4bc,
    #[value(name = "figA2b")]
    FigA2b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sublattices {
    #[value(name = "AA")]
    Aa,
    #[value(name = "AB")]
    Ab,
    #[value(name = "BB")]
    Bb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Initial {
    /// Only the first emitter excited.
    First,
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    G,
    Delta,
    N,
}

/// Inclusive scan `start:end:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scan {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Scan {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.start + self.step * i as f64).collect()
    }
}

impl FromStr for Scan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:end:step, got '{s}'"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
        let scan = Scan { start: num(parts[0])?, end: num(parts[1])?, step: num(parts[2])? };
        if !(scan.step > 0.0) || !(scan.end >= scan.start) || !scan.start.is_finite() || !scan.end.is_finite() {
            return Err(format!("scan '{s}' needs start <= end and step > 0"));
        }
        Ok(scan)
    }
}

impl fmt::Display for Scan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

fn parse_site(s: &str) -> Result<Site, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected a,b, got '{s}'"));
    }
    let num = |p: &str| p.trim().parse::<i64>().map_err(|e| format!("'{p}': {e}"));
    Ok([num(parts[0])?, num(parts[1])?])
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect()
}

#[derive(Debug, Clone, Parser)]
#[command(name = "honeycomb", version, about = "Quantum emitters in a honeycomb bath: dynamics, self-energies and poles")]
pub struct Args {
    /// What to compute (or use --preset).
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// `key = value` file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Hopping; energies and times on the command line are in its unit.
    #[arg(long = "J")]
    pub j: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Separation of the second emitter, `a,b`.
    #[arg(long, value_parser = parse_site, allow_hyphen_values = true)]
    pub n12: Option<Site>,
    #[arg(long, value_enum)]
    pub sublattices: Option<Sublattices>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long = "dt-record")]
    pub dt_record: Option<f64>,
    #[arg(long = "gamma-loss")]
    pub gamma_loss: Option<f64>,
    /// Output file, or directory for multi-table runs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Energy scan `start:end:step` for self-energy.
    #[arg(long, allow_hyphen_values = true)]
    pub scan: Option<Scan>,
    /// Times of bath population snapshots, `t1,t2,...`.
    #[arg(long, value_parser = parse_list)]
    pub snapshots: Option<FloatList>,
    #[arg(long, value_enum)]
    pub initial: Option<Initial>,
    /// Parameter varied by sweep.
    #[arg(long = "sweep-param", value_enum)]
    pub sweep_param: Option<SweepParam>,
    /// Values taken by the sweep parameter, `v1,v2,...`.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub values: Option<FloatList>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Command(Command),
    Preset(Preset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub delta: f64,
    pub n12: Site,
    pub sublattices: Sublattices,
    pub t_max: f64,
    pub dt_record: f64,
    pub gamma_loss: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: usize,
    pub scan: Scan,
    pub snapshots: Vec<f64>,
    pub initial: Initial,
    pub sweep_param: SweepParam,
    pub values: Vec<f64>,
}

impl RunConfig {
    /// Key/value echo written into every output header.
    pub fn echo(&self) -> Vec<(String, String)> {
        let task = match &self.task {
            Task::Command(c) => format!("command={}", value_name(*c)),
            Task::Preset(p) => format!("preset={}", value_name(*p)),
        };
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let (k, v) = task.split_once('=').unwrap();
        vec![
            (k.into(), v.into()),
            ("N".into(), self.n.to_string()),
            ("J".into(), self.j.to_string()),
            ("g".into(), self.g.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("n12".into(), format!("{},{}", self.n12[0], self.n12[1])),
            ("sublattices".into(), value_name(self.sublattices)),
            ("tmax".into(), self.t_max.to_string()),
            ("dt-record".into(), self.dt_record.to_string()),
            ("gamma-loss".into(), self.gamma_loss.to_string()),
            ("scan".into(), self.scan.to_string()),
            ("snapshots".into(), list(&self.snapshots)),
            ("initial".into(), value_name(self.initial)),
            ("sweep-param".into(), value_name(self.sweep_param)),
            ("values".into(), list(&self.values)),
        ]
    }
}

pub fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 19] = [
    "command", "preset", "N", "J", "g", "delta", "n12", "sublattices", "tmax", "dt-record", "gamma-loss", "out",
    "format", "workers", "scan", "snapshots", "initial", "sweep-param", "values",
];

struct FileValues(BTreeMap<String, String>);

impl FileValues {
    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => parse(v).map(Some).map_err(|e| CliError::Validation(format!("config key {key}: {e}"))),
        }
    }
}

fn from_str<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn enum_value<T: ValueEnum>(s: &str) -> Result<T, String> {
    T::from_str(s, true)
}

impl Args {
    /// Merges flags over the config file and validates the result.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        if let Some(k) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::Validation(format!("unknown config key '{k}'")));
        }
        let f = FileValues(file);

        let command = match self.command {
            Some(c) => Some(c),
            None => f.get("command", enum_value::<Command>)?,
        };
        let preset = match self.preset {
            Some(p) => Some(p),
            None => f.get("preset", enum_value::<Preset>)?,
        };
        let task = match (command, preset) {
            (Some(_), Some(_)) => return Err(CliError::Validation("give either a command or --preset, not both".into())),
            (Some(c), None) => Task::Command(c),
            (None, Some(p)) => Task::Preset(p),
            (None, None) => return Err(CliError::Validation("no command or --preset given".into())),
        };

        let workers_default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let config = RunConfig {
            task,
            n: pick(self.n, f.get("N", from_str)?, 64),
            j: pick(self.j, f.get("J", from_str)?, 1.0),
            g: pick(self.g, f.get("g", from_str)?, 0.1),
            delta: pick(self.delta, f.get("delta", from_str)?, 0.0),
            n12: pick(self.n12, f.get("n12", parse_site)?, [1, 1]),
            sublattices: pick(self.sublattices, f.get("sublattices", enum_value)?, Sublattices::Ab),
            t_max: pick(self.tmax, f.get("tmax", from_str)?, 100.0),
            dt_record: pick(self.dt_record, f.get("dt-record", from_str)?, 1.0),
            gamma_loss: pick(self.gamma_loss, f.get("gamma-loss", from_str)?, 0.0),
            out: self.out.or(f.get("out", |s| Ok(PathBuf::from(s)))?),
            format: pick(self.format, f.get("format", enum_value)?, Format::Csv),
            workers: pick(self.workers, f.get("workers", from_str)?, workers_default),
            scan: pick(self.scan, f.get("scan", from_str)?, Scan { start: -3.5, end: 3.5, step: 0.01 }),
            snapshots: pick(self.snapshots, f.get("snapshots", parse_list)?, Vec::new()),
            initial: pick(self.initial, f.get("initial", enum_value)?, Initial::First),
            sweep_param: pick(self.sweep_param, f.get("sweep-param", enum_value)?, SweepParam::G),
            values: pick(self.values, f.get("values", parse_list)?, Vec::new()),
        };
        validate(&config)?;
        Ok(config)
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Validation(m));
    if c.n < 2 {
        return bad(format!("N = {} must be at least 2", c.n));
    }
    if !(c.j.is_finite() && c.j > 0.0) {
        return bad(format!("J = {} must be positive", c.j));
    }
    if !(c.g.is_finite() && c.g >= 0.0) {
        return bad(format!("g = {} must be non-negative", c.g));
    }
    if !c.delta.is_finite() {
        return bad(format!("delta = {} must be finite", c.delta));
    }
    if !(c.t_max.is_finite() && c.t_max >= 0.0) {
        return bad(format!("tmax = {} must be non-negative", c.t_max));
    }
    if !(c.dt_record.is_finite() && c.dt_record > 0.0) {
        return bad(format!("dt-record = {} must be positive", c.dt_record));
    }
    if !(c.gamma_loss.is_finite() && c.gamma_loss >= 0.0) {
        return bad(format!("gamma-loss = {} must be non-negative", c.gamma_loss));
    }
    if c.workers == 0 {
        return bad("workers must be at least 1".into());
    }
    if c.snapshots.iter().any(|&t| !(t >= 0.0 && t <= c.t_max)) {
        return bad("snapshot times must lie in [0, tmax]".into());
    }
    if c.snapshots.windows(2).any(|w| w[0] > w[1]) {
        return bad("snapshot times must be sorted".into());
    }
    if c.task == Task::Command(Command::Sweep) {
        if c.values.is_empty() {
            return bad("sweep needs --values".into());
        }
        if c.sweep_param == SweepParam::N && c.values.iter().any(|v| v.fract() != 0.0 || *v < 2.0) {
            return bad("sweep over N needs integer values >= 2".into());
        }
    }
    Ok(())
}
