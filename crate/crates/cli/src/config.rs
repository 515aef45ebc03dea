//! Run configuration: command-line flags over a `key=value` file over
//! built-in defaults. The seed additionally falls back to `PURIFYLAB_SEED`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use purifylab_core::strategies::{parse_strategy_list, StrategyName};

pub const SEED_ENV: &str = "PURIFYLAB_SEED";
pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => bail!("unknown format '{other}' (expected csv or json)"),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Inclusive range of environment dimensions, written `a` or `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeRange {
    pub start: usize,
    pub end: usize,
}

impl DeRange {
    pub fn single(d: usize) -> Self {
        Self { start: d, end: d }
    }

    pub fn is_single(&self) -> bool {
        self.start == self.end
    }

    pub fn values(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

impl FromStr for DeRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| -> Result<usize> {
            t.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("bad environment dimension '{t}' in '{s}'"))
        };
        let r = match s.split_once("..") {
            Some((a, b)) => Self {
                start: parse(a)?,
                end: parse(b.strip_prefix('=').unwrap_or(b))?,
            },
            None => Self::single(parse(s)?),
        };
        if r.start < 1 || r.end < r.start {
            bail!("bad environment range '{s}': need 1 <= a <= b");
        }
        Ok(r)
    }
}

impl fmt::Display for DeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}..{}", self.start, self.end)
        }
    }
}

/// Flags shared by every command. All optional so that a config file can
/// fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Input dimension d_I.
    #[arg(long = "di")]
    pub d_i: Option<usize>,
    /// Output dimension d_O.
    #[arg(long = "do")]
    pub d_o: Option<usize>,
    /// Environment dimension d_E, or an inclusive range `a..b`.
    #[arg(long = "de")]
    pub d_e: Option<String>,
    /// Monte Carlo samples (per point).
    #[arg(long)]
    pub n: Option<usize>,
    /// RNG seed; falls back to the config file, then $PURIFYLAB_SEED, then 20240601
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format (default csv)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated strategy names.
    #[arg(long)]
    pub strategies: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write an SVG chart next to the output.
    #[arg(long)]
    pub plot: bool,
    /// `key=value` file with defaults for the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated subset of validation checks.
    #[arg(long)]
    pub check: Option<String>,
    /// Histogram bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Comma-separated copy budgets.
    #[arg(long)]
    pub k: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Validate,
    Sweep,
    Spectrum,
    TomoScaling,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Sweep => "sweep",
            Self::Spectrum => "spectrum",
            Self::TomoScaling => "tomo-scaling",
        }
    }

    fn defaults(&self) -> Defaults {
        match self {
            Self::Validate => Defaults { dims: (2, 2), d_e: "4", n: 20_000 },
            Self::Sweep => Defaults { dims: (2, 2), d_e: "1..25", n: 2000 },
            Self::Spectrum => Defaults { dims: (4, 4), d_e: "16", n: 200 },
            Self::TomoScaling => Defaults { dims: (1, 2), d_e: "2", n: 200 },
        }
    }
}

struct Defaults {
    dims: (usize, usize),
    d_e: &'static str,
    n: usize,
}

pub const DEFAULT_STRATEGIES: &str = "pure:omega,append:optimal,dep,avg-ue";
pub const DEFAULT_K: &str = "64,128,256,512,1024,2048,4096";
pub const DEFAULT_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub d_i: usize,
    pub d_o: usize,
    pub d_e: DeRange,
    pub n: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyName>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub plot: bool,
    pub workers: usize,
    pub checks: Option<Vec<String>>,
    pub bins: usize,
    pub k: Vec<usize>,
}

const KEYS: [&str; 14] = [
    "di", "do", "de", "n", "seed", "out", "format", "strategies", "workers", "plot", "check", "bins", "k", "config",
];

/// Parse a flat `key=value` file; blank lines and `#` comments are ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", no + 1))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if !KEYS.contains(&k.as_str()) || k == "config" {
            bail!("config line {}: unknown key '{k}'", no + 1);
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key '{key}': {e}")))
        .transpose()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("expected a boolean, got '{other}'"),
    }
}

pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let ks = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("bad copy budget '{t}'"))
        })
        .collect::<Result<Vec<_>>>()?;
    if ks.iter().any(|&k| k == 0) {
        bail!("copy budgets must be >= 1");
    }
    Ok(ks)
}

impl RunConfig {
    /// Merge flags, an optional config file and the environment.
    pub fn resolve(command: CommandKind, args: &CommonArgs, env_seed: Option<String>) -> Result<Self> {
        let file = match &args.config {
            Some(p) => load_config(p)?,
            None => BTreeMap::new(),
        };
        let def = command.defaults();
        let d_i = args.d_i.or(from_file(&file, "di")?).unwrap_or(def.dims.0);
        let d_o = args.d_o.or(from_file(&file, "do")?).unwrap_or(def.dims.1);
        let d_e: DeRange = match args.d_e.clone().or_else(|| file.get("de").cloned()) {
            Some(s) => s.parse()?,
            None => def.d_e.parse()?,
        };
        let n = args.n.or(from_file(&file, "n")?).unwrap_or(def.n);
        let env_seed = env_seed
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .with_context(|| format!("{SEED_ENV}='{s}' is not an unsigned integer"))
            })
            .transpose()?;
        let seed = args.seed.or(from_file(&file, "seed")?).or(env_seed).unwrap_or(DEFAULT_SEED);
        let strategies_text = args
            .strategies
            .clone()
            .or_else(|| file.get("strategies").cloned())
            .unwrap_or_else(|| DEFAULT_STRATEGIES.to_string());
        let strategies = parse_strategy_list(&strategies_text)?;
        let out = args.out.clone().or_else(|| file.get("out").map(PathBuf::from));
        let format = match args.format {
            Some(f) => f,
            None => from_file(&file, "format")?.unwrap_or(Format::Csv),
        };
        let plot = args.plot || file.get("plot").map(|s| parse_bool(s)).transpose()?.unwrap_or(false);
        let workers = args.workers.or(from_file(&file, "workers")?).unwrap_or(0);
        let checks = args
            .check
            .clone()
            .or_else(|| file.get("check").cloned())
            .map(|s| s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect());
        let bins = args.bins.or(from_file(&file, "bins")?).unwrap_or(DEFAULT_BINS);
        let k = parse_k_list(&args.k.clone().or_else(|| file.get("k").cloned()).unwrap_or_else(|| DEFAULT_K.into()))?;

        let cfg = Self {
            command,
            d_i,
            d_o,
            d_e,
            n,
            seed,
            strategies,
            out,
            format,
            plot,
            workers,
            checks,
            bins,
            k,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            bail!("--n must be >= 2, got {}", self.n);
        }
        if self.command != CommandKind::Sweep && !self.d_e.is_single() {
            bail!("{} takes a single --de value, got {}", self.command.name(), self.d_e);
        }
        for d_e in self.d_e.values() {
            purifylab_core::ensembles::EnsembleSpec::new(self.d_i, self.d_o, d_e, self.seed)?;
        }
        if self.command == CommandKind::Spectrum && self.bins < 10 {
            bail!("--bins must be >= 10, got {}", self.bins);
        }
        if self.command == CommandKind::TomoScaling {
            let lo = self.k.iter().min().copied().unwrap_or(0);
            let hi = self.k.iter().max().copied().unwrap_or(0);
            if self.k.len() < 3 || hi < 16 * lo {
                bail!("--k needs at least 3 values spanning a factor of 16 or more");
            }
        }
        Ok(())
    }

    /// One-line `key=value` echo used in output headers.
    pub fn echo(&self) -> String {
        let strategies: Vec<String> = self.strategies.iter().map(|s| s.to_string()).collect();
        let mut parts = vec![
            format!("command={}", self.command.name()),
            format!("di={}", self.d_i),
            format!("do={}", self.d_o),
            format!("de={}", self.d_e),
            format!("n={}", self.n),
            format!("seed={}", self.seed),
        ];
        match self.command {
            CommandKind::Sweep => parts.push(format!("strategies={}", strategies.join(","))),
            CommandKind::Spectrum => parts.push(format!("bins={}", self.bins)),
            CommandKind::TomoScaling => {
                let ks: Vec<String> = self.k.iter().map(|k| k.to_string()).collect();
                parts.push(format!("k={}", ks.join(",")));
            }
            CommandKind::Validate => {
                if let Some(c) = &self.checks {
                    parts.push(format!("check={}", c.join(",")));
                }
            }
        }
        parts.push(format!("format={}", self.format));
        parts.push(format!("workers={}", self.workers));
        parts.join(" ")
    }
}

fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_file(&text).with_context(|| format!("in config {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!("3".parse::<DeRange>().unwrap(), DeRange::single(3));
        let r: DeRange = "1..25".parse().unwrap();
        assert_eq!((r.start, r.end), (1, 25));
        assert_eq!(r.values().count(), 25);
        assert_eq!("2..=4".parse::<DeRange>().unwrap().end, 4);
        assert!("0".parse::<DeRange>().is_err());
        assert!("5..2".parse::<DeRange>().is_err());
        assert!("a..2".parse::<DeRange>().is_err());
        assert_eq!(r.to_string(), "1..25");
    }

    #[test]
    fn config_file_parsing() {
        let m = parse_config_file("# c\ndi = 3\n\nseed=5 # trailing\n--n=10\n").unwrap();
        assert_eq!(m["di"], "3");
        assert_eq!(m["seed"], "5");
        assert_eq!(m["n"], "10");
        assert!(parse_config_file("nope=1").is_err());
        assert!(parse_config_file("di").is_err());
    }

    #[test]
    fn seed_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "seed=11\nn=50\n").unwrap();
        let mut args = CommonArgs {
            config: Some(path.clone()),
            ..Default::default()
        };
        let env = Some("13".to_string());
        let cfg = RunConfig::resolve(CommandKind::Validate, &args, env.clone()).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.n, 50);
        args.seed = Some(12);
        assert_eq!(RunConfig::resolve(CommandKind::Validate, &args, env.clone()).unwrap().seed, 12);
        let bare = CommonArgs::default();
        assert_eq!(RunConfig::resolve(CommandKind::Validate, &bare, env).unwrap().seed, 13);
        assert_eq!(RunConfig::resolve(CommandKind::Validate, &bare, None).unwrap().seed, DEFAULT_SEED);
        assert!(RunConfig::resolve(CommandKind::Validate, &bare, Some("x".into())).is_err());
    }

    #[test]
    fn validation_errors() {
        let mut a = CommonArgs {
            n: Some(1),
            ..Default::default()
        };
        assert!(RunConfig::resolve(CommandKind::Sweep, &a, None).is_err());
        a.n = Some(10);
        a.d_e = Some("1..3".into());
        assert!(RunConfig::resolve(CommandKind::Validate, &a, None).is_err());
        assert!(RunConfig::resolve(CommandKind::Sweep, &a, None).is_ok());
        a.d_o = Some(1);
        assert!(RunConfig::resolve(CommandKind::Sweep, &a, None).is_err());
        let t = CommonArgs {
            k: Some("64,128,256".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(CommandKind::TomoScaling, &t, None).is_err());
        let b = CommonArgs {
            bins: Some(5),
            ..Default::default()
        };
        assert!(RunConfig::resolve(CommandKind::Spectrum, &b, None).is_err());
        let s = CommonArgs {
            strategies: Some("dep,bogus".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(CommandKind::Sweep, &s, None).is_err());
    }

    #[test]
    fn command_defaults() {
        let a = CommonArgs::default();
        let s = RunConfig::resolve(CommandKind::Sweep, &a, None).unwrap();
        assert_eq!((s.d_i, s.d_o, s.d_e, s.n), (2, 2, DeRange { start: 1, end: 25 }, 2000));
        assert_eq!(s.strategies.len(), 4);
        let t = RunConfig::resolve(CommandKind::TomoScaling, &a, None).unwrap();
        assert_eq!((t.d_i, t.d_o, t.d_e.start), (1, 2, 2));
        assert_eq!(t.k.len(), 7);
    }
}
