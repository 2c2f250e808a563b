//! Settings from the config file and the command line, merged into an
//! analysis configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, ValueEnum};
use evmscope_core::analyzers::PropertyId;
use evmscope_core::pipeline::AnalysisConfig;
use evmscope_core::ranker::Fmea;
use evmscope_registry::{ExplorerClient, ExplorerConfig, Mode, Registry, UreqTransport};
use num_bigint::BigUint;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Html,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegistryModeArg {
    Online,
    Offline,
    Disabled,
}

/// Options shared by `analyze` and `batch`.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonOpts {
    /// TOML config file; command-line flags take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Maximum transactions and call-backs per path.
    #[arg(long, value_name = "N")]
    pub call_bound: Option<u32>,
    /// Maximum traversals of one loop edge per call.
    #[arg(long, value_name = "N")]
    pub loop_bound: Option<u32>,
    #[arg(long, value_name = "N")]
    pub max_blocks: Option<usize>,
    /// Wall-clock budget per contract, in seconds.
    #[arg(long, value_name = "S")]
    pub wall_time: Option<u64>,
    /// Per-path solver budget, in milliseconds.
    #[arg(long, value_name = "MS")]
    pub solver_timeout: Option<u64>,
    /// Solver back end (bitblast or enumerate).
    #[arg(long, value_name = "NAME")]
    pub solver: Option<String>,
    /// Solver threads; 0 uses one per core.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Enables the transfer-limit check with this limit in wei.
    #[arg(long, value_name = "WEI")]
    pub transfer_limit: Option<BigUint>,
    #[arg(long, value_name = "X")]
    pub threshold: Option<f64>,
    #[arg(long, value_name = "X")]
    pub epsilon: Option<f64>,
    /// Weight override, repeatable, e.g. `--alpha GuardSuicide=20`.
    #[arg(long, value_name = "P=N")]
    pub alpha: Vec<String>,
    /// Comma-separated properties to skip.
    #[arg(long, value_name = "PROP[,PROP]", value_delimiter = ',')]
    pub disable: Vec<String>,
    /// Treat a timestamp or block-number check as a self-destruct guard.
    #[arg(long)]
    pub time_guard_suppresses: bool,
    #[arg(long, value_enum, value_name = "M")]
    pub registry_mode: Option<RegistryModeArg>,
    /// Address table used in offline mode.
    #[arg(long, value_name = "PATH")]
    pub registry_fixture: Option<PathBuf>,
    /// Persistent lookup cache.
    #[arg(long, value_name = "PATH")]
    pub registry_cache: Option<PathBuf>,
    /// Reserved: also query internal transactions.
    #[arg(long)]
    pub registry_deep: bool,
    /// Extra selector-to-signature list, one entry per line.
    #[arg(long, value_name = "PATH")]
    pub signatures: Option<PathBuf>,
    #[arg(long, value_enum, value_name = "FORMAT")]
    pub output: Option<OutputFormat>,
    /// Most critical paths listed per report.
    #[arg(long, value_name = "N")]
    pub max_paths: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub ranking: RankingSection,
    #[serde(default)]
    pub analyzers: AnalyzersSection,
    #[serde(default)]
    pub registry: RegistrySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub call_bound: Option<u32>,
    pub loop_bound: Option<u32>,
    pub max_blocks: Option<usize>,
    pub wall_time: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingSection {
    pub threshold: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub alpha: BTreeMap<String, f64>,
    /// Likelihood, severity, difficulty per property.
    #[serde(default)]
    pub fmea: BTreeMap<String, [u8; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Wei {
    Int(u64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzersSection {
    pub transfer_limit: Option<Wei>,
    #[serde(default)]
    pub disable: Vec<String>,
    pub time_guard_suppresses: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrySection {
    pub mode: Option<String>,
    pub fixture: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub result_field: Option<String>,
    pub message_field: Option<String>,
    pub requests_per_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub name: Option<String>,
    pub timeout_ms: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub output: Option<String>,
    pub max_paths: Option<usize>,
}

/// Everything a run needs besides the input files.
pub struct Settings {
    pub analysis: AnalysisConfig,
    pub registry: Registry,
    pub output: OutputFormat,
    pub signatures: Option<PathBuf>,
    pub notes: Vec<String>,
}

fn property(name: &str) -> Result<PropertyId, String> {
    PropertyId::parse(name).ok_or_else(|| {
        let known: Vec<&str> = PropertyId::ALL.iter().map(|p| p.name()).collect();
        format!("unknown property `{name}` (known: {})", known.join(", "))
    })
}

fn parse_alpha(spec: &str) -> Result<(PropertyId, f64), String> {
    let (p, v) = spec
        .split_once('=')
        .ok_or_else(|| format!("--alpha expects PROP=N, got `{spec}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("--alpha value `{v}` is not a number"))?;
    Ok((property(p)?, v))
}

fn resolve(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl CommonOpts {
    pub fn settings(&self) -> Result<Settings, String> {
        let file = match &self.config {
            Some(p) => load_file_config(p)?,
            None => FileConfig::default(),
        };
        let base = self.config.as_deref().and_then(Path::parent);
        let mut c = AnalysisConfig::default();
        let mut notes = Vec::new();

        let b = &mut c.bounds;
        if let Some(v) = self.call_bound.or(file.bounds.call_bound) {
            b.call_depth = v;
        }
        if let Some(v) = self.loop_bound.or(file.bounds.loop_bound) {
            b.loop_bound = v;
        }
        if let Some(v) = self.max_blocks.or(file.bounds.max_blocks) {
            b.max_blocks = v;
        }
        if let Some(v) = self.wall_time.or(file.bounds.wall_time) {
            b.wall_time = Duration::from_secs(v);
        }
        if b.call_depth == 0 || b.max_blocks == 0 {
            return Err("call bound and max blocks must be at least 1".into());
        }

        let r = &mut c.rank;
        for (p, [l, s, d]) in &file.ranking.fmea {
            r.set_fmea(property(p)?, Fmea::new(*l, *s, *d));
        }
        for (p, v) in &file.ranking.alpha {
            r.set_alpha(property(p)?, *v);
        }
        for spec in &self.alpha {
            let (p, v) = parse_alpha(spec)?;
            r.set_alpha(p, v);
        }
        if let Some(v) = self.threshold.or(file.ranking.threshold) {
            r.threshold = v;
        }
        if let Some(v) = self.epsilon.or(file.ranking.epsilon) {
            r.epsilon = v;
        }
        r.validate().map_err(|e| e.to_string())?;

        let a = &mut c.analyzers;
        a.transfer_limit = match (&self.transfer_limit, &file.analyzers.transfer_limit) {
            (Some(v), _) => Some(v.clone()),
            (None, Some(Wei::Int(v))) => Some(BigUint::from(*v)),
            (None, Some(Wei::Text(t))) => Some(
                t.trim()
                    .parse()
                    .map_err(|_| format!("transfer_limit `{t}` is not a decimal number"))?,
            ),
            (None, None) => None,
        };
        for name in file.analyzers.disable.iter().chain(&self.disable) {
            if !name.trim().is_empty() {
                a.disabled.insert(property(name)?);
            }
        }
        a.time_guard_suppresses =
            self.time_guard_suppresses || file.analyzers.time_guard_suppresses.unwrap_or(false);

        if let Some(name) = self.solver.clone().or(file.solver.name) {
            if evmscope_smt::solver::by_name(&name).is_none() {
                return Err(format!("unknown solver `{name}` (bitblast, enumerate)"));
            }
            c.solver = name;
        }
        if let Some(v) = self.solver_timeout.or(file.solver.timeout_ms) {
            c.solver_timeout = Duration::from_millis(v);
        }
        if let Some(v) = self.workers.or(file.solver.workers) {
            c.workers = v;
        }
        if let Some(v) = self.max_paths.or(file.report.max_paths) {
            c.max_reported = v;
        }

        let output = match (self.output, file.report.output.as_deref()) {
            (Some(o), _) => o,
            (None, Some(s)) => OutputFormat::from_str(s, true).map_err(|_| format!("unknown output format `{s}`"))?,
            (None, None) => OutputFormat::Json,
        };

        let mode = match (self.registry_mode, file.registry.mode.as_deref()) {
            (Some(RegistryModeArg::Online), _) => Mode::Online,
            (Some(RegistryModeArg::Offline), _) => Mode::Offline,
            (Some(RegistryModeArg::Disabled), _) => Mode::Disabled,
            (None, Some(s)) => s.parse()?,
            (None, None) => Mode::Offline,
        };
        if self.registry_deep {
            notes.push("--registry-deep is reserved; only external transactions are queried".into());
        }
        let fixture = self
            .registry_fixture
            .clone()
            .or_else(|| file.registry.fixture.map(|p| resolve(base, p)));
        let cache = self
            .registry_cache
            .clone()
            .or_else(|| file.registry.cache.map(|p| resolve(base, p)));
        let registry = match mode {
            Mode::Disabled => {
                c.analyzers.disabled.insert(PropertyId::NonExistingAddress);
                Registry::disabled()
            }
            Mode::Offline => Registry::offline(fixture.as_deref(), cache.as_deref()).map_err(|e| e.to_string())?,
            Mode::Online => {
                let mut ec = ExplorerConfig::from_env();
                if let Some(f) = file.registry.result_field {
                    ec.result_field = f;
                }
                if let Some(f) = file.registry.message_field {
                    ec.message_field = f;
                }
                if let Some(r) = file.registry.requests_per_s {
                    ec.requests_per_s = r;
                }
                let client = ExplorerClient::new(ec, Box::new(UreqTransport::new(Duration::from_secs(10))));
                Registry::online(client, cache.as_deref()).map_err(|e| e.to_string())?
            }
        };

        Ok(Settings {
            analysis: c,
            registry,
            output,
            signatures: self.signatures.clone().map(|p| resolve(None, p)),
            notes,
        })
    }
}
