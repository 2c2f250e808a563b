use std::path::{Path, PathBuf};
use std::time::Instant;

use evmscope_core::analyzers::{AddressRegistry, PropertyId};
use evmscope_core::cfg::{build_cfg, to_dot};
use evmscope_core::disasm::{disassemble, load_contract, parse_signatures, ContractInput};
use evmscope_core::pipeline::analyze;
use evmscope_core::report::{to_html, Report};
use serde::Serialize;

use crate::settings::{OutputFormat, Settings};
use crate::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Clean = 0,
    Error = 1,
    Violations = 2,
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(path: &Path, settings: &Settings) -> Result<ContractInput, String> {
    let mut c = load_contract(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(p) = &settings.signatures {
        let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        let sigs = parse_signatures(&text).map_err(|e| format!("{}: {e}", p.display()))?;
        c.merge_signatures(sigs);
    }
    Ok(c)
}

fn analyse(contract: &ContractInput, settings: &Settings) -> Report {
    let registry: Option<&dyn AddressRegistry> = Some(&settings.registry);
    let mut report = analyze(contract, &settings.analysis, registry);
    report.warnings.extend(settings.notes.iter().cloned());
    report
}

fn status_of(r: &Report) -> ExitStatus {
    if r.has_violations() {
        ExitStatus::Violations
    } else {
        ExitStatus::Clean
    }
}

fn with_ext(p: &Path, ext: &str) -> PathBuf {
    p.with_extension(ext)
}

pub fn run(cmd: Command) -> Result<ExitStatus, String> {
    match cmd {
        Command::Analyze {
            file,
            opts,
            out,
            dump_cfg,
        } => {
            let settings = opts.settings()?;
            let contract = load(&file, &settings)?;
            if let Some(p) = dump_cfg {
                write(&p, &to_dot(&build_cfg(disassemble(&contract.runtime))))?;
            }
            let report = analyse(&contract, &settings);
            emit(&report, settings.output, out.as_deref(), &contract.name)?;
            eprintln!(
                "{}: {} critical path(s), {:.2} s{}",
                report.contract,
                report.critical_paths.len(),
                report.elapsed.as_secs_f64(),
                if report.statistics.timed_out { ", timed out" } else { "" }
            );
            Ok(status_of(&report))
        }
        Command::Batch { dir, opts, out } => batch(&dir, &opts.settings()?, &out),
    }
}

fn emit(r: &Report, format: OutputFormat, out: Option<&Path>, name: &str) -> Result<(), String> {
    match (format, out) {
        (OutputFormat::Json, None) => print!("{}", r.to_json()),
        (OutputFormat::Html, None) => print!("{}", to_html(r)),
        (OutputFormat::Json, Some(p)) => write(p, &r.to_json())?,
        (OutputFormat::Html, Some(p)) => write(p, &to_html(r))?,
        (OutputFormat::Both, p) => {
            let base = p.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(name));
            emit_files(r, OutputFormat::Both, &base)?;
        }
    }
    Ok(())
}

/// Writes `base.json`, `base.html` or both.
fn emit_files(r: &Report, format: OutputFormat, base: &Path) -> Result<(), String> {
    if format != OutputFormat::Html {
        write(&with_ext(base, "json"), &r.to_json())?;
    }
    if format != OutputFormat::Json {
        write(&with_ext(base, "html"), &to_html(r))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SummaryEntry {
    id: String,
    contract: String,
    properties: Vec<PropertyId>,
    critical_paths: usize,
    paths_enumerated: usize,
    paths_money_related: usize,
    paths_symbolically_executed: usize,
    timed_out: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Summary {
    contracts: Vec<SummaryEntry>,
    with_violations: usize,
    errors: usize,
}

/// Contract files of a directory in name order: `.json` envelopes and
/// `.hex` runtime dumps. A `manifest.json` is not a contract.
pub fn contract_files(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "hex"))
                && p.file_name().and_then(|n| n.to_str()) != Some("manifest.json")
        })
        .collect();
    files.sort();
    Ok(files)
}

fn batch(dir: &Path, settings: &Settings, out: &Path) -> Result<ExitStatus, String> {
    let files = contract_files(dir)?;
    if files.is_empty() {
        return Err(format!("{}: no contract files", dir.display()));
    }
    let mut entries = Vec::new();
    for f in &files {
        let id = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let started = Instant::now();
        let entry = match load(f, settings) {
            Ok(c) => {
                let r = analyse(&c, settings);
                emit_files(&r, settings.output, &out.join(&id))?;
                SummaryEntry {
                    id: id.clone(),
                    contract: r.contract.clone(),
                    properties: r.properties(),
                    critical_paths: r.critical_paths.len(),
                    paths_enumerated: r.statistics.paths_enumerated,
                    paths_money_related: r.statistics.paths_money_related,
                    paths_symbolically_executed: r.statistics.paths_symbolically_executed,
                    timed_out: r.statistics.timed_out,
                    error: None,
                }
            }
            Err(e) => SummaryEntry {
                id: id.clone(),
                contract: String::new(),
                properties: Vec::new(),
                critical_paths: 0,
                paths_enumerated: 0,
                paths_money_related: 0,
                paths_symbolically_executed: 0,
                timed_out: false,
                error: Some(e),
            },
        };
        eprintln!(
            "{id}: {} ({:.2} s)",
            match (&entry.error, entry.properties.is_empty()) {
                (Some(e), _) => format!("error: {e}"),
                (None, true) => "no violations".to_string(),
                (None, false) => entry.properties.iter().map(|p| p.name()).collect::<Vec<_>>().join(", "),
            },
            started.elapsed().as_secs_f64()
        );
        entries.push(entry);
    }
    let summary = Summary {
        with_violations: entries
            .iter()
            .filter(|e| e.properties.iter().any(|p| p.is_violation()))
            .count(),
        errors: entries.iter().filter(|e| e.error.is_some()).count(),
        contracts: entries,
    };
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    text.push('\n');
    write(&out.join("summary.json"), &text)?;
    Ok(if summary.errors > 0 {
        ExitStatus::Error
    } else if summary.with_violations > 0 {
        ExitStatus::Violations
    } else {
        ExitStatus::Clean
    })
}
