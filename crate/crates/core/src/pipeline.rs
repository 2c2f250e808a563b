//! End-to-end analysis of one contract.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::analyzers::{
    analyze_path, check_transfer_limit, estimate_gas, AddressRegistry, AnalyzerConfig, Evidence,
    PropertyId, PropertyViolation,
};
use crate::cfg::{build_cfg, Cfg};
use crate::disasm::{disassemble, ContractInput};
use crate::isa::GasSchedule;
use crate::pathgen::{count_paths, is_payable_receive, PathBounds, ProgramPath, Unfold};
use crate::ranker::{rank_and_gate, score, sort_ranked, RankConfig, RankedPath};
use crate::report::{
    message, to_call_sequence, ConfigSummary, CriticalPath, FeasibilityEntry, MaxGas, Report,
    Statistics, ViolationEntry, SCHEMA_VERSION,
};
use crate::srcmap::{parse_source_map, span_of, SourceSpan};
use crate::symexec::{
    check_feasibility, refine_values, run_constructor, ConstructorOutcome, Explorer, Feasibility,
    InitialStorage, Machine, State,
};
use evmscope_smt::solver::{self, Solver};

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub bounds: PathBounds,
    pub rank: RankConfig,
    pub analyzers: AnalyzerConfig,
    pub solver: String,
    pub solver_timeout: Duration,
    /// Solver threads; 0 uses one per core.
    pub workers: usize,
    /// Most critical paths listed in a report.
    pub max_reported: usize,
    pub gas: GasSchedule,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bounds: PathBounds::default(),
            rank: RankConfig::default(),
            analyzers: AnalyzerConfig::default(),
            solver: "bitblast".to_string(),
            solver_timeout: Duration::from_millis(100),
            workers: 0,
            max_reported: 100,
            gas: GasSchedule::default(),
        }
    }
}

impl AnalysisConfig {
    fn new_solver(&self) -> Box<dyn Solver> {
        solver::by_name(&self.solver).unwrap_or_else(|| Box::new(solver::BitBlastSolver::new()))
    }
}

struct Candidate {
    path: ProgramPath,
    state: State,
    violations: Vec<PropertyViolation>,
    gas: u64,
}

enum Verdict {
    Solved(Feasibility),
    Deferred,
    Unchecked,
}

/// Runs disassembly, CFG recovery, path exploration, the property checks,
/// ranking and the solver stage, and assembles the report.
pub fn analyze(
    contract: &ContractInput,
    config: &AnalysisConfig,
    registry: Option<&dyn AddressRegistry>,
) -> Report {
    let started = Instant::now();
    let deadline = started + config.bounds.wall_time;
    let cfg = build_cfg(disassemble(&contract.runtime));
    let mut diagnostics: Vec<String> = cfg.diagnostics.iter().map(|d| d.to_string()).collect();

    let ctor_budget = (config.bounds.wall_time / 4).min(Duration::from_secs(10));
    let (init, outcome) = run_constructor(contract.creation.as_deref(), &config.gas, ctor_budget);
    match outcome {
        ConstructorOutcome::Diverged { reason } => {
            diagnostics.push(format!("constructor diverged, storage treated as unknown: {reason}"))
        }
        ConstructorOutcome::Absent => {
            diagnostics.push("no creation code, storage treated as unknown".to_string())
        }
        ConstructorOutcome::Ran { .. } => {}
    }

    let mut structural_bounds = config.bounds;
    structural_bounds.wall_time = deadline.saturating_duration_since(Instant::now()) / 2;
    let structural = count_paths(&cfg, structural_bounds);

    let mut warnings = BTreeSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut max_gas: Option<(u64, ProgramPath)> = None;
    let mut explored = 0usize;
    let explore_timed_out = {
        let any_money = cfg.has_reachable_money_opcode();
        let cfg_ref = &cfg;
        let ex = Explorer::new(&cfg, &config.gas, &init);
        let mut stream = Unfold::new(&cfg, config.bounds, ex)
            .with_filter(move |p| {
                if any_money {
                    p.money_related
                } else {
                    is_payable_receive(cfg_ref, p)
                }
            })
            .with_deadline(deadline);
        for (path, state) in stream.by_ref() {
            explored += 1;
            let gas = estimate_gas(&cfg, &path, &config.gas);
            if max_gas.as_ref().map_or(true, |(g, _)| gas > *g) {
                max_gas = Some((gas, path.clone()));
            }
            let oracle = |i: usize| state.log.calls[i].value.as_const();
            let found = analyze_path(&cfg, &path, &state, &config.analyzers, registry, &oracle);
            warnings.extend(found.warnings);
            if !found.violations.is_empty() {
                candidates.push(Candidate {
                    path,
                    state,
                    violations: found.violations,
                    gas,
                });
            }
        }
        stream.timed_out()
    };

    let all: Vec<RankedPath<usize>> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| ranked(i, c, &config.rank))
        .collect();
    let gated = rank_and_gate(all, &config.rank);
    let paths_gated = gated.primary.len() + gated.deferred.len();

    let mut verdicts: HashMap<usize, Verdict> = HashMap::new();
    for r in &gated.rejected {
        verdicts.insert(r.item, Verdict::Unchecked);
    }
    let mut waiting: BTreeMap<BTreeSet<PropertyId>, VecDeque<usize>> = BTreeMap::new();
    for r in &gated.deferred {
        waiting.entry(r.properties.clone()).or_default().push_back(r.item);
        verdicts.insert(r.item, Verdict::Deferred);
    }
    let machine = Machine::new(&cfg, &config.gas);
    let mut queue: Vec<usize> = gated.primary.iter().map(|r| r.item).collect();
    let mut executed = 0usize;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("thread pool");
    while !queue.is_empty() {
        let results: Vec<(usize, Feasibility)> = pool.install(|| {
            queue
                .par_iter()
                .map(|&i| (i, solve(&machine, &init, &candidates[i], config, deadline)))
                .collect()
        });
        executed += results
            .iter()
            .filter(|(_, f)| !matches!(f, Feasibility::Unknown(r) if r == WALL_EXHAUSTED))
            .count();
        let mut next = Vec::new();
        for (i, f) in results {
            if f == Feasibility::Infeasible {
                let set = props(&candidates[i].violations);
                if let Some(j) = waiting.get_mut(&set).and_then(|q| q.pop_front()) {
                    next.push(j);
                }
            }
            verdicts.insert(i, Verdict::Solved(f));
        }
        queue = next;
    }

    // A concrete witness can pin down transfer amounts that looked unknown.
    for (i, c) in candidates.iter_mut().enumerate() {
        let Some(Verdict::Solved(Feasibility::Feasible(w))) = verdicts.get(&i) else {
            continue;
        };
        let Some(limit) = &config.analyzers.transfer_limit else {
            continue;
        };
        if !c.violations.iter().any(|v| v.property == PropertyId::TransferLimit) {
            continue;
        }
        let values: Vec<_> = c.state.log.calls.iter().map(|e| e.value.clone()).collect();
        let refined = refine_values(&c.state, &values, &w.model, || config.new_solver(), config.solver_timeout);
        let still = check_transfer_limit(&c.state, limit, &|k| refined[k]);
        c.violations.retain(|v| v.property != PropertyId::TransferLimit);
        c.violations.extend(still);
    }

    let mut reported: Vec<RankedPath<usize>> = Vec::new();
    let mut infeasible = 0usize;
    let mut per_property: BTreeMap<PropertyId, usize> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        if matches!(verdicts.get(&i), Some(Verdict::Solved(Feasibility::Infeasible))) {
            infeasible += 1;
            continue;
        }
        if c.violations.is_empty() {
            continue;
        }
        for p in props(&c.violations) {
            *per_property.entry(p).or_default() += 1;
        }
        reported.push(ranked(i, c, &config.rank));
    }
    sort_ranked(&mut reported);

    let ranges = contract.source_map.as_deref().map(parse_source_map);
    let limit_text = config.analyzers.transfer_limit.as_ref().map(|l| l.to_string());
    let gated_items: BTreeSet<usize> = gated
        .primary
        .iter()
        .chain(&gated.deferred)
        .map(|r| r.item)
        .collect();
    let critical_paths = reported
        .iter()
        .take(config.max_reported)
        .enumerate()
        .map(|(rank, r)| {
            let c = &candidates[r.item];
            let (feasibility, witness) = match verdicts.get(&r.item) {
                Some(Verdict::Solved(Feasibility::Feasible(w))) => (
                    FeasibilityEntry::Feasible {
                        witness: w.txs.clone(),
                    },
                    Some(w.txs.as_slice()),
                ),
                Some(Verdict::Solved(Feasibility::Unknown(reason))) => (
                    FeasibilityEntry::Unknown {
                        reason: reason.clone(),
                    },
                    None,
                ),
                Some(Verdict::Deferred) => (FeasibilityEntry::Deferred, None),
                _ => (FeasibilityEntry::Unchecked, None),
            };
            let spans = match (&ranges, &contract.source) {
                (Some(rs), Some(src)) => source_spans(&cfg, c, rs, src),
                _ => Vec::new(),
            };
            CriticalPath {
                rank: rank + 1,
                call_sequence: to_call_sequence(&c.path, contract, witness),
                score: r.score,
                length: r.length,
                gated: gated_items.contains(&r.item),
                violations: c
                    .violations
                    .iter()
                    .map(|v| ViolationEntry {
                        violation: v.clone(),
                        message: message(v, limit_text.as_deref()),
                    })
                    .collect(),
                feasibility,
                gas: c.gas,
                blocks: c.path.labels(&cfg),
                source_spans: spans,
            }
        })
        .collect();

    let statistics = Statistics {
        paths_enumerated: structural.total,
        paths_money_related: structural.money,
        paths_explored: explored,
        paths_violating: candidates.len(),
        paths_gated,
        paths_symbolically_executed: executed,
        paths_infeasible: infeasible,
        violations: per_property,
        timed_out: structural.timed_out || explore_timed_out,
        max_gas: max_gas.map(|(gas, p)| MaxGas {
            gas,
            call_sequence: to_call_sequence(&p, contract, None),
            blocks: p.labels(&cfg),
        }),
    };

    Report {
        schema: SCHEMA_VERSION,
        contract: contract.name.clone(),
        config: summary(config),
        statistics,
        diagnostics,
        warnings: warnings.into_iter().collect(),
        critical_paths,
        elapsed: started.elapsed(),
        source: contract.source.clone(),
    }
}

const WALL_EXHAUSTED: &str = "wall time exhausted before solving";

fn solve(
    machine: &Machine<'_>,
    init: &InitialStorage,
    c: &Candidate,
    config: &AnalysisConfig,
    deadline: Instant,
) -> Feasibility {
    let left = deadline.saturating_duration_since(Instant::now());
    if left.is_zero() {
        return Feasibility::Unknown(WALL_EXHAUSTED.to_string());
    }
    let mut s = config.new_solver();
    check_feasibility(
        machine,
        init,
        &c.path.blocks,
        &c.state,
        s.as_mut(),
        config.solver_timeout.min(left),
    )
}

fn props(vs: &[PropertyViolation]) -> BTreeSet<PropertyId> {
    vs.iter()
        .map(|v| v.property)
        .filter(|p| p.is_violation())
        .collect()
}

fn ranked(i: usize, c: &Candidate, config: &RankConfig) -> RankedPath<usize> {
    let properties = props(&c.violations);
    let length = c.path.call_count().max(1);
    RankedPath {
        item: i,
        blocks: c.path.blocks.iter().map(|b| b.0).collect(),
        score: score(&properties, length, config),
        properties,
        length,
    }
}

/// Source ranges of the instructions the violations point at.
fn source_spans(
    cfg: &Cfg,
    c: &Candidate,
    ranges: &[crate::srcmap::SourceRange],
    source: &str,
) -> Vec<SourceSpan> {
    let mut offsets = BTreeSet::new();
    for v in &c.violations {
        match &v.evidence {
            Evidence::NonExistingAddress {
                instruction_offset, ..
            } => {
                offsets.insert(*instruction_offset);
            }
            Evidence::GuardSuicide {
                selfdestruct_offset,
                ..
            } => {
                offsets.insert(*selfdestruct_offset);
            }
            Evidence::TransferLimit { .. } => {
                offsets.extend(c.state.log.calls.iter().filter(|e| !e.reverted).map(|e| e.offset));
                offsets.extend(c.state.log.selfdestructs.iter().map(|e| e.offset));
            }
            Evidence::BlackHole { .. } => {
                for seg in &c.path.segments {
                    if let Some(b) = c.path.blocks[seg.start..seg.end]
                        .iter()
                        .find(|b| cfg.entry_of(**b).is_some())
                    {
                        offsets.insert(cfg.block(*b).start);
                    }
                }
            }
            Evidence::MaxGas { .. } => {}
        }
    }
    offsets
        .into_iter()
        .filter_map(|o| {
            let idx = cfg.program.index_at(o)?;
            span_of(ranges, source, idx, o)
        })
        .collect()
}

fn summary(config: &AnalysisConfig) -> ConfigSummary {
    ConfigSummary {
        call_bound: config.bounds.call_depth,
        loop_bound: config.bounds.loop_bound,
        max_blocks: config.bounds.max_blocks,
        wall_time_s: config.bounds.wall_time.as_secs(),
        solver: config.solver.clone(),
        solver_timeout_ms: config.solver_timeout.as_millis() as u64,
        transfer_limit: config.analyzers.transfer_limit.as_ref().map(|l| l.to_string()),
        threshold: config.rank.threshold,
        epsilon: config.rank.epsilon,
        alpha: PropertyId::ALL
            .into_iter()
            .filter(|p| p.is_violation())
            .map(|p| (p, config.rank.alpha_of(p)))
            .collect(),
    }
}
