use std::path::Path;

use anyhow::{bail, Context, Result};
use bipartite_bft::adversary::{AdversaryError, AdversaryScript, CorruptionSet, ScriptSpace, Strategy};
use bipartite_bft::analysis::{
    all_verdicts, coverage_report, identifier_bits, traffic_bound, traffic_stats, CoverageInput, PropertyVerdict,
    SummaryRow,
};
use bipartite_bft::simulator::{
    explore, replay as replay_header, run_execution, ExecutionTrace, ExploreOutcome, ExploreSpec, InitValue, RunSpec,
};
use bipartite_bft::topology::{
    build_butterfly, build_complete, build_complete_bipartite, butterfly_to_bipartite, parse_topology, spectral_report,
    write_topology, Topology,
};
use bipartite_bft::Scalar;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{read_text, RunDir};
use crate::scenario::{Overrides, Scenario};

/// Settings shared by the commands that execute scenarios.
#[derive(Debug, Clone)]
pub struct Settings {
    pub overrides: Overrides,
    pub workers: Option<usize>,
    pub out: Option<std::path::PathBuf>,
    pub gzip: bool,
}

impl Settings {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            b = b.num_threads(w.max(1));
        }
        Ok(b.build()?)
    }

    fn out_root(&self, scenario: &Scenario) -> std::path::PathBuf {
        self.out
            .clone()
            .or_else(|| scenario.out.clone())
            .unwrap_or_else(|| "out".into())
    }
}

fn label(spec: &RunSpec) -> String {
    let corrupt: Vec<String> = spec.adversary.corruption.iter().map(|n| n.to_string()).collect();
    let inputs: String = spec.inits.iter().map(|i| if i.value { '1' } else { '0' }).collect();
    format!("faulty=[{}] inputs={}", corrupt.join(" "), inputs)
}

fn wanted(scenario: &Scenario, v: &PropertyVerdict) -> bool {
    let name = v.property.name();
    scenario.properties.is_empty()
        || scenario
            .properties
            .iter()
            .any(|p| name == *p || name.split('(').next() == Some(p.as_str()))
}

#[derive(Debug, Serialize)]
struct AgreementSummary {
    unanimous: bool,
    value: Option<bool>,
    round: Option<u32>,
    traffic_bits: u64,
}

fn agreement_summary(trace: &ExecutionTrace) -> Option<AgreementSummary> {
    if !trace.header.spec.protocol.is_agreement() {
        return None;
    }
    let values: Vec<bool> = trace.agrees.iter().map(|a| a.value).collect();
    let unanimous = !values.is_empty() && values.iter().all(|&v| v == values[0]);
    Some(AgreementSummary {
        unanimous,
        value: if unanimous { Some(values[0]) } else { None },
        round: trace.agrees.iter().map(|a| a.round).max(),
        traffic_bits: traffic_stats(trace).bits,
    })
}

/// `run`: executes every run the scenario names. Returns whether all
/// requested verdicts hold.
pub fn run(scenario: &Scenario, settings: &Settings) -> Result<bool> {
    let specs = scenario.run_specs(&settings.overrides)?;
    let traces: Vec<ExecutionTrace> = settings
        .pool()?
        .install(|| specs.par_iter().map(run_execution).collect::<Result<Vec<_>, _>>())?;
    let dir = RunDir::create(&settings.out_root(scenario), &scenario.name, settings.gzip)?;
    let keep_all = traces.len() <= 16;
    let mut rows = Vec::new();
    let mut all_hold = true;
    let mut summaries = Vec::new();
    for (idx, trace) in traces.iter().enumerate() {
        let verdicts: Vec<PropertyVerdict> = all_verdicts(trace)
            .into_iter()
            .filter(|v| wanted(scenario, v))
            .collect();
        let holds = verdicts.iter().all(|v| v.holds);
        all_hold &= holds;
        let traffic = traffic_stats(trace);
        for v in &verdicts {
            rows.push(SummaryRow {
                scenario: scenario.name.clone(),
                scripts: label(&trace.header.spec),
                property: v.property.name(),
                holds: v.holds,
                counterexamples: v.witness.as_ref().map(|w| w.detail.clone()).unwrap_or_default(),
                messages: trace.metrics.messages,
                bits: traffic.bits,
                rounds: trace.metrics.rounds,
            });
            if !v.holds {
                println!(
                    "{} {}: {} fails: {:?}",
                    scenario.name,
                    label(&trace.header.spec),
                    v.property.name(),
                    v.witness
                );
            }
        }
        if keep_all || !holds {
            dir.write(&format!("trace-{idx:04}.jsonl"), &trace.to_jsonl())?;
        }
        if let Some(s) = agreement_summary(trace) {
            println!(
                "{} {}: unanimous={} value={:?} round={:?} bits={}",
                scenario.name,
                label(&trace.header.spec),
                s.unanimous,
                s.value,
                s.round,
                s.traffic_bits
            );
            summaries.push(s);
        }
    }
    dir.write_summary(&rows)?;
    if !summaries.is_empty() {
        dir.write("agreement.json", &serde_json::to_string_pretty(&summaries)?)?;
    }
    println!(
        "{} runs, {} verdicts, {} failing; artifacts in {}",
        traces.len(),
        rows.len(),
        rows.iter().filter(|r| !r.holds).count(),
        dir.path.display()
    );
    Ok(all_hold)
}

/// Script-space size of one exhaustive job, in bits.
pub fn script_bits(spec: &RunSpec, horizon: u32) -> usize {
    let topo = spec.topology.build();
    match ScriptSpace::new(&spec.adversary.corruption, &topo, spec.generals(), horizon, u128::MAX) {
        Ok(space) => space.bits(),
        Err(AdversaryError::CapExceeded { bits, .. }) => bits,
        Err(_) => usize::MAX,
    }
}

pub struct ExhaustiveReport {
    pub jobs: Vec<(RunSpec, ExploreOutcome)>,
    pub horizon: u32,
}

impl ExhaustiveReport {
    pub fn all_hold(&self) -> bool {
        self.jobs
            .iter()
            .all(|(spec, o)| o.failing == 0 && max_bits(spec, o) <= traffic_bound(spec))
    }
}

fn max_bits(spec: &RunSpec, o: &ExploreOutcome) -> u64 {
    o.max_correct_ones * identifier_bits(spec.generals())
}

/// Explores every job; `cap` bounds the script-space bits per job.
pub fn explore_jobs(specs: Vec<RunSpec>, horizon: u32, cap: u32, settings: &Settings) -> Result<ExhaustiveReport> {
    for spec in &specs {
        let bits = script_bits(spec, horizon);
        if bits > cap as usize {
            bail!(
                "{}: 2^{bits} scripts at horizon {horizon} exceed the cap of 2^{cap}; rerun with --cap {bits}{}",
                label(spec),
                if bits > 127 {
                    " (the explorer counts up to 2^127)"
                } else {
                    ""
                }
            );
        }
    }
    let outcomes = settings.pool()?.install(|| {
        specs
            .par_iter()
            .map(|run| {
                explore(&ExploreSpec {
                    run: run.clone(),
                    horizon,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(ExhaustiveReport {
        jobs: specs.into_iter().zip(outcomes).collect(),
        horizon,
    })
}

/// `exhaustive`: every script within the horizon, for every corruption set
/// and input assignment the scenario names.
pub fn exhaustive(scenario: &Scenario, settings: &Settings, cap: u32) -> Result<bool> {
    let horizon = scenario
        .horizon(&settings.overrides)
        .context("exhaustive needs a horizon: set adversary.horizon or pass --rounds")?;
    let overrides = Overrides {
        rounds: None,
        ..settings.overrides
    };
    let mut specs = Vec::new();
    for corruption in scenario.corruption_sets()? {
        for inits in scenario.input_sets(&corruption, scenario.inputs.enumerate)? {
            specs.push(job_spec(scenario, &overrides, corruption.clone(), inits)?);
        }
    }
    let report = explore_jobs(specs, horizon, cap, settings)?;
    let dir = RunDir::create(&settings.out_root(scenario), &scenario.name, settings.gzip)?;
    let mut rows = Vec::new();
    let (mut total, mut failing) = (0u128, 0u128);
    let mut first: Option<RunSpec> = None;
    for (spec, o) in &report.jobs {
        total = total.saturating_add(o.total);
        failing = failing.saturating_add(o.failing);
        let property = if spec.protocol.is_agreement() {
            "agreement+validity+termination+invariant-i"
        } else {
            "heaviside(1)+dirac(1)"
        };
        let bits = max_bits(spec, o);
        let bound = traffic_bound(spec);
        rows.push(SummaryRow {
            scenario: scenario.name.clone(),
            scripts: format!("{} {}", label(spec), o.total),
            property: o
                .counterexample
                .as_ref()
                .map_or(property.to_string(), |c| c.violation.property().to_string()),
            holds: o.failing == 0,
            counterexamples: o.failing.to_string(),
            messages: o.max_correct_ones,
            bits,
            rounds: horizon,
        });
        rows.push(SummaryRow {
            scenario: scenario.name.clone(),
            scripts: format!("{} {}", label(spec), o.total),
            property: "traffic-bound".into(),
            holds: bits <= bound,
            counterexamples: if bits <= bound {
                "0".into()
            } else {
                format!("{bits} > {bound}")
            },
            messages: o.max_correct_ones,
            bits,
            rounds: horizon,
        });
        if first.is_none() {
            if let Some(c) = &o.counterexample {
                let mut run = spec.clone();
                run.adversary = AdversaryScript::new(
                    spec.adversary.corruption.clone(),
                    Strategy::Explicit {
                        script: c.script.clone(),
                    },
                )
                .with_horizon(horizon);
                run.max_rounds = run.default_rounds();
                dir.write("counterexample.txt", &c.script.to_text())?;
                dir.write("counterexample.jsonl", &run_execution(&run)?.to_jsonl())?;
                println!(
                    "first counterexample ({}): {}: {:?}",
                    c.violation.property(),
                    label(spec),
                    c.violation
                );
                first = Some(run);
            }
        }
    }
    dir.write_summary(&rows)?;
    println!(
        "{}: {} jobs, {} scripts, {} failing, traffic within bound: {}; artifacts in {}",
        scenario.name,
        report.jobs.len(),
        total,
        failing,
        rows.iter().filter(|r| r.property == "traffic-bound").all(|r| r.holds),
        dir.path.display()
    );
    Ok(report.all_hold())
}

fn job_spec(
    scenario: &Scenario,
    overrides: &Overrides,
    corruption: CorruptionSet,
    inits: Vec<InitValue>,
) -> Result<RunSpec> {
    let mut spec = RunSpec::new(
        scenario.topology,
        scenario.protocol,
        inits,
        AdversaryScript::new(corruption, Strategy::Silent),
    );
    spec.accept_offset = overrides.accept_offset.unwrap_or(scenario.accept_offset);
    spec.validate().with_context(|| format!("scenario {}", scenario.name))?;
    Ok(spec)
}

/// `replay`: re-executes a trace's header and compares byte for byte.
pub fn replay(path: &Path) -> Result<bool> {
    let text = read_text(path)?;
    let trace = ExecutionTrace::from_jsonl(&text)?;
    let again = replay_header(&trace.header)?.to_jsonl();
    let identical = again == text;
    for v in all_verdicts(&trace) {
        println!("{}: {}", v.property.name(), if v.holds { "holds" } else { "fails" });
    }
    println!("replay {}", if identical { "identical" } else { "differs" });
    Ok(identical)
}

/// `coverage`: exact and closed-form assumption coverage.
pub fn coverage<T: Scalar + Serialize>(input: &CoverageInput) -> Result<String> {
    let report = coverage_report::<T>(input)?;
    Ok(serde_json::to_string_pretty(&report)?)
}

/// Builds a graph from `complete:N`, `bipartite:A,B`, `butterfly:R`,
/// `butterfly-bipartite:R`, or a path to a topology file.
pub fn build_topology(desc: &str) -> Result<Topology> {
    let num = |s: &str| -> Result<usize> { s.trim().parse().with_context(|| format!("bad number {s:?}")) };
    Ok(match desc.split_once(':') {
        Some(("complete", n)) => build_complete(num(n)?),
        Some(("bipartite", ab)) => {
            let (a, b) = ab.split_once(',').context("bipartite:A,B")?;
            build_complete_bipartite(num(a)?, num(b)?)
        }
        Some(("butterfly", r)) => build_butterfly(num(r)? as u32)?,
        Some(("butterfly-bipartite", r)) => butterfly_to_bipartite(&build_butterfly(num(r)? as u32)?)?.topology,
        _ => parse_topology(&read_text(Path::new(desc))?)?,
    })
}

#[derive(Debug, Serialize)]
struct TopologySummary {
    kind: String,
    nodes: usize,
    edges: usize,
    simple: bool,
    connected: bool,
    degrees: Option<(usize, usize)>,
}

/// `topo`: a summary line, optionally the spectral report and an export.
pub fn topo<T: Scalar + Serialize>(desc: &str, spectral: bool, export: Option<&Path>) -> Result<String> {
    let g = build_topology(desc)?;
    let summary = TopologySummary {
        kind: format!("{:?}", g.kind()),
        nodes: g.node_count(),
        edges: g.edge_count(),
        simple: g.is_simple(),
        connected: g.is_connected(),
        degrees: g.biregular_degrees().ok(),
    };
    let mut out = serde_json::to_string(&summary)?;
    if spectral {
        out.push('\n');
        out.push_str(&serde_json::to_string(&spectral_report::<T>(&g)?)?);
    }
    if let Some(path) = export {
        std::fs::write(path, write_topology(&g)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(out)
}
