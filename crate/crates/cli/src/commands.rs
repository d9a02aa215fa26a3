use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use brc_core::inverse::{summarize, ChainStats};
use brc_core::simulate::trajectory_seed;
use brc_core::{
    belief_trace, irl_baseline, mh_infer, mix_seed, posterior_summary, sample_trajectory, validate,
    InferenceConfig, PosteriorSample, Target, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, INFER_STREAM, IRL_STREAM, SIMULATE_STREAM};
use crate::error::{CliError, CliResult};
use crate::manifest::{hash_file, FileEntry, OutputDir, RunManifest};
use crate::tables::{self, AgentFile, Csv, AGENT_FILE};
use crate::{InferArgs, SimulateArgs, SolveArgs, SolverFlags, TraceArgs};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const POSTERIOR_FILE: &str = "posterior.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const TRACE_FILE: &str = "trace.csv";

fn apply_solver_flags(config: &mut RunConfig, flags: &SolverFlags) {
    if let Some(r) = flags.resolution {
        config.solver.resolution = r;
        config.inference.resolution = r;
    }
    if let Some(t) = flags.tolerance {
        config.solver.tolerance = t;
        config.inference.tolerance = t;
    }
}

fn snapshot(config: &RunConfig) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

fn config_input(path: Option<&Path>) -> CliResult<Vec<FileEntry>> {
    path.map(hash_file).into_iter().collect()
}

pub fn solve(args: &SolveArgs) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut config = RunConfig::load(args.config.as_deref())?;
    apply_solver_flags(&mut config, &args.solver);
    let problem = config.problem()?;
    let findings = validate(&problem.setting, &problem.params);
    if !findings.is_empty() {
        return Err(CliError::Validation(findings));
    }
    let agent = brc_core::solve(&problem.setting, &problem.params, &config.solver.options())?;
    let mut out = OutputDir::create(&args.out)?;
    out.write_json(AGENT_FILE, &AgentFile::from_agent(&problem.setting, &agent))?;
    out.write("values.csv", &tables::values_csv(&problem.setting, &agent))?;
    out.write("k.csv", &tables::k_csv(&problem.setting, &agent))?;
    out.write("policy.csv", &tables::policy_csv(&problem.setting, &agent))?;
    out.write("specification.csv", &tables::specification_csv(&problem.setting, &agent))?;
    out.write_json("convergence.json", agent.convergence())?;
    out.finish(
        "solve",
        snapshot(&config),
        BTreeMap::new(),
        config_input(args.config.as_deref())?,
        Vec::new(),
        start.elapsed(),
    )
}

pub fn simulate(args: &SimulateArgs) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut config = RunConfig::load(args.config.as_deref())?;
    if let Some(n) = args.n {
        config.simulate.n = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let problem = config.problem()?;
    let (setting, agent) = tables::load_agent(&args.agent)?;
    if setting != problem.setting {
        return Err(CliError::Config("agent and config describe different problem settings".into()));
    }
    let env = problem.environment();
    let master = config.stream_seed(SIMULATE_STREAM);
    let data: Vec<Trajectory> = (0..config.simulate.n as u64)
        .into_par_iter()
        .map(|i| sample_trajectory(&env, &agent, trajectory_seed(master, i), problem.max_episode_length))
        .collect::<Result<_, _>>()?;
    let mut out = OutputDir::create(&args.out)?;
    out.write(DATASET_FILE, &tables::dataset_jsonl(&data))?;
    let mut inputs = config_input(args.config.as_deref())?;
    inputs.push(hash_file(&args.agent.join(AGENT_FILE))?);
    out.finish(
        "simulate",
        snapshot(&config),
        BTreeMap::from([("master".into(), config.seed), ("simulate".into(), master)]),
        inputs,
        Vec::new(),
        start.elapsed(),
    )
}

#[derive(Debug, Serialize)]
struct ChainReport {
    chain: usize,
    seed: u64,
    stats: ChainStats,
    acceptance_rate: f64,
    cold_restarts: usize,
}

fn chain_report(chain: usize, seed: u64, stats: &ChainStats, cold_restarts: usize) -> ChainReport {
    ChainReport {
        chain,
        seed,
        stats: stats.clone(),
        acceptance_rate: stats.accepted as f64 / stats.proposals.max(1) as f64,
        cold_restarts,
    }
}

fn failure_warnings(reports: &[ChainReport]) -> Vec<String> {
    reports
        .iter()
        .filter(|r| r.stats.failed_evaluations > 0)
        .map(|r| {
            format!(
                "chain {}: {} of {} proposals rejected because the solver did not converge",
                r.chain, r.stats.failed_evaluations, r.stats.proposals
            )
        })
        .collect()
}

fn parse_targets(names: &[String]) -> CliResult<Vec<Target>> {
    names
        .iter()
        .map(|n| {
            Target::parse(n.trim()).ok_or_else(|| CliError::Config(format!("unknown target '{n}'")))
        })
        .collect()
}

fn chain_config(base: &InferenceConfig, stream_seed: u64, chain: usize) -> InferenceConfig {
    InferenceConfig {
        seed: mix_seed(stream_seed, chain as u64),
        ..base.clone()
    }
}

pub fn infer(args: &InferArgs) -> CliResult<RunManifest> {
    let start = Instant::now();
    let mut config = RunConfig::load(args.config.as_deref())?;
    apply_solver_flags(&mut config, &args.solver);
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(names) = &args.targets {
        config.inference.targets = parse_targets(names)?;
    }
    if args.chains == 0 {
        return Err(CliError::Config("at least one chain is required".into()));
    }
    let problem = config.problem()?;
    config.resolve_utility_cells(&problem);
    let data = tables::read_dataset(&args.dataset)?;
    let mut inputs = config_input(args.config.as_deref())?;
    inputs.push(hash_file(&args.dataset)?);
    let mut out = OutputDir::create(&args.out)?;

    let (stream, mode) = if args.baseline_irl {
        (IRL_STREAM, "irl_baseline")
    } else {
        (INFER_STREAM, "descriptive")
    };
    let stream_seed = config.stream_seed(stream);
    let mut seeds = BTreeMap::from([("master".to_string(), config.seed), (mode.to_string(), stream_seed)]);
    for c in 0..args.chains {
        seeds.insert(format!("chain_{c}"), mix_seed(stream_seed, c as u64));
    }

    let warnings = if args.baseline_irl {
        let runs = (0..args.chains)
            .into_par_iter()
            .map(|c| {
                let inference = chain_config(&config.inference, stream_seed, c);
                irl_baseline(&data, &problem.setting, &problem.params, &problem.truth, &inference, &config.irl)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let samples: Vec<Vec<PosteriorSample>> = runs
            .iter()
            .map(|r| {
                r.run
                    .samples
                    .iter()
                    .zip(&r.ratios)
                    .map(|(s, &ratio)| PosteriorSample {
                        parameters: vec![s.parameters[0], ratio],
                        ..s.clone()
                    })
                    .collect()
            })
            .collect();
        let names = [Target::IncorrectReward.name().to_string(), "cost_benefit_ratio".to_string()];
        let refs: Vec<&[PosteriorSample]> = samples.iter().map(Vec::as_slice).collect();
        out.write(POSTERIOR_FILE, &tables::posterior_csv(&names, &refs))?;
        let rewards: Vec<f64> = runs.iter().flat_map(|r| r.run.samples.iter().map(|s| s.parameters[0])).collect();
        let ratios: Vec<f64> = runs.iter().flat_map(|r| r.ratios.iter().copied()).collect();
        let reports: Vec<ChainReport> = runs
            .iter()
            .enumerate()
            .map(|(c, r)| chain_report(c, mix_seed(stream_seed, c as u64), &r.run.stats, r.run.cold_restarts))
            .collect();
        out.write_json(
            SUMMARY_FILE,
            &json!({
                "mode": mode,
                "correct_reward": config.irl.correct_reward,
                "num_samples": ratios.len(),
                "incorrect_reward": summarize(Target::IncorrectReward.name(), &rewards)?,
                "cost_benefit_ratio": summarize("cost_benefit_ratio", &ratios)?,
                "chains": reports,
            }),
        )?;
        failure_warnings(&reports)
    } else {
        let mut base = problem.params.clone();
        base.descriptive_mask = config.inference.targets.iter().map(|t| t.field()).collect();
        let runs = (0..args.chains)
            .into_par_iter()
            .map(|c| mh_infer(&data, &problem.setting, &base, &chain_config(&config.inference, stream_seed, c)))
            .collect::<Result<Vec<_>, _>>()?;
        let names: Vec<String> = config.inference.targets.iter().map(|t| t.name().to_string()).collect();
        let refs: Vec<&[PosteriorSample]> = runs.iter().map(|r| r.samples.as_slice()).collect();
        out.write(POSTERIOR_FILE, &tables::posterior_csv(&names, &refs))?;
        let pooled: Vec<PosteriorSample> = runs.iter().flat_map(|r| r.samples.iter().cloned()).collect();
        let mut summary = posterior_summary(&pooled, &config.inference)?;
        if let Some(h) = summary.joint_beta_eta.take() {
            out.write(HISTOGRAM_FILE, &tables::histogram_csv(&h))?;
        }
        let reports: Vec<ChainReport> = runs
            .iter()
            .enumerate()
            .map(|(c, r)| chain_report(c, mix_seed(stream_seed, c as u64), &r.stats, r.cold_restarts))
            .collect();
        out.write_json(
            SUMMARY_FILE,
            &json!({
                "mode": mode,
                "targets": names,
                "num_samples": summary.num_samples,
                "parameters": summary.parameters,
                "chains": reports,
            }),
        )?;
        failure_warnings(&reports)
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    out.finish("infer", snapshot(&config), seeds, inputs, warnings, start.elapsed())
}

pub fn trace(args: &TraceArgs) -> CliResult<RunManifest> {
    let start = Instant::now();
    let data = tables::read_dataset(&args.dataset)?;
    let (setting, agent) = tables::load_agent(&args.agent)?;
    let traces: Vec<_> = data.par_iter().map(|t| belief_trace(t, &agent)).collect();
    let mut header: Vec<String> = ["trajectory", "step", "action", "observation"].map(String::from).to_vec();
    header.extend((0..setting.num_states).map(|s| format!("z_{}", setting.state_label(s))));
    let mut csv = Csv::new(&header);
    let mut warnings = Vec::new();
    for (i, (t, trace)) in data.iter().zip(traces).enumerate() {
        let beliefs = match trace {
            Ok(b) => b,
            Err(e) => {
                warnings.push(format!("trajectory {i}: {e}"));
                continue;
            }
        };
        for (step, z) in beliefs.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                step.to_string(),
                t.actions.get(step).map_or(String::new(), |&u| setting.action_label(u)),
                t.observations
                    .get(step)
                    .map_or(String::new(), |&x| setting.observation_labels.get(x).cloned().unwrap_or_else(|| x.to_string())),
            ];
            row.extend(z.probabilities().iter().map(f64::to_string));
            csv.row(row);
        }
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut out = OutputDir::create(&args.out)?;
    out.write(TRACE_FILE, &csv.into_bytes())?;
    let inputs = vec![hash_file(&args.dataset)?, hash_file(&args.agent.join(AGENT_FILE))?];
    out.finish("trace", json!({}), BTreeMap::new(), inputs, warnings, start.elapsed())
}
