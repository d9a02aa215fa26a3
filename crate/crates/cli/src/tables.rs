//! Agent persistence and CSV exports.

use std::path::Path;

use brc_core::inverse::Histogram2d;
use brc_core::solver::Convergence;
use brc_core::{BrcParams, PosteriorSample, ProblemSetting, SolvedAgent, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const AGENT_FILE: &str = "agent.json";

/// Everything needed to rebuild a [`SolvedAgent`] without solving again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentFile {
    pub setting: ProblemSetting,
    pub params: BrcParams,
    pub resolution: usize,
    pub convergence: Convergence,
    pub v_star: Vec<f64>,
    /// Row-major `[node][action]`.
    pub q_star: Vec<f64>,
    /// Row-major `[node][action][model]`.
    pub k_star: Vec<f64>,
}

impl AgentFile {
    pub fn from_agent(setting: &ProblemSetting, agent: &SolvedAgent) -> Self {
        Self {
            setting: setting.clone(),
            params: agent.params().clone(),
            resolution: agent.lattice().resolution(),
            convergence: agent.convergence().clone(),
            v_star: agent.v_star().to_vec(),
            q_star: agent.q_star().to_vec(),
            k_star: agent.k_star().to_vec(),
        }
    }

    pub fn into_agent(self) -> CliResult<SolvedAgent> {
        Ok(SolvedAgent::from_tables(
            &self.setting,
            self.params,
            self.resolution,
            self.v_star,
            self.q_star,
            self.k_star,
            self.convergence,
        )?)
    }
}

/// Reads `agent.json` from an agent directory.
pub fn load_agent(dir: &Path) -> CliResult<(ProblemSetting, SolvedAgent)> {
    let path = dir.join(AGENT_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::io(format!("reading agent {}", path.display()), e))?;
    let file: AgentFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("agent {}: {e}", path.display())))?;
    let setting = file.setting.clone();
    Ok((setting, file.into_agent()?))
}

pub fn read_dataset(path: &Path) -> CliResult<Vec<Trajectory>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading dataset {}", path.display()), e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| CliError::Config(format!("dataset {} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn dataset_jsonl(data: &[Trajectory]) -> Vec<u8> {
    let mut out = Vec::new();
    for t in data {
        serde_json::to_writer(&mut out, t).expect("trajectories serialize");
        out.push(b'\n');
    }
    out
}

/// Collects CSV records into memory.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[String]) -> Self {
        let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        if !header.is_empty() {
            writer.write_record(header).expect("in-memory write");
        }
        Self { writer }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.writer
            .write_record(fields.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

fn belief_columns(setting: &ProblemSetting) -> Vec<String> {
    (0..setting.num_states)
        .map(|s| format!("z_{}", setting.state_label(s)))
        .collect()
}

fn cells(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(f64::to_string)
}

/// `node, z_*, v, q_*`
pub fn values_csv(setting: &ProblemSetting, agent: &SolvedAgent) -> Vec<u8> {
    let mut header = vec!["node".to_string()];
    header.extend(belief_columns(setting));
    header.push("v".into());
    header.extend((0..setting.num_actions).map(|u| format!("q_{}", setting.action_label(u))));
    let mut csv = Csv::new(&header);
    for (node, z) in agent.lattice().nodes().iter().enumerate() {
        let mut row = vec![node.to_string()];
        row.extend(cells(z.probabilities()));
        row.push(agent.v_star()[node].to_string());
        row.extend(cells(agent.q_row(node)));
        csv.row(row);
    }
    csv.into_bytes()
}

/// `node, action, model, k`
pub fn k_csv(setting: &ProblemSetting, agent: &SolvedAgent) -> Vec<u8> {
    let mut csv = Csv::new(&["node", "action", "model", "k"].map(String::from));
    for node in 0..agent.lattice().len() {
        for u in 0..setting.num_actions {
            for (m, k) in agent.k_slice(node, u).iter().enumerate() {
                csv.row([node.to_string(), setting.action_label(u), m.to_string(), k.to_string()]);
            }
        }
    }
    csv.into_bytes()
}

/// Decision-policy curves over the lattice: `node, z_*, pi_*`.
pub fn policy_csv(setting: &ProblemSetting, agent: &SolvedAgent) -> Vec<u8> {
    let mut header = vec!["node".to_string()];
    header.extend(belief_columns(setting));
    header.extend((0..setting.num_actions).map(|u| format!("pi_{}", setting.action_label(u))));
    let mut csv = Csv::new(&header);
    for (node, (z, pi)) in agent.lattice().nodes().iter().zip(agent.decision_table()).enumerate() {
        let mut row = vec![node.to_string()];
        row.extend(cells(z.probabilities()));
        row.extend(cells(&pi));
        csv.row(row);
    }
    csv.into_bytes()
}

/// `node, action, sigma_<model>...`
pub fn specification_csv(setting: &ProblemSetting, agent: &SolvedAgent) -> Vec<u8> {
    let models = agent.params().model_ensemble.len();
    let mut header = vec!["node".to_string(), "action".to_string()];
    header.extend((0..models).map(|m| format!("sigma_{m}")));
    let mut csv = Csv::new(&header);
    for (node, rows) in agent.specification_table().into_iter().enumerate() {
        for (u, sigma) in rows.iter().enumerate() {
            let mut row = vec![node.to_string(), setting.action_label(u)];
            row.extend(cells(sigma));
            csv.row(row);
        }
    }
    csv.into_bytes()
}

/// `chain, step, <names>..., log_likelihood, accepted`
pub fn posterior_csv(names: &[String], chains: &[&[PosteriorSample]]) -> Vec<u8> {
    let mut header = vec!["chain".to_string(), "step".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["log_likelihood".to_string(), "accepted".to_string()]);
    let mut csv = Csv::new(&header);
    for (c, samples) in chains.iter().enumerate() {
        for s in *samples {
            let mut row = vec![c.to_string(), s.step.to_string()];
            row.extend(cells(&s.parameters));
            row.push(s.log_likelihood.to_string());
            row.push(s.accepted.to_string());
            csv.row(row);
        }
    }
    csv.into_bytes()
}

/// Two header rows of bin edges (`x_edges`, `y_edges`), then one row of counts per
/// `x` bin.
pub fn histogram_csv(h: &Histogram2d) -> Vec<u8> {
    let mut csv = Csv::new(&[]);
    let edges = |label: &str, name: &str, e: &[f64]| {
        let mut row = vec![label.to_string(), name.to_string()];
        row.extend(cells(e));
        row
    };
    csv.row(edges("x_edges", &h.x_name, &h.x_edges));
    csv.row(edges("y_edges", &h.y_name, &h.y_edges));
    for (i, counts) in h.counts.iter().enumerate() {
        let mut row = vec!["counts".to_string(), i.to_string()];
        row.extend(counts.iter().map(usize::to_string));
        csv.row(row);
    }
    csv.into_bytes()
}
