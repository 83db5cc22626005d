use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bipartite_bft::adversary::{AdversaryScript, CorruptionSet, ExplicitScript, Strategy};
use bipartite_bft::broadcast::GeneralId;
use bipartite_bft::simulator::{InitValue, ProtocolSpec, RunSpec, TopologySpec};
use bipartite_bft::topology::NodeId;
use serde::{Deserialize, Serialize};

/// A scenario file: what to run, on what, against which adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub topology: TopologySpec,
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub adversary: AdversarySection,
    /// Rounds simulated by `run`; defaults to what the protocol needs.
    pub rounds: Option<u32>,
    /// Property names checked for the exit status; empty means all.
    #[serde(default)]
    pub properties: Vec<String>,
    /// Output root, relative to the working directory.
    pub out: Option<PathBuf>,
    /// Shift of every accept threshold. Mutation checks only.
    #[serde(default)]
    pub accept_offset: i64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// General the inputs start; the nominal General for the lever.
    pub general: Option<u32>,
    /// Input nodes; side A on a bipartite graph, every node on `K_n`.
    pub nodes: Option<Vec<NodeId>>,
    /// Same input everywhere.
    pub value: Option<bool>,
    /// One input per entry of `nodes`.
    pub values: Option<Vec<bool>>,
    /// `exhaustive` only: try every assignment to the correct input nodes.
    #[serde(default)]
    pub enumerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorruptionChoice {
    #[default]
    None,
    Nodes(Vec<NodeId>),
    /// `"all-exact"` (exactly the budget on each side) or `"all-within"`.
    Family(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    #[serde(default)]
    pub corruption: CorruptionChoice,
    /// silent, consistent, split, seeded-random or explicit.
    pub strategy: Option<String>,
    pub value: Option<bool>,
    pub ones_to: Option<Vec<NodeId>>,
    pub seed: Option<u64>,
    /// Explicit script file, relative to the scenario file.
    pub script: Option<PathBuf>,
    /// Rounds the adversary acts in; also the exhaustive horizon.
    pub horizon: Option<u32>,
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rounds: Option<u32>,
    pub accept_offset: Option<i64>,
}

pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut s = parse(&text).with_context(|| format!("in scenario {}", path.display()))?;
    s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(s)
}

pub fn parse(text: &str) -> Result<Scenario> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1));
        match line {
            Some(l) => anyhow::anyhow!("line {l}: {}", e.message()),
            None => anyhow::anyhow!("{}", e.message()),
        }
    })
}

impl Scenario {
    pub fn general(&self) -> GeneralId {
        match (self.inputs.general, self.protocol) {
            (Some(g), _) => GeneralId(g),
            (None, ProtocolSpec::BaLever { g0, .. }) => g0,
            (None, _) => GeneralId(0),
        }
    }

    pub fn input_nodes(&self) -> Vec<NodeId> {
        if let Some(nodes) = &self.inputs.nodes {
            return nodes.clone();
        }
        match self.topology.partition() {
            Some(p) => p.side_a().collect(),
            None => (0..self.topology.node_count()).collect(),
        }
    }

    pub fn horizon(&self, overrides: &Overrides) -> Option<u32> {
        overrides.rounds.or(self.adversary.horizon)
    }

    /// Corruption sets the scenario names, in a fixed order.
    pub fn corruption_sets(&self) -> Result<Vec<CorruptionSet>> {
        let [f_a, f_b] = self.protocol.budget();
        Ok(match &self.adversary.corruption {
            CorruptionChoice::None => vec![CorruptionSet::default()],
            CorruptionChoice::Nodes(nodes) => vec![CorruptionSet::new(nodes.iter().copied())],
            CorruptionChoice::Family(kind) => match (kind.as_str(), self.topology.partition()) {
                ("all-exact", Some(p)) => CorruptionSet::all_exact(p, f_a, f_b),
                ("all-within", Some(p)) => CorruptionSet::all_within(p, f_a, f_b),
                ("all-exact", None) => CorruptionSet::all_exact_single(self.topology.node_count(), f_a),
                ("all-within", None) => (0..=f_a)
                    .flat_map(|k| CorruptionSet::all_exact_single(self.topology.node_count(), k))
                    .collect(),
                (other, _) => {
                    bail!("unknown corruption family {other:?}; use a node list, \"all-exact\" or \"all-within\"")
                }
            },
        })
    }

    /// Input assignments: the configured one, or with `enumerate` every
    /// assignment over the input nodes outside `corruption`.
    pub fn input_sets(&self, corruption: &CorruptionSet, enumerate: bool) -> Result<Vec<Vec<InitValue>>> {
        let nodes = self.input_nodes();
        let general = self.general();
        if enumerate {
            let correct: Vec<NodeId> = nodes.into_iter().filter(|&n| !corruption.contains(n)).collect();
            if correct.len() > 20 {
                bail!("{} correct input nodes are too many to enumerate", correct.len());
            }
            return Ok((0u32..1 << correct.len())
                .map(|mask| {
                    correct
                        .iter()
                        .enumerate()
                        .map(|(i, &node)| InitValue {
                            node,
                            general,
                            value: mask >> i & 1 == 1,
                        })
                        .collect()
                })
                .collect());
        }
        let values = match (&self.inputs.values, self.inputs.value) {
            (Some(v), None) => {
                if v.len() != nodes.len() {
                    bail!("inputs.values has {} entries for {} input nodes", v.len(), nodes.len());
                }
                v.clone()
            }
            (None, Some(v)) => vec![v; nodes.len()],
            (None, None) => vec![false; nodes.len()],
            (Some(_), Some(_)) => bail!("give either inputs.value or inputs.values, not both"),
        };
        Ok(vec![nodes
            .into_iter()
            .zip(values)
            .filter(|(n, _)| !corruption.contains(*n))
            .map(|(node, value)| InitValue { node, general, value })
            .collect()])
    }

    pub fn strategy(&self, overrides: &Overrides) -> Result<Strategy> {
        let a = &self.adversary;
        let name = a
            .strategy
            .as_deref()
            .unwrap_or(if a.script.is_some() { "explicit" } else { "silent" });
        Ok(match name {
            "silent" => Strategy::Silent,
            "consistent" => Strategy::Consistent {
                value: a.value.context("strategy consistent needs adversary.value")?,
            },
            "split" => Strategy::Split {
                ones_to: a
                    .ones_to
                    .clone()
                    .context("strategy split needs adversary.ones_to")?
                    .into_iter()
                    .collect(),
            },
            "seeded-random" => Strategy::SeededRandom {
                seed: overrides
                    .seed
                    .or(a.seed)
                    .context("strategy seeded-random needs a seed")?,
            },
            "explicit" => {
                let rel = a.script.as_ref().context("strategy explicit needs adversary.script")?;
                let path = self.base_dir.join(rel);
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let script = ExplicitScript::parse(&text).with_context(|| format!("in script {}", path.display()))?;
                Strategy::Explicit { script }
            }
            other => bail!("unknown strategy {other:?}"),
        })
    }

    /// One run spec per corruption set and input assignment; validated.
    pub fn run_specs(&self, overrides: &Overrides) -> Result<Vec<RunSpec>> {
        let strategy = self.strategy(overrides)?;
        let mut out = Vec::new();
        for corruption in self.corruption_sets()? {
            for inits in self.input_sets(&corruption, self.inputs.enumerate)? {
                let mut adversary = AdversaryScript::new(corruption.clone(), strategy.clone());
                adversary.horizon = self.adversary.horizon;
                let mut spec = RunSpec::new(self.topology, self.protocol, inits, adversary);
                spec.accept_offset = overrides.accept_offset.unwrap_or(self.accept_offset);
                spec.max_rounds = overrides
                    .rounds
                    .or(self.rounds)
                    .unwrap_or_else(|| spec.default_rounds());
                spec.validate().with_context(|| format!("scenario {}", self.name))?;
                out.push(spec);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEVER: &str = r#"
name = "t"
[topology]
kind = "complete-bipartite"
n_a = 4
n_b = 4
[protocol]
kind = "ba-lever"
f_a = 1
f_b = 1
g0 = 0
[inputs]
value = true
[adversary]
corruption = "all-exact"
"#;

    #[test]
    fn family_expands() {
        let s = parse(LEVER).unwrap();
        let specs = s.run_specs(&Overrides::default()).unwrap();
        assert_eq!(specs.len(), 16);
        assert!(specs.iter().all(|r| r.inits.len() == 3 && r.max_rounds == 4));
    }

    #[test]
    fn enumeration_skips_corrupted_inputs() {
        let s = parse(LEVER).unwrap();
        let sets = s.input_sets(&CorruptionSet::new([1, 5]), true).unwrap();
        assert_eq!(sets.len(), 8);
        assert!(sets.iter().all(|i| i.iter().all(|v| v.node != 1)));
    }

    #[test]
    fn parse_error_has_line() {
        let err = parse("name = \"x\"\n[topology]\nkind = 3\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3"), "{err}");
    }
}
