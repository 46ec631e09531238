//! Experiment configuration: strict JSON parsing, validation and a stable
//! content hash.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wigfluct::ensembles::{Ensemble, EnsembleSpec};
use wigfluct::{DetFamily, FamilySpec, Monomial, WignerId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Pairings,
    Theory,
    Mc,
    Oracle,
    Compare,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Task::Pairings => "pairings",
            Task::Theory => "theory",
            Task::Mc => "mc",
            Task::Oracle => "oracle",
            Task::Compare => "compare",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Largest N handed to the exact oracle.
    #[serde(default = "default_oracle_max_n")]
    pub oracle_max_n: usize,
    /// Largest total degree handed to the exact oracle (2 vertices each).
    #[serde(default = "default_oracle_max_degree")]
    pub oracle_max_degree: usize,
}

fn default_oracle_max_n() -> usize {
    16
}

fn default_oracle_max_degree() -> usize {
    5
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            oracle_max_n: default_oracle_max_n(),
            oracle_max_degree: default_oracle_max_degree(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub ensembles: Vec<EnsembleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Token strings such as `"x1 a0 x2 a1"`.
    #[serde(default)]
    pub monomials: Vec<String>,
    /// Index pairs into `monomials`; all pairs `i ≤ j` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
    /// Matrix sizes.
    #[serde(default, rename = "N")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_replicates", rename = "R")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// `c` in the discrepancy slack `4·SE + c/N`.
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub output: Outputs,
}

fn default_replicates() -> usize {
    1000
}

fn default_slack() -> f64 {
    8.0
}

/// Everything a task needs, built from a validated config.
pub struct Resolved {
    pub monomials: Vec<Monomial>,
    pub pairs: Vec<(usize, usize)>,
    pub ensembles: Vec<Ensemble>,
    pub family: FamilySpec,
}

/// `/a/0/b` style pointer for a serde path.
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub fn parse_config_str(text: &str) -> anyhow::Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| anyhow!("config {}: {}", pointer(e.path()), e.inner()))
}

pub fn parse_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("in {}", path.display()))
}

impl ExperimentConfig {
    /// SHA-256 of the resolved config as JSON with sorted keys.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Checks task-specific requirements and resolves every reference.
    pub fn resolve(&self, task: Task) -> anyhow::Result<Resolved> {
        if let Some(t) = self.task {
            if t != task {
                bail!("config /task is `{t}` but the `{task}` command was run");
            }
        }
        if self.monomials.is_empty() {
            bail!("config /monomials: at least one monomial is required");
        }
        let family = self
            .family
            .clone()
            .ok_or_else(|| anyhow!("config /family is required for `{task}`"))?;
        let mut ensembles = Vec::with_capacity(self.ensembles.len());
        for (i, spec) in self.ensembles.iter().enumerate() {
            ensembles.push(spec.build().with_context(|| format!("config /ensembles/{i}"))?);
        }
        let mut monomials = Vec::with_capacity(self.monomials.len());
        for (i, s) in self.monomials.iter().enumerate() {
            let m = Monomial::parse(s).with_context(|| format!("config /monomials/{i}: `{s}`"))?;
            for id in m.labels() {
                if !ensembles.iter().any(|e: &Ensemble| e.id == *id) {
                    bail!("config /monomials/{i}: no ensemble with id {} for `{s}`", id.0);
                }
            }
            if let Some(b) = m.max_base() {
                if b >= family.matrices.len() {
                    bail!(
                        "config /monomials/{i}: letter a{b} but the family has {} matrices",
                        family.matrices.len()
                    );
                }
            }
            monomials.push(m);
        }
        let pairs: Vec<(usize, usize)> = match &self.pairs {
            Some(list) => {
                for (k, [i, j]) in list.iter().enumerate() {
                    if *i >= monomials.len() || *j >= monomials.len() {
                        bail!("config /pairs/{k}: index out of range");
                    }
                }
                list.iter().map(|&[i, j]| (i, j)).collect()
            }
            None => (0..monomials.len())
                .flat_map(|i| (i..monomials.len()).map(move |j| (i, j)))
                .collect(),
        };
        if matches!(task, Task::Mc | Task::Oracle | Task::Compare) && self.sizes.is_empty() {
            bail!("config /N: at least one matrix size is required for `{task}`");
        }
        if matches!(task, Task::Theory) && self.sizes.is_empty() && family.dim.is_none() {
            bail!("config: `theory` needs /N or /family/dim");
        }
        if matches!(task, Task::Mc | Task::Compare) && self.replicates < 2 {
            bail!("config /R: need at least 2 replicates");
        }
        if !(self.slack >= 0.0) {
            bail!("config /slack must be non-negative");
        }
        Ok(Resolved {
            monomials,
            pairs,
            ensembles,
            family,
        })
    }

    /// Sizes used for theory evaluation.
    pub fn theory_sizes(&self) -> Vec<usize> {
        if self.sizes.is_empty() {
            self.family.as_ref().and_then(|f| f.dim).into_iter().collect()
        } else {
            self.sizes.clone()
        }
    }
}

impl Resolved {
    pub fn family_at(&self, n: usize) -> anyhow::Result<DetFamily> {
        self.family.build(n).with_context(|| format!("building the family at N = {n}"))
    }

    pub fn ids(&self) -> Vec<WignerId> {
        self.ensembles.iter().map(|e| e.id).collect()
    }
}
