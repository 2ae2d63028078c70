//! Sweep definitions: the cartesian product of topologies, rules and seeds.

use std::collections::BTreeSet;
use std::path::PathBuf;

use wsn_gossip::{RuleKind, TopologyKind};

use crate::config::{parse_list, parse_seeds, ReproTarget, Settings};
use crate::error::{CliError, Result};

/// A topology entry of a sweep: a plain generator or a reproduction preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyEntry {
    Kind(TopologyKind),
    Repro(ReproTarget),
}

impl std::str::FromStr for TopologyEntry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(t) = s.parse::<ReproTarget>() {
            return Ok(TopologyEntry::Repro(t));
        }
        s.parse::<TopologyKind>().map(TopologyEntry::Kind).map_err(|e| e.to_string())
    }
}

impl std::fmt::Display for TopologyEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TopologyEntry::Kind(k) => write!(f, "{k}"),
            TopologyEntry::Repro(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub id: String,
    pub topology: TopologyEntry,
    pub rule: RuleKind,
    pub seed: u64,
    pub settings: Settings,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub runs: Vec<RunSpec>,
    pub outputs: PathBuf,
    pub repro_target: Option<ReproTarget>,
}

impl ExperimentSpec {
    pub fn from_settings(base: &Settings) -> Result<Self> {
        let config = |key: &str, e: String| CliError::Config(format!("{key}: {e}"));
        let repro_target = base.repro()?;
        let topologies: Vec<TopologyEntry> = match base.get("sweep.topologies") {
            Some(list) => parse_list(list).map_err(|e| config("sweep.topologies", e))?,
            None => match (repro_target, base.get("graph.kind")) {
                (Some(t), _) => vec![TopologyEntry::Repro(t)],
                (None, Some(kind)) => vec![kind.parse().map_err(|e| config("graph.kind", e))?],
                (None, None) => vec![TopologyEntry::Kind(TopologyKind::Chain)],
            },
        };
        let rules: Vec<RuleKind> = match base.get("sweep.rules") {
            Some(list) => parse_list(list).map_err(|e| config("sweep.rules", e))?,
            None => vec![base.parse_key("rule.variant")?.unwrap_or(RuleKind::NeighborhoodSet)],
        };
        let seeds = match base.get("sweep.seeds") {
            Some(list) => parse_seeds(list).map_err(|e| config("sweep.seeds", e))?,
            None => vec![base.parse_key("run.seed")?.unwrap_or(0)],
        };

        let mut runs = Vec::with_capacity(topologies.len() * rules.len() * seeds.len());
        let mut ids = BTreeSet::new();
        for &topology in &topologies {
            for &rule in &rules {
                for &seed in &seeds {
                    let id = format!("{topology}-{}-s{seed}", rule.name());
                    if !ids.insert(id.clone()) {
                        return Err(CliError::Config(format!("duplicate run `{id}`")));
                    }
                    let mut settings = base.clone().with("rule.variant", rule.name())?.with("run.seed", &seed.to_string())?;
                    settings = match topology {
                        TopologyEntry::Kind(k) => settings.with("graph.kind", k.name())?,
                        TopologyEntry::Repro(t) => {
                            settings.with("run.repro", t.name())?.with("graph.kind", t.topology().name())?
                        }
                    };
                    runs.push(RunSpec { id, topology, rule, seed, settings });
                }
            }
        }
        Ok(ExperimentSpec {
            name: base.get("sweep.name").unwrap_or("sweep").to_string(),
            runs,
            outputs: base.output_dir(),
            repro_target,
        })
    }
}
