//! Flat `section.key = value` configuration.
//!
//! Layering, lowest first: built-in defaults, a reproduction preset
//! (`run.repro`), the config file, then `--section.key value` flags.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use wsn_gossip::{
    build_topology, ActivationMode, DutyCycleParams, Graph, InitialStates, RuleKind, RunConfig64, StepSemantics,
    TopologyKind, TopologyParams, UpdateRule,
};

use crate::error::{CliError, Result};

pub const KEYS: &[&str] = &[
    "graph.kind",
    "graph.nodes",
    "graph.anchor",
    "graph.seed",
    "graph.side",
    "graph.radius",
    "graph.edge_probability",
    "graph.max_attempts",
    "graph.file",
    "duty.d_mean",
    "duty.d_var",
    "duty.t_c",
    "duty.p",
    "duty.q",
    "duty.mode",
    "rule.variant",
    "rule.alpha",
    "run.seed",
    "run.max_iterations",
    "run.tolerance",
    "run.backend",
    "run.semantics",
    "run.initial",
    "run.initial_low",
    "run.initial_high",
    "run.ticks_per_unit",
    "run.stop_on_convergence",
    "run.repro",
    "output.dir",
    "output.messages",
    "sweep.name",
    "sweep.topologies",
    "sweep.rules",
    "sweep.seeds",
];

/// Simulation backend for the proposed protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Agent,
    Matrix,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "agent" => Ok(Backend::Agent),
            "matrix" => Ok(Backend::Matrix),
            _ => Err(format!("unknown backend `{s}` (agent, matrix)")),
        }
    }
}

/// Fifty-node reproduction setups for the published figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproTarget {
    FigCircular,
    FigCircularDirected,
    FigRandom,
    FigStar,
    FigChain,
}

impl ReproTarget {
    pub const ALL: [ReproTarget; 5] = [
        ReproTarget::FigCircular,
        ReproTarget::FigCircularDirected,
        ReproTarget::FigRandom,
        ReproTarget::FigStar,
        ReproTarget::FigChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReproTarget::FigCircular => "fig_circular",
            ReproTarget::FigCircularDirected => "fig_circular_directed",
            ReproTarget::FigRandom => "fig_random",
            ReproTarget::FigStar => "fig_star",
            ReproTarget::FigChain => "fig_chain",
        }
    }

    pub fn topology(self) -> TopologyKind {
        match self {
            ReproTarget::FigCircular => TopologyKind::Circular,
            ReproTarget::FigCircularDirected => TopologyKind::CircularDirected,
            ReproTarget::FigRandom => TopologyKind::RandomGeometric,
            ReproTarget::FigStar => TopologyKind::Star,
            ReproTarget::FigChain => TopologyKind::Chain,
        }
    }

    fn preset(self) -> Settings {
        let mut s = Settings::default();
        for (k, v) in [
            ("graph.kind", self.topology().name()),
            ("graph.nodes", "50"),
            ("rule.variant", "neighborhood_set"),
            ("duty.d_mean", "1"),
            ("duty.t_c", "1"),
            ("run.tolerance", "1e-6"),
            ("run.max_iterations", "400"),
        ] {
            s.values.insert(k.to_string(), v.to_string());
        }
        s
    }
}

impl fmt::Display for ReproTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReproTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ReproTarget::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| format!("unknown reproduction target `{s}`"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            s.set(k.trim(), v.trim()).map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Settings::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn with(mut self, key: &str, value: &str) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    /// Overlays `other`; its keys win.
    pub fn merge(&mut self, other: &Settings) {
        self.values.extend(other.values.iter().map(|(k, v)| (k.clone(), v.clone())));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse_key<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("{key} = {v}: {e}"))))
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse_key(key)?.unwrap_or(default))
    }

    pub fn repro(&self) -> Result<Option<ReproTarget>> {
        self.parse_key("run.repro")
    }

    /// Settings with the reproduction preset filled in underneath.
    pub fn resolved(&self) -> Result<Settings> {
        match self.repro()? {
            Some(target) => {
                let mut s = target.preset();
                s.merge(self);
                Ok(s)
            }
            None => Ok(self.clone()),
        }
    }

    pub fn backend(&self) -> Result<Backend> {
        self.or("run.backend", Backend::Agent)
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output.dir").unwrap_or("out"))
    }

    pub fn graph(&self) -> Result<Graph> {
        let s = self.resolved()?;
        if let Some(path) = s.get("graph.file") {
            let f = File::open(path).map_err(CliError::io(path))?;
            return Ok(Graph::read_edge_list(BufReader::new(f))?);
        }
        let defaults = TopologyParams::default();
        let params = TopologyParams {
            anchor: s.or("graph.anchor", defaults.anchor)?,
            side: s.or("graph.side", defaults.side)?,
            radius: s.or("graph.radius", defaults.radius)?,
            edge_probability: s.or("graph.edge_probability", defaults.edge_probability)?,
            max_attempts: s.or("graph.max_attempts", defaults.max_attempts)?,
        };
        let kind = s.or("graph.kind", TopologyKind::Chain)?;
        let n = s.or("graph.nodes", 10usize)?;
        let seed = match s.parse_key("graph.seed")? {
            Some(seed) => seed,
            None => s.or("run.seed", 0u64)?,
        };
        Ok(build_topology(kind, n, &params, seed)?)
    }

    pub fn run_config(&self) -> Result<RunConfig64> {
        let s = self.resolved()?;
        let mut cfg = RunConfig64::new(s.graph()?);
        let d = DutyCycleParams::default();
        cfg.duty = DutyCycleParams {
            d_mean: s.or("duty.d_mean", d.d_mean)?,
            d_var: s.or("duty.d_var", d.d_var)?,
            t_c: s.or("duty.t_c", d.t_c)?,
            p: s.or("duty.p", d.p)?,
            q: s.or("duty.q", d.q)?,
            mode: s.or("duty.mode", ActivationMode::Alternating)?,
        };
        cfg.rule = UpdateRule { kind: s.or("rule.variant", RuleKind::NeighborhoodSet)?, alpha: s.or("rule.alpha", 0.5)? };
        cfg.initial = match s.get("run.initial") {
            Some(list) => InitialStates::Explicit(parse_list(list).map_err(|e| CliError::Config(format!("run.initial: {e}")))?),
            None => InitialStates::Uniform { low: s.or("run.initial_low", 0.0)?, high: s.or("run.initial_high", 100.0)? },
        };
        cfg.max_iterations = s.or("run.max_iterations", cfg.max_iterations)?;
        cfg.seed = s.or("run.seed", cfg.seed)?;
        cfg.tolerance = s.or("run.tolerance", cfg.tolerance)?;
        cfg.semantics = s.or("run.semantics", StepSemantics::Hold)?;
        cfg.ticks_per_unit = s.or("run.ticks_per_unit", cfg.ticks_per_unit)?;
        cfg.stop_on_convergence = s.or("run.stop_on_convergence", cfg.stop_on_convergence)?;
        cfg.record_messages = s.or("output.messages", false)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Comma-separated values; an empty string is an empty list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

/// `a..b` (exclusive) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        return Ok((a..b).collect());
    }
    parse_list(s)
}

/// A command line after the subcommand: an optional config path followed
/// by `--key value` or `--key=value` pairs.
#[derive(Debug, Default, PartialEq)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub flags: Vec<(String, String)>,
}

impl Invocation {
    pub fn parse(args: &[String]) -> Result<Self> {
        let mut inv = Invocation::default();
        let mut it = args.iter();
        while let Some(a) = it.next() {
            match a.strip_prefix("--") {
                Some(flag) => {
                    let (k, v) = match flag.split_once('=') {
                        Some((k, v)) => (k.to_string(), v.to_string()),
                        None => {
                            let v = it.next().ok_or_else(|| CliError::Config(format!("--{flag} needs a value")))?;
                            (flag.to_string(), v.clone())
                        }
                    };
                    inv.flags.push((k, v));
                }
                None if inv.config.is_none() => inv.config = Some(PathBuf::from(a)),
                None => return Err(CliError::Config(format!("unexpected argument `{a}`"))),
            }
        }
        Ok(inv)
    }

    /// Removes and returns every value given for `key`.
    pub fn take(&mut self, key: &str) -> Vec<String> {
        let (taken, rest) = std::mem::take(&mut self.flags).into_iter().partition(|(k, _)| k == key);
        self.flags = rest;
        taken.into_iter().map(|(_, v)| v).collect()
    }

    pub fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        for (k, v) in &self.flags {
            s.set(k, v)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_file_syntax() {
        let s = Settings::parse("# comment\ngraph.kind = star\n\nrun.seed=4  # trailing\n").unwrap();
        assert_eq!(s.get("graph.kind"), Some("star"));
        assert_eq!(s.get("run.seed"), Some("4"));
        assert!(Settings::parse("graph.kind star").is_err());
        assert!(Settings::parse("graph.colour = red").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let mut inv = Invocation::parse(&args(&["cfg.txt", "--run.seed", "3", "--graph.kind=circular"])).unwrap();
        assert_eq!(inv.config, Some(PathBuf::from("cfg.txt")));
        inv.config = None;
        let s = inv.settings().unwrap();
        assert_eq!(s.get("run.seed"), Some("3"));
        assert_eq!(s.get("graph.kind"), Some("circular"));
        assert!(Invocation::parse(&args(&["--run.seed"])).is_err());
        assert!(Invocation::parse(&args(&["a", "b"])).is_err());
    }

    #[test]
    fn take_extracts_repeated_flags() {
        let mut inv = Invocation::parse(&args(&["--baseline", "a", "--run.seed", "1", "--baseline=b"])).unwrap();
        assert_eq!(inv.take("baseline"), vec!["a", "b"]);
        assert_eq!(inv.flags, vec![("run.seed".to_string(), "1".to_string())]);
    }

    #[test]
    fn builds_run_config() {
        let s = Settings::parse(
            "graph.kind = chain\ngraph.nodes = 3\nrun.initial = 0, 6, 0\nrule.variant = paper_literal\nrun.semantics = literal",
        )
        .unwrap();
        let cfg = s.run_config().unwrap();
        assert_eq!(cfg.graph.node_count(), 3);
        assert_eq!(cfg.initial, InitialStates::Explicit(vec![0.0, 6.0, 0.0]));
        assert_eq!(cfg.rule.kind, RuleKind::Accumulating);
        assert_eq!(cfg.semantics, StepSemantics::Literal);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in ["run.max_iterations = 0", "run.tolerance = -1", "graph.kind = torus", "duty.p = 2", "run.seed = x"] {
            let err = Settings::parse(text).unwrap().run_config().unwrap_err();
            assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG, "{text}");
        }
    }

    #[test]
    fn repro_preset_sits_under_explicit_keys() {
        let s = Settings::parse("run.repro = fig_star\nrun.max_iterations = 50").unwrap();
        let cfg = s.run_config().unwrap();
        assert_eq!(cfg.graph.node_count(), 50);
        assert_eq!(cfg.max_iterations, 50);
        assert_eq!(cfg.duty.d_mean, 1.0);
        assert!(Settings::parse("run.repro = fig_torus").unwrap().run_config().is_err());
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("2..5").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7, 1").unwrap(), vec![7, 1]);
        assert!(parse_seeds("").unwrap().is_empty());
        assert!(parse_seeds("a..3").is_err());
    }
}
