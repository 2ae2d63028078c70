//! The four subcommands. Each returns the process exit status.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use wsn_gossip::{
    check_consensus_conditions, consensus_weight_matrix, convergence_time, expected_weight_matrix, run_agent_sim,
    run_matrix_sim, run_pairwise_baseline, seeded_activations, Error, RuleKind, RunConfig64, SpectralReport64, Trace64,
    UpdateRule,
};

use crate::config::{Backend, Settings};
use crate::error::{CliError, Result, EXIT_NOT_CONVERGED, EXIT_OK};
use crate::experiment::{ExperimentSpec, RunSpec};

pub const SWEEP_HEADER: &str =
    "run_id,topology,rule,seed,status,convergence_time,max_drift,final_disagreement,lambda2";
pub const COMPARE_HEADER: &str =
    "role,rule,status,convergence_time,iterations,messages_sent,final_drift,final_disagreement";

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let f = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(f);
    body(&mut w)?;
    w.flush().map_err(CliError::io(path))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

/// Runs one configuration on the chosen backend. The pairwise rule always
/// goes to the gossip baseline.
pub fn simulate(cfg: &RunConfig64, backend: Backend) -> Result<Trace64> {
    let trace = match (cfg.rule.kind, backend) {
        (RuleKind::PairwiseBaseline, _) => run_pairwise_baseline(cfg)?,
        (_, Backend::Agent) => run_agent_sim(cfg)?,
        (_, Backend::Matrix) => run_matrix_sim(cfg, &seeded_activations(cfg))?,
    };
    Ok(trace)
}

/// Consensus conditions of the expected weight matrix `E[A_Φ]`.
pub fn expected_spectrum(cfg: &RunConfig64) -> Result<SpectralReport64> {
    Ok(check_consensus_conditions(&expected_weight_matrix(&cfg.graph, &cfg.rule)?)?)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn cmd_run(settings: &Settings) -> Result<i32> {
    let cfg = settings.run_config()?;
    let dir = settings.output_dir();
    create_dir(&dir)?;
    let trace = simulate(&cfg, settings.backend()?)?;

    write_file(&dir.join("trace.csv"), |w| Ok(trace.write_states_csv(w)?))?;
    write_file(&dir.join("metrics.csv"), |w| Ok(trace.write_metrics_csv(w)?))?;
    if cfg.record_messages {
        write_file(&dir.join("messages.csv"), |w| Ok(trace.write_messages_csv(w)?))?;
    }
    let report = expected_spectrum(&cfg)?;
    write_file(&dir.join("spectral.txt"), |w| {
        write!(w, "rule={}\n{}", cfg.rule.kind, report.to_key_value()).map_err(CliError::io(dir.join("spectral.txt")))
    })?;
    write_file(&dir.join("spectral.csv"), |w| {
        writeln!(w, "rule,{}\n{},{}", SpectralReport64::CSV_HEADER, cfg.rule.kind, report.to_csv_row())
            .map_err(CliError::io(dir.join("spectral.csv")))
    })?;

    let converged = convergence_time(&trace, cfg.tolerance);
    println!(
        "converged={} iterations={} convergence_time={} final_drift={:e} max_drift={:e} final_disagreement={:e} messages={}",
        converged.is_some(),
        trace.iterations(),
        opt(converged),
        trace.final_drift(),
        trace.max_drift(),
        trace.final_disagreement(),
        trace.messages_sent
    );
    Ok(if converged.is_some() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn sweep_row(run: &RunSpec, dir: &Path) -> String {
    let prefix = format!("{},{},{},{}", run.id, run.topology, run.rule.name(), run.seed);
    let outcome = run.settings.run_config().and_then(|cfg| {
        let trace = simulate(&cfg, run.settings.backend()?)?;
        write_file(&dir.join(format!("{}_metrics.csv", run.id)), |w| Ok(trace.write_metrics_csv(w)?))?;
        let lambda2 = match expected_spectrum(&cfg) {
            Ok(r) => Some(r.second_eigenvalue_modulus),
            Err(e) => {
                warn!("{}: no spectrum: {e}", run.id);
                None
            }
        };
        Ok((convergence_time(&trace, cfg.tolerance), trace, lambda2))
    });
    match outcome {
        Ok((ct, trace, lambda2)) => format!(
            "{prefix},{},{},{},{},{}",
            if ct.is_some() { "converged" } else { "not_converged" },
            opt(ct),
            trace.max_drift(),
            trace.final_disagreement(),
            opt(lambda2)
        ),
        Err(e) => {
            warn!("{}: {e}", run.id);
            let status = match e {
                CliError::Sim(Error::Liveness { .. }) => "liveness",
                _ => "error",
            };
            format!("{prefix},{status},,,,")
        }
    }
}

pub fn cmd_sweep(settings: &Settings) -> Result<i32> {
    let spec = ExperimentSpec::from_settings(settings)?;
    let runs_dir = spec.outputs.join("runs");
    create_dir(&runs_dir)?;
    info!("sweep `{}`: {} runs", spec.name, spec.runs.len());
    let rows: Vec<String> = spec.runs.par_iter().map(|run| sweep_row(run, &runs_dir)).collect();

    let path = spec.outputs.join(format!("{}.csv", spec.name));
    write_file(&path, |w| {
        let mut body = String::from(SWEEP_HEADER);
        body.push('\n');
        for row in &rows {
            body.push_str(row);
            body.push('\n');
        }
        w.write_all(body.as_bytes()).map_err(CliError::io(&path))
    })?;
    let converged = rows.iter().filter(|r| r.contains(",converged,")).count();
    println!("runs={} converged={} table={}", rows.len(), converged, path.display());
    Ok(EXIT_OK)
}

pub fn cmd_compare(settings: &Settings, baselines: &[Settings]) -> Result<i32> {
    let cfg = settings.run_config()?;
    let x0 = cfg.initial_states()?;
    let default_baseline = [Settings::default().with("rule.variant", RuleKind::PairwiseBaseline.name())?];
    let baselines = if baselines.is_empty() { &default_baseline[..] } else { baselines };

    let mut entries = vec![("proposed", cfg.clone(), settings.backend()?)];
    for (i, b) in baselines.iter().enumerate() {
        let mut s = settings.clone();
        s.merge(b);
        let other = s.run_config()?;
        if other.graph != cfg.graph || other.initial_states()? != x0 {
            return Err(CliError::Config(format!("baseline {} uses a different topology or initial state", i + 1)));
        }
        entries.push(("baseline", other, s.backend()?));
    }

    let mut rows = Vec::new();
    let mut all_converged = true;
    for (role, c, backend) in &entries {
        let trace = simulate(c, *backend)?;
        let ct = convergence_time(&trace, c.tolerance);
        all_converged &= ct.is_some();
        rows.push(format!(
            "{role},{},{},{},{},{},{},{}",
            c.rule.kind,
            if ct.is_some() { "converged" } else { "not_converged" },
            opt(ct),
            trace.iterations(),
            trace.messages_sent,
            trace.final_drift(),
            trace.final_disagreement()
        ));
    }
    let table = format!("{COMPARE_HEADER}\n{}\n", rows.join("\n"));
    let dir = settings.output_dir();
    create_dir(&dir)?;
    let path = dir.join("compare.csv");
    write_file(&path, |w| w.write_all(table.as_bytes()).map_err(CliError::io(&path)))?;
    print!("{table}");
    Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_spectra(settings: &Settings) -> Result<i32> {
    let cfg = settings.run_config()?;
    let mut table = format!("rule,matrix,{}\n", SpectralReport64::CSV_HEADER);
    for kind in RuleKind::ALL {
        if kind == RuleKind::PairwiseBaseline && cfg.graph.is_directed() {
            continue;
        }
        let rule = UpdateRule { kind, alpha: cfg.rule.alpha };
        let expected = check_consensus_conditions(&expected_weight_matrix(&cfg.graph, &rule)?)?;
        table.push_str(&format!("{kind},expected,{}\n", expected.to_csv_row()));
        let averaging = check_consensus_conditions(&consensus_weight_matrix(&cfg.graph, &rule))?;
        table.push_str(&format!("{kind},averaging,{}\n", averaging.to_csv_row()));
    }
    let dir = settings.output_dir();
    create_dir(&dir)?;
    let path = dir.join("spectra.csv");
    write_file(&path, |w| w.write_all(table.as_bytes()).map_err(CliError::io(&path)))?;
    print!("{table}");
    Ok(EXIT_OK)
}
