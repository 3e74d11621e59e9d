use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oho_resilience::error::Error;
use oho_resilience::gramian::non_oho_robots;
use oho_resilience::gramian::{one_hop_gramians, GramianSet};
use oho_resilience::graph::{build_delta_disk_graph, is_connected, CONNECTIVITY_TOL};
use oho_resilience::linalg::{min_sym_eigenvalue, RANK_RTOL};
use oho_resilience::scenario::{
    emit_csv, load_scenario, resolve_seed, run_experiment_with, RunOptions, RunStatus, SEED_ENV,
};
use oho_resilience::sensing::{apply_failure, classify_failure, is_collectively_observable};

#[derive(Parser)]
#[command(name = "oho-resilience", version, about = "Resilient one-hop observable robot teams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed-loop experiment and write metrics.csv, events.csv, graphs.jsonl.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the RESILIENCE_SEED variable and the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Independently re-check every reconfiguration.
        #[arg(long)]
        verify: bool,
    },
    /// Validate a scenario and report the initial observability picture.
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print sensor Gramians and initial one-hop Gramians as JSON.
    Gramian {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation { .. } | Error::Parse(_) | Error::Io(_) | Error::InvalidInput(_) => 2,
        _ => 4,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            verify,
        } => {
            let mut cfg = load_scenario(&scenario)?;
            let env = std::env::var(SEED_ENV).ok();
            cfg.seed = resolve_seed(seed, env.as_deref(), cfg.seed)?;
            let log = run_experiment_with(&cfg, RunOptions { verify })?;
            emit_csv(&log, &out)?;
            println!("seed: {}", log.seed);
            println!("iterations: {}", log.records.len());
            println!("failures: {}", log.failures.len());
            println!(
                "reconfigurations: {}",
                log.failures.iter().filter(|f| f.needs_reconfiguration()).count()
            );
            println!("total flips: {}", log.total_flips());
            match log.final_cost() {
                Some(c) => println!("final cost: {c:.6e}"),
                None => println!("final cost: n/a"),
            }
            println!("status: {}", log.status.label());
            Ok(match log.status {
                RunStatus::Completed => 0,
                RunStatus::Catastrophic { .. } => 3,
                RunStatus::ReconfigFailed { .. } => 4,
            })
        }
        Command::Check { scenario } => {
            let cfg = load_scenario(&scenario)?;
            let lib = cfg.sensor_library()?;
            let a_e = cfg.process_model()?.a_e;
            let gamma = cfg.initial_gamma()?;
            let graph = build_delta_disk_graph(&cfg.initial_positions()?, cfg.team.delta)?;
            println!(
                "scenario: {}",
                if cfg.name.is_empty() { "(unnamed)" } else { &cfg.name }
            );
            println!(
                "robots: {}, drones: {}, resources: {}",
                cfg.team.robots,
                cfg.process.drones,
                lib.len()
            );
            println!("initial edges: {:?}", graph.edges());
            println!("connected: {}", is_connected(&graph, CONNECTIVITY_TOL));
            println!(
                "collectively observable: {}",
                is_collectively_observable(&a_e, &gamma, &lib)
            );
            let bad = non_oho_robots(&a_e, &graph, &gamma, &lib);
            println!("team one-hop observable: {}", bad.is_empty());
            if !bad.is_empty() {
                println!("robots lacking one-hop observability: {bad:?}");
            }
            let mut g = gamma;
            let mut catastrophic = false;
            for ev in &cfg.failures {
                g = apply_failure(&g, ev)?;
                let class = classify_failure(&g, &a_e, &lib, RANK_RTOL);
                println!(
                    "failure at {:>5}: robot {} resource {} -> {:?}",
                    ev.iteration, ev.robot, ev.resource, class
                );
                catastrophic |= class == oho_resilience::sensing::FailureClass::Catastrophic;
            }
            Ok(if catastrophic { 3 } else { 0 })
        }
        Command::Gramian { scenario } => {
            let cfg = load_scenario(&scenario)?;
            let lib = cfg.sensor_library()?;
            let a_e = cfg.process_model()?.a_e;
            let set = GramianSet::compute(&a_e, &lib, cfg.horizon)?;
            let graph = build_delta_disk_graph(&cfg.initial_positions()?, cfg.team.delta)?;
            let one_hop = one_hop_gramians(&graph, &cfg.initial_gamma()?, &set)?;
            let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
                m.row_iter().map(|r| r.iter().copied().collect()).collect()
            };
            let doc = serde_json::json!({
                "horizon": cfg.horizon,
                "sensor_gramians": set.thetas.iter().map(&rows).collect::<Vec<_>>(),
                "one_hop_gramians": one_hop.grams.iter().map(|o| serde_json::json!({
                    "min_eigenvalue": min_sym_eigenvalue(o),
                    "matrix": rows(o),
                })).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
