//! Run the bundled nine-robot scenario with six resource failures and
//! summarise each reconfiguration.
//!
//! `cargo run --release --example paper_replica [out_dir]`

use std::path::PathBuf;

use oho_resilience::scenario::{emit_csv, load_scenario, run_experiment};

fn main() -> oho_resilience::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/paper_replica.json");
    let cfg = load_scenario(&path)?;
    let log = run_experiment(&cfg)?;

    for f in &log.failures {
        let flips: Vec<String> = f.flips.iter().map(|x| x.to_string()).collect();
        println!(
            "iter {:>4}: robot {} loses resource {} -> {:?}, stricken {:?}, flips [{}], assembled at {:?}",
            f.event.iteration,
            f.event.robot,
            f.event.resource,
            f.class,
            f.stricken,
            flips.join(" "),
            f.assembled_at
        );
    }
    println!("total flips: {}, status: {}", log.total_flips(), log.status.label());

    if let Some(dir) = std::env::args().nth(1) {
        for p in emit_csv(&log, std::path::Path::new(&dir))? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}
