//! CSV and JSON-lines emission of a [`MetricsLog`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

use super::run::MetricsLog;

/// Per-robot metric columns, in order, after `iter,t,phase`.
pub const ROBOT_COLUMNS: [&str; 7] = [
    "err_x_mean",
    "err_x_max",
    "err_y_mean",
    "err_y_max",
    "err_z_mean",
    "err_z_max",
    "min_eig_O",
];

pub const EVENT_COLUMNS: [&str; 12] = [
    "event",
    "iteration",
    "robot",
    "resource",
    "class",
    "stricken",
    "flips",
    "cost",
    "target_team_oho",
    "target_min_eig",
    "assembled_at",
    "assembly_iters",
];

/// Seventeen significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn metrics_header(robots: usize) -> String {
    let mut cols = vec!["iter".to_string(), "t".into(), "phase".into()];
    for i in 0..robots {
        cols.extend(ROBOT_COLUMNS.iter().map(|c| format!("r{i}_{c}")));
    }
    cols.join(",")
}

pub fn metrics_csv(log: &MetricsLog) -> String {
    let mut out = metrics_header(log.robots);
    out.push('\n');
    for r in &log.records {
        write!(out, "{},{},{}", r.iter, num(r.t), r.phase.as_str()).unwrap();
        for (err, eig) in r.errors.iter().zip(&r.min_eig) {
            for axis in &err.axes {
                write!(out, ",{},{}", num(axis.mean), num(axis.max)).unwrap();
            }
            write!(out, ",{}", num(*eig)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn events_csv(log: &MetricsLog) -> String {
    let mut out = EVENT_COLUMNS.join(",");
    out.push('\n');
    for (k, f) in log.failures.iter().enumerate() {
        let stricken: Vec<String> = f.stricken.iter().map(|i| i.to_string()).collect();
        let flips: Vec<String> = f.flips.iter().map(|fl| fl.to_string()).collect();
        let min_eig = f.target_min_eig.iter().copied().fold(f64::INFINITY, f64::min);
        writeln!(
            out,
            "{k},{},{},{},{:?},{},{},{},{},{},{},{}",
            f.event.iteration,
            f.event.robot,
            f.event.resource,
            f.class,
            stricken.join(" "),
            flips.join(" "),
            opt(f.cost.map(num)),
            f.target_team_oho,
            if f.target_min_eig.is_empty() {
                String::new()
            } else {
                num(min_eig)
            },
            opt(f.assembled_at),
            opt(f.assembly_iters()),
        )
        .unwrap();
    }
    out
}

pub fn graphs_jsonl(log: &MetricsLog) -> String {
    let mut out = String::new();
    for (iter, edges) in &log.topology {
        let line = serde_json::json!({ "iteration": iter, "edges": edges });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Writes `metrics.csv`, `events.csv` and `graphs.jsonl` into `out_dir`.
pub fn emit_csv(log: &MetricsLog, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = [
        ("metrics.csv", metrics_csv(log)),
        ("events.csv", events_csv(log)),
        ("graphs.jsonl", graphs_jsonl(log)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
