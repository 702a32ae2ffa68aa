//! Experiment drivers behind the command-line tool.
//!
//! Every Monte-Carlo replication draws from its own generator, seeded by
//! [`crate::rng::cell_seed`]; results are collected in grid order, and sums over
//! replications are taken over integers or in a fixed sequential order. Output
//! is therefore byte-identical for any worker count.

pub mod learn;
pub mod moments;
pub mod synth;
pub mod utility;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "RANKDP_THREADS";

/// Reals in output files: 17 significant digits, scientific notation, no locale.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Worker count: `RANKDP_THREADS` if set, else `requested`, else the rayon default.
pub fn resolve_workers(requested: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(requested),
    }
}

/// Runs `f` on a dedicated pool with `workers` threads (or the global pool).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Seed used by one labelled experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSeed {
    pub cell: String,
    pub seed: u64,
}

/// Sidecar describing how an output file was produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub spec: serde_json::Value,
    pub artifact_version: String,
    pub wall_clock_seconds: f64,
    pub cells: Vec<CellSeed>,
}

impl RunManifest {
    pub fn new(command: &str, spec: serde_json::Value, wall_clock_seconds: f64, cells: Vec<CellSeed>) -> Self {
        RunManifest {
            command: command.to_string(),
            spec,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            cells,
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_beside(&self, output: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(Self::path_for(output), text + "\n")?;
        Ok(())
    }
}

/// Renders rows as CSV with LF line endings.
pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub const ATTACK_HEADER: [&str; 9] = [
    "m",
    "N",
    "epsilon",
    "schedule",
    "replications",
    "errors",
    "error_rate",
    "stderr",
    "seed",
];

pub fn attack_csv(rows: &[crate::attack::AttackRow]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.n.to_string(),
                fmt_real(r.epsilon),
                r.schedule.clone(),
                r.replications.to_string(),
                r.errors.to_string(),
                fmt_real(r.error_rate),
                fmt_real(r.stderr),
                r.seed.to_string(),
            ]
        })
        .collect();
    render_csv(&ATTACK_HEADER, &rows)
}

/// Mean and standard error of integer observations, from exact integer sums.
pub(crate) fn mean_and_se(sum: u128, sum_sq: u128, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    // n * sum_sq - sum^2 is exact in integers
    let centered = (n as u128 * sum_sq - sum * sum) as f64 / nf;
    let var = centered / (nf - 1.0);
    (mean, (var / nf).sqrt())
}
