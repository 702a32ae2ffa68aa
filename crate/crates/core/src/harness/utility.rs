//! Expected concordance of both mechanisms: Monte Carlo against closed form.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{expected_concordance_laplace, expected_concordance_mallows, LaplaceMechanism, MallowsMechanism};
use crate::ranking::{concordant_pairs, Ranking};
use crate::rng::{cell_seed, rng_from_seed};

use super::{fmt_real, mean_and_se, render_csv, CellSeed};

pub const UTILITY_HEADER: [&str; 8] = [
    "m",
    "epsilon",
    "mallows_mc",
    "mallows_cf",
    "laplace_mc",
    "laplace_cf",
    "reps",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityRow {
    pub m: usize,
    pub epsilon: f64,
    pub mallows_mc: f64,
    pub mallows_se: f64,
    pub mallows_cf: f64,
    pub laplace_mc: f64,
    pub laplace_se: f64,
    pub laplace_cf: f64,
    pub reps: usize,
    pub seed: u64,
}

impl UtilityRow {
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            fmt_real(self.epsilon),
            fmt_real(self.mallows_mc),
            fmt_real(self.mallows_cf),
            fmt_real(self.laplace_mc),
            fmt_real(self.laplace_cf),
            self.reps.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}

fn concordance_samples(
    m: usize,
    epsilon: f64,
    reps: usize,
    base_seed: u64,
    label: &str,
    draw: impl Fn(&Ranking, &mut crate::rng::DpRng) -> Result<Ranking> + Sync,
) -> Result<(f64, f64)> {
    let center = Ranking::identity(m)?;
    let values = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng_from_seed(cell_seed(base_seed, label, m, epsilon, 0, rep));
            let out = draw(&center, &mut rng)?;
            Ok(concordant_pairs(&center, &out)? as u128)
        })
        .collect::<Result<Vec<u128>>>()?;
    let sum: u128 = values.iter().sum();
    let sum_sq: u128 = values.iter().map(|v| v * v).sum();
    Ok(mean_and_se(sum, sum_sq, reps))
}

/// Monte-Carlo and closed-form expected concordance for every `(m, epsilon)` cell.
pub fn utility_table(m_list: &[usize], epsilons: &[f64], reps: usize, base_seed: u64) -> Result<Vec<UtilityRow>> {
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    if m_list.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidConfig("m list and epsilon grid must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(m_list.len() * epsilons.len());
    for &m in m_list {
        for &eps in epsilons {
            let mallows = MallowsMechanism::new(eps, m)?;
            let laplace = LaplaceMechanism::new(eps, m)?;
            let (mallows_mc, mallows_se) =
                concordance_samples(m, eps, reps, base_seed, "utility-mallows", |c, rng| mallows.synthesize(c, rng))?;
            let (laplace_mc, laplace_se) =
                concordance_samples(m, eps, reps, base_seed, "utility-laplace", |c, rng| laplace.synthesize(c, rng))?;
            rows.push(UtilityRow {
                m,
                epsilon: eps,
                mallows_mc,
                mallows_se,
                mallows_cf: expected_concordance_mallows(m, eps)?,
                laplace_mc,
                laplace_se,
                laplace_cf: expected_concordance_laplace(m, eps)?,
                reps,
                seed: base_seed,
            });
        }
    }
    Ok(rows)
}

pub fn utility_csv(rows: &[UtilityRow]) -> String {
    render_csv(&UTILITY_HEADER, &rows.iter().map(UtilityRow::csv_fields).collect::<Vec<_>>())
}

/// Seeds of the first replication of each cell, for the manifest.
pub fn utility_cells(rows: &[UtilityRow]) -> Vec<CellSeed> {
    rows.iter()
        .flat_map(|r| {
            ["utility-mallows", "utility-laplace"].map(|label| CellSeed {
                cell: format!("{label} m={} epsilon={} rep=0", r.m, fmt_real(r.epsilon)),
                seed: cell_seed(r.seed, label, r.m, r.epsilon, 0, 0),
            })
        })
        .collect()
}
