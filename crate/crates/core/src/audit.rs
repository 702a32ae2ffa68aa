//! Privacy audits for the ranking mechanisms.
//!
//! The exact audit uses the fact that every Mallows output law shares the same
//! normalizer, so the log-ratio between the laws centred at two rankings is
//! just `pair_weight * (C(base, out) - C(neighbor, out))`. Only pairs on which
//! `base` and `neighbor` disagree contribute to that difference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{LaplaceMechanism, MallowsMechanism};
use crate::ranking::{enumerate_neighbors, enumerate_permutations, Ranking, ENUMERATION_CAP};
use crate::rng::{derive_seed, fnv1a, rng_from_seed};

/// Largest `m` accepted by the empirical audit.
pub const EMPIRICAL_CAP: usize = 6;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    Exact,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub configured_epsilon: f64,
    pub measured_epsilon: f64,
    pub mode: AuditMode,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples_per_arm: Option<u64>,
    pub worst_neighbor: Ranking,
    pub worst_output: Ranking,
    /// Empirical mode only: output cells skipped because one arm never produced them.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped_cells: Option<u64>,
}

/// Worst-case log-ratio contributed by one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRatio {
    pub neighbor: Ranking,
    /// `max_out |C(base, out) - C(neighbor, out)|`
    pub max_concordance_gap: usize,
    pub worst_output: Ranking,
    pub log_ratio: f64,
}

fn check_cap(m: usize, cap: usize) -> Result<()> {
    if m > cap {
        return Err(Error::CapExceeded { m, cap });
    }
    Ok(())
}

/// Exact worst-case log-ratio for every neighbor of `base`.
pub fn exact_neighbor_ratios(mech: &MallowsMechanism, base: &Ranking) -> Result<Vec<NeighborRatio>> {
    check_cap(base.m(), ENUMERATION_CAP)?;
    if base.m() != mech.m() {
        return Err(Error::SizeMismatch {
            expected: mech.m(),
            actual: base.m(),
        });
    }
    let m = base.m();
    let weight = mech.pair_weight();
    let outputs: Vec<Ranking> = enumerate_permutations(m)?.collect();
    let ratios = enumerate_neighbors(base)
        .into_iter()
        .map(|nw| {
            let nb = nw.neighbor;
            let disputed: Vec<(usize, usize, bool)> = (0..m)
                .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
                .filter(|&(i, j)| (base.rank_of(i) > base.rank_of(j)) != (nb.rank_of(i) > nb.rank_of(j)))
                .map(|(i, j)| (i, j, base.rank_of(i) > base.rank_of(j)))
                .collect();
            let gap = |out: &Ranking| {
                let with_base = disputed
                    .iter()
                    .filter(|&&(i, j, base_above)| (out.rank_of(i) > out.rank_of(j)) == base_above)
                    .count();
                with_base.abs_diff(disputed.len() - with_base)
            };
            // the input itself is checked first so it wins ties
            let mut best = (gap(base), base.clone());
            for out in &outputs {
                let g = gap(out);
                if g > best.0 {
                    best = (g, out.clone());
                }
            }
            let log_ratio = if best.0 == 0 { 0.0 } else { weight * best.0 as f64 };
            NeighborRatio {
                neighbor: nb,
                max_concordance_gap: best.0,
                worst_output: best.1,
                log_ratio,
            }
        })
        .collect();
    Ok(ratios)
}

/// Exact supremum of the absolute log output-probability ratio over all
/// neighbors of `base` and all outputs.
pub fn exact_epsilon(mech: &MallowsMechanism, base: &Ranking) -> Result<AuditReport> {
    let ratios = exact_neighbor_ratios(mech, base)?;
    let mut worst = &ratios[0];
    for r in &ratios[1..] {
        if r.max_concordance_gap > worst.max_concordance_gap {
            worst = r;
        }
    }
    Ok(AuditReport {
        configured_epsilon: mech.epsilon(),
        measured_epsilon: worst.log_ratio,
        mode: AuditMode::Exact,
        m: base.m(),
        samples_per_arm: None,
        worst_neighbor: worst.neighbor.clone(),
        worst_output: worst.worst_output.clone(),
        skipped_cells: None,
    })
}

/// Output histogram (indexed by lexicographic rank) of `samples` draws centred at `center`.
pub fn sample_histogram(mech: &MallowsMechanism, center: &Ranking, samples: u64, seed: u64) -> Result<Vec<u64>> {
    let m = center.m();
    let cells: usize = (1..=m).product();
    let chunks = samples.div_ceil(CHUNK);
    let partials = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng_from_seed(derive_seed(seed, &[chunk]));
            let len = CHUNK.min(samples - chunk * CHUNK);
            let mut counts = vec![0u64; cells];
            for _ in 0..len {
                counts[mech.synthesize(center, &mut rng)?.lex_index()] += 1;
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; cells];
    for p in partials {
        counts.iter_mut().zip(p).for_each(|(c, x)| *c += x);
    }
    Ok(counts)
}

/// Monte-Carlo estimate of epsilon from `samples` draws per arm.
///
/// Cells with a zero count in either arm are skipped and counted in
/// `skipped_cells`.
pub fn empirical_epsilon(mech: &MallowsMechanism, base: &Ranking, samples: u64, seed: u64) -> Result<AuditReport> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    check_cap(base.m(), EMPIRICAL_CAP)?;
    if base.m() != mech.m() {
        return Err(Error::SizeMismatch {
            expected: mech.m(),
            actual: base.m(),
        });
    }
    let neighbors: Vec<Ranking> = enumerate_neighbors(base).into_iter().map(|n| n.neighbor).collect();
    let arm_seed = |arm: usize| derive_seed(seed, &[fnv1a("audit-arm"), arm as u64]);
    let base_counts = sample_histogram(mech, base, samples, arm_seed(0))?;
    let neighbor_counts = neighbors
        .par_iter()
        .enumerate()
        .map(|(i, nb)| sample_histogram(mech, nb, samples, arm_seed(i + 1)))
        .collect::<Result<Vec<_>>>()?;

    let outputs: Vec<Ranking> = enumerate_permutations(base.m())?.collect();
    let mut measured = 0.0;
    let mut worst_neighbor = neighbors[0].clone();
    let mut worst_output = base.clone();
    let mut skipped = 0u64;
    for (nb, counts) in neighbors.iter().zip(&neighbor_counts) {
        for (cell, (&a, &b)) in base_counts.iter().zip(counts).enumerate() {
            if a == 0 || b == 0 {
                skipped += 1;
                continue;
            }
            let ratio = (a as f64 / b as f64).ln().abs();
            if ratio > measured {
                measured = ratio;
                worst_neighbor = nb.clone();
                worst_output = outputs[cell].clone();
            }
        }
    }
    Ok(AuditReport {
        configured_epsilon: mech.epsilon(),
        measured_epsilon: measured,
        mode: AuditMode::Empirical,
        m: base.m(),
        samples_per_arm: Some(samples),
        worst_neighbor,
        worst_output,
        skipped_cells: Some(skipped),
    })
}

/// Tight density-ratio bound of the Laplace mechanism, `2(m - 1) / scale`.
pub fn laplace_analytic_epsilon(mech: &LaplaceMechanism) -> f64 {
    2.0 * (mech.m() - 1) as f64 / mech.scale()
}
