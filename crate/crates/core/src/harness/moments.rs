//! Empirical moments of the stage insertion positions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::MallowsMechanism;
use crate::ranking::Ranking;
use crate::rng::{cell_seed, derive_seed, rng_from_seed};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageMoments {
    pub t: usize,
    pub empirical_mean: f64,
    pub closed_form_mean: f64,
    pub mean_se: f64,
    pub empirical_variance: f64,
    pub closed_form_variance: f64,
    pub variance_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageMomentsReport {
    pub m: usize,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub stages: Vec<StageMoments>,
}

/// Draws `samples` syntheses of the identity ranking and compares the stage
/// draws with their closed-form mean and variance.
pub fn stage_moments(m: usize, epsilon: f64, samples: usize, base_seed: u64) -> Result<StageMomentsReport> {
    if samples < 2 {
        return Err(Error::ZeroSamples);
    }
    let mech = MallowsMechanism::new(epsilon, m)?;
    let center = Ranking::identity(m)?;
    let seed = cell_seed(base_seed, "stage-moments", m, epsilon, samples, 0);
    let chunks = samples.div_ceil(CHUNK);
    // per stage: raw power sums of V for powers 1..=4
    let partials = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng_from_seed(derive_seed(seed, &[chunk as u64]));
            let len = CHUNK.min(samples - chunk * CHUNK);
            let mut sums = vec![[0u64; 4]; m - 1];
            for _ in 0..len {
                let (_, draws) = mech.synthesize_traced(&center, &mut rng)?;
                for (acc, &v) in sums.iter_mut().zip(&draws) {
                    let v = v as u64;
                    acc[0] += v;
                    acc[1] += v * v;
                    acc[2] += v * v * v;
                    acc[3] += v * v * v * v;
                }
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut totals = vec![[0u64; 4]; m - 1];
    for p in partials {
        for (t, s) in totals.iter_mut().zip(p) {
            for k in 0..4 {
                t[k] += s[k];
            }
        }
    }

    let n = samples as f64;
    let stages = totals
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            let t = idx + 2;
            let (cf_mean, cf_var) = mech.expected_stage_position(t)?;
            let [m1, m2, m3, m4] = s.map(|x| x as f64 / n);
            let var_pop = m2 - m1 * m1;
            let variance = var_pop * n / (n - 1.0);
            let central4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
            Ok(StageMoments {
                t,
                empirical_mean: m1,
                closed_form_mean: cf_mean,
                mean_se: (variance / n).sqrt(),
                empirical_variance: variance,
                closed_form_variance: cf_var,
                variance_se: ((central4 - var_pop * var_pop).max(0.0) / n).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StageMomentsReport {
        m,
        epsilon,
        samples,
        seed: base_seed,
        stages,
    })
}
