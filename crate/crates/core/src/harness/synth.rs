//! Privatizing a ranking dataset.

use crate::error::{Error, Result};
use crate::learn::data::{privatize_rankings, user_seed};
use crate::learn::ingest::RankingDataset;
use crate::mechanisms::MechanismKind;

/// One synthetic ranking per input row. A per-user `epsilon` column takes
/// precedence over `epsilon`; row `u` uses seed `user_seed(seed, u)`.
pub fn synthesize_dataset(
    data: &RankingDataset,
    epsilon: Option<f64>,
    mechanism: MechanismKind,
    seed: u64,
) -> Result<RankingDataset> {
    let budgets = match (&data.epsilons, epsilon) {
        (Some(e), _) => e.clone(),
        (None, Some(e)) => vec![e; data.len()],
        (None, None) if data.is_empty() => Vec::new(),
        (None, None) => {
            return Err(Error::InvalidConfig(
                "no epsilon given and the input has no epsilon column".into(),
            ))
        }
    };
    let seeds: Vec<u64> = (0..data.len()).map(|u| user_seed(seed, u)).collect();
    let rankings = privatize_rankings(&data.rankings, &budgets, mechanism, &seeds)?;
    Ok(RankingDataset {
        user_ids: data.user_ids.clone(),
        rankings,
        epsilons: data.epsilons.clone(),
        item_labels: data.item_labels.clone(),
    })
}
