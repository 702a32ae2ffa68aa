//! Simulated user/item data and per-user privatization.
//!
//! Preferences follow `r_ui = alpha·x_u + beta·y_i` with features drawn from
//! `Unif(-3, 3)`. A user's ranking is the rank of each item in ASCENDING score
//! order, so the highest-scored item gets rank `m` and `rank_i > rank_j`
//! exactly when the user prefers item `i` to item `j`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mechanisms::{induced_ranking, LaplaceMechanism, MallowsMechanism, MechanismKind};
use crate::ranking::Ranking;
use crate::rng::{derive_seed, fnv1a, rng_from_seed};

use super::model::dot;

pub const FEATURE_LOW: f64 = -3.0;
pub const FEATURE_HIGH: f64 = 3.0;

/// Users, items, their preference scores and the induced rankings.
#[derive(Debug, Clone, PartialEq)]
pub struct UserItemData {
    pub user_features: Vec<Vec<f64>>,
    pub item_features: Vec<Vec<f64>>,
    /// `n x m`, empty when the data did not come from a known generator.
    pub true_scores: Vec<Vec<f64>>,
    pub rankings: Vec<Ranking>,
    /// Per-user budgets; `None` means one global budget.
    pub per_user_epsilon: Option<Vec<f64>>,
}

impl UserItemData {
    pub fn n_users(&self) -> usize {
        self.user_features.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_features.len()
    }

    /// Checks that features, scores and rankings agree in shape.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_users();
        let m = self.n_items();
        if self.rankings.len() != n {
            return Err(Error::BadDimensions(format!("{} rankings for {n} users", self.rankings.len())));
        }
        if let Some(r) = self.rankings.iter().find(|r| r.m() != m) {
            return Err(Error::BadDimensions(format!("ranking over {} items, expected {m}", r.m())));
        }
        check_rectangular(&self.user_features, "user features")?;
        check_rectangular(&self.item_features, "item features")?;
        if !self.true_scores.is_empty()
            && (self.true_scores.len() != n || self.true_scores.iter().any(|row| row.len() != m))
        {
            return Err(Error::BadDimensions("score matrix must be n x m".into()));
        }
        if let Some(eps) = &self.per_user_epsilon {
            if eps.len() != n {
                return Err(Error::BadDimensions(format!("{} budgets for {n} users", eps.len())));
            }
        }
        Ok(())
    }

    /// A view for training or evaluation.
    pub fn task(&self) -> RankingTask<'_> {
        RankingTask {
            user_features: &self.user_features,
            item_features: &self.item_features,
            rankings: &self.rankings,
        }
    }
}

fn check_rectangular(rows: &[Vec<f64>], what: &str) -> Result<()> {
    if let Some(first) = rows.first() {
        if first.is_empty() || rows.iter().any(|r| r.len() != first.len()) {
            return Err(Error::BadDimensions(format!("{what} must be a nonempty rectangular matrix")));
        }
    }
    Ok(())
}

/// Borrowed features plus the rankings to learn from or evaluate against.
#[derive(Debug, Clone, Copy)]
pub struct RankingTask<'a> {
    pub user_features: &'a [Vec<f64>],
    pub item_features: &'a [Vec<f64>],
    pub rankings: &'a [Ranking],
}

/// Parameters of the linear preference generator.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGenerator {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LinearGenerator {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || beta.is_empty() {
            return Err(Error::BadDimensions("generator weights must be nonempty".into()));
        }
        Ok(LinearGenerator { alpha, beta })
    }

    pub fn score(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.alpha, x) + dot(&self.beta, y)
    }
}

fn uniform_rows<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(FEATURE_LOW..FEATURE_HIGH)).collect())
        .collect()
}

/// Generates `m` items and `n` users with features of dimension `alpha.len()` and `beta.len()`.
pub fn generate_dataset<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    generator: &LinearGenerator,
    rng: &mut R,
) -> Result<UserItemData> {
    if m < 2 {
        return Err(Error::BadDimensions(format!("need at least 2 items, got {m}")));
    }
    let item_features = uniform_rows(m, generator.beta.len(), rng);
    generate_users(n, item_features, generator, rng)
}

/// Generates `n` users against a fixed item catalog.
pub fn generate_users<R: Rng + ?Sized>(
    n: usize,
    item_features: Vec<Vec<f64>>,
    generator: &LinearGenerator,
    rng: &mut R,
) -> Result<UserItemData> {
    if n == 0 {
        return Err(Error::BadDimensions("need at least 1 user".into()));
    }
    if item_features.len() < 2 || item_features.iter().any(|y| y.len() != generator.beta.len()) {
        return Err(Error::BadDimensions("item features do not match the generator".into()));
    }
    let user_features = uniform_rows(n, generator.alpha.len(), rng);
    let true_scores: Vec<Vec<f64>> = user_features
        .iter()
        .map(|x| item_features.iter().map(|y| generator.score(x, y)).collect())
        .collect();
    let rankings = true_scores
        .iter()
        .map(|row| induced_ranking(row))
        .collect::<Result<Vec<_>>>()?;
    Ok(UserItemData {
        user_features,
        item_features,
        true_scores,
        rankings,
        per_user_epsilon: None,
    })
}

/// Seed of user `u`'s privatization stream.
pub fn user_seed(base_seed: u64, user: usize) -> u64 {
    derive_seed(base_seed, &[fnv1a("privatize"), user as u64])
}

/// Privatizes one ranking.
pub fn privatize_one(ranking: &Ranking, kind: MechanismKind, epsilon: f64, seed: u64) -> Result<Ranking> {
    let mut rng = rng_from_seed(seed);
    match kind {
        MechanismKind::Mallows => MallowsMechanism::new(epsilon, ranking.m())?.synthesize(ranking, &mut rng),
        MechanismKind::Laplace => LaplaceMechanism::new(epsilon, ranking.m())?.synthesize(ranking, &mut rng),
    }
}

/// Privatizes every ranking with its own budget and its own seed.
pub fn privatize_rankings(
    rankings: &[Ranking],
    epsilons: &[f64],
    kind: MechanismKind,
    seeds: &[u64],
) -> Result<Vec<Ranking>> {
    if rankings.len() != epsilons.len() || rankings.len() != seeds.len() {
        return Err(Error::BadDimensions("rankings, budgets and seeds must align".into()));
    }
    rankings
        .par_iter()
        .zip(epsilons)
        .zip(seeds)
        .map(|((r, &eps), &seed)| privatize_one(r, kind, eps, seed))
        .collect()
}

/// Privatizes a dataset. Users without a personal budget get `default_epsilon`;
/// user `u` draws from the stream seeded with [`user_seed`]`(base_seed, u)`.
pub fn privatize_dataset(
    data: &UserItemData,
    kind: MechanismKind,
    default_epsilon: f64,
    base_seed: u64,
) -> Result<Vec<Ranking>> {
    data.validate()?;
    let n = data.n_users();
    let epsilons = data
        .per_user_epsilon
        .clone()
        .unwrap_or_else(|| vec![default_epsilon; n]);
    let seeds: Vec<u64> = (0..n).map(|u| user_seed(base_seed, u)).collect();
    privatize_rankings(&data.rankings, &epsilons, kind, &seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_generator_gives_identity() {
        let g = LinearGenerator::new(vec![0.0; 4], vec![0.0; 4]).unwrap();
        let d = generate_dataset(5, 6, &g, &mut rng_from_seed(1)).unwrap();
        assert!(d.rankings.iter().all(|r| *r == Ranking::identity(6).unwrap()));
        assert!(d.true_scores.iter().flatten().all(|&s| s == 0.0));
    }

    #[test]
    fn rankings_follow_ascending_scores() {
        let g = LinearGenerator::new(vec![1.0; 4], vec![0.5, -1.0, 2.0, 0.3]).unwrap();
        let d = generate_dataset(20, 7, &g, &mut rng_from_seed(2)).unwrap();
        d.validate().unwrap();
        for (row, r) in d.true_scores.iter().zip(&d.rankings) {
            for i in 0..7 {
                for j in 0..7 {
                    if row[i] > row[j] {
                        assert!(r.rank_of(i) > r.rank_of(j));
                    }
                }
            }
        }
    }

    #[test]
    fn feature_moments() {
        let g = LinearGenerator::new(vec![1.0; 4], vec![1.0; 4]).unwrap();
        let d = generate_dataset(5000, 3, &g, &mut rng_from_seed(3)).unwrap();
        let vals: Vec<f64> = d.user_features.iter().flatten().copied().collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        // Var(Unif(-3,3)) = 3
        assert!(mean.abs() < 3.0 * (3.0 / n).sqrt());
        assert!(vals.iter().all(|v| (-3.0..3.0).contains(v)));
    }

    #[test]
    fn bad_dimensions() {
        let g = LinearGenerator::new(vec![1.0; 4], vec![1.0; 4]).unwrap();
        assert!(generate_dataset(5, 1, &g, &mut rng_from_seed(0)).is_err());
        assert!(generate_dataset(0, 4, &g, &mut rng_from_seed(0)).is_err());
        assert!(LinearGenerator::new(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn huge_budget_is_nearly_lossless() {
        let g = LinearGenerator::new(vec![1.0; 4], vec![1.0, -2.0, 0.5, 1.5]).unwrap();
        let d = generate_dataset(100, 15, &g, &mut rng_from_seed(4)).unwrap();
        for kind in [MechanismKind::Mallows, MechanismKind::Laplace] {
            let syn = privatize_dataset(&d, kind, 1e3, 9).unwrap();
            let same = syn.iter().zip(&d.rankings).filter(|(a, b)| a == b).count();
            assert!(same >= 99, "{kind:?}: {same}");
        }
    }

    #[test]
    fn swapping_user_seeds_swaps_outputs() {
        let g = LinearGenerator::new(vec![1.0; 4], vec![1.0; 4]).unwrap();
        let d = generate_dataset(2, 6, &g, &mut rng_from_seed(6)).unwrap();
        let rankings = vec![d.rankings[0].clone(), d.rankings[0].clone()];
        let eps = [1.0, 1.0];
        let a = privatize_rankings(&rankings, &eps, MechanismKind::Mallows, &[11, 22]).unwrap();
        let b = privatize_rankings(&rankings, &eps, MechanismKind::Mallows, &[22, 11]).unwrap();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[0]);
    }
}
