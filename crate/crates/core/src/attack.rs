//! Inference attack: recovering the central ranking from repeated synthetic releases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::MallowsMechanism;
use crate::ranking::{enumerate_permutations, Ranking, ENUMERATION_CAP};
use crate::rng::{cell_seed, rng_from_seed};

/// `N` synthetic rankings released from one central ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSample {
    rankings: Vec<Ranking>,
    epsilon: f64,
    m: usize,
}

impl AttackSample {
    pub fn new(rankings: Vec<Ranking>, epsilon: f64) -> Result<Self> {
        let m = rankings.first().ok_or(Error::EmptySample)?.m();
        if let Some(bad) = rankings.iter().find(|r| r.m() != m) {
            return Err(Error::SizeMismatch {
                expected: m,
                actual: bad.m(),
            });
        }
        Ok(AttackSample { rankings, epsilon, m })
    }

    /// Draws `n` releases of `center` from `mech`.
    pub fn draw<R: rand::Rng + ?Sized>(
        mech: &MallowsMechanism,
        center: &Ranking,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let rankings = (0..n)
            .map(|_| mech.synthesize(center, rng))
            .collect::<Result<Vec<_>>>()?;
        AttackSample::new(rankings, mech.epsilon())
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// `above[i][j]` = number of releases ranking item `i` above item `j`.
    pub fn pairwise_counts(&self) -> Vec<Vec<u64>> {
        let m = self.m;
        let mut above = vec![vec![0u64; m]; m];
        for r in &self.rankings {
            for i in 0..m {
                for j in 0..m {
                    if r.rank_of(i) > r.rank_of(j) {
                        above[i][j] += 1;
                    }
                }
            }
        }
        above
    }
}

/// How epsilon scales with the number of releases `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `epsilon = c`
    Fixed,
    /// `epsilon = c (m - 1) / sqrt(N)`
    Sqrt,
    /// `epsilon = c (m - 1) ln(N) / sqrt(N)`
    LogSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub kind: ScheduleKind,
    pub c: f64,
}

impl EpsilonSchedule {
    pub fn new(kind: ScheduleKind, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidConfig(format!("schedule scale must be positive, got {c}")));
        }
        Ok(EpsilonSchedule { kind, c })
    }

    pub fn fixed(epsilon: f64) -> Result<Self> {
        EpsilonSchedule::new(ScheduleKind::Fixed, epsilon)
    }

    pub fn epsilon(&self, m: usize, n: usize) -> f64 {
        let scale = (m - 1) as f64 / (n as f64).sqrt();
        match self.kind {
            ScheduleKind::Fixed => self.c,
            ScheduleKind::Sqrt => self.c * scale,
            ScheduleKind::LogSqrt => self.c * scale * (n as f64).ln(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScheduleKind::Fixed => "fixed",
            ScheduleKind::Sqrt => "sqrt",
            ScheduleKind::LogSqrt => "logsqrt",
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(ScheduleKind::Fixed),
            "sqrt" => Ok(ScheduleKind::Sqrt),
            "logsqrt" => Ok(ScheduleKind::LogSqrt),
            other => Err(Error::InvalidConfig(format!("unknown schedule '{other}'"))),
        }
    }
}

/// Total concordance `sum_s C(candidate, s)` from pairwise counts.
pub fn total_concordance(above: &[Vec<u64>], candidate: &Ranking) -> u64 {
    let m = candidate.m();
    let mut score = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            score += if candidate.rank_of(i) > candidate.rank_of(j) {
                above[i][j]
            } else {
                above[j][i]
            };
        }
    }
    score
}

/// Maximum-likelihood central ranking: the permutation with the largest total
/// concordance with the sample. Ties go to the lexicographically smallest rank
/// vector. The result does not depend on epsilon.
pub fn mle_central_ranking(sample: &AttackSample) -> Result<Ranking> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let m = sample.m();
    if m > ENUMERATION_CAP {
        return Err(Error::CapExceeded { m, cap: ENUMERATION_CAP });
    }
    let above = sample.pairwise_counts();
    let mut best: Option<(u64, Ranking)> = None;
    for candidate in enumerate_permutations(m)? {
        let score = total_concordance(&above, &candidate);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, candidate));
        }
    }
    Ok(best.expect("at least one permutation").1)
}

/// Ranks items by mean observed rank (lowest mean gets rank 1), index tie-break.
pub fn borda_aggregate(sample: &AttackSample) -> Result<Ranking> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let m = sample.m();
    let mut totals = vec![0u64; m];
    for r in sample.rankings() {
        for (t, &rank) in totals.iter_mut().zip(r.ranks()) {
            *t += rank as u64;
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (totals[i], i));
    Ranking::from_order(&order)
}

/// One row of the attack experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub schedule: String,
    pub replications: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Monte-Carlo probability that the MLE misses the identity central ranking.
///
/// Replication `r` at sample size `N` uses the generator seeded with
/// `cell_seed(base_seed, "attack", m, epsilon, N, r)`. Duplicate grid values are dropped.
pub fn attack_error_probability(
    m: usize,
    schedule: EpsilonSchedule,
    n_grid: &[usize],
    replications: usize,
    base_seed: u64,
) -> Result<Vec<AttackRow>> {
    if m > ENUMERATION_CAP {
        return Err(Error::CapExceeded { m, cap: ENUMERATION_CAP });
    }
    if replications == 0 {
        return Err(Error::InvalidConfig("replications must be >= 1".into()));
    }
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::InvalidConfig("N grid must be nonempty and positive".into()));
    }
    let center = Ranking::identity(m)?;
    let mut grid: Vec<usize> = Vec::new();
    for &n in n_grid {
        if !grid.contains(&n) {
            grid.push(n);
        }
    }
    grid.iter()
        .map(|&n| {
            let epsilon = schedule.epsilon(m, n);
            let mech = MallowsMechanism::new(epsilon, m)?;
            let misses = (0..replications)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = rng_from_seed(cell_seed(base_seed, "attack", m, epsilon, n, rep));
                    let sample = AttackSample::draw(&mech, &center, n, &mut rng)?;
                    Ok(mle_central_ranking(&sample)? != center)
                })
                .collect::<Result<Vec<bool>>>()?;
            let errors = misses.iter().filter(|&&x| x).count();
            let rate = errors as f64 / replications as f64;
            Ok(AttackRow {
                m,
                n,
                epsilon,
                schedule: schedule.name().to_string(),
                replications,
                errors,
                error_rate: rate,
                stderr: (rate * (1.0 - rate) / replications as f64).sqrt(),
                seed: base_seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::concordant_pairs;

    fn r(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    fn sample(v: &[&[usize]]) -> AttackSample {
        AttackSample::new(v.iter().map(|x| r(x)).collect(), 1.0).unwrap()
    }

    #[test]
    fn identical_samples_are_recovered() {
        let s = sample(&[&[3, 1, 2, 4], &[3, 1, 2, 4], &[3, 1, 2, 4]]);
        assert_eq!(mle_central_ranking(&s).unwrap(), r(&[3, 1, 2, 4]));
        assert_eq!(borda_aggregate(&s).unwrap(), r(&[3, 1, 2, 4]));
    }

    #[test]
    fn small_examples() {
        let s = sample(&[&[1, 2, 3], &[1, 2, 3], &[2, 1, 3]]);
        assert_eq!(mle_central_ranking(&s).unwrap(), r(&[1, 2, 3]));
        // [1,2,3] and [2,1,3] both score 5; lexicographic tie-break
        let s = sample(&[&[1, 2, 3], &[2, 1, 3]]);
        let above = s.pairwise_counts();
        assert_eq!(total_concordance(&above, &r(&[1, 2, 3])), 5);
        assert_eq!(total_concordance(&above, &r(&[2, 1, 3])), 5);
        assert_eq!(mle_central_ranking(&s).unwrap(), r(&[1, 2, 3]));
    }

    #[test]
    fn single_sample_borda() {
        let s = sample(&[&[2, 3, 1]]);
        assert_eq!(borda_aggregate(&s).unwrap(), r(&[2, 3, 1]));
    }

    #[test]
    fn errors() {
        assert_eq!(AttackSample::new(vec![], 1.0), Err(Error::EmptySample));
        assert!(matches!(
            AttackSample::new(vec![r(&[1, 2]), r(&[1, 2, 3])], 1.0),
            Err(Error::SizeMismatch { .. })
        ));
        let big = sample(&[&[1, 2, 3, 4, 5, 6, 7, 8, 9]]);
        assert!(matches!(mle_central_ranking(&big), Err(Error::CapExceeded { .. })));
        let sched = EpsilonSchedule::fixed(1.0).unwrap();
        assert!(attack_error_probability(9, sched, &[10], 1, 0).is_err());
        assert!(attack_error_probability(3, sched, &[10], 0, 0).is_err());
        assert!(EpsilonSchedule::new(ScheduleKind::Sqrt, 0.0).is_err());
    }

    #[test]
    fn mle_matches_direct_concordance_sum() {
        let mech = MallowsMechanism::new(0.8, 5).unwrap();
        let center = r(&[2, 5, 3, 1, 4]);
        let mut rng = rng_from_seed(17);
        let s = AttackSample::draw(&mech, &center, 15, &mut rng).unwrap();
        let best = mle_central_ranking(&s).unwrap();
        let direct = |c: &Ranking| -> usize {
            s.rankings().iter().map(|x| concordant_pairs(c, x).unwrap()).sum()
        };
        let top = direct(&best);
        for cand in enumerate_permutations(5).unwrap() {
            let v = direct(&cand);
            assert!(v <= top);
            if v == top {
                assert!(best <= cand);
            }
        }
    }

    #[test]
    fn schedules() {
        let s = EpsilonSchedule::new(ScheduleKind::Sqrt, 1.0).unwrap();
        assert!((s.epsilon(3, 100) - 0.2).abs() < 1e-15);
        let s = EpsilonSchedule::new(ScheduleKind::LogSqrt, 1.0).unwrap();
        assert!((s.epsilon(3, 100) - 0.2 * 100f64.ln()).abs() < 1e-14);
        assert_eq!(EpsilonSchedule::fixed(4.0).unwrap().epsilon(5, 77), 4.0);
        assert_eq!("logsqrt".parse::<ScheduleKind>().unwrap(), ScheduleKind::LogSqrt);
        assert!("cubic".parse::<ScheduleKind>().is_err());
    }

    #[test]
    fn grid_is_deduplicated_and_deterministic() {
        let sched = EpsilonSchedule::fixed(2.0).unwrap();
        let a = attack_error_probability(3, sched, &[10, 20, 10], 50, 7).unwrap();
        assert_eq!(a.iter().map(|r| r.n).collect::<Vec<_>>(), vec![10, 20]);
        let b = attack_error_probability(3, sched, &[10, 20], 50, 7).unwrap();
        assert_eq!(a, b);
    }
}
