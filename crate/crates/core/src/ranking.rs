//! Permutation primitives.
//!
//! A [`Ranking`] stores, for every item `i` (0-based), its rank `ranks[i]` in
//! `1..=m`. Items are always 0-based indices; ranks are always 1-based.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `m` for which `m!`-sized enumerations are allowed.
pub const ENUMERATION_CAP: usize = 8;

/// A strict total order over `m >= 2` items, stored as a rank vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ranking {
    ranks: Vec<usize>,
}

impl Ranking {
    /// Validates a raw rank vector.
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let m = ranks.len();
        if m < 2 {
            return Err(Error::TooShort(m));
        }
        let mut seen = vec![false; m];
        for (item, &r) in ranks.iter().enumerate() {
            if r == 0 || r > m {
                return Err(Error::NotAPermutation {
                    m,
                    reason: format!("rank {r} of item {item} is out of range"),
                });
            }
            if std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::NotAPermutation {
                    m,
                    reason: format!("rank {r} appears more than once"),
                });
            }
        }
        Ok(Ranking { ranks })
    }

    /// The ranking where item `i` has rank `i + 1`.
    pub fn identity(m: usize) -> Result<Self> {
        Ranking::new((1..=m).collect())
    }

    /// Builds a ranking from an item order: `order[k]` is the item holding rank `k + 1`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let m = order.len();
        if m < 2 {
            return Err(Error::TooShort(m));
        }
        let mut ranks = vec![0usize; m];
        for (pos, &item) in order.iter().enumerate() {
            if item >= m || ranks[item] != 0 {
                return Err(Error::NotAPermutation {
                    m,
                    reason: format!("item {item} is out of range or repeated"),
                });
            }
            ranks[item] = pos + 1;
        }
        Ok(Ranking { ranks })
    }

    pub(crate) fn from_ranks_unchecked(ranks: Vec<usize>) -> Self {
        debug_assert!(Ranking::new(ranks.clone()).is_ok());
        Ranking { ranks }
    }

    pub fn m(&self) -> usize {
        self.ranks.len()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank_of(&self, item: usize) -> usize {
        self.ranks[item]
    }

    pub fn into_ranks(self) -> Vec<usize> {
        self.ranks
    }

    /// Items ordered by rank: `result[k - 1]` is the item with rank `k`.
    pub fn invert(&self) -> Vec<usize> {
        let mut order = vec![0usize; self.m()];
        for (item, &r) in self.ranks.iter().enumerate() {
            order[r - 1] = item;
        }
        order
    }

    /// The ranking obtained by reversing every pairwise order.
    pub fn reversed(&self) -> Ranking {
        let m = self.m();
        Ranking {
            ranks: self.ranks.iter().map(|&r| m + 1 - r).collect(),
        }
    }

    /// Position of this rank vector in the lexicographic order of all `m!` rank vectors.
    pub fn lex_index(&self) -> usize {
        let m = self.m();
        let mut index = 0usize;
        for i in 0..m {
            let smaller_after = self.ranks[i + 1..]
                .iter()
                .filter(|&&r| r < self.ranks[i])
                .count();
            index = index * (m - i) + smaller_after;
        }
        index
    }

    /// The relative order of items `i` and `j`.
    pub fn pair_order(&self, i: usize, j: usize) -> ItemPairOrder {
        ItemPairOrder {
            i,
            j,
            i_above_j: self.ranks[i] > self.ranks[j],
        }
    }
}

impl TryFrom<Vec<usize>> for Ranking {
    type Error = Error;

    fn try_from(ranks: Vec<usize>) -> Result<Self> {
        Ranking::new(ranks)
    }
}

impl From<Ranking> for Vec<usize> {
    fn from(r: Ranking) -> Self {
        r.ranks
    }
}

impl fmt::Debug for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ranking{:?}", self.ranks)
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.ranks)
    }
}

/// Validates a raw integer sequence as a ranking.
pub fn validate_ranking(raw: &[i64]) -> Result<Ranking> {
    let m = raw.len();
    if m < 2 {
        return Err(Error::TooShort(m));
    }
    let ranks = raw
        .iter()
        .map(|&r| {
            usize::try_from(r).map_err(|_| Error::NotAPermutation {
                m,
                reason: format!("rank {r} is negative"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ranking::new(ranks)
}

/// Relative order of an item pair under one ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemPairOrder {
    pub i: usize,
    pub j: usize,
    /// `ranks[i] > ranks[j]`
    pub i_above_j: bool,
}

fn check_same_size(a: &Ranking, b: &Ranking) -> Result<()> {
    if a.m() != b.m() {
        return Err(Error::SizeMismatch {
            expected: a.m(),
            actual: b.m(),
        });
    }
    Ok(())
}

/// Number of unordered item pairs ordered the same way by both rankings.
pub fn concordant_pairs(a: &Ranking, b: &Ranking) -> Result<usize> {
    check_same_size(a, b)?;
    Ok(concordant_unchecked(a.ranks(), b.ranks()))
}

/// Number of unordered item pairs ordered differently by the two rankings.
pub fn discordant_pairs(a: &Ranking, b: &Ranking) -> Result<usize> {
    check_same_size(a, b)?;
    let m = a.m();
    Ok(m * (m - 1) / 2 - concordant_unchecked(a.ranks(), b.ranks()))
}

pub(crate) fn concordant_unchecked(a: &[usize], b: &[usize]) -> usize {
    let m = a.len();
    let mut count = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            if (a[i] > a[j]) == (b[i] > b[j]) {
                count += 1;
            }
        }
    }
    count
}

/// Concordant ordered-pair fraction `2C / (m(m-1))`, in `[0, 1]`.
pub fn normalized_concordance(a: &Ranking, b: &Ranking) -> Result<f64> {
    let c = concordant_pairs(a, b)?;
    let m = a.m() as f64;
    Ok(2.0 * c as f64 / (m * (m - 1.0)))
}

/// Iterator over all `m!` rankings in lexicographic order of their rank vectors.
#[derive(Debug, Clone)]
pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Iterator for Permutations {
    type Item = Ranking;

    fn next(&mut self) -> Option<Ranking> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if next_permutation(&mut succ) {
            self.next = Some(succ);
        }
        Some(Ranking::from_ranks_unchecked(current))
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Enumerates every ranking of `m` items, `m <= ENUMERATION_CAP`.
pub fn enumerate_permutations(m: usize) -> Result<Permutations> {
    enumerate_permutations_with_cap(m, ENUMERATION_CAP)
}

pub fn enumerate_permutations_with_cap(m: usize, cap: usize) -> Result<Permutations> {
    if m > cap {
        return Err(Error::CapExceeded { m, cap });
    }
    if m < 2 {
        return Err(Error::TooShort(m));
    }
    Ok(Permutations {
        next: Some((1..=m).collect()),
    })
}

/// A neighboring ranking together with every item whose removal makes the two
/// rankings agree on all remaining pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborWitness {
    pub neighbor: Ranking,
    pub witness_items: Vec<usize>,
}

/// All distinct neighbors of `r`, sorted by rank vector.
///
/// Each neighbor comes from lifting one item out of the order and reinserting it
/// at a different position. Adjacent swaps arise from both items involved, so
/// there are `(m-1)^2` distinct neighbors.
pub fn enumerate_neighbors(r: &Ranking) -> Vec<NeighborWitness> {
    let order = r.invert();
    let m = order.len();
    let mut found: BTreeMap<Ranking, Vec<usize>> = BTreeMap::new();
    for from in 0..m {
        let item = order[from];
        let mut rest = order.clone();
        rest.remove(from);
        for to in 0..m {
            if to == from {
                continue;
            }
            let mut moved = rest.clone();
            moved.insert(to, item);
            let neighbor = Ranking::from_order(&moved).expect("reinsertion preserves a permutation");
            let witnesses = found.entry(neighbor).or_default();
            if !witnesses.contains(&item) {
                witnesses.push(item);
            }
        }
    }
    found
        .into_iter()
        .map(|(neighbor, mut witness_items)| {
            witness_items.sort_unstable();
            NeighborWitness {
                neighbor,
                witness_items,
            }
        })
        .collect()
}

/// Returns the witness items if `a` and `b` are distinct neighbors, `None` otherwise.
pub fn neighbor_witnesses(a: &Ranking, b: &Ranking) -> Result<Option<Vec<usize>>> {
    check_same_size(a, b)?;
    let m = a.m();
    // k is a witness iff it takes part in every discordant pair.
    let mut candidates: Option<Vec<usize>> = None;
    for i in 0..m {
        for j in (i + 1)..m {
            if (a.ranks[i] > a.ranks[j]) != (b.ranks[i] > b.ranks[j]) {
                let next = match candidates {
                    None => vec![i, j],
                    Some(c) => c.into_iter().filter(|&k| k == i || k == j).collect(),
                };
                if next.is_empty() {
                    return Ok(None);
                }
                candidates = Some(next);
            }
        }
    }
    Ok(candidates)
}

pub fn is_neighbor(a: &Ranking, b: &Ranking) -> Result<bool> {
    Ok(neighbor_witnesses(a, b)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert_eq!(validate_ranking(&[3, 1, 2]).unwrap().m(), 3);
        assert!(matches!(
            validate_ranking(&[1, 1, 2]),
            Err(Error::NotAPermutation { .. })
        ));
        assert_eq!(validate_ranking(&[2]), Err(Error::TooShort(1)));
        assert!(matches!(
            validate_ranking(&[0, 1]),
            Err(Error::NotAPermutation { .. })
        ));
        assert!(matches!(
            validate_ranking(&[-1, 1]),
            Err(Error::NotAPermutation { .. })
        ));
        assert!(matches!(
            validate_ranking(&[1, 4, 2]),
            Err(Error::NotAPermutation { .. })
        ));
    }

    #[test]
    fn invert_examples() {
        assert_eq!(r(&[2, 1, 3]).invert(), vec![1, 0, 2]);
        assert_eq!(r(&[1, 2, 3, 4]).invert(), vec![0, 1, 2, 3]);
        assert_eq!(r(&[3, 1, 2]).invert(), vec![1, 2, 0]);
        let x = r(&[4, 1, 3, 2]);
        assert_eq!(Ranking::from_order(&x.invert()).unwrap(), x);
    }

    #[test]
    fn concordance_examples() {
        let a = r(&[1, 2, 3, 4, 5]);
        assert_eq!(concordant_pairs(&a, &a).unwrap(), 10);
        assert_eq!(concordant_pairs(&r(&[1, 2, 3]), &r(&[3, 2, 1])).unwrap(), 0);
        assert_eq!(concordant_pairs(&r(&[1, 2, 3]), &r(&[2, 1, 3])).unwrap(), 2);
        assert_eq!(normalized_concordance(&a, &a).unwrap(), 1.0);
        assert_eq!(normalized_concordance(&a, &a.reversed()).unwrap(), 0.0);
        let t = normalized_concordance(&r(&[1, 2, 3]), &r(&[2, 1, 3])).unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            concordant_pairs(&r(&[1, 2]), &r(&[1, 2, 3])),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_counts_and_order() {
        let all: Vec<_> = enumerate_permutations(2).unwrap().collect();
        assert_eq!(all, vec![r(&[1, 2]), r(&[2, 1])]);
        assert_eq!(enumerate_permutations(3).unwrap().count(), 6);
        assert_eq!(enumerate_permutations(8).unwrap().count(), 40320);
        assert_eq!(
            enumerate_permutations(9).unwrap_err(),
            Error::CapExceeded { m: 9, cap: 8 }
        );
        for (idx, p) in enumerate_permutations(5).unwrap().enumerate() {
            assert_eq!(p.lex_index(), idx);
        }
    }

    #[test]
    fn neighbors_of_two_items() {
        let ns = enumerate_neighbors(&r(&[1, 2]));
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0].neighbor, r(&[2, 1]));
        assert_eq!(ns[0].witness_items, vec![0, 1]);
    }

    #[test]
    fn neighbors_of_three_items_match_brute_force() {
        let base = r(&[1, 2, 3]);
        let ns = enumerate_neighbors(&base);
        // reversal is the only non-identity permutation that is not a neighbor
        assert_eq!(ns.len(), 4);
        assert!(ns.iter().all(|n| n.neighbor != base.reversed()));
    }

    #[test]
    fn is_neighbor_examples() {
        let a = r(&[1, 2, 3]);
        assert_eq!(
            neighbor_witnesses(&a, &r(&[2, 1, 3])).unwrap(),
            Some(vec![0, 1])
        );
        assert_eq!(neighbor_witnesses(&a, &r(&[3, 2, 1])).unwrap(), None);
        assert!(!is_neighbor(&a, &a).unwrap());
        assert_eq!(
            neighbor_witnesses(&a, &r(&[3, 1, 2])).unwrap(),
            Some(vec![0])
        );
    }
}
