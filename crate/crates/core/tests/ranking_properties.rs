mod common;

use proptest::prelude::*;
use rankdp::ranking::{
    concordant_pairs, discordant_pairs, enumerate_neighbors, enumerate_permutations, is_neighbor,
    normalized_concordance, validate_ranking, Ranking,
};
use rankdp::{induced_ranking, rng_from_seed, LaplaceMechanism, MallowsMechanism};

fn perm(max_m: usize) -> impl Strategy<Value = Vec<usize>> {
    (2..=max_m).prop_flat_map(|m| Just((1..=m).collect::<Vec<_>>()).prop_shuffle())
}

fn pair(max_m: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2..=max_m).prop_flat_map(|m| {
        let base: Vec<usize> = (1..=m).collect();
        (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
    })
}

proptest! {
    #[test]
    fn concordant_plus_discordant_is_all_pairs((a, b) in pair(12)) {
        let (ra, rb) = (Ranking::new(a.clone()).unwrap(), Ranking::new(b.clone()).unwrap());
        let m = a.len();
        let c = concordant_pairs(&ra, &rb).unwrap();
        prop_assert_eq!(c + discordant_pairs(&ra, &rb).unwrap(), m * (m - 1) / 2);
        prop_assert_eq!(c, common::concordance(&a, &b));
    }

    #[test]
    fn concordance_is_symmetric((a, b) in pair(12)) {
        let (ra, rb) = (Ranking::new(a).unwrap(), Ranking::new(b).unwrap());
        prop_assert_eq!(concordant_pairs(&ra, &rb).unwrap(), concordant_pairs(&rb, &ra).unwrap());
    }

    #[test]
    fn normalized_concordance_in_unit_interval((a, b) in pair(12)) {
        let (ra, rb) = (Ranking::new(a).unwrap(), Ranking::new(b).unwrap());
        let t = normalized_concordance(&ra, &rb).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(normalized_concordance(&ra, &ra).unwrap(), 1.0);
        prop_assert_eq!(normalized_concordance(&ra, &ra.reversed()).unwrap(), 0.0);
    }

    #[test]
    fn invert_is_an_involution(a in perm(12)) {
        let r = Ranking::new(a).unwrap();
        let order = r.invert();
        let back = Ranking::new(order.iter().map(|&item| item + 1).collect()).unwrap();
        let twice: Vec<usize> = back.invert().iter().map(|&x| x + 1).collect();
        prop_assert_eq!(twice.as_slice(), r.ranks());
        prop_assert_eq!(Ranking::from_order(&order).unwrap(), r);
    }

    #[test]
    fn validation_accepts_exactly_permutations(raw in prop::collection::vec(-2i64..8, 0..8)) {
        let m = raw.len();
        let mut sorted = raw.clone();
        sorted.sort_unstable();
        let is_perm = m >= 2 && sorted == (1..=m as i64).collect::<Vec<_>>();
        prop_assert_eq!(validate_ranking(&raw).is_ok(), is_perm);
    }

    #[test]
    fn every_enumerated_neighbor_is_a_neighbor(a in perm(8)) {
        let r = Ranking::new(a).unwrap();
        let m = r.m();
        let neighbors = enumerate_neighbors(&r);
        prop_assert_eq!(neighbors.len(), (m - 1) * (m - 1));
        for n in &neighbors {
            prop_assert!(is_neighbor(&r, &n.neighbor).unwrap());
            prop_assert!(!n.witness_items.is_empty());
        }
    }

    #[test]
    fn mechanism_outputs_are_permutations(a in perm(15), seed in any::<u64>(), eps in 0.01f64..50.0) {
        let r = Ranking::new(a).unwrap();
        let m = r.m();
        let mut rng = rng_from_seed(seed);
        let out = MallowsMechanism::new(eps, m).unwrap().synthesize(&r, &mut rng).unwrap();
        prop_assert!(Ranking::new(out.ranks().to_vec()).is_ok());
        let out = LaplaceMechanism::new(eps, m).unwrap().synthesize(&r, &mut rng).unwrap();
        prop_assert!(Ranking::new(out.ranks().to_vec()).is_ok());
    }

    #[test]
    fn induced_ranking_sorts_ascending(scores in prop::collection::vec(-1e3f64..1e3, 2..20)) {
        let r = induced_ranking(&scores).unwrap();
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if scores[i] < scores[j] || (scores[i] == scores[j] && i < j) {
                    prop_assert!(r.rank_of(i) < r.rank_of(j));
                }
            }
        }
    }
}

#[test]
fn neighbor_sets_match_brute_force() {
    for m in 2..=6 {
        for r in enumerate_permutations(m).unwrap() {
            let mut expected = common::brute_neighbors(r.ranks());
            expected.sort();
            let got: Vec<Vec<usize>> = enumerate_neighbors(&r)
                .into_iter()
                .map(|n| n.neighbor.ranks().to_vec())
                .collect();
            assert_eq!(got, expected, "m={m} base={:?}", r.ranks());
        }
    }
}

#[test]
fn permutations_are_lexicographic_and_complete() {
    for m in 2..=6 {
        let got: Vec<Vec<usize>> = enumerate_permutations(m).unwrap().map(|r| r.ranks().to_vec()).collect();
        assert_eq!(got, common::all_rank_vectors(m));
        for (k, r) in enumerate_permutations(m).unwrap().enumerate() {
            assert_eq!(r.lex_index(), k);
        }
    }
}
