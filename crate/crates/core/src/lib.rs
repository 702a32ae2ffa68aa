//! Ranking differential privacy.
//!
//! A multistage Mallows synthesizer for rankings, a Laplace baseline, exact and
//! empirical privacy audits, a central-ranking inference attack, and a pairwise
//! ranking learner trained on privatized rankings.
//!
//! A ranking of `m` items is stored as a rank vector: `ranks[i]` is the 1-based
//! rank of item `i`.
//!
//! ```
//! use rankdp::{concordant_pairs, rng_from_seed, MallowsMechanism, Ranking};
//!
//! let truth = Ranking::new(vec![2, 1, 3, 4]).unwrap();
//! let mech = MallowsMechanism::new(2.0, 4).unwrap();
//! let synthetic = mech.synthesize(&truth, &mut rng_from_seed(7)).unwrap();
//! assert!(concordant_pairs(&truth, &synthetic).unwrap() <= 6);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attack;
pub mod audit;
pub mod error;
pub mod harness;
pub mod learn;
pub mod mechanisms;
pub mod ranking;
pub mod rng;

pub use attack::{
    attack_error_probability, borda_aggregate, mle_central_ranking, AttackRow, AttackSample, EpsilonSchedule,
    ScheduleKind,
};
pub use audit::{empirical_epsilon, exact_epsilon, AuditMode, AuditReport};
pub use error::{Error, Result};
pub use mechanisms::{
    expected_concordance_laplace, expected_concordance_mallows, induced_ranking, LaplaceMechanism,
    MallowsMechanism, MechanismKind, NoisyScores,
};
pub use ranking::{
    concordant_pairs, discordant_pairs, enumerate_neighbors, enumerate_permutations, normalized_concordance,
    validate_ranking, Ranking, ENUMERATION_CAP,
};
pub use rng::{cell_seed, derive_seed, rng_from_seed, DpRng};
