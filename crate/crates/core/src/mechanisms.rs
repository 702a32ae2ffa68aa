//! Randomized ranking mechanisms.
//!
//! [`MallowsMechanism`] is the multistage insertion sampler: items are visited
//! in increasing input rank and each is inserted among the already-placed items,
//! with position `k` (the number of placed items it lands above) drawn with
//! weight `q^k`, `q = exp(epsilon / (m - 1))`. The resulting output law is the
//! Mallows model `P(out) ∝ q^C(input, out)` with `C` the unordered concordant
//! pair count, which is what makes the mechanism epsilon-ranking private.
//!
//! [`LaplaceMechanism`] is the additive-noise baseline calibrated with
//! scale `2(m - 1) / epsilon`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{concordant_unchecked, Ranking};

/// Per-pair exponent above which stage weights are formed in log space.
const LOG_SPACE_THRESHOLD: f64 = 30.0;

/// Which mechanism to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Mallows,
    Laplace,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Mallows => "mallows",
            MechanismKind::Laplace => "laplace",
        }
    }
}

impl std::str::FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mallows" => Ok(MechanismKind::Mallows),
            "laplace" => Ok(MechanismKind::Laplace),
            other => Err(Error::InvalidConfig(format!("unknown mechanism '{other}'"))),
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::TooShort(m));
    }
    Ok(())
}

fn check_input(m: usize, r: &Ranking) -> Result<()> {
    if r.m() != m {
        return Err(Error::SizeMismatch {
            expected: m,
            actual: r.m(),
        });
    }
    Ok(())
}

/// The epsilon-ranking-private synthesizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MallowsMechanism {
    epsilon: f64,
    m: usize,
}

impl MallowsMechanism {
    /// `epsilon` must be finite and positive, or `f64::INFINITY` for the
    /// non-private pass-through.
    pub fn new(epsilon: f64, m: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        check_m(m)?;
        Ok(MallowsMechanism { epsilon, m })
    }

    /// Like [`MallowsMechanism::new`] but also accepts `epsilon = 0`, the
    /// uniform limit. Not a private mechanism in any useful sense; meant for
    /// exercising limiting behaviour.
    pub fn new_allow_zero(epsilon: f64, m: usize) -> Result<Self> {
        if epsilon == 0.0 {
            check_m(m)?;
            return Ok(MallowsMechanism { epsilon, m });
        }
        MallowsMechanism::new(epsilon, m)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Exponent weight per concordant pair, `epsilon / (m - 1)`.
    pub fn pair_weight(&self) -> f64 {
        self.epsilon / (self.m - 1) as f64
    }

    /// `q = exp(epsilon / (m - 1))`.
    pub fn q(&self) -> f64 {
        self.pair_weight().exp()
    }

    /// Mallows dispersion for the normalized concordance parameterization, `epsilon * m / 2`.
    pub fn dispersion(&self) -> f64 {
        self.epsilon * self.m as f64 / 2.0
    }

    pub fn is_pass_through(&self) -> bool {
        self.epsilon.is_infinite()
    }

    fn check_stage(&self, t: usize) -> Result<()> {
        if t < 2 || t > self.m {
            return Err(Error::StageOutOfRange { t, m: self.m });
        }
        Ok(())
    }

    /// Distribution of the insertion position at stage `t`.
    pub fn stage_distribution(&self, t: usize) -> Result<StageDistribution> {
        self.check_stage(t)?;
        Ok(StageDistribution {
            t,
            probabilities: stage_probabilities(self.pair_weight(), t),
        })
    }

    /// Draws one synthetic ranking.
    pub fn synthesize<R: Rng + ?Sized>(&self, input: &Ranking, rng: &mut R) -> Result<Ranking> {
        Ok(self.synthesize_traced(input, rng)?.0)
    }

    /// Draws one synthetic ranking and returns the stage draws `V^(t)` for `t = 2..=m`
    /// (element `t - 2`).
    pub fn synthesize_traced<R: Rng + ?Sized>(
        &self,
        input: &Ranking,
        rng: &mut R,
    ) -> Result<(Ranking, Vec<usize>)> {
        check_input(self.m, input)?;
        let input_order = input.invert();
        let weight = self.pair_weight();
        let mut placed: Vec<usize> = Vec::with_capacity(self.m);
        placed.push(input_order[0]);
        let mut draws = Vec::with_capacity(self.m - 1);
        let mut probs = Vec::with_capacity(self.m);
        for t in 2..=self.m {
            #[cfg(debug_assertions)]
            check_literal_tau(input, &placed, t);

            let item = input_order[t - 1];
            fill_stage_probabilities(weight, t, &mut probs);
            let v = sample_index(&probs, rng);
            placed.insert(v, item);
            draws.push(v);
        }
        Ok((Ranking::from_order(&placed)?, draws))
    }

    /// Probability of `output` as the product of the stage probabilities that
    /// generate it.
    pub fn chain_probability(&self, input: &Ranking, output: &Ranking) -> Result<f64> {
        check_input(self.m, input)?;
        check_input(self.m, output)?;
        let input_order = input.invert();
        let weight = self.pair_weight();
        let mut p = 1.0;
        let mut probs = Vec::with_capacity(self.m);
        for t in 2..=self.m {
            let item = input_order[t - 1];
            let own = output.rank_of(item);
            let v = input_order[..t - 1]
                .iter()
                .filter(|&&l| output.rank_of(l) < own)
                .count();
            fill_stage_probabilities(weight, t, &mut probs);
            p *= probs[v];
        }
        Ok(p)
    }

    /// Mallows probability `exp(w * C(input, output)) / Z`, with `Z` the q-factorial.
    pub fn mallows_pmf(&self, input: &Ranking, output: &Ranking) -> Result<f64> {
        check_input(self.m, input)?;
        check_input(self.m, output)?;
        if self.is_pass_through() {
            return Ok(if input == output { 1.0 } else { 0.0 });
        }
        let c = concordant_unchecked(input.ranks(), output.ranks()) as f64;
        Ok((self.pair_weight() * c - self.log_normalizer()).exp())
    }

    /// `ln Z = sum_{t=1}^{m} ln sum_{k<t} q^k` for finite epsilon.
    pub fn log_normalizer(&self) -> f64 {
        let w = self.pair_weight();
        (1..=self.m).map(|t| log_geometric_sum(w, t)).sum()
    }

    /// Mean and variance of the stage-`t` insertion position.
    pub fn expected_stage_position(&self, t: usize) -> Result<(f64, f64)> {
        self.check_stage(t)?;
        Ok(stage_moments(self.pair_weight(), t))
    }
}

/// `ln sum_{k=0}^{t-1} exp(w k)` without overflow.
fn log_geometric_sum(w: f64, t: usize) -> f64 {
    if w == 0.0 {
        return (t as f64).ln();
    }
    let top = w * (t - 1) as f64;
    let tail: f64 = (0..t).map(|k| (w * k as f64 - top).exp()).sum();
    top + tail.ln()
}

fn stage_probabilities(weight: f64, t: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(t);
    fill_stage_probabilities(weight, t, &mut out);
    out
}

fn fill_stage_probabilities(weight: f64, t: usize, out: &mut Vec<f64>) {
    out.clear();
    if weight.is_infinite() {
        out.resize(t, 0.0);
        out[t - 1] = 1.0;
        return;
    }
    if weight > LOG_SPACE_THRESHOLD {
        let log_z = log_geometric_sum(weight, t);
        out.extend((0..t).map(|k| (weight * k as f64 - log_z).exp()));
        return;
    }
    let q = weight.exp();
    let mut w = 1.0;
    for _ in 0..t {
        out.push(w);
        w *= q;
    }
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left the cumulative sum just below 1
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// The concordance score `tau(k, placed)` evaluated literally over the
/// current synthetic ranks must equal `k` at every stage.
#[cfg(debug_assertions)]
fn check_literal_tau(input: &Ranking, placed: &[usize], t: usize) {
    for k in 0..t {
        let tau = placed
            .iter()
            .enumerate()
            .filter(|&(pos, &l)| {
                let synthetic_rank = (pos + 1) as f64;
                let lhs = t as f64 - input.rank_of(l) as f64;
                lhs * (k as f64 + 0.5 - synthetic_rank) > 0.0
            })
            .count();
        debug_assert_eq!(tau, k, "stage {t} concordance score");
    }
}

/// Closed-form mean and variance of the truncated geometric on `0..t` with
/// ratio `exp(w)`, written in terms of `r = exp(-w)` so large `w` cannot overflow.
fn stage_moments(w: f64, t: usize) -> (f64, f64) {
    let tf = t as f64;
    if w == 0.0 {
        return ((tf - 1.0) / 2.0, (tf * tf - 1.0) / 12.0);
    }
    if w < 0.05 {
        // the closed form cancels catastrophically near the uniform limit
        let probs = stage_probabilities(w, t);
        let mean: f64 = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let second: f64 = probs.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
        return (mean, second - mean * mean);
    }
    let r = (-w).exp();
    let one_minus_rt = -(-w * tf).exp_m1();
    let one_minus_r = -(-w).exp_m1();
    let r_tail = r * (1.0 - (-w * (tf - 1.0)).exp()) / (one_minus_r * one_minus_rt);
    let mean = (tf - 1.0) / one_minus_rt - r_tail;
    let var = (tf - 1.0).powi(2) / one_minus_rt - 2.0 * mean * r / one_minus_r + r_tail
        - mean * mean;
    (mean, var.max(0.0))
}

/// Probabilities of the stage-`t` insertion position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDistribution {
    pub t: usize,
    pub probabilities: Vec<f64>,
}

/// Expected concordant pair count between the input and one Mallows synthetic ranking.
pub fn expected_concordance_mallows(m: usize, epsilon: f64) -> Result<f64> {
    let mech = MallowsMechanism::new_allow_zero(epsilon, m)?;
    (2..=m)
        .map(|t| mech.expected_stage_position(t).map(|(mean, _)| mean))
        .sum()
}

/// Expected concordant pair count between the input and the ranking induced by
/// Laplace-perturbed ranks at scale `2(m - 1) / epsilon`.
///
/// Uses the distribution of the difference of two Laplace variables: for items
/// whose ranks differ by `d`, `P(order kept) = 1 - (1/2 + x/4) e^{-x}` with
/// `x = epsilon * d / (2(m - 1))`.
pub fn expected_concordance_laplace(m: usize, epsilon: f64) -> Result<f64> {
    check_m(m)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let rate = epsilon / (2.0 * (m - 1) as f64);
    Ok((1..m)
        .map(|d| {
            let x = rate * d as f64;
            let kept = if x.is_infinite() {
                1.0
            } else {
                1.0 - (0.5 + x / 4.0) * (-x).exp()
            };
            (m - d) as f64 * kept
        })
        .sum())
}

/// Additive Laplace noise on ranks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMechanism {
    scale: f64,
    m: usize,
}

impl LaplaceMechanism {
    /// Calibrates the scale to `2(m - 1) / epsilon`.
    pub fn new(epsilon: f64, m: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        check_m(m)?;
        Ok(LaplaceMechanism {
            scale: 2.0 * (m - 1) as f64 / epsilon,
            m,
        })
    }

    /// Arbitrary positive scale; `f64::INFINITY` is allowed.
    pub fn with_scale(scale: f64, m: usize) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidScale(scale));
        }
        check_m(m)?;
        Ok(LaplaceMechanism { scale, m })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `ranks[i] + Laplace(0, scale)` for every item.
    pub fn perturb<R: Rng + ?Sized>(&self, input: &Ranking, rng: &mut R) -> Result<NoisyScores> {
        check_input(self.m, input)?;
        let values = input
            .ranks()
            .iter()
            .map(|&r| r as f64 + sample_laplace(self.scale, rng))
            .collect();
        Ok(NoisyScores { values })
    }

    /// Perturbs and converts the noisy scores back into a ranking.
    pub fn synthesize<R: Rng + ?Sized>(&self, input: &Ranking, rng: &mut R) -> Result<Ranking> {
        self.perturb(input, rng)?.induced_ranking()
    }
}

/// Inverse-CDF draw from Laplace(0, scale).
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// Rank values with additive noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyScores {
    pub values: Vec<f64>,
}

impl NoisyScores {
    /// Ranks items by ascending score; the smallest score gets rank 1 and ties
    /// go to the lower item index.
    pub fn induced_ranking(&self) -> Result<Ranking> {
        induced_ranking(&self.values)
    }
}

/// Ranking by ascending score with index tie-break.
pub fn induced_ranking(scores: &[f64]) -> Result<Ranking> {
    if scores.len() < 2 {
        return Err(Error::TooShort(scores.len()));
    }
    if let Some(bad) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(bad));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    Ranking::from_order(&order)
}
