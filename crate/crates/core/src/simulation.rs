//! Outcome simulation and Monte Carlo EMS estimation.
//!
//! [`sim_outcome`] draws one feasible outcome bracket round by round from
//! `P^team`, so an outcome is generated with exactly the probability that it
//! occurs. [`sample_pool`] packages `w` such outcomes with their provenance;
//! outcome `i` uses the counter stream keyed by `(master_seed, i)`, which
//! makes pools reproducible bit-for-bit regardless of thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::probability::{ProbabilityError, TeamWinMatrix};
use crate::rng::unit_for_game;
use crate::tournament::{max_set_score_unchecked, Bracket, EntrySet, Tournament, TournamentError};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("a pool needs at least one outcome")]
    EmptyPool,
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
}

/// A seeded collection of simulated outcome brackets with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomePool {
    team_count: u16,
    master_seed: u64,
    pteam_digest: [u8; 32],
    outcomes: Vec<Bracket>,
}

impl OutcomePool {
    pub fn outcomes(&self) -> &[Bracket] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }

    pub fn pteam_digest(&self) -> [u8; 32] {
        self.pteam_digest
    }

    /// Reassemble a pool read back from a cache file.
    pub fn from_parts(
        t: &Tournament,
        master_seed: u64,
        pteam_digest: [u8; 32],
        outcomes: Vec<Bracket>,
    ) -> Result<Self, SimulationError> {
        if outcomes.is_empty() {
            return Err(SimulationError::EmptyPool);
        }
        for o in &outcomes {
            let violations = crate::tournament::validate_bracket(t, o)?;
            if !violations.is_empty() {
                return Err(TournamentError::Infeasible(violations).into());
            }
        }
        Ok(Self {
            team_count: t.team_count(),
            master_seed,
            pteam_digest,
            outcomes,
        })
    }
}

/// Draw one outcome: round by round, the winner of each game is the team that
/// arrives from the first predecessor with probability `P^team` against the
/// team from the second.
pub fn sim_outcome(
    t: &Tournament,
    p: &TeamWinMatrix,
    master_seed: u64,
    outcome_index: u64,
) -> Bracket {
    let mut winners = vec![0u16; t.game_count() as usize];
    for game in t.games() {
        let (a, b) = match t.predecessors(game) {
            None => {
                let lo = *t.team_range(game).start();
                (lo, lo + 1)
            }
            Some((p1, p2)) => (winners[p1 as usize - 1], winners[p2 as usize - 1]),
        };
        let u = unit_for_game(master_seed, outcome_index, game as u64);
        winners[game as usize - 1] = if u < p.get(a, b) { a } else { b };
    }
    Bracket::from_winners(t, winners).expect("generated bracket has the right length")
}

/// Generate a pool of `w` outcomes. Outcome `i` depends only on
/// `(master_seed, i)`, so generation is data-parallel and order-independent.
pub fn sample_pool(
    t: &Tournament,
    p: &TeamWinMatrix,
    w: usize,
    master_seed: u64,
) -> Result<OutcomePool, SimulationError> {
    if w == 0 {
        return Err(SimulationError::EmptyPool);
    }
    t.check_same(p.team_count())?;
    p.validate()?;
    let outcomes: Vec<Bracket> = (0..w as u64)
        .into_par_iter()
        .map(|i| sim_outcome(t, p, master_seed, i))
        .collect();
    Ok(OutcomePool {
        team_count: t.team_count(),
        master_seed,
        pteam_digest: p.digest(),
        outcomes,
    })
}

/// Monte Carlo EMS estimate over a pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmsEstimate {
    pub mean: f64,
    pub sample_sd: f64,
    pub w: usize,
    /// `1.96 * sample_sd / sqrt(w)`.
    pub ci95_halfwidth: f64,
}

/// Estimate the EMS of `set` as the pool average of the best entry's score.
///
/// Adding an entry can never decrease the estimate on the same pool. The mean
/// is an exact integer ratio (scores are integers), so it does not depend on
/// summation order or thread count.
pub fn mc_ems(
    t: &Tournament,
    set: &EntrySet,
    pool: &OutcomePool,
) -> Result<EmsEstimate, SimulationError> {
    t.check_same(set.team_count())?;
    t.check_same(pool.team_count)?;
    if pool.is_empty() {
        return Err(SimulationError::EmptyPool);
    }
    let scores: Vec<u32> = pool
        .outcomes
        .par_iter()
        .map(|o| max_set_score_unchecked(t, set.entries(), o))
        .collect();
    Ok(estimate_from_scores(&scores))
}

pub(crate) fn estimate_from_scores(scores: &[u32]) -> EmsEstimate {
    let w = scores.len();
    let total: u64 = scores.iter().map(|&s| s as u64).sum();
    let mean = total as f64 / w as f64;
    let sample_sd = if w > 1 {
        let ss: f64 = scores
            .iter()
            .map(|&s| {
                let d = s as f64 - mean;
                d * d
            })
            .sum();
        (ss / (w as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    EmsEstimate {
        mean,
        sample_sd,
        w,
        ci95_halfwidth: 1.96 * sample_sd / (w as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::outcome_probability;
    use crate::testutil::{diverse_matrix, four_team_brackets, t4};
    use crate::tournament::{enumerate_brackets, is_feasible};

    #[test]
    fn binary_matrix_forces_the_unique_bracket() {
        // team 3 beats everyone, lower id wins otherwise: outcome is (1,3,3)
        let t = t4();
        let forced = TeamWinMatrix::from_fn(4, |a, b| {
            if a == 3 {
                1.0
            } else if b == 3 {
                0.0
            } else if a < b {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let expected = Bracket::from_winners(&t, vec![1, 3, 3]).unwrap();
        for i in 0..50 {
            assert_eq!(sim_outcome(&t, &forced, 9, i), expected);
        }
    }

    #[test]
    fn uniform_frequencies_cover_all_brackets() {
        let t = t4();
        let p = TeamWinMatrix::uniform(4);
        let all = enumerate_brackets(&t).unwrap();
        let n = 80_000u64;
        let mut counts = vec![0u32; all.len()];
        for i in 0..n {
            let o = sim_outcome(&t, &p, 123, i);
            let idx = all.iter().position(|b| *b == o).unwrap();
            counts[idx] += 1;
        }
        let expect = n as f64 / 8.0;
        let sigma = (n as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - expect).abs() < 3.0 * sigma,
                "count {c} vs {expect}"
            );
        }
    }

    #[test]
    fn game_one_frequency_tracks_pteam() {
        let t = t4();
        let p = diverse_matrix();
        let n = 80_000u64;
        let wins = (0..n)
            .filter(|&i| sim_outcome(&t, &p, 5, i).winner(1) == 1)
            .count() as f64;
        let sigma = (n as f64 * 0.7 * 0.3).sqrt();
        assert!((wins - 0.7 * n as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn generation_probability_matches_outcome_probability() {
        // chi-square over all 8 brackets at alpha = 0.001 (7 df -> 24.322)
        let t = t4();
        let p = diverse_matrix();
        let all = enumerate_brackets(&t).unwrap();
        let n = 100_000u64;
        let mut counts = vec![0u64; all.len()];
        for i in 0..n {
            let o = sim_outcome(&t, &p, 31, i);
            counts[all.iter().position(|b| *b == o).unwrap()] += 1;
        }
        let chi2: f64 = all
            .iter()
            .zip(&counts)
            .map(|(b, &c)| {
                let expect = n as f64 * outcome_probability(&t, &p, b).unwrap();
                (c as f64 - expect).powi(2) / expect
            })
            .sum();
        assert!(chi2 < 24.322, "chi2 = {chi2}");
    }

    #[test]
    fn pools_are_reproducible() {
        let t = Tournament::new(16).unwrap();
        let p = TeamWinMatrix::random(16, 77);
        let a = sample_pool(&t, &p, 250, 7).unwrap();
        let b = sample_pool(&t, &p, 250, 7).unwrap();
        assert_eq!(a, b);
        for o in a.outcomes() {
            assert!(is_feasible(&t, o));
        }
        let c = sample_pool(&t, &p, 250, 8).unwrap();
        assert_ne!(a, c);
        assert!(matches!(
            sample_pool(&t, &p, 0, 7),
            Err(SimulationError::EmptyPool)
        ));
    }

    #[test]
    fn pool_mean_matches_expected_single_score() {
        let t = t4();
        let p = diverse_matrix();
        let b = four_team_brackets();
        let set = EntrySet::new(&t, vec![b[0].clone()]).unwrap();
        let pool = sample_pool(&t, &p, 40_000, 11).unwrap();
        let est = mc_ems(&t, &set, &pool).unwrap();
        // closed-form oracle: E[S(B1)] = 0.70 + 0.55 + 2*0.40075 = 2.0515
        assert!(
            (est.mean - 2.0515).abs() < 3.0 * est.ci95_halfwidth / 1.96 + 1e-12,
            "mean {} hw {}",
            est.mean,
            est.ci95_halfwidth
        );
    }

    #[test]
    fn deep_single_entry_mean_matches_closed_form() {
        // six propagation levels and six rounds of scoring cross-checked
        let t = Tournament::new(64).unwrap();
        let p = TeamWinMatrix::random(64, 41);
        let (pg, _) = crate::probability::propagate(&t, &p).unwrap();
        let entry = sim_outcome(&t, &p, 42, 0);
        let expected: f64 = t
            .games()
            .map(|g| Tournament::round_weight(t.round_of(g)) as f64 * pg.get(entry.winner(g), g))
            .sum();
        let set = EntrySet::new(&t, vec![entry]).unwrap();
        let pool = sample_pool(&t, &p, 60_000, 43).unwrap();
        let est = mc_ems(&t, &set, &pool).unwrap();
        assert!(
            (est.mean - expected).abs() < 4.0 * est.ci95_halfwidth / 1.96,
            "mc {} vs closed form {expected}",
            est.mean
        );
    }

    #[test]
    fn full_cover_estimates_exactly_max() {
        let t = t4();
        let all = enumerate_brackets(&t).unwrap();
        let set = EntrySet::new(&t, all).unwrap();
        let pool = sample_pool(&t, &TeamWinMatrix::uniform(4), 500, 3).unwrap();
        let est = mc_ems(&t, &set, &pool).unwrap();
        assert_eq!(est.mean, 4.0);
        assert_eq!(est.sample_sd, 0.0);
    }

    #[test]
    fn disjoint_pair_under_uniform_estimates_2_5() {
        let t = t4();
        let b = four_team_brackets();
        let set = EntrySet::new(&t, vec![b[0].clone(), b[5].clone()]).unwrap();
        let pool = sample_pool(&t, &TeamWinMatrix::uniform(4), 40_000, 13).unwrap();
        let est = mc_ems(&t, &set, &pool).unwrap();
        assert!((est.mean - 2.5).abs() < 3.0 * est.sample_sd / (est.w as f64).sqrt());
    }

    #[test]
    fn adding_an_entry_is_monotone_in_sample() {
        let t = t4();
        let b = four_team_brackets();
        let pool = sample_pool(&t, &diverse_matrix(), 1000, 21).unwrap();
        let small = EntrySet::new(&t, vec![b[0].clone()]).unwrap();
        let big = EntrySet::new(&t, vec![b[0].clone(), b[6].clone()]).unwrap();
        let e1 = mc_ems(&t, &small, &pool).unwrap();
        let e2 = mc_ems(&t, &big, &pool).unwrap();
        assert!(e2.mean >= e1.mean);
    }

    #[test]
    fn ci_width_shrinks_with_pool_size() {
        let t = Tournament::new(16).unwrap();
        let p = TeamWinMatrix::random(16, 5);
        let set = EntrySet::new(
            &t,
            vec![sim_outcome(&t, &p, 1, 0), sim_outcome(&t, &p, 1, 1)],
        )
        .unwrap();
        let mut widths = Vec::new();
        for w in [50usize, 250, 1000] {
            let pool = sample_pool(&t, &p, w, 99).unwrap();
            widths.push(mc_ems(&t, &set, &pool).unwrap().ci95_halfwidth);
        }
        assert!(widths[2] < widths[1] && widths[1] < widths[0], "{widths:?}");
    }
}
