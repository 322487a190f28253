//! Entry-set constructions with deterministic worst-case guarantees, and the
//! exhaustive verifier for them.
//!
//! Three constructions: a pair whose second entry flips every round-1 pick of
//! the first (guarantees `t/4` points by pigeonhole on the first round); a
//! cover of all `2^r` possible winners of one round-`r` game (guarantees
//! `2^r - 1`); and a sixteen-entry combination of the two ideas around one
//! round-2 subtree (guarantees `t/4 + 2`). Free picks are filled greedily by
//! `P^round` — the guarantees hold for any filling, and the greedy one also
//! helps the expected score. The covered subtree is always the one containing
//! team 1.

use rayon::prelude::*;
use thiserror::Error;

use crate::probability::RoundWinMatrix;
use crate::rng::SplitRng;
use crate::tournament::{
    max_set_score_unchecked, overlap_counts, Bracket, EntrySet, GameId, TeamId, Tournament,
    TournamentError,
};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("round {0} outside 1..={1}")]
    BadRound(u16, u16),
    #[error(
        "the sixteen-entry construction needs t >= 8 (a round-2 subtree plus other round-1 games)"
    )]
    TooSmall,
    #[error("exhaustive verification is limited to t <= 16, got {0}; use the sampled check")]
    ExhaustiveTooLarge(u16),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
}

/// Fill every unset game (winner 0) in round-major order: candidates are the
/// two predecessor winners, the one with the higher `P^round` wins, ties to
/// the lower team id. Round-1 free games prefer the stronger team as well.
fn fill_greedy(t: &Tournament, winners: &mut [TeamId], round_matrix: &RoundWinMatrix) {
    for game in t.games() {
        if winners[game as usize - 1] != 0 {
            continue;
        }
        let round = t.round_of(game);
        let (a, b) = match t.predecessors(game) {
            None => {
                let lo = *t.team_range(game).start();
                (lo, lo + 1)
            }
            Some((p1, p2)) => (winners[p1 as usize - 1], winners[p2 as usize - 1]),
        };
        let (pa, pb) = (round_matrix.get(a, round), round_matrix.get(b, round));
        winners[game as usize - 1] = if pb > pa { b } else { a };
    }
}

fn finish(
    t: &Tournament,
    mut winners_list: Vec<Vec<TeamId>>,
    round_matrix: &RoundWinMatrix,
) -> Result<EntrySet, BoundsError> {
    for winners in &mut winners_list {
        fill_greedy(t, winners, round_matrix);
    }
    let entries = winners_list
        .into_iter()
        .map(|w| Bracket::from_winners(t, w).expect("full length"))
        .collect();
    Ok(EntrySet::new(t, entries)?)
}

/// `base` plus the entry that flips every round-1 pick of `base`; the pair
/// always scores at least `t/4`.
pub fn complementary_pair(
    t: &Tournament,
    base: &Bracket,
    round_matrix: &RoundWinMatrix,
) -> Result<EntrySet, BoundsError> {
    let violations = crate::tournament::validate_bracket(t, base)?;
    if !violations.is_empty() {
        return Err(TournamentError::Infeasible(violations).into());
    }
    let mut flipped = vec![0 as TeamId; t.game_count() as usize];
    for pos in 1..=t.games_in_round(1) {
        let game = t.game_id(1, pos);
        let lo = *t.team_range(game).start();
        let picked = base.winner(game);
        flipped[game as usize - 1] = if picked == lo { lo + 1 } else { lo };
    }
    finish(t, vec![base.winners().to_vec(), flipped], round_matrix)
}

/// `2^r` entries covering every possible winner of the round-`r` game that
/// contains team 1, each selecting its winner consistently through rounds
/// `1..=r`; the set always scores at least `2^r - 1`.
pub fn round_cover(
    t: &Tournament,
    round: u16,
    round_matrix: &RoundWinMatrix,
) -> Result<EntrySet, BoundsError> {
    if round < 1 || round > t.round_count() {
        return Err(BoundsError::BadRound(round, t.round_count()));
    }
    let winners_list = (1..=(1u16 << round))
        .map(|team| {
            let mut winners = vec![0 as TeamId; t.game_count() as usize];
            for r in 1..=round {
                winners[t.game_of(team, r) as usize - 1] = team;
            }
            winners
        })
        .collect();
    finish(t, winners_list, round_matrix)
}

/// Sixteen entries: all eight outcomes of the round-2 subtree containing
/// team 1, duplicated with complementary picks on every other round-1 game;
/// the set always scores at least `t/4 + 2`.
pub fn example16_cover(
    t: &Tournament,
    round_matrix: &RoundWinMatrix,
) -> Result<EntrySet, BoundsError> {
    if t.team_count() < 8 {
        return Err(BoundsError::TooSmall);
    }
    let g1 = t.game_id(1, 1); // teams {1,2}
    let g2 = t.game_id(1, 2); // teams {3,4}
    let g3 = t.game_id(2, 1); // teams {1,2,3,4}

    let mut firsts: Vec<Vec<TeamId>> = Vec::with_capacity(8);
    for w1 in [1 as TeamId, 2] {
        for w2 in [3 as TeamId, 4] {
            for w3 in [w1, w2] {
                let mut winners = vec![0 as TeamId; t.game_count() as usize];
                winners[g1 as usize - 1] = w1;
                winners[g2 as usize - 1] = w2;
                winners[g3 as usize - 1] = w3;
                firsts.push(winners);
            }
        }
    }
    // the paired entries keep the subtree picks and flip the other round-1
    // games of their partner, re-filling later rounds greedily
    let mut filled_firsts = firsts.clone();
    for winners in &mut filled_firsts {
        fill_greedy(t, winners, round_matrix);
    }
    let mut all = filled_firsts.clone();
    for partner in &filled_firsts {
        let mut winners = vec![0 as TeamId; t.game_count() as usize];
        winners[g1 as usize - 1] = partner[g1 as usize - 1];
        winners[g2 as usize - 1] = partner[g2 as usize - 1];
        winners[g3 as usize - 1] = partner[g3 as usize - 1];
        for pos in 3..=t.games_in_round(1) {
            let game = t.game_id(1, pos);
            let lo = *t.team_range(game).start();
            let picked = partner[game as usize - 1];
            winners[game as usize - 1] = if picked == lo { lo + 1 } else { lo };
        }
        all.push(winners);
    }
    finish(t, all, round_matrix)
}

/// Result of a worst-case check. `exhaustive` is false when the minimum is
/// taken over a sample of outcomes only (an upper bound on the true minimum,
/// usable to refute a guarantee but not to prove one).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinScoreReport {
    pub min_score: u32,
    pub exhaustive: bool,
    pub outcomes_checked: u64,
}

/// Minimum over all `2^(t-1)` outcomes of the set's best score; `t <= 16`.
pub fn min_guaranteed_score(t: &Tournament, set: &EntrySet) -> Result<MinScoreReport, BoundsError> {
    if t.team_count() > 16 {
        return Err(BoundsError::ExhaustiveTooLarge(t.team_count()));
    }
    t.check_same(set.team_count())?;
    let games = t.game_count() as usize;
    let n = 1u64 << games;
    let meta: Vec<(Option<(usize, usize)>, TeamId)> = t
        .games()
        .map(|g| {
            (
                t.predecessors(g)
                    .map(|(a, b)| (a as usize - 1, b as usize - 1)),
                *t.team_range(g).start(),
            )
        })
        .collect();
    let min = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0 as TeamId; games],
            |winners, idx| {
                for (g, (preds, lo)) in meta.iter().enumerate() {
                    let second = (idx >> g) & 1 == 1;
                    winners[g] = match preds {
                        None => lo + second as TeamId,
                        Some((p1, p2)) => winners[if second { *p2 } else { *p1 }],
                    };
                }
                let outcome = Bracket::from_winners(t, winners.clone()).expect("full length");
                max_set_score_unchecked(t, set.entries(), &outcome)
            },
        )
        .min()
        .expect("at least one outcome");
    Ok(MinScoreReport {
        min_score: min,
        exhaustive: true,
        outcomes_checked: n,
    })
}

/// Minimum over `samples` uniformly drawn outcomes; flagged non-exhaustive.
pub fn min_score_sampled(
    t: &Tournament,
    set: &EntrySet,
    samples: u64,
    seed: u64,
) -> Result<MinScoreReport, BoundsError> {
    t.check_same(set.team_count())?;
    let min = (0..samples.max(1))
        .into_par_iter()
        .map(|i| {
            // uniform over feasible brackets: every game decided by a coin
            let mut rng = SplitRng::new(crate::rng::derive_seed(seed, i));
            let mut winners = vec![0 as TeamId; t.game_count() as usize];
            for game in t.games() {
                let second = rng.next_u64() & 1 == 1;
                winners[game as usize - 1] = match t.predecessors(game) {
                    None => *t.team_range(game).start() + second as TeamId,
                    Some((p1, p2)) => winners[(if second { p2 } else { p1 }) as usize - 1],
                };
            }
            let outcome = Bracket::from_winners(t, winners).expect("full length");
            max_set_score_unchecked(t, set.entries(), &outcome)
        })
        .min()
        .expect("at least one sample");
    Ok(MinScoreReport {
        min_score: min,
        exhaustive: false,
        outcomes_checked: samples.max(1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disjointness {
    Disjoint,
    /// The first game (lowest id) where the two entries agree.
    OverlapAt(GameId),
}

/// Two entries are disjoint iff they pick different winners at every game.
pub fn disjointness_certificate(
    t: &Tournament,
    a: &Bracket,
    b: &Bracket,
) -> Result<Disjointness, BoundsError> {
    let counts = overlap_counts(t, a, b)?;
    if counts.total == 0 {
        return Ok(Disjointness::Disjoint);
    }
    let game = t
        .games()
        .find(|&g| a.winner(g) == b.winner(g))
        .expect("overlap exists");
    Ok(Disjointness::OverlapAt(game))
}
