//! One greedy step: find an entry maximizing the sample average of
//! `max(s̄_w, s(E, O_w))` over a pool, where `s̄_w` is the incumbent score the
//! already-chosen entries attain on outcome `w`.
//!
//! Solved exactly by enumerating all `2^(t-1)` brackets when `t <= 16`, and
//! otherwise by steepest-ascent hill climbing from a proportion-heuristic
//! seed plus seeded random restarts. A move re-picks the winner of one game,
//! pushes the new winner down its own path, and repairs later rounds by
//! keeping downstream picks that are still consistent and re-picking the
//! rest greedily by `P^round`.

use rayon::prelude::*;

use crate::probability::RoundWinMatrix;
use crate::rng::{derive_seed, SplitRng};
use crate::simulation::OutcomePool;
use crate::tournament::{Bracket, GameId, TeamId, Tournament};

use super::{prop_plus_generate, OptimizeError, PropPlusThresholds, SolveBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    ExactEnumeration,
    LocalSearch,
}

#[derive(Debug, Clone)]
pub struct SubproblemOutcome {
    pub bracket: Bracket,
    /// In-sample objective of the returned bracket.
    pub objective: f64,
    pub mode: SolveMode,
}

/// Sample-average objective of `entry` against the pool under incumbents.
pub fn pool_objective(
    t: &Tournament,
    pool: &OutcomePool,
    incumbents: &[f64],
    entry: &Bracket,
) -> f64 {
    let total: f64 = pool
        .outcomes()
        .iter()
        .zip(incumbents)
        .map(|(o, &inc)| {
            let s = crate::tournament::score_unchecked(t, entry, o) as f64;
            if s > inc {
                s
            } else {
                inc
            }
        })
        .sum();
    total / pool.len() as f64
}

pub fn subproblem_solve(
    t: &Tournament,
    pool: &OutcomePool,
    incumbents: &[f64],
    budget: &SolveBudget,
    guide: &RoundWinMatrix,
) -> Result<SubproblemOutcome, OptimizeError> {
    let mode = if t.team_count() <= 16 {
        SolveMode::ExactEnumeration
    } else {
        SolveMode::LocalSearch
    };
    solve_with_mode(t, pool, incumbents, budget, guide, mode)
}

pub(crate) fn solve_with_mode(
    t: &Tournament,
    pool: &OutcomePool,
    incumbents: &[f64],
    budget: &SolveBudget,
    guide: &RoundWinMatrix,
    mode: SolveMode,
) -> Result<SubproblemOutcome, OptimizeError> {
    budget.validate()?;
    t.check_same(pool.team_count())?;
    t.check_same(guide.team_count())?;
    if incumbents.len() != pool.len() {
        return Err(OptimizeError::IncumbentLength {
            expected: pool.len(),
            got: incumbents.len(),
        });
    }
    if let Some(&bad) = incumbents.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(OptimizeError::NegativeIncumbent(bad));
    }
    match mode {
        SolveMode::ExactEnumeration => Ok(exact_enumeration(t, pool, incumbents)),
        SolveMode::LocalSearch => Ok(local_search(t, pool, incumbents, budget, guide)),
    }
}

fn exact_enumeration(t: &Tournament, pool: &OutcomePool, incumbents: &[f64]) -> SubproblemOutcome {
    let games = t.game_count() as usize;
    let n = 1u64 << games;
    let meta = game_meta(t);
    let outcomes: Vec<&[TeamId]> = pool.outcomes().iter().map(|o| o.winners()).collect();

    // (objective, index), ties to the lower index; the reduction is
    // associative so the parallel split cannot change the winner
    let best = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0 as TeamId; games],
            |winners, idx| {
                fill_winners(&meta, idx, winners);
                let mut total = 0.0f64;
                for (o, &inc) in outcomes.iter().zip(incumbents) {
                    let mut s = 0u32;
                    for (g, m) in meta.iter().enumerate() {
                        if winners[g] == o[g] {
                            s += m.weight;
                        }
                    }
                    let s = s as f64;
                    total += if s > inc { s } else { inc };
                }
                (total / outcomes.len() as f64, idx)
            },
        )
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let mut winners = vec![0 as TeamId; games];
    fill_winners(&meta, best.1, &mut winners);
    SubproblemOutcome {
        bracket: Bracket::from_winners(t, winners).expect("full length"),
        objective: best.0,
        mode: SolveMode::ExactEnumeration,
    }
}

struct GameMeta {
    preds: Option<(usize, usize)>,
    lo_team: TeamId,
    weight: u32,
}

fn game_meta(t: &Tournament) -> Vec<GameMeta> {
    t.games()
        .map(|g| GameMeta {
            preds: t
                .predecessors(g)
                .map(|(a, b)| (a as usize - 1, b as usize - 1)),
            lo_team: *t.team_range(g).start(),
            weight: Tournament::round_weight(t.round_of(g)),
        })
        .collect()
}

fn fill_winners(meta: &[GameMeta], idx: u64, winners: &mut [TeamId]) {
    for (g, m) in meta.iter().enumerate() {
        let second = (idx >> g) & 1 == 1;
        winners[g] = match m.preds {
            None => m.lo_team + second as TeamId,
            Some((p1, p2)) => winners[if second { p2 } else { p1 }],
        };
    }
}

/// Re-pick the winner of `game` to `team` and restore feasibility: the new
/// winner is forced down its own path, and successor games keep their picks
/// where still consistent, re-picking greedily by `P^round` where not.
pub(crate) fn apply_move(
    t: &Tournament,
    base: &Bracket,
    game: GameId,
    team: TeamId,
    guide: &RoundWinMatrix,
) -> Bracket {
    let mut next = base.clone();
    for r in 1..=t.round_of(game) {
        next.set_winner(t.game_of(team, r), team);
    }
    let mut child = game;
    while let Some(succ) = t.successor(child) {
        let (p1, p2) = t.predecessors(succ).expect("not round 1");
        let (w1, w2) = (next.winner(p1), next.winner(p2));
        let current = next.winner(succ);
        if current == w1 || current == w2 {
            break; // downstream picks still consistent
        }
        let round = t.round_of(succ);
        let pick = if guide.get(w1, round) >= guide.get(w2, round) {
            w1
        } else {
            w2
        };
        next.set_winner(succ, pick);
        child = succ;
    }
    debug_assert!(crate::tournament::is_feasible(t, &next));
    next
}

fn random_bracket(t: &Tournament, rng: &mut SplitRng) -> Bracket {
    let mut winners = vec![0 as TeamId; t.game_count() as usize];
    for game in t.games() {
        let second = rng.next_u64() & 1 == 1;
        winners[game as usize - 1] = match t.predecessors(game) {
            None => *t.team_range(game).start() + second as TeamId,
            Some((p1, p2)) => winners[(if second { p2 } else { p1 }) as usize - 1],
        };
    }
    Bracket::from_winners(t, winners).expect("full length")
}

fn local_search(
    t: &Tournament,
    pool: &OutcomePool,
    incumbents: &[f64],
    budget: &SolveBudget,
    guide: &RoundWinMatrix,
) -> SubproblemOutcome {
    let mut seeds: Vec<Bracket> = Vec::with_capacity(budget.restarts + 1);
    let heuristic = prop_plus_generate(t, guide, 1, &PropPlusThresholds::for_entry_count(1))
        .expect("single-entry heuristic cannot fail");
    seeds.push(heuristic.entries()[0].clone());
    for restart in 0..budget.restarts {
        let mut rng = SplitRng::new(derive_seed(
            budget.master_seed,
            0x7365_6564 ^ restart as u64,
        ));
        seeds.push(random_bracket(t, &mut rng));
    }

    // restarts are independent; the winner is picked by (objective, index)
    let results: Vec<(f64, Bracket)> = seeds
        .into_par_iter()
        .map(|seed| climb(t, pool, incumbents, guide, seed))
        .map(|(b, obj)| (obj, b))
        .collect();
    let mut best: Option<(f64, &Bracket)> = None;
    for (obj, bracket) in &results {
        if best.is_none_or(|(v, _)| *obj > v) {
            best = Some((*obj, bracket));
        }
    }
    let (objective, bracket) = best.expect("at least one seed");
    SubproblemOutcome {
        bracket: bracket.clone(),
        objective,
        mode: SolveMode::LocalSearch,
    }
}

/// Steepest-ascent hill climbing; strict improvement only, so termination is
/// guaranteed and ties never flip the incumbent.
fn climb(
    t: &Tournament,
    pool: &OutcomePool,
    incumbents: &[f64],
    guide: &RoundWinMatrix,
    start: Bracket,
) -> (Bracket, f64) {
    let w = pool.len() as f64;
    let meta = game_meta(t);
    let mut current = start;
    let mut scores: Vec<u32> = pool
        .outcomes()
        .iter()
        .map(|o| crate::tournament::score_unchecked(t, &current, o))
        .collect();
    let mut objective = scores
        .iter()
        .zip(incumbents)
        .map(|(&s, &inc)| (s as f64).max(inc))
        .sum::<f64>()
        / w;

    loop {
        let mut best_move: Option<(f64, Bracket)> = None;
        for game in t.games() {
            for team in t.team_range(game) {
                if team == current.winner(game) {
                    continue;
                }
                let candidate = apply_move(t, &current, game, team, guide);
                // delta-score only the games that changed
                let changed: Vec<usize> = (0..meta.len())
                    .filter(|&g| candidate.winners()[g] != current.winners()[g])
                    .collect();
                let mut total = 0.0f64;
                for ((o, &inc), &s) in pool.outcomes().iter().zip(incumbents).zip(&scores) {
                    let mut s = s as i64;
                    for &g in &changed {
                        let ow = o.winners()[g];
                        let was = (current.winners()[g] == ow) as i64;
                        let now = (candidate.winners()[g] == ow) as i64;
                        s += (now - was) * meta[g].weight as i64;
                    }
                    total += (s as f64).max(inc);
                }
                let obj = total / w;
                if obj > objective && best_move.as_ref().is_none_or(|(v, _)| obj > *v) {
                    best_move = Some((obj, candidate));
                }
            }
        }
        match best_move {
            None => return (current, objective),
            Some((obj, next)) => {
                current = next;
                objective = obj;
                scores = pool
                    .outcomes()
                    .iter()
                    .map(|o| crate::tournament::score_unchecked(t, &current, o))
                    .collect();
            }
        }
    }
}
