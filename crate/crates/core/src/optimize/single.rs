//! Exact single-entry optimization.
//!
//! The expected score of an entry decomposes per game as
//! `Σ_g 2^(r(g)-1) · P^game[pick_g, g]`, so the best entry comes from a value
//! recursion over sub-tournaments: committing to team `t` at game `g` earns
//! the game's weighted win probability, forces `t` through its own
//! predecessor, and leaves the other predecessor's winner free.

use crate::probability::{propagate, GameWinMatrix, TeamWinMatrix};
use crate::tournament::{Bracket, TeamId, Tournament};

use super::OptimizeError;

/// Expected score of one entry under `P^game` (the closed-form objective all
/// single-entry solvers maximize).
pub fn expected_single_score(t: &Tournament, pg: &GameWinMatrix, entry: &Bracket) -> f64 {
    t.games()
        .map(|g| Tournament::round_weight(t.round_of(g)) as f64 * pg.get(entry.winner(g), g))
        .sum()
}

/// The exact maximizer of the expected single-entry score. Ties resolve to
/// the lowest team id at every choice, so the result is deterministic.
pub fn best_single_entry(t: &Tournament, p: &TeamWinMatrix) -> Result<Bracket, OptimizeError> {
    Ok(best_single_entry_with_value(t, p)?.0)
}

pub fn best_single_entry_with_value(
    t: &Tournament,
    p: &TeamWinMatrix,
) -> Result<(Bracket, f64), OptimizeError> {
    let (pg, _) = propagate(t, p)?;
    Ok(best_entry_for_game_matrix(t, &pg))
}

pub(crate) fn best_entry_for_game_matrix(t: &Tournament, pg: &GameWinMatrix) -> (Bracket, f64) {
    // value[g-1][team - range.start] = best expected points from the
    // sub-tournament of g, given the entry picks `team` to win g
    let mut value: Vec<Vec<f64>> = vec![Vec::new(); t.game_count() as usize];
    for game in t.games() {
        let round = t.round_of(game);
        let weight = Tournament::round_weight(round) as f64;
        let table: Vec<f64> = t
            .team_range(game)
            .map(|team| {
                let own_points = weight * pg.get(team, game);
                match t.predecessors(game) {
                    None => own_points,
                    Some(_) => {
                        let own = t.pred_on_path(game, team);
                        let other = t.pred_off_path(game, team);
                        let carried =
                            value[own as usize - 1][(team - *t.team_range(own).start()) as usize];
                        let free = best_of(&value[other as usize - 1]).1;
                        own_points + carried + free
                    }
                }
            })
            .collect();
        value[game as usize - 1] = table;
    }

    let final_game = t.game_count();
    let (champion_local, best_value) = best_of(&value[final_game as usize - 1]);
    let champion = *t.team_range(final_game).start() + champion_local as TeamId;

    // reconstruct picks from the final down; the off-path branch re-selects
    // its own argmax
    let mut winners = vec![0 as TeamId; t.game_count() as usize];
    let mut stack = vec![(final_game, champion)];
    while let Some((game, team)) = stack.pop() {
        winners[game as usize - 1] = team;
        if t.round_of(game) > 1 {
            let own = t.pred_on_path(game, team);
            let other = t.pred_off_path(game, team);
            let (local, _) = best_of(&value[other as usize - 1]);
            let other_team = *t.team_range(other).start() + local as TeamId;
            stack.push((own, team));
            stack.push((other, other_team));
        }
    }
    let bracket = Bracket::from_winners(t, winners).expect("winners has full length");
    debug_assert!(crate::tournament::is_feasible(t, &bracket));
    (bracket, best_value)
}

/// Index and value of the maximum, ties to the lowest index.
fn best_of(values: &[f64]) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_ems;
    use crate::probability::propagate;
    use crate::testutil::{diverse_matrix, four_team_brackets, t4};
    use crate::tournament::{enumerate_brackets, EntrySet};

    #[test]
    fn diverse_matrix_best_single_is_b1() {
        let t = t4();
        let (entry, value) = best_single_entry_with_value(&t, &diverse_matrix()).unwrap();
        assert_eq!(entry, four_team_brackets()[0]);
        assert!((value - 2.0515).abs() < 1e-9);
    }

    #[test]
    fn binary_matrix_returns_forced_outcome() {
        let t = Tournament::new(8).unwrap();
        // team 5 beats everyone, higher id wins otherwise
        let p = TeamWinMatrix::from_fn(8, |a, b| {
            if a == 5 {
                1.0
            } else if b == 5 {
                0.0
            } else if a > b {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let (entry, value) = best_single_entry_with_value(&t, &p).unwrap();
        assert_eq!(value, t.max_score() as f64);
        assert_eq!(entry.champion(), 5);
        let set = EntrySet::new(&t, vec![entry]).unwrap();
        assert!((brute_force_ems(&t, &p, &set).unwrap() - t.max_score() as f64).abs() < 1e-9);
    }

    #[test]
    fn uniform_value_is_one_point_five() {
        let t = t4();
        let (_, value) = best_single_entry_with_value(&t, &TeamWinMatrix::uniform(4)).unwrap();
        assert!((value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn matches_enumeration_argmax_on_random_instances() {
        for seed in 0..30u64 {
            let tc = [4u32, 8, 16][seed as usize % 3];
            let t = Tournament::new(tc).unwrap();
            let p = TeamWinMatrix::random(t.team_count(), seed);
            let (pg, _) = propagate(&t, &p).unwrap();
            let best_enum = enumerate_brackets(&t)
                .unwrap()
                .into_iter()
                .map(|b| expected_single_score(&t, &pg, &b))
                .fold(f64::NEG_INFINITY, f64::max);
            let (entry, value) = best_single_entry_with_value(&t, &p).unwrap();
            assert!((value - best_enum).abs() < 1e-9, "seed {seed}");
            assert!((expected_single_score(&t, &pg, &entry) - value).abs() < 1e-9);
        }
    }
}
