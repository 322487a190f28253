//! Proportion heuristics: build all entries together so that each team is
//! selected in each round about `e · P^round[t,r]` times.
//!
//! Rounds are processed from the championship backward. In every step the
//! entry with the lowest current expected score receives one pick: the
//! eligible team with the largest squared-error reduction toward its target
//! count, i.e. the largest deficit `e · P^round[t,r] − N[t,r]`. The pick is
//! propagated down the team's path through every earlier round, which keeps
//! entries feasible by construction. The enhanced variant additionally
//! requires `P^round[t,r] > P̂_r` for eligibility, falling back to a game's
//! full team set when the filter would empty it.

use crate::probability::RoundWinMatrix;
use crate::tournament::{Bracket, EntrySet, TeamId, Tournament};

use super::{OptimizeError, PropPlusThresholds};

/// Baseline proportion algorithm.
pub fn prop_generate(
    t: &Tournament,
    round: &RoundWinMatrix,
    entry_count: usize,
) -> Result<EntrySet, OptimizeError> {
    prop_core(t, round, entry_count, None)
}

/// Proportion algorithm with per-round eligibility thresholds.
pub fn prop_plus_generate(
    t: &Tournament,
    round: &RoundWinMatrix,
    entry_count: usize,
    thresholds: &PropPlusThresholds,
) -> Result<EntrySet, OptimizeError> {
    prop_core(t, round, entry_count, Some(thresholds))
}

fn prop_core(
    t: &Tournament,
    round_matrix: &RoundWinMatrix,
    entry_count: usize,
    thresholds: Option<&PropPlusThresholds>,
) -> Result<EntrySet, OptimizeError> {
    if entry_count == 0 {
        return Err(OptimizeError::ZeroEntries);
    }
    t.check_same(round_matrix.team_count())?;
    let games = t.game_count() as usize;
    let e = entry_count;

    let mut winners: Vec<Vec<TeamId>> = vec![vec![0; games]; e];
    let mut expected: Vec<f64> = vec![0.0; e]; // current expected score q_e
    let mut picks = vec![0u32; t.team_count() as usize * t.round_count() as usize]; // N[t,r]
    let pick_idx =
        |team: TeamId, r: u16| (team as usize - 1) * t.round_count() as usize + r as usize - 1;

    for round in (1..=t.round_count()).rev() {
        let mut active: Vec<usize> = (0..e).collect();
        while !active.is_empty() {
            // entry with the lowest current expected score, ties to the
            // lowest index
            let (slot, &entry) = active
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    expected[**a]
                        .partial_cmp(&expected[**b])
                        .expect("scores are finite")
                })
                .expect("active set is nonempty");

            // eligible teams across this entry's unfilled games of the round
            let mut best: Option<(f64, TeamId)> = None;
            let mut unfilled = 0u16;
            for pos in 1..=t.games_in_round(round) {
                let game = t.game_id(round, pos);
                if winners[entry][game as usize - 1] != 0 {
                    continue;
                }
                unfilled += 1;
                let threshold = thresholds.map(|th| th.value(round));
                let mut game_has_candidate = false;
                let consider = |team: TeamId, best: &mut Option<(f64, TeamId)>| {
                    let deficit = e as f64 * round_matrix.get(team, round)
                        - picks[pick_idx(team, round)] as f64;
                    if best.is_none_or(|(d, _)| deficit > d) {
                        *best = Some((deficit, team));
                    }
                };
                if let Some(th) = threshold {
                    for team in t.team_range(game) {
                        if round_matrix.get(team, round) > th {
                            game_has_candidate = true;
                            consider(team, &mut best);
                        }
                    }
                }
                if threshold.is_none() || !game_has_candidate {
                    // unfiltered, or the filter emptied this game's set
                    for team in t.team_range(game) {
                        consider(team, &mut best);
                    }
                }
            }
            debug_assert!(unfilled > 0, "entries leave the set once filled");
            let (_, team) = best.expect("every unfilled game contributes candidates");

            // back-propagate the pick along the team's path
            for r in 1..=round {
                let game = t.game_of(team, r);
                debug_assert_eq!(winners[entry][game as usize - 1], 0);
                winners[entry][game as usize - 1] = team;
                expected[entry] += Tournament::round_weight(r) as f64 * round_matrix.get(team, r);
                picks[pick_idx(team, r)] += 1;
            }

            if unfilled == 1 {
                active.remove(slot);
            }
        }
    }

    let entries = winners
        .into_iter()
        .map(|w| Bracket::from_winners(t, w).expect("full length"))
        .collect();
    Ok(EntrySet::new(t, entries)?)
}
