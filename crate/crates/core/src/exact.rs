//! Exact EMS: outcome enumeration (the oracle) and the dynamic program.
//!
//! The DP runs over states `(g, t, x⃗)`: the joint probability `Z` that team
//! `t` wins game `g` while the entries score the vector `x⃗` inside the
//! sub-tournament rooted at `g`. One unified recurrence covers every case of
//! whether each entry picked `t*` at `g*`:
//!
//! `Z[g*,t*,x⃗*] = Σ_{x⃗_γ} Z[g_γ,t*,x⃗_γ] · Σ_{t∈𝒯(g_δ)} P^team[t*,t] · Z[g_δ,t,x⃗* − x⃗_γ − a⃗]`
//!
//! where `g_γ`/`g_δ` are the predecessor on/off `t*`'s path and `a⃗_k` is the
//! round weight if entry `k` picks `t*` at `g*`, else 0. Round-1 games seed
//! `Z[g,t,a⃗] = P^team[t,t']`. The EMS is `Σ max_k(x⃗_k) · Z[final,t,x⃗]`.
//!
//! Score axes are dense arrays over `0..=r·2^(r-1)` per entry; the expensive
//! gather over `(x⃗_γ, t, x⃗_δ)` is reorganized as a scatter convolution with
//! the `Σ_t` factor hoisted, which keeps the final round cheap enough to run
//! 32-team two-entry instances in well under a second.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::probability::{ProbabilityError, TeamWinMatrix};
use crate::rng::derive_seed;
use crate::simulation::sim_outcome;
use crate::tournament::{score_unchecked, Bracket, EntrySet, Tournament, TournamentError};

/// Outcome enumeration is limited to `2^(t-1)` outcomes with `t` at most this.
pub const BRUTE_FORCE_MAX_TEAMS: u16 = 16;

/// Hard ceiling on the DP state count (memory guard for large `t`).
pub const DP_MAX_STATES: u128 = 1 << 30;

#[derive(Debug, Error)]
pub enum EmsError {
    #[error(
        "enumerating 2^(t-1) outcomes is refused for t={0} (limit {BRUTE_FORCE_MAX_TEAMS}); \
         use dp_ems for e <= 2 or mc_ems"
    )]
    BruteForceTooLarge(u16),
    #[error(
        "exact DP is limited to e <= 2 for any t, or e = 3 with t <= 8; \
         e={entry_count}, t={team_count} needs an estimated {estimated_states} states"
    )]
    StateGuard {
        entry_count: usize,
        team_count: u16,
        estimated_states: u128,
    },
    #[error("runtime probe accepts powers of two up to 32, got {0}")]
    BadProbeSize(u32),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
}

/// Probability that `outcome` is the realized tournament: the product over
/// games of `P^team[winner, loser]`, where the loser of a later-round game is
/// the winner of the predecessor the game's winner did not come from.
pub fn outcome_probability(
    t: &Tournament,
    p: &TeamWinMatrix,
    outcome: &Bracket,
) -> Result<f64, EmsError> {
    t.check_same(p.team_count())?;
    let violations = crate::tournament::validate_bracket(t, outcome)?;
    if !violations.is_empty() {
        return Err(TournamentError::Infeasible(violations).into());
    }
    Ok(outcome_probability_unchecked(t, p, outcome))
}

pub(crate) fn outcome_probability_unchecked(
    t: &Tournament,
    p: &TeamWinMatrix,
    outcome: &Bracket,
) -> f64 {
    let mut prob = 1.0;
    for game in t.games() {
        let winner = outcome.winner(game);
        let loser = match t.predecessors(game) {
            None => {
                let lo = *t.team_range(game).start();
                if winner == lo {
                    lo + 1
                } else {
                    lo
                }
            }
            Some(_) => outcome.winner(t.pred_off_path(game, winner)),
        };
        prob *= p.get(winner, loser);
    }
    prob
}

/// Exact EMS by full enumeration of the `2^(t-1)` outcomes. The reference
/// oracle for everything else; guarded to `t <= 16`.
pub fn brute_force_ems(t: &Tournament, p: &TeamWinMatrix, set: &EntrySet) -> Result<f64, EmsError> {
    if t.team_count() > BRUTE_FORCE_MAX_TEAMS {
        return Err(EmsError::BruteForceTooLarge(t.team_count()));
    }
    t.check_same(p.team_count())?;
    t.check_same(set.team_count())?;
    p.validate()?;

    let games = t.game_count() as usize;
    let n = 1u64 << games;
    let mut winners = vec![0u16; games];
    let mut total = 0.0f64;
    for idx in 0..n {
        let mut prob = 1.0f64;
        for game in t.games() {
            let second = (idx >> (game - 1)) & 1 == 1;
            let (a, b) = match t.predecessors(game) {
                None => {
                    let lo = *t.team_range(game).start();
                    (lo, lo + 1)
                }
                Some((p1, p2)) => (winners[p1 as usize - 1], winners[p2 as usize - 1]),
            };
            let (w, l) = if second { (b, a) } else { (a, b) };
            winners[game as usize - 1] = w;
            prob *= p.get(w, l);
        }
        if prob == 0.0 {
            continue;
        }
        let outcome = Bracket::from_winners(t, winners.clone()).expect("length is right");
        let best = set
            .entries()
            .iter()
            .map(|e| score_unchecked(t, e, &outcome))
            .max()
            .expect("nonempty");
        total += prob * best as f64;
    }
    Ok(total)
}

/// Highest score an entry can collect inside the sub-tournament of a
/// round-`r` game: one pick per round with weights `2^(r'-1)`.
fn subtree_score_cap(round: u16) -> usize {
    round as usize * (1usize << (round - 1))
}

/// Estimated DP state count `Σ_g |𝒯(g)| · (cap(r(g))+1)^e`.
pub fn dp_state_estimate(t: &Tournament, entry_count: usize) -> u128 {
    let mut total: u128 = 0;
    for round in 1..=t.round_count() {
        let dim = (subtree_score_cap(round) + 1) as u128;
        let per_team = dim.saturating_pow(entry_count as u32);
        total = total.saturating_add(t.games_in_round(round) as u128 * (1u128 << round) * per_team);
    }
    total
}

fn dp_guard(t: &Tournament, entry_count: usize) -> Result<(), EmsError> {
    let states = dp_state_estimate(t, entry_count);
    let allowed = match entry_count {
        1 | 2 => states <= DP_MAX_STATES,
        3 => t.team_count() <= 8,
        _ => false,
    };
    if allowed {
        Ok(())
    } else {
        Err(EmsError::StateGuard {
            entry_count,
            team_count: t.team_count(),
            estimated_states: states,
        })
    }
}

/// DP result plus the per-game probability mass (each must be 1).
#[derive(Debug, Clone)]
pub struct DpOutcome {
    pub ems: f64,
    /// Index `g-1`: `Σ_{t,x⃗} Z[g,t,x⃗]`.
    pub per_game_mass: Vec<f64>,
}

/// Exact EMS via the dynamic program. Equals [`brute_force_ems`] within 1e-9
/// wherever both run; supports `e <= 2` for any `t` and `e = 3` for `t <= 8`.
pub fn dp_ems(t: &Tournament, p: &TeamWinMatrix, set: &EntrySet) -> Result<f64, EmsError> {
    Ok(dp_ems_full(t, p, set)?.ems)
}

pub fn dp_ems_full(
    t: &Tournament,
    p: &TeamWinMatrix,
    set: &EntrySet,
) -> Result<DpOutcome, EmsError> {
    t.check_same(p.team_count())?;
    t.check_same(set.team_count())?;
    p.validate()?;
    let e = set.len();
    dp_guard(t, e)?;

    let entries = set.entries();
    let rounds = t.round_count();

    // Per-round target dimensions and the projection of a previous-round flat
    // score index into the current round's stride space. Flat target indices
    // add linearly: flat(x⃗_γ + x⃗_δ + a⃗) = proj[iγ] + proj[iδ] + flat(a⃗).
    let mut tables: Vec<Option<Vec<f64>>> = vec![None; t.game_count() as usize];
    let mut per_game_mass = vec![0.0f64; t.game_count() as usize];

    for round in 1..=rounds {
        let dim = subtree_score_cap(round) + 1;
        let states: usize = dim.pow(e as u32);
        let strides: Vec<usize> = (0..e).map(|k| dim.pow(k as u32)).collect();

        let proj: Vec<usize> = if round == 1 {
            Vec::new()
        } else {
            let prev_dim = subtree_score_cap(round - 1) + 1;
            let prev_states = prev_dim.pow(e as u32);
            (0..prev_states)
                .map(|mut i| {
                    let mut flat = 0usize;
                    for stride in &strides {
                        flat += (i % prev_dim) * stride;
                        i /= prev_dim;
                    }
                    flat
                })
                .collect()
        };

        let weight = Tournament::round_weight(round) as usize;
        for pos in 1..=t.games_in_round(round) {
            let game = t.game_id(round, pos);
            let team_lo = *t.team_range(game).start();
            let team_count = 1usize << round;

            let planes: Vec<Vec<f64>> = (0..team_count as u16)
                .into_par_iter()
                .map(|local| {
                    let team = team_lo + local;
                    let mut plane = vec![0.0f64; states];
                    // entry-pick offset a⃗ in flat target space
                    let fa: usize = entries
                        .iter()
                        .zip(&strides)
                        .map(|(entry, stride)| {
                            if entry.winner(game) == team {
                                weight * stride
                            } else {
                                0
                            }
                        })
                        .sum();
                    match t.predecessors(game) {
                        None => {
                            let other = if team == team_lo {
                                team_lo + 1
                            } else {
                                team_lo
                            };
                            plane[fa] = p.get(team, other);
                        }
                        Some(_) => {
                            let own = t.pred_on_path(game, team);
                            let other = t.pred_off_path(game, team);
                            let own_table = tables[own as usize - 1].as_ref().unwrap();
                            let other_table = tables[other as usize - 1].as_ref().unwrap();
                            let prev_states = proj.len();
                            let own_lo = *t.team_range(own).start() as usize;
                            let other_lo = *t.team_range(other).start() as usize;

                            // Σ_t P[team,t]·Z[g_δ,t,·], hoisted out of the convolution
                            let mut mixed = vec![0.0f64; prev_states];
                            for opp in t.team_range(other) {
                                let w = p.get(team, opp);
                                if w == 0.0 {
                                    continue;
                                }
                                let row = &other_table[(opp as usize - other_lo) * prev_states..]
                                    [..prev_states];
                                for (m, z) in mixed.iter_mut().zip(row) {
                                    *m += w * z;
                                }
                            }

                            let own_row =
                                &own_table[(team as usize - own_lo) * prev_states..][..prev_states];
                            for (ig, &zg) in own_row.iter().enumerate() {
                                if zg == 0.0 {
                                    continue;
                                }
                                let base = fa + proj[ig];
                                for (id, &m) in mixed.iter().enumerate() {
                                    if m != 0.0 {
                                        plane[base + proj[id]] += zg * m;
                                    }
                                }
                            }
                        }
                    }
                    plane
                })
                .collect();

            let mut table = Vec::with_capacity(team_count * states);
            for plane in planes {
                table.extend_from_slice(&plane);
            }
            per_game_mass[game as usize - 1] = table.iter().sum();
            tables[game as usize - 1] = Some(table);

            // predecessor tables are no longer needed
            if let Some((p1, p2)) = t.predecessors(game) {
                tables[p1 as usize - 1] = None;
                tables[p2 as usize - 1] = None;
            }
        }
    }

    // final assembly: E[S] = Σ_t Σ_x⃗ max_k(x⃗_k) · Z
    let final_game = t.game_count();
    let table = tables[final_game as usize - 1].take().unwrap();
    let dim = subtree_score_cap(rounds) + 1;
    let states = dim.pow(e as u32);
    let mut ems = 0.0f64;
    for (i, &z) in table.iter().enumerate() {
        if z == 0.0 {
            continue;
        }
        let mut rest = i % states;
        let mut best = 0usize;
        for _ in 0..e {
            best = best.max(rest % dim);
            rest /= dim;
        }
        ems += best as f64 * z;
    }
    Ok(DpOutcome { ems, per_game_mass })
}

/// Wall-clock table for two-entry [`dp_ems`] on random entries, one row per
/// tournament size.
pub fn dp_runtime_probe(t_values: &[u32], seed: u64) -> Result<Vec<(u32, f64)>, EmsError> {
    let mut rows = Vec::new();
    for &tc in t_values {
        if !(4..=32).contains(&tc) || !tc.is_power_of_two() {
            return Err(EmsError::BadProbeSize(tc));
        }
        let t = Tournament::new(tc)?;
        let p = TeamWinMatrix::random(t.team_count(), derive_seed(seed, tc as u64));
        let entry_seed = derive_seed(seed, tc as u64 ^ 0xabcd);
        let set = EntrySet::new(
            &t,
            vec![
                sim_outcome(&t, &p, entry_seed, 0),
                sim_outcome(&t, &p, entry_seed, 1),
            ],
        )?;
        let started = Instant::now();
        let _ = dp_ems(&t, &p, &set)?;
        rows.push((tc, started.elapsed().as_secs_f64()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{propagate, PROB_TOL};
    use crate::testutil::{diverse_matrix, favorite_matrix, four_team_brackets, t4};
    use crate::tournament::enumerate_brackets;

    fn set(t: &Tournament, brackets: &[&Bracket]) -> EntrySet {
        EntrySet::new(t, brackets.iter().map(|b| (*b).clone()).collect()).unwrap()
    }

    #[test]
    fn outcome_probability_examples() {
        let t = t4();
        let b = four_team_brackets();
        let uniform = TeamWinMatrix::uniform(4);
        for br in &b {
            assert!((outcome_probability(&t, &uniform, br).unwrap() - 0.125).abs() < 1e-15);
        }
        let p = diverse_matrix();
        assert!((outcome_probability(&t, &p, &b[0]).unwrap() - 0.21175).abs() < 1e-12);
        let total: f64 = b
            .iter()
            .map(|br| outcome_probability(&t, &p, br).unwrap())
            .sum();
        assert!((total - 1.0).abs() < PROB_TOL);
    }

    #[test]
    fn outcome_probability_sums_to_one_on_larger_fields() {
        let t = Tournament::new(8).unwrap();
        let p = TeamWinMatrix::random(8, 3);
        let total: f64 = enumerate_brackets(&t)
            .unwrap()
            .iter()
            .map(|o| outcome_probability(&t, &p, o).unwrap())
            .sum();
        assert!((total - 1.0).abs() < PROB_TOL);
    }

    #[test]
    fn worked_example_values_brute_force() {
        let t = t4();
        let p = diverse_matrix();
        let b = four_team_brackets();
        let ems1 = brute_force_ems(&t, &p, &set(&t, &[&b[0]])).unwrap();
        assert!((ems1 - 2.0515).abs() < 1e-9);
        let ems17 = brute_force_ems(&t, &p, &set(&t, &[&b[0], &b[6]])).unwrap();
        assert!((ems17 - 2.72275).abs() < 1e-9);
        let ems23 = brute_force_ems(&t, &p, &set(&t, &[&b[1], &b[2]])).unwrap();
        assert!((ems23 - 2.83425).abs() < 1e-9);
    }

    #[test]
    fn brute_force_guard() {
        let t = Tournament::new(32).unwrap();
        let p = TeamWinMatrix::uniform(32);
        let o = sim_outcome(&t, &p, 1, 0);
        let s = EntrySet::new(&t, vec![o]).unwrap();
        assert!(matches!(
            brute_force_ems(&t, &p, &s),
            Err(EmsError::BruteForceTooLarge(32))
        ));
    }

    #[test]
    fn dp_matches_worked_example_values() {
        let t = t4();
        let p = diverse_matrix();
        let b = four_team_brackets();
        assert!((dp_ems(&t, &p, &set(&t, &[&b[0], &b[6]])).unwrap() - 2.72275).abs() < 1e-9);
        assert!((dp_ems(&t, &p, &set(&t, &[&b[0]])).unwrap() - 2.0515).abs() < 1e-9);
    }

    #[test]
    fn dp_favorite_matrix_optimal_pair_keeps_champion() {
        let t = t4();
        let p = favorite_matrix();
        let b = four_team_brackets();
        let mut best = (f64::MIN, 0, 0);
        for i in 0..8 {
            for j in i + 1..8 {
                let v = dp_ems(&t, &p, &set(&t, &[&b[i], &b[j]])).unwrap();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        assert_eq!((best.1, best.2), (0, 1)); // {B1,B2}, both champion A
    }

    #[test]
    fn dp_equals_brute_force_on_random_instances() {
        for (tc, es, runs) in [
            (4u32, vec![1usize, 2], 40),
            (8, vec![1, 2, 3], 25),
            (16, vec![1, 2], 10),
        ] {
            let t = Tournament::new(tc).unwrap();
            for run in 0..runs {
                let p =
                    TeamWinMatrix::random(t.team_count(), derive_seed(17, (tc as u64) << 8 | run));
                for &e in &es {
                    let entries: Vec<Bracket> = (0..e)
                        .map(|i| sim_outcome(&t, &p, derive_seed(run, i as u64), i as u64))
                        .collect();
                    let s = EntrySet::new(&t, entries).unwrap();
                    let a = brute_force_ems(&t, &p, &s).unwrap();
                    let b = dp_ems(&t, &p, &s).unwrap();
                    assert!((a - b).abs() < 1e-9, "t={tc} e={e} brute={a} dp={b}");
                }
            }
        }
    }

    #[test]
    fn dp_single_entry_matches_expected_score_formula() {
        let t = Tournament::new(8).unwrap();
        let p = TeamWinMatrix::random(8, 99);
        let (pg, _) = propagate(&t, &p).unwrap();
        let entry = sim_outcome(&t, &p, 5, 0);
        let closed_form: f64 = t
            .games()
            .map(|g| Tournament::round_weight(t.round_of(g)) as f64 * pg.get(entry.winner(g), g))
            .sum();
        let s = EntrySet::new(&t, vec![entry]).unwrap();
        assert!((dp_ems(&t, &p, &s).unwrap() - closed_form).abs() < 1e-9);
    }

    #[test]
    fn dp_mass_is_conserved_per_game() {
        let t = Tournament::new(16).unwrap();
        let p = TeamWinMatrix::random(16, 21);
        let s = EntrySet::new(
            &t,
            vec![sim_outcome(&t, &p, 2, 0), sim_outcome(&t, &p, 2, 1)],
        )
        .unwrap();
        let full = dp_ems_full(&t, &p, &s).unwrap();
        for (idx, mass) in full.per_game_mass.iter().enumerate() {
            assert!(
                (mass - 1.0).abs() < PROB_TOL,
                "game {} mass {}",
                idx + 1,
                mass
            );
        }
    }

    #[test]
    fn dp_handles_duplicate_entries() {
        // duplicates are legitimate entries; the pair {B1,B1} scores as B1
        let t = t4();
        let p = diverse_matrix();
        let b1 = &four_team_brackets()[0];
        let twice = set(&t, &[b1, b1]);
        assert!((dp_ems(&t, &p, &twice).unwrap() - 2.0515).abs() < 1e-9);
        assert!((brute_force_ems(&t, &p, &twice).unwrap() - 2.0515).abs() < 1e-9);
    }

    #[test]
    fn dp_guard_rejects_large_entry_counts() {
        let t = Tournament::new(64).unwrap();
        let p = TeamWinMatrix::uniform(64);
        let entries: Vec<Bracket> = (0..4).map(|i| sim_outcome(&t, &p, 3, i)).collect();
        let s = EntrySet::new(&t, entries).unwrap();
        match dp_ems(&t, &p, &s) {
            Err(EmsError::StateGuard {
                estimated_states, ..
            }) => assert!(estimated_states > 0),
            other => panic!("expected guard refusal, got {other:?}"),
        }
        // e = 3 beyond t = 8 is refused as well
        let t16 = Tournament::new(16).unwrap();
        let p16 = TeamWinMatrix::uniform(16);
        let entries: Vec<Bracket> = (0..3).map(|i| sim_outcome(&t16, &p16, 3, i)).collect();
        let s = EntrySet::new(&t16, entries).unwrap();
        assert!(matches!(
            dp_ems(&t16, &p16, &s),
            Err(EmsError::StateGuard { .. })
        ));
    }

    #[test]
    fn disjoint_pairs_under_uniform_are_worth_2_5() {
        let t = t4();
        let uniform = TeamWinMatrix::uniform(4);
        let b = four_team_brackets();
        for (i, j) in [(0usize, 5usize), (0, 7), (1, 4), (2, 7)] {
            let v = dp_ems(&t, &uniform, &set(&t, &[&b[i], &b[j]])).unwrap();
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn dp_agrees_with_monte_carlo_beyond_enumeration_reach() {
        // at t=32 the enumeration oracle cannot run; a large-sample Monte
        // Carlo estimate pins the DP within its confidence interval
        let t = Tournament::new(32).unwrap();
        let p = TeamWinMatrix::random(32, 77);
        let set = EntrySet::new(
            &t,
            vec![sim_outcome(&t, &p, 78, 0), sim_outcome(&t, &p, 78, 1)],
        )
        .unwrap();
        let exact = dp_ems(&t, &p, &set).unwrap();
        let pool = crate::simulation::sample_pool(&t, &p, 100_000, 79).unwrap();
        let est = crate::simulation::mc_ems(&t, &set, &pool).unwrap();
        assert!(
            (exact - est.mean).abs() < 4.0 * est.ci95_halfwidth / 1.96,
            "dp {exact} vs mc {} +- {}",
            est.mean,
            est.ci95_halfwidth
        );
    }

    #[test]
    fn probe_runs_small_sizes() {
        let rows = dp_runtime_probe(&[4, 8], 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|&(_, secs)| secs >= 0.0));
        assert!(matches!(
            dp_runtime_probe(&[64], 1),
            Err(EmsError::BadProbeSize(64))
        ));
    }
}
