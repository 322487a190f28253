//! Sequential entry selection with diversification constraints.
//!
//! Each step solves the single-entry problem subject to constraints against
//! the already-chosen entries: champion caps `⌈e·P^round⌉` in the last two
//! rounds, a unique finalist pair per entry, and pairwise overlap caps
//! (global or per round). Exact by constrained enumeration for `t <= 16`,
//! hill climbing with constraint filtering otherwise.

use crate::probability::{propagate, GameWinMatrix, RoundWinMatrix, TeamWinMatrix};
use crate::rng::{derive_seed, SplitRng};
use crate::tournament::{Bracket, EntrySet, TeamId, Tournament};

use super::single::{best_entry_for_game_matrix, expected_single_score};
use super::subproblem::apply_move;
use super::{
    champion_cap, prop_plus_generate, DiversificationConfig, OptimizeError, PropPlusThresholds,
    SolveBudget,
};

pub fn sip_generate(
    t: &Tournament,
    p: &TeamWinMatrix,
    entry_count: usize,
    config: &DiversificationConfig,
    budget: &SolveBudget,
) -> Result<EntrySet, OptimizeError> {
    if entry_count == 0 {
        return Err(OptimizeError::ZeroEntries);
    }
    config.validate()?;
    budget.validate()?;
    let (pg, pr) = propagate(t, p)?;
    precheck(t, entry_count, config, &pr)?;

    let mut chosen: Vec<Bracket> = Vec::with_capacity(entry_count);
    for step in 0..entry_count {
        let ctx = Constraints {
            t,
            config,
            entry_count,
            round_matrix: &pr,
            previous: &chosen,
        };
        let next = if t.team_count() <= 16 {
            constrained_enumeration(t, &pg, &ctx, step)?
        } else {
            constrained_local_search(t, &pg, &pr, &ctx, budget, step)?
        };
        chosen.push(next);
    }
    Ok(EntrySet::new(t, chosen)?)
}

/// Counting arguments that prove infeasibility before any search.
fn precheck(
    t: &Tournament,
    e: usize,
    config: &DiversificationConfig,
    pr: &RoundWinMatrix,
) -> Result<(), OptimizeError> {
    let fail = |entry, family: &str| {
        Err(OptimizeError::Infeasible {
            entry,
            family: family.to_string(),
        })
    };
    if config.enable_champion {
        let last = t.round_count();
        for round in [last - 1, last] {
            // each entry picks games_in_round(round) teams in that round
            let need = e as u64 * t.games_in_round(round) as u64;
            let supply: u64 = t
                .teams()
                .map(|team| champion_cap(e, pr.get(team, round)) as u64)
                .sum();
            if supply < need {
                let binds_at = supply / t.games_in_round(round) as u64 + 1;
                return fail(binds_at as usize, "champion");
            }
        }
    }
    if config.enable_finalist {
        let half = t.team_count() as u64 / 2;
        if (half * half) < e as u64 {
            return fail((half * half) as usize + 1, "finalist");
        }
    }
    if config.global_sigma == Some(0) && e > 2 {
        return fail(3, "global");
    }
    if let Some(sigmas) = config.round_sigmas {
        for (idx, &sigma) in sigmas.iter().enumerate() {
            let round = idx as u16 + 1;
            if round <= t.round_count() && sigma == 0 && e > (1usize << round) {
                return fail((1usize << round) + 1, "round");
            }
        }
    }
    Ok(())
}

struct Constraints<'a> {
    t: &'a Tournament,
    config: &'a DiversificationConfig,
    entry_count: usize,
    round_matrix: &'a RoundWinMatrix,
    previous: &'a [Bracket],
}

impl Constraints<'_> {
    fn finalist_pair(&self, b: &Bracket) -> (TeamId, TeamId) {
        let t = self.t;
        let (sf1, sf2) = t
            .predecessors(t.game_count())
            .expect("final has predecessors");
        (b.winner(sf1), b.winner(sf2))
    }

    /// Which families the candidate violates against the chosen entries.
    fn violations(&self, candidate: &Bracket) -> Vec<&'static str> {
        let t = self.t;
        let mut out = Vec::new();
        if self.config.enable_champion {
            let last = t.round_count();
            'champion: for round in [last - 1, last] {
                for pos in 1..=t.games_in_round(round) {
                    let game = t.game_id(round, pos);
                    let team = candidate.winner(game);
                    let cap = champion_cap(self.entry_count, self.round_matrix.get(team, round));
                    let prior = self
                        .previous
                        .iter()
                        .filter(|b| b.winner(game) == team)
                        .count() as u32;
                    if prior + 1 > cap {
                        out.push("champion");
                        break 'champion;
                    }
                }
            }
        }
        if self.config.enable_finalist {
            let pair = self.finalist_pair(candidate);
            if self.previous.iter().any(|b| self.finalist_pair(b) == pair) {
                out.push("finalist");
            }
        }
        if let Some(sigma) = self.config.global_sigma {
            let over = self.previous.iter().any(|b| {
                let same = candidate
                    .winners()
                    .iter()
                    .zip(b.winners())
                    .filter(|(a, b)| a == b)
                    .count() as u32;
                same > sigma
            });
            if over {
                out.push("global");
            }
        }
        if let Some(sigmas) = self.config.round_sigmas {
            'rounds: for b in self.previous {
                let mut per_round = vec![0u32; t.round_count() as usize];
                for game in t.games() {
                    if candidate.winner(game) == b.winner(game) {
                        per_round[t.round_of(game) as usize - 1] += 1;
                    }
                }
                for (idx, &sigma) in sigmas.iter().enumerate() {
                    let round = idx as u16 + 1;
                    if round > t.round_count() {
                        break;
                    }
                    // caps no smaller than the round's game count are vacuous
                    let cap = sigma.min(t.games_in_round(round) as u32);
                    if per_round[idx] > cap {
                        out.push("round");
                        break 'rounds;
                    }
                }
            }
        }
        out
    }

    fn satisfied(&self, candidate: &Bracket) -> bool {
        self.violations(candidate).is_empty()
    }

    /// Name the family that blocks every candidate, for error reporting:
    /// the family violated most often across the rejected candidates.
    fn binding_family(&self, rejected: &[Vec<&'static str>]) -> String {
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for violations in rejected {
            for v in violations {
                *counts.entry(v).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .max_by_key(|&(_, c)| c)
            .map(|(f, _)| f.to_string())
            .unwrap_or_else(|| "unknown".to_string())
    }
}

fn constrained_enumeration(
    t: &Tournament,
    pg: &GameWinMatrix,
    ctx: &Constraints<'_>,
    step: usize,
) -> Result<Bracket, OptimizeError> {
    let all = crate::tournament::enumerate_brackets(t)?;
    let mut best: Option<(f64, &Bracket)> = None;
    let mut rejected = Vec::new();
    for b in &all {
        let violations = ctx.violations(b);
        if !violations.is_empty() {
            if rejected.len() < 4096 {
                rejected.push(violations);
            }
            continue;
        }
        let value = expected_single_score(t, pg, b);
        if best.is_none_or(|(v, _)| value > v) {
            best = Some((value, b));
        }
    }
    match best {
        Some((_, b)) => Ok(b.clone()),
        None => Err(OptimizeError::Infeasible {
            entry: step + 1,
            family: ctx.binding_family(&rejected),
        }),
    }
}

fn constrained_local_search(
    t: &Tournament,
    pg: &GameWinMatrix,
    pr: &RoundWinMatrix,
    ctx: &Constraints<'_>,
    budget: &SolveBudget,
    step: usize,
) -> Result<Bracket, OptimizeError> {
    // seed order: exact single-entry optimum, the proportion heuristic's
    // step-th entry, then seeded random brackets
    let mut seeds: Vec<Bracket> = Vec::new();
    seeds.push(best_entry_for_game_matrix(t, pg).0);
    if let Ok(heur) = prop_plus_generate(
        t,
        pr,
        ctx.entry_count,
        &PropPlusThresholds::for_entry_count(ctx.entry_count),
    ) {
        seeds.push(heur.entries()[step % heur.len()].clone());
    }
    for restart in 0..budget.restarts {
        let mut rng = SplitRng::new(derive_seed(
            budget.master_seed,
            0x5349_5000 ^ ((step as u64) << 16) ^ restart as u64,
        ));
        seeds.push(random_feasible(t, &mut rng));
    }

    let mut best: Option<(f64, Bracket)> = None;
    let mut rejected = Vec::new();
    for seed in &seeds {
        let repaired = if ctx.satisfied(seed) {
            Some(seed.clone())
        } else {
            rejected.push(ctx.violations(seed));
            repair(t, pr, ctx, seed.clone())
        };
        let Some(start) = repaired else { continue };
        let (climbed, value) = climb_filtered(t, pg, pr, ctx, start);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, climbed));
        }
    }
    match best {
        Some((_, b)) => Ok(b),
        None => Err(OptimizeError::Infeasible {
            entry: step + 1,
            family: ctx.binding_family(&rejected),
        }),
    }
}

fn random_feasible(t: &Tournament, rng: &mut SplitRng) -> Bracket {
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

/// Greedy descent on the number of violated families; gives up after a
/// bounded number of non-improving sweeps.
fn repair(
    t: &Tournament,
    pr: &RoundWinMatrix,
    ctx: &Constraints<'_>,
    start: Bracket,
) -> Option<Bracket> {
    let mut current = start;
    let mut current_violations = ctx.violations(&current).len();
    for _ in 0..64 {
        if current_violations == 0 {
            return Some(current);
        }
        let mut best: Option<(usize, Bracket)> = None;
        for game in t.games() {
            for team in t.team_range(game) {
                if team == current.winner(game) {
                    continue;
                }
                let cand = apply_move(t, &current, game, team, pr);
                let v = ctx.violations(&cand).len();
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, cand));
                }
            }
        }
        match best {
            Some((v, cand)) if v < current_violations => {
                current = cand;
                current_violations = v;
            }
            _ => return None,
        }
    }
    (current_violations == 0).then_some(current)
}

fn climb_filtered(
    t: &Tournament,
    pg: &GameWinMatrix,
    pr: &RoundWinMatrix,
    ctx: &Constraints<'_>,
    start: Bracket,
) -> (Bracket, f64) {
    let mut current = start;
    let mut value = expected_single_score(t, pg, &current);
    loop {
        let mut best: Option<(f64, Bracket)> = None;
        for game in t.games() {
            for team in t.team_range(game) {
                if team == current.winner(game) {
                    continue;
                }
                let cand = apply_move(t, &current, game, team, pr);
                if !ctx.satisfied(&cand) {
                    continue;
                }
                let v = expected_single_score(t, pg, &cand);
                if v > value && best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, cand));
                }
            }
        }
        match best {
            None => return (current, value),
            Some((v, cand)) => {
                current = cand;
                value = v;
            }
        }
    }
}
