//! Tournament structure, brackets, feasibility, and deterministic scoring.
//!
//! A tournament over `t` teams (a power of two, at least 4) has `t - 1` games
//! in `log2(t)` rounds. Games are numbered 1-based and round-major: all round-1
//! games first, ascending by position, then round 2, and so on. Teams are the
//! dense ids `1..=t` and enter round 1 in bracket-position order, so game `k`
//! of round 1 is team `2k-1` versus team `2k`. With this layout every game's
//! team set is a contiguous id range and the whole structure is arithmetic; a
//! [`Tournament`] stores only the team count.
//!
//! A [`Bracket`] assigns one winner per game and doubles as an entry and as an
//! outcome. A correct pick in round `r` is worth `2^(r-1)` points.

use thiserror::Error;

/// Dense 1-based team identifier. Names, seeds, and regions live in a sidecar
/// metadata table (see [`crate::io::TeamMeta`]).
pub type TeamId = u16;
/// 1-based round-major game identifier.
pub type GameId = u16;

/// Largest supported team count (`u16` ids, and score sums must fit `u32`).
pub const MAX_TEAM_COUNT: u32 = 1 << 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TournamentError {
    #[error("team count must be a power of two in [4, {MAX_TEAM_COUNT}], got {0}")]
    BadTeamCount(u32),
    #[error("winners list has {got} entries, tournament has {expected} games")]
    LengthMismatch { got: usize, expected: usize },
    #[error("bracket is infeasible: {0:?}")]
    Infeasible(Vec<Violation>),
    #[error("entry set is empty")]
    EmptyEntrySet,
    #[error("tournament mismatch: expected {expected} teams, got {got}")]
    TeamCountMismatch { expected: u16, got: u16 },
    #[error("round {0} out of range 1..={1}")]
    BadRound(u16, u16),
    #[error("enumeration needs 2^(t-1) brackets; t={0} exceeds the t<=16 guard")]
    EnumerationTooLarge(u16),
}

/// One violated feasibility condition, reported per game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// The picked team cannot play this game (condition 2).
    NotInTeamSet { game: GameId, team: TeamId },
    /// The picked team was not picked at its own predecessor game
    /// (condition 3).
    NotPickedAtPredecessor { game: GameId, team: TeamId },
}

/// Structure of a single-elimination tournament; layout is fully determined
/// by the team count, see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tournament {
    team_count: u16,
    round_count: u16,
}

impl Tournament {
    pub fn new(team_count: u32) -> Result<Self, TournamentError> {
        if !(4..=MAX_TEAM_COUNT).contains(&team_count) || !team_count.is_power_of_two() {
            return Err(TournamentError::BadTeamCount(team_count));
        }
        Ok(Self {
            team_count: team_count as u16,
            round_count: team_count.trailing_zeros() as u16,
        })
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }

    pub fn round_count(&self) -> u16 {
        self.round_count
    }

    pub fn game_count(&self) -> u16 {
        self.team_count - 1
    }

    /// Round `r` has `t / 2^r` games.
    pub fn games_in_round(&self, round: u16) -> u16 {
        debug_assert!(round >= 1 && round <= self.round_count);
        self.team_count >> round
    }

    /// Points awarded for a correct pick in `round`.
    pub fn round_weight(round: u16) -> u32 {
        1 << (round - 1)
    }

    /// Maximum score of a single entry: every round offers `t/2` points.
    pub fn max_score(&self) -> u32 {
        self.round_count as u32 * self.team_count as u32 / 2
    }

    /// First game id of `round` minus one, i.e. games of `round` are
    /// `offset+1 ..= offset+games_in_round(round)`.
    fn round_offset(&self, round: u16) -> u16 {
        self.team_count - (self.team_count >> (round - 1))
    }

    pub fn game_id(&self, round: u16, pos: u16) -> GameId {
        debug_assert!(pos >= 1 && pos <= self.games_in_round(round));
        self.round_offset(round) + pos
    }

    /// Inverse of [`Self::game_id`]: the (round, position-within-round) of a game.
    pub fn round_pos(&self, game: GameId) -> (u16, u16) {
        debug_assert!(game >= 1 && game <= self.game_count());
        let mut round = 1;
        while game > self.round_offset(round) + self.games_in_round(round) {
            round += 1;
        }
        (round, game - self.round_offset(round))
    }

    pub fn round_of(&self, game: GameId) -> u16 {
        self.round_pos(game).0
    }

    /// The game the winner of `game` plays next; `None` for the final.
    pub fn successor(&self, game: GameId) -> Option<GameId> {
        let (round, pos) = self.round_pos(game);
        if round == self.round_count {
            None
        } else {
            Some(self.game_id(round + 1, pos.div_ceil(2)))
        }
    }

    /// The two games feeding `game`, in position order; `None` in round 1.
    pub fn predecessors(&self, game: GameId) -> Option<(GameId, GameId)> {
        let (round, pos) = self.round_pos(game);
        if round == 1 {
            None
        } else {
            Some((
                self.game_id(round - 1, 2 * pos - 1),
                self.game_id(round - 1, 2 * pos),
            ))
        }
    }

    /// Teams that may play `game`: a contiguous id range of size `2^round`.
    pub fn team_range(&self, game: GameId) -> std::ops::RangeInclusive<TeamId> {
        let (round, pos) = self.round_pos(game);
        let size = 1u16 << round;
        let lo = (pos - 1) * size + 1;
        lo..=lo + size - 1
    }

    pub fn team_can_play(&self, game: GameId, team: TeamId) -> bool {
        self.team_range(game).contains(&team)
    }

    /// The unique game `team` plays in `round` (assuming it keeps winning).
    pub fn game_of(&self, team: TeamId, round: u16) -> GameId {
        debug_assert!(team >= 1 && team <= self.team_count);
        let pos = (team - 1) / (1 << round) + 1;
        self.game_id(round, pos)
    }

    /// `γ⁻(game, team)`: the predecessor of `game` that `team` must win to
    /// play `game`. Requires `round_of(game) > 1` and `team ∈ 𝒯(game)`.
    pub fn pred_on_path(&self, game: GameId, team: TeamId) -> GameId {
        debug_assert!(self.team_can_play(game, team));
        self.game_of(team, self.round_of(game) - 1)
    }

    /// `δ⁻(game, team)`: the predecessor of `game` that `team` cannot play.
    pub fn pred_off_path(&self, game: GameId, team: TeamId) -> GameId {
        let (lo, hi) = self
            .predecessors(game)
            .expect("round-1 game has no predecessors");
        if self.game_of(team, self.round_of(game) - 1) == lo {
            hi
        } else {
            lo
        }
    }

    pub fn games(&self) -> std::ops::RangeInclusive<GameId> {
        1..=self.game_count()
    }

    pub fn teams(&self) -> std::ops::RangeInclusive<TeamId> {
        1..=self.team_count
    }

    pub(crate) fn check_same(&self, other_team_count: u16) -> Result<(), TournamentError> {
        if self.team_count == other_team_count {
            Ok(())
        } else {
            Err(TournamentError::TeamCountMismatch {
                expected: self.team_count,
                got: other_team_count,
            })
        }
    }
}

/// A feasible assignment of one winner per game. Position `g` holds the
/// selected winner of game `g`. Serves both as an entry and as an outcome.
///
/// The representation stores one team per game, so the "exactly one team per
/// game" feasibility condition holds by construction; the two remaining
/// conditions are checked by [`validate_bracket`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bracket {
    winners: Vec<TeamId>,
}

impl Bracket {
    /// Wrap a winners list (index 0 = game 1). Only the length is checked
    /// here; use [`validate_bracket`] for the feasibility conditions.
    pub fn from_winners(t: &Tournament, winners: Vec<TeamId>) -> Result<Self, TournamentError> {
        if winners.len() != t.game_count() as usize {
            return Err(TournamentError::LengthMismatch {
                got: winners.len(),
                expected: t.game_count() as usize,
            });
        }
        Ok(Self { winners })
    }

    pub fn winner(&self, game: GameId) -> TeamId {
        self.winners[game as usize - 1]
    }

    pub fn winners(&self) -> &[TeamId] {
        &self.winners
    }

    pub fn champion(&self) -> TeamId {
        *self.winners.last().expect("bracket has at least 3 games")
    }

    pub(crate) fn set_winner(&mut self, game: GameId, team: TeamId) {
        self.winners[game as usize - 1] = team;
    }
}

/// Check the feasibility conditions; an empty list means the bracket is
/// feasible. Every violated condition is reported with its game index.
pub fn validate_bracket(t: &Tournament, b: &Bracket) -> Result<Vec<Violation>, TournamentError> {
    if b.winners.len() != t.game_count() as usize {
        return Err(TournamentError::LengthMismatch {
            got: b.winners.len(),
            expected: t.game_count() as usize,
        });
    }
    let mut violations = Vec::new();
    for game in t.games() {
        let team = b.winner(game);
        if !t.team_can_play(game, team) {
            violations.push(Violation::NotInTeamSet { game, team });
            continue;
        }
        if t.round_of(game) > 1 && b.winner(t.pred_on_path(game, team)) != team {
            violations.push(Violation::NotPickedAtPredecessor { game, team });
        }
    }
    Ok(violations)
}

pub fn is_feasible(t: &Tournament, b: &Bracket) -> bool {
    matches!(validate_bracket(t, b), Ok(v) if v.is_empty())
}

fn require_feasible(t: &Tournament, b: &Bracket) -> Result<(), TournamentError> {
    let violations = validate_bracket(t, b)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(TournamentError::Infeasible(violations))
    }
}

/// Score of entry `e` under outcome `o`: sum of `2^(r(g)-1)` over the games
/// where the two brackets agree. Agreement is symmetric, so `score(e, o) ==
/// score(o, e)`.
pub fn score(t: &Tournament, entry: &Bracket, outcome: &Bracket) -> Result<u32, TournamentError> {
    require_feasible(t, entry)?;
    require_feasible(t, outcome)?;
    Ok(score_unchecked(t, entry, outcome))
}

/// [`score`] without the feasibility checks, for validated inputs on hot paths.
pub fn score_unchecked(t: &Tournament, entry: &Bracket, outcome: &Bracket) -> u32 {
    let mut total = 0u32;
    let mut game = 1usize;
    for round in 1..=t.round_count() {
        let weight = Tournament::round_weight(round);
        for _ in 0..t.games_in_round(round) {
            if entry.winners[game - 1] == outcome.winners[game - 1] {
                total += weight;
            }
            game += 1;
        }
    }
    total
}

/// Score of the best-performing entry of `set` under `outcome`.
pub fn max_set_score(
    t: &Tournament,
    set: &EntrySet,
    outcome: &Bracket,
) -> Result<u32, TournamentError> {
    t.check_same(set.team_count)?;
    require_feasible(t, outcome)?;
    Ok(max_set_score_unchecked(t, set.entries(), outcome))
}

pub fn max_set_score_unchecked(t: &Tournament, entries: &[Bracket], outcome: &Bracket) -> u32 {
    entries
        .iter()
        .map(|e| score_unchecked(t, e, outcome))
        .max()
        .expect("entry set is nonempty")
}

/// Per-round counts of games where the two brackets pick the same winner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapCounts {
    /// Index `r-1` holds the count for round `r`.
    pub per_round: Vec<u32>,
    pub total: u32,
}

/// Identical-pick counts per round; `total == t-1` iff the brackets are
/// identical and `0` iff they are disjoint.
pub fn overlap_counts(
    t: &Tournament,
    a: &Bracket,
    b: &Bracket,
) -> Result<OverlapCounts, TournamentError> {
    require_feasible(t, a)?;
    require_feasible(t, b)?;
    let mut per_round = vec![0u32; t.round_count() as usize];
    for game in t.games() {
        if a.winner(game) == b.winner(game) {
            per_round[t.round_of(game) as usize - 1] += 1;
        }
    }
    Ok(OverlapCounts {
        total: per_round.iter().sum(),
        per_round,
    })
}

/// An ordered collection of feasible brackets owned by one participant.
/// Duplicates are permitted and score naturally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntrySet {
    team_count: u16,
    entries: Vec<Bracket>,
}

impl EntrySet {
    pub fn new(t: &Tournament, entries: Vec<Bracket>) -> Result<Self, TournamentError> {
        if entries.is_empty() {
            return Err(TournamentError::EmptyEntrySet);
        }
        for e in &entries {
            require_feasible(t, e)?;
        }
        Ok(Self {
            team_count: t.team_count(),
            entries,
        })
    }

    pub fn entries(&self) -> &[Bracket] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty sets
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }
}

/// Number of feasible brackets: `2^(t-1)`.
pub fn bracket_count(t: &Tournament) -> u64 {
    1u64 << (t.team_count() as u32 - 1)
}

/// Enumerate all `2^(t-1)` feasible brackets, guarded to `t <= 16`.
///
/// Order is deterministic: bracket `i` picks, at game `g`, the first team
/// (round 1) or first-predecessor winner when bit `g-1` of `i` is zero, and
/// the second otherwise.
pub fn enumerate_brackets(t: &Tournament) -> Result<Vec<Bracket>, TournamentError> {
    if t.team_count() > 16 {
        return Err(TournamentError::EnumerationTooLarge(t.team_count()));
    }
    let games = t.game_count() as usize;
    let n = bracket_count(t);
    let mut out = Vec::with_capacity(n as usize);
    for idx in 0..n {
        let mut winners = vec![0u16; games];
        for game in t.games() {
            let second = (idx >> (game - 1)) & 1 == 1;
            let w = match t.predecessors(game) {
                None => {
                    let lo = *t.team_range(game).start();
                    if second {
                        lo + 1
                    } else {
                        lo
                    }
                }
                Some((p1, p2)) => {
                    let src = if second { p2 } else { p1 };
                    winners[src as usize - 1]
                }
            };
            winners[game as usize - 1] = w;
        }
        out.push(Bracket { winners });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{four_team_brackets, t4};

    #[test]
    fn build_rejects_bad_team_counts() {
        for bad in [0, 1, 2, 3, 5, 6, 7, 12, 100] {
            assert!(matches!(
                Tournament::new(bad),
                Err(TournamentError::BadTeamCount(_))
            ));
        }
    }

    #[test]
    fn four_team_shape() {
        let t = t4();
        assert_eq!(t.game_count(), 3);
        assert_eq!(t.round_count(), 2);
        assert_eq!(t.team_range(3), 1..=4);
    }

    #[test]
    fn sixty_four_team_shape() {
        let t = Tournament::new(64).unwrap();
        assert_eq!(t.game_count(), 63);
        assert_eq!(t.round_count(), 6);
        assert_eq!(t.games_in_round(1), 32);
        assert_eq!(t.max_score(), 192);
    }

    #[test]
    fn eight_team_pred_on_path() {
        // γ⁻(final, team 1) is the round-2 game whose team set is {1,2,3,4}.
        let t = Tournament::new(8).unwrap();
        let final_game = t.game_id(3, 1);
        let g = t.pred_on_path(final_game, 1);
        assert_eq!(t.round_of(g), 2);
        assert_eq!(t.team_range(g), 1..=4);
    }

    #[test]
    fn structure_invariants_various_sizes() {
        for tc in [4u32, 8, 16, 32, 64] {
            let t = Tournament::new(tc).unwrap();
            let mut total_games = 0u16;
            for r in 1..=t.round_count() {
                let games = t.games_in_round(r);
                assert_eq!(games as u32, tc >> r);
                total_games += games;
                // team sets of one round partition the teams
                let mut seen = vec![false; tc as usize + 1];
                for pos in 1..=games {
                    let g = t.game_id(r, pos);
                    assert_eq!(t.round_pos(g), (r, pos));
                    let range = t.team_range(g);
                    assert_eq!(range.clone().count(), 1 << r);
                    for team in range {
                        assert!(!seen[team as usize]);
                        seen[team as usize] = true;
                    }
                }
                assert!(seen[1..].iter().all(|&s| s));
            }
            assert_eq!(total_games, t.game_count());
            for g in t.games() {
                if let Some((p1, p2)) = t.predecessors(g) {
                    assert_eq!(t.successor(p1), Some(g));
                    assert_eq!(t.successor(p2), Some(g));
                    // 𝒯(g) is the disjoint union of its predecessors' sets
                    let (lo, hi) = (t.team_range(p1), t.team_range(p2));
                    assert_eq!(*lo.start(), *t.team_range(g).start());
                    assert_eq!(*hi.end(), *t.team_range(g).end());
                    assert_eq!(*lo.end() + 1, *hi.start());
                }
            }
            // each team has a unique path to the final
            for team in t.teams() {
                for r in 1..=t.round_count() {
                    let g = t.game_of(team, r);
                    assert!(t.team_can_play(g, team));
                    if r > 1 {
                        assert_eq!(t.successor(t.game_of(team, r - 1)), Some(g));
                    }
                }
            }
        }
    }

    #[test]
    fn validate_flags_conditions() {
        let t = t4();
        let b1 = Bracket::from_winners(&t, vec![1, 3, 1]).unwrap();
        assert_eq!(validate_bracket(&t, &b1).unwrap(), vec![]);

        // D picked at the final without winning game 2: condition 3 at game 3
        let bad = Bracket::from_winners(&t, vec![1, 3, 4]).unwrap();
        assert_eq!(
            validate_bracket(&t, &bad).unwrap(),
            vec![Violation::NotPickedAtPredecessor { game: 3, team: 4 }]
        );

        // C cannot play game 1: condition 2
        let bad = Bracket::from_winners(&t, vec![3, 3, 3]).unwrap();
        let v = validate_bracket(&t, &bad).unwrap();
        assert!(v.contains(&Violation::NotInTeamSet { game: 1, team: 3 }));

        let short = Bracket {
            winners: vec![1, 3],
        };
        assert!(matches!(
            validate_bracket(&t, &short),
            Err(TournamentError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn scores_match_worked_example() {
        let t = t4();
        let b = four_team_brackets();
        assert_eq!(score(&t, &b[0], &b[0]).unwrap(), 4);
        assert_eq!(score(&t, &b[0], &b[1]).unwrap(), 3);
        let set16 = EntrySet::new(&t, vec![b[0].clone(), b[5].clone()]).unwrap();
        assert_eq!(max_set_score(&t, &set16, &b[4]).unwrap(), 3);
        assert_eq!(max_set_score(&t, &set16, &b[3]).unwrap(), 1);
    }

    #[test]
    fn perfect_entry_scores_max() {
        let t8 = Tournament::new(8).unwrap();
        for b in enumerate_brackets(&t8).unwrap().iter().step_by(17) {
            assert_eq!(score(&t8, b, b).unwrap(), t8.max_score());
        }
    }

    #[test]
    fn overlap_counts_examples() {
        let t = t4();
        let b = four_team_brackets();
        let same = overlap_counts(&t, &b[0], &b[0]).unwrap();
        assert_eq!((same.per_round, same.total), (vec![2, 1], 3));
        let disjoint = overlap_counts(&t, &b[0], &b[5]).unwrap();
        assert_eq!((disjoint.per_round, disjoint.total), (vec![0, 0], 0));
        let two = overlap_counts(&t, &b[0], &b[1]).unwrap();
        assert_eq!((two.per_round, two.total), (vec![1, 1], 2));
    }

    #[test]
    fn enumeration_matches_worked_example_table() {
        let t = t4();
        let all = enumerate_brackets(&t).unwrap();
        assert_eq!(all.len(), 8);
        let expected = four_team_brackets();
        for e in &expected {
            assert!(all.contains(e));
        }
        let t8 = Tournament::new(8).unwrap();
        let all8 = enumerate_brackets(&t8).unwrap();
        assert_eq!(all8.len(), 128);
        for b in &all8 {
            assert!(is_feasible(&t8, b));
        }
        assert!(matches!(
            enumerate_brackets(&Tournament::new(32).unwrap()),
            Err(TournamentError::EnumerationTooLarge(32))
        ));
    }

    #[test]
    fn entry_set_rejects_empty_and_infeasible() {
        let t = t4();
        assert!(matches!(
            EntrySet::new(&t, vec![]),
            Err(TournamentError::EmptyEntrySet)
        ));
        let bad = Bracket::from_winners(&t, vec![1, 3, 4]).unwrap();
        assert!(matches!(
            EntrySet::new(&t, vec![bad]),
            Err(TournamentError::Infeasible(_))
        ));
    }
}
