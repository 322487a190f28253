//! Win-probability matrices and their propagation.
//!
//! `P^team[t,t']` is the probability that `t` beats `t'` in a game. From it,
//! [`propagate`] derives `P^game[t,g]` (probability that `t` wins game `g`)
//! and `P^round[t,r]` (probability that `t` wins its round-`r` game) by a
//! round-by-round recurrence: a team wins game `g` if it won its own
//! predecessor and then beats whichever team arrives from the other
//! predecessor.
//!
//! All validation uses the shared tolerance [`PROB_TOL`].

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rng::SplitRng;
use crate::tournament::{GameId, TeamId, Tournament, TournamentError};

/// Tolerance for probability-mass checks.
pub const PROB_TOL: f64 = 1e-9;

/// Rating-to-probability scale used by a popular ratings aggregator.
pub const DEFAULT_RATING_SCALE: f64 = 30.464;

#[derive(Debug, Error, PartialEq)]
pub enum ProbabilityError {
    #[error("matrix must be square with a power-of-two side >= 4, got {0} rows")]
    BadShape(usize),
    #[error("entry ({0},{1}) = {2} outside [0,1]")]
    OutOfRange(TeamId, TeamId, f64),
    #[error("complementarity violated for pair ({0},{1}): {2} + {3} != 1")]
    NotComplementary(TeamId, TeamId, f64, f64),
    #[error("game {0}: probability mass over its team set is {1}, expected 1")]
    GameMass(GameId, f64),
    #[error("team {0} cannot play game {1} but has probability {2}")]
    NonZeroOutsideTeamSet(TeamId, GameId, f64),
    #[error("no rating for team {0}")]
    MissingRating(TeamId),
    #[error("rating for team {0} is not finite")]
    NonFiniteRating(TeamId),
    #[error("duplicate rating for team {0}")]
    DuplicateRating(TeamId),
    #[error("prediction list is empty")]
    EmptyPredictions,
    #[error("prediction {0} outside [0,1]")]
    BadPrediction(f64),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
}

/// Team-by-team win matrix. Off-diagonal pairs sum to 1 within [`PROB_TOL`];
/// the diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamWinMatrix {
    team_count: u16,
    p: Vec<f64>, // row-major t*t
}

impl TeamWinMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ProbabilityError> {
        let n = rows.len();
        if n < 4 || !n.is_power_of_two() || n > u16::MAX as usize {
            return Err(ProbabilityError::BadShape(n));
        }
        let mut p = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(ProbabilityError::BadShape(row.len()));
            }
            p.extend_from_slice(row);
        }
        // the diagonal is ignored; store it as zero
        for i in 0..n {
            p[i * n + i] = 0.0;
        }
        let m = Self {
            team_count: n as u16,
            p,
        };
        m.validate()?;
        Ok(m)
    }

    /// Build from a pairwise function evaluated on `a < b`; the complement is
    /// filled in exactly.
    pub fn from_fn(
        team_count: u16,
        mut f: impl FnMut(TeamId, TeamId) -> f64,
    ) -> Result<Self, ProbabilityError> {
        let n = team_count as usize;
        if n < 4 || !n.is_power_of_two() {
            return Err(ProbabilityError::BadShape(n));
        }
        let mut m = Self {
            team_count,
            p: vec![0.0; n * n],
        };
        for a in 1..=team_count {
            for b in a + 1..=team_count {
                let pab = f(a, b);
                m.set_pair(a, b, pab);
            }
        }
        m.validate()?;
        Ok(m)
    }

    /// The matrix with 0.5 on every off-diagonal entry.
    pub fn uniform(team_count: u16) -> Self {
        Self::from_fn(team_count, |_, _| 0.5).expect("uniform matrix is valid")
    }

    /// Seeded matrix with off-diagonal probabilities uniform in (0,1).
    pub fn random(team_count: u16, seed: u64) -> Self {
        let mut rng = SplitRng::new(seed);
        Self::from_fn(team_count, |_, _| rng.unit_f64()).expect("random matrix is valid")
    }

    fn set_pair(&mut self, a: TeamId, b: TeamId, pab: f64) {
        let n = self.team_count as usize;
        self.p[(a as usize - 1) * n + (b as usize - 1)] = pab;
        self.p[(b as usize - 1) * n + (a as usize - 1)] = 1.0 - pab;
    }

    /// Probability that `a` beats `b`.
    pub fn get(&self, a: TeamId, b: TeamId) -> f64 {
        let n = self.team_count as usize;
        self.p[(a as usize - 1) * n + (b as usize - 1)]
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }

    /// Every entry wins or loses with certainty (0 or 1 off the diagonal).
    pub fn is_binary(&self) -> bool {
        (1..=self.team_count).all(|a| {
            (1..=self.team_count).all(|b| a == b || self.get(a, b) == 0.0 || self.get(a, b) == 1.0)
        })
    }

    pub fn validate(&self) -> Result<(), ProbabilityError> {
        for a in 1..=self.team_count {
            for b in 1..=self.team_count {
                if a == b {
                    continue;
                }
                let pab = self.get(a, b);
                if !(0.0..=1.0).contains(&pab) {
                    return Err(ProbabilityError::OutOfRange(a, b, pab));
                }
                if a < b {
                    let pba = self.get(b, a);
                    if (pab + pba - 1.0).abs() > PROB_TOL {
                        return Err(ProbabilityError::NotComplementary(a, b, pab, pba));
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical little-endian byte image, for provenance.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"pteam");
        h.update((self.team_count as u32).to_le_bytes());
        for v in &self.p {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }
}

/// Scalar rating per team; the standard logistic map turns rating differences
/// into win probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    team_count: u16,
    ratings: Vec<f64>, // index team-1
}

impl RatingTable {
    pub fn new(team_count: u16, pairs: &[(TeamId, f64)]) -> Result<Self, ProbabilityError> {
        let mut ratings = vec![f64::NAN; team_count as usize];
        for &(team, r) in pairs {
            if team < 1 || team > team_count {
                continue; // extra teams in the file are harmless
            }
            let slot = &mut ratings[team as usize - 1];
            if !slot.is_nan() {
                return Err(ProbabilityError::DuplicateRating(team));
            }
            if !r.is_finite() {
                return Err(ProbabilityError::NonFiniteRating(team));
            }
            *slot = r;
        }
        if let Some(idx) = ratings.iter().position(|r| r.is_nan()) {
            return Err(ProbabilityError::MissingRating(idx as TeamId + 1));
        }
        Ok(Self {
            team_count,
            ratings,
        })
    }

    pub fn get(&self, team: TeamId) -> f64 {
        self.ratings[team as usize - 1]
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }
}

/// Win probability from ratings:
/// `P[a,b] = 1 / (1 + 10^((r_b - r_a) * scale / 400))`.
///
/// The sign is the standard logistic/Elo convention, so the higher-rated team
/// wins with probability above 0.5. (The opposite sign sometimes seen in
/// print would make the higher-rated team the underdog.)
pub fn pteam_from_ratings(
    ratings: &RatingTable,
    scale: f64,
) -> Result<TeamWinMatrix, ProbabilityError> {
    TeamWinMatrix::from_fn(ratings.team_count(), |a, b| {
        let diff = ratings.get(b) - ratings.get(a);
        1.0 / (1.0 + 10f64.powf(diff * scale / 400.0))
    })
}

/// Team-by-game win matrix: `P^game[t,g] = 0` when `t` cannot play `g`, and
/// for each game the entries over its team set sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GameWinMatrix {
    team_count: u16,
    game_count: u16,
    p: Vec<f64>, // row-major t*(t-1)
}

impl GameWinMatrix {
    pub fn get(&self, team: TeamId, game: GameId) -> f64 {
        self.p[(team as usize - 1) * self.game_count as usize + (game as usize - 1)]
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }

    pub fn game_count(&self) -> u16 {
        self.game_count
    }

    pub fn validate(&self, t: &Tournament) -> Result<(), ProbabilityError> {
        t.check_same(self.team_count)?;
        for game in t.games() {
            let mut mass = 0.0;
            for team in t.teams() {
                let v = self.get(team, game);
                if t.team_can_play(game, team) {
                    mass += v;
                } else if v != 0.0 {
                    return Err(ProbabilityError::NonZeroOutsideTeamSet(team, game, v));
                }
            }
            if (mass - 1.0).abs() > PROB_TOL {
                return Err(ProbabilityError::GameMass(game, mass));
            }
        }
        Ok(())
    }
}

/// Team-by-round win matrix; column `r` sums to `t / 2^r` and each team's row
/// is non-increasing in the round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundWinMatrix {
    team_count: u16,
    round_count: u16,
    p: Vec<f64>, // row-major t*rounds
}

impl RoundWinMatrix {
    pub fn get(&self, team: TeamId, round: u16) -> f64 {
        self.p[(team as usize - 1) * self.round_count as usize + (round as usize - 1)]
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }

    pub fn round_count(&self) -> u16 {
        self.round_count
    }
}

/// Derive `P^game` and `P^round` from `P^team`.
///
/// Round-1 columns are copied from `P^team`; for later rounds
/// `P^game[t,g] = P^game[t,γ⁻(g,t)] * Σ_{t'∈𝒯(δ⁻(g,t))} P^game[t',δ⁻(g,t)] * P^team[t,t']`.
/// `P^round[t,r]` is the sum over round-`r` games, which has exactly one
/// non-zero addend (a team plays one game per round).
pub fn propagate(
    t: &Tournament,
    p: &TeamWinMatrix,
) -> Result<(GameWinMatrix, RoundWinMatrix), ProbabilityError> {
    t.check_same(p.team_count())?;
    p.validate()?;
    let n = t.team_count() as usize;
    let games = t.game_count() as usize;
    let rounds = t.round_count() as usize;
    let mut pg = vec![0.0f64; n * games];
    let mut pr = vec![0.0f64; n * rounds];

    let set = |buf: &mut Vec<f64>, team: TeamId, col: usize, width: usize, v: f64| {
        buf[(team as usize - 1) * width + col] = v;
    };

    for game in t.games() {
        let round = t.round_of(game);
        if round == 1 {
            let lo = *t.team_range(game).start();
            let (a, b) = (lo, lo + 1);
            set(&mut pg, a, game as usize - 1, games, p.get(a, b));
            set(&mut pg, b, game as usize - 1, games, p.get(b, a));
        } else {
            for team in t.team_range(game) {
                let own = t.pred_on_path(game, team);
                let other = t.pred_off_path(game, team);
                let reach = pg[(team as usize - 1) * games + (own as usize - 1)];
                let mut win = 0.0;
                for opp in t.team_range(other) {
                    win += pg[(opp as usize - 1) * games + (other as usize - 1)] * p.get(team, opp);
                }
                set(&mut pg, team, game as usize - 1, games, reach * win);
            }
        }
    }
    for team in t.teams() {
        for round in 1..=t.round_count() {
            let g = t.game_of(team, round);
            pr[(team as usize - 1) * rounds + (round as usize - 1)] =
                pg[(team as usize - 1) * games + (g as usize - 1)];
        }
    }

    Ok((
        GameWinMatrix {
            team_count: t.team_count(),
            game_count: t.game_count(),
            p: pg,
        },
        RoundWinMatrix {
            team_count: t.team_count(),
            round_count: t.round_count(),
            p: pr,
        },
    ))
}

/// Accuracy and logloss of a set of binary predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMetrics {
    pub accuracy: f64,
    pub logloss: f64,
}

/// `accuracy` counts predictions on the right side of 0.5 (ties count 0.5);
/// `logloss = -(1/N) Σ [y·ln(p) + (1-y)·ln(1-p)]` with `p` clamped to
/// `[1e-15, 1-1e-15]` before the logarithm.
pub fn model_metrics(predictions: &[(f64, bool)]) -> Result<ModelMetrics, ProbabilityError> {
    if predictions.is_empty() {
        return Err(ProbabilityError::EmptyPredictions);
    }
    let mut correct = 0.0;
    let mut loss = 0.0;
    for &(p, y) in predictions {
        if !(0.0..=1.0).contains(&p) {
            return Err(ProbabilityError::BadPrediction(p));
        }
        correct += if p == 0.5 {
            0.5
        } else if (p > 0.5) == y {
            1.0
        } else {
            0.0
        };
        let pc = p.clamp(1e-15, 1.0 - 1e-15);
        loss -= if y { pc.ln() } else { (1.0 - pc).ln() };
    }
    let n = predictions.len() as f64;
    Ok(ModelMetrics {
        accuracy: correct / n,
        logloss: loss / n,
    })
}

/// Divergence of the matrix from the all-0.5 reference, summed over ordered
/// pairs with `P > 0.5`: `Σ P ln(P / 0.5)`. Natural logarithm; zero iff every
/// off-diagonal entry is 0.5.
pub fn kl_from_uniform(p: &TeamWinMatrix) -> f64 {
    let mut total = 0.0;
    for a in 1..=p.team_count() {
        for b in 1..=p.team_count() {
            if a == b {
                continue;
            }
            let v = p.get(a, b);
            if v > 0.5 {
                total += v * (v / 0.5).ln();
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{diverse_matrix, t4};

    #[test]
    fn ratings_map_to_standard_probabilities() {
        let rt = RatingTable::new(4, &[(1, 90.0), (2, 90.0), (3, 80.0), (4, 95.0)]).unwrap();
        let m = pteam_from_ratings(&rt, DEFAULT_RATING_SCALE).unwrap();
        assert_eq!(m.get(1, 2), 0.5);
        // higher-rated team is the favorite
        assert!(m.get(1, 3) > 0.5);
        assert!(m.get(1, 4) < 0.5);
        m.validate().unwrap();

        // rating edge of 400/scale gives exponent 1: P = 10/11
        let rt = RatingTable::new(4, &[(1, 400.0 / 30.464), (2, 0.0), (3, 0.0), (4, 0.0)]).unwrap();
        let m = pteam_from_ratings(&rt, 30.464).unwrap();
        assert!((m.get(1, 2) - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn ratings_errors_name_the_team() {
        assert_eq!(
            RatingTable::new(4, &[(1, 1.0), (2, 1.0), (4, 1.0)]),
            Err(ProbabilityError::MissingRating(3))
        );
        assert_eq!(
            RatingTable::new(4, &[(1, 1.0), (1, 2.0)]),
            Err(ProbabilityError::DuplicateRating(1))
        );
    }

    #[test]
    fn random_ratings_give_valid_matrices() {
        for seed in 0..20 {
            let mut rng = SplitRng::new(seed);
            let pairs: Vec<_> = (1..=16)
                .map(|t| (t, 70.0 + 25.0 * rng.unit_f64()))
                .collect();
            let rt = RatingTable::new(16, &pairs).unwrap();
            pteam_from_ratings(&rt, DEFAULT_RATING_SCALE)
                .unwrap()
                .validate()
                .unwrap();
        }
    }

    #[test]
    fn propagate_reproduces_hand_derived_value() {
        let t = t4();
        let (pg, pr) = propagate(&t, &diverse_matrix()).unwrap();
        // 0.7 * (0.55*0.55 + 0.45*0.60)
        assert!((pg.get(1, 3) - 0.40075).abs() < 1e-12);
        assert!((pg.get(1, 1) - 0.70).abs() < 1e-15);
        assert!((pr.get(1, 2) - 0.40075).abs() < 1e-12);
        pg.validate(&t).unwrap();
    }

    #[test]
    fn propagate_uniform_and_binary() {
        let t = t4();
        let (_, pr) = propagate(&t, &TeamWinMatrix::uniform(4)).unwrap();
        for team in 1..=4 {
            assert!((pr.get(team, 2) - 0.25).abs() < 1e-15);
        }

        // binary matrix: team 2 beats everyone, lower id wins otherwise
        let forced = TeamWinMatrix::from_fn(4, |a, b| {
            if a == 2 {
                1.0
            } else if b == 2 {
                0.0
            } else if a < b {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let (pg, pr) = propagate(&t, &forced).unwrap();
        let champs: Vec<u16> = (1..=4).filter(|&c| pr.get(c, 2) == 1.0).collect();
        assert_eq!(champs, vec![2]);
        // a binary team matrix propagates to a binary game matrix
        for team in 1..=4 {
            for game in 1..=3 {
                let v = pg.get(team, game);
                assert!(v == 0.0 || v == 1.0, "pg[{team},{game}] = {v}");
            }
        }
    }

    #[test]
    fn propagated_matrices_satisfy_mass_invariants() {
        for (tc, seed) in [(4u32, 1u64), (8, 2), (16, 3), (32, 4)] {
            let t = Tournament::new(tc).unwrap();
            let p = TeamWinMatrix::random(t.team_count(), seed);
            let (pg, pr) = propagate(&t, &p).unwrap();
            pg.validate(&t).unwrap();
            for round in 1..=t.round_count() {
                let col: f64 = (1..=t.team_count()).map(|team| pr.get(team, round)).sum();
                assert!((col - t.games_in_round(round) as f64).abs() < PROB_TOL);
                for team in t.teams() {
                    if round > 1 {
                        assert!(pr.get(team, round) <= pr.get(team, round - 1) + PROB_TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn metrics_examples() {
        let m = model_metrics(&[(0.5, true)]).unwrap();
        assert!((m.logloss - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(m.accuracy, 0.5);

        let m = model_metrics(&[(1.0 - 1e-12, true)]).unwrap();
        assert!(m.logloss < 1e-11);

        let m = model_metrics(&[(0.9, true), (0.9, false)]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert!((m.logloss - (-(0.9f64.ln()) - 0.1f64.ln()) / 2.0).abs() < 1e-12);

        assert!(model_metrics(&[]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_from_uniform(&TeamWinMatrix::uniform(4)), 0.0);
        let m = TeamWinMatrix::from_fn(4, |a, b| if (a, b) == (1, 2) { 1.0 } else { 0.5 }).unwrap();
        assert!((kl_from_uniform(&m) - 2.0f64.ln()).abs() < 1e-12);
        // raising any entry above 0.5 strictly increases the divergence
        let m2 = TeamWinMatrix::from_fn(4, |a, b| {
            if (a, b) == (1, 2) {
                1.0
            } else if (a, b) == (3, 4) {
                0.6
            } else {
                0.5
            }
        })
        .unwrap();
        assert!(kl_from_uniform(&m2) > kl_from_uniform(&m));
    }

    #[test]
    fn matrix_validation_rejects_bad_input() {
        let bad = vec![
            vec![0.0, 0.7, 0.5, 0.5],
            vec![0.4, 0.0, 0.5, 0.5], // 0.7 + 0.4 != 1
            vec![0.5, 0.5, 0.0, 0.5],
            vec![0.5, 0.5, 0.5, 0.0],
        ];
        assert!(matches!(
            TeamWinMatrix::from_rows(bad),
            Err(ProbabilityError::NotComplementary(1, 2, _, _))
        ));
        assert!(matches!(
            TeamWinMatrix::from_rows(vec![vec![0.0; 3]; 3]),
            Err(ProbabilityError::BadShape(3))
        ));
    }
}
