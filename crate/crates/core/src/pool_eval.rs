//! Field evaluation: one or more participants' entry sets measured against
//! each other on a shared outcome pool.
//!
//! Victory probability counts, per participant, the fraction of outcomes
//! where their best entry ties or exceeds the field-wide maximum; draws
//! credit every tied participant, so the probabilities can sum above one.
//! Expected payoff ranks all entries per outcome against a rank-range payoff
//! table, with ties either sharing the pooled payoff of their occupied ranks
//! or each optimistically taking the best rank's payoff.

use rayon::prelude::*;
use thiserror::Error;

use crate::simulation::{estimate_from_scores, EmsEstimate, OutcomePool, SimulationError};
use crate::tournament::{score_unchecked, EntrySet, Tournament, TournamentError};

#[derive(Debug, Error)]
pub enum PoolEvalError {
    #[error("field has no participants")]
    EmptyField,
    #[error("duplicate participant id {0}")]
    DuplicateParticipant(String),
    #[error(
        "payoff rows must be non-overlapping ascending rank ranges with nonnegative amounts: {0}"
    )]
    BadPayoffTable(String),
    #[error("unknown tie policy {0}; expected share or optimistic")]
    BadTiePolicy(String),
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// Participants and their entry sets, all over one tournament.
#[derive(Debug, Clone)]
pub struct Field {
    team_count: u16,
    participants: Vec<(String, EntrySet)>,
}

impl Field {
    pub fn new(
        t: &Tournament,
        participants: Vec<(String, EntrySet)>,
    ) -> Result<Self, PoolEvalError> {
        if participants.is_empty() {
            return Err(PoolEvalError::EmptyField);
        }
        let mut seen = std::collections::BTreeSet::new();
        for (id, set) in &participants {
            if !seen.insert(id.clone()) {
                return Err(PoolEvalError::DuplicateParticipant(id.clone()));
            }
            t.check_same(set.team_count())?;
        }
        Ok(Self {
            team_count: t.team_count(),
            participants,
        })
    }

    pub fn participants(&self) -> &[(String, EntrySet)] {
        &self.participants
    }

    pub fn team_count(&self) -> u16 {
        self.team_count
    }

    pub fn total_entries(&self) -> usize {
        self.participants.iter().map(|(_, s)| s.len()).sum()
    }
}

/// Rank-range payoff rows, ascending and non-overlapping; ranks outside every
/// range pay nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable {
    rows: Vec<PayoffRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffRow {
    pub rank_from: u32,
    pub rank_to: u32,
    pub amount: f64,
}

impl PayoffTable {
    pub fn new(rows: Vec<PayoffRow>) -> Result<Self, PoolEvalError> {
        let mut last_to = 0u32;
        for row in &rows {
            if row.rank_from == 0 || row.rank_to < row.rank_from {
                return Err(PoolEvalError::BadPayoffTable(format!(
                    "range {}..{}",
                    row.rank_from, row.rank_to
                )));
            }
            if row.rank_from <= last_to {
                return Err(PoolEvalError::BadPayoffTable(format!(
                    "range {}..{} overlaps or is out of order",
                    row.rank_from, row.rank_to
                )));
            }
            if row.amount.is_nan() || row.amount < 0.0 {
                return Err(PoolEvalError::BadPayoffTable(format!(
                    "amount {}",
                    row.amount
                )));
            }
            last_to = row.rank_to;
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PayoffRow] {
        &self.rows
    }

    pub fn amount_for_rank(&self, rank: u32) -> f64 {
        self.rows
            .iter()
            .find(|r| (r.rank_from..=r.rank_to).contains(&rank))
            .map_or(0.0, |r| r.amount)
    }

    /// Total paid to ranks `1..=n` when every rank is occupied once.
    pub fn total_for_ranks(&self, n: u32) -> f64 {
        (1..=n).map(|r| self.amount_for_rank(r)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Tied entries split the pooled payoff of the ranks they occupy.
    Share,
    /// Every tied entry receives the best occupied rank's payoff.
    Optimistic,
}

impl std::str::FromStr for TiePolicy {
    type Err = PoolEvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "share" => Ok(TiePolicy::Share),
            "optimistic" => Ok(TiePolicy::Optimistic),
            other => Err(PoolEvalError::BadTiePolicy(other.to_string())),
        }
    }
}

fn check_pool(field: &Field, pool: &OutcomePool) -> Result<(), PoolEvalError> {
    if pool.is_empty() {
        return Err(SimulationError::EmptyPool.into());
    }
    if field.team_count() != pool.team_count() {
        return Err(TournamentError::TeamCountMismatch {
            expected: field.team_count(),
            got: pool.team_count(),
        }
        .into());
    }
    Ok(())
}

/// Fixed chunking for parallel accumulation: boundaries depend only on the
/// data, never on the thread count, so floating-point partials combine in
/// one reproducible order.
const OUTCOME_CHUNK: usize = 256;

/// Per participant, the fraction of outcomes where their best entry reaches
/// the field maximum. Ties credit everyone, so the values sum to >= 1.
pub fn victory_probability(
    t: &Tournament,
    field: &Field,
    pool: &OutcomePool,
) -> Result<Vec<(String, f64)>, PoolEvalError> {
    check_pool(field, pool)?;
    let n = field.participants.len();
    let partials: Vec<Vec<u64>> = pool
        .outcomes()
        .par_chunks(OUTCOME_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0u64; n];
            let mut best = vec![0u32; n];
            for outcome in chunk {
                for (slot, (_, set)) in best.iter_mut().zip(&field.participants) {
                    *slot = set
                        .entries()
                        .iter()
                        .map(|e| score_unchecked(t, e, outcome))
                        .max()
                        .expect("entry sets are nonempty");
                }
                let top = *best.iter().max().expect("nonempty field");
                for (slot, &b) in acc.iter_mut().zip(&best) {
                    *slot += (b == top) as u64;
                }
            }
            acc
        })
        .collect();
    let mut wins = vec![0u64; n];
    for partial in partials {
        for (x, y) in wins.iter_mut().zip(partial) {
            *x += y;
        }
    }
    let w = pool.len() as f64;
    Ok(field
        .participants
        .iter()
        .zip(wins)
        .map(|((id, _), count)| (id.clone(), count as f64 / w))
        .collect())
}

/// Monte Carlo EMS per participant on the shared pool, so the estimates are
/// comparable across participants.
pub fn field_ems(
    t: &Tournament,
    field: &Field,
    pool: &OutcomePool,
) -> Result<Vec<(String, EmsEstimate)>, PoolEvalError> {
    check_pool(field, pool)?;
    field
        .participants
        .iter()
        .map(|(id, set)| {
            let scores: Vec<u32> = pool
                .outcomes()
                .par_iter()
                .map(|o| {
                    set.entries()
                        .iter()
                        .map(|e| score_unchecked(t, e, o))
                        .max()
                        .expect("nonempty")
                })
                .collect();
            Ok((id.clone(), estimate_from_scores(&scores)))
        })
        .collect()
}

/// Expected payoff per participant: every entry in the field is ranked by
/// score per outcome, the payoff table is applied under the tie policy, and
/// each participant collects the sum over their entries, averaged over the
/// pool.
pub fn expected_payoff(
    t: &Tournament,
    field: &Field,
    pool: &OutcomePool,
    payoffs: &PayoffTable,
    policy: TiePolicy,
) -> Result<Vec<(String, f64)>, PoolEvalError> {
    check_pool(field, pool)?;
    // flatten to (participant index, entry)
    let owners: Vec<usize> = field
        .participants
        .iter()
        .enumerate()
        .flat_map(|(i, (_, set))| std::iter::repeat_n(i, set.len()))
        .collect();
    let entries: Vec<&crate::tournament::Bracket> = field
        .participants
        .iter()
        .flat_map(|(_, set)| set.entries())
        .collect();
    let n = field.participants.len();

    let partials: Vec<Vec<f64>> = pool
        .outcomes()
        .par_chunks(OUTCOME_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0f64; n];
            for outcome in chunk {
                let mut scored: Vec<(u32, usize)> = entries
                    .iter()
                    .enumerate()
                    .map(|(idx, e)| (score_unchecked(t, e, outcome), idx))
                    .collect();
                // rank by score descending; entry order breaks nothing
                // because ties are grouped
                scored.sort_unstable_by_key(|&(score, idx)| (std::cmp::Reverse(score), idx));
                let mut pos = 0usize;
                while pos < scored.len() {
                    let score = scored[pos].0;
                    let mut end = pos;
                    while end < scored.len() && scored[end].0 == score {
                        end += 1;
                    }
                    let first_rank = pos as u32 + 1;
                    let count = (end - pos) as u32;
                    match policy {
                        TiePolicy::Share => {
                            let pot: f64 = (first_rank..first_rank + count)
                                .map(|r| payoffs.amount_for_rank(r))
                                .sum();
                            let each = pot / count as f64;
                            for &(_, idx) in &scored[pos..end] {
                                acc[owners[idx]] += each;
                            }
                        }
                        TiePolicy::Optimistic => {
                            let best = payoffs.amount_for_rank(first_rank);
                            for &(_, idx) in &scored[pos..end] {
                                acc[owners[idx]] += best;
                            }
                        }
                    }
                    pos = end;
                }
            }
            acc
        })
        .collect();
    let mut totals = vec![0.0f64; n];
    for partial in partials {
        for (x, y) in totals.iter_mut().zip(partial) {
            *x += y;
        }
    }
    let w = pool.len() as f64;
    Ok(field
        .participants
        .iter()
        .zip(totals)
        .map(|((id, _), total)| (id.clone(), total / w))
        .collect())
}
