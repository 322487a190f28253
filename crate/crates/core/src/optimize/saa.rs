//! Native joint sample-average optimization for the smallest instances: both
//! entries of a two-entry solution chosen together by enumerating all bracket
//! pairs against a pool. Larger joint instances go through [`super::saa_export`]
//! and an external solver.

use rayon::prelude::*;

use crate::simulation::OutcomePool;
use crate::tournament::{enumerate_brackets, score_unchecked, EntrySet, Tournament};

use super::OptimizeError;

/// Joint enumeration is limited to tournaments this small.
pub const SAA_PAIRS_MAX_TEAMS: u16 = 8;

/// The two-entry set maximizing the in-sample average of the better entry's
/// score, by enumeration over all unordered bracket pairs; `t <= 8`.
/// Returns the set and its in-sample objective.
pub fn saa_solve_pairs(
    t: &Tournament,
    pool: &OutcomePool,
) -> Result<(EntrySet, f64), OptimizeError> {
    if t.team_count() > SAA_PAIRS_MAX_TEAMS {
        return Err(OptimizeError::BadBudget(format!(
            "joint pair enumeration is limited to t <= {SAA_PAIRS_MAX_TEAMS}, got {}; \
             use the exported model with an external solver",
            t.team_count()
        )));
    }
    t.check_same(pool.team_count())?;
    let all = enumerate_brackets(t)?;
    let n = all.len();
    let w = pool.len();
    // score matrix bracket x outcome
    let scores: Vec<Vec<u32>> = all
        .par_iter()
        .map(|b| {
            pool.outcomes()
                .iter()
                .map(|o| score_unchecked(t, b, o))
                .collect()
        })
        .collect();
    // (objective, flat pair index); ties to the lower index
    let best = (0..n * n)
        .into_par_iter()
        .filter(|flat| flat / n <= flat % n)
        .map(|flat| {
            let (i, j) = (flat / n, flat % n);
            let total: u64 = scores[i]
                .iter()
                .zip(&scores[j])
                .map(|(&a, &b)| a.max(b) as u64)
                .sum();
            (total as f64 / w as f64, flat)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let (i, j) = (best.1 / n, best.1 % n);
    let set = EntrySet::new(t, vec![all[i].clone(), all[j].clone()])?;
    Ok((set, best.0))
}
