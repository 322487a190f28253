//! Entry-selection algorithms: exact single entry, greedy sample-average
//! steps, sequential IP with diversification, proportion heuristics, and
//! MILP model export.
//!
//! Subproblems are solved exactly by enumeration when `2^(t-1) <= 65536`
//! (`t <= 16`) and by seeded multi-start hill climbing otherwise, so every
//! algorithm is self-contained; the printed MILP formulations remain
//! available through [`saa_export`] plus the [`crate::lp`] checker for use
//! with an external solver.
//!
//! Every algorithm is a deterministic function of its inputs and seed:
//! restart winners are chosen by (objective, restart index), and all internal
//! reductions are order-fixed.

mod export;
mod gsaa;
mod prop;
mod saa;
mod single;
mod sip;
mod subproblem;

pub use export::{saa_export, saa_solution_from_entries, ExportForm, ExportInputs};
pub use gsaa::{gsaa_generate, gsaa_generate_traced, GsaaStep};
pub use prop::{prop_generate, prop_plus_generate};
pub use saa::{saa_solve_pairs, SAA_PAIRS_MAX_TEAMS};
pub use single::{best_single_entry, best_single_entry_with_value, expected_single_score};
pub use sip::sip_generate;
pub use subproblem::{pool_objective, subproblem_solve, SolveMode, SubproblemOutcome};

use thiserror::Error;

use crate::probability::ProbabilityError;
use crate::simulation::SimulationError;
use crate::tournament::TournamentError;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("budget must be positive: {0}")]
    BadBudget(String),
    #[error("incumbent scores: expected {expected} (one per outcome), got {got}")]
    IncumbentLength { expected: usize, got: usize },
    #[error("incumbent scores must be nonnegative, got {0}")]
    NegativeIncumbent(f64),
    #[error("entry count must be at least 1")]
    ZeroEntries,
    #[error(
        "diversification constraints are infeasible at entry {entry}: binding family {family}"
    )]
    Infeasible { entry: usize, family: String },
    #[error("at most one of the global and round constraint families may be active")]
    ConflictingFamilies,
    #[error("threshold {0} outside [0,1)")]
    BadThreshold(f64),
    #[error("{form} export needs {missing}")]
    ExportInput {
        form: &'static str,
        missing: &'static str,
    },
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// Per-round selection thresholds used by the enhanced proportion heuristic
/// (tuned rows, keyed by entry count).
pub const PROP_PLUS_TABLE: [(u32, [f64; 6]); 7] = [
    (2, [0.479, 0.390, 0.332, 0.226, 0.094, 0.030]),
    (3, [0.476, 0.392, 0.334, 0.213, 0.055, 0.032]),
    (5, [0.453, 0.380, 0.312, 0.215, 0.069, 0.018]),
    (10, [0.474, 0.382, 0.340, 0.195, 0.053, 0.036]),
    (25, [0.438, 0.383, 0.338, 0.195, 0.031, 0.012]),
    (50, [0.450, 0.373, 0.326, 0.202, 0.018, 0.002]),
    (100, [0.450, 0.372, 0.305, 0.186, 0.000, 0.000]),
];

/// Tuned per-round overlap caps (rounds 1..4) by entry-count band, and the
/// global cap used from 26 entries up.
pub const SIP_ROUND_SIGMA_BANDS: [(u32, u32, [u32; 4]); 3] = [
    (2, 4, [30, 11, 7, 1]),
    (5, 9, [31, 13, 6, 2]),
    (10, 25, [32, 15, 7, 4]),
];
pub const SIP_GLOBAL_SIGMA: u32 = 54;

/// Which diversification constraint families the sequential IP applies.
/// At most one of the global/round families may be active at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiversificationConfig {
    pub enable_champion: bool,
    pub enable_finalist: bool,
    pub global_sigma: Option<u32>,
    /// Caps for rounds 1..=4; caps above a round's game count are vacuous.
    pub round_sigmas: Option<[u32; 4]>,
}

impl DiversificationConfig {
    pub fn none() -> Self {
        Self {
            enable_champion: false,
            enable_finalist: false,
            global_sigma: None,
            round_sigmas: None,
        }
    }

    /// The tuned configuration for a given entry count: round caps for up to
    /// 25 entries, the global cap from 26 up; champion and finalist
    /// constraints always on.
    pub fn defaults_for(entry_count: usize) -> Self {
        let e = entry_count as u32;
        let mut cfg = Self {
            enable_champion: true,
            enable_finalist: true,
            global_sigma: None,
            round_sigmas: None,
        };
        if e >= 26 {
            cfg.global_sigma = Some(SIP_GLOBAL_SIGMA);
        } else {
            let band = SIP_ROUND_SIGMA_BANDS
                .iter()
                .find(|(lo, hi, _)| (*lo..=*hi).contains(&e.max(2)))
                .expect("bands cover 2..=25");
            cfg.round_sigmas = Some(band.2);
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.global_sigma.is_some() && self.round_sigmas.is_some() {
            return Err(OptimizeError::ConflictingFamilies);
        }
        Ok(())
    }
}

/// Minimum `P^round` a team needs to be eligible in each round.
#[derive(Debug, Clone, PartialEq)]
pub struct PropPlusThresholds {
    values: Vec<f64>,
}

impl PropPlusThresholds {
    /// One value per round, starting at round 1. Rounds beyond the list are
    /// unfiltered.
    pub fn new(values: Vec<f64>) -> Result<Self, OptimizeError> {
        for &v in &values {
            if !(0.0..1.0).contains(&v) {
                return Err(OptimizeError::BadThreshold(v));
            }
        }
        Ok(Self { values })
    }

    /// No filtering; reduces the enhanced heuristic to the baseline.
    pub fn zero() -> Self {
        Self { values: Vec::new() }
    }

    /// The tuned row with entry count nearest to `e`, ties toward the
    /// smaller count. Interpolating between tuned rows would invent data.
    pub fn for_entry_count(e: usize) -> Self {
        let e = e as i64;
        let row = PROP_PLUS_TABLE
            .iter()
            .min_by_key(|(count, _)| ((*count as i64 - e).abs(), *count))
            .expect("table is nonempty");
        Self {
            values: row.1.to_vec(),
        }
    }

    pub fn value(&self, round: u16) -> f64 {
        self.values.get(round as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Resource limits for the sampling-based optimizers.
///
/// `time_limit_seconds` is configuration carried through to exported models
/// and reports; the in-process solvers run to their deterministic completion
/// so that identical seeds give identical entry sets on any machine.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveBudget {
    pub time_limit_seconds: f64,
    pub sample_count: usize,
    pub restarts: usize,
    pub master_seed: u64,
}

impl SolveBudget {
    pub fn new(sample_count: usize, master_seed: u64) -> Self {
        Self {
            time_limit_seconds: 500.0,
            sample_count,
            restarts: 8,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.time_limit_seconds <= 0.0 {
            return Err(OptimizeError::BadBudget(format!(
                "time limit {}",
                self.time_limit_seconds
            )));
        }
        if self.sample_count == 0 {
            return Err(OptimizeError::BadBudget("sample count 0".into()));
        }
        if self.restarts == 0 {
            return Err(OptimizeError::BadBudget("restarts 0".into()));
        }
        Ok(())
    }
}

impl Default for SolveBudget {
    /// 250 samples per optimization step, 500-second nominal limit.
    fn default() -> Self {
        Self::new(250, 0)
    }
}

/// Champion-cap rounding: exact ceiling with a small guard against
/// floating-point near-integers.
pub(crate) fn champion_cap(entry_count: usize, p_round: f64) -> u32 {
    ((entry_count as f64 * p_round) - 1e-12).ceil().max(0.0) as u32
}
