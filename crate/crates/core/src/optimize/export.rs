//! LP-format export of the entry-selection MILP formulations, for use with an
//! external solver. [`crate::lp::LpModel::check_solution`] verifies solver
//! output against the exported constraints and recomputes the objective.
//!
//! Variables follow the printed formulations: `x_t_r[_e]` selects team `t` in
//! round `r` (for entry `e`), `s_w[_e]` is the entry score on outcome `w`,
//! `smax_w` the best score on outcome `w`, and `z_w[_e]` marks the entry
//! attaining it. The bilinear pick constraints are written in their exact
//! big-M linearization (equivalent for binary `z`), with
//! `M = r̄ · 2^(r̄-1)`.

use crate::lp::{CmpSense, LpBound, LpConstraint, LpModel};
use crate::probability::{propagate, TeamWinMatrix};
use crate::simulation::OutcomePool;
use crate::tournament::{Bracket, Tournament};

use super::{champion_cap, DiversificationConfig, OptimizeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportForm {
    /// Exact single-entry model.
    Ip,
    /// Joint sample-average model over all entries.
    Saa,
    /// Single-entry model with diversification constraints against fixed
    /// previous entries.
    Sip,
    /// One greedy step: a single new entry against incumbent scores.
    Gsaa,
}

impl ExportForm {
    pub fn name(self) -> &'static str {
        match self {
            ExportForm::Ip => "ip",
            ExportForm::Saa => "saa",
            ExportForm::Sip => "sip",
            ExportForm::Gsaa => "gsaa",
        }
    }
}

/// Inputs for [`saa_export`]; which fields are required depends on the form.
#[derive(Default)]
pub struct ExportInputs<'a> {
    /// Team-by-team matrix; required for `Ip` and `Sip` objectives.
    pub pteam: Option<&'a TeamWinMatrix>,
    /// Simulated outcomes; required for `Saa` and `Gsaa`.
    pub pool: Option<&'a OutcomePool>,
    /// Number of entries (`Saa` only; the sequential forms model one entry).
    pub entry_count: usize,
    /// Already-chosen entries (`Sip` constraints).
    pub previous: &'a [Bracket],
    /// Incumbent best scores per outcome (`Gsaa`); zeros when absent.
    pub incumbents: Option<&'a [f64]>,
    /// Constraint families for `Sip`; tuned defaults when absent.
    pub config: Option<&'a DiversificationConfig>,
}

pub fn saa_export(
    t: &Tournament,
    form: ExportForm,
    inputs: &ExportInputs<'_>,
) -> Result<LpModel, OptimizeError> {
    match form {
        ExportForm::Ip => export_ip(t, inputs),
        ExportForm::Sip => export_sip(t, inputs),
        ExportForm::Saa => export_saa(t, inputs),
        ExportForm::Gsaa => export_gsaa(t, inputs),
    }
}

fn big_m(t: &Tournament) -> f64 {
    t.max_score() as f64
}

fn xvar(team: u16, round: u16) -> String {
    format!("x_{team}_{round}")
}

fn xvar_e(team: u16, round: u16, entry: usize) -> String {
    format!("x_{team}_{round}_{entry}")
}

/// Feasibility rows shared by every form: one team per game, and a team
/// selected in round `r` must be selected in round `r-1`.
fn feasibility_constraints(
    t: &Tournament,
    suffix: &str,
    var: &dyn Fn(u16, u16) -> String,
) -> Vec<LpConstraint> {
    let mut out = Vec::new();
    for game in t.games() {
        let round = t.round_of(game);
        out.push(LpConstraint {
            name: format!("assign_g{game}{suffix}"),
            terms: t
                .team_range(game)
                .map(|team| (1.0, var(team, round)))
                .collect(),
            sense: CmpSense::Eq,
            rhs: 1.0,
        });
    }
    for team in t.teams() {
        for round in 2..=t.round_count() {
            out.push(LpConstraint {
                name: format!("mono_t{team}_r{round}{suffix}"),
                terms: vec![(1.0, var(team, round)), (-1.0, var(team, round - 1))],
                sense: CmpSense::Le,
                rhs: 0.0,
            });
        }
    }
    out
}

fn expected_score_objective(
    t: &Tournament,
    p: &TeamWinMatrix,
    var: &dyn Fn(u16, u16) -> String,
) -> Result<Vec<(f64, String)>, OptimizeError> {
    let (_, pr) = propagate(t, p)?;
    let mut obj = Vec::new();
    for game in t.games() {
        let round = t.round_of(game);
        let weight = Tournament::round_weight(round) as f64;
        for team in t.team_range(game) {
            obj.push((weight * pr.get(team, round), var(team, round)));
        }
    }
    Ok(obj)
}

fn export_ip(t: &Tournament, inputs: &ExportInputs<'_>) -> Result<LpModel, OptimizeError> {
    let p = inputs.pteam.ok_or(OptimizeError::ExportInput {
        form: "ip",
        missing: "a team-by-team matrix",
    })?;
    t.check_same(p.team_count())?;
    let var = |team, round| xvar(team, round);
    let mut model = LpModel {
        name: "ip".into(),
        objective: expected_score_objective(t, p, &var)?,
        constraints: feasibility_constraints(t, "", &var),
        bounds: Vec::new(),
        binaries: all_xvars(t, &var),
    };
    model.name = format!("ip_t{}", t.team_count());
    Ok(model)
}

fn all_xvars(t: &Tournament, var: &dyn Fn(u16, u16) -> String) -> Vec<String> {
    let mut vars = Vec::new();
    for team in t.teams() {
        for round in 1..=t.round_count() {
            vars.push(var(team, round));
        }
    }
    vars
}

fn export_sip(t: &Tournament, inputs: &ExportInputs<'_>) -> Result<LpModel, OptimizeError> {
    let p = inputs.pteam.ok_or(OptimizeError::ExportInput {
        form: "sip",
        missing: "a team-by-team matrix",
    })?;
    t.check_same(p.team_count())?;
    let entry_count = inputs.entry_count.max(inputs.previous.len() + 1);
    let default_config = DiversificationConfig::defaults_for(entry_count);
    let config = inputs.config.unwrap_or(&default_config);
    config.validate()?;
    let (_, pr) = propagate(t, p)?;

    let var = |team, round| xvar(team, round);
    let mut constraints = feasibility_constraints(t, "", &var);

    if config.enable_champion {
        let last = t.round_count();
        for round in [last - 1, last] {
            for team in t.teams() {
                let cap = champion_cap(entry_count, pr.get(team, round));
                let prior = inputs
                    .previous
                    .iter()
                    .filter(|b| b.winner(t.game_of(team, round)) == team)
                    .count() as u32;
                if prior >= cap {
                    constraints.push(LpConstraint {
                        name: format!("champ_t{team}_r{round}"),
                        terms: vec![(1.0, var(team, round))],
                        sense: CmpSense::Le,
                        rhs: 0.0,
                    });
                }
            }
        }
    }
    if config.enable_finalist {
        let (sf1, sf2) = t
            .predecessors(t.game_count())
            .expect("final has predecessors");
        let round = t.round_count() - 1;
        for (idx, prev) in inputs.previous.iter().enumerate() {
            constraints.push(LpConstraint {
                name: format!("finalist_p{}", idx + 1),
                terms: vec![
                    (1.0, var(prev.winner(sf1), round)),
                    (1.0, var(prev.winner(sf2), round)),
                ],
                sense: CmpSense::Le,
                rhs: 1.0,
            });
        }
    }
    if let Some(sigma) = config.global_sigma {
        for (idx, prev) in inputs.previous.iter().enumerate() {
            constraints.push(LpConstraint {
                name: format!("overlap_p{}", idx + 1),
                terms: t
                    .games()
                    .map(|g| (1.0, var(prev.winner(g), t.round_of(g))))
                    .collect(),
                sense: CmpSense::Le,
                rhs: sigma as f64,
            });
        }
    }
    if let Some(sigmas) = config.round_sigmas {
        for (idx, prev) in inputs.previous.iter().enumerate() {
            for (ridx, &sigma) in sigmas.iter().enumerate() {
                let round = ridx as u16 + 1;
                if round > t.round_count() {
                    break;
                }
                let cap = sigma.min(t.games_in_round(round) as u32);
                constraints.push(LpConstraint {
                    name: format!("overlap_p{}_r{round}", idx + 1),
                    terms: (1..=t.games_in_round(round))
                        .map(|pos| {
                            let g = t.game_id(round, pos);
                            (1.0, var(prev.winner(g), round))
                        })
                        .collect(),
                    sense: CmpSense::Le,
                    rhs: cap as f64,
                });
            }
        }
    }

    Ok(LpModel {
        name: format!("sip_t{}_step{}", t.team_count(), inputs.previous.len() + 1),
        objective: expected_score_objective(t, p, &var)?,
        constraints,
        bounds: Vec::new(),
        binaries: all_xvars(t, &var),
    })
}

fn export_saa(t: &Tournament, inputs: &ExportInputs<'_>) -> Result<LpModel, OptimizeError> {
    let pool = inputs.pool.ok_or(OptimizeError::ExportInput {
        form: "saa",
        missing: "an outcome pool",
    })?;
    t.check_same(pool.team_count())?;
    if inputs.entry_count == 0 {
        return Err(OptimizeError::ZeroEntries);
    }
    let entries = inputs.entry_count;
    let w = pool.len();
    let m = big_m(t);

    let mut model = LpModel {
        name: format!("saa_t{}_w{}_e{}", t.team_count(), w, entries),
        ..Default::default()
    };
    for wi in 1..=w {
        model.objective.push((1.0 / w as f64, format!("smax_{wi}")));
        model.bounds.push(LpBound {
            var: format!("smax_{wi}"),
            lower: 0.0,
            upper: m,
        });
    }
    for e in 1..=entries {
        let var = move |team, round| xvar_e(team, round, e);
        model
            .constraints
            .extend(feasibility_constraints(t, &format!("_e{e}"), &var));
        model.binaries.extend(all_xvars(t, &var));
    }
    for (widx, outcome) in pool.outcomes().iter().enumerate() {
        let wi = widx + 1;
        for e in 1..=entries {
            // s_w_e = Σ_g 2^(r-1) x_{winner_w(g), r(g), e}
            let mut terms = vec![(1.0, format!("s_{wi}_{e}"))];
            for game in t.games() {
                let round = t.round_of(game);
                terms.push((
                    -(Tournament::round_weight(round) as f64),
                    xvar_e(outcome.winner(game), round, e),
                ));
            }
            model.constraints.push(LpConstraint {
                name: format!("score_w{wi}_e{e}"),
                terms,
                sense: CmpSense::Eq,
                rhs: 0.0,
            });
            model.bounds.push(LpBound {
                var: format!("s_{wi}_{e}"),
                lower: 0.0,
                upper: m,
            });
            // smax_w <= s_w_e + M (1 - z_w_e)
            model.constraints.push(LpConstraint {
                name: format!("cap_w{wi}_e{e}"),
                terms: vec![
                    (1.0, format!("smax_{wi}")),
                    (-1.0, format!("s_{wi}_{e}")),
                    (m, format!("z_{wi}_{e}")),
                ],
                sense: CmpSense::Le,
                rhs: m,
            });
            model.binaries.push(format!("z_{wi}_{e}"));
        }
        // Σ_e z_w_e = 1
        model.constraints.push(LpConstraint {
            name: format!("pick_w{wi}"),
            terms: (1..=entries)
                .map(|e| (1.0, format!("z_{wi}_{e}")))
                .collect(),
            sense: CmpSense::Eq,
            rhs: 1.0,
        });
    }
    Ok(model)
}

fn export_gsaa(t: &Tournament, inputs: &ExportInputs<'_>) -> Result<LpModel, OptimizeError> {
    let pool = inputs.pool.ok_or(OptimizeError::ExportInput {
        form: "gsaa",
        missing: "an outcome pool",
    })?;
    t.check_same(pool.team_count())?;
    let w = pool.len();
    let zeros = vec![0.0; w];
    let incumbents = inputs.incumbents.unwrap_or(&zeros);
    if incumbents.len() != w {
        return Err(OptimizeError::IncumbentLength {
            expected: w,
            got: incumbents.len(),
        });
    }
    let m = big_m(t);
    let var = |team, round| xvar(team, round);

    let mut model = LpModel {
        name: format!("gsaa_t{}_w{}", t.team_count(), w),
        constraints: feasibility_constraints(t, "", &var),
        binaries: all_xvars(t, &var),
        ..Default::default()
    };
    for (widx, outcome) in pool.outcomes().iter().enumerate() {
        let wi = widx + 1;
        let sbar = incumbents[widx];
        model.objective.push((1.0 / w as f64, format!("smax_{wi}")));
        let mut terms = vec![(1.0, format!("s_{wi}"))];
        for game in t.games() {
            let round = t.round_of(game);
            terms.push((
                -(Tournament::round_weight(round) as f64),
                var(outcome.winner(game), round),
            ));
        }
        model.constraints.push(LpConstraint {
            name: format!("score_w{wi}"),
            terms,
            sense: CmpSense::Eq,
            rhs: 0.0,
        });
        // smax_w <= s_w + M (1 - z_w)
        model.constraints.push(LpConstraint {
            name: format!("cap_new_w{wi}"),
            terms: vec![
                (1.0, format!("smax_{wi}")),
                (-1.0, format!("s_{wi}")),
                (m, format!("z_{wi}")),
            ],
            sense: CmpSense::Le,
            rhs: m,
        });
        // smax_w <= s̄_w (1 - z_w) + M z_w
        model.constraints.push(LpConstraint {
            name: format!("cap_inc_w{wi}"),
            terms: vec![(1.0, format!("smax_{wi}")), (sbar - m, format!("z_{wi}"))],
            sense: CmpSense::Le,
            rhs: sbar,
        });
        model.binaries.push(format!("z_{wi}"));
        model.bounds.push(LpBound {
            var: format!("s_{wi}"),
            lower: 0.0,
            upper: m,
        });
        model.bounds.push(LpBound {
            var: format!("smax_{wi}"),
            lower: 0.0,
            upper: m,
        });
    }
    Ok(model)
}

/// Turn a concrete entry set plus pool into a solution assignment for an
/// exported `Saa` model (`z` picks the first best entry per outcome). Useful
/// for checking models and solutions against the in-sample objective.
pub fn saa_solution_from_entries(
    t: &Tournament,
    pool: &OutcomePool,
    entries: &[Bracket],
) -> std::collections::BTreeMap<String, f64> {
    let mut sol = std::collections::BTreeMap::new();
    for (e, entry) in entries.iter().enumerate() {
        for round in 1..=t.round_count() {
            for pos in 1..=t.games_in_round(round) {
                let game = t.game_id(round, pos);
                sol.insert(xvar_e(entry.winner(game), round, e + 1), 1.0);
            }
        }
    }
    for (widx, outcome) in pool.outcomes().iter().enumerate() {
        let wi = widx + 1;
        let scores: Vec<u32> = entries
            .iter()
            .map(|b| crate::tournament::score_unchecked(t, b, outcome))
            .collect();
        let best = *scores.iter().max().expect("nonempty");
        let pick = scores.iter().position(|&s| s == best).expect("exists");
        for (e, &s) in scores.iter().enumerate() {
            sol.insert(format!("s_{wi}_{}", e + 1), s as f64);
        }
        sol.insert(format!("z_{wi}_{}", pick + 1), 1.0);
        sol.insert(format!("smax_{wi}"), best as f64);
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::sample_pool;
    use crate::testutil::{diverse_matrix, four_team_brackets, t4};

    #[test]
    fn ip_model_counts_for_four_teams() {
        let t = t4();
        let p = diverse_matrix();
        let model = saa_export(
            &t,
            ExportForm::Ip,
            &ExportInputs {
                pteam: Some(&p),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(model.binaries.len(), 8); // 4 teams x 2 rounds
        let assigns = model
            .constraints
            .iter()
            .filter(|c| c.name.starts_with("assign"))
            .count();
        let monos = model
            .constraints
            .iter()
            .filter(|c| c.name.starts_with("mono"))
            .count();
        assert_eq!(assigns, 3);
        assert_eq!(monos, 4);
        // objective value of B1 under the model = 2.0515
        let b1 = &four_team_brackets()[0];
        let mut sol = std::collections::BTreeMap::new();
        for round in 1..=2u16 {
            for pos in 1..=t.games_in_round(round) {
                sol.insert(
                    format!("x_{}_{round}", b1.winner(t.game_id(round, pos))),
                    1.0,
                );
            }
        }
        let report = model.check_solution(&sol, 1e-6);
        assert!(report.is_ok(), "{:?}", report.violations);
        assert!((report.objective - 2.0515).abs() < 1e-9);
    }

    #[test]
    fn saa_model_counts_and_checker_objective() {
        let t = t4();
        let p = diverse_matrix();
        let pool = sample_pool(&t, &p, 2, 5).unwrap();
        let model = saa_export(
            &t,
            ExportForm::Saa,
            &ExportInputs {
                pool: Some(&pool),
                entry_count: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let picks = model
            .constraints
            .iter()
            .filter(|c| c.name.starts_with("pick_"))
            .count();
        assert_eq!(picks, 2); // one per outcome

        // brute-force the best pair by in-sample objective and check it
        let b = four_team_brackets();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..8 {
            for j in i..8 {
                let obj: f64 = pool
                    .outcomes()
                    .iter()
                    .map(|o| {
                        crate::tournament::score_unchecked(&t, &b[i], o)
                            .max(crate::tournament::score_unchecked(&t, &b[j], o))
                            as f64
                    })
                    .sum::<f64>()
                    / pool.len() as f64;
                if best.is_none_or(|(v, _, _)| obj > v) {
                    best = Some((obj, i, j));
                }
            }
        }
        let (obj, i, j) = best.unwrap();
        let sol = saa_solution_from_entries(&t, &pool, &[b[i].clone(), b[j].clone()]);
        let report = model.check_solution(&sol, 1e-6);
        assert!(report.is_ok(), "{:?}", report.violations);
        assert!((report.objective - obj).abs() < 1e-9);
    }

    #[test]
    fn gsaa_incumbent_rows_use_the_given_scores() {
        let t = t4();
        let p = diverse_matrix();
        let pool = sample_pool(&t, &p, 3, 6).unwrap();
        let incumbents = vec![1.0, 0.0, 4.0];
        let model = saa_export(
            &t,
            ExportForm::Gsaa,
            &ExportInputs {
                pool: Some(&pool),
                incumbents: Some(&incumbents),
                ..Default::default()
            },
        )
        .unwrap();
        let cap_inc: Vec<_> = model
            .constraints
            .iter()
            .filter(|c| c.name.starts_with("cap_inc"))
            .collect();
        assert_eq!(cap_inc.len(), 3);
        assert_eq!(cap_inc[0].rhs, 1.0);
        assert_eq!(cap_inc[2].rhs, 4.0);
    }

    #[test]
    fn sip_export_carries_previous_entry_constraints() {
        let t = t4();
        let p = diverse_matrix();
        let b = four_team_brackets();
        let config = DiversificationConfig {
            enable_champion: false,
            enable_finalist: true,
            global_sigma: Some(1),
            round_sigmas: None,
        };
        let model = saa_export(
            &t,
            ExportForm::Sip,
            &ExportInputs {
                pteam: Some(&p),
                previous: &b[0..1],
                entry_count: 2,
                config: Some(&config),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(model.constraints.iter().any(|c| c.name == "finalist_p1"));
        assert!(model.constraints.iter().any(|c| c.name == "overlap_p1"));
        // B6 is disjoint from B1: overlap row evaluates to 0 <= 1
        let mut sol = std::collections::BTreeMap::new();
        for round in 1..=2u16 {
            for pos in 1..=t.games_in_round(round) {
                sol.insert(
                    format!("x_{}_{round}", b[5].winner(t.game_id(round, pos))),
                    1.0,
                );
            }
        }
        assert!(model.check_solution(&sol, 1e-6).is_ok());
        // B2 shares game 1 and the final with B1: global sigma 1 fails
        let mut sol = std::collections::BTreeMap::new();
        for round in 1..=2u16 {
            for pos in 1..=t.games_in_round(round) {
                sol.insert(
                    format!("x_{}_{round}", b[1].winner(t.game_id(round, pos))),
                    1.0,
                );
            }
        }
        let report = model.check_solution(&sol, 1e-6);
        assert!(report.violations.iter().any(|v| v.contains("overlap_p1")));
    }

    #[test]
    fn exported_text_parses_back() {
        let t = t4();
        let p = diverse_matrix();
        let pool = sample_pool(&t, &p, 2, 5).unwrap();
        for form in [
            ExportForm::Ip,
            ExportForm::Saa,
            ExportForm::Sip,
            ExportForm::Gsaa,
        ] {
            let model = saa_export(
                &t,
                form,
                &ExportInputs {
                    pteam: Some(&p),
                    pool: Some(&pool),
                    entry_count: 2,
                    ..Default::default()
                },
            )
            .unwrap();
            let text = model.to_lp_string();
            let back = crate::lp::LpModel::parse_lp(&text).unwrap();
            assert_eq!(model, back, "{}", form.name());
        }
    }
}
