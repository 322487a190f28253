//! Shared fixtures for unit tests: the 4-team worked example and its
//! probability matrices.

use crate::probability::TeamWinMatrix;
use crate::tournament::{Bracket, Tournament};

pub fn t4() -> Tournament {
    Tournament::new(4).unwrap()
}

/// The eight feasible 4-team brackets in the worked example's order,
/// teams A,B,C,D = 1,2,3,4. `four_team_brackets()[0]` is B1 = (A,C,A).
pub fn four_team_brackets() -> Vec<Bracket> {
    let t = t4();
    [
        (1, 3, 1),
        (1, 4, 1),
        (1, 3, 3),
        (1, 4, 4),
        (2, 3, 2),
        (2, 4, 2),
        (2, 3, 3),
        (2, 4, 4),
    ]
    .iter()
    .map(|&(a, b, c)| Bracket::from_winners(&t, vec![a, b, c]).unwrap())
    .collect()
}

/// The 4-team matrix under which B1 is the best single entry (2.0515) but
/// {B2,B3} is the best pair (2.83425).
pub fn diverse_matrix() -> TeamWinMatrix {
    TeamWinMatrix::from_rows(vec![
        vec![0.0, 0.70, 0.55, 0.60],
        vec![0.30, 0.0, 0.40, 0.45],
        vec![0.45, 0.60, 0.0, 0.55],
        vec![0.40, 0.55, 0.45, 0.0],
    ])
    .unwrap()
}

/// The 4-team matrix with a dominant team A under which the best pair
/// {B1,B2} keeps the same champion.
pub fn favorite_matrix() -> TeamWinMatrix {
    TeamWinMatrix::from_rows(vec![
        vec![0.0, 0.80, 0.80, 0.80],
        vec![0.20, 0.0, 0.40, 0.45],
        vec![0.20, 0.60, 0.0, 0.55],
        vec![0.20, 0.55, 0.45, 0.0],
    ])
    .unwrap()
}
