//! Exact equilibrium and dominance analysis for 2×2 games.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::game::{Action, ActionSet, AsPayoffs, Payoffs, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureEquilibrium {
    pub row_action: Action,
    pub col_action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedEquilibrium {
    /// Probability the row player plays `A`.
    pub p_a: f64,
    /// Probability the column player plays `C`.
    pub q_c: f64,
}

/// Outcome of the interior mixed-equilibrium computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixedOutcome {
    Interior(MixedEquilibrium),
    /// Both indifference conditions are well defined but a solution falls
    /// outside the open unit interval.
    Absent,
    /// An indifference denominator is zero.
    Degenerate,
}

impl MixedOutcome {
    pub fn interior(self) -> Option<MixedEquilibrium> {
        match self {
            MixedOutcome::Interior(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DominanceCategory {
    Double,
    Single,
    Non,
}

impl DominanceCategory {
    pub const ALL: [DominanceCategory; 3] =
        [DominanceCategory::Double, DominanceCategory::Single, DominanceCategory::Non];

    pub fn as_str(self) -> &'static str {
        match self {
            DominanceCategory::Double => "double",
            DominanceCategory::Single => "single",
            DominanceCategory::Non => "non",
        }
    }
}

fn opp_is_first(opp_action: Action) -> bool {
    opp_action.is_first()
}

/// Own actions of `role` maximizing own payoff against `opp_action`; both
/// when tied.
pub fn best_response(g: &impl AsPayoffs, role: Role, opp_action: Action) -> ActionSet {
    debug_assert_eq!(opp_action.role(), role.opponent());
    let own = g.payoffs().own(role);
    let (first, second) =
        if opp_is_first(opp_action) { (own[0], own[2]) } else { (own[1], own[3]) };
    let mut set = ActionSet::empty();
    if first >= second {
        set.insert(role.first());
    }
    if second >= first {
        set.insert(role.second());
    }
    set
}

/// All cells where both actions are (weak) best responses, in the order
/// `(A,C), (A,D), (B,C), (B,D)`.
pub fn pure_nash(g: &impl AsPayoffs) -> Vec<PureEquilibrium> {
    let p = g.payoffs();
    let mut out = Vec::new();
    for row_action in [Action::A, Action::B] {
        for col_action in [Action::C, Action::D] {
            if best_response(&p, Role::Row, col_action).contains(row_action)
                && best_response(&p, Role::Col, row_action).contains(col_action)
            {
                out.push(PureEquilibrium { row_action, col_action });
            }
        }
    }
    out
}

/// Interior mixed equilibrium from the two indifference conditions.
pub fn mixed_nash(g: &impl AsPayoffs) -> MixedOutcome {
    let Payoffs { row: [a, b, c, d], col: [x, y, z, w] } = g.payoffs();
    let den_q = (a - c) + (d - b);
    let den_p = (x - y) + (w - z);
    if den_q == 0.0 || den_p == 0.0 {
        return MixedOutcome::Degenerate;
    }
    let q_c = (d - b) / den_q;
    let p_a = (w - z) / den_p;
    let open = |v: f64| v > 0.0 && v < 1.0;
    if open(q_c) && open(p_a) {
        MixedOutcome::Interior(MixedEquilibrium { p_a, q_c })
    } else {
        MixedOutcome::Absent
    }
}

/// Dominant action of `role`: weakly better against both opponent actions,
/// with equality allowed in at most one of the two comparisons.
pub fn dominant_strategy(g: &impl AsPayoffs, role: Role) -> Option<Action> {
    let [a, b, c, d] = g.payoffs().own(role);
    let all_equal = a == c && b == d;
    if all_equal {
        None
    } else if a >= c && b >= d {
        Some(role.first())
    } else if a <= c && b <= d {
        Some(role.second())
    } else {
        None
    }
}

pub fn dominance_category(g: &impl AsPayoffs) -> DominanceCategory {
    let p = g.payoffs();
    match (dominant_strategy(&p, Role::Row).is_some(), dominant_strategy(&p, Role::Col).is_some()) {
        (true, true) => DominanceCategory::Double,
        (false, false) => DominanceCategory::Non,
        _ => DominanceCategory::Single,
    }
}

/// Pure best response with ties broken toward the first-listed action.
fn pure_br(p: &Payoffs, role: Role, opp_first_prob: f64) -> Action {
    let own = p.own(role);
    let first = opp_first_prob * own[0] + (1.0 - opp_first_prob) * own[1];
    let second = opp_first_prob * own[2] + (1.0 - opp_first_prob) * own[3];
    if first >= second {
        role.first()
    } else {
        role.second()
    }
}

/// Best-response dynamic: level 1 responds to a uniform opponent, level
/// `k + 1` to the opponent's level-`k` action, both players updated in
/// lockstep. Returns `(row_action, col_action)` per level, starting at 1.
pub fn best_response_path(g: &impl AsPayoffs, levels: usize) -> Vec<(Action, Action)> {
    let p = g.payoffs();
    let mut path = Vec::with_capacity(levels);
    let mut cur = (pure_br(&p, Role::Row, 0.5), pure_br(&p, Role::Col, 0.5));
    path.push(cur);
    for _ in 1..levels {
        let row = pure_br(&p, Role::Row, if cur.1.is_first() { 1.0 } else { 0.0 });
        let col = pure_br(&p, Role::Col, if cur.0.is_first() { 1.0 } else { 0.0 });
        cur = (row, col);
        path.push(cur);
    }
    path
}

pub const MAX_RATIONALITY_LEVEL: u8 = 3;

/// Smallest `k` at which the best-response dynamic repeats itself at
/// `k + 1`, capped at 3.
pub fn iterative_rationality_level(g: &impl AsPayoffs) -> u8 {
    let path = best_response_path(g, MAX_RATIONALITY_LEVEL as usize);
    for k in 1..MAX_RATIONALITY_LEVEL as usize {
        if path[k - 1] == path[k] {
            return k as u8;
        }
    }
    MAX_RATIONALITY_LEVEL
}
