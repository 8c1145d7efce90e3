//! Which outcome probabilities are forced by the separation result.

use serde::Serialize;

use crate::datamodel::{ModelKind, Outcome, TeamId};
use crate::separation::{Decoration, PairRelation, SeparationResult};

/// Outcomes of a game whose weights make up a probability's denominator,
/// from the point of view of the first-listed team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct ActiveSet {
    pub first: bool,
    pub second: bool,
    pub tie: bool,
}

impl ActiveSet {
    pub const WIN_LOSS: ActiveSet = ActiveSet {
        first: true,
        second: true,
        tie: false,
    };
    pub const ALL: ActiveSet = ActiveSet {
        first: true,
        second: true,
        tie: true,
    };

    pub fn contains(&self, outcome: Outcome) -> bool {
        match outcome {
            Outcome::FirstWins => self.first,
            Outcome::SecondWins => self.second,
            Outcome::Tie => self.tie,
        }
    }

    fn swapped(self) -> ActiveSet {
        ActiveSet {
            first: self.second,
            second: self.first,
            tie: self.tie,
        }
    }
}

/// Classification of one outcome probability before any fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Cell {
    One,
    Zero,
    Arbitrary,
    /// Strictly between 0 and 1; evaluated from fitted parameters as the
    /// outcome's weight over the summed weights of `ActiveSet`.
    Pending(ActiveSet),
}

impl Cell {
    pub fn is_pending(&self) -> bool {
        matches!(self, Cell::Pending(_))
    }
}

fn win_loss_cell(rel: PairRelation) -> Cell {
    match rel {
        PairRelation::Equiv => Cell::Pending(ActiveSet::WIN_LOSS),
        PairRelation::Dominates => Cell::One,
        PairRelation::DominatedBy => Cell::Zero,
        PairRelation::Incomparable => Cell::Arbitrary,
    }
}

/// Probability that `i` beats `j`. `win_vs_tie` relates `i-` to `j+`,
/// `win_vs_loss` relates `i` to `j`. The active set is returned from
/// `i`'s side (first = `i` wins).
fn win_table(win_vs_tie: PairRelation, win_vs_loss: PairRelation) -> Cell {
    use PairRelation::*;
    match (win_vs_tie, win_vs_loss) {
        (DominatedBy, _) | (_, DominatedBy) => Cell::Zero,
        (Dominates, Dominates) => Cell::One,
        (Dominates, Equiv) => Cell::Pending(ActiveSet::WIN_LOSS),
        (Equiv, Dominates) => Cell::Pending(ActiveSet {
            first: true,
            second: false,
            tie: true,
        }),
        (Equiv, Equiv) => Cell::Pending(ActiveSet::ALL),
        _ => Cell::Arbitrary,
    }
}

/// Probability of a tie between `i` and `j`. `tie_vs_win` relates `j+` to
/// `i-`, `tie_vs_loss` relates `i+` to `j-`.
fn tie_table(tie_vs_win: PairRelation, tie_vs_loss: PairRelation) -> Cell {
    use PairRelation::*;
    match (tie_vs_win, tie_vs_loss) {
        (DominatedBy, _) | (_, DominatedBy) => Cell::Zero,
        (Dominates, Dominates) => Cell::One,
        (Dominates, Equiv) => Cell::Pending(ActiveSet {
            first: false,
            second: true,
            tie: true,
        }),
        (Equiv, Dominates) => Cell::Pending(ActiveSet {
            first: true,
            second: false,
            tie: true,
        }),
        (Equiv, Equiv) => Cell::Pending(ActiveSet::ALL),
        _ => Cell::Arbitrary,
    }
}

/// Classification of the probability of `outcome` in a game with `first`
/// listed first (at home under the order models).
pub fn degenerate_probability(
    sep: &SeparationResult,
    first: TeamId,
    second: TeamId,
    outcome: Outcome,
) -> Cell {
    pair_cells(sep, first, second)[outcome_slot(outcome)]
}

pub(crate) fn outcome_slot(outcome: Outcome) -> usize {
    match outcome {
        Outcome::FirstWins => 0,
        Outcome::SecondWins => 1,
        Outcome::Tie => 2,
    }
}

/// Cells for `[first wins, second wins, tie]`.
pub fn pair_cells(sep: &SeparationResult, i: TeamId, j: TeamId) -> [Cell; 3] {
    let idx = |team: TeamId, d: Decoration| {
        sep.item_index(team, d)
            .expect("item present for the separation model")
    };
    match sep.model() {
        ModelKind::Basic => {
            let win = win_loss_cell(sep.relation(i.0, j.0));
            [win, win_loss_cell(sep.relation(j.0, i.0)), Cell::Zero]
        }
        ModelKind::SingleOrder | ModelKind::TeamOrder => {
            let rel = sep.relation(idx(i, Decoration::Home), idx(j, Decoration::Visitor));
            [win_loss_cell(rel), win_loss_cell(rel.reversed()), Cell::Zero]
        }
        ModelKind::SingleTie | ModelKind::TeamTie => {
            let plus = |k| idx(k, Decoration::Plus);
            let minus = |k| idx(k, Decoration::Minus);
            let team_rel = |a: TeamId, b: TeamId| match sep.model() {
                ModelKind::SingleTie => sep.relation(plus(a), plus(b)),
                _ => sep.relation(
                    idx(a, Decoration::None),
                    idx(b, Decoration::None),
                ),
            };
            let first = win_table(sep.relation(minus(i), plus(j)), team_rel(i, j));
            let second = match win_table(sep.relation(minus(j), plus(i)), team_rel(j, i)) {
                Cell::Pending(set) => Cell::Pending(set.swapped()),
                other => other,
            };
            let tie = tie_table(
                sep.relation(plus(j), minus(i)),
                sep.relation(plus(i), minus(j)),
            );
            [first, second, tie]
        }
    }
}
