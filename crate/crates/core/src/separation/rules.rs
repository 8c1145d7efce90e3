//! Edge-producing rules: game-induced relations and the model-specific
//! propagation steps run between closures.

use super::graph::{ItemGraph, Provenance};
use super::{item_count, SeparationError};
use crate::datamodel::{Dataset, ModelKind, TeamId};

pub(crate) const STEP_LOOPS: u8 = 1;
pub(crate) const STEP_GAMES: u8 = 2;
pub(crate) const STEP_CLOSURE: u8 = 3;
pub(crate) const STEP_FIRST_OVER_SECOND: u8 = 4;
pub(crate) const STEP_SECOND_OVER_FIRST: u8 = 5;
pub(crate) const STEP_MIRROR: u8 = 6;
pub(crate) const STEP_TEAM_TIE: u8 = 4;

/// Loops plus the relations implied directly by the games, over the item
/// set of `model`.
///
/// Item layout: `Basic` uses one item per team; the order models use `iH`
/// at `i` and `iV` at `t + i`; `SingleTie` uses `i+` at `i` and `i-` at
/// `t + i`; `TeamTie` uses the team at `i`, `i+` at `t + i` and `i-` at
/// `2t + i`.
pub fn direct_relations(dataset: &Dataset, model: ModelKind) -> Result<ItemGraph, SeparationError> {
    if dataset.has_ties() && !model.allows_ties() {
        return Err(SeparationError::TiesNotAllowed(model));
    }
    let t = dataset.team_count();
    let loops = Provenance::new(STEP_LOOPS, 1);
    let game = Provenance::new(STEP_GAMES, 1);
    let mut g = ItemGraph::reflexive(item_count(model, t), loops);

    let teams: Vec<TeamId> = dataset.teams().collect();
    for &i in &teams {
        for &j in &teams {
            if i == j {
                continue;
            }
            let tally = dataset.oriented(i, j);
            let (i, j) = (i.0, j.0);
            let first_won = !tally.first_wins.is_zero();
            let second_won = !tally.second_wins.is_zero();
            let tied = !tally.ties.is_zero();
            match model {
                ModelKind::Basic => {
                    if first_won {
                        g.insert(i, j, game);
                    }
                    if second_won {
                        g.insert(j, i, game);
                    }
                }
                ModelKind::SingleOrder | ModelKind::TeamOrder => {
                    let (home, visitor) = (i, t + j);
                    if first_won {
                        g.insert(home, visitor, game);
                    }
                    if second_won {
                        g.insert(visitor, home, game);
                    }
                }
                ModelKind::SingleTie => {
                    let plus = |k: usize| k;
                    let minus = |k: usize| t + k;
                    for (w, l, won) in [(i, j, first_won), (j, i, second_won)] {
                        if won {
                            g.insert(plus(w), plus(l), game);
                            g.insert(minus(w), minus(l), game);
                            g.insert(minus(w), plus(l), game);
                        }
                    }
                    if tied {
                        g.insert(plus(i), minus(j), game);
                        g.insert(plus(j), minus(i), game);
                    }
                }
                ModelKind::TeamTie => {
                    let plus = |k: usize| t + k;
                    let minus = |k: usize| 2 * t + k;
                    for (w, l, won) in [(i, j, first_won), (j, i, second_won)] {
                        if won {
                            g.insert(w, l, game);
                            g.insert(minus(w), plus(l), game);
                        }
                    }
                    if tied {
                        g.insert(plus(i), minus(j), game);
                        g.insert(plus(j), minus(i), game);
                    }
                }
            }
        }
    }
    Ok(g)
}

/// One pass of the shared-offset rules over a graph of `2t` items laid out
/// as `[first block | second block]` (home/visitor, or plus/minus).
///
/// Step 4: if `kF >= kS` for some `k`, or the graph `i -> j` iff `iF >= jS`
/// has a cycle, then `kF >= kS` for every `k`. Step 5 is the same with the
/// blocks swapped. Step 6 mirrors `iF >= jF` and `iS >= jS`. Returns the
/// number of edges added.
pub fn propagate_order(graph: &mut ItemGraph, iteration: u32) -> usize {
    let t = graph.size() / 2;
    let mut added = offset_rule(
        graph,
        0,
        t,
        Provenance::new(STEP_FIRST_OVER_SECOND, iteration),
    );
    added += offset_rule(
        graph,
        t,
        0,
        Provenance::new(STEP_SECOND_OVER_FIRST, iteration),
    );

    let mirror = Provenance::new(STEP_MIRROR, iteration);
    for i in 0..t {
        for j in 0..t {
            if graph.reaches(i, j) && graph.insert(t + i, t + j, mirror) {
                added += 1;
            }
            if graph.reaches(t + i, t + j) && graph.insert(i, j, mirror) {
                added += 1;
            }
        }
    }
    added
}

fn offset_rule(graph: &mut ItemGraph, from: usize, to: usize, stamp: Provenance) -> usize {
    let t = graph.size() / 2;
    let mut forced = (0..t).any(|k| graph.reaches(from + k, to + k));
    if !forced {
        let mut cross = ItemGraph::empty(t);
        for i in 0..t {
            for j in 0..t {
                if graph.reaches(from + i, to + j) {
                    cross.insert(i, j, stamp);
                }
            }
        }
        cross.close(stamp);
        forced = (0..t).any(|k| cross.reaches(k, k));
    }
    if !forced {
        return 0;
    }
    (0..t)
        .filter(|&k| graph.insert(from + k, to + k, stamp))
        .count()
}

/// One pass of the six team-specific tie rules over every ordered pair of
/// teams. `team` has `t` items; `sign` has `i+` at `i` and `i-` at `t + i`.
/// Returns the number of edges added to either graph.
pub fn propagate_team_tie(team: &mut ItemGraph, sign: &mut ItemGraph, iteration: u32) -> usize {
    let t = team.size();
    debug_assert_eq!(sign.size(), 2 * t);
    let stamp = Provenance::new(STEP_TEAM_TIE, iteration);
    let plus = |k: usize| k;
    let minus = |k: usize| t + k;
    let mut added = 0;
    for i in 0..t {
        for j in 0..t {
            if team.reaches(i, j) {
                let implied = [
                    (plus(j), plus(i), minus(i), minus(j)),
                    (plus(j), minus(i), plus(i), minus(j)),
                    (minus(j), plus(i), minus(i), plus(j)),
                    (minus(j), minus(i), plus(i), plus(j)),
                ];
                for (a, b, c, d) in implied {
                    if sign.reaches(a, b) && sign.insert(c, d, stamp) {
                        added += 1;
                    }
                }
            }
            let same_sign = sign.reaches(plus(i), plus(j)) && sign.reaches(minus(i), minus(j));
            let cross_sign = sign.reaches(plus(i), minus(j)) && sign.reaches(minus(i), plus(j));
            if (same_sign || cross_sign) && team.insert(i, j, stamp) {
                added += 1;
            }
        }
    }
    added
}
