//! Round-robin summaries computed from a probability matrix.

use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::datamodel::{Dataset, ModelKind, TeamId};
use crate::estimation::{ProbEstimate, ProbMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SummaryError {
    #[error("outcome proportions need a model with ties, not `{0}`")]
    TiesRequired(ModelKind),
    #[error("a point system needs a model with ties, not `{0}`")]
    PointsWithoutTies(ModelKind),
    #[error("point values must be finite and non-negative")]
    NegativePoints,
}

/// Points per win, loss and tie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSystem {
    pub win: f64,
    pub loss: f64,
    pub tie: f64,
}

impl PointSystem {
    pub fn new(win: f64, loss: f64, tie: f64) -> Result<Self, SummaryError> {
        if [win, loss, tie].iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(PointSystem { win, loss, tie })
        } else {
            Err(SummaryError::NegativePoints)
        }
    }
}

/// Replaces arbitrary entries of a triple by an equal share of whatever
/// probability the other entries leave over.
fn fill_triple(entry: &[ProbEstimate; 3]) -> [f64; 3] {
    let known: f64 = entry.iter().filter_map(ProbEstimate::value).sum();
    let open = entry.iter().filter(|e| e.is_arbitrary()).count();
    let share = if open == 0 {
        0.0
    } else {
        ((1.0 - known) / open as f64).max(0.0)
    };
    entry.map(|e| e.value().unwrap_or(share))
}

fn win_value(estimate: ProbEstimate) -> f64 {
    estimate.value().unwrap_or(0.5)
}

/// Round-robin winning percentage per team: the expected fraction of games
/// won if every team met every other once (at home and on the road under
/// the order models). Arbitrary win probabilities count as ½; ties count
/// as half a win.
pub fn rrwp(matrix: &ProbMatrix) -> Vec<f64> {
    let t = matrix.team_count();
    let model = matrix.model();
    if model.allows_ties() {
        let outcomes = round_robin_outcomes(matrix).expect("tie model");
        return outcomes.iter().map(|r| r[0] + 0.5 * r[2]).collect();
    }
    let p = |i: usize, j: usize| win_value(matrix.entry(TeamId(i), TeamId(j)).expect("entry")[0]);
    (0..t)
        .map(|i| {
            let others = (0..t).filter(|&j| j != i);
            if model.has_order_effect() {
                others.map(|j| p(i, j) + 1.0 - p(j, i)).sum::<f64>() / (2 * (t - 1)) as f64
            } else {
                others.map(|j| p(i, j)).sum::<f64>() / (t - 1) as f64
            }
        })
        .collect()
}

/// Expected fractions `[wins, losses, ties]` per team in a single round
/// robin. An all-arbitrary pair counts ⅓ each; with one outcome forced to
/// zero the other two count ½ each.
pub fn round_robin_outcomes(matrix: &ProbMatrix) -> Result<Vec<[f64; 3]>, SummaryError> {
    if !matrix.model().allows_ties() {
        return Err(SummaryError::TiesRequired(matrix.model()));
    }
    let t = matrix.team_count();
    Ok((0..t)
        .map(|i| {
            let mut sum = [0.0; 3];
            for j in (0..t).filter(|&j| j != i) {
                let filled = fill_triple(matrix.entry(TeamId(i), TeamId(j)).expect("entry"));
                for k in 0..3 {
                    sum[k] += filled[k];
                }
            }
            sum.map(|s| s / (t - 1) as f64)
        })
        .collect())
}

/// Round-robin points per game.
pub fn rrppg(outcomes: &[[f64; 3]], points: PointSystem) -> Vec<f64> {
    outcomes
        .iter()
        .map(|r| points.win * r[0] + points.loss * r[1] + points.tie * r[2])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamSummary {
    pub team: String,
    pub wins: f64,
    pub losses: f64,
    pub ties: f64,
    pub rrwp: f64,
    /// `[wins, losses, ties]` per game; tie models only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rrppg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRobinSummary {
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<PointSystem>,
    pub teams: Vec<TeamSummary>,
}

impl RoundRobinSummary {
    /// Value used for ranking: RRPPG when a point system was given,
    /// otherwise RRWP.
    pub fn score(&self, team: usize) -> f64 {
        let entry = &self.teams[team];
        entry.rrppg.unwrap_or(entry.rrwp)
    }
}

pub fn summarize(
    matrix: &ProbMatrix,
    dataset: &Dataset,
    points: Option<PointSystem>,
) -> Result<RoundRobinSummary, SummaryError> {
    let model = matrix.model();
    if points.is_some() && !model.allows_ties() {
        return Err(SummaryError::PointsWithoutTies(model));
    }
    let r = rrwp(matrix);
    let outcomes = model
        .allows_ties()
        .then(|| round_robin_outcomes(matrix))
        .transpose()?;
    let per_game = match (&outcomes, points) {
        (Some(o), Some(p)) => Some(rrppg(o, p)),
        _ => None,
    };
    let teams = dataset
        .teams()
        .map(|team| {
            let (wins, losses, ties) = dataset.record(team);
            let i = team.0;
            TeamSummary {
                team: dataset.label(team).to_string(),
                wins,
                losses,
                ties,
                rrwp: r[i],
                outcomes: outcomes.as_ref().map(|o| o[i]),
                rrppg: per_game.as_ref().map(|p| p[i]),
            }
        })
        .collect();
    Ok(RoundRobinSummary {
        model,
        points,
        teams,
    })
}

/// Team indices from best to worst. Scores equal to 12 decimals are
/// ordered by label.
pub fn rank(summary: &RoundRobinSummary) -> Vec<usize> {
    let key = |i: usize| (summary.score(i) * 1e12).round() as i64;
    let mut order: Vec<usize> = (0..summary.teams.len()).collect();
    order.sort_by(|&a, &b| {
        key(b)
            .cmp(&key(a))
            .then_with(|| summary.teams[a].team.cmp(&summary.teams[b].team))
    });
    order
}

fn count(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

/// Plain-text standings, best team first.
pub fn render_table(summary: &RoundRobinSummary) -> String {
    let width = summary
        .teams
        .iter()
        .map(|t| t.team.chars().count())
        .max()
        .unwrap_or(0)
        .max(4);
    let ties = summary.model.allows_ties();
    let mut out = String::new();
    let _ = write!(out, "{:>4}  {:<width$}  {:>12}", "rank", "team", "W-L-T");
    if ties {
        out.push_str("    R_i1    R_i2    R_i0");
    }
    out.push_str("    RRWP");
    if summary.points.is_some() {
        out.push_str("   RRPPG");
    }
    out.push('\n');
    for (place, &i) in rank(summary).iter().enumerate() {
        let team = &summary.teams[i];
        let record = format!("{}-{}-{}", count(team.wins), count(team.losses), count(team.ties));
        let _ = write!(out, "{:>4}  {:<width$}  {:>12}", place + 1, team.team, record);
        if let Some(o) = team.outcomes {
            let _ = write!(out, "  {:>6.3}  {:>6.3}  {:>6.3}", o[0], o[1], o[2]);
        }
        let _ = write!(out, "  {:>6.3}", team.rrwp);
        if let Some(p) = team.rrppg {
            let _ = write!(out, "  {:>6.3}", p);
        }
        out.push('\n');
    }
    out
}
