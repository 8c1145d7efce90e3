//! Ford-type fixed-point iterations on the games whose outcome
//! probabilities are not forced by the separation analysis.

use serde::Serialize;

use super::cells::{outcome_slot, pair_cells, ActiveSet, Cell};
use super::EstimationError;
use crate::datamodel::{Dataset, ModelKind, Outcome, TeamId};
use crate::separation::SeparationResult;

/// How strengths are pinned down within each connected group of teams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Geometric mean of the group's strengths equals 1.
    GeometricMean,
    /// The group's lowest-indexed member has strength 1.
    FirstMember,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Stop once no log-parameter moves by more than this in a sweep.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub normalization: Normalization,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-10,
            max_iterations: 100_000,
            normalization: Normalization::GeometricMean,
        }
    }
}

/// Games between one pair (or one home/visitor pairing) whose outcome is
/// not forced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Term {
    pub first: TeamId,
    pub second: TeamId,
    pub active: ActiveSet,
    /// Weighted counts of `[first wins, second wins, tie]`.
    pub y: [f64; 3],
    pub n: f64,
}

/// Model parameters in their natural (not log) scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    /// π per team; under `TeamOrder` these are the home strengths.
    pub strengths: Vec<f64>,
    /// Road strengths (`TeamOrder` only).
    pub road_strengths: Option<Vec<f64>>,
    /// γ (`SingleOrder` only).
    pub order_param: Option<f64>,
    /// ν (`SingleTie` only).
    pub tie_param: Option<f64>,
    /// π_{i+} (`TeamTie` only); π_{i-} = π_i / π_{i+}.
    pub plus_strengths: Option<Vec<f64>>,
}

impl Parameters {
    fn initial(model: ModelKind, t: usize) -> Self {
        Parameters {
            strengths: vec![1.0; t],
            road_strengths: (model == ModelKind::TeamOrder).then(|| vec![1.0; t]),
            order_param: (model == ModelKind::SingleOrder).then_some(1.0),
            tie_param: (model == ModelKind::SingleTie).then_some(1.0),
            plus_strengths: (model == ModelKind::TeamTie).then(|| vec![1.0; t]),
        }
    }

    /// Team-specific tie parameters ν_i = π_{i+}² / π_i (`TeamTie` only).
    pub fn tie_params(&self) -> Option<Vec<f64>> {
        self.plus_strengths.as_ref().map(|plus| {
            plus.iter()
                .zip(&self.strengths)
                .map(|(q, p)| q * q / p)
                .collect()
        })
    }

    /// Outcome weights `[first wins, second wins, tie]` for a game with
    /// `i` listed first. Probabilities are ratios of these.
    pub fn weights(&self, model: ModelKind, i: TeamId, j: TeamId) -> [f64; 3] {
        let s = &self.strengths;
        let (i, j) = (i.0, j.0);
        match model {
            ModelKind::Basic => [s[i], s[j], 0.0],
            ModelKind::SingleOrder => [self.order_param.unwrap_or(1.0) * s[i], s[j], 0.0],
            ModelKind::TeamOrder => {
                let road = self.road_strengths.as_ref().expect("road strengths");
                [s[i], road[j], 0.0]
            }
            ModelKind::SingleTie => {
                let nu = self.tie_param.unwrap_or(1.0);
                [s[i], s[j], nu * (s[i] * s[j]).sqrt()]
            }
            ModelKind::TeamTie => {
                let q = self.plus_strengths.as_ref().expect("plus strengths");
                [s[i], s[j], q[i] * q[j]]
            }
        }
    }

    /// Probability of `outcome` given the denominator's `active` outcomes.
    pub fn probability(
        &self,
        model: ModelKind,
        i: TeamId,
        j: TeamId,
        active: ActiveSet,
        outcome: Outcome,
    ) -> f64 {
        let w = self.weights(model, i, j);
        let total = active_total(&w, active);
        w[outcome_slot(outcome)] / total
    }

    fn log_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.strengths.iter().map(|v| v.ln()).collect();
        for v in [&self.road_strengths, &self.plus_strengths].into_iter().flatten() {
            out.extend(v.iter().map(|x| x.ln()));
        }
        for v in [self.order_param, self.tie_param].into_iter().flatten() {
            out.push(v.ln());
        }
        out
    }

    fn all_positive_finite(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        self.strengths.iter().all(|&v| ok(v))
            && [&self.road_strengths, &self.plus_strengths]
                .into_iter()
                .flatten()
                .all(|v| v.iter().all(|&x| ok(x)))
            && [self.order_param, self.tie_param].into_iter().flatten().all(ok)
    }
}

fn active_total(w: &[f64; 3], active: ActiveSet) -> f64 {
    let mut total = 0.0;
    if active.first {
        total += w[0];
    }
    if active.second {
        total += w[1];
    }
    if active.tie {
        total += w[2];
    }
    total
}

/// Outcome of a successful fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ModelKind,
    pub parameters: Parameters,
    pub iterations: usize,
    /// Largest |observed - expected| over the likelihood equations.
    pub max_residual: f64,
    pub separation: SeparationResult,
}

/// Pending terms of the restricted likelihood. Games whose observed
/// outcome has probability one are dropped; an observed outcome that is
/// forced to zero or left arbitrary means the separation result does not
/// belong to this dataset.
pub(crate) fn collect_terms(
    dataset: &Dataset,
    sep: &SeparationResult,
) -> Result<Vec<Term>, EstimationError> {
    let model = sep.model();
    let t = dataset.team_count();
    let mut terms = Vec::new();
    for i in 0..t {
        let range = if model.has_order_effect() { 0..t } else { i + 1..t };
        for j in range {
            if i == j {
                continue;
            }
            let (a, b) = (TeamId(i), TeamId(j));
            let tally = if model.has_order_effect() {
                dataset.oriented(a, b)
            } else {
                dataset.between(a, b)
            };
            if tally.games().is_zero() {
                continue;
            }
            let cells = pair_cells(sep, a, b);
            let outcomes = [Outcome::FirstWins, Outcome::SecondWins, Outcome::Tie];
            let mut forced = false;
            for outcome in outcomes {
                if tally.get(outcome).is_zero() {
                    continue;
                }
                match cells[outcome_slot(outcome)] {
                    Cell::One => forced = true,
                    Cell::Pending(_) => {}
                    estimate => {
                        return Err(EstimationError::ImpossibleObservation {
                            first: dataset.label(a).to_string(),
                            second: dataset.label(b).to_string(),
                            outcome,
                            estimate: format!("{estimate:?}"),
                        })
                    }
                }
            }
            if forced {
                continue;
            }
            let mut active = None;
            for (slot, cell) in cells.iter().enumerate() {
                if let Cell::Pending(set) = cell {
                    let consistent = active.is_none_or(|a| a == *set)
                        && set.contains(outcomes[slot]);
                    if !consistent {
                        return Err(EstimationError::InconsistentPattern {
                            first: dataset.label(a).to_string(),
                            second: dataset.label(b).to_string(),
                        });
                    }
                    active = Some(*set);
                }
            }
            let Some(active) = active else { continue };
            let pending_count = cells.iter().filter(|c| c.is_pending()).count();
            let active_count = [active.first, active.second, active.tie]
                .iter()
                .filter(|&&x| x)
                .count();
            if pending_count != active_count {
                return Err(EstimationError::InconsistentPattern {
                    first: dataset.label(a).to_string(),
                    second: dataset.label(b).to_string(),
                });
            }
            terms.push(Term {
                first: a,
                second: b,
                active,
                y: [
                    tally.first_wins.get(),
                    tally.second_wins.get(),
                    tally.ties.get(),
                ],
                n: tally.games().get(),
            });
        }
    }
    Ok(terms)
}

/// Strength slots linked by a term: `(first, second)`.
fn strength_slots(model: ModelKind, t: usize, term: &Term) -> (usize, usize) {
    match model {
        ModelKind::TeamOrder => (term.first.0, t + term.second.0),
        _ => (term.first.0, term.second.0),
    }
}

/// Groups of strength slots connected through pending terms. Slots that
/// appear in no term are left out.
fn components(model: ModelKind, t: usize, terms: &[Term]) -> Vec<Vec<usize>> {
    let slots = if model == ModelKind::TeamOrder { 2 * t } else { t };
    let mut parent: Vec<usize> = (0..slots).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut used = vec![false; slots];
    for term in terms {
        let (a, b) = strength_slots(model, t, term);
        used[a] = true;
        used[b] = true;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_group = vec![usize::MAX; slots];
    for slot in (0..slots).filter(|&s| used[s]) {
        let root = find(&mut parent, slot);
        if root_group[root] == usize::MAX {
            root_group[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_group[root]].push(slot);
    }
    groups
}

fn normalize(model: ModelKind, params: &mut Parameters, groups: &[Vec<usize>], how: Normalization) {
    let t = params.strengths.len();
    for group in groups {
        let get = |p: &Parameters, slot: usize| {
            if slot < t {
                p.strengths[slot]
            } else {
                p.road_strengths.as_ref().expect("road")[slot - t]
            }
        };
        let scale = match how {
            Normalization::GeometricMean => {
                let mean_log =
                    group.iter().map(|&s| get(params, s).ln()).sum::<f64>() / group.len() as f64;
                mean_log.exp()
            }
            Normalization::FirstMember => get(params, group[0]),
        };
        for &slot in group {
            if slot < t {
                params.strengths[slot] /= scale;
                if model == ModelKind::TeamTie {
                    params.plus_strengths.as_mut().expect("plus")[slot] /= scale.sqrt();
                }
            } else {
                params.road_strengths.as_mut().expect("road")[slot - t] /= scale;
            }
        }
    }
}

/// One Gauss-Seidel sweep of the model's fixed-point updates.
fn sweep(model: ModelKind, params: &mut Parameters, terms: &[Term]) {
    let t = params.strengths.len();
    match model {
        ModelKind::Basic | ModelKind::TeamOrder => {
            for slot in 0..params.strengths.len() + params.road_strengths.as_ref().map_or(0, Vec::len) {
                let mut wins = 0.0;
                let mut denom = 0.0;
                let mut seen = false;
                for term in terms {
                    let (a, b) = strength_slots(model, t, term);
                    let own = if a == slot {
                        term.y[0]
                    } else if b == slot {
                        term.y[1]
                    } else {
                        continue;
                    };
                    seen = true;
                    wins += own;
                    let w = params.weights(model, term.first, term.second);
                    denom += term.n / (w[0] + w[1]);
                }
                if seen {
                    let value = wins / denom;
                    if slot < t {
                        params.strengths[slot] = value;
                    } else {
                        params.road_strengths.as_mut().expect("road")[slot - t] = value;
                    }
                }
            }
        }
        ModelKind::SingleOrder => {
            for k in 0..t {
                let mut wins = 0.0;
                let mut denom = 0.0;
                let mut seen = false;
                for term in terms {
                    let gamma = params.order_param.expect("gamma");
                    let w = params.weights(model, term.first, term.second);
                    if term.first.0 == k {
                        wins += term.y[0];
                        denom += term.n * gamma / (w[0] + w[1]);
                        seen = true;
                    } else if term.second.0 == k {
                        wins += term.y[1];
                        denom += term.n / (w[0] + w[1]);
                        seen = true;
                    }
                }
                if seen {
                    params.strengths[k] = wins / denom;
                }
            }
            if !terms.is_empty() {
                let mut home_wins = 0.0;
                let mut denom = 0.0;
                for term in terms {
                    let w = params.weights(model, term.first, term.second);
                    home_wins += term.y[0];
                    denom += term.n * params.strengths[term.first.0] / (w[0] + w[1]);
                }
                params.order_param = Some(home_wins / denom);
            }
        }
        ModelKind::SingleTie => {
            for k in 0..t {
                // 2 points per win, 1 per tie; a factor sqrt(pi_k) comes out
                // of the expected points.
                let mut points = 0.0;
                let mut denom = 0.0;
                let mut seen = false;
                let nu = params.tie_param.expect("nu");
                for term in terms {
                    let (own_slot, own_win, other) = if term.first.0 == k {
                        (0, term.active.first, term.second.0)
                    } else if term.second.0 == k {
                        (1, term.active.second, term.first.0)
                    } else {
                        continue;
                    };
                    seen = true;
                    points += 2.0 * term.y[own_slot] + term.y[2];
                    let w = params.weights(model, term.first, term.second);
                    let total = active_total(&w, term.active);
                    let mut factor = 0.0;
                    if own_win {
                        factor += 2.0 * params.strengths[k].sqrt();
                    }
                    if term.active.tie {
                        factor += nu * params.strengths[other].sqrt();
                    }
                    denom += term.n * factor / total;
                }
                if seen {
                    let root = points / denom;
                    params.strengths[k] = root * root;
                }
            }
            let mut ties = 0.0;
            let mut denom = 0.0;
            for term in terms.iter().filter(|term| term.active.tie) {
                let w = params.weights(model, term.first, term.second);
                ties += term.y[2];
                let s = &params.strengths;
                denom += term.n * (s[term.first.0] * s[term.second.0]).sqrt()
                    / active_total(&w, term.active);
            }
            if denom > 0.0 {
                params.tie_param = Some(ties / denom);
            }
        }
        ModelKind::TeamTie => {
            for k in 0..t {
                let mut wins = 0.0;
                let mut denom = 0.0;
                let mut seen = false;
                for term in terms {
                    let (own_slot, own_win) = if term.first.0 == k {
                        (0, term.active.first)
                    } else if term.second.0 == k {
                        (1, term.active.second)
                    } else {
                        continue;
                    };
                    if !own_win {
                        continue;
                    }
                    seen = true;
                    wins += term.y[own_slot];
                    let w = params.weights(model, term.first, term.second);
                    denom += term.n / active_total(&w, term.active);
                }
                if seen {
                    params.strengths[k] = wins / denom;
                }
            }
            for k in 0..t {
                let mut ties = 0.0;
                let mut denom = 0.0;
                let mut seen = false;
                for term in terms.iter().filter(|term| term.active.tie) {
                    let other = if term.first.0 == k {
                        term.second.0
                    } else if term.second.0 == k {
                        term.first.0
                    } else {
                        continue;
                    };
                    seen = true;
                    ties += term.y[2];
                    let w = params.weights(model, term.first, term.second);
                    let q = params.plus_strengths.as_ref().expect("plus");
                    denom += term.n * q[other] / active_total(&w, term.active);
                }
                if seen {
                    params.plus_strengths.as_mut().expect("plus")[k] = ties / denom;
                }
            }
        }
    }
}

/// Runs the fixed-point iteration from all-ones starting values until no
/// log-parameter changes by more than `options.tolerance`.
pub fn fit(
    dataset: &Dataset,
    model: ModelKind,
    sep: &SeparationResult,
    options: FitOptions,
) -> Result<FitResult, EstimationError> {
    if sep.model() != model || sep.team_count() != dataset.team_count() || sep.labels() != dataset.labels()
    {
        return Err(EstimationError::Mismatch);
    }
    let t = dataset.team_count();
    let terms = collect_terms(dataset, sep)?;
    let groups = components(model, t, &terms);
    let mut params = Parameters::initial(model, t);

    let mut iterations = 0;
    let mut converged = terms.is_empty();
    while !converged && iterations < options.max_iterations {
        let before = params.log_values();
        sweep(model, &mut params, &terms);
        normalize(model, &mut params, &groups, options.normalization);
        iterations += 1;
        if !params.all_positive_finite() {
            return Err(EstimationError::Diverged { iterations });
        }
        let change = before
            .iter()
            .zip(params.log_values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        converged = change < options.tolerance;
    }

    let max_residual = super::equations(model, &params, &terms)
        .iter()
        .map(|e| e.residual())
        .fold(0.0, f64::max);
    if !converged {
        return Err(EstimationError::NotConverged {
            iterations,
            max_residual,
        });
    }
    Ok(FitResult {
        model,
        parameters: params,
        iterations,
        max_residual,
        separation: sep.clone(),
    })
}
