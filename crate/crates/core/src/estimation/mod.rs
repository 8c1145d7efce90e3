//! Outcome probabilities: forced values from the separation result, the
//! rest by maximum likelihood on the games that remain.

mod cells;
mod fit;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cells::{degenerate_probability, pair_cells, ActiveSet, Cell};
pub use fit::{fit, FitOptions, FitResult, Normalization, Parameters};

use crate::datamodel::{Dataset, ModelKind, Outcome, TeamId};
use fit::{collect_terms, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("separation result does not belong to this dataset and model")]
    Mismatch,
    #[error("observed {outcome:?} in {first} vs {second} has estimate {estimate}; the separation result is inconsistent")]
    ImpossibleObservation {
        first: String,
        second: String,
        outcome: Outcome,
        estimate: String,
    },
    #[error("inconsistent degeneracy pattern for {first} vs {second}")]
    InconsistentPattern { first: String, second: String },
    #[error("no convergence after {iterations} iterations (max residual {max_residual:e})")]
    NotConverged { iterations: usize, max_residual: f64 },
    #[error("parameters left the positive reals after {iterations} iterations")]
    Diverged { iterations: usize },
}

/// Maximum-likelihood estimate of one outcome probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbEstimate {
    /// Strictly between 0 and 1.
    Determined(f64),
    One,
    Zero,
    /// Not determined by the data.
    Arbitrary,
}

impl ProbEstimate {
    /// Numeric value, if the estimate has one.
    pub fn value(&self) -> Option<f64> {
        match *self {
            ProbEstimate::Determined(p) => Some(p),
            ProbEstimate::One => Some(1.0),
            ProbEstimate::Zero => Some(0.0),
            ProbEstimate::Arbitrary => None,
        }
    }

    pub fn is_arbitrary(&self) -> bool {
        matches!(self, ProbEstimate::Arbitrary)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EstimateRepr {
    Value { p: f64 },
    Tag(String),
}

impl Serialize for ProbEstimate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match *self {
            ProbEstimate::Determined(p) => EstimateRepr::Value { p },
            ProbEstimate::One => EstimateRepr::Tag("one".into()),
            ProbEstimate::Zero => EstimateRepr::Tag("zero".into()),
            ProbEstimate::Arbitrary => EstimateRepr::Tag("arbitrary".into()),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProbEstimate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match EstimateRepr::deserialize(deserializer)? {
            EstimateRepr::Value { p } => Ok(ProbEstimate::Determined(p)),
            EstimateRepr::Tag(tag) => match tag.as_str() {
                "one" => Ok(ProbEstimate::One),
                "zero" => Ok(ProbEstimate::Zero),
                "arbitrary" => Ok(ProbEstimate::Arbitrary),
                other => Err(serde::de::Error::custom(format!("unknown estimate `{other}`"))),
            },
        }
    }
}

/// Estimates for every ordered pair of teams. Under the order models entry
/// `(i, j)` has `i` at home, and the diagonal holds the probability that a
/// team beats itself at home; elsewhere the diagonal is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    model: ModelKind,
    labels: Vec<String>,
    entries: Vec<Option<[ProbEstimate; 3]>>,
}

impl ProbMatrix {
    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn team_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `[first wins, second wins, tie]`; the tie slot is `Zero` for models
    /// without ties.
    pub fn entry(&self, i: TeamId, j: TeamId) -> Option<&[ProbEstimate; 3]> {
        self.entries[i.0 * self.labels.len() + j.0].as_ref()
    }

    pub fn get(&self, i: TeamId, j: TeamId, outcome: Outcome) -> Option<ProbEstimate> {
        self.entry(i, j).map(|e| e[cells::outcome_slot(outcome)])
    }

    /// JSON-ready view: first team -> second team -> outcome token.
    pub fn to_export(&self) -> IndexMap<String, IndexMap<String, IndexMap<String, ProbEstimate>>> {
        let t = self.labels.len();
        let mut out = IndexMap::new();
        for i in 0..t {
            let mut row = IndexMap::new();
            for j in 0..t {
                let Some(entry) = self.entry(TeamId(i), TeamId(j)) else {
                    continue;
                };
                let mut cell = IndexMap::new();
                cell.insert("1".to_string(), entry[0]);
                cell.insert("2".to_string(), entry[1]);
                if self.model.allows_ties() {
                    cell.insert("0".to_string(), entry[2]);
                }
                row.insert(self.labels[j].clone(), cell);
            }
            out.insert(self.labels[i].clone(), row);
        }
        out
    }
}

fn estimate_for(fit: &FitResult, i: TeamId, j: TeamId, cell: Cell, outcome: Outcome) -> ProbEstimate {
    match cell {
        Cell::One => ProbEstimate::One,
        Cell::Zero => ProbEstimate::Zero,
        Cell::Arbitrary => ProbEstimate::Arbitrary,
        Cell::Pending(active) => ProbEstimate::Determined(
            fit.parameters.probability(fit.model, i, j, active, outcome),
        ),
    }
}

/// Evaluates every outcome probability with the fitted parameters.
pub fn probability_matrix(fit: &FitResult) -> ProbMatrix {
    let sep = &fit.separation;
    let t = sep.team_count();
    let outcomes = [Outcome::FirstWins, Outcome::SecondWins, Outcome::Tie];
    let mut entries = Vec::with_capacity(t * t);
    for i in 0..t {
        for j in 0..t {
            if i == j && !fit.model.has_order_effect() {
                entries.push(None);
                continue;
            }
            let (a, b) = (TeamId(i), TeamId(j));
            let cells = pair_cells(sep, a, b);
            let mut entry = [ProbEstimate::Zero; 3];
            for (slot, outcome) in outcomes.into_iter().enumerate() {
                entry[slot] = estimate_for(fit, a, b, cells[slot], outcome);
            }
            entries.push(Some(entry));
        }
    }
    ProbMatrix {
        model: fit.model,
        labels: sep.labels().to_vec(),
        entries,
    }
}

/// Log of the maximized likelihood. Games whose outcome has estimate one
/// contribute zero.
pub fn log_likelihood(fit: &FitResult, dataset: &Dataset) -> Result<f64, EstimationError> {
    let matrix = probability_matrix(fit);
    let mut total = 0.0;
    for i in dataset.teams() {
        for j in dataset.teams().filter(|&j| j != i) {
            let tally = dataset.oriented(i, j);
            for outcome in [Outcome::FirstWins, Outcome::SecondWins, Outcome::Tie] {
                let count = tally.get(outcome);
                if count.is_zero() {
                    continue;
                }
                let estimate = matrix.get(i, j, outcome).expect("off-diagonal entry");
                match estimate {
                    ProbEstimate::One => {}
                    ProbEstimate::Determined(p) => total += count.get() * p.ln(),
                    other => {
                        return Err(EstimationError::ImpossibleObservation {
                            first: dataset.label(i).to_string(),
                            second: dataset.label(j).to_string(),
                            outcome,
                            estimate: format!("{other:?}"),
                        })
                    }
                }
            }
        }
    }
    Ok(total)
}

/// One likelihood equation: observed and expected totals over the games
/// that are not forced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equation {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
}

impl Equation {
    pub fn residual(&self) -> f64 {
        (self.observed - self.expected).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equations: Vec<Equation>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.equations.iter().map(Equation::residual).fold(0.0, f64::max)
    }
}

pub(crate) fn equations(model: ModelKind, params: &Parameters, terms: &[Term]) -> Vec<Equation> {
    let t = params.strengths.len();
    let probs = |term: &Term| -> [f64; 3] {
        let w = params.weights(model, term.first, term.second);
        let a = term.active;
        let total = [a.first, a.second, a.tie]
            .iter()
            .zip(w)
            .filter(|(on, _)| **on)
            .map(|(_, w)| w)
            .sum::<f64>();
        let pick = |on: bool, w: f64| if on { w / total } else { 0.0 };
        [pick(a.first, w[0]), pick(a.second, w[1]), pick(a.tie, w[2])]
    };
    let mut out = Vec::new();
    // per-team sums: (observed, expected) of weighted outcome counts, where
    // `score` gives the weight of [own win, own loss, tie]
    let per_team = |name: &str, side: Option<bool>, score: [f64; 3]| -> Vec<Equation> {
        (0..t)
            .filter_map(|k| {
                let (mut obs, mut exp, mut seen) = (0.0, 0.0, false);
                for term in terms {
                    let p = probs(term);
                    let (own, other) = if term.first.0 == k && side != Some(false) {
                        (0, 1)
                    } else if term.second.0 == k && side != Some(true) {
                        (1, 0)
                    } else {
                        continue;
                    };
                    seen = true;
                    obs += score[0] * term.y[own] + score[1] * term.y[other] + score[2] * term.y[2];
                    exp += term.n * (score[0] * p[own] + score[1] * p[other] + score[2] * p[2]);
                }
                seen.then(|| Equation {
                    name: format!("{name}[{k}]"),
                    observed: obs,
                    expected: exp,
                })
            })
            .collect()
    };
    match model {
        ModelKind::Basic => out.extend(per_team("wins", None, [1.0, 0.0, 0.0])),
        ModelKind::SingleOrder => {
            out.extend(per_team("wins", None, [1.0, 0.0, 0.0]));
            if !terms.is_empty() {
                out.push(Equation {
                    name: "home wins".into(),
                    observed: terms.iter().map(|term| term.y[0]).sum(),
                    expected: terms.iter().map(|term| term.n * probs(term)[0]).sum(),
                });
            }
        }
        ModelKind::TeamOrder => {
            out.extend(per_team("home wins", Some(true), [1.0, 0.0, 0.0]));
            out.extend(per_team("road wins", Some(false), [1.0, 0.0, 0.0]));
        }
        ModelKind::SingleTie => {
            out.extend(per_team("points", None, [2.0, 0.0, 1.0]));
            if terms.iter().any(|term| term.active.tie) {
                out.push(Equation {
                    name: "ties".into(),
                    observed: terms.iter().map(|term| term.y[2]).sum(),
                    expected: terms.iter().map(|term| term.n * probs(term)[2]).sum(),
                });
            }
        }
        ModelKind::TeamTie => {
            out.extend(per_team("wins", None, [1.0, 0.0, 0.0]));
            let tie_terms: Vec<Term> = terms.iter().copied().filter(|term| term.active.tie).collect();
            let ties = (0..t).filter_map(|k| {
                let mine: Vec<&Term> = tie_terms
                    .iter()
                    .filter(|term| term.first.0 == k || term.second.0 == k)
                    .collect();
                (!mine.is_empty()).then(|| Equation {
                    name: format!("ties[{k}]"),
                    observed: mine.iter().map(|term| term.y[2]).sum(),
                    expected: mine.iter().map(|term| term.n * probs(term)[2]).sum(),
                })
            });
            out.extend(ties);
        }
    }
    out
}

/// Observed minus expected for each of the model's likelihood equations,
/// restricted to outcomes whose probabilities are not forced.
pub fn check_likelihood_equations(
    fit: &FitResult,
    dataset: &Dataset,
) -> Result<ResidualReport, EstimationError> {
    let terms = collect_terms(dataset, &fit.separation)?;
    Ok(ResidualReport {
        equations: equations(fit.model, &fit.parameters, &terms),
    })
}

/// Residuals of the likelihood equations at arbitrary parameter values.
pub fn residuals_at(
    dataset: &Dataset,
    sep: &crate::separation::SeparationResult,
    params: &Parameters,
) -> Result<ResidualReport, EstimationError> {
    let terms = collect_terms(dataset, sep)?;
    Ok(ResidualReport {
        equations: equations(sep.model(), params, &terms),
    })
}
