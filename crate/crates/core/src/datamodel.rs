//! Teams, games, outcomes and model variants.
//!
//! Game files are plain CSV with one game per row:
//!
//! ```text
//! # first_team,second_team,outcome
//! a,b,1
//! b,a,2
//! a,c,0
//! ```
//!
//! The outcome token is `1` when the first-listed team wins, `2` when the
//! second-listed team wins and `0` for a tie (`W`, `L`, `T` are accepted as
//! synonyms). When an order effect is modelled the first-listed team is the
//! home team.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a team within a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TeamId(pub usize);

impl TeamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Result of a single game, seen from the first-listed team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    FirstWins,
    SecondWins,
    Tie,
}

impl Outcome {
    /// Canonical output token (`1`, `2`, `0`).
    pub fn token(self) -> &'static str {
        match self {
            Outcome::FirstWins => "1",
            Outcome::SecondWins => "2",
            Outcome::Tie => "0",
        }
    }

    /// The same result seen from the other team.
    pub fn reversed(self) -> Outcome {
        match self {
            Outcome::FirstWins => Outcome::SecondWins,
            Outcome::SecondWins => Outcome::FirstWins,
            Outcome::Tie => Outcome::Tie,
        }
    }
}

impl FromStr for Outcome {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "W" | "w" => Ok(Outcome::FirstWins),
            "2" | "L" | "l" => Ok(Outcome::SecondWins),
            "0" | "T" | "t" => Ok(Outcome::Tie),
            _ => Err(()),
        }
    }
}

/// The five model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Plain Bradley-Terry, one strength per team.
    Basic,
    /// One home-advantage parameter shared by all teams.
    SingleOrder,
    /// Separate home and road strengths for each team.
    TeamOrder,
    /// Ties with a single tie parameter.
    SingleTie,
    /// Ties with a tie parameter per team.
    TeamTie,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Basic,
        ModelKind::SingleOrder,
        ModelKind::TeamOrder,
        ModelKind::SingleTie,
        ModelKind::TeamTie,
    ];

    pub fn allows_ties(self) -> bool {
        matches!(self, ModelKind::SingleTie | ModelKind::TeamTie)
    }

    pub fn has_order_effect(self) -> bool {
        matches!(self, ModelKind::SingleOrder | ModelKind::TeamOrder)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Basic => "basic",
            ModelKind::SingleOrder => "single-order",
            ModelKind::TeamOrder => "team-order",
            ModelKind::SingleTie => "single-tie",
            ModelKind::TeamTie => "team-tie",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GameRecord {
    /// Home team when an order effect is modelled.
    pub first: TeamId,
    pub second: TeamId,
    pub outcome: Outcome,
}

/// A game count stored in half-game units, so half-win weights stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct HalfCount(pub u64);

impl HalfCount {
    pub const ZERO: HalfCount = HalfCount(0);

    pub fn whole(n: u64) -> Self {
        HalfCount(2 * n)
    }

    pub fn get(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::Add for HalfCount {
    type Output = HalfCount;
    fn add(self, rhs: HalfCount) -> HalfCount {
        HalfCount(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for HalfCount {
    fn add_assign(&mut self, rhs: HalfCount) {
        self.0 += rhs.0;
    }
}

/// Weighted outcome counts for games played with a fixed first/second
/// orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub first_wins: HalfCount,
    pub second_wins: HalfCount,
    pub ties: HalfCount,
}

impl Tally {
    pub fn games(&self) -> HalfCount {
        self.first_wins + self.second_wins + self.ties
    }

    pub fn get(&self, outcome: Outcome) -> HalfCount {
        match outcome {
            Outcome::FirstWins => self.first_wins,
            Outcome::SecondWins => self.second_wins,
            Outcome::Tie => self.ties,
        }
    }

    /// The same games with the teams' roles swapped.
    pub fn reversed(&self) -> Tally {
        Tally {
            first_wins: self.second_wins,
            second_wins: self.first_wins,
            ties: self.ties,
        }
    }

    fn add(&mut self, outcome: Outcome, weight: HalfCount) {
        match outcome {
            Outcome::FirstWins => self.first_wins += weight,
            Outcome::SecondWins => self.second_wins += weight,
            Outcome::Tie => self.ties += weight,
        }
    }
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, rhs: Tally) -> Tally {
        Tally {
            first_wins: self.first_wins + rhs.first_wins,
            second_wins: self.second_wins + rhs.second_wins,
            ties: self.ties + rhs.ties,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DataError {
    #[error("line {line}: malformed row `{row}` (expected first_team,second_team,outcome)")]
    MalformedRow { line: u64, row: String },
    #[error("line {line}: unknown outcome token `{token}` (expected 1, 2, 0 or W, L, T)")]
    UnknownOutcome { line: u64, token: String },
    #[error("line {line}: team `{team}` cannot play itself")]
    SelfPlay { line: u64, team: String },
    #[error("line {line}: tie found but model `{model}` has no tie outcome (use the half-win option)")]
    TieNotAllowed { line: u64, model: ModelKind },
    #[error("half-win weighting only applies to win/loss models, not `{0}`")]
    HalfWinWithTieModel(ModelKind),
    #[error("team `{0}` has not played any games")]
    TeamWithoutGames(String),
    #[error("duplicate team label `{0}`")]
    DuplicateTeam(String),
    #[error("game refers to unknown team index {0}")]
    UnknownTeam(usize),
    #[error("no games")]
    NoGames,
    #[error("invalid input: {0}")]
    Csv(String),
}

/// Options controlling how a game file is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub model: ModelKind,
    /// Count each tie as half a win for each side.
    pub half_win: bool,
}

impl ParseOptions {
    pub fn new(model: ModelKind) -> Self {
        ParseOptions {
            model,
            half_win: false,
        }
    }

    pub fn with_half_win(mut self, half_win: bool) -> Self {
        self.half_win = half_win;
        self
    }
}

/// A validated set of games with per-pair aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    labels: Vec<String>,
    games: Vec<GameRecord>,
    half_win: bool,
    /// `tallies[i * t + j]` aggregates games with `i` first and `j` second.
    tallies: Vec<Tally>,
}

impl Dataset {
    /// Builds a dataset from explicit team labels and games. Ties are kept
    /// as a separate outcome.
    pub fn new(labels: Vec<String>, games: Vec<GameRecord>) -> Result<Self, DataError> {
        let t = labels.len();
        let mut seen = HashMap::with_capacity(t);
        for label in &labels {
            if seen.insert(label.as_str(), ()).is_some() {
                return Err(DataError::DuplicateTeam(label.clone()));
            }
        }
        if games.is_empty() {
            return Err(DataError::NoGames);
        }
        let mut played = vec![false; t];
        for (row, g) in games.iter().enumerate() {
            for id in [g.first, g.second] {
                if id.0 >= t {
                    return Err(DataError::UnknownTeam(id.0));
                }
                played[id.0] = true;
            }
            if g.first == g.second {
                return Err(DataError::SelfPlay {
                    line: row as u64 + 1,
                    team: labels[g.first.0].clone(),
                });
            }
        }
        if let Some(idle) = played.iter().position(|p| !p) {
            return Err(DataError::TeamWithoutGames(labels[idle].clone()));
        }
        let mut tallies = vec![Tally::default(); t * t];
        for g in &games {
            tallies[g.first.0 * t + g.second.0].add(g.outcome, HalfCount::whole(1));
        }
        Ok(Dataset {
            labels,
            games,
            half_win: false,
            tallies,
        })
    }

    pub fn team_count(&self) -> usize {
        self.labels.len()
    }

    pub fn teams(&self) -> impl Iterator<Item = TeamId> {
        (0..self.labels.len()).map(TeamId)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, team: TeamId) -> &str {
        &self.labels[team.0]
    }

    pub fn team_by_label(&self, label: &str) -> Option<TeamId> {
        self.labels.iter().position(|l| l == label).map(TeamId)
    }

    pub fn games(&self) -> &[GameRecord] {
        &self.games
    }

    pub fn is_half_win(&self) -> bool {
        self.half_win
    }

    /// Whether any game is recorded as a tie outcome (as opposed to being
    /// split into half wins).
    pub fn has_ties(&self) -> bool {
        self.tallies.iter().any(|t| !t.ties.is_zero())
    }

    /// Games with `first` listed first and `second` listed second.
    pub fn oriented(&self, first: TeamId, second: TeamId) -> Tally {
        self.tallies[first.0 * self.labels.len() + second.0]
    }

    /// All games between `i` and `j`, oriented so that `first_wins` counts
    /// wins by `i`, regardless of venue.
    pub fn between(&self, i: TeamId, j: TeamId) -> Tally {
        self.oriented(i, j) + self.oriented(j, i).reversed()
    }

    /// Number of games between `i` and `j` (n_ij).
    pub fn games_between(&self, i: TeamId, j: TeamId) -> HalfCount {
        self.between(i, j).games()
    }

    /// Win, loss and tie totals for a team, in games.
    pub fn record(&self, team: TeamId) -> (f64, f64, f64) {
        let mut total = Tally::default();
        for other in self.teams().filter(|&o| o != team) {
            total = total + self.between(team, other);
        }
        let raw = |count: HalfCount| count.get();
        if self.half_win {
            // Each tie was split into half a win and half a loss.
            let ties = self
                .games
                .iter()
                .filter(|g| g.outcome == Outcome::Tie && (g.first == team || g.second == team))
                .count() as f64;
            (raw(total.first_wins) - ties / 2.0, raw(total.second_wins) - ties / 2.0, ties)
        } else {
            (raw(total.first_wins), raw(total.second_wins), raw(total.ties))
        }
    }

    /// Writes the games back out in canonical CSV form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for g in &self.games {
            out.push_str(&self.labels[g.first.0]);
            out.push(',');
            out.push_str(&self.labels[g.second.0]);
            out.push(',');
            out.push_str(g.outcome.token());
            out.push('\n');
        }
        out
    }
}

/// Reads a game file, validates it against the chosen model and computes
/// the pair aggregates. Teams are numbered in order of first appearance.
pub fn parse_dataset(text: &str, options: ParseOptions) -> Result<Dataset, DataError> {
    if options.half_win && options.model.allows_ties() {
        return Err(DataError::HalfWinWithTieModel(options.model));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, TeamId> = HashMap::new();
    let mut games = Vec::new();
    let mut intern = |name: &str| -> TeamId {
        if let Some(&id) = index.get(name) {
            return id;
        }
        let id = TeamId(labels.len());
        labels.push(name.to_string());
        index.insert(name.to_string(), id);
        id
    };

    for record in reader.records() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 3 || record.iter().any(str::is_empty) {
            return Err(DataError::MalformedRow {
                line,
                row: record.iter().collect::<Vec<_>>().join(","),
            });
        }
        let outcome: Outcome = record[2].parse().map_err(|_| DataError::UnknownOutcome {
            line,
            token: record[2].to_string(),
        })?;
        if record[0] == record[1] {
            return Err(DataError::SelfPlay {
                line,
                team: record[0].to_string(),
            });
        }
        if outcome == Outcome::Tie && !options.model.allows_ties() && !options.half_win {
            return Err(DataError::TieNotAllowed {
                line,
                model: options.model,
            });
        }
        let first = intern(&record[0]);
        let second = intern(&record[1]);
        games.push(GameRecord {
            first,
            second,
            outcome,
        });
    }

    let dataset = Dataset::new(labels, games)?;
    Ok(if options.half_win {
        apply_half_win_transform(dataset)
    } else {
        dataset
    })
}

/// Replaces every tie by half a win for each side. Datasets without ties
/// come back unchanged apart from the half-win marker.
pub fn apply_half_win_transform(mut dataset: Dataset) -> Dataset {
    let t = dataset.labels.len();
    for g in &dataset.games {
        if g.outcome == Outcome::Tie {
            let tally = &mut dataset.tallies[g.first.0 * t + g.second.0];
            tally.ties = HalfCount(tally.ties.0 - 2);
            tally.first_wins += HalfCount(1);
            tally.second_wins += HalfCount(1);
        }
    }
    dataset.half_win = true;
    dataset
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basic() -> ParseOptions {
        ParseOptions::new(ModelKind::Basic)
    }

    #[test]
    fn parses_first_example() {
        let d = parse_dataset("a,b,1\nb,a,1\nc,d,1\nd,c,1\na,c,1", basic()).unwrap();
        assert_eq!(d.team_count(), 4);
        assert_eq!(d.games().len(), 5);
        assert_eq!(d.labels(), ["a", "b", "c", "d"]);
        let (a, b) = (TeamId(0), TeamId(1));
        assert_eq!(d.between(a, b).first_wins, HalfCount::whole(1));
        assert_eq!(d.between(b, a).first_wins, HalfCount::whole(1));
        assert_eq!(d.games_between(a, b), HalfCount::whole(2));
    }

    #[test]
    fn empty_input_has_no_games() {
        assert_eq!(parse_dataset("", basic()), Err(DataError::NoGames));
        assert_eq!(parse_dataset("# only a comment\n\n", basic()), Err(DataError::NoGames));
    }

    #[test]
    fn rejects_self_play() {
        assert!(matches!(
            parse_dataset("a,a,1", basic()),
            Err(DataError::SelfPlay { .. })
        ));
    }

    #[test]
    fn rejects_bad_rows_and_tokens() {
        assert!(matches!(
            parse_dataset("a,b", basic()),
            Err(DataError::MalformedRow { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("a,b,1\na,b,x", basic()),
            Err(DataError::UnknownOutcome { line: 2, .. })
        ));
        assert!(matches!(
            parse_dataset("a,b,1,extra", basic()),
            Err(DataError::MalformedRow { .. })
        ));
    }

    #[test]
    fn tie_needs_tie_model_or_half_win() {
        assert!(matches!(
            parse_dataset("a,b,0", basic()),
            Err(DataError::TieNotAllowed { .. })
        ));
        assert!(parse_dataset("a,b,0", ParseOptions::new(ModelKind::SingleTie)).is_ok());
        assert!(parse_dataset("a,b,T", basic().with_half_win(true)).is_ok());
        assert_eq!(
            parse_dataset("a,b,0", ParseOptions::new(ModelKind::TeamTie).with_half_win(true)),
            Err(DataError::HalfWinWithTieModel(ModelKind::TeamTie))
        );
    }

    #[test]
    fn synonyms_comments_and_crlf() {
        let d = parse_dataset(
            "# header\r\n x , y , W \r\ny,x,L\r\n\r\nx,y,T\r\n",
            ParseOptions::new(ModelKind::SingleTie),
        )
        .unwrap();
        assert_eq!(d.to_csv(), "x,y,1\ny,x,2\nx,y,0\n");
    }

    #[test]
    fn explicit_team_without_games_is_rejected() {
        let games = vec![GameRecord {
            first: TeamId(0),
            second: TeamId(1),
            outcome: Outcome::FirstWins,
        }];
        let labels = vec!["a".into(), "b".into(), "c".into()];
        assert_eq!(
            Dataset::new(labels, games),
            Err(DataError::TeamWithoutGames("c".into()))
        );
    }

    #[test]
    fn half_win_single_tie() {
        let d = parse_dataset("a,b,0", basic().with_half_win(true)).unwrap();
        let ab = d.between(TeamId(0), TeamId(1));
        assert_eq!(ab.first_wins.get(), 0.5);
        assert_eq!(ab.second_wins.get(), 0.5);
        assert_eq!(ab.games().get(), 1.0);
        assert!(!d.has_ties());
    }

    #[test]
    fn half_win_without_ties_is_identity() {
        let text = "a,b,1\nb,a,1";
        let plain = parse_dataset(text, basic()).unwrap();
        let halved = apply_half_win_transform(plain.clone());
        for i in plain.teams() {
            for j in plain.teams() {
                assert_eq!(plain.oriented(i, j), halved.oriented(i, j));
            }
        }
    }

    #[test]
    fn half_win_two_ties_and_a_win() {
        let d = parse_dataset("a,b,0\nb,a,0\na,b,1", basic().with_half_win(true)).unwrap();
        let ab = d.between(TeamId(0), TeamId(1));
        assert_eq!(ab.first_wins.get(), 2.0);
        assert_eq!(ab.second_wins.get(), 1.0);
        assert_eq!(d.record(TeamId(0)), (1.0, 0.0, 2.0));
    }
}
