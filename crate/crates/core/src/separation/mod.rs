//! Separation analysis.
//!
//! Every model is reduced to a set of *items* (teams, teams at a venue, or
//! signed teams) and a reachability relation `k >= l` between them. The
//! relation starts from the games, is saturated with transitive closure and
//! the model's extra inference rules, and then classifies each pair of
//! items as equivalent, dominating, dominated or incomparable. Those four
//! cases decide which outcome probabilities are strictly inside (0, 1),
//! forced to 0 or 1, or not determined by the data at all.

mod dot;
mod graph;
mod rules;

use std::fmt;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

pub use dot::{render_dot, DotOptions};
pub use graph::{transitive_closure, ItemGraph, Provenance};
pub use rules::{direct_relations, propagate_order, propagate_team_tie};

use crate::datamodel::{Dataset, ModelKind, TeamId};
use rules::STEP_CLOSURE;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeparationError {
    #[error("dataset contains ties but model `{0}` has no tie outcome")]
    TiesNotAllowed(ModelKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoration {
    None,
    Home,
    Visitor,
    Plus,
    Minus,
}

impl Decoration {
    pub fn suffix(self) -> &'static str {
        match self {
            Decoration::None => "",
            Decoration::Home => "H",
            Decoration::Visitor => "V",
            Decoration::Plus => "+",
            Decoration::Minus => "-",
        }
    }
}

/// An analysis unit: a team, optionally tagged with a venue or a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Item {
    pub team: TeamId,
    pub decoration: Decoration,
}

/// How two items compare once the relation is saturated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PairRelation {
    /// Each reaches the other.
    Equiv,
    /// Only the first reaches the second.
    Dominates,
    /// Only the second reaches the first.
    DominatedBy,
    /// Neither reaches the other.
    Incomparable,
}

impl PairRelation {
    pub fn reversed(self) -> PairRelation {
        match self {
            PairRelation::Dominates => PairRelation::DominatedBy,
            PairRelation::DominatedBy => PairRelation::Dominates,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            PairRelation::Equiv => "≅",
            PairRelation::Dominates => "≫",
            PairRelation::DominatedBy => "≪",
            PairRelation::Incomparable => "≷",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    CompleteSeparation,
    QuasiCompleteSeparation,
    Overlap,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::CompleteSeparation => "complete separation",
            Classification::QuasiCompleteSeparation => "quasi-complete separation",
            Classification::Overlap => "overlap",
        })
    }
}

pub(crate) fn item_count(model: ModelKind, teams: usize) -> usize {
    match model {
        ModelKind::Basic => teams,
        ModelKind::SingleOrder | ModelKind::TeamOrder | ModelKind::SingleTie => 2 * teams,
        ModelKind::TeamTie => 3 * teams,
    }
}

fn item_layout(model: ModelKind, teams: usize) -> (Vec<Item>, Vec<Range<usize>>) {
    let decorations: &[Decoration] = match model {
        ModelKind::Basic => &[Decoration::None],
        ModelKind::SingleOrder | ModelKind::TeamOrder => &[Decoration::Home, Decoration::Visitor],
        ModelKind::SingleTie => &[Decoration::Plus, Decoration::Minus],
        ModelKind::TeamTie => &[Decoration::None, Decoration::Plus, Decoration::Minus],
    };
    let items = decorations
        .iter()
        .flat_map(|&decoration| {
            (0..teams).map(move |k| Item {
                team: TeamId(k),
                decoration,
            })
        })
        .collect();
    let n = item_count(model, teams);
    let blocks = match model {
        ModelKind::TeamTie => vec![0..teams, teams..n],
        _ => std::iter::once(0..n).collect(),
    };
    (items, blocks)
}

/// Saturated relation over a model's items, with its classification.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    model: ModelKind,
    labels: Vec<String>,
    items: Vec<Item>,
    closure: ItemGraph,
    /// Index ranges of independent item groups. Only `TeamTie` has two:
    /// the teams, and the signed items.
    blocks: Vec<Range<usize>>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    global: Classification,
    iterations: u32,
}

/// Runs the full inference procedure for `model` until no rule adds an
/// edge, then classifies the result.
pub fn saturate(dataset: &Dataset, model: ModelKind) -> Result<SeparationResult, SeparationError> {
    let t = dataset.team_count();
    let direct = direct_relations(dataset, model)?;
    let (items, blocks) = item_layout(model, t);

    let mut iteration = 1;
    let closure = match model {
        ModelKind::Basic => {
            let mut g = direct;
            g.close(Provenance::new(STEP_CLOSURE, iteration));
            g
        }
        ModelKind::SingleOrder | ModelKind::SingleTie => {
            let mut g = direct;
            loop {
                let mut added = g.close(Provenance::new(STEP_CLOSURE, iteration));
                added += propagate_order(&mut g, iteration);
                if added == 0 {
                    break;
                }
                iteration += 1;
            }
            g
        }
        ModelKind::TeamOrder => {
            // Home and road performances are independent items, so plain
            // closure over the 2t items is all that is needed.
            let mut g = direct;
            g.close(Provenance::new(STEP_CLOSURE, iteration));
            g
        }
        ModelKind::TeamTie => {
            let mut team = sub_graph(&direct, blocks[0].clone());
            let mut sign = sub_graph(&direct, blocks[1].clone());
            loop {
                let stamp = Provenance::new(STEP_CLOSURE, iteration);
                let mut added = team.close(stamp) + sign.close(stamp);
                added += propagate_team_tie(&mut team, &mut sign, iteration);
                if added == 0 {
                    break;
                }
                iteration += 1;
            }
            ItemGraph::block_diagonal(&[&team, &sign])
        }
    };

    Ok(SeparationResult::from_closure(
        model,
        dataset.labels().to_vec(),
        items,
        blocks,
        closure,
        iteration,
    ))
}

fn sub_graph(graph: &ItemGraph, range: Range<usize>) -> ItemGraph {
    let mut out = ItemGraph::empty(range.len());
    for (a, k) in range.clone().enumerate() {
        for (b, l) in range.clone().enumerate() {
            if let Some(p) = graph.provenance(k, l) {
                out.insert(a, b, p);
            }
        }
    }
    out
}

impl SeparationResult {
    fn from_closure(
        model: ModelKind,
        labels: Vec<String>,
        items: Vec<Item>,
        blocks: Vec<Range<usize>>,
        closure: ItemGraph,
        iterations: u32,
    ) -> Self {
        let n = items.len();
        let mut class_of = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for k in 0..n {
            if class_of[k] != usize::MAX {
                continue;
            }
            let members: Vec<usize> = (k..n)
                .filter(|&l| closure.reaches(k, l) && closure.reaches(l, k))
                .collect();
            for &m in &members {
                class_of[m] = classes.len();
            }
            classes.push(members);
        }

        let global = if classes.iter().all(|c| c.len() == 1) {
            Classification::CompleteSeparation
        } else if blocks
            .iter()
            .all(|b| class_of[b.start..b.end].iter().all(|&c| c == class_of[b.start]))
        {
            Classification::Overlap
        } else {
            Classification::QuasiCompleteSeparation
        };

        SeparationResult {
            model,
            labels,
            items,
            closure,
            blocks,
            classes,
            class_of,
            global,
            iterations,
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn team_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn closure(&self) -> &ItemGraph {
        &self.closure
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Equivalence classes as lists of item indices, in order of their
    /// first member.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, item: usize) -> usize {
        self.class_of[item]
    }

    pub fn classification(&self) -> Classification {
        self.global
    }

    /// Number of passes of the outer loop, counting the final pass that
    /// added nothing.
    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn item_label(&self, item: usize) -> String {
        let it = self.items[item];
        format!("{}{}", self.labels[it.team.0], it.decoration.suffix())
    }

    /// Index of the item for `team` with `decoration`, if the model has one.
    pub fn item_index(&self, team: TeamId, decoration: Decoration) -> Option<usize> {
        self.items
            .iter()
            .position(|it| it.team == team && it.decoration == decoration)
    }

    pub fn reaches(&self, k: usize, l: usize) -> bool {
        self.closure.reaches(k, l)
    }

    /// Relation between two items by index.
    pub fn relation(&self, k: usize, l: usize) -> PairRelation {
        match (self.closure.reaches(k, l), self.closure.reaches(l, k)) {
            (true, true) => PairRelation::Equiv,
            (true, false) => PairRelation::Dominates,
            (false, true) => PairRelation::DominatedBy,
            (false, false) => PairRelation::Incomparable,
        }
    }

    /// Relation between two items.
    pub fn pair_relation(&self, k: Item, l: Item) -> PairRelation {
        let idx = |it: Item| {
            self.item_index(it.team, it.decoration)
                .unwrap_or_else(|| panic!("item {it:?} is not part of the {} model", self.model))
        };
        self.relation(idx(k), idx(l))
    }

    fn block_of(&self, item: usize) -> &Range<usize> {
        self.blocks.iter().find(|b| b.contains(&item)).expect("item in a block")
    }

    /// Whether class `a` dominates class `b`.
    pub fn class_dominates(&self, a: usize, b: usize) -> bool {
        let (ka, kb) = (self.classes[a][0], self.classes[b][0]);
        self.relation(ka, kb) == PairRelation::Dominates
    }

    /// Dominance edges between classes with the transitively implied ones
    /// removed.
    pub fn class_edges_reduced(&self) -> Vec<(usize, usize)> {
        let c = self.classes.len();
        let mut out = Vec::new();
        for a in 0..c {
            for b in 0..c {
                if a == b || !self.class_dominates(a, b) {
                    continue;
                }
                let implied = (0..c).any(|m| {
                    m != a && m != b && self.class_dominates(a, m) && self.class_dominates(m, b)
                });
                if !implied {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Integer levels, equal within each class and strictly decreasing
    /// along every dominance relation: the length of the longest dominance
    /// chain below the item's class.
    pub fn assign_levels(&self) -> Vec<u32> {
        let c = self.classes.len();
        let mut level: Vec<Option<u32>> = vec![None; c];
        fn visit(r: &SeparationResult, class: usize, level: &mut Vec<Option<u32>>) -> u32 {
            if let Some(l) = level[class] {
                return l;
            }
            let here = r.classes[class][0];
            let block = r.block_of(here).clone();
            let mut best = 0;
            for other in 0..r.classes.len() {
                let rep = r.classes[other][0];
                if other != class && block.contains(&rep) && r.class_dominates(class, other) {
                    best = best.max(visit(r, other, level) + 1);
                }
            }
            level[class] = Some(best);
            best
        }
        for class in 0..c {
            visit(self, class, &mut level);
        }
        (0..self.items.len())
            .map(|k| level[self.class_of[k]].expect("visited"))
            .collect()
    }

    /// Step-numbered table of the relation for one block, as rows of
    /// labels (empty where no relation holds).
    pub fn provenance_table(&self, block: usize) -> Vec<Vec<String>> {
        let range = self.blocks[block].clone();
        range
            .clone()
            .map(|k| {
                range
                    .clone()
                    .map(|l| {
                        self.closure
                            .provenance(k, l)
                            .map(|p| p.label())
                            .unwrap_or_default()
                    })
                    .collect()
            })
            .collect()
    }

    /// Plain-text rendering of [`Self::provenance_table`] for every block.
    pub fn render_provenance(&self) -> String {
        let mut out = String::new();
        for (b, range) in self.blocks.iter().enumerate() {
            let labels: Vec<String> = range.clone().map(|k| self.item_label(k)).collect();
            let table = self.provenance_table(b);
            let width = labels
                .iter()
                .map(|l| l.chars().count())
                .chain(table.iter().flatten().map(|c| c.len()))
                .max()
                .unwrap_or(1)
                .max(2);
            if b > 0 {
                out.push('\n');
            }
            out.push_str(&format!("{:>width$} |", ""));
            for l in &labels {
                out.push_str(&format!(" {l:>width$}"));
            }
            out.push('\n');
            for (label, row) in labels.iter().zip(&table) {
                out.push_str(&format!("{label:>width$} |"));
                for cell in row {
                    out.push_str(&format!(" {cell:>width$}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{parse_dataset, ParseOptions};

    fn separate(text: &str, model: ModelKind) -> SeparationResult {
        let d = parse_dataset(text, ParseOptions::new(model)).unwrap();
        saturate(&d, model).unwrap()
    }

    const EXAMPLE_ONE: &str = "a,b,1\nb,a,1\nc,d,1\nd,c,1\na,c,1";

    #[test]
    fn first_example_classes() {
        let r = separate(EXAMPLE_ONE, ModelKind::Basic);
        assert_eq!(r.classes(), [vec![0, 1], vec![2, 3]]);
        assert_eq!(r.classification(), Classification::QuasiCompleteSeparation);
        assert_eq!(r.relation(0, 2), PairRelation::Dominates);
        assert_eq!(r.relation(3, 1), PairRelation::DominatedBy);
        assert_eq!(r.relation(2, 2), PairRelation::Equiv);
        let levels = r.assign_levels();
        assert!(levels[0] > levels[2]);
        assert_eq!(levels[0], levels[1]);
        assert_eq!(r.class_edges_reduced(), vec![(0, 1)]);
    }

    #[test]
    fn single_game_is_complete_separation() {
        let r = separate("a,b,1", ModelKind::Basic);
        assert_eq!(r.classification(), Classification::CompleteSeparation);
    }

    #[test]
    fn overlap_levels_are_zero() {
        let r = separate("a,b,1\nb,c,1\nc,a,1", ModelKind::Basic);
        assert_eq!(r.classification(), Classification::Overlap);
        assert_eq!(r.assign_levels(), vec![0, 0, 0]);
    }

    #[test]
    fn unplayed_pair_is_incomparable() {
        // a beats b, c beats b: a and c are incomparable
        let r = separate("a,b,1\nc,b,1", ModelKind::Basic);
        assert_eq!(r.relation(0, 2), PairRelation::Incomparable);
        let reduced = r.class_edges_reduced();
        assert_eq!(reduced.len(), 2);
    }

    #[test]
    fn pair_relation_by_item() {
        let r = separate("a,b,1\nb,a,1\nc,a,2\nc,d,1\nd,c,1", ModelKind::SingleOrder);
        let d_home = Item {
            team: TeamId(3),
            decoration: Decoration::Home,
        };
        let a_road = Item {
            team: TeamId(0),
            decoration: Decoration::Visitor,
        };
        assert_eq!(r.pair_relation(d_home, a_road), PairRelation::Incomparable);
        assert_eq!(r.pair_relation(a_road, a_road), PairRelation::Equiv);
        assert_eq!(r.item_label(4), "aV");
    }

    #[test]
    fn team_tie_blocks_are_separate() {
        let r = separate("a,b,0\nb,a,0\na,b,1\nb,a,1", ModelKind::TeamTie);
        assert_eq!(r.blocks().len(), 2);
        assert_eq!(r.items().len(), 6);
        assert_eq!(r.relation(0, 2), PairRelation::Incomparable);
        assert_eq!(r.item_label(3), "b+");
        assert_eq!(r.item_label(5), "b-");
    }
}
