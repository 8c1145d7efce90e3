use serde::Serialize;

/// Which step of the inference procedure introduced an edge, and on which
/// pass of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Provenance {
    pub step: u8,
    pub iteration: u32,
}

impl Provenance {
    pub const fn new(step: u8, iteration: u32) -> Self {
        Provenance { step, iteration }
    }

    /// Table label: the step number followed by one `*` per extra pass.
    pub fn label(&self) -> String {
        let stars = self.iteration.saturating_sub(1) as usize;
        format!("{}{}", self.step, "*".repeat(stars))
    }
}

/// Dense boolean reachability matrix over items, with per-edge provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemGraph {
    size: usize,
    reach: Vec<bool>,
    provenance: Vec<Option<Provenance>>,
}

impl ItemGraph {
    /// A graph with no edges at all (not even loops).
    pub fn empty(size: usize) -> Self {
        ItemGraph {
            size,
            reach: vec![false; size * size],
            provenance: vec![None; size * size],
        }
    }

    /// A graph holding only the loops `k -> k`.
    pub fn reflexive(size: usize, stamp: Provenance) -> Self {
        let mut g = ItemGraph::empty(size);
        for k in 0..size {
            g.insert(k, k, stamp);
        }
        g
    }

    /// Places several graphs side by side with no edges between them.
    pub fn block_diagonal(parts: &[&ItemGraph]) -> Self {
        let size = parts.iter().map(|g| g.size).sum();
        let mut out = ItemGraph::empty(size);
        let mut offset = 0;
        for part in parts {
            for k in 0..part.size {
                for l in 0..part.size {
                    if let Some(p) = part.provenance(k, l) {
                        out.insert(offset + k, offset + l, p);
                    } else if part.reaches(k, l) {
                        out.set(offset + k, offset + l);
                    }
                }
            }
            offset += part.size;
        }
        out
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        self.reach[from * self.size + to]
    }

    pub fn provenance(&self, from: usize, to: usize) -> Option<Provenance> {
        self.provenance[from * self.size + to]
    }

    /// Adds an edge; returns `true` if it was not already present. The
    /// provenance of an existing edge is never overwritten.
    pub fn insert(&mut self, from: usize, to: usize, stamp: Provenance) -> bool {
        let idx = from * self.size + to;
        if self.reach[idx] {
            return false;
        }
        self.reach[idx] = true;
        self.provenance[idx] = Some(stamp);
        true
    }

    fn set(&mut self, from: usize, to: usize) {
        self.reach[from * self.size + to] = true;
    }

    pub fn edge_count(&self) -> usize {
        self.reach.iter().filter(|&&r| r).count()
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.size).all(|k| self.reaches(k, k))
    }

    pub fn is_transitive(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| {
            (0..n).filter(|&j| self.reaches(i, j)).all(|j| {
                (0..n).all(|k| !self.reaches(j, k) || self.reaches(i, k))
            })
        })
    }

    /// Floyd-Warshall closure in place. New edges get `stamp`; returns the
    /// number of edges added.
    pub fn close(&mut self, stamp: Provenance) -> usize {
        let n = self.size;
        let mut added = 0;
        for k in 0..n {
            for i in 0..n {
                if i == k || !self.reaches(i, k) {
                    continue;
                }
                for j in 0..n {
                    if self.reaches(k, j) && self.insert(i, j, stamp) {
                        added += 1;
                    }
                }
            }
        }
        added
    }

    /// Iterates the edges `(from, to)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.size;
        (0..n * n)
            .filter(|&idx| self.reach[idx])
            .map(move |idx| (idx / n, idx % n))
    }
}

/// Smallest transitive superset of `graph`; edges not present in the input
/// are stamped with `stamp`.
pub fn transitive_closure(graph: &ItemGraph, stamp: Provenance) -> ItemGraph {
    let mut closed = graph.clone();
    closed.close(stamp);
    closed
}
