//! Independent oracles and random data generators shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use btsep::datamodel::{parse_dataset, Dataset, ModelKind, ParseOptions};
use btsep::separation::{saturate, Classification};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const MODELS: [ModelKind; 5] = [
    ModelKind::Basic,
    ModelKind::SingleOrder,
    ModelKind::TeamOrder,
    ModelKind::SingleTie,
    ModelKind::TeamTie,
];

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn load(name: &str, model: ModelKind) -> Dataset {
    parse_dataset(&fixture(name), ParseOptions::new(model)).expect("fixture parses")
}

/// Reachability through paths of one or more edges, by breadth-first
/// search from every vertex.
pub fn bfs_reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in edges {
        adjacency[a].push(b);
    }
    (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut queue: VecDeque<usize> = adjacency[start].iter().copied().collect();
            while let Some(v) = queue.pop_front() {
                if !seen[v] {
                    seen[v] = true;
                    queue.extend(adjacency[v].iter().copied());
                }
            }
            seen
        })
        .collect()
}

/// True when every split of the teams into two non-empty groups has a
/// win in each direction. `wins[i][j]` counts wins of `i` over `j`.
pub fn no_one_way_cut(wins: &[Vec<u32>]) -> bool {
    let t = wins.len();
    (1..(1u32 << t) - 1).all(|mask| {
        let inside = |k: usize| mask & (1 << k) != 0;
        (0..t).any(|i| inside(i) && (0..t).any(|j| !inside(j) && wins[i][j] > 0))
    })
}

/// A game as (first, second, outcome token).
pub type Game = (usize, usize, &'static str);

pub fn to_csv(games: &[Game]) -> String {
    let name = |k: usize| ((b'a' + k as u8) as char).to_string();
    games
        .iter()
        .map(|&(a, b, o)| format!("{},{},{}\n", name(a), name(b), o))
        .collect()
}

/// Random games among `t` teams in which every team plays at least once.
pub fn random_games<R: Rng>(rng: &mut R, t: usize, games: usize, ties: bool) -> Vec<Game> {
    let mut out = Vec::new();
    let outcome = |rng: &mut R| -> &'static str {
        match rng.gen_range(0..if ties { 3 } else { 2 }) {
            0 => "1",
            1 => "2",
            _ => "0",
        }
    };
    for _ in 0..games {
        let a = rng.gen_range(0..t);
        let mut b = rng.gen_range(0..t - 1);
        if b >= a {
            b += 1;
        }
        let o = outcome(rng);
        out.push((a, b, o));
    }
    for k in 0..t {
        if !out.iter().any(|&(a, b, _)| a == k || b == k) {
            let other = (k + 1) % t;
            let o = outcome(rng);
            out.push((k, other, o));
        }
    }
    out
}

/// A random dataset classified as overlap for `model`, with at most
/// `max_teams` teams.
pub fn random_overlap<R: Rng>(rng: &mut R, model: ModelKind, max_teams: usize) -> Dataset {
    loop {
        let t = rng.gen_range(2..=max_teams);
        let count = rng.gen_range(2 * t..=6 * t * t);
        let games = random_games(rng, t, count, model.allows_ties());
        let d = parse_dataset(&to_csv(&games), ParseOptions::new(model)).expect("valid games");
        if saturate(&d, model).expect("separation").classification() == Classification::Overlap {
            return d;
        }
    }
}

/// Complete round robin, every pair meeting `per_pair` times, classified
/// as overlap for `model`.
pub fn random_balanced<R: Rng>(
    rng: &mut R,
    model: ModelKind,
    ties_in_data: bool,
    half_win: bool,
) -> Dataset {
    loop {
        let t = rng.gen_range(3..=5);
        let per_pair = rng.gen_range(2..=4);
        let mut games = Vec::new();
        for a in 0..t {
            for b in a + 1..t {
                for g in 0..per_pair {
                    let o = match rng.gen_range(0..if ties_in_data { 3 } else { 2 }) {
                        0 => "1",
                        1 => "2",
                        _ => "0",
                    };
                    games.push(if g % 2 == 0 { (a, b, o) } else { (b, a, o) });
                }
            }
        }
        let options = ParseOptions::new(model).with_half_win(half_win);
        let d = parse_dataset(&to_csv(&games), options).expect("valid games");
        if saturate(&d, model).expect("separation").classification() == Classification::Overlap {
            return d;
        }
    }
}

/// Model probabilities written out directly from the parameter vector
/// used by [`brute_force_mle`]. Returns `[first wins, second wins, tie]`.
pub struct Oracle {
    pub model: ModelKind,
    pub t: usize,
    pub x: DVector<f64>,
}

impl Oracle {
    fn free_count(model: ModelKind, t: usize) -> usize {
        match model {
            ModelKind::Basic => t - 1,
            ModelKind::SingleOrder | ModelKind::SingleTie => t,
            ModelKind::TeamOrder => 2 * t - 1,
            ModelKind::TeamTie => 2 * t - 1,
        }
    }

    /// log π for team `i`; team 0 is pinned at zero.
    fn log_pi(x: &DVector<f64>, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            x[i - 1]
        }
    }

    pub fn probs_at(model: ModelKind, t: usize, x: &DVector<f64>, i: usize, j: usize) -> [f64; 3] {
        let pi = |k: usize| Self::log_pi(x, k).exp();
        match model {
            ModelKind::Basic => {
                let (a, b) = (pi(i), pi(j));
                [a / (a + b), b / (a + b), 0.0]
            }
            ModelKind::SingleOrder => {
                let gamma = x[t - 1].exp();
                let (a, b) = (gamma * pi(i), pi(j));
                [a / (a + b), b / (a + b), 0.0]
            }
            ModelKind::TeamOrder => {
                // home strengths: team 0 pinned, then t - 1 free; road: t free
                let home = pi(i);
                let road = x[t - 1 + j].exp();
                [home / (home + road), road / (home + road), 0.0]
            }
            ModelKind::SingleTie => {
                let nu = x[t - 1].exp();
                let (a, b) = (pi(i), pi(j));
                let tie = nu * (a * b).sqrt();
                let d = a + b + tie;
                [a / d, b / d, tie / d]
            }
            ModelKind::TeamTie => {
                let nu = |k: usize| x[t - 1 + k].exp();
                let (a, b) = (pi(i), pi(j));
                let tie = (nu(i) * nu(j) * a * b).sqrt();
                let d = a + b + tie;
                [a / d, b / d, tie / d]
            }
        }
    }

    pub fn probs(&self, i: usize, j: usize) -> [f64; 3] {
        Self::probs_at(self.model, self.t, &self.x, i, j)
    }
}

fn log_likelihood(model: ModelKind, t: usize, counts: &[(usize, usize, [f64; 3])], x: &DVector<f64>) -> f64 {
    counts
        .iter()
        .map(|&(i, j, y)| {
            let p = Oracle::probs_at(model, t, x, i, j);
            (0..3).filter(|&k| y[k] > 0.0).map(|k| y[k] * p[k].ln()).sum::<f64>()
        })
        .sum()
}

fn gradient(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |k, _| {
        let mut up = x.clone();
        let mut down = x.clone();
        up[k] += h;
        down[k] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

/// Maximizes the full log-likelihood by Levenberg-damped Newton steps
/// with finite-difference derivatives. Counts are
/// `(first, second, [first wins, second wins, ties])` per ordered pair.
pub fn brute_force_mle(model: ModelKind, t: usize, counts: &[(usize, usize, [f64; 3])]) -> Oracle {
    let n = Oracle::free_count(model, t);
    let f = |x: &DVector<f64>| log_likelihood(model, t, counts, x);
    let mut x = DVector::zeros(n);
    let mut mu = 1e-3;
    let mut value = f(&x);
    for _ in 0..500 {
        let g = gradient(&f, &x, 1e-6);
        if g.amax() < 1e-7 {
            break;
        }
        let hess = DMatrix::from_fn(n, n, |r, c| {
            let mut up = x.clone();
            let mut down = x.clone();
            up[c] += 1e-4;
            down[c] -= 1e-4;
            (gradient(&f, &up, 1e-6)[r] - gradient(&f, &down, 1e-6)[r]) / 2e-4
        });
        let hess = (&hess + hess.transpose()) * 0.5;
        let mut moved = false;
        while mu <= 1e12 {
            let system = -&hess + DMatrix::identity(n, n) * mu;
            let step = system.lu().solve(&g).unwrap_or_else(|| g.clone() * 1e-3);
            let candidate = &x + &step;
            let next = f(&candidate);
            if next >= value {
                moved = step.amax() > 1e-12;
                x = candidate;
                value = next;
                mu = (mu / 10.0).max(1e-12);
                break;
            }
            mu *= 10.0;
        }
        if !moved {
            break;
        }
    }
    Oracle { model, t, x }
}

/// Per ordered pair game counts as seen by the oracle. Models without an
/// order effect fold both orientations onto `i < j`.
pub fn oracle_counts(d: &Dataset, model: ModelKind) -> Vec<(usize, usize, [f64; 3])> {
    use btsep::datamodel::TeamId;
    let t = d.team_count();
    let mut out = Vec::new();
    for i in 0..t {
        for j in 0..t {
            if i == j {
                continue;
            }
            let tally = if model.has_order_effect() {
                d.oriented(TeamId(i), TeamId(j))
            } else if i < j {
                d.between(TeamId(i), TeamId(j))
            } else {
                continue;
            };
            let y = [tally.first_wins.get(), tally.second_wins.get(), tally.ties.get()];
            if y.iter().any(|&v| v > 0.0) {
                out.push((i, j, y));
            }
        }
    }
    out
}
