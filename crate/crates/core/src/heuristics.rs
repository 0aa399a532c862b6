//! Tour construction: insertion heuristics and random tours.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Distances, Instance, Tour};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionPolicy {
    /// Next vertex is the one closest to the current subtour.
    Nearest,
    /// Next vertex is the one whose insertion yields the shortest subtour.
    Cheapest,
    /// Vertices are inserted in a seeded random order.
    RandomOrder,
}

impl fmt::Display for InsertionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InsertionPolicy::Nearest => "nearest",
            InsertionPolicy::Cheapest => "cheapest",
            InsertionPolicy::RandomOrder => "random_order",
        })
    }
}

impl FromStr for InsertionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "nearest" => Ok(InsertionPolicy::Nearest),
            "cheapest" => Ok(InsertionPolicy::Cheapest),
            "random_order" | "arbitrary" => Ok(InsertionPolicy::RandomOrder),
            other => Err(Error::invalid(format!("unknown insertion policy '{other}'"))),
        }
    }
}

/// Cheapest edge `(tour[k], tour[k+1])` to insert `v` into, as `(cost, k)`.
/// Ties go to the earliest position.
fn best_edge<D: Distances>(tour: &[usize], v: usize, d: &D) -> (f64, usize) {
    let m = tour.len();
    let mut best = (f64::INFINITY, 0);
    for k in 0..m {
        let (x, y) = (tour[k], tour[(k + 1) % m]);
        let cost = d.dist(x, v) + d.dist(v, y) - d.dist(x, y);
        if cost < best.0 {
            best = (cost, k);
        }
    }
    best
}

/// The closest pair of vertices, ties broken lexicographically by index.
fn closest_pair<D: Distances>(d: &D) -> (usize, usize) {
    let n = d.len();
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.dist(i, j);
            if dij < best.0 {
                best = (dij, i, j);
            }
        }
    }
    (best.1, best.2)
}

/// Builds a tour by repeatedly inserting a vertex where it increases the
/// subtour length the least. The subtour starts from the closest pair.
///
/// `seed` is only used by [`InsertionPolicy::RandomOrder`] and defaults to 0.
pub fn insertion_tour(inst: &Instance, policy: InsertionPolicy, seed: Option<u64>) -> Result<Tour> {
    let d = inst.distance_matrix();
    let n = inst.n();
    let (a, b) = closest_pair(&d);
    let mut tour = vec![a, b];
    let mut inside = vec![false; n];
    inside[a] = true;
    inside[b] = true;

    match policy {
        InsertionPolicy::RandomOrder => {
            let mut rest: Vec<usize> = (0..n).filter(|v| !inside[*v]).collect();
            rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.unwrap_or(0)));
            for v in rest {
                let (_, k) = best_edge(&tour, v, &d);
                tour.insert(k + 1, v);
            }
        }
        InsertionPolicy::Nearest => {
            // distance of every outside vertex to the subtour
            let mut near: Vec<f64> = (0..n).map(|v| d.dist(v, a).min(d.dist(v, b))).collect();
            for _ in 2..n {
                let v = (0..n)
                    .filter(|v| !inside[*v])
                    .fold(None, |acc: Option<usize>, v| match acc {
                        Some(u) if near[u] <= near[v] => Some(u),
                        _ => Some(v),
                    })
                    .expect("an outside vertex remains");
                let (_, k) = best_edge(&tour, v, &d);
                tour.insert(k + 1, v);
                inside[v] = true;
                for u in 0..n {
                    near[u] = near[u].min(d.dist(u, v));
                }
            }
        }
        InsertionPolicy::Cheapest => {
            // cached (cost, edge start vertex) per outside vertex
            let mut cache: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];
            let refresh = |tour: &[usize], v: usize| {
                let (c, k) = best_edge(tour, v, &d);
                (c, tour[k])
            };
            for v in 0..n {
                if !inside[v] {
                    cache[v] = refresh(&tour, v);
                }
            }
            let mut pos = vec![usize::MAX; n];
            for _ in 2..n {
                for (k, &x) in tour.iter().enumerate() {
                    pos[x] = k;
                }
                let mut pick: Option<usize> = None;
                for v in (0..n).filter(|v| !inside[*v]) {
                    let better = match pick {
                        None => true,
                        Some(u) => cache[v].0 < cache[u].0,
                    };
                    if better {
                        pick = Some(v);
                    }
                }
                let v = pick.expect("an outside vertex remains");
                let x = cache[v].1;
                let k = pos[x];
                let m = tour.len();
                let y = tour[(k + 1) % m];
                tour.insert(k + 1, v);
                inside[v] = true;
                for k2 in 0..tour.len() {
                    pos[tour[k2]] = k2;
                }
                // edge (x, y) is gone; (x, v) and (v, y) are new
                for u in 0..n {
                    if inside[u] {
                        continue;
                    }
                    if cache[u].1 == x {
                        cache[u] = refresh(&tour, u);
                        continue;
                    }
                    for (s, t) in [(x, v), (v, y)] {
                        let c = d.dist(s, u) + d.dist(u, t) - d.dist(s, t);
                        let (cur, start) = cache[u];
                        if c < cur || (c == cur && pos[s] < pos[start]) {
                            cache[u] = (c, s);
                        }
                    }
                }
            }
        }
    }
    Tour::new(tour)
}

/// Uniformly random tour, canonicalized.
pub fn random_tour(inst: &Instance, seed: u64) -> Result<Tour> {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Tour::new(order)
}
