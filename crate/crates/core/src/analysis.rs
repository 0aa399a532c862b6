//! Linked pairs of 2-changes, exact and bounding oracles, state-graph
//! exploration and crossing diagnostics.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{scan_all, RunTrace, StepRecord};
use crate::error::{Error, Result};
use crate::geometry::{apply_located, length_with, Distances, Instance, Tour, TwoChange};

pub const HELD_KARP_MAX_N: usize = 18;
pub const STATE_GRAPH_MAX_N: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairType {
    Type0,
    Type1A,
    Type1B,
    Type2,
    Unlinked,
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairType::Type0 => "TYPE0",
            PairType::Type1A => "TYPE1A",
            PairType::Type1B => "TYPE1B",
            PairType::Type2 => "TYPE2",
            PairType::Unlinked => "UNLINKED",
        })
    }
}

fn same_edge(e: (usize, usize), f: (usize, usize)) -> bool {
    (e.0 == f.0 && e.1 == f.1) || (e.0 == f.1 && e.1 == f.0)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Classifies two applied 2-changes (the first precedes the second).
pub fn classify_changes(c1: &TwoChange, c2: &TwoChange) -> PairType {
    let mut link = None;
    'outer: for (ai, e) in c1.added().into_iter().enumerate() {
        for (ri, f) in c2.removed().into_iter().enumerate() {
            if same_edge(e, f) {
                link = Some((ai, ri));
                break 'outer;
            }
        }
    }
    let Some((ai, ri)) = link else {
        return PairType::Unlinked;
    };

    // c1 removes {v1,v2},{v3,v4} and adds {v1,v3},{v2,v4}
    let (v1, v2, _v3, v4) = if ai == 0 {
        (c1.u1, c1.u2, c1.v1, c1.v2)
    } else {
        (c1.u2, c1.u1, c1.v2, c1.v1)
    };
    // c2 removes {v1,v3},{v5,v6} and adds {v1,v5},{v3,v6}
    let (a, b, c, d) = (c2.u1, c2.u2, c2.v1, c2.v2);
    let (v5, v6) = match ri {
        0 if a == v1 => (c, d),
        0 => (d, c),
        _ if c == v1 => (a, b),
        _ => (b, a),
    };

    let shared = [v2, v4].iter().filter(|x| **x == v5 || **x == v6).count();
    match shared {
        0 => PairType::Type0,
        2 => PairType::Type2,
        _ => {
            // relabel so that v2 is the shared vertex
            let (v2, v5, v6) = if v2 == v5 || v2 == v6 {
                (v2, v5, v6)
            } else {
                (v4, v6, v5)
            };
            if v6 == v2 {
                PairType::Type1A
            } else {
                debug_assert_eq!(v5, v2);
                PairType::Type1B
            }
        }
    }
}

pub fn classify_linked_pair(s1: &StepRecord, s2: &StepRecord) -> PairType {
    classify_changes(&s1.change, &s2.change)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedPair {
    pub first: usize,
    pub second: usize,
    pub kind: PairType,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairHistogram {
    pub type0: usize,
    pub type1a: usize,
    pub type1b: usize,
    pub type2: usize,
}

impl PairHistogram {
    fn add(&mut self, kind: PairType) {
        match kind {
            PairType::Type0 => self.type0 += 1,
            PairType::Type1A => self.type1a += 1,
            PairType::Type1B => self.type1b += 1,
            PairType::Type2 => self.type2 += 1,
            PairType::Unlinked => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub t: usize,
    pub n: usize,
    pub exclude_type2: bool,
    /// Size of the list of linked pairs (with type 2 dropped if excluded).
    pub pairs_all: usize,
    /// Disjoint pairs picked greedily from the full list.
    pub pairs_disjoint: usize,
    /// Disjoint pairs picked greedily after dropping type-2 pairs.
    pub pairs_type01_disjoint: usize,
    pub histogram: PairHistogram,
    /// The disjoint list the report was summarized from: the type-0/1 one
    /// when `exclude_type2`, otherwise the full one.
    pub disjoint: Vec<LinkedPair>,
}

fn ceil_div(num: i64, den: i64) -> i64 {
    num.div_euclid(den) + i64::from(num.rem_euclid(den) != 0)
}

/// Guaranteed number of disjoint linked pairs in a run of `t` steps.
pub fn disjoint_pair_bound(t: usize, n: usize) -> i64 {
    ceil_div(2 * t as i64 - n as i64, 7)
}

/// Guaranteed number of disjoint type-0/1 linked pairs in a run of `t` steps.
pub fn type01_pair_bound(t: usize, n: usize) -> i64 {
    ceil_div(4 * t as i64 - 3 * n as i64, 28)
}

/// Every step paired with the first later step removing each edge it adds,
/// in creation order.
pub fn linked_pairs(steps: &[StepRecord]) -> Vec<LinkedPair> {
    let mut next_removal: HashMap<(usize, usize), usize> = HashMap::new();
    let mut per_step: Vec<Vec<LinkedPair>> = vec![Vec::new(); steps.len()];
    for i in (0..steps.len()).rev() {
        let c = &steps[i].change;
        for (a, b) in c.added() {
            if let Some(&j) = next_removal.get(&edge_key(a, b)) {
                per_step[i].push(LinkedPair {
                    first: i,
                    second: j,
                    kind: classify_changes(c, &steps[j].change),
                });
            }
        }
        for (a, b) in c.removed() {
            next_removal.insert(edge_key(a, b), i);
        }
    }
    per_step.into_iter().flatten().collect()
}

fn greedy_disjoint<'a>(pairs: impl IntoIterator<Item = &'a LinkedPair>, t: usize) -> Vec<LinkedPair> {
    let mut used = vec![false; t];
    let mut out = Vec::new();
    for p in pairs {
        if !used[p.first] && !used[p.second] {
            used[p.first] = true;
            used[p.second] = true;
            out.push(*p);
        }
    }
    out
}

pub fn linked_pair_decomposition(trace: &RunTrace, exclude_type2: bool) -> PairReport {
    let t = trace.steps.len();
    let all = linked_pairs(&trace.steps);
    let without2: Vec<LinkedPair> = all
        .iter()
        .filter(|p| p.kind != PairType::Type2)
        .copied()
        .collect();
    let disjoint_all = greedy_disjoint(&all, t);
    let disjoint01 = greedy_disjoint(&without2, t);

    let listed = if exclude_type2 { &without2 } else { &all };
    let mut histogram = PairHistogram::default();
    for p in listed {
        histogram.add(p.kind);
    }
    PairReport {
        t,
        n: trace.n,
        exclude_type2,
        pairs_all: listed.len(),
        pairs_disjoint: disjoint_all.len(),
        pairs_type01_disjoint: disjoint01.len(),
        histogram,
        disjoint: if exclude_type2 { disjoint01 } else { disjoint_all },
    }
}

/// Exact optimum tour by dynamic programming over vertex subsets.
pub fn held_karp_opt(inst: &Instance) -> Result<(f64, Tour)> {
    let n = inst.n();
    if n > HELD_KARP_MAX_N {
        return Err(Error::Capacity {
            what: "held-karp",
            n,
            max: HELD_KARP_MAX_N,
        });
    }
    let d = inst.distance_matrix();
    // vertex 0 is the fixed start; subsets range over 1..n
    let m = n - 1;
    let full = 1usize << m;
    let mut cost = vec![f64::INFINITY; full * m];
    let mut parent = vec![u8::MAX; full * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = d.dist(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * m + j];
            if here == f64::INFINITY {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let c = here + d.dist(j + 1, k + 1);
                if c < cost[next * m + k] {
                    cost[next * m + k] = c;
                    parent[next * m + k] = j as u8;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut best = (f64::INFINITY, 0);
    for j in 0..m {
        let c = cost[last_mask * m + j] + d.dist(j + 1, 0);
        if c < best.0 {
            best = (c, j);
        }
    }
    let mut order = Vec::with_capacity(n);
    let (mut mask, mut j) = (last_mask, best.1);
    loop {
        order.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    order.push(0);
    order.reverse();
    let tour = Tour::new(order)?;
    Ok((length_with(tour.order(), &d), tour))
}

/// Grid-cell lower bound on the optimal tour length of an instance whose
/// points lie in the unit cube and whose densities are bounded by `phi`.
pub fn opt_lower_bound(inst: &Instance, phi: f64) -> Result<f64> {
    if !(phi >= 1.0) || !phi.is_finite() {
        return Err(Error::invalid("phi must be a finite value >= 1"));
    }
    let dim = inst.dim();
    if inst
        .points()
        .iter()
        .any(|p| p.coords().iter().any(|x| !(0.0..=1.0).contains(x)))
    {
        return Err(Error::invalid("points must lie in the unit cube"));
    }
    let target = inst.n() as f64 * phi;
    let pow = |l: u64| (l as f64).powi(dim as i32);
    let mut side = target.powf(1.0 / dim as f64).floor().max(1.0) as u64;
    while pow(side + 1) <= target {
        side += 1;
    }
    while side > 1 && pow(side) > target {
        side -= 1;
    }
    let cells: HashSet<Vec<u64>> = inst
        .points()
        .iter()
        .map(|p| {
            p.coords()
                .iter()
                .map(|x| ((x * side as f64).floor() as u64).min(side - 1))
                .collect()
        })
        .collect();
    let occupied = cells.len() as u64;
    let neighborhood = 3u64.pow(dim as u32);
    if occupied <= neighborhood {
        return Ok(0.0);
    }
    Ok(occupied.div_ceil(neighborhood) as f64 / side as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongestPath {
    pub steps: usize,
    /// The tours along one longest improving path, start first.
    pub path: Vec<Tour>,
    pub tours: usize,
    pub arcs: usize,
}

fn encode(order: &[usize]) -> u64 {
    order.iter().fold(0, |acc, &v| (acc << 4) | v as u64)
}

/// Rearranges `v` into its lexicographic successor; false at the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Longest path in the digraph on all tours with an arc per improving
/// 2-change.
pub fn state_graph_longest_path(inst: &Instance) -> Result<LongestPath> {
    let n = inst.n();
    if n > STATE_GRAPH_MAX_N {
        return Err(Error::Capacity {
            what: "state graph",
            n,
            max: STATE_GRAPH_MAX_N,
        });
    }
    let d = inst.distance_matrix();
    let mut tours: Vec<Vec<usize>> = Vec::new();
    let mut rest: Vec<usize> = (1..n).collect();
    loop {
        if rest[0] < rest[rest.len() - 1] {
            let mut order = Vec::with_capacity(n);
            order.push(0);
            order.extend_from_slice(&rest);
            tours.push(order);
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    let index: HashMap<u64, u32> = tours
        .iter()
        .enumerate()
        .map(|(k, t)| (encode(t), k as u32))
        .collect();

    let succ: Vec<Vec<u32>> = tours
        .par_iter()
        .map(|order| {
            scan_all(order, &d, 0.0)
                .into_iter()
                .map(|(loc, _)| {
                    let mut next = order.clone();
                    apply_located(&mut next, &loc);
                    index[&encode(&next)]
                })
                .collect()
        })
        .collect();
    let arcs = succ.iter().map(Vec::len).sum();

    // Kahn order; the graph is acyclic since every arc shortens the tour
    let m = tours.len();
    let mut indegree = vec![0u32; m];
    for s in &succ {
        for &t in s {
            indegree[t as usize] += 1;
        }
    }
    let mut queue: Vec<u32> = (0..m as u32).filter(|&v| indegree[v as usize] == 0).collect();
    let mut longest = vec![0usize; m];
    let mut pred = vec![u32::MAX; m];
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head] as usize;
        head += 1;
        for &w in &succ[v] {
            let w = w as usize;
            if longest[v] + 1 > longest[w] {
                longest[w] = longest[v] + 1;
                pred[w] = v as u32;
            }
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push(w as u32);
            }
        }
    }
    debug_assert_eq!(queue.len(), m);

    let end = (0..m).max_by_key(|&v| (longest[v], std::cmp::Reverse(v))).unwrap();
    let mut path = vec![Tour::from_canonical(tours[end].clone())];
    let mut v = end;
    while pred[v] != u32::MAX {
        v = pred[v] as usize;
        path.push(Tour::from_canonical(tours[v].clone()));
    }
    path.reverse();
    Ok(LongestPath {
        steps: longest[end],
        path,
        tours: m,
        arcs,
    })
}

fn orient(p: &[f64], q: &[f64], r: &[f64]) -> f64 {
    let c = |a: &[f64]| robust::Coord { x: a[0], y: a[1] };
    robust::orient2d(c(p), c(q), c(r))
}

/// Whether the open segments `pq` and `rs` share a point.
fn segments_cross(p: &[f64], q: &[f64], r: &[f64], s: &[f64]) -> bool {
    if p == q || r == s {
        return false;
    }
    let (o1, o2) = (orient(p, q, r), orient(p, q, s));
    let (o3, o4) = (orient(r, s, p), orient(r, s, q));
    if o1 == 0.0 && o2 == 0.0 {
        // collinear: the open intervals along a non-degenerate axis overlap
        let axis = if p[0] != q[0] || r[0] != s[0] { 0 } else { 1 };
        let (a0, a1) = (p[axis].min(q[axis]), p[axis].max(q[axis]));
        let (b0, b1) = (r[axis].min(s[axis]), r[axis].max(s[axis]));
        return a0.max(b0) < a1.min(b1);
    }
    // a touching endpoint is never an interior point of the other segment's
    // open counterpart, so only strict sign changes count
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Number of pairs of tour edges whose relative interiors intersect.
pub fn crossing_count(tour: &Tour, inst: &Instance) -> Result<usize> {
    if inst.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: inst.dim(),
            right: 2,
        });
    }
    if tour.len() != inst.n() {
        return Err(Error::SizeMismatch {
            expected: inst.n(),
            found: tour.len(),
        });
    }
    let pts = inst.points();
    let order = tour.order();
    let n = order.len();
    let at = |k: usize| pts[order[k % n]].coords();
    let mut count = 0;
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(at(i), at(i + 1), at(j), at(j + 1)) {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImprovementScope {
    /// Any single exchange of two vertex-disjoint edges.
    Single,
    /// Disjoint type-0/1 linked pairs of a recorded run.
    LinkedPairs01,
}

/// Smallest positive improvement in the given scope, or infinity if there
/// is none.
pub fn min_improvement(inst: &Instance, over: ImprovementScope, trace: Option<&RunTrace>) -> Result<f64> {
    match over {
        ImprovementScope::Single => {
            let d = inst.distance_matrix();
            let n = inst.n();
            let best = (0..n)
                .into_par_iter()
                .map(|a| {
                    let mut best = f64::INFINITY;
                    let mut keep = |x: f64| {
                        if x > 0.0 && x < best {
                            best = x;
                        }
                    };
                    for b in (a + 1)..n {
                        let dab = d.dist(a, b);
                        for c in (a + 1)..n {
                            if c == b {
                                continue;
                            }
                            for e in (c + 1)..n {
                                if e == b {
                                    continue;
                                }
                                let old = dab + d.dist(c, e);
                                keep(old - d.dist(a, c) - d.dist(b, e));
                                keep(old - d.dist(a, e) - d.dist(b, c));
                            }
                        }
                    }
                    best
                })
                .reduce(|| f64::INFINITY, f64::min);
            Ok(best)
        }
        ImprovementScope::LinkedPairs01 => {
            let trace = trace.ok_or_else(|| Error::invalid("linked-pair scope needs a trace"))?;
            let report = linked_pair_decomposition(trace, true);
            Ok(report
                .disjoint
                .iter()
                .map(|p| trace.steps[p.first].delta + trace.steps[p.second].delta)
                .fold(f64::INFINITY, f64::min))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, PivotRule, Termination, UNBOUNDED_STEPS};
    use crate::geometry::{Metric, Point};
    use crate::random_models::sample_uniform;
    use approx::assert_relative_eq;

    fn step(u1: usize, u2: usize, v1: usize, v2: usize) -> StepRecord {
        StepRecord {
            index: 0,
            change: TwoChange::new(u1, u2, v1, v2),
            delta: 1.0,
            length_after: 0.0,
        }
    }

    fn square() -> Instance {
        Instance::new(
            "square",
            Metric::EUCLIDEAN,
            vec![
                Point::xy(0.0, 0.0),
                Point::xy(1.0, 0.0),
                Point::xy(1.0, 1.0),
                Point::xy(0.0, 1.0),
            ],
        )
        .unwrap()
    }

    fn trace_of(steps: Vec<StepRecord>, n: usize) -> RunTrace {
        RunTrace {
            instance_name: "hand".into(),
            n,
            initial_tour: Tour::identity(n).unwrap(),
            initial_length: 0.0,
            steps,
            final_tour: Tour::identity(n).unwrap(),
            terminated: Termination::LocalOpt,
        }
    }

    #[test]
    fn pair_types() {
        // first: removes {1,2},{3,4}, adds {1,3},{2,4}
        let s1 = step(1, 2, 3, 4);
        assert_eq!(classify_linked_pair(&s1, &step(1, 3, 5, 6)), PairType::Type0);
        // v6 = v2: adds {v1,v5},{v2,v3}
        assert_eq!(classify_linked_pair(&s1, &step(1, 3, 5, 2)), PairType::Type1A);
        // v5 = v2: adds {v1,v2},{v3,v6}
        assert_eq!(classify_linked_pair(&s1, &step(1, 3, 2, 6)), PairType::Type1B);
        assert_eq!(classify_linked_pair(&s1, &step(1, 3, 4, 2)), PairType::Type2);
        assert_eq!(classify_linked_pair(&s1, &step(5, 6, 7, 8)), PairType::Unlinked);
    }

    #[test]
    fn pair_types_do_not_depend_on_labels() {
        let s1 = step(1, 2, 3, 4);
        // same changes written with the endpoints of each edge swapped and
        // the linked edge second
        assert_eq!(classify_linked_pair(&s1, &step(6, 5, 3, 1)), PairType::Type0);
        assert_eq!(classify_linked_pair(&s1, &step(2, 5, 3, 1)), PairType::Type1A);
        // shared vertex is v4 instead of v2: symmetric to type 1a
        assert_eq!(classify_linked_pair(&s1, &step(1, 3, 4, 6)), PairType::Type1A);
        assert_eq!(classify_linked_pair(&s1, &step(3, 1, 4, 2)), PairType::Type2);
        // linked through the second added edge {2,4}
        assert_eq!(classify_linked_pair(&s1, &step(2, 4, 7, 8)), PairType::Type0);
    }

    #[test]
    fn empty_and_single_traces() {
        let r = linked_pair_decomposition(&trace_of(vec![], 5), false);
        assert_eq!((r.pairs_all, r.pairs_disjoint, r.pairs_type01_disjoint), (0, 0, 0));

        let sq = square();
        let crossing = Tour::new(vec![0, 2, 1, 3]).unwrap();
        let t = run(&sq, &crossing, &PivotRule::FirstImprovement, UNBOUNDED_STEPS).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(linked_pair_decomposition(&t, false).pairs_all, 0);
    }

    #[test]
    fn greedy_list_is_disjoint() {
        let steps = vec![step(1, 2, 3, 4), step(1, 3, 5, 6), step(2, 4, 7, 8), step(1, 5, 9, 10)];
        let r = linked_pair_decomposition(&trace_of(steps, 11), false);
        assert_eq!(r.pairs_all, 3);
        // (0,1) is taken first, which blocks both (0,2) and (1,3)
        assert_eq!(r.pairs_disjoint, 1);
        assert_eq!(r.disjoint, vec![LinkedPair { first: 0, second: 1, kind: PairType::Type0 }]);
    }

    #[test]
    fn pair_count_bounds() {
        assert_eq!(disjoint_pair_bound(10, 6), 2);
        assert_eq!(disjoint_pair_bound(1, 10), -1);
        assert_eq!(type01_pair_bound(28, 4), 4);
        assert_eq!(type01_pair_bound(29, 4), 4);
        for seed in 0..20 {
            let inst = sample_uniform(40, 2, seed).unwrap();
            let start = crate::heuristics::random_tour(&inst, seed).unwrap();
            let t = run(&inst, &start, &PivotRule::FirstImprovement, UNBOUNDED_STEPS).unwrap();
            let r = linked_pair_decomposition(&t, false);
            assert!(r.pairs_disjoint as i64 >= disjoint_pair_bound(t.len(), 40));
            assert!(r.pairs_type01_disjoint as i64 >= type01_pair_bound(t.len(), 40));
        }
    }

    #[test]
    fn held_karp_small_cases() {
        let tri = Instance::new(
            "tri",
            Metric::EUCLIDEAN,
            vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)],
        )
        .unwrap();
        assert_relative_eq!(held_karp_opt(&tri).unwrap().0, 2.0 + 2f64.sqrt(), epsilon = 1e-15);
        let (len, tour) = held_karp_opt(&square()).unwrap();
        assert_relative_eq!(len, 4.0);
        assert_eq!(tour.order(), &[0, 1, 2, 3]);
        assert!(matches!(
            held_karp_opt(&sample_uniform(19, 2, 0).unwrap()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn lower_bound_cases() {
        let one_cell = Instance::new(
            "c",
            Metric::EUCLIDEAN,
            (0..5).map(|i| Point::xy(0.01 * i as f64, 0.02)).collect(),
        )
        .unwrap();
        assert_eq!(opt_lower_bound(&one_cell, 1.0).unwrap(), 0.0);

        let grid = Instance::new(
            "grid",
            Metric::EUCLIDEAN,
            (0..16)
                .map(|k| Point::xy(0.125 + 0.25 * (k % 4) as f64, 0.125 + 0.25 * (k / 4) as f64))
                .collect(),
        )
        .unwrap();
        assert_relative_eq!(opt_lower_bound(&grid, 1.0).unwrap(), 0.5);

        let outside = Instance::new(
            "o",
            Metric::EUCLIDEAN,
            vec![Point::xy(0.0, 0.0), Point::xy(1.5, 0.0), Point::xy(0.0, 1.0)],
        )
        .unwrap();
        assert!(opt_lower_bound(&outside, 1.0).is_err());
        assert!(opt_lower_bound(&grid, 0.5).is_err());
    }

    #[test]
    fn state_graph_small_cases() {
        let tri = sample_uniform(3, 2, 1).unwrap();
        let lp = state_graph_longest_path(&tri).unwrap();
        assert_eq!((lp.steps, lp.tours), (0, 1));

        let lp = state_graph_longest_path(&square()).unwrap();
        assert_eq!((lp.steps, lp.tours), (1, 3));
        assert_eq!(lp.path.len(), 2);
        assert_eq!(lp.path[1].order(), &[0, 1, 2, 3]);

        assert_eq!(state_graph_longest_path(&sample_uniform(7, 2, 1).unwrap()).unwrap().tours, 360);
        assert!(matches!(
            state_graph_longest_path(&sample_uniform(11, 2, 1).unwrap()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn crossings() {
        let sq = square();
        assert_eq!(crossing_count(&Tour::identity(4).unwrap(), &sq).unwrap(), 0);
        assert_eq!(crossing_count(&Tour::new(vec![0, 2, 1, 3]).unwrap(), &sq).unwrap(), 1);

        // on a line the closing edge overlaps the middle one
        let line = Instance::new(
            "line",
            Metric::EUCLIDEAN,
            (0..4).map(|i| Point::xy(i as f64, 0.0)).collect(),
        )
        .unwrap();
        assert_eq!(crossing_count(&Tour::identity(4).unwrap(), &line).unwrap(), 1);
        assert_eq!(crossing_count(&Tour::new(vec![0, 2, 1, 3]).unwrap(), &line).unwrap(), 2);

        // touching at a vertex is not a crossing
        let touch = Instance::new(
            "touch",
            Metric::EUCLIDEAN,
            vec![Point::xy(0.0, 0.0), Point::xy(2.0, 0.0), Point::xy(1.0, 0.0), Point::xy(1.0, 1.0)],
        )
        .unwrap();
        assert_eq!(crossing_count(&Tour::new(vec![0, 1, 3, 2]).unwrap(), &touch).unwrap(), 0);

        let cube = sample_uniform(5, 3, 0).unwrap();
        assert!(crossing_count(&Tour::identity(5).unwrap(), &cube).is_err());
    }

    #[test]
    fn min_improvement_cases() {
        let v = min_improvement(&square(), ImprovementScope::Single, None).unwrap();
        assert_relative_eq!(v, 2.0 * 2f64.sqrt() - 2.0, epsilon = 1e-15);
        let empty = trace_of(vec![], 4);
        assert_eq!(
            min_improvement(&square(), ImprovementScope::LinkedPairs01, Some(&empty)).unwrap(),
            f64::INFINITY
        );
        assert!(min_improvement(&square(), ImprovementScope::LinkedPairs01, None).is_err());
    }
}
