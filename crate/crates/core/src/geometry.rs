//! Points, L_p metrics, tours and the 2-change primitive.
//!
//! Tours are undirected Hamiltonian cycles. A [`Tour`] is always stored in
//! canonical form: vertex 0 sits at position 0 and the smaller of its two
//! neighbours sits at position 1. Two orderings describing the same cycle
//! therefore compare equal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `L_p` metric on `R^d`, `p >= 1` or `p = infinity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Metric {
    Lp(u32),
    Inf,
}

impl Metric {
    pub const MANHATTAN: Metric = Metric::Lp(1);
    pub const EUCLIDEAN: Metric = Metric::Lp(2);

    pub fn lp(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("L_p metric requires p >= 1"));
        }
        Ok(Metric::Lp(p))
    }

    /// Distance between two coordinate slices of equal length.
    ///
    /// For `p >= 3` the norm is evaluated as `m * (sum (|x_i|/m)^p)^(1/p)`
    /// with `m` the largest coordinate difference, so `p = 64` cannot overflow.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Lp(1) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Lp(2) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Lp(p) => {
                let m = max_abs_diff(a, b);
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| ((x - y).abs() / m).powi(p as i32))
                    .sum();
                m * s.powf(1.0 / p as f64)
            }
            Metric::Inf => max_abs_diff(a, b),
        }
    }
}

#[inline]
fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Lp(p) => write!(f, "{p}"),
            Metric::Inf => f.write_str("inf"),
        }
    }
}

impl TryFrom<String> for Metric {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Metric> for String {
    fn from(m: Metric) -> String {
        m.to_string()
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "max" => Ok(Metric::Inf),
            "manhattan" | "l1" => Ok(Metric::MANHATTAN),
            "euclidean" | "l2" => Ok(Metric::EUCLIDEAN),
            other => {
                let p: u32 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("unknown metric '{s}'")))?;
                Metric::lp(p)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid(format!(
                "points need at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {c}")));
        }
        Ok(Self { coords })
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self::new(vec![x, y]).expect("finite planar point")
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// `L_p` distance between two points of the same dimension.
pub fn distance(a: &Point, b: &Point, metric: Metric) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(metric.eval(a.coords(), b.coords()))
}

/// Anything that can report the distance between two vertex indices.
pub trait Distances {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    name: String,
    metric: Metric,
    points: Vec<Point>,
}

impl Instance {
    pub fn new(name: impl Into<String>, metric: Metric, points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::invalid(format!(
                "an instance needs at least 3 points, got {}",
                points.len()
            )));
        }
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: p.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            metric,
            points,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Dense symmetric distance table; worthwhile whenever a distance is
    /// queried more than a handful of times.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let n = self.n();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.metric.eval(self.points[i].coords(), self.points[j].coords());
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }
}

impl Distances for Instance {
    fn len(&self) -> usize {
        self.n()
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric
            .eval(self.points[i].coords(), self.points[j].coords())
    }
}

#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl Distances for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// A Hamiltonian cycle in canonical orientation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    /// Validates `order` as a permutation of `0..n` and canonicalizes it.
    pub fn new(mut order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n < 3 {
            return Err(Error::invalid(format!("a tour needs at least 3 vertices, got {n}")));
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::invalid(format!(
                    "tour order is not a permutation of 0..{n} (offending vertex {v})"
                )));
            }
        }
        canonicalize(&mut order);
        Ok(Self { order })
    }

    /// The tour `0, 1, ..., n-1`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    pub(crate) fn from_canonical(order: Vec<usize>) -> Self {
        debug_assert!(is_canonical(&order));
        Self { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    /// `positions()[v]` is the index of vertex `v` in [`Tour::order`].
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, &v) in self.order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }

    /// The `n` cyclic edges in tour order, as `(order[i], order[i+1])`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..n).map(move |i| (self.order[i], self.order[(i + 1) % n]))
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        let n = self.order.len();
        if a >= n || b >= n {
            return false;
        }
        let pos = self.positions();
        (pos[a] + 1) % n == pos[b] || (pos[b] + 1) % n == pos[a]
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.order.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

pub(crate) fn canonicalize(order: &mut [usize]) {
    let n = order.len();
    if let Some(p) = order.iter().position(|&v| v == 0) {
        order.rotate_left(p);
    }
    if n > 2 && order[n - 1] < order[1] {
        order[1..].reverse();
    }
}

fn is_canonical(order: &[usize]) -> bool {
    let n = order.len();
    n >= 3 && order[0] == 0 && order[1] < order[n - 1]
}

/// A 2-change removing `{u1,u2}` and `{v1,v2}` and adding `{u1,v1}` and `{u2,v2}`.
///
/// Orientation matters only for which pairs are added; operations taking a
/// tour re-derive the orientation from the removed edges, since removing two
/// disjoint edges of a cycle admits exactly one reconnection into a cycle.
/// Relative size below which a 2-change gain is treated as zero.
pub const GAIN_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoChange {
    pub u1: usize,
    pub u2: usize,
    pub v1: usize,
    pub v2: usize,
}

impl TwoChange {
    pub fn new(u1: usize, u2: usize, v1: usize, v2: usize) -> Self {
        Self { u1, u2, v1, v2 }
    }

    pub fn removed(&self) -> [(usize, usize); 2] {
        [(self.u1, self.u2), (self.v1, self.v2)]
    }

    pub fn added(&self) -> [(usize, usize); 2] {
        [(self.u1, self.v1), (self.u2, self.v2)]
    }

    pub fn vertices(&self) -> [usize; 4] {
        [self.u1, self.u2, self.v1, self.v2]
    }

    /// The change that removes this change's added edges again.
    pub fn inverse(&self) -> Self {
        Self::new(self.u1, self.v1, self.u2, self.v2)
    }

    /// Improvement `d(u1,u2) + d(v1,v2) - d(u1,v1) - d(u2,v2)` for this orientation.
    ///
    /// Exactly antisymmetric under [`TwoChange::inverse`]. Differences within
    /// [`GAIN_REL_TOL`] of the edge lengths are rounding noise and count as ties,
    /// otherwise a move and its inverse could both look improving.
    #[inline]
    pub fn gain<D: Distances + ?Sized>(&self, d: &D) -> f64 {
        let removed = d.dist(self.u1, self.u2) + d.dist(self.v1, self.v2);
        let added = d.dist(self.u1, self.v1) + d.dist(self.u2, self.v2);
        let g = removed - added;
        if g.abs() <= GAIN_REL_TOL * removed.max(added) {
            0.0
        } else {
            g
        }
    }

    pub fn has_distinct_vertices(&self) -> bool {
        let v = self.vertices();
        (0..4).all(|i| ((i + 1)..4).all(|j| v[i] != v[j]))
    }
}

impl fmt::Display for TwoChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "-{{{},{}}} -{{{},{}}} +{{{},{}}} +{{{},{}}}",
            self.u1, self.u2, self.v1, self.v2, self.u1, self.v1, self.u2, self.v2
        )
    }
}

/// A 2-change pinned to tour positions: `order[i] = u1`, `order[i+1] = u2`,
/// `order[j] = v1`, `order[j+1] = v2` with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Located {
    pub i: usize,
    pub j: usize,
    pub change: TwoChange,
}

/// Finds the removed edges of `change` in `order` (with `pos` its inverse)
/// and orients them along the tour.
pub(crate) fn locate_in(order: &[usize], pos: &[usize], change: &TwoChange) -> Result<Located> {
    let n = order.len();
    let [(a, b), (c, d)] = change.removed();
    if [a, b, c, d].iter().any(|&v| v >= n) {
        return Err(Error::invalid(format!(
            "2-change {change} references a vertex outside 0..{n}"
        )));
    }
    if !change.has_distinct_vertices() {
        return Err(Error::SharedVertex);
    }
    let start = |x: usize, y: usize| -> Result<usize> {
        if (pos[x] + 1) % n == pos[y] {
            Ok(pos[x])
        } else if (pos[y] + 1) % n == pos[x] {
            Ok(pos[y])
        } else {
            Err(Error::EdgeNotInTour(x, y))
        }
    };
    let (mut i, mut j) = (start(a, b)?, start(c, d)?);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    Ok(Located {
        i,
        j,
        change: TwoChange::new(order[i], order[i + 1], order[j], order[(j + 1) % n]),
    })
}

/// Reverses `order[i+1..=j]` and restores canonical orientation in place.
pub(crate) fn apply_located(order: &mut [usize], loc: &Located) {
    order[loc.i + 1..=loc.j].reverse();
    let n = order.len();
    if order[n - 1] < order[1] {
        order[1..].reverse();
    }
}

pub fn locate(tour: &Tour, change: &TwoChange) -> Result<Located> {
    locate_in(&tour.order, &tour.positions(), change)
}

fn check_size(tour: &Tour, inst: &Instance) -> Result<()> {
    if tour.len() != inst.n() {
        return Err(Error::SizeMismatch {
            expected: inst.n(),
            found: tour.len(),
        });
    }
    Ok(())
}

/// Sum of the `n` cyclic edge lengths.
pub fn tour_length(tour: &Tour, inst: &Instance) -> Result<f64> {
    check_size(tour, inst)?;
    Ok(length_with(tour.order(), inst))
}

pub(crate) fn length_with<D: Distances + ?Sized>(order: &[usize], d: &D) -> f64 {
    let n = order.len();
    (0..n).map(|i| d.dist(order[i], order[(i + 1) % n])).sum()
}

/// Old length minus new length; positive means the change shortens the tour.
pub fn two_change_delta(tour: &Tour, change: &TwoChange, inst: &Instance) -> Result<f64> {
    check_size(tour, inst)?;
    Ok(locate(tour, change)?.change.gain(inst))
}

/// Applies `change` and returns the canonicalized result.
pub fn apply_two_change(tour: &Tour, change: &TwoChange) -> Result<Tour> {
    let loc = locate(tour, change)?;
    let mut order = tour.order.clone();
    apply_located(&mut order, &loc);
    Ok(Tour::from_canonical(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

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

    #[test]
    fn distance_examples() {
        let o = Point::xy(0.0, 0.0);
        assert_eq!(distance(&o, &Point::xy(3.0, 4.0), Metric::EUCLIDEAN).unwrap(), 5.0);
        let one = Point::xy(1.0, 1.0);
        assert_eq!(distance(&o, &one, Metric::MANHATTAN).unwrap(), 2.0);
        assert_eq!(distance(&o, &one, Metric::Inf).unwrap(), 1.0);
        let c = Point::xy(-0.1, 1.4);
        assert_relative_eq!(
            distance(&o, &c, Metric::EUCLIDEAN).unwrap(),
            1.97f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            distance(&o, &c, Metric::EUCLIDEAN).unwrap(),
            1.403567,
            epsilon = 1e-6
        );
    }

    #[test]
    fn distance_dimension_mismatch() {
        let a = Point::xy(0.0, 0.0);
        let b = Point::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            distance(&a, &b, Metric::EUCLIDEAN),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn large_p_does_not_overflow() {
        let a = Point::xy(0.0, 0.0);
        let b = Point::xy(1e10, 2e10);
        let d = distance(&a, &b, Metric::Lp(64)).unwrap();
        assert!(d.is_finite());
        assert!(d >= 2e10 && d <= 2e10 * 2f64.powf(1.0 / 64.0));
        // p = 3 agrees with the naive formula at ordinary scales
        let c = Point::xy(1.5, -2.0);
        let naive = (1.5f64.powi(3) + 2f64.powi(3)).powf(1.0 / 3.0);
        assert_relative_eq!(distance(&a, &c, Metric::Lp(3)).unwrap(), naive, epsilon = 1e-14);
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("inf".parse::<Metric>().unwrap(), Metric::Inf);
        assert_eq!("3".parse::<Metric>().unwrap(), Metric::Lp(3));
        assert_eq!(Metric::Lp(7).to_string().parse::<Metric>().unwrap(), Metric::Lp(7));
        assert!("0".parse::<Metric>().is_err());
        assert!("abc".parse::<Metric>().is_err());
    }

    #[test]
    fn point_and_instance_validation() {
        assert!(Point::new(vec![1.0]).is_err());
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
        let pts = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)];
        assert!(Instance::new("x", Metric::EUCLIDEAN, pts).is_err());
        let mixed = vec![
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::new(vec![0.0, 0.0, 0.0]).unwrap(),
        ];
        assert!(Instance::new("x", Metric::EUCLIDEAN, mixed).is_err());
    }

    #[test]
    fn tour_validation_and_canonical_form() {
        assert!(Tour::new(vec![0, 1]).is_err());
        assert!(Tour::new(vec![0, 1, 1]).is_err());
        assert!(Tour::new(vec![0, 1, 3]).is_err());
        let t = Tour::new(vec![2, 3, 0, 1]).unwrap();
        assert_eq!(t.order(), &[0, 1, 2, 3]);
        let r = Tour::new(vec![3, 2, 1, 0]).unwrap();
        assert_eq!(r, t);
    }

    #[test]
    fn square_lengths() {
        let inst = square();
        let perimeter = Tour::identity(4).unwrap();
        assert_relative_eq!(tour_length(&perimeter, &inst).unwrap(), 4.0);
        let crossing = Tour::new(vec![0, 2, 1, 3]).unwrap();
        assert_relative_eq!(
            tour_length(&crossing, &inst).unwrap(),
            2.0 + 2.0 * 2f64.sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(tour_length(&crossing, &inst).unwrap(), 4.828427, epsilon = 1e-6);
        let short = Tour::identity(3).unwrap();
        assert!(matches!(
            tour_length(&short, &inst),
            Err(Error::SizeMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn uncrossing_the_square() {
        let inst = square();
        let crossing = Tour::new(vec![0, 2, 1, 3]).unwrap();
        // both diagonals {0,2} and {1,3}
        let c = TwoChange::new(0, 2, 1, 3);
        let delta = two_change_delta(&crossing, &c, &inst).unwrap();
        assert_relative_eq!(delta, 2.0 * 2f64.sqrt() - 2.0, epsilon = 1e-12);
        let fixed = apply_two_change(&crossing, &c).unwrap();
        assert_relative_eq!(tour_length(&fixed, &inst).unwrap(), 4.0, epsilon = 1e-12);
        assert_eq!(fixed, Tour::identity(4).unwrap());
    }

    #[test]
    fn reversal_example() {
        // (1,2,3,4,5,6,7) minus {1,2},{5,6} gives (1,5,4,3,2,6,7); shifted to 0-based labels.
        let t = Tour::new(vec![0, 1, 2, 3, 4, 5, 6]).unwrap();
        let out = apply_two_change(&t, &TwoChange::new(0, 1, 4, 5)).unwrap();
        assert_eq!(out, Tour::new(vec![0, 4, 3, 2, 1, 5, 6]).unwrap());
        assert_eq!(out.order(), &[0, 4, 3, 2, 1, 5, 6]);
    }

    #[test]
    fn inverse_restores_tour() {
        let t = Tour::new(vec![0, 3, 5, 1, 6, 2, 4]).unwrap();
        let c = TwoChange::new(3, 5, 2, 4);
        let once = apply_two_change(&t, &c).unwrap();
        let loc = locate(&t, &c).unwrap();
        let back = apply_two_change(&once, &loc.change.inverse()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn change_errors() {
        let t = Tour::identity(6).unwrap();
        assert!(matches!(
            apply_two_change(&t, &TwoChange::new(0, 1, 1, 2)),
            Err(Error::SharedVertex)
        ));
        assert!(matches!(
            apply_two_change(&t, &TwoChange::new(0, 2, 3, 4)),
            Err(Error::EdgeNotInTour(0, 2))
        ));
        assert!(apply_two_change(&t, &TwoChange::new(0, 1, 3, 9)).is_err());
    }

    #[test]
    fn removed_edge_order_does_not_matter() {
        let t = Tour::new(vec![0, 4, 1, 5, 2, 6, 3, 7]).unwrap();
        let a = apply_two_change(&t, &TwoChange::new(4, 1, 6, 3)).unwrap();
        let b = apply_two_change(&t, &TwoChange::new(3, 6, 1, 4)).unwrap();
        assert_eq!(a, b);
    }
}
