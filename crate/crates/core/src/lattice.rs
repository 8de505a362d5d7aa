//! Integer lattice points, extended-real values, the value-oracle trait and
//! feasible regions `X = { x in dom f : x >= 0, x(V) <= K }`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the number of lattice points any brute-force scan may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// A point of `Z^V`. Derived ordering is lexicographic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<i64>);

impl Point {
    pub fn new(coords: Vec<i64>) -> Self {
        Point(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0; n])
    }

    /// Indicator vector of a subset given as a bitmask over `n` elements.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Point((0..n).map(|i| ((mask >> i) & 1) as i64).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i64 {
        self.0[i]
    }

    /// `x(V)`.
    pub fn sum(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    /// Element-wise `self >= other`.
    pub fn dominates(&self, other: &Point) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// `x + e_d` (no-op for the stay direction).
    pub fn step(&self, d: Direction) -> Point {
        let mut out = self.clone();
        if let Some(i) = d.item() {
            out.0[i] += 1;
        }
        out
    }

    /// `x - e_d`.
    pub fn step_back(&self, d: Direction) -> Point {
        let mut out = self.clone();
        if let Some(i) = d.item() {
            out.0[i] -= 1;
        }
        out
    }

    /// `x - e_i + e_j` for 0-based coordinates, `j = None` meaning `e_0`.
    pub fn exchange(&self, remove: usize, add: Option<usize>) -> Point {
        let mut out = self.clone();
        out.0[remove] -= 1;
        if let Some(j) = add {
            out.0[j] += 1;
        }
        out
    }

    pub fn l1_distance(&self, other: &Point) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Bitmask of a 0/1 point. Returns `None` if some coordinate is outside {0, 1}
    /// or the dimension exceeds 64.
    pub fn to_mask(&self) -> Option<u64> {
        if self.0.len() > 64 {
            return None;
        }
        let mut mask = 0u64;
        for (i, &c) in self.0.iter().enumerate() {
            match c {
                0 => {}
                1 => mask |= 1 << i,
                _ => return None,
            }
        }
        Some(mask)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for Point {
    fn from(v: Vec<i64>) -> Self {
        Point(v)
    }
}

/// An update direction in `V ∪ {0}`: `0` is the stay direction `e_0 = 0`,
/// `k >= 1` is the unit vector of the `k`-th element (coordinate `k - 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(pub usize);

impl Direction {
    pub const STAY: Direction = Direction(0);

    /// Direction of the 0-based coordinate `i`.
    pub fn item(self) -> Option<usize> {
        self.0.checked_sub(1)
    }

    pub fn of_item(i: usize) -> Direction {
        Direction(i + 1)
    }

    pub fn is_stay(self) -> bool {
        self.0 == 0
    }

    /// All of `V ∪ {0}` in tie-break order: stay first, then ascending index.
    pub fn all(n: usize) -> impl Iterator<Item = Direction> {
        (0..=n).map(Direction)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `x + e_i`.
pub fn unit_step(x: &Point, i: Direction) -> Point {
    x.step(i)
}

/// A value in `R ∪ {-inf}`. `NegInf` is a tag, never an IEEE infinity, and
/// orders strictly below every finite value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Value {
    NegInf,
    Finite(f64),
}

impl Value {
    pub fn is_finite(self) -> bool {
        matches!(self, Value::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Value::Finite(v) => Some(v),
            Value::NegInf => None,
        }
    }

    pub fn max(self, other: Value) -> Value {
        match self.partial_cmp(&other) {
            Some(Ordering::Less) => other,
            _ => self,
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.finite().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map_or(Value::NegInf, Value::Finite))
    }
}

/// Integer box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Point,
    pub hi: Point,
}

impl Bounds {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch { expected: lo.dim(), got: hi.dim() });
        }
        if lo.dim() == 0 {
            return Err(Error::InvalidInstance("ground set must be non-empty".into()));
        }
        if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
            return Err(Error::InvalidInstance(format!("empty box [{lo}, {hi}]")));
        }
        Ok(Bounds { lo, hi })
    }

    /// `[0, hi]`.
    pub fn upto(hi: Vec<i64>) -> Result<Self> {
        Bounds::new(Point::zeros(hi.len()), Point::new(hi))
    }

    /// `{0,1}^n`.
    pub fn hypercube(n: usize) -> Self {
        Bounds { lo: Point::zeros(n), hi: Point::new(vec![1; n]) }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim()
            && x.coords().iter().zip(self.lo.coords().iter().zip(self.hi.coords())).all(|(c, (l, h))| l <= c && c <= h)
    }

    /// Number of lattice points, or `None` on overflow.
    pub fn volume(&self) -> Option<u128> {
        self.lo
            .coords()
            .iter()
            .zip(self.hi.coords())
            .try_fold(1u128, |acc, (l, h)| acc.checked_mul((h - l + 1) as u128))
    }

    pub fn check_cap(&self, cap: u128) -> Result<u128> {
        match self.volume() {
            Some(v) if v <= cap => Ok(v),
            Some(v) => Err(Error::CapExceeded { volume: v, cap }),
            None => Err(Error::CapExceeded { volume: u128::MAX, cap }),
        }
    }

    pub fn intersect(&self, other: &Bounds) -> Option<Bounds> {
        if self.dim() != other.dim() {
            return None;
        }
        let lo: Vec<i64> = self.lo.coords().iter().zip(other.lo.coords()).map(|(a, b)| *a.max(b)).collect();
        let hi: Vec<i64> = self.hi.coords().iter().zip(other.hi.coords()).map(|(a, b)| *a.min(b)).collect();
        Bounds::new(Point::new(lo), Point::new(hi)).ok()
    }

    /// Row-major index of `x` within the box (last coordinate fastest), matching
    /// the lexicographic order of [`Bounds::points`].
    pub fn index_of(&self, x: &Point) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for ((c, l), h) in x.coords().iter().zip(self.lo.coords()).zip(self.hi.coords()) {
            idx = idx * (h - l + 1) as usize + (c - l) as usize;
        }
        Some(idx)
    }

    /// All lattice points in lexicographic order.
    pub fn points(&self) -> BoxPoints<'_> {
        BoxPoints { bounds: self, next: Some(self.lo.clone()) }
    }
}

/// Lexicographic odometer over a [`Bounds`].
pub struct BoxPoints<'a> {
    bounds: &'a Bounds,
    next: Option<Point>,
}

impl Iterator for BoxPoints<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let n = succ.dim();
        for k in (0..n).rev() {
            if succ.0[k] < self.bounds.hi.0[k] {
                succ.0[k] += 1;
                self.next = Some(succ);
                return Some(cur);
            }
            succ.0[k] = self.bounds.lo.0[k];
        }
        Some(cur)
    }
}

/// A value oracle `f: Z^V -> R ∪ {-inf}` with a finite bounding box of its
/// effective domain. Implementations must return `NegInf` outside the box and
/// must be pure.
pub trait Valuation: Send + Sync {
    fn bounds(&self) -> &Bounds;

    fn value(&self, x: &Point) -> Value;

    fn name(&self) -> &str;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }
}

pub type SharedValuation = Arc<dyn Valuation>;

impl<T: Valuation + ?Sized> Valuation for Arc<T> {
    fn bounds(&self) -> &Bounds {
        (**self).bounds()
    }
    fn value(&self, x: &Point) -> Value {
        (**self).value(x)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: Valuation + ?Sized> Valuation for &T {
    fn bounds(&self) -> &Bounds {
        (**self).bounds()
    }
    fn value(&self, x: &Point) -> Value {
        (**self).value(x)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// The action set `X` of a valuation under the budget `x(V) <= K`.
#[derive(Clone)]
pub struct FeasibleRegion {
    valuation: SharedValuation,
    budget: i64,
}

impl FeasibleRegion {
    pub fn new(valuation: SharedValuation, budget: i64) -> Result<Self> {
        if budget < 0 {
            return Err(Error::InvalidInstance(format!("negative budget {budget}")));
        }
        Ok(FeasibleRegion { valuation, budget })
    }

    pub fn valuation(&self) -> &SharedValuation {
        &self.valuation
    }

    pub fn budget(&self) -> i64 {
        self.budget
    }

    pub fn dim(&self) -> usize {
        self.valuation.dim()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim() && x.is_nonnegative() && x.sum() <= self.budget && self.valuation.value(x).is_finite()
    }
}

impl fmt::Debug for FeasibleRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeasibleRegion")
            .field("valuation", &self.valuation.name())
            .field("budget", &self.budget)
            .finish()
    }
}

/// Every point of the feasible region, lexicographically sorted.
pub fn enumerate_feasible(region: &FeasibleRegion) -> Result<Vec<Point>> {
    enumerate_feasible_capped(region, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_feasible_capped(region: &FeasibleRegion, cap: u128) -> Result<Vec<Point>> {
    let bounds = region.valuation.bounds();
    bounds.check_cap(cap)?;
    Ok(bounds.points().filter(|x| region.contains(x)).collect())
}

/// `f` restricted to the interval `[a, b]`.
pub struct Restricted {
    inner: SharedValuation,
    bounds: Bounds,
    name: String,
}

pub fn restrict(f: SharedValuation, a: Point, b: Point) -> Result<Restricted> {
    let interval = Bounds::new(a, b).map_err(|_| Error::EmptyIntersection)?;
    if interval.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: interval.dim() });
    }
    let bounds = f.bounds().intersect(&interval).ok_or(Error::EmptyIntersection)?;
    let name = format!("{}|[{},{}]", f.name(), interval.lo, interval.hi);
    Ok(Restricted { inner: f, bounds, name })
}

impl Valuation for Restricted {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &Point) -> Value {
        if self.bounds.contains(x) {
            self.inner.value(x)
        } else {
            Value::NegInf
        }
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// A valuation materialized into a dense table over its box. Lookups are
/// O(N) and the table is shared freely across threads.
pub struct Tabulated {
    bounds: Bounds,
    values: Vec<Value>,
    name: String,
}

impl Tabulated {
    pub fn build(f: &dyn Valuation) -> Result<Self> {
        Self::build_capped(f, DEFAULT_ENUMERATION_CAP)
    }

    pub fn build_capped(f: &dyn Valuation, cap: u128) -> Result<Self> {
        let bounds = f.bounds().clone();
        bounds.check_cap(cap)?;
        let values = bounds.points().map(|x| f.value(&x)).collect();
        Ok(Tabulated { bounds, values, name: f.name().to_string() })
    }

    /// Points of the box with finite value, lexicographic.
    pub fn domain(&self) -> Vec<Point> {
        self.bounds.points().zip(&self.values).filter(|(_, v)| v.is_finite()).map(|(x, _)| x).collect()
    }
}

impl Valuation for Tabulated {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &Point) -> Value {
        self.bounds.index_of(x).map_or(Value::NegInf, |i| self.values[i])
    }

    fn name(&self) -> &str {
        &self.name
    }
}
