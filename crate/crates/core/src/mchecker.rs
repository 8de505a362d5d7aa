//! Brute-force M♮-concavity checks, local errors, reachable sets and the
//! exhaustive maximizer.
//!
//! All scans run over the effective domain inside the valuation's box, in
//! lexicographic order, so reported witnesses are reproducible. The outer
//! loop over `x` may run in parallel; the reported witness is still the first
//! one in scan order.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::{map_slice, Exec};
use crate::lattice::{enumerate_feasible, Direction, FeasibleRegion, Point, Tabulated, Valuation, Value};

/// Slack allowed on every exchange inequality.
pub const EXCHANGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `x, y, i` with no admissible `j` in the exchange inequality.
    Exchange { x: Point, y: Point, i: Direction },
    /// `x(V) < y(V)` and no `j` with `x_j < y_j` satisfies clause (a).
    ClauseA { x: Point, y: Point },
    /// `x(V) <= y(V)`, `x_i > y_i` and no `j in V` satisfies clause (b).
    ClauseB { x: Point, y: Point, i: Direction },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeReport {
    pub pass: bool,
    pub witness: Option<Witness>,
    pub pairs_checked: u64,
}

impl ExchangeReport {
    fn from_shards(shards: Vec<(u64, Option<Witness>)>) -> Self {
        let mut pairs = 0;
        for (count, witness) in shards {
            pairs += count;
            if witness.is_some() {
                return ExchangeReport { pass: false, witness, pairs_checked: pairs };
            }
        }
        ExchangeReport { pass: true, witness: None, pairs_checked: pairs }
    }
}

fn val(f: &Tabulated, x: &Point) -> Option<f64> {
    f.value(x).finite()
}

fn holds(lhs: f64, a: Option<f64>, b: Option<f64>) -> bool {
    matches!((a, b), (Some(a), Some(b)) if lhs <= a + b + EXCHANGE_TOL)
}

/// Exhaustive check of the M♮ exchange inequality
/// `f(x) + f(y) <= f(x - e_i + e_j) + f(y + e_i - e_j)`.
pub fn check_exchange(f: &dyn Valuation) -> Result<ExchangeReport> {
    check_exchange_with(f, Exec::default())
}

pub fn check_exchange_with(f: &dyn Valuation, exec: Exec) -> Result<ExchangeReport> {
    let table = Tabulated::build(f)?;
    let dom = table.domain();
    let n = f.dim();
    let shards = map_slice(exec, &dom, |x| {
        let fx = val(&table, x).expect("domain point");
        let mut pairs = 0u64;
        for y in &dom {
            pairs += 1;
            let lhs = fx + val(&table, y).expect("domain point");
            for i in (0..n).filter(|&i| x.get(i) > y.get(i)) {
                let stay = holds(lhs, val(&table, &x.exchange(i, None)), val(&table, &y.step(Direction::of_item(i))));
                let ok = stay
                    || (0..n).filter(|&j| x.get(j) < y.get(j)).any(|j| {
                        holds(lhs, val(&table, &x.exchange(i, Some(j))), val(&table, &y.exchange(j, Some(i))))
                    });
                if !ok {
                    let w = Witness::Exchange { x: x.clone(), y: y.clone(), i: Direction::of_item(i) };
                    return (pairs, Some(w));
                }
            }
        }
        (pairs, None)
    });
    Ok(ExchangeReport::from_shards(shards))
}

/// Exhaustive check of the two refined exchange clauses for `x(V) <= y(V)`.
pub fn check_prop_ab(f: &dyn Valuation) -> Result<ExchangeReport> {
    check_prop_ab_with(f, Exec::default())
}

pub fn check_prop_ab_with(f: &dyn Valuation, exec: Exec) -> Result<ExchangeReport> {
    let table = Tabulated::build(f)?;
    let dom = table.domain();
    let n = f.dim();
    let shards = map_slice(exec, &dom, |x| {
        let fx = val(&table, x).expect("domain point");
        let (sx, mut pairs) = (x.sum(), 0u64);
        for y in &dom {
            pairs += 1;
            let sy = y.sum();
            if sx > sy {
                continue;
            }
            let lhs = fx + val(&table, y).expect("domain point");
            let up: Vec<usize> = (0..n).filter(|&j| x.get(j) < y.get(j)).collect();
            if sx < sy {
                let ok = up.iter().any(|&j| {
                    let d = Direction::of_item(j);
                    holds(lhs, val(&table, &x.step(d)), val(&table, &y.step_back(d)))
                });
                if !ok {
                    return (pairs, Some(Witness::ClauseA { x: x.clone(), y: y.clone() }));
                }
            }
            for i in (0..n).filter(|&i| x.get(i) > y.get(i)) {
                let ok = up
                    .iter()
                    .any(|&j| holds(lhs, val(&table, &x.exchange(i, Some(j))), val(&table, &y.exchange(j, Some(i)))));
                if !ok {
                    let w = Witness::ClauseB { x: x.clone(), y: y.clone(), i: Direction::of_item(i) };
                    return (pairs, Some(w));
                }
            }
        }
        (pairs, None)
    });
    Ok(ExchangeReport::from_shards(shards))
}

/// `err(i | x)`; `Infinite` when `x + e_i` leaves the domain.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum LocalError {
    Finite(f64),
    Infinite,
}

impl LocalError {
    pub fn finite(self) -> Option<f64> {
        match self {
            LocalError::Finite(v) => Some(v),
            LocalError::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, LocalError::Infinite)
    }
}

impl fmt::Display for LocalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalError::Finite(v) => write!(f, "{v}"),
            LocalError::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for LocalError {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LocalError::Finite(v) => s.serialize_f64(*v),
            LocalError::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LocalError {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(LocalError::Finite(v)),
            Raw::Tag(t) if t == "inf" => Ok(LocalError::Infinite),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unexpected local error {t:?}"))),
        }
    }
}

/// `max_{i'} f(x + e_{i'}) - f(x + e_i)` with `-inf` candidates dropped from
/// the max.
pub fn local_error(f: &dyn Valuation, x: &Point, i: Direction) -> LocalError {
    let best = Direction::all(x.dim()).map(|d| f.value(&x.step(d))).fold(Value::NegInf, Value::max);
    match (best, f.value(&x.step(i))) {
        (Value::Finite(b), Value::Finite(v)) => LocalError::Finite((b - v).max(0.0)),
        _ => LocalError::Infinite,
    }
}

/// `Y_k`: feasible points above `x_k` reachable with the remaining `K - k`
/// unit steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachableSet {
    pub points: Vec<Point>,
    pub anchor: Point,
    pub remaining: i64,
}

pub fn reachable_set(region: &FeasibleRegion, anchor: &Point, k: i64) -> Result<ReachableSet> {
    let points = enumerate_feasible(region)?;
    reachable_from(&points, region, anchor, k)
}

/// [`reachable_set`] over a pre-enumerated feasible list.
pub fn reachable_from(feasible: &[Point], region: &FeasibleRegion, anchor: &Point, k: i64) -> Result<ReachableSet> {
    let budget = region.budget();
    if !(0..=budget).contains(&k) {
        return Err(Error::InvalidInstance(format!("step {k} outside 0..={budget}")));
    }
    if !region.contains(anchor) {
        return Err(Error::InvalidInstance(format!("anchor {anchor} is not feasible")));
    }
    let limit = budget - k + anchor.sum();
    let points = feasible.iter().filter(|y| y.dominates(anchor) && y.sum() <= limit).cloned().collect();
    Ok(ReachableSet { points, anchor: anchor.clone(), remaining: budget - k })
}

/// Lexicographically first maximizer over the feasible region.
pub fn brute_force_max(region: &FeasibleRegion) -> Result<(Point, f64)> {
    let points = enumerate_feasible(region)?;
    let f = region.valuation();
    let mut best: Option<(Point, f64)> = None;
    for x in points {
        let v = f.value(&x).finite().expect("feasible point has finite value");
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((x, v));
        }
    }
    best.ok_or_else(|| Error::InvalidInstance("feasible region is empty".into()))
}
