//! The greedy procedure with pluggable (possibly erroneous) direction choices
//! and an exhaustive auditor for the additive robustness guarantee
//! `f(x_K) >= f(x*) - Σ_k err(i_k | x_{k-1})`.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{enumerate_feasible, Direction, FeasibleRegion, Point, Valuation, Value};
use crate::mchecker::{local_error, LocalError};
use crate::rng::StreamRng;

/// Tolerance on every audited inequality.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `x_0, .., x_K`.
    pub points: Vec<Point>,
    /// `i_1, .., i_K`.
    pub directions: Vec<Direction>,
    /// `err(i_k | x_{k-1})`.
    pub errors: Vec<LocalError>,
}

impl Trajectory {
    pub fn final_point(&self) -> &Point {
        self.points.last().expect("trajectory holds x_0")
    }

    /// `Σ_k err`, or `None` when some error is infinite.
    pub fn error_sum(&self) -> Option<f64> {
        self.errors.iter().map(|e| e.finite()).sum()
    }
}

/// Chooses `i_k` given the step index, the current point and the feasible
/// candidate directions (stay first, then ascending).
pub trait Selector {
    fn select(&mut self, step: usize, x: &Point, candidates: &[Direction], f: &dyn Valuation) -> Direction;
}

impl<F> Selector for F
where
    F: FnMut(usize, &Point, &[Direction]) -> Direction,
{
    fn select(&mut self, step: usize, x: &Point, candidates: &[Direction], _f: &dyn Valuation) -> Direction {
        self(step, x, candidates)
    }
}

/// Exact argmax; ties go to the stay direction, then the smallest index.
pub struct ExactSelector;

impl Selector for ExactSelector {
    fn select(&mut self, _step: usize, x: &Point, candidates: &[Direction], f: &dyn Valuation) -> Direction {
        let mut best = (Direction::STAY, Value::NegInf);
        for &d in candidates {
            let v = f.value(&x.step(d));
            if v > best.1 {
                best = (d, v);
            }
        }
        best.0
    }
}

/// Always stays put.
pub struct StaySelector;

impl Selector for StaySelector {
    fn select(&mut self, _: usize, _: &Point, _: &[Direction], _: &dyn Valuation) -> Direction {
        Direction::STAY
    }
}

/// Picks the feasible direction with the smallest next value (largest error).
pub struct WorstSelector;

impl Selector for WorstSelector {
    fn select(&mut self, _step: usize, x: &Point, candidates: &[Direction], f: &dyn Valuation) -> Direction {
        let mut worst = (Direction::STAY, f64::INFINITY);
        for &d in candidates {
            if let Some(v) = f.value(&x.step(d)).finite() {
                if v < worst.1 {
                    worst = (d, v);
                }
            }
        }
        worst.0
    }
}

/// Uniform over the feasible candidates.
pub struct RandomSelector(pub StreamRng);

impl RandomSelector {
    pub fn seeded(seed: u64) -> Self {
        RandomSelector(StreamRng::seed_from_u64(seed))
    }
}

impl Selector for RandomSelector {
    fn select(&mut self, _: usize, _: &Point, candidates: &[Direction], _: &dyn Valuation) -> Direction {
        *candidates.choose(&mut self.0).expect("stay is always a candidate")
    }
}

/// Selector names accepted on the command line: `exact|zero|worst|random:<seed>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectorKind {
    Exact,
    Zero,
    Worst,
    Random(u64),
}

impl std::str::FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SelectorKind::Exact),
            "zero" => Ok(SelectorKind::Zero),
            "worst" => Ok(SelectorKind::Worst),
            _ => s
                .strip_prefix("random:")
                .and_then(|seed| seed.parse().ok())
                .map(SelectorKind::Random)
                .ok_or_else(|| Error::InvalidInstance(format!("unknown selector {s:?}"))),
        }
    }
}

impl SelectorKind {
    pub fn build(self) -> Box<dyn Selector> {
        match self {
            SelectorKind::Exact => Box::new(ExactSelector),
            SelectorKind::Zero => Box::new(StaySelector),
            SelectorKind::Worst => Box::new(WorstSelector),
            SelectorKind::Random(seed) => Box::new(RandomSelector::seeded(seed)),
        }
    }
}

fn is_feasible(f: &dyn Valuation, x: &Point, budget: i64) -> bool {
    x.is_nonnegative() && x.sum() <= budget && f.value(x).is_finite()
}

/// Directions `d in V ∪ {0}` with `x + e_d` inside `{dom f, x(V) <= K}`.
pub fn feasible_directions(f: &dyn Valuation, x: &Point, budget: i64) -> Vec<Direction> {
    Direction::all(x.dim()).filter(|&d| is_feasible(f, &x.step(d), budget)).collect()
}

/// Runs `K` greedy steps from `0`, letting `selector` choose each direction.
pub fn greedy_with_selector(f: &dyn Valuation, budget: i64, selector: &mut dyn Selector) -> Result<Trajectory> {
    if budget < 0 {
        return Err(Error::InvalidInstance(format!("negative budget {budget}")));
    }
    let mut x = Point::zeros(f.dim());
    if !f.value(&x).is_finite() {
        return Err(Error::InvalidInstance("0 is not in the effective domain".into()));
    }
    let mut traj = Trajectory { points: vec![x.clone()], directions: Vec::new(), errors: Vec::new() };
    for step in 1..=budget as usize {
        let candidates = feasible_directions(f, &x, budget);
        let d = selector.select(step, &x, &candidates, f);
        if !candidates.contains(&d) {
            return Err(Error::InfeasibleDirection { step, direction: d.0 });
        }
        traj.errors.push(local_error(f, &x, d));
        traj.directions.push(d);
        x = x.step(d);
        traj.points.push(x.clone());
    }
    Ok(traj)
}

/// Standard greedy: exact argmax at every step.
pub fn greedy_exact(f: &dyn Valuation, budget: i64) -> Result<Trajectory> {
    greedy_with_selector(f, budget, &mut ExactSelector)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessAudit {
    pub final_value: f64,
    pub optimum: f64,
    pub optimum_point: Point,
    /// `None` when some local error is infinite.
    pub error_sum: Option<f64>,
    /// `f(x_K) - (f(x*) - Σ err)`.
    pub slack: Option<f64>,
    /// `max_{Y_k} f - (max_{Y_{k-1}} f - err_k)` for `k = 1..=K`.
    pub step_slacks: Vec<Option<f64>>,
    pub vacuous: bool,
    pub holds: bool,
}

/// Caches the feasible region and optimum so many trajectories can be
/// audited against one instance.
pub struct Auditor {
    region: FeasibleRegion,
    feasible: Vec<(Point, f64)>,
    optimum: (Point, f64),
}

impl Auditor {
    pub fn new(region: FeasibleRegion) -> Result<Self> {
        let f = region.valuation().clone();
        let feasible: Vec<(Point, f64)> = enumerate_feasible(&region)?
            .into_iter()
            .map(|x| {
                let v = f.value(&x).finite().expect("feasible");
                (x, v)
            })
            .collect();
        let mut optimum: Option<(Point, f64)> = None;
        for (x, v) in &feasible {
            if optimum.as_ref().is_none_or(|(_, b)| v > b) {
                optimum = Some((x.clone(), *v));
            }
        }
        let optimum = optimum.ok_or_else(|| Error::InvalidInstance("feasible region is empty".into()))?;
        Ok(Auditor { region, feasible, optimum })
    }

    pub fn optimum(&self) -> &(Point, f64) {
        &self.optimum
    }

    pub fn region(&self) -> &FeasibleRegion {
        &self.region
    }

    /// `max_{y in Y_k} f(y)` for anchor `x_k` at step `k`.
    pub fn reachable_max(&self, anchor: &Point, k: i64) -> Option<f64> {
        let limit = self.region.budget() - k + anchor.sum();
        self.feasible
            .iter()
            .filter(|(y, _)| y.sum() <= limit && y.dominates(anchor))
            .map(|(_, v)| *v)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    }

    pub fn audit(&self, traj: &Trajectory) -> Result<RobustnessAudit> {
        let budget = self.region.budget();
        let k_steps = traj.directions.len();
        if k_steps as i64 != budget || traj.points.len() != k_steps + 1 || traj.errors.len() != k_steps {
            return Err(Error::InvalidInstance(format!("trajectory length does not match budget {budget}")));
        }
        let n = self.region.dim();
        if traj.points[0] != Point::zeros(n) {
            return Err(Error::InvalidInstance("trajectory must start at 0".into()));
        }
        for k in 0..k_steps {
            if traj.points[k + 1] != traj.points[k].step(traj.directions[k]) {
                return Err(Error::InvalidInstance(format!("step {} is not a unit update", k + 1)));
            }
        }
        let f = self.region.valuation();
        let vacuous = traj.errors.iter().any(|e| e.is_infinite());
        let final_value = f.value(traj.final_point()).finite();
        let (ref optimum_point, optimum) = self.optimum;

        let mut step_slacks = Vec::with_capacity(k_steps);
        let mut prev = self.reachable_max(&traj.points[0], 0);
        let mut finite_so_far = true;
        for k in 1..=k_steps {
            finite_so_far &= !traj.errors[k - 1].is_infinite();
            let cur = if finite_so_far { self.reachable_max(&traj.points[k], k as i64) } else { None };
            step_slacks.push(match (cur, prev, traj.errors[k - 1].finite()) {
                (Some(c), Some(p), Some(e)) => Some(c - (p - e)),
                _ => None,
            });
            prev = cur;
        }
        let error_sum = traj.error_sum();
        let slack = match (final_value, error_sum) {
            (Some(v), Some(s)) => Some(v - (optimum - s)),
            _ => None,
        };
        let holds = vacuous
            || (slack.is_some_and(|s| s >= -AUDIT_TOL)
                && step_slacks.iter().all(|s| s.is_some_and(|s| s >= -AUDIT_TOL)));
        Ok(RobustnessAudit {
            final_value: final_value.unwrap_or(f64::NEG_INFINITY),
            optimum,
            optimum_point: optimum_point.clone(),
            error_sum,
            slack,
            step_slacks,
            vacuous,
            holds,
        })
    }
}

/// One-shot audit of `traj` against `region`.
pub fn audit_robustness(traj: &Trajectory, region: &FeasibleRegion) -> Result<RobustnessAudit> {
    Auditor::new(region.clone())?.audit(traj)
}
