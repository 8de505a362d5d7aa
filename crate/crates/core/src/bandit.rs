//! Stochastic bandit algorithms on top of the greedy procedure.
//!
//! Each greedy phase is a multi-armed bandit over the feasible update
//! directions, solved by MOSS with a recommendation drawn proportionally to
//! pull counts. Explore-then-commit turns the resulting simple-regret
//! algorithm into a cumulative-regret one.

use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::greedy::feasible_directions;
use crate::lattice::{Direction, FeasibleRegion, Point, SharedValuation};
use crate::mchecker::brute_force_max;
use crate::rng::{stream, Purpose, StreamRng};

/// Box volume up to which the `[0, 1]` range check is exhaustive.
const RANGE_CHECK_EXHAUSTIVE: u128 = 100_000;
const RANGE_CHECK_SAMPLES: usize = 10_000;
const RANGE_TOL: f64 = 1e-12;

/// Additive zero-mean 1-sub-Gaussian noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian {
        sigma: f64,
    },
    /// Uniform on `[-1, 1]`.
    Uniform,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Gaussian { sigma: 1.0 }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// `gaussian`, `gaussian:<sigma>` or `uniform`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInstance(format!("unknown noise {s:?}"));
        match s.split_once(':') {
            None if s == "gaussian" => Ok(NoiseModel::default()),
            None if s == "uniform" => Ok(NoiseModel::Uniform),
            Some(("gaussian", sigma)) => {
                let sigma: f64 = sigma.parse().map_err(|_| bad())?;
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(bad());
                }
                Ok(NoiseModel::Gaussian { sigma })
            }
            _ => Err(bad()),
        }
    }
}

impl NoiseModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
            NoiseModel::Uniform => rng.random_range(-1.0..=1.0),
        }
    }
}

/// Value oracle of `f*` perturbed by fresh noise on every query.
pub struct NoisyOracle {
    valuation: SharedValuation,
    noise: NoiseModel,
    rng: StreamRng,
    queries: u64,
}

/// Checks that `f` maps its domain into `[0, 1]` (exhaustively for small
/// boxes, by sampling otherwise).
pub fn check_unit_range(f: &SharedValuation) -> Result<()> {
    let bounds = f.bounds();
    let check = |x: &Point| match f.value(x).finite() {
        Some(v) if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v) => {
            Err(Error::RangeViolation { point: x.to_string(), value: v })
        }
        _ => Ok(()),
    };
    match bounds.volume() {
        Some(v) if v <= RANGE_CHECK_EXHAUSTIVE => bounds.points().try_for_each(|x| check(&x)),
        _ => {
            let mut rng = StreamRng::seed_from_u64(0);
            (0..RANGE_CHECK_SAMPLES).try_for_each(|_| {
                let coords =
                    bounds.lo.coords().iter().zip(bounds.hi.coords()).map(|(&l, &h)| rng.random_range(l..=h)).collect();
                check(&Point::new(coords))
            })
        }
    }
}

pub fn make_noisy_oracle(f: SharedValuation, noise: NoiseModel, seed: u64) -> Result<NoisyOracle> {
    NoisyOracle::with_rng(f, noise, StreamRng::seed_from_u64(seed))
}

impl NoisyOracle {
    pub fn with_rng(valuation: SharedValuation, noise: NoiseModel, rng: StreamRng) -> Result<Self> {
        check_unit_range(&valuation)?;
        Ok(NoisyOracle { valuation, noise, rng, queries: 0 })
    }

    /// `f*(x) + ε`.
    pub fn query(&mut self, x: &Point) -> Result<f64> {
        let v = self.valuation.value(x).finite().ok_or_else(|| Error::OutsideDomain(x.to_string()))?;
        self.queries += 1;
        Ok(v + self.noise.sample(&mut self.rng))
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn valuation(&self) -> &SharedValuation {
        &self.valuation
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }
}

/// Per-arm pull counts and empirical means after a MOSS run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullHistory {
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    pub rounds: u64,
}

impl PullHistory {
    pub fn arms(&self) -> usize {
        self.counts.len()
    }
}

/// MOSS index `μ̂ + sqrt((4/τ̂) log⁺(T' / (M τ̂)))`.
fn moss_index(mean: f64, count: u64, horizon: u64, arms: usize) -> f64 {
    let tau = count as f64;
    let ratio = horizon as f64 / (arms as f64 * tau);
    mean + (4.0 / tau * ratio.max(1.0).ln()).sqrt()
}

/// Runs MOSS for `horizon` rounds over `arms` arms; `pull(i)` returns one
/// reward of arm `i`.
pub fn moss_run(arms: usize, horizon: u64, mut pull: impl FnMut(usize) -> f64) -> Result<PullHistory> {
    if arms == 0 {
        return Err(Error::InvalidInstance("MOSS needs at least one arm".into()));
    }
    if horizon < arms as u64 {
        return Err(Error::BudgetTooSmall { required: arms as u64, got: horizon });
    }
    let mut counts = vec![0u64; arms];
    let mut means = vec![0.0f64; arms];
    let record = |i: usize, r: f64, counts: &mut [u64], means: &mut [f64]| {
        counts[i] += 1;
        means[i] += (r - means[i]) / counts[i] as f64;
    };
    for i in 0..arms {
        let r = pull(i);
        record(i, r, &mut counts, &mut means);
    }
    for _ in arms as u64..horizon {
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..arms {
            let idx = moss_index(means[i], counts[i], horizon, arms);
            if idx > best.1 {
                best = (i, idx);
            }
        }
        let r = pull(best.0);
        record(best.0, r, &mut counts, &mut means);
    }
    Ok(PullHistory { counts, means, rounds: horizon })
}

/// Draws arm `i` with probability `τ̂_i / T'`.
pub fn moss_recommend<R: Rng + ?Sized>(history: &PullHistory, rng: &mut R) -> usize {
    let mut u = rng.random_range(0..history.rounds);
    for (i, &c) in history.counts.iter().enumerate() {
        if u < c {
            return i;
        }
        u -= c;
    }
    unreachable!("counts sum to the number of rounds")
}

/// Output of the greedy-bandit procedure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyBanditOutcome {
    pub point: Point,
    pub directions: Vec<Direction>,
    pub queries: u64,
}

/// Minimum query budget `K (N + 2)`.
pub fn minimum_budget(region: &FeasibleRegion) -> u64 {
    region.budget() as u64 * (region.dim() as u64 + 2)
}

/// `K` greedy phases, each a MOSS run over the feasible directions with
/// `⌊T/K⌋` noisy queries.
pub fn greedy_bandit<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    region: &FeasibleRegion,
    total_queries: u64,
    rng: &mut R,
) -> Result<GreedyBanditOutcome> {
    greedy_bandit_observed(oracle, region, total_queries, rng, &mut |_| {})
}

/// [`greedy_bandit`] reporting every queried point to `on_query`.
pub fn greedy_bandit_observed<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    region: &FeasibleRegion,
    total_queries: u64,
    rng: &mut R,
    on_query: &mut dyn FnMut(&Point),
) -> Result<GreedyBanditOutcome> {
    let required = minimum_budget(region);
    if total_queries < required {
        return Err(Error::BudgetTooSmall { required, got: total_queries });
    }
    let budget = region.budget();
    let f = region.valuation().clone();
    let mut x = Point::zeros(region.dim());
    if !region.contains(&x) {
        return Err(Error::InvalidInstance("0 is not feasible".into()));
    }
    let mut directions = Vec::with_capacity(budget as usize);
    let start = oracle.queries();
    if budget == 0 {
        return Ok(GreedyBanditOutcome { point: x, directions, queries: 0 });
    }
    let per_phase = total_queries / budget as u64;
    for _ in 0..budget {
        let arms = feasible_directions(&*f, &x, budget);
        let points: Vec<Point> = arms.iter().map(|&d| x.step(d)).collect();
        let mut failure = None;
        let history = moss_run(arms.len(), per_phase, |a| {
            on_query(&points[a]);
            oracle.query(&points[a]).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            })
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        let pick = arms[moss_recommend(&history, rng)];
        directions.push(pick);
        x = x.step(pick);
    }
    Ok(GreedyBanditOutcome { point: x, directions, queries: oracle.queries() - start })
}

/// A run of consecutive rounds playing the same point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub point: Point,
    pub value: f64,
    pub rounds: u64,
}

fn push_round(segments: &mut Vec<Segment>, point: &Point, value: f64, rounds: u64) {
    if rounds == 0 {
        return;
    }
    match segments.last_mut() {
        Some(last) if last.point == *point => last.rounds += rounds,
        _ => segments.push(Segment { point: point.clone(), value, rounds }),
    }
}

/// Played points of one explore-then-commit run, run-length encoded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretRecord {
    pub segments: Vec<Segment>,
    pub optimum: f64,
    pub exploration_rounds: u64,
    pub committed: Point,
}

impl RegretRecord {
    pub fn rounds(&self) -> u64 {
        self.segments.iter().map(|s| s.rounds).sum()
    }

    /// `T f*(x*) - Σ_t f*(x^t)`.
    pub fn cumulative_regret(&self) -> f64 {
        self.segments.iter().map(|s| s.rounds as f64 * (self.optimum - s.value)).sum()
    }
}

/// Exploration length `min(T, max(K(N+2), ⌈K N^{1/3} T^{2/3}⌉))`.
pub fn exploration_rounds(region: &FeasibleRegion, horizon: u64) -> u64 {
    let k = region.budget() as f64;
    let n = region.dim() as f64;
    let tuned = (k * n.cbrt() * (horizon as f64).powf(2.0 / 3.0)).ceil() as u64;
    horizon.min(tuned.max(minimum_budget(region)))
}

/// Explore with greedy-bandit for the tuned number of rounds, then commit.
pub fn etc_run<R: Rng + ?Sized>(
    oracle: &mut NoisyOracle,
    region: &FeasibleRegion,
    horizon: u64,
    rng: &mut R,
) -> Result<RegretRecord> {
    let required = minimum_budget(region);
    if horizon < required {
        return Err(Error::BudgetTooSmall { required, got: horizon });
    }
    let (_, optimum) = brute_force_max(region)?;
    let explore = exploration_rounds(region, horizon);
    let f = oracle.valuation().clone();
    let mut segments: Vec<Segment> = Vec::new();
    let outcome = greedy_bandit_observed(oracle, region, explore, rng, &mut |x| {
        let v = f.value(x).finite().unwrap_or(f64::NEG_INFINITY);
        push_round(&mut segments, x, v, 1);
    })?;
    let committed = outcome.point;
    let value = f.value(&committed).finite().expect("greedy output is feasible");
    push_round(&mut segments, &committed, value, horizon - outcome.queries);
    Ok(RegretRecord { segments, optimum, exploration_rounds: outcome.queries, committed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// Greedy-bandit; regret is `f*(x*) - f*(x^{T+1})`.
    Simple,
    /// Explore-then-commit; regret is the cumulative pseudo-regret.
    Cumulative,
}

#[derive(Clone)]
pub struct RegretConfig {
    pub valuation: SharedValuation,
    pub budget: i64,
    pub rounds: u64,
    pub noise: NoiseModel,
    pub mode: RegretMode,
    /// Keep per-round traces for CSV output.
    pub traces: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub regret: f64,
    pub final_point: Point,
    #[serde(skip)]
    pub trace: Option<Vec<Segment>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretSummary {
    pub mode: RegretMode,
    pub rounds: u64,
    pub trials: u64,
    pub seed: u64,
    pub optimum: f64,
    pub mean: f64,
    pub std_err: f64,
    pub outcomes: Vec<TrialOutcome>,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One seeded trial; trial `i` uses the disjoint streams `(seed, i, ·)`.
pub fn run_trial(config: &RegretConfig, seed: u64, trial: u64, optimum: f64) -> Result<TrialOutcome> {
    let region = FeasibleRegion::new(config.valuation.clone(), config.budget)?;
    let mut oracle =
        NoisyOracle::with_rng(config.valuation.clone(), config.noise, stream(seed, trial, Purpose::Noise))?;
    let mut rec = stream(seed, trial, Purpose::Recommend);
    let f = config.valuation.clone();
    match config.mode {
        RegretMode::Simple => {
            let mut trace = config.traces.then(Vec::new);
            let out = greedy_bandit_observed(&mut oracle, &region, config.rounds, &mut rec, &mut |x| {
                if let Some(t) = trace.as_mut() {
                    push_round(t, x, f.value(x).finite().unwrap_or(f64::NEG_INFINITY), 1);
                }
            })?;
            let value = f.value(&out.point).finite().expect("greedy output is feasible");
            Ok(TrialOutcome { trial, regret: optimum - value, final_point: out.point, trace })
        }
        RegretMode::Cumulative => {
            let rec = etc_run(&mut oracle, &region, config.rounds, &mut rec)?;
            Ok(TrialOutcome {
                trial,
                regret: rec.cumulative_regret(),
                final_point: rec.committed.clone(),
                trace: config.traces.then_some(rec.segments),
            })
        }
    }
}

/// Monte-Carlo estimate of the expected simple or cumulative regret.
pub fn estimate_regret(config: &RegretConfig, trials: u64, seed: u64, exec: Exec) -> Result<RegretSummary> {
    if trials == 0 {
        return Err(Error::InvalidInstance("at least one trial required".into()));
    }
    check_unit_range(&config.valuation)?;
    let region = FeasibleRegion::new(config.valuation.clone(), config.budget)?;
    let (_, optimum) = brute_force_max(&region)?;
    let outcomes = map_indexed(exec, trials as usize, |i| run_trial(config, seed, i as u64, optimum))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let regrets: Vec<f64> = outcomes.iter().map(|o| o.regret).collect();
    let (mean, std_err) = mean_and_std_err(&regrets);
    Ok(RegretSummary { mode: config.mode, rounds: config.rounds, trials, seed, optimum, mean, std_err, outcomes })
}

pub const CSV_HEADER: &str = "trial,round,point,true_value,regret_so_far";

impl RegretSummary {
    /// Per-round traces: `trial,round,point,true_value,regret_so_far`, points
    /// as semicolon-joined integers.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for o in &self.outcomes {
            let Some(trace) = &o.trace else { continue };
            let mut round = 0u64;
            let mut regret = 0.0;
            for seg in trace {
                let point = seg.point.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(";");
                for _ in 0..seg.rounds {
                    round += 1;
                    regret += self.optimum - seg.value;
                    writeln!(w, "{},{},{},{},{}", o.trial, round, point, seg.value, regret)?;
                }
            }
        }
        Ok(())
    }
}
