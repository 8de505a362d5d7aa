//! Adversarial full-information setting built from three matroids.
//!
//! Every round the environment plays the distance valuation of one of three
//! matroids chosen uniformly at random. A point scores 1 under all three
//! exactly when it is a common base, so a no-regret learner for this sequence
//! would decide 3-matroid intersection.

use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::bandit::mean_and_std_err;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::greedy::greedy_exact;
use crate::lattice::{Point, Valuation};
use crate::matroid::{Matroid, MatroidSpec};
use crate::rng::{stream, Purpose, StreamRng};
use crate::valuations::{matroid_distance, MatroidDistance};

/// Largest ground set for which `{0,1}^V` is enumerated.
pub const MAX_EXPERT_GROUND_SET: usize = 16;

/// Three distance valuations on a common ground set and the realized choices.
#[derive(Clone, Debug)]
pub struct AdversarialSequence {
    pub valuations: [Arc<MatroidDistance>; 3],
    /// `choices[t]` in `0..3` selects the valuation of round `t`.
    pub choices: Vec<u8>,
}

impl AdversarialSequence {
    pub fn ground_size(&self) -> usize {
        self.valuations[0].matroid().ground_size()
    }

    pub fn rounds(&self) -> usize {
        self.choices.len()
    }

    pub fn at(&self, t: usize) -> &MatroidDistance {
        &self.valuations[self.choices[t] as usize]
    }

    /// How often each valuation was drawn.
    pub fn counts(&self) -> [u64; 3] {
        let mut c = [0; 3];
        for &k in &self.choices {
            c[k as usize] += 1;
        }
        c
    }

    /// `f_1(x) = f_2(x) = f_3(x) = 1`, decided on integer distances.
    pub fn is_common_base(&self, x: &Point) -> bool {
        self.valuations.iter().all(|f| f.matroid().is_base_point(x))
    }
}

pub fn distance_triple(matroids: [Arc<Matroid>; 3]) -> Result<[Arc<MatroidDistance>; 3]> {
    let n = matroids[0].ground_size();
    if let Some(m) = matroids.iter().find(|m| m.ground_size() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: m.ground_size() });
    }
    Ok(matroids.map(|m| Arc::new(matroid_distance(m))))
}

pub fn sample_sequence(matroids: [Arc<Matroid>; 3], rounds: usize, seed: u64) -> Result<AdversarialSequence> {
    let valuations = distance_triple(matroids)?;
    Ok(sample_with(valuations, rounds, &mut stream(seed, 0, Purpose::Sequence)))
}

pub fn sample_with<R: Rng + ?Sized>(
    valuations: [Arc<MatroidDistance>; 3],
    rounds: usize,
    rng: &mut R,
) -> AdversarialSequence {
    let choices = (0..rounds).map(|_| rng.random_range(0..3u8)).collect();
    AdversarialSequence { valuations, choices }
}

/// Full-information online learner: acts, then sees the round's valuation.
pub trait Learner: Send {
    fn act(&mut self, round: usize, rng: &mut StreamRng) -> Point;
    fn observe(&mut self, f: &dyn Valuation);
}

/// Exponential weights over every point of `{0,1}^V`.
#[derive(Clone, Debug)]
pub struct MwuLearner {
    n: usize,
    eta: f64,
    log_weights: Vec<f64>,
}

impl MwuLearner {
    /// `η = sqrt(8 ln(2^N) / T)`.
    pub fn new(n: usize, rounds: usize) -> Result<Self> {
        let eta = (8.0 * n as f64 * std::f64::consts::LN_2 / rounds.max(1) as f64).sqrt();
        Self::with_eta(n, eta)
    }

    pub fn with_eta(n: usize, eta: f64) -> Result<Self> {
        if n > MAX_EXPERT_GROUND_SET {
            return Err(Error::GroundSetTooLarge { n, limit: MAX_EXPERT_GROUND_SET });
        }
        Ok(MwuLearner { n, eta, log_weights: vec![0.0; 1 << n] })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Normalized sampling probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|&l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    }
}

impl Learner for MwuLearner {
    fn act(&mut self, _round: usize, rng: &mut StreamRng) -> Point {
        let p = self.probabilities();
        let mut u: f64 = rng.random();
        let mut pick = p.len() - 1;
        for (i, &pi) in p.iter().enumerate() {
            if u < pi {
                pick = i;
                break;
            }
            u -= pi;
        }
        Point::from_mask(pick as u64, self.n)
    }

    fn observe(&mut self, f: &dyn Valuation) {
        for (mask, lw) in self.log_weights.iter_mut().enumerate() {
            match f.value(&Point::from_mask(mask as u64, self.n)).finite() {
                Some(v) => *lw += self.eta * v,
                None => *lw = f64::NEG_INFINITY,
            }
        }
    }
}

/// Plays `0` first, then the exact greedy maximizer of the previous round's
/// valuation.
#[derive(Clone, Debug)]
pub struct PerRoundGreedyLearner {
    next: Point,
}

impl PerRoundGreedyLearner {
    pub fn new(n: usize) -> Self {
        PerRoundGreedyLearner { next: Point::zeros(n) }
    }
}

impl Learner for PerRoundGreedyLearner {
    fn act(&mut self, _round: usize, _rng: &mut StreamRng) -> Point {
        self.next.clone()
    }

    fn observe(&mut self, f: &dyn Valuation) {
        let budget = self.next.dim() as i64;
        if let Ok(traj) = greedy_exact(f, budget) {
            self.next = traj.final_point().clone();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Mwu,
    Greedy,
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mwu" => Ok(LearnerKind::Mwu),
            "greedy" => Ok(LearnerKind::Greedy),
            _ => Err(Error::InvalidInstance(format!("unknown learner {s:?}"))),
        }
    }
}

impl LearnerKind {
    pub fn build(self, n: usize, rounds: usize) -> Result<Box<dyn Learner>> {
        Ok(match self {
            LearnerKind::Mwu => Box::new(MwuLearner::new(n, rounds)?),
            LearnerKind::Greedy => Box::new(PerRoundGreedyLearner::new(n)),
        })
    }
}

/// Points played by `learner` against `seq`.
pub fn play(learner: &mut dyn Learner, seq: &AdversarialSequence, rng: &mut StreamRng) -> Vec<Point> {
    (0..seq.rounds())
        .map(|t| {
            let x = learner.act(t, rng);
            learner.observe(seq.at(t));
            x
        })
        .collect()
}

/// `f^t(x)` from the integer distance.
fn round_value(f: &MatroidDistance, x: &Point) -> f64 {
    let n = f.matroid().ground_size();
    let tau = f.tau(x).expect("learners play points of {0,1}^V");
    1.0 - tau as f64 / n as f64
}

/// `max_x Σ_t f^t(x)` by exhaustive scan, with a maximizing point.
pub fn comparator(seq: &AdversarialSequence) -> Result<(Point, f64)> {
    let n = seq.ground_size();
    if n > MAX_EXPERT_GROUND_SET {
        return Err(Error::GroundSetTooLarge { n, limit: MAX_EXPERT_GROUND_SET });
    }
    let counts = seq.counts();
    let mut best = (0u64, f64::NEG_INFINITY);
    for mask in 0..1u64 << n {
        let total: f64 =
            seq.valuations.iter().zip(counts).map(|(f, c)| c as f64 * (1.0 - f.tau_mask(mask) as f64 / n as f64)).sum();
        if total > best.1 {
            best = (mask, total);
        }
    }
    Ok((Point::from_mask(best.0, n), best.1))
}

/// `max_x Σ_t f^t(x) − Σ_t f^t(x^t)` for one realized run.
pub fn adversarial_regret(played: &[Point], seq: &AdversarialSequence) -> Result<f64> {
    let (_, best) = comparator(seq)?;
    let got: f64 = played.iter().enumerate().map(|(t, x)| round_value(seq.at(t), x)).sum();
    Ok(best - got)
}

/// Runs `learner` on a freshly sampled sequence; Yes iff it ever plays a
/// common base.
pub fn distinguisher(learner: &mut dyn Learner, matroids: [Arc<Matroid>; 3], rounds: usize, seed: u64) -> Result<bool> {
    let seq = sample_sequence(matroids, rounds, seed)?;
    let played = play(learner, &seq, &mut stream(seed, 0, Purpose::Learner));
    Ok(played.iter().any(|x| seq.is_common_base(x)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarialTrial {
    pub trial: u64,
    pub regret: f64,
    pub comparator: f64,
    pub distinguisher_yes: bool,
    #[serde(skip)]
    pub trace: Option<Vec<(Point, u8, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarialSummary {
    pub learner: LearnerKind,
    pub rounds: usize,
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_err: f64,
    pub yes_rate: f64,
    pub outcomes: Vec<AdversarialTrial>,
}

/// One seeded trial on streams `(seed, trial, ·)`.
pub fn run_trial(
    valuations: &[Arc<MatroidDistance>; 3],
    kind: LearnerKind,
    rounds: usize,
    seed: u64,
    trial: u64,
    traces: bool,
) -> Result<AdversarialTrial> {
    let seq = sample_with(valuations.clone(), rounds, &mut stream(seed, trial, Purpose::Sequence));
    let mut learner = kind.build(seq.ground_size(), rounds)?;
    let played = play(learner.as_mut(), &seq, &mut stream(seed, trial, Purpose::Learner));
    let (_, best) = comparator(&seq)?;
    let values: Vec<f64> = played.iter().enumerate().map(|(t, x)| round_value(seq.at(t), x)).collect();
    let yes = played.iter().any(|x| seq.is_common_base(x));
    let trace = traces.then(|| {
        played
            .into_iter()
            .zip(seq.choices.iter().copied())
            .zip(values.iter().copied())
            .map(|((x, c), v)| (x, c, v))
            .collect()
    });
    Ok(AdversarialTrial {
        trial,
        regret: best - values.iter().sum::<f64>(),
        comparator: best,
        distinguisher_yes: yes,
        trace,
    })
}

pub fn run_adversarial(
    matroids: [Arc<Matroid>; 3],
    kind: LearnerKind,
    rounds: usize,
    trials: u64,
    seed: u64,
    traces: bool,
    exec: Exec,
) -> Result<AdversarialSummary> {
    if trials == 0 {
        return Err(Error::InvalidInstance("at least one trial required".into()));
    }
    let valuations = distance_triple(matroids)?;
    let n = valuations[0].matroid().ground_size();
    if n > MAX_EXPERT_GROUND_SET {
        return Err(Error::GroundSetTooLarge { n, limit: MAX_EXPERT_GROUND_SET });
    }
    let outcomes = map_indexed(exec, trials as usize, |i| run_trial(&valuations, kind, rounds, seed, i as u64, traces))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let regrets: Vec<f64> = outcomes.iter().map(|o| o.regret).collect();
    let (mean, std_err) = mean_and_std_err(&regrets);
    let yes_rate = outcomes.iter().filter(|o| o.distinguisher_yes).count() as f64 / trials as f64;
    Ok(AdversarialSummary { learner: kind, rounds, trials, seed, mean, std_err, yes_rate, outcomes })
}

pub const CSV_HEADER: &str = "trial,round,point,matroid,value,value_so_far";

impl AdversarialSummary {
    /// Per-round traces; `matroid` is 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for o in &self.outcomes {
            let Some(trace) = &o.trace else { continue };
            let mut total = 0.0;
            for (t, (x, c, v)) in trace.iter().enumerate() {
                total += v;
                let point = x.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(";");
                writeln!(w, "{},{},{},{},{},{}", o.trial, t + 1, point, c + 1, v, total)?;
            }
        }
        Ok(())
    }
}

/// Shipped 3-matroid instances on five elements (labels 1-based).
pub mod fixtures {
    use super::*;

    /// Three partition matroids sharing the transversal `{1,3,5}`.
    pub fn common_base_triple() -> [MatroidSpec; 3] {
        let p = |blocks: &[&[usize]]| MatroidSpec::Partition {
            blocks: blocks.iter().map(|b| b.to_vec()).collect(),
            caps: vec![1; blocks.len()],
        };
        [p(&[&[1, 2], &[3, 4], &[5]]), p(&[&[1, 4], &[3], &[2, 5]]), p(&[&[1], &[2, 3], &[4, 5]])]
    }

    /// Two rank-3 partition matroids and `U(5,4)`: no common base by rank.
    pub fn no_common_base_triple() -> [MatroidSpec; 3] {
        [
            MatroidSpec::Partition { blocks: vec![vec![1, 2], vec![3, 4], vec![5]], caps: vec![1, 1, 1] },
            MatroidSpec::Partition { blocks: vec![vec![1, 2, 3], vec![4, 5]], caps: vec![2, 1] },
            MatroidSpec::Uniform { n: 5, r: 4 },
        ]
    }

    pub fn build(specs: &[MatroidSpec; 3]) -> Result<[Arc<Matroid>; 3]> {
        Ok([Arc::new(specs[0].build()?), Arc::new(specs[1].build()?), Arc::new(specs[2].build()?)])
    }
}
