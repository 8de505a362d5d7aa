//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use mnat_core::adversarial::{distinguisher, run_adversarial, LearnerKind, MwuLearner, PerRoundGreedyLearner};
use mnat_core::bandit::{estimate_regret, moss_recommend, moss_run, NoiseModel, RegretConfig, RegretMode};
use mnat_core::greedy::{greedy_exact, greedy_with_selector, Auditor, RandomSelector, StaySelector, WorstSelector};
use mnat_core::matroid::{Matroid, MatroidSpec};
use mnat_core::mchecker::{brute_force_max, check_exchange, check_prop_ab};
use mnat_core::rng::StreamRng;
use mnat_core::valuations::{
    matroid_distance, random_matroid, random_oxs, random_separable, InstanceDoc, TableValuation,
};
use mnat_core::{Exec, FeasibleRegion, SharedValuation, Valuation, Value};

const SEED: u64 = 2026;
const TOL: f64 = 1e-9;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn instance(name: &str) -> SharedValuation {
    let text = fs::read_to_string(fixtures().join("instances").join(name)).expect("fixture exists");
    InstanceDoc::from_json(&text).and_then(|d| d.build()).expect("fixture parses")
}

fn matroid(name: &str) -> Arc<Matroid> {
    let text = fs::read_to_string(fixtures().join("matroids").join(name)).expect("fixture exists");
    let spec: MatroidSpec = serde_json::from_str(&text).expect("fixture parses");
    Arc::new(spec.build().expect("fixture builds"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn concavity() -> Check {
    let names = [
        "separable.json",
        "bandit_separable.json",
        "oxs.json",
        "oxs_uncapacitated.json",
        "matroid_distance.json",
        "matroid_distance_uniform.json",
    ];
    let mut pairs = 0;
    for name in names {
        let f = instance(name);
        ensure(f.dim() <= 4, || format!("{name}: N = {}", f.dim()))?;
        ensure(f.bounds().hi.coords().iter().all(|&h| h <= 2), || format!("{name}: box exceeds {{0,1,2}}^V"))?;
        let ex = check_exchange(&*f).map_err(|e| e.to_string())?;
        let ab = check_prop_ab(&*f).map_err(|e| e.to_string())?;
        ensure(ex.pass && ab.pass, || format!("{name}: witness {:?} {:?}", ex.witness, ab.witness))?;
        pairs += ex.pairs_checked;
    }
    let neg = check_exchange(&*instance("supermodular.json")).map_err(|e| e.to_string())?;
    ensure(!neg.pass && neg.witness.is_some(), || "supermodular fixture passed".into())?;
    Ok(format!("{} instances, {pairs} pairs; supermodular witness {:?}", names.len(), neg.witness.unwrap()))
}

/// Random small instances from each family, indexed deterministically.
fn random_instance(rng: &mut StreamRng, i: usize) -> (SharedValuation, i64) {
    let n = rng.random_range(1..=4);
    let k = rng.random_range(1..=4);
    match i % 3 {
        0 => {
            let hi = rng.random_range(1..=2);
            (Arc::new(random_separable(rng, n, hi, k)), k)
        }
        1 => {
            let (right, hi, capacitated) = (rng.random_range(1..=3), rng.random_range(1..=2), rng.random_bool(0.5));
            (Arc::new(random_oxs(rng, n, right, hi, capacitated)), k)
        }
        _ => (Arc::new(matroid_distance(Arc::new(random_matroid(rng, n)))), k),
    }
}

fn greedy_exactness() -> Check {
    let mut rng = StreamRng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let (f, k) = random_instance(&mut rng, i);
        ensure(check_exchange(&*f).map_err(|e| e.to_string())?.pass, || format!("instance {i} fails exchange"))?;
        let region = FeasibleRegion::new(f.clone(), k).map_err(|e| e.to_string())?;
        let (_, best) = brute_force_max(&region).map_err(|e| e.to_string())?;
        let traj = greedy_exact(&*f, k).map_err(|e| e.to_string())?;
        let got = f.value(traj.final_point()).finite().ok_or("greedy left the domain")?;
        worst = worst.max(best - got);
        ensure((best - got).abs() <= TOL, || format!("instance {i}: greedy {got} vs optimum {best}"))?;
    }
    Ok(format!("200 instances, max gap {worst:.2e}"))
}

fn robustness_audit() -> Check {
    let mut rng = StreamRng::seed_from_u64(SEED + 1);
    let mut min_slack = f64::INFINITY;
    let mut trajectories = 0;
    for i in 0..50 {
        let (f, k) = random_instance(&mut rng, i);
        let auditor =
            Auditor::new(FeasibleRegion::new(f.clone(), k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for s in 0..1000u64 {
            let traj = match s {
                0 => greedy_with_selector(&*f, k, &mut WorstSelector),
                1 => greedy_with_selector(&*f, k, &mut StaySelector),
                _ => greedy_with_selector(&*f, k, &mut RandomSelector::seeded(SEED ^ (i as u64) << 20 ^ s)),
            }
            .map_err(|e| e.to_string())?;
            let audit = auditor.audit(&traj).map_err(|e| e.to_string())?;
            ensure(audit.holds, || format!("instance {i}, selector {s}: {audit:?}"))?;
            for step in audit.step_slacks.iter().flatten() {
                ensure(*step >= -TOL, || format!("instance {i}, selector {s}: step slack {step}"))?;
            }
            if let Some(sl) = audit.slack {
                min_slack = min_slack.min(sl);
            }
            trajectories += 1;
        }
    }
    let control: SharedValuation = Arc::new(TableValuation::supermodular_pair());
    let region = FeasibleRegion::new(control.clone(), 2).map_err(|e| e.to_string())?;
    let auditor = Auditor::new(region).map_err(|e| e.to_string())?;
    let traj = greedy_with_selector(&*control, 2, &mut StaySelector).map_err(|e| e.to_string())?;
    let audit = auditor.audit(&traj).map_err(|e| e.to_string())?;
    ensure(!audit.holds, || "supermodular control produced no violation".into())?;
    Ok(format!("{trajectories} trajectories, min slack {min_slack:.3e}; control slack {:?}", audit.slack))
}

fn moss_regret() -> Check {
    let (arms, horizon, trials) = (5usize, 10_000u64, 200u64);
    let means = [0.5, 0.4, 0.4, 0.4, 0.4];
    let mut regrets = Vec::new();
    let mut rec_gap = 0.0;
    for t in 0..trials {
        let mut noise = StreamRng::seed_from_u64(SEED + t);
        let h = moss_run(arms, horizon, |i| means[i] + noise.sample::<f64, _>(StandardNormal))
            .map_err(|e| e.to_string())?;
        regrets.push(h.counts.iter().zip(means).map(|(&c, m)| c as f64 * (0.5 - m)).sum::<f64>());
        rec_gap += 0.5 - means[moss_recommend(&h, &mut noise)];
    }
    let mean = regrets.iter().sum::<f64>() / trials as f64;
    let rec_gap = rec_gap / trials as f64;
    let bound = 39.0 * ((arms as u64 * horizon) as f64).sqrt() + arms as f64;
    let simple_bound = 40.0 * (arms as f64 / horizon as f64).sqrt();
    ensure(mean <= bound, || format!("mean regret {mean} > {bound}"))?;
    ensure(rec_gap <= simple_bound, || format!("recommendation gap {rec_gap} > {simple_bound}"))?;
    Ok(format!("mean regret {mean:.1} <= {bound:.0}; recommendation gap {rec_gap:.4} <= {simple_bound:.3}"))
}

const GRID: [u64; 3] = [10_000, 40_000, 160_000];

fn regret_grid(mode: RegretMode) -> Result<Vec<f64>, String> {
    let f = instance("bandit_separable.json");
    GRID.iter()
        .map(|&t| {
            let config = RegretConfig {
                valuation: f.clone(),
                budget: 2,
                rounds: t,
                noise: NoiseModel::Gaussian { sigma: 1.0 },
                mode,
                traces: false,
            };
            estimate_regret(&config, 100, SEED, Exec::default()).map(|s| s.mean).map_err(|e| e.to_string())
        })
        .collect()
}

fn simple_regret_rate() -> Check {
    let means = regret_grid(RegretMode::Simple)?;
    let ts: Vec<f64> = GRID.iter().map(|&t| t as f64).collect();
    let s = slope(&ts, &means);
    ensure(means.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {means:?}"))?;
    ensure((-0.7..=-0.3).contains(&s), || format!("slope {s:.3} outside [-0.7, -0.3]; means {means:?}"))?;
    Ok(format!("means {means:.4?}, slope {s:.3}"))
}

fn cumulative_regret_rate() -> Check {
    let means = regret_grid(RegretMode::Cumulative)?;
    let ts: Vec<f64> = GRID.iter().map(|&t| t as f64).collect();
    let s = slope(&ts, &means);
    let per_round: Vec<f64> = means.iter().zip(&ts).map(|(r, t)| r / t).collect();
    ensure(per_round.windows(2).all(|w| w[1] < w[0]), || format!("Reg/T not decreasing: {per_round:?}"))?;
    ensure((0.55..=0.8).contains(&s), || format!("slope {s:.3} outside [0.55, 0.8]; means {means:?}"))?;
    Ok(format!("means {means:.1?}, slope {s:.3}"))
}

fn distance_construction() -> Check {
    let dir = fixtures().join("matroids");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in &names {
        let m = matroid(name);
        let n = m.ground_size();
        ensure(n <= 5, || format!("{name}: N = {n}"))?;
        let f = matroid_distance(m.clone());
        for mask in 0..1u64 << n {
            let x = mnat_core::Point::from_mask(mask, n);
            let tau = f.tau(&x).ok_or("point outside hypercube")?;
            let v = f.value(&x);
            if m.is_base(mask) {
                ensure(tau == 0 && v == Value::Finite(1.0), || format!("{name}: base {x} has τ={tau}"))?;
            } else {
                ensure(tau >= 1, || format!("{name}: non-base {x} has τ=0"))?;
                ensure(v <= Value::Finite(1.0 - 1.0 / n as f64), || format!("{name}: {x} value {v:?}"))?;
            }
        }
        ensure(check_exchange(&f).map_err(|e| e.to_string())?.pass, || format!("{name}: exchange fails"))?;
    }
    Ok(format!("{} matroids", names.len()))
}

fn hardness_shadow() -> Check {
    let (rounds, seeds) = (3000usize, 50u64);
    let common = [matroid("common_1.json"), matroid("common_2.json"), matroid("common_3.json")];
    let disjoint = [matroid("disjoint_1.json"), matroid("disjoint_2.json"), matroid("disjoint_3.json")];
    let n = disjoint[0].ground_size() as f64;
    let greedy = run_adversarial(disjoint.clone(), LearnerKind::Greedy, rounds, seeds, SEED, false, Exec::default())
        .map_err(|e| e.to_string())?;
    let floor = rounds as f64 / (6.0 * n);
    ensure(greedy.mean >= floor, || format!("greedy regret {} < {floor}", greedy.mean))?;
    let mwu = run_adversarial(common.clone(), LearnerKind::Mwu, rounds, seeds, SEED, false, Exec::default())
        .map_err(|e| e.to_string())?;
    let n_common = common[0].ground_size() as f64;
    let ceiling = 2.0 * (rounds as f64 * n_common * std::f64::consts::LN_2).sqrt();
    ensure(mwu.mean <= ceiling, || format!("MWU regret {} > {ceiling}", mwu.mean))?;
    let mut yes = 0;
    for seed in 0..seeds {
        let mut learner = MwuLearner::new(common[0].ground_size(), rounds).map_err(|e| e.to_string())?;
        yes += distinguisher(&mut learner, common.clone(), rounds, SEED + seed).map_err(|e| e.to_string())? as u32;
        let mut mwu_no = MwuLearner::new(disjoint[0].ground_size(), rounds).map_err(|e| e.to_string())?;
        let mut greedy_no = PerRoundGreedyLearner::new(disjoint[0].ground_size());
        for learner in [&mut mwu_no as &mut dyn mnat_core::adversarial::Learner, &mut greedy_no] {
            ensure(!distinguisher(learner, disjoint.clone(), rounds, SEED + seed).map_err(|e| e.to_string())?, || {
                format!("Yes on the no-common-base triple, seed {seed}")
            })?;
        }
    }
    let rate = yes as f64 / seeds as f64;
    ensure(rate >= 0.95, || format!("distinguisher Yes rate {rate}"))?;
    Ok(format!(
        "greedy regret {:.1} >= {floor:.1}; MWU regret {:.1} <= {ceiling:.1}; Yes rate {rate:.2}; no false Yes",
        greedy.mean, mwu.mean
    ))
}

fn cli_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_mnat");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let inst = fixtures().join("instances/bandit_separable.json");
    let m = fixtures().join("matroids");
    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "simple-regret",
            vec![
                "--instance".into(),
                inst.display().to_string(),
                "--budget".into(),
                "2".into(),
                "--rounds".into(),
                "2000".into(),
                "--trials".into(),
                "10".into(),
                "--seed".into(),
                "7".into(),
            ],
        ),
        (
            "cum-regret",
            vec![
                "--instance".into(),
                inst.display().to_string(),
                "--budget".into(),
                "2".into(),
                "--rounds".into(),
                "3000".into(),
                "--trials".into(),
                "8".into(),
                "--seed".into(),
                "7".into(),
                "--noise".into(),
                "uniform".into(),
            ],
        ),
        (
            "adversarial",
            vec![
                "--m1".into(),
                m.join("common_1.json").display().to_string(),
                "--m2".into(),
                m.join("common_2.json").display().to_string(),
                "--m3".into(),
                m.join("common_3.json").display().to_string(),
                "--learner".into(),
                "mwu".into(),
                "--rounds".into(),
                "300".into(),
                "--trials".into(),
                "6".into(),
                "--seed".into(),
                "7".into(),
            ],
        ),
    ];
    let mut bytes = 0;
    for (sub, args) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{sub}-{rep}.csv"));
            let status = Command::new(bin)
                .arg(sub)
                .args(args)
                .arg("--out")
                .arg(&out)
                .env("MNAT_THREADS", if rep == 0 { "1" } else { "2" })
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), || format!("{sub} exited with {:?}", status.status.code()))?;
            outputs.push(fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1], || format!("{sub}: CSV differs between runs"))?;
        bytes += outputs[0].len();
    }
    Ok(format!("{} subcommands, {bytes} CSV bytes identical across repeats", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "concavity verification", Duration::from_secs(60), concavity),
        (2, "greedy exactness", Duration::from_secs(60), greedy_exactness),
        (3, "robustness audit", Duration::from_secs(300), robustness_audit),
        (4, "MOSS regret", Duration::from_secs(120), moss_regret),
        (5, "simple-regret rate", Duration::from_secs(600), simple_regret_rate),
        (6, "cumulative-regret rate", Duration::from_secs(900), cumulative_regret_rate),
        (7, "matroid distance construction", Duration::from_secs(60), distance_construction),
        (8, "adversarial behavior", Duration::from_secs(600), hardness_shadow),
        (9, "CLI determinism", Duration::MAX, cli_determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.1?} > {limit:?}")),
            r => r,
        };
        match result {
            Ok(detail) => println!("PASS [{id}] {name} ({elapsed:.1?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name} ({elapsed:.1?}): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
