//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cosched::fnn::{initial_weights, train};
use cosched::matcher::brute_force_matching;
use cosched::scheduler::{check_schedule, exhaustive_optimum, schedule, Schedule, SchedulerInput, SchedulingParams};
use cosched::simenv::workload::{complementary_pairs, profiles};
use cosched::simenv::{generate_dataset, generate_workload, run_policy, DatasetConfig, OracleParams, Policy, Split};
use cosched::space::enumerate_corun_configs;
use cosched::{min_weight_perfect_matching, ConfigSpace, LabeledSample, PairGraph, TrainingConfig, Weights64, INPUT_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Schedules emitted anywhere in the suite, for the constraint audit.
#[derive(Default)]
struct Emitted {
    schedules: Vec<(Schedule, usize, ConfigSpace)>,
}

/// First offender, if any, as a trailing note.
fn first(items: &[String]) -> String {
    items.first().map(|m| format!("; first: {m}")).unwrap_or_default()
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn matching_optimality() -> Verdict {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for n in [4, 6, 8] {
        for k in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000 * n as u64 + k);
            let g: PairGraph = PairGraph::from_fn(n, |_, _| (rng.random_range(0.0..=100.0), ())).unwrap();
            let blossom = min_weight_perfect_matching(&g).unwrap().total;
            let brute = brute_force_matching(&g).unwrap().best.total;
            if blossom != brute {
                mismatches.push(format!("n={n} graph {k}: {blossom} vs {brute}"));
            }
        }
    }
    let t = start.elapsed();
    verdict(
        mismatches.is_empty() && within(t, 10),
        format!("300 graphs, {} mismatches, {:.2?} (limit 10 s){}", mismatches.len(), t, first(&mismatches)),
    )
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    const STEP: f64 = 1e-5;
    let (mut checked, mut bad, mut worst) = (0usize, 0usize, 0.0f64);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = TrainingConfig {
            seed,
            ..Default::default()
        };
        let mut w: Weights64 = initial_weights(&cfg, vec![1.0; 36], 1.3);
        let batch: Vec<LabeledSample> = (0..4)
            .map(|_| LabeledSample {
                input: std::array::from_fn::<f64, INPUT_DIM, _>(|_| rng.random_range(0.0..1.0)),
                target: rng.random_range(1.0..2.0),
            })
            .collect();
        let (grads, loss) = w.backward(&batch).unwrap();
        if (loss - w.mse(&batch).unwrap()).abs() > 1e-12 {
            bad += 1;
        }
        let analytic: Vec<f64> = grads.param_slices().iter().flat_map(|s| s.iter().copied()).collect();
        let mut idx = 0;
        for slot in 0..6 {
            let len = w.param_slices_mut()[slot].len();
            for p in 0..len {
                let orig = w.param_slices_mut()[slot][p];
                w.param_slices_mut()[slot][p] = orig + STEP;
                let up = w.mse(&batch).unwrap();
                w.param_slices_mut()[slot][p] = orig - STEP;
                let down = w.mse(&batch).unwrap();
                w.param_slices_mut()[slot][p] = orig;
                let numeric = (up - down) / (2.0 * STEP);
                let a = analytic[idx];
                let gap = (a - numeric).abs();
                let scale = a.abs().max(numeric.abs());
                if gap > 1e-7 && gap > 1e-4 * scale {
                    bad += 1;
                }
                if scale > 0.0 {
                    worst = worst.max(gap / scale.max(1e-3));
                }
                idx += 1;
                checked += 1;
            }
        }
    }
    let t = start.elapsed();
    verdict(
        bad == 0 && within(t, 30),
        format!("{checked} parameters over 10 seeds, {bad} outside tolerance, worst scaled gap {worst:.2e}, {t:.2?} (limit 30 s)"),
    )
}

fn held_out_metrics(w: &Weights64, ds: &cosched::simenv::Dataset) -> (f64, f64, f64) {
    let (mut mse_noisy, mut mse_clean, mut mare, mut n) = (0.0, 0.0, 0.0, 0usize);
    for row in ds.rows.iter().filter(|r| r.split == Split::Test) {
        let p = w.forward(&row.input).unwrap();
        mse_noisy += (p - row.target).powi(2);
        mse_clean += (p - row.clean_target).powi(2);
        mare += (p - row.clean_target).abs() / row.clean_target;
        n += 1;
    }
    let n = n as f64;
    (mse_noisy / n, mse_clean / n, mare / n)
}

fn learnability() -> Verdict {
    let start = Instant::now();
    let space = ConfigSpace::with_budget(400);
    let cfg = DatasetConfig {
        include_solo: false,
        ..Default::default()
    };
    let fit = |oracle: &OracleParams| {
        let ds = generate_dataset(oracle, &cfg, &space).unwrap();
        let samples = ds.samples(Split::Train);
        let w = train(&samples, &TrainingConfig::default(), ds.bounds.clone()).unwrap().weights;
        (samples.len(), held_out_metrics(&w, &ds), ds.noise_floor(Split::Test))
    };
    let (n_clean, (_, mse, mare), _) = fit(&OracleParams::default().noiseless());
    let (n_noisy, (mse_noisy, _, _), floor) = fit(&OracleParams::default());
    let t = start.elapsed();
    let clean_ok = n_clean == 2400 && mse <= 0.01 && mare <= 0.05;
    let noisy_ok = n_noisy == 2400 && mse_noisy <= 2.0 * floor;
    verdict(
        clean_ok && noisy_ok && within(t, 300),
        format!(
            "sigma=0: {n_clean} train points, test mse {mse:.4} (<= 0.01), mare {:.2}% (<= 5%) [{}]; \
             sigma=0.03: test mse {mse_noisy:.4} vs 2x floor {:.4} (ratio {:.2}) [{}]; {t:.2?} (limit 5 min)",
            100.0 * mare,
            if clean_ok { "ok" } else { "fail" },
            2.0 * floor,
            mse_noisy / floor,
            if noisy_ok { "ok" } else { "fail" },
        ),
    )
}

fn scheduler_optimality(emitted: &mut Emitted) -> Verdict {
    let start = Instant::now();
    let oracle = OracleParams::default().noiseless();
    let mut misses = Vec::new();
    for w in [6, 8] {
        for seed in 0..50u64 {
            let space = ConfigSpace::with_budget(if seed % 2 == 0 { 350 } else { 400 });
            let queue = profiles(&generate_workload(w, seed).unwrap());
            let input = SchedulerInput {
                queue: &queue,
                space: &space,
                params: SchedulingParams::pairs(w),
                model: &oracle,
            };
            let s = schedule(&input).unwrap();
            let best = exhaustive_optimum(&input).unwrap();
            if s.total_predicted != best {
                misses.push(format!("W={w} seed {seed}: {} vs {best}", s.total_predicted));
            }
            emitted.schedules.push((s, w, space));
        }
    }
    let t = start.elapsed();
    verdict(
        misses.is_empty() && within(t, 120),
        format!("100 workloads, {} differ from the exhaustive optimum, {t:.2?} (limit 2 min){}", misses.len(), first(&misses)),
    )
}

fn enumeration_count() -> Verdict {
    let at = |p| enumerate_corun_configs(&ConfigSpace::with_budget(p)).len();
    let (c400, c350) = (at(400), at(350));
    verdict(
        c400 == 100 && c350 == 60,
        format!("{c400} configs at 400 W (want 100), {c350} at 350 W (want 60)"),
    )
}

fn policy_ordering(emitted: &mut Emitted) -> Verdict {
    let space = ConfigSpace::with_budget(400);
    let oracle = OracleParams::default();
    let ds = generate_dataset(&oracle, &DatasetConfig::default(), &space).unwrap();
    let model = train(&ds.samples(Split::Train), &TrainingConfig::default(), ds.bounds.clone())
        .unwrap()
        .weights;
    let measure = oracle.noiseless();
    let (mut bad, mut min_gain, mut sums) = (Vec::new(), f64::INFINITY, [0.0f64; 3]);
    for seed in 0..20u64 {
        let specs = generate_workload(8, seed).unwrap();
        let queue = profiles(&specs);
        let total = |p| run_policy(p, &queue, &space, &model, &measure).unwrap().total_measured;
        let (naive, opt, co) = (total(Policy::NaiveTimeshare), total(Policy::OptTimeshare), total(Policy::Coschedule));
        sums[0] += naive;
        sums[1] += opt;
        sums[2] += co;
        let gain = (naive - co) / naive;
        let needs_gain = complementary_pairs(&specs) >= 2;
        if needs_gain {
            min_gain = min_gain.min(gain);
        }
        if !(co <= opt && opt <= naive) || (needs_gain && gain < 0.10) {
            bad.push(format!("seed {seed}: naive {naive:.1}, opt {opt:.1}, co {co:.1}"));
        }
        let input = SchedulerInput {
            queue: &queue,
            space: &space,
            params: SchedulingParams::pairs(8),
            model: &model,
        };
        emitted.schedules.push((schedule(&input).unwrap(), 8, space.clone()));
    }
    verdict(
        bad.is_empty(),
        format!(
            "20 workloads with the trained model, {} violate the ordering or the 10% gain; \
             suite totals naive {:.0} s, opt {:.0} s, coschedule {:.0} s; smallest gain {:.1}%{}",
            bad.len(),
            sums[0],
            sums[1],
            sums[2],
            100.0 * min_gain,
            first(&bad),
        ),
    )
}

fn constraint_satisfaction(emitted: &mut Emitted, cli_root: &Path) -> Verdict {
    for dir in ["sched", "sched-oracle"] {
        let text = fs::read_to_string(cli_root.join(dir).join("schedule.json")).unwrap();
        let s: Schedule = serde_json::from_str(&text).unwrap();
        let n = s.sets.iter().map(|set| set.jobs.len()).sum();
        emitted.schedules.push((s, n, ConfigSpace::with_budget(400)));
    }
    let (total, mut violations) = (emitted.schedules.len(), Vec::new());
    for (s, n, space) in &emitted.schedules {
        if let Err(e) = check_schedule(s, *n, space) {
            violations.push(e.to_string());
        }
    }
    verdict(
        violations.is_empty() && total > 0,
        format!("{total} schedules audited, {} violations{}", violations.len(), first(&violations)),
    )
}

fn cosched(root: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_cosched"))
        .current_dir(root)
        .env_remove("COSCHED_OUT_DIR")
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "cosched {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Runs every command once in `root`, using relative paths so runs in different roots agree.
fn cli_session(root: &Path, threads: &str) {
    let steps: [&[&str]; 9] = [
        &["defaults", "--out", "defaults"],
        &["gen-data", "defaults/space.json", "defaults/oracle.json", "--seed", "3", "--out", "data"],
        &["gen-workload", "--size", "8", "--seed", "5", "--out", "workload"],
        &["train", "data", "--epochs", "25", "--seed", "1", "--out", "model"],
        &["schedule", "model/weights.json", "workload/workload.json", "defaults/space.json", "--out", "sched"],
        &[
            "schedule",
            "model/weights.json",
            "workload/workload.json",
            "defaults/space.json",
            "--oracle-as-model",
            "defaults/oracle.json",
            "--out",
            "sched-oracle",
        ],
        &["compare", "model/weights.json", "workload/workload.json", "defaults/space.json", "defaults/oracle.json", "--out", "compare"],
        &["eval-model", "model/weights.json", "data", "--out", "eval"],
        &["eval-model", "model/weights.json", "data", "--oracle-as-model", "defaults/oracle.json", "--split", "train", "--out", "eval-oracle"],
    ];
    for args in steps {
        let mut full = vec!["--jobs", threads];
        full.extend_from_slice(args);
        cosched(root, &full);
    }
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn determinism(a: &Path, b: &Path) -> Verdict {
    let (ta, tb) = (tree(a), tree(b));
    let differing: Vec<_> = ta
        .keys()
        .chain(tb.keys())
        .filter(|k| ta.get(*k) != tb.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    let manifests = ta.keys().filter(|k| k.ends_with("manifest.json")).count();
    verdict(
        differing.is_empty() && manifests == 9,
        format!(
            "9 commands run twice (default threads vs 2), {} files compared, {manifests} manifests, {} differ{}",
            ta.len(),
            differing.len(),
            first(&differing)
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let (run_a, run_b) = (tmp.path().join("a"), tmp.path().join("b"));
    fs::create_dir_all(&run_a).unwrap();
    fs::create_dir_all(&run_b).unwrap();
    cli_session(&run_a, "0");
    cli_session(&run_b, "2");

    let mut emitted = Emitted::default();
    let results = [
        ("matching optimality", matching_optimality()),
        ("gradient correctness", gradient_check()),
        ("model learnability", learnability()),
        ("scheduler optimality under exact estimates", scheduler_optimality(&mut emitted)),
        ("enumeration count", enumeration_count()),
        ("policy ordering", policy_ordering(&mut emitted)),
        ("constraint satisfaction", constraint_satisfaction(&mut emitted, &run_a)),
        ("determinism", determinism(&run_a, &run_b)),
    ];

    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "acceptance: {tag} {name}: {}", v.detail).unwrap();
        failed += usize::from(!v.pass);
    }
    writeln!(out, "acceptance: {} of {} criteria pass", results.len() - failed, results.len()).unwrap();
    out.flush().unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
