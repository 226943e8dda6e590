//! Labelled training corpus from the oracle.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnn::LabeledSample;
use crate::profile::{corpus_bounds, normalize_input, JobProfile, INPUT_DIM};
use crate::space::{enumerate_budget_configs, enumerate_solo_splits, ConfigSpace, HardwareConfig, DEFAULT_BUDGETS};

use super::oracle::{noisy, oracle_slowdown, OracleParams};
use super::workload::{generate_job, Archetype, SyntheticJobSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub n_jobs: usize,
    pub n_pairs: usize,
    pub test_pairs: usize,
    /// Cap sums labelled for every pair.
    pub budgets: Vec<u32>,
    /// Also label the training jobs alone at each exact-budget split and at full caps.
    pub include_solo: bool,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_jobs: 8,
            n_pairs: 16,
            test_pairs: 4,
            budgets: DEFAULT_BUDGETS.to_vec(),
            include_solo: true,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("dataset: {m}")));
        let available = self.n_jobs * self.n_jobs.saturating_sub(1) / 2;
        if self.n_pairs == 0 {
            return bad("at least one pair is required".into());
        }
        if self.n_pairs > available {
            return bad(format!("{} jobs give only {available} pairs, {} requested", self.n_jobs, self.n_pairs));
        }
        if self.test_pairs >= self.n_pairs {
            return bad(format!("{} test pairs leave no training pairs", self.test_pairs));
        }
        if self.budgets.is_empty() {
            return bad("no budgets".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub input: [f64; INPUT_DIM],
    pub target: f64,
    /// Noiseless label; kept in memory only.
    pub clean_target: f64,
    pub pair_id: String,
    pub split: Split,
}

impl DatasetRow {
    pub fn sample(&self) -> LabeledSample {
        LabeledSample {
            input: self.input,
            target: self.target,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub jobs: Vec<SyntheticJobSpec>,
    pub bounds: Vec<f64>,
    pub rows: Vec<DatasetRow>,
    pub train_pairs: Vec<(usize, usize)>,
    pub test_pairs: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn samples(&self, split: Split) -> Vec<LabeledSample> {
        self.rows.iter().filter(|r| r.split == split).map(DatasetRow::sample).collect()
    }

    /// Mean squared deviation of noisy from clean labels in `split`.
    pub fn noise_floor(&self, split: Split) -> f64 {
        let rows: Vec<_> = self.rows.iter().filter(|r| r.split == split).collect();
        rows.iter().map(|r| (r.target - r.clean_target).powi(2)).sum::<f64>() / rows.len().max(1) as f64
    }
}

pub fn pair_id(a: &JobProfile, b: &JobProfile) -> String {
    format!("{}+{}", a.job_id, b.job_id)
}

const SPLIT_ATTEMPTS: usize = 1000;

/// Chooses `n_pairs` distinct pairs and splits them so that every test pair's jobs and
/// archetype combination also occur among the training pairs, when such a draw exists.
fn choose_pairs(cfg: &DatasetConfig, kinds: &[Archetype], rng: &mut ChaCha8Rng) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let n = cfg.n_jobs;
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let combo = |(a, b): (usize, usize)| {
        let (x, y) = (kinds[a], kinds[b]);
        if x <= y {
            (x, y)
        } else {
            (y, x)
        }
    };
    let n_train = cfg.n_pairs - cfg.test_pairs;
    for _ in 0..SPLIT_ATTEMPTS {
        all.shuffle(rng);
        let (train, test) = all[..cfg.n_pairs].split_at(n_train);
        let jobs: BTreeSet<usize> = train.iter().flat_map(|&(a, b)| [a, b]).collect();
        let combos: BTreeSet<_> = train.iter().map(|&p| combo(p)).collect();
        if test.iter().all(|&(a, b)| jobs.contains(&a) && jobs.contains(&b) && combos.contains(&combo((a, b)))) {
            return (train.to_vec(), test.to_vec());
        }
    }
    let (train, test) = all[..cfg.n_pairs].split_at(n_train);
    (train.to_vec(), test.to_vec())
}

/// Generates jobs, labels every chosen pair over the budget grid in both orderings, and
/// optionally labels the training jobs alone. Deterministic in `cfg.seed` and `params.seed`.
pub fn generate_dataset(params: &OracleParams, cfg: &DatasetConfig, space: &ConfigSpace) -> Result<Dataset> {
    cfg.validate()?;
    space.validate()?;
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jobs: Vec<SyntheticJobSpec> = (0..cfg.n_jobs)
        .map(|i| {
            let archetype = Archetype::ALL[i % 4];
            SyntheticJobSpec {
                archetype,
                profile: generate_job(archetype, format!("j{i}"), &mut rng),
            }
        })
        .collect();
    let kinds: Vec<Archetype> = jobs.iter().map(|s| s.archetype).collect();
    let (train_pairs, test_pairs) = choose_pairs(cfg, &kinds, &mut rng);
    let profiles: Vec<&JobProfile> = jobs.iter().map(|s| &s.profile).collect();
    let bounds = corpus_bounds(profiles.iter().copied());

    // Separate stream so a shared seed does not correlate noise with the job draws.
    let mut noise_rng = ChaCha8Rng::seed_from_u64(params.seed);
    noise_rng.set_stream(1);
    let mut rows = Vec::new();
    let mut label = |primary: &JobProfile, co: Option<&JobProfile>, hc: &HardwareConfig, id: &str, split| -> Result<()> {
        let clean = oracle_slowdown(params, primary, co, hc, space)?;
        rows.push(DatasetRow {
            input: normalize_input(primary, co, hc, space, &bounds)?,
            target: noisy(clean, params.noise_sigma, &mut noise_rng),
            clean_target: clean,
            pair_id: id.to_owned(),
            split,
        });
        Ok(())
    };

    let grid = enumerate_budget_configs(space, &cfg.budgets);
    for (pairs, split) in [(&train_pairs, Split::Train), (&test_pairs, Split::Test)] {
        for &(a, b) in pairs {
            let (ja, jb) = (profiles[a], profiles[b]);
            let id = pair_id(ja, jb);
            for hc in &grid {
                label(ja, Some(jb), hc, &id, split)?;
                label(jb, Some(ja), &hc.mirrored(), &id, split)?;
            }
        }
    }
    if cfg.include_solo {
        let mut caps: Vec<(u32, u32)> = Vec::new();
        for &budget in &cfg.budgets {
            caps.extend(enumerate_solo_splits(&space.clone_with_budget(budget)));
        }
        let full = (space.max_cpu_cap(), space.max_gpu_cap());
        if !caps.contains(&full) {
            caps.push(full);
        }
        let train_jobs: BTreeSet<usize> = train_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        for j in train_jobs {
            let id = format!("solo:{}", profiles[j].job_id);
            for &(c, g) in &caps {
                label(profiles[j], None, &HardwareConfig::solo(c, g), &id, Split::Train)?;
            }
        }
    }

    Ok(Dataset {
        jobs,
        bounds,
        rows,
        train_pairs,
        test_pairs,
    })
}

fn column_names() -> Vec<String> {
    let mut cols: Vec<String> = (0..INPUT_DIM).map(|k| format!("x{k:02}")).collect();
    cols.extend(["target", "pair_id", "split"].map(String::from));
    cols
}

/// CSV with columns `x00..x39, target, pair_id, split`.
pub fn write_dataset_csv<W: Write>(rows: &[DatasetRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(column_names())?;
    for r in rows {
        let mut rec: Vec<String> = r.input.iter().map(|v| v.to_string()).collect();
        rec.push(r.target.to_string());
        rec.push(r.pair_id.clone());
        rec.push(r.split.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows back; `clean_target` is set to `target`. Errors name the 1-based file line.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<DatasetRow>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != column_names() {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header x00..x{:02},target,pair_id,split", INPUT_DIM - 1),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fail = |reason: String| Error::Parse { line, reason };
        if rec.len() != INPUT_DIM + 3 {
            return Err(fail(format!("expected {} fields, got {}", INPUT_DIM + 3, rec.len())));
        }
        let num = |k: usize| -> Result<f64> {
            let v: f64 = rec[k].trim().parse().map_err(|e| fail(format!("column {k}: {e}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(fail(format!("column {k} is not finite")))
            }
        };
        let mut input = [0.0; INPUT_DIM];
        for (k, slot) in input.iter_mut().enumerate() {
            *slot = num(k)?;
        }
        let target = num(INPUT_DIM)?;
        let split = rec[INPUT_DIM + 2].parse().map_err(|e: Error| fail(e.to_string()))?;
        rows.push(DatasetRow {
            input,
            target,
            clean_target: target,
            pair_id: rec[INPUT_DIM + 1].to_owned(),
            split,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetConfig {
        DatasetConfig {
            include_solo: false,
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn default_counts() {
        let space = ConfigSpace::with_budget(400);
        let d = generate_dataset(&OracleParams::default(), &small(), &space).unwrap();
        assert_eq!(d.rows.len(), 3200);
        assert_eq!(d.samples(Split::Train).len(), 2400);
        assert_eq!(d.samples(Split::Test).len(), 800);
        assert_eq!((d.train_pairs.len(), d.test_pairs.len()), (12, 4));
        let full = generate_dataset(&OracleParams::default(), &DatasetConfig::default(), &space).unwrap();
        assert!(full.samples(Split::Train).len() > 2400);
        assert_eq!(full.samples(Split::Test).len(), 800);
    }

    #[test]
    fn no_pair_leaks_across_splits() {
        let space = ConfigSpace::with_budget(400);
        for seed in 0..5 {
            let cfg = DatasetConfig { seed, ..DatasetConfig::default() };
            let d = generate_dataset(&OracleParams::default(), &cfg, &space).unwrap();
            let ids = |s| d.rows.iter().filter(|r| r.split == s).map(|r| r.pair_id.clone()).collect::<BTreeSet<_>>();
            assert!(ids(Split::Train).is_disjoint(&ids(Split::Test)));
            let train_jobs: BTreeSet<usize> = d.train_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            assert!(d.test_pairs.iter().all(|(a, b)| train_jobs.contains(a) && train_jobs.contains(b)));
        }
    }

    #[test]
    fn zero_sigma_labels_equal_oracle() {
        let space = ConfigSpace::with_budget(400);
        let d = generate_dataset(&OracleParams::default().noiseless(), &small(), &space).unwrap();
        assert!(d.rows.iter().all(|r| r.target == r.clean_target && r.target >= 1.0));
        assert_eq!(d.noise_floor(Split::Test), 0.0);
        let noisy = generate_dataset(&OracleParams::default(), &small(), &space).unwrap();
        assert!(noisy.noise_floor(Split::Test) > 0.0);
    }

    #[test]
    fn csv_round_trip_is_byte_stable() {
        let space = ConfigSpace::with_budget(400);
        let d = generate_dataset(&OracleParams::default(), &small(), &space).unwrap();
        let mut a = Vec::new();
        write_dataset_csv(&d.rows, &mut a).unwrap();
        let back = read_dataset_csv(a.as_slice()).unwrap();
        assert_eq!(back.len(), d.rows.len());
        assert!(back.iter().zip(&d.rows).all(|(x, y)| x.input == y.input && x.target == y.target));
        let mut b = Vec::new();
        write_dataset_csv(&back, &mut b).unwrap();
        assert_eq!(a, b);

        let again = generate_dataset(&OracleParams::default(), &small(), &space).unwrap();
        let mut c = Vec::new();
        write_dataset_csv(&again.rows, &mut c).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let mut text = column_names().join(",");
        text.push('\n');
        let good: Vec<String> = (0..INPUT_DIM).map(|_| "0.5".to_string()).chain(["1.1".into(), "a+b".into(), "train".into()]).collect();
        text.push_str(&good.join(","));
        text.push('\n');
        let mut bad = good.clone();
        bad[7] = "oops".into();
        text.push_str(&bad.join(","));
        text.push('\n');
        match read_dataset_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_dataset_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let space = ConfigSpace::with_budget(400);
        for cfg in [
            DatasetConfig { n_pairs: 0, ..DatasetConfig::default() },
            DatasetConfig { n_pairs: 29, ..DatasetConfig::default() },
            DatasetConfig { test_pairs: 16, ..DatasetConfig::default() },
        ] {
            assert!(generate_dataset(&OracleParams::default(), &cfg, &space).is_err());
        }
    }
}
