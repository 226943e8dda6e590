use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use cosched::fnn::{load_weights, train, weights_to_json, TrainingConfig};
use cosched::profile::{normalize_input, FEATURE_COUNT};
use cosched::scheduler::{build_graph, check_schedule, schedule_graph, SchedulerInput, SchedulingParams};
use cosched::simenv::workload::{generate_workload, profiles};
use cosched::simenv::{
    estimation_error_report, generate_dataset, model_metrics, read_dataset_csv, run_policy, write_dataset_csv,
    write_policy_csv, DatasetConfig, OracleParams, Policy, Split, SyntheticJobSpec,
};
use cosched::space::DEFAULT_BUDGETS;
use cosched::{ConfigSpace, HardwareConfig, JobProfile, NetworkWeights, SlowdownModel};

use crate::output::{path_str, OutDir, RunManifest};
use crate::Command;

pub const DATASET_CSV: &str = "dataset.csv";
pub const PROFILES_JSON: &str = "profiles.json";
pub const BOUNDS_JSON: &str = "bounds.json";
pub const SPACE_JSON: &str = "space.json";

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_space(path: &Path) -> Result<ConfigSpace> {
    let space: ConfigSpace = read_json(path)?;
    space.validate().with_context(|| format!("config space {}", path.display()))?;
    Ok(space)
}

fn load_oracle(path: &Path) -> Result<OracleParams> {
    let oracle: OracleParams = read_json(path)?;
    oracle.validate().with_context(|| format!("oracle {}", path.display()))?;
    Ok(oracle)
}

/// A workload is either a list of generated job specs or a plain list of profiles.
fn load_workload(path: &Path) -> Result<Vec<JobProfile>> {
    let value: serde_json::Value = read_json(path)?;
    let is_specs = value
        .as_array()
        .and_then(|a| a.first())
        .is_some_and(|first| first.get("profile").is_some());
    let parsed = if is_specs {
        serde_json::from_value::<Vec<SyntheticJobSpec>>(value).map(|s| profiles(&s))
    } else {
        serde_json::from_value::<Vec<JobProfile>>(value)
    };
    parsed.with_context(|| format!("parsing workload {}", path.display()))
}

fn load_model(path: &Path) -> Result<NetworkWeights> {
    load_weights(path).with_context(|| format!("loading weights {}", path.display()))
}

fn csv_bytes(write: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        write(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

fn serialize_rows<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        for r in rows {
            w.serialize(r)?;
        }
        Ok(())
    })
}

/// Runs `body` against a fresh output directory, leaving an `INCOMPLETE` marker on failure.
fn in_out_dir(manifest: RunManifest, body: impl FnOnce(&mut OutDir) -> Result<()>) -> Result<()> {
    let mut dir = OutDir::create(manifest)?;
    match body(&mut dir) {
        Ok(()) => dir.finish(),
        Err(e) => {
            dir.fail(&e);
            Err(e)
        }
    }
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Defaults { out } => {
            let m = RunManifest::new("defaults", &out.out);
            in_out_dir(m, |dir| {
                dir.write_json(SPACE_JSON, &ConfigSpace::with_budget(400))?;
                dir.write_json("oracle.json", &OracleParams::default())?;
                dir.write_json("dataset_config.json", &DatasetConfig::default())
            })
        }

        Command::GenData {
            space,
            oracle,
            pairs,
            test_pairs,
            n_jobs,
            no_solo,
            seed,
            out,
        } => {
            let sp = load_space(&space)?;
            let mut params = load_oracle(&oracle)?;
            params.seed = seed;
            let cfg = DatasetConfig {
                n_jobs,
                n_pairs: pairs,
                test_pairs,
                budgets: DEFAULT_BUDGETS.to_vec(),
                include_solo: !no_solo,
                seed,
            };
            let data = generate_dataset(&params, &cfg, &sp)?;
            let mut m = RunManifest::new("gen-data", &out.out);
            m.config_space = path_str(&space);
            m.seed = Some(seed);
            m.parameters = serde_json::json!({
                "oracle": path_str(&oracle),
                "dataset": &cfg,
                "rows": data.rows.len(),
                "train_rows": data.samples(Split::Train).len(),
                "test_rows": data.samples(Split::Test).len(),
            });
            in_out_dir(m, |dir| {
                let mut csv = Vec::new();
                write_dataset_csv(&data.rows, &mut csv)?;
                dir.write(DATASET_CSV, csv)?;
                dir.write_json(PROFILES_JSON, &data.jobs)?;
                dir.write_json(BOUNDS_JSON, &data.bounds)?;
                let ids = |pairs: &[(usize, usize)]| -> Vec<String> {
                    pairs
                        .iter()
                        .map(|&(a, b)| cosched::simenv::dataset::pair_id(&data.jobs[a].profile, &data.jobs[b].profile))
                        .collect()
                };
                dir.write_json(
                    "pairs.json",
                    &serde_json::json!({ "train": ids(&data.train_pairs), "test": ids(&data.test_pairs) }),
                )?;
                dir.write_json(SPACE_JSON, &sp)?;
                dir.write_json("oracle.json", &params)?;
                dir.write_json("dataset_config.json", &cfg)
            })
        }

        Command::GenWorkload { size, seed, out } => {
            let specs = generate_workload(size, seed)?;
            let mut m = RunManifest::new("gen-workload", &out.out);
            m.seed = Some(seed);
            m.parameters = serde_json::json!({ "size": size });
            in_out_dir(m, |dir| dir.write_json("workload.json", &specs))
        }

        Command::Train {
            dataset,
            epochs,
            lr,
            batch,
            seed,
            validation_fraction,
            out,
        } => {
            let csv_path = dataset.join(DATASET_CSV);
            let file = fs::File::open(&csv_path).with_context(|| format!("opening {}", csv_path.display()))?;
            let rows = read_dataset_csv(file).with_context(|| format!("reading {}", csv_path.display()))?;
            let bounds: Vec<f64> = read_json(&dataset.join(BOUNDS_JSON))?;
            let samples: Vec<_> = rows.iter().filter(|r| r.split == Split::Train).map(|r| r.sample()).collect();
            let cfg = TrainingConfig {
                learning_rate: lr,
                batch_size: batch,
                epochs,
                seed,
                validation_fraction,
            };
            let outcome = train(&samples, &cfg, bounds)?;
            let last = outcome.history.last().copied();
            let mut m = RunManifest::new("train", &out.out);
            m.seed = Some(seed);
            m.parameters = serde_json::json!({
                "dataset": path_str(&dataset),
                "training": &cfg,
                "train_samples": outcome.train_indices.len(),
                "validation_samples": outcome.val_indices.len(),
                "final_train_mse": last.map(|l| l.train_mse),
                "final_val_mse": last.and_then(|l| l.val_mse),
            });
            in_out_dir(m, |dir| {
                let mut text = weights_to_json(&outcome.weights)?;
                text.push('\n');
                dir.write("weights.json", text)?;
                let loss = csv_bytes(|w| {
                    w.write_record(["epoch", "train_mse", "val_mse"])?;
                    for e in &outcome.history {
                        let val = e.val_mse.map(|v| v.to_string()).unwrap_or_default();
                        w.write_record([e.epoch.to_string(), e.train_mse.to_string(), val])?;
                    }
                    Ok(())
                })?;
                dir.write("loss.csv", loss)
            })
        }

        Command::Schedule {
            weights,
            workload,
            space,
            oracle_as_model,
            out,
        } => {
            let sp = load_space(&space)?;
            let queue = load_workload(&workload)?;
            let mut m = RunManifest::new("schedule", &out.out);
            m.config_space = path_str(&space);
            m.workload = path_str(&workload);
            match oracle_as_model {
                Some(o) => {
                    let oracle = load_oracle(&o)?;
                    m.parameters = serde_json::json!({ "model": "oracle", "oracle": path_str(&o) });
                    schedule_cmd(m, &queue, &sp, &oracle)
                }
                None => {
                    let model = load_model(&weights)?;
                    m.weights = path_str(&weights);
                    m.parameters = serde_json::json!({ "model": "weights" });
                    schedule_cmd(m, &queue, &sp, &model)
                }
            }
        }

        Command::Compare {
            weights,
            workload,
            space,
            oracle,
            oracle_as_model,
            out,
        } => {
            let sp = load_space(&space)?;
            let queue = load_workload(&workload)?;
            let params = load_oracle(&oracle)?;
            let mut m = RunManifest::new("compare", &out.out);
            m.config_space = path_str(&space);
            m.workload = path_str(&workload);
            m.parameters = serde_json::json!({
                "oracle": path_str(&oracle),
                "model": if oracle_as_model { "oracle" } else { "weights" },
            });
            if oracle_as_model {
                compare_cmd(m, &queue, &sp, &params, &params)
            } else {
                let model = load_model(&weights)?;
                m.weights = path_str(&weights);
                compare_cmd(m, &queue, &sp, &model, &params)
            }
        }

        Command::EvalModel {
            weights,
            dataset,
            split,
            oracle_as_model,
            out,
        } => {
            let split: Split = split.parse()?;
            let csv_path = dataset.join(DATASET_CSV);
            let file = fs::File::open(&csv_path).with_context(|| format!("opening {}", csv_path.display()))?;
            let rows: Vec<_> = read_dataset_csv(file)
                .with_context(|| format!("reading {}", csv_path.display()))?
                .into_iter()
                .filter(|r| r.split == split)
                .collect();
            if rows.is_empty() {
                bail!("dataset has no `{split}` rows");
            }
            let mut m = RunManifest::new("eval-model", &out.out);
            let predictions: Vec<f64> = match &oracle_as_model {
                Some(o) => {
                    let decoder = RowDecoder::load(&dataset)?;
                    let params = load_oracle(o)?;
                    m.parameters = serde_json::json!({ "model": "oracle", "oracle": path_str(o) });
                    rows.iter()
                        .map(|r| decoder.predict(&params, &r.input))
                        .collect::<Result<_>>()?
                }
                None => {
                    let model = load_model(&weights)?;
                    m.weights = path_str(&weights);
                    m.parameters = serde_json::json!({ "model": "weights" });
                    rows.iter()
                        .map(|r| model.forward(&r.input).map_err(Into::into))
                        .collect::<Result<_>>()?
                }
            };
            let metrics = model_metrics(predictions.iter().copied().zip(rows.iter().map(|r| r.target)));
            in_out_dir(m, |dir| {
                let table = csv_bytes(|w| {
                    w.write_record(["split", "n", "mse", "mae", "max_abs_error", "mare"])?;
                    w.write_record([
                        split.to_string(),
                        metrics.n.to_string(),
                        metrics.mse.to_string(),
                        metrics.mae.to_string(),
                        metrics.max_abs_error.to_string(),
                        metrics.mare.to_string(),
                    ])?;
                    Ok(())
                })?;
                dir.write("metrics.csv", table)?;
                let preds = csv_bytes(|w| {
                    w.write_record(["row", "pair_id", "target", "predicted"])?;
                    for (i, (r, p)) in rows.iter().zip(&predictions).enumerate() {
                        w.write_record([i.to_string(), r.pair_id.clone(), r.target.to_string(), p.to_string()])?;
                    }
                    Ok(())
                })?;
                dir.write("predictions.csv", preds)
            })
        }
    }
}

fn schedule_cmd<M: SlowdownModel<f64>>(m: RunManifest, queue: &[JobProfile], space: &ConfigSpace, model: &M) -> Result<()> {
    let input = SchedulerInput {
        queue,
        space,
        params: SchedulingParams::pairs(queue.len()),
        model,
    };
    let graph = build_graph(&input)?;
    let schedule = schedule_graph(&graph, queue)?;
    check_schedule(&schedule, queue.len(), space)?;
    in_out_dir(m, |dir| {
        dir.write("schedule.json", schedule.to_json()? + "\n")?;
        let mut csv = Vec::new();
        graph.write_csv(&mut csv, |d| d.corun_chosen)?;
        dir.write("graph.csv", csv)
    })
}

#[derive(Serialize)]
struct TotalRow {
    policy: &'static str,
    sets: usize,
    total_predicted_s: f64,
    total_measured_s: f64,
    improvement_vs_naive_pct: f64,
}

#[derive(Serialize)]
struct CapRow {
    set: usize,
    jobs: String,
    corun: u8,
    cpu_cap: u32,
    gpu_cap: u32,
    cap_sum: u32,
    p_total: u32,
}

#[derive(Serialize)]
struct ShareRow {
    set: usize,
    job: String,
    cores: u32,
    gpcs: u32,
}

fn compare_cmd<M: SlowdownModel<f64>>(
    m: RunManifest,
    queue: &[JobProfile],
    space: &ConfigSpace,
    model: &M,
    oracle: &OracleParams,
) -> Result<()> {
    let outcomes = Policy::ALL
        .iter()
        .map(|&p| run_policy(p, queue, space, model, oracle))
        .collect::<cosched::Result<Vec<_>>>()?;
    let naive = outcomes[0].total_measured;
    let totals: Vec<TotalRow> = outcomes
        .iter()
        .map(|o| TotalRow {
            policy: o.policy.name(),
            sets: o.sets.len(),
            total_predicted_s: o.total_predicted,
            total_measured_s: o.total_measured,
            improvement_vs_naive_pct: 100.0 * (naive - o.total_measured) / naive,
        })
        .collect();
    let co = &outcomes[2];
    let caps: Vec<CapRow> = co
        .sets
        .iter()
        .map(|s| CapRow {
            set: s.index,
            jobs: s.jobs.join("+"),
            corun: u8::from(s.corun),
            cpu_cap: s.config.cpu_cap,
            gpu_cap: s.config.gpu_cap,
            cap_sum: s.config.cap_sum(),
            p_total: space.p_total,
        })
        .collect();
    let shares: Vec<ShareRow> = co
        .sets
        .iter()
        .flat_map(|s| {
            let c = s.config;
            s.jobs.iter().enumerate().map(move |(k, job)| ShareRow {
                set: s.index,
                job: job.clone(),
                cores: if k == 0 { c.cpu_partition.0 } else { c.cpu_partition.1 },
                gpcs: if k == 0 { c.gpu_partition.0 } else { c.gpu_partition.1 },
            })
        })
        .collect();
    let report = estimation_error_report(model, oracle, queue, space)?;
    in_out_dir(m, |dir| {
        let mut policy = Vec::new();
        write_policy_csv(&outcomes, &mut policy)?;
        dir.write("policy_report.csv", policy)?;
        dir.write("totals.csv", serialize_rows(&totals)?)?;
        dir.write("breakdown_caps.csv", serialize_rows(&caps)?)?;
        dir.write("breakdown_allocation.csv", serialize_rows(&shares)?)?;
        let mut err = Vec::new();
        report.write_csv(&mut err)?;
        dir.write("estimation_error.csv", err)
    })
}

/// Recovers profiles and configs from normalized dataset rows, so the oracle can be scored
/// on a dataset directory.
struct RowDecoder {
    space: ConfigSpace,
    profiles: Vec<JobProfile>,
    blocks: Vec<Vec<f64>>,
}

impl RowDecoder {
    fn load(dir: &Path) -> Result<Self> {
        let space = load_space(&dir.join(SPACE_JSON))?;
        let specs: Vec<SyntheticJobSpec> = read_json(&dir.join(PROFILES_JSON))?;
        let bounds: Vec<f64> = read_json(&dir.join(BOUNDS_JSON))?;
        let profiles = profiles(&specs);
        let solo = HardwareConfig::solo(space.max_cpu_cap(), space.max_gpu_cap());
        let blocks = profiles
            .iter()
            .map(|p| Ok(normalize_input(p, None, &solo, &space, &bounds)?[4..4 + FEATURE_COUNT].to_vec()))
            .collect::<Result<_>>()?;
        Ok(Self { space, profiles, blocks })
    }

    fn find(&self, block: &[f64]) -> Result<&JobProfile> {
        self.blocks
            .iter()
            .position(|b| b.as_slice() == block)
            .map(|i| &self.profiles[i])
            .ok_or_else(|| anyhow!("row features match no profile in {PROFILES_JSON}"))
    }

    fn predict(&self, oracle: &OracleParams, x: &[f64]) -> Result<f64> {
        let sp = &self.space;
        let pick = |v: f64, max: u32| (v * f64::from(max)).round() as u32;
        let cores = pick(x[0], sp.max_cores());
        let gpcs = pick(x[1], sp.max_gpcs());
        let cpu_partition = sp.cpu_partitions.iter().copied().find(|p| p.0 == cores);
        let gpu_partition = sp.gpu_partitions.iter().copied().find(|p| p.0 == gpcs);
        let (Some(cpu_partition), Some(gpu_partition)) = (cpu_partition, gpu_partition) else {
            bail!("row partitions {cores}/{gpcs} are not in the config space");
        };
        let hc = HardwareConfig::new(
            cpu_partition,
            gpu_partition,
            pick(x[2], sp.max_cpu_cap()),
            pick(x[3], sp.max_gpu_cap()),
        );
        let primary = self.find(&x[4..4 + FEATURE_COUNT])?;
        let co_block = &x[4 + FEATURE_COUNT..];
        let co = if hc.is_solo() && co_block.iter().all(|&v| v == 0.0) {
            None
        } else {
            Some(self.find(co_block)?)
        };
        Ok(oracle.predict(primary, co, &hc, sp)?)
    }
}
