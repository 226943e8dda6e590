//! Scheduling policies measured against the oracle.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Estimator, SlowdownModel};
use crate::profile::JobProfile;
use crate::scalar::Scalar;
use crate::scheduler::{check_schedule, schedule, SchedulerInput, SchedulingParams};
use crate::space::{ConfigSpace, HardwareConfig};

use super::oracle::OracleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// One job at a time, caps split as evenly as the grids allow.
    NaiveTimeshare,
    /// One job at a time at its best exact-budget split.
    OptTimeshare,
    /// Pairs chosen by the scheduler.
    Coschedule,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::NaiveTimeshare, Policy::OptTimeshare, Policy::Coschedule];

    pub fn name(self) -> &'static str {
        match self {
            Policy::NaiveTimeshare => "naive-timeshare",
            Policy::OptTimeshare => "opt-timeshare",
            Policy::Coschedule => "coschedule",
        }
    }
}

/// Even cap split: minimal `|c - g|` with `c + g <= P_total`, then the largest sum, then
/// the first in grid order.
pub fn naive_split(space: &ConfigSpace) -> Result<(u32, u32)> {
    let mut best: Option<(u32, u32)> = None;
    for &c in &space.cpu_caps {
        for &g in &space.gpu_caps {
            if c + g > space.p_total {
                continue;
            }
            let better = best.is_none_or(|(bc, bg)| {
                let (d, bd) = (c.abs_diff(g), bc.abs_diff(bg));
                d < bd || (d == bd && c + g > bc + bg)
            });
            if better {
                best = Some((c, g));
            }
        }
    }
    best.ok_or(Error::UnreachableBudget {
        p_total: space.p_total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetRecord<T = f64> {
    pub index: usize,
    pub jobs: Vec<String>,
    pub corun: bool,
    pub config: HardwareConfig,
    /// The model's estimate for this set under `config`.
    pub predicted_s: T,
    /// The oracle's time for this set under `config`.
    pub measured_s: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyOutcome<T = f64> {
    pub policy: Policy,
    pub sets: Vec<SetRecord<T>>,
    pub total_predicted: T,
    pub total_measured: T,
}

/// Runs one policy: `model` makes every decision, `oracle` measures the result.
pub fn run_policy<T: Scalar, M: SlowdownModel<T> + ?Sized>(
    policy: Policy,
    queue: &[JobProfile<T>],
    space: &ConfigSpace,
    model: &M,
    oracle: &OracleParams,
) -> Result<PolicyOutcome<T>> {
    let predict = Estimator::new(model, space);
    let measure = Estimator::new(oracle, space);
    let mut sets = Vec::new();
    let (total_predicted, total_measured) = match policy {
        Policy::NaiveTimeshare | Policy::OptTimeshare => {
            let naive = naive_split(space)?;
            let (mut tp, mut tm) = (T::zero(), T::zero());
            for (index, job) in queue.iter().enumerate() {
                let (c, g) = match policy {
                    Policy::NaiveTimeshare => naive,
                    _ => measure.best_solo_split(job)?.0,
                };
                let p = predict.solo_app_time(job, c, g)?;
                let m = measure.solo_app_time(job, c, g)?;
                tp += p;
                tm += m;
                sets.push(SetRecord {
                    index,
                    jobs: vec![job.job_id.clone()],
                    corun: false,
                    config: HardwareConfig::solo(c, g),
                    predicted_s: p,
                    measured_s: m,
                });
            }
            (tp, tm)
        }
        Policy::Coschedule => {
            let input = SchedulerInput {
                queue,
                space,
                params: SchedulingParams::pairs(queue.len()),
                model,
            };
            let s = schedule(&input)?;
            check_schedule(&s, queue.len(), space)?;
            let mut tm = T::zero();
            let mut index = 0;
            for group in s.edge_groups() {
                let mut edge_time = T::zero();
                for set in group {
                    let jobs: Vec<&JobProfile<T>> = set.jobs.iter().map(|&i| &queue[i]).collect();
                    let m = measure.corun_time(&jobs, &set.config)?;
                    edge_time += m;
                    sets.push(SetRecord {
                        index,
                        jobs: set.job_ids.clone(),
                        corun: set.corun,
                        config: set.config,
                        predicted_s: set.predicted_time,
                        measured_s: m,
                    });
                    index += 1;
                }
                tm += edge_time;
            }
            (s.total_predicted, tm)
        }
    };
    Ok(PolicyOutcome {
        policy,
        sets,
        total_predicted,
        total_measured,
    })
}

fn fmt_partition(p: (u32, u32)) -> String {
    format!("{}/{}", p.0, p.1)
}

/// Columns: `policy, set, jobs, corun, cpu_partition, gpu_partition, cpu_cap, gpu_cap, predicted_s, measured_s`.
pub fn write_policy_csv<T: Scalar, W: Write>(outcomes: &[PolicyOutcome<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "policy",
        "set",
        "jobs",
        "corun",
        "cpu_partition",
        "gpu_partition",
        "cpu_cap",
        "gpu_cap",
        "predicted_s",
        "measured_s",
    ])?;
    for o in outcomes {
        for s in &o.sets {
            w.write_record([
                o.policy.name().to_string(),
                s.index.to_string(),
                s.jobs.join("+"),
                u8::from(s.corun).to_string(),
                fmt_partition(s.config.cpu_partition),
                fmt_partition(s.config.gpu_partition),
                s.config.cpu_cap.to_string(),
                s.config.gpu_cap.to_string(),
                s.predicted_s.to_string(),
                s.measured_s.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
