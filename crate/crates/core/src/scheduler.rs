//! Window scheduling: pair graph construction, matching, and job-set emission.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{Estimator, SlowdownModel};
use crate::hwopt::{decide_pair, optimize_corun, optimize_solo_pair, PairDecision};
use crate::matcher::{for_each_perfect_matching, min_weight_perfect_matching, PairGraph, BRUTE_FORCE_MAX_N};
use crate::profile::JobProfile;
use crate::scalar::Scalar;
use crate::space::{ConfigSpace, HardwareConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct SchedulingParams {
    /// Jobs per set; only pairs are supported.
    pub concurrency: usize,
    /// Queue length scheduled in one round.
    pub window: usize,
}

impl SchedulingParams {
    pub fn pairs(window: usize) -> Self {
        Self { concurrency: 2, window }
    }
}

pub struct SchedulerInput<'a, T: Scalar, M: SlowdownModel<T> + ?Sized> {
    pub queue: &'a [JobProfile<T>],
    pub space: &'a ConfigSpace,
    pub params: SchedulingParams,
    pub model: &'a M,
}

impl<T: Scalar, M: SlowdownModel<T> + ?Sized> SchedulerInput<'_, T, M> {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.params.concurrency != 2 {
            return Err(Error::InvalidSchedule(format!(
                "only pairwise co-location is supported, got concurrency {}",
                self.params.concurrency
            )));
        }
        if self.queue.is_empty() {
            return Err(Error::InvalidSchedule("empty queue".into()));
        }
        if self.queue.len() != self.params.window {
            return Err(Error::InvalidSchedule(format!(
                "queue holds {} jobs but the window is {}",
                self.queue.len(),
                self.params.window
            )));
        }
        if !self.queue.len().is_multiple_of(2) {
            return Err(Error::InvalidSchedule(format!(
                "window must be even, got {}; pad the queue with a null job",
                self.queue.len()
            )));
        }
        Ok(())
    }
}

/// One dispatch unit: a co-run pair or a single job running alone.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ScheduledSet<T = f64> {
    /// Queue indices.
    pub jobs: Vec<usize>,
    pub job_ids: Vec<String>,
    pub corun: bool,
    pub config: HardwareConfig,
    pub predicted_time: T,
    /// Matched edge this set came from, as queue indices.
    pub edge: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Schedule<T = f64> {
    pub sets: Vec<ScheduledSet<T>>,
    /// Sum of the matched edge weights.
    pub total_predicted: T,
}

impl<T: Scalar> Schedule<T> {
    pub fn job_sets(&self) -> Vec<&[usize]> {
        self.sets.iter().map(|s| s.jobs.as_slice()).collect()
    }

    pub fn configs(&self) -> Vec<HardwareConfig> {
        self.sets.iter().map(|s| s.config).collect()
    }

    pub fn corun_flags(&self) -> Vec<bool> {
        self.sets.iter().map(|s| s.corun).collect()
    }

    /// Sets grouped by their matched edge, in emission order.
    pub fn edge_groups(&self) -> Vec<&[ScheduledSet<T>]> {
        self.sets.chunk_by(|a, b| a.edge == b.edge).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Scores every unordered job pair.
pub fn build_graph<T: Scalar, M: SlowdownModel<T> + ?Sized>(
    input: &SchedulerInput<'_, T, M>,
) -> Result<PairGraph<T, PairDecision<T>>> {
    input.validate()?;
    let est = Estimator::new(input.model, input.space);
    let n = input.queue.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let edges = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = decide_pair(&est, &input.queue[i], &input.queue[j])?;
            Ok((d.weight(), d))
        })
        .collect::<Result<Vec<_>>>()?;
    PairGraph::from_edges(n, edges)
}

/// Matches a prebuilt graph and emits the job sets.
pub fn schedule_graph<T: Scalar>(graph: &PairGraph<T, PairDecision<T>>, queue: &[JobProfile<T>]) -> Result<Schedule<T>> {
    if graph.n() != queue.len() {
        return Err(Error::InvalidSchedule(format!(
            "graph has {} vertices for a queue of {}",
            graph.n(),
            queue.len()
        )));
    }
    let matching = min_weight_perfect_matching(graph)?;
    let mut sets = Vec::with_capacity(queue.len());
    for &(i, j) in &matching.pairs {
        let d = graph.decision(i, j);
        if d.corun_chosen {
            sets.push(ScheduledSet {
                jobs: vec![i, j],
                job_ids: vec![queue[i].job_id.clone(), queue[j].job_id.clone()],
                corun: true,
                config: d.corun.config,
                predicted_time: d.corun.time,
                edge: (i, j),
            });
        } else {
            for (k, v) in [i, j].into_iter().enumerate() {
                sets.push(ScheduledSet {
                    jobs: vec![v],
                    job_ids: vec![queue[v].job_id.clone()],
                    corun: false,
                    config: d.solo.configs[k],
                    predicted_time: d.solo.times[k],
                    edge: (i, j),
                });
            }
        }
    }
    Ok(Schedule {
        sets,
        total_predicted: matching.total,
    })
}

pub fn schedule<T: Scalar, M: SlowdownModel<T> + ?Sized>(input: &SchedulerInput<'_, T, M>) -> Result<Schedule<T>> {
    let graph = build_graph(input)?;
    schedule_graph(&graph, input.queue)
}

/// Re-estimates every set and sums them sequentially, one matched edge at a time.
pub fn predicted_makespan<T: Scalar, M: SlowdownModel<T> + ?Sized>(
    s: &Schedule<T>,
    queue: &[JobProfile<T>],
    model: &M,
    space: &ConfigSpace,
) -> Result<T> {
    let est = Estimator::new(model, space);
    let mut total = T::zero();
    for group in s.edge_groups() {
        let mut edge_time = T::zero();
        for set in group {
            let jobs = set
                .jobs
                .iter()
                .map(|&i| {
                    queue.get(i).ok_or(Error::JobIndex {
                        index: i,
                        len: queue.len(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            edge_time += est.corun_time(&jobs, &set.config)?;
        }
        total += edge_time;
    }
    Ok(total)
}

/// Checks partition, flag and power-budget invariants of an emitted schedule.
pub fn check_schedule<T: Scalar>(s: &Schedule<T>, n_jobs: usize, space: &ConfigSpace) -> Result<()> {
    let mut seen = vec![0usize; n_jobs];
    for set in &s.sets {
        for &j in &set.jobs {
            *seen.get_mut(j).ok_or(Error::JobIndex { index: j, len: n_jobs })? += 1;
        }
        set.config.validate(space)?;
        let ok = match (set.corun, set.jobs.len()) {
            (true, 2) => set.config.is_corun() && set.config.cap_sum() <= space.p_total,
            (false, 1) => set.config.is_solo() && set.config.cap_sum() == space.p_total,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidSchedule(format!("set {:?} violates its config constraints", set.jobs)));
        }
    }
    if let Some(j) = seen.iter().position(|&c| c != 1) {
        return Err(Error::InvalidSchedule(format!("job {j} appears {} times", seen[j])));
    }
    for group in s.edge_groups() {
        let fine = match group {
            [one] => one.corun && one.jobs == [one.edge.0, one.edge.1],
            [a, b] => !a.corun && !b.corun && a.jobs == [a.edge.0] && b.jobs == [a.edge.1],
            _ => false,
        };
        if !fine {
            return Err(Error::InvalidSchedule(format!("edge {:?} emitted inconsistent sets", group[0].edge)));
        }
    }
    Ok(())
}

/// Exhaustive optimum over every perfect matching and every per-edge co-run/solo choice.
///
/// Pair times come straight from the exhaustive config search, not from the graph.
pub fn exhaustive_optimum<T: Scalar, M: SlowdownModel<T> + ?Sized>(input: &SchedulerInput<'_, T, M>) -> Result<T> {
    input.validate()?;
    let n = input.queue.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::GraphTooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let est = Estimator::new(input.model, input.space);
    let mut times = vec![[T::zero(); 2]; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&input.queue[i], &input.queue[j]);
            times[i * n + j] = [optimize_corun(&est, a, b)?.time, optimize_solo_pair(&est, a, b)?.time];
        }
    }
    let mut best: Option<T> = None;
    for_each_perfect_matching(n, |pairs| {
        for mask in 0u32..(1 << pairs.len()) {
            let total = pairs
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &(i, j))| acc + times[i * n + j][((mask >> k) & 1) as usize]);
            if best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
    });
    Ok(best.expect("non-empty even queue"))
}
