//! Runtime estimates for co-run and solo executions built on a slowdown model.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::fnn::NetworkWeights;
use crate::profile::{normalize_input, JobProfile};
use crate::scalar::Scalar;
use crate::space::{enumerate_solo_splits, ConfigKind, ConfigSpace, HardwareConfig};

/// Predictions below this are treated as a model fault and clamped.
pub const SLOWDOWN_FLOOR: f64 = 0.5;

/// Anything that can predict the slowdown of `primary` under `hc`, optionally next to `co`.
pub trait SlowdownModel<T: Scalar>: Sync {
    fn predict(
        &self,
        primary: &JobProfile<T>,
        co: Option<&JobProfile<T>>,
        hc: &HardwareConfig,
        space: &ConfigSpace,
    ) -> Result<T>;
}

impl<T: Scalar> SlowdownModel<T> for NetworkWeights<T> {
    fn predict(
        &self,
        primary: &JobProfile<T>,
        co: Option<&JobProfile<T>>,
        hc: &HardwareConfig,
        space: &ConfigSpace,
    ) -> Result<T> {
        let x = normalize_input(primary, co, hc, space, &self.feature_bounds)?;
        self.forward(&x)
    }
}

impl<T: Scalar, M: SlowdownModel<T> + ?Sized> SlowdownModel<T> for &M {
    fn predict(
        &self,
        primary: &JobProfile<T>,
        co: Option<&JobProfile<T>>,
        hc: &HardwareConfig,
        space: &ConfigSpace,
    ) -> Result<T> {
        (**self).predict(primary, co, hc, space)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SlowdownQuery<'a, T = f64> {
    pub primary_job: &'a JobProfile<T>,
    pub co_job: Option<&'a JobProfile<T>>,
    pub hc: HardwareConfig,
}

impl<T: Scalar> SlowdownQuery<'_, T> {
    pub fn validate(&self, space: &ConfigSpace) -> Result<()> {
        match (self.hc.validate(space)?, self.co_job.is_some()) {
            (ConfigKind::Solo, false) | (ConfigKind::CoRun, true) => Ok(()),
            (ConfigKind::Solo, true) => Err(Error::InvalidQuery(format!(
                "co-located job `{}` given with solo partitions",
                self.co_job.map(|j| j.job_id.as_str()).unwrap_or_default()
            ))),
            (ConfigKind::CoRun, false) => Err(Error::InvalidQuery(format!(
                "job `{}` has no co-runner but partitions {:?}/{:?} are co-run splits",
                self.primary_job.job_id, self.hc.cpu_partition, self.hc.gpu_partition
            ))),
        }
    }
}

/// Slowdown and runtime queries against one model and config space.
pub struct Estimator<'a, T: Scalar, M: SlowdownModel<T> + ?Sized> {
    model: &'a M,
    space: &'a ConfigSpace,
    floor: T,
    floor_hits: AtomicUsize,
}

impl<'a, T: Scalar, M: SlowdownModel<T> + ?Sized> Estimator<'a, T, M> {
    pub fn new(model: &'a M, space: &'a ConfigSpace) -> Self {
        Self {
            model,
            space,
            floor: T::lit(SLOWDOWN_FLOOR),
            floor_hits: AtomicUsize::new(0),
        }
    }

    pub fn space(&self) -> &ConfigSpace {
        self.space
    }

    pub fn model(&self) -> &M {
        self.model
    }

    /// Number of predictions clamped to the floor so far.
    pub fn floor_hits(&self) -> usize {
        self.floor_hits.load(Ordering::Relaxed)
    }

    pub fn slowdown(&self, q: &SlowdownQuery<'_, T>) -> Result<T> {
        q.validate(self.space)?;
        let s = self.model.predict(q.primary_job, q.co_job, &q.hc, self.space)?;
        if !s.is_finite() {
            return Err(Error::NonFinite {
                field: "predicted slowdown".into(),
            });
        }
        if s < self.floor {
            self.floor_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(self.floor);
        }
        Ok(s)
    }

    /// Runtime of `js[job_index]` when the pair co-runs under `hc` (`hc` is from `js[0]`'s side).
    pub fn corun_app_time(&self, js: &[&JobProfile<T>], hc: &HardwareConfig, job_index: usize) -> Result<T> {
        if js.len() != 2 {
            return Err(Error::InvalidQuery(format!("co-run sets hold 2 jobs, got {}", js.len())));
        }
        if job_index >= 2 {
            return Err(Error::JobIndex {
                index: job_index,
                len: 2,
            });
        }
        let (primary, co, hc) = if job_index == 0 {
            (js[0], js[1], *hc)
        } else {
            (js[1], js[0], hc.mirrored())
        };
        let s = self.slowdown(&SlowdownQuery {
            primary_job: primary,
            co_job: Some(co),
            hc,
        })?;
        Ok(s * primary.base_time)
    }

    /// Completion time of a set: its slowest member.
    pub fn corun_time(&self, js: &[&JobProfile<T>], hc: &HardwareConfig) -> Result<T> {
        match js.len() {
            1 => {
                if !hc.is_solo() {
                    return Err(Error::InvalidQuery("singleton set needs solo partitions".into()));
                }
                self.solo_app_time(js[0], hc.cpu_cap, hc.gpu_cap)
            }
            2 => {
                let a = self.corun_app_time(js, hc, 0)?;
                let b = self.corun_app_time(js, hc, 1)?;
                Ok(a.max(b))
            }
            n => Err(Error::InvalidQuery(format!("job sets hold 1 or 2 jobs, got {n}"))),
        }
    }

    pub fn solo_app_time(&self, job: &JobProfile<T>, cpu_cap: u32, gpu_cap: u32) -> Result<T> {
        let s = self.slowdown(&SlowdownQuery {
            primary_job: job,
            co_job: None,
            hc: HardwareConfig::solo(cpu_cap, gpu_cap),
        })?;
        Ok(s * job.base_time)
    }

    /// Best solo split for one job: the first minimum over the exact-budget splits.
    pub fn best_solo_split(&self, job: &JobProfile<T>) -> Result<((u32, u32), T)> {
        let mut best: Option<((u32, u32), T)> = None;
        for (c, g) in enumerate_solo_splits(self.space) {
            let t = self.solo_app_time(job, c, g)?;
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some(((c, g), t));
            }
        }
        best.ok_or(Error::UnreachableBudget {
            p_total: self.space.p_total,
        })
    }

    /// Time-shared total: each job alone at its own best split, summed in set order.
    pub fn solorun_time(&self, js: &[&JobProfile<T>]) -> Result<(T, Vec<(u32, u32)>)> {
        let mut total = T::zero();
        let mut splits = Vec::with_capacity(js.len());
        for job in js {
            let (split, t) = self.best_solo_split(job)?;
            total += t;
            splits.push(split);
        }
        Ok((total, splits))
    }
}
