//! Exhaustive hardware-configuration search for a job pair.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{Estimator, SlowdownModel};
use crate::profile::JobProfile;
use crate::scalar::Scalar;
use crate::space::{enumerate_corun_configs, HardwareConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoRunChoice<T = f64> {
    pub config: HardwareConfig,
    pub time: T,
    /// Candidates scored; always the full enumeration.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoloChoice<T = f64> {
    pub configs: [HardwareConfig; 2],
    /// Each job's own solo time, in pair order.
    pub times: [T; 2],
    pub time: T,
}

/// Best co-run and best time-shared execution of a pair, and which one wins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDecision<T = f64> {
    pub corun: CoRunChoice<T>,
    pub solo: SoloChoice<T>,
    pub corun_chosen: bool,
}

impl<T: Scalar> PairDecision<T> {
    /// Edge weight: the time of the chosen execution.
    pub fn weight(&self) -> T {
        if self.corun_chosen {
            self.corun.time
        } else {
            self.solo.time
        }
    }
}

/// Scores every co-run config and keeps the first minimum in enumeration order.
pub fn optimize_corun<T: Scalar, M: SlowdownModel<T> + ?Sized>(
    est: &Estimator<'_, T, M>,
    j1: &JobProfile<T>,
    j2: &JobProfile<T>,
) -> Result<CoRunChoice<T>> {
    let configs = enumerate_corun_configs(est.space());
    let mut best: Option<(HardwareConfig, T)> = None;
    for hc in &configs {
        let t = est.corun_time(&[j1, j2], hc)?;
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((*hc, t));
        }
    }
    let (config, time) = best.ok_or(Error::EmptyConfigSpace {
        p_total: est.space().p_total,
    })?;
    Ok(CoRunChoice {
        config,
        time,
        evaluations: configs.len(),
    })
}

pub fn optimize_solo_pair<T: Scalar, M: SlowdownModel<T> + ?Sized>(
    est: &Estimator<'_, T, M>,
    j1: &JobProfile<T>,
    j2: &JobProfile<T>,
) -> Result<SoloChoice<T>> {
    let (s1, t1) = est.best_solo_split(j1)?;
    let (s2, t2) = est.best_solo_split(j2)?;
    Ok(SoloChoice {
        configs: [HardwareConfig::solo(s1.0, s1.1), HardwareConfig::solo(s2.0, s2.1)],
        times: [t1, t2],
        time: t1 + t2,
    })
}

/// Co-runs the pair when that is no slower than time-sharing it.
pub fn decide_pair<T: Scalar, M: SlowdownModel<T> + ?Sized>(
    est: &Estimator<'_, T, M>,
    j1: &JobProfile<T>,
    j2: &JobProfile<T>,
) -> Result<PairDecision<T>> {
    let corun = optimize_corun(est, j1, j2)?;
    let solo = optimize_solo_pair(est, j1, j2)?;
    Ok(PairDecision {
        corun,
        solo,
        corun_chosen: corun.time <= solo.time,
    })
}
