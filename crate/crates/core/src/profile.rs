//! Job profiles and model-input normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{ConfigSpace, HardwareConfig};

/// Counters per job: F1..F10 from the CPU, F11..F18 from the GPU.
pub const FEATURE_COUNT: usize = 18;
/// Four configuration slots followed by two feature blocks.
pub const INPUT_DIM: usize = 4 + 2 * FEATURE_COUNT;
pub const BOUNDS_LEN: usize = 2 * FEATURE_COUNT;

/// Zero-based feature indices, named after the counters they hold.
pub mod feature {
    pub const CPU_UTIL: usize = 0;
    pub const CONTEXT_SWITCHES: usize = 1;
    pub const PAGE_FAULTS: usize = 2;
    pub const IPC: usize = 3;
    pub const STALLED_CYCLES: usize = 4;
    pub const BRANCH_MISSES: usize = 5;
    pub const L1D_LOAD_MISSES: usize = 6;
    pub const L1I_LOAD_MISSES: usize = 7;
    pub const DTLB_LOAD_MISSES: usize = 8;
    pub const ITLB_LOAD_MISSES: usize = 9;
    pub const GPU_MEMORY: usize = 10;
    pub const DRAM_THROUGHPUT: usize = 11;
    pub const TEX_THROUGHPUT: usize = 12;
    pub const LLC_THROUGHPUT: usize = 13;
    pub const GPU_COMPUTE: usize = 14;
    pub const WAVES_PER_SM: usize = 15;
    pub const ACHIEVED_OCCUPANCY: usize = 16;
    pub const WARPS_PER_SM: usize = 17;
}

/// Hardware-counter profile of one job plus its uncapped, full-resource solo runtime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile<T>", bound(deserialize = "T: Scalar"))]
pub struct JobProfile<T = f64> {
    pub job_id: String,
    #[serde(rename = "base_time_s")]
    pub base_time: T,
    pub features: [T; FEATURE_COUNT],
}

#[derive(Deserialize)]
struct RawProfile<T> {
    job_id: String,
    base_time_s: T,
    features: Vec<T>,
}

impl<T: Scalar> TryFrom<RawProfile<T>> for JobProfile<T> {
    type Error = Error;

    fn try_from(raw: RawProfile<T>) -> Result<Self> {
        let features: [T; FEATURE_COUNT] = raw.features.try_into().map_err(|v: Vec<T>| Error::InvalidProfile {
            job_id: raw.job_id.clone(),
            reason: format!("expected {FEATURE_COUNT} features, got {}", v.len()),
        })?;
        Self::new(raw.job_id, features, raw.base_time_s)
    }
}

impl<T: Scalar> JobProfile<T> {
    pub fn new(job_id: impl Into<String>, features: [T; FEATURE_COUNT], base_time: T) -> Result<Self> {
        let job_id = job_id.into();
        if let Some(k) = features.iter().position(|f| !f.is_finite() || *f < T::zero()) {
            return Err(Error::InvalidProfile {
                job_id,
                reason: format!("feature F{} must be finite and >= 0", k + 1),
            });
        }
        if !base_time.is_finite() || base_time <= T::zero() {
            return Err(Error::InvalidProfile {
                job_id,
                reason: "base_time_s must be finite and > 0".into(),
            });
        }
        Ok(Self {
            job_id,
            base_time,
            features,
        })
    }
}

/// Per-feature maxima over a corpus, duplicated for the two feature blocks.
pub fn corpus_bounds<'a, T: Scalar>(profiles: impl IntoIterator<Item = &'a JobProfile<T>>) -> Vec<T> {
    let mut max = [T::zero(); FEATURE_COUNT];
    for p in profiles {
        for (m, f) in max.iter_mut().zip(p.features.iter()) {
            *m = m.max(*f);
        }
    }
    // An all-zero counter would divide by zero; any positive constant maps it to 0.
    let block: Vec<T> = max.iter().map(|&m| if m > T::zero() { m } else { T::one() }).collect();
    block.iter().chain(block.iter()).copied().collect()
}

/// Builds the 40-wide model input: `[R^c, R^g, P^c, P^g, J1 features, J2 features]`, all in `[0, 1]`.
///
/// Partition slots hold the first job's share of the maximum allocation; caps are divided by
/// their own device maximum. Features are divided by `bounds` and clamped to 1. When `co` is
/// `None` the second block is exactly zero.
pub fn normalize_input<T: Scalar>(
    primary: &JobProfile<T>,
    co: Option<&JobProfile<T>>,
    hc: &HardwareConfig,
    space: &ConfigSpace,
    bounds: &[T],
) -> Result<[T; INPUT_DIM]> {
    if bounds.len() < BOUNDS_LEN {
        return Err(Error::MissingBound { index: bounds.len() });
    }
    if let Some(index) = bounds[..BOUNDS_LEN].iter().position(|b| !b.is_finite() || *b <= T::zero()) {
        return Err(Error::InvalidBound { index });
    }

    let mut x = [T::zero(); INPUT_DIM];
    x[0] = T::of_u32(hc.cpu_partition.0) / T::of_u32(space.max_cores());
    x[1] = T::of_u32(hc.gpu_partition.0) / T::of_u32(space.max_gpcs());
    x[2] = T::of_u32(hc.cpu_cap) / T::of_u32(space.max_cpu_cap());
    x[3] = T::of_u32(hc.gpu_cap) / T::of_u32(space.max_gpu_cap());

    fill_block(&mut x[4..4 + FEATURE_COUNT], &primary.features, &bounds[..FEATURE_COUNT], 0)?;
    if let Some(co) = co {
        fill_block(&mut x[4 + FEATURE_COUNT..], &co.features, &bounds[FEATURE_COUNT..BOUNDS_LEN], FEATURE_COUNT)?;
    }
    Ok(x)
}

fn fill_block<T: Scalar>(out: &mut [T], features: &[T], bounds: &[T], offset: usize) -> Result<()> {
    for (k, ((slot, &f), &b)) in out.iter_mut().zip(features).zip(bounds).enumerate() {
        if !f.is_finite() {
            return Err(Error::NonFiniteFeature { index: offset + k });
        }
        *slot = (f / b).max(T::zero()).min(T::one());
    }
    Ok(())
}
