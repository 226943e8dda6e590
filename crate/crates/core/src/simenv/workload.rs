//! Synthetic jobs drawn from four behavioural archetypes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{feature, JobProfile, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    CpuBound,
    GpuBound,
    MemoryBound,
    Balanced,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::CpuBound,
        Archetype::GpuBound,
        Archetype::MemoryBound,
        Archetype::Balanced,
    ];

    /// A CPU-heavy job next to a GPU-heavy one: they contend for little.
    pub fn complements(self, other: Archetype) -> bool {
        matches!(
            (self, other),
            (Archetype::CpuBound, Archetype::GpuBound) | (Archetype::GpuBound, Archetype::CpuBound)
        )
    }

    /// Ranges for CPU use (cores), IPC, stall %, GPU compute %, DRAM throughput %, occupancy %.
    fn ranges(self) -> [(f64, f64); 6] {
        match self {
            Archetype::CpuBound => [(24.0, 32.0), (1.8, 2.8), (10.0, 25.0), (5.0, 20.0), (5.0, 20.0), (20.0, 40.0)],
            Archetype::GpuBound => [(1.0, 4.0), (0.5, 1.0), (10.0, 25.0), (70.0, 95.0), (20.0, 40.0), (60.0, 90.0)],
            Archetype::MemoryBound => [(12.0, 20.0), (0.3, 0.8), (50.0, 80.0), (30.0, 45.0), (70.0, 95.0), (40.0, 60.0)],
            Archetype::Balanced => [(12.0, 20.0), (1.0, 1.8), (20.0, 40.0), (40.0, 60.0), (30.0, 50.0), (40.0, 60.0)],
        }
    }
}

impl std::fmt::Display for Archetype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Archetype::CpuBound => "cpu-bound",
            Archetype::GpuBound => "gpu-bound",
            Archetype::MemoryBound => "memory-bound",
            Archetype::Balanced => "balanced",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticJobSpec {
    pub archetype: Archetype,
    pub profile: JobProfile,
}

/// Relative jitter on the derived counters.
const JITTER: f64 = 0.05;
const BASE_TIME_S: (f64, f64) = (20.0, 120.0);

/// Draws one job. Six latent counters come from the archetype's ranges; the remaining ones
/// follow them up to a few percent of jitter, so counters within a job are consistent.
pub fn generate_job(archetype: Archetype, job_id: impl Into<String>, rng: &mut impl Rng) -> JobProfile {
    let r = archetype.ranges();
    let mut draw = |k: usize| rng.random_range(r[k].0..r[k].1);
    let (cu, ipc, stall, gu, gm, occ) = (draw(0), draw(1), draw(2), draw(3), draw(4), draw(5));
    let mut j = || rng.random_range(1.0 - JITTER..1.0 + JITTER);

    let mut f = [0.0; FEATURE_COUNT];
    f[feature::CPU_UTIL] = cu;
    f[feature::CONTEXT_SWITCHES] = cu * 800.0 * j();
    f[feature::PAGE_FAULTS] = (stall * 500.0 + 2e3) * j();
    f[feature::IPC] = ipc;
    f[feature::STALLED_CYCLES] = stall;
    f[feature::BRANCH_MISSES] = (1.0 + ipc) * j();
    f[feature::L1D_LOAD_MISSES] = stall * 1e6 * j();
    f[feature::L1I_LOAD_MISSES] = cu * 2e4 * j();
    f[feature::DTLB_LOAD_MISSES] = stall * 4e3 * j();
    f[feature::ITLB_LOAD_MISSES] = cu * 300.0 * j();
    f[feature::GPU_MEMORY] = gm * j();
    f[feature::DRAM_THROUGHPUT] = gm;
    f[feature::TEX_THROUGHPUT] = (gu * 0.5 + gm * 0.3) * j();
    f[feature::LLC_THROUGHPUT] = gm * 0.9 * j();
    f[feature::GPU_COMPUTE] = gu;
    f[feature::WAVES_PER_SM] = occ * 0.2 * j();
    f[feature::ACHIEVED_OCCUPANCY] = occ;
    f[feature::WARPS_PER_SM] = occ * 0.64;
    let base = rng.random_range(BASE_TIME_S.0..BASE_TIME_S.1);
    JobProfile::new(job_id, f, base).expect("generated counters are finite and positive")
}

/// A queue of `size` jobs cycling through the archetypes, in shuffled order.
///
/// With `size = 8` every archetype appears twice, giving two disjoint complementary pairs.
pub fn generate_workload(size: usize, seed: u64) -> Result<Vec<SyntheticJobSpec>> {
    if size == 0 {
        return Err(Error::InvalidConfig("workload size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds: Vec<Archetype> = (0..size).map(|i| Archetype::ALL[i % 4]).collect();
    kinds.shuffle(&mut rng);
    Ok(kinds
        .into_iter()
        .enumerate()
        .map(|(i, archetype)| SyntheticJobSpec {
            archetype,
            profile: generate_job(archetype, format!("w{seed}-j{i}"), &mut rng),
        })
        .collect())
}

/// Number of disjoint complementary pairs the queue can form.
pub fn complementary_pairs(specs: &[SyntheticJobSpec]) -> usize {
    let count = |a| specs.iter().filter(|s| s.archetype == a).count();
    count(Archetype::CpuBound).min(count(Archetype::GpuBound))
}

pub fn profiles(specs: &[SyntheticJobSpec]) -> Vec<JobProfile> {
    specs.iter().map(|s| s.profile.clone()).collect()
}
