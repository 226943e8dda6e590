//! Analytic ground-truth slowdown standing in for runs on real hardware.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SlowdownModel;
use crate::profile::{feature, JobProfile};
use crate::scalar::Scalar;
use crate::space::{ConfigKind, ConfigSpace, HardwareConfig};

/// Coefficients of the oracle. Per-job quantities are derived from each job's counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    /// Resource exponent scale on the CPU side; a job's exponent is `cpu_scaling * (0.5 + 0.5 u_c)`.
    pub cpu_scaling: f64,
    pub gpu_scaling: f64,
    /// Cap below which a job starts to slow, interpolated between `[lo, hi]` by its utilization
    /// and clamped to the device's largest cap.
    pub cpu_threshold_w: [f64; 2],
    pub gpu_threshold_w: [f64; 2],
    /// Relative slowdown per unit of relative cap deficit.
    pub power_penalty: f64,
    /// Fraction of runtime attributed to each device, scaled by the job's utilization there.
    pub cpu_weight: f64,
    pub gpu_weight: f64,
    /// Contention weights over (compute, memory) intensity classes, summed over both devices.
    pub interference: [[f64; 2]; 2],
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            cpu_scaling: 0.2,
            gpu_scaling: 0.35,
            cpu_threshold_w: [50.0, 300.0],
            gpu_threshold_w: [100.0, 350.0],
            power_penalty: 0.5,
            cpu_weight: 0.5,
            gpu_weight: 0.5,
            interference: [[0.2, 0.0], [0.0, 0.8]],
            noise_sigma: 0.03,
            seed: 0,
        }
    }
}

impl OracleParams {
    pub fn noiseless(self) -> Self {
        Self {
            noise_sigma: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("oracle: {msg}")));
        let scalars = [
            ("cpu_scaling", self.cpu_scaling),
            ("gpu_scaling", self.gpu_scaling),
            ("power_penalty", self.power_penalty),
            ("cpu_weight", self.cpu_weight),
            ("gpu_weight", self.gpu_weight),
            ("noise_sigma", self.noise_sigma),
        ];
        for (name, v) in scalars {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} = {v} must be finite and >= 0"));
            }
        }
        let thresholds = [("cpu_threshold_w", self.cpu_threshold_w), ("gpu_threshold_w", self.gpu_threshold_w)];
        for (name, [lo, hi]) in thresholds {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
                return bad(format!("{name} [{lo}, {hi}] must be positive and ordered"));
            }
        }
        let m = self.interference;
        if m.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("interference entries must be finite and >= 0".into());
        }
        if m[0][1] != m[1][0] {
            return bad("interference matrix must be symmetric".into());
        }
        Ok(())
    }
}

/// Per-job quantities the oracle reads off the counters, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensity<T> {
    pub cpu_compute: T,
    pub gpu_compute: T,
    pub cpu_memory: T,
    pub gpu_memory: T,
}

impl<T: Scalar> Intensity<T> {
    pub fn of(job: &JobProfile<T>, space: &ConfigSpace) -> Self {
        let unit = |v: T| v.max(T::zero()).min(T::one());
        let f = &job.features;
        let hundred = T::lit(100.0);
        Self {
            cpu_compute: unit(f[feature::CPU_UTIL] / T::of_u32(space.max_cores())),
            gpu_compute: unit(f[feature::GPU_COMPUTE] / hundred),
            cpu_memory: unit(f[feature::STALLED_CYCLES] / hundred),
            gpu_memory: unit(f[feature::DRAM_THROUGHPUT] / hundred),
        }
    }
}

/// Multiplicative contention factor, symmetric in the two jobs; 1 means no interference.
pub fn interference_factor<T: Scalar>(params: &OracleParams, a: &Intensity<T>, b: &Intensity<T>) -> T {
    let m = params.interference.map(|row| row.map(T::lit));
    let devices = [
        ([a.cpu_compute, a.cpu_memory], [b.cpu_compute, b.cpu_memory]),
        ([a.gpu_compute, a.gpu_memory], [b.gpu_compute, b.gpu_memory]),
    ];
    // Cross terms are added pairwise so swapping the jobs is bit-identical.
    let mut sum = T::zero();
    for (x, y) in devices {
        sum += m[0][0] * (x[0] * y[0]) + m[1][1] * (x[1] * y[1]) + m[0][1] * (x[0] * y[1] + x[1] * y[0]);
    }
    T::one() + sum
}

/// Noiseless slowdown of `j1` under `hc`, co-located with `j2` when given.
///
/// Exactly 1 at the solo full-resource corner with both caps at their maximum; never below 1,
/// and non-increasing in cores, GPCs and either cap.
pub fn oracle_slowdown<T: Scalar>(
    params: &OracleParams,
    j1: &JobProfile<T>,
    j2: Option<&JobProfile<T>>,
    hc: &HardwareConfig,
    space: &ConfigSpace,
) -> Result<T> {
    match (hc.validate(space)?, j2.is_some()) {
        (ConfigKind::Solo, false) | (ConfigKind::CoRun, true) => {}
        _ => {
            return Err(Error::InvalidQuery(format!(
                "oracle: partitions {:?}/{:?} do not match co-runner presence ({})",
                hc.cpu_partition,
                hc.gpu_partition,
                j2.is_some()
            )))
        }
    }
    let lit = T::lit;
    let half = lit(0.5);
    let it = Intensity::of(j1, space);

    let cpu_exp = lit(params.cpu_scaling) * (half + half * it.cpu_compute);
    let gpu_exp = lit(params.gpu_scaling) * (half + half * it.gpu_compute);
    let cores = T::of_u32(hc.cpu_partition.0);
    let gpcs = T::of_u32(hc.gpu_partition.0);
    let cpu_res = (T::of_u32(space.max_cores()) / cores).powf(cpu_exp);
    let gpu_res = (T::of_u32(space.max_gpcs()) / gpcs).powf(gpu_exp);

    let threshold = |[lo, hi]: [f64; 2], u: T, max_cap: u32| (lit(lo) + (lit(hi) - lit(lo)) * u).min(T::of_u32(max_cap));
    let penalty = |theta: T, cap: u32| {
        let deficit = (theta - T::of_u32(cap)).max(T::zero());
        T::one() + lit(params.power_penalty) * deficit / theta
    };
    let cpu_pow = penalty(threshold(params.cpu_threshold_w, it.cpu_compute, space.max_cpu_cap()), hc.cpu_cap);
    let gpu_pow = penalty(threshold(params.gpu_threshold_w, it.gpu_compute, space.max_gpu_cap()), hc.gpu_cap);

    let cpu_share = lit(params.cpu_weight) * it.cpu_compute;
    let gpu_share = lit(params.gpu_weight) * it.gpu_compute;
    let base = T::one() + cpu_share * (cpu_res * cpu_pow - T::one()) + gpu_share * (gpu_res * gpu_pow - T::one());

    Ok(match j2 {
        None => base,
        Some(j2) => base * interference_factor(params, &it, &Intensity::of(j2, space)),
    })
}

/// Multiplies `clean` by lognormal noise `exp(sigma * z)`.
pub fn noisy<T: Scalar>(clean: T, sigma: f64, rng: &mut impl Rng) -> T {
    if sigma == 0.0 {
        return clean;
    }
    let z: f64 = rng.sample(StandardNormal);
    clean * T::lit((sigma * z).exp())
}

/// The noiseless oracle used directly as the runtime model.
impl<T: Scalar> SlowdownModel<T> for OracleParams {
    fn predict(
        &self,
        primary: &JobProfile<T>,
        co: Option<&JobProfile<T>>,
        hc: &HardwareConfig,
        space: &ConfigSpace,
    ) -> Result<T> {
        oracle_slowdown(self, primary, co, hc, space)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::workload::{generate_job, Archetype};
    use crate::space::{enumerate_corun_configs, HardwareConfig};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn jobs(seed: u64) -> Vec<JobProfile> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Archetype::ALL
            .iter()
            .enumerate()
            .map(|(i, &a)| generate_job(a, format!("j{i}"), &mut rng))
            .collect()
    }

    #[test]
    fn solo_corner_is_exactly_one() {
        let space = ConfigSpace::with_budget(400);
        let p = OracleParams::default();
        for seed in 0..20 {
            for j in jobs(seed) {
                let s: f64 = oracle_slowdown(&p, &j, None, &HardwareConfig::solo(250, 250), &space).unwrap();
                assert_eq!(s, 1.0);
                let s32: f32 = oracle_slowdown(
                    &p,
                    &JobProfile::new(j.job_id.clone(), j.features.map(|v| v as f32), j.base_time as f32).unwrap(),
                    None,
                    &HardwareConfig::solo(250, 250),
                    &space,
                )
                .unwrap();
                assert_eq!(s32, 1.0);
            }
        }
    }

    #[test]
    fn low_caps_penalize_sensitive_jobs() {
        let space = ConfigSpace::with_budget(400);
        let p = OracleParams::default();
        for j in jobs(1) {
            let s: f64 = oracle_slowdown(&p, &j, None, &HardwareConfig::solo(100, 150), &space).unwrap();
            assert!(s > 1.0, "{} -> {s}", j.job_id);
        }
    }

    #[test]
    fn memory_jobs_interfere() {
        let space = ConfigSpace::with_budget(400);
        let p = OracleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = generate_job(Archetype::MemoryBound, "a", &mut rng);
        let b = generate_job(Archetype::MemoryBound, "b", &mut rng);
        let hc = HardwareConfig::new((16, 16), (4, 3), 200, 200);
        // A job with no counters interferes with nothing, leaving the allocation terms alone.
        let idle = JobProfile::new("idle", [0.0; crate::profile::FEATURE_COUNT], 1.0).unwrap();
        for (x, y) in [(&a, &b), (&b, &a)] {
            let together: f64 = oracle_slowdown(&p, x, Some(y), &hc, &space).unwrap();
            let alone: f64 = oracle_slowdown(&p, x, Some(&idle), &hc, &space).unwrap();
            assert!(together > alone * 1.3, "{together} vs {alone}");
        }
    }

    #[test]
    fn mismatched_query_rejected() {
        let space = ConfigSpace::with_budget(400);
        let p = OracleParams::default();
        let j = &jobs(0)[0];
        let corun = HardwareConfig::new((16, 16), (4, 3), 200, 200);
        assert!(oracle_slowdown::<f64>(&p, j, None, &corun, &space).is_err());
        assert!(oracle_slowdown::<f64>(&p, j, Some(j), &HardwareConfig::solo(200, 200), &space).is_err());
    }

    #[test]
    fn params_validate() {
        OracleParams::default().validate().unwrap();
        let bad = [
            OracleParams { cpu_scaling: -0.1, ..Default::default() },
            OracleParams { noise_sigma: f64::NAN, ..Default::default() },
            OracleParams { cpu_threshold_w: [0.0, 250.0], ..Default::default() },
            OracleParams { gpu_threshold_w: [250.0, 150.0], ..Default::default() },
            OracleParams { interference: [[0.2, 0.1], [0.0, 0.8]], ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(noisy(1.2345f64, 0.0, &mut rng), 1.2345);
        let v = noisy(1.0f64, 0.03, &mut rng);
        assert!(v != 1.0 && (v.ln()).abs() < 0.2);
    }

    /// Oracle evaluated with one knob replaced.
    fn knob(p: &OracleParams, a: &JobProfile, b: Option<&JobProfile>, hc: HardwareConfig, space: &ConfigSpace) -> f64 {
        oracle_slowdown(p, a, b, &hc, space).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_in_every_knob(seed in 0u64..1000, ia in 0usize..4, ib in 0usize..4) {
            let space = ConfigSpace::with_budget(500);
            let p = OracleParams::default();
            let js = jobs(seed);
            let (a, b) = (&js[ia], &js[ib]);
            for hc in enumerate_corun_configs(&space) {
                let s = knob(&p, a, Some(b), hc, &space);
                prop_assert!(s >= 1.0);
                for &c in space.cpu_caps.iter().filter(|&&c| c > hc.cpu_cap) {
                    let alt = HardwareConfig { cpu_cap: c, ..hc };
                    prop_assert!(knob(&p, a, Some(b), alt, &space) <= s);
                }
                for &g in space.gpu_caps.iter().filter(|&&g| g > hc.gpu_cap) {
                    let alt = HardwareConfig { gpu_cap: g, ..hc };
                    prop_assert!(knob(&p, a, Some(b), alt, &space) <= s);
                }
                for cp in space.corun_cpu_partitions().filter(|cp| cp.0 > hc.cpu_partition.0) {
                    let alt = HardwareConfig { cpu_partition: cp, ..hc };
                    prop_assert!(knob(&p, a, Some(b), alt, &space) <= s);
                }
                for gp in space.corun_gpu_partitions().filter(|gp| gp.0 > hc.gpu_partition.0) {
                    let alt = HardwareConfig { gpu_partition: gp, ..hc };
                    prop_assert!(knob(&p, a, Some(b), alt, &space) <= s);
                }
                // Solo at the same caps has the most resources and no neighbour.
                let solo = HardwareConfig::solo(hc.cpu_cap, hc.gpu_cap);
                prop_assert!(knob(&p, a, None, solo, &space) <= s);
            }
        }

        #[test]
        fn interference_is_symmetric(seed in 0u64..1000, ia in 0usize..4, ib in 0usize..4) {
            let space = ConfigSpace::with_budget(400);
            let p = OracleParams::default();
            let js = jobs(seed);
            let x = Intensity::of(&js[ia], &space);
            let y = Intensity::of(&js[ib], &space);
            prop_assert_eq!(interference_factor(&p, &x, &y), interference_factor(&p, &y, &x));
        }
    }
}
