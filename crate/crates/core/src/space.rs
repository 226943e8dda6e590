//! Hardware configurations and the partition/power-cap search space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Core splits between the two jobs of a pair; `(32, 0)` is the solo allocation.
pub const CPU_PARTITIONS: [(u32, u32); 6] = [(2, 30), (8, 24), (16, 16), (24, 8), (30, 2), (32, 0)];
/// GPC splits; `(8, 0)` is the solo allocation (one GPC is lost when the GPU is partitioned).
pub const GPU_PARTITIONS: [(u32, u32); 3] = [(3, 4), (4, 3), (8, 0)];
pub const CPU_CAPS: [u32; 7] = [100, 125, 150, 175, 200, 225, 250];
pub const GPU_CAPS: [u32; 5] = [150, 175, 200, 225, 250];
pub const P_MAX: u32 = 500;
/// Node budgets used to build the labelled training grid.
pub const DEFAULT_BUDGETS: [u32; 2] = [350, 400];

/// One (CPU partition, GPU partition, CPU cap, GPU cap) setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub cpu_partition: (u32, u32),
    pub gpu_partition: (u32, u32),
    pub cpu_cap: u32,
    pub gpu_cap: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigKind {
    Solo,
    CoRun,
}

impl HardwareConfig {
    pub const fn new(cpu_partition: (u32, u32), gpu_partition: (u32, u32), cpu_cap: u32, gpu_cap: u32) -> Self {
        Self {
            cpu_partition,
            gpu_partition,
            cpu_cap,
            gpu_cap,
        }
    }

    /// Solo configuration with full resources at the given caps.
    pub const fn solo(cpu_cap: u32, gpu_cap: u32) -> Self {
        Self::new(CPU_PARTITIONS[5], GPU_PARTITIONS[2], cpu_cap, gpu_cap)
    }

    pub fn is_solo(&self) -> bool {
        self.cpu_partition.1 == 0 && self.gpu_partition.1 == 0
    }

    pub fn is_corun(&self) -> bool {
        self.cpu_partition.0 > 0 && self.cpu_partition.1 > 0 && self.gpu_partition.0 > 0 && self.gpu_partition.1 > 0
    }

    /// The same setting seen from the second job: partition pairs reversed, caps unchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            cpu_partition: (self.cpu_partition.1, self.cpu_partition.0),
            gpu_partition: (self.gpu_partition.1, self.gpu_partition.0),
            ..*self
        }
    }

    pub fn cap_sum(&self) -> u32 {
        self.cpu_cap + self.gpu_cap
    }

    /// Checks membership in `space` and rejects configs that mix solo and co-run partitions.
    pub fn validate(&self, space: &ConfigSpace) -> Result<ConfigKind> {
        if !space.cpu_partitions.contains(&self.cpu_partition) {
            return Err(Error::InvalidConfig(format!("cpu partition {:?} not in space", self.cpu_partition)));
        }
        if !space.gpu_partitions.contains(&self.gpu_partition) {
            return Err(Error::InvalidConfig(format!("gpu partition {:?} not in space", self.gpu_partition)));
        }
        if !space.cpu_caps.contains(&self.cpu_cap) {
            return Err(Error::InvalidConfig(format!("cpu cap {} W not in space", self.cpu_cap)));
        }
        if !space.gpu_caps.contains(&self.gpu_cap) {
            return Err(Error::InvalidConfig(format!("gpu cap {} W not in space", self.gpu_cap)));
        }
        if self.is_solo() {
            Ok(ConfigKind::Solo)
        } else if self.is_corun() {
            Ok(ConfigKind::CoRun)
        } else {
            Err(Error::InvalidConfig(format!(
                "degenerate config mixes solo and co-run partitions: cpu {:?}, gpu {:?}",
                self.cpu_partition, self.gpu_partition
            )))
        }
    }
}

/// Legal partitions and caps plus the node power budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigSpace {
    #[serde(rename = "R_c")]
    pub cpu_partitions: Vec<(u32, u32)>,
    #[serde(rename = "R_g")]
    pub gpu_partitions: Vec<(u32, u32)>,
    #[serde(rename = "P_c")]
    pub cpu_caps: Vec<u32>,
    #[serde(rename = "P_g")]
    pub gpu_caps: Vec<u32>,
    #[serde(rename = "P_total")]
    pub p_total: u32,
    #[serde(rename = "P_max")]
    pub p_max: u32,
}

impl ConfigSpace {
    /// The full partition and cap grid with the given node budget.
    pub fn with_budget(p_total: u32) -> Self {
        Self {
            cpu_partitions: CPU_PARTITIONS.to_vec(),
            gpu_partitions: GPU_PARTITIONS.to_vec(),
            cpu_caps: CPU_CAPS.to_vec(),
            gpu_caps: GPU_CAPS.to_vec(),
            p_total,
            p_max: P_MAX,
        }
    }

    /// Same grids, different node budget.
    pub fn clone_with_budget(&self, p_total: u32) -> Self {
        Self {
            p_total,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpace(msg));
        if self.p_total == 0 {
            return bad("P_total must be positive".into());
        }
        if self.p_total > self.p_max {
            return bad(format!("P_total {} exceeds P_max {}", self.p_total, self.p_max));
        }
        for p in &self.cpu_partitions {
            if !CPU_PARTITIONS.contains(p) {
                return bad(format!("unsupported cpu partition {p:?}"));
            }
        }
        for p in &self.gpu_partitions {
            if !GPU_PARTITIONS.contains(p) {
                return bad(format!("unsupported gpu partition {p:?}"));
            }
        }
        if !self.cpu_partitions.contains(&CPU_PARTITIONS[5]) || !self.gpu_partitions.contains(&GPU_PARTITIONS[2]) {
            return bad("solo partitions (32,0) and (8,0) must be present".into());
        }
        for (name, caps) in [("P_c", &self.cpu_caps), ("P_g", &self.gpu_caps)] {
            if caps.is_empty() {
                return bad(format!("{name} is empty"));
            }
            if caps.iter().any(|&c| c == 0 || c > self.p_max) {
                return bad(format!("{name} caps must lie in (0, P_max]"));
            }
            let mut sorted = caps.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != caps.len() {
                return bad(format!("{name} contains duplicates"));
            }
        }
        Ok(())
    }

    pub fn max_cores(&self) -> u32 {
        self.cpu_partitions.iter().map(|p| p.0).max().unwrap_or(0)
    }

    pub fn max_gpcs(&self) -> u32 {
        self.gpu_partitions.iter().map(|p| p.0).max().unwrap_or(0)
    }

    pub fn max_cpu_cap(&self) -> u32 {
        self.cpu_caps.iter().copied().max().unwrap_or(0)
    }

    pub fn max_gpu_cap(&self) -> u32 {
        self.gpu_caps.iter().copied().max().unwrap_or(0)
    }

    pub fn corun_cpu_partitions(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.cpu_partitions.iter().copied().filter(|p| p.0 > 0 && p.1 > 0)
    }

    pub fn corun_gpu_partitions(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.gpu_partitions.iter().copied().filter(|p| p.0 > 0 && p.1 > 0)
    }

    /// Cap pairs accepted by `keep`, CPU cap outer, both in listing order.
    fn cap_pairs(&self, keep: impl Fn(u32) -> bool) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for &c in &self.cpu_caps {
            for &g in &self.gpu_caps {
                if keep(c + g) {
                    out.push((c, g));
                }
            }
        }
        out
    }

    fn corun_configs_with(&self, caps: &[(u32, u32)]) -> Vec<HardwareConfig> {
        let mut out = Vec::new();
        for cpu in self.corun_cpu_partitions() {
            for gpu in self.corun_gpu_partitions() {
                for &(c, g) in caps {
                    out.push(HardwareConfig::new(cpu, gpu, c, g));
                }
            }
        }
        out
    }
}

/// Every co-run config with `cpu_cap + gpu_cap <= P_total`, in lexicographic listing order.
pub fn enumerate_corun_configs(space: &ConfigSpace) -> Vec<HardwareConfig> {
    let caps = space.cap_pairs(|sum| sum <= space.p_total);
    space.corun_configs_with(&caps)
}

/// Cap pairs summing exactly to `P_total`, CPU cap ascending.
pub fn enumerate_solo_splits(space: &ConfigSpace) -> Vec<(u32, u32)> {
    space.cap_pairs(|sum| sum == space.p_total)
}

/// Co-run configs whose cap sum equals one of `budgets` (the labelled training grid).
/// With the default budgets this is the 100-setup grid: 5 CPU x 2 GPU partitions x 10 cap pairs.
pub fn enumerate_budget_configs(space: &ConfigSpace, budgets: &[u32]) -> Vec<HardwareConfig> {
    let caps = space.cap_pairs(|sum| budgets.contains(&sum));
    space.corun_configs_with(&caps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_cap_pairs(p_total: u32) -> usize {
        let mut n = 0;
        for c in CPU_CAPS {
            for g in GPU_CAPS {
                if c + g <= p_total {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn corun_count_matches_product_rule() {
        for p in [249, 250, 300, 350, 400, 500] {
            let space = ConfigSpace::with_budget(p);
            assert_eq!(enumerate_corun_configs(&space).len(), 5 * 2 * brute_cap_pairs(p), "p_total={p}");
        }
    }

    #[test]
    fn corun_edge_budgets() {
        assert!(enumerate_corun_configs(&ConfigSpace::with_budget(249)).is_empty());
        let at_min = enumerate_corun_configs(&ConfigSpace::with_budget(250));
        assert_eq!(at_min.len(), 10);
        assert!(at_min.iter().all(|hc| hc.cpu_cap == 100 && hc.gpu_cap == 150));
    }

    #[test]
    fn corun_configs_are_valid_unique_and_ordered() {
        let space = ConfigSpace::with_budget(400);
        let configs = enumerate_corun_configs(&space);
        let mut seen = std::collections::HashSet::new();
        for hc in &configs {
            assert_eq!(hc.validate(&space).unwrap(), ConfigKind::CoRun);
            assert!(hc.cap_sum() <= 400);
            assert!(seen.insert(*hc));
        }
        assert_eq!(configs[0], HardwareConfig::new((2, 30), (3, 4), 100, 150));
        assert_eq!(*configs.last().unwrap(), HardwareConfig::new((30, 2), (4, 3), 250, 150));
    }

    #[test]
    fn solo_splits() {
        let s350 = enumerate_solo_splits(&ConfigSpace::with_budget(350));
        assert_eq!(s350, vec![(100, 250), (125, 225), (150, 200), (175, 175), (200, 150)]);
        let s400 = enumerate_solo_splits(&ConfigSpace::with_budget(400));
        assert_eq!(s400, vec![(150, 250), (175, 225), (200, 200), (225, 175), (250, 150)]);
        assert!(enumerate_solo_splits(&ConfigSpace::with_budget(351)).is_empty());
    }

    #[test]
    fn training_grid_has_one_hundred_setups() {
        let space = ConfigSpace::with_budget(400);
        let grid = enumerate_budget_configs(&space, &DEFAULT_BUDGETS);
        assert_eq!(grid.len(), 100);
        assert!(grid.iter().all(|hc| hc.cap_sum() == 350 || hc.cap_sum() == 400));
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        let space = ConfigSpace::with_budget(400);
        let mixed = HardwareConfig::new((32, 0), (4, 3), 200, 200);
        assert!(matches!(mixed.validate(&space), Err(Error::InvalidConfig(_))));
        let off_grid = HardwareConfig::new((16, 16), (4, 3), 110, 200);
        assert!(off_grid.validate(&space).is_err());
        assert_eq!(HardwareConfig::solo(250, 250).validate(&space).unwrap(), ConfigKind::Solo);
    }

    #[test]
    fn space_validation() {
        assert!(ConfigSpace::with_budget(400).validate().is_ok());
        assert!(ConfigSpace::with_budget(501).validate().is_err());
        assert!(ConfigSpace::with_budget(0).validate().is_err());
        let mut s = ConfigSpace::with_budget(350);
        s.cpu_partitions.push((1, 31));
        assert!(s.validate().is_err());
        let mut s = ConfigSpace::with_budget(350);
        s.gpu_partitions.retain(|p| p.1 != 0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_uses_table_field_names() {
        let json = serde_json::to_value(ConfigSpace::with_budget(350)).unwrap();
        for key in ["R_c", "R_g", "P_c", "P_g", "P_total", "P_max"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let back: ConfigSpace = serde_json::from_value(json).unwrap();
        assert_eq!(back, ConfigSpace::with_budget(350));
    }
}
