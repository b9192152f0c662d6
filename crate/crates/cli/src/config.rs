//! JSON run configuration: which system to build, which potentials to
//! register, and the grid/window/basis/predicate parameters shared by the
//! subcommands.

use geothermo::error::{Error, Result};
use geothermo::fuchsian::{Disk, Mat2, SchottkySystem};
use geothermo::orbits::{ClosedOrbit, Potential, PotentialSet};
use geothermo::symbolic::ShiftSystem;
use serde::Deserialize;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub system: SystemConfig,
    pub potentials: Vec<PotentialConfig>,
    /// Name of the registered potential used as the orbit weight f.
    pub weight_potential: String,
    pub t_grid: GridConfig,
    pub window: f64,
    #[serde(default)]
    pub basis: Option<BasisConfig>,
    #[serde(default)]
    pub predicate: Option<PredicateConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Shift {
        adjacency: Vec<Vec<u8>>,
        roof: Vec<f64>,
    },
    Schottky {
        generators: Vec<[[f64; 2]; 2]>,
        disks: Vec<DiskConfig>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    pub center: f64,
    pub radius: f64,
}

#[derive(Deserialize)]
pub struct PotentialConfig {
    pub name: String,
    #[serde(flatten)]
    pub kind: PotentialKind,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Constant(f64),
    PerSymbol(Vec<f64>),
    Cylinder { depth: usize, weights: Vec<CylinderEntry> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderEntry {
    pub word: Vec<u8>,
    pub value: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "default_basis_depth")]
    pub depth: usize,
    #[serde(default = "default_basis_size")]
    pub size: usize,
}

fn default_basis_depth() -> usize {
    2
}

fn default_basis_size() -> usize {
    16
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { depth: default_basis_depth(), size: default_basis_size() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateConfig {
    pub observable: String,
    pub direction: DirectionConfig,
    pub threshold: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
pub enum DirectionConfig {
    AtLeast,
    AtMost,
}

impl RunConfig {
    pub fn load(path: &Path) -> std::result::Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
        if config.schema != 1 {
            return Err(format!("unsupported schema version {}", config.schema));
        }
        if !(config.t_grid.start < config.t_grid.stop) || !(config.t_grid.step > 0.0) {
            return Err("t_grid requires start < stop and a positive step".into());
        }
        if !(config.window > 0.0) {
            return Err("window must be positive".into());
        }
        Ok(config)
    }
}

/// A realized system, either backend.
pub enum SystemHandle {
    Shift(ShiftSystem),
    Schottky(SchottkySystem),
}

impl SystemHandle {
    /// All orbits of length at most `horizon`, with every registered
    /// potential integrated and cached.
    pub fn enumerate(&self, horizon: f64, set: &PotentialSet) -> Result<Vec<ClosedOrbit>> {
        let mut orbits = match self {
            SystemHandle::Shift(shift) => {
                let max_len = shift.word_length_for_horizon(horizon);
                shift.enumerate_orbits(max_len, set)?
            }
            SystemHandle::Schottky(system) => system.enumerate_classes(horizon, set)?,
        };
        orbits.retain(|o| o.length() <= horizon);
        Ok(orbits)
    }

    pub fn validate_observable(&self, p: &Potential) -> Result<()> {
        match self {
            SystemHandle::Shift(shift) => shift.validate_observable(p),
            SystemHandle::Schottky(system) => system.validate_observable(p),
        }
    }
}

impl SystemConfig {
    pub fn realize(&self) -> Result<SystemHandle> {
        match self {
            SystemConfig::Shift { adjacency, roof } => Ok(SystemHandle::Shift(
                ShiftSystem::new(adjacency.clone(), roof.clone())?,
            )),
            SystemConfig::Schottky { generators, disks } => {
                let mats = generators
                    .iter()
                    .map(|m| Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]))
                    .collect();
                let disks = disks.iter().map(|d| Disk::new(d.center, d.radius)).collect();
                Ok(SystemHandle::Schottky(SchottkySystem::new(mats, disks)?))
            }
        }
    }
}

impl PotentialConfig {
    pub fn realize(&self) -> Result<Potential> {
        match &self.kind {
            PotentialKind::Constant(c) => Ok(Potential::constant(*c)),
            PotentialKind::PerSymbol(values) => Ok(Potential::per_symbol(values)),
            PotentialKind::Cylinder { depth, weights } => {
                let mut map = HashMap::new();
                for entry in weights {
                    if map.insert(entry.word.clone(), entry.value).is_some() {
                        return Err(Error::InvalidPotential(format!(
                            "duplicate cylinder word {:?} in potential '{}'",
                            entry.word, self.name
                        )));
                    }
                }
                Potential::cylinder(*depth, map)
            }
        }
    }
}

/// Register every configured potential; returns the set and the index of the
/// weight potential.
pub fn build_potentials(
    config: &RunConfig,
    system: &SystemHandle,
) -> Result<(PotentialSet, usize)> {
    let mut set = PotentialSet::new();
    for item in &config.potentials {
        let potential = item.realize()?;
        system.validate_observable(&potential)?;
        set.push(item.name.clone(), potential)?;
    }
    let weight_index = set.index_of(&config.weight_potential).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "weight_potential '{}' is not a configured potential",
            config.weight_potential
        ))
    })?;
    Ok((set, weight_index))
}
