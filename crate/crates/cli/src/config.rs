//! Run configuration, read from a TOML file. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use landscape_core::agmon::Stencil;
use landscape_core::eigensolve::EigenOptions;
use landscape_core::ensemble::{gen_bernoulli_2d, gen_uniform_1d, Demo2dConfig, EnsembleConfig, RealizationConfig};
use landscape_core::grid::{build_grid, GridSpec, Topology};
use landscape_core::landscape::DEFAULT_LANDSCAPE_TOL;
use landscape_core::operator::CoefficientField;
use landscape_core::verify::SuiteConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub coefficients: Option<CoefficientSource>,
    #[serde(default = "default_landscape_tol")]
    pub landscape_tol: f64,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub eigs: EigsConfig,
    pub wells: Option<WellsConfig>,
    pub agmon: Option<AgmonConfig>,
    #[serde(default)]
    pub verify: SuiteConfig,
    pub realization: Option<RealizationConfig>,
    pub ensemble: Option<EnsembleConfig>,
    pub demo2d: Option<Demo2dConfig>,
}

fn default_landscape_tol() -> f64 {
    DEFAULT_LANDSCAPE_TOL
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub extent: Vec<usize>,
    #[serde(default = "default_cells_per_unit")]
    pub cells_per_unit: usize,
    #[serde(default = "default_topology")]
    pub topology: Topology,
}

fn default_cells_per_unit() -> usize {
    landscape_core::grid::DEFAULT_CELLS_PER_UNIT
}

fn default_topology() -> Topology {
    Topology::Torus
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefficientSource {
    /// Per-unit-cell uniform draws on `[0, v_bar)`; 1D torus only.
    Uniform { seed: u64, v_bar: f64 },
    /// Per-unit-square Bernoulli draws; 2D torus only.
    Bernoulli { seed: u64, v_high: f64, prob: f64 },
    /// CSV with columns `node_index,V[,a0,a1,m]`.
    File { path: PathBuf, v_bar: Option<f64> },
    /// `V` constant, `a = m = 1`.
    Constant { value: f64, v_bar: Option<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigsConfig {
    pub count: usize,
    /// Also solve on every well neighborhood (needs `[wells]`).
    pub localized: bool,
    pub k_per_well: usize,
}

impl Default for EigsConfig {
    fn default() -> Self {
        EigsConfig {
            count: 10,
            localized: false,
            k_per_well: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellsConfig {
    /// Defaults to the `mu_bar_index`-th global eigenvalue.
    pub mu_bar: Option<f64>,
    #[serde(default = "one")]
    pub mu_bar_index: usize,
    pub delta: f64,
    #[serde(default)]
    pub merge_threshold: f64,
    #[serde(default)]
    pub stencil: Stencil,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgmonConfig {
    pub mu: f64,
    /// Explicit source nodes.
    #[serde(default)]
    pub sources: Vec<usize>,
    /// Use the sublevel set `{1/u <= level}` as sources instead.
    pub source_level: Option<f64>,
    #[serde(default)]
    pub stencil: Stencil,
}

/// Raw text plus the parsed form; the text is echoed into the outputs.
pub struct LoadedConfig {
    pub text: String,
    pub config: RunConfig,
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let config: RunConfig = toml::from_str(&text)?;
    Ok(LoadedConfig { text, config })
}

impl RunConfig {
    /// Overrides every seed base: the ensemble base seed and the seeds of
    /// single-instance generators.
    pub fn apply_seed_base(&mut self, base: u64) {
        if let Some(e) = self.ensemble.as_mut() {
            e.seed_base = base;
        }
        if let Some(r) = self.realization.as_mut() {
            r.seed = base;
        }
        if let Some(d) = self.demo2d.as_mut() {
            d.seed = base;
        }
        match self.coefficients.as_mut() {
            Some(CoefficientSource::Uniform { seed, .. }) | Some(CoefficientSource::Bernoulli { seed, .. }) => {
                *seed = base
            }
            _ => {}
        }
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        value
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid(format!("missing [{name}] section")))
    }

    /// Grid and coefficients for the single-instance subcommands.
    pub fn problem(&self) -> Result<(GridSpec, CoefficientField), ConfigError> {
        let g = self.section(&self.grid, "grid")?;
        let source = self.section(&self.coefficients, "coefficients")?;
        let invalid = |e: landscape_core::Error| ConfigError::Invalid(e.to_string());
        let torus_only = |dim: usize, what: &str| {
            if g.dim != dim || g.topology != Topology::Torus {
                Err(ConfigError::Invalid(format!("{what} coefficients need a {dim}D torus grid")))
            } else {
                Ok(())
            }
        };
        match source {
            CoefficientSource::Uniform { seed, v_bar } => {
                torus_only(1, "uniform")?;
                gen_uniform_1d(*seed, g.extent[0], *v_bar, g.cells_per_unit).map_err(invalid)
            }
            CoefficientSource::Bernoulli { seed, v_high, prob } => {
                torus_only(2, "bernoulli")?;
                if g.extent.len() != 2 || g.extent[0] != g.extent[1] {
                    return Err(ConfigError::Invalid("bernoulli coefficients need a square grid".into()));
                }
                gen_bernoulli_2d(*seed, g.extent[0], *v_high, *prob, g.cells_per_unit).map_err(invalid)
            }
            CoefficientSource::File { path, v_bar } => {
                let grid = build_grid(g.dim, &g.extent, g.cells_per_unit, g.topology).map_err(invalid)?;
                let c = CoefficientField::from_csv(path, grid.node_count(), *v_bar).map_err(invalid)?;
                Ok((grid, c))
            }
            CoefficientSource::Constant { value, v_bar } => {
                let grid = build_grid(g.dim, &g.extent, g.cells_per_unit, g.topology).map_err(invalid)?;
                let c = CoefficientField::from_potential(vec![*value; grid.node_count()], *v_bar).map_err(invalid)?;
                Ok((grid, c))
            }
        }
    }
}
