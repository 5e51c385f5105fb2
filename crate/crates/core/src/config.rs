//! Experiment configuration files (TOML).
//!
//! Every key is optional; missing keys take the library defaults. Command-line
//! flags are applied on top of a loaded file, so the precedence is
//! flags > file > defaults.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [system]
//! kind = "example1"          # example1 | cantor | two_component | expanding | custom
//! p = 0.3
//! a = [[0.0, 0.5]]
//!
//! [chain]
//! burn_in = 1000
//! sample_count = 100000
//! initial_point = "uniform"  # or a number
//!
//! [estimator]
//! n_max = 5
//! deltas = [0.1, 0.01, 0.001, 0.0001]
//! theta = -20.0
//!
//! [dimension]
//! radii = [0.111, 0.037, 0.0123]
//! quantile = 0.1
//! tolerance = 0.05
//!
//! [invariant]
//! n_list = [10, 100, 1000]
//! grid_level = 20            # omit with coarsen = false for exact averages
//! ```
//!
//! A custom system lists its maps and probabilities:
//!
//! ```toml
//! [system]
//! kind = "custom"
//! domain = [0.0, 1.0]
//! p_min = 0.25
//! maps = [
//!   { slope = 0.5, intercept = 0.0 },
//!   { pieces = [{ start = 0.0, end = 0.5, slope = 0.5, intercept = 0.5 },
//!               { start = 0.5, end = 1.0, slope = 0.5, intercept = 0.25 }] },
//! ]
//! probabilities = [
//!   0.5,
//!   { default = 0.5, pieces = [{ intervals = [[0.0, 0.25]], value = 0.5 }] },
//! ]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::chain::{ChainConfig, InitialPoint, DEFAULT_BURN_IN, DEFAULT_GRID_LEVEL};
use crate::dimension::{default_radii, BoundConfig, DEFAULT_N_MAX, DEFAULT_QUANTILE, DEFAULT_SAMPLE_COUNT, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorOptions, DEFAULT_DELTAS, DEFAULT_PROBES, DEFAULT_THETA, DEFAULT_WORD_BUDGET};
use crate::interval::IntervalSet;
use crate::system::{
    cantor_system, example1_system, expanding_system, two_component_system, AffinePiece, Domain, IfsMap, IfsSystem,
    PiecewisePiece, ProbabilityFn,
};

/// Seed used when neither the file nor the command line sets one.
pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn default_n_list() -> Vec<usize> {
    vec![10, 100, 1000]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Example1 {
        p: f64,
        #[serde(default = "default_a_pairs")]
        a: Vec<(f64, f64)>,
    },
    Cantor {
        #[serde(default = "half")]
        q: f64,
    },
    TwoComponent,
    Expanding,
    Custom {
        #[serde(default = "unit_domain")]
        domain: (f64, f64),
        p_min: f64,
        maps: Vec<MapSpec>,
        probabilities: Vec<ProbabilitySpec>,
    },
}

fn default_a_pairs() -> Vec<(f64, f64)> {
    vec![(0.0, 0.5)]
}

fn half() -> f64 {
    0.5
}

fn unit_domain() -> (f64, f64) {
    (0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    Affine { slope: f64, intercept: f64 },
    Piecewise { pieces: Vec<PieceSpec> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub start: f64,
    pub end: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ProbabilitySpec {
    Constant(f64),
    Piecewise { default: f64, pieces: Vec<ProbabilityPieceSpec> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilityPieceSpec {
    pub intervals: Vec<(f64, f64)>,
    pub value: f64,
}

impl SystemSpec {
    pub fn build(&self) -> Result<IfsSystem> {
        match self {
            SystemSpec::Example1 { p, a } => example1_system(*p, IntervalSet::new(a.iter().copied())?),
            SystemSpec::Cantor { q } => cantor_system(*q),
            SystemSpec::TwoComponent => Ok(two_component_system()),
            SystemSpec::Expanding => Ok(expanding_system()),
            SystemSpec::Custom {
                domain,
                p_min,
                maps,
                probabilities,
            } => {
                let maps = maps
                    .iter()
                    .map(|m| match m {
                        MapSpec::Affine { slope, intercept } => IfsMap::affine(*slope, *intercept),
                        MapSpec::Piecewise { pieces } => IfsMap::PiecewiseAffine(
                            pieces
                                .iter()
                                .map(|p| AffinePiece {
                                    start: p.start,
                                    end: p.end,
                                    slope: p.slope,
                                    intercept: p.intercept,
                                })
                                .collect(),
                        ),
                    })
                    .collect();
                let probabilities = probabilities
                    .iter()
                    .map(|p| match p {
                        ProbabilitySpec::Constant(c) => Ok(ProbabilityFn::Constant(*c)),
                        ProbabilitySpec::Piecewise { default, pieces } => Ok(ProbabilityFn::Piecewise(
                            pieces
                                .iter()
                                .map(|piece| {
                                    Ok(PiecewisePiece {
                                        set: IntervalSet::new(piece.intervals.iter().copied())?,
                                        value: piece.value,
                                    })
                                })
                                .collect::<Result<_>>()?,
                            *default,
                        )),
                    })
                    .collect::<Result<_>>()?;
                IfsSystem::new(Domain::new(domain.0, domain.1)?, maps, probabilities, *p_min)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum InitialPointSpec {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    system: Option<SystemSpec>,
    #[serde(default)]
    chain: RawChain,
    #[serde(default)]
    estimator: RawEstimator,
    #[serde(default)]
    dimension: RawDimension,
    #[serde(default)]
    invariant: RawInvariant,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    burn_in: Option<usize>,
    sample_count: Option<usize>,
    initial_point: Option<InitialPointSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    n_max: Option<usize>,
    deltas: Option<Vec<f64>>,
    theta: Option<f64>,
    probes: Option<usize>,
    word_budget: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDimension {
    radii: Option<Vec<f64>>,
    quantile: Option<f64>,
    tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInvariant {
    n_list: Option<Vec<usize>>,
    grid_level: Option<u32>,
    coarsen: Option<bool>,
    initial_point: Option<f64>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `None` until set by a file or flag; [`Self::seed`] falls back to [`DEFAULT_SEED`].
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub system: Option<SystemSpec>,
    pub burn_in: usize,
    pub sample_count: usize,
    pub initial_point: InitialPoint,
    pub n_max: usize,
    pub deltas: Vec<f64>,
    pub theta: f64,
    pub probes: usize,
    pub word_budget: u128,
    pub radii: Vec<f64>,
    pub quantile: f64,
    pub tolerance: f64,
    pub n_list: Vec<usize>,
    /// `None` disables coarsening.
    pub grid_level: Option<u32>,
    /// Starting point of the Krylov–Bogolyubov averages (a Dirac mass).
    pub invariant_start: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: None,
            output_dir: None,
            system: None,
            burn_in: DEFAULT_BURN_IN,
            sample_count: DEFAULT_SAMPLE_COUNT,
            initial_point: InitialPoint::Uniform,
            n_max: DEFAULT_N_MAX,
            deltas: DEFAULT_DELTAS.to_vec(),
            theta: DEFAULT_THETA,
            probes: DEFAULT_PROBES,
            word_budget: DEFAULT_WORD_BUDGET,
            radii: default_radii(),
            quantile: DEFAULT_QUANTILE,
            tolerance: DEFAULT_TOLERANCE,
            n_list: default_n_list(),
            grid_level: Some(DEFAULT_GRID_LEVEL),
            invariant_start: 0.5,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = ExperimentConfig::default();
        cfg.seed = raw.seed;
        cfg.output_dir = raw.output_dir;
        cfg.system = raw.system;

        let c = raw.chain;
        set(&mut cfg.burn_in, c.burn_in);
        set(&mut cfg.sample_count, c.sample_count);
        if let Some(init) = c.initial_point {
            cfg.initial_point = match init {
                InitialPointSpec::Fixed(x) => InitialPoint::Fixed(x),
                InitialPointSpec::Named(name) if name == "uniform" => InitialPoint::Uniform,
                InitialPointSpec::Named(name) => {
                    return Err(Error::Config(format!(
                        "chain.initial_point must be a number or \"uniform\", got \"{name}\""
                    )))
                }
            };
        }

        let e = raw.estimator;
        set(&mut cfg.n_max, e.n_max);
        set(&mut cfg.deltas, e.deltas);
        set(&mut cfg.theta, e.theta);
        set(&mut cfg.probes, e.probes);
        set(&mut cfg.word_budget, e.word_budget.map(u128::from));

        let d = raw.dimension;
        set(&mut cfg.radii, d.radii);
        set(&mut cfg.quantile, d.quantile);
        set(&mut cfg.tolerance, d.tolerance);

        let inv = raw.invariant;
        set(&mut cfg.n_list, inv.n_list);
        if inv.coarsen == Some(false) {
            if inv.grid_level.is_some() {
                return Err(Error::Config("invariant.grid_level conflicts with coarsen = false".into()));
            }
            cfg.grid_level = None;
        } else if let Some(level) = inv.grid_level {
            cfg.grid_level = Some(level);
        }
        set(&mut cfg.invariant_start, inv.initial_point);
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn build_system(&self) -> Result<IfsSystem> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Config("no system given (set [system] kind or --system)".into()))?
            .build()
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            seed: self.seed(),
            burn_in: self.burn_in,
            sample_count: self.sample_count,
            initial_point: self.initial_point,
        }
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            theta: self.theta,
            probes: self.probes,
            word_budget: self.word_budget,
        }
    }

    pub fn bound_config(&self) -> BoundConfig {
        BoundConfig {
            chain: self.chain_config(),
            n_max: self.n_max,
            deltas: self.deltas.clone(),
            estimator: self.estimator_options(),
            radii: self.radii.clone(),
            quantile: self.quantile,
            tolerance: self.tolerance,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
