//! Run configuration files (TOML, or JSON by `.json` extension) for fits and
//! simulations.
//!
//! ```toml
//! theta = [-0.7, 1.0]
//!
//! [model]
//! family = "overlap_area"
//! radius = 1.0
//!
//! [window]
//! xmin = 0.0
//! xmax = 20.0
//! ymin = 0.0
//! ymax = 20.0
//!
//! [fit]
//! cell = 1.0
//! dvee = 1.0
//! grid = [256, 256]
//!
//! [simulate]
//! steps = 200000
//! burn_in = 100000
//! seed = 7
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Window;
use crate::inference::FitOptions;
use crate::models::{ModelSpec, PairBands};
use crate::quadrature::{DEFAULT_GRID, DEFAULT_MARK_NODES};
use crate::simulate::{ProposalMix, SimConfig, DEFAULT_BURN_IN, DEFAULT_STEPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub types: [u32; 2],
    pub radii: Vec<f64>,
}

/// Model family and its irregular parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Poisson,
    Strauss { radius: f64 },
    OverlapArea { radius: f64 },
    MultiStrauss { marks: u32, bands: Vec<BandConfig> },
    KnnMultiStrauss { marks: u32, k: usize, bands: Vec<BandConfig> },
    StraussDisc { max_mark: f64 },
    GeyerTriplet { radius: f64 },
    AreaInteraction { radius: f64 },
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec<f64>> {
        let bands = |b: &[BandConfig]| -> Vec<PairBands<f64>> {
            b.iter().map(|c| PairBands { types: (c.types[0], c.types[1]), radii: c.radii.clone() }).collect()
        };
        match self {
            Self::Poisson => Ok(ModelSpec::poisson()),
            Self::Strauss { radius } => ModelSpec::strauss(*radius),
            Self::OverlapArea { radius } => ModelSpec::overlap_area(*radius),
            Self::MultiStrauss { marks, bands: b } => ModelSpec::multi_strauss(*marks, &bands(b)),
            Self::KnnMultiStrauss { marks, k, bands: b } => ModelSpec::knn_multi_strauss(*marks, &bands(b), *k),
            Self::StraussDisc { max_mark } => ModelSpec::strauss_disc(*max_mark),
            Self::GeyerTriplet { radius } => ModelSpec::geyer_triplet(*radius),
            Self::AreaInteraction { radius } => ModelSpec::area_interaction(*radius),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Block side for the score covariance; defaults to the interaction range.
    pub cell: Option<f64>,
    /// Dependence range; defaults to the interaction range.
    pub dvee: Option<f64>,
    pub grid: Option<[usize; 2]>,
    pub mark_nodes: Option<usize>,
    pub level: Option<f64>,
    pub max_iter: Option<usize>,
    pub grad_tol: Option<f64>,
    /// Explicit fit window; by default the observation window eroded by
    /// `dvee` and shrunk to a multiple of `cell`.
    pub fit_window: Option<Window<f64>>,
    /// Starting point of the solver.
    pub theta0: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub steps: Option<u64>,
    pub burn_in: Option<u64>,
    pub seed: Option<u64>,
    pub mix: Option<ProposalMix<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Parameters for simulation, residuals and statistics at a given point.
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    /// Observation window of the data, or the simulation window.
    #[serde(default)]
    pub window: Option<Window<f64>>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub simulate: SimSection,
}

/// Everything a fit needs, with defaults resolved.
#[derive(Clone, Debug)]
pub struct FitPlan {
    pub model: ModelSpec<f64>,
    pub window: Window<f64>,
    pub fit_window: Window<f64>,
    pub cell: f64,
    pub dvee: f64,
    pub grid: (usize, usize),
    pub mark_nodes: usize,
    pub options: FitOptions<f64>,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Configuration(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Configuration(e.to_string()))
    }

    /// Reads a config file, as JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        };
        parsed.map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))
    }

    pub fn window(&self) -> Result<Window<f64>> {
        let w = self.window.ok_or_else(|| Error::Configuration("missing [window] section".into()))?;
        Window::new(w.xmin, w.xmax, w.ymin, w.ymax)
    }

    pub fn theta(&self) -> Result<Vec<f64>> {
        self.theta.clone().ok_or_else(|| Error::Configuration("missing theta".into()))
    }

    pub fn fit_plan(&self) -> Result<FitPlan> {
        let model = self.model.build()?;
        let window = self.window()?;
        let range = model.range();
        let f = &self.fit;
        // A range-free model has no natural block size; unit cells then.
        let natural = if range > 0.0 { range } else { 1.0 };
        let cell = f.cell.unwrap_or(natural);
        let dvee = f.dvee.unwrap_or(range);
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::Configuration(format!("cell size {cell} must be positive")));
        }
        if !(dvee >= 0.0 && dvee.is_finite()) {
            return Err(Error::Configuration(format!("dependence range {dvee} must be nonnegative")));
        }
        let fit_window = match f.fit_window {
            Some(w) => Window::new(w.xmin, w.xmax, w.ymin, w.ymax)?,
            None => window.erode(dvee.max(range))?.snap_to_multiple(cell)?,
        };
        let [nx, ny] = f.grid.unwrap_or([DEFAULT_GRID, DEFAULT_GRID]);
        let defaults = FitOptions::<f64>::default();
        let options = FitOptions {
            max_iter: f.max_iter.unwrap_or(defaults.max_iter),
            grad_tol: f.grad_tol.unwrap_or(defaults.grad_tol),
            level: f.level.unwrap_or(defaults.level),
            theta0: f.theta0.clone(),
            ..defaults
        };
        Ok(FitPlan {
            model,
            window,
            fit_window,
            cell,
            dvee,
            grid: (nx, ny),
            mark_nodes: f.mark_nodes.unwrap_or(DEFAULT_MARK_NODES),
            options,
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig<f64>> {
        let s = &self.simulate;
        let base = SimConfig::new(self.model.build()?, self.theta()?, self.window()?);
        let cfg = SimConfig {
            steps: s.steps.unwrap_or(DEFAULT_STEPS),
            burn_in: s.burn_in.unwrap_or(DEFAULT_BURN_IN.min(s.steps.unwrap_or(DEFAULT_STEPS))),
            seed: s.seed.unwrap_or(0),
            mix: s.mix.unwrap_or_default(),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
