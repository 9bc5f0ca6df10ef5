use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::DcResistivity;
use super::grid::Grid2D;
use super::layout::{prolong, restrict, SourceReceiverLayout};
use super::operator::{solve_pde, PdeOperator, PdeSolver};
use super::transfer::Transfer;
use crate::error::{Error, Result};
use crate::nls::{Dataset, Weighting};
use crate::rng::{fill_normal, stream_rng};

/// Shift of the smoothing preconditioner used by
/// [`SyntheticExperiment::forward_model`].
pub const DEFAULT_SMOOTHING: f64 = 3e-3;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` of constant conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub mu: f64,
}

impl Block {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Piecewise-constant true conductivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrueModel {
    /// A `mu = 1` square target in a `mu = 0.1` background.
    E1,
    /// A conductive `mu = 0.01` and a resistive `mu = 1` block in a
    /// `mu = 0.1` background.
    E2,
    /// Later blocks override earlier ones.
    Custom { background: f64, blocks: Vec<Block> },
}

impl TrueModel {
    pub const BACKGROUND: f64 = 0.1;

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1" | "e.1" => Ok(TrueModel::E1),
            "e2" | "e.2" => Ok(TrueModel::E2),
            _ => Err(Error::Config(format!("unknown example {s:?}, expected E1 or E2"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrueModel::E1 => "E1",
            TrueModel::E2 => "E2",
            TrueModel::Custom { .. } => "custom",
        }
    }

    fn parts(&self) -> (f64, Vec<Block>) {
        let bg = Self::BACKGROUND;
        match self {
            TrueModel::E1 => (bg, vec![Block { x0: 0.375, x1: 0.625, y0: 0.375, y1: 0.625, mu: 1.0 }]),
            TrueModel::E2 => (
                bg,
                vec![
                    Block { x0: 0.1875, x1: 0.4375, y0: 0.5, y1: 0.75, mu: 0.01 },
                    Block { x0: 0.5625, x1: 0.8125, y0: 0.25, y1: 0.5, mu: 1.0 },
                ],
            ),
            TrueModel::Custom { background, blocks } => (*background, blocks.clone()),
        }
    }

    /// Conductivity at every cell center of `grid`.
    pub fn conductivity(&self, grid: Grid2D) -> Vec<f64> {
        let (bg, blocks) = self.parts();
        grid.sample(|x, y| blocks.iter().rev().find(|b| b.contains(x, y)).map_or(bg, |b| b.mu))
    }
}

/// Data synthesis settings. The data are computed on a grid `fine_factor`
/// times finer than the reconstruction grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub model: TrueModel,
    pub grid: Grid2D,
    pub p: usize,
    pub fine_factor: usize,
    pub noise_pct: f64,
    pub tau: f64,
    pub seed: u64,
    /// CG tolerance for the synthesis solves; `None` solves directly.
    pub cg_tol: Option<f64>,
}

impl SynthesisConfig {
    /// 32x32 reconstruction grid, `p = 15` (`s = 225`), 64x64 synthesis grid.
    pub fn desk(model: TrueModel, seed: u64) -> Self {
        Self {
            model,
            grid: Grid2D::square(32).expect("valid grid"),
            p: 15,
            fine_factor: 2,
            noise_pct: 0.02,
            tau: 1.2,
            seed,
            cg_tol: None,
        }
    }

    /// 64x64 reconstruction grid with `p = 62`, the most source rows a
    /// cell-centered 64-cell side offers away from the corners.
    pub fn full(model: TrueModel, seed: u64) -> Self {
        Self { grid: Grid2D::square(64).expect("valid grid"), p: 62, ..Self::desk(model, seed) }
    }

    pub fn preset(name: &str, model: TrueModel, seed: u64) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk(model, seed)),
            "full" => Ok(Self::full(model, seed)),
            _ => Err(Error::Config(format!("unknown preset {name:?}, expected desk or full"))),
        }
    }
}

/// Synthesized survey: true model, clean and noisy data, noise level and the
/// discrepancy-principle tolerance `rho = tau sigma^2 s l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticExperiment {
    pub config: SynthesisConfig,
    pub layout: SourceReceiverLayout,
    pub transfer: Transfer,
    /// True conductivity on the synthesis grid.
    pub true_conductivity: Vec<f64>,
    /// `s` columns of `l` values each.
    pub clean_data: Vec<Vec<f64>>,
    pub data: Vec<Vec<f64>>,
    pub sigma: f64,
    pub rho: f64,
    /// Solves spent on the synthesis grid, one per experiment.
    pub synthesis_solves: u64,
}

impl SyntheticExperiment {
    pub fn num_experiments(&self) -> usize {
        self.layout.num_sources()
    }

    pub fn num_receivers(&self) -> usize {
        self.layout.num_receivers()
    }

    pub fn fine_grid(&self) -> Grid2D {
        self.config.grid.refined(self.config.fine_factor).expect("validated at synthesis")
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::new(self.layout.sources(), self.data.clone(), Weighting::Plain)
    }

    /// Forward model on the reconstruction grid, with the default
    /// smoothing preconditioner for the Gauss-Newton CG.
    pub fn forward_model(&self, solver: PdeSolver) -> DcResistivity {
        DcResistivity::new(self.layout.clone(), self.transfer, solver)
            .with_smoothing(DEFAULT_SMOOTHING)
            .expect("default shift is positive")
    }

    /// True conductivity averaged onto the reconstruction grid.
    pub fn true_conductivity_coarse(&self) -> Vec<f64> {
        restrict(self.config.grid, self.config.fine_factor, &self.true_conductivity).expect("sizes match")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("experiment bundle: {e}")))
    }
}

/// Build the true model on the fine grid, solve all `s = p^2` forward
/// problems there, sample the receivers of the reconstruction grid, and add
/// Gaussian noise with `sigma = noise_pct ||D*||_F / sqrt(s l)`.
pub fn synthesize(cfg: &SynthesisConfig) -> Result<SyntheticExperiment> {
    if !(cfg.noise_pct >= 0.0 && cfg.noise_pct.is_finite()) {
        return Err(Error::Config(format!("noise level must be non-negative, got {}", cfg.noise_pct)));
    }
    if !(cfg.tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {}", cfg.tau)));
    }
    let layout = SourceReceiverLayout::new(cfg.grid, cfg.p)?;
    let fine = cfg.grid.refined(cfg.fine_factor)?;
    let mu = cfg.model.conductivity(fine);
    let transfer = Transfer::from_reference(&mu)?;
    let op = PdeOperator::from_conductivity(fine, mu.clone())?;
    let direct = match cfg.cg_tol {
        None => Some(op.factor()?),
        Some(_) => None,
    };
    let s = layout.num_sources();
    let clean_data = (0..s)
        .into_par_iter()
        .map(|k| {
            let q = prolong(cfg.grid, cfg.fine_factor, &layout.source(k))?;
            let u = match (&direct, cfg.cg_tol) {
                (Some(d), _) => d.solve(&q),
                (None, Some(tol)) => solve_pde(&op, &q, tol, 20 * fine.cells())?,
                (None, None) => unreachable!(),
            };
            Ok(layout.project(&restrict(cfg.grid, cfg.fine_factor, &u)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let l = layout.num_receivers();
    let sl = (s * l) as f64;
    let norm = clean_data.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let sigma = cfg.noise_pct * norm / sl.sqrt();
    let mut noise = vec![0.0; s * l];
    fill_normal(&mut stream_rng(cfg.seed, 0), &mut noise);
    let data = clean_data
        .iter()
        .zip(noise.chunks(l))
        .map(|(d, eta)| d.iter().zip(eta).map(|(a, b)| a + sigma * b).collect())
        .collect();
    Ok(SyntheticExperiment {
        config: cfg.clone(),
        layout,
        transfer,
        true_conductivity: mu,
        clean_data,
        data,
        sigma,
        rho: cfg.tau * sigma * sigma * sl,
        synthesis_solves: s as u64,
    })
}
