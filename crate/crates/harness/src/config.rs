use std::path::{Path, PathBuf};

use brinkman_core::cloud::GeneratorConfig;
use brinkman_core::domain::BoxDomain;
use brinkman_core::fields::{DensityPreset, Forcing, ForcingPreset, MomentField, VelocityPreset};
use brinkman_core::grid::{grid_l2_norm, poincare_and_nu0, GridLayout};
use brinkman_core::Vector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Mor,
    Grid,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mor,
    Grid,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mor => "mor",
            Method::Grid => "grid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Reflection stopping tolerance on the surface-mean mismatch.
    pub mor: f64,
    pub max_reflections: usize,
    /// Divergence bound and Picard increment tolerance of the grid solves.
    pub grid: f64,
    /// Relative residual of the linear saddle-point solves.
    pub linear: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { mor: 1e-6, max_reflections: 40, grid: 1e-8, linear: 1e-10 }
    }
}

/// One convergence experiment. Every field has a default, so `{}` is a valid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Particle counts for the reflection solver; `ε = 1/N`.
    pub n_list: Vec<usize>,
    /// Particle counts for the penalized grid solver, which needs `h ≤ ε/4`.
    pub grid_n_list: Vec<usize>,
    pub domain: BoxDomain,
    pub rho: DensityPreset,
    /// Mean velocity `V`; the current is `j = ρV`.
    pub velocity: VelocityPreset,
    pub g: ForcingPreset,
    pub solver: SolverChoice,
    pub nu: f64,
    /// When set, `ν = nu_factor · ν₀` and `nu` is ignored.
    pub nu_factor: Option<f64>,
    pub advection: bool,
    pub seeds: Vec<u64>,
    pub jitter: f64,
    /// Cells per side of the limit grid, also used for the reflection background.
    pub grid_cells: usize,
    /// Cancel the sphere fields on the walls through a grid background.
    pub wall_correction: bool,
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_list: vec![8, 27, 64],
            grid_n_list: vec![8],
            domain: BoxDomain::default(),
            rho: DensityPreset::Tapered { ramp: 0.25 },
            velocity: VelocityPreset::Constant { value: Vector::new(0.0, 0.0, 1.0) },
            g: ForcingPreset::Tapered { value: Vector::new(0.0, 0.0, -1.0), ramp: 0.25 },
            solver: SolverChoice::Mor,
            nu: 1.0,
            nu_factor: None,
            advection: false,
            seeds: vec![0, 1, 2],
            jitter: 0.1,
            grid_cells: 40,
            wall_correction: true,
            tolerances: Tolerances::default(),
            output: None,
        }
    }
}

fn config_error<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        let c: Self = serde_json::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn moments(&self) -> MomentField {
        MomentField::new(self.domain, self.rho, self.velocity)
    }

    pub fn forcing(&self) -> Forcing {
        Forcing::new(self.domain, self.g)
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig { jitter: self.jitter, ..GeneratorConfig::default() }
    }

    pub fn limit_layout(&self) -> Result<GridLayout, HarnessError> {
        GridLayout::with_cells(self.domain, self.grid_cells).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// `(method, N)` pairs in report order.
    pub fn cases(&self) -> Vec<(Method, usize)> {
        let mut v = Vec::new();
        if self.solver != SolverChoice::Grid {
            v.extend(self.n_list.iter().map(|&n| (Method::Mor, n)));
        }
        if self.solver != SolverChoice::Mor {
            v.extend(self.grid_n_list.iter().map(|&n| (Method::Grid, n)));
        }
        v
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let ns = self.cases();
        if ns.is_empty() {
            return config_error("no particle counts for the selected solver");
        }
        if let Some(&(_, n)) = ns.iter().find(|c| c.1 == 0) {
            return config_error(format!("N = {n}: Nε = 1 needs N ≥ 1"));
        }
        if self.seeds.is_empty() {
            return config_error("seed list is empty");
        }
        if !self.domain.is_valid() {
            return config_error("domain sides must be positive");
        }
        if !(self.nu > 0.0) || self.nu_factor.is_some_and(|f| !(f > 0.0)) {
            return config_error("viscosity must be positive");
        }
        if self.advection && self.solver != SolverChoice::Mor {
            return config_error("advection is only supported by the reflection solver");
        }
        if self.advection && !self.wall_correction {
            return config_error("advection needs the wall-corrected background");
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return config_error(format!("jitter must lie in [0, 0.5), got {}", self.jitter));
        }
        let t = &self.tolerances;
        if !(t.mor > 0.0 && t.grid > 0.0 && t.linear > 0.0) || t.max_reflections == 0 {
            return config_error("tolerances must be positive");
        }
        if self.grid_cells < 4 {
            return config_error("grid_cells must be at least 4");
        }
        self.limit_layout()?;
        Ok(())
    }

    /// `ν₀` from the discrete norms of `g` and `j` on the limit grid.
    pub fn nu0(&self) -> Result<f64, HarnessError> {
        let l = self.limit_layout()?;
        let m = self.moments();
        let j = |x: Vector| m.j(x);
        Ok(poincare_and_nu0(&self.domain, grid_l2_norm(&l, &self.forcing()), grid_l2_norm(&l, &j)).nu0)
    }

    /// Effective viscosity, checked against `ν₀` when advection is on.
    pub fn viscosity(&self) -> Result<f64, HarnessError> {
        let nu = match self.nu_factor {
            Some(f) => f * self.nu0()?,
            None => self.nu,
        };
        if self.advection {
            let nu0 = self.nu0()?;
            if nu <= nu0 {
                return config_error(format!("advection needs nu > nu0 = {nu0:.6}, got {nu}"));
            }
        }
        Ok(nu)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let body = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&body))
    }
}
