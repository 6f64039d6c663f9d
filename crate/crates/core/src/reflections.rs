//! Method of reflections: the flow past many spheres as a background field
//! plus one exterior sphere solution per particle, with strengths fixed by a
//! Jacobi iteration on the sphere surfaces.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annulus::{eval_velocity, exact_traction, RadialProfiles};
use crate::cloud::{validate_cloud, ParticleCloud};
use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::grid::ops::advection;
use crate::grid::{GridLayout, SolverConfig, StaggeredField, StokesOperator};
use crate::quadrature::SphereRule;
use crate::spatial::BucketIndex;
use crate::Vector;

pub type SharedField = Arc<dyn VectorField + Send>;

/// How the field between the spheres is closed.
#[derive(Clone)]
pub enum Background {
    /// A given field; the sphere fields are superposed on it in free space and
    /// the walls are not corrected.
    Fixed(SharedField),
    /// A grid Stokes (or Navier–Stokes) solution driven by `g` whose wall values
    /// cancel the sum of the sphere fields, so that `ū` satisfies no-slip.
    WallCorrected { g: SharedField },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorOptions {
    /// Stop once the largest change of a strength (the surface-mean mismatch) is below this.
    pub tol: f64,
    pub max_reflections: usize,
    pub nu: f64,
    /// Include `(ū·∇)ū` in the background equation.
    pub advection: bool,
    /// Background grid; only `h` and the tolerances are read.
    pub grid: SolverConfig,
    /// Require `Nε = 1`; the geometric conditions are always checked.
    pub require_mean_field: bool,
}

impl Default for MorOptions {
    fn default() -> Self {
        MorOptions { tol: 1e-6, max_reflections: 40, nu: 1.0, advection: false, grid: SolverConfig::with_h(2.5 / 32.0), require_mean_field: true }
    }
}

#[derive(Clone)]
pub enum BackgroundField {
    Fixed(SharedField),
    Grid(StaggeredField),
}

impl BackgroundField {
    fn eval(&self, x: Vector) -> Vector {
        match self {
            BackgroundField::Fixed(f) => f.eval(x),
            BackgroundField::Grid(f) => f.velocity_at(x),
        }
    }
}

#[derive(Clone)]
pub struct MoRSolution {
    pub cloud: ParticleCloud,
    pub strengths: Vec<Vector>,
    pub background: BackgroundField,
    pub reflections: usize,
    pub converged: bool,
    /// `max_k max_{∂B_k} |ū − v_k|` on the 24×48 product rule.
    pub mismatch: f64,
    /// `max_k |⟨ū⟩_{∂B_k} − v_k|` with the 26-point mean; the iterated quantity.
    pub mean_mismatch: f64,
    /// Surface-mean mismatch before each sweep.
    pub history: Vec<f64>,
    /// Relative change of the grid background per sweep (advection runs only).
    pub picard_history: Vec<f64>,
    /// `max |ū|` over sample points on the walls.
    pub wall_violation: f64,
    index: BucketIndex,
}

impl std::fmt::Debug for MoRSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MoRSolution")
            .field("particles", &self.cloud.len())
            .field("reflections", &self.reflections)
            .field("converged", &self.converged)
            .field("mismatch", &self.mismatch)
            .field("mean_mismatch", &self.mean_mismatch)
            .finish()
    }
}

/// Serialized form of a solution: strengths and diagnostics, with the cloud by reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorDump {
    pub cloud_file: Option<String>,
    pub eps: f64,
    pub strengths: Vec<Vector>,
    pub reflections: usize,
    pub converged: bool,
    pub mismatch: f64,
    pub mean_mismatch: f64,
    pub history: Vec<f64>,
    pub wall_violation: f64,
}

fn sphere_sum(cloud: &ParticleCloud, s: &[Vector], x: Vector, skip: Option<usize>) -> Vector {
    let kernel = RadialProfiles::exterior(cloud.eps);
    let mut u = Vector::zero();
    for (l, p) in cloud.particles.iter().enumerate() {
        if Some(l) == skip {
            continue;
        }
        // sphere surfaces are disjoint, so `x` is never a centre here
        u += eval_velocity(&kernel, s[l], x - p.x).unwrap_or(s[l]);
    }
    u
}

fn wall_samples(cloud: &ParticleCloud, per_side: usize) -> Vec<Vector> {
    let d = cloud.domain;
    let mut pts = Vec::new();
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0.0, 1.0] {
            for i in 0..per_side {
                for j in 0..per_side {
                    let mut x = d.corner;
                    x[axis] += side * d.sides[axis];
                    x[a1] += (i as f64 + 0.5) / per_side as f64 * d.sides[a1];
                    x[a2] += (j as f64 + 0.5) / per_side as f64 * d.sides[a2];
                    pts.push(x);
                }
            }
        }
    }
    pts
}

struct GridBackground {
    layout: GridLayout,
    op: StokesOperator,
    g: [Vec<f64>; 3],
    current: StaggeredField,
}

impl GridBackground {
    fn new(g: &SharedField, opts: &MorOptions, cloud: &ParticleCloud) -> Result<Self> {
        let layout = GridLayout::new(cloud.domain, opts.grid.h)?;
        let op = StokesOperator::new(layout, opts.nu, [0, 1, 2].map(|c| vec![0.0; layout.comp_len(c)]));
        let g = [0, 1, 2].map(|c| layout.comp_indices(c).map(|i| g.eval(layout.comp_pos(c, i))[c]).collect());
        Ok(GridBackground { layout, op, g, current: StaggeredField::zeros(layout) })
    }

    fn forcing(&self, adv: Option<&[Vec<f64>; 3]>) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|c| {
            let mut f = self.g[c].clone();
            if let Some(a) = adv {
                f.iter_mut().zip(&a[c]).for_each(|(v, a)| *v -= a);
            }
            f
        })
    }

    /// Re-solves with wall data `−Σφ` for strengths `s`; returns the relative change.
    fn update(&mut self, cloud: &ParticleCloud, s: &[Vector], adv: Option<&[Vec<f64>; 3]>, cfg: &SolverConfig) -> Result<f64> {
        let mut wall = StaggeredField::zeros(self.layout);
        let sum = |x: Vector| -sphere_sum(cloud, s, x, None);
        wall.set_boundary(&sum);
        let f = self.forcing(adv);
        let (next, _) = self.op.solve(&f, &wall, Some(&self.current), cfg.linear_tolerance, cfg.max_iterations)?;
        let norm = next.l2_norm();
        let change = next.difference(&self.current).l2_norm() / if norm > 0.0 { norm } else { 1.0 };
        self.current = next;
        Ok(change)
    }
}

/// Samples `ū` on the background grid and returns its advection term.
fn advection_of(
    bg: &GridBackground,
    cloud: &ParticleCloud,
    index: &BucketIndex,
    s: &[Vector],
) -> [Vec<f64>; 3] {
    let l = bg.layout;
    let u = |x: Vector| u_bar_at(cloud, index, s, &|y| bg.current.velocity_at(y), x);
    advection(&StaggeredField::sample(l, &u))
}

fn u_bar_at(cloud: &ParticleCloud, index: &BucketIndex, s: &[Vector], bg: &dyn Fn(Vector) -> Vector, x: Vector) -> Vector {
    if !cloud.is_empty() {
        if let Some(k) = index.nearest_within(x, cloud.eps) {
            return cloud.particles[k].v;
        }
    }
    bg(x) + sphere_sum(cloud, s, x, None)
}

pub fn solve_mor(cloud: &ParticleCloud, background: Background, opts: &MorOptions) -> Result<MoRSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.max_reflections == 0 {
        return Err(Error::Precondition("max_reflections must be at least 1".into()));
    }
    if !(opts.nu > 0.0) {
        return Err(Error::Precondition(format!("nu must be positive, got {}", opts.nu)));
    }
    let rep = validate_cloud(cloud);
    let failures: Vec<_> =
        rep.failures().into_iter().filter(|f| opts.require_mean_field || *f != "mean_field").collect();
    if !failures.is_empty() {
        return Err(Error::Precondition(format!("invalid cloud: {}", failures.join(", "))));
    }
    if opts.advection && matches!(background, Background::Fixed(_)) {
        return Err(Error::Precondition("advection needs a wall-corrected background".into()));
    }
    let n = cloud.len();
    let eps = cloud.eps;
    let index = cloud.index();
    let coarse = SphereRule::<f64>::lebedev26();
    let mut grid = match &background {
        Background::Fixed(_) => None,
        Background::WallCorrected { g } => Some(GridBackground::new(g, opts, cloud)?),
    };
    let mut s = vec![Vector::zero(); n];
    let mut history = Vec::new();
    let mut picard_history = Vec::new();
    let mut converged = false;
    let mut reflections = 0;
    let mut adv: Option<[Vec<f64>; 3]> = None;
    let mut rises = 0;
    for sweep in 1..=opts.max_reflections {
        let bg_change = match grid.as_mut() {
            Some(b) => {
                if opts.advection {
                    adv = Some(advection_of(b, cloud, &index, &s));
                }
                b.update(cloud, &s, adv.as_ref(), &opts.grid)?
            }
            None => 0.0,
        };
        let bg_eval = |x: Vector| match (&background, &grid) {
            (_, Some(b)) => b.current.velocity_at(x),
            (Background::Fixed(f), None) => f.eval(x),
            _ => unreachable!(),
        };
        let next: Vec<Vector> = (0..n)
            .into_par_iter()
            .map(|k| {
                let p = &cloud.particles[k];
                let mean = coarse.mean_vec(|om| {
                    let x = p.x + om * eps;
                    bg_eval(x) + sphere_sum(cloud, &s, x, Some(k))
                });
                p.v - mean
            })
            .collect();
        let change = next.iter().zip(&s).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        if !change.is_finite() {
            return Err(Error::Iteration { message: "reflection strengths became non-finite".into(), history });
        }
        rises = match history.last() {
            Some(&last) if change > last => rises + 1,
            _ => 0,
        };
        history.push(change);
        if opts.advection {
            picard_history.push(bg_change);
        }
        s = next;
        reflections = sweep;
        if rises >= 3 {
            return Err(Error::Iteration {
                message: format!("reflection mismatch grew for 3 consecutive sweeps (at sweep {sweep})"),
                history,
            });
        }
        let picard_done = !opts.advection || bg_change < opts.tol.max(opts.grid.tolerance);
        if change < opts.tol && picard_done {
            converged = true;
            break;
        }
    }
    let background = match grid {
        Some(mut b) => {
            if opts.advection {
                adv = Some(advection_of(&b, cloud, &index, &s));
            }
            b.update(cloud, &s, adv.as_ref(), &opts.grid)?;
            BackgroundField::Grid(b.current)
        }
        None => match background {
            Background::Fixed(f) => BackgroundField::Fixed(f),
            Background::WallCorrected { .. } => unreachable!(),
        },
    };
    if opts.advection && !converged {
        return Err(Error::Iteration {
            message: format!("Picard iteration of the background did not converge in {reflections} sweeps"),
            history: picard_history,
        });
    }
    let mut sol = MoRSolution {
        cloud: cloud.clone(),
        strengths: s,
        background,
        reflections,
        converged,
        mismatch: 0.0,
        mean_mismatch: 0.0,
        history,
        picard_history,
        wall_violation: 0.0,
        index,
    };
    let fine = SphereRule::<f64>::default_product();
    let (mm, mean): (Vec<f64>, Vec<f64>) = (0..n)
        .into_par_iter()
        .map(|k| {
            let p = &sol.cloud.particles[k];
            let at = |om: Vector| sol.superposed(p.x + om * eps) - p.v;
            let worst = fine.points.iter().map(|&om| at(om).norm()).fold(0.0, f64::max);
            (worst, coarse.mean_vec(at).norm())
        })
        .unzip();
    sol.mismatch = mm.into_iter().fold(0.0, f64::max);
    sol.mean_mismatch = mean.into_iter().fold(0.0, f64::max);
    sol.wall_violation = wall_samples(&sol.cloud, 16).iter().map(|&x| sol.superposed(x).norm()).fold(0.0, f64::max);
    Ok(sol)
}

impl MoRSolution {
    /// Background plus every sphere field, ignoring ball interiors.
    fn superposed(&self, x: Vector) -> Vector {
        self.background.eval(x) + sphere_sum(&self.cloud, &self.strengths, x, None)
    }

    pub fn dump(&self, cloud_file: Option<&str>) -> MorDump {
        MorDump {
            cloud_file: cloud_file.map(str::to_string),
            eps: self.cloud.eps,
            strengths: self.strengths.clone(),
            reflections: self.reflections,
            converged: self.converged,
            mismatch: self.mismatch,
            mean_mismatch: self.mean_mismatch,
            history: self.history.clone(),
            wall_violation: self.wall_violation,
        }
    }

    pub fn to_json(&self, cloud_file: Option<&str>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.dump(cloud_file))?)
    }
}

/// `v_k` inside the closed ball `k`, background plus sphere fields elsewhere.
pub fn evaluate_u_bar(sol: &MoRSolution, x: Vector) -> Vector {
    u_bar_at(&sol.cloud, &sol.index, &sol.strengths, &|y| sol.background.eval(y), x)
}

impl VectorField for MoRSolution {
    fn eval(&self, x: Vector) -> Vector {
        evaluate_u_bar(self, x)
    }
}

/// Force of sphere `k`'s own field on the sphere, by the 24×48 surface rule (unit viscosity).
pub fn drag_check(sol: &MoRSolution, k: usize) -> Vector {
    let eps = sol.cloud.eps;
    let kernel = RadialProfiles::exterior(eps);
    let s = sol.strengths[k];
    SphereRule::<f64>::default_product()
        .integrate_vec(Vector::zero(), eps, |y, _| exact_traction(&kernel, s, y).unwrap_or(Vector::zero()))
}
