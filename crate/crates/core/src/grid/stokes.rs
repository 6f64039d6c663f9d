//! Saddle-point solver for `(−νΔ + σ) u + ∇p = f`, `div u = 0` on the MAC
//! grid, and the Brinkman, Navier–Stokes and penalized problems built on it.

use serde::{Deserialize, Serialize};

use super::field::StaggeredField;
use super::layout::GridLayout;
use super::multigrid::{Cholesky, ComponentMultigrid};
use super::ops::{add_pressure_gradient, advection, apply_velocity, divergence, for_unknowns};
use super::poisson::{remove_mean, NeumannPoisson};
use super::poincare_and_nu0;
use crate::cloud::{validate_cloud, ParticleCloud};
use crate::error::{Error, Result};
use crate::fields::{MomentField, VectorField};
use crate::quadrature::SphereRule;
use crate::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub h: f64,
    /// Divergence bound and Picard increment tolerance.
    pub tolerance: f64,
    /// Relative preconditioned residual for the linear saddle-point solve.
    pub linear_tolerance: f64,
    pub max_iterations: usize,
    pub picard_max_iterations: usize,
    pub picard_damping: f64,
    /// Penalization strength; `None` uses `10⁶ ν/ε²`.
    pub eta: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            h: 2.5 / 32.0,
            tolerance: 1e-8,
            linear_tolerance: 1e-10,
            max_iterations: 3000,
            picard_max_iterations: 200,
            picard_damping: 0.7,
            eta: None,
        }
    }
}

impl SolverConfig {
    pub fn with_h(h: f64) -> Self {
        SolverConfig { h, ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.linear_tolerance > 0.0) {
            return Err(Error::Precondition("tolerances must be positive".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return Err(Error::Precondition(format!("eta must be positive, got {eta}")));
            }
        }
        if !(self.picard_damping > 0.0 && self.picard_damping <= 1.0) {
            return Err(Error::Precondition(format!("Picard damping must lie in (0, 1], got {}", self.picard_damping)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual in the preconditioner norm.
    pub residual: f64,
    pub max_divergence: f64,
    /// Net boundary flux removed to make the wall data compatible.
    pub flux_defect: f64,
}

/// Velocity operator, preconditioners and pressure Poisson inverse for one grid.
pub struct StokesOperator {
    pub layout: GridLayout,
    pub nu: f64,
    sigma: [Vec<f64>; 3],
    mg: [ComponentMultigrid; 3],
    poisson: NeumannPoisson,
    shift: PressureShift,
    offsets: [usize; 4],
}

/// Zeroth-order part of the pressure preconditioner.
enum PressureShift {
    None,
    /// `s ⊙ L⁻¹(s ⊙ q)` with `s = √σ` per cell; suits smooth `σ`.
    Global(Vec<f64>),
    /// Dense inverses of `D (σ + 6ν/h²)⁻¹ Dᵀ` on each connected patch of
    /// penalized cells, zero outside; suits large `σ` on small patches.
    Local(Vec<Cholesky>),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl StokesOperator {
    /// `sigma[c]` holds the zeroth-order coefficient at every padded entry of component `c`.
    pub fn new(layout: GridLayout, nu: f64, sigma: [Vec<f64>; 3]) -> Self {
        let sc = cell_sigma(&layout, &sigma);
        let shift = if sc.iter().any(|&v| v > 0.0) {
            PressureShift::Global(sc.iter().map(|v| v.max(0.0).sqrt()).collect())
        } else {
            PressureShift::None
        };
        Self::with_shift(layout, nu, sigma, shift)
    }

    /// As [`StokesOperator::new`] for a penalty supported on small, well separated patches.
    pub fn new_penalized(layout: GridLayout, nu: f64, sigma: [Vec<f64>; 3]) -> Self {
        let sc = cell_sigma(&layout, &sigma);
        let blocks = local_blocks(&layout, nu, &sigma, &sc);
        let shift = if blocks.is_empty() { PressureShift::None } else { PressureShift::Local(blocks) };
        Self::with_shift(layout, nu, sigma, shift)
    }

    fn with_shift(layout: GridLayout, nu: f64, sigma: [Vec<f64>; 3], shift: PressureShift) -> Self {
        let mg = [0, 1, 2].map(|c| ComponentMultigrid::new(layout, c, nu, sigma[c].clone()));
        let mut offsets = [0; 4];
        for c in 0..3 {
            offsets[c + 1] = offsets[c] + layout.comp_len(c);
        }
        StokesOperator { layout, nu, sigma, mg, poisson: NeumannPoisson::new(layout), shift, offsets }
    }

    fn len(&self) -> usize {
        self.offsets[3] + self.layout.cells()
    }

    fn split<'a>(&self, x: &'a [f64]) -> ([&'a [f64]; 3], &'a [f64]) {
        let o = self.offsets;
        ([&x[o[0]..o[1]], &x[o[1]..o[2]], &x[o[2]..o[3]]], &x[o[3]..])
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let l = &self.layout;
        let (u, p) = self.split(x);
        let o = self.offsets;
        for c in 0..3 {
            let seg = &mut out[o[c]..o[c + 1]];
            apply_velocity(l, c, self.nu, &self.sigma[c], u[c], seg);
            add_pressure_gradient(l, c, p, 1.0, seg);
        }
        let seg = &mut out[o[3]..];
        divergence(l, u, seg);
        seg.iter_mut().for_each(|v| *v = -*v);
        remove_mean(seg);
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let (u, p) = self.split(r);
        let mut z = Vec::with_capacity(self.len());
        for c in 0..3 {
            z.extend(self.mg[c].precondition(u[c]));
        }
        let mut q = p.to_vec();
        remove_mean(&mut q);
        let mut zp: Vec<f64> = q.iter().map(|v| self.nu * v).collect();
        match &self.shift {
            PressureShift::None => {}
            PressureShift::Global(s) => {
                let sq: Vec<f64> = q.iter().zip(s).map(|(a, b)| a * b).collect();
                let phi = self.poisson.solve(&sq);
                for m in 0..zp.len() {
                    zp[m] += s[m] * phi[m];
                }
            }
            PressureShift::Local(blocks) => blocks.iter().for_each(|b| b.add_solve(&q, &mut zp)),
        }
        remove_mean(&mut zp);
        z.extend(zp);
        z
    }

    /// Solves with right-hand side `f` (read at unknowns) and the wall values of `boundary`.
    pub fn solve(
        &self,
        f: &[Vec<f64>; 3],
        boundary: &StaggeredField,
        guess: Option<&StaggeredField>,
        tol: f64,
        max_it: usize,
    ) -> Result<(StaggeredField, SolveStats)> {
        let l = self.layout;
        let o = self.offsets;
        let b = boundary.boundary_part();
        let mut rhs = vec![0.0; self.len()];
        for c in 0..3 {
            let seg = &mut rhs[o[c]..o[c + 1]];
            apply_velocity(&l, c, self.nu, &self.sigma[c], &b.u[c], seg);
            for_unknowns(&l, c, |_, n| seg[n] = f[c][n] - seg[n]);
        }
        let mut dp = vec![0.0; l.cells()];
        divergence(&l, [&b.u[0], &b.u[1], &b.u[2]], &mut dp);
        let flux_defect = dp.iter().sum::<f64>() * l.cell_volume();
        remove_mean(&mut dp);
        rhs[o[3]..].copy_from_slice(&dp);

        let mut x = vec![0.0; self.len()];
        if let Some(g) = guess {
            for c in 0..3 {
                let seg = &mut x[o[c]..o[c + 1]];
                for_unknowns(&l, c, |_, n| seg[n] = g.u[c][n]);
            }
            x[o[3]..].copy_from_slice(&g.p);
            remove_mean(&mut x[o[3]..]);
        }
        let (iterations, residual) = minres(self, &rhs, &mut x, tol, max_it);
        if !residual.is_finite() {
            return Err(Error::Iteration { message: "saddle-point solve produced non-finite values".into(), history: vec![] });
        }
        if residual > tol.max(1e-6) {
            return Err(Error::Iteration {
                message: format!("saddle-point solve stagnated at relative residual {residual:.3e} after {iterations} iterations"),
                history: vec![residual],
            });
        }
        let mut out = b;
        for c in 0..3 {
            let seg = &x[o[c]..o[c + 1]];
            for_unknowns(&l, c, |_, n| out.u[c][n] = seg[n]);
        }
        out.p.copy_from_slice(&x[o[3]..]);
        self.project(&mut out);
        let max_divergence = out.max_divergence();
        Ok((out, SolveStats { iterations, residual, max_divergence, flux_defect }))
    }

    /// Removes the discrete divergence by an exact Neumann projection.
    pub fn project(&self, u: &mut StaggeredField) {
        let l = self.layout;
        let mut d = u.divergence();
        remove_mean(&mut d);
        let phi = self.poisson.solve(&d);
        for c in 0..3 {
            add_pressure_gradient(&l, c, &phi, 1.0, &mut u.u[c]);
        }
    }
}

/// Cell average of the face coefficients over the six faces of each cell.
fn cell_sigma(layout: &GridLayout, sigma: &[Vec<f64>; 3]) -> Vec<f64> {
    let mut sc = vec![0.0; layout.cells()];
    for (m, i) in layout.cell_indices().enumerate() {
        let mut s = 0.0;
        for c in 0..3 {
            let (lo, hi) = cell_faces(i, c);
            let w = |f: [usize; 3]| if layout.is_unknown(c, f) { sigma[c][layout.comp_index(c, f)] } else { 0.0 };
            s += 0.5 * (w(lo) + w(hi));
        }
        sc[m] = s / 3.0;
    }
    sc
}

/// Padded indices of the low and high `c`-faces of cell `i`.
fn cell_faces(i: [usize; 3], c: usize) -> ([usize; 3], [usize; 3]) {
    let mut lo = [i[0] + 1, i[1] + 1, i[2] + 1];
    lo[c] = i[c];
    let mut hi = lo;
    hi[c] += 1;
    (lo, hi)
}

fn local_blocks(layout: &GridLayout, nu: f64, sigma: &[Vec<f64>; 3], sc: &[f64]) -> Vec<Cholesky> {
    let n = layout.n;
    let h2 = layout.h * layout.h;
    let mut seen = vec![false; sc.len()];
    let mut blocks = Vec::new();
    for start in 0..sc.len() {
        if seen[start] || sc[start] <= 0.0 {
            continue;
        }
        let mut cells = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < cells.len() {
            let i = cell_of(layout, cells[k]);
            k += 1;
            for c in 0..3 {
                for up in [false, true] {
                    if let Some(j) = neighbour(i, c, up, n) {
                        let m = layout.cell_index(j);
                        if !seen[m] && sc[m] > 0.0 {
                            seen[m] = true;
                            cells.push(m);
                        }
                    }
                }
            }
        }
        let local: std::collections::HashMap<usize, usize> = cells.iter().enumerate().map(|(a, &m)| (m, a)).collect();
        let size = cells.len();
        let mut a = vec![0.0; size * size];
        for (r, &m) in cells.iter().enumerate() {
            let i = cell_of(layout, m);
            for c in 0..3 {
                let (lo, hi) = cell_faces(i, c);
                for (up, f) in [(false, lo), (true, hi)] {
                    if !layout.is_unknown(c, f) {
                        continue;
                    }
                    let kf = 1.0 / ((sigma[c][layout.comp_index(c, f)] + 6.0 * nu / h2) * h2);
                    a[r * size + r] += kf;
                    if let Some(&col) = neighbour(i, c, up, n).and_then(|j| local.get(&layout.cell_index(j))) {
                        a[r * size + col] -= kf;
                    }
                }
            }
        }
        blocks.push(Cholesky::factor(a, size, cells));
    }
    blocks
}

fn cell_of(layout: &GridLayout, m: usize) -> [usize; 3] {
    let n = layout.n;
    [m % n[0], (m / n[0]) % n[1], m / (n[0] * n[1])]
}

fn neighbour(i: [usize; 3], c: usize, up: bool, n: [usize; 3]) -> Option<[usize; 3]> {
    let mut j = i;
    if up {
        if i[c] + 1 >= n[c] {
            return None;
        }
        j[c] += 1;
    } else {
        if i[c] == 0 {
            return None;
        }
        j[c] -= 1;
    }
    Some(j)
}

/// Preconditioned MINRES; returns iterations and the relative residual estimate.
fn minres(op: &StokesOperator, b: &[f64], x: &mut [f64], tol: f64, max_it: usize) -> (usize, f64) {
    let n = b.len();
    let mut ax = vec![0.0; n];
    op.apply(x, &mut ax);
    let mut v: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    let mut v_old = vec![0.0; n];
    let mut z = op.precondition(&v);
    let mut gamma = dot(&z, &v).max(0.0).sqrt();
    let bnorm = {
        let zb = op.precondition(b);
        dot(&zb, b).max(0.0).sqrt()
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|e| *e = 0.0);
        return (0, 0.0);
    }
    if gamma <= tol * bnorm {
        return (0, gamma / bnorm);
    }
    let mut gamma_old = 1.0;
    let mut eta = gamma;
    let (mut s0, mut s1) = (0.0, 0.0);
    let (mut c0, mut c1) = (1.0, 1.0);
    let mut w0 = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut az = vec![0.0; n];
    for it in 1..=max_it {
        z.iter_mut().for_each(|e| *e /= gamma);
        op.apply(&z, &mut az);
        let delta = dot(&az, &z);
        let mut v_new = vec![0.0; n];
        for i in 0..n {
            v_new[i] = az[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_old[i];
        }
        let z_new = op.precondition(&v_new);
        let gamma_new = dot(&z_new, &v_new).max(0.0).sqrt();
        let a0 = c1 * delta - c0 * s1 * gamma;
        let a1 = (a0 * a0 + gamma_new * gamma_new).sqrt();
        let a2 = s1 * delta + c0 * c1 * gamma;
        let a3 = s0 * gamma;
        let c2 = a0 / a1;
        let s2 = gamma_new / a1;
        let mut w2 = vec![0.0; n];
        for i in 0..n {
            w2[i] = (z[i] - a3 * w0[i] - a2 * w1[i]) / a1;
            x[i] += c2 * eta * w2[i];
        }
        eta *= -s2;
        if (eta.abs() <= tol * bnorm) || gamma_new == 0.0 || !eta.is_finite() {
            return (it, eta.abs() / bnorm);
        }
        w0 = std::mem::replace(&mut w1, w2);
        v_old = std::mem::replace(&mut v, v_new);
        z = z_new;
        gamma_old = gamma;
        gamma = gamma_new;
        c0 = c1;
        c1 = c2;
        s0 = s1;
        s1 = s2;
    }
    (max_it, eta.abs() / bnorm)
}

fn sample_components(l: &GridLayout, f: impl Fn(Vector) -> Vector) -> [Vec<f64>; 3] {
    [0, 1, 2].map(|c| {
        let mut v = vec![0.0; l.comp_len(c)];
        for (n, i) in l.comp_indices(c).enumerate() {
            v[n] = f(l.comp_pos(c, i))[c];
        }
        v
    })
}

fn sample_scalar(l: &GridLayout, f: impl Fn(Vector) -> f64) -> [Vec<f64>; 3] {
    [0, 1, 2].map(|c| l.comp_indices(c).map(|i| f(l.comp_pos(c, i))).collect())
}

/// `−νΔU + 6πνρU + ∇Π = g + 6πν j` (plus `U·∇U` when `advection` is on).
#[derive(Clone, Debug)]
pub struct BrinkmanProblem<G> {
    pub moments: MomentField,
    pub g: G,
    pub nu: f64,
    pub advection: bool,
}

#[derive(Clone, Debug)]
pub struct BrinkmanSolution {
    pub field: StaggeredField,
    pub stats: SolveStats,
    /// Discrete `L²` increments of the Picard iterates.
    pub picard_history: Vec<f64>,
    pub nu0: Option<f64>,
}

/// Discrete cell-centre `L²` norm of a vector field over the grid.
pub fn grid_l2_norm(l: &GridLayout, f: &impl VectorField) -> f64 {
    (l.cell_indices().map(|i| f.eval(l.cell_pos(i)).norm_sq()).sum::<f64>() * l.cell_volume()).sqrt()
}

pub fn solve_brinkman<G: VectorField>(problem: &BrinkmanProblem<G>, cfg: &SolverConfig) -> Result<BrinkmanSolution> {
    cfg.check()?;
    let nu = problem.nu;
    if !(nu > 0.0) {
        return Err(Error::Precondition(format!("viscosity must be positive, got {nu}")));
    }
    let l = GridLayout::new(problem.moments.domain, cfg.h)?;
    let m = &problem.moments;
    let k = 6.0 * std::f64::consts::PI * nu;
    let sigma = sample_scalar(&l, |x| k * m.rho(x));
    let f = sample_components(&l, |x| problem.g.eval(x) + m.j(x) * k);
    let mut nu0 = None;
    if problem.advection {
        let j = |x: Vector| m.j(x);
        let p = poincare_and_nu0(&m.domain, grid_l2_norm(&l, &problem.g), grid_l2_norm(&l, &j));
        if nu <= p.nu0 {
            return Err(Error::Precondition(format!("advection needs nu > nu0 = {:.6}, got {nu}", p.nu0)));
        }
        nu0 = Some(p.nu0);
    }
    let op = StokesOperator::new(l, nu, sigma);
    let zero = StaggeredField::zeros(l);
    let (mut u, mut stats) = op.solve(&f, &zero, None, cfg.linear_tolerance, cfg.max_iterations)?;
    let mut history = Vec::new();
    if problem.advection {
        let mut converged = false;
        for _ in 0..cfg.picard_max_iterations {
            let adv = advection(&u);
            let fa: [Vec<f64>; 3] = [0, 1, 2].map(|c| f[c].iter().zip(&adv[c]).map(|(a, b)| a - b).collect());
            let (t, s) = op.solve(&fa, &zero, Some(&u), cfg.linear_tolerance, cfg.max_iterations)?;
            let mut next = u.clone();
            next.axpy(cfg.picard_damping, &t.difference(&u));
            let inc = next.difference(&u).l2_norm();
            history.push(inc);
            stats = s;
            u = next;
            if !inc.is_finite() {
                break;
            }
            if inc < cfg.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Iteration {
                message: format!("Picard iteration did not converge in {} steps", cfg.picard_max_iterations),
                history,
            });
        }
        stats.max_divergence = u.max_divergence();
    }
    if stats.max_divergence > cfg.tolerance {
        return Err(Error::Internal(format!("divergence {:.3e} above tolerance", stats.max_divergence)));
    }
    Ok(BrinkmanSolution { field: u, stats, picard_history: history, nu0 })
}

#[derive(Clone, Debug)]
pub struct PerforatedSolution {
    /// Penalized solution.
    pub raw: StaggeredField,
    /// `ū_ε`: entries inside ball `k` replaced by `v_k`.
    pub extended: StaggeredField,
    /// `max_k max_{∂B_k} |u − v_k|`.
    pub mismatch: f64,
    pub sphere_mismatch: Vec<f64>,
    pub eta: f64,
    pub stats: SolveStats,
}

/// Smoothed ball indicator: a linear ramp one cell wide centred on the surface.
fn indicator(d: f64, h: f64) -> f64 {
    (0.5 - d / h).clamp(0.0, 1.0)
}

pub fn solve_perforated(cloud: &ParticleCloud, g: &impl VectorField, cfg: &SolverConfig) -> Result<PerforatedSolution> {
    cfg.check()?;
    let l = GridLayout::new(cloud.domain, cfg.h)?;
    let rep = validate_cloud(cloud);
    if !rep.passed() {
        return Err(Error::Precondition(format!("invalid cloud: {}", rep.failures().join(", "))));
    }
    let eps = cloud.eps;
    if !cloud.is_empty() && cfg.h > eps / 4.0 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("spheres under-resolved: h = {} > eps/4 = {}", cfg.h, eps / 4.0)));
    }
    let eta = cfg.eta.unwrap_or(if cloud.is_empty() { 0.0 } else { 1e6 / (eps * eps) });
    let index = cloud.index();
    let near = |x: Vector| -> Option<(usize, f64)> {
        if cloud.is_empty() {
            return None;
        }
        index.nearest_within(x, cloud.r_eps()).map(|k| (k, (x - cloud.particles[k].x).norm() - eps))
    };
    let chi = |x: Vector| near(x).map_or((0.0, Vector::zero()), |(k, d)| (indicator(d, cfg.h), cloud.particles[k].v));
    let sigma = sample_scalar(&l, |x| eta * chi(x).0);
    let f = sample_components(&l, |x| {
        let (w, v) = chi(x);
        g.eval(x) + v * (eta * w)
    });
    let op = StokesOperator::new_penalized(l, 1.0, sigma);
    let (raw, stats) = op.solve(&f, &StaggeredField::zeros(l), None, cfg.linear_tolerance, cfg.max_iterations)?;
    let mut extended = raw.clone();
    for c in 0..3 {
        for (n, i) in l.comp_indices(c).enumerate() {
            if let Some((k, d)) = near(l.comp_pos(c, i)) {
                if d < 0.0 {
                    extended.u[c][n] = cloud.particles[k].v[c];
                }
            }
        }
    }
    let rule = SphereRule::<f64>::default_product();
    let sphere_mismatch: Vec<f64> = cloud
        .particles
        .iter()
        .map(|p| rule.points.iter().map(|&om| (raw.velocity_at(p.x + om * eps) - p.v).norm()).fold(0.0, f64::max))
        .collect();
    let mismatch = sphere_mismatch.iter().copied().fold(0.0, f64::max);
    Ok(PerforatedSolution { raw, extended, mismatch, sphere_mismatch, eta, stats })
}

/// Solves `(−νΔ + σ)u + ∇p = g` with the given wall values and no penalization.
pub fn solve_stokes_with_boundary(
    layout: GridLayout,
    nu: f64,
    g: &impl VectorField,
    boundary: &StaggeredField,
    guess: Option<&StaggeredField>,
    cfg: &SolverConfig,
) -> Result<(StaggeredField, SolveStats)> {
    let op = StokesOperator::new(layout, nu, [0, 1, 2].map(|c| vec![0.0; layout.comp_len(c)]));
    let f = sample_components(&layout, |x| g.eval(x));
    op.solve(&f, boundary, guess, cfg.linear_tolerance, cfg.max_iterations)
}
