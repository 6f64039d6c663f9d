//! Surface measures `Σ r_ε G(x_k) δ_{∂B_k}` and `Σ r_ε (G(x_k)·ω)ω δ_{∂B_k}`,
//! and the auxiliary fields `ξ_ε`, `χ_ε` whose Laplacians relate them to
//! volume densities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::fields::{MomentField, VectorField};
use crate::quadrature::{BoxRule, SphereRule};
use crate::{Matrix, Vector};

#[derive(Clone, Debug)]
pub struct AuxiliaryFields {
    pub cloud: ParticleCloud,
    /// `G(x_k)` per particle.
    pub g_values: Vec<Vector>,
    pub r_eps: f64,
}

impl AuxiliaryFields {
    pub fn new(cloud: &ParticleCloud, g: &impl VectorField) -> Self {
        AuxiliaryFields {
            cloud: cloud.clone(),
            g_values: cloud.particles.iter().map(|p| g.eval(p.x)).collect(),
            r_eps: cloud.r_eps(),
        }
    }

    fn local(&self, k: usize, x: Vector) -> Option<(Vector, Vector)> {
        let d = x - self.cloud.particles[k].x;
        (d.norm() < self.r_eps).then_some((d, self.g_values[k]))
    }

    fn owner(&self, x: Vector) -> Option<usize> {
        (0..self.cloud.len()).find(|&k| (x - self.cloud.particles[k].x).norm() < self.r_eps)
    }

    /// `ξ` restricted to ball `k`.
    pub fn xi_local(&self, k: usize, x: Vector) -> Vector {
        match self.local(k, x) {
            Some((d, g)) => g * (0.5 * (d.norm_sq() - self.r_eps * self.r_eps)),
            None => Vector::zero(),
        }
    }

    pub fn xi_grad_local(&self, k: usize, x: Vector) -> Matrix {
        match self.local(k, x) {
            Some((d, g)) => Matrix::outer(d, g),
            None => Matrix::zero(),
        }
    }

    /// `χ` restricted to ball `k`: `(r³/r_ε − r²)(G·ω)ω`.
    pub fn chi_local(&self, k: usize, x: Vector) -> Vector {
        match self.local(k, x) {
            Some((d, g)) => {
                let r = d.norm();
                // (r³/r_ε − r²)(G·ω)ω = (r/r_ε − 1)(G·d) d
                d * ((r / self.r_eps - 1.0) * g.dot(d))
            }
            None => Vector::zero(),
        }
    }

    pub fn chi_grad_local(&self, k: usize, x: Vector) -> Matrix {
        match self.local(k, x) {
            Some((d, g)) => {
                let r = d.norm();
                if r == 0.0 {
                    return Matrix::zero();
                }
                let om = d / r;
                let s = g.dot(om);
                let h_over_r = r * r / self.r_eps - r;
                Matrix::outer(om, om).scale(s * r * r / self.r_eps)
                    + (Matrix::outer(g, om) + Matrix::identity().scale(s)).scale(h_over_r)
            }
            None => Matrix::zero(),
        }
    }

    pub fn xi(&self, x: Vector) -> Vector {
        self.owner(x).map_or(Vector::zero(), |k| self.xi_local(k, x))
    }

    pub fn chi(&self, x: Vector) -> Vector {
        self.owner(x).map_or(Vector::zero(), |k| self.chi_local(k, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryNorms {
    pub xi_l2: f64,
    pub xi_h1: f64,
    pub chi_l2: f64,
    pub chi_h1: f64,
}

/// Ball rule exact for the polynomial integrands of `ξ`, `χ` and their gradients.
fn ball_rule(center: Vector, r: f64) -> BoxRule {
    BoxRule::ball(center, r, 8, &SphereRule::product(8, 16))
}

/// Squared `L²` norms of `ξ, χ` and of their gradients, by per-ball quadrature.
pub fn auxiliary_norms(f: &AuxiliaryFields) -> AuxiliaryNorms {
    let parts: Vec<[f64; 4]> = (0..f.cloud.len())
        .into_par_iter()
        .map(|k| {
            let rule = ball_rule(f.cloud.particles[k].x, f.r_eps);
            [
                rule.integrate(|x| f.xi_local(k, x).norm_sq()),
                rule.integrate(|x| f.xi_grad_local(k, x).frobenius_sq()),
                rule.integrate(|x| f.chi_local(k, x).norm_sq()),
                rule.integrate(|x| f.chi_grad_local(k, x).frobenius_sq()),
            ]
        })
        .collect();
    let mut s = [0.0; 4];
    for p in &parts {
        for i in 0..4 {
            s[i] += p[i];
        }
    }
    AuxiliaryNorms { xi_l2: s[0], xi_h1: s[1], chi_l2: s[2], chi_h1: s[3] }
}

/// Exact per-ball values for constant `|G| = 1`: `‖ξ‖², ‖∇ξ‖², ‖χ‖²` on a ball of radius `r`.
pub fn single_ball_exact(r: f64) -> (f64, f64, f64) {
    let pi = std::f64::consts::PI;
    (8.0 * pi * r.powi(7) / 105.0, 4.0 * pi * r.powi(5) / 5.0, pi * r.powi(7) / 189.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePairings {
    /// `Σ r_ε ∮_{∂B_k} G(x_k)·φ dS`.
    pub isotropic: f64,
    /// `Σ r_ε ∮_{∂B_k} (G(x_k)·ω)(ω·φ) dS`.
    pub radial: f64,
    /// `4π ∫ ρ G·φ`.
    pub isotropic_limit: Option<f64>,
    /// `(4π/3) ∫ ρ G·φ`.
    pub radial_limit: Option<f64>,
}

pub fn pair_surface_measures(
    cloud: &ParticleCloud,
    g: &impl VectorField,
    phi: &impl VectorField,
    moments: Option<&MomentField>,
    rule: &SphereRule<f64>,
) -> SurfacePairings {
    let r = cloud.r_eps();
    let parts: Vec<(f64, f64)> = cloud
        .particles
        .par_iter()
        .map(|p| {
            let gk = g.eval(p.x);
            let iso = rule.integrate(p.x, r, |y, _| gk.dot(phi.eval(y)));
            let rad = rule.integrate(p.x, r, |y, om| gk.dot(om) * om.dot(phi.eval(y)));
            (iso, rad)
        })
        .collect();
    let (mut iso, mut rad) = (0.0, 0.0);
    for (a, b) in parts {
        iso += a;
        rad += b;
    }
    let base = moments.map(|m| {
        let q = BoxRule::new(m.domain.corner, m.domain.sides, [8; 3], 6);
        q.integrate(|x| m.rho(x) * g.eval(x).dot(phi.eval(x)))
    });
    let pi = std::f64::consts::PI;
    SurfacePairings {
        isotropic: r * iso,
        radial: r * rad,
        isotropic_limit: base.map(|b| 4.0 * pi * b),
        radial_limit: base.map(|b| 4.0 * pi / 3.0 * b),
    }
}

/// Volume term of `−Δχ` on a ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiGrouping {
    /// The classical Laplacian of the closed-form `χ`: `2G − (r/r_ε)(6(G·ω)ω + 2G)`.
    Derived,
    /// The grouping `(r/r_ε)(6(G·ω)ω + 2G) − 4G`.
    Transcribed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianCheck {
    pub xi_lhs: f64,
    pub xi_rhs: f64,
    pub xi_residual: f64,
    pub chi_lhs: f64,
    pub chi_rhs: f64,
    pub chi_residual: f64,
    /// `chi_lhs` minus the right side assembled with [`ChiGrouping::Transcribed`].
    pub chi_transcribed_residual: f64,
}

impl LaplacianCheck {
    pub fn max_residual(&self) -> f64 {
        self.xi_residual.abs().max(self.chi_residual.abs())
    }
}

fn chi_volume(grouping: ChiGrouping, g: Vector, d: Vector, r_eps: f64) -> Vector {
    let r = d.norm();
    let om = if r > 0.0 { d / r } else { Vector::zero() };
    let bracket = (om * (6.0 * g.dot(om)) + g * 2.0) * (r / r_eps);
    match grouping {
        ChiGrouping::Derived => g * 2.0 - bracket,
        ChiGrouping::Transcribed => bracket - g * 4.0,
    }
}

/// Compares `⟨∇ξ, ∇φ⟩` and `⟨∇χ, ∇φ⟩` with the distributional right-hand sides,
/// both by independent quadrature on every ball.
pub fn distributional_laplacian_check(f: &AuxiliaryFields, phi: &impl VectorField) -> LaplacianCheck {
    let sphere = SphereRule::product(24, 48);
    let parts: Vec<[f64; 5]> = (0..f.cloud.len())
        .into_par_iter()
        .map(|k| {
            let c = f.cloud.particles[k].x;
            let g = f.g_values[k];
            let ball = BoxRule::ball(c, f.r_eps, 16, &sphere);
            let surf_iso = f.r_eps * sphere.integrate(c, f.r_eps, |y, _| g.dot(phi.eval(y)));
            let surf_rad = f.r_eps * sphere.integrate(c, f.r_eps, |y, om| g.dot(om) * om.dot(phi.eval(y)));
            let xi_lhs = ball.integrate(|x| f.xi_grad_local(k, x).ddot(&phi.grad(x)));
            let xi_vol = ball.integrate(|x| -3.0 * g.dot(phi.eval(x)));
            let chi_lhs = ball.integrate(|x| f.chi_grad_local(k, x).ddot(&phi.grad(x)));
            let der = ball.integrate(|x| chi_volume(ChiGrouping::Derived, g, x - c, f.r_eps).dot(phi.eval(x)));
            let tra = ball.integrate(|x| chi_volume(ChiGrouping::Transcribed, g, x - c, f.r_eps).dot(phi.eval(x)));
            [xi_lhs, xi_vol + surf_iso, chi_lhs, der + surf_rad, tra + surf_rad]
        })
        .collect();
    let mut s = [0.0; 5];
    for p in &parts {
        for i in 0..5 {
            s[i] += p[i];
        }
    }
    LaplacianCheck {
        xi_lhs: s[0],
        xi_rhs: s[1],
        xi_residual: s[0] - s[1],
        chi_lhs: s[2],
        chi_rhs: s[3],
        chi_residual: s[2] - s[3],
        chi_transcribed_residual: s[2] - s[4],
    }
}
