use serde::{Deserialize, Serialize};

use super::field::StaggeredField;
use crate::cloud::ParticleCloud;
use crate::domain::BoxDomain;
use crate::fields::VectorField;
use crate::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareNu0 {
    pub c_p: f64,
    pub nu0: f64,
}

/// `C_P = 1/√λ₁` for the box and the largest root of
/// `ν² − 24π C_P^{3/2}‖j‖ν − 4C_P^{3/2}‖g‖ = 0`.
pub fn poincare_and_nu0(domain: &BoxDomain, g_norm: f64, j_norm: f64) -> PoincareNu0 {
    let pi = std::f64::consts::PI;
    let lambda1 = pi * pi * (0..3).map(|a| 1.0 / (domain.sides[a] * domain.sides[a])).sum::<f64>();
    let c_p = 1.0 / lambda1.sqrt();
    let c32 = c_p.powf(1.5);
    let b = 12.0 * pi * c32 * j_norm;
    PoincareNu0 { c_p, nu0: b + (b * b + 4.0 * c32 * g_norm).sqrt() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L4Check {
    pub l4_pow4: f64,
    pub grad_pow4: f64,
    pub c_p: f64,
    pub holds: bool,
}

/// `‖U‖⁴_{L⁴} ≤ 4C_P‖∇U‖⁴_{L²}` in the discrete norms.
pub fn check_h1l4(u: &StaggeredField) -> L4Check {
    let c_p = poincare_and_nu0(&u.layout.domain, 0.0, 0.0).c_p;
    let l4 = u.l4_norm_pow4();
    let g = u.grad_norm_sq().powi(2);
    L4Check { l4_pow4: l4, grad_pow4: g, c_p, holds: l4 <= 4.0 * c_p * g }
}

/// `ν∫∇u:∇w − [∫u⊗u:∇w] − ∫g·w` over the fluid region, with `w` sampled on
/// the grid of `u`. Balls of the cloud, if given, are excluded.
pub fn weak_residual(
    u: &StaggeredField,
    g: &impl VectorField,
    w: &impl VectorField,
    cloud: Option<&ParticleCloud>,
    advection: bool,
    nu: f64,
) -> f64 {
    let l = u.layout;
    let ws = StaggeredField::sample(l, w);
    let gs = StaggeredField::sample(l, g);
    let index = cloud.map(|c| (c, c.index()));
    let fluid = |x: Vector| match &index {
        None => true,
        Some((c, idx)) => c.is_empty() || idx.nearest_within(x, c.eps.min(c.r_eps())).is_none(),
    };
    let mask: Option<&dyn Fn(Vector) -> bool> = if cloud.is_some() { Some(&fluid) } else { None };
    let mut r = nu * u.grad_inner(&ws, mask) - gs.l2_inner(&ws, mask);
    if advection {
        let mut s = 0.0;
        for i in l.cell_indices() {
            let x = l.cell_pos(i);
            if !fluid(x) {
                continue;
            }
            let uc = u.cell_velocity(i);
            let gw = w.grad(x);
            s += gw.left_mul_vec(uc).dot(uc);
        }
        r -= s * l.cell_volume();
    }
    r
}
