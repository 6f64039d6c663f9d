//! Corrector fields `A_ε = Σ φ_ε[v_k](x − x_k)` and the leading part of `B_ε`,
//! their norms, and the two limit pairings that produce the Brinkman source
//! and friction terms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annulus::{self, ScaledCoefficients};
use crate::cloud::{validate_cloud, ParticleCloud};
use crate::error::{Error, Result};
use crate::fields::{MomentField, VectorField};
use crate::quadrature::{BoxRule, SphereRule};
use crate::spatial::BucketIndex;
use crate::{Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorKind {
    /// Values are the particle velocities.
    A,
    /// Values are samples `w(x_k)` of a supplied field.
    BLeading,
}

#[derive(Clone, Debug)]
pub struct CorrectorField {
    pub cloud: ParticleCloud,
    pub kind: CorrectorKind,
    pub values: Vec<Vector>,
    pub scaled: ScaledCoefficients<f64>,
    index: BucketIndex,
}

fn require_valid(cloud: &ParticleCloud) -> Result<()> {
    let rep = validate_cloud(cloud);
    if !rep.passed() {
        return Err(Error::Precondition(format!("invalid cloud: {}", rep.failures().join(", "))));
    }
    if cloud.is_empty() {
        return Ok(());
    }
    if !(cloud.eps < 1.0) {
        return Err(Error::Precondition(format!("corrector needs eps < 1, got {}", cloud.eps)));
    }
    Ok(())
}

impl CorrectorField {
    fn build(cloud: &ParticleCloud, kind: CorrectorKind, values: Vec<Vector>) -> Result<Self> {
        require_valid(cloud)?;
        let eps = if cloud.is_empty() { 0.5 } else { cloud.eps };
        Ok(CorrectorField {
            cloud: cloud.clone(),
            kind,
            values,
            scaled: annulus::scaled_coefficients(eps)?,
            index: cloud.index(),
        })
    }

    /// `A_ε` built from the particle velocities.
    pub fn a(cloud: &ParticleCloud) -> Result<Self> {
        let v = cloud.particles.iter().map(|p| p.v).collect();
        Self::build(cloud, CorrectorKind::A, v)
    }

    /// Leading part `Σ φ_ε[w(x_k)](x − x_k)` of `B_ε`.
    pub fn b_leading(cloud: &ParticleCloud, w: &impl VectorField) -> Result<Self> {
        let v = cloud.particles.iter().map(|p| w.eval(p.x)).collect();
        Self::build(cloud, CorrectorKind::BLeading, v)
    }

    /// The particle whose annulus or ball contains `x`, if any.
    pub fn active(&self, x: Vector) -> Option<usize> {
        if self.cloud.is_empty() {
            return None;
        }
        self.index.nearest_within(x, self.scaled.r_eps)
    }
}

pub fn eval_corrector(field: &CorrectorField, x: Vector) -> Vector {
    match field.active(x) {
        None => Vector::zero(),
        Some(k) => annulus::eval_velocity(&field.scaled, field.values[k], x - field.cloud.particles[k].x)
            .expect("annulus evaluation with finite outer radius never fails"),
    }
}

impl VectorField for CorrectorField {
    fn eval(&self, x: Vector) -> Vector {
        eval_corrector(self, x)
    }

    fn grad(&self, x: Vector) -> Matrix {
        match self.active(x) {
            None => Matrix::zero(),
            Some(k) => {
                let d = x - self.cloud.particles[k].x;
                annulus::eval_grad(&self.scaled, self.values[k], d).unwrap_or_else(|_| Matrix::zero())
            }
        }
    }
}

/// `Σ_k ‖φ_ε[v_k]‖²_{L²}`, ball interiors included.
pub fn corrector_l2_norm(field: &CorrectorField) -> f64 {
    let unit = annulus::norms_for(&field.scaled, Vector::unit(0), Vector::unit(0));
    field.values.iter().map(|v| unit.l2_phi * v.norm_sq()).sum()
}

/// `Σ_k ‖∇φ_ε[v_k]‖²_{L²}`.
pub fn corrector_h1_seminorm(field: &CorrectorField) -> f64 {
    let unit = annulus::norms_for(&field.scaled, Vector::unit(0), Vector::unit(0));
    field.values.iter().map(|v| unit.h1_phi * v.norm_sq()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcePairing {
    /// `Σ_k ∫ ∇φ_ε[v_k] : ∇φ_ε[w(x_k)]`.
    pub pairing: f64,
    /// `6π ∫ j·w`, when moments are supplied.
    pub limit: Option<f64>,
}

/// Cells and order of the tensor rule used for limit integrals.
pub const LIMIT_RULE: (usize, usize) = (8, 6);

pub fn brinkman_source_pairing(
    cloud: &ParticleCloud,
    w: &impl VectorField,
    moments: Option<&MomentField>,
) -> Result<SourcePairing> {
    require_valid(cloud)?;
    let pairing = if cloud.is_empty() {
        0.0
    } else {
        let s = annulus::scaled_coefficients(cloud.eps)?;
        let unit = annulus::norms_for(&s, Vector::unit(0), Vector::unit(0));
        let terms: Vec<f64> = cloud.particles.par_iter().map(|p| p.v.dot(w.eval(p.x))).collect();
        4.0 * std::f64::consts::PI * unit.f_integral * terms.iter().sum::<f64>()
    };
    let limit = moments.map(|m| {
        let rule = BoxRule::new(m.domain.corner, m.domain.sides, [LIMIT_RULE.0; 3], LIMIT_RULE.1);
        6.0 * std::f64::consts::PI * rule.integrate(|x| m.j(x).dot(w.eval(x)))
    });
    Ok(SourcePairing { pairing, limit })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionOptions {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Tolerance for the quadrature self-consistency check.
    pub tol: f64,
}

impl Default for FrictionOptions {
    fn default() -> Self {
        FrictionOptions { n_theta: 24, n_phi: 48, tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionPairing {
    pub pairing: f64,
    /// `−6π ∫ ρ w·U`, when moments are supplied.
    pub limit: Option<f64>,
    /// Size of the dropped `ε²/r_ε³` remainder relative to the leading term.
    pub dropped_remainder: f64,
    /// Difference against a rule of half the order in each direction.
    pub quadrature_error: f64,
    pub accuracy_warning: Option<String>,
}

fn friction_sum(cloud: &ParticleCloud, u: &impl VectorField, w: &impl VectorField, rule: &SphereRule<f64>) -> f64 {
    let r = cloud.r_eps();
    let scale = cloud.eps / (r * r);
    let terms: Vec<f64> = cloud
        .particles
        .par_iter()
        .map(|p| {
            let wk = w.eval(p.x);
            rule.integrate(p.x, r, |y, om| {
                let pw = om.project(wk);
                let t = (wk + pw * 3.0) * -0.75 + (wk - pw * 3.0) * 3.0;
                t.dot(u.eval(y))
            })
        })
        .collect();
    scale * terms.iter().sum::<f64>()
}

/// Leading traction pairing `Σ_k (ε/r_ε²) ∮ [−¾(I+3P) + 3(I−3P)] w(x_k) · U dS`
/// over the spheres `∂B(x_k, ε^{1/3})`.
pub fn friction_pairing(
    cloud: &ParticleCloud,
    u: &impl VectorField,
    w: &impl VectorField,
    moments: Option<&MomentField>,
    opts: &FrictionOptions,
) -> Result<FrictionPairing> {
    require_valid(cloud)?;
    let fine = SphereRule::product(opts.n_theta, opts.n_phi);
    let coarse = SphereRule::product((opts.n_theta / 2).max(1), (opts.n_phi / 2).max(1));
    let (pairing, qerr) = if cloud.is_empty() {
        (0.0, 0.0)
    } else {
        let p = friction_sum(cloud, u, w, &fine);
        (p, (p - friction_sum(cloud, u, w, &coarse)).abs())
    };
    let accuracy_warning = (qerr > opts.tol * pairing.abs().max(1.0)).then(|| {
        format!("sphere rule {}x{} changes the result by {qerr:.3e} against half order", opts.n_theta, opts.n_phi)
    });
    let limit = moments.map(|m| {
        let rule = BoxRule::new(m.domain.corner, m.domain.sides, [LIMIT_RULE.0; 3], LIMIT_RULE.1);
        -6.0 * std::f64::consts::PI * rule.integrate(|x| m.rho(x) * w.eval(x).dot(u.eval(x)))
    });
    Ok(FrictionPairing { pairing, limit, dropped_remainder: cloud.eps, quadrature_error: qerr, accuracy_warning })
}
