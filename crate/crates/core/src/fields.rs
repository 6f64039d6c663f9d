//! Field evaluator traits and the closed-form presets used for densities,
//! currents, forcings and test functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::fd;
use crate::{Matrix, Vector};

pub trait VectorField: Sync {
    fn eval(&self, x: Vector) -> Vector;

    /// `(∇u)_ij = ∂_i u_j`; central differences unless overridden.
    fn grad(&self, x: Vector) -> Matrix {
        fd::jacobian(&|y| self.eval(y), x, 1e-5)
    }
}

impl<F: Fn(Vector) -> Vector + Sync> VectorField for F {
    fn eval(&self, x: Vector) -> Vector {
        self(x)
    }
}

pub trait ScalarField: Sync {
    fn eval(&self, x: Vector) -> f64;
}

impl<F: Fn(Vector) -> f64 + Sync> ScalarField for F {
    fn eval(&self, x: Vector) -> f64 {
        self(x)
    }
}

/// Field that is identically zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn eval(&self, _: Vector) -> Vector {
        Vector::zero()
    }
    fn grad(&self, _: Vector) -> Matrix {
        Matrix::zero()
    }
}

/// C¹ ramp that is 0 on the walls and 1 at distance ≥ `width` from them.
pub fn taper(s: f64, len: f64, width: f64) -> f64 {
    if s <= 0.0 || s >= len {
        return 0.0;
    }
    let d = s.min(len - s);
    if width <= 0.0 || d >= width {
        return 1.0;
    }
    let u = d / width;
    u * u * (3.0 - 2.0 * u)
}

fn taper_product(domain: &BoxDomain, x: Vector, width: f64) -> f64 {
    (0..3).map(|a| taper(x[a] - domain.corner[a], domain.sides[a], width)).product()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityPreset {
    /// Constant density `1/|Ω|`.
    Uniform,
    /// Product of per-axis ramps of width `ramp`, normalized to unit mass.
    Tapered { ramp: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityPreset {
    Zero,
    Constant { value: Vector },
    /// `amplitude · cos(π x̂) e_z` with `x̂` the unit x-coordinate.
    Shear { amplitude: f64 },
}

/// Density `ρ` and current `j = ρ·V` for a velocity preset `V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentField {
    pub domain: BoxDomain,
    pub rho: DensityPreset,
    pub velocity: VelocityPreset,
}

impl MomentField {
    pub fn new(domain: BoxDomain, rho: DensityPreset, velocity: VelocityPreset) -> Self {
        MomentField { domain, rho, velocity }
    }

    pub fn zero(domain: BoxDomain) -> Self {
        MomentField::new(domain, DensityPreset::Zero, VelocityPreset::Zero)
    }

    pub fn rho(&self, x: Vector) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        match self.rho {
            DensityPreset::Uniform => 1.0 / self.domain.volume(),
            DensityPreset::Tapered { ramp } => {
                let norm: f64 = (0..3).map(|a| 1.0 / (self.domain.sides[a] - ramp)).product();
                norm * taper_product(&self.domain, x, ramp)
            }
            DensityPreset::Zero => 0.0,
        }
    }

    /// Velocity `j/ρ` carried by the particles.
    pub fn mean_velocity(&self, x: Vector) -> Vector {
        match self.velocity {
            VelocityPreset::Zero => Vector::zero(),
            VelocityPreset::Constant { value } => value,
            VelocityPreset::Shear { amplitude } => {
                let u = self.domain.unit_coords(x);
                Vector::new(0.0, 0.0, amplitude * (PI * u.x).cos())
            }
        }
    }

    pub fn j(&self, x: Vector) -> Vector {
        self.mean_velocity(x) * self.rho(x)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.rho, DensityPreset::Zero)
    }

    /// Marginal CDF helpers need the density to be a product over axes.
    pub fn axis_profile(&self, axis: usize, s: f64) -> Option<f64> {
        let len = self.domain.sides[axis];
        match self.rho {
            DensityPreset::Uniform => Some(if (0.0..=len).contains(&s) { 1.0 / len } else { 0.0 }),
            DensityPreset::Tapered { ramp } => Some(taper(s, len, ramp) / (len - ramp)),
            DensityPreset::Zero => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingPreset {
    Zero,
    Constant { value: Vector },
    /// `value` times the per-axis ramp product (vanishes on the walls).
    Tapered { value: Vector, ramp: f64 },
    /// `value · (1 − |x−c|²/r²)³` inside the ball, zero outside.
    Bump { value: Vector, center: Vector, radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Forcing {
    pub domain: BoxDomain,
    pub preset: ForcingPreset,
}

impl Forcing {
    pub fn new(domain: BoxDomain, preset: ForcingPreset) -> Self {
        Forcing { domain, preset }
    }
}

impl VectorField for Forcing {
    fn eval(&self, x: Vector) -> Vector {
        match self.preset {
            ForcingPreset::Zero => Vector::zero(),
            ForcingPreset::Constant { value } => value,
            ForcingPreset::Tapered { value, ramp } => value * taper_product(&self.domain, x, ramp),
            ForcingPreset::Bump { value, center, radius } => value * bump((x - center).norm() / radius),
        }
    }
}

fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        t * t * t
    }
}

/// Divergence-free field `curl(ψ e_z)` with
/// `ψ = sin²(πx̂) sin²(πŷ) sin(πẑ)` in unit coordinates of the box; it and its
/// normal derivative of `ψ` vanish on every wall, so the field satisfies no-slip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineCurl {
    pub domain: BoxDomain,
    pub amplitude: f64,
}

/// `sin²(πt)` and its first three derivatives in `t`.
fn s2(t: f64) -> [f64; 4] {
    let (s, c) = (2.0 * PI * t).sin_cos();
    let sp = (PI * t).sin();
    [sp * sp, PI * s, 2.0 * PI * PI * c, -4.0 * PI.powi(3) * s]
}

/// `sin(πt)` and its first three derivatives in `t`.
fn s1(t: f64) -> [f64; 4] {
    let (s, c) = (PI * t).sin_cos();
    [s, PI * c, -PI * PI * s, -PI.powi(3) * c]
}

impl SineCurl {
    pub fn new(domain: BoxDomain, amplitude: f64) -> Self {
        SineCurl { domain, amplitude }
    }

    fn parts(&self, x: Vector) -> ([[f64; 4]; 3], Vector) {
        let u = self.domain.unit_coords(x);
        let inv = Vector::new(1.0 / self.domain.sides.x, 1.0 / self.domain.sides.y, 1.0 / self.domain.sides.z);
        let mut f = [s2(u.x), s2(u.y), s1(u.z)];
        for (a, fa) in f.iter_mut().enumerate() {
            let mut k = 1.0;
            for d in fa.iter_mut() {
                *d *= k;
                k *= inv[a];
            }
        }
        (f, inv)
    }

    /// `∂^{(i,j,k)} ψ` with derivative orders per axis.
    fn dpsi(f: &[[f64; 4]; 3], i: usize, j: usize, k: usize) -> f64 {
        f[0][i] * f[1][j] * f[2][k]
    }

    pub fn laplacian(&self, x: Vector) -> Vector {
        let (f, _) = self.parts(x);
        let d = |i, j, k| Self::dpsi(&f, i, j, k);
        let lx = d(2, 1, 0) + d(0, 3, 0) + d(0, 1, 2);
        let ly = -(d(3, 0, 0) + d(1, 2, 0) + d(1, 0, 2));
        Vector::new(lx, ly, 0.0) * self.amplitude
    }
}

impl VectorField for SineCurl {
    fn eval(&self, x: Vector) -> Vector {
        let (f, _) = self.parts(x);
        let d = |i, j, k| Self::dpsi(&f, i, j, k);
        Vector::new(d(0, 1, 0), -d(1, 0, 0), 0.0) * self.amplitude
    }

    fn grad(&self, x: Vector) -> Matrix {
        let (f, _) = self.parts(x);
        let d = |i, j, k| Self::dpsi(&f, i, j, k);
        let a = self.amplitude;
        Matrix {
            m: [
                [a * d(1, 1, 0), -a * d(2, 0, 0), 0.0],
                [a * d(0, 2, 0), -a * d(1, 1, 0), 0.0],
                [a * d(0, 1, 1), -a * d(1, 0, 1), 0.0],
            ],
        }
    }
}

/// Smooth test fields: polynomial times bump, constants and solenoidal modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestField {
    Constant { value: Vector },
    /// `(value + M(x − c)) · (1 − |x−c|²/r²)³`.
    PolyBump { value: Vector, linear: Matrix, center: Vector, radius: f64 },
    /// `a + M x`.
    Affine { value: Vector, linear: Matrix },
    SineCurl { domain: BoxDomain, amplitude: f64 },
}

impl VectorField for TestField {
    fn eval(&self, x: Vector) -> Vector {
        match *self {
            TestField::Constant { value } => value,
            TestField::PolyBump { value, linear, center, radius } => {
                let d = x - center;
                (value + linear.mul_vec(d)) * bump(d.norm() / radius)
            }
            TestField::Affine { value, linear } => value + linear.mul_vec(x),
            TestField::SineCurl { domain, amplitude } => SineCurl::new(domain, amplitude).eval(x),
        }
    }

    fn grad(&self, x: Vector) -> Matrix {
        match *self {
            TestField::Constant { .. } => Matrix::zero(),
            TestField::Affine { linear, .. } => linear.transpose(),
            TestField::SineCurl { domain, amplitude } => SineCurl::new(domain, amplitude).grad(x),
            TestField::PolyBump { value, linear, center, radius } => {
                let d = x - center;
                let s2 = d.norm_sq() / (radius * radius);
                if s2 >= 1.0 {
                    return Matrix::zero();
                }
                let t = 1.0 - s2;
                let b = t * t * t;
                let db = d * (-6.0 * t * t / (radius * radius));
                Matrix::outer(db, value + linear.mul_vec(d)) + linear.transpose().scale(b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tapered_density_has_unit_mass() {
        let m = MomentField::new(BoxDomain::cube(2.5), DensityPreset::Tapered { ramp: 0.25 }, VelocityPreset::Zero);
        let q = crate::quadrature::BoxRule::new(Vector::zero(), Vector::splat(2.5), [10, 10, 10], 4);
        let mass = q.integrate(|x| m.rho(x));
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn sine_curl_derivatives_match_fd() {
        let s = SineCurl::new(BoxDomain::new(Vector::new(0.1, -0.2, 0.0), Vector::new(2.0, 1.5, 1.0)), 1.3);
        let x = Vector::new(0.7, 0.3, 0.45);
        let g = s.grad(x);
        let gf = fd::jacobian(&|y| s.eval(y), x, 1e-5);
        assert!((g - gf).max_abs() < 1e-7);
        assert!(g.trace().abs() < 1e-12);
        let l = s.laplacian(x);
        let lf = fd::laplacian(&|y| s.eval(y), x, 1e-3);
        assert!((l - lf).norm() < 1e-4 * l.norm());
        assert!(s.eval(Vector::new(0.1, 0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn poly_bump_gradient() {
        let t = TestField::PolyBump {
            value: Vector::new(1.0, -0.5, 0.2),
            linear: Matrix::from_rows(Vector::new(0.1, 0.2, 0.3), Vector::new(-0.4, 0.0, 0.5), Vector::new(0.2, 0.2, -0.1)),
            center: Vector::splat(1.0),
            radius: 0.8,
        };
        let x = Vector::new(1.2, 0.9, 1.3);
        let gf = fd::jacobian(&|y| t.eval(y), x, 1e-5);
        assert!((t.grad(x) - gf).max_abs() < 1e-8);
    }
}
