//! Exact Stokes solution in a spherical annulus with a translating inner sphere
//! and a fixed outer sphere, its exterior (`R = ∞`) limit, and the closed-form
//! radial integrals built on it.
//!
//! The velocity has the form `A(r)(I − P_ω)v + B(r)P_ω v` with
//! `A = −[4αr² + 2β + γ/r − δ/r³]` and `B = −2[αr² + β + γ/r + δ/r³]`.
//! The unit problem lives on `1 < r < R`; the ε-scaled problem lives on
//! `ε < r < ε^{1/3}` and is obtained from the unit one by `x ↦ x/ε`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OuterRadius<T> {
    Finite(T),
    Infinite,
}

/// Coefficients of the unit annulus solution (inner radius 1, outer radius `R`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusCoefficients<T> {
    pub outer: OuterRadius<T>,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
}

/// Coefficients of `φ_ε[v](x) = Φ_{1,R}[v](x/ε)` with `R = ε^{-2/3}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledCoefficients<T> {
    pub eps: T,
    pub r_eps: T,
    pub alpha1: T,
    pub beta1: T,
    pub gamma1: T,
    pub delta1: T,
}

/// Radial profiles `A, B` (velocity) and `a, b` (gradient) on `r_in ≤ r ≤ r_out`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfiles<T> {
    pub r_in: T,
    pub r_out: Option<T>,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
}

/// Anything that can be turned into radial profiles.
pub trait Profile<T: Real> {
    fn profiles(&self) -> RadialProfiles<T>;
}

impl<T: Real> Profile<T> for RadialProfiles<T> {
    fn profiles(&self) -> RadialProfiles<T> {
        *self
    }
}

impl<T: Real> Profile<T> for AnnulusCoefficients<T> {
    fn profiles(&self) -> RadialProfiles<T> {
        RadialProfiles {
            r_in: T::one(),
            r_out: match self.outer {
                OuterRadius::Finite(r) => Some(r),
                OuterRadius::Infinite => None,
            },
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta: self.delta,
        }
    }
}

impl<T: Real> Profile<T> for ScaledCoefficients<T> {
    fn profiles(&self) -> RadialProfiles<T> {
        RadialProfiles {
            r_in: self.eps,
            r_out: Some(self.r_eps),
            alpha: self.alpha1,
            beta: self.beta1,
            gamma: self.gamma1,
            delta: self.delta1,
        }
    }
}

impl<T: Real> RadialProfiles<T> {
    /// Exterior solution of a sphere of radius `r_in`: `Φ_{1,∞}[v](x/r_in)`.
    pub fn exterior(r_in: T) -> Self {
        RadialProfiles {
            r_in,
            r_out: None,
            alpha: T::zero(),
            beta: T::zero(),
            gamma: T::lit(-0.75) * r_in,
            delta: T::lit(0.25) * r_in * r_in * r_in,
        }
    }

    #[allow(non_snake_case)]
    pub fn A(&self, r: T) -> T {
        -(T::lit(4.0) * self.alpha * r * r + T::lit(2.0) * self.beta + self.gamma / r
            - self.delta / (r * r * r))
    }

    #[allow(non_snake_case)]
    pub fn B(&self, r: T) -> T {
        -T::lit(2.0) * (self.alpha * r * r + self.beta + self.gamma / r + self.delta / (r * r * r))
    }

    pub fn a(&self, r: T) -> T {
        T::lit(6.0) * (self.alpha * r + self.delta / r.powi(4))
    }

    pub fn b(&self, r: T) -> T {
        T::lit(2.0) * self.alpha * r - self.gamma / (r * r) - T::lit(3.0) * self.delta / r.powi(4)
    }

    /// Pressure coefficient `c(r)` with `Π = c(r) ω·v`.
    pub fn pressure_coefficient(&self, r: T) -> T {
        -T::lit(20.0) * self.alpha * r - T::lit(2.0) * self.gamma / (r * r)
    }

    fn contains_closed(&self, r: T) -> bool {
        let slack = T::lit(1e-12);
        r >= self.r_in * (T::one() - slack)
            && self.r_out.is_none_or(|ro| r <= ro * (T::one() + slack))
    }
}

/// Solves the 2×2 system for `(α, β)` and back-substitutes `γ, δ`.
#[allow(non_snake_case)]
pub fn solve_coefficients<T: Real>(outer: OuterRadius<T>) -> Result<AnnulusCoefficients<T>> {
    let R = match outer {
        OuterRadius::Infinite => {
            return Ok(AnnulusCoefficients {
                outer,
                alpha: T::zero(),
                beta: T::zero(),
                gamma: T::lit(-0.75),
                delta: T::lit(0.25),
            })
        }
        OuterRadius::Finite(r) => r,
    };
    if !(R > T::one()) || !R.is_finite() {
        return domain(format!("outer radius must exceed 1, got {R}"));
    }
    let one = T::one();
    let a11 = T::lit(3.0) * (R.powi(5) - one);
    let a12 = R.powi(3) - one;
    let a21 = T::lit(5.0) * (R.powi(3) - one);
    let a22 = T::lit(3.0) * (R - one);
    let (b1, b2) = (T::lit(0.5), T::lit(1.5));
    let det = a11 * a22 - a12 * a21;
    if det == T::zero() || !det.is_finite() {
        return Err(Error::Internal(format!("singular coefficient system at R={R}")));
    }
    let alpha = (b1 * a22 - a12 * b2) / det;
    let beta = (a11 * b2 - a21 * b1) / det;
    let delta = T::lit(1.5) * alpha + T::lit(0.5) * beta + T::lit(0.25);
    let gamma = -T::lit(2.5) * alpha - T::lit(1.5) * beta - T::lit(0.75);
    Ok(AnnulusCoefficients { outer, alpha, beta, gamma, delta })
}

/// `R = ε^{-2/3}` coefficients rescaled to the physical annulus `ε < r < ε^{1/3}`.
pub fn scaled_coefficients<T: Real>(eps: T) -> Result<ScaledCoefficients<T>> {
    if !(eps > T::zero() && eps < T::one()) {
        return domain(format!("eps must lie in (0, 1), got {eps}"));
    }
    let r_eps = eps.cbrt();
    let c = solve_coefficients(OuterRadius::Finite(r_eps / eps))?;
    Ok(ScaledCoefficients {
        eps,
        r_eps,
        alpha1: c.alpha / (eps * eps),
        beta1: c.beta,
        gamma1: c.gamma * eps,
        delta1: c.delta * eps * eps * eps,
    })
}

fn polar<T: Real>(x: Vec3<T>) -> Result<(T, Vec3<T>)> {
    let r = x.norm();
    if !(r > T::zero()) {
        return domain("evaluation at the sphere center");
    }
    Ok((r, x / r))
}

/// Velocity; `v` inside the inner ball, `0` beyond the outer sphere.
pub fn eval_velocity<T: Real>(c: &impl Profile<T>, v: Vec3<T>, x: Vec3<T>) -> Result<Vec3<T>> {
    let p = c.profiles();
    let r = x.norm();
    if p.r_out.is_none() && r == T::zero() {
        return domain("exterior solution evaluated at the origin");
    }
    if r <= p.r_in {
        return Ok(v);
    }
    if let Some(ro) = p.r_out {
        if r >= ro {
            return Ok(Vec3::zero());
        }
    }
    let om = x / r;
    let pv = om.project(v);
    Ok((v - pv) * p.A(r) + pv * p.B(r))
}

/// Pressure with zero additive constant, evaluated with the annulus formula at any `x ≠ 0`.
pub fn eval_pressure<T: Real>(c: &impl Profile<T>, v: Vec3<T>, x: Vec3<T>) -> Result<T> {
    let p = c.profiles();
    let (r, om) = polar(x)?;
    Ok(p.pressure_coefficient(r) * om.dot(v))
}

fn grad_unchecked<T: Real>(p: &RadialProfiles<T>, v: Vec3<T>, r: T, om: Vec3<T>) -> Mat3<T> {
    let (a, b) = (p.a(r), p.b(r));
    let s = om.dot(v);
    let u = v - om * s;
    let three = T::lit(3.0);
    let iso = Mat3::identity() - Mat3::outer(om, om).scale(three);
    Mat3::outer(om, u).scale(-(a + b)) + (Mat3::outer(u, om) + iso.scale(s)).scale(b)
}

/// `∇φ` with `(∇φ)_ij = ∂_i φ_j` on the closed annulus.
pub fn eval_grad<T: Real>(c: &impl Profile<T>, v: Vec3<T>, x: Vec3<T>) -> Result<Mat3<T>> {
    let p = c.profiles();
    let (r, om) = polar(x)?;
    if !p.contains_closed(r) {
        return domain(format!("gradient requested at r={r} outside the annulus"));
    }
    Ok(grad_unchecked(&p, v, r, om))
}

/// Closed form of `∇φ[v] : ∇φ[w]`.
pub fn grad_contraction<T: Real>(c: &impl Profile<T>, v: Vec3<T>, w: Vec3<T>, x: Vec3<T>) -> Result<T> {
    let p = c.profiles();
    let (r, om) = polar(x)?;
    if !p.contains_closed(r) {
        return domain(format!("contraction requested at r={r} outside the annulus"));
    }
    let (a, b) = (p.a(r), p.b(r));
    let ss = om.dot(v) * om.dot(w);
    Ok(((a + b) * (a + b) + b * b) * (v.dot(w) - ss) + T::lit(6.0) * b * b * ss)
}

/// Closed form of `∇φ[v] : ∇w` from the local gradient of `w`.
pub fn pair_gradient_with_field<T: Real>(
    c: &impl Profile<T>,
    v: Vec3<T>,
    grad_w: &Mat3<T>,
    x: Vec3<T>,
) -> Result<T> {
    let p = c.profiles();
    let (r, om) = polar(x)?;
    if !p.contains_closed(r) {
        return domain(format!("pairing requested at r={r} outside the annulus"));
    }
    let (a, b) = (p.a(r), p.b(r));
    let s = om.dot(v);
    let g_om = grad_w.mul_vec(om);
    let om_g = grad_w.left_mul_vec(om);
    Ok(-(a + b) * om_g.dot(v) + b * v.dot(g_om) + s * (a - T::lit(3.0) * b) * om.dot(g_om)
        + b * s * grad_w.trace())
}

/// Traction `ω·∇φ − Π ω` computed from the profiles of `c`.
pub fn exact_traction<T: Real>(c: &impl Profile<T>, v: Vec3<T>, x: Vec3<T>) -> Result<Vec3<T>> {
    let p = c.profiles();
    let (r, om) = polar(x)?;
    let (a, b) = (p.a(r), p.b(r));
    let pv = om.project(v);
    let da = -(a + b);
    let db = -T::lit(2.0) * b;
    Ok((v - pv) * da + pv * (db - p.pressure_coefficient(r)))
}

/// Traction of the exterior solution of matching inner radius, plus the
/// leading finite-`R` correction `−8αr(I − 3P_ω)v`. The remaining `O(1/R)/r²`
/// part is not modeled.
pub fn traction<T: Real>(c: &impl Profile<T>, v: Vec3<T>, x: Vec3<T>) -> Result<Vec3<T>> {
    let p = c.profiles();
    let base = exact_traction(&RadialProfiles::exterior(p.r_in), v, x)?;
    if p.r_out.is_none() {
        return Ok(base);
    }
    let (r, om) = polar(x)?;
    let pv = om.project(v);
    Ok(base + (v - pv * T::lit(3.0)) * (-T::lit(8.0) * p.alpha * r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormNorms<T> {
    /// `‖φ_ε[v]‖²_{L²}` including the inner ball.
    pub l2_phi: T,
    /// `‖∇φ_ε[v]‖²_{L²}`.
    pub h1_phi: T,
    /// `∫ ∇φ_ε[v] : ∇φ_ε[w]`.
    pub interaction: T,
    /// `∫_ε^{r_ε} r² F(r) dr` with `F = (2/3)[(a+b)² + b²] + 2b²`.
    pub f_integral: T,
}

/// Antiderivative of `r²(2A² + B²)`.
pub fn l2_antiderivative<T: Real>(p: &RadialProfiles<T>, r: T) -> T {
    let (al, be, ga, de) = (p.alpha, p.beta, p.gamma, p.delta);
    let c = T::lit;
    c(36.0 / 7.0) * al * al * r.powi(7)
        + c(8.0) * al * be * r.powi(5)
        + c(6.0) * al * ga * r.powi(4)
        + c(4.0) * be * be * r.powi(3)
        + (c(8.0) * be * ga - c(4.0) * al * de) * r * r
        + c(6.0) * ga * ga * r
        - c(4.0) * de * ga / r
        - c(2.0) * de * de / r.powi(3)
}

/// Antiderivative of `r²[(a+b)² + 4b²]`.
pub fn h1_antiderivative<T: Real>(p: &RadialProfiles<T>, r: T) -> T {
    let (al, ga, de) = (p.alpha, p.gamma, p.delta);
    let c = T::lit;
    c(16.0) * al * al * r.powi(5) - c(16.0) * al * ga * r * r
        - (c(9.0) * de * de + c(6.0) * de * ga * r * r + c(5.0) * ga * ga * r.powi(4)) / r.powi(5)
}

/// Antiderivative of `r² F(r)`.
pub fn f_antiderivative<T: Real>(p: &RadialProfiles<T>, r: T) -> T {
    h1_antiderivative(p, r) * T::lit(2.0 / 3.0)
}

/// Closed-form norms and pairings of `φ_ε` at sphere radius `eps`.
pub fn closed_form_norms<T: Real>(eps: T, v: Vec3<T>, w: Vec3<T>) -> Result<ClosedFormNorms<T>> {
    Ok(norms_for(&scaled_coefficients(eps)?, v, w))
}

/// As [`closed_form_norms`] for given (possibly perturbed) coefficients.
pub fn norms_for<T: Real>(s: &ScaledCoefficients<T>, v: Vec3<T>, w: Vec3<T>) -> ClosedFormNorms<T> {
    let p = s.profiles();
    let pi = T::PI();
    let third = T::one() / T::lit(3.0);
    let (lo, hi) = (s.eps, s.r_eps);
    let l2 = l2_antiderivative(&p, hi) - l2_antiderivative(&p, lo);
    let h1 = h1_antiderivative(&p, hi) - h1_antiderivative(&p, lo);
    let fi = f_antiderivative(&p, hi) - f_antiderivative(&p, lo);
    ClosedFormNorms {
        l2_phi: T::lit(4.0) * pi * third * v.norm_sq() * (l2 + lo * lo * lo),
        h1_phi: T::lit(8.0) * pi * third * v.norm_sq() * h1,
        interaction: T::lit(4.0) * pi * v.dot(w) * fi,
        f_integral: fi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_dense;

    #[test]
    fn infinite_sentinel() {
        let c = solve_coefficients::<f64>(OuterRadius::Infinite).unwrap();
        assert_eq!((c.alpha, c.beta, c.gamma, c.delta), (0.0, 0.0, -0.75, 0.25));
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(solve_coefficients(OuterRadius::Finite(1.0)).is_err());
        assert!(solve_coefficients(OuterRadius::Finite(0.5)).is_err());
        assert!(scaled_coefficients(1.0).is_err());
        assert!(scaled_coefficients(0.0).is_err());
    }

    #[test]
    fn four_boundary_conditions_oracle() {
        for &r in &[1.5, 2.0, 10.0, 100.0] {
            let c = solve_coefficients(OuterRadius::Finite(r)).unwrap();
            // A(1)=1, B(1)=1, A(R)=0, B(R)=0 in the unknowns (α, β, γ, δ).
            let row_a = |x: f64| vec![-4.0 * x * x, -2.0, -1.0 / x, 1.0 / x.powi(3)];
            let row_b = |x: f64| vec![-2.0 * x * x, -2.0, -2.0 / x, -2.0 / x.powi(3)];
            let m = vec![row_a(1.0), row_b(1.0), row_a(r), row_b(r)];
            let s = solve_dense(m, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
            for (got, want) in [c.alpha, c.beta, c.gamma, c.delta].iter().zip(&s) {
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3), "R={r}");
            }
        }
    }

    #[test]
    fn exterior_value_at_two() {
        let c = solve_coefficients::<f64>(OuterRadius::Infinite).unwrap();
        let u = eval_velocity(&c, Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((u - Vec3::new(11.0 / 16.0, 0.0, 0.0)).norm() < 1e-15);
        let p = eval_pressure(&c, Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((p - 0.375).abs() < 1e-15);
        assert!(eval_velocity(&c, Vec3::new(1.0, 0.0, 0.0), Vec3::zero()).is_err());
    }

    #[test]
    fn unit_sphere_traction_is_uniform() {
        let c = solve_coefficients::<f64>(OuterRadius::Infinite).unwrap();
        let v = Vec3::new(0.3, -1.0, 2.0);
        for om in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.6, 0.0, 0.8), Vec3::new(0.0, -1.0, 0.0)] {
            let t = traction(&c, v, om).unwrap();
            assert!((t + v * 1.5).norm() < 1e-14);
        }
    }

    #[test]
    fn f32_instantiation() {
        let s = scaled_coefficients::<f32>(1e-3).unwrap();
        let d = scaled_coefficients::<f64>(1e-3).unwrap();
        assert!(((s.alpha1 as f64) - d.alpha1).abs() < 1e-4);
    }
}
