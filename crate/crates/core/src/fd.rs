//! Central finite differences of pointwise field evaluators.

use crate::linalg::{Mat3, Vec3};

/// `J_ij = ∂_i f_j` by second-order central differences.
pub fn jacobian<F: Fn(Vec3<f64>) -> Vec3<f64>>(f: &F, x: Vec3<f64>, h: f64) -> Mat3<f64> {
    let mut m = Mat3::zero();
    for i in 0..3 {
        let e = Vec3::unit(i) * h;
        let d = (f(x + e) - f(x - e)) / (2.0 * h);
        m.m[i] = d.to_array();
    }
    m
}

pub fn divergence<F: Fn(Vec3<f64>) -> Vec3<f64>>(f: &F, x: Vec3<f64>, h: f64) -> f64 {
    jacobian(f, x, h).trace()
}

pub fn gradient<F: Fn(Vec3<f64>) -> f64>(f: &F, x: Vec3<f64>, h: f64) -> Vec3<f64> {
    let mut g = Vec3::zero();
    for i in 0..3 {
        let e = Vec3::unit(i) * h;
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h);
    }
    g
}

/// Seven-point Laplacian of a vector field.
pub fn laplacian<F: Fn(Vec3<f64>) -> Vec3<f64>>(f: &F, x: Vec3<f64>, h: f64) -> Vec3<f64> {
    let c = f(x) * 6.0;
    let mut s = Vec3::zero();
    for i in 0..3 {
        let e = Vec3::unit(i) * h;
        s += f(x + e) + f(x - e);
    }
    (s - c) / (h * h)
}

pub fn laplacian_scalar<F: Fn(Vec3<f64>) -> f64>(f: &F, x: Vec3<f64>, h: f64) -> f64 {
    let mut s = -6.0 * f(x);
    for i in 0..3 {
        let e = Vec3::unit(i) * h;
        s += f(x + e) + f(x - e);
    }
    s / (h * h)
}

/// Observed order `log2(e(h)/e(h/2))` from a sequence of errors at halving steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_field_is_exact() {
        let f = |p: Vec3<f64>| Vec3::new(p.x * p.x, p.x * p.y, p.z * p.z * 3.0);
        let x = Vec3::new(0.3, -0.2, 0.7);
        let j = jacobian(&f, x, 1e-3);
        assert!((j.m[0][0] - 0.6).abs() < 1e-10);
        assert!((j.m[1][1] - 0.3).abs() < 1e-10);
        let l = laplacian(&f, x, 1e-2);
        assert!((l - Vec3::new(2.0, 0.0, 6.0)).norm() < 1e-8);
    }
}
