//! Quadrature rules: Gauss–Legendre, sphere rules, adaptive Gauss–Kronrod and
//! tensor rules over boxes.

use crate::linalg::Vec3;
use crate::num::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "Gauss-Legendre order must be positive");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    // Newton iterations are done in f64 and then converted; f32 users lose
    // nothing relevant.
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    x.into_iter().zip(w).map(|(x, w)| (mid + half * x, half * w)).collect()
}

/// A quadrature rule on the unit sphere: directions and weights summing to 4π.
#[derive(Clone, Debug)]
pub struct SphereRule<T> {
    pub points: Vec<Vec3<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> SphereRule<T> {
    /// Product rule: Gauss–Legendre in `cos θ`, uniform trapezoid in `φ`.
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        assert!(n_theta > 0 && n_phi > 0);
        let (ct, wt) = gauss_legendre::<T>(n_theta);
        let two_pi = T::PI() + T::PI();
        let dphi = two_pi / T::from_count(n_phi);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (T::one() - *c * *c).max(T::zero()).sqrt();
            for k in 0..n_phi {
                let phi = dphi * (T::from_count(k) + T::lit(0.5));
                points.push(Vec3::new(s * phi.cos(), s * phi.sin(), *c));
                weights.push(*w * dphi);
            }
        }
        SphereRule { points, weights }
    }

    /// Default product rule, 24 × 48.
    pub fn default_product() -> Self {
        Self::product(24, 48)
    }

    /// 26-point symmetric rule, exact for polynomials of degree ≤ 7.
    pub fn lebedev26() -> Self {
        let mut points = Vec::with_capacity(26);
        let mut weights = Vec::with_capacity(26);
        let four_pi = T::lit(4.0) * T::PI();
        for axis in 0..3 {
            for s in [-1.0, 1.0] {
                let mut p = Vec3::zero();
                p[axis] = T::lit(s);
                points.push(p);
                weights.push(four_pi * T::lit(1.0 / 21.0));
            }
        }
        let r2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for sa in [-1.0, 1.0] {
                for sb in [-1.0, 1.0] {
                    let mut p = Vec3::zero();
                    p[a] = T::lit(sa) * r2;
                    p[b] = T::lit(sb) * r2;
                    points.push(p);
                    weights.push(four_pi * T::lit(4.0 / 105.0));
                }
            }
        }
        let r3 = T::lit(1.0 / 3f64.sqrt());
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    points.push(Vec3::new(T::lit(sx), T::lit(sy), T::lit(sz)) * r3);
                    weights.push(four_pi * T::lit(9.0 / 280.0));
                }
            }
        }
        SphereRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `∮_{∂B(center, radius)} f dS` for a scalar integrand.
    pub fn integrate<F: Fn(Vec3<T>, Vec3<T>) -> T>(&self, center: Vec3<T>, radius: T, f: F) -> T {
        let mut s = T::zero();
        for (w, om) in self.weights.iter().zip(&self.points) {
            s = s + *w * f(center + *om * radius, *om);
        }
        s * radius * radius
    }

    /// Vector-valued surface integral; the integrand receives the point and outward normal.
    pub fn integrate_vec<F: Fn(Vec3<T>, Vec3<T>) -> Vec3<T>>(
        &self,
        center: Vec3<T>,
        radius: T,
        f: F,
    ) -> Vec3<T> {
        let mut s = Vec3::zero();
        for (w, om) in self.weights.iter().zip(&self.points) {
            s += f(center + *om * radius, *om) * *w;
        }
        s * (radius * radius)
    }

    /// Weighted mean over the sphere, `(1/4π) ∮ f dΩ`.
    pub fn mean_vec<F: Fn(Vec3<T>) -> Vec3<T>>(&self, f: F) -> Vec3<T> {
        let mut s = Vec3::zero();
        let mut wsum = T::zero();
        for (w, om) in self.weights.iter().zip(&self.points) {
            s += f(*om) * *w;
            wsum = wsum + *w;
        }
        s / wsum
    }
}

const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK15_WK[7] * fc;
    let mut g = GK15_WG[3] * fc;
    for i in 0..7 {
        let dx = h * GK15_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK15_WK[i] * s;
        if i % 2 == 1 {
            g += GK15_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration on `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the total
/// estimate is below `max(abs_tol, rel_tol·|I|)` or `max_intervals` is reached.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || parts.len() >= MAX_INTERVALS {
            return total;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (a0, b0, _, _) = parts.swap_remove(idx);
        let m = 0.5 * (a0 + b0);
        let (v1, e1) = gk15(&f, a0, m);
        let (v2, e2) = gk15(&f, m, b0);
        parts.push((a0, m, v1, e1));
        parts.push((m, b0, v2, e2));
    }
}

/// Radial shell integral `∫_{r0}^{r1} f(r) dr` of a piecewise smooth function,
/// with the interval split geometrically so that singular-looking terms like
/// `1/r⁵` near a small `r0` are resolved.
pub fn integrate_radial<F: Fn(f64) -> f64>(f: F, r0: f64, r1: f64, rel_tol: f64) -> f64 {
    assert!(r0 > 0.0 && r1 > r0);
    let ratio = r1 / r0;
    let pieces = (ratio.ln() / 2f64.ln()).ceil().max(1.0) as usize;
    let q = ratio.powf(1.0 / pieces as f64);
    let mut total = 0.0;
    let mut a = r0;
    for i in 0..pieces {
        let b = if i + 1 == pieces { r1 } else { a * q };
        total += integrate_adaptive(&f, a, b, rel_tol * 1e-2, 0.0);
        a = b;
    }
    total
}

/// Tensor-product Gauss–Legendre rule over an axis-aligned box split into
/// `cells³` sub-boxes with `order³` nodes each.
#[derive(Clone, Debug)]
pub struct BoxRule {
    pub points: Vec<Vec3<f64>>,
    pub weights: Vec<f64>,
}

impl BoxRule {
    pub fn new(corner: Vec3<f64>, sides: Vec3<f64>, cells: [usize; 3], order: usize) -> Self {
        let axes: Vec<Vec<(f64, f64)>> = (0..3)
            .map(|a| {
                let h = sides[a] / cells[a] as f64;
                (0..cells[a])
                    .flat_map(|c| {
                        let lo = corner[a] + h * c as f64;
                        gauss_legendre_on::<f64>(order, lo, lo + h)
                    })
                    .collect()
            })
            .collect();
        let mut points = Vec::with_capacity(axes[0].len() * axes[1].len() * axes[2].len());
        let mut weights = Vec::with_capacity(points.capacity());
        for &(z, wz) in &axes[2] {
            for &(y, wy) in &axes[1] {
                for &(x, wx) in &axes[0] {
                    points.push(Vec3::new(x, y, z));
                    weights.push(wx * wy * wz);
                }
            }
        }
        BoxRule { points, weights }
    }

    /// Rule over the ball `B(center, radius)`: Gauss–Legendre in `r` times a sphere rule.
    pub fn ball(center: Vec3<f64>, radius: f64, n_r: usize, sphere: &SphereRule<f64>) -> Self {
        let mut points = Vec::with_capacity(n_r * sphere.len());
        let mut weights = Vec::with_capacity(n_r * sphere.len());
        for (r, wr) in gauss_legendre_on::<f64>(n_r, 0.0, radius) {
            for (om, w) in sphere.points.iter().zip(&sphere.weights) {
                points.push(center + *om * r);
                weights.push(wr * w * r * r);
            }
        }
        BoxRule { points, weights }
    }

    /// Rule over the shell `r0 < |x − center| < r1`, with geometric radial panels.
    pub fn shell(
        center: Vec3<f64>,
        r0: f64,
        r1: f64,
        panels: usize,
        n_r: usize,
        sphere: &SphereRule<f64>,
    ) -> Self {
        let q = (r1 / r0).powf(1.0 / panels as f64);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut a = r0;
        for p in 0..panels {
            let b = if p + 1 == panels { r1 } else { a * q };
            for (r, wr) in gauss_legendre_on::<f64>(n_r, a, b) {
                for (om, w) in sphere.points.iter().zip(&sphere.weights) {
                    points.push(center + *om * r);
                    weights.push(wr * w * r * r);
                }
            }
            a = b;
        }
        BoxRule { points, weights }
    }

    pub fn integrate<F: Fn(Vec3<f64>) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    pub fn integrate_vec<F: Fn(Vec3<f64>) -> Vec3<f64>>(&self, f: F) -> Vec3<f64> {
        let mut s = Vec3::zero();
        for (p, w) in self.points.iter().zip(&self.weights) {
            s += f(*p) * *w;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre::<f64>(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k} q={q}");
            }
        }
    }

    #[test]
    fn sphere_rules_area_and_second_moments() {
        for rule in [SphereRule::<f64>::default_product(), SphereRule::lebedev26()] {
            let area = rule.integrate(Vec3::zero(), 2.0, |_, _| 1.0);
            assert!((area - 16.0 * std::f64::consts::PI).abs() < 1e-12);
            let m = rule.integrate(Vec3::zero(), 1.0, |_, n| n.x * n.x);
            assert!((m - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
            let m4 = rule.integrate(Vec3::zero(), 1.0, |_, n| n.x.powi(2) * n.y.powi(2) * n.z.powi(2));
            assert!((m4 - 4.0 * std::f64::consts::PI / 105.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lebedev_weights_normalized() {
        let r = SphereRule::<f64>::lebedev26();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        assert_eq!(r.len(), 26);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = integrate_radial(|r| r.powi(-5), 1e-2, 1.0, 1e-12);
        let exact = (1e8 - 1.0) / 4.0;
        assert!(((v - exact) / exact).abs() < 1e-12);
        let s = integrate_adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 0.0);
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn box_rule_volume() {
        let r = BoxRule::new(Vec3::new(-1.0, 0.0, 2.0), Vec3::new(2.0, 1.0, 0.5), [2, 3, 1], 3);
        let v = r.integrate(|_| 1.0);
        assert!((v - 1.0).abs() < 1e-13);
        let b = BoxRule::ball(Vec3::zero(), 0.5, 6, &SphereRule::product(6, 12));
        let vb = b.integrate(|_| 1.0);
        assert!((vb - 4.0 / 3.0 * std::f64::consts::PI * 0.125).abs() < 1e-13);
    }
}
