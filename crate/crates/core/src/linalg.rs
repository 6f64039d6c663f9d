//! Small fixed-size vector and matrix types.
//!
//! Matrices follow the gradient convention `(∇u)_{ij} = ∂_i u_j`, so that
//! `Mat3::outer(a, b)` is `a ⊗ b` with entries `a_i b_j`.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::num::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de> + Copy"))]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Vec3 { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(a: T) -> Self {
        Vec3::new(a, a, a)
    }

    /// Unit basis vector `e_axis`.
    pub fn unit(axis: usize) -> Self {
        let mut v = Self::zero();
        v[axis] = T::one();
        v
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    /// Componentwise product.
    pub fn hadamard(self, o: Self) -> Self {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    /// `P_ω a = (ω·a) ω` for a unit vector `self = ω`.
    #[inline]
    pub fn project(self, a: Self) -> Self {
        self * self.dot(a)
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Mul<Vec3<f64>> for f64 {
    type Output = Vec3<f64>;
    #[inline]
    fn mul(self, v: Vec3<f64>) -> Vec3<f64> {
        v * self
    }
}

impl Mul<Vec3<f32>> for f32 {
    type Output = Vec3<f32>;
    #[inline]
    fn mul(self, v: Vec3<f32>) -> Vec3<f32> {
        v * self
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn zero() -> Self {
        Mat3 { m: [[T::zero(); 3]; 3] }
    }

    pub fn identity() -> Self {
        let mut a = Self::zero();
        for i in 0..3 {
            a.m[i][i] = T::one();
        }
        a
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Mat3 { m: [r0.to_array(), r1.to_array(), r2.to_array()] }
    }

    /// `a ⊗ b`, entries `a_i b_j`.
    pub fn outer(a: Vec3<T>, b: Vec3<T>) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = a[i] * b[j];
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3::from(self.m[i])
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    /// Frobenius product `A : B = Σ A_ij B_ij`.
    pub fn ddot(&self, o: &Self) -> T {
        let mut s = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                s = s + self.m[i][j] * o.m[i][j];
            }
        }
        s
    }

    pub fn frobenius_sq(&self) -> T {
        self.ddot(self)
    }

    /// `A v`, i.e. `(A v)_i = Σ_j A_ij v_j`.
    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    /// `vᵀ A`, i.e. `(vᵀA)_j = Σ_i v_i A_ij`; for a gradient this is the
    /// directional derivative `(v·∇)u`.
    pub fn left_mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.col(0).dot(v), self.col(1).dot(v), self.col(2).dot(v))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e = *e * s;
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        let mut a = T::zero();
        for row in &self.m {
            for e in row {
                a = a.max(e.abs());
            }
        }
        a
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = out.m[i][j] + o.m[i][j];
            }
        }
        out
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-T::one())
    }
}

impl<T: Real> Mul<T> for Mat3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Solves a dense linear system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot is exactly zero.
pub fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col] == T::zero() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let t = a[col][k];
                a[row][k] = a[row][k] - f * t;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s = s - a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_and_contractions() {
        let a = Vec3::new(1.0, 2.0, 3.0);
        let b = Vec3::new(-1.0, 0.5, 2.0);
        let m = Mat3::outer(a, b);
        assert_eq!(m.trace(), a.dot(b));
        assert_eq!(m.mul_vec(b), a * b.norm_sq());
        assert_eq!(m.left_mul_vec(a), b * a.norm_sq());
        assert_eq!(Mat3::<f64>::identity().ddot(&Mat3::identity()), 3.0);
    }

    #[test]
    fn dense_solve_small_system() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let x = solve_dense(a.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-14);
        }
        assert!(solve_dense(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn serde_vec3_as_array() {
        let v = Vec3::new(1.5, -2.0, 0.25);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[1.5,-2.0,0.25]");
        let back: Vec3<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
