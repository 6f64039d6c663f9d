use serde::{Deserialize, Serialize};

use super::layout::GridLayout;
use crate::fields::VectorField;
use crate::Vector;

/// Velocity on padded face arrays and pressure on cell centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaggeredField {
    pub layout: GridLayout,
    pub u: [Vec<f64>; 3],
    pub p: Vec<f64>,
}

impl StaggeredField {
    pub fn zeros(layout: GridLayout) -> Self {
        StaggeredField {
            layout,
            u: [0, 1, 2].map(|c| vec![0.0; layout.comp_len(c)]),
            p: vec![0.0; layout.cells()],
        }
    }

    /// Samples `f` at every padded entry, walls included.
    pub fn sample(layout: GridLayout, f: &impl VectorField) -> Self {
        let mut s = Self::zeros(layout);
        for c in 0..3 {
            for (n, i) in layout.comp_indices(c).enumerate() {
                s.u[c][n] = f.eval(layout.comp_pos(c, i))[c];
            }
        }
        s
    }

    /// Overwrites the wall entries with samples of `f`.
    pub fn set_boundary(&mut self, f: &impl VectorField) {
        let l = self.layout;
        for c in 0..3 {
            for (n, i) in l.comp_indices(c).enumerate() {
                if !l.is_unknown(c, i) {
                    self.u[c][n] = f.eval(l.comp_pos(c, i))[c];
                }
            }
        }
    }

    /// Copy with the interior entries zeroed.
    pub fn boundary_part(&self) -> Self {
        let l = self.layout;
        let mut b = self.clone();
        for c in 0..3 {
            for (n, i) in l.comp_indices(c).enumerate() {
                if l.is_unknown(c, i) {
                    b.u[c][n] = 0.0;
                }
            }
        }
        b.p.iter_mut().for_each(|v| *v = 0.0);
        b
    }

    pub fn max_boundary_abs(&self) -> f64 {
        let l = self.layout;
        let mut m: f64 = 0.0;
        for c in 0..3 {
            for (n, i) in l.comp_indices(c).enumerate() {
                if !l.is_unknown(c, i) {
                    m = m.max(self.u[c][n].abs());
                }
            }
        }
        m
    }

    fn locate(&self, c: usize, a: usize, x: f64) -> (usize, f64) {
        let l = &self.layout;
        let t = ((x - l.domain.corner[a]) / l.h).clamp(0.0, l.n[a] as f64);
        let lo = if a == c {
            (t.floor() as usize).min(l.n[a] - 1)
        } else if t < 0.5 {
            0
        } else if t >= l.n[a] as f64 - 0.5 {
            l.n[a]
        } else {
            (t + 0.5).floor() as usize
        };
        let x0 = l.comp_coord(c, a, lo);
        let x1 = l.comp_coord(c, a, lo + 1);
        let xc = x.clamp(l.domain.corner[a], l.domain.corner[a] + l.domain.sides[a]);
        (lo, ((xc - x0) / (x1 - x0)).clamp(0.0, 1.0))
    }

    /// Trilinear interpolation of each component; points are clamped into the box.
    pub fn velocity_at(&self, x: Vector) -> Vector {
        let mut out = Vector::zero();
        for c in 0..3 {
            let (i, wx) = self.locate(c, 0, x.x);
            let (j, wy) = self.locate(c, 1, x.y);
            let (k, wz) = self.locate(c, 2, x.z);
            let mut s = 0.0;
            for (dk, fz) in [(0, 1.0 - wz), (1, wz)] {
                for (dj, fy) in [(0, 1.0 - wy), (1, wy)] {
                    for (di, fx) in [(0, 1.0 - wx), (1, wx)] {
                        let w = fx * fy * fz;
                        if w != 0.0 {
                            s += w * self.u[c][self.layout.comp_index(c, [i + di, j + dj, k + dk])];
                        }
                    }
                }
            }
            out[c] = s;
        }
        out
    }

    /// Average of the two faces of each component around cell `i`.
    pub fn cell_velocity(&self, i: [usize; 3]) -> Vector {
        let l = &self.layout;
        let mut v = Vector::zero();
        for c in 0..3 {
            let mut lo = [i[0] + 1, i[1] + 1, i[2] + 1];
            lo[c] = i[c];
            let mut hi = lo;
            hi[c] += 1;
            v[c] = 0.5 * (self.u[c][l.comp_index(c, lo)] + self.u[c][l.comp_index(c, hi)]);
        }
        v
    }

    pub fn divergence(&self) -> Vec<f64> {
        let l = &self.layout;
        let mut d = vec![0.0; l.cells()];
        for (n, i) in l.cell_indices().enumerate() {
            let mut s = 0.0;
            for c in 0..3 {
                let mut lo = [i[0] + 1, i[1] + 1, i[2] + 1];
                lo[c] = i[c];
                let mut hi = lo;
                hi[c] += 1;
                s += self.u[c][l.comp_index(c, hi)] - self.u[c][l.comp_index(c, lo)];
            }
            d[n] = s / l.h;
        }
        d
    }

    pub fn max_divergence(&self) -> f64 {
        self.divergence().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `∫|u|²`: trapezoid weights along each component's own axis.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_inner(self, None)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Discrete Dirichlet form `∫|∇u|²`, consistent with the solver's Laplacian.
    pub fn grad_norm_sq(&self) -> f64 {
        self.grad_inner(self, None)
    }

    /// `∫∇u:∇w` in the solver's discrete form. Each difference term is kept
    /// only where `mask` (if any) holds at the midpoint of its two entries.
    pub fn grad_inner(&self, other: &StaggeredField, mask: Option<&dyn Fn(Vector) -> bool>) -> f64 {
        let l = &self.layout;
        let keep = |c: usize, i: [usize; 3], j: [usize; 3]| match mask {
            None => true,
            Some(m) => m((l.comp_pos(c, i) + l.comp_pos(c, j)) * 0.5),
        };
        let mut s = 0.0;
        for c in 0..3 {
            let d = l.comp_dims(c);
            let (u, w) = (&self.u[c], &other.u[c]);
            for (n, i) in l.comp_indices(c).enumerate() {
                let interior_t = (0..3).all(|a| a == c || (i[a] >= 1 && i[a] <= l.n[a]));
                // along the component's own axis: differences between consecutive faces
                if interior_t && i[c] < l.n[c] {
                    let mut j = i;
                    j[c] += 1;
                    if keep(c, i, j) {
                        let m = l.comp_index(c, j);
                        s += (u[m] - u[n]) * (w[m] - w[n]);
                    }
                }
                for a in 0..3 {
                    if a == c || i[a] + 1 >= d[a] {
                        continue;
                    }
                    if !(0..3).all(|b| b == a || b == c || (i[b] >= 1 && i[b] <= l.n[b])) {
                        continue;
                    }
                    let mut j = i;
                    j[a] += 1;
                    if !keep(c, i, j) {
                        continue;
                    }
                    let m = l.comp_index(c, j);
                    let wall = i[a] == 0 || j[a] == l.n[a] + 1;
                    let mut wt = if wall { 2.0 } else { 1.0 };
                    if i[c] == 0 || i[c] == l.n[c] {
                        wt *= 0.5;
                    }
                    s += wt * (u[m] - u[n]) * (w[m] - w[n]);
                }
            }
        }
        s * l.h
    }

    /// `∫u·w` with the weights of [`StaggeredField::l2_norm_sq`], optionally masked.
    pub fn l2_inner(&self, other: &StaggeredField, mask: Option<&dyn Fn(Vector) -> bool>) -> f64 {
        let l = &self.layout;
        let mut s = 0.0;
        for c in 0..3 {
            for (n, i) in l.comp_indices(c).enumerate() {
                if (0..3).any(|a| a != c && (i[a] == 0 || i[a] == l.n[a] + 1)) {
                    continue;
                }
                if let Some(m) = mask {
                    if !m(l.comp_pos(c, i)) {
                        continue;
                    }
                }
                let w = if i[c] == 0 || i[c] == l.n[c] { 0.5 } else { 1.0 };
                s += w * self.u[c][n] * other.u[c][n];
            }
        }
        s * l.cell_volume()
    }

    /// `Σ_cells |u_cell|⁴ h³`.
    pub fn l4_norm_pow4(&self) -> f64 {
        let l = &self.layout;
        l.cell_indices().map(|i| self.cell_velocity(i).norm_sq().powi(2)).sum::<f64>() * l.cell_volume()
    }

    pub fn axpy(&mut self, a: f64, other: &StaggeredField) {
        for c in 0..3 {
            for (x, y) in self.u[c].iter_mut().zip(&other.u[c]) {
                *x += a * y;
            }
        }
        for (x, y) in self.p.iter_mut().zip(&other.p) {
            *x += a * y;
        }
    }

    pub fn difference(&self, other: &StaggeredField) -> StaggeredField {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        d
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|u| u.iter().all(|v| v.is_finite())) && self.p.iter().all(|v| v.is_finite())
    }
}

impl VectorField for StaggeredField {
    fn eval(&self, x: Vector) -> Vector {
        self.velocity_at(x)
    }
}
