//! Stencils on the padded MAC arrays.

use super::field::StaggeredField;
use super::layout::GridLayout;

/// Unknown index range `lo..hi` of component `c` along `axis`.
#[inline]
pub(crate) fn unknown_range(l: &GridLayout, c: usize, axis: usize) -> (usize, usize) {
    if axis == c {
        (1, l.n[axis])
    } else {
        (1, l.n[axis] + 1)
    }
}

#[inline]
pub(crate) fn strides(d: [usize; 3]) -> [usize; 3] {
    [1, d[0], d[0] * d[1]]
}

/// Neighbour weights along `axis` at padded index `i`: 2 next to a tangential wall.
#[inline]
pub(crate) fn wall_weights(l: &GridLayout, c: usize, axis: usize, i: usize) -> (f64, f64) {
    if axis == c {
        (1.0, 1.0)
    } else {
        (if i == 1 { 2.0 } else { 1.0 }, if i == l.n[axis] { 2.0 } else { 1.0 })
    }
}

pub(crate) fn for_unknowns(l: &GridLayout, c: usize, mut f: impl FnMut([usize; 3], usize)) {
    let d = l.comp_dims(c);
    let (r0, r1, r2) = (unknown_range(l, c, 0), unknown_range(l, c, 1), unknown_range(l, c, 2));
    for k in r2.0..r2.1 {
        for j in r1.0..r1.1 {
            let base = d[0] * (j + d[1] * k);
            for i in r0.0..r0.1 {
                f([i, j, k], base + i);
            }
        }
    }
}

/// `out = (−ν Δ + σ) u` at unknowns, reading wall entries of `u` as data; zero elsewhere.
pub fn apply_velocity(l: &GridLayout, c: usize, nu: f64, sigma: &[f64], u: &[f64], out: &mut [f64]) {
    let s = strides(l.comp_dims(c));
    let k = nu / (l.h * l.h);
    out.iter_mut().for_each(|v| *v = 0.0);
    for_unknowns(l, c, |i, n| {
        let mut acc = 0.0;
        for a in 0..3 {
            let (wl, wr) = wall_weights(l, c, a, i[a]);
            acc += wl * (u[n] - u[n - s[a]]) + wr * (u[n] - u[n + s[a]]);
        }
        out[n] = k * acc + sigma[n] * u[n];
    });
}

/// `out += scale · ∂_c p` at unknowns of component `c`.
pub fn add_pressure_gradient(l: &GridLayout, c: usize, p: &[f64], scale: f64, out: &mut [f64]) {
    let inv_h = scale / l.h;
    for_unknowns(l, c, |i, n| {
        let mut cell = [i[0] - 1, i[1] - 1, i[2] - 1];
        cell[c] = i[c];
        let right = l.cell_index(cell);
        cell[c] = i[c] - 1;
        let left = l.cell_index(cell);
        out[n] += inv_h * (p[right] - p[left]);
    });
}

/// Cell divergence of padded component arrays.
pub fn divergence(l: &GridLayout, u: [&[f64]; 3], out: &mut [f64]) {
    let inv_h = 1.0 / l.h;
    let st = [0, 1, 2].map(|c| strides(l.comp_dims(c)));
    for (n, i) in l.cell_indices().enumerate() {
        let mut s = 0.0;
        for c in 0..3 {
            let mut lo = [i[0] + 1, i[1] + 1, i[2] + 1];
            lo[c] = i[c];
            let m = l.comp_index(c, lo);
            s += u[c][m + st[c][c]] - u[c][m];
        }
        out[n] = s * inv_h;
    }
}

/// `(u·∇)u` at the unknowns of every component, by central differences.
pub fn advection(f: &StaggeredField) -> [Vec<f64>; 3] {
    let l = &f.layout;
    let mut out = [0, 1, 2].map(|c| vec![0.0; l.comp_len(c)]);
    for c in 0..3 {
        let s = strides(l.comp_dims(c));
        let uc = &f.u[c];
        let oc = &mut out[c];
        for_unknowns(l, c, |i, n| {
            let mut acc = 0.0;
            for a in 0..3 {
                let (ua, du) = if a == c {
                    (uc[n], (uc[n + s[a]] - uc[n - s[a]]) / (2.0 * l.h))
                } else {
                    let mut m = i;
                    let mut sum = 0.0;
                    for fa in [i[a] - 1, i[a]] {
                        for mc in [i[c], i[c] + 1] {
                            m[a] = fa;
                            m[c] = mc;
                            sum += f.u[a][l.comp_index(a, m)];
                        }
                    }
                    let xm = l.comp_coord(c, a, i[a] - 1);
                    let xp = l.comp_coord(c, a, i[a] + 1);
                    (0.25 * sum, (uc[n + s[a]] - uc[n - s[a]]) / (xp - xm))
                };
                acc += ua * du;
            }
            oc[n] = acc;
        });
    }
    out
}
