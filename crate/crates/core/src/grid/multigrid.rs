//! Geometric multigrid for one velocity component of `−νΔ + σ` with
//! homogeneous wall values. A V-cycle with red-black Gauss–Seidel (reversed
//! colour order after the coarse correction) and `R = Pᵀ/8` is a symmetric
//! positive definite preconditioner.

use super::layout::GridLayout;
use super::ops::{apply_velocity, for_unknowns, strides, wall_weights};

type Map1d = Vec<(usize, usize, f64)>;

fn node_prolong(nc: usize) -> Map1d {
    let mut m = Vec::new();
    for i in 1..nc {
        m.push((2 * i, i, 1.0));
        m.push((2 * i - 1, i, 0.5));
        m.push((2 * i + 1, i, 0.5));
    }
    m
}

fn cell_prolong(nc: usize) -> Map1d {
    let nf = 2 * nc;
    let mut m = Vec::new();
    for i in 1..=nc {
        m.push((2 * i - 1, i, 0.75));
        m.push((2 * i, i, 0.75));
        if i >= 2 {
            m.push((2 * i - 2, i, 0.25));
        }
        if 2 * i < nf {
            m.push((2 * i + 1, i, 0.25));
        }
        if i == 1 {
            m.push((1, 1, -0.25));
        }
        if i == nc {
            m.push((nf, nc, -0.25));
        }
    }
    m
}

fn node_average(nc: usize) -> Map1d {
    let mut m = Vec::new();
    for i in 1..nc {
        m.push((i, 2 * i - 1, 0.25));
        m.push((i, 2 * i, 0.5));
        m.push((i, 2 * i + 1, 0.25));
    }
    m
}

fn cell_average(nc: usize) -> Map1d {
    let mut m = Vec::new();
    for i in 1..=nc {
        m.push((i, 2 * i - 1, 0.5));
        m.push((i, 2 * i, 0.5));
    }
    m
}

fn transpose_scaled(m: &Map1d, s: f64) -> Map1d {
    m.iter().map(|&(a, b, w)| (b, a, s * w)).collect()
}

/// Applies a 1D sparse map along `axis`.
fn pass(src: &[f64], ds: [usize; 3], axis: usize, len: usize, map: &Map1d) -> (Vec<f64>, [usize; 3]) {
    let mut dd = ds;
    dd[axis] = len;
    let mut dst = vec![0.0; dd[0] * dd[1] * dd[2]];
    let ss = strides(ds);
    let sd = strides(dd);
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let (a1, a2) = (others[0], others[1]);
    for i2 in 0..ds[a2] {
        for i1 in 0..ds[a1] {
            let bs = i1 * ss[a1] + i2 * ss[a2];
            let bd = i1 * sd[a1] + i2 * sd[a2];
            for &(to, from, w) in map {
                dst[bd + to * sd[axis]] += w * src[bs + from * ss[axis]];
            }
        }
    }
    (dst, dd)
}

struct Level {
    layout: GridLayout,
    sigma: Vec<f64>,
}

struct Transfer {
    prolong: [Map1d; 3],
    restrict: [Map1d; 3],
}

#[derive(Clone, Debug)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
    unknowns: Vec<usize>,
}

impl Cholesky {
    /// Factors the dense `n × n` row-major matrix `a`; `unknowns` maps local rows to global entries.
    pub(crate) fn factor(mut a: Vec<f64>, n: usize, unknowns: Vec<usize>) -> Self {
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            let d = d.max(f64::MIN_POSITIVE).sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
        }
        Cholesky { n, l: a, unknowns }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        self.add_solve(b, x);
    }

    /// `x += A⁻¹ b` on the mapped entries.
    pub(crate) fn add_solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.unknowns.iter().map(|&m| b[m]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for (i, &m) in self.unknowns.iter().enumerate() {
            x[m] += y[i];
        }
    }
}

/// Multigrid hierarchy for component `c`.
pub struct ComponentMultigrid {
    c: usize,
    nu: f64,
    levels: Vec<Level>,
    transfers: Vec<Transfer>,
    coarse: Option<Cholesky>,
    pub sweeps: usize,
}

const DENSE_LIMIT: usize = 2500;

impl ComponentMultigrid {
    pub fn new(layout: GridLayout, c: usize, nu: f64, sigma: Vec<f64>) -> Self {
        let mut levels = vec![Level { layout, sigma }];
        let mut transfers = Vec::new();
        while let Some(coarse) = levels.last().unwrap().layout.coarsen() {
            let fine = levels.last().unwrap();
            let nc = coarse.n;
            let avg: [Map1d; 3] = [0, 1, 2].map(|a| if a == c { node_average(nc[a]) } else { cell_average(nc[a]) });
            let mut s = fine.sigma.clone();
            let mut ds = fine.layout.comp_dims(c);
            let dc = coarse.comp_dims(c);
            for a in 0..3 {
                let (t, d) = pass(&s, ds, a, dc[a], &avg[a]);
                s = t;
                ds = d;
            }
            let prolong: [Map1d; 3] = [0, 1, 2].map(|a| if a == c { node_prolong(nc[a]) } else { cell_prolong(nc[a]) });
            let restrict = [0, 1, 2].map(|a| transpose_scaled(&prolong[a], 0.5));
            transfers.push(Transfer { prolong, restrict });
            levels.push(Level { layout: coarse, sigma: s });
        }
        let mut mg = ComponentMultigrid { c, nu, levels, transfers, coarse: None, sweeps: 2 };
        mg.coarse = mg.build_coarse();
        mg
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn build_coarse(&self) -> Option<Cholesky> {
        let lv = self.levels.last().unwrap();
        let l = &lv.layout;
        let mut unknowns = Vec::new();
        for_unknowns(l, self.c, |_, n| unknowns.push(n));
        let m = unknowns.len();
        if m > DENSE_LIMIT {
            return None;
        }
        let len = l.comp_len(self.c);
        let mut a = vec![0.0; m * m];
        let mut e = vec![0.0; len];
        let mut col = vec![0.0; len];
        for (j, &n) in unknowns.iter().enumerate() {
            e[n] = 1.0;
            apply_velocity(l, self.c, self.nu, &lv.sigma, &e, &mut col);
            e[n] = 0.0;
            for (i, &r) in unknowns.iter().enumerate() {
                a[i * m + j] = col[r];
            }
        }
        Some(Cholesky::factor(a, m, unknowns))
    }

    fn smooth(&self, lvl: usize, u: &mut [f64], b: &[f64], colours: [usize; 2]) {
        let lv = &self.levels[lvl];
        let l = &lv.layout;
        let c = self.c;
        let s = strides(l.comp_dims(c));
        let k = self.nu / (l.h * l.h);
        for colour in colours {
            for_unknowns(l, c, |i, n| {
                if (i[0] + i[1] + i[2]) % 2 != colour {
                    return;
                }
                let mut diag = 0.0;
                let mut off = 0.0;
                for a in 0..3 {
                    let (wl, wr) = wall_weights(l, c, a, i[a]);
                    diag += wl + wr;
                    off += wl * u[n - s[a]] + wr * u[n + s[a]];
                }
                u[n] = (b[n] + k * off) / (k * diag + lv.sigma[n]);
            });
        }
    }

    fn vcycle(&self, lvl: usize, u: &mut [f64], b: &[f64]) {
        let lv = &self.levels[lvl];
        if lvl + 1 == self.levels.len() {
            match &self.coarse {
                Some(ch) => ch.solve(b, u),
                None => {
                    for _ in 0..100 {
                        self.smooth(lvl, u, b, [0, 1]);
                        self.smooth(lvl, u, b, [1, 0]);
                    }
                }
            }
            return;
        }
        for _ in 0..self.sweeps {
            self.smooth(lvl, u, b, [0, 1]);
        }
        let l = &lv.layout;
        let mut au = vec![0.0; u.len()];
        apply_velocity(l, self.c, self.nu, &lv.sigma, u, &mut au);
        let mut r = vec![0.0; u.len()];
        for_unknowns(l, self.c, |_, n| r[n] = b[n] - au[n]);
        let coarse = &self.levels[lvl + 1].layout;
        let t = &self.transfers[lvl];
        let (mut rc, mut ds) = (r, l.comp_dims(self.c));
        let dc = coarse.comp_dims(self.c);
        for a in 0..3 {
            let (x, d) = pass(&rc, ds, a, dc[a], &t.restrict[a]);
            rc = x;
            ds = d;
        }
        let mut ec = vec![0.0; rc.len()];
        self.vcycle(lvl + 1, &mut ec, &rc);
        let df = l.comp_dims(self.c);
        let mut ds = dc;
        for a in 0..3 {
            let (x, d) = pass(&ec, ds, a, df[a], &t.prolong[a]);
            ec = x;
            ds = d;
        }
        for (x, e) in u.iter_mut().zip(&ec) {
            *x += e;
        }
        for _ in 0..self.sweeps {
            self.smooth(lvl, u, b, [1, 0]);
        }
    }

    /// One V-cycle from a zero initial guess.
    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.vcycle(0, &mut z, r);
        z
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let lv = &self.levels[0];
        apply_velocity(&lv.layout, self.c, self.nu, &lv.sigma, u, out);
    }

    /// Preconditioned CG; returns the iteration count and final relative residual.
    pub fn solve(&self, b: &[f64], x: &mut [f64], tol: f64, max_it: usize) -> (usize, f64) {
        let len = b.len();
        let mut ax = vec![0.0; len];
        self.apply(x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let l = self.levels[0].layout;
        let mut mask = vec![0.0; len];
        for_unknowns(&l, self.c, |_, n| mask[n] = 1.0);
        r.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
        let bn = b.iter().zip(&mask).map(|(v, m)| v * v * m).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; len];
        for it in 0..max_it {
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn <= tol * bn {
                return (it, rn / bn);
            }
            self.apply(&p, &mut ap);
            let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for n in 0..len {
                x[n] += alpha * p[n];
                r[n] -= alpha * ap[n];
            }
            z = self.precondition(&r);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for n in 0..len {
                p[n] = z[n] + beta * p[n];
            }
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        (max_it, rn / bn)
    }
}
