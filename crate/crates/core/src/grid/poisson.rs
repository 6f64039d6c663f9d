//! Cell-centred Neumann Laplacian `L = D Dᵀ` on the box, inverted by DCT.

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use super::layout::GridLayout;

pub struct NeumannPoisson {
    layout: GridLayout,
    plans: [Arc<dyn TransformType2And3<f64>>; 3],
    eig: Vec<f64>,
}

impl NeumannPoisson {
    pub fn new(layout: GridLayout) -> Self {
        let mut planner = DctPlanner::new();
        let plans = [0, 1, 2].map(|a| planner.plan_dct2(layout.n[a]));
        let h2 = layout.h * layout.h;
        let lam = |a: usize, k: usize| 2.0 * (1.0 - (std::f64::consts::PI * k as f64 / layout.n[a] as f64).cos()) / h2;
        let eig = layout.cell_indices().map(|i| lam(0, i[0]) + lam(1, i[1]) + lam(2, i[2])).collect();
        NeumannPoisson { layout, plans, eig }
    }

    fn transform(&self, x: &mut [f64], forward: bool) {
        let n = self.layout.n;
        let st = [1, n[0], n[0] * n[1]];
        for a in 0..3 {
            let plan = &self.plans[a];
            let mut line = vec![0.0; n[a]];
            let mut scratch = vec![0.0; plan.get_scratch_len()];
            let others: Vec<usize> = (0..3).filter(|&b| b != a).collect();
            for i2 in 0..n[others[1]] {
                for i1 in 0..n[others[0]] {
                    let base = i1 * st[others[0]] + i2 * st[others[1]];
                    for (m, v) in line.iter_mut().enumerate() {
                        *v = x[base + m * st[a]];
                    }
                    if forward {
                        plan.process_dct2_with_scratch(&mut line, &mut scratch);
                    } else {
                        plan.process_dct3_with_scratch(&mut line, &mut scratch);
                    }
                    for (m, v) in line.iter().enumerate() {
                        x[base + m * st[a]] = *v;
                    }
                }
            }
        }
    }

    /// Mean-zero solution of `L φ = b`; the mean of `b` is ignored.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.transform(&mut x, true);
        let n = self.layout.n;
        let scale = 8.0 / (n[0] * n[1] * n[2]) as f64;
        x[0] = 0.0;
        for (v, e) in x.iter_mut().zip(&self.eig).skip(1) {
            *v *= scale / e;
        }
        self.transform(&mut x, false);
        x
    }

    /// `L φ` by the seven-point stencil with zero-flux walls.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let l = &self.layout;
        let h2 = l.h * l.h;
        let mut out = vec![0.0; phi.len()];
        let st = [1, l.n[0], l.n[0] * l.n[1]];
        for (m, i) in l.cell_indices().enumerate() {
            let mut s = 0.0;
            for a in 0..3 {
                if i[a] > 0 {
                    s += phi[m] - phi[m - st[a]];
                }
                if i[a] + 1 < l.n[a] {
                    s += phi[m] - phi[m + st[a]];
                }
            }
            out[m] = s / h2;
        }
        out
    }
}

pub(crate) fn remove_mean(x: &mut [f64]) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}
